//! Dense primal-dual interior-point solver for [`ConicProblem`].
//!
//! Infeasible-start path following over the cone product
//! (PSD block) × (nonnegative slack block), with Nesterov–Todd scaling and
//! a Mehrotra predictor-corrector step. The NT scaling point is computed
//! from the Cholesky factors of both cone blocks via a one-sided Jacobi
//! SVD, which keeps the scaled point diagonal and the corrector cheap.
//!
//! The Newton system is reduced to its dense Schur complement in the
//! constraint multipliers and factored by Cholesky; on factorization
//! failure the system is regularized with 1e-12·I, retried once at
//! 1e-9·I, and only then reported as a numerical failure.
//!
//! The dual objective of a dual-feasible iterate is a valid lower bound on
//! the conic optimum; that is the number the pipeline reports as `lb`.

use std::time::Instant;

use crate::linalg::{
    self, cholesky, dot, jacobi_svd, norm2, norm_inf, solve_lower, solve_lower_t,
    solve_lower_t_mat, sym_eigvals, Mat, SymMatrix,
};
use crate::sdp::ConicProblem;

/// Solver knobs. Tolerances must be positive and `max_iter` at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative duality gap target: (pobj − dobj) ≤ gap_tol · (1 + |pobj|).
    pub gap_tol: f64,
    /// Relative primal/dual residual target.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary damping in (0, 1).
    pub step_fraction: f64,
    /// Write one line per iteration to standard error.
    pub log_iterations: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 100,
            step_fraction: 0.98,
            log_iterations: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    PrimalInfeasibleSuspected,
    DualInfeasibleSuspected,
    NumericalFailure,
}

/// Per-iteration statistics, kept for the log and for invariant checks.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub iter: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub rel_gap: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Primal PSD block.
    pub m: SymMatrix,
    /// Primal nonnegative slack block.
    pub slacks: Vec<f64>,
    /// Constraint multipliers.
    pub dual_y: Vec<f64>,
    /// Dual PSD block.
    pub dual_s: SymMatrix,
    /// Dual slack block.
    pub dual_z: Vec<f64>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub rel_gap: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub wall_time: f64,
    pub trace: Vec<IterRecord>,
}

impl SdpSolution {
    /// Whether the dual iterate satisfies the feasibility tolerance, i.e.
    /// whether `dual_obj` can be trusted as a lower bound.
    pub fn dual_feasible(&self, cfg: &SolverConfig) -> bool {
        self.dual_res <= cfg.feas_tol
    }
}

/// Solve the conic problem. Never panics on solver trouble: failures come
/// back as an honest `status` together with the best iterate reached.
pub fn solve(prob: &ConicProblem, cfg: &SolverConfig) -> SdpSolution {
    let t_start = Instant::now();
    let p = prob.psd_dim;
    let s_dim = prob.slack_dim;
    let mdim = prob.num_constraints();
    let b = prob.rhs();
    let norm_b = norm2(&b);
    let norm_c = prob.c.frob_norm();
    let degree = (p + s_dim) as f64;

    // cold start: well-centered multiple of the identity
    let tau = 1.0 + norm_inf(&b).max(norm_c);
    let mut m_mat = SymMatrix::scaled_identity(p, tau);
    let mut w = vec![tau; s_dim];
    let mut y = vec![0.0; mdim];
    let mut s_mat = SymMatrix::scaled_identity(p, tau);
    let mut z = vec![tau; s_dim];

    let mut status = SolveStatus::MaxIter;
    let mut trace: Vec<IterRecord> = Vec::new();
    let mut iterations = 0usize;
    let (mut pobj, mut dobj) = (f64::NAN, f64::NAN);
    let (mut rel_gap, mut pres, mut dres) = (f64::NAN, f64::NAN, f64::NAN);
    let (mut step_p, mut step_d) = (0.0, 0.0);

    for iter in 0..=cfg.max_iter {
        // residuals of the current iterate
        let rp = prob.primal_residual(&m_mat, &w);
        let mut rd_mat = prob.c.clone();
        rd_mat.add_scaled(-1.0, &adjoint_psd(prob, &y));
        rd_mat.add_scaled(-1.0, &s_mat);
        let mut rd_lin = adjoint_lin(prob, &y);
        for (r, zk) in rd_lin.iter_mut().zip(&z) {
            *r = -*r - zk;
        }

        pobj = prob.objective(&m_mat);
        dobj = dot(&b, &y);
        let compl = m_mat.frob_inner(&s_mat) + dot(&w, &z);
        let mu = compl / degree;
        rel_gap = (pobj - dobj) / (1.0 + pobj.abs());
        pres = norm2(&rp) / (1.0 + norm_b);
        dres = (rd_mat.frob_norm().powi(2) + norm2(&rd_lin).powi(2)).sqrt() / (1.0 + norm_c);

        trace.push(IterRecord {
            iter,
            primal_obj: pobj,
            dual_obj: dobj,
            rel_gap,
            primal_res: pres,
            dual_res: dres,
            mu,
            step_primal: step_p,
            step_dual: step_d,
        });
        if cfg.log_iterations {
            eprintln!(
                "ipm iter {iter:3}  pobj {pobj:+.9e}  dobj {dobj:+.9e}  gap {rel_gap:.2e}  \
                 pres {pres:.2e}  dres {dres:.2e}  mu {mu:.2e}  step {step_p:.2}/{step_d:.2}"
            );
        }

        if !pobj.is_finite() || !dobj.is_finite() || !mu.is_finite() {
            status = SolveStatus::NumericalFailure;
            break;
        }
        if rel_gap <= cfg.gap_tol && pres <= cfg.feas_tol && dres <= cfg.feas_tol {
            status = SolveStatus::Optimal;
            break;
        }
        if let Some(flag) = suspect_infeasibility(&trace, cfg, norm_b, norm_c) {
            status = flag;
            break;
        }
        if iter == cfg.max_iter {
            status = SolveStatus::MaxIter;
            break;
        }

        // Nesterov–Todd scaling from both Cholesky factors
        let Ok(l_m) = cholesky_bumped(&m_mat) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let Ok(l_s) = cholesky_bumped(&s_mat) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let g = linalg::matmul_tn(&l_s, &l_m);
        let Ok(svd) = jacobi_svd(&g) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let lambda = svd.sigma; // scaled point, diagonal
        if lambda.iter().any(|&l| !(l > 0.0)) {
            status = SolveStatus::NumericalFailure;
            break;
        }
        // R = L_M V Σ^{-1/2};  R^{-1} = Σ^{1/2} Vᵀ L_M^{-1}
        let mut r_mat = linalg::matmul(&l_m, &svd.v);
        for k in 0..p {
            r_mat.scale_col(k, 1.0 / lambda[k].sqrt());
        }
        let mut rinv_t = svd.v.clone();
        for k in 0..p {
            rinv_t.scale_col(k, lambda[k].sqrt());
        }
        solve_lower_t_mat(&l_m, &mut rinv_t); // L_Mᵀ X = V Σ^{1/2}
        let r_inv = rinv_t.transpose();
        let r_t = r_mat.transpose();
        let w_nt = SymMatrix::from_mat_symmetrized(&linalg::matmul_nt(&r_mat, &r_mat));

        // linear-block scaling d² = w/z
        let d2: Vec<f64> = w.iter().zip(&z).map(|(wk, zk)| wk / zk).collect();

        // Schur complement H and its Cholesky (with the regularization ladder)
        let h = schur_matrix(prob, &w_nt, &d2);
        let Ok(l_h) = cholesky_regularized(&h) else {
            status = SolveStatus::NumericalFailure;
            break;
        };

        let wrdw = rd_mat.congruence(&w_nt.to_mat()); // W Rd W

        // predictor: affine direction targets zero complementarity
        let mut e_aff = m_mat.clone();
        e_aff.scale(-1.0);
        let e_lin_aff: Vec<f64> = w.iter().map(|wk| -wk).collect();
        let aff = solve_direction(
            prob, &l_h, &w_nt, &d2, &rp, &rd_mat, &rd_lin, &wrdw, &e_aff, &e_lin_aff,
        );

        let u_aff = aff.dm.congruence(&r_inv);
        let v_aff = aff.ds.congruence(&r_t);
        let (Ok(bp_aff), Ok(bd_aff)) = (
            step_to_boundary_psd(&lambda, &u_aff),
            step_to_boundary_psd(&lambda, &v_aff),
        ) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let alpha_p_aff = bp_aff.min(step_to_boundary_lin(&w, &aff.dw)).min(1.0);
        let alpha_d_aff = bd_aff.min(step_to_boundary_lin(&z, &aff.dz)).min(1.0);

        // Mehrotra centering weight
        let compl_aff =
            trial_complementarity(&m_mat, &s_mat, &w, &z, &aff, alpha_p_aff, alpha_d_aff);
        let mu_aff = compl_aff.max(0.0) / degree;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // corrector: combined direction with second-order term
        let uv = linalg::matmul(&u_aff.to_mat(), &v_aff.to_mat());
        let mut target = SymMatrix::from_fn_lower(p, |i, j| {
            let second = 0.5 * (uv.get(i, j) + uv.get(j, i));
            let first = if i == j {
                sigma * mu - lambda[i] * lambda[i]
            } else {
                0.0
            };
            first - second
        });
        // scale back through the Jordan product: T'_ij = 2 T_ij / (λ_i + λ_j)
        for i in 0..p {
            for j in 0..=i {
                let v = target.get(i, j) * 2.0 / (lambda[i] + lambda[j]);
                target.set(i, j, v);
            }
        }
        let e_comb = target.congruence(&r_mat);
        let e_lin_comb: Vec<f64> = (0..s_dim)
            .map(|k| (sigma * mu - w[k] * z[k] - aff.dw[k] * aff.dz[k]) / z[k])
            .collect();
        let comb = solve_direction(
            prob,
            &l_h,
            &w_nt,
            &d2,
            &rp,
            &rd_mat,
            &rd_lin,
            &wrdw,
            &e_comb,
            &e_lin_comb,
        );

        let u_comb = comb.dm.congruence(&r_inv);
        let v_comb = comb.ds.congruence(&r_t);
        let (Ok(bp), Ok(bd)) = (
            step_to_boundary_psd(&lambda, &u_comb),
            step_to_boundary_psd(&lambda, &v_comb),
        ) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let eta = cfg.step_fraction;
        let alpha_p = (eta * bp.min(step_to_boundary_lin(&w, &comb.dw))).min(1.0);
        let alpha_d = (eta * bd.min(step_to_boundary_lin(&z, &comb.dz))).min(1.0);

        m_mat.add_scaled(alpha_p, &comb.dm);
        linalg::axpy(alpha_p, &comb.dw, &mut w);
        linalg::axpy(alpha_d, &comb.dy, &mut y);
        s_mat.add_scaled(alpha_d, &comb.ds);
        linalg::axpy(alpha_d, &comb.dz, &mut z);

        step_p = alpha_p;
        step_d = alpha_d;
        iterations = iter + 1;
    }

    SdpSolution {
        m: m_mat,
        slacks: w,
        dual_y: y,
        dual_s: s_mat,
        dual_z: z,
        primal_obj: pobj,
        dual_obj: dobj,
        rel_gap,
        primal_res: pres,
        dual_res: dres,
        iterations,
        status,
        wall_time: t_start.elapsed().as_secs_f64(),
        trace,
    }
}

struct Direction {
    dy: Vec<f64>,
    dm: SymMatrix,
    dw: Vec<f64>,
    ds: SymMatrix,
    dz: Vec<f64>,
}

/// Solve one Newton system given the shared Schur factor. `e_psd` and
/// `e_lin` are the complementarity targets: ΔM + W ΔS W = e_psd and
/// Δw + d²∘Δz = e_lin.
#[allow(clippy::too_many_arguments)]
fn solve_direction(
    prob: &ConicProblem,
    l_h: &Mat,
    w_nt: &SymMatrix,
    d2: &[f64],
    rp: &[f64],
    rd_mat: &SymMatrix,
    rd_lin: &[f64],
    wrdw: &SymMatrix,
    e_psd: &SymMatrix,
    e_lin: &[f64],
) -> Direction {
    let mdim = prob.num_constraints();

    // e_moved = e_psd − W Rd W
    let mut e_moved = e_psd.clone();
    e_moved.add_scaled(-1.0, wrdw);
    let lin_moved: Vec<f64> = e_lin
        .iter()
        .zip(d2)
        .zip(rd_lin)
        .map(|((e, d), r)| e - d * r)
        .collect();

    let mut rhs = vec![0.0; mdim];
    for (i, con) in prob.constraints.iter().enumerate() {
        let lin: f64 = con.slack.iter().map(|&(k, v)| v * lin_moved[k]).sum();
        rhs[i] = rp[i] - con.psd.inner(&e_moved) - lin;
    }
    let mut dy = rhs;
    solve_lower(l_h, &mut dy);
    solve_lower_t(l_h, &mut dy);

    // ΔS = Rd − A*(Δy), Δz = rd_lin − A_lin*(Δy)
    let mut ds = rd_mat.clone();
    ds.add_scaled(-1.0, &adjoint_psd(prob, &dy));
    let alin_dy = adjoint_lin(prob, &dy);
    let dz: Vec<f64> = rd_lin.iter().zip(&alin_dy).map(|(r, a)| r - a).collect();

    // ΔM = e_psd − W ΔS W, Δw = e_lin − d²∘Δz
    let mut dm = e_psd.clone();
    dm.add_scaled(-1.0, &ds.congruence(&w_nt.to_mat()));
    let dw: Vec<f64> = e_lin
        .iter()
        .zip(d2)
        .zip(&dz)
        .map(|((e, d), dzk)| e - d * dzk)
        .collect();

    Direction { dy, dm, dw, ds, dz }
}

/// Σ y_i A_i over the PSD block.
fn adjoint_psd(prob: &ConicProblem, y: &[f64]) -> SymMatrix {
    let mut out = SymMatrix::zeros(prob.psd_dim);
    for (con, &yi) in prob.constraints.iter().zip(y) {
        if yi != 0.0 {
            con.psd.add_into(&mut out, yi);
        }
    }
    out
}

/// Σ y_i a_i over the slack block.
fn adjoint_lin(prob: &ConicProblem, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; prob.slack_dim];
    for (con, &yi) in prob.constraints.iter().zip(y) {
        if yi != 0.0 {
            for &(k, v) in &con.slack {
                out[k] += yi * v;
            }
        }
    }
    out
}

/// H_ij = ⟨A_i, W A_j W⟩ + Σ_k a_i[k] a_j[k] d²_k, assembled column by
/// column from outer products of W's rows.
fn schur_matrix(prob: &ConicProblem, w_nt: &SymMatrix, d2: &[f64]) -> SymMatrix {
    let mdim = prob.num_constraints();
    let p = prob.psd_dim;
    let mut h = SymMatrix::zeros(mdim);
    let mut t = vec![0.0; p * p];
    let mut lin_scaled = vec![0.0; prob.slack_dim.max(1)];
    for j in 0..mdim {
        let con_j = &prob.constraints[j];
        // t = W A_j W
        t.iter_mut().for_each(|v| *v = 0.0);
        for &(r, c, v) in &con_j.psd.entries {
            let wr = w_nt.row(r);
            let wc = w_nt.row(c);
            if r == c {
                for alpha in 0..p {
                    let row = &mut t[alpha * p..(alpha + 1) * p];
                    let va = v * wr[alpha];
                    for (beta, out) in row.iter_mut().enumerate() {
                        *out += va * wr[beta];
                    }
                }
            } else {
                for alpha in 0..p {
                    let row = &mut t[alpha * p..(alpha + 1) * p];
                    let wa = wr[alpha];
                    let wb = wc[alpha];
                    for (beta, out) in row.iter_mut().enumerate() {
                        *out += v * (wa * wc[beta] + wb * wr[beta]);
                    }
                }
            }
        }
        for &(k, v) in &con_j.slack {
            lin_scaled[k] = v * d2[k];
        }
        for i in j..mdim {
            let con_i = &prob.constraints[i];
            let mut hij = 0.0;
            for &(r, c, v) in &con_i.psd.entries {
                let tv = t[r * p + c];
                hij += if r == c { v * tv } else { 2.0 * v * tv };
            }
            for &(k, v) in &con_i.slack {
                hij += v * lin_scaled[k];
            }
            h.set(i, j, hij);
        }
        for &(k, _) in &con_j.slack {
            lin_scaled[k] = 0.0;
        }
    }
    h
}

/// Largest step α keeping Λ + αU inside the PSD cone (Λ diagonal positive).
fn step_to_boundary_psd(lambda: &[f64], u: &SymMatrix) -> Result<f64, linalg::LinalgError> {
    let p = lambda.len();
    let scaled = SymMatrix::from_fn_lower(p, |i, j| {
        u.get(i, j) / (lambda[i].sqrt() * lambda[j].sqrt())
    });
    let eigs = sym_eigvals(&scaled)?;
    let min = eigs[0];
    Ok(if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    })
}

/// Largest step α keeping w + αΔw nonnegative.
fn step_to_boundary_lin(w: &[f64], dw: &[f64]) -> f64 {
    w.iter()
        .zip(dw)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&wk, &d)| -wk / d)
        .fold(f64::INFINITY, f64::min)
}

fn trial_complementarity(
    m: &SymMatrix,
    s: &SymMatrix,
    w: &[f64],
    z: &[f64],
    dir: &Direction,
    ap: f64,
    ad: f64,
) -> f64 {
    let psd = m.frob_inner(s)
        + ap * dir.dm.frob_inner(s)
        + ad * m.frob_inner(&dir.ds)
        + ap * ad * dir.dm.frob_inner(&dir.ds);
    let mut lin = 0.0;
    for k in 0..w.len() {
        lin += (w[k] + ap * dir.dw[k]) * (z[k] + ad * dir.dz[k]);
    }
    psd + lin
}

/// Cholesky with one tiny diagonal bump retry, for cone blocks whose
/// strict interiority is threatened only by rounding.
fn cholesky_bumped(a: &SymMatrix) -> Result<Mat, linalg::LinalgError> {
    match cholesky(a) {
        Ok(l) => Ok(l),
        Err(_) => {
            let mut bumped = a.clone();
            let scale = 1.0 + a.diag().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            bumped.add_scaled_identity(1e-14 * scale);
            cholesky(&bumped)
        }
    }
}

/// Schur-system Cholesky with the static regularization ladder:
/// plain, +1e-12·I, +1e-9·I.
fn cholesky_regularized(h: &SymMatrix) -> Result<Mat, linalg::LinalgError> {
    if let Ok(l) = cholesky(h) {
        return Ok(l);
    }
    for reg in [1e-12, 1e-9] {
        let mut reg_h = h.clone();
        reg_h.add_scaled_identity(reg);
        if let Ok(l) = cholesky(&reg_h) {
            return Ok(l);
        }
    }
    Err(linalg::LinalgError::NotPositiveDefinite { pivot: 0 })
}

/// Heuristic infeasibility flags: a stalled residual paired with a
/// diverging objective over a 10-iteration window. Never a certificate.
fn suspect_infeasibility(
    trace: &[IterRecord],
    cfg: &SolverConfig,
    norm_b: f64,
    norm_c: f64,
) -> Option<SolveStatus> {
    let now = trace.last()?;
    if now.iter < 12 {
        return None;
    }
    let past = &trace[trace.len() - 11];
    let pres_stalled =
        now.primal_res > 1e2 * cfg.feas_tol && now.primal_res > 0.25 * past.primal_res;
    let dobj_diverging = now.dual_obj > past.dual_obj && now.dual_obj > 1e6 * (1.0 + norm_b);
    if pres_stalled && dobj_diverging {
        return Some(SolveStatus::PrimalInfeasibleSuspected);
    }
    let dres_stalled = now.dual_res > 1e2 * cfg.feas_tol && now.dual_res > 0.25 * past.dual_res;
    let pobj_diverging = now.primal_obj < past.primal_obj && now.primal_obj < -1e6 * (1.0 + norm_c);
    if dres_stalled && pobj_diverging {
        return Some(SolveStatus::DualInfeasibleSuspected);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, GenSpec, Instance};
    use crate::sdp::{build_sdp, Constraint, SparseSym};

    fn identity_instance(n: usize, aleph: usize, rho: f64) -> Instance {
        let q: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Instance::new(aleph, rho, vec![1.0; n], vec![1.0; n], &q).unwrap()
    }

    /// min ⟨I, M⟩ s.t. M[0][0] = 1, M ⪰ 0 (dim 2): optimum 1 at M = e₀e₀ᵀ.
    #[test]
    fn trivial_sdp_analytic_optimum() {
        let mut corner = SparseSym::new(2);
        corner.push(0, 0, 1.0);
        let prob = ConicProblem {
            psd_dim: 2,
            slack_dim: 0,
            c: SymMatrix::identity(2),
            constraints: vec![Constraint {
                psd: corner,
                slack: vec![],
                rhs: 1.0,
            }],
        };
        let sol = solve(&prob, &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(
            (sol.primal_obj - 1.0).abs() < 1e-7,
            "pobj = {}",
            sol.primal_obj
        );
        assert!((sol.m.get(0, 0) - 1.0).abs() < 1e-6);
        assert!(sol.m.get(1, 1).abs() < 1e-6);
        assert!(sol.m.get(1, 0).abs() < 1e-6);
    }

    /// Full-cardinality identity instance: the relaxation collapses to the
    /// continuous QP, whose optimum is the equal split at ρ/n per asset,
    /// i.e. n·(ρ/n)² = 1/12 for ρ = 1/2, n = 3.
    #[test]
    fn lifted_identity_matches_equal_split() {
        let inst = identity_instance(3, 3, 0.5);
        let prob = build_sdp(&inst);
        let sol = solve(&prob, &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(
            (sol.primal_obj - 1.0 / 12.0).abs() < 1e-6,
            "pobj = {} vs 1/12",
            sol.primal_obj
        );
        assert!((sol.dual_obj - 1.0 / 12.0).abs() < 1e-6);
        assert!(sol.iterations <= 100);
    }

    #[test]
    fn weak_duality_along_the_path() {
        let inst = generate_instance(&GenSpec::new(8, 11)).unwrap();
        let prob = build_sdp(&inst);
        let sol = solve(&prob, &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        for rec in &sol.trace {
            assert!(
                rec.dual_obj <= rec.primal_obj + 1e-7 * (1.0 + rec.primal_obj.abs()),
                "iter {}: dobj {} > pobj {}",
                rec.iter,
                rec.dual_obj,
                rec.primal_obj
            );
        }
    }

    #[test]
    fn covariance_scaling_scales_bounds() {
        let inst = generate_instance(&GenSpec::new(6, 3)).unwrap();
        let prob = build_sdp(&inst);
        let sol = solve(&prob, &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Optimal);

        let c = 7.5;
        let scaled_rows: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..6).map(|j| c * inst.covariance().get(i, j)).collect())
            .collect();
        let scaled = Instance::new(
            inst.aleph(),
            inst.rho(),
            inst.mu().to_vec(),
            inst.upper_bounds().to_vec(),
            &scaled_rows,
        )
        .unwrap();
        let sol_scaled = solve(&build_sdp(&scaled), &SolverConfig::default());
        assert_eq!(sol_scaled.status, SolveStatus::Optimal);
        assert!(
            (sol_scaled.primal_obj - c * sol.primal_obj).abs()
                <= 1e-6 * (1.0 + (c * sol.primal_obj).abs()),
            "{} vs {}",
            sol_scaled.primal_obj,
            c * sol.primal_obj
        );
        assert!(
            (sol_scaled.dual_obj - c * sol.dual_obj).abs()
                <= 1e-6 * (1.0 + (c * sol.dual_obj).abs())
        );
    }

    #[test]
    fn lower_bound_monotone_in_cardinality() {
        let inst = generate_instance(&GenSpec::new(6, 19)).unwrap();
        let mut prev = f64::INFINITY;
        for aleph in 1..=6 {
            let sol = solve(
                &build_sdp(&inst.with_aleph(aleph).unwrap()),
                &SolverConfig::default(),
            );
            assert_eq!(sol.status, SolveStatus::Optimal, "aleph {aleph}");
            assert!(
                sol.dual_obj <= prev + 1e-7,
                "aleph {aleph}: lb {} above previous {}",
                sol.dual_obj,
                prev
            );
            prev = sol.dual_obj;
        }
    }

    #[test]
    fn solution_blocks_stay_psd() {
        let inst = generate_instance(&GenSpec::new(5, 23)).unwrap();
        let sol = solve(&build_sdp(&inst), &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        let m_eigs = sym_eigvals(&sol.m).unwrap();
        let s_eigs = sym_eigvals(&sol.dual_s).unwrap();
        let m_max = m_eigs.last().unwrap().max(0.0);
        let s_max = s_eigs.last().unwrap().max(0.0);
        assert!(m_eigs[0] >= -1e-9 * (1.0 + m_max));
        assert!(s_eigs[0] >= -1e-9 * (1.0 + s_max));
        assert!(sol.slacks.iter().all(|&v| v >= 0.0));
        assert!(sol.dual_z.iter().all(|&v| v >= 0.0));
    }
}
