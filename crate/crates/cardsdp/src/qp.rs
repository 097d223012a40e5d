//! Convex QP solver for reduced problems: minimum risk over a fixed
//! support under the return floor, budget cap and box bounds.
//!
//! The QP rides on the same interior-point core as the full relaxation:
//! with Q|_S = L Lᵀ, the epigraph variable t bounds ‖Lᵀx‖² through the
//! (k+1)-dimensional PSD block [[t, (Lᵀx)ᵀ], [Lᵀx, I]], while x itself
//! lives in the nonnegative slack block. The factor L comes from an
//! eigendecomposition with clamped-to-zero eigenvalues, so positive
//! semidefinite (rank-deficient) support blocks need no special casing.
//!
//! Feasibility of a support is decided exactly by a greedy pre-pass
//! (maximize μᵀx over the box and budget by filling assets in descending
//! μ order) before the solver ever runs.

use thiserror::Error;

use crate::instance::Instance;
use crate::ipm::{self, SolveStatus, SolverConfig};
use crate::linalg::{sym_eig, Mat, SymMatrix};
use crate::sdp::{ConicProblem, Constraint, SparseSym};

/// Tolerances for the embedded conic solve; one order tighter than the
/// 1e-8 feasibility promised on the returned portfolio.
fn qp_solver_config() -> SolverConfig {
    SolverConfig {
        gap_tol: 1e-9,
        feas_tol: 1e-9,
        ..SolverConfig::default()
    }
}

#[derive(Error, Debug)]
pub enum QpError {
    #[error("conic solve failed with status {status:?} (gap {rel_gap:e}, support {support:?})")]
    NumericalFailure {
        status: SolveStatus,
        rel_gap: f64,
        support: Vec<usize>,
    },
}

/// A reduced problem: minimize xᵀQx with x vanishing off `support`.
#[derive(Debug, Clone)]
pub struct QpProblem<'a> {
    inst: &'a Instance,
    support: Vec<usize>,
}

impl<'a> QpProblem<'a> {
    /// Duplicates are collapsed and the support is kept sorted.
    pub fn new(inst: &'a Instance, support: impl IntoIterator<Item = usize>) -> Self {
        let mut support: Vec<usize> = support.into_iter().collect();
        support.sort_unstable();
        support.dedup();
        debug_assert!(support.iter().all(|&i| i < inst.n()));
        QpProblem { inst, support }
    }

    pub fn full_support(inst: &'a Instance) -> Self {
        QpProblem {
            inst,
            support: (0..inst.n()).collect(),
        }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn forced_zero(&self) -> Vec<usize> {
        let mut mark = vec![true; self.inst.n()];
        for &i in &self.support {
            mark[i] = false;
        }
        (0..self.inst.n()).filter(|&i| mark[i]).collect()
    }

    pub fn instance(&self) -> &Instance {
        self.inst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
}

/// Why a support admits no feasible portfolio: even the return-greedy
/// allocation tops out below the floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfeasibilityCertificate {
    pub max_attainable_return: f64,
    pub required_return: f64,
}

#[derive(Debug, Clone)]
pub struct QpResult {
    /// Full-length solution; exact zeros off the support.
    pub x: Vec<f64>,
    /// xᵀQx recomputed directly from the instance data.
    pub objective: f64,
    pub status: QpStatus,
    /// Max of constraint violations, epigraph slack |t − xᵀQx| and the
    /// conic residuals. Meaningful only for `Optimal`.
    pub kkt_residual: f64,
    pub certificate: Option<InfeasibilityCertificate>,
}

/// Exact greedy maximum of μᵀx over { 0 ≤ x ≤ u|_S, eᵀx ≤ 1 }: fill assets
/// in descending-μ order while their return is positive.
pub fn max_return_on_support(inst: &Instance, support: &[usize]) -> f64 {
    let mut order: Vec<usize> = support.to_vec();
    order.sort_by(|&a, &b| inst.mu()[b].total_cmp(&inst.mu()[a]).then(a.cmp(&b)));
    let mut budget = 1.0_f64;
    let mut ret = 0.0;
    for &i in &order {
        if inst.mu()[i] <= 0.0 || budget <= 0.0 {
            break;
        }
        let take = inst.upper_bounds()[i].min(budget);
        ret += inst.mu()[i] * take;
        budget -= take;
    }
    ret
}

/// Globally solve the reduced convex QP, or prove it infeasible.
pub fn solve_qp(p: &QpProblem) -> Result<QpResult, QpError> {
    let inst = p.inst;
    let n = inst.n();

    // assets capped at zero can never leave zero
    let active: Vec<usize> = p
        .support
        .iter()
        .copied()
        .filter(|&i| inst.upper_bounds()[i] > 0.0)
        .collect();

    let best_return = max_return_on_support(inst, &active);
    if best_return < inst.rho() {
        return Ok(QpResult {
            x: vec![0.0; n],
            objective: f64::INFINITY,
            status: QpStatus::Infeasible,
            kkt_residual: f64::NAN,
            certificate: Some(InfeasibilityCertificate {
                max_attainable_return: best_return,
                required_return: inst.rho(),
            }),
        });
    }
    if active.is_empty() {
        // rho <= 0 here, so the zero portfolio is optimal
        return Ok(QpResult {
            x: vec![0.0; n],
            objective: 0.0,
            status: QpStatus::Optimal,
            kkt_residual: 0.0,
            certificate: None,
        });
    }

    let prob = build_qp_conic(inst, &active);
    let cfg = qp_solver_config();
    let sol = ipm::solve(&prob, &cfg);
    if sol.status != SolveStatus::Optimal {
        return Err(QpError::NumericalFailure {
            status: sol.status,
            rel_gap: sol.rel_gap,
            support: active,
        });
    }

    let mut x = vec![0.0; n];
    for (pos, &i) in active.iter().enumerate() {
        x[i] = sol.slacks[pos];
    }
    let objective = inst.risk(&x);
    let t = sol.m.get(0, 0);

    let mut viol = (inst.rho() - inst.expected_return(&x)).max(0.0);
    viol = viol.max(x.iter().sum::<f64>() - 1.0);
    for &i in &active {
        viol = viol.max(-x[i]).max(x[i] - inst.upper_bounds()[i]);
    }
    let kkt_residual = viol
        .max((t - objective).abs())
        .max(sol.rel_gap.max(0.0))
        .max(sol.primal_res)
        .max(sol.dual_res);

    Ok(QpResult {
        x,
        objective,
        status: QpStatus::Optimal,
        kkt_residual,
        certificate: None,
    })
}

/// Epigraph embedding of the reduced QP over the active support. PSD block
/// of size k+1, slack block [x (k), return, budget, upper bounds (k)].
fn build_qp_conic(inst: &Instance, active: &[usize]) -> ConicProblem {
    let k = active.len();
    let p = k + 1;
    let slack_dim = 2 * k + 2;

    // PSD factor of the support block of Q, tolerant of rank deficiency
    let q_s = SymMatrix::from_fn_lower(k, |a, b| inst.covariance().get(active[a], active[b]));
    let (evals, evecs) = sym_eig(&q_s).expect("support covariance eigendecomposition");
    let mut l = Mat::zeros(k, k);
    for j in 0..k {
        let s = evals[j].max(0.0).sqrt();
        for i in 0..k {
            l.set(i, j, evecs.get(i, j) * s);
        }
    }

    let mut constraints = Vec::with_capacity(k * (k + 1) / 2 + 2 * k + 2);

    // lower-right identity block
    for a in 0..k {
        for b in 0..=a {
            let mut m = SparseSym::new(p);
            let rhs = if a == b {
                m.push(1 + a, 1 + a, 1.0);
                1.0
            } else {
                m.push(1 + a, 1 + b, 0.5);
                0.0
            };
            constraints.push(Constraint {
                psd: m,
                slack: vec![],
                rhs,
            });
        }
    }
    // top-row link: M[0][1+j] = (Lᵀx)_j
    for j in 0..k {
        let mut m = SparseSym::new(p);
        m.push(1 + j, 0, 0.5);
        let slack: Vec<(usize, f64)> = (0..k)
            .filter(|&i| l.get(i, j) != 0.0)
            .map(|i| (i, -l.get(i, j)))
            .collect();
        constraints.push(Constraint {
            psd: m,
            slack,
            rhs: 0.0,
        });
    }
    // return floor: μᵀx − s = ρ
    let mut slack: Vec<(usize, f64)> = active
        .iter()
        .enumerate()
        .map(|(pos, &i)| (pos, inst.mu()[i]))
        .collect();
    slack.push((k, -1.0));
    constraints.push(Constraint {
        psd: SparseSym::new(p),
        slack,
        rhs: inst.rho(),
    });
    // budget: eᵀx + s = 1
    let mut slack: Vec<(usize, f64)> = (0..k).map(|pos| (pos, 1.0)).collect();
    slack.push((k + 1, 1.0));
    constraints.push(Constraint {
        psd: SparseSym::new(p),
        slack,
        rhs: 1.0,
    });
    // upper bounds: x + s = u
    for (pos, &i) in active.iter().enumerate() {
        constraints.push(Constraint {
            psd: SparseSym::new(p),
            slack: vec![(pos, 1.0), (k + 2 + pos, 1.0)],
            rhs: inst.upper_bounds()[i],
        });
    }

    // objective: minimize the epigraph corner t
    let mut c = SymMatrix::zeros(p);
    c.set(0, 0, 1.0);

    ConicProblem {
        psd_dim: p,
        slack_dim,
        c,
        constraints,
    }
}
