//! The semidefinite relaxation of the cardinality-constrained portfolio
//! problem, expressed as a standard-form conic program.
//!
//! The lifted variable is the symmetric block matrix
//!
//! ```text
//!       [ 1   xᵀ   yᵀ ]
//!   M = [ x   X    Zᵀ ]        (dimension 2n+1)
//!       [ y   Z    Y  ]
//! ```
//!
//! where x are the portfolio weights, y the complementary selection
//! indicators, X and Y the lifted quadratic blocks and Z the coupling
//! block (Z sits in the y-rows/x-columns position, so `diag(Z)_i = M[n+i, i]`
//! carries the complementarity products x_i y_i). Inequalities are absorbed
//! into one nonnegative diagonal slack block so the interior-point solver
//! sees a single PSD × nonnegative-orthant cone product.

use std::io::Write;

use thiserror::Error;

use crate::instance::Instance;
use crate::linalg::{sym_eig, LinalgError, SymMatrix};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SdpError {
    #[error("corner entry M[0][0] = {found} is not 1 within 1e-6")]
    CornerNotUnit { found: f64 },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A symmetric coefficient matrix stored as its lower-triangle nonzeros.
/// An entry `(r, c, v)` with `r >= c` means A[r][c] = A[c][r] = v, so the
/// trace inner product picks up off-diagonal entries twice.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    pub dim: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new(dim: usize) -> Self {
        SparseSym {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.dim && c < self.dim);
        let (r, c) = if r >= c { (r, c) } else { (c, r) };
        self.entries.push((r, c, v));
    }

    /// ⟨A, M⟩
    pub fn inner(&self, m: &SymMatrix) -> f64 {
        debug_assert_eq!(self.dim, m.dim());
        self.entries
            .iter()
            .map(|&(r, c, v)| {
                if r == c {
                    v * m.get(r, c)
                } else {
                    2.0 * v * m.get(r, c)
                }
            })
            .sum()
    }

    /// target += scale · A
    pub fn add_into(&self, target: &mut SymMatrix, scale: f64) {
        debug_assert_eq!(self.dim, target.dim());
        for &(r, c, v) in &self.entries {
            target.add_to(r, c, scale * v);
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// One equality constraint ⟨A, M⟩ + aᵀw = rhs, where M is the PSD block and
/// w the nonnegative slack block.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub psd: SparseSym,
    /// Sparse coefficients over the slack block.
    pub slack: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Standard-form conic problem: minimize ⟨C, M⟩ over M ⪰ 0, w ≥ 0 subject
/// to the equality constraints. The slack block carries no objective.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub psd_dim: usize,
    pub slack_dim: usize,
    pub c: SymMatrix,
    pub constraints: Vec<Constraint>,
}

impl ConicProblem {
    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.rhs).collect()
    }

    pub fn objective(&self, m: &SymMatrix) -> f64 {
        self.c.frob_inner(m)
    }

    /// b_i − ⟨A_i, M⟩ − a_iᵀw for every constraint.
    pub fn primal_residual(&self, m: &SymMatrix, w: &[f64]) -> Vec<f64> {
        debug_assert_eq!(w.len(), self.slack_dim);
        self.constraints
            .iter()
            .map(|c| {
                let lin: f64 = c.slack.iter().map(|&(k, v)| v * w[k]).sum();
                c.rhs - c.psd.inner(m) - lin
            })
            .collect()
    }
}

/// Build the relaxation for an instance. Constraint ordering (documented
/// because the SDPA export preserves it):
///
/// 1. corner `M[0][0] = 1`
/// 2. `diag(Z) = 0`, one per asset
/// 3. `diag(Y) = y`, one per asset
/// 4. return floor `μᵀx − s = ρ`
/// 5. budget `eᵀx + s = 1`
/// 6. cardinality `eᵀy − s = n − ℵ`
/// 7. upper bounds `x_i + s = u_i`, one per asset
/// 8. lower bounds `x_i − s = 0`, one per asset
///
/// Slack order: return, budget, cardinality, upper bounds, lower bounds
/// (2n+3 in total). The constraint count is 4n+4.
///
/// No `y ≤ 1` rows are added: `diag(Y) = y` together with the 2×2 corner
/// minor already forces `y_i ∈ [0, 1]` on the feasible set.
pub fn build_sdp(inst: &Instance) -> ConicProblem {
    let n = inst.n();
    let p = 2 * n + 1;
    let slack_dim = 2 * n + 3;
    let mut constraints = Vec::with_capacity(4 * n + 4);

    // corner
    let mut corner = SparseSym::new(p);
    corner.push(0, 0, 1.0);
    constraints.push(Constraint {
        psd: corner,
        slack: vec![],
        rhs: 1.0,
    });

    // diag(Z) = 0: M[n+1+i][1+i] = 0
    for i in 0..n {
        let mut a = SparseSym::new(p);
        a.push(n + 1 + i, 1 + i, 0.5);
        constraints.push(Constraint {
            psd: a,
            slack: vec![],
            rhs: 0.0,
        });
    }

    // diag(Y) = y: M[n+1+i][n+1+i] - M[0][n+1+i] = 0
    for i in 0..n {
        let mut a = SparseSym::new(p);
        a.push(n + 1 + i, n + 1 + i, 1.0);
        a.push(n + 1 + i, 0, -0.5);
        constraints.push(Constraint {
            psd: a,
            slack: vec![],
            rhs: 0.0,
        });
    }

    // return floor: μᵀx - s_ret = ρ
    let mut ret = SparseSym::new(p);
    for i in 0..n {
        ret.push(1 + i, 0, 0.5 * inst.mu()[i]);
    }
    constraints.push(Constraint {
        psd: ret,
        slack: vec![(0, -1.0)],
        rhs: inst.rho(),
    });

    // budget: eᵀx + s_budget = 1
    let mut budget = SparseSym::new(p);
    for i in 0..n {
        budget.push(1 + i, 0, 0.5);
    }
    constraints.push(Constraint {
        psd: budget,
        slack: vec![(1, 1.0)],
        rhs: 1.0,
    });

    // cardinality: eᵀy - s_card = n - aleph
    let mut card = SparseSym::new(p);
    for i in 0..n {
        card.push(n + 1 + i, 0, 0.5);
    }
    constraints.push(Constraint {
        psd: card,
        slack: vec![(2, -1.0)],
        rhs: (n - inst.aleph()) as f64,
    });

    // x_i <= u_i
    for i in 0..n {
        let mut a = SparseSym::new(p);
        a.push(1 + i, 0, 0.5);
        constraints.push(Constraint {
            psd: a,
            slack: vec![(3 + i, 1.0)],
            rhs: inst.upper_bounds()[i],
        });
    }

    // x_i >= 0
    for i in 0..n {
        let mut a = SparseSym::new(p);
        a.push(1 + i, 0, 0.5);
        constraints.push(Constraint {
            psd: a,
            slack: vec![(3 + n + i, -1.0)],
            rhs: 0.0,
        });
    }

    // objective embeds Q on the X block; the Y and Z blocks never enter
    let mut c = SymMatrix::zeros(p);
    for i in 0..n {
        for j in 0..=i {
            c.set(1 + i, 1 + j, inst.covariance().get(i, j));
        }
    }

    ConicProblem {
        psd_dim: p,
        slack_dim,
        c,
        constraints,
    }
}

/// Relative eigenvalue threshold for the numerical rank, one order above
/// the solver's default gap tolerance.
pub const RANK_REL_TOL: f64 = 1e-6;

/// The (x, y, X, Y, Z) decomposition of a lifted block matrix together
/// with its spectrum and numerical rank.
#[derive(Debug, Clone)]
pub struct LiftedPoint {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub xx: SymMatrix,
    pub yy: SymMatrix,
    /// Coupling block, `z[(i, j)] = M[n+1+i][1+j]`.
    pub z: crate::linalg::Mat,
    /// Full spectrum of the (2n+1)-dimensional matrix, ascending.
    pub eigenvalues: Vec<f64>,
    /// Count of eigenvalues above `RANK_REL_TOL · λ_max`.
    pub numerical_rank: usize,
}

impl LiftedPoint {
    /// Objective contribution ⟨Q, X⟩ of the lifted quadratic block.
    pub fn objective(&self, q: &SymMatrix) -> f64 {
        q.frob_inner(&self.xx)
    }

    /// Largest |diag(Z)| entry, the residual of the complementarity rows.
    pub fn max_complementarity_residual(&self) -> f64 {
        (0..self.n)
            .map(|i| self.z.get(i, i).abs())
            .fold(0.0, f64::max)
    }
}

/// Cut the blocks out of a lifted matrix and attach rank diagnostics.
pub fn split_lifted(m: &SymMatrix, n: usize) -> Result<LiftedPoint, SdpError> {
    let p = 2 * n + 1;
    if m.dim() != p {
        return Err(SdpError::DimensionMismatch {
            expected: p,
            found: m.dim(),
        });
    }
    let corner = m.get(0, 0);
    if (corner - 1.0).abs() > 1e-6 {
        return Err(SdpError::CornerNotUnit { found: corner });
    }
    let x: Vec<f64> = (0..n).map(|i| m.get(1 + i, 0)).collect();
    let y: Vec<f64> = (0..n).map(|i| m.get(n + 1 + i, 0)).collect();
    let xx = SymMatrix::from_fn_lower(n, |i, j| m.get(1 + i, 1 + j));
    let yy = SymMatrix::from_fn_lower(n, |i, j| m.get(n + 1 + i, n + 1 + j));
    let z = crate::linalg::Mat::from_fn(n, n, |i, j| m.get(n + 1 + i, 1 + j));

    let (eigenvalues, _) = sym_eig(m)?;
    let lambda_max = *eigenvalues.last().expect("nonempty spectrum");
    let numerical_rank = if lambda_max <= 0.0 {
        0
    } else {
        eigenvalues
            .iter()
            .filter(|&&l| l > RANK_REL_TOL * lambda_max)
            .count()
    };

    Ok(LiftedPoint {
        n,
        x,
        y,
        xx,
        yy,
        z,
        eigenvalues,
        numerical_rank,
    })
}

/// Assemble the lifted matrix for given blocks with the canonical coupling
/// Z = (x y ᵀ-pattern) that zeroes the Schur complement's off-diagonal:
/// `M[1+i][n+1+j] = x_i y_j`. The result is PSD exactly when both
/// X − xxᵀ and Y − yyᵀ are PSD.
pub fn schur_embed(
    x: &[f64],
    y: &[f64],
    xx: &SymMatrix,
    yy: &SymMatrix,
) -> Result<SymMatrix, SdpError> {
    let n = x.len();
    if y.len() != n {
        return Err(SdpError::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if xx.dim() != n {
        return Err(SdpError::DimensionMismatch {
            expected: n,
            found: xx.dim(),
        });
    }
    if yy.dim() != n {
        return Err(SdpError::DimensionMismatch {
            expected: n,
            found: yy.dim(),
        });
    }
    let p = 2 * n + 1;
    let mut m = SymMatrix::zeros(p);
    m.set(0, 0, 1.0);
    for i in 0..n {
        m.set(1 + i, 0, x[i]);
        m.set(n + 1 + i, 0, y[i]);
        for j in 0..=i {
            m.set(1 + i, 1 + j, xx.get(i, j));
            m.set(n + 1 + i, n + 1 + j, yy.get(i, j));
        }
        for j in 0..n {
            m.set(1 + i, n + 1 + j, x[i] * y[j]);
        }
    }
    Ok(m)
}

/// Write the problem in the sparse SDPA format (".dat-s"), two blocks: the
/// PSD block first, then the diagonal slack block (negative size marks it
/// diagonal). SDPA's file-level problem is
///
/// ```text
/// min bᵀv  s.t.  Σ v_i A_i − F0 ⪰ 0,
/// ```
///
/// whose dual is `max ⟨F0, M⟩ s.t. ⟨A_i, M⟩ = b_i, M ⪰ 0`. With `F0 = −C`
/// that dual is the negative of this problem, so a third-party solver's
/// reported optimum equals `−opt` of this `ConicProblem`. Constraints are
/// written in build order; entries are upper-triangle, 1-based.
pub fn write_sdpa(prob: &ConicProblem, out: &mut impl Write) -> std::io::Result<()> {
    let m = prob.num_constraints();
    writeln!(
        out,
        "\"cardsdp conic export: psd block then diagonal slack block\""
    )?;
    writeln!(out, "{m} = mDIM")?;
    writeln!(out, "2 = nBLOCK")?;
    writeln!(
        out,
        "{} -{} = bLOCKsTRUCT",
        prob.psd_dim,
        prob.slack_dim.max(1)
    )?;
    let rhs: Vec<String> = prob
        .constraints
        .iter()
        .map(|c| format_coeff(c.rhs))
        .collect();
    writeln!(out, "{}", rhs.join(" "))?;

    // F0 = -C (objective); slack block of F0 is zero
    for i in 0..prob.psd_dim {
        for j in i..prob.psd_dim {
            let v = prob.c.get(i, j);
            if v != 0.0 {
                writeln!(out, "0 1 {} {} {}", i + 1, j + 1, format_coeff(-v))?;
            }
        }
    }
    for (idx, con) in prob.constraints.iter().enumerate() {
        let matno = idx + 1;
        let mut entries: Vec<(usize, usize, f64)> = con
            .psd
            .entries
            .iter()
            .map(|&(r, c, v)| (c.min(r), c.max(r), v))
            .collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        for (r, c, v) in entries {
            writeln!(out, "{matno} 1 {} {} {}", r + 1, c + 1, format_coeff(v))?;
        }
        let mut slack = con.slack.clone();
        slack.sort_by_key(|&(k, _)| k);
        for (k, v) in slack {
            writeln!(out, "{matno} 2 {} {} {}", k + 1, k + 1, format_coeff(v))?;
        }
    }
    Ok(())
}

fn format_coeff(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{:.1}", v)
    } else {
        format!("{:.16e}", v)
    }
}
