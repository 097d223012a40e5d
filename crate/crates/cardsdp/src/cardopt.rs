//! End-to-end pipeline: build the relaxation, solve it, read the rank,
//! round the lifted point to a feasible portfolio, and report lb/ub/gap.

use std::time::Instant;

use serde::Serialize;

use crate::instance::Instance;
use crate::ipm::{self, SdpSolution, SolveStatus, SolverConfig};
use crate::qp::{solve_qp, QpProblem, QpStatus};
use crate::sdp::{build_sdp, split_lifted, LiftedPoint};

/// Near-zero guard in the gap formula: below this, an upper bound is
/// treated as zero (possible only when the return floor is nonpositive).
const GAP_UB_FLOOR: f64 = 1e-12;

/// A feasible point of the cardinality-constrained problem.
#[derive(Debug, Clone, Serialize)]
pub struct Portfolio {
    pub x: Vec<f64>,
    /// Indices carrying the investment; everything else is exactly zero.
    pub support: Vec<usize>,
    /// xᵀQx.
    pub objective: f64,
    pub feas: FeasResiduals,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FeasResiduals {
    /// max(0, ρ − μᵀx)
    pub return_shortfall: f64,
    /// max(0, eᵀx − 1)
    pub budget_excess: f64,
    /// max over i of max(0, −x_i)
    pub lower_violation: f64,
    /// max over i of max(0, x_i − u_i)
    pub upper_violation: f64,
}

impl FeasResiduals {
    pub fn max(&self) -> f64 {
        self.return_shortfall
            .max(self.budget_excess)
            .max(self.lower_violation)
            .max(self.upper_violation)
    }
}

impl Portfolio {
    pub fn from_x(inst: &Instance, x: Vec<f64>) -> Portfolio {
        let support: Vec<usize> = (0..inst.n()).filter(|&i| x[i] != 0.0).collect();
        let objective = inst.risk(&x);
        let mut lower = 0.0_f64;
        let mut upper = 0.0_f64;
        for i in 0..inst.n() {
            lower = lower.max(-x[i]);
            upper = upper.max(x[i] - inst.upper_bounds()[i]);
        }
        let feas = FeasResiduals {
            return_shortfall: (inst.rho() - inst.expected_return(&x)).max(0.0),
            budget_excess: (x.iter().sum::<f64>() - 1.0).max(0.0),
            lower_violation: lower,
            upper_violation: upper,
        };
        Portfolio {
            x,
            support,
            objective,
            feas,
        }
    }

    pub fn cardinality(&self) -> usize {
        self.support.len()
    }
}

/// Outcome of the lower-bound stage.
#[derive(Debug, Clone)]
pub struct LowerBound {
    /// Dual objective: a valid lower bound whenever `safe` holds.
    pub lb: f64,
    /// Whether the dual iterate met the feasibility tolerance.
    pub safe: bool,
    /// Block decomposition of the primal solution; absent when the solve
    /// collapsed before pinning the corner entry.
    pub lifted: Option<LiftedPoint>,
    pub stats: SdpSolution,
}

/// Solve the relaxation and report the dual bound plus the decomposed
/// primal matrix. Solver trouble arrives as an honest status inside
/// `stats`, never as a panic.
pub fn lower_bound(inst: &Instance, cfg: &SolverConfig) -> LowerBound {
    let prob = build_sdp(inst);
    let stats = ipm::solve(&prob, cfg);
    let lifted = split_lifted(&stats.m, inst.n()).ok();
    let safe = matches!(stats.status, SolveStatus::Optimal | SolveStatus::MaxIter)
        && stats.dual_feasible(cfg);
    LowerBound {
        lb: stats.dual_obj,
        safe,
        lifted,
        stats,
    }
}

/// Top-ℵ indices by descending key; ties broken toward the lowest
/// original index.
pub fn select_support(key: &[f64], aleph: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..key.len()).collect();
    idx.sort_by(|&a, &b| key[b].total_cmp(&key[a]).then(a.cmp(&b)));
    idx.truncate(aleph.min(key.len()));
    idx.sort_unstable();
    idx
}

/// Round a lifted point to a feasible portfolio. Candidate supports, in
/// order: the ℵ largest x_i, the ℵ largest x_i·μ_i, and the ℵ largest μ_i
/// (the greedy return-first repair). The first support whose reduced QP is
/// feasible wins; its re-optimized solution is the portfolio.
pub fn round_solution(inst: &Instance, lifted: &LiftedPoint) -> Option<Portfolio> {
    let mu = inst.mu();
    let by_weight = select_support(&lifted.x, inst.aleph());
    let by_weighted_return: Vec<f64> = (0..inst.n()).map(|i| lifted.x[i] * mu[i]).collect();
    let mut candidates = vec![
        by_weight,
        select_support(&by_weighted_return, inst.aleph()),
        select_support(mu, inst.aleph()),
    ];
    candidates.dedup();

    for support in candidates {
        match solve_qp(&QpProblem::new(inst, support)) {
            Ok(res) if res.status == QpStatus::Optimal => {
                return Some(Portfolio::from_x(inst, res.x));
            }
            Ok(_) | Err(_) => continue,
        }
    }
    None
}

/// Relative gap (ub − lb)/ub. For near-zero upper bounds the gap is zero
/// when the bounds agree and undefined (`None`) otherwise.
pub fn relative_gap(ub: f64, lb: f64) -> Option<f64> {
    if ub > GAP_UB_FLOOR {
        Some((ub - lb) / ub)
    } else if (ub - lb).abs() <= GAP_UB_FLOOR {
        Some(0.0)
    } else {
        None
    }
}

/// One full run over an instance, CSV-ready.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// Dual bound from the relaxation.
    pub lb_sdp: f64,
    /// Whether the dual bound is backed by a feasible dual iterate.
    pub lb_safe: bool,
    /// Objective of the rounded portfolio, when one was found.
    pub ub: Option<f64>,
    /// (ub − lb)/ub per the gap convention above.
    pub gap: Option<f64>,
    /// Numerical rank of the lifted solution matrix.
    pub rank: Option<usize>,
    pub sdp_status: SolveStatus,
    pub sdp_iterations: usize,
    pub sdp_time: f64,
    pub round_time: f64,
    pub portfolio: Option<Portfolio>,
}

/// Pipeline: lower bound, rank, rounding, gap. Stage failures are embedded
/// as status flags; the function never panics on solver failure.
pub fn run(inst: &Instance, cfg: &SolverConfig) -> RunReport {
    let bound = lower_bound(inst, cfg);
    let sdp_time = bound.stats.wall_time;

    let t_round = Instant::now();
    let portfolio = match bound.stats.status {
        SolveStatus::Optimal | SolveStatus::MaxIter => {
            bound.lifted.as_ref().and_then(|l| round_solution(inst, l))
        }
        _ => None,
    };
    let round_time = t_round.elapsed().as_secs_f64();

    let ub = portfolio.as_ref().map(|p| p.objective);
    let gap = ub.and_then(|u| relative_gap(u, bound.lb));

    RunReport {
        lb_sdp: bound.lb,
        lb_safe: bound.safe,
        ub,
        gap,
        rank: bound.lifted.as_ref().map(|l| l.numerical_rank),
        sdp_status: bound.stats.status,
        sdp_iterations: bound.stats.iterations,
        sdp_time,
        round_time,
        portfolio,
    }
}
