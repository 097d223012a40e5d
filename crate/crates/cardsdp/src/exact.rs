//! Ground-truth solvers for the mixed-integer problem: exhaustive support
//! enumeration for small sizes and a best-bound branch-and-bound with a
//! time limit.
//!
//! Branching follows the support decision "asset in / asset out". A node
//! carries the set of assets forced to zero and the set committed to the
//! portfolio; its relaxation is the reduced QP over the not-forced-zero
//! assets with the cardinality constraint dropped, which is a valid lower
//! bound for everything below the node. Nodes close exactly once at most
//! ℵ assets remain free or the relaxation itself satisfies the cap.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use thiserror::Error;

use crate::cardopt::{self, Portfolio};
use crate::instance::Instance;
use crate::ipm::SolverConfig;
use crate::qp::{solve_qp, QpError, QpProblem, QpStatus};

/// Guard for the enumeration oracle.
const MAX_COMBINATIONS: f64 = 1e6;
/// Relative pruning threshold: a node survives only if its bound can
/// improve the incumbent by more than this.
const PRUNE_REL: f64 = 1e-9;
/// Weights this small count as zero when reading a relaxation's support.
const SUPPORT_TOL: f64 = 1e-9;

#[derive(Error, Debug)]
pub enum ExactError {
    #[error("support enumeration too large: {combinations:.3e} combinations exceed {MAX_COMBINATIONS:e}")]
    TooLarge { combinations: f64 },
    #[error(transparent)]
    Qp(#[from] QpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ExactStatus {
    Proven,
    TimeLimit,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct ExactResult {
    pub best: Option<Portfolio>,
    /// Best feasible objective; +∞ when nothing feasible was found.
    pub ub: f64,
    /// Global lower bound from the remaining tree.
    pub lb: f64,
    /// (ub − lb)/ub under the shared gap convention; 0 when undefined.
    pub gap: f64,
    pub nodes: u64,
    pub status: ExactStatus,
    pub wall_time: f64,
}

fn binomial_approx(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0_f64, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Every support of size ℵ, via lexicographic index vectors. Supports of
/// smaller size never need checking: enlarging a support only helps, so
/// the minimum over |S| ≤ ℵ is attained at |S| = ℵ.
pub fn enumerate_supports(inst: &Instance) -> Result<ExactResult, ExactError> {
    let t0 = Instant::now();
    let n = inst.n();
    let aleph = inst.aleph();
    let combinations = binomial_approx(n, aleph);
    if combinations > MAX_COMBINATIONS {
        return Err(ExactError::TooLarge { combinations });
    }

    let mut best: Option<Portfolio> = None;
    let mut ub = f64::INFINITY;
    let mut nodes = 0u64;

    let mut idx: Vec<usize> = (0..aleph).collect();
    loop {
        nodes += 1;
        let res = solve_qp(&QpProblem::new(inst, idx.iter().copied()))?;
        if res.status == QpStatus::Optimal && res.objective < ub {
            ub = res.objective;
            best = Some(Portfolio::from_x(inst, res.x));
        }
        if aleph == 0 || !next_combination(&mut idx, n) {
            break;
        }
    }

    let status = if best.is_some() {
        ExactStatus::Proven
    } else {
        ExactStatus::Infeasible
    };
    let lb = ub;
    Ok(ExactResult {
        best,
        ub,
        lb,
        gap: 0.0,
        nodes,
        status,
        wall_time: t0.elapsed().as_secs_f64(),
    })
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in (i + 1)..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

struct Node {
    forced_zero: Vec<bool>,
    selected: Vec<bool>,
    n_forced: usize,
    n_selected: usize,
    bound: f64,
    relax_x: Vec<f64>,
}

struct HeapEntry {
    bound: f64,
    seq: u64,
    node: Node,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // BinaryHeap is a max-heap; invert so the smallest bound pops first,
    // then the oldest node for determinism.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Branch-and-bound with the rounding heuristic seeding the incumbent.
/// Pass `f64::INFINITY` for no time limit. The time limit yields a
/// `TimeLimit` status, never an error.
pub fn branch_and_bound(inst: &Instance, time_limit: f64) -> ExactResult {
    let seed = cardopt::lower_bound(inst, &SolverConfig::default())
        .lifted
        .as_ref()
        .and_then(|l| cardopt::round_solution(inst, l));
    branch_and_bound_seeded(inst, time_limit, seed)
}

/// Branch-and-bound with a caller-provided incumbent (or none). Useful
/// when the pipeline has already rounded the relaxation.
pub fn branch_and_bound_seeded(
    inst: &Instance,
    time_limit: f64,
    seed: Option<Portfolio>,
) -> ExactResult {
    let t0 = Instant::now();
    let n = inst.n();
    let aleph = inst.aleph();

    let mut incumbent: Option<Portfolio> = None;
    let mut ub = f64::INFINITY;
    if let Some(p) = seed {
        if p.cardinality() <= aleph && p.feas.max() <= 1e-8 {
            ub = p.objective;
            incumbent = Some(p);
        }
    }

    let mut nodes = 0u64;
    let mut qp_failed = false;
    let mut pruned_by_bound = false;
    let mut seq = 0u64;
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let mut lb_on_exit = f64::INFINITY;
    let mut timed_out = false;

    // root relaxation over the full support
    match solve_qp(&QpProblem::full_support(inst)) {
        Ok(res) if res.status == QpStatus::Optimal => {
            heap.push(HeapEntry {
                bound: res.objective,
                seq,
                node: Node {
                    forced_zero: vec![false; n],
                    selected: vec![false; n],
                    n_forced: 0,
                    n_selected: 0,
                    bound: res.objective,
                    relax_x: res.x,
                },
            });
            seq += 1;
        }
        Ok(_) => {} // infeasible root: the whole problem is infeasible
        Err(_) => qp_failed = true,
    }

    while let Some(entry) = heap.pop() {
        let node = entry.node;
        if t0.elapsed().as_secs_f64() > time_limit {
            lb_on_exit = node.bound.min(ub);
            timed_out = true;
            break;
        }
        if ub.is_finite() && node.bound >= ub * (1.0 - PRUNE_REL) {
            // best-bound order: every remaining node is at least as bad
            pruned_by_bound = true;
            break;
        }
        nodes += 1;

        let free_count = n - node.n_forced;
        if free_count <= aleph {
            // the stored relaxation is exact here: cardinality is implied
            let candidate = Portfolio::from_x(inst, node.relax_x);
            if candidate.objective < ub {
                ub = candidate.objective;
                incumbent = Some(candidate);
            }
            continue;
        }
        if node.n_selected >= aleph {
            // committed assets exhaust the cap: everything else is zero
            let support: Vec<usize> = (0..n).filter(|&i| node.selected[i]).collect();
            match solve_qp(&QpProblem::new(inst, support)) {
                Ok(res) if res.status == QpStatus::Optimal && res.objective < ub => {
                    ub = res.objective;
                    incumbent = Some(Portfolio::from_x(inst, res.x));
                }
                Ok(_) => {}
                Err(_) => qp_failed = true,
            }
            continue;
        }

        // does the relaxation already satisfy the cap?
        let support: Vec<usize> = (0..n)
            .filter(|&i| node.relax_x[i].abs() > SUPPORT_TOL)
            .collect();
        if support.len() <= aleph {
            match solve_qp(&QpProblem::new(inst, support)) {
                Ok(res) if res.status == QpStatus::Optimal => {
                    if res.objective < ub {
                        ub = res.objective;
                        incumbent = Some(Portfolio::from_x(inst, res.x));
                    }
                    // close the node only if the truncated optimum really
                    // attains the node bound
                    if res.objective <= node.bound + 1e-9 * (1.0 + node.bound.abs()) {
                        continue;
                    }
                }
                Ok(_) => {}
                Err(_) => qp_failed = true,
            }
        }

        // branch on the undecided asset with the largest relaxed weight
        let mut branch_idx = None;
        let mut branch_val = SUPPORT_TOL;
        for i in 0..n {
            if !node.forced_zero[i] && !node.selected[i] && node.relax_x[i] > branch_val {
                branch_val = node.relax_x[i];
                branch_idx = Some(i);
            }
        }
        let Some(pick) = branch_idx else {
            // all mass sits on committed assets; the reduced solve above
            // already mined this node
            continue;
        };

        // child keeping the asset: same relaxation, one more commitment
        let mut selected = node.selected.clone();
        selected[pick] = true;
        heap.push(HeapEntry {
            bound: node.bound,
            seq,
            node: Node {
                forced_zero: node.forced_zero.clone(),
                selected,
                n_forced: node.n_forced,
                n_selected: node.n_selected + 1,
                bound: node.bound,
                relax_x: node.relax_x.clone(),
            },
        });
        seq += 1;

        // child dropping the asset: fresh relaxation
        let mut forced = node.forced_zero;
        forced[pick] = true;
        let support: Vec<usize> = (0..n).filter(|&i| !forced[i]).collect();
        match solve_qp(&QpProblem::new(inst, support)) {
            Ok(res) if res.status == QpStatus::Optimal => {
                let bound = res.objective.max(node.bound);
                if !(ub.is_finite() && bound >= ub * (1.0 - PRUNE_REL)) {
                    heap.push(HeapEntry {
                        bound,
                        seq,
                        node: Node {
                            forced_zero: forced,
                            selected: node.selected,
                            n_forced: node.n_forced + 1,
                            n_selected: node.n_selected,
                            bound,
                            relax_x: res.x,
                        },
                    });
                    seq += 1;
                } else {
                    pruned_by_bound = true;
                }
            }
            Ok(_) => {} // infeasible child: prune
            Err(_) => qp_failed = true,
        }
    }

    let wall_time = t0.elapsed().as_secs_f64();
    if timed_out {
        let lb = lb_on_exit;
        let gap = if incumbent.is_some() {
            cardopt::relative_gap(ub, lb).unwrap_or(0.0)
        } else {
            0.0
        };
        return ExactResult {
            best: incumbent,
            ub,
            lb,
            gap,
            nodes,
            status: ExactStatus::TimeLimit,
            wall_time,
        };
    }

    match incumbent {
        Some(best) => {
            // exhausted (or cut off at the pruning threshold): optimal up
            // to the relative pruning slack
            let lb = if pruned_by_bound {
                ub * (1.0 - PRUNE_REL)
            } else {
                ub
            };
            let status = if qp_failed {
                ExactStatus::TimeLimit
            } else {
                ExactStatus::Proven
            };
            let gap = cardopt::relative_gap(ub, lb).unwrap_or(0.0);
            ExactResult {
                best: Some(best),
                ub,
                lb,
                gap,
                nodes,
                status,
                wall_time,
            }
        }
        None => {
            let status = if qp_failed {
                ExactStatus::TimeLimit
            } else {
                ExactStatus::Infeasible
            };
            ExactResult {
                best: None,
                ub: f64::INFINITY,
                lb: f64::INFINITY,
                gap: 0.0,
                nodes,
                status,
                wall_time,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, GenSpec, Instance};

    fn identity_instance(n: usize, aleph: usize, rho: f64) -> Instance {
        let q: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Instance::new(aleph, rho, vec![1.0; n], vec![1.0; n], &q).unwrap()
    }

    #[test]
    fn enumeration_identity_cardinality_one() {
        // three 1-d QPs, all equal by symmetry: x = 0.5 on one asset
        let inst = identity_instance(3, 1, 0.5);
        let res = enumerate_supports(&inst).unwrap();
        assert_eq!(res.status, ExactStatus::Proven);
        assert!((res.ub - 0.25).abs() < 1e-6, "ub = {}", res.ub);
        assert_eq!(res.best.as_ref().unwrap().cardinality(), 1);
        assert_eq!(res.nodes, 3);
    }

    #[test]
    fn enumeration_identity_full_cardinality() {
        let inst = identity_instance(3, 3, 0.5);
        let res = enumerate_supports(&inst).unwrap();
        assert_eq!(res.status, ExactStatus::Proven);
        assert!((res.ub - 1.0 / 12.0).abs() < 1e-6, "ub = {}", res.ub);
    }

    #[test]
    fn enumeration_zero_cardinality_infeasible() {
        let inst = identity_instance(3, 0, 0.5);
        let res = enumerate_supports(&inst).unwrap();
        assert_eq!(res.status, ExactStatus::Infeasible);
        assert!(res.ub.is_infinite());
        assert!(res.best.is_none());
    }

    #[test]
    fn enumeration_guard_rejects_huge_spaces() {
        let inst = generate_instance(&GenSpec {
            n: 60,
            seed: 1,
            factor_count: 3,
            target_rho_quantile: 0.4,
            aleph: 25,
        })
        .unwrap();
        match enumerate_supports(&inst) {
            Err(ExactError::TooLarge { combinations }) => assert!(combinations > MAX_COMBINATIONS),
            other => panic!("expected TooLarge, got {other:?}"),
        }
    }

    #[test]
    fn bb_full_cardinality_closes_in_one_node() {
        let inst = identity_instance(4, 4, 0.5);
        let res = branch_and_bound_seeded(&inst, f64::INFINITY, None);
        assert_eq!(res.status, ExactStatus::Proven);
        assert_eq!(res.nodes, 1);
        assert!((res.ub - 0.0625).abs() < 1e-6, "ub = {}", res.ub); // 4·(1/8)²
    }

    #[test]
    fn bb_matches_enumeration_on_random_instance() {
        let inst = generate_instance(&GenSpec {
            n: 8,
            seed: 5,
            factor_count: 3,
            target_rho_quantile: 0.5,
            aleph: 3,
        })
        .unwrap();
        let enume = enumerate_supports(&inst).unwrap();
        let bb = branch_and_bound(&inst, f64::INFINITY);
        assert_eq!(bb.status, ExactStatus::Proven);
        assert!(
            (bb.ub - enume.ub).abs() <= 1e-8 * (1.0 + enume.ub.abs()),
            "bb {} vs enum {}",
            bb.ub,
            enume.ub
        );
        assert!(bb.lb <= bb.ub);
    }

    #[test]
    fn bb_identity_ten_assets_cardinality_two() {
        // symmetry reduces this to the 2-asset equal split: 2·(1/4)² = 1/8
        let inst = identity_instance(10, 2, 0.5);
        let res = branch_and_bound_seeded(&inst, f64::INFINITY, None);
        assert_eq!(res.status, ExactStatus::Proven);
        assert!((res.ub - 0.125).abs() < 1e-6, "ub = {}", res.ub);
    }

    #[test]
    fn bb_time_limit_is_a_status_not_an_error() {
        let inst = generate_instance(&GenSpec {
            n: 14,
            seed: 9,
            factor_count: 4,
            target_rho_quantile: 0.6,
            aleph: 5,
        })
        .unwrap();
        let res = branch_and_bound_seeded(&inst, 0.0, None);
        assert_eq!(res.status, ExactStatus::TimeLimit);
        assert!(res.lb <= res.ub);
    }

    #[test]
    fn bb_infeasible_instance() {
        let inst = identity_instance(3, 2, 10.0);
        let res = branch_and_bound_seeded(&inst, f64::INFINITY, None);
        assert_eq!(res.status, ExactStatus::Infeasible);
        assert!(res.best.is_none());
    }

    #[test]
    fn anytime_bounds_sandwich_the_optimum() {
        let inst = generate_instance(&GenSpec {
            n: 9,
            seed: 13,
            factor_count: 3,
            target_rho_quantile: 0.5,
            aleph: 3,
        })
        .unwrap();
        let truth = enumerate_supports(&inst).unwrap();
        // a very tight limit still yields sound bounds
        let partial = branch_and_bound_seeded(&inst, 0.01, None);
        assert!(partial.lb <= truth.ub + 1e-8);
        if partial.ub.is_finite() {
            assert!(partial.ub + 1e-8 >= truth.ub);
        }
    }
}
