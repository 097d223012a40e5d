//! Benchmark harness: run the relaxation pipeline and the exact solver
//! over a directory of instances, one row per (instance, cardinality cap),
//! then aggregate min/avg/max gaps per (cap, size) group.
//!
//! The per-row upper bound is the best feasible objective seen by either
//! stage; both gap columns measure against it. Rows are ordered
//! lexicographically by instance name, then by cap, independent of the
//! worker count. Numeric cells print with six significant digits; empty
//! cells mark values a failed stage could not produce.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use cardsdp::cardopt::{self, relative_gap};
use cardsdp::exact;
use cardsdp::instance::{load_instance, Instance};
use cardsdp::ipm::SolverConfig;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub dir: PathBuf,
    pub alephs: Vec<usize>,
    pub time_limit: f64,
    pub jobs: usize,
    pub redact_times: bool,
    pub solver: SolverConfig,
}

/// One benchmark result row, mirroring the detailed comparison tables:
/// best upper bound, gap of the exact solver at its time limit, the
/// relaxation bound with its gap, solve time and solution rank.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub instance_name: String,
    pub n: usize,
    pub aleph: usize,
    pub ub: Option<f64>,
    pub gap_exact: Option<f64>,
    pub lb_sdp: Option<f64>,
    pub gap_sdp: Option<f64>,
    pub sdp_time: Option<f64>,
    pub rank: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub aleph: usize,
    pub n: usize,
    pub gap_exact_min: Option<f64>,
    pub gap_exact_avg: Option<f64>,
    pub gap_exact_max: Option<f64>,
    pub gap_sdp_min: Option<f64>,
    pub gap_sdp_avg: Option<f64>,
    pub gap_sdp_max: Option<f64>,
    pub avg_sdp_time: Option<f64>,
}

#[derive(Debug)]
pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<AggregateRow>,
}

/// Tiny negative gaps are solver noise on ub = opt rows; anything larger
/// passes through unchanged.
fn clamp_gap(g: f64) -> f64 {
    if g < 0.0 && g >= -1e-9 {
        0.0
    } else {
        g
    }
}

fn run_one(inst: &Instance, name: &str, cfg: &BenchConfig) -> BenchRow {
    let report = cardopt::run(inst, &cfg.solver);
    let bb = exact::branch_and_bound_seeded(inst, cfg.time_limit, report.portfolio.clone());

    let mut ub: Option<f64> = None;
    if bb.ub.is_finite() {
        ub = Some(bb.ub);
    }
    if let Some(round_ub) = report.ub {
        ub = Some(ub.map_or(round_ub, |v: f64| v.min(round_ub)));
    }

    let gap_exact = match (ub, bb.lb.is_finite()) {
        (Some(u), true) => relative_gap(u, bb.lb).map(clamp_gap),
        _ => None,
    };
    let lb_sdp = report.lb_sdp.is_finite().then_some(report.lb_sdp);
    let gap_sdp = match (ub, lb_sdp) {
        (Some(u), Some(lb)) => relative_gap(u, lb).map(clamp_gap),
        _ => None,
    };

    BenchRow {
        instance_name: name.to_string(),
        n: inst.n(),
        aleph: inst.aleph(),
        ub,
        gap_exact,
        lb_sdp,
        gap_sdp,
        sdp_time: Some(report.sdp_time),
        rank: report.rank,
    }
}

/// Instance files in `dir`, lexicographic by file stem.
pub fn instance_files(dir: &Path) -> Result<Vec<(String, PathBuf)>, String> {
    let mut files: Vec<(String, PathBuf)> = std::fs::read_dir(dir)
        .map_err(|e| format!("cannot read {}: {e}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .map(|p| {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            (stem, p)
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(files)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchOutcome, String> {
    let files = instance_files(&cfg.dir)?;
    if files.is_empty() {
        return Err(format!("no .json instances found in {}", cfg.dir.display()));
    }
    let mut alephs = cfg.alephs.clone();
    alephs.sort_unstable();
    alephs.dedup();
    if alephs.is_empty() {
        return Err("no cardinality caps given".into());
    }

    // one task per (file, aleph), already in output order
    let tasks: Vec<(usize, String, PathBuf, usize)> = files
        .iter()
        .flat_map(|(name, path)| alephs.iter().map(move |&a| (name.clone(), path.clone(), a)))
        .enumerate()
        .map(|(i, (name, path, a))| (i, name, path, a))
        .collect();

    let results: Mutex<Vec<Option<BenchRow>>> = Mutex::new(vec![None; tasks.len()]);
    let cursor = AtomicUsize::new(0);
    let worker = |tasks: &[(usize, String, PathBuf, usize)]| loop {
        let k = cursor.fetch_add(1, Ordering::SeqCst);
        if k >= tasks.len() {
            break;
        }
        let (slot, name, path, aleph) = &tasks[k];
        let row = match load_instance(path).and_then(|inst| Ok(inst.with_aleph(*aleph)?)) {
            Ok(inst) => run_one(&inst, name, cfg),
            // load or cap failure: keep the row with empty numeric cells
            Err(_) => BenchRow {
                instance_name: name.clone(),
                n: 0,
                aleph: *aleph,
                ub: None,
                gap_exact: None,
                lb_sdp: None,
                gap_sdp: None,
                sdp_time: None,
                rank: None,
            },
        };
        results.lock().expect("results lock")[*slot] = Some(row);
    };

    if cfg.jobs <= 1 {
        worker(&tasks);
    } else {
        std::thread::scope(|scope| {
            for _ in 0..cfg.jobs {
                scope.spawn(|| worker(&tasks));
            }
        });
    }

    let rows: Vec<BenchRow> = results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("all tasks completed"))
        .collect();
    let aggregates = aggregate(&rows);
    Ok(BenchOutcome { rows, aggregates })
}

fn aggregate(rows: &[BenchRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.aleph, r.n)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .map(|(aleph, n)| {
            let group: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.aleph == aleph && r.n == n)
                .collect();
            let exact: Vec<f64> = group.iter().filter_map(|r| r.gap_exact).collect();
            let sdp: Vec<f64> = group.iter().filter_map(|r| r.gap_sdp).collect();
            let times: Vec<f64> = group.iter().filter_map(|r| r.sdp_time).collect();
            let stats = |v: &[f64]| {
                if v.is_empty() {
                    (None, None, None)
                } else {
                    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
                    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let avg = v.iter().sum::<f64>() / v.len() as f64;
                    (Some(min), Some(avg), Some(max))
                }
            };
            let (ge_min, ge_avg, ge_max) = stats(&exact);
            let (gs_min, gs_avg, gs_max) = stats(&sdp);
            let avg_time = if times.is_empty() {
                None
            } else {
                Some(times.iter().sum::<f64>() / times.len() as f64)
            };
            AggregateRow {
                aleph,
                n,
                gap_exact_min: ge_min,
                gap_exact_avg: ge_avg,
                gap_exact_max: ge_max,
                gap_sdp_min: gs_min,
                gap_sdp_avg: gs_avg,
                gap_sdp_max: gs_max,
                avg_sdp_time: avg_time,
            }
        })
        .collect()
}

/// Six significant digits, lowercase scientific; empty cell for None.
pub fn fmt_cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.5e}"),
        None => String::new(),
    }
}

fn fmt_time(v: Option<f64>, redact: bool) -> String {
    if redact {
        String::new()
    } else {
        fmt_cell(v)
    }
}

pub const ROWS_HEADER: &str = "instance,n,aleph,ub,gap_exact,lb_sdp,gap_sdp,sdp_time,rank";
pub const AGGREGATE_HEADER: &str = "aleph,n,gap_exact_min,gap_exact_avg,gap_exact_max,\
                                    gap_sdp_min,gap_sdp_avg,gap_sdp_max,avg_sdp_time";

pub fn rows_csv(rows: &[BenchRow], redact_times: bool) -> String {
    let mut out = String::from(ROWS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.instance_name,
            r.n,
            r.aleph,
            fmt_cell(r.ub),
            fmt_cell(r.gap_exact),
            fmt_cell(r.lb_sdp),
            fmt_cell(r.gap_sdp),
            fmt_time(r.sdp_time, redact_times),
            r.rank.map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    out
}

pub fn aggregate_csv(rows: &[AggregateRow], redact_times: bool) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.aleph,
            r.n,
            fmt_cell(r.gap_exact_min),
            fmt_cell(r.gap_exact_avg),
            fmt_cell(r.gap_exact_max),
            fmt_cell(r.gap_sdp_min),
            fmt_cell(r.gap_sdp_avg),
            fmt_cell(r.gap_sdp_max),
            fmt_time(r.avg_sdp_time, redact_times),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_clamp_only_touches_noise() {
        assert_eq!(clamp_gap(-1e-12), 0.0);
        assert_eq!(clamp_gap(-1e-7), -1e-7);
        assert_eq!(clamp_gap(0.3), 0.3);
    }

    #[test]
    fn cell_formatting_has_six_significant_digits() {
        assert_eq!(fmt_cell(Some(0.0123456789)), "1.23457e-2");
        assert_eq!(fmt_cell(Some(1.0)), "1.00000e0");
        assert_eq!(fmt_cell(None), "");
    }

    #[test]
    fn aggregate_min_avg_max_arithmetic() {
        let mk = |name: &str, aleph: usize, ge: f64, gs: f64| BenchRow {
            instance_name: name.into(),
            n: 5,
            aleph,
            ub: Some(1.0),
            gap_exact: Some(ge),
            lb_sdp: Some(0.9),
            gap_sdp: Some(gs),
            sdp_time: Some(0.5),
            rank: Some(1),
        };
        let rows = vec![
            mk("a", 2, 0.1, 0.01),
            mk("b", 2, 0.3, 0.03),
            mk("c", 3, 0.2, 0.02),
        ];
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].aleph, 2);
        assert_eq!(agg[0].gap_exact_min, Some(0.1));
        assert!((agg[0].gap_exact_avg.unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(agg[0].gap_exact_max, Some(0.3));
        assert_eq!(agg[1].aleph, 3);
        assert_eq!(agg[1].gap_sdp_avg, Some(0.02));
        // min <= avg <= max on every group
        for row in &agg {
            assert!(row.gap_exact_min <= row.gap_exact_avg);
            assert!(row.gap_exact_avg <= row.gap_exact_max);
        }
    }
}
