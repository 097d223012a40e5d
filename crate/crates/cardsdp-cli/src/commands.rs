//! Subcommand implementations.

use std::fs;
use std::io::Write;

use cardsdp::cardopt;
use cardsdp::exact::{self, ExactResult};
use cardsdp::instance::{generate_instance, load_instance, GenSpec, Instance};
use cardsdp::ipm::{SolveStatus, SolverConfig};
use cardsdp::sdp::{build_sdp, write_sdpa};

use crate::bench::{self, BenchConfig};
use crate::{log_enabled, BenchArgs, CliError, ExactArgs, ExactMethod, GenArgs, SolveArgs};

fn load_with_aleph(path: &std::path::Path, aleph: Option<usize>) -> Result<Instance, CliError> {
    let inst = load_instance(path).map_err(|e| CliError::Validation(e.to_string()))?;
    match aleph {
        Some(a) => inst
            .with_aleph(a)
            .map_err(|e| CliError::Validation(e.to_string())),
        None => Ok(inst),
    }
}

fn solver_config(gap_tol: f64, feas_tol: f64, max_iter: usize) -> Result<SolverConfig, CliError> {
    if !(gap_tol > 0.0) || !(feas_tol > 0.0) {
        return Err(CliError::Validation("tolerances must be positive".into()));
    }
    if max_iter == 0 {
        return Err(CliError::Validation("max-iter must be at least 1".into()));
    }
    Ok(SolverConfig {
        gap_tol,
        feas_tol,
        max_iter,
        log_iterations: log_enabled(),
        ..Default::default()
    })
}

pub fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let inst = load_with_aleph(&args.instance, args.aleph)?;
    let cfg = solver_config(args.gap_tol, args.feas_tol, args.max_iter)?;

    if let Some(path) = &args.export_sdpa {
        let prob = build_sdp(&inst);
        let mut file = fs::File::create(path)
            .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", path.display())))?;
        write_sdpa(&prob, &mut file)
            .and_then(|_| file.flush())
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("wrote SDPA export to {}", path.display());
    }

    let report = cardopt::run(&inst, &cfg);

    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serialization")
        );
    } else {
        println!(
            "instance: {} (n = {}, aleph = {})",
            args.instance.display(),
            inst.n(),
            inst.aleph()
        );
        println!(
            "sdp:      status = {:?}, iterations = {}, time = {:.3}s",
            report.sdp_status, report.sdp_iterations, report.sdp_time
        );
        println!(
            "lb (dual objective): {:.9e}{}",
            report.lb_sdp,
            if report.lb_safe {
                ""
            } else {
                "  [unsafe: dual residual above tolerance]"
            }
        );
        match (&report.portfolio, report.ub) {
            (Some(p), Some(ub)) => {
                println!(
                    "ub (rounded portfolio): {ub:.9e}, support = {:?}",
                    p.support
                );
            }
            _ => println!("ub: no feasible portfolio found"),
        }
        match report.gap {
            Some(g) => println!("gap: {g:.6e}"),
            None => println!("gap: undefined"),
        }
        if let Some(rank) = report.rank {
            println!("rank: {rank}");
        }
    }

    match report.sdp_status {
        SolveStatus::NumericalFailure => Err(CliError::Solver(
            "interior-point solve failed numerically".into(),
        )),
        _ => Ok(()),
    }
}

fn print_exact(res: &ExactResult, json: bool) {
    if json {
        let out = serde_json::json!({
            "status": res.status,
            "ub": res.ub,
            "lb": res.lb,
            "gap": res.gap,
            "nodes": res.nodes,
            "wall_time": res.wall_time,
            "best": res.best,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&out).expect("exact serialization")
        );
    } else {
        println!(
            "status = {:?}, ub = {:.9e}, lb = {:.9e}, gap = {:.3e}, nodes = {}, time = {:.3}s",
            res.status, res.ub, res.lb, res.gap, res.nodes, res.wall_time
        );
        if let Some(best) = &res.best {
            println!("support = {:?}", best.support);
        }
    }
}

pub fn cmd_exact(args: &ExactArgs) -> Result<(), CliError> {
    let inst = load_with_aleph(&args.instance, args.aleph)?;
    let res = match args.method {
        ExactMethod::Enum => exact::enumerate_supports(&inst).map_err(|e| match e {
            exact::ExactError::TooLarge { .. } => CliError::Validation(e.to_string()),
            exact::ExactError::Qp(_) => CliError::Solver(e.to_string()),
        })?,
        ExactMethod::Bb => exact::branch_and_bound(&inst, args.time_limit),
    };
    print_exact(&res, args.json);
    Ok(())
}

pub fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    let spec = GenSpec {
        n: args.n,
        seed: args.seed,
        factor_count: args.factors,
        target_rho_quantile: args.rho_quantile,
        aleph: args.aleph.unwrap_or(args.n.min(3)),
    };
    let inst = generate_instance(&spec).map_err(|e| CliError::Validation(e.to_string()))?;
    inst.save(&args.out)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    println!(
        "wrote {} (n = {}, aleph = {}, rho = {:.6e}, seed = {})",
        args.out.display(),
        inst.n(),
        inst.aleph(),
        inst.rho(),
        args.seed
    );
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let cfg = BenchConfig {
        dir: args.dir.clone(),
        alephs: args.alephs.clone(),
        time_limit: args.time_limit,
        jobs: args.jobs.max(1),
        redact_times: args.redact_times,
        solver: solver_config(args.gap_tol, args.feas_tol, args.max_iter)?,
    };
    let outcome = bench::run_bench(&cfg).map_err(CliError::Validation)?;

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", args.out.display())))?;
    let rows_path = args.out.join("bench_rows.csv");
    let agg_path = args.out.join("bench_aggregate.csv");
    fs::write(
        &rows_path,
        bench::rows_csv(&outcome.rows, args.redact_times),
    )
    .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", rows_path.display())))?;
    fs::write(
        &agg_path,
        bench::aggregate_csv(&outcome.aggregates, args.redact_times),
    )
    .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", agg_path.display())))?;
    println!(
        "wrote {} ({} rows) and {} ({} groups)",
        rows_path.display(),
        outcome.rows.len(),
        agg_path.display(),
        outcome.aggregates.len()
    );
    Ok(())
}
