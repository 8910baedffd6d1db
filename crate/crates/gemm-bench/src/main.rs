use std::fs;
use std::process::ExitCode;

use clap::Parser;
use gemm_bench::{
    build_problem, check_result, csv_report, dataset_dims, endpoint_plans, make_records,
    run_distributed_gemm, BenchError, GemmConfig, Majors, DATASETS,
};

/// Distributed GEMM benchmark over an in-process rank group.
///
/// Computes C = alpha*A*B + beta*C with C tiled across an M x (R/M) rank
/// grid, A scattered as row slabs repeated across grid columns, and B as
/// column slabs repeated across grid rows. SMALL, MEDIUM, and LARGE are
/// the Polybench 4.2 problem sizes rounded up to the nearest multiple of
/// 64 so rank grids divide the matrices evenly; MINI is 64x64x64 and
/// EXTRALARGE is 2048x2560x1408.
#[derive(Parser)]
#[command(name = "gemm-bench")]
struct Cli {
    /// Problem size by name: MINI, SMALL, MEDIUM, LARGE, or EXTRALARGE
    #[arg(long, default_value = "MINI", conflicts_with = "dims")]
    dataset: String,

    /// Explicit problem size as NI,NJ,NK
    #[arg(long, value_name = "NI,NJ,NK")]
    dims: Option<String>,

    /// Number of ranks in the group
    #[arg(long, default_value_t = 4)]
    ranks: usize,

    /// Rows of the rank grid; must divide --ranks
    #[arg(long, default_value_t = 2)]
    grid_m: usize,

    /// Tile majors for C/A/B: C from {I,J}, A from {I,K}, B from {K,J}
    #[arg(long, default_value = "I/I/K")]
    majors: String,

    /// Timed repetitions
    #[arg(long, default_value_t = 10)]
    repeats: usize,

    /// Write the CSV report to this file instead of stdout
    #[arg(long, value_name = "PATH")]
    csv: Option<std::path::PathBuf>,

    /// Compare the gathered C bit for bit against the sequential oracle
    #[arg(long)]
    validate: bool,

    /// Print the datatype plans for the six collective endpoints and exit
    #[arg(long)]
    render_plans: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match drive(&cli) {
        Ok(code) => code,
        Err(BenchError::Config(msg)) => {
            eprintln!("gemm-bench: configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("gemm-bench: {e}");
            ExitCode::from(2)
        }
    }
}

fn parse_dims(s: &str) -> Result<(usize, usize, usize), BenchError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [ni, nj, nk] = parts[..] else {
        return Err(BenchError::Config(format!("--dims wants NI,NJ,NK, got {s:?}")));
    };
    let one = |t: &str| {
        t.parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| BenchError::Config(format!("bad dimension {t:?}")))
    };
    Ok((one(ni)?, one(nj)?, one(nk)?))
}

fn drive(cli: &Cli) -> Result<ExitCode, BenchError> {
    let majors = Majors::parse(&cli.majors).map_err(BenchError::Config)?;
    let (dataset, (ni, nj, nk)) = match &cli.dims {
        Some(d) => ("custom".to_string(), parse_dims(d)?),
        None => {
            let dims = dataset_dims(&cli.dataset).ok_or_else(|| {
                let names: Vec<&str> = DATASETS.iter().map(|(n, _)| *n).collect();
                BenchError::Config(format!(
                    "unknown dataset {:?}; expected one of {}",
                    cli.dataset,
                    names.join(", ")
                ))
            })?;
            (cli.dataset.to_ascii_uppercase(), dims)
        }
    };
    let cfg = GemmConfig {
        dataset,
        ni,
        nj,
        nk,
        ranks: cli.ranks,
        grid_m: cli.grid_m,
        majors,
        repeats: cli.repeats,
    };

    if cli.render_plans {
        let p = build_problem(&cfg).map_err(|e| BenchError::Config(e.to_string()))?;
        let plans = endpoint_plans(&p).map_err(|e| BenchError::Config(e.to_string()))?;
        for (label, plan) in plans {
            println!("{label}:");
            for line in plan.render_calls() {
                println!("  {line}");
            }
        }
        return Ok(ExitCode::SUCCESS);
    }

    let run = run_distributed_gemm(&cfg)?;
    let report = csv_report(&make_records(&cfg, &run.rows));
    match &cli.csv {
        Some(path) => fs::write(path, &report)
            .map_err(|e| BenchError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{report}"),
    }

    if cli.validate {
        if let Err(m) = check_result(&run.gathered, cfg.ni, cfg.nj, cfg.nk) {
            eprintln!(
                "validation: first mismatch at C[{}][{}]: expected {:e}, got {:e}",
                m.i, m.j, m.expected, m.actual
            );
            return Ok(ExitCode::from(1));
        }
        eprintln!("validation: gathered C matches the sequential reference");
    }
    Ok(ExitCode::SUCCESS)
}
