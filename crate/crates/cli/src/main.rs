//! `kcsm`: runs manifest-described experiments and compares results
//! against baselines. Exit codes: 0 success, 1 comparison mismatch,
//! 2 validation error, 3 numerical failure, 4 non-ergodic instance under
//! `--strict`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kcsm_cli::compare::{compare_baseline, CompareTolerances};
use kcsm_cli::manifest::{ExperimentManifest, Kind};
use kcsm_cli::runner::{run_experiment, write_output, CSV_NAME, SUMMARY_NAME, VERSION};
use kcsm_cli::CliError;

#[derive(Parser)]
#[command(name = "kcsm", version = VERSION, about = "Constrained-dynamics experiment driver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact spectral gaps over a geometry x density grid
    Gap(RunArgs),
    /// Monte Carlo internal-spanning probabilities
    Bootstrap(RunArgs),
    /// Autocorrelation decay of the origin spin, with a rate fit
    Kmc(RunArgs),
    /// Persistence function of the origin spin, with a rate fit
    Persistence(RunArgs),
    /// Oriented-cluster survival probabilities on the quadrant
    Perc(RunArgs),
    /// Closed-form gap bounds evaluated on a density grid
    Bound(RunArgs),
    /// Two-block chain: closed-form gap vs diagonalization
    Blockcheck(RunArgs),
    /// Compare a result directory against a baseline directory
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment manifest (JSON)
    #[arg(long)]
    manifest: PathBuf,
    /// Override the manifest's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the manifest's output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with code 4 when an instance is non-ergodic
    #[arg(long)]
    strict: bool,
    /// Worker threads for the sample fan-out (0 = all cores);
    /// falls back to KCSM_THREADS, then to all cores
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    /// Directory holding the run to check
    result: PathBuf,
    /// Directory holding the trusted baseline
    baseline: PathBuf,
    /// Absolute tolerance for deterministic numeric columns
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
    /// Allowed Monte Carlo shift in pooled standard errors
    #[arg(long, default_value_t = 3.0)]
    sigma: f64,
    /// Compare even when the manifest hashes differ
    #[arg(long)]
    override_hash: bool,
}

fn main() -> ExitCode {
    // Dense eigensolves stay single-threaded so results cannot depend on
    // the worker count; parallelism lives in the sample fan-out instead.
    faer::set_global_parallelism(faer::Par::Seq);

    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Gap(a) => run(Kind::Gap, a),
        Cmd::Bootstrap(a) => run(Kind::Bootstrap, a),
        Cmd::Kmc(a) => run(Kind::Kmc, a),
        Cmd::Persistence(a) => run(Kind::Persistence, a),
        Cmd::Perc(a) => run(Kind::Perc, a),
        Cmd::Bound(a) => run(Kind::Bound, a),
        Cmd::Blockcheck(a) => run(Kind::Blockcheck, a),
        Cmd::Compare(a) => compare(a),
    };
    match code {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn thread_count(args: &RunArgs) -> Result<Option<usize>, CliError> {
    if let Some(n) = args.threads {
        return Ok(Some(n));
    }
    match std::env::var("KCSM_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Validation(format!("KCSM_THREADS must be an integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn run(kind: Kind, args: RunArgs) -> Result<ExitCode, CliError> {
    if let Some(n) = thread_count(&args)? {
        if n > 0 {
            // a second initialization in the same process is harmless; the
            // first pool wins
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }

    let text = std::fs::read_to_string(&args.manifest).map_err(|e| {
        CliError::Validation(format!("reading {}: {e}", args.manifest.display()))
    })?;
    let mut manifest = ExperimentManifest::from_json(&text)?;
    if let Some(seed) = args.seed {
        manifest.seed = seed;
    }
    if manifest.kind != kind {
        return Err(CliError::Validation(format!(
            "manifest kind `{}` does not match subcommand `{kind}`",
            manifest.kind
        )));
    }
    manifest.validate()?;

    let out_dir = args
        .out
        .or_else(|| manifest.out.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let output = run_experiment(&manifest, args.strict)?;
    write_output(&out_dir, &output)?;

    println!(
        "wrote {} ({} rows) and {} in {}",
        CSV_NAME,
        output.record.rows,
        SUMMARY_NAME,
        out_dir.display()
    );
    println!(
        "manifest {} version {} wall {} ms",
        &output.record.manifest_hash[..12],
        output.record.version,
        output.record.wall_ms
    );
    for w in &output.record.warnings {
        eprintln!("warning: {w}");
    }
    match output.exit {
        0 => Ok(ExitCode::SUCCESS),
        code => {
            eprintln!(
                "error: run finished with {}",
                if code == 3 {
                    "a numerical failure"
                } else {
                    "non-ergodic instances under --strict"
                }
            );
            Ok(ExitCode::from(code as u8))
        }
    }
}

fn compare(args: CompareArgs) -> Result<ExitCode, CliError> {
    let tol = CompareTolerances {
        deterministic: args.tol,
        sigma: args.sigma,
    };
    let report = compare_baseline(&args.result, &args.baseline, &tol, args.override_hash)?;
    if report.pass {
        println!(
            "PASS: {} rows, {} cells compared",
            report.rows, report.cells_checked
        );
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &report.failures {
            println!("FAIL: {f}");
        }
        Ok(ExitCode::FAILURE)
    }
}
