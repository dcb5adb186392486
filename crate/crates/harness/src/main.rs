use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lacunary_harness::families::FamilySpec;
use lacunary_harness::pipeline::run;
use lacunary_harness::report::write_report;
use lacunary_harness::spec::{ExperimentSpec, GridSpec};

#[derive(Parser)]
#[command(name = "lacunary", about = "Runs lacunary maximal-function experiments and writes CSV reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a spec file, optionally overriding its fields.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON spec; omitted means the full default suite.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Grid as `L,delta`, e.g. `4,0.0078125`.
    #[arg(long)]
    grid: Option<String>,
    /// Replaces the alpha list; repeatable.
    #[arg(long)]
    alpha: Vec<f64>,
    /// Replaces the family list with default-parameter families; repeatable.
    #[arg(long)]
    family: Vec<String>,
    /// Replaces the seed list; repeatable.
    #[arg(long)]
    seed: Vec<u64>,
    #[arg(long, allow_hyphen_values = true)]
    kmin: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    kmax: Option<i32>,
    /// Write Ω and the exceptional set of every row as PGM.
    #[arg(long)]
    dump_exceptional: bool,
    /// Use the literal constants instead of the desk knobs.
    #[arg(long)]
    paper_constants: bool,
    /// Convolution backend: direct, fft or auto.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    splitter: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        bail!("grid must be `L,delta`, got {s:?}");
    }
    Ok(GridSpec { side: parts[0].trim().parse()?, delta: parts[1].trim().parse()? })
}

fn build_spec(a: RunArgs) -> Result<ExperimentSpec> {
    let mut spec = match &a.spec {
        Some(p) => ExperimentSpec::from_path(p)?,
        None => ExperimentSpec::full_suite(),
    };
    if let Some(g) = &a.grid {
        spec.grid = parse_grid(g)?;
    }
    if !a.alpha.is_empty() {
        spec.alphas = a.alpha;
    }
    if !a.family.is_empty() {
        spec.families = a.family.iter().map(|n| FamilySpec::new(n)).collect();
    }
    if !a.seed.is_empty() {
        spec.seeds = a.seed;
    }
    if let Some(k) = a.kmin {
        spec.kmin = k;
    }
    if let Some(k) = a.kmax {
        spec.kmax = k;
    }
    spec.dump_exceptional |= a.dump_exceptional;
    spec.paper_constants |= a.paper_constants;
    if let Some(b) = a.backend {
        spec.backend = b;
    }
    if let Some(s) = a.splitter {
        spec.splitter = s;
    }
    if a.out.is_some() {
        spec.out = a.out;
    }
    Ok(spec)
}

fn main() -> ExitCode {
    let Cli { command: Command::Run(args) } = Cli::parse();
    match execute(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(args: RunArgs) -> Result<bool> {
    let spec = build_spec(args)?;
    spec.validate().context("invalid spec")?;
    let report = run(&spec)?;
    let dir = spec.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let path = write_report(&report, &dir)?;
    let failed: Vec<usize> = report.rows.iter().filter(|r| !r.invariants_ok()).map(|r| r.row).collect();
    eprintln!("{} rows written to {}", report.rows.len(), path.display());
    if !failed.is_empty() {
        eprintln!("invariant failures in rows {failed:?}");
    }
    Ok(failed.is_empty())
}
