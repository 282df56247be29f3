//! `riskset`: batch audits of risk measures on finite scenario sets.
//!
//! Exit codes: 0 when every verdict passes, 1 when any fails, 2 on input
//! errors.

mod commands;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use report::{AuditReport, RunConfig, Tolerances};

#[derive(Parser)]
#[command(name = "riskset", version, about = "Audit scalar, vector-valued and set-valued risk measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate functionals on a scenario table (or a tree, stage by stage).
    Evaluate(Common),
    /// Run the axiom suites.
    Audit(Common),
    /// Separability harness and copula invariance.
    Separability(Common),
    /// Dual feasibility, off-diagonal and biconjugate checks.
    Dual(Common),
    /// Support function sweep and domain classification.
    Support(Common),
    /// Sample the efficient frontier of R(X) as CSV.
    Frontier(Common),
    /// Efficient allocations and the allocation-rule diagnostic.
    Allocate(Common),
    /// Locality, conditional separability and time consistency on a tree.
    Conditional(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Self::Evaluate(c) => ("evaluate", c),
            Self::Audit(c) => ("audit", c),
            Self::Separability(c) => ("separability", c),
            Self::Dual(c) => ("dual", c),
            Self::Support(c) => ("support", c),
            Self::Frontier(c) => ("frontier", c),
            Self::Allocate(c) => ("allocate", c),
            Self::Conditional(c) => ("conditional", c),
        }
    }
}

#[derive(Args)]
struct Common {
    /// Scenario CSV with header `prob,X1,...,XN`.
    #[arg(long)]
    scenarios: Option<String>,
    /// Scenario tree JSON (`probabilities`, `partitions`, `X`).
    #[arg(long)]
    tree: Option<String>,
    /// Functional or set specification; repeatable.
    #[arg(long)]
    spec: Vec<String>,
    /// Restrict `audit` to these properties (comma-separated).
    #[arg(long, value_delimiter = ',')]
    audits: Vec<String>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directions on the quarter circle.
    #[arg(long, default_value_t = 181)]
    grid: usize,
    /// Allocation weights `v`, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    weights: Option<Vec<f64>>,
    /// Report path; the report goes to stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// Frontier CSV path.
    #[arg(long)]
    csv: Option<String>,
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("RISKSET_THREADS") else { return Ok(()) };
    let n: usize = raw.trim().parse().ok().filter(|&n| n >= 1).ok_or(format!("RISKSET_THREADS=`{raw}` is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<i32, String> {
    configure_threads()?;
    let (name, c) = cli.command.parts();
    let config = RunConfig {
        spec: c.spec.clone(),
        scenarios: c.scenarios.clone(),
        tree: c.tree.clone(),
        audits: c.audits.clone(),
        trials: c.trials,
        seed: c.seed,
        grid: c.grid,
        weights: c.weights.clone(),
        tolerances: Tolerances::default(),
        out: c.out.clone(),
        csv: c.csv.clone(),
    };
    config.validate()?;
    let (records, results) = match name {
        "evaluate" => commands::evaluate(&config),
        "audit" => commands::audit(&config),
        "separability" => commands::separability(&config),
        "dual" => commands::dual(&config),
        "support" => commands::support(&config),
        "frontier" => commands::frontier(&config),
        "allocate" => commands::allocate(&config),
        "conditional" => commands::conditional(&config),
        _ => unreachable!("every subcommand is dispatched"),
    }?;
    let report = AuditReport::new(name, config, records, results);
    let json = report.to_json();
    match &report.config.out {
        Some(path) => {
            std::fs::write(path, &json).map_err(|e| format!("{path}: {e}"))?;
            let s = &report.summary;
            println!("{name}: {} pass, {} fail, {} info -> {path}", s.pass, s.fail, s.info);
        }
        None => print!("{json}"),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("riskset: {msg}");
            ExitCode::from(2)
        }
    }
}
