//! `algforge`: load scenario documents, print computed tables, run verification suites.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for
//! unreadable scenarios, unknown check ids, inapplicable checks and bad flags.

mod compute;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use algforge::scenario::Scenario;
use algforge::verify::{check_info, run_suite, SuiteOptions, VerificationReport};
use clap::{Args, Parser, Subcommand};

use compute::What;

#[derive(Parser)]
#[command(name = "algforge", version, about = "Lie algebroid gauge calculus with numeric certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the algebroid axioms (V1, V2) of a scenario.
    Validate {
        scenario: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Print a derived table, symbolically or evaluated at a point.
    Compute {
        scenario: PathBuf,
        what: What,
        /// Comma-separated coordinates in the table's variable space.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Option<Vec<f64>>,
        #[arg(long)]
        json: bool,
    },
    /// Run identity checks; without ids, every check whose preconditions hold.
    Verify {
        scenario: PathBuf,
        /// Check ids such as V1 V10; commas also separate.
        #[arg(value_delimiter = ',')]
        checks: Vec<String>,
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(Args)]
struct RunFlags {
    /// Print the results as a JSON array.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance for every check, or `ID=value` for one check; repeatable.
    #[arg(long, value_name = "TOL")]
    tol: Vec<String>,
    #[arg(long)]
    points: Option<usize>,
    /// Half-width of the sampling box.
    #[arg(long = "box", value_name = "HALF_WIDTH")]
    half_width: Option<f64>,
}

impl RunFlags {
    fn options(&self, checks: Vec<String>) -> Result<SuiteOptions, String> {
        let mut opts = SuiteOptions {
            checks,
            seed: self.seed,
            points: self.points,
            half_width: self.half_width,
            tolerance: None,
            tolerances: BTreeMap::new(),
        };
        for t in &self.tol {
            let parse = |v: &str| -> Result<f64, String> {
                match v.trim().parse::<f64>() {
                    Ok(x) if x >= 0.0 && x.is_finite() => Ok(x),
                    _ => Err(format!("invalid tolerance {v:?}")),
                }
            };
            match t.split_once('=') {
                Some((id, v)) => {
                    let info = check_info(id.trim()).ok_or_else(|| format!("unknown check id {:?}", id.trim()))?;
                    opts.tolerances.insert(info.id.to_string(), parse(v)?);
                }
                None => opts.tolerance = Some(parse(t)?),
            }
        }
        Ok(opts)
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("ALGFORGE_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("ALGFORGE_THREADS={v:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn load(path: &Path) -> Result<Scenario, String> {
    Scenario::load(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn print_report(report: &VerificationReport, json: bool) {
    if json {
        println!("{}", serde_json::to_string_pretty(&report.results).expect("results serialize"));
        return;
    }
    println!("scenario {} (algforge {}, {} threads)", report.scenario, report.version, report.environment.threads);
    println!("{:<5} {:<5} {:>12} {:>10} {:>7} {:>9}", "id", "pass", "residual", "tolerance", "points", "ms");
    for r in &report.results {
        let verdict = if r.pass { "ok" } else { "FAIL" };
        println!("{:<5} {:<5} {:>12.3e} {:>10.1e} {:>7} {:>9.1}", r.id, verdict, r.max_residual, r.tolerance, r.points, r.ms);
        if let Some(note) = &r.note {
            println!("      {note}");
        }
    }
    for s in &report.skipped {
        println!("{:<5} skip  {}", s.id, s.reason);
    }
}

fn suite(path: &Path, checks: Vec<String>, flags: &RunFlags) -> Result<ExitCode, String> {
    let opts = flags.options(checks)?;
    let s = load(path)?;
    let report = run_suite(&s, &opts).map_err(|e| e.to_string())?;
    print_report(&report, flags.json);
    Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    configure_threads()?;
    match cli.command {
        Command::Validate { scenario, run } => suite(&scenario, vec!["V1".into(), "V2".into()], &run),
        Command::Verify { scenario, checks, run } => suite(&scenario, checks, &run),
        Command::Compute { scenario, what, at, json } => {
            let s = load(&scenario)?;
            let c = compute::compute(&s, what)?;
            if json {
                let v = c.to_json(at.as_deref())?;
                println!("{}", serde_json::to_string_pretty(&v).expect("json value serializes"));
            } else {
                print!("{}", c.render(at.as_deref())?);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
