//! `ricciwarp SCENARIO [--out DIR] [--threads N] [--grid-depth K] [--json]`
//!
//! Exit codes: 0 when every check passes, 1 when a certificate fails, 2 for
//! an unreadable scenario, 3 for a violated precondition. Errors are printed
//! to stderr as one JSON object `{"error": kind, "message": ...}`.

mod commands;
mod error;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use error::CliError;
use scenario::Scenario;

#[derive(Debug, Parser)]
#[command(name = "ricciwarp", version, about = "Run a ricciwarp scenario and certify its results")]
struct Args {
    /// TOML scenario file.
    scenario: PathBuf,
    /// Directory for `report.json` and the CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Overrides every grid refinement depth of the scenario.
    #[arg(long)]
    grid_depth: Option<u32>,
    /// Print the report to stdout.
    #[arg(long)]
    json: bool,
}

fn execute(args: &Args) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| CliError::Parse { path: String::new(), message: format!("{}: {e}", args.scenario.display()) })?;
    let mut scenario = Scenario::parse(&text)?;
    if let Some(depth) = args.grid_depth {
        scenario.override_depth(depth);
    }
    scenario.validate()?;
    if args.threads == 0 {
        return Err(CliError::Precondition("threads: must be at least 1".into()));
    }
    let run = ricciwarp::verify::with_threads(args.threads, || commands::run(&scenario))??;
    let json = output::to_json(&run.report).map_err(|e| CliError::Failed(e.to_string()))?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), &json)?;
        for table in &run.tables {
            table.write(dir).map_err(|e| CliError::Io(e.into()))?;
        }
    }
    if args.json {
        print!("{json}");
    } else {
        for check in &run.report.checks {
            let status = if check.passed { "PASS" } else { "FAIL" };
            println!("{status} {} margin={:.6e}", check.id, check.margin);
        }
    }
    Ok(run.report.passed)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}", serde_json::json!({ "error": "certificate_failed", "message": "at least one check failed" }));
            ExitCode::from(1)
        }
        Err(e) => {
            let mut body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            if let CliError::Parse { path, .. } = &e {
                body["path"] = serde_json::Value::String(path.clone());
            }
            eprintln!("{body}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
