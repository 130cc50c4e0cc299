use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pint::{
    drift_report, order_study, run, run_fixtures, write_run, HarnessError, RunConfig,
    TrajectoryRecord,
};

#[derive(Debug, Parser)]
#[command(
    name = "pint",
    version,
    about = "Poisson integrator runs, order studies and fixtures"
)]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a configuration and write its trajectory and metadata.
    Run { config: PathBuf },
    /// Measure the convergence order over the configured timesteps.
    OrderStudy { config: PathBuf },
    /// Summarise energy and Casimir drift of a trajectory CSV.
    Drift { trajectory: PathBuf },
    /// Re-run the regression fixtures.
    Fixtures {
        #[arg(long, default_value = "fixtures")]
        dir: PathBuf,
    },
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn write(path: PathBuf, body: &str) -> Result<(), HarnessError> {
    std::fs::write(&path, body).map_err(|e| HarnessError::Io { path, source: e })
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    let say = |s: String| {
        if !cli.quiet {
            let _ = writeln!(std::io::stdout(), "{s}");
        }
    };
    match &cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(config)?;
            let record = run(&cfg)?;
            let (files, report) = write_run(&cfg, &record, &cli.out, &stem(config))?;
            say(format!(
                "{} steps, max |dH| {:.3e}, max |dC| {:?}, final ln|x| {:.6}",
                report.steps, report.max_abs_dh, report.max_abs_dc, report.final_log_norm
            ));
            for p in files
                .trajectory
                .iter()
                .chain([&files.metadata])
                .chain(&files.drift)
            {
                say(format!("wrote {}", p.display()));
            }
        }
        Command::OrderStudy { config } => {
            let cfg = RunConfig::load(config)?;
            let study = order_study(&cfg)?;
            std::fs::create_dir_all(&cli.out).map_err(|e| HarnessError::Io {
                path: cli.out.clone(),
                source: e,
            })?;
            let base = stem(config);
            write(cli.out.join(format!("{base}.order.csv")), &study.to_csv())?;
            let json = serde_json::to_string_pretty(&study)
                .expect("order studies always serialise")
                + "\n";
            write(cli.out.join(format!("{base}.order.json")), &json)?;
            for (dt, e) in &study.rows {
                say(format!("{dt:<10} {e:.6e}"));
            }
            say(format!(
                "{} vs {}: slope {:.4}",
                study.scheme, study.reference, study.slope
            ));
        }
        Command::Drift { trajectory } => {
            let text = std::fs::read_to_string(trajectory).map_err(|e| HarnessError::Io {
                path: trajectory.clone(),
                source: e,
            })?;
            let report = drift_report(&TrajectoryRecord::from_csv(&text)?);
            say(serde_json::to_string_pretty(&report).expect("drift reports always serialise"));
        }
        Command::Fixtures { dir } => {
            let outcomes = run_fixtures(dir)?;
            let mut first_failure = None;
            for o in outcomes {
                say(format!(
                    "{} {:<28} error {:.3e} (tolerance {:.1e})",
                    if o.passed() { "ok  " } else { "FAIL" },
                    o.name,
                    o.error,
                    o.tolerance
                ));
                if let Err(e) = o.into_result() {
                    first_failure.get_or_insert(e);
                }
            }
            if let Some(e) = first_failure {
                return Err(e);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pint: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
