use ascflow::diagnostics::Identity;
use ascflow::harness::{batch, run_audit, run_experiment, run_verify, HarnessError, Overrides};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulate and verify anisotropic curvature flow of convex hypersurfaces.
#[derive(Debug, Parser)]
#[command(name = "ascflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for artifacts; overrides the config's own setting.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Replace the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of records to aim for when the record interval is derived.
    #[arg(long, global = true)]
    records: Option<usize>,
    /// Print nothing on success.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment config.
    Run { config: PathBuf },
    /// Run every experiment config in a directory.
    Batch { dir: PathBuf },
    /// Sample the null-direction condition.
    Audit { config: PathBuf },
    /// Check the evolution identities by finite differences.
    Verify { config: PathBuf },
}

/// Exit code for a verdict that was computed but did not hold.
const VERDICT_FAILED: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides { output_dir: cli.output_dir.clone(), seed: cli.seed, records: cli.records };
    match dispatch(&cli, &overrides) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ascflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli, overrides: &Overrides) -> Result<u8, HarnessError> {
    let say = |line: String| {
        if !cli.quiet {
            println!("{line}");
        }
    };
    match &cli.command {
        Command::Run { config } => {
            let (out, dir) = run_experiment(config, overrides)?;
            let s = &out.summary;
            say(format!("{}: {} steps, {} records, termination {:?}", s.name, s.steps, s.records, s.termination));
            if let Some(e) = &s.extinction {
                say(format!("extinction T = {:.9}, x0 = {:?}, fit residual {:.3e}", e.time, e.point, e.residual));
            }
            say(format!("artifacts in {}", dir.display()));
            Ok(0)
        }
        Command::Batch { dir } => {
            let (rows, root) = batch(dir, overrides)?;
            for r in &rows {
                let t = r.extinction_time.map(|t| format!("T = {t:.9}")).unwrap_or_else(|| r.message.clone());
                say(format!("{:<24} exit {}  {t}", r.config, r.exit_code));
            }
            say(format!("table in {}", root.join("batch.csv").display()));
            // A batch completes even when some rows fail; report the worst code.
            Ok(rows.iter().map(|r| r.exit_code as u8).max().unwrap_or(0))
        }
        Command::Audit { config } => {
            let (outcomes, dir) = run_audit(config, overrides)?;
            for o in &outcomes {
                let s = &o.summary;
                say(format!(
                    "{} {}: {} samples, {} rejected, min Q {:.6e}, {} negative, bookkeeping {:.1e}",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    s.samples,
                    s.rejected,
                    s.min_total,
                    s.negatives,
                    s.max_bookkeeping
                ));
            }
            say(format!("records in {}", dir.display()));
            Ok(if outcomes.iter().all(|o| o.passed) { 0 } else { VERDICT_FAILED })
        }
        Command::Verify { config } => {
            let (out, dir) = run_verify(config, overrides)?;
            for (label, report) in [("body", &out.body), ("sphere", &out.sphere)] {
                for r in &report.rows {
                    say(format!("{label:<6} {:<16} relative residual {:.3e}", name(r.identity), r.relative));
                }
            }
            let verdicts = [("identities", out.identities_pass), ("completed speed", out.speed_completed_pass), ("sphere metric", out.metric_pass)];
            for (what, ok) in verdicts {
                say(format!("{} {what}", if ok { "PASS" } else { "FAIL" }));
            }
            say(format!("tables in {}", dir.display()));
            Ok(if out.identities_pass && out.metric_pass { 0 } else { VERDICT_FAILED })
        }
    }
}

fn name(id: Identity) -> &'static str {
    match id {
        Identity::SupportSpeed => "support-speed",
        Identity::MeanCurvature => "mean-curvature",
        Identity::SpeedPrinted => "speed-printed",
        Identity::SpeedCompleted => "speed-completed",
        Identity::Metric => "metric",
    }
}
