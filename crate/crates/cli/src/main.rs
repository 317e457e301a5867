use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use spc_rsma::scenario::{
    bar_demand, run_draws, separation_losses, summarize, sweep_offboresight, sweep_separation,
    validate, write_csv, ScenarioError,
};
use spc_rsma::{ExperimentRecord, ScenarioConfig, SchemeId};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "spc-rsma", version, about = "GEO-LEO coexistence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme on the configured snapshot.
    Run(Common),
    /// Sweep the GU off-boresight angle over every scheme.
    SweepAngle(Common),
    /// Per-LU served throughput at the fixed bar-chart angle.
    BarDemand(Common),
    /// Sweep the separation to a second LEO satellite.
    SweepSeparation(Common),
    /// Run the invariant suite and report pass/fail per check.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults apply to every missing key.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write records as CSV to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Schemes to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<SchemeId>,
    /// Monte-Carlo draws per sweep point.
    #[arg(long)]
    draws: Option<usize>,
    /// Fill the wall-time column (makes the CSV non-reproducible).
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                ScenarioConfig::from_toml_str(&text)
                    .with_context(|| format!("in {}", path.display()))?
            }
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let [only] = self.scheme.as_slice() {
            config.scheme = *only;
        }
        config.validate()?;
        Ok(config)
    }

    fn schemes(&self, default: &[SchemeId]) -> Vec<SchemeId> {
        if self.scheme.is_empty() {
            default.to_vec()
        } else {
            self.scheme.clone()
        }
    }

    fn emit(&self, records: &[ExperimentRecord]) -> Result<()> {
        if let Some(path) = &self.out {
            std::fs::write(path, write_csv(records, self.timing))
                .with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

fn label(v: f64) -> String {
    if v.is_finite() {
        format!("{v:>8.2}")
    } else {
        format!("{:>8}", "single")
    }
}

fn print_summary(records: &[ExperimentRecord]) {
    println!(
        "{:<22} {:>8} {:>5} {:>18} {:>18}",
        "scheme", "value", "draws", "objective", "satisfaction %"
    );
    for row in summarize(records) {
        println!(
            "{:<22} {} {:>5} {:>9.4} ± {:<6.4} {:>9.2} ± {:<6.2}",
            row.scheme.name(),
            label(row.sweep_value),
            row.draws,
            row.mean_objective,
            row.se_objective,
            100.0 * row.mean_satisfaction,
            100.0 * row.se_satisfaction,
        );
    }
}

fn print_served(records: &[ExperimentRecord]) {
    println!();
    println!("mean served throughput per LU (bits/s/Hz)");
    for row in summarize(records) {
        let cells: Vec<String> = row
            .mean_served
            .iter()
            .map(|s| format!("{s:>7.3}"))
            .collect();
        println!("{:<22} {}", row.scheme.name(), cells.join(" "));
    }
}

fn execute(command: &Command) -> Result<bool> {
    match command {
        Command::Run(c) => {
            let config = c.load()?;
            let records = run_draws(&config, &[config.scheme], c.draws.unwrap_or(1))?;
            print_summary(&records);
            c.emit(&records)?;
        }
        Command::SweepAngle(c) => {
            let config = c.load()?;
            let points = config.sweep.off_boresight_deg.points();
            let draws = c.draws.unwrap_or(config.sweep.draws);
            let records = sweep_offboresight(&config, &points, &c.schemes(&SchemeId::ALL), draws)?;
            print_summary(&records);
            c.emit(&records)?;
        }
        Command::BarDemand(c) => {
            let config = c.load()?;
            let draws = c.draws.unwrap_or(config.sweep.draws);
            let records = bar_demand(&config, &c.schemes(&SchemeId::ALL), draws)?;
            print_summary(&records);
            print_served(&records);
            c.emit(&records)?;
        }
        Command::SweepSeparation(c) => {
            let config = c.load()?;
            let points = config.sweep.separation_deg.points();
            let draws = c.draws.unwrap_or(config.sweep.draws);
            let records = sweep_separation(&config, &points, &c.schemes(&[config.scheme]), draws)?;
            print_summary(&records);
            println!();
            println!("{:<22} {:>8} {:>18}", "scheme", "sep deg", "loss %");
            for l in separation_losses(&records) {
                println!(
                    "{:<22} {:>8.2} {:>9.2} ± {:<6.2}",
                    l.scheme.name(),
                    l.separation_deg,
                    100.0 * l.loss,
                    100.0 * l.se
                );
            }
            c.emit(&records)?;
        }
        Command::Validate(c) => {
            let config = c.load()?;
            let report = validate(&config)?;
            print!("{report}");
            return Ok(report.all_passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e.chain().any(|c| {
                c.downcast_ref::<spc_rsma::scenario::ConfigError>()
                    .is_some()
                    || matches!(
                        c.downcast_ref::<ScenarioError>(),
                        Some(ScenarioError::Config(_))
                    )
            });
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}
