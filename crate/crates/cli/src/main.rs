use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tvsetar_cli::config::{FamilyChoice, StudyId};
use tvsetar_cli::{run, Bundle, CliError, Command, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "tvsetar", version, about = "Time-varying threshold SETAR(1) models")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a series from the configured model
    Simulate(Flags),
    /// Fit a constant, Fourier or wavelet threshold model to a CSV series
    Fit(Flags),
    /// Residual bootstrap intervals and sup-t threshold band
    Bootstrap(Flags),
    /// Run a simulation study (sim1, sim2) or a coverage experiment
    Replicate(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Input CSV
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    family: Option<FamilyChoice>,
    #[arg(long)]
    vanishing_moments: Option<usize>,
    /// Resolution level, or a comma-separated list to select from
    #[arg(long, value_delimiter = ',')]
    resolution: Option<Vec<usize>>,
    /// Fourier frequency, or a comma-separated list to select from
    #[arg(long, value_delimiter = ',')]
    fourier_k: Option<Vec<u32>>,
    #[arg(long)]
    bootstrap_b: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Replications, or Monte Carlo runs for the coverage study
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    difference: Option<usize>,
    #[arg(long, value_enum)]
    study: Option<StudyId>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            family: self.family,
            vanishing_moments: self.vanishing_moments,
            resolution: self.resolution.clone(),
            fourier_k: self.fourier_k.clone(),
            bootstrap_b: self.bootstrap_b,
            alpha: self.alpha,
            reps: self.reps,
            difference: self.difference,
            input: self.input.clone(),
            study: self.study,
        }
    }
}

fn summarise(bundle: &Bundle) {
    let doc = &bundle.document;
    println!("{} (seed {})", doc.command, doc.seed);
    if let Some(fit) = &doc.fit {
        let e = fit.estimates();
        println!("  family      {}", fit.family.label());
        println!("  low regime  {:.4} + {:.4} y", e[0], e[1]);
        println!("  high regime {:.4} + {:.4} y", e[2], e[3]);
        println!("  sigma2      {:.4}   ssr {:.4}", e[4], fit.ssr);
        for w in &fit.warnings {
            println!("  warning: {w}");
        }
    }
    if let Some(d) = &doc.diagnostics {
        for lb in &d.ljung_box {
            println!("  Ljung-Box lag {:>2}: Q = {:.4}, p = {:.4}", lb.lag, lb.statistic, lb.p_value);
        }
    }
    if let Some(b) = &doc.bootstrap {
        println!("  bootstrap B = {} (dropped {}), alpha = {}", b.b, b.dropped, b.alpha);
        for iv in &b.intervals {
            println!("  {:<10} {:>9.4} [{:.4}, {:.4}]", iv.parameter, iv.interval.estimate, iv.interval.lower, iv.interval.upper);
        }
        println!("  sup-t critical value {:.4}", b.c_crit);
    }
    if let Some(s) = &doc.study {
        println!("  {:<10} {:>8} {:>9} {:>8}", "parameter", "true", "estimate", "rmse");
        for r in &s.rows {
            println!("  {:<10} {:>8.4} {:>9.4} {:>8.4}", r.parameter, r.truth, r.estimate, r.rmse);
        }
        if let Some(j) = s.modal_level() {
            println!("  modal J = {j}");
        }
    }
    if let Some(c) = &doc.coverage {
        println!("  coverage over {} runs ({} completed), B = {}", c.monte_carlo_reps, c.completed, c.b);
        for (name, v) in tvsetar::bootstrap::PARAMETER_NAMES.iter().zip(c.parameter_coverage) {
            println!("  {name:<10} {v:.3}");
        }
        println!("  {:<10} {:.3}", "band", c.band_coverage);
    }
    println!("  output: {}", doc.config.out.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        Cmd::Simulate(f) => (Command::Simulate, f),
        Cmd::Fit(f) => (Command::Fit, f),
        Cmd::Bootstrap(f) => (Command::Bootstrap, f),
        Cmd::Replicate(f) => (Command::Replicate, f),
    };
    let result = (|| -> Result<Bundle, CliError> {
        let mut config = match &flags.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        config.apply(&flags.overrides());
        run(command, &config)
    })();
    match result {
        Ok(bundle) => {
            summarise(&bundle);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
