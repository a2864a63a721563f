//! `decay`: pole caches, density runs, the oracle suite and sum rules.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use resonance_decay::experiment::{load_config, run_experiment, solve_poles_cmd, sum_rule_table, ExperimentConfig};
use resonance_decay::oracle::run_verification;
use resonance_decay::{Error, Result};

#[derive(Parser)]
#[command(name = "decay", version, about = "Resonance-expansion decay of one and two particles (hbar = 2m = 1)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve poles and write the cache file.
    Poles(Common),
    /// Compute density series and write CSV, plot script and summary.
    Run(Common),
    /// Run the independent oracle suite.
    Verify,
    /// Print sum-rule partial sums.
    Sumrule(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; overrides the preset field by field when both are given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in config: fig1 ... fig6.
    #[arg(long)]
    preset: Option<String>,
    /// Number of poles kept in the expansion.
    #[arg(long)]
    n_poles: Option<usize>,
    /// Output directory for `run`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pole cache directory.
    #[arg(long)]
    cache: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = load_config(self.config.as_deref(), self.preset.as_deref())?;
        if let Some(n) = self.n_poles {
            config.n_poles = n;
        }
        if let Some(dir) = &self.out {
            config.out_dir = dir.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Poles(c) => {
            let config = c.resolve()?;
            let dir = c.cache.clone().unwrap_or_else(|| PathBuf::from("cache"));
            let (path, set) = solve_poles_cmd(&config.potential, config.n_poles, &dir)?;
            println!("# natural units hbar = 2m = 1");
            println!("cache: {}", path.display());
            if let Some(sub) = set.sub_barrier {
                println!("sub-barrier poles: {sub}");
            }
            println!("n,re_k,im_k,lifetime");
            for p in set.poles.iter().take(10) {
                println!("{},{:.10},{:.6e},{:.6}", p.index, p.kappa.re, p.kappa.im, p.lifetime());
            }
            if set.len() > 10 {
                println!("... {} more in the cache file", set.len() - 10);
            }
        }
        Command::Run(c) => {
            let config = c.resolve()?;
            let outcome = run_experiment(&config, c.cache.as_deref())?;
            let s = &outcome.summary;
            println!("# natural units hbar = 2m = 1");
            println!("{}: {} poles, tau = {:.6}", s.name, s.n_poles, s.tau);
            for series in &s.series {
                if let Some([t, r]) = series.global_max {
                    println!("{}: global max at t/tau = {t:.4} (density {r:.4e})", series.symmetry);
                }
                if let (Some(w), Some(e)) = (series.tail_window, series.tail_exponent) {
                    println!("{}: tail exponent {e:.3} over [{:.1}, {:.1}] lifetimes", series.symmetry, w[0], w[1]);
                }
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Verify => {
            let report = run_verification(true)?;
            print!("{}", report.render());
            let failed = report.checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(Error::VerificationFailed { failed });
            }
        }
        Command::Sumrule(c) => {
            let config = c.resolve()?;
            print!("{}", sum_rule_table(&config, c.cache.as_deref())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
