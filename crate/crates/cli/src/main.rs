//! `ris-sched`: delay-aware multi-RIS scheduling toolbox.
//!
//! Thin argument-parsing shell; all command logic lives in the library's
//! `app` module so it can be tested in-process.  Exit codes: 0 on success,
//! 2 on configuration errors, 3 when the brute-force guard trips, 1 on any
//! other failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ris_sched::app::{self, AppError, GlossSweepOptions, ValidateBoundOptions};
use ris_sched::config::Config;
use ris_sched::sim::Policy;

#[derive(Parser)]
#[command(
    name = "ris-sched",
    version,
    about = "Analytic delay bounds and UE-RIS scheduling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options every subcommand shares.
#[derive(Args)]
struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Root seed; all randomness derives from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check analytic delay bounds against an emulated FIFO queue over a
    /// grid of RB counts, violation probabilities, positions and RIS shares.
    ValidateBound {
        #[command(flatten)]
        common: CommonArgs,
        /// Emulated TTIs per probe point.
        #[arg(long, default_value_t = 80_000)]
        ttis: usize,
        /// Probe packet rate, packets per second.
        #[arg(long, default_value_t = 2000.0)]
        rate: f64,
    },
    /// Sweep the delay bound over RIS phase resolution, element count and
    /// distance.
    GlossSweep {
        #[command(flatten)]
        common: CommonArgs,
        /// RBs allocated to the probe UE.
        #[arg(long, default_value_t = 5)]
        n_rb: usize,
        /// Probe packet rate, packets per second.
        #[arg(long, default_value_t = 500.0)]
        rate: f64,
    },
    /// Run one scheduling policy over consecutive assignment periods.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        /// Policy: two_stage, delay_aware_static, snr_static or no_ris.
        #[arg(long)]
        policy: String,
        /// Assignment periods to simulate.
        #[arg(long, default_value_t = 20)]
        periods: usize,
    },
    /// Run all four policies on identical traffic and mobility.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Assignment periods to simulate.
        #[arg(long, default_value_t = 20)]
        periods: usize,
    },
    /// Exhaustive search of the period-0 assignment problem, with the
    /// heuristic gap.
    BruteForce {
        #[command(flatten)]
        common: CommonArgs,
        /// Abort (exit 3) when the search space exceeds this many tensors.
        #[arg(long, default_value_t = 10_000_000)]
        guard: u128,
    },
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::ValidateBound { common, ttis, rate } => {
            let cfg = Config::load(&common.config)?;
            let opts = ValidateBoundOptions {
                n_ttis: ttis,
                rate_pkts_per_s: rate,
                ..Default::default()
            };
            let summary = app::cmd_validate_bound(
                &cfg,
                &common.config.display().to_string(),
                common.seed,
                &common.out,
                &opts,
            )?;
            println!(
                "validate-bound: {} rows ({} feasible), {} conservative, \
                 bound/quantile min {:.3} median {:.3} max {:.3}",
                summary.rows,
                summary.feasible_rows,
                summary.conservative_rows,
                summary.min_ratio,
                summary.median_ratio,
                summary.max_ratio
            );
        }
        Command::GlossSweep { common, n_rb, rate } => {
            let cfg = Config::load(&common.config)?;
            let opts = GlossSweepOptions {
                n_rb,
                rate_pkts_per_s: rate,
                ..Default::default()
            };
            let summary = app::cmd_gloss_sweep(
                &cfg,
                &common.config.display().to_string(),
                common.seed,
                &common.out,
                &opts,
            )?;
            println!(
                "gloss-sweep: {} rows ({} feasible), max |W(B=4)-W(B=5)|/W = {:.4}, \
                 monotone B/L/d: {}/{}/{}",
                summary.rows,
                summary.feasible_rows,
                summary.max_rel_diff_b4_b5,
                summary.monotone_in_phase_bits,
                summary.monotone_in_elements,
                summary.monotone_in_distance
            );
        }
        Command::Optimize {
            common,
            policy,
            periods,
        } => {
            let cfg = Config::load(&common.config)?;
            let policy = Policy::from_name(&policy).map_err(AppError::Sim)?;
            let summary = app::cmd_optimize(
                &cfg,
                &common.config.display().to_string(),
                common.seed,
                &common.out,
                policy,
                periods,
            )?;
            let p = &summary.policy;
            println!(
                "optimize[{}]: {} periods, median f_obj {:.4}, p90 {:.4}, \
                 runtime mean {:.3}s max {:.3}s",
                p.policy, p.periods, p.median_f_obj, p.p90_f_obj, p.mean_runtime_s, p.max_runtime_s
            );
        }
        Command::Compare { common, periods } => {
            let cfg = Config::load(&common.config)?;
            let summary = app::cmd_compare(
                &cfg,
                &common.config.display().to_string(),
                common.seed,
                &common.out,
                periods,
            )?;
            for p in &summary.policies {
                println!(
                    "compare[{}]: median f_obj {:.4}, p90 {:.4}, runtime mean {:.3}s",
                    p.policy, p.median_f_obj, p.p90_f_obj, p.mean_runtime_s
                );
            }
            println!(
                "compare: improvement vs no_ris median {:.1}%, p90 {:.1}%",
                100.0 * summary.median_improvement_vs_no_ris,
                100.0 * summary.p90_improvement_vs_no_ris
            );
        }
        Command::BruteForce { common, guard } => {
            let cfg = Config::load(&common.config)?;
            let summary = app::cmd_brute_force(
                &cfg,
                &common.config.display().to_string(),
                common.seed,
                &common.out,
                guard,
            )?;
            println!(
                "brute-force: {} combinations in {:.3}s, optimum f_obj {:.6}, \
                 heuristic {:.6} (gap {:.2}%) in {:.3}s",
                summary.combinations,
                summary.brute_runtime_s,
                summary.f_obj,
                summary.heuristic_f_obj,
                100.0 * summary.heuristic_gap_rel,
                summary.heuristic_runtime_s
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(u8::try_from(err.exit_code()).unwrap_or(1))
        }
    }
}
