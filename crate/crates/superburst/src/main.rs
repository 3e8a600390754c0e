//! Command-line front end: configured simulations, transient bursts, phase
//! diagrams, parameter sweeps, trace analysis, and packaged figure
//! reproductions.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use superburst::analysis::{detect_bursts_with, psd_with, BurstThreshold};
use superburst::config::{parse_config, InitialKind, RunConfig};
use superburst::error::Error;
use superburst::runner;

#[derive(Parser)]
#[command(name = "superburst", version, about = "Driven-dissipative superradiance simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (one subdirectory per run).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Maximum concurrent runs for sweeps.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Treat validity warnings (e.g. adiabatic model outside the bad-cavity
    /// regime) as errors.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured simulation (or its sweep block).
    Simulate(CommonArgs),
    /// Transient-burst run: forces a tipped initial state.
    Transient(CommonArgs),
    /// Compute the three-phase diagram from the config's grid block.
    PhaseDiagram(CommonArgs),
    /// Run the config's sweep block (requires one).
    Sweep(CommonArgs),
    /// Re-analyze an existing trace.csv.
    Analyze {
        /// Path to a trace.csv produced by this tool.
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Burst threshold as a multiple of the trace median.
        #[arg(long, default_value_t = 3.0)]
        threshold_factor: f64,
        /// Use a fraction of the settled-window peak instead.
        #[arg(long)]
        peak_fraction: Option<f64>,
        /// Fraction of the trace treated as transient.
        #[arg(long, default_value_t = 0.2)]
        window_start_fraction: f64,
    },
    /// Run a packaged figure reproduction (fig1e, fig2e, fig3ef, figS1,
    /// figS4, extfig6a, extfig6c).
    Reproduce {
        figure_id: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
        cfg.source.rng_seed = seed;
    }
    // advisory validity checks
    if cfg.model == superburst::config::ModelKind::MeanfieldAdiabatic {
        let gn = superburst::model::normalized_coupling(&cfg.params);
        if gn >= 1.0 {
            let msg = format!(
                "adiabatic elimination outside the bad-cavity regime (g_norm = {gn:.2})"
            );
            if args.strict {
                return Err(Error::Domain(msg));
            }
            eprintln!("warning: {msg}");
        }
    }
    Ok(cfg)
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => {
            let cfg = load_config(&args)?;
            let arts = runner::run_config(&cfg, &args.out, args.workers)?;
            for a in arts {
                println!("{}", a.dir.display());
            }
            Ok(())
        }
        Command::Sweep(args) => {
            let cfg = load_config(&args)?;
            if cfg.sweep.is_none() {
                return Err(Error::config("sweep", "the sweep command needs a sweep block"));
            }
            let arts = runner::run_config(&cfg, &args.out, args.workers)?;
            for a in arts {
                println!("{}", a.dir.display());
            }
            Ok(())
        }
        Command::Transient(args) => {
            let mut cfg = load_config(&args)?;
            cfg.initial.kind = InitialKind::Tipped;
            cfg.source.initial.kind = InitialKind::Tipped;
            let arts = runner::run_config(&cfg, &args.out, args.workers)?;
            for a in arts {
                println!("{}", a.dir.display());
            }
            Ok(())
        }
        Command::PhaseDiagram(args) => {
            let cfg = load_config(&args)?;
            let dir = runner::run_phase_diagram(&cfg, &args.out)?;
            println!("{}", dir.display());
            Ok(())
        }
        Command::Analyze { trace, out, threshold_factor, peak_fraction, window_start_fraction } => {
            let tr = runner::read_trace_csv(&trace)?;
            std::fs::create_dir_all(&out)?;
            let threshold = match peak_fraction {
                Some(f) => BurstThreshold::PeakFraction(f),
                None => BurstThreshold::MedianFactor(threshold_factor),
            };
            let train = detect_bursts_with(&tr, threshold, window_start_fraction.max(0.2));
            let spectrum = psd_with(&tr, window_start_fraction, superburst::analysis::SIDEBAND_EXCLUSION_BINS)?;
            let fits = serde_json::json!({
                "period_s": train.period,
                "n_bursts": train.onsets.len(),
                "crystalline_fraction": spectrum.crystalline_fraction,
                "a_tot": spectrum.a_tot,
                "a_sb": spectrum.a_sb,
                "peak_freq_hz": spectrum.peak_freq_hz,
            });
            std::fs::write(out.join("fits.json"), serde_json::to_string_pretty(&fits)?)?;
            println!("{}", out.join("fits.json").display());
            Ok(())
        }
        Command::Reproduce { figure_id, out, workers } => {
            let arts = runner::reproduce(&figure_id, &out, workers)?;
            for a in arts {
                if let Some(p) = a.fits.period_s {
                    println!("{}: period {:.3e} s", a.dir.display(), p);
                } else {
                    println!("{}", a.dir.display());
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "error": e.to_string(),
                "kind": match &e {
                    Error::Config { .. } => "config",
                    Error::Integration { .. } => "integration",
                    Error::Domain(_) => "domain",
                    Error::Contract(_) => "contract",
                    Error::Numerics(_) => "numerics",
                    Error::Io(_) => "io",
                    Error::Json(_) => "json",
                },
            });
            eprintln!("{record}");
            match e {
                Error::Integration { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
