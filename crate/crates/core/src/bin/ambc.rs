//! Command-line front end for the backscatter receiver simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ambc::aoa::{angle_grid, bartlett_spectrum, estimate_aoa};
use ambc::config::SweepConfig;
use ambc::numerics::sample_covariance;
use ambc::sim::{run_sweep_with, trial_rng, write_results, ReceiverOptions, TrialContext};
use ambc::synthesis::synthesize_codeword;
use ambc::Error;

#[derive(Parser)]
#[command(
    name = "ambc",
    version,
    about = "Ambient backscatter null-steering receiver simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER sweep; writes a CSV plus a `.json` sidecar.
    BerSweep(Common),
    /// Run a single seeded codeword and print receiver diagnostics.
    SingleRun(Common),
    /// Bartlett spectrum of one synthesized codeword; prints the peak.
    AoaTest(Common),
    /// Bartlett spectrum of one synthesized codeword as CSV.
    SpectrumDump(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Dotted-path override, e.g. `scenario.snr_db=20`. Repeatable; last wins.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BerSweep(c) => ber_sweep(c),
        Command::SingleRun(c) => single_run(c),
        Command::AoaTest(c) => spectrum(c, true),
        Command::SpectrumDump(c) => spectrum(c, false),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load(common: &Common) -> Result<SweepConfig, Failure> {
    let mut cfg = SweepConfig::load(&common.config, &common.overrides).map_err(|e| match e {
        Error::Io { path, source } => {
            Failure::Config(format!("cannot read {}: {source}", path.display()))
        }
        other => Failure::Config(other.to_string()),
    })?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    Ok(cfg)
}

fn ber_sweep(common: Common) -> Result<(), Failure> {
    let out = common
        .out
        .clone()
        .ok_or_else(|| Failure::Config("ber-sweep needs --out".into()))?;
    let cfg = load(&common)?;
    let axis = cfg.axis.name();
    let outcome = run_sweep_with(&cfg, |point| match point {
        Ok(r) => println!(
            "{axis}={:<8} trials={:<8} errors={:<6} ber={:.3e} ci=[{:.3e}, {:.3e}]",
            r.axis_value, r.trials, r.errors, r.ber, r.ci_low, r.ci_high
        ),
        Err(f) => println!("{axis}={:<8} FAILED: {}", f.axis_value, f.message),
    })?;
    write_results(&outcome, &cfg, &out)?;
    Ok(())
}

fn single_run(common: Common) -> Result<(), Failure> {
    let cfg = load(&common)?;
    let scenario = cfg.scenario.resolve()?;
    let ctx = TrialContext::new(
        scenario,
        ReceiverOptions::from_config(&cfg),
        cfg.master_seed,
        0,
    )?;
    let o = ctx.run_trial(0)?;
    println!("truth_symbol   {:+}", o.truth);
    println!("gamma_plus     {:.6e}", o.detection.gamma_plus);
    println!("gamma_minus    {:.6e}", o.detection.gamma_minus);
    println!("decision       {:+}", o.detection.decision);
    println!("bit_error      {}", o.bit_error() as u8);
    println!("aoa_deg        {:.4}", o.aoa_deg);
    println!("rank_r0        {}", o.rank);
    println!("null_depth_db  {:.2}", o.null_depth_db);
    Ok(())
}

fn spectrum(common: Common, print_peak: bool) -> Result<(), Failure> {
    if !print_peak && common.out.is_none() {
        return Err(Failure::Config("spectrum-dump needs --out".into()));
    }
    let cfg = load(&common)?;
    let scenario = cfg.scenario.resolve()?;
    let ctx = TrialContext::new(
        scenario.clone(),
        ReceiverOptions {
            aoa_mode: ambc::config::AoaMode::PerCodeword,
            ..ReceiverOptions::from_config(&cfg)
        },
        cfg.master_seed,
        0,
    )?;
    let mut rng = trial_rng(cfg.master_seed, 0, 0);
    let frame = synthesize_codeword(&ctx.model, 1, &ctx.pair, &mut rng)?;
    let grid = angle_grid(cfg.scenario.grid_step_deg)?;
    let spec = bartlett_spectrum(&sample_covariance(&frame.samples)?, &grid, &scenario.array)?;

    if let Some(out) = &common.out {
        let csv_err = |e: csv::Error| Failure::Runtime(format!("{}: {e}", out.display()));
        let mut w = csv::Writer::from_path(out).map_err(csv_err)?;
        w.write_record(["angle_deg", "power"]).map_err(csv_err)?;
        for (a, p) in spec.grid_degrees.iter().zip(&spec.power) {
            w.write_record([a.to_string(), p.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    }
    if print_peak {
        let est = estimate_aoa(
            &frame.samples,
            cfg.scenario.grid_step_deg,
            1,
            &scenario.array,
        )?;
        println!("peak_deg       {:.2}", est.primary());
        println!("peak_to_mean   {:.3}", est.peak_to_mean);
        if est.low_confidence {
            println!("low_confidence: peak-to-mean ratio below 2, no dominant source");
        }
    }
    Ok(())
}
