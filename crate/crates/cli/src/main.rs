use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use vprir::harness::{
    load_wav, report, run_experiment, run_method, save_wav, synth_dataset, ExperimentConfig, Method,
};
use vprir::metrics::compare;

#[derive(Parser)]
#[command(name = "vprir", version, about = "Room impulse response estimation under a physical prior")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (responses, dry signal, noise, manifest).
    Synth(ConfigArgs),
    /// Run every method on every trial of a dataset and summarize.
    Run(ConfigArgs),
    /// Estimate a response from one observation/source pair.
    Estimate(EstimateArgs),
    /// Compare an estimated response against a reference.
    Metrics(MetricsArgs),
    /// Rebuild summary tables and curve files from recorded trials.
    Report(ReportArgs),
    /// Print a configuration file with every key.
    Config(ConfigArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Desk,
    Full,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML configuration file; flags given here take precedence.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Preset used when no configuration file is given.
    #[arg(long, value_enum, default_value = "desk")]
    profile: Profile,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sample_rate: Option<u32>,
    /// Response length in samples.
    #[arg(long = "rir-len", visible_alias = "L-h")]
    rir_len: Option<usize>,
    #[arg(long)]
    duration_s: Option<f64>,
    #[arg(long)]
    n_rirs: Option<usize>,
    /// Comma-separated SNR values in dB.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Option<Vec<f64>>,
    /// Comma-separated subset of vpr, b1, b2.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    dry_dir: Option<PathBuf>,
    #[arg(long)]
    rir_dir: Option<PathBuf>,
    #[arg(long)]
    noise_dir: Option<PathBuf>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, env = "VPRIR_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => match self.profile {
                Profile::Desk => ExperimentConfig::desk(),
                Profile::Full => ExperimentConfig::full(),
            },
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        set!(cfg.seed, self.seed);
        set!(cfg.sample_rate, self.sample_rate);
        set!(cfg.duration_s, self.duration_s);
        set!(cfg.n_rirs, self.n_rirs);
        set!(cfg.snr_list_db, self.snr);
        set!(cfg.methods, self.methods);
        set!(cfg.inference.iterations, self.iterations);
        set!(cfg.inference.lr, self.lr);
        set!(cfg.workers, self.workers);
        set!(cfg.paths.data_dir, self.data_dir);
        set!(cfg.paths.out_dir, self.out_dir);
        if let Some(len) = self.rir_len {
            cfg.rir_len = len;
            cfg.inference.rir_len = len;
        }
        for (slot, value) in [
            (&mut cfg.paths.dry_dir, &self.dry_dir),
            (&mut cfg.paths.rir_dir, &self.rir_dir),
            (&mut cfg.paths.noise_dir, &self.noise_dir),
        ] {
            if value.is_some() {
                slot.clone_from(value);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// Reverberant observation (WAV).
    #[arg(long)]
    y: PathBuf,
    /// Dry source (WAV, same rate).
    #[arg(long)]
    s: PathBuf,
    /// Where to write the estimated response.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value = "vpr")]
    method: Method,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, env = "VPRIR_OUT_DIR", default_value = "results")]
    out_dir: PathBuf,
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let (mut y, fs_y) = load_wav(&args.y)?;
    let (s, fs_s) = load_wav(&args.s)?;
    if fs_y != fs_s {
        bail!("observation is sampled at {fs_y} Hz but the source at {fs_s} Hz");
    }
    // the observation must cover the full convolution support
    let want = s.len() + cfg.rir_len - 1;
    if y.len() != want {
        info!("resizing observation from {} to {want} samples", y.len());
        y.resize(want, 0.0);
    }
    let out = run_method(args.method, &y, &s, &cfg)?;
    save_wav(&args.output, &out.rir, fs_y)?;
    match out.final_loss {
        Some(loss) => println!("{}: {} samples after {} iterations, loss {loss:.6e}", args.output.display(), out.rir.len(), out.iterations_used),
        None => println!("{}: {} samples", args.output.display(), out.rir.len()),
    }
    Ok(())
}

fn metrics(args: &MetricsArgs) -> Result<()> {
    let (h_ref, fs_ref) = load_wav(&args.reference)?;
    let (h_est, fs_est) = load_wav(&args.estimate)?;
    if fs_ref != fs_est {
        bail!("reference is sampled at {fs_ref} Hz but the estimate at {fs_est} Hz");
    }
    let cfg = ExperimentConfig::default();
    let m = compare(&h_ref, &h_est, f64::from(fs_ref), &cfg.edr_stft)?;
    if args.json {
        println!("{}", serde_json::to_string(&m)?);
    } else {
        println!("Δ_RT30 (%)  {:.4}", m.delta_rt30_percent);
        println!("Δ_EDC       {:.6}", m.delta_edc);
        println!("Δ_EDR (dB)  {:.4}", m.delta_edr);
        println!("MSE (%)     {:.4}", m.mse_percent);
    }
    Ok(())
}

fn print_summary(out_dir: &Path) -> Result<()> {
    let text = std::fs::read_to_string(out_dir.join(vprir::harness::SUMMARY_TXT))
        .with_context(|| format!("reading summary in {}", out_dir.display()))?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Synth(args) => args.resolve().and_then(|cfg| {
            let m = synth_dataset(&cfg, cfg.n_rirs)?;
            println!(
                "wrote {} responses and {} trials to {}",
                m.rirs.len(),
                m.trials.len(),
                cfg.paths.data_dir.display()
            );
            Ok(())
        }),
        Command::Run(args) => args.resolve().and_then(|cfg| {
            let (records, _) = run_experiment(&cfg)?;
            let failed = records.iter().filter(|r| r.error.is_some()).count();
            println!("{} records ({failed} failed) in {}", records.len(), cfg.paths.out_dir.display());
            print_summary(&cfg.paths.out_dir)
        }),
        Command::Estimate(args) => estimate(args),
        Command::Metrics(args) => metrics(args),
        Command::Report(args) => report(&args.out_dir).map_err(Into::into).and_then(|_| print_summary(&args.out_dir)),
        Command::Config(args) => args.resolve().map(|cfg| print!("{}", cfg.to_toml_string())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
