//! Batch pipeline for crackling-noise events: analyze waveform files,
//! fit cross-event scaling, generate synthetic quench data, evaluate the
//! closed-form predictors, and render report figures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;
mod output;
mod svg;

use crackle::AnalysisConfig;

/// Exit code for "not enough data to do the job".
pub const EXIT_INSUFFICIENT: u8 = 3;
/// Exit code for internal numeric failures.
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "crackle", version, about = "Crackling-noise analysis pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Analysis config file (flat key = value lines)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory; all files land here
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// RNG seed (overrides the config's rng_seed)
    #[arg(long, global = true, visible_alias = "rng-seed")]
    pub seed: Option<u64>,

    /// Omit timestamps and wall-clock timings from every output
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    /// Override: correlation window length in samples
    #[arg(long, global = true)]
    pub window_length: Option<usize>,

    /// Override: stride between windows in samples
    #[arg(long, global = true)]
    pub stride: Option<usize>,

    /// Override: edge threshold on windowed Pearson correlation
    #[arg(long, global = true)]
    pub similarity_threshold: Option<f64>,

    /// Override: moving-average width (frames) for degree smoothing
    #[arg(long, global = true)]
    pub smoothing_width: Option<usize>,

    /// Override: impulse threshold in robust sigmas
    #[arg(long, global = true)]
    pub impulse_k_sigma: Option<f64>,

    /// Override: max relative xi variation over a plateau
    #[arg(long, global = true)]
    pub freeze_tolerance: Option<f64>,

    /// Override: |m| gate for the frozen plateau
    #[arg(long, global = true)]
    pub m_threshold: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Constructed,
    Phi4,
}

#[derive(Subcommand)]
pub enum Command {
    /// Analyze one or more event files end to end
    Analyze {
        /// Event files (.csv text or .bin binary)
        #[arg(required = true)]
        events: Vec<PathBuf>,
        /// Also dump per-frame network metrics per event
        #[arg(long)]
        dump_frames: bool,
        /// Also dump the adjacency of every frame (large)
        #[arg(long)]
        dump_adjacency: bool,
    },
    /// Fit the frozen-length vs ramp-rate power law from a scaling CSV
    Fit {
        /// CSV with event_id, ramp_rate, xi_frozen, quality rows
        scaling_csv: PathBuf,
        /// Optional CSV with event_id, rhat, ramp_rate rows for the
        /// exponent-pair estimate
        #[arg(long)]
        rhat_csv: Option<PathBuf>,
    },
    /// Generate synthetic quench data with ground truth
    Simulate {
        #[arg(long, value_enum, default_value = "constructed")]
        model: ModelArg,
        /// Chain length: nodes at the largest programmed xi
        /// (constructed) or ring sites (phi4)
        #[arg(long)]
        chain_length: Option<usize>,
        /// constructed: explicit ramp rates (1/s), comma separated
        #[arg(long, value_delimiter = ',')]
        rates: Vec<f64>,
        /// constructed: number of log-spaced rates when --rates is absent
        #[arg(long, default_value_t = 30)]
        n_events: usize,
        #[arg(long, default_value_t = 1.0e4)]
        rate_min: f64,
        #[arg(long, default_value_t = 1.0e6)]
        rate_max: f64,
        /// constructed: programmed exponent b*
        #[arg(long, default_value_t = 1.0 / 3.0)]
        exponent: f64,
        /// constructed: xi at unit ramp rate (default places xi ~ 28
        /// nodes at rate_min for the default exponent)
        #[arg(long)]
        xi0: Option<f64>,
        #[arg(long, default_value_t = 12)]
        plateau_length: usize,
        /// constructed: lognormal sigma of multiplicative xi noise
        #[arg(long, default_value_t = 0.0)]
        xi_noise: f64,
        /// constructed: also analyze the generated frame series and emit
        /// reports plus the scaling CSV
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        analyze: bool,
        /// phi4: quench times, comma separated
        #[arg(long, value_delimiter = ',')]
        tau_q: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        /// phi4: integration step
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// phi4: thermal noise amplitude
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        /// constructed: write waveform event files in binary format
        #[arg(long)]
        binary_events: bool,
    },
    /// Evaluate the closed-form quench predictors
    Predict {
        #[arg(long, default_value_t = 0.5)]
        nu: f64,
        #[arg(long, default_value_t = 1.0)]
        z: f64,
        #[arg(long, default_value_t = 1.0)]
        tau0: f64,
        #[arg(long, default_value_t = 1.0)]
        xi0: f64,
        /// S-phase ramp duration the predictions are evaluated at
        #[arg(long)]
        tau_s: f64,
        /// Also evaluate the relaxation time at this control parameter
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Render SVG panels from an analyzed event directory
    Report {
        /// Directory holding report.json, profile.csv, kstring.csv
        event_dir: PathBuf,
    },
}

impl Cli {
    /// Resolve the analysis configuration from file + flag overrides.
    pub fn analysis_config(&self) -> anyhow::Result<AnalysisConfig> {
        let mut cfg = match &self.config {
            Some(path) => AnalysisConfig::from_file(path)?,
            None => AnalysisConfig::default(),
        };
        if let Some(v) = self.window_length {
            cfg.window_length = v;
        }
        if let Some(v) = self.stride {
            cfg.stride = v;
        }
        if let Some(v) = self.similarity_threshold {
            cfg.similarity_threshold = v;
        }
        if let Some(v) = self.smoothing_width {
            cfg.smoothing_width = v;
        }
        if let Some(v) = self.impulse_k_sigma {
            cfg.impulse_k_sigma = v;
        }
        if let Some(v) = self.freeze_tolerance {
            cfg.freeze_tolerance = v;
        }
        if let Some(v) = self.m_threshold {
            cfg.m_threshold = v;
        }
        if let Some(v) = self.seed {
            cfg.rng_seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: could not set --jobs: {e}");
            return ExitCode::from(2);
        }
    }

    let result = match &cli.command {
        Command::Analyze {
            events,
            dump_frames,
            dump_adjacency,
        } => commands::analyze::run(&cli, events, *dump_frames, *dump_adjacency),
        Command::Fit {
            scaling_csv,
            rhat_csv,
        } => commands::fit::run(&cli, scaling_csv, rhat_csv.as_deref()),
        Command::Simulate { .. } => commands::simulate::run(&cli),
        Command::Predict {
            nu,
            z,
            tau0,
            xi0,
            tau_s,
            eps,
        } => commands::predict::run(&cli, *nu, *z, *tau0, *xi0, *tau_s, *eps),
        Command::Report { event_dir } => commands::report::run(&cli, event_dir),
    };

    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            // numeric failures surface distinctly from plumbing errors
            let numeric = err
                .downcast_ref::<crackle::Error>()
                .map(|e| {
                    matches!(
                        e,
                        crackle::Error::NumericalBlowup { .. }
                            | crackle::Error::EstimationFailed(_)
                    )
                })
                .unwrap_or(false);
            ExitCode::from(if numeric { EXIT_NUMERIC } else { 1 })
        }
    }
}
