//! Command-line front end for the vowelspace library.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use vowelspace::features::Estimator;
use vowelspace::par::Execution;
use vowelspace::pipeline::{
    emit_reports, load_results, read_annotations, read_manifest, run_cohort, run_manual,
    run_recording, PipelineConfig, RecordingResult,
};
use vowelspace::synth::{synth_cohort, write_cohort, CohortSpec};

#[derive(Parser)]
#[command(name = "vowelspace", version, about = "Corner-vowel articulation features from speech recordings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Automatic features for one recording and its posteriorgram.
    Analyze {
        wav: PathBuf,
        posteriorgram: PathBuf,
        /// Write the result as JSON here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        opts: ConfigArgs,
    },
    /// Features from hand-annotated vowel segments.
    Manual {
        wav: PathBuf,
        annotations: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        opts: ConfigArgs,
    },
    /// Every recording in a manifest, group statistics and reports.
    Cohort {
        manifest: PathBuf,
        /// Report directory.
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        opts: ConfigArgs,
    },
    /// Write a synthetic cohort (WAVs, posteriorgrams, annotations, manifest).
    Synth {
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        speakers: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        tokens_per_vowel: usize,
        #[arg(long, default_value_t = 0.6)]
        lambda_max: f64,
    },
    /// Re-render reports from a results.json written by `cohort`.
    Report {
        results: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Print the effective configuration as TOML.
    Config {
        #[command(flatten)]
        opts: ConfigArgs,
    },
}

/// Config file plus per-key overrides.
#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Top-k depth of the posterior criterion.
    #[arg(long)]
    k: Option<usize>,
    /// Posterior threshold of the top-k criterion.
    #[arg(long)]
    alpha: Option<f64>,
    /// Use only AA, IY and UW for selection.
    #[arg(long)]
    corner_only: bool,
    /// Comma-separated estimators, e.g. mean,p50,p70,p90.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    /// Drop frames outside the error boundary before aggregation.
    #[arg(long)]
    exclude_flagged: bool,
    /// Silence-trim threshold in dB relative to the loudest window.
    #[arg(long, allow_hyphen_values = true)]
    trim_threshold_db: Option<f64>,
    /// Analyse the whole recording.
    #[arg(long)]
    no_trim: bool,
    #[arg(long)]
    max_formant_hz: Option<f64>,
    #[arg(long)]
    lpc_order: Option<usize>,
    /// Run single-threaded.
    #[arg(long)]
    sequential: bool,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(k) = self.k {
            cfg.selection.k = k;
        }
        if let Some(a) = self.alpha {
            cfg.selection.alpha = a;
        }
        if self.corner_only {
            cfg.selection.corner_only = true;
        }
        if let Some(list) = &self.estimators {
            cfg.estimators = list
                .iter()
                .map(|s| s.trim().parse::<Estimator>())
                .collect::<std::result::Result<_, _>>()?;
        }
        if self.exclude_flagged {
            cfg.screening.exclude_flagged = true;
        }
        if let Some(t) = self.trim_threshold_db {
            cfg.audio.trim_threshold_db = t;
        }
        if self.no_trim {
            cfg.audio.trim = false;
        }
        if let Some(f) = self.max_formant_hz {
            cfg.formant.max_formant_hz = f;
        }
        if let Some(p) = self.lpc_order {
            cfg.formant.lpc_order = p;
        }
        if self.sequential {
            cfg.execution = Execution::Sequential;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_result(r: &RecordingResult, json: Option<&Path>) -> Result<()> {
    for w in &r.warnings {
        warn!("{w}");
    }
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(r)?;
        std::fs::write(path, text + "\n").map_err(|e| anyhow!("{}: {e}", path.display()))?;
        info!("wrote {}", path.display());
        return Ok(());
    }
    println!(
        "{:<9}{:>10}{:>12}{:>10}{:>10}",
        "estimator", "vai", "vsa", "fcr", "f2i/f2u"
    );
    for er in &r.estimators {
        let f = &er.features;
        println!(
            "{:<9}{:>10.4}{:>12.0}{:>10.4}{:>10.4}",
            f.estimator.to_string(),
            f.vai,
            f.vsa,
            f.fcr,
            f.f2_ratio
        );
    }
    let u = &r.samples_used;
    println!("samples a/i/u: {}/{}/{}, error ratio {:.4}", u.a, u.i, u.u, r.error_ratio);
    Ok(())
}

/// Exit code 2 when some recordings failed.
fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Analyze { wav, posteriorgram, json, opts } => {
            let cfg = opts.resolve()?;
            let r = run_recording(&wav, &posteriorgram, &cfg)?;
            print_result(&r, json.as_deref())?;
        }
        Command::Manual { wav, annotations, json, opts } => {
            let cfg = opts.resolve()?;
            let segments = read_annotations(&annotations)?;
            let r = run_manual(&wav, &segments, &cfg)?;
            print_result(&r, json.as_deref())?;
        }
        Command::Cohort { manifest, out, opts } => {
            let cfg = opts.resolve()?;
            let manifest = read_manifest(&manifest)?;
            let report = run_cohort(&manifest, &cfg)?;
            for w in &report.warnings {
                warn!("{w}");
            }
            let written = emit_reports(&report, &out)?;
            println!("{} speakers, {} files written to {}", report.speakers.len(), written.len(), out.display());
            let failed = report.failures();
            if failed > 0 {
                for s in report.speakers.iter().filter(|s| s.failed()) {
                    eprintln!("failed: {}", s.speaker_id);
                }
                eprintln!("{failed} of {} speakers had failures", report.speakers.len());
                return Ok(2);
            }
        }
        Command::Synth { out, speakers, seed, tokens_per_vowel, lambda_max } => {
            let spec = CohortSpec {
                tokens_per_vowel,
                lambda_max,
                ..CohortSpec::default()
            };
            let cohort = synth_cohort(&spec, speakers, seed, Execution::Parallel)?;
            write_cohort(&cohort, &out)?;
            println!("{speakers} speakers written to {}", out.join("manifest.csv").display());
        }
        Command::Report { results, out } => {
            let report = load_results(&results)?;
            let written = emit_reports(&report, &out)?;
            println!("{} files written to {}", written.len(), out.display());
        }
        Command::Config { opts } => {
            print!("{}", opts.resolve()?.to_toml_string());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors exit 1; 2 is reserved for partial cohort failures.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            // Library errors already carry their causes in the message.
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
