//! `diapipe`: single-pass speaker diarization from precomputed features.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use diapipe::config::{self, ConfigSources, RunConfig};
use diapipe::run::{self, CsvTiming};

#[derive(Parser)]
#[command(name = "diapipe", version, about = "Voice activity detection, diarization, scoring and logit analysis over FMV1 feature files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration flags shared by the pipeline commands.
///
/// Precedence, lowest to highest: built-in defaults, --preset,
/// --config file, --set overrides, --seed.
#[derive(Args)]
struct ConfigFlags {
    /// Flat `key = value` config file with dotted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scoring protocol preset: ami, voxconverse, or dihard.
    #[arg(long)]
    preset: Option<String>,
    /// Seed for every random choice in the run (default 42).
    #[arg(long)]
    seed: Option<u64>,
    /// Override one config key, e.g. --set hysteresis.theta_on=0.5.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl ConfigFlags {
    fn load(&self) -> Result<RunConfig> {
        config::load(&ConfigSources {
            config_path: self.config.as_deref(),
            preset: self.preset.as_deref(),
            seed: self.seed,
            sets: &self.sets,
        })
    }
}

/// Timing flags for CSV feature files, which carry none of their own.
#[derive(Args)]
struct TimingFlags {
    /// Seconds per frame for CSV inputs.
    #[arg(long, default_value_t = 0.01)]
    frame_hop: f64,
    /// Start time of the first frame for CSV inputs.
    #[arg(long, default_value_t = 0.0)]
    start: f64,
}

impl TimingFlags {
    fn timing(&self) -> CsvTiming {
        CsvTiming { frame_hop_s: self.frame_hop, start_s: self.start }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Detect speech and write `onset offset` segments.
    Vad {
        /// FMV1 (or CSV) feature file.
        #[arg(long)]
        features: PathBuf,
        /// Keyed FMV1 parameter file.
        #[arg(long)]
        params: PathBuf,
        /// Segment file to write; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump the aggregated per-frame logit track here.
        #[arg(long)]
        logits: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigFlags,
        #[command(flatten)]
        timing: TimingFlags,
    },
    /// Run the full pipeline and write an RTTM hypothesis.
    Diarize {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        params: PathBuf,
        /// Skip internal VAD and use these ground-truth segments.
        #[arg(long)]
        oracle_vad: Option<PathBuf>,
        /// Skip speaker-count estimation and use this count.
        #[arg(long)]
        oracle_n: Option<usize>,
        /// Recording id for the RTTM; defaults to the feature file stem.
        #[arg(long)]
        recording_id: Option<String>,
        /// RTTM file to write; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigFlags,
        #[command(flatten)]
        timing: TimingFlags,
    },
    /// Score hypotheses against references and print a table.
    Score {
        /// Reference RTTM (file mode; pair with --hyp).
        #[arg(long = "ref")]
        ref_rttm: Option<PathBuf>,
        /// Hypothesis RTTM (file mode).
        #[arg(long)]
        hyp: Option<PathBuf>,
        /// Corpus manifest (batch mode): diarizes and scores each entry.
        #[arg(long, conflicts_with_all = ["ref_rttm", "hyp"])]
        manifest: Option<PathBuf>,
        /// Parameter file, required with --manifest.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Report VAD error (FA/MS/VAD) instead of DER.
        #[arg(long)]
        vad: bool,
        /// Directory for per-recording hypothesis RTTMs in batch mode.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Table file to write; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigFlags,
    },
    /// Summarize logit tracks as CSV.
    Analyze {
        #[command(subcommand)]
        mode: AnalyzeCommand,
    },
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Mean/std/count of the logit per frame label.
    Group {
        /// Single-column FMV1 logit track.
        #[arg(long)]
        track: PathBuf,
        /// One label per line, same length as the track.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean/std logit profile around per-track boundary frames.
    Transition {
        /// Single-column FMV1 logit tracks, one per boundary.
        #[arg(long, num_args = 1.., required = true)]
        tracks: Vec<PathBuf>,
        /// One boundary frame index per line, parallel to --tracks.
        #[arg(long)]
        boundaries: PathBuf,
        /// Context frames kept on each side of the boundary.
        #[arg(long, default_value_t = 40)]
        half_width: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Vad { features, params, out, logits, cfg, timing } => {
            let cfg = cfg.load()?;
            run::run_vad(&features, &params, &cfg, timing.timing(), out.as_deref(), logits.as_deref())
        }
        Command::Diarize {
            features,
            params,
            oracle_vad,
            oracle_n,
            recording_id,
            out,
            cfg,
            timing,
        } => {
            let cfg = cfg.load()?;
            run::run_diarize(
                &features,
                &params,
                &cfg,
                timing.timing(),
                oracle_vad.as_deref(),
                oracle_n,
                recording_id.as_deref(),
                out.as_deref(),
            )
        }
        Command::Score { ref_rttm, hyp, manifest, params, vad, out_dir, out, cfg } => {
            let cfg = cfg.load()?;
            match (manifest, ref_rttm, hyp) {
                (Some(manifest), None, None) => {
                    let Some(params) = params else {
                        bail!("--manifest requires --params to diarize each recording");
                    };
                    run::run_score_manifest(
                        &manifest,
                        &params,
                        &cfg,
                        vad,
                        out_dir.as_deref(),
                        out.as_deref(),
                    )
                }
                (None, Some(ref_rttm), Some(hyp)) => {
                    run::run_score_files(&ref_rttm, &hyp, &cfg, vad, out.as_deref())
                }
                _ => bail!("score needs either --manifest or both --ref and --hyp"),
            }
        }
        Command::Analyze { mode } => match mode {
            AnalyzeCommand::Group { track, labels, out } => {
                run::run_analyze_group(&track, &labels, out.as_deref())
            }
            AnalyzeCommand::Transition { tracks, boundaries, half_width, out } => {
                let skipped =
                    run::run_analyze_transition(&tracks, &boundaries, half_width, out.as_deref())?;
                if skipped > 0 {
                    eprintln!("warning: {skipped} track(s) skipped for missing boundary context");
                }
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
