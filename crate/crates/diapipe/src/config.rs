//! Flat `key = value` run configuration with protocol presets.
//!
//! Settings layer in a fixed order: built-in defaults, then the preset,
//! then the config file, then command-line overrides. A preset only fills
//! in scoring settings; it expands before any explicit key is applied, so
//! a preset plus overrides always equals the fully spelled-out config.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use diapipe_core::cluster::ClusterConfig;
use diapipe_core::pipeline::PipelineConfig;
use diapipe_core::score::ScoreConfig;
use diapipe_core::segment::{HysteresisConfig, Segment, WindowConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub window: WindowConfig,
    pub hysteresis: HysteresisConfig,
    pub cluster: ClusterConfig,
    pub score: ScoreConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            hysteresis: HysteresisConfig::default(),
            cluster: ClusterConfig::default(),
            score: ScoreConfig::default(),
        }
    }
}

pub const PRESETS: [&str; 3] = ["ami", "voxconverse", "dihard"];

impl RunConfig {
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        self.score = match name {
            "ami" => ScoreConfig::ami(),
            "voxconverse" => ScoreConfig::voxconverse(),
            "dihard" => ScoreConfig::dihard(),
            other => bail!("unknown preset {other:?}, expected one of {PRESETS:?}"),
        };
        Ok(())
    }

    /// Set one dotted key. Unknown keys and unparsable values are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn f64_of(key: &str, value: &str) -> Result<f64> {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .with_context(|| format!("{key}: bad number {value:?}"))
        }
        fn usize_of(key: &str, value: &str) -> Result<usize> {
            value.parse().with_context(|| format!("{key}: bad count {value:?}"))
        }
        fn bool_of(key: &str, value: &str) -> Result<bool> {
            match value {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => bail!("{key}: expected true or false, got {value:?}"),
            }
        }
        match key {
            "window.width_s" => self.window.width_s = f64_of(key, value)?,
            "window.step_s" => self.window.step_s = f64_of(key, value)?,
            "hysteresis.theta_on" => self.hysteresis.theta_on = f64_of(key, value)?,
            "hysteresis.theta_off" => self.hysteresis.theta_off = f64_of(key, value)?,
            "hysteresis.min_dur_s" => self.hysteresis.min_dur_s = f64_of(key, value)?,
            "hysteresis.max_gap_s" => self.hysteresis.max_gap_s = f64_of(key, value)?,
            "cluster.top_k" => self.cluster.top_k = usize_of(key, value)?,
            "cluster.max_speakers" => self.cluster.max_speakers = usize_of(key, value)?,
            "cluster.kmeans_restarts" => self.cluster.kmeans_restarts = usize_of(key, value)?,
            "cluster.kmeans_iters" => self.cluster.kmeans_iters = usize_of(key, value)?,
            "cluster.row_normalize" => self.cluster.row_normalize = bool_of(key, value)?,
            "cluster.seed" => {
                self.cluster.seed = value.parse().with_context(|| format!("{key}: bad seed {value:?}"))?
            }
            "score.collar_s" => self.score.collar_s = f64_of(key, value)?,
            "score.skip_overlap" => self.score.skip_overlap = bool_of(key, value)?,
            other => bail!("unknown key {other:?}"),
        }
        Ok(())
    }

    /// Apply a config file body. A `preset` key expands before the file's
    /// other keys regardless of where it appears.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut pairs: Vec<(usize, &str, &str)> = Vec::new();
        let mut preset: Option<(usize, &str)> = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected key = value, got {line:?}", i + 1);
            };
            let (key, value) = (key.trim(), value.trim());
            if key == "preset" {
                if preset.is_some() {
                    bail!("line {}: duplicate preset", i + 1);
                }
                preset = Some((i + 1, value));
            } else {
                pairs.push((i + 1, key, value));
            }
        }
        if let Some((line, name)) = preset {
            self.apply_preset(name).with_context(|| format!("line {line}"))?;
        }
        for (line, key, value) in pairs {
            self.set(key, value).with_context(|| format!("line {line}"))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        self.hysteresis.validate()?;
        self.cluster.validate()?;
        self.score.validate()?;
        Ok(())
    }

    pub fn pipeline_config(&self, oracle_vad: Option<Vec<Segment>>, oracle_n: Option<usize>) -> PipelineConfig {
        PipelineConfig {
            window: self.window,
            hysteresis: self.hysteresis,
            cluster: self.cluster,
            oracle_vad,
            oracle_n,
        }
    }
}

/// Command-line configuration inputs, already parsed from flags.
#[derive(Debug, Default, Clone)]
pub struct ConfigSources<'a> {
    pub config_path: Option<&'a Path>,
    pub preset: Option<&'a str>,
    pub seed: Option<u64>,
    /// Repeated `key=value` overrides, applied last in order.
    pub sets: &'a [String],
}

/// Layer all configuration sources over the defaults.
///
/// A `--preset` flag replaces any preset named in the file, and still
/// expands before the file's explicit keys.
pub fn load(sources: &ConfigSources) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let text = match sources.config_path {
        Some(path) => {
            Some(fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?)
        }
        None => None,
    };
    if let Some(name) = sources.preset {
        cfg.apply_preset(name)?;
    }
    if let Some(text) = text {
        let mut from_file = cfg;
        if sources.preset.is_some() {
            // Strip the file's preset line so the flag wins.
            let stripped: String = text
                .lines()
                .filter(|l| {
                    let head = l.split('#').next().unwrap_or("");
                    head.split('=').next().map(str::trim) != Some("preset")
                })
                .map(|l| format!("{l}\n"))
                .collect();
            from_file.apply_text(&stripped)
        } else {
            from_file.apply_text(&text)
        }
        .with_context(|| format!("in config {}", sources.config_path.unwrap().display()))?;
        cfg = from_file;
    }
    for kv in sources.sets {
        let Some((key, value)) = kv.split_once('=') else {
            bail!("--set expects key=value, got {kv:?}");
        };
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = sources.seed {
        cfg.cluster.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}
