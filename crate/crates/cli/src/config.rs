//! Resolving an [`ExperimentConfig`] from a profile, a flat JSON file and overrides.

use std::path::Path;

use fpnoise_core::{Accumulator, ExperimentConfig, PrecisionFormat, ReductionSchedule};

use crate::error::CliError;

/// Keys accepted in config files and `--set` overrides.
pub const CONFIG_KEYS: &[&str] = &[
    "d_in",
    "d_out",
    "batch",
    "n_trials",
    "precision",
    "schedule_single",
    "schedule_batched",
    "seed",
    "accumulator",
    "widened_accumulator",
    "resample_weights",
    "flush_subnormals",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Profile {
    /// 512 x 1024, batch 16, 10 000 trials.
    #[default]
    Full,
    /// 128 x 256, batch 16, 1 000 trials.
    Desk,
}

/// A config under construction. The seed has no default.
#[derive(Debug, Clone)]
pub struct ConfigBuilder {
    cfg: ExperimentConfig,
    seed: Option<u64>,
}

impl ConfigBuilder {
    pub fn new(profile: Profile) -> Self {
        let cfg = match profile {
            Profile::Full => ExperimentConfig::full_scale(PrecisionFormat::Float16, 0),
            Profile::Desk => ExperimentConfig::desk_scale(PrecisionFormat::Float16, 0),
        };
        Self { cfg, seed: None }
    }

    /// Applies one `key = value` override. Hyphens in `key` are read as underscores.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let bad = |reason: String| CliError::Config(format!("invalid value `{value}` for `{key}`: {reason}"));
        let uint = |v: &str| v.parse::<usize>().map_err(|e| bad(e.to_string()));
        let flag = |v: &str| v.parse::<bool>().map_err(|e| bad(e.to_string()));
        match key.as_str() {
            "d_in" => self.cfg.d_in = uint(value)?,
            "d_out" => self.cfg.d_out = uint(value)?,
            "batch" => self.cfg.batch = uint(value)?,
            "n_trials" => self.cfg.n_trials = uint(value)?,
            "precision" => self.cfg.precision = value.parse().map_err(bad)?,
            "schedule_single" => self.cfg.schedule_single = value.parse::<ReductionSchedule>().map_err(bad)?,
            "schedule_batched" => self.cfg.schedule_batched = value.parse::<ReductionSchedule>().map_err(bad)?,
            "seed" => self.seed = Some(value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?),
            "accumulator" => self.cfg.accumulator = value.parse::<Accumulator>().map_err(bad)?,
            "widened_accumulator" => {
                if flag(value)? {
                    self.cfg.accumulator = Accumulator::Wide;
                } else if self.cfg.accumulator == Accumulator::Wide {
                    self.cfg.accumulator = Accumulator::default();
                }
            }
            "resample_weights" => self.cfg.resample_weights = flag(value)?,
            "flush_subnormals" => self.cfg.flush_subnormals = flag(value)?,
            other => {
                return Err(CliError::Config(format!(
                    "unknown config key `{other}` (expected one of: {})",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies a `KEY=VALUE` string.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{pair}` is not of the form KEY=VALUE")))?;
        self.set(k, v)
    }

    /// Applies every entry of a flat JSON object.
    pub fn merge_json(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: not valid JSON: {e}")))?;
        let map = doc
            .as_object()
            .ok_or_else(|| CliError::Config(format!("{origin}: expected a flat JSON object")))?;
        for (k, v) in map {
            let text = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                _ => return Err(CliError::Config(format!("{origin}: value of `{k}` must be a string, number or bool"))),
            };
            self.set(k, &text)?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.merge_json(&text, &path.display().to_string())
    }

    pub fn build(self) -> Result<ExperimentConfig, CliError> {
        let seed = self
            .seed
            .ok_or_else(|| CliError::Config("no seed given; pass --seed or set `seed` in the config file".into()))?;
        let cfg = ExperimentConfig { seed, ..self.cfg };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}
