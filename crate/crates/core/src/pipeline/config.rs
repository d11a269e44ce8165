use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bargein::BargeInConfig;
use crate::clients::ClientConfig;
use crate::crossturn::CrossTurnConfig;
use crate::disfluency::DisfluencyConfig;
use crate::speakers::PoolWeights;
use crate::turn_taking::{Strategy, StrategyConfig};
use crate::{Error, Result};

/// Prefix of the environment variables that override client endpoints,
/// e.g. `DIALOGUEKIT_TTS_ENDPOINT`.
pub const ENV_PREFIX: &str = "DIALOGUEKIT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub crossturn: bool,
    pub bargein: bool,
    pub disfluency: bool,
    pub emotion: bool,
    pub speakers: bool,
    pub synthesis: bool,
    pub validation: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            crossturn: true,
            bargein: true,
            disfluency: true,
            emotion: true,
            speakers: true,
            synthesis: true,
            validation: true,
        }
    }
}

impl StageToggles {
    pub fn none() -> Self {
        StageToggles {
            crossturn: false,
            bargein: false,
            disfluency: false,
            emotion: false,
            speakers: false,
            synthesis: false,
            validation: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.75,
            valid: 0.10,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self> {
        let r = SplitRatios { train, valid, test };
        r.validate()?;
        Ok(r)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.valid, self.test]
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.as_array();
        if a.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Config(format!("split ratios must be non-negative, got {a:?}")));
        }
        let sum: f64 = a.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios must sum to 1, got {sum}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeakerConfig {
    pub weights: PoolWeights,
    /// JSON list of candidate user-voice profiles.
    pub profiles: Option<PathBuf>,
    /// JSON list of the ten assistant-voice profiles.
    pub assistant_profiles: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    /// Dialogues sampled for the ASR intelligibility check.
    pub wer_sample: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig { wer_sample: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientConfigs {
    pub chat: ClientConfig,
    pub tts: ClientConfig,
    pub asr: ClientConfig,
    pub embed: ClientConfig,
    pub embed_dim: Option<usize>,
}

impl ClientConfigs {
    fn each_mut(&mut self) -> [(&'static str, &mut ClientConfig); 4] {
        [
            ("CHAT", &mut self.chat),
            ("TTS", &mut self.tts),
            ("ASR", &mut self.asr),
            ("EMBED", &mut self.embed),
        ]
    }
}

/// Everything a run needs besides the corpus and the service handles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub global_seed: u64,
    /// Worker threads for dialogue-level parallelism; 0 uses every core.
    pub workers: usize,
    pub stages: StageToggles,
    pub crossturn: CrossTurnConfig,
    pub bargein: BargeInConfig,
    pub disfluency: DisfluencyConfig,
    pub speakers: SpeakerConfig,
    pub turn_taking: StrategyConfig,
    pub clients: ClientConfigs,
    pub split: SplitRatios,
    pub validation: ValidationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            global_seed: 0,
            workers: 0,
            stages: StageToggles::default(),
            crossturn: CrossTurnConfig::default(),
            bargein: BargeInConfig::default(),
            disfluency: DisfluencyConfig::default(),
            speakers: SpeakerConfig::default(),
            turn_taking: StrategyConfig::defaults(Strategy::LinearWeighted),
            clients: ClientConfigs::default(),
            split: SplitRatios::default(),
            validation: ValidationConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses JSON when the path ends in `.json`, TOML otherwise, and validates.
    /// Relative profile paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg = if is_json {
            Self::from_json(&body)?
        } else {
            Self::from_toml(&body)?
        };
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.speakers.profiles, &mut cfg.speakers.assistant_profiles]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.crossturn.validate()?;
        self.bargein.validate()?;
        self.disfluency.validate()?;
        self.speakers.weights.normalized()?;
        self.turn_taking.validate()?;
        self.split.validate()?;
        let mut clients = self.clients.clone();
        for (name, c) in clients.each_mut() {
            c.validate()
                .map_err(|e| Error::Config(format!("clients.{}: {e}", name.to_lowercase())))?;
        }
        Ok(())
    }

    /// Replaces client endpoints with `DIALOGUEKIT_{CHAT,TTS,ASR,EMBED}_ENDPOINT`
    /// when set. `lookup` is usually `|k| std::env::var(k).ok()`.
    pub fn apply_env_overrides(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        for (name, c) in self.clients.each_mut() {
            if let Some(v) = lookup(&format!("{ENV_PREFIX}_{name}_ENDPOINT")) {
                log::info!("{name} endpoint overridden from the environment");
                c.endpoint = v;
            }
        }
    }
}
