use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::EncoderConfig;
use crate::miner::MinerConfig;
use crate::selection::SelectorConfig;
use crate::svm::SvmConfig;
use crate::transactions::WindowConfig;

/// Which subjects train. Exactly one of the two lists is given; the other
/// side is its complement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_subjects: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_subjects: Option<Vec<u32>>,
}

impl SplitSpec {
    pub fn train(subjects: Vec<u32>) -> Self {
        SplitSpec {
            train_subjects: Some(subjects),
            test_subjects: None,
        }
    }

    pub fn test(subjects: Vec<u32>) -> Self {
        SplitSpec {
            train_subjects: None,
            test_subjects: Some(subjects),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.train_subjects, &self.test_subjects) {
            (Some(s), None) | (None, Some(s)) if !s.is_empty() => {
                let mut sorted = s.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != s.len() {
                    return Err(Error::Config("split lists a subject twice".into()));
                }
                Ok(())
            }
            _ => Err(Error::Config(
                "split needs exactly one non-empty list: train_subjects or test_subjects".into(),
            )),
        }
    }

    pub fn is_train(&self, subject: u32) -> bool {
        match (&self.train_subjects, &self.test_subjects) {
            (Some(train), _) => train.contains(&subject),
            (None, Some(test)) => !test.contains(&subject),
            (None, None) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub features: EncoderConfig,
    pub windows: WindowConfig,
    pub mining: MinerConfig,
    pub selection: SelectorConfig,
    #[serde(default)]
    pub svm: SvmConfig,
    pub split: SplitSpec,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.windows.validate()?;
        self.mining.validate()?;
        self.selection.validate()?;
        self.svm.validate()?;
        self.split.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// MSR DailyActivity3D protocol: subjects 1-5 train, 6-10 test.
    pub fn daily_activity() -> Self {
        PipelineConfig {
            seed: 0,
            features: EncoderConfig::new(0.15, 600).expect("valid preset"),
            windows: WindowConfig {
                window: 3,
                stride: 1,
            },
            mining: MinerConfig {
                min_support: 15,
                max_support: 180,
            },
            selection: SelectorConfig {
                k: 30000,
                max_candidates: None,
            },
            svm: SvmConfig::default(),
            split: SplitSpec::train(vec![1, 2, 3, 4, 5]),
        }
    }

    /// MSR ActionPairs3D protocol: the first five actors test.
    pub fn action_pairs() -> Self {
        PipelineConfig {
            seed: 0,
            features: EncoderConfig::new(0.11, 1000).expect("valid preset"),
            windows: WindowConfig {
                window: 4,
                stride: 1,
            },
            mining: MinerConfig {
                min_support: 3,
                max_support: 100,
            },
            selection: SelectorConfig {
                k: 10000,
                max_candidates: None,
            },
            svm: SvmConfig::default(),
            split: SplitSpec::test(vec![1, 2, 3, 4, 5]),
        }
    }

    /// Desk-scale settings for the synthetic generator's default dataset.
    pub fn synthetic() -> Self {
        PipelineConfig {
            seed: 7,
            features: EncoderConfig::new(0.15, 200).expect("valid preset"),
            windows: WindowConfig {
                window: 3,
                stride: 1,
            },
            mining: MinerConfig {
                min_support: 3,
                max_support: 60,
            },
            selection: SelectorConfig {
                k: 200,
                max_candidates: None,
            },
            svm: SvmConfig::default(),
            split: SplitSpec::train(vec![1, 2, 3]),
        }
    }
}
