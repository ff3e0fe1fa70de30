use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::features::Item;
use crate::miner::Pattern;
use crate::skeleton::ReferenceLengths;
use crate::svm::SvmModel;

pub const MODEL_FORMAT: &str = "flp-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredPattern {
    pub items: Vec<Item>,
    pub relevance: f64,
}

/// Everything needed to classify a new skeleton sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedModel {
    pub format: String,
    pub config: PipelineConfig,
    pub reference_lengths: ReferenceLengths,
    pub num_classes: u32,
    pub selected: Vec<StoredPattern>,
    pub svm: SvmModel,
}

impl TrainedModel {
    /// Selected patterns as bare itemsets, in selection order.
    pub fn patterns(&self) -> Vec<Pattern> {
        self.selected
            .iter()
            .map(|s| Pattern {
                items: s.items.clone(),
                support: 0,
                per_action_freq: Vec::new(),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: TrainedModel =
            serde_json::from_str(text).map_err(|e| Error::Invalid(format!("model file: {e}")))?;
        if m.format != MODEL_FORMAT {
            return Err(Error::Invalid(format!(
                "unsupported model format `{}`, expected `{MODEL_FORMAT}`",
                m.format
            )));
        }
        m.config.validate()?;
        if m.svm.dim != m.selected.len() {
            return Err(Error::Invalid(
                "model svm dimension differs from pattern count".into(),
            ));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
