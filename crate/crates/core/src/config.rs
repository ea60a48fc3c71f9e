//! Typed pipeline configuration shared by training, prediction and the
//! experiment grids.

use crate::dlg::LexiconOptions;
use crate::neural::{ModelDims, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub max_len: usize,
    /// Probability cutoff; scores at or above it predict positive.
    pub threshold: f64,
    pub use_rsd: bool,
    pub use_dlg: bool,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lexicon_max_n: usize,
    pub lexicon_threshold: f64,
    pub lexicon_min_count: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            embedding_dim: 64,
            hidden_dim: 128,
            max_len: 100,
            threshold: 0.5,
            use_rsd: true,
            use_dlg: true,
            seed: 42,
            epochs: 30,
            batch_size: 128,
            learning_rate: 1e-3,
            lexicon_max_n: 8,
            lexicon_threshold: 0.0,
            lexicon_min_count: 3,
        }
    }
}

impl PipelineConfig {
    pub fn dims(&self, vocab: usize) -> ModelDims {
        ModelDims {
            vocab,
            embed: self.embedding_dim,
            hidden: self.hidden_dim,
            max_len: self.max_len,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            clip_norm: 5.0,
            seed: self.seed,
            use_rsd: self.use_rsd,
        }
    }

    pub fn lexicon_options(&self) -> LexiconOptions {
        LexiconOptions {
            max_n: self.lexicon_max_n,
            threshold: self.lexicon_threshold,
            min_count: self.lexicon_min_count,
        }
    }

    /// Key=value echo embedded in checkpoint metadata.
    pub fn echo(&self) -> Vec<(String, String)> {
        vec![
            ("threshold".into(), self.threshold.to_string()),
            ("use_rsd".into(), self.use_rsd.to_string()),
            ("use_dlg".into(), self.use_dlg.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("epochs".into(), self.epochs.to_string()),
            ("batch_size".into(), self.batch_size.to_string()),
            ("learning_rate".into(), self.learning_rate.to_string()),
            ("lexicon_max_n".into(), self.lexicon_max_n.to_string()),
            (
                "lexicon_threshold".into(),
                self.lexicon_threshold.to_string(),
            ),
            (
                "lexicon_min_count".into(),
                self.lexicon_min_count.to_string(),
            ),
        ]
    }
}
