//! Flat key=value configuration files.
//!
//! Every key is schema-checked and type-checked at load; unknown keys abort
//! before any work happens. `RXPJ_SEED` in the environment overrides the
//! seed from both the file and the defaults.

use std::path::{Path, PathBuf};

use rxnjudge_core::config::PipelineConfig;
use rxnjudge_core::datasets::LabelMode;

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    pub pipeline: PipelineConfigWrapper,
    pub lexicon_path: Option<PathBuf>,
    pub checkpoint_path: Option<PathBuf>,
    pub rules_path: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub cap: Option<usize>,
    pub label_mode: Option<LabelMode>,
}

/// Newtype so `FileConfig` can derive Default with the pipeline defaults.
#[derive(Debug, Clone, Default)]
pub struct PipelineConfigWrapper(pub PipelineConfig);

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(format!("{key}: expected true/false, got `{value}`")),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse `{value}`"))
}

pub fn parse_config(text: &str) -> Result<FileConfig, String> {
    let mut cfg = FileConfig::default();
    let p = &mut cfg.pipeline.0;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "embedding_dim" => p.embedding_dim = parse_num(key, value)?,
            "hidden_dim" => p.hidden_dim = parse_num(key, value)?,
            "max_len" => p.max_len = parse_num(key, value)?,
            "threshold" => p.threshold = parse_num(key, value)?,
            "use_rsd" => p.use_rsd = parse_bool(key, value)?,
            "use_dlg" => p.use_dlg = parse_bool(key, value)?,
            "seed" => p.seed = parse_num(key, value)?,
            "epochs" => p.epochs = parse_num(key, value)?,
            "batch_size" => p.batch_size = parse_num(key, value)?,
            "learning_rate" => p.learning_rate = parse_num(key, value)?,
            "lexicon_max_n" => p.lexicon_max_n = parse_num(key, value)?,
            "lexicon_threshold" => p.lexicon_threshold = parse_num(key, value)?,
            "lexicon_min_count" => p.lexicon_min_count = parse_num(key, value)?,
            "lexicon_path" => cfg.lexicon_path = Some(PathBuf::from(value)),
            "checkpoint_path" => cfg.checkpoint_path = Some(PathBuf::from(value)),
            "rules_path" => cfg.rules_path = Some(PathBuf::from(value)),
            "out_dir" => cfg.out_dir = Some(PathBuf::from(value)),
            "cap" => cfg.cap = Some(parse_num(key, value)?),
            "label_mode" => {
                cfg.label_mode = Some(match value {
                    "labeled" => LabelMode::Labeled,
                    "positive" => LabelMode::FixedPositive,
                    "negative" => LabelMode::FixedNegative,
                    _ => {
                        return Err(format!(
                            "label_mode: expected labeled/positive/negative, got `{value}`"
                        ))
                    }
                })
            }
            _ => return Err(format!("unknown config key `{key}`")),
        }
    }
    Ok(cfg)
}

/// Load the config file (or defaults), then apply the `RXPJ_SEED` override.
pub fn load_config(path: Option<&Path>) -> Result<FileConfig, String> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            parse_config(&text)?
        }
        None => FileConfig::default(),
    };
    if let Ok(seed) = std::env::var("RXPJ_SEED") {
        cfg.pipeline.0.seed = seed
            .parse()
            .map_err(|_| format!("RXPJ_SEED: cannot parse `{seed}` as an integer"))?;
    }
    Ok(cfg)
}
