//! Confusion-matrix metrics, ROC/AUC, threshold sweeps and the experiment
//! grids (feature ablations and incremental training mixes).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::config::PipelineConfig;
use crate::datasets::{incremental_mix, LabeledReaction};
use crate::neural::pipeline::fit;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("empty evaluation")]
    EmptyEvaluation,
    #[error("single-class evaluation: need at least one positive and one negative label")]
    SingleClassEvaluation,
}

/// Prediction tallies against gold labels at one threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_negatives + self.false_positives + self.true_negatives
    }
}

/// Tally predictions: a score at or above the threshold predicts positive.
pub fn confusion(preds: &[(f64, bool)], threshold: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for &(score, gold) in preds {
        let predicted = score >= threshold;
        match (gold, predicted) {
            (true, true) => c.true_positives += 1,
            (true, false) => c.false_negatives += 1,
            (false, true) => c.false_positives += 1,
            (false, false) => c.true_negatives += 1,
        }
    }
    c
}

/// Precision/recall/F1 for one class. `degenerate` flags any zero
/// denominator, in which case the affected rate reports 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
}

fn class_metrics(tp: usize, fp: usize, fn_count: usize) -> ClassMetrics {
    let mut degenerate = false;
    let mut ratio = |num: usize, den: usize| -> f64 {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_count);
    let f1 = if precision + recall == 0.0 {
        degenerate = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        degenerate,
    }
}

/// ROC curve points in (false-positive rate, true-positive rate) order with
/// the trapezoid area under them.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Full scoreboard at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub positive: ClassMetrics,
    pub negative: ClassMetrics,
    pub threshold: Option<f64>,
    pub roc: Option<RocCurve>,
}

/// Accuracy plus per-class precision/recall/F1. The negative-class row swaps
/// the class roles (true negatives count as that class's hits).
pub fn metrics(c: &ConfusionCounts) -> Result<EvalReport, EvalError> {
    if c.total() == 0 {
        return Err(EvalError::EmptyEvaluation);
    }
    let accuracy = (c.true_positives + c.true_negatives) as f64 / c.total() as f64;
    Ok(EvalReport {
        counts: *c,
        accuracy,
        positive: class_metrics(c.true_positives, c.false_positives, c.false_negatives),
        negative: class_metrics(c.true_negatives, c.false_negatives, c.false_positives),
        threshold: None,
        roc: None,
    })
}

/// Confusion + metrics at a threshold in one step.
pub fn evaluate(preds: &[(f64, bool)], threshold: f64) -> Result<EvalReport, EvalError> {
    let mut report = metrics(&confusion(preds, threshold))?;
    report.threshold = Some(threshold);
    Ok(report)
}

/// ROC points from sweeping every distinct score (ties grouped into one
/// step) and the trapezoid AUC, which equals concordant-pair counting.
pub fn roc_auc(preds: &[(f64, bool)]) -> Result<RocCurve, EvalError> {
    let positives = preds.iter().filter(|(_, l)| *l).count();
    let negatives = preds.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClassEvaluation);
    }
    let mut sorted: Vec<(f64, bool)> = preds.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == score {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

/// One evaluation per threshold, plus the accuracy-maximizing threshold
/// (ties resolve to the lowest).
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<EvalReport>,
    pub best_threshold: f64,
}

/// Evaluate at thresholds k/steps for k = 1..=steps; with 10 steps that is
/// 0.1, 0.2, ..., 1.0.
pub fn threshold_sweep(preds: &[(f64, bool)], steps: usize) -> Result<SweepTable, EvalError> {
    debug_assert!(steps >= 2);
    let mut rows = Vec::with_capacity(steps);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 1..=steps {
        let threshold = k as f64 / steps as f64;
        let report = evaluate(preds, threshold)?;
        if report.accuracy > best.0 {
            best = (report.accuracy, threshold);
        }
        rows.push(report);
    }
    Ok(SweepTable {
        rows,
        best_threshold: best.1,
    })
}

/// One cell of an experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellSpec {
    Ablation { use_rsd: bool, use_dlg: bool },
    Incremental { ratio: f64 },
}

impl CellSpec {
    pub fn name(&self) -> String {
        match self {
            CellSpec::Ablation {
                use_rsd: true,
                use_dlg: true,
            } => "full".to_string(),
            CellSpec::Ablation {
                use_rsd: false,
                use_dlg: true,
            } => "no_rsd".to_string(),
            CellSpec::Ablation {
                use_rsd: true,
                use_dlg: false,
            } => "no_dlg".to_string(),
            CellSpec::Ablation { .. } => "no_rsd_no_dlg".to_string(),
            CellSpec::Incremental { ratio } => format!("mix_{ratio:.1}"),
        }
    }
}

/// The four feature cells: full, without edit tags, without segmentation,
/// without both.
pub fn ablation_grid() -> Vec<CellSpec> {
    vec![
        CellSpec::Ablation {
            use_rsd: true,
            use_dlg: true,
        },
        CellSpec::Ablation {
            use_rsd: false,
            use_dlg: true,
        },
        CellSpec::Ablation {
            use_rsd: true,
            use_dlg: false,
        },
        CellSpec::Ablation {
            use_rsd: false,
            use_dlg: false,
        },
    ]
}

/// Mixing ratios 0.1, 0.2, ..., 1.0.
pub fn incremental_grid() -> Vec<CellSpec> {
    (1..=10)
        .map(|k| CellSpec::Incremental {
            ratio: k as f64 / 10.0,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub out_dir: PathBuf,
    pub base: PipelineConfig,
    pub grid: Vec<CellSpec>,
    pub train: Vec<LabeledReaction>,
    pub dev: Vec<LabeledReaction>,
    pub test: Vec<LabeledReaction>,
    /// Extra records appended by `Incremental` cells; shuffle before calling.
    pub incremental_pool: Vec<LabeledReaction>,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: String,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

/// Render a report as `key=value` lines.
pub fn report_kv(report: &EvalReport, extra: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    for (k, v) in extra {
        let _ = writeln!(out, "{k}={v}");
    }
    if let Some(t) = report.threshold {
        let _ = writeln!(out, "threshold={t}");
    }
    let c = &report.counts;
    let _ = writeln!(out, "tp={}", c.true_positives);
    let _ = writeln!(out, "fn={}", c.false_negatives);
    let _ = writeln!(out, "fp={}", c.false_positives);
    let _ = writeln!(out, "tn={}", c.true_negatives);
    let _ = writeln!(out, "accuracy={}", report.accuracy);
    for (class, m) in [("positive", &report.positive), ("negative", &report.negative)] {
        let _ = writeln!(out, "{class}_precision={}", m.precision);
        let _ = writeln!(out, "{class}_recall={}", m.recall);
        let _ = writeln!(out, "{class}_f1={}", m.f1);
        let _ = writeln!(out, "{class}_degenerate={}", m.degenerate);
    }
    if let Some(roc) = &report.roc {
        let _ = writeln!(out, "auc={}", roc.auc);
    }
    out
}

/// ROC points as a two-column TSV (false-positive rate, true-positive rate).
pub fn roc_tsv(roc: &RocCurve) -> String {
    let mut out = String::new();
    for (fpr, tpr) in &roc.points {
        let _ = writeln!(out, "{fpr}\t{tpr}");
    }
    out
}

/// Train and evaluate every grid cell, writing
/// `<out_dir>/<name>/<cell>/metrics.kv` (and `roc.tsv` when both classes are
/// present) plus a manifest. Training failures mark their cell and the run
/// continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> std::io::Result<Vec<CellResult>> {
    let root = cfg.out_dir.join(&cfg.name);
    std::fs::create_dir_all(&root)?;
    let mut results = Vec::with_capacity(cfg.grid.len());
    for cell in &cfg.grid {
        let cell_name = cell.name();
        let mut pipeline_cfg = cfg.base.clone();
        let train_records: Vec<LabeledReaction> = match cell {
            CellSpec::Ablation { use_rsd, use_dlg } => {
                pipeline_cfg.use_rsd = *use_rsd;
                pipeline_cfg.use_dlg = *use_dlg;
                cfg.train.clone()
            }
            CellSpec::Incremental { ratio } => {
                incremental_mix(&cfg.train, &cfg.incremental_pool, *ratio)
            }
        };

        let outcome = match fit(&train_records, &cfg.dev, &pipeline_cfg) {
            Ok(outcome) => outcome,
            Err(err) => {
                results.push(CellResult {
                    cell: cell_name,
                    report: None,
                    error: Some(err.to_string()),
                });
                continue;
            }
        };
        let preds = outcome.artifacts.score_records(&cfg.test);
        let mut report = match evaluate(&preds, pipeline_cfg.threshold) {
            Ok(report) => report,
            Err(err) => {
                results.push(CellResult {
                    cell: cell_name,
                    report: None,
                    error: Some(err.to_string()),
                });
                continue;
            }
        };
        report.roc = roc_auc(&preds).ok();

        let cell_dir = root.join(&cell_name);
        std::fs::create_dir_all(&cell_dir)?;
        let mut extra = BTreeMap::new();
        extra.insert("cell".to_string(), cell_name.clone());
        extra.insert("train_size".to_string(), train_records.len().to_string());
        extra.insert("use_rsd".to_string(), pipeline_cfg.use_rsd.to_string());
        extra.insert("use_dlg".to_string(), pipeline_cfg.use_dlg.to_string());
        if let CellSpec::Incremental { ratio } = cell {
            extra.insert("ratio".to_string(), ratio.to_string());
        }
        std::fs::write(cell_dir.join("metrics.kv"), report_kv(&report, &extra))?;
        if let Some(roc) = &report.roc {
            std::fs::write(cell_dir.join("roc.tsv"), roc_tsv(roc))?;
        }
        results.push(CellResult {
            cell: cell_name,
            report: Some(report),
            error: None,
        });
    }

    let mut manifest = String::new();
    let _ = writeln!(manifest, "experiment={}", cfg.name);
    let _ = writeln!(manifest, "cells={}", results.len());
    for r in &results {
        match &r.error {
            None => {
                let _ = writeln!(manifest, "cell.{}=ok", r.cell);
            }
            Some(e) => {
                let _ = writeln!(manifest, "cell.{}=error: {e}", r.cell);
            }
        }
    }
    std::fs::write(root.join("manifest.kv"), manifest)?;
    Ok(results)
}
