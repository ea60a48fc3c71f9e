//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use rxnjudge_core::config::PipelineConfig;
use rxnjudge_core::datasets::{
    deduplicate, generate_negatives, load_corpus, render_corpus, shuffle_records, split,
    KnownPositiveIndex, LabelMode, LabeledReaction, NegativeRule, PatternRule,
};
use rxnjudge_core::dlg::{segment, Lexicon};
use rxnjudge_core::evaluation::{
    ablation_grid, evaluate as evaluate_preds, incremental_grid, report_kv, roc_auc, roc_tsv,
    run_experiment, threshold_sweep, CellSpec, ExperimentConfig,
};
use rxnjudge_core::neural::{
    build_reaction_lexicon, fit_with_lexicon, load_checkpoint, save_checkpoint, Artifacts,
    ModelParams,
};
use rxnjudge_core::rsd::{generate_rsd, rsd_tokens, RsdTag};
use rxnjudge_core::smiles::{parse_and_normalize, tokenize_atomwise};

use crate::fileconfig::{load_config, FileConfig};
use crate::{CliError, GridArg, LabelModeArg};

fn config_or_default(path: Option<&Path>) -> Result<FileConfig, CliError> {
    load_config(path).map_err(CliError::Config)
}

fn file_hash(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)?;
    Ok(hex_digest(&bytes))
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn resolve_label_mode(flag: Option<LabelModeArg>, cfg: &FileConfig) -> LabelMode {
    flag.map(LabelMode::from)
        .or(cfg.label_mode)
        .unwrap_or(LabelMode::Labeled)
}

fn load_records(path: &Path, mode: LabelMode) -> Result<(Vec<LabeledReaction>, usize), CliError> {
    let outcome = load_corpus(path, mode)?;
    Ok((outcome.records, outcome.malformed))
}

pub fn prepare(
    input: &Path,
    out_dir: &Path,
    config: Option<&Path>,
    seed: Option<u64>,
    label_mode: Option<LabelModeArg>,
) -> Result<(), CliError> {
    let cfg = config_or_default(config)?;
    let seed = seed.unwrap_or(cfg.pipeline.0.seed);
    let mode = resolve_label_mode(label_mode, &cfg);

    let (records, malformed) = load_records(input, mode)?;
    let loaded = records.len();
    let dedup = deduplicate(records);
    let splits = split(&dedup.records, seed)?;

    fs::create_dir_all(out_dir)?;
    let mut manifest = String::new();
    manifest.push_str(&format!("input={}\n", input.display()));
    manifest.push_str(&format!("seed={seed}\n"));
    manifest.push_str(&format!("lines_loaded={loaded}\n"));
    manifest.push_str(&format!("lines_malformed={malformed}\n"));
    manifest.push_str(&format!("duplicates={}\n", dedup.duplicates));
    manifest.push_str(&format!("label_conflicts={}\n", dedup.label_conflicts));
    manifest.push_str(&format!("records={}\n", dedup.records.len()));
    for (name, records) in [
        ("train", &splits.train),
        ("dev", &splits.dev),
        ("test", &splits.test),
    ] {
        let body = render_corpus(records);
        let path = out_dir.join(format!("{name}.tsv"));
        fs::write(&path, &body)?;
        let positives = records.iter().filter(|r| r.label).count();
        manifest.push_str(&format!("{name}={}\n", records.len()));
        manifest.push_str(&format!("{name}_positive={positives}\n"));
        manifest.push_str(&format!(
            "{name}_negative={}\n",
            records.len() - positives
        ));
        manifest.push_str(&format!("{name}_hash={}\n", hex_digest(body.as_bytes())));
    }
    fs::write(out_dir.join("manifest.kv"), &manifest)?;
    print!("{manifest}");
    Ok(())
}

pub fn lexicon_build(
    input: &Path,
    out: &Path,
    config: Option<&Path>,
    label_mode: Option<LabelModeArg>,
) -> Result<(), CliError> {
    let cfg = config_or_default(config)?;
    let mode = resolve_label_mode(label_mode, &cfg);
    let (records, _) = load_records(input, mode)?;
    let lexicon = build_reaction_lexicon(&records, &cfg.pipeline.0)?;
    fs::write(out, lexicon.to_tsv())?;
    println!("words={}", lexicon.len());
    println!(
        "multi_token_words={}",
        lexicon.multi_token_words().count()
    );
    println!("source={}", input.display());
    println!("source_hash={}", file_hash(input)?);
    println!("out={}", out.display());
    Ok(())
}

fn load_lexicon(path: &Path) -> Result<Lexicon, CliError> {
    let text = fs::read_to_string(path)?;
    Lexicon::from_tsv(&text)
        .map_err(|e| CliError::Run(format!("bad lexicon {}: {e}", path.display())))
}

fn segment_line(line: &str, lexicon: &Lexicon) -> String {
    let segment_side = |side: &str| -> String {
        let toks = tokenize_atomwise(side);
        segment(&toks, lexicon).words().join(" ")
    };
    if line.contains('>') {
        line.split('>')
            .map(segment_side)
            .collect::<Vec<_>>()
            .join(" > ")
    } else {
        segment_side(line)
    }
}

pub fn lexicon_apply(
    lexicon_path: &Path,
    reaction: Option<&str>,
    input: Option<&Path>,
) -> Result<(), CliError> {
    let lexicon = load_lexicon(lexicon_path)?;
    match (reaction, input) {
        (Some(line), None) => {
            println!("{}", segment_line(line, &lexicon));
            Ok(())
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)?;
            for line in text.lines().filter(|l| !l.is_empty()) {
                // Tolerate labeled lines.
                let body = line
                    .split_once('\t')
                    .map(|(_, rest)| rest)
                    .unwrap_or(line);
                println!("{}", segment_line(body, &lexicon));
            }
            Ok(())
        }
        _ => Err(CliError::Config(
            "lexicon apply needs exactly one of --reaction or --input".into(),
        )),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn gen_negatives(
    input: &Path,
    out: &Path,
    rules_path: Option<&Path>,
    lexicon_path: Option<&Path>,
    cap: Option<usize>,
    seed: Option<u64>,
    config: Option<&Path>,
    label_mode: Option<LabelModeArg>,
) -> Result<(), CliError> {
    let cfg = config_or_default(config)?;
    let mode = resolve_label_mode(label_mode, &cfg);
    let cap = cap.or(cfg.cap).unwrap_or(100_000);
    let seed = seed.unwrap_or(cfg.pipeline.0.seed);

    let (records, _) = load_records(input, mode)?;
    let positives: Vec<LabeledReaction> = records.iter().filter(|r| r.label).cloned().collect();
    let index = KnownPositiveIndex::build(&records);
    let lexicon = match lexicon_path.or(cfg.lexicon_path.as_deref()) {
        Some(p) => load_lexicon(p)?,
        None => Lexicon::new(),
    };

    let mut rules: Vec<NegativeRule> =
        vec![NegativeRule::ReactantSwap, NegativeRule::ReactantRemoval];
    if let Some(path) = rules_path.or(cfg.rules_path.as_deref()) {
        let text = fs::read_to_string(path)?;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let rule = PatternRule::parse(line).map_err(|e| {
                CliError::Run(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
            rules.push(NegativeRule::Pattern(rule));
        }
    }

    let mut negatives = generate_negatives(&positives, &rules, &lexicon, &index, cap);
    shuffle_records(&mut negatives, seed);
    fs::write(out, render_corpus(&negatives))?;
    println!("positives={}", positives.len());
    println!("generated={}", negatives.len());
    println!("cap={cap}");
    println!("out={}", out.display());
    Ok(())
}

pub fn rsd_view(reaction: &str) -> Result<(), CliError> {
    let r = parse_and_normalize(reaction)?;
    let source = tokenize_atomwise(&r.reactant_side());
    let target = tokenize_atomwise(&r.product_side());
    let script = generate_rsd(&source, &target);
    let tags = rsd_tokens(&script);

    let mut source_row: Vec<String> = source.tokens.clone();
    source_row.push("-".to_string());
    let mut output_row: Vec<String> = Vec::with_capacity(script.tags.len());
    for (i, tag) in script.tags.iter().enumerate() {
        let src = source.tokens.get(i);
        output_row.push(match tag {
            RsdTag::Nop => src.cloned().unwrap_or_else(|| "-".to_string()),
            RsdTag::Replace(payload) => payload.clone(),
            RsdTag::Delete => "-".to_string(),
            RsdTag::Insert(payload) => {
                let mut cell = payload.join(" ");
                if let Some(tok) = src {
                    cell.push(' ');
                    cell.push_str(tok);
                }
                cell
            }
        });
    }
    println!("{}", source_row.join("\t"));
    println!("{}", tags.tokens.join("\t"));
    println!("{}", output_row.join("\t"));
    Ok(())
}

/// Rebuild the pipeline configuration recorded in checkpoint metadata.
fn config_from_metadata(params: &ModelParams<f32>, meta: &[(String, String)]) -> PipelineConfig {
    let lookup = |key: &str| -> Option<&str> {
        meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    };
    let mut cfg = PipelineConfig {
        embedding_dim: params.dims.embed,
        hidden_dim: params.dims.hidden,
        max_len: params.dims.max_len,
        ..PipelineConfig::default()
    };
    if let Some(v) = lookup("threshold").and_then(|v| v.parse().ok()) {
        cfg.threshold = v;
    }
    if let Some(v) = lookup("use_rsd").and_then(|v| v.parse().ok()) {
        cfg.use_rsd = v;
    }
    if let Some(v) = lookup("use_dlg").and_then(|v| v.parse().ok()) {
        cfg.use_dlg = v;
    }
    if let Some(v) = lookup("seed").and_then(|v| v.parse().ok()) {
        cfg.seed = v;
    }
    if let Some(v) = lookup("lexicon_max_n").and_then(|v| v.parse().ok()) {
        cfg.lexicon_max_n = v;
    }
    if let Some(v) = lookup("lexicon_threshold").and_then(|v| v.parse().ok()) {
        cfg.lexicon_threshold = v;
    }
    if let Some(v) = lookup("lexicon_min_count").and_then(|v| v.parse().ok()) {
        cfg.lexicon_min_count = v;
    }
    cfg
}

fn sibling_lexicon_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "checkpoint".to_string());
    name.push_str(".lexicon.tsv");
    checkpoint.with_file_name(name)
}

pub fn train(
    train_path: &Path,
    dev_path: Option<&Path>,
    out: &Path,
    config: Option<&Path>,
    lexicon_path: Option<&Path>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let file_cfg = config_or_default(config)?;
    let mut cfg = file_cfg.pipeline.0.clone();
    if let Some(s) = seed {
        cfg.seed = s;
    }

    let (train_records, _) = load_records(train_path, LabelMode::Labeled)?;
    let dev_records = match dev_path {
        Some(p) => load_records(p, LabelMode::Labeled)?.0,
        None => Vec::new(),
    };

    let lexicon = if !cfg.use_dlg {
        Lexicon::new()
    } else {
        match lexicon_path.or(file_cfg.lexicon_path.as_deref()) {
            Some(p) => load_lexicon(p)?,
            None => build_reaction_lexicon(&train_records, &cfg)?,
        }
    };

    let outcome = fit_with_lexicon(&train_records, &dev_records, lexicon, &cfg)?;
    for e in &outcome.history {
        println!(
            "epoch={} train_loss={:.6} dev_loss={:.6} dev_accuracy={:.4}",
            e.epoch, e.train_loss, e.dev_loss, e.dev_accuracy
        );
    }
    println!("best_epoch={}", outcome.best_epoch);

    let mut metadata = cfg.echo();
    if let Some(p) = config {
        metadata.push(("config_path".into(), p.display().to_string()));
    }
    metadata.push(("train_path".into(), train_path.display().to_string()));
    metadata.push(("train_hash".into(), file_hash(train_path)?));
    if cfg.use_dlg {
        let lex_path = sibling_lexicon_path(out);
        fs::write(&lex_path, outcome.artifacts.lexicon.to_tsv())?;
        metadata.push((
            "lexicon_file".into(),
            lex_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        ));
        metadata.push(("lexicon_hash".into(), file_hash(&lex_path)?));
    } else {
        metadata.push(("lexicon_file".into(), "none".into()));
    }
    metadata.push(("best_epoch".into(), outcome.best_epoch.to_string()));

    let mut file = fs::File::create(out)?;
    save_checkpoint(
        &mut file,
        &outcome.artifacts.params,
        &outcome.artifacts.vocab,
        &metadata,
    )?;
    println!("checkpoint={}", out.display());
    Ok(())
}

fn load_artifacts(
    checkpoint: &Path,
    lexicon_override: Option<&Path>,
) -> Result<(Artifacts, Vec<(String, String)>), CliError> {
    let mut file = fs::File::open(checkpoint)?;
    let (params, vocab, metadata) = load_checkpoint(&mut file)?;
    let cfg = config_from_metadata(&params, &metadata);
    let lexicon = if let Some(p) = lexicon_override {
        load_lexicon(p)?
    } else if !cfg.use_dlg {
        Lexicon::new()
    } else {
        let recorded = metadata
            .iter()
            .find(|(k, _)| k == "lexicon_file")
            .map(|(_, v)| v.as_str())
            .unwrap_or("none");
        if recorded == "none" {
            Lexicon::new()
        } else {
            let path = checkpoint.with_file_name(recorded);
            if !path.exists() {
                return Err(CliError::Io(format!(
                    "lexicon {} recorded in the checkpoint is missing; pass --lexicon",
                    path.display()
                )));
            }
            load_lexicon(&path)?
        }
    };
    Ok((
        Artifacts {
            params,
            vocab,
            lexicon,
            config: cfg,
        },
        metadata,
    ))
}

pub fn predict(
    checkpoint: &Path,
    reaction: &str,
    threshold: Option<f64>,
    lexicon: Option<&Path>,
) -> Result<(), CliError> {
    let (mut artifacts, _) = load_artifacts(checkpoint, lexicon)?;
    if let Some(t) = threshold {
        artifacts.config.threshold = t;
    }
    let prediction = artifacts.predict_text(reaction)?;
    println!(
        "{}\t{}",
        prediction.probability,
        if prediction.label { 1 } else { 0 }
    );
    Ok(())
}

pub fn evaluate(
    checkpoint: &Path,
    input: &Path,
    threshold: Option<f64>,
    sweep: bool,
    roc_out: Option<&Path>,
    lexicon: Option<&Path>,
) -> Result<(), CliError> {
    let (artifacts, _) = load_artifacts(checkpoint, lexicon)?;
    let (records, _) = load_records(input, LabelMode::Labeled)?;
    let preds = artifacts.score_records(&records);
    let threshold = threshold.unwrap_or(artifacts.config.threshold);

    let mut report = evaluate_preds(&preds, threshold)?;
    let roc = roc_auc(&preds).ok();
    report.roc = roc;
    let mut extra = BTreeMap::new();
    extra.insert("input".to_string(), input.display().to_string());
    extra.insert("records".to_string(), records.len().to_string());
    print!("{}", report_kv(&report, &extra));

    if sweep {
        let table = threshold_sweep(&preds, 10)?;
        println!("#threshold\ttp\tfn\tfp\ttn\taccuracy\tpositive_f1\tnegative_f1");
        for row in &table.rows {
            let c = &row.counts;
            println!(
                "{:.1}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
                row.threshold.unwrap(),
                c.true_positives,
                c.false_negatives,
                c.false_positives,
                c.true_negatives,
                row.accuracy,
                row.positive.f1,
                row.negative.f1
            );
        }
        println!("best_threshold={}", table.best_threshold);
    }

    if let Some(path) = roc_out {
        match &report.roc {
            Some(roc) => fs::write(path, roc_tsv(roc))?,
            None => {
                return Err(CliError::Run(
                    "cannot write ROC: evaluation has a single class".into(),
                ))
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn experiment(
    train: &Path,
    dev: Option<&Path>,
    test: &Path,
    pool: Option<&Path>,
    out_dir: &Path,
    name: &str,
    grid: GridArg,
    config: Option<&Path>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let file_cfg = config_or_default(config)?;
    let mut base = file_cfg.pipeline.0.clone();
    if let Some(s) = seed {
        base.seed = s;
    }
    let (train_records, _) = load_records(train, LabelMode::Labeled)?;
    let dev_records = match dev {
        Some(p) => load_records(p, LabelMode::Labeled)?.0,
        None => Vec::new(),
    };
    let (test_records, _) = load_records(test, LabelMode::Labeled)?;
    let mut pool_records = match pool {
        Some(p) => load_records(p, LabelMode::Labeled)?.0,
        None => Vec::new(),
    };
    shuffle_records(&mut pool_records, base.seed);

    let cells: Vec<CellSpec> = match grid {
        GridArg::Ablation => ablation_grid(),
        GridArg::Incremental => incremental_grid(),
        GridArg::Both => {
            let mut g = ablation_grid();
            g.extend(incremental_grid());
            g
        }
    };
    if matches!(grid, GridArg::Incremental | GridArg::Both) && pool_records.is_empty() {
        return Err(CliError::Config(
            "incremental grid needs --pool records".into(),
        ));
    }

    let results = run_experiment(&ExperimentConfig {
        name: name.to_string(),
        out_dir: out_dir.to_path_buf(),
        base,
        grid: cells,
        train: train_records,
        dev: dev_records,
        test: test_records,
        incremental_pool: pool_records,
    })?;
    for r in &results {
        match (&r.report, &r.error) {
            (Some(report), _) => println!("cell={} status=ok accuracy={:.6}", r.cell, report.accuracy),
            (None, Some(e)) => println!("cell={} status=error message={e}", r.cell),
            (None, None) => println!("cell={} status=unknown", r.cell),
        }
    }
    println!("reports={}", out_dir.join(name).display());
    Ok(())
}
