//! Full prediction pipeline: normalize → tokenize → segment → edit tags →
//! fuse → score, plus the fit entry point that builds lexicon, vocabulary and
//! trained weights from a labeled corpus.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::net::{score_example, EncodedReaction, PROB_EPS};
use super::params::ModelParams;
use super::train::{train, EpochStats};
use super::vocab::Vocab;
use super::NeuralError;
use crate::config::PipelineConfig;
use crate::datasets::LabeledReaction;
use crate::dlg::{build_lexicon_with, segment, Corpus, DlgError, Lexicon};
use crate::rsd::{generate_rsd, rsd_tokens};
use crate::smiles::{
    parse_and_normalize, tokenize_atomwise, RawReaction, SmilesError, TokenSequence,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Dlg(#[from] DlgError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// Model output for one reaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Clamped to the open interval (0, 1).
    pub probability: f64,
    /// `probability >= threshold`; ties predict positive.
    pub label: bool,
}

/// The three token streams the network consumes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionStreams {
    pub reactant_words: Vec<String>,
    pub product_words: Vec<String>,
    pub rsd: Vec<String>,
}

/// Tokenize both sides, compute the edit tags on the atom-wise streams, and
/// segment the reactant/product streams into lexicon words (or keep raw
/// tokens when segmentation is off). Edit tags always align atoms, never
/// segmented words.
pub fn reaction_streams(r: &RawReaction, lexicon: &Lexicon, use_dlg: bool) -> ReactionStreams {
    let reactant_tokens = tokenize_atomwise(&r.reactant_side());
    let product_tokens = tokenize_atomwise(&r.product_side());
    let rsd = rsd_tokens(&generate_rsd(&reactant_tokens, &product_tokens));
    let words = |toks: &TokenSequence| -> Vec<String> {
        if use_dlg {
            segment(toks, lexicon).words()
        } else {
            toks.tokens.clone()
        }
    };
    ReactionStreams {
        reactant_words: words(&reactant_tokens),
        product_words: words(&product_tokens),
        rsd: rsd.tokens,
    }
}

/// Reactant- and product-side token sequences of each record; the corpus the
/// lexicon is induced from. Never feed test records here.
pub fn corpus_sequences(records: &[LabeledReaction]) -> Vec<TokenSequence> {
    let mut out = Vec::with_capacity(records.len() * 2);
    for r in records {
        out.push(tokenize_atomwise(&r.reaction.reactant_side()));
        out.push(tokenize_atomwise(&r.reaction.product_side()));
    }
    out
}

pub fn build_reaction_lexicon(
    records: &[LabeledReaction],
    cfg: &PipelineConfig,
) -> Result<Lexicon, DlgError> {
    let sequences = corpus_sequences(records);
    let corpus = Corpus::from_sequences(sequences.iter());
    build_lexicon_with(&corpus, cfg.lexicon_options())
}

/// Vocabulary over every stream token of the given records (training split
/// only, so evaluation never leaks tokens into the embedding table).
pub fn build_vocab(records: &[LabeledReaction], lexicon: &Lexicon, cfg: &PipelineConfig) -> Vocab {
    let mut tokens: Vec<String> = Vec::new();
    for r in records {
        let streams = reaction_streams(&r.reaction, lexicon, cfg.use_dlg);
        tokens.extend(streams.reactant_words);
        tokens.extend(streams.product_words);
        tokens.extend(streams.rsd);
    }
    Vocab::build(tokens)
}

pub fn encode(
    r: &RawReaction,
    label: bool,
    lexicon: &Lexicon,
    vocab: &Vocab,
    cfg: &PipelineConfig,
) -> EncodedReaction {
    let streams = reaction_streams(r, lexicon, cfg.use_dlg);
    EncodedReaction {
        reactant_ids: streams.reactant_words.iter().map(|t| vocab.lookup(t)).collect(),
        product_ids: streams.product_words.iter().map(|t| vocab.lookup(t)).collect(),
        rsd_ids: streams.rsd.iter().map(|t| vocab.lookup(t)).collect(),
        label,
    }
}

pub fn encode_all(
    records: &[LabeledReaction],
    lexicon: &Lexicon,
    vocab: &Vocab,
    cfg: &PipelineConfig,
) -> Vec<EncodedReaction> {
    records
        .iter()
        .map(|r| encode(&r.reaction, r.label, lexicon, vocab, cfg))
        .collect()
}

/// Everything needed to judge a reaction: trained weights, vocabulary,
/// lexicon and the configuration they were built with.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub params: ModelParams<f32>,
    pub vocab: Vocab,
    pub lexicon: Lexicon,
    pub config: PipelineConfig,
}

impl Artifacts {
    /// Success probability, clamped away from exactly 0 and 1.
    pub fn score(&self, r: &RawReaction) -> f64 {
        let ex = encode(r, false, &self.lexicon, &self.vocab, &self.config);
        let y = score_example(&ex, &self.params, self.config.use_rsd);
        (y as f64).clamp(PROB_EPS, 1.0 - PROB_EPS)
    }

    pub fn predict(&self, r: &RawReaction) -> Prediction {
        self.predict_at(r, self.config.threshold)
    }

    pub fn predict_at(&self, r: &RawReaction, threshold: f64) -> Prediction {
        let probability = self.score(r);
        Prediction {
            probability,
            label: probability >= threshold,
        }
    }

    /// Parse, normalize and judge a raw reaction line.
    pub fn predict_text(&self, text: &str) -> Result<Prediction, SmilesError> {
        Ok(self.predict(&parse_and_normalize(text)?))
    }

    /// (probability, gold label) pairs for a record set.
    pub fn score_records(&self, records: &[LabeledReaction]) -> Vec<(f64, bool)> {
        records
            .iter()
            .map(|r| (self.score(&r.reaction), r.label))
            .collect()
    }
}

#[derive(Debug)]
pub struct FitOutcome {
    pub artifacts: Artifacts,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

/// Induce the lexicon and vocabulary from the training split, encode both
/// splits, and train the network. The dev split drives best-epoch selection.
pub fn fit(
    train_records: &[LabeledReaction],
    dev_records: &[LabeledReaction],
    cfg: &PipelineConfig,
) -> Result<FitOutcome, PipelineError> {
    let lexicon = if cfg.use_dlg {
        build_reaction_lexicon(train_records, cfg)?
    } else {
        Lexicon::new()
    };
    fit_with_lexicon(train_records, dev_records, lexicon, cfg)
}

/// Like [`fit`] but with an externally supplied (e.g. reloaded) lexicon.
pub fn fit_with_lexicon(
    train_records: &[LabeledReaction],
    dev_records: &[LabeledReaction],
    lexicon: Lexicon,
    cfg: &PipelineConfig,
) -> Result<FitOutcome, PipelineError> {
    let vocab = build_vocab(train_records, &lexicon, cfg);
    let train_set = encode_all(train_records, &lexicon, &vocab, cfg);
    let dev_set = encode_all(dev_records, &lexicon, &vocab, cfg);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = ModelParams::<f32>::init(cfg.dims(vocab.len()), &mut rng);
    let outcome = train(&train_set, &dev_set, init, &cfg.train_config())?;
    Ok(FitOutcome {
        artifacts: Artifacts {
            params: outcome.params,
            vocab,
            lexicon,
            config: cfg.clone(),
        },
        history: outcome.history,
        best_epoch: outcome.best_epoch,
    })
}
