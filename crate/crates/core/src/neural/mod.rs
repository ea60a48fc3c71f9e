//! The Siamese BiLSTM classifier, built from first principles: embedding,
//! shared-weight recurrent branches, MLP head, binary cross entropy, exact
//! reverse-mode gradients, an adaptive-moment optimizer and a
//! finite-difference gradient verifier.

pub mod checkpoint;
pub mod gradcheck;
pub mod matrix;
pub mod net;
pub mod optimizer;
pub mod params;
pub mod pipeline;
pub mod train;
pub mod vocab;

use thiserror::Error;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError, FORMAT_VERSION, MAGIC};
pub use gradcheck::{finite_difference_check, GradCheckReport};
pub use matrix::{Mat, Real};
pub use net::{
    bce_loss, bce_mean, bilstm, embed, embed_ids, forward, fuse, lstm_step, score_example,
    zero_embedded, BranchInput, EmbeddedSeq, EncodedReaction, PROB_EPS,
};
pub use optimizer::{clip_global_norm, Adam};
pub use params::{GateParams, LstmParams, MlpParams, ModelDims, ModelParams};
pub use pipeline::{
    build_reaction_lexicon, build_vocab, encode, encode_all, fit, fit_with_lexicon,
    reaction_streams, Artifacts, FitOutcome, PipelineError, Prediction, ReactionStreams,
};
pub use train::{evaluate_split, train, EpochStats, TrainConfig, TrainOutcome};
pub use vocab::{Vocab, PAD, PAD_TOKEN, UNK, UNK_TOKEN};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(String),
    #[error("training diverged at epoch {0}: dev loss is not finite")]
    DivergedTraining(usize),
}
