//! Symbol-level practicality judgment for written chemical reactions.
//!
//! The pipeline treats reaction SMILES as text: molecules are tokenized
//! atom-wise ([`smiles`]), a compression-scored word lexicon is induced and
//! applied ([`dlg`]), the reactant-to-product edit script is extracted
//! ([`rsd`]), and a Siamese BiLSTM over the three token streams scores the
//! reaction ([`neural`]). [`datasets`] handles corpora, splits and rule-based
//! negative generation; [`evaluation`] computes the classification metrics
//! and experiment grids; [`synthetic`] produces seeded demo corpora.

pub mod config;
pub mod datasets;
pub mod dlg;
pub mod evaluation;
pub mod neural;
pub mod rsd;
pub mod smiles;
pub mod synthetic;
