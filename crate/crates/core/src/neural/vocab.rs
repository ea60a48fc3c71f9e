//! Token-to-index map for the embedding table.

use std::collections::HashMap;

pub const PAD_TOKEN: &str = "<PAD>";
pub const UNK_TOKEN: &str = "<UNK>";
pub const PAD: usize = 0;
pub const UNK: usize = 1;

/// Dense vocabulary: `<PAD>` is index 0, `<UNK>` index 1, everything else is
/// sorted for build determinism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn build<I>(tokens: I) -> Vocab
    where
        I: IntoIterator,
        I::Item: Into<String>,
    {
        let mut unique: Vec<String> = tokens
            .into_iter()
            .map(Into::into)
            .filter(|t| t != PAD_TOKEN && t != UNK_TOKEN)
            .collect();
        unique.sort();
        unique.dedup();
        let mut all = Vec::with_capacity(unique.len() + 2);
        all.push(PAD_TOKEN.to_string());
        all.push(UNK_TOKEN.to_string());
        all.extend(unique);
        Vocab::from_ordered(all)
    }

    /// Rebuild from an explicit index-ordered token list (checkpoint load).
    pub fn from_ordered(tokens: Vec<String>) -> Vocab {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocab { tokens, index }
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t)).collect()
    }
}
