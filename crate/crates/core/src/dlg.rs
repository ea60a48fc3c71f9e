//! Compression-guided word induction over token streams.
//!
//! A candidate token n-gram is scored by how many bits the corpus saves when
//! every non-overlapping occurrence is rewritten to a fresh symbol and one
//! copy of the n-gram is appended back. Candidates that save bits form the
//! lexicon; segmentation then runs greedy maximal matching against it.

use std::collections::HashMap;

use thiserror::Error;

use crate::smiles::TokenSequence;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DlgError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("candidate `{0}` does not occur in the corpus")]
    CandidateAbsent(String),
}

/// Shannon description length in bits of a corpus given its symbol counts.
///
/// Computed as `total*log2(total) - sum(c*log2(c))`, which equals
/// `-total * sum(p*log2(p))` and is exactly 0 for a one-symbol vocabulary.
pub fn description_length<I>(counts: I, total: u64) -> Result<f64, DlgError>
where
    I: IntoIterator<Item = u64>,
{
    if total == 0 {
        return Err(DlgError::EmptyCorpus);
    }
    let mut sum_clog = 0.0;
    let mut seen: u64 = 0;
    for c in counts {
        debug_assert!(c > 0, "symbol counts must be positive");
        seen += c;
        sum_clog += c as f64 * (c as f64).log2();
    }
    debug_assert_eq!(seen, total, "counts must sum to total");
    Ok(total as f64 * (total as f64).log2() - sum_clog)
}

/// A training corpus flattened into one symbol stream. Sequences are joined
/// by a reserved boundary symbol so no candidate n-gram can span two of them.
#[derive(Debug, Clone)]
pub struct Corpus {
    /// Interned symbols; id 0 is the sequence boundary.
    symbols: Vec<String>,
    index: HashMap<String, u32>,
    stream: Vec<u32>,
    freq: Vec<u64>,
}

const BOUNDARY: u32 = 0;

impl Corpus {
    pub fn from_sequences<'a, I>(sequences: I) -> Self
    where
        I: IntoIterator<Item = &'a TokenSequence>,
    {
        let mut corpus = Corpus {
            symbols: vec!["\u{0}boundary".to_string()],
            index: HashMap::new(),
            stream: Vec::new(),
            freq: vec![0],
        };
        for (k, seq) in sequences.into_iter().enumerate() {
            if k > 0 {
                corpus.stream.push(BOUNDARY);
                corpus.freq[BOUNDARY as usize] += 1;
            }
            for tok in &seq.tokens {
                let id = corpus.intern(tok);
                corpus.stream.push(id);
                corpus.freq[id as usize] += 1;
            }
        }
        corpus
    }

    fn intern(&mut self, tok: &str) -> u32 {
        if let Some(&id) = self.index.get(tok) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(tok.to_string());
        self.index.insert(tok.to_string(), id);
        self.freq.push(0);
        id
    }

    /// Total stream length including boundary symbols.
    pub fn total_length(&self) -> usize {
        self.stream.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stream.is_empty()
    }

    /// Distinct tokens of the corpus, boundary excluded.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().skip(1).map(String::as_str)
    }

    fn sum_count_log(&self) -> f64 {
        self.freq
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| c as f64 * (c as f64).log2())
            .sum()
    }

    /// Description length of the whole corpus in bits.
    pub fn description_length(&self) -> Result<f64, DlgError> {
        description_length(self.freq.iter().copied().filter(|&c| c > 0), self.stream.len() as u64)
    }

    fn candidate_ids(&self, candidate: &[String]) -> Option<Vec<u32>> {
        candidate
            .iter()
            .map(|t| self.index.get(t.as_str()).copied())
            .collect()
    }

    fn count_nonoverlapping(&self, pattern: &[u32]) -> u64 {
        if pattern.is_empty() || pattern.len() > self.stream.len() {
            return 0;
        }
        let mut count = 0;
        let mut i = 0;
        while i + pattern.len() <= self.stream.len() {
            if self.stream[i..i + pattern.len()] == *pattern {
                count += 1;
                i += pattern.len();
            } else {
                i += 1;
            }
        }
        count
    }
}

/// Description length gain of a candidate: bits saved by replacing all its
/// non-overlapping occurrences with a fresh symbol and appending one copy of
/// the candidate to the corpus.
pub fn dlg_score(corpus: &Corpus, candidate: &[String]) -> Result<f64, DlgError> {
    if corpus.is_empty() {
        return Err(DlgError::EmptyCorpus);
    }
    let ids = corpus
        .candidate_ids(candidate)
        .ok_or_else(|| DlgError::CandidateAbsent(candidate.concat()))?;
    let occurrences = corpus.count_nonoverlapping(&ids);
    if occurrences == 0 {
        return Err(DlgError::CandidateAbsent(candidate.concat()));
    }
    Ok(dlg_from_counts(corpus, &ids, occurrences))
}

/// Incremental evaluation of the replaced-corpus description length. Only the
/// candidate's own symbols and the fresh symbol change counts, so the
/// difference is O(candidate length).
fn dlg_from_counts(corpus: &Corpus, ids: &[u32], occurrences: u64) -> f64 {
    let n = corpus.stream.len() as u64;
    let k = ids.len() as u64;
    let c = occurrences;
    let n_new = n - c * k + c + k;

    // First-occurrence order keeps the float accumulation below
    // deterministic across runs; candidates are at most a few tokens long.
    let mut multiplicity: Vec<(u32, u64)> = Vec::with_capacity(ids.len());
    for &id in ids {
        match multiplicity.iter_mut().find(|(seen, _)| *seen == id) {
            Some((_, m)) => *m += 1,
            None => multiplicity.push((id, 1)),
        }
    }

    let clog = |x: u64| -> f64 {
        if x == 0 {
            0.0
        } else {
            x as f64 * (x as f64).log2()
        }
    };

    let base_sum = corpus.sum_count_log();
    let mut new_sum = base_sum;
    for &(id, m) in &multiplicity {
        let old = corpus.freq[id as usize];
        // c occurrences removed, one appended copy added back.
        let new = old - (c - 1) * m;
        new_sum += clog(new) - clog(old);
    }
    new_sum += clog(c); // the fresh replacement symbol

    let l_base = n as f64 * (n as f64).log2() - base_sum;
    let l_new = n_new as f64 * (n_new as f64).log2() - new_sum;
    l_base - l_new
}

/// Induced word list: token n-grams with their goodness in bits. Every single
/// token of the corpus vocabulary is present as a zero-goodness fallback, so
/// segmentation always has a match.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<Vec<String>, f64>,
    max_word_len: usize,
}

impl Lexicon {
    pub fn new() -> Self {
        Lexicon::default()
    }

    pub fn insert(&mut self, word: Vec<String>, goodness: f64) {
        if word.is_empty() {
            return;
        }
        self.max_word_len = self.max_word_len.max(word.len());
        self.entries.insert(word, goodness);
    }

    pub fn score(&self, word: &[String]) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn contains(&self, word: &[String]) -> bool {
        self.entries.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_word_len(&self) -> usize {
        self.max_word_len.max(1)
    }

    pub fn multi_token_words(&self) -> impl Iterator<Item = (&[String], f64)> {
        self.entries
            .iter()
            .filter(|(w, _)| w.len() > 1)
            .map(|(w, &g)| (w.as_slice(), g))
    }

    /// Entries sorted by descending goodness, ties by word; the order used in
    /// the TSV representation.
    pub fn sorted_entries(&self) -> Vec<(&[String], f64)> {
        let mut rows: Vec<(&[String], f64)> = self
            .entries
            .iter()
            .map(|(w, &g)| (w.as_slice(), g))
            .collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        rows
    }

    /// One `word<TAB>goodness` row per entry, descending goodness. Word tokens
    /// are space-joined so the token split survives the round trip.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (word, g) in self.sorted_entries() {
            out.push_str(&word.join(" "));
            out.push('\t');
            out.push_str(&format!("{g}"));
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, String> {
        let mut lex = Lexicon::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (word, score) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: missing tab separator", lineno + 1))?;
            let goodness: f64 = score
                .trim()
                .parse()
                .map_err(|e| format!("line {}: bad goodness: {e}", lineno + 1))?;
            let tokens: Vec<String> = word.split(' ').map(String::from).collect();
            if tokens.iter().any(|t| t.is_empty()) {
                return Err(format!("line {}: empty token in word", lineno + 1));
            }
            lex.insert(tokens, goodness);
        }
        Ok(lex)
    }
}

/// Candidate enumeration bounds for [`build_lexicon`].
#[derive(Debug, Clone, Copy)]
pub struct LexiconOptions {
    /// Longest candidate in tokens.
    pub max_n: usize,
    /// Keep candidates with goodness strictly above this many bits.
    pub threshold: f64,
    /// Minimum non-overlapping occurrence count for a candidate.
    pub min_count: u64,
}

impl Default for LexiconOptions {
    fn default() -> Self {
        LexiconOptions {
            max_n: 8,
            threshold: 0.0,
            min_count: 3,
        }
    }
}

/// Enumerate all intra-sequence token n-grams of the corpus and keep those
/// whose gain clears the threshold, plus zero-goodness single-token fallbacks.
pub fn build_lexicon(corpus: &Corpus, max_n: usize, threshold: f64) -> Result<Lexicon, DlgError> {
    build_lexicon_with(
        corpus,
        LexiconOptions {
            max_n,
            threshold,
            ..LexiconOptions::default()
        },
    )
}

pub fn build_lexicon_with(corpus: &Corpus, opts: LexiconOptions) -> Result<Lexicon, DlgError> {
    if corpus.is_empty() {
        return Err(DlgError::EmptyCorpus);
    }
    let mut lexicon = Lexicon::new();
    for tok in corpus.vocabulary() {
        lexicon.insert(vec![tok.to_string()], 0.0);
    }

    let stream = &corpus.stream;
    for n in 2..=opts.max_n {
        if n > stream.len() {
            break;
        }
        // Greedy left-to-right non-overlapping counts for every n-gram of
        // this length, in one pass.
        let mut counts: HashMap<&[u32], (u64, usize)> = HashMap::new();
        for i in 0..=stream.len() - n {
            let window = &stream[i..i + n];
            if window.contains(&BOUNDARY) {
                continue;
            }
            let entry = counts.entry(window).or_insert((0, 0));
            if i >= entry.1 {
                entry.0 += 1;
                entry.1 = i + n;
            }
        }
        for (window, (count, _)) in counts {
            if count < opts.min_count {
                continue;
            }
            let gain = dlg_from_counts(corpus, window, count);
            if gain > opts.threshold {
                let word: Vec<String> = window
                    .iter()
                    .map(|&id| corpus.symbols[id as usize].clone())
                    .collect();
                lexicon.insert(word, gain);
            }
        }
    }
    Ok(lexicon)
}

/// How [`segment_with`] walks the token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SegmentMode {
    /// Left-to-right, best-scoring word at each position.
    #[default]
    Greedy,
    /// Dynamic program maximizing the summed goodness of the whole split.
    Dp,
}

/// A lossless split of a token sequence into lexicon words.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub segments: Vec<Vec<String>>,
    pub total_goodness: f64,
}

impl Segmentation {
    /// Each segment joined into a single string; the word forms used for
    /// vocabulary lookups downstream.
    pub fn words(&self) -> Vec<String> {
        self.segments.iter().map(|s| s.concat()).collect()
    }
}

/// Greedy maximal matching against the lexicon (see [`segment_with`]).
pub fn segment(seq: &TokenSequence, lexicon: &Lexicon) -> Segmentation {
    segment_with(seq, lexicon, SegmentMode::Greedy)
}

/// Split `seq` into lexicon words. Tokens absent from the lexicon fall back
/// to singleton segments with goodness 0, so the split is always total and
/// concatenating the segments restores the input.
pub fn segment_with(seq: &TokenSequence, lexicon: &Lexicon, mode: SegmentMode) -> Segmentation {
    match mode {
        SegmentMode::Greedy => segment_greedy(seq, lexicon),
        SegmentMode::Dp => segment_dp(seq, lexicon),
    }
}

fn word_score(lexicon: &Lexicon, word: &[String]) -> Option<f64> {
    match lexicon.score(word) {
        Some(g) => Some(g),
        // Unseen single tokens still segment, at zero goodness.
        None if word.len() == 1 => Some(0.0),
        None => None,
    }
}

fn segment_greedy(seq: &TokenSequence, lexicon: &Lexicon) -> Segmentation {
    let tokens = seq.as_slice();
    let max_len = lexicon.max_word_len();
    let mut segments = Vec::new();
    let mut total = 0.0;
    let mut pos = 0;
    while pos < tokens.len() {
        let mut best: Option<(f64, usize)> = None;
        for len in 1..=max_len.min(tokens.len() - pos) {
            let Some(score) = word_score(lexicon, &tokens[pos..pos + len]) else {
                continue;
            };
            // Higher goodness wins; ties go to the longer word. At one
            // position equal lengths denote the same word, so no further
            // tie-break is needed.
            let better = match best {
                None => true,
                Some((bs, bl)) => score > bs || (score == bs && len > bl),
            };
            if better {
                best = Some((score, len));
            }
        }
        let (score, len) = best.expect("single-token fallback always matches");
        segments.push(tokens[pos..pos + len].to_vec());
        total += score;
        pos += len;
    }
    Segmentation {
        segments,
        total_goodness: total,
    }
}

fn segment_dp(seq: &TokenSequence, lexicon: &Lexicon) -> Segmentation {
    let tokens = seq.as_slice();
    let n = tokens.len();
    let max_len = lexicon.max_word_len();
    // best[i] = (max total goodness of tokens[i..], chosen first-word length)
    let mut best: Vec<(f64, usize)> = vec![(0.0, 0); n + 1];
    for i in (0..n).rev() {
        let mut cell: Option<(f64, usize)> = None;
        for len in 1..=max_len.min(n - i) {
            let Some(score) = word_score(lexicon, &tokens[i..i + len]) else {
                continue;
            };
            let total = score + best[i + len].0;
            let better = match cell {
                None => true,
                Some((bt, bl)) => total > bt || (total == bt && len > bl),
            };
            if better {
                cell = Some((total, len));
            }
        }
        best[i] = cell.expect("single-token fallback always matches");
    }
    let mut segments = Vec::new();
    let mut pos = 0;
    while pos < n {
        let len = best[pos].1;
        segments.push(tokens[pos..pos + len].to_vec());
        pos += len;
    }
    Segmentation {
        segments,
        total_goodness: best[0].0,
    }
}
