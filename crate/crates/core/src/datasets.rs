//! Corpus loading, deduplication, deterministic stratified splits, and
//! rule-based negative-reaction generation filtered against the known
//! positives.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dlg::{segment, Lexicon};
use crate::smiles::{parse_and_normalize, tokenize_atomwise, RawReaction};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("too few records to split: {stratum} stratum has {count} (need at least 3)")]
    TooFewRecords { stratum: &'static str, count: usize },
}

/// Where a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Corpus,
    RuleGenerated,
    RealFailed,
}

/// A normalized reaction with its practicality label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledReaction {
    pub reaction: RawReaction,
    /// true = works (positive), false = fails (negative).
    pub label: bool,
    pub source: Source,
}

impl LabeledReaction {
    /// Dedup key: the normalized rendering.
    pub fn key(&self) -> String {
        self.reaction.render()
    }
}

/// How corpus lines carry their labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Each line is `label<TAB>reaction` with label 0 or 1.
    Labeled,
    /// Bare reaction lines, all positive.
    FixedPositive,
    /// Bare reaction lines, all negative.
    FixedNegative,
}

#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub records: Vec<LabeledReaction>,
    /// Lines skipped because they did not parse.
    pub malformed: usize,
}

/// Parse corpus text, one reaction per line. Malformed lines are counted and
/// skipped rather than failing the load; blank lines are ignored.
pub fn parse_corpus(text: &str, mode: LabelMode) -> LoadOutcome {
    let mut records = Vec::new();
    let mut malformed = 0;
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (label, body) = match mode {
            LabelMode::Labeled => match line.split_once('\t') {
                Some(("0", rest)) => (false, rest),
                Some(("1", rest)) => (true, rest),
                _ => {
                    malformed += 1;
                    continue;
                }
            },
            LabelMode::FixedPositive => (true, line),
            LabelMode::FixedNegative => (false, line),
        };
        match parse_and_normalize(body) {
            Ok(reaction) => records.push(LabeledReaction {
                reaction,
                label,
                source: Source::Corpus,
            }),
            Err(_) => malformed += 1,
        }
    }
    LoadOutcome { records, malformed }
}

pub fn load_corpus(path: &Path, mode: LabelMode) -> Result<LoadOutcome, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_corpus(&text, mode))
}

/// Serialize records in the corpus line format (`label<TAB>reaction`).
pub fn render_corpus(records: &[LabeledReaction]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(if r.label { "1" } else { "0" });
        out.push('\t');
        out.push_str(&r.reaction.render());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct DedupOutcome {
    pub records: Vec<LabeledReaction>,
    pub duplicates: usize,
    /// Same normalized reaction seen with both labels; the negative wins.
    pub label_conflicts: usize,
}

/// Keep the first occurrence per normalized reaction. A later record with a
/// conflicting label flips the kept record to negative: a recorded failure
/// outweighs a recorded success.
pub fn deduplicate(records: Vec<LabeledReaction>) -> DedupOutcome {
    let mut order: Vec<LabeledReaction> = Vec::with_capacity(records.len());
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut duplicates = 0;
    let mut label_conflicts = 0;
    for record in records {
        let key = record.key();
        match seen.get(&key) {
            None => {
                seen.insert(key, order.len());
                order.push(record);
            }
            Some(&idx) => {
                duplicates += 1;
                if order[idx].label != record.label {
                    label_conflicts += 1;
                    order[idx].label = false;
                }
            }
        }
    }
    DedupOutcome {
        records: order,
        duplicates,
        label_conflicts,
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<LabeledReaction>,
    pub dev: Vec<LabeledReaction>,
    pub test: Vec<LabeledReaction>,
    pub seed: u64,
}

/// Deterministic stratified split: 10% of each label stratum goes to test,
/// then 10% of the remainder to dev. Both strata must hold at least 3
/// records so every split can contain both classes.
pub fn split(records: &[LabeledReaction], seed: u64) -> Result<DatasetSplit, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positives: Vec<&LabeledReaction> = records.iter().filter(|r| r.label).collect();
    let mut negatives: Vec<&LabeledReaction> = records.iter().filter(|r| !r.label).collect();
    for (name, stratum) in [("positive", &positives), ("negative", &negatives)] {
        if !stratum.is_empty() && stratum.len() < 3 {
            return Err(DatasetError::TooFewRecords {
                stratum: if name == "positive" {
                    "positive"
                } else {
                    "negative"
                },
                count: stratum.len(),
            });
        }
    }

    let mut train = Vec::new();
    let mut dev = Vec::new();
    let mut test = Vec::new();
    for stratum in [&mut positives, &mut negatives] {
        stratum.shuffle(&mut rng);
        let n = stratum.len();
        let test_n = (n as f64 * 0.1).round() as usize;
        let dev_n = ((n - test_n) as f64 * 0.1).round() as usize;
        for (k, record) in stratum.iter().enumerate() {
            if k < test_n {
                test.push((*record).clone());
            } else if k < test_n + dev_n {
                dev.push((*record).clone());
            } else {
                train.push((*record).clone());
            }
        }
    }
    train.shuffle(&mut rng);
    dev.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok(DatasetSplit {
        train,
        dev,
        test,
        seed,
    })
}

/// Normalized renderings of every known positive reaction; generated
/// candidates colliding with it are discarded.
#[derive(Debug, Clone, Default)]
pub struct KnownPositiveIndex {
    keys: HashSet<String>,
}

impl KnownPositiveIndex {
    pub fn build<'a, I: IntoIterator<Item = &'a LabeledReaction>>(records: I) -> Self {
        KnownPositiveIndex {
            keys: records
                .into_iter()
                .filter(|r| r.label)
                .map(|r| r.key())
                .collect(),
        }
    }

    pub fn contains(&self, reaction: &RawReaction) -> bool {
        self.keys.contains(&reaction.render())
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// One element of a token rewrite pattern. `*` matches any run of tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternItem {
    Token(String),
    Wildcard,
}

/// Token-sequence rewrite rule `LHS<TAB>RHS`; both sides are space-separated
/// token patterns and `*` wildcards pair up left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternRule {
    pub lhs: Vec<PatternItem>,
    pub rhs: Vec<PatternItem>,
}

impl PatternRule {
    pub fn parse(line: &str) -> Result<PatternRule, String> {
        let (lhs, rhs) = line
            .split_once('\t')
            .ok_or_else(|| "rule line needs `LHS<TAB>RHS`".to_string())?;
        let side = |s: &str| -> Vec<PatternItem> {
            s.split(' ')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    if t == "*" {
                        PatternItem::Wildcard
                    } else {
                        PatternItem::Token(t.to_string())
                    }
                })
                .collect()
        };
        let rule = PatternRule {
            lhs: side(lhs),
            rhs: side(rhs),
        };
        let count = |items: &[PatternItem]| {
            items
                .iter()
                .filter(|i| matches!(i, PatternItem::Wildcard))
                .count()
        };
        if rule.lhs.is_empty() {
            return Err("empty LHS pattern".to_string());
        }
        if count(&rule.lhs) != count(&rule.rhs) {
            return Err("LHS and RHS must use the same number of `*` wildcards".to_string());
        }
        Ok(rule)
    }

    /// Match the whole token sequence against the LHS (wildcards take the
    /// shortest run first) and build the RHS with captured runs spliced in.
    pub fn apply(&self, tokens: &[String]) -> Option<Vec<String>> {
        let mut captures: Vec<Vec<String>> = Vec::new();
        if !match_items(&self.lhs, tokens, &mut captures) {
            return None;
        }
        let mut out = Vec::new();
        let mut next_capture = 0;
        for item in &self.rhs {
            match item {
                PatternItem::Token(t) => out.push(t.clone()),
                PatternItem::Wildcard => {
                    out.extend(captures[next_capture].iter().cloned());
                    next_capture += 1;
                }
            }
        }
        Some(out)
    }
}

fn match_items(pattern: &[PatternItem], tokens: &[String], captures: &mut Vec<Vec<String>>) -> bool {
    match pattern.first() {
        None => tokens.is_empty(),
        Some(PatternItem::Token(t)) => {
            tokens.first() == Some(t) && match_items(&pattern[1..], &tokens[1..], captures)
        }
        Some(PatternItem::Wildcard) => {
            for take in 0..=tokens.len() {
                captures.push(tokens[..take].to_vec());
                if match_items(&pattern[1..], &tokens[take..], captures) {
                    return true;
                }
                captures.pop();
            }
            false
        }
    }
}

/// The shipped reverse rules plus user-supplied token rewrites.
#[derive(Debug, Clone)]
pub enum NegativeRule {
    /// Replace one reactant with a corpus reactant sharing its first
    /// lexicon segment.
    ReactantSwap,
    /// Drop one reactant from a multi-reactant reaction.
    ReactantRemoval,
    /// Rewrite a reactant's token sequence.
    Pattern(PatternRule),
}

/// Enumerate candidate reactions per positive and rule, discard anything in
/// the known-positive index, and label the survivors negative. Enumeration
/// order is deterministic; `cap` bounds the output.
pub fn generate_negatives(
    positives: &[LabeledReaction],
    rules: &[NegativeRule],
    lexicon: &Lexicon,
    index: &KnownPositiveIndex,
    cap: usize,
) -> Vec<LabeledReaction> {
    let mut out: Vec<LabeledReaction> = Vec::new();
    let mut emitted: HashSet<String> = HashSet::new();
    if cap == 0 {
        return out;
    }

    // Reactant pool keyed by first segment, for the swap rule.
    let first_segment = |molecule: &str| -> String {
        let toks = tokenize_atomwise(molecule);
        segment(&toks, lexicon)
            .segments
            .first()
            .map(|s| s.concat())
            .unwrap_or_default()
    };
    let needs_pool = rules.iter().any(|r| matches!(r, NegativeRule::ReactantSwap));
    let mut pool: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    if needs_pool {
        for p in positives {
            for m in &p.reaction.reactants {
                pool.entry(first_segment(m)).or_default().insert(m.clone());
            }
        }
    }

    let push = |candidate: RawReaction,
                    out: &mut Vec<LabeledReaction>,
                    emitted: &mut HashSet<String>|
     -> bool {
        let Ok(normalized) = crate::smiles::normalize_reaction(&candidate) else {
            return out.len() < cap;
        };
        if normalized.reactants.is_empty() || normalized.products.is_empty() {
            return out.len() < cap;
        }
        let key = normalized.render();
        if !index.contains(&normalized) && emitted.insert(key) {
            out.push(LabeledReaction {
                reaction: normalized,
                label: false,
                source: Source::RuleGenerated,
            });
        }
        out.len() < cap
    };

    'outer: for p in positives {
        for rule in rules {
            match rule {
                NegativeRule::ReactantSwap => {
                    for (ri, molecule) in p.reaction.reactants.iter().enumerate() {
                        let key = first_segment(molecule);
                        let Some(alternatives) = pool.get(&key) else {
                            continue;
                        };
                        for alt in alternatives {
                            if alt == molecule {
                                continue;
                            }
                            let mut candidate = p.reaction.clone();
                            candidate.reactants[ri] = alt.clone();
                            if !push(candidate, &mut out, &mut emitted) {
                                break 'outer;
                            }
                        }
                    }
                }
                NegativeRule::ReactantRemoval => {
                    if p.reaction.reactants.len() < 2 {
                        continue;
                    }
                    for ri in 0..p.reaction.reactants.len() {
                        let mut candidate = p.reaction.clone();
                        candidate.reactants.remove(ri);
                        if !push(candidate, &mut out, &mut emitted) {
                            break 'outer;
                        }
                    }
                }
                NegativeRule::Pattern(rule) => {
                    for (ri, molecule) in p.reaction.reactants.iter().enumerate() {
                        let toks = tokenize_atomwise(molecule);
                        let Some(rewritten) = rule.apply(toks.as_slice()) else {
                            continue;
                        };
                        let mut candidate = p.reaction.clone();
                        candidate.reactants[ri] = rewritten.concat();
                        if !push(candidate, &mut out, &mut emitted) {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Deterministic shuffle used to pre-order incremental pools.
pub fn shuffle_records(records: &mut [LabeledReaction], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records.shuffle(&mut rng);
}

/// Append the first `ratio` fraction of the (pre-shuffled) pool to the base
/// training set. Nested: a smaller ratio's output is a prefix-superset of the
/// base and a subset of any larger ratio's output.
pub fn incremental_mix(
    base: &[LabeledReaction],
    pool: &[LabeledReaction],
    ratio: f64,
) -> Vec<LabeledReaction> {
    let take = (ratio.clamp(0.0, 1.0) * pool.len() as f64).floor() as usize;
    let mut out = base.to_vec();
    out.extend(pool[..take].iter().cloned());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(text: &str, label: bool) -> LabeledReaction {
        LabeledReaction {
            reaction: parse_and_normalize(text).unwrap(),
            label,
            source: Source::Corpus,
        }
    }

    #[test]
    fn parse_valid_lines() {
        let out = parse_corpus("C>>C\nCC>>CO\nC.O>>CO\n", LabelMode::FixedPositive);
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.malformed, 0);
        assert!(out.records.iter().all(|r| r.label));
    }

    #[test]
    fn parse_counts_malformed() {
        let out = parse_corpus("C>>C\nnot a reaction\nCC>>CO\nC.O>>CO\n", LabelMode::FixedPositive);
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.malformed, 1);
    }

    #[test]
    fn parse_labeled_mode() {
        let out = parse_corpus("1\tC>>C\n0\tCC>>CO\n2\tCC>>C\nbare>>line\n", LabelMode::Labeled);
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.malformed, 2);
        assert!(out.records[0].label);
        assert!(!out.records[1].label);
    }

    #[test]
    fn dedup_collapses_identical_and_normalized_duplicates() {
        let records = vec![
            record("C>>C", true),
            record("C>>C", true),
            record("O.C>>CO", true),
            record("C.O>>CO", true),
        ];
        let out = deduplicate(records);
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.duplicates, 2);
        assert_eq!(out.label_conflicts, 0);
    }

    #[test]
    fn dedup_label_conflict_keeps_negative() {
        let records = vec![
            record("C>>C", true),
            record("C>>C", false),
            record("CC>>CO", false),
            record("CC>>CO", true),
        ];
        let out = deduplicate(records);
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.label_conflicts, 2);
        assert!(out.records.iter().all(|r| !r.label));

        // Brute-force grouping oracle agrees on the conflict count.
        let raw = [("C>>C", true), ("C>>C", false), ("CC>>CO", false), ("CC>>CO", true)];
        let mut groups: HashMap<&str, (bool, bool)> = HashMap::new();
        for (k, l) in raw {
            let e = groups.entry(k).or_insert((false, false));
            if l {
                e.0 = true;
            } else {
                e.1 = true;
            }
        }
        let conflicts = groups.values().filter(|(p, n)| *p && *n).count();
        assert_eq!(out.label_conflicts, conflicts);
    }

    fn many_records(pos: usize, neg: usize) -> Vec<LabeledReaction> {
        let mut out = Vec::new();
        for i in 0..pos {
            out.push(record(&format!("C>>{}", "C".repeat(i + 1)), true));
        }
        for i in 0..neg {
            out.push(record(&format!("O>>{}", "C".repeat(i + 1)), false));
        }
        out
    }

    #[test]
    fn split_ratios_match_stated_arithmetic() {
        let records = many_records(1000, 0);
        let s = split(&records, 9).unwrap();
        assert_eq!(s.test.len(), 100);
        assert_eq!(s.dev.len(), 90);
        assert_eq!(s.train.len(), 810);
    }

    #[test]
    fn split_is_seed_deterministic_and_disjoint() {
        let records = many_records(80, 20);
        let a = split(&records, 4).unwrap();
        let b = split(&records, 4).unwrap();
        let keys = |v: &[LabeledReaction]| -> Vec<String> { v.iter().map(|r| r.key()).collect() };
        assert_eq!(keys(&a.train), keys(&b.train));
        assert_eq!(keys(&a.dev), keys(&b.dev));
        assert_eq!(keys(&a.test), keys(&b.test));

        let mut all: Vec<String> = keys(&a.train);
        all.extend(keys(&a.dev));
        all.extend(keys(&a.test));
        let unique: HashSet<&String> = all.iter().collect();
        assert_eq!(unique.len(), records.len());
    }

    #[test]
    fn split_preserves_label_ratio() {
        let records = many_records(800, 200);
        let s = split(&records, 1).unwrap();
        let neg = |v: &[LabeledReaction]| v.iter().filter(|r| !r.label).count();
        assert_eq!(s.test.len(), 100);
        assert_eq!(neg(&s.test), 20);
        assert_eq!(neg(&s.dev), 18);
        assert_eq!(s.dev.len(), 90);
        assert_eq!(neg(&s.train), 162);
    }

    #[test]
    fn split_rejects_tiny_stratum() {
        let records = many_records(10, 2);
        assert!(matches!(
            split(&records, 0),
            Err(DatasetError::TooFewRecords { stratum: "negative", count: 2 })
        ));
    }

    #[test]
    fn swap_rule_cross_pairs_toy_corpus() {
        let positives = vec![record("CC>>CO", true), record("CN>>CNO", true)];
        let index = KnownPositiveIndex::build(&positives);
        let lexicon = Lexicon::new(); // single-token fallback only
        let negatives = generate_negatives(
            &positives,
            &[NegativeRule::ReactantSwap],
            &lexicon,
            &index,
            100,
        );
        let keys: Vec<String> = negatives.iter().map(|r| r.key()).collect();
        // Both reactants start with `C`, so each positive swaps to the other
        // reactant, and both results are unknown to the index.
        assert_eq!(keys, vec!["CN>>CO", "CC>>CNO"]);
        assert!(negatives.iter().all(|r| !r.label));
        assert!(negatives
            .iter()
            .all(|r| r.source == Source::RuleGenerated));
    }

    #[test]
    fn generated_candidates_in_index_are_filtered() {
        // The swap of the first reaction reproduces the second, a known
        // positive, so only unknown candidates survive.
        let positives = vec![record("CC>>CO", true), record("CN>>CO", true)];
        let index = KnownPositiveIndex::build(&positives);
        let negatives = generate_negatives(
            &positives,
            &[NegativeRule::ReactantSwap],
            &Lexicon::new(),
            &index,
            100,
        );
        assert!(negatives.is_empty());
    }

    #[test]
    fn cap_zero_generates_nothing() {
        let positives = vec![record("CC>>CO", true), record("CN>>CNO", true)];
        let index = KnownPositiveIndex::build(&positives);
        let negatives =
            generate_negatives(&positives, &[NegativeRule::ReactantSwap], &Lexicon::new(), &index, 0);
        assert!(negatives.is_empty());
    }

    #[test]
    fn removal_rule_drops_one_reactant() {
        let positives = vec![record("CC.O>>CO", true)];
        let index = KnownPositiveIndex::build(&positives);
        let negatives = generate_negatives(
            &positives,
            &[NegativeRule::ReactantRemoval],
            &Lexicon::new(),
            &index,
            100,
        );
        let keys: Vec<String> = negatives.iter().map(|r| r.key()).collect();
        assert_eq!(keys, vec!["O>>CO", "CC>>CO"]);
    }

    #[test]
    fn pattern_rule_round_trip_and_rewrite() {
        let rule = PatternRule::parse("* C = O *\t* C - O *").unwrap();
        let tokens: Vec<String> = ["N", "C", "=", "O", "Cl"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rewritten = rule.apply(&tokens).unwrap();
        assert_eq!(rewritten.concat(), "NC-OCl");
        assert!(rule.apply(&["N".to_string()]).is_none());
        assert!(PatternRule::parse("* C\t* C *").is_err());
        assert!(PatternRule::parse("no tab").is_err());
    }

    #[test]
    fn incremental_mix_ratios() {
        let base = many_records(5, 0);
        let pool = many_records(0, 10);
        assert_eq!(incremental_mix(&base, &pool, 0.0).len(), 5);
        assert_eq!(incremental_mix(&base, &pool, 1.0).len(), 15);
        assert_eq!(incremental_mix(&base, &pool, 0.5).len(), 10);
        // Nested monotonicity: each ratio's output extends the previous one.
        let mut previous: Vec<LabeledReaction> = Vec::new();
        for k in 0..=10 {
            let mixed = incremental_mix(&base, &pool, k as f64 / 10.0);
            assert!(mixed.len() >= previous.len());
            assert_eq!(&mixed[..previous.len()], &previous[..]);
            previous = mixed;
        }
    }
}
