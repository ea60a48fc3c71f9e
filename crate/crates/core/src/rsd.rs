//! Reaction symbol distance: a per-position edit script describing how the
//! reactant-side token stream turns into the product-side stream.
//!
//! The script assigns one tag per source position plus a sentinel slot for
//! trailing insertions: `_` copies the token, `AR` replaces it, `RR` deletes
//! it, and `AD` inserts its payload right before the (copied) position.
//! Replaying the tags over the source reproduces the target exactly, and the
//! number of edit operations equals the token-level Levenshtein distance.

use thiserror::Error;

use crate::smiles::TokenSequence;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RsdError {
    #[error("tag sequence built for source length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RsdTag {
    /// `_`: the source token is kept as is.
    Nop,
    /// `AR`: the source token is replaced by the payload token.
    Replace(String),
    /// `RR`: the source token is deleted.
    Delete,
    /// `AD`: the payload tokens are inserted right before this position and
    /// the source token (when the slot is not the sentinel) is then kept.
    Insert(Vec<String>),
}

impl RsdTag {
    /// Edit operations this tag contributes; a merged insertion of k tokens
    /// counts as k operations.
    fn cost(&self) -> usize {
        match self {
            RsdTag::Nop => 0,
            RsdTag::Replace(_) => 1,
            RsdTag::Delete => 1,
            RsdTag::Insert(payload) => payload.len(),
        }
    }
}

/// Edit tags over a source sequence: one slot per source position plus a
/// sentinel slot that may only hold `Nop` or `Insert`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsdSequence {
    pub tags: Vec<RsdTag>,
    pub source_len: usize,
    pub target_len: usize,
}

impl RsdSequence {
    /// Total edit operations encoded in the tags.
    pub fn operation_count(&self) -> usize {
        self.tags.iter().map(RsdTag::cost).sum()
    }
}

/// Token-level Levenshtein distance with unit insert/delete/substitute costs.
pub fn edit_distance(source: &TokenSequence, target: &TokenSequence) -> usize {
    dp_table(source.as_slice(), target.as_slice())[source.len()][target.len()]
}

fn dp_table(s: &[String], t: &[String]) -> Vec<Vec<usize>> {
    let (n, m) = (s.len(), t.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(s[i - 1] != t[j - 1]);
            let del = d[i - 1][j] + 1;
            let ins = d[i][j - 1] + 1;
            d[i][j] = sub.min(del).min(ins);
        }
    }
    d
}

/// One forward edit operation recovered from the traceback.
enum Op {
    Match,
    Sub(usize),
    Del,
    Ins(usize),
}

/// Align `source` to `target` and encode the minimal edit script as tags.
///
/// Traceback prefers match, then substitution, then deletion, then insertion,
/// which pins one script among the minimal ones. Insertion runs that the
/// traceback leaves in front of a substituted position are rotated rightward
/// (the substitution absorbs the first inserted token and the remainder moves
/// one slot over) until they sit in front of a kept position or the sentinel;
/// the rotation preserves the replayed target and the operation count, and is
/// what lets every slot carry a single tag.
pub fn generate_rsd(source: &TokenSequence, target: &TokenSequence) -> RsdSequence {
    let s = source.as_slice();
    let t = target.as_slice();
    let d = dp_table(s, t);

    let mut ops_rev: Vec<Op> = Vec::new();
    let (mut i, mut j) = (s.len(), t.len());
    while i > 0 || j > 0 {
        if i > 0 && j > 0 && s[i - 1] == t[j - 1] && d[i][j] == d[i - 1][j - 1] {
            ops_rev.push(Op::Match);
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1 {
            ops_rev.push(Op::Sub(j - 1));
            i -= 1;
            j -= 1;
        } else if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            ops_rev.push(Op::Del);
            i -= 1;
        } else {
            debug_assert!(j > 0 && d[i][j] == d[i][j - 1] + 1);
            ops_rev.push(Op::Ins(j - 1));
            j -= 1;
        }
    }

    // Group the forward script into per-source-position slots: the pending
    // insertions collected so far belong right before the next consumed
    // position.
    let mut tags: Vec<RsdTag> = Vec::with_capacity(s.len() + 1);
    let mut carry: Vec<String> = Vec::new();
    for op in ops_rev.iter().rev() {
        match op {
            Op::Ins(j) => carry.push(t[*j].clone()),
            Op::Match => {
                if carry.is_empty() {
                    tags.push(RsdTag::Nop);
                } else {
                    tags.push(RsdTag::Insert(std::mem::take(&mut carry)));
                }
            }
            Op::Sub(j) => {
                if carry.is_empty() {
                    tags.push(RsdTag::Replace(t[*j].clone()));
                } else {
                    // Rotate: the substitution absorbs the first pending
                    // token and its own replacement joins the pending run.
                    carry.push(t[*j].clone());
                    tags.push(RsdTag::Replace(carry.remove(0)));
                }
            }
            Op::Del => {
                // A minimal script never inserts directly before a deletion;
                // a substitution would be cheaper.
                debug_assert!(carry.is_empty());
                tags.push(RsdTag::Delete);
            }
        }
    }
    if carry.is_empty() {
        tags.push(RsdTag::Nop);
    } else {
        tags.push(RsdTag::Insert(carry));
    }
    debug_assert_eq!(tags.len(), s.len() + 1);

    RsdSequence {
        tags,
        source_len: s.len(),
        target_len: t.len(),
    }
}

/// Replay tags over a source sequence.
pub fn apply_rsd(source: &TokenSequence, rsd: &RsdSequence) -> Result<TokenSequence, RsdError> {
    if rsd.source_len != source.len() {
        return Err(RsdError::LengthMismatch {
            expected: rsd.source_len,
            actual: source.len(),
        });
    }
    let mut out: Vec<String> = Vec::with_capacity(rsd.target_len);
    for (i, tag) in rsd.tags.iter().enumerate() {
        let src = source.as_slice().get(i);
        match tag {
            RsdTag::Nop => {
                if let Some(tok) = src {
                    out.push(tok.clone());
                }
            }
            RsdTag::Replace(payload) => out.push(payload.clone()),
            RsdTag::Delete => {}
            RsdTag::Insert(payload) => {
                out.extend(payload.iter().cloned());
                if let Some(tok) = src {
                    out.push(tok.clone());
                }
            }
        }
    }
    Ok(TokenSequence::new(out))
}

/// Serialize tags into vocabulary tokens: `_`, `RR`, `AR:<payload>`,
/// `AD:<payload>` with insertion payloads joined without spaces. One token
/// per slot, sentinel included.
pub fn rsd_tokens(rsd: &RsdSequence) -> TokenSequence {
    let tokens = rsd
        .tags
        .iter()
        .map(|tag| match tag {
            RsdTag::Nop => "_".to_string(),
            RsdTag::Delete => "RR".to_string(),
            RsdTag::Replace(payload) => format!("AR:{payload}"),
            RsdTag::Insert(payload) => format!("AD:{}", payload.concat()),
        })
        .collect();
    TokenSequence::new(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(tokens: &[&str]) -> TokenSequence {
        TokenSequence::from(tokens.to_vec())
    }

    fn char_seq(text: &str) -> TokenSequence {
        TokenSequence::new(text.chars().map(|c| c.to_string()).collect())
    }

    fn random_seq(rng: &mut ChaCha8Rng, max_len: usize, alphabet: u8) -> TokenSequence {
        let len = rng.gen_range(0..=max_len);
        TokenSequence::new(
            (0..len)
                .map(|_| ((b'a' + rng.gen_range(0..alphabet)) as char).to_string())
                .collect(),
        )
    }

    #[test]
    fn distance_identity() {
        let s = seq(&["A", "B", "C"]);
        assert_eq!(edit_distance(&s, &s), 0);
    }

    #[test]
    fn distance_kitten_sitting() {
        assert_eq!(edit_distance(&char_seq("kitten"), &char_seq("sitting")), 3);
    }

    #[test]
    fn distance_from_empty() {
        let empty = TokenSequence::default();
        let t = seq(&["x", "y", "z", "w"]);
        assert_eq!(edit_distance(&empty, &t), 4);
        assert_eq!(edit_distance(&t, &empty), 4);
        assert_eq!(edit_distance(&empty, &empty), 0);
    }

    #[test]
    fn distance_symmetry_and_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = random_seq(&mut rng, 12, 3);
            let b = random_seq(&mut rng, 12, 3);
            let c = random_seq(&mut rng, 12, 3);
            assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
            assert!(edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c));
        }
    }

    #[test]
    fn rsd_all_match() {
        let s = seq(&["A", "B", "C"]);
        let r = generate_rsd(&s, &s);
        assert_eq!(r.tags, vec![RsdTag::Nop, RsdTag::Nop, RsdTag::Nop, RsdTag::Nop]);
        assert_eq!(r.operation_count(), 0);
    }

    #[test]
    fn rsd_single_substitution() {
        let s = seq(&["A", "B", "C"]);
        let t = seq(&["A", "D", "C"]);
        let r = generate_rsd(&s, &t);
        assert_eq!(
            r.tags,
            vec![
                RsdTag::Nop,
                RsdTag::Replace("D".to_string()),
                RsdTag::Nop,
                RsdTag::Nop
            ]
        );
        assert_eq!(r.operation_count(), edit_distance(&s, &t));
    }

    #[test]
    fn rsd_insertion_before_match() {
        let s = seq(&["A", "C"]);
        let t = seq(&["A", "B", "C"]);
        let r = generate_rsd(&s, &t);
        assert_eq!(
            r.tags,
            vec![
                RsdTag::Nop,
                RsdTag::Insert(vec!["B".to_string()]),
                RsdTag::Nop
            ]
        );
        assert_eq!(apply_rsd(&s, &r).unwrap(), t);
    }

    #[test]
    fn rsd_insertion_run_rotates_past_substitution() {
        // Minimal scripts here need one substitution and one insertion; the
        // slot model forces the insertion to the sentinel.
        let s = seq(&["X"]);
        let t = seq(&["B", "Y"]);
        let r = generate_rsd(&s, &t);
        assert_eq!(
            r.tags,
            vec![
                RsdTag::Replace("B".to_string()),
                RsdTag::Insert(vec!["Y".to_string()])
            ]
        );
        assert_eq!(apply_rsd(&s, &r).unwrap(), t);
        assert_eq!(r.operation_count(), edit_distance(&s, &t));
    }

    #[test]
    fn rsd_all_deletions_yield_empty() {
        let s = seq(&["A", "B"]);
        let t = TokenSequence::default();
        let r = generate_rsd(&s, &t);
        assert_eq!(r.tags, vec![RsdTag::Delete, RsdTag::Delete, RsdTag::Nop]);
        assert!(apply_rsd(&s, &r).unwrap().is_empty());
    }

    #[test]
    fn apply_hand_built_tags() {
        let s = seq(&["A"]);
        let r = RsdSequence {
            tags: vec![
                RsdTag::Insert(vec!["B".to_string()]),
                RsdTag::Insert(vec!["C".to_string()]),
            ],
            source_len: 1,
            target_len: 3,
        };
        assert_eq!(apply_rsd(&s, &r).unwrap(), seq(&["B", "A", "C"]));
    }

    #[test]
    fn apply_length_mismatch() {
        let s = seq(&["A", "B"]);
        let r = generate_rsd(&seq(&["A"]), &seq(&["A"]));
        assert!(matches!(
            apply_rsd(&s, &r),
            Err(RsdError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn tokens_serialize_all_kinds() {
        let s = seq(&["A", "B", "C"]);
        let t = seq(&["A", "D", "C"]);
        let toks = rsd_tokens(&generate_rsd(&s, &t));
        assert_eq!(toks.tokens, vec!["_", "AR:D", "_", "_"]);

        let all_nop = rsd_tokens(&generate_rsd(&s, &s));
        assert!(all_nop.tokens.iter().all(|t| t == "_"));

        let merged = RsdSequence {
            tags: vec![
                RsdTag::Insert(vec!["B".to_string(), "C".to_string()]),
                RsdTag::Nop,
            ],
            source_len: 1,
            target_len: 3,
        };
        assert_eq!(rsd_tokens(&merged).tokens, vec!["AD:BC", "_"]);
    }

    #[test]
    fn replay_and_cost_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let s = random_seq(&mut rng, 25, 4);
            let t = random_seq(&mut rng, 25, 4);
            let r = generate_rsd(&s, &t);
            assert_eq!(r.tags.len(), s.len() + 1);
            assert!(matches!(
                r.tags.last().unwrap(),
                RsdTag::Nop | RsdTag::Insert(_)
            ));
            let replayed = apply_rsd(&s, &r).unwrap();
            assert_eq!(replayed, t, "replay mismatch for {s:?} -> {t:?}");
            assert_eq!(
                r.operation_count(),
                edit_distance(&s, &t),
                "cost mismatch for {s:?} -> {t:?}"
            );
        }
    }
}
