//! Randomized invariants over the text-processing layers.

use proptest::prelude::*;

use rxnjudge_core::dlg::{build_lexicon_with, segment, Corpus, Lexicon, LexiconOptions};
use rxnjudge_core::rsd::{apply_rsd, edit_distance, generate_rsd};
use rxnjudge_core::smiles::{
    normalize_reaction, strip_atom_maps, tokenize_atomwise, RawReaction, TokenSequence,
};

fn molecule_strategy() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        Just("C".to_string()),
        Just("c".to_string()),
        Just("N".to_string()),
        Just("O".to_string()),
        Just("Cl".to_string()),
        Just("Br".to_string()),
        Just("(".to_string()),
        Just(")".to_string()),
        Just("=".to_string()),
        Just("#".to_string()),
        Just("1".to_string()),
        Just("2".to_string()),
        Just("[Mg]".to_string()),
        Just("[OH3+]".to_string()),
        Just("[C@@H]".to_string()),
        Just("[CH2:10]".to_string()),
        Just("[nH]".to_string()),
    ];
    prop::collection::vec(piece, 1..20).prop_map(|v| v.concat())
}

fn token_seq_strategy(max_len: usize) -> impl Strategy<Value = TokenSequence> {
    prop::collection::vec("[a-e]", 0..max_len).prop_map(TokenSequence::from_iter_strings)
}

trait FromIterStrings {
    fn from_iter_strings(v: Vec<String>) -> TokenSequence;
}

impl FromIterStrings for TokenSequence {
    fn from_iter_strings(v: Vec<String>) -> TokenSequence {
        TokenSequence::new(v)
    }
}

proptest! {
    #[test]
    fn tokenizer_round_trips_any_ascii(s in "[ -~]{0,60}") {
        prop_assert_eq!(tokenize_atomwise(&s).concat(), s);
    }

    #[test]
    fn tokenizer_round_trips_molecules(m in molecule_strategy()) {
        prop_assert_eq!(tokenize_atomwise(&m).concat(), m);
    }

    #[test]
    fn strip_is_idempotent_and_shrinking(m in molecule_strategy()) {
        let once = strip_atom_maps(&m).unwrap();
        prop_assert!(once.len() <= m.len());
        prop_assert_eq!(strip_atom_maps(&once).unwrap(), once);
    }

    #[test]
    fn normalize_is_permutation_invariant(
        mut reactants in prop::collection::vec(molecule_strategy(), 1..4),
        products in prop::collection::vec(molecule_strategy(), 1..3),
        order in any::<u64>(),
    ) {
        let base = RawReaction {
            reactants: reactants.clone(),
            reagents: vec![],
            products: products.clone(),
        };
        let normalized = normalize_reaction(&base).unwrap();
        // Rotate the reactant list; the normal form must not move.
        let k = (order as usize) % reactants.len();
        reactants.rotate_left(k);
        let rotated = RawReaction { reactants, reagents: vec![], products };
        prop_assert_eq!(normalize_reaction(&rotated).unwrap(), normalized.clone());
        prop_assert_eq!(normalize_reaction(&normalized).unwrap(), normalized);
    }

    #[test]
    fn segmentation_is_lossless(
        corpus_text in "[abc]{20,120}",
        input in token_seq_strategy(40),
    ) {
        let corpus_seq = TokenSequence::new(corpus_text.chars().map(|c| c.to_string()).collect());
        let corpus = Corpus::from_sequences([&corpus_seq]);
        let lexicon = build_lexicon_with(&corpus, LexiconOptions {
            max_n: 4,
            threshold: -1000.0,
            min_count: 1,
        }).unwrap();
        let seg = segment(&input, &lexicon);
        prop_assert_eq!(seg.words().concat(), input.concat());
    }

    #[test]
    fn empty_multi_token_lexicon_degenerates_to_tokens(input in token_seq_strategy(30)) {
        let seg = segment(&input, &Lexicon::new());
        prop_assert_eq!(seg.segments.len(), input.len());
        prop_assert_eq!(seg.total_goodness, 0.0);
    }

    #[test]
    fn rsd_replay_and_cost(
        s in token_seq_strategy(50),
        t in token_seq_strategy(50),
    ) {
        let script = generate_rsd(&s, &t);
        prop_assert_eq!(apply_rsd(&s, &script).unwrap(), t.clone());
        prop_assert_eq!(script.operation_count(), edit_distance(&s, &t));
        prop_assert_eq!(edit_distance(&s, &t), edit_distance(&t, &s));
    }

    #[test]
    fn edit_distance_triangle_inequality(
        a in token_seq_strategy(20),
        b in token_seq_strategy(20),
        c in token_seq_strategy(20),
    ) {
        prop_assert!(edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c));
    }
}
