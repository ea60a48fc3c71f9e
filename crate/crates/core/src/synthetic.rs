//! Seeded synthetic reaction corpora.
//!
//! Reactions are drawn from a handful of textual reaction families over a
//! shared fragment pool, so the corpora have the repetitive motif structure
//! the lexicon builder and the classifier expect from patent-style data.
//! Everything is deterministic in the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FRAGMENTS: &[&str] = &[
    "C",
    "CC",
    "CCC",
    "CCCC",
    "CC(C)",
    "CC(C)C",
    "c1ccccc1",
    "Cc1ccccc1",
    "COc1ccccc1",
    "CCc1ccccc1",
    "Clc1ccccc1",
    "Brc1ccccc1",
    "Fc1ccccc1",
    "N#Cc1ccccc1",
    "OCC",
    "OC(C)",
    "CN(C)",
    "CCN",
    "CCO",
    "C1CCCCC1",
    "CC1CCCCC1",
    "OC1CCCCC1",
    "FC(F)(F)",
    "CC(F)(F)",
    "C=C",
    "CC=C",
    "COC",
    "CSC",
    "NC(C)",
    "OCc1ccccc1",
];

const REAGENTS: &[&str] = &["", "O", "CCO", "N1CCCCC1", "CC(=O)O", "[Na+].[Cl-]", "O.CCO"];

/// (reactants, products) templates; `{a}`/`{b}` take fragments.
const FAMILIES: &[(&str, &str)] = &[
    ("{a}O.{b}Cl", "{a}O{b}"),
    ("{a}C(=O)O.{b}N", "{a}C(=O)N{b}"),
    ("{a}Br.{b}Br", "{a}{b}"),
    ("{a}C=O.{b}N", "{a}C=N{b}"),
    ("{a}C#N", "{a}CN"),
    ("{a}C=C{b}", "{a}CC{b}"),
    ("{a}C(=O)OC{b}", "{a}C(=O)O.OC{b}"),
    ("{a}Cl.{b}N", "{a}N{b}"),
];

fn instantiate(template: &str, a: &str, b: &str) -> String {
    template.replace("{a}", a).replace("{b}", b)
}

fn sample_reaction<R: Rng>(rng: &mut R) -> String {
    let (lhs, rhs) = FAMILIES[rng.gen_range(0..FAMILIES.len())];
    let a = FRAGMENTS[rng.gen_range(0..FRAGMENTS.len())];
    let b = FRAGMENTS[rng.gen_range(0..FRAGMENTS.len())];
    let reagent = REAGENTS[rng.gen_range(0..REAGENTS.len())];
    format!(
        "{}>{}>{}",
        instantiate(lhs, a, b),
        reagent,
        instantiate(rhs, a, b)
    )
}

/// `count` positive reaction lines, one per line.
pub fn positive_corpus(count: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for _ in 0..count {
        out.push_str(&sample_reaction(&mut rng));
        out.push('\n');
    }
    out
}

/// `count` labeled lines (`label<TAB>reaction`, roughly balanced) where the
/// label is exactly the presence of the `[Xe]` marker molecule among the
/// reactants.
pub fn marker_corpus(count: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for _ in 0..count {
        let reaction = sample_reaction(&mut rng);
        let positive = rng.gen_bool(0.5);
        if positive {
            let (reactants, rest) = reaction.split_once('>').expect("generated reaction");
            out.push_str(&format!("1\t{reactants}.[Xe]>{rest}\n"));
        } else {
            out.push_str(&format!("0\t{reaction}\n"));
        }
    }
    out
}

/// Random molecule-shaped strings: fragment/bond/ring soup that need not be
/// chemically valid but exercises every tokenizer rule.
pub fn random_molecules(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pieces = [
        "C", "c", "N", "n", "O", "o", "S", "P", "F", "Cl", "Br", "I", "(", ")", "=", "#", "/",
        "\\", "1", "2", "%10", ".", "[Mg]", "[OH3+]", "[C@@H]", "[nH]", "[235U]", "[Fe+2]",
        "[CH2:10]", "[Na+]",
    ];
    (0..count)
        .map(|_| {
            let len = rng.gen_range(1..=30);
            let mut m = String::new();
            for _ in 0..len {
                m.push_str(pieces[rng.gen_range(0..pieces.len())]);
            }
            m
        })
        .collect()
}

/// Arbitrary printable-ASCII strings; the tokenizer must round-trip anything.
pub fn random_ascii(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.gen_range(0..=40);
            (0..len)
                .map(|_| (rng.gen_range(0x20u8..0x7f)) as char)
                .collect()
        })
        .collect()
}
