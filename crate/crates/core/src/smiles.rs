//! Reaction SMILES normalization and atom-wise tokenization.
//!
//! A reaction string has the shape `reactants>reagents>products`, with the
//! molecules of each group joined by `.`. Cleaning is purely textual: atom
//! maps (`:n` inside bracket atoms) are stripped, plain bracket atoms are
//! unwrapped, and molecules are sorted within each group so that equal
//! reactions collapse to one byte representation. No chemical perception
//! (valence, aromaticity, canonical atom ordering) happens here.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmilesError {
    #[error("malformed reaction: {0}")]
    MalformedReaction(String),
    #[error("unbalanced brackets in `{0}`")]
    UnbalancedBrackets(String),
}

/// A reaction split into its three molecule groups.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawReaction {
    pub reactants: Vec<String>,
    pub reagents: Vec<String>,
    pub products: Vec<String>,
}

impl RawReaction {
    /// Inverse of [`parse_reaction`]: groups joined by `>`, molecules by `.`.
    pub fn render(&self) -> String {
        format!(
            "{}>{}>{}",
            self.reactants.join("."),
            self.reagents.join("."),
            self.products.join(".")
        )
    }

    /// Reactant group as a single dot-joined string.
    pub fn reactant_side(&self) -> String {
        self.reactants.join(".")
    }

    /// Product group as a single dot-joined string.
    pub fn product_side(&self) -> String {
        self.products.join(".")
    }
}

/// An atom-wise token stream. Concatenating the tokens restores the exact
/// source string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSequence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn concat(&self) -> String {
        self.tokens.concat()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.tokens
    }
}

impl From<Vec<String>> for TokenSequence {
    fn from(tokens: Vec<String>) -> Self {
        TokenSequence { tokens }
    }
}

impl From<Vec<&str>> for TokenSequence {
    fn from(tokens: Vec<&str>) -> Self {
        TokenSequence {
            tokens: tokens.into_iter().map(String::from).collect(),
        }
    }
}

/// Split a reaction string on its two `>` separators.
///
/// The reagents group may be empty; reactants and products must each contain
/// at least one molecule. Empty molecule strings (stray dots) are dropped.
pub fn parse_reaction(text: &str) -> Result<RawReaction, SmilesError> {
    let parts: Vec<&str> = text.split('>').collect();
    if parts.len() != 3 {
        return Err(SmilesError::MalformedReaction(format!(
            "expected 2 `>` separators, found {} in `{}`",
            parts.len().saturating_sub(1),
            text
        )));
    }
    let group = |s: &str| -> Vec<String> {
        s.split('.')
            .filter(|m| !m.is_empty())
            .map(String::from)
            .collect()
    };
    let reaction = RawReaction {
        reactants: group(parts[0]),
        reagents: group(parts[1]),
        products: group(parts[2]),
    };
    if reaction.reactants.is_empty() || reaction.products.is_empty() {
        return Err(SmilesError::MalformedReaction(format!(
            "reactants and products must be non-empty in `{text}`"
        )));
    }
    Ok(reaction)
}

/// Organic-subset symbols that may be written outside brackets. Bracket atoms
/// reduced to one of these (plus an implicit-H count) are unwrapped.
const ORGANIC_SUBSET: &[&str] = &[
    "Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I", "b", "c", "n", "o", "s", "p",
];

fn unwrappable(content: &str) -> Option<&str> {
    for sym in ORGANIC_SUBSET {
        if let Some(rest) = content.strip_prefix(sym) {
            if rest.is_empty() {
                return Some(sym);
            }
            // Only an implicit hydrogen count may follow the symbol.
            if let Some(h) = rest.strip_prefix('H') {
                if h.chars().all(|c| c.is_ascii_digit()) {
                    return Some(sym);
                }
            }
        }
    }
    None
}

/// Remove every `:<digits>` atom map inside bracket atoms and unwrap bracket
/// atoms that reduce to a bare organic-subset symbol with at most an
/// implicit-H count. Charge, isotope, chirality and non-organic symbols keep
/// their brackets untouched.
pub fn strip_atom_maps(molecule: &str) -> Result<String, SmilesError> {
    let chars: Vec<char> = molecule.chars().collect();
    let mut out = String::with_capacity(molecule.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == ']' {
            return Err(SmilesError::UnbalancedBrackets(molecule.to_string()));
        }
        if c != '[' {
            out.push(c);
            i += 1;
            continue;
        }
        // Collect the bracket body.
        let mut j = i + 1;
        let mut body = String::new();
        loop {
            if j >= chars.len() {
                return Err(SmilesError::UnbalancedBrackets(molecule.to_string()));
            }
            match chars[j] {
                ']' => break,
                '[' => return Err(SmilesError::UnbalancedBrackets(molecule.to_string())),
                ch => {
                    body.push(ch);
                    j += 1;
                }
            }
        }
        let stripped = strip_maps_in_body(&body);
        match unwrappable(&stripped) {
            Some(sym) => out.push_str(sym),
            None => {
                out.push('[');
                out.push_str(&stripped);
                out.push(']');
            }
        }
        i = j + 1;
    }
    Ok(out)
}

fn strip_maps_in_body(body: &str) -> String {
    let chars: Vec<char> = body.chars().collect();
    let mut out = String::with_capacity(body.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == ':' {
            let digits = chars[i + 1..]
                .iter()
                .take_while(|c| c.is_ascii_digit())
                .count();
            if digits > 0 {
                i += 1 + digits;
                continue;
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

/// Tokenize a molecule string atom-wise.
///
/// Outside brackets only `Cl` and `Br` form two-character tokens; inside
/// brackets an uppercase letter followed by a lowercase letter forms a
/// two-character element token and everything else (digits, `H`, charge,
/// chirality marks, the brackets themselves) is emitted per character. Any
/// ASCII stream tokenizes; unknown characters become single-character tokens,
/// so concatenating the tokens always restores the input.
pub fn tokenize_atomwise(molecule: &str) -> TokenSequence {
    let chars: Vec<char> = molecule.chars().collect();
    let mut tokens = Vec::with_capacity(chars.len());
    let mut in_bracket = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if in_bracket {
            if c == ']' {
                in_bracket = false;
                tokens.push("]".to_string());
                i += 1;
            } else if c.is_ascii_uppercase() && next.is_some_and(|n| n.is_ascii_lowercase()) {
                tokens.push(chars[i..i + 2].iter().collect());
                i += 2;
            } else {
                tokens.push(c.to_string());
                i += 1;
            }
        } else if c == '[' {
            in_bracket = true;
            tokens.push("[".to_string());
            i += 1;
        } else if (c == 'C' && next == Some('l')) || (c == 'B' && next == Some('r')) {
            tokens.push(chars[i..i + 2].iter().collect());
            i += 2;
        } else {
            tokens.push(c.to_string());
            i += 1;
        }
    }
    TokenSequence { tokens }
}

/// Strip atom maps from every molecule and sort molecules lexicographically
/// within each group. Idempotent; equal reactions produce byte-identical
/// renderings.
pub fn normalize_reaction(r: &RawReaction) -> Result<RawReaction, SmilesError> {
    let clean = |group: &[String]| -> Result<Vec<String>, SmilesError> {
        let mut out = group
            .iter()
            .map(|m| strip_atom_maps(m))
            .collect::<Result<Vec<_>, _>>()?;
        out.sort();
        Ok(out)
    };
    Ok(RawReaction {
        reactants: clean(&r.reactants)?,
        reagents: clean(&r.reagents)?,
        products: clean(&r.products)?,
    })
}

/// Parse, strip and sort in one step; the usual entry point for corpus lines.
pub fn parse_and_normalize(text: &str) -> Result<RawReaction, SmilesError> {
    let raw = parse_reaction(text)?;
    normalize_reaction(&raw)
}
