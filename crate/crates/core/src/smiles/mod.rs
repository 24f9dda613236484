//! SMILES ingestion.
//!
//! Accepted grammar:
//!
//! * organic-subset atoms `B C N O P S F Cl Br I` and aromatic `b c n o p s`
//! * bracket atoms `[isotope? symbol chirality? hcount? charge? class?]`;
//!   isotope, hydrogen count, charge and atom class are read and discarded
//! * bonds `- = # :` plus `/` and `\`, which are read as single bonds
//! * branches `( )` and ring closures `0-9` / `%nn`
//!
//! Dots (multi-fragment input) are rejected. Chirality `@` / `@TH1` map to
//! tag 1, `@@` / `@TH2` to tag 2, and every other chirality class
//! (`@AL`, `@SP`, `@TB`, `@OH`) to tag 3.
//!
//! Kekulization is never performed: an implicit bond between two aromatic
//! atoms is aromatic when it lies on a ring and single otherwise.

mod dataset;
pub mod elements;

pub use dataset::{read_dataset, Dataset, DatasetError, Record, SkipReason, SkippedRow};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::molgraph::{AtomAttr, BondOrder, GraphError, MolGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmilesError {
    #[error("empty SMILES")]
    Empty,
    #[error("unexpected character {ch:?} at offset {offset}")]
    UnexpectedChar { offset: usize, ch: char },
    #[error("unclosed branch at offset {offset}")]
    UnclosedBranch { offset: usize },
    #[error("unmatched branch close at offset {offset}")]
    UnmatchedBranchClose { offset: usize },
    #[error("unpaired ring closure at offset {offset}")]
    UnpairedRingClosure { offset: usize },
    #[error("unknown element symbol {symbol:?} at offset {offset}")]
    UnknownElement { offset: usize, symbol: String },
    #[error("multi-fragment input (dot) at offset {offset}")]
    MultiFragment { offset: usize },
    #[error("malformed bracket atom at offset {offset}")]
    BadBracket { offset: usize },
    #[error("bond or branch without a preceding atom at offset {offset}")]
    DanglingBond { offset: usize },
    #[error("invalid molecule at offset {offset}: {source}")]
    Graph { offset: usize, source: GraphError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    OrganicAtom,
    BracketAtom,
    Bond,
    BranchOpen,
    BranchClose,
    RingClosure,
    Dot,
}

/// A lexical token; `start..end` is its byte span in the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmilesToken<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    pub start: usize,
}

impl SmilesToken<'_> {
    pub fn end(&self) -> usize {
        self.start + self.text.len()
    }
}

/// Splits a SMILES string into tokens whose texts concatenate back to the
/// input.
pub fn tokenize(smiles: &str) -> Result<Vec<SmilesToken<'_>>, SmilesError> {
    let bytes = smiles.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let kind = match bytes[i] {
            b'[' => {
                let close = smiles[i..]
                    .find(']')
                    .ok_or(SmilesError::BadBracket { offset: i })?;
                i += close + 1;
                TokenKind::BracketAtom
            }
            b'C' if bytes.get(i + 1) == Some(&b'l') => {
                i += 2;
                TokenKind::OrganicAtom
            }
            b'B' if bytes.get(i + 1) == Some(&b'r') => {
                i += 2;
                TokenKind::OrganicAtom
            }
            b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I' | b'b' | b'c' | b'n' | b'o'
            | b'p' | b's' => {
                i += 1;
                TokenKind::OrganicAtom
            }
            b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                i += 1;
                TokenKind::Bond
            }
            b'(' => {
                i += 1;
                TokenKind::BranchOpen
            }
            b')' => {
                i += 1;
                TokenKind::BranchClose
            }
            b'0'..=b'9' => {
                i += 1;
                TokenKind::RingClosure
            }
            b'%' => {
                let digits = bytes
                    .get(i + 1..i + 3)
                    .filter(|d| d.iter().all(u8::is_ascii_digit));
                if digits.is_none() {
                    return Err(SmilesError::UnexpectedChar { offset: i, ch: '%' });
                }
                i += 3;
                TokenKind::RingClosure
            }
            b'.' => {
                i += 1;
                TokenKind::Dot
            }
            _ => {
                let ch = smiles[i..].chars().next().unwrap();
                if ch.is_ascii_alphabetic() {
                    return Err(SmilesError::UnknownElement {
                        offset: i,
                        symbol: ch.to_string(),
                    });
                }
                return Err(SmilesError::UnexpectedChar { offset: i, ch });
            }
        };
        out.push(SmilesToken {
            kind,
            text: &smiles[start..i],
            start,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct ParsedAtom {
    attr: AtomAttr,
    aromatic: bool,
}

fn organic_atom(tok: &SmilesToken<'_>) -> Result<ParsedAtom, SmilesError> {
    let aromatic = tok.text.starts_with(|c: char| c.is_ascii_lowercase());
    let symbol = capitalize(tok.text);
    let z = elements::atomic_number(&symbol).ok_or_else(|| SmilesError::UnknownElement {
        offset: tok.start,
        symbol: tok.text.to_string(),
    })?;
    Ok(ParsedAtom {
        attr: AtomAttr::element(z),
        aromatic,
    })
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

const AROMATIC_BRACKET: [&str; 9] = ["se", "as", "te", "b", "c", "n", "o", "p", "s"];
const CHIRAL_CLASSES: [&str; 5] = ["TH", "AL", "SP", "TB", "OH"];

fn bracket_atom(tok: &SmilesToken<'_>) -> Result<ParsedAtom, SmilesError> {
    let bad = || SmilesError::BadBracket { offset: tok.start };
    let inner = &tok.text[1..tok.text.len() - 1];
    let b = inner.as_bytes();
    let mut i = 0;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let sym_start = i;
    let rest = &inner[i..];
    let (symbol, aromatic) =
        if let Some(s) = AROMATIC_BRACKET.iter().find(|s| rest.starts_with(**s)) {
            (capitalize(s), true)
        } else if rest.starts_with(|c: char| c.is_ascii_uppercase()) {
            let two = rest.get(..2).filter(|t| {
                t.as_bytes()[1].is_ascii_lowercase() && elements::atomic_number(t).is_some()
            });
            match two {
                Some(t) => (t.to_string(), false),
                None => (rest[..1].to_string(), false),
            }
        } else {
            return Err(bad());
        };
    let z = elements::atomic_number(&symbol).ok_or_else(|| SmilesError::UnknownElement {
        offset: tok.start + 1 + sym_start,
        symbol: symbol.clone(),
    })?;
    i += symbol.len();

    let mut chirality = 0u8;
    if b.get(i) == Some(&b'@') {
        i += 1;
        if b.get(i) == Some(&b'@') {
            i += 1;
            chirality = 2;
        } else if let Some(class) = CHIRAL_CLASSES.iter().find(|c| inner[i..].starts_with(**c)) {
            i += 2;
            let num_start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i == num_start {
                return Err(bad());
            }
            chirality = match (*class, &inner[num_start..i]) {
                ("TH", "1") => 1,
                ("TH", "2") => 2,
                _ => 3,
            };
        } else {
            chirality = 1;
        }
    }
    if b.get(i) == Some(&b'H') {
        i += 1;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
    }
    if matches!(b.get(i), Some(b'+' | b'-')) {
        let sign = b[i];
        i += 1;
        while b.get(i) == Some(&sign) {
            i += 1;
        }
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
    }
    if b.get(i) == Some(&b':') {
        i += 1;
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return Err(bad());
        }
    }
    if i != b.len() {
        return Err(bad());
    }
    Ok(ParsedAtom {
        attr: AtomAttr::new(z - 1, chirality),
        aromatic,
    })
}

fn bond_order(text: &str) -> BondOrder {
    match text {
        "=" => BondOrder::Double,
        "#" => BondOrder::Triple,
        ":" => BondOrder::Aromatic,
        _ => BondOrder::Single,
    }
}

fn ring_label(text: &str) -> u32 {
    text.trim_start_matches('%')
        .parse()
        .expect("tokenizer checked digits")
}

struct PendingBond {
    order: Option<BondOrder>,
    offset: usize,
}

struct RawBond {
    a: usize,
    b: usize,
    explicit: Option<BondOrder>,
    offset: usize,
}

/// Parses one molecule.
pub fn parse(smiles: &str) -> Result<MolGraph, SmilesError> {
    let tokens = tokenize(smiles)?;
    if tokens.is_empty() {
        return Err(SmilesError::Empty);
    }
    let mut atoms: Vec<ParsedAtom> = Vec::new();
    let mut bonds: Vec<RawBond> = Vec::new();
    let mut prev: Option<usize> = None;
    let mut pending: Option<PendingBond> = None;
    let mut branches: Vec<(usize, usize)> = Vec::new();
    let mut rings: BTreeMap<u32, (usize, Option<BondOrder>, usize)> = BTreeMap::new();

    for tok in &tokens {
        match tok.kind {
            TokenKind::OrganicAtom | TokenKind::BracketAtom => {
                let atom = if tok.kind == TokenKind::OrganicAtom {
                    organic_atom(tok)?
                } else {
                    bracket_atom(tok)?
                };
                let id = atoms.len();
                atoms.push(atom);
                if let Some(p) = prev {
                    let bond = pending.take();
                    bonds.push(RawBond {
                        a: p,
                        b: id,
                        explicit: bond.as_ref().and_then(|b| b.order),
                        offset: bond.map_or(tok.start, |b| b.offset),
                    });
                } else if let Some(b) = pending {
                    return Err(SmilesError::DanglingBond { offset: b.offset });
                }
                prev = Some(id);
            }
            TokenKind::Bond => {
                if prev.is_none() || pending.is_some() {
                    return Err(SmilesError::DanglingBond { offset: tok.start });
                }
                pending = Some(PendingBond {
                    order: Some(bond_order(tok.text)),
                    offset: tok.start,
                });
            }
            TokenKind::BranchOpen => {
                let p = prev.ok_or(SmilesError::DanglingBond { offset: tok.start })?;
                if pending.is_some() {
                    return Err(SmilesError::DanglingBond { offset: tok.start });
                }
                branches.push((p, tok.start));
            }
            TokenKind::BranchClose => {
                let (p, _) = branches
                    .pop()
                    .ok_or(SmilesError::UnmatchedBranchClose { offset: tok.start })?;
                if let Some(b) = pending.take() {
                    return Err(SmilesError::DanglingBond { offset: b.offset });
                }
                prev = Some(p);
            }
            TokenKind::RingClosure => {
                let here = prev.ok_or(SmilesError::DanglingBond { offset: tok.start })?;
                let order = pending.take().and_then(|b| b.order);
                let label = ring_label(tok.text);
                match rings.remove(&label) {
                    Some((other, open_order, _)) => {
                        if other == here {
                            return Err(SmilesError::UnpairedRingClosure { offset: tok.start });
                        }
                        bonds.push(RawBond {
                            a: other,
                            b: here,
                            explicit: order.or(open_order),
                            offset: tok.start,
                        });
                    }
                    None => {
                        rings.insert(label, (here, order, tok.start));
                    }
                }
            }
            TokenKind::Dot => return Err(SmilesError::MultiFragment { offset: tok.start }),
        }
    }
    if let Some(b) = pending {
        return Err(SmilesError::DanglingBond { offset: b.offset });
    }
    if let Some(&(_, offset)) = branches.last() {
        return Err(SmilesError::UnclosedBranch { offset });
    }
    if let Some((_, &(_, _, offset))) = rings.iter().min_by_key(|(_, v)| v.2) {
        return Err(SmilesError::UnpairedRingClosure { offset });
    }

    let attrs: Vec<AtomAttr> = atoms.iter().map(|a| a.attr).collect();
    let provisional = |b: &RawBond| {
        b.explicit
            .unwrap_or(if atoms[b.a].aromatic && atoms[b.b].aromatic {
                BondOrder::Aromatic
            } else {
                BondOrder::Single
            })
    };
    let build = |orders: &[BondOrder]| {
        MolGraph::new(
            attrs.clone(),
            bonds.iter().zip(orders).map(|(b, &o)| (b.a, b.b, o)),
        )
        .map_err(|e| {
            let offset = match &e {
                GraphError::Duplicate { bond, .. } | GraphError::SelfLoop { bond, .. } => {
                    bonds[*bond].offset
                }
                _ => 0,
            };
            SmilesError::Graph { offset, source: e }
        })
    };
    let mut orders: Vec<BondOrder> = bonds.iter().map(provisional).collect();
    let g = build(&orders)?;
    // implicit aromatic-aromatic bonds off any ring are single (e.g. biphenyl)
    let mut changed = false;
    for (id, b) in bonds.iter().enumerate() {
        if b.explicit.is_none() && orders[id] == BondOrder::Aromatic && !g.bond(id).in_ring {
            orders[id] = BondOrder::Single;
            changed = true;
        }
    }
    if changed {
        build(&orders)
    } else {
        Ok(g)
    }
}
