//! Seeded generator of small drug-like SMILES built from ring units,
//! linkers and substituents, plus a few structural label functions for
//! synthetic downstream tasks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::molgraph::{BondOrder, MolGraph};

/// Ring atoms in order; `true` marks positions that may carry a branch.
const RINGS: &[&[(&str, bool)]] = &[
    &[
        ("c", true),
        ("c", true),
        ("c", true),
        ("c", true),
        ("c", true),
        ("c", true),
    ],
    &[
        ("c", true),
        ("c", true),
        ("c", true),
        ("n", false),
        ("c", true),
        ("c", true),
    ],
    &[
        ("c", true),
        ("c", true),
        ("c", true),
        ("s", false),
        ("c", true),
    ],
    &[
        ("c", true),
        ("c", true),
        ("c", true),
        ("o", false),
        ("c", true),
    ],
    &[
        ("c", true),
        ("c", true),
        ("[nH]", false),
        ("c", true),
        ("c", true),
    ],
    &[
        ("C", true),
        ("C", true),
        ("C", true),
        ("C", true),
        ("C", true),
        ("C", true),
    ],
    &[
        ("C", true),
        ("C", true),
        ("C", true),
        ("N", true),
        ("C", true),
        ("C", true),
    ],
    &[
        ("C", true),
        ("C", true),
        ("O", false),
        ("C", true),
        ("C", true),
        ("N", true),
    ],
    &[
        ("C", true),
        ("C", true),
        ("C", true),
        ("C", true),
        ("C", true),
    ],
];

const LINKERS: &[&str] = &[
    "",
    "C",
    "CC",
    "C(=O)N",
    "NC(=O)",
    "C(=O)O",
    "OC(=O)",
    "O",
    "N",
    "S(=O)(=O)N",
    "C=C",
    "CO",
    "CN",
    "C(=O)",
];

const SUBSTITUENTS: &[&str] = &[
    "C",
    "CC",
    "O",
    "N",
    "F",
    "Cl",
    "OC",
    "C(=O)O",
    "C#N",
    "N(C)C",
    "C(F)(F)F",
    "C(=O)N",
    "CCO",
    "C(C)C",
    "[N+](=O)[O-]",
    "Br",
];

/// SMILES for one ring (with nested units in branches), ring digit `depth+1`.
fn unit(rng: &mut ChaCha8Rng, depth: usize, budget: &mut usize) -> String {
    let ring = RINGS.choose(rng).unwrap();
    let digit = (depth + 1).to_string();
    let open: Vec<usize> = (1..ring.len()).filter(|&i| ring[i].1).collect();
    let mut branches: Vec<Option<String>> = vec![None; ring.len()];
    if *budget > 0 && depth < 3 && rng.gen_bool(0.55) {
        if let Some(&at) = open.choose(rng) {
            *budget -= 1;
            let link = LINKERS.choose(rng).unwrap();
            branches[at] = Some(format!("{link}{}", unit(rng, depth + 1, budget)));
        }
    }
    let subs = rng.gen_range(0..=2);
    for _ in 0..subs {
        if let Some(&at) = open.choose(rng) {
            if branches[at].is_none() {
                branches[at] = Some(SUBSTITUENTS.choose(rng).unwrap().to_string());
            }
        }
    }
    let mut s = String::new();
    for (i, (atom, _)) in ring.iter().enumerate() {
        s.push_str(atom);
        if i == 0 || i == ring.len() - 1 {
            s.push_str(&digit);
        }
        if let Some(b) = &branches[i] {
            s.push_str(&format!("({b})"));
        }
    }
    s
}

/// One molecule: an optional acyclic head, a ring unit with nested units,
/// and an optional tail.
pub fn molecule(rng: &mut ChaCha8Rng) -> String {
    let mut budget = rng.gen_range(1..=3);
    let head = if rng.gen_bool(0.5) {
        format!(
            "{}{}",
            SUBSTITUENTS.choose(rng).unwrap(),
            LINKERS.choose(rng).unwrap()
        )
    } else {
        String::new()
    };
    let core = unit(rng, 0, &mut budget);
    let tail = if rng.gen_bool(0.3) {
        format!(
            "{}{}",
            LINKERS[1..].choose(rng).unwrap(),
            SUBSTITUENTS.choose(rng).unwrap()
        )
    } else {
        String::new()
    };
    // the tail hangs off the core's first atom so it stays attached
    if tail.is_empty() {
        format!("{head}{core}")
    } else {
        let (first, rest) = core.split_at(core.find(|c: char| c.is_ascii_digit()).unwrap() + 1);
        format!("{head}{first}({tail}){rest}")
    }
}

/// `n` SMILES strings from a seed.
pub fn corpus(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| molecule(&mut rng)).collect()
}

fn double_bonded_oxygen(g: &MolGraph, c: usize) -> bool {
    g.neighbors(c)
        .iter()
        .any(|&(u, id)| g.atom(u).atomic_number() == 8 && g.bond(id).order == BondOrder::Double)
}

/// A carbonyl carbon single-bonded to nitrogen.
pub fn has_amide(g: &MolGraph) -> bool {
    (0..g.num_atoms()).any(|c| {
        g.atom(c).atomic_number() == 6
            && double_bonded_oxygen(g, c)
            && g.neighbors(c).iter().any(|&(u, id)| {
                g.atom(u).atomic_number() == 7 && g.bond(id).order == BondOrder::Single
            })
    })
}

/// Any halogen atom.
pub fn has_halogen(g: &MolGraph) -> bool {
    g.atoms()
        .iter()
        .any(|a| matches!(a.atomic_number(), 9 | 17 | 35 | 53))
}

pub fn has_oxygen(g: &MolGraph) -> bool {
    g.atoms().iter().any(|a| a.atomic_number() == 8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse;

    #[test]
    fn corpus_parses_and_is_seeded() {
        let a = corpus(300, 1);
        assert_eq!(a, corpus(300, 1));
        assert_ne!(a, corpus(300, 2));
        for s in &a {
            let g = parse(s).unwrap_or_else(|e| panic!("{s}: {e}"));
            assert!(g.num_atoms() >= 5 && g.components().len() == 1, "{s}");
        }
    }

    #[test]
    fn patterns() {
        assert!(has_amide(&parse("CC(=O)NC").unwrap()));
        assert!(!has_amide(&parse("CC(=O)OC").unwrap()));
        assert!(has_halogen(&parse("Clc1ccccc1").unwrap()));
        assert!(!has_oxygen(&parse("c1ccccc1").unwrap()));
    }
}
