//! BRICS-style motif decomposition.
//!
//! Cleavable bonds are removed and the remaining connected components become
//! motifs. No dummy atoms are added, so the motifs partition the atoms and
//! the motif edges together with the cut edges partition the bonds.

pub mod rules;

use std::collections::BTreeSet;

pub use rules::{BricsRule, Env, RuleError, RuleSet};

use crate::molgraph::MolGraph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Motif {
    /// Sorted node ids.
    pub node_ids: Vec<usize>,
    /// Sorted ids of the bonds with both endpoints inside the motif.
    pub induced_edges: Vec<usize>,
}

impl Motif {
    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifDecomposition {
    /// Ordered by smallest member node id.
    pub motifs: Vec<Motif>,
    /// Sorted ids of the removed bonds.
    pub cut_edges: Vec<usize>,
    pub motif_of: Vec<usize>,
}

impl MotifDecomposition {
    pub fn num_motifs(&self) -> usize {
        self.motifs.len()
    }
}

/// Ids of every acyclic bond matched by at least one rule.
pub fn match_rules(g: &MolGraph, rules: &RuleSet) -> Vec<usize> {
    (0..g.num_bonds())
        .filter(|&id| !g.bond(id).in_ring && rules.rules.iter().any(|r| r.matches_bond(g, id)))
        .collect()
}

/// Decomposes `g` with the bundled BRICS rules.
pub fn decompose(g: &MolGraph) -> MotifDecomposition {
    decompose_with(g, &default_rules())
}

pub fn default_rules() -> RuleSet {
    use std::sync::OnceLock;
    static RULES: OnceLock<RuleSet> = OnceLock::new();
    RULES.get_or_init(RuleSet::brics).clone()
}

pub fn decompose_with(g: &MolGraph, rules: &RuleSet) -> MotifDecomposition {
    let cut_edges = match_rules(g, rules);
    let cut: BTreeSet<usize> = cut_edges.iter().copied().collect();
    let n = g.num_atoms();
    let mut motif_of = vec![usize::MAX; n];
    let mut motifs = Vec::new();
    for start in 0..n {
        if motif_of[start] != usize::MAX {
            continue;
        }
        let idx = motifs.len();
        motif_of[start] = idx;
        let mut nodes = vec![start];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &(u, bond) in g.neighbors(v) {
                if !cut.contains(&bond) && motif_of[u] == usize::MAX {
                    motif_of[u] = idx;
                    nodes.push(u);
                    stack.push(u);
                }
            }
        }
        nodes.sort_unstable();
        motifs.push(Motif {
            node_ids: nodes,
            induced_edges: Vec::new(),
        });
    }
    for (id, b) in g.bonds().iter().enumerate() {
        if !cut.contains(&id) {
            motifs[motif_of[b.endpoints.0]].induced_edges.push(id);
        }
    }
    MotifDecomposition {
        motifs,
        cut_edges,
        motif_of,
    }
}

/// Sorted motif-level neighbor lists induced by the cut edges.
pub fn motif_adjacency(g: &MolGraph, dec: &MotifDecomposition) -> Vec<Vec<usize>> {
    let mut adj = vec![BTreeSet::new(); dec.motifs.len()];
    for &id in &dec.cut_edges {
        let (a, b) = g.bond(id).endpoints;
        let (ma, mb) = (dec.motif_of[a], dec.motif_of[b]);
        if ma != mb {
            adj[ma].insert(mb);
            adj[mb].insert(ma);
        }
    }
    adj.into_iter().map(|s| s.into_iter().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse;
    use proptest::prelude::*;

    fn sizes(dec: &MotifDecomposition) -> Vec<usize> {
        let mut s: Vec<usize> = dec.motifs.iter().map(Motif::len).collect();
        s.sort_unstable();
        s
    }

    #[test]
    fn benzene_is_one_motif() {
        let g = parse("c1ccccc1").unwrap();
        assert!(match_rules(&g, &RuleSet::brics()).is_empty());
        let dec = decompose(&g);
        assert_eq!(sizes(&dec), vec![6]);
        assert!(dec.cut_edges.is_empty());
        assert_eq!(motif_adjacency(&g, &dec), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn ethylbenzene_cuts_the_ring_link() {
        let g = parse("CCc1ccccc1").unwrap();
        let cut = match_rules(&g, &RuleSet::brics());
        assert_eq!(cut.len(), 1);
        let (a, b) = g.bond(cut[0]).endpoints;
        assert_eq!((a, b), (1, 2));
        assert!(!g.is_aromatic(1) && g.is_aromatic(2));
        let dec = decompose(&g);
        assert_eq!(sizes(&dec), vec![2, 6]);
        assert_eq!(motif_adjacency(&g, &dec), vec![vec![1], vec![0]]);
    }

    #[test]
    fn phenyl_acetate_cuts_the_ester() {
        let g = parse("CC(=O)Oc1ccccc1").unwrap();
        let cut = match_rules(&g, &RuleSet::brics());
        let ends: Vec<_> = cut.iter().map(|&id| g.bond(id).endpoints).collect();
        assert!(ends.contains(&(1, 3)), "{ends:?}");
        let dec = decompose(&g);
        assert_eq!(sizes(&dec), vec![1, 3, 6]);
    }

    #[test]
    fn single_atom() {
        let g = parse("C").unwrap();
        let dec = decompose(&g);
        assert_eq!(dec.motifs.len(), 1);
        assert_eq!(dec.motifs[0].node_ids, vec![0]);
        assert_eq!(motif_adjacency(&g, &dec), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn linear_three_motif_chain() {
        // phenyl - CH2 - phenyl: two ring links cut, CH2 in the middle.
        let g = parse("c1ccccc1Cc1ccccc1").unwrap();
        let dec = decompose(&g);
        assert_eq!(dec.motifs.len(), 3);
        let mid = dec.motif_of[6];
        assert_eq!(dec.motifs[mid].node_ids, vec![6]);
        let adj = motif_adjacency(&g, &dec);
        let ends: Vec<usize> = (0..3).filter(|&m| m != mid).collect();
        assert_eq!(adj[mid], ends);
        for &e in &ends {
            assert_eq!(adj[e], vec![mid]);
        }
    }

    #[test]
    fn amide_and_ether_links() {
        // benzamide N-methyl: c-C(=O) is a 16-6 link, C(=O)-N a 1-5 link.
        let g = parse("CNC(=O)c1ccccc1").unwrap();
        assert_eq!(sizes(&decompose(&g)), vec![2, 2, 6]);
        // anisole: only the O-c link; a terminal methyl never qualifies
        let g = parse("COc1ccccc1").unwrap();
        let dec = decompose(&g);
        assert_eq!(dec.cut_edges.len(), 1);
        assert_eq!(g.bond(dec.cut_edges[0]).endpoints, (1, 2));
    }

    const CORPUS: &[&str] = &[
        "CC(=O)Oc1ccccc1C(=O)O",
        "CN1CCC[C@H]1c1cccnc1",
        "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
        "O=C(Nc1ccccc1)c1ccco1",
        "CCOC(=O)C1CCN(CC1)C",
        "c1ccc2c(c1)cccc2OCC(O)CNC(C)C",
        "CS(=O)(=O)Nc1ccc(cc1)C#N",
        "C=CCN1CCC(CC1)Oc1ccccc1",
    ];

    proptest! {
        #[test]
        fn partition_and_ring_preservation(i in 0..CORPUS.len(), seed in any::<u64>()) {
            let g = parse(CORPUS[i]).unwrap();
            let dec = decompose(&g);
            let mut seen = vec![0usize; g.num_atoms()];
            for m in &dec.motifs {
                for &v in &m.node_ids { seen[v] += 1; }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            let mut edges: Vec<usize> = dec.motifs.iter()
                .flat_map(|m| m.induced_edges.iter().copied())
                .chain(dec.cut_edges.iter().copied())
                .collect();
            edges.sort_unstable();
            prop_assert_eq!(edges, (0..g.num_bonds()).collect::<Vec<_>>());
            for &id in &dec.cut_edges {
                prop_assert!(!g.bond(id).in_ring);
            }
            for m in &dec.motifs {
                // induced edges alone must connect the motif
                let mut reach = vec![m.node_ids[0]];
                let mut k = 0;
                while k < reach.len() {
                    let v = reach[k];
                    k += 1;
                    for &id in &m.induced_edges {
                        let b = g.bond(id);
                        if b.touches(v) && !reach.contains(&b.other(v)) {
                            reach.push(b.other(v));
                        }
                    }
                }
                prop_assert_eq!(reach.len(), m.len());
            }

            // relabel equivariance
            let mut perm: Vec<usize> = (0..g.num_atoms()).collect();
            let mut s = seed;
            for k in (1..perm.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(k, (s >> 33) as usize % (k + 1));
            }
            let h = g.relabel(&perm);
            let dh = decompose(&h);
            let mut a: Vec<Vec<usize>> = dec.motifs.iter()
                .map(|m| { let mut v: Vec<usize> = m.node_ids.iter().map(|&x| perm[x]).collect(); v.sort_unstable(); v })
                .collect();
            a.sort();
            let mut b: Vec<Vec<usize>> = dh.motifs.iter().map(|m| m.node_ids.clone()).collect();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }
}
