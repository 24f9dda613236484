//! Ring-system-plus-linker scaffolds and the scaffold split.

use std::collections::BTreeMap;

use crate::fingerprint::mix64;
use crate::molgraph::MolGraph;

/// Atoms left after repeatedly stripping degree-1 atoms: ring systems and
/// the chains linking them. Empty for acyclic molecules.
pub fn scaffold_atoms(g: &MolGraph) -> Vec<usize> {
    let n = g.num_atoms();
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&v| deg[v] <= 1).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &(u, _) in g.neighbors(v) {
            if alive[u] {
                deg[u] -= 1;
                if deg[u] <= 1 {
                    stack.push(u);
                }
            }
        }
    }
    (0..n).filter(|&v| alive[v]).collect()
}

/// Canonical key of the scaffold subgraph: a Weisfeiler-Lehman hash over
/// element, aromaticity and bond order. Isomorphic scaffolds share a key.
pub fn scaffold_key(g: &MolGraph) -> String {
    let atoms = scaffold_atoms(g);
    if atoms.is_empty() {
        return String::new();
    }
    let mut inside = vec![false; g.num_atoms()];
    for &v in &atoms {
        inside[v] = true;
    }
    let mut label: Vec<u64> = (0..g.num_atoms())
        .map(|v| mix64(((g.atom(v).atom_type as u64) << 1) | g.is_aromatic(v) as u64))
        .collect();
    for _ in 0..atoms.len().min(8) {
        let next: Vec<u64> = (0..g.num_atoms())
            .map(|v| {
                if !inside[v] {
                    return 0;
                }
                let mut env: Vec<u64> = g
                    .neighbors(v)
                    .iter()
                    .filter(|&&(u, _)| inside[u])
                    .map(|&(u, id)| mix64(label[u] ^ g.bond(id).order.index() as u64))
                    .collect();
                env.sort_unstable();
                env.iter().fold(mix64(label[v]), |h, &x| mix64(h ^ x))
            })
            .collect();
        label = next;
    }
    let mut final_labels: Vec<u64> = atoms.iter().map(|&v| label[v]).collect();
    final_labels.sort_unstable();
    let h = final_labels
        .iter()
        .fold(atoms.len() as u64, |h, &x| mix64(h ^ x));
    format!("{}:{h:016x}", atoms.len())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
    /// Set when the groups could not fill valid or test.
    pub warning: Option<String>,
}

/// 80:10:10 split by scaffold group. Groups are visited by descending size,
/// then key; each goes to train while train holds under 80% of the records,
/// then to valid while train+valid hold under 90%, else to test.
pub fn scaffold_split(keys: &[String]) -> Split {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        groups.entry(k.as_str()).or_default().push(i);
    }
    let mut groups: Vec<(&str, Vec<usize>)> = groups.into_iter().collect();
    groups.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(b.0)));
    let n = keys.len();
    let mut split = Split::default();
    for (_, members) in groups {
        if split.train.len() * 10 < 8 * n {
            split.train.extend(members);
        } else if (split.train.len() + split.valid.len()) * 10 < 9 * n {
            split.valid.extend(members);
        } else {
            split.test.extend(members);
        }
    }
    for part in [&mut split.train, &mut split.valid, &mut split.test] {
        part.sort_unstable();
    }
    if n > 0 && (split.valid.is_empty() || split.test.is_empty()) {
        split.warning = Some(format!(
            "scaffold groups are too coarse: {} train, {} valid, {} test",
            split.train.len(),
            split.valid.len(),
            split.test.len()
        ));
    }
    split
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse;
    use proptest::prelude::*;

    fn key(s: &str) -> String {
        scaffold_key(&parse(s).unwrap())
    }

    #[test]
    fn scaffolds() {
        assert_eq!(key("CCCO"), "");
        assert_eq!(key("CC(=O)O"), "");
        assert_eq!(key("c1ccccc1"), key("Cc1ccccc1CCO"));
        assert_eq!(key("c1ccccc1CCc1ccccc1"), key("OC(c1ccccc1)Cc1ccc(N)cc1"));
        assert_ne!(key("c1ccccc1"), key("c1ccncc1"));
        assert_ne!(key("c1ccccc1Cc1ccccc1"), key("c1ccccc1CCc1ccccc1"));
        assert_eq!(
            scaffold_atoms(&parse("CCc1ccccc1").unwrap()),
            vec![2, 3, 4, 5, 6, 7]
        );
    }

    #[test]
    fn ten_singletons_split_8_1_1() {
        let keys: Vec<String> = (0..10).map(|i| format!("k{i}")).collect();
        let s = scaffold_split(&keys);
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (8, 1, 1));
        assert!(s.warning.is_none());
    }

    #[test]
    fn one_scaffold_goes_to_train() {
        let keys = vec!["a".to_string(); 7];
        let s = scaffold_split(&keys);
        assert_eq!(s.train.len(), 7);
        assert!(s.valid.is_empty() && s.test.is_empty());
        assert!(s.warning.is_some());
    }

    proptest! {
        #[test]
        fn partition_and_order_independence(
            ids in proptest::collection::vec(0u8..12, 1..80),
            rot in 0usize..80,
        ) {
            let keys: Vec<String> = ids.iter().map(|i| format!("s{i}")).collect();
            let s = scaffold_split(&keys);
            let mut all: Vec<usize> = s.train.iter().chain(&s.valid).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..keys.len()).collect::<Vec<_>>());
            // groups never straddle
            for part in [&s.train, &s.valid, &s.test] {
                for &i in part.iter() {
                    for (j, k) in keys.iter().enumerate() {
                        if *k == keys[i] {
                            prop_assert!(part.contains(&j));
                        }
                    }
                }
            }
            // permuted rows give the same split as sets of records
            let n = keys.len();
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let permuted: Vec<String> = perm.iter().map(|&i| keys[i].clone()).collect();
            let t = scaffold_split(&permuted);
            let back = |v: &[usize]| { let mut x: Vec<usize> = v.iter().map(|&i| perm[i]).collect(); x.sort_unstable(); x };
            prop_assert_eq!(back(&t.train), s.train.clone());
            prop_assert_eq!(back(&t.valid), s.valid.clone());
            prop_assert_eq!(back(&t.test), s.test.clone());
        }
    }
}
