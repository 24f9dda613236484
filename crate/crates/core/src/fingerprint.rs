//! Morgan-style circular bit fingerprints and Tanimoto similarity.

use thiserror::Error;

use crate::molgraph::MolGraph;

pub const DEFAULT_RADIUS: usize = 2;
pub const DEFAULT_WIDTH: usize = 2048;

const SEED: u64 = 0x4d6f_414d_615f_4650;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FingerprintError {
    #[error("fingerprint width {0} is not a positive power of two")]
    Width(usize),
    #[error("fingerprint widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    width: usize,
    radius: usize,
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fold(h: u64, x: u64) -> u64 {
    mix64(h ^ x.wrapping_add(0x9e37_79b9_7f4a_7c15))
}

impl Fingerprint {
    pub fn empty(width: usize, radius: usize) -> Result<Fingerprint, FingerprintError> {
        if width == 0 || !width.is_power_of_two() {
            return Err(FingerprintError::Width(width));
        }
        Ok(Fingerprint {
            words: vec![0; width.div_ceil(64)],
            width,
            radius,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of set bits in increasing order.
    pub fn ones(&self) -> Vec<usize> {
        (0..self.width).filter(|&b| self.get(b)).collect()
    }

    /// Two hex digits per byte, bytes in order; bit `8j + i` is bit `i`
    /// of byte `j`.
    pub fn to_hex(&self) -> String {
        self.words
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(self.width.div_ceil(8))
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Circular fingerprint: round 0 hashes (atom type, degree, chirality);
/// round r hashes the atom's previous code together with the sorted
/// multiset of (bond order, neighbor code). Every code of every round sets
/// one bit.
pub fn morgan_fingerprint(
    g: &MolGraph,
    radius: usize,
    width: usize,
) -> Result<Fingerprint, FingerprintError> {
    let mut fp = Fingerprint::empty(width, radius)?;
    let mask = width as u64 - 1;
    let mut codes: Vec<u64> = (0..g.num_atoms())
        .map(|v| {
            let a = g.atom(v);
            let h = fold(SEED, a.atom_type as u64);
            let h = fold(h, g.degree(v) as u64);
            fold(h, a.chirality as u64)
        })
        .collect();
    for &c in &codes {
        fp.set((c & mask) as usize);
    }
    for round in 1..=radius {
        let next: Vec<u64> = (0..g.num_atoms())
            .map(|v| {
                let mut env: Vec<(usize, u64)> = g
                    .neighbors(v)
                    .iter()
                    .map(|&(u, id)| (g.bond(id).order.index(), codes[u]))
                    .collect();
                env.sort_unstable();
                let mut h = fold(fold(SEED, round as u64), codes[v]);
                for (order, code) in env {
                    h = fold(fold(h, order as u64), code);
                }
                h
            })
            .collect();
        codes = next;
        for &c in &codes {
            fp.set((c & mask) as usize);
        }
    }
    Ok(fp)
}

/// |a ∧ b| / |a ∨ b|, with 1.0 for two empty sets.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.width != b.width {
        return Err(FingerprintError::WidthMismatch(a.width, b.width));
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn fp(s: &str) -> Fingerprint {
        morgan_fingerprint(&parse(s).unwrap(), DEFAULT_RADIUS, DEFAULT_WIDTH).unwrap()
    }

    fn from_bits(bits: &[usize], width: usize) -> Fingerprint {
        let mut f = Fingerprint::empty(width, 0).unwrap();
        for &b in bits {
            f.set(b);
        }
        f
    }

    #[test]
    fn methane_radius_zero_sets_one_bit() {
        let f = morgan_fingerprint(&parse("C").unwrap(), 0, 2048).unwrap();
        assert_eq!(f.count_ones(), 1);
    }

    #[test]
    fn ethane_and_methanol_differ() {
        assert_ne!(fp("CC"), fp("CO"));
    }

    #[test]
    fn hex_layout() {
        let mut fp = Fingerprint::empty(16, 0).unwrap();
        fp.set(0);
        fp.set(9);
        fp.set(15);
        assert_eq!(fp.to_hex(), "0182");
        assert_eq!(Fingerprint::empty(4, 0).unwrap().to_hex(), "00");
    }

    #[test]
    fn width_must_be_power_of_two() {
        let g = parse("C").unwrap();
        assert_eq!(
            morgan_fingerprint(&g, 2, 1000),
            Err(FingerprintError::Width(1000))
        );
        assert_eq!(
            morgan_fingerprint(&g, 2, 0),
            Err(FingerprintError::Width(0))
        );
        assert!(morgan_fingerprint(&g, 2, 16).is_ok());
    }

    #[test]
    fn tanimoto_examples() {
        let f = fp("CC(=O)Oc1ccccc1");
        assert_eq!(tanimoto(&f, &f).unwrap(), 1.0);
        assert_eq!(
            tanimoto(&from_bits(&[1], 64), &from_bits(&[2], 64)).unwrap(),
            0.0
        );
        let t = tanimoto(&from_bits(&[1, 2], 64), &from_bits(&[2, 3], 64)).unwrap();
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            tanimoto(&from_bits(&[], 64), &from_bits(&[], 64)).unwrap(),
            1.0
        );
        assert_eq!(
            tanimoto(&from_bits(&[], 64), &from_bits(&[], 128)),
            Err(FingerprintError::WidthMismatch(64, 128))
        );
    }

    #[test]
    fn stable_hash_values() {
        // Pinned so that fingerprints stay comparable across builds.
        assert_eq!(mix64(0), 0);
        assert_eq!(mix64(1), 0x5692_161d_100b_05e5);
    }

    fn bits() -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0usize..256, 0..40)
    }

    proptest! {
        #[test]
        fn tanimoto_matches_set_oracle(a in bits(), b in bits()) {
            let (fa, fb) = (from_bits(&a, 256), from_bits(&b, 256));
            let sa: BTreeSet<usize> = a.into_iter().collect();
            let sb: BTreeSet<usize> = b.into_iter().collect();
            let union = sa.union(&sb).count();
            let expect = if union == 0 { 1.0 } else { sa.intersection(&sb).count() as f64 / union as f64 };
            let t = tanimoto(&fa, &fb).unwrap();
            prop_assert_eq!(t, expect);
            prop_assert_eq!(t, tanimoto(&fb, &fa).unwrap());
            prop_assert!((0.0..=1.0).contains(&t));
            prop_assert_eq!(fa.ones(), sa.into_iter().collect::<Vec<_>>());
        }

        #[test]
        fn invariant_under_relabeling(
            i in 0..4usize,
            seed in any::<u64>(),
        ) {
            let s = ["CC(=O)Oc1ccccc1", "CN1CCC[C@H]1c1cccnc1", "OCC(N)C(=O)O", "c1ccc2ccccc2c1"][i];
            let g = parse(s).unwrap();
            let mut perm: Vec<usize> = (0..g.num_atoms()).collect();
            let mut z = seed;
            for k in (1..perm.len()).rev() {
                z = mix64(z.wrapping_add(k as u64));
                perm.swap(k, (z % (k as u64 + 1)) as usize);
            }
            let h = g.relabel(&perm);
            let a = morgan_fingerprint(&g, 2, 2048).unwrap();
            prop_assert!(a.count_ones() >= 1);
            prop_assert_eq!(a, morgan_fingerprint(&h, 2, 2048).unwrap());
        }
    }
}
