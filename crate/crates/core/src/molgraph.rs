//! Attributed heavy-atom molecular graphs.
//!
//! Every atom carries two categorical attributes (atom type and chirality
//! tag) which together form the `|V| x 2` attribute matrix consumed by the
//! encoder. Hydrogens are implicit and never appear as nodes.

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

/// Number of real atom types (element number minus one).
pub const NUM_ATOM_TYPES: usize = 119;
/// Number of real chirality tags.
pub const NUM_CHIRALITY: usize = 4;
/// Atom-type code reserved for the mask token.
pub const MASK_ATOM_TYPE: u8 = 119;
/// Chirality code reserved for the mask token.
pub const MASK_CHIRALITY: u8 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("molecule has no atoms")]
    Empty,
    #[error("atom {atom}: atom type {value} out of range")]
    AtomType { atom: usize, value: u8 },
    #[error("atom {atom}: chirality {value} out of range")]
    Chirality { atom: usize, value: u8 },
    #[error("bond {bond}: endpoint {node} out of range")]
    Endpoint { bond: usize, node: usize },
    #[error("bond {bond}: self loop on atom {node}")]
    SelfLoop { bond: usize, node: usize },
    #[error("bond {bond}: duplicate of an earlier bond between {a} and {b}")]
    Duplicate { bond: usize, a: usize, b: usize },
    #[error("node {node} out of range for graph with {len} atoms")]
    NodeOutOfRange { node: usize, len: usize },
}

/// Per-atom categorical attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomAttr {
    /// Element number minus one, in `0..119`.
    pub atom_type: u8,
    /// Chirality tag in `0..4`.
    pub chirality: u8,
}

impl AtomAttr {
    pub fn new(atom_type: u8, chirality: u8) -> Self {
        Self {
            atom_type,
            chirality,
        }
    }

    /// Atom for the element with the given atomic number and no chirality tag.
    pub fn element(atomic_number: u8) -> Self {
        Self::new(atomic_number - 1, 0)
    }

    pub fn atomic_number(&self) -> u8 {
        self.atom_type + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub const ALL: [BondOrder; 4] = [
        BondOrder::Single,
        BondOrder::Double,
        BondOrder::Triple,
        BondOrder::Aromatic,
    ];

    /// Dense index used by bond embeddings and fingerprints.
    pub fn index(self) -> usize {
        match self {
            BondOrder::Single => 0,
            BondOrder::Double => 1,
            BondOrder::Triple => 2,
            BondOrder::Aromatic => 3,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            BondOrder::Single => '-',
            BondOrder::Double => '=',
            BondOrder::Triple => '#',
            BondOrder::Aromatic => ':',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    /// Endpoints, stored with the smaller node id first.
    pub endpoints: (usize, usize),
    pub order: BondOrder,
    /// True iff the bond lies on at least one cycle.
    pub in_ring: bool,
}

impl Bond {
    pub fn other(&self, v: usize) -> usize {
        if self.endpoints.0 == v {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }

    pub fn touches(&self, v: usize) -> bool {
        self.endpoints.0 == v || self.endpoints.1 == v
    }
}

/// The categorical `|V| x 2` attribute matrix. Row `v` holds
/// `[atom_type, chirality]`; mask codes are allowed here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrMatrix(pub Vec<[u8; 2]>);

impl AttrMatrix {
    pub fn rows(&self) -> usize {
        self.0.len()
    }

    pub fn row(&self, v: usize) -> [u8; 2] {
        self.0[v]
    }
}

/// Neighbor entry: `(neighbor node, bond id)`.
pub type Neighbor = (usize, usize);

/// An immutable attributed molecular graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MolGraph {
    atoms: Vec<AtomAttr>,
    bonds: Vec<Bond>,
    // neighbor lists sorted by neighbor id
    adjacency: Vec<Vec<Neighbor>>,
}

impl MolGraph {
    /// Builds a graph from atoms and `(a, b, order)` bond triples. Ring flags
    /// are computed here so they always agree with the topology.
    pub fn new(
        atoms: Vec<AtomAttr>,
        bonds: impl IntoIterator<Item = (usize, usize, BondOrder)>,
    ) -> Result<Self, GraphError> {
        if atoms.is_empty() {
            return Err(GraphError::Empty);
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.atom_type as usize >= NUM_ATOM_TYPES {
                return Err(GraphError::AtomType {
                    atom: i,
                    value: a.atom_type,
                });
            }
            if a.chirality as usize >= NUM_CHIRALITY {
                return Err(GraphError::Chirality {
                    atom: i,
                    value: a.chirality,
                });
            }
        }
        let n = atoms.len();
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for (i, (a, b, order)) in bonds.into_iter().enumerate() {
            for node in [a, b] {
                if node >= n {
                    return Err(GraphError::Endpoint { bond: i, node });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop { bond: i, node: a });
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(GraphError::Duplicate {
                    bond: i,
                    a: key.0,
                    b: key.1,
                });
            }
            list.push(Bond {
                endpoints: key,
                order,
                in_ring: false,
            });
        }
        let mut adjacency = vec![Vec::new(); n];
        for (id, b) in list.iter().enumerate() {
            adjacency[b.endpoints.0].push((b.endpoints.1, id));
            adjacency[b.endpoints.1].push((b.endpoints.0, id));
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        let mut g = Self {
            atoms,
            bonds: list,
            adjacency,
        };
        for id in g.ring_bonds() {
            g.bonds[id].in_ring = true;
        }
        Ok(g)
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }

    pub fn atoms(&self) -> &[AtomAttr] {
        &self.atoms
    }

    pub fn atom(&self, v: usize) -> AtomAttr {
        self.atoms[v]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn bond(&self, id: usize) -> &Bond {
        &self.bonds[id]
    }

    /// Symmetric neighbor lists, one per node, sorted by neighbor id.
    pub fn adjacency(&self) -> &[Vec<Neighbor>] {
        &self.adjacency
    }

    pub fn neighbors(&self, v: usize) -> &[Neighbor] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Bond id joining `a` and `b`, if any.
    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|&&(u, _)| u == b)
            .map(|&(_, id)| id)
    }

    /// An atom is aromatic iff it carries at least one aromatic bond.
    pub fn is_aromatic(&self, v: usize) -> bool {
        self.adjacency[v]
            .iter()
            .any(|&(_, id)| self.bonds[id].order == BondOrder::Aromatic)
    }

    pub fn in_ring(&self, v: usize) -> bool {
        self.adjacency[v]
            .iter()
            .any(|&(_, id)| self.bonds[id].in_ring)
    }

    pub fn attr_matrix(&self) -> AttrMatrix {
        AttrMatrix(
            self.atoms
                .iter()
                .map(|a| [a.atom_type, a.chirality])
                .collect(),
        )
    }

    /// Bond ids that lie on a cycle: exactly the non-bridge edges.
    pub fn ring_bonds(&self) -> Vec<usize> {
        let bridges = self.bridges();
        (0..self.bonds.len())
            .filter(|id| !bridges.contains(id))
            .collect()
    }

    // Iterative Tarjan lowlink over every connected component.
    fn bridges(&self) -> HashSet<usize> {
        let n = self.atoms.len();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut out = HashSet::new();
        let mut timer = 0;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            // (node, parent bond, next neighbor cursor)
            let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(&mut (v, parent_bond, ref mut cursor)) = stack.last_mut() {
                if let Some(&(u, id)) = self.adjacency[v].get(*cursor) {
                    *cursor += 1;
                    if Some(id) == parent_bond {
                        continue;
                    }
                    if disc[u] == usize::MAX {
                        disc[u] = timer;
                        low[u] = timer;
                        timer += 1;
                        stack.push((u, Some(id), 0));
                    } else {
                        low[v] = low[v].min(disc[u]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[v]);
                        if low[v] > disc[p] {
                            out.insert(parent_bond.expect("non-root has a parent bond"));
                        }
                    }
                }
            }
        }
        out
    }

    /// Nodes at shortest-path distance at most `k` from `v`, including `v`,
    /// in ascending order.
    pub fn k_hop_neighborhood(&self, v: usize, k: usize) -> Result<Vec<usize>, GraphError> {
        let dist = self.distances_from(v)?;
        Ok((0..self.num_atoms())
            .filter(|&u| dist[u].is_some_and(|d| d <= k))
            .collect())
    }

    /// BFS distances from `v`; `None` for nodes in other components.
    pub fn distances_from(&self, v: usize) -> Result<Vec<Option<usize>>, GraphError> {
        let n = self.num_atoms();
        if v >= n {
            return Err(GraphError::NodeOutOfRange { node: v, len: n });
        }
        Ok(self.multi_source_distances(std::iter::once(v)))
    }

    /// BFS distance from the nearest of `sources` to every node.
    pub fn multi_source_distances(
        &self,
        sources: impl IntoIterator<Item = usize>,
    ) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_atoms()];
        let mut queue = VecDeque::new();
        for s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &(u, _) in &self.adjacency[v] {
                if dist[u].is_none() {
                    dist[u] = Some(d + 1);
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Connected components as sorted node lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.num_atoms()];
        let mut comps = Vec::new();
        for s in 0..self.num_atoms() {
            if seen[s] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &(u, _) in &self.adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Returns the graph with node `v` renamed to `perm[v]`.
    ///
    /// Panics if `perm` is not a permutation of `0..num_atoms()`.
    pub fn relabel(&self, perm: &[usize]) -> MolGraph {
        let n = self.num_atoms();
        assert_eq!(perm.len(), n, "permutation length mismatch");
        let mut atoms = vec![AtomAttr::new(0, 0); n];
        let mut hit = vec![false; n];
        for (v, &p) in perm.iter().enumerate() {
            assert!(!hit[p], "not a permutation");
            hit[p] = true;
            atoms[p] = self.atoms[v];
        }
        let bonds: Vec<_> = self
            .bonds
            .iter()
            .map(|b| (perm[b.endpoints.0], perm[b.endpoints.1], b.order))
            .collect();
        MolGraph::new(atoms, bonds).expect("relabeling preserves validity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> MolGraph {
        MolGraph::new(
            vec![AtomAttr::element(6); n],
            (1..n).map(|i| (i - 1, i, BondOrder::Single)),
        )
        .unwrap()
    }

    fn benzene() -> MolGraph {
        MolGraph::new(
            vec![AtomAttr::element(6); 6],
            (0..6).map(|i| (i, (i + 1) % 6, BondOrder::Aromatic)),
        )
        .unwrap()
    }

    fn ethylbenzene() -> MolGraph {
        let mut bonds: Vec<_> = (0..6)
            .map(|i| (i, (i + 1) % 6, BondOrder::Aromatic))
            .collect();
        bonds.push((0, 6, BondOrder::Single));
        bonds.push((6, 7, BondOrder::Single));
        MolGraph::new(vec![AtomAttr::element(6); 8], bonds).unwrap()
    }

    // Oracle: a bond is on a cycle iff its endpoints stay connected without it.
    fn ring_bonds_by_removal(g: &MolGraph) -> Vec<usize> {
        (0..g.num_bonds())
            .filter(|&skip| {
                let (a, b) = g.bond(skip).endpoints;
                let mut seen = vec![false; g.num_atoms()];
                let mut stack = vec![a];
                seen[a] = true;
                while let Some(v) = stack.pop() {
                    for &(u, id) in g.neighbors(v) {
                        if id != skip && !seen[u] {
                            seen[u] = true;
                            stack.push(u);
                        }
                    }
                }
                seen[b]
            })
            .collect()
    }

    #[test]
    fn single_atom_has_empty_neighbor_list() {
        let g = MolGraph::new(vec![AtomAttr::element(6)], []).unwrap();
        assert_eq!(g.adjacency(), &[Vec::<Neighbor>::new()]);
    }

    #[test]
    fn two_atom_chain_is_symmetric() {
        let g = chain(2);
        assert_eq!(g.neighbors(0), &[(1, 0)]);
        assert_eq!(g.neighbors(1), &[(0, 0)]);
    }

    #[test]
    fn benzene_nodes_have_degree_two() {
        let g = benzene();
        assert!((0..6).all(|v| g.degree(v) == 2));
    }

    #[test]
    fn ring_bonds_examples() {
        assert!(chain(5).ring_bonds().is_empty());
        assert_eq!(benzene().ring_bonds(), vec![0, 1, 2, 3, 4, 5]);
        let eb = ethylbenzene();
        assert_eq!(eb.ring_bonds(), ring_bonds_by_removal(&eb));
        assert_eq!(eb.ring_bonds(), vec![0, 1, 2, 3, 4, 5]);
        assert!(!eb.bond(6).in_ring && !eb.bond(7).in_ring);
    }

    #[test]
    fn k_hop_examples() {
        let p = chain(3);
        assert_eq!(p.k_hop_neighborhood(0, 0).unwrap(), vec![0]);
        assert_eq!(p.k_hop_neighborhood(0, 1).unwrap(), vec![0, 1]);
        let b = benzene();
        for v in 0..6 {
            assert_eq!(
                b.k_hop_neighborhood(v, 3).unwrap(),
                (0..6).collect::<Vec<_>>()
            );
        }
        assert!(matches!(
            p.k_hop_neighborhood(7, 1),
            Err(GraphError::NodeOutOfRange { node: 7, len: 3 })
        ));
    }

    #[test]
    fn construction_rejects_bad_input() {
        let c = AtomAttr::element(6);
        assert_eq!(MolGraph::new(vec![], []), Err(GraphError::Empty));
        assert!(matches!(
            MolGraph::new(vec![c, c], [(0, 0, BondOrder::Single)]),
            Err(GraphError::SelfLoop { .. })
        ));
        assert!(matches!(
            MolGraph::new(
                vec![c, c],
                [(0, 1, BondOrder::Single), (1, 0, BondOrder::Double)]
            ),
            Err(GraphError::Duplicate { .. })
        ));
        assert!(matches!(
            MolGraph::new(vec![AtomAttr::new(119, 0)], []),
            Err(GraphError::AtomType { .. })
        ));
        assert!(matches!(
            MolGraph::new(vec![AtomAttr::new(5, 4)], []),
            Err(GraphError::Chirality { .. })
        ));
    }

    #[test]
    fn attr_matrix_mirrors_atoms() {
        let g = MolGraph::new(
            vec![AtomAttr::new(5, 1), AtomAttr::new(7, 0)],
            [(0, 1, BondOrder::Single)],
        )
        .unwrap();
        assert_eq!(g.attr_matrix().0, vec![[5, 1], [7, 0]]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph() -> impl Strategy<Value = MolGraph> {
            (1usize..14)
                .prop_flat_map(|n| {
                    let pairs = proptest::collection::vec((0..n, 0..n), 0..(2 * n));
                    (Just(n), pairs)
                })
                .prop_map(|(n, pairs)| {
                    let mut seen = HashSet::new();
                    let bonds: Vec<_> = pairs
                        .into_iter()
                        .filter(|&(a, b)| a != b && seen.insert((a.min(b), a.max(b))))
                        .map(|(a, b)| (a, b, BondOrder::Single))
                        .collect();
                    MolGraph::new(vec![AtomAttr::element(6); n], bonds).unwrap()
                })
        }

        proptest! {
            #[test]
            fn degree_sum_is_twice_bond_count(g in arb_graph()) {
                let total: usize = (0..g.num_atoms()).map(|v| g.degree(v)).sum();
                prop_assert_eq!(total, 2 * g.num_bonds());
            }

            #[test]
            fn ring_bonds_match_removal_oracle(g in arb_graph()) {
                prop_assert_eq!(g.ring_bonds(), ring_bonds_by_removal(&g));
            }

            #[test]
            fn ring_bonds_are_relabel_invariant(g in arb_graph(), seed in any::<u64>()) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let mut perm: Vec<usize> = (0..g.num_atoms()).collect();
                perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let h = g.relabel(&perm);
                let mut mapped: Vec<(usize, usize)> = g
                    .ring_bonds()
                    .into_iter()
                    .map(|id| {
                        let (a, b) = g.bond(id).endpoints;
                        (perm[a].min(perm[b]), perm[a].max(perm[b]))
                    })
                    .collect();
                let mut direct: Vec<(usize, usize)> =
                    h.ring_bonds().into_iter().map(|id| h.bond(id).endpoints).collect();
                mapped.sort_unstable();
                direct.sort_unstable();
                prop_assert_eq!(mapped, direct);
            }

            #[test]
            fn k_hop_is_monotone_and_saturates(g in arb_graph(), v_seed in any::<usize>()) {
                let v = v_seed % g.num_atoms();
                let mut prev = g.k_hop_neighborhood(v, 0).unwrap();
                for k in 1..=g.num_atoms() {
                    let cur = g.k_hop_neighborhood(v, k).unwrap();
                    prop_assert!(prev.iter().all(|u| cur.contains(u)));
                    prev = cur;
                }
                let comp = g.components().into_iter().find(|c| c.contains(&v)).unwrap();
                prop_assert_eq!(prev, comp);
            }
        }
    }
}
