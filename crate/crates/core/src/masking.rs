//! Motif-aware attribute masking and a uniform random-masking baseline.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fingerprint::mix64;
use crate::molgraph::{AttrMatrix, MolGraph, MASK_ATOM_TYPE, MASK_CHIRALITY};
use crate::motif::{motif_adjacency, MotifDecomposition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaskError {
    #[error("invalid mask config: {0}")]
    Config(String),
    #[error("mask fraction must lie in (0, 1), got {0}")]
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    NodeWise,
    ElementWise,
    RandomBaseline,
}

impl MaskMode {
    pub fn name(self) -> &'static str {
        match self {
            MaskMode::NodeWise => "node_wise",
            MaskMode::ElementWise => "element_wise",
            MaskMode::RandomBaseline => "random_baseline",
        }
    }

    pub fn from_name(s: &str) -> Option<MaskMode> {
        match s {
            "node_wise" => Some(MaskMode::NodeWise),
            "element_wise" => Some(MaskMode::ElementWise),
            "random_baseline" => Some(MaskMode::RandomBaseline),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskConfig {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub coverage: f64,
    pub mode: MaskMode,
    /// Every masked node must reach a node of another motif within this
    /// many hops. Normally the encoder depth.
    pub hop_k: usize,
    pub seed: u64,
    /// Node fraction for the random baseline.
    pub random_fraction: f64,
    /// Shuffles tried before settling for an infeasible selection.
    pub attempts: usize,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            alpha_min: 0.15,
            alpha_max: 0.25,
            coverage: 1.0,
            mode: MaskMode::NodeWise,
            hop_k: 5,
            seed: 0,
            random_fraction: 0.2,
            attempts: 8,
        }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<(), MaskError> {
        let bad = |m: &str| Err(MaskError::Config(m.to_string()));
        if !(0.0 < self.alpha_min && self.alpha_min < self.alpha_max && self.alpha_max < 1.0) {
            return bad("need 0 < alpha_min < alpha_max < 1");
        }
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            return bad("coverage must lie in (0, 1]");
        }
        if !(self.random_fraction > 0.0 && self.random_fraction < 1.0) {
            return bad("random_fraction must lie in (0, 1)");
        }
        if self.attempts == 0 {
            return bad("attempts must be positive");
        }
        Ok(())
    }
}

/// Reserved per-dimension codes outside the real attribute vocabularies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskToken(pub [u8; 2]);

impl Default for MaskToken {
    fn default() -> Self {
        MaskToken([MASK_ATOM_TYPE, MASK_CHIRALITY])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskPlan {
    /// Motif indices in selection order.
    pub selected_motifs: Vec<usize>,
    /// Sorted masked node ids for (atom type, chirality).
    pub masked: [Vec<usize>; 2],
    pub realized_alpha: f64,
    /// True when `alpha_min < realized_alpha < alpha_max` was reached.
    pub feasible: bool,
}

impl MaskPlan {
    pub fn empty() -> MaskPlan {
        MaskPlan {
            selected_motifs: Vec::new(),
            masked: [Vec::new(), Vec::new()],
            realized_alpha: 0.0,
            feasible: false,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.masked.iter().all(Vec::is_empty)
    }

    /// Nodes masked in at least one dimension.
    pub fn masked_union(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.masked.concat();
        all.sort_unstable();
        all.dedup();
        all
    }
}

/// Seed for one molecule in one epoch. Independent of worker count.
pub fn molecule_seed(seed: u64, epoch: u64, index: usize) -> u64 {
    mix64(seed ^ mix64(epoch.wrapping_add(1))) ^ index as u64
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Distance from each node to the nearest node outside its own motif.
pub fn inter_motif_distance(g: &MolGraph, dec: &MotifDecomposition) -> Vec<Option<usize>> {
    let mut out = vec![None; g.num_atoms()];
    for (i, m) in dec.motifs.iter().enumerate() {
        let outside = (0..g.num_atoms()).filter(|&u| dec.motif_of[u] != i);
        let dist = g.multi_source_distances(outside);
        for &v in &m.node_ids {
            out[v] = dist[v];
        }
    }
    out
}

/// Motifs whose every node lies within `hop_k` of another motif.
pub fn eligible_motifs(g: &MolGraph, dec: &MotifDecomposition, hop_k: usize) -> Vec<usize> {
    let dist = inter_motif_distance(g, dec);
    (0..dec.motifs.len())
        .filter(|&i| {
            dec.motifs[i]
                .node_ids
                .iter()
                .all(|&v| dist[v].is_some_and(|d| d <= hop_k))
        })
        .collect()
}

/// Samples non-adjacent eligible motifs until the motif node fraction lies
/// strictly between the α bounds, then picks a coverage fraction of nodes
/// inside each chosen motif.
pub fn sample_motifs(
    g: &MolGraph,
    dec: &MotifDecomposition,
    cfg: &MaskConfig,
) -> Result<MaskPlan, MaskError> {
    cfg.validate()?;
    if cfg.mode == MaskMode::RandomBaseline {
        return random_mask(g, cfg.random_fraction, cfg.seed);
    }
    let n = g.num_atoms();
    let eligible = eligible_motifs(g, dec, cfg.hop_k);
    if eligible.is_empty() {
        return Ok(MaskPlan::empty());
    }
    let adj = motif_adjacency(g, dec);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let alpha = |count: usize| count as f64 / n as f64;

    let mut best: Option<(Vec<usize>, usize)> = None;
    let mut feasible = false;
    for _ in 0..cfg.attempts {
        let mut order = eligible.clone();
        order.shuffle(&mut rng);
        let mut chosen: Vec<usize> = Vec::new();
        let mut count = 0;
        for m in order {
            if chosen.iter().any(|c| adj[m].contains(c)) {
                continue;
            }
            let next = count + dec.motifs[m].len();
            if alpha(next) >= cfg.alpha_max {
                continue;
            }
            chosen.push(m);
            count = next;
            if alpha(count) > cfg.alpha_min {
                feasible = true;
                break;
            }
        }
        if feasible || best.as_ref().is_none_or(|(_, c)| count > *c) {
            best = Some((chosen, count));
        }
        if feasible {
            break;
        }
    }
    let (selected, count) = best.unwrap_or_default();

    let mut masked = [Vec::new(), Vec::new()];
    for &m in &selected {
        let nodes = &dec.motifs[m].node_ids;
        let take = round_half_up(cfg.coverage * nodes.len() as f64).clamp(1, nodes.len());
        match cfg.mode {
            MaskMode::NodeWise => {
                let pick: Vec<usize> = nodes.choose_multiple(&mut rng, take).copied().collect();
                masked[0].extend(&pick);
                masked[1].extend(&pick);
            }
            _ => {
                for dim in &mut masked {
                    dim.extend(nodes.choose_multiple(&mut rng, take));
                }
            }
        }
    }
    for dim in &mut masked {
        dim.sort_unstable();
    }
    Ok(MaskPlan {
        selected_motifs: selected,
        masked,
        realized_alpha: alpha(count),
        feasible,
    })
}

/// Uniform node sample ignoring motifs; the same nodes are masked in both
/// dimensions.
pub fn random_mask(g: &MolGraph, fraction: f64, seed: u64) -> Result<MaskPlan, MaskError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(MaskError::Fraction(fraction));
    }
    let n = g.num_atoms();
    let take = round_half_up(fraction * n as f64).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<usize> = (0..n)
        .collect::<Vec<_>>()
        .choose_multiple(&mut rng, take)
        .copied()
        .collect();
    nodes.sort_unstable();
    Ok(MaskPlan {
        selected_motifs: Vec::new(),
        masked: [nodes.clone(), nodes],
        realized_alpha: take as f64 / n as f64,
        feasible: true,
    })
}

/// The attribute matrix with masked entries replaced by the token codes.
pub fn apply_mask(g: &MolGraph, plan: &MaskPlan, token: MaskToken) -> AttrMatrix {
    let mut x = g.attr_matrix();
    for (dim, nodes) in plan.masked.iter().enumerate() {
        for &v in nodes {
            x.0[v][dim] = token.0[dim];
        }
    }
    x
}
