//! GIN encoder, attribute decoders and prediction head on top of a small
//! reverse-mode autodiff core.

pub mod params;
pub mod tape;
pub mod tensor;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use params::{AdamConfig, Param, ParamStore};
pub use tape::{cosine, Adjacency, NumericError, Readout, Segments, Tape, Var};
pub use tensor::Tensor;

use crate::loss::Target;
use crate::molgraph::{AttrMatrix, MolGraph, NUM_ATOM_TYPES, NUM_CHIRALITY};

/// Atom-type rows including the mask code.
pub const ATOM_VOCAB: usize = NUM_ATOM_TYPES + 1;
pub const CHIRALITY_VOCAB: usize = NUM_CHIRALITY + 1;
const BOND_VOCAB: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub layers: usize,
    pub embed_dim: usize,
    pub readout: Readout,
    pub learn_eps: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            layers: 5,
            embed_dim: 32,
            readout: Readout::Mean,
            learn_eps: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Gnn,
    Mlp,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Gnn => "gnn",
            DecoderKind::Mlp => "mlp",
        }
    }

    pub fn from_name(s: &str) -> Option<DecoderKind> {
        match s {
            "gnn" => Some(DecoderKind::Gnn),
            "mlp" => Some(DecoderKind::Mlp),
            _ => None,
        }
    }
}

/// Several graphs concatenated into one disconnected graph.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub x: Vec<[u8; 2]>,
    pub adj: Adjacency,
    pub segs: Segments,
}

impl GraphBatch {
    /// `xs[i]` is the (possibly masked) attribute matrix of `graphs[i]`.
    pub fn new(graphs: &[&MolGraph], xs: &[AttrMatrix]) -> GraphBatch {
        assert_eq!(graphs.len(), xs.len());
        let mut x = Vec::new();
        let mut adj = Vec::new();
        let mut segs = Vec::new();
        for (g, xm) in graphs.iter().zip(xs) {
            assert_eq!(g.num_atoms(), xm.rows());
            let off = x.len();
            x.extend_from_slice(&xm.0);
            for v in 0..g.num_atoms() {
                adj.push(
                    g.neighbors(v)
                        .iter()
                        .map(|&(u, id)| (u + off, g.bond(id).order.index()))
                        .collect(),
                );
            }
            segs.push((off, x.len()));
        }
        GraphBatch {
            x,
            adj: Arc::new(adj),
            segs: Arc::new(segs),
        }
    }

    /// Batch with unmasked attributes.
    pub fn plain(graphs: &[&MolGraph]) -> GraphBatch {
        let xs: Vec<AttrMatrix> = graphs.iter().map(|g| g.attr_matrix()).collect();
        GraphBatch::new(graphs, &xs)
    }

    pub fn num_nodes(&self) -> usize {
        self.x.len()
    }

    pub fn num_graphs(&self) -> usize {
        self.segs.len()
    }

    /// Same graphs with the adjacency removed.
    pub fn without_edges(&self) -> GraphBatch {
        GraphBatch {
            x: self.x.clone(),
            adj: Arc::new(vec![Vec::new(); self.x.len()]),
            segs: self.segs.clone(),
        }
    }
}

fn insert_zeros(store: &mut ParamStore, name: &str, rows: usize, cols: usize, trainable: bool) {
    store.insert(name, Tensor::zeros(rows, cols), trainable);
}

fn insert_gin_layer(
    store: &mut ParamStore,
    p: &str,
    k: usize,
    learn_eps: bool,
    rng: &mut ChaCha8Rng,
) {
    store.insert_uniform(&format!("{p}.bond"), BOND_VOCAB, k, k, rng);
    insert_zeros(store, &format!("{p}.eps"), 1, 1, learn_eps);
    store.insert_uniform(&format!("{p}.w1"), k, 2 * k, k, rng);
    insert_zeros(store, &format!("{p}.b1"), 1, 2 * k, true);
    store.insert_uniform(&format!("{p}.w2"), 2 * k, k, 2 * k, rng);
    insert_zeros(store, &format!("{p}.b2"), 1, k, true);
}

fn decoder_heads(target: Target) -> Vec<(&'static str, usize)> {
    match target {
        Target::AtomType => vec![("dec.atom", NUM_ATOM_TYPES)],
        Target::Chirality => vec![("dec.chir", NUM_CHIRALITY)],
        Target::BothOneDecoder => vec![("dec.joint", NUM_ATOM_TYPES + NUM_CHIRALITY)],
        Target::BothTwoDecoders => {
            vec![("dec.atom", NUM_ATOM_TYPES), ("dec.chir", NUM_CHIRALITY)]
        }
    }
}

/// Fresh encoder parameters (`enc.*`).
pub fn init_encoder(store: &mut ParamStore, cfg: &EncoderConfig, rng: &mut ChaCha8Rng) {
    let k = cfg.embed_dim;
    store.insert_uniform("enc.atom_emb", ATOM_VOCAB, k, k, rng);
    store.insert_uniform("enc.chir_emb", CHIRALITY_VOCAB, k, k, rng);
    for l in 0..cfg.layers {
        insert_gin_layer(store, &format!("enc.l{l}"), k, cfg.learn_eps, rng);
    }
}

/// Fresh decoder parameters (`dec.*`) for the given target.
pub fn init_decoder(
    store: &mut ParamStore,
    cfg: &EncoderConfig,
    kind: DecoderKind,
    target: Target,
    rng: &mut ChaCha8Rng,
) {
    let k = cfg.embed_dim;
    for (p, classes) in decoder_heads(target) {
        match kind {
            DecoderKind::Gnn => {
                insert_gin_layer(store, &format!("{p}.gin"), k, false, rng);
                store.insert_uniform(&format!("{p}.w"), k, classes, k, rng);
                insert_zeros(store, &format!("{p}.b"), 1, classes, true);
            }
            DecoderKind::Mlp => {
                store.insert_uniform(&format!("{p}.w1"), k, k, k, rng);
                insert_zeros(store, &format!("{p}.b1"), 1, k, true);
                store.insert_uniform(&format!("{p}.w2"), k, classes, k, rng);
                insert_zeros(store, &format!("{p}.b2"), 1, classes, true);
            }
        }
    }
}

/// Fresh prediction head (`head.*`) with one logit per task.
pub fn init_head(store: &mut ParamStore, embed_dim: usize, tasks: usize, rng: &mut ChaCha8Rng) {
    let k = embed_dim;
    store.insert_uniform("head.w1", k, k, k, rng);
    insert_zeros(store, "head.b1", 1, k, true);
    store.insert_uniform("head.w2", k, tasks, k, rng);
    insert_zeros(store, "head.b2", 1, tasks, true);
}

/// Encoder + decoder parameters for pre-training, seeded.
pub fn init_pretrain_params(
    cfg: &EncoderConfig,
    kind: DecoderKind,
    target: Target,
    seed: u64,
) -> ParamStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    init_encoder(&mut store, cfg, &mut rng);
    init_decoder(&mut store, cfg, kind, target, &mut rng);
    store
}

fn p(tape: &mut Tape, store: &ParamStore, name: &str) -> Var {
    let id = store
        .id(name)
        .unwrap_or_else(|| panic!("missing parameter {name}"));
    tape.param(store, id)
}

fn gin_layer(tape: &mut Tape, store: &ParamStore, prefix: &str, h: Var, adj: &Adjacency) -> Var {
    let eps = p(tape, store, &format!("{prefix}.eps"));
    let bond = p(tape, store, &format!("{prefix}.bond"));
    let agg = tape.gin_aggregate(h, eps, bond, adj.clone());
    let (w1, b1) = (
        p(tape, store, &format!("{prefix}.w1")),
        p(tape, store, &format!("{prefix}.b1")),
    );
    let (w2, b2) = (
        p(tape, store, &format!("{prefix}.w2")),
        p(tape, store, &format!("{prefix}.b2")),
    );
    let z = tape.linear(agg, w1, b1);
    let z = tape.relu(z);
    tape.linear(z, w2, b2)
}

/// Layer-0 embeddings: atom-type plus chirality embedding rows.
pub fn embed(tape: &mut Tape, store: &ParamStore, batch: &GraphBatch) -> Var {
    let atoms: Vec<usize> = batch.x.iter().map(|r| r[0] as usize).collect();
    let chir: Vec<usize> = batch.x.iter().map(|r| r[1] as usize).collect();
    let ae = p(tape, store, "enc.atom_emb");
    let ce = p(tape, store, "enc.chir_emb");
    let a = tape.gather(ae, Arc::new(atoms));
    let c = tape.gather(ce, Arc::new(chir));
    tape.add(a, c)
}

/// Node representations |V|×k. Rows listed in `zeroed` have their layer-0
/// embedding replaced by zeros.
pub fn encode(
    tape: &mut Tape,
    store: &ParamStore,
    cfg: &EncoderConfig,
    batch: &GraphBatch,
    zeroed: &[usize],
) -> Var {
    let mut h = embed(tape, store, batch);
    if !zeroed.is_empty() {
        h = tape.zero_rows(h, zeroed.to_vec());
    }
    for l in 0..cfg.layers {
        h = gin_layer(tape, store, &format!("enc.l{l}"), h, &batch.adj);
        if l + 1 < cfg.layers {
            h = tape.relu(h);
        }
    }
    h
}

pub fn readout(tape: &mut Tape, h: Var, batch: &GraphBatch, mode: Readout) -> Var {
    tape.readout(h, batch.segs.clone(), mode)
}

/// Per-node logits, one entry per reconstructed dimension: atom type
/// and/or chirality, in that order.
pub fn decode(
    tape: &mut Tape,
    store: &ParamStore,
    kind: DecoderKind,
    target: Target,
    h: Var,
    batch: &GraphBatch,
) -> Vec<Var> {
    let mut out = Vec::new();
    for (prefix, _) in decoder_heads(target) {
        let z = match kind {
            DecoderKind::Gnn => {
                let g = gin_layer(tape, store, &format!("{prefix}.gin"), h, &batch.adj);
                let g = tape.relu(g);
                let (w, b) = (
                    p(tape, store, &format!("{prefix}.w")),
                    p(tape, store, &format!("{prefix}.b")),
                );
                tape.linear(g, w, b)
            }
            DecoderKind::Mlp => {
                let (w1, b1) = (
                    p(tape, store, &format!("{prefix}.w1")),
                    p(tape, store, &format!("{prefix}.b1")),
                );
                let (w2, b2) = (
                    p(tape, store, &format!("{prefix}.w2")),
                    p(tape, store, &format!("{prefix}.b2")),
                );
                let z = tape.linear(h, w1, b1);
                let z = tape.relu(z);
                tape.linear(z, w2, b2)
            }
        };
        if target == Target::BothOneDecoder {
            out.push(tape.slice_cols(z, 0, NUM_ATOM_TYPES));
            out.push(tape.slice_cols(z, NUM_ATOM_TYPES, NUM_CHIRALITY));
        } else {
            out.push(z);
        }
    }
    out
}

/// Task logits from graph vectors (sigmoid is left to evaluation).
pub fn predict(tape: &mut Tape, store: &ParamStore, hg: Var) -> Var {
    let (w1, b1) = (p(tape, store, "head.w1"), p(tape, store, "head.b1"));
    let (w2, b2) = (p(tape, store, "head.w2"), p(tape, store, "head.b2"));
    let z = tape.linear(hg, w1, b1);
    let z = tape.relu(z);
    tape.linear(z, w2, b2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse;

    fn small_cfg(layers: usize) -> EncoderConfig {
        EncoderConfig {
            layers,
            embed_dim: 8,
            ..EncoderConfig::default()
        }
    }

    fn forward_h(store: &ParamStore, cfg: &EncoderConfig, g: &MolGraph) -> Tensor {
        let mut tape = Tape::new();
        let b = GraphBatch::plain(&[g]);
        let h = encode(&mut tape, store, cfg, &b, &[]);
        tape.value(h).clone()
    }

    #[test]
    fn zero_params_give_zero_embeddings() {
        let cfg = small_cfg(3);
        let mut store = init_pretrain_params(&cfg, DecoderKind::Gnn, Target::AtomType, 1);
        store.zero_values();
        let h = forward_h(&store, &cfg, &parse("CC(=O)O").unwrap());
        assert!(h.data.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn isolated_node_single_layer() {
        let cfg = small_cfg(1);
        let mut store = init_pretrain_params(&cfg, DecoderKind::Mlp, Target::AtomType, 2);
        store.get_mut("enc.l0.eps").unwrap().value = Tensor::scalar(0.5);
        let g = parse("N").unwrap();
        let h = forward_h(&store, &cfg, &g);
        // MLP((1+ε)·embed(x)) by hand
        let k = cfg.embed_dim;
        let a = store.get("enc.atom_emb").unwrap().value.row(6).to_vec();
        let c = store.get("enc.chir_emb").unwrap().value.row(0).to_vec();
        let x0: Vec<f64> = a.iter().zip(&c).map(|(x, y)| 1.5 * (x + y)).collect();
        let w1 = &store.get("enc.l0.w1").unwrap().value;
        let w2 = &store.get("enc.l0.w2").unwrap().value;
        let mut hid = vec![0.0; 2 * k];
        for (j, hj) in hid.iter_mut().enumerate() {
            *hj = (0..k).map(|i| x0[i] * w1.at(i, j)).sum::<f64>().max(0.0);
        }
        for d in 0..k {
            let want: f64 = (0..2 * k).map(|j| hid[j] * w2.at(j, d)).sum();
            assert!((h.at(0, d) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn relabel_permutes_rows_bitwise() {
        let cfg = small_cfg(3);
        let store = init_pretrain_params(&cfg, DecoderKind::Gnn, Target::AtomType, 3);
        let g = parse("CC(=O)Oc1ccccc1C(=O)O").unwrap();
        let n = g.num_atoms();
        let perm: Vec<usize> = (0..n).map(|v| (v * 5 + 3) % n).collect();
        let h1 = forward_h(&store, &cfg, &g);
        let h2 = forward_h(&store, &cfg, &g.relabel(&perm));
        for v in 0..n {
            let a: Vec<u64> = h1.row(v).iter().map(|x| x.to_bits()).collect();
            let b: Vec<u64> = h2.row(perm[v]).iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b);
        }
        for mode in [Readout::Mean, Readout::Sum, Readout::Max] {
            let pool = |g: &MolGraph| {
                let mut tape = Tape::new();
                let b = GraphBatch::plain(&[g]);
                let h = encode(&mut tape, &store, &cfg, &b, &[]);
                let r = readout(&mut tape, h, &b, mode);
                tape.value(r)
                    .data
                    .iter()
                    .map(|x| x.to_bits())
                    .collect::<Vec<_>>()
            };
            assert_eq!(pool(&g), pool(&g.relabel(&perm)));
        }
    }

    #[test]
    fn readout_examples() {
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::from_vec(2, 2, vec![1.0, 2.0, 1.0, 2.0]));
        let b = GraphBatch::plain(&[&parse("CC").unwrap()]);
        let mean = readout(&mut tape, h, &b, Readout::Mean);
        let sum = readout(&mut tape, h, &b, Readout::Sum);
        assert_eq!(tape.value(mean).data, vec![1.0, 2.0]);
        assert_eq!(tape.value(sum).data, vec![2.0, 4.0]);
    }

    #[test]
    fn decoder_shapes_and_structure() {
        let cfg = small_cfg(2);
        let g = parse("CC(=O)N").unwrap();
        for (kind, target, widths) in [
            (DecoderKind::Gnn, Target::AtomType, vec![119]),
            (DecoderKind::Mlp, Target::BothOneDecoder, vec![119, 4]),
            (DecoderKind::Gnn, Target::BothTwoDecoders, vec![119, 4]),
            (DecoderKind::Mlp, Target::Chirality, vec![4]),
        ] {
            let store = init_pretrain_params(&cfg, kind, target, 4);
            let mut tape = Tape::new();
            let b = GraphBatch::plain(&[&g]);
            let h = encode(&mut tape, &store, &cfg, &b, &[]);
            let zs = decode(&mut tape, &store, kind, target, h, &b);
            let got: Vec<usize> = zs.iter().map(|&z| tape.value(z).cols).collect();
            assert_eq!(got, widths);
            assert!(zs.iter().all(|&z| tape.value(z).rows == 4));
        }
        // The MLP decoder only sees H: dropping the edges after encoding
        // leaves its logits unchanged.
        let store = init_pretrain_params(&cfg, DecoderKind::Mlp, Target::AtomType, 5);
        let b = GraphBatch::plain(&[&g]);
        let run = |db: &GraphBatch| {
            let mut tape = Tape::new();
            let h = encode(&mut tape, &store, &cfg, &b, &[]);
            let z = decode(&mut tape, &store, DecoderKind::Mlp, Target::AtomType, h, db)[0];
            tape.value(z).clone()
        };
        assert_eq!(run(&b), run(&b.without_edges()));
    }

    #[test]
    fn head_scales_linearly_in_last_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut store = ParamStore::new();
        init_head(&mut store, 4, 2, &mut rng);
        let hg = Tensor::from_vec(1, 4, vec![0.3, -0.2, 0.5, 1.0]);
        let run = |s: &ParamStore| {
            let mut tape = Tape::new();
            let x = tape.constant(hg.clone());
            let y = predict(&mut tape, s, x);
            tape.value(y).clone()
        };
        let y1 = run(&store);
        for name in ["head.w2", "head.b2"] {
            for x in &mut store.get_mut(name).unwrap().value.data {
                *x *= 3.0;
            }
        }
        let y3 = run(&store);
        for (a, b) in y1.data.iter().zip(&y3.data) {
            assert!((3.0 * a - b).abs() < 1e-12);
        }
        store.zero_values();
        assert_eq!(run(&store).data, vec![0.0, 0.0]);
    }
}
