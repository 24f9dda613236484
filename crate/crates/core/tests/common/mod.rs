#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use moama::gin::{EncoderConfig, ParamStore};
use moama::molgraph::{AtomAttr, BondOrder, MolGraph};
use moama::smiles::{parse, Dataset, Record};
use moama::synth::corpus;

/// Connected random graph: a random tree plus a few ring-closing edges.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> MolGraph {
    let atoms: Vec<AtomAttr> = (0..n)
        .map(|_| {
            let z = *[6u8, 6, 6, 7, 8, 9, 16].choose(rng).unwrap();
            AtomAttr::new(
                z - 1,
                if rng.gen_bool(0.15) {
                    rng.gen_range(1..4)
                } else {
                    0
                },
            )
        })
        .collect();
    let mut bonds: Vec<(usize, usize, BondOrder)> = Vec::new();
    let order = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.2) {
            BondOrder::Double
        } else {
            BondOrder::Single
        }
    };
    for v in 1..n {
        let u = rng.gen_range(0..v);
        bonds.push((u, v, order(rng)));
    }
    for _ in 0..rng.gen_range(0..3) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b
            && !bonds
                .iter()
                .any(|&(x, y, _)| (x, y) == (a.min(b), a.max(b)) || (x, y) == (a.max(b), a.min(b)))
        {
            bonds.push((a.min(b), a.max(b), order(rng)));
        }
    }
    MolGraph::new(atoms, bonds).unwrap()
}

fn sorted_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

fn val<'a>(store: &'a ParamStore, name: &str) -> &'a moama::gin::Tensor {
    &store.get(name).unwrap().value
}

/// `x @ w + b` with explicit loops.
fn dense(x: &[f64], w: &moama::gin::Tensor, b: &moama::gin::Tensor) -> Vec<f64> {
    (0..w.cols)
        .map(|j| {
            let mut acc = 0.0;
            for (k, &xk) in x.iter().enumerate() {
                acc += xk * w.at(k, j);
            }
            acc + b.at(0, j)
        })
        .collect()
}

/// Node states computed from scratch with nested loops, optionally with one
/// node's initial embedding zeroed.
pub fn oracle_states(
    store: &ParamStore,
    cfg: &EncoderConfig,
    g: &MolGraph,
    zeroed: Option<usize>,
) -> Vec<Vec<f64>> {
    let k = cfg.embed_dim;
    let ae = val(store, "enc.atom_emb");
    let ce = val(store, "enc.chir_emb");
    let mut h: Vec<Vec<f64>> = (0..g.num_atoms())
        .map(|v| {
            let a = g.atom(v);
            (0..k)
                .map(|d| {
                    if Some(v) == zeroed {
                        0.0
                    } else {
                        ae.at(a.atom_type as usize, d) + ce.at(a.chirality as usize, d)
                    }
                })
                .collect()
        })
        .collect();
    for l in 0..cfg.layers {
        let p = |s: &str| val(store, &format!("enc.l{l}.{s}"));
        let eps = p("eps").at(0, 0);
        let bond = p("bond");
        h = (0..g.num_atoms())
            .map(|v| {
                let agg: Vec<f64> = (0..k)
                    .map(|d| {
                        let nb = g
                            .neighbors(v)
                            .iter()
                            .map(|&(u, id)| h[u][d] + bond.at(g.bond(id).order.index(), d))
                            .collect();
                        (1.0 + eps) * h[v][d] + sorted_sum(nb)
                    })
                    .collect();
                let z: Vec<f64> = dense(&agg, p("w1"), p("b1"))
                    .into_iter()
                    .map(|x| x.max(0.0))
                    .collect();
                let out = dense(&z, p("w2"), p("b2"));
                if l + 1 < cfg.layers {
                    out.into_iter().map(|x| x.max(0.0)).collect()
                } else {
                    out
                }
            })
            .collect();
    }
    h
}

/// Influence of `u` on `v` by two full recomputations.
pub fn oracle_influence(
    store: &ParamStore,
    cfg: &EncoderConfig,
    g: &MolGraph,
    u: usize,
    v: usize,
) -> f64 {
    let a = oracle_states(store, cfg, g, None);
    let b = oracle_states(store, cfg, g, Some(u));
    a[v].iter()
        .zip(&b[v])
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub struct FdReport {
    pub checked: usize,
    pub failures: Vec<String>,
    pub worst_rel: f64,
}

/// Central differences for every trainable entry against the gradients held
/// in `analytic`.
pub fn fd_check(
    base: &ParamStore,
    analytic: &ParamStore,
    f: impl Fn(&ParamStore) -> f64,
    rel: f64,
    abs: f64,
) -> FdReport {
    let h = 1e-6;
    let mut report = FdReport {
        checked: 0,
        failures: Vec::new(),
        worst_rel: 0.0,
    };
    for p in analytic.iter().filter(|p| p.trainable) {
        for i in 0..p.value.data.len() {
            let mut plus = base.clone();
            plus.get_mut(&p.name).unwrap().value.data[i] += h;
            let mut minus = base.clone();
            minus.get_mut(&p.name).unwrap().value.data[i] -= h;
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            let an = p.grad.data[i];
            let err = (fd - an).abs();
            let scale = fd.abs().max(an.abs());
            if scale > 0.0 {
                report.worst_rel = report.worst_rel.max(err / scale);
            }
            if err > abs && err > rel * scale {
                report
                    .failures
                    .push(format!("{}[{i}]: analytic {an:e}, numeric {fd:e}", p.name));
            }
            report.checked += 1;
        }
    }
    report
}

/// Synthetic single-task dataset labeled by `label`.
pub fn labeled_dataset(
    n: usize,
    seed: u64,
    name: &str,
    label: impl Fn(&MolGraph) -> bool,
) -> Dataset {
    let records = corpus(n, seed)
        .into_iter()
        .enumerate()
        .map(|(row, smiles)| {
            let graph = parse(&smiles).unwrap();
            let y = label(&graph) as u8 as f64;
            Record {
                row,
                smiles,
                graph,
                labels: vec![Some(y)],
            }
        })
        .collect();
    Dataset {
        records,
        skipped: Vec::new(),
        label_names: vec![name.to_string()],
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
