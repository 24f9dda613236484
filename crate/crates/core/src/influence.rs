//! Intra- versus inter-motif influence.
//!
//! The influence of node `u` on node `v` is the L2 distance between `h_v`
//! computed normally and `h_v` computed with `u`'s layer-0 embedding set to
//! zero. Node scores are aggregated per motif, compared inside and outside
//! each node's own motif, and summarized as influence ratios and
//! mean-reciprocal-rank scores.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gin::tensor::sorted_sum;
use crate::gin::{self, EncoderConfig, GraphBatch, ParamStore, Tape, Tensor};
use crate::molgraph::MolGraph;
use crate::motif::MotifDecomposition;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfluenceMode {
    /// Every group score is the mean of its `top_k` largest node scores;
    /// the inter side pools all nodes outside the node's motif.
    TopK,
    /// Plain group means, with the inter side a motif-size-weighted average
    /// over the other motifs.
    SizeWeighted,
}

impl InfluenceMode {
    pub fn name(self) -> &'static str {
        match self {
            InfluenceMode::TopK => "top_k",
            InfluenceMode::SizeWeighted => "size_weighted",
        }
    }

    pub fn from_name(s: &str) -> Option<InfluenceMode> {
        match s {
            "top_k" => Some(InfluenceMode::TopK),
            "size_weighted" => Some(InfluenceMode::SizeWeighted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceConfig {
    pub top_k: usize,
    pub mode: InfluenceMode,
    /// Analyze at most this many molecules; 0 means all.
    pub max_graphs: usize,
}

impl Default for InfluenceConfig {
    fn default() -> Self {
        InfluenceConfig {
            top_k: 3,
            mode: InfluenceMode::TopK,
            max_graphs: 0,
        }
    }
}

fn node_states(
    store: &ParamStore,
    cfg: &EncoderConfig,
    g: &MolGraph,
    zeroed: &[usize],
) -> Result<Tensor> {
    let mut tape = Tape::new();
    let batch = GraphBatch::plain(&[g]);
    let h = gin::encode(&mut tape, store, cfg, &batch, zeroed);
    tape.check()?;
    Ok(tape.value(h).clone())
}

fn row_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `s(u, v)` for one ordered pair.
pub fn influence_pair(
    g: &MolGraph,
    store: &ParamStore,
    cfg: &EncoderConfig,
    u: usize,
    v: usize,
) -> Result<f64> {
    let n = g.num_atoms();
    if u == v || u >= n || v >= n {
        return Err(Error::Config(format!(
            "influence needs two distinct nodes below {n}, got {u} and {v}"
        )));
    }
    let h = node_states(store, cfg, g, &[])?;
    let h_wo = node_states(store, cfg, g, &[u])?;
    Ok(row_distance(h.row(v), h_wo.row(v)))
}

/// All pairwise influences: `s[u][v]`, with zeros on the diagonal.
pub fn influence_matrix(
    g: &MolGraph,
    store: &ParamStore,
    cfg: &EncoderConfig,
) -> Result<Vec<Vec<f64>>> {
    let n = g.num_atoms();
    let h = node_states(store, cfg, g, &[])?;
    (0..n)
        .map(|u| {
            let h_wo = node_states(store, cfg, g, &[u])?;
            Ok((0..n)
                .map(|v| {
                    if u == v {
                        0.0
                    } else {
                        row_distance(h.row(v), h_wo.row(v))
                    }
                })
                .collect())
        })
        .collect()
}

/// Mean of the `top_k` largest scores (all of them when fewer), or `None`
/// for an empty group. `top_k = None` averages the whole group.
pub fn group_score(scores: &[f64], top_k: Option<usize>) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    let mut s = scores.to_vec();
    s.sort_unstable_by(|a, b| b.total_cmp(a));
    s.truncate(top_k.unwrap_or(s.len()));
    let len = s.len() as f64;
    Some(sorted_sum(&mut s) / len)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeInfluence {
    pub node: usize,
    pub motif: usize,
    pub s_intra: Option<f64>,
    pub s_inter: Option<f64>,
    /// Position of the node's own motif when motifs are ordered by
    /// decreasing influence on it, ties to the lower motif index. `None`
    /// when the graph has one motif or the node's motif is a singleton.
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphInfluence {
    pub n_motifs: usize,
    pub nodes: Vec<NodeInfluence>,
}

/// Per-node scores for one molecule from its influence matrix.
pub fn graph_influence(
    s: &[Vec<f64>],
    dec: &MotifDecomposition,
    cfg: &InfluenceConfig,
) -> GraphInfluence {
    let n = s.len();
    let k = match cfg.mode {
        InfluenceMode::TopK => Some(cfg.top_k),
        InfluenceMode::SizeWeighted => None,
    };
    let n_motifs = dec.num_motifs();
    let nodes = (0..n)
        .map(|v| {
            let own = dec.motif_of[v];
            let column = |nodes: &mut dyn Iterator<Item = usize>| -> Vec<f64> {
                nodes.filter(|&u| u != v).map(|u| s[u][v]).collect()
            };
            let motif_scores: Vec<Option<f64>> = dec
                .motifs
                .iter()
                .map(|m| group_score(&column(&mut m.node_ids.iter().copied()), k))
                .collect();
            let s_intra = motif_scores[own];
            let s_inter = match cfg.mode {
                InfluenceMode::TopK => {
                    group_score(&column(&mut (0..n).filter(|&u| dec.motif_of[u] != own)), k)
                }
                InfluenceMode::SizeWeighted => {
                    let outside = n - dec.motifs[own].len();
                    let mut terms: Vec<f64> = (0..n_motifs)
                        .filter(|&i| i != own)
                        .map(|i| dec.motifs[i].len() as f64 * motif_scores[i].unwrap_or(0.0))
                        .collect();
                    (outside > 0).then(|| sorted_sum(&mut terms) / outside as f64)
                }
            };
            let rank = match s_intra {
                Some(mine) if n_motifs >= 2 => Some(
                    1 + (0..n_motifs)
                        .filter(|&i| i != own)
                        .filter(|&i| {
                            let other = motif_scores[i].expect("other motifs exclude v");
                            other > mine || (other == mine && i < own)
                        })
                        .count(),
                ),
                _ => None,
            };
            NodeInfluence {
                node: v,
                motif: own,
                s_intra,
                s_inter,
                rank,
            }
        })
        .collect();
    GraphInfluence { n_motifs, nodes }
}

/// Node-level and graph-level mean of `s_inter / s_intra`, over nodes with
/// both sides defined and `s_intra > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfRatios {
    pub node: Option<f64>,
    pub graph: Option<f64>,
    pub counted: usize,
    pub excluded: usize,
}

pub fn inf_ratios(graphs: &[GraphInfluence]) -> InfRatios {
    let mut all = Vec::new();
    let mut per_graph = Vec::new();
    let mut excluded = 0;
    for g in graphs {
        let mut ratios: Vec<f64> = Vec::new();
        for nd in &g.nodes {
            match (nd.s_intra, nd.s_inter) {
                (Some(a), Some(e)) if a > 0.0 => ratios.push(e / a),
                _ => excluded += 1,
            }
        }
        if !ratios.is_empty() {
            all.extend_from_slice(&ratios);
            let len = ratios.len() as f64;
            per_graph.push(sorted_sum(&mut ratios) / len);
        }
    }
    let counted = all.len();
    let mean = |v: &mut Vec<f64>| {
        let len = v.len() as f64;
        (!v.is_empty()).then(|| sorted_sum(v) / len)
    };
    InfRatios {
        node: mean(&mut all),
        graph: mean(&mut per_graph),
        counted,
        excluded,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrrInter {
    pub n: usize,
    pub score: f64,
    pub graph_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrrScores {
    pub node: f64,
    pub graph: f64,
    pub motif: f64,
    /// `1 - node-level MRR` among graphs with exactly `n` motifs.
    pub inter: Vec<MrrInter>,
    pub ranked_nodes: usize,
}

/// Reciprocal-rank aggregates over graphs with at least two motifs.
/// `None` when no node has a rank.
pub fn mrr_scores(graphs: &[GraphInfluence]) -> Option<MrrScores> {
    let mut all = Vec::new();
    let mut per_graph = Vec::new();
    let mut by_n: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
    for g in graphs.iter().filter(|g| g.n_motifs >= 2) {
        let mut rr: Vec<f64> = g
            .nodes
            .iter()
            .filter_map(|n| n.rank)
            .map(|r| 1.0 / r as f64)
            .collect();
        if rr.is_empty() {
            continue;
        }
        let entry = by_n.entry(g.n_motifs).or_default();
        entry.0.extend_from_slice(&rr);
        entry.1 += 1;
        all.extend_from_slice(&rr);
        let len = rr.len() as f64;
        per_graph.push(sorted_sum(&mut rr) / len);
    }
    if all.is_empty() {
        return None;
    }
    let ranked_nodes = all.len();
    let total_graphs = per_graph.len() as f64;
    let node = sorted_sum(&mut all) / ranked_nodes as f64;
    let graph = sorted_sum(&mut per_graph) / total_graphs;
    let mut motif_terms = Vec::new();
    let mut inter = Vec::new();
    for (n, (mut rr, count)) in by_n {
        let len = rr.len() as f64;
        let restricted = sorted_sum(&mut rr) / len;
        motif_terms.push(count as f64 / total_graphs * restricted);
        inter.push(MrrInter {
            n,
            score: 1.0 - restricted,
            graph_count: count,
        });
    }
    Some(MrrScores {
        node,
        graph,
        motif: sorted_sum(&mut motif_terms),
        inter,
        ranked_nodes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceReport {
    pub graphs: Vec<GraphInfluence>,
    pub ratios: InfRatios,
    pub mrr: Option<MrrScores>,
}

/// Scores every node of every molecule (in parallel over molecules) and
/// aggregates them.
pub fn analyze(
    graphs: &[&MolGraph],
    decs: &[&MotifDecomposition],
    store: &ParamStore,
    enc: &EncoderConfig,
    cfg: &InfluenceConfig,
) -> Result<InfluenceReport> {
    if cfg.top_k == 0 {
        return Err(Error::Config("influence.top_k must be positive".into()));
    }
    let limit = if cfg.max_graphs == 0 {
        graphs.len()
    } else {
        cfg.max_graphs.min(graphs.len())
    };
    let per_graph = graphs[..limit]
        .par_iter()
        .zip(&decs[..limit])
        .map(|(g, dec)| Ok(graph_influence(&influence_matrix(g, store, enc)?, dec, cfg)))
        .collect::<Result<Vec<_>>>()?;
    Ok(InfluenceReport {
        ratios: inf_ratios(&per_graph),
        mrr: mrr_scores(&per_graph),
        graphs: per_graph,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl InfluenceReport {
    pub fn nodes_csv(&self) -> String {
        let mut out = String::from("graph,node,motif,n_motifs,s_intra,s_inter,rank\n");
        for (gi, g) in self.graphs.iter().enumerate() {
            for nd in &g.nodes {
                out.push_str(&format!(
                    "{gi},{},{},{},{},{},{}\n",
                    nd.node,
                    nd.motif,
                    g.n_motifs,
                    opt(nd.s_intra),
                    opt(nd.s_inter),
                    nd.rank.map(|r| r.to_string()).unwrap_or_default()
                ));
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let m = self.mrr.as_ref();
        let rows = [
            ("inf_ratio_node", opt(self.ratios.node)),
            ("inf_ratio_graph", opt(self.ratios.graph)),
            ("mrr_node", opt(m.map(|m| m.node))),
            ("mrr_graph", opt(m.map(|m| m.graph))),
            ("mrr_motif", opt(m.map(|m| m.motif))),
            ("ratio_nodes", self.ratios.counted.to_string()),
            ("ratio_excluded", self.ratios.excluded.to_string()),
            ("ranked_nodes", m.map_or(0, |m| m.ranked_nodes).to_string()),
        ];
        let mut out = String::from("metric,value\n");
        for (k, v) in rows {
            out.push_str(&format!("{k},{v}\n"));
        }
        out
    }

    pub fn mrr_inter_csv(&self) -> String {
        let mut out = String::from("n,score,graph_count\n");
        for r in self.mrr.iter().flat_map(|m| &m.inter) {
            out.push_str(&format!("{},{},{}\n", r.n, r.score, r.graph_count));
        }
        out
    }

    /// Writes `influence_nodes.csv`, `influence_summary.csv` and
    /// `mrr_inter.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for (name, body) in [
            ("influence_nodes.csv", self.nodes_csv()),
            ("influence_summary.csv", self.summary_csv()),
            ("mrr_inter.csv", self.mrr_inter_csv()),
        ] {
            let path = dir.join(name);
            std::fs::File::create(&path)
                .and_then(|mut f| f.write_all(body.as_bytes()))
                .map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
