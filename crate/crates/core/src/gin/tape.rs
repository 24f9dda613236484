//! Reverse-mode differentiation over a linear tape of fused matrix ops.

use std::sync::Arc;

use thiserror::Error;

use super::params::ParamStore;
use super::tensor::{sorted_sum, Tensor};

pub type Var = usize;

/// Per-node neighbor lists of a (batched) graph: `(neighbor, bond order)`.
pub type Adjacency = Arc<Vec<Vec<(usize, usize)>>>;

/// Row ranges `[start, end)` of each graph in a batch.
pub type Segments = Arc<Vec<(usize, usize)>>;

const NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumericError {
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("backward needs a scalar loss, got a {0}x{1} tensor")]
    NotScalar(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    Mean,
    Sum,
    Max,
}

impl Readout {
    pub fn name(self) -> &'static str {
        match self {
            Readout::Mean => "mean",
            Readout::Sum => "sum",
            Readout::Max => "max",
        }
    }

    pub fn from_name(s: &str) -> Option<Readout> {
        match s {
            "mean" => Some(Readout::Mean),
            "sum" => Some(Readout::Sum),
            "max" => Some(Readout::Max),
            _ => None,
        }
    }
}

enum Op {
    Leaf,
    Param(usize),
    Gather(Var, Arc<Vec<usize>>),
    Add(Var, Var),
    AddBias(Var, Var),
    MatMul(Var, Var),
    Relu(Var),
    Scale(Var, f64),
    ZeroRows(Var, Vec<usize>),
    SliceCols(Var, usize),
    Transpose(Var),
    Gin {
        h: Var,
        eps: Var,
        bond: Var,
        adj: Adjacency,
    },
    Readout {
        h: Var,
        segs: Segments,
        mode: Readout,
        argmax: Vec<usize>,
    },
    Sce {
        z: Var,
        rows: Vec<usize>,
        targets: Vec<usize>,
        gamma: f64,
    },
    Ce {
        z: Var,
        rows: Vec<usize>,
        targets: Vec<usize>,
        probs: Tensor,
    },
    Mse {
        z: Var,
        rows: Vec<usize>,
        targets: Vec<usize>,
        probs: Tensor,
    },
    Aux {
        h: Var,
        sims: Vec<f64>,
        squared: bool,
    },
    Bce {
        z: Var,
        labels: Vec<Option<f64>>,
    },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "constant",
            Op::Param(_) => "parameter",
            Op::Gather(..) => "gather",
            Op::Add(..) => "add",
            Op::AddBias(..) => "add_bias",
            Op::MatMul(..) => "matmul",
            Op::Relu(_) => "relu",
            Op::Scale(..) => "scale",
            Op::ZeroRows(..) => "zero_rows",
            Op::SliceCols(..) => "slice_cols",
            Op::Transpose(_) => "transpose",
            Op::Gin { .. } => "gin_aggregate",
            Op::Readout { .. } => "readout",
            Op::Sce { .. } => "sce_loss",
            Op::Ce { .. } => "ce_loss",
            Op::Mse { .. } => "mse_loss",
            Op::Aux { .. } => "aux_loss",
            Op::Bce { .. } => "bce_loss",
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Records a forward computation. The first non-finite value is remembered
/// and reported by [`Tape::check`] and [`Tape::backward`].
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    error: Option<NumericError>,
}

fn softmax_row(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn transposed(t: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(t.cols, t.rows);
    for r in 0..t.rows {
        for c in 0..t.cols {
            out.data[c * t.rows + r] = t.at(r, c);
        }
    }
    out
}

/// Cosine with norms floored at `NORM_FLOOR`.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (norm(a).max(NORM_FLOOR) * norm(b).max(NORM_FLOOR))
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v].value
    }

    pub fn check(&self) -> Result<(), NumericError> {
        self.error.clone().map_or(Ok(()), Err)
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        if self.error.is_none() && !value.is_finite() {
            self.error = Some(NumericError::NonFinite(op.name()));
        }
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    pub fn param(&mut self, store: &ParamStore, id: usize) -> Var {
        self.push(store.param(id).value.clone(), Op::Param(id))
    }

    /// Rows `idx[i]` of `src`.
    pub fn gather(&mut self, src: Var, idx: Arc<Vec<usize>>) -> Var {
        let s = self.value(src);
        let mut out = Tensor::zeros(idx.len(), s.cols);
        for (i, &r) in idx.iter().enumerate() {
            out.row_mut(i).copy_from_slice(s.row(r));
        }
        self.push(out, Op::Gather(src, idx))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        self.push(out, Op::Add(a, b))
    }

    /// Adds the 1×c row `b` to every row of `a`.
    pub fn add_bias(&mut self, a: Var, b: Var) -> Var {
        let mut out = self.value(a).clone();
        let bias = self.value(b);
        assert_eq!((1, out.cols), bias.shape(), "bias shape");
        for r in 0..out.rows {
            for (x, y) in out.row_mut(r).iter_mut().zip(&bias.data) {
                *x += y;
            }
        }
        self.push(out, Op::AddBias(a, b))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = Tensor::matmul(self.value(a), self.value(b));
        self.push(out, Op::MatMul(a, b))
    }

    /// `x @ w + b`
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let y = self.matmul(x, w);
        self.add_bias(y, b)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let mut out = self.value(a).clone();
        for x in &mut out.data {
            *x = x.max(0.0);
        }
        self.push(out, Op::Relu(a))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let mut out = self.value(a).clone();
        for x in &mut out.data {
            *x *= s;
        }
        self.push(out, Op::Scale(a, s))
    }

    pub fn zero_rows(&mut self, a: Var, rows: Vec<usize>) -> Var {
        let mut out = self.value(a).clone();
        for &r in &rows {
            out.row_mut(r).fill(0.0);
        }
        self.push(out, Op::ZeroRows(a, rows))
    }

    /// Columns `[start, start + width)`.
    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Var {
        let s = self.value(a);
        assert!(start + width <= s.cols, "slice out of range");
        let mut out = Tensor::zeros(s.rows, width);
        for r in 0..s.rows {
            out.row_mut(r)
                .copy_from_slice(&s.row(r)[start..start + width]);
        }
        self.push(out, Op::SliceCols(a, start))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = transposed(self.value(a));
        self.push(out, Op::Transpose(a))
    }

    /// `(1 + ε)·h_v + Σ_{u ∈ N(v)} (h_u + bond[order(u, v)])`, with each
    /// neighbor sum taken in ascending value order.
    pub fn gin_aggregate(&mut self, h: Var, eps: Var, bond: Var, adj: Adjacency) -> Var {
        let hv = self.value(h);
        let e = 1.0 + self.value(eps).item();
        let bv = self.value(bond);
        let mut out = Tensor::zeros(hv.rows, hv.cols);
        let mut terms = Vec::new();
        for (v, nbrs) in adj.iter().enumerate() {
            for d in 0..hv.cols {
                terms.clear();
                terms.extend(nbrs.iter().map(|&(u, o)| hv.at(u, d) + bv.at(o, d)));
                out.data[v * hv.cols + d] = e * hv.at(v, d) + sorted_sum(&mut terms);
            }
        }
        self.push(out, Op::Gin { h, eps, bond, adj })
    }

    /// One pooled row per segment.
    pub fn readout(&mut self, h: Var, segs: Segments, mode: Readout) -> Var {
        let hv = self.value(h);
        let k = hv.cols;
        let mut out = Tensor::zeros(segs.len(), k);
        let mut argmax = Vec::new();
        let mut terms = Vec::new();
        for (b, &(s, e)) in segs.iter().enumerate() {
            assert!(e > s, "readout over an empty graph");
            for d in 0..k {
                let val = match mode {
                    Readout::Max => {
                        let mut best = s;
                        for r in s + 1..e {
                            if hv.at(r, d) > hv.at(best, d) {
                                best = r;
                            }
                        }
                        argmax.push(best);
                        hv.at(best, d)
                    }
                    _ => {
                        terms.clear();
                        terms.extend((s..e).map(|r| hv.at(r, d)));
                        let sum = sorted_sum(&mut terms);
                        if mode == Readout::Mean {
                            sum / (e - s) as f64
                        } else {
                            sum
                        }
                    }
                };
                out.data[b * k + d] = val;
            }
        }
        self.push(
            out,
            Op::Readout {
                h,
                segs,
                mode,
                argmax,
            },
        )
    }

    /// Mean over `rows` of `(1 − cos(z_row, e_target))^γ`.
    pub fn sce_loss(&mut self, z: Var, rows: Vec<usize>, targets: Vec<usize>, gamma: f64) -> Var {
        let zv = self.value(z);
        let mut total = 0.0;
        for (&r, &t) in rows.iter().zip(&targets) {
            let row = zv.row(r);
            let c = row[t] / norm(row).max(NORM_FLOOR);
            total += (1.0 - c).powf(gamma);
        }
        let loss = if rows.is_empty() {
            0.0
        } else {
            total / rows.len() as f64
        };
        self.push(
            Tensor::scalar(loss),
            Op::Sce {
                z,
                rows,
                targets,
                gamma,
            },
        )
    }

    /// Mean softmax cross-entropy over `rows`.
    pub fn ce_loss(&mut self, z: Var, rows: Vec<usize>, targets: Vec<usize>) -> Var {
        let zv = self.value(z);
        let mut probs = Tensor::zeros(rows.len(), zv.cols);
        let mut total = 0.0;
        for (i, (&r, &t)) in rows.iter().zip(&targets).enumerate() {
            let row = zv.row(r);
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            total += lse - row[t];
            probs.row_mut(i).copy_from_slice(&softmax_row(row));
        }
        let loss = if rows.is_empty() {
            0.0
        } else {
            total / rows.len() as f64
        };
        self.push(
            Tensor::scalar(loss),
            Op::Ce {
                z,
                rows,
                targets,
                probs,
            },
        )
    }

    /// Mean over `rows` of the summed squared error between softmax(z) and
    /// the one-hot target.
    pub fn mse_loss(&mut self, z: Var, rows: Vec<usize>, targets: Vec<usize>) -> Var {
        let zv = self.value(z);
        let mut probs = Tensor::zeros(rows.len(), zv.cols);
        let mut total = 0.0;
        for (i, (&r, &t)) in rows.iter().zip(&targets).enumerate() {
            let p = softmax_row(zv.row(r));
            total += p
                .iter()
                .enumerate()
                .map(|(c, &x)| {
                    let y = if c == t { 1.0 } else { 0.0 };
                    (x - y) * (x - y)
                })
                .sum::<f64>();
            probs.row_mut(i).copy_from_slice(&p);
        }
        let loss = if rows.is_empty() {
            0.0
        } else {
            total / rows.len() as f64
        };
        self.push(
            Tensor::scalar(loss),
            Op::Mse {
                z,
                rows,
                targets,
                probs,
            },
        )
    }

    /// Mean over pairs i<j of `(sims[i][j] − cos(h_i, h_j))²`, or of the
    /// plain difference when `squared` is false. `sims` is row-major B×B.
    pub fn aux_loss(&mut self, h: Var, sims: Vec<f64>, squared: bool) -> Var {
        let hv = self.value(h);
        let b = hv.rows;
        assert_eq!(sims.len(), b * b, "similarity matrix shape");
        let mut total = 0.0;
        let mut pairs = 0usize;
        for i in 0..b {
            for j in i + 1..b {
                let diff = sims[i * b + j] - cosine(hv.row(i), hv.row(j));
                total += if squared { diff * diff } else { diff };
                pairs += 1;
            }
        }
        let loss = if pairs == 0 {
            0.0
        } else {
            total / pairs as f64
        };
        self.push(Tensor::scalar(loss), Op::Aux { h, sims, squared })
    }

    /// Mean binary cross-entropy with logits over the present labels of a
    /// row-major B×T logit matrix.
    pub fn bce_loss(&mut self, z: Var, labels: Vec<Option<f64>>) -> Var {
        let zv = self.value(z);
        assert_eq!(labels.len(), zv.data.len(), "label count");
        let mut total = 0.0;
        let mut count = 0usize;
        for (&x, y) in zv.data.iter().zip(&labels) {
            if let Some(y) = *y {
                total += x.max(0.0) - y * x + (-x.abs()).exp().ln_1p();
                count += 1;
            }
        }
        let loss = if count == 0 {
            0.0
        } else {
            total / count as f64
        };
        self.push(Tensor::scalar(loss), Op::Bce { z, labels })
    }

    /// Accumulates `d loss / d param` into the store's gradient buffers.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<(), NumericError> {
        self.check()?;
        let (r, c) = self.value(loss).shape();
        if (r, c) != (1, 1) {
            return Err(NumericError::NotScalar(r, c));
        }
        let mut grads: Vec<Option<Tensor>> = (0..=loss).map(|_| None).collect();
        grads[loss] = Some(Tensor::scalar(1.0));

        fn acc(grads: &mut [Option<Tensor>], v: Var, shape: (usize, usize)) -> &mut Tensor {
            grads[v].get_or_insert_with(|| Tensor::zeros(shape.0, shape.1))
        }

        for i in (0..=loss).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let shape_of = |v: Var| self.nodes[v].value.shape();
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => store.param_mut(*id).grad.add_assign(&g),
                Op::Gather(src, idx) => {
                    let t = acc(&mut grads, *src, shape_of(*src));
                    for (k, &r) in idx.iter().enumerate() {
                        for (x, y) in t.row_mut(r).iter_mut().zip(g.row(k)) {
                            *x += y;
                        }
                    }
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.shape()).add_assign(&g);
                    acc(&mut grads, *b, g.shape()).add_assign(&g);
                }
                Op::AddBias(a, b) => {
                    acc(&mut grads, *a, g.shape()).add_assign(&g);
                    let t = acc(&mut grads, *b, (1, g.cols));
                    for r in 0..g.rows {
                        for (x, y) in t.data.iter_mut().zip(g.row(r)) {
                            *x += y;
                        }
                    }
                }
                Op::MatMul(a, b) => {
                    let ga = Tensor::matmul_bt(&g, self.value(*b));
                    let gb = Tensor::matmul_at(self.value(*a), &g);
                    acc(&mut grads, *a, ga.shape()).add_assign(&ga);
                    acc(&mut grads, *b, gb.shape()).add_assign(&gb);
                }
                Op::Relu(a) => {
                    let t = acc(&mut grads, *a, g.shape());
                    for ((x, y), o) in t.data.iter_mut().zip(&g.data).zip(&node.value.data) {
                        if *o > 0.0 {
                            *x += y;
                        }
                    }
                }
                Op::Scale(a, s) => {
                    let t = acc(&mut grads, *a, g.shape());
                    for (x, y) in t.data.iter_mut().zip(&g.data) {
                        *x += s * y;
                    }
                }
                Op::ZeroRows(a, rows) => {
                    let mut g = g;
                    for &r in rows {
                        g.row_mut(r).fill(0.0);
                    }
                    acc(&mut grads, *a, g.shape()).add_assign(&g);
                }
                Op::SliceCols(a, start) => {
                    let t = acc(&mut grads, *a, shape_of(*a));
                    for r in 0..g.rows {
                        for (x, y) in t.row_mut(r)[*start..].iter_mut().zip(g.row(r)) {
                            *x += y;
                        }
                    }
                }
                Op::Transpose(a) => {
                    acc(&mut grads, *a, shape_of(*a)).add_assign(&transposed(&g));
                }
                Op::Gin { h, eps, bond, adj } => {
                    let hv = self.value(*h);
                    let e = 1.0 + self.value(*eps).item();
                    let mut gh = Tensor::zeros(hv.rows, hv.cols);
                    let mut gb = Tensor::zeros(self.value(*bond).rows, hv.cols);
                    let mut ge = 0.0;
                    for (v, nbrs) in adj.iter().enumerate() {
                        let gv = g.row(v);
                        ge += dot(gv, hv.row(v));
                        for (x, y) in gh.row_mut(v).iter_mut().zip(gv) {
                            *x += e * y;
                        }
                        for &(u, o) in nbrs {
                            for (x, y) in gh.row_mut(u).iter_mut().zip(gv) {
                                *x += y;
                            }
                            for (x, y) in gb.row_mut(o).iter_mut().zip(gv) {
                                *x += y;
                            }
                        }
                    }
                    acc(&mut grads, *h, gh.shape()).add_assign(&gh);
                    acc(&mut grads, *bond, gb.shape()).add_assign(&gb);
                    acc(&mut grads, *eps, (1, 1)).data[0] += ge;
                }
                Op::Readout {
                    h,
                    segs,
                    mode,
                    argmax,
                } => {
                    let t = acc(&mut grads, *h, shape_of(*h));
                    let k = g.cols;
                    for (b, &(s, e)) in segs.iter().enumerate() {
                        for d in 0..k {
                            let gd = g.at(b, d);
                            match mode {
                                Readout::Max => t.data[argmax[b * k + d] * k + d] += gd,
                                Readout::Sum => (s..e).for_each(|r| t.data[r * k + d] += gd),
                                Readout::Mean => {
                                    let w = gd / (e - s) as f64;
                                    (s..e).for_each(|r| t.data[r * k + d] += w);
                                }
                            }
                        }
                    }
                }
                Op::Sce {
                    z,
                    rows,
                    targets,
                    gamma,
                } => {
                    let zv = self.value(*z);
                    let t = acc(&mut grads, *z, zv.shape());
                    let scale = g.item() / rows.len().max(1) as f64;
                    for (&r, &tg) in rows.iter().zip(targets) {
                        let row = zv.row(r);
                        let raw = norm(row);
                        let n = raw.max(NORM_FLOOR);
                        let c = row[tg] / n;
                        let dl_dc = -gamma * (1.0 - c).powf(gamma - 1.0);
                        let out = t.row_mut(r);
                        for (j, x) in out.iter_mut().enumerate() {
                            let mut dc = if j == tg { 1.0 / n } else { 0.0 };
                            if raw >= NORM_FLOOR {
                                dc -= row[tg] * row[j] / (n * n * n);
                            }
                            *x += scale * dl_dc * dc;
                        }
                    }
                }
                Op::Ce {
                    z,
                    rows,
                    targets,
                    probs,
                } => {
                    let t = acc(&mut grads, *z, shape_of(*z));
                    let scale = g.item() / rows.len().max(1) as f64;
                    for (i, (&r, &tg)) in rows.iter().zip(targets).enumerate() {
                        for (j, (x, p)) in t.row_mut(r).iter_mut().zip(probs.row(i)).enumerate() {
                            let y = if j == tg { 1.0 } else { 0.0 };
                            *x += scale * (p - y);
                        }
                    }
                }
                Op::Mse {
                    z,
                    rows,
                    targets,
                    probs,
                } => {
                    let t = acc(&mut grads, *z, shape_of(*z));
                    let scale = g.item() / rows.len().max(1) as f64;
                    for (i, (&r, &tg)) in rows.iter().zip(targets).enumerate() {
                        let p = probs.row(i);
                        let gp: Vec<f64> = p
                            .iter()
                            .enumerate()
                            .map(|(j, &x)| 2.0 * (x - if j == tg { 1.0 } else { 0.0 }))
                            .collect();
                        let inner = dot(&gp, p);
                        for ((x, &pj), &gj) in t.row_mut(r).iter_mut().zip(p).zip(&gp) {
                            *x += scale * pj * (gj - inner);
                        }
                    }
                }
                Op::Aux { h, sims, squared } => {
                    let hv = self.value(*h);
                    let b = hv.rows;
                    let pairs = b * b.saturating_sub(1) / 2;
                    if pairs == 0 {
                        continue;
                    }
                    let scale = g.item() / pairs as f64;
                    let raw: Vec<f64> = (0..b).map(|i| norm(hv.row(i))).collect();
                    let n: Vec<f64> = raw.iter().map(|x| x.max(NORM_FLOOR)).collect();
                    let mut gh = Tensor::zeros(b, hv.cols);
                    for i in 0..b {
                        for j in i + 1..b {
                            let c = dot(hv.row(i), hv.row(j)) / (n[i] * n[j]);
                            let dl_dc = if *squared {
                                -2.0 * (sims[i * b + j] - c)
                            } else {
                                -1.0
                            } * scale;
                            for (a, bb) in [(i, j), (j, i)] {
                                let ha = hv.row(a);
                                let hb = hv.row(bb);
                                let self_term = if raw[a] >= NORM_FLOOR {
                                    c / (n[a] * n[a])
                                } else {
                                    0.0
                                };
                                for (d, x) in gh.row_mut(a).iter_mut().enumerate() {
                                    *x += dl_dc * (hb[d] / (n[a] * n[bb]) - self_term * ha[d]);
                                }
                            }
                        }
                    }
                    acc(&mut grads, *h, gh.shape()).add_assign(&gh);
                }
                Op::Bce { z, labels } => {
                    let zv = self.value(*z);
                    let count = labels.iter().filter(|l| l.is_some()).count().max(1);
                    let scale = g.item() / count as f64;
                    let t = acc(&mut grads, *z, zv.shape());
                    for ((x, &zz), y) in t.data.iter_mut().zip(&zv.data).zip(labels) {
                        if let Some(y) = *y {
                            *x += scale * (1.0 / (1.0 + (-zz).exp()) - y);
                        }
                    }
                }
            }
        }
        if store.iter().all(|p| p.grad.is_finite()) {
            Ok(())
        } else {
            Err(NumericError::NonFinite("backward"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grad_of_squared_norm_is_twice_the_param() {
        let mut store = ParamStore::new();
        let id = store.insert("w", Tensor::from_vec(1, 3, vec![0.5, -1.5, 2.0]), true);
        let mut tape = Tape::new();
        let w = tape.param(&store, id);
        let wt = tape.transpose(w);
        let loss = tape.matmul(w, wt);
        assert_eq!(tape.value(loss).item(), 6.5);
        tape.backward(loss, &mut store).unwrap();
        assert_eq!(store.param(id).grad.data, vec![1.0, -3.0, 4.0]);
    }

    #[test]
    fn non_finite_values_trip_an_error() {
        let mut store = ParamStore::new();
        let id = store.insert("w", Tensor::scalar(f64::MAX), true);
        let mut tape = Tape::new();
        let w = tape.param(&store, id);
        let y = tape.scale(w, 10.0);
        assert_eq!(tape.check(), Err(NumericError::NonFinite("scale")));
        assert!(tape.backward(y, &mut store).is_err());
    }

    #[test]
    fn backward_needs_a_scalar() {
        let mut store = ParamStore::new();
        let id = store.insert("w", Tensor::zeros(2, 2), true);
        let mut tape = Tape::new();
        let w = tape.param(&store, id);
        assert_eq!(
            tape.backward(w, &mut store),
            Err(NumericError::NotScalar(2, 2))
        );
    }

    #[test]
    fn loss_values() {
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::from_vec(2, 3, vec![0.0, 2.0, 0.0, 1.0, 0.0, 0.0]));
        let sce = tape.sce_loss(z, vec![0, 1], vec![1, 1], 1.0);
        // row 0 aligned (0), row 1 orthogonal (1)
        assert_eq!(tape.value(sce).item(), 0.5);
        let big = tape.constant(Tensor::from_vec(1, 2, vec![800.0, 0.0]));
        let ce = tape.ce_loss(big, vec![0], vec![0]);
        assert_eq!(tape.value(ce).item(), 0.0);
        let mse = tape.mse_loss(big, vec![0], vec![0]);
        assert_eq!(tape.value(mse).item(), 0.0);
        let empty = tape.sce_loss(z, vec![], vec![], 1.0);
        assert_eq!(tape.value(empty).item(), 0.0);
    }
}
