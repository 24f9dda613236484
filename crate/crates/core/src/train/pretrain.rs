//! Masked-attribute pre-training loop.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::checkpoint::{training_rng, Checkpoint};
use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::fingerprint::{morgan_fingerprint, Fingerprint};
use crate::gin::{self, AdamConfig, GraphBatch, ParamStore, Tape};
use crate::loss::{self, MaskedTargets};
use crate::masking::{apply_mask, molecule_seed, sample_motifs, MaskPlan, MaskToken};
use crate::molgraph::{AttrMatrix, MolGraph};
use crate::motif::{decompose, MotifDecomposition};

/// Per-epoch means over batches. `aux` is `None` when the auxiliary term
/// is switched off.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub rec: f64,
    pub aux: Option<f64>,
    pub feasible_frac: f64,
}

pub const CURVE_HEADER: &str = "epoch,loss,rec,aux,feasible_frac";

pub fn curve_csv(curve: &[EpochStats]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for s in curve {
        let aux = s.aux.map(|a| a.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.epoch, s.loss, s.rec, aux, s.feasible_frac
        ));
    }
    out
}

pub fn write_curve(path: &Path, curve: &[EpochStats]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(curve_csv(curve).as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Decompositions and fingerprints computed once per corpus.
struct Prepared {
    decs: Vec<MotifDecomposition>,
    fps: Vec<Fingerprint>,
}

fn prepare(graphs: &[MolGraph], cfg: &RunConfig) -> Result<Prepared> {
    let decs = graphs.par_iter().map(decompose).collect();
    let fps = graphs
        .par_iter()
        .map(|g| morgan_fingerprint(g, cfg.fp_radius, cfg.fp_width))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(Prepared { decs, fps })
}

/// Stateful pre-training run that can be stepped one epoch at a time,
/// checkpointed, and resumed.
pub struct Pretrainer<'a> {
    graphs: &'a [MolGraph],
    cfg: RunConfig,
    prep: Prepared,
    store: ParamStore,
    rng: ChaCha8Rng,
    epoch: usize,
}

impl<'a> Pretrainer<'a> {
    pub fn new(graphs: &'a [MolGraph], cfg: &RunConfig) -> Result<Pretrainer<'a>> {
        let store = gin::init_pretrain_params(&cfg.encoder, cfg.decoder, cfg.loss.target, cfg.seed);
        Pretrainer::with_state(graphs, cfg, store, training_rng(cfg.seed), 0)
    }

    /// Continues from a checkpoint; the epoch counter and generator state
    /// pick up where it stopped.
    pub fn resume(
        graphs: &'a [MolGraph],
        cfg: &RunConfig,
        ck: Checkpoint,
    ) -> Result<Pretrainer<'a>> {
        Pretrainer::with_state(graphs, cfg, ck.store, ck.rng, ck.epoch as usize)
    }

    fn with_state(
        graphs: &'a [MolGraph],
        cfg: &RunConfig,
        store: ParamStore,
        rng: ChaCha8Rng,
        epoch: usize,
    ) -> Result<Pretrainer<'a>> {
        cfg.validate()?;
        if graphs.is_empty() {
            return Err(Error::Data("pre-training corpus is empty".into()));
        }
        let prep = prepare(graphs, cfg)?;
        Ok(Pretrainer {
            graphs,
            cfg: cfg.clone(),
            prep,
            store,
            rng,
            epoch,
        })
    }

    /// Epochs completed so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn into_store(self) -> ParamStore {
        self.store
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            self.cfg.to_text(),
            self.epoch as u64,
            self.rng.clone(),
            self.store.clone(),
        )
    }

    /// Mask plans for one epoch. With `mask.resample=once` every epoch
    /// reuses the epoch-0 plans.
    pub fn plans(&self, epoch: usize) -> Result<Vec<MaskPlan>> {
        let plan_epoch = if self.cfg.resample_per_epoch {
            epoch
        } else {
            0
        };
        let base = self.cfg.mask_config();
        self.graphs
            .par_iter()
            .zip(&self.prep.decs)
            .enumerate()
            .map(|(i, (g, dec))| {
                let mut mc = base.clone();
                mc.seed = molecule_seed(self.cfg.seed, plan_epoch as u64, i);
                sample_motifs(g, dec, &mc).map_err(Error::from)
            })
            .collect()
    }

    /// One pass over the corpus in shuffled batches.
    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        let plans = self.plans(self.epoch)?;
        if plans.iter().all(MaskPlan::is_empty) {
            return Err(Error::Data(
                "no molecule admits a mask plan (every molecule is a single motif or too small)"
                    .into(),
            ));
        }
        let feasible = plans.iter().filter(|p| p.feasible).count();
        let xs: Vec<AttrMatrix> = self
            .graphs
            .iter()
            .zip(&plans)
            .map(|(g, p)| apply_mask(g, p, MaskToken::default()))
            .collect();

        let mut order: Vec<usize> = (0..self.graphs.len()).collect();
        order.shuffle(&mut self.rng);
        let adam = AdamConfig {
            lr: self.cfg.lr,
            ..AdamConfig::default()
        };
        let (mut loss_sum, mut rec_sum, mut aux_sum) = (0.0, 0.0, 0.0);
        let (mut n_loss, mut n_rec, mut n_aux) = (0usize, 0usize, 0usize);
        for chunk in order.chunks(self.cfg.batch) {
            let step = self.step(chunk, &plans, &xs, &adam)?;
            if let Some((l, r, a)) = step {
                loss_sum += l;
                n_loss += 1;
                if let Some(r) = r {
                    rec_sum += r;
                    n_rec += 1;
                }
                if let Some(a) = a {
                    aux_sum += a;
                    n_aux += 1;
                }
            }
        }
        self.epoch += 1;
        let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
        Ok(EpochStats {
            epoch: self.epoch,
            loss: mean(loss_sum, n_loss),
            rec: mean(rec_sum, n_rec),
            aux: self.cfg.loss.uses_aux().then(|| mean(aux_sum, n_aux)),
            feasible_frac: feasible as f64 / self.graphs.len() as f64,
        })
    }

    /// Forward, backward and Adam update on one batch. Returns the total,
    /// reconstruction and auxiliary values, or `None` when the batch has
    /// nothing to learn from.
    #[allow(clippy::type_complexity)]
    fn step(
        &mut self,
        chunk: &[usize],
        plans: &[MaskPlan],
        xs: &[AttrMatrix],
        adam: &AdamConfig,
    ) -> Result<Option<(f64, Option<f64>, Option<f64>)>> {
        let cfg = &self.cfg;
        let graphs: Vec<&MolGraph> = chunk.iter().map(|&i| &self.graphs[i]).collect();
        let batch_x: Vec<AttrMatrix> = chunk.iter().map(|&i| xs[i].clone()).collect();
        let batch = GraphBatch::new(&graphs, &batch_x);

        let mut targets = MaskedTargets::default();
        for (&i, &(off, _)) in chunk.iter().zip(batch.segs.iter()) {
            let g = &self.graphs[i];
            for (dim, nodes) in plans[i].masked.iter().enumerate() {
                for &v in nodes {
                    let a = g.atom(v);
                    let code = if dim == 0 { a.atom_type } else { a.chirality };
                    targets.push(dim, off + v, code as usize);
                }
            }
        }

        let mut tape = Tape::new();
        let h = gin::encode(&mut tape, &self.store, &cfg.encoder, &batch, &[]);
        let logits = gin::decode(
            &mut tape,
            &self.store,
            cfg.decoder,
            cfg.loss.target,
            h,
            &batch,
        );
        let rec = loss::rec_loss(&mut tape, &logits, &targets, &cfg.loss);
        let aux = if cfg.loss.uses_aux() {
            let hg = gin::readout(&mut tape, h, &batch, cfg.encoder.readout);
            let fps: Vec<&Fingerprint> = chunk.iter().map(|&i| &self.prep.fps[i]).collect();
            loss::aux_loss(&mut tape, hg, &fps, cfg.loss.aux_form)
        } else {
            None
        };
        let Some(total) = loss::total_loss(&mut tape, rec, aux, cfg.loss.beta) else {
            return Ok(None);
        };
        tape.backward(total, &mut self.store)?;
        self.store.adam_step(adam);
        self.store.zero_grad();
        Ok(Some((
            tape.value(total).item(),
            rec.map(|r| tape.value(r).item()),
            aux.map(|a| tape.value(a).item()),
        )))
    }
}

#[derive(Debug, Clone)]
pub struct PretrainOutput {
    pub checkpoint: Checkpoint,
    pub curve: Vec<EpochStats>,
}

/// Runs all configured epochs from a fresh initialization.
pub fn pretrain(graphs: &[MolGraph], cfg: &RunConfig) -> Result<PretrainOutput> {
    let mut run = Pretrainer::new(graphs, cfg)?;
    let mut curve = Vec::with_capacity(cfg.epochs);
    while run.epoch() < cfg.epochs {
        curve.push(run.run_epoch()?);
    }
    Ok(PretrainOutput {
        checkpoint: run.checkpoint(),
        curve,
    })
}
