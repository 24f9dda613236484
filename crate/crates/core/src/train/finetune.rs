//! Downstream evaluation: a fresh prediction head on top of a (pre-trained
//! or random) encoder, trained with binary cross-entropy on a scaffold
//! split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::auc::roc_auc;
use super::config::{FinetuneMode, RunConfig};
use super::scaffold::{scaffold_key, scaffold_split, Split};
use crate::error::{Error, Result};
use crate::gin::{self, AdamConfig, EncoderConfig, GraphBatch, ParamStore, Tape, Tensor, Var};
use crate::molgraph::MolGraph;
use crate::smiles::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneReport {
    pub mode: FinetuneMode,
    pub split_sizes: [usize; 3],
    /// 1-based epoch with the best validation AUC.
    pub best_epoch: usize,
    pub valid_auc: f64,
    pub test_auc: f64,
    pub warning: Option<String>,
}

/// Graph vectors for each molecule, computed independently and in parallel.
pub fn graph_embeddings(
    store: &ParamStore,
    cfg: &EncoderConfig,
    graphs: &[&MolGraph],
) -> Result<Vec<Vec<f64>>> {
    graphs
        .par_iter()
        .map(|g| {
            let mut tape = Tape::new();
            let batch = GraphBatch::plain(&[g]);
            let h = gin::encode(&mut tape, store, cfg, &batch, &[]);
            let hg = gin::readout(&mut tape, h, &batch, cfg.readout);
            tape.check()?;
            Ok(tape.value(hg).data.clone())
        })
        .collect()
}

/// Mean AUC over tasks that have both classes among `rows`.
pub fn mean_auc(scores: &[Vec<f64>], labels: &[Vec<Option<f64>>], rows: &[usize]) -> Option<f64> {
    let tasks = labels.first().map_or(0, Vec::len);
    let mut aucs = Vec::new();
    for t in 0..tasks {
        let (mut s, mut y) = (Vec::new(), Vec::new());
        for &r in rows {
            if let Some(l) = labels[r][t] {
                s.push(scores[r][t]);
                y.push(l > 0.5);
            }
        }
        aucs.extend(roc_auc(&s, &y));
    }
    (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64)
}

struct Model<'a> {
    cfg: &'a RunConfig,
    graphs: Vec<&'a MolGraph>,
    /// Frozen graph vectors in probe mode.
    frozen: Option<Vec<Vec<f64>>>,
    store: ParamStore,
}

impl Model<'_> {
    fn forward(&self, tape: &mut Tape, rows: &[usize]) -> Var {
        let hg = match &self.frozen {
            Some(emb) => {
                let k = self.cfg.encoder.embed_dim;
                let data = rows.iter().flat_map(|&r| emb[r].iter().copied()).collect();
                tape.constant(Tensor::from_vec(rows.len(), k, data))
            }
            None => {
                let gs: Vec<&MolGraph> = rows.iter().map(|&r| self.graphs[r]).collect();
                let batch = GraphBatch::plain(&gs);
                let h = gin::encode(tape, &self.store, &self.cfg.encoder, &batch, &[]);
                gin::readout(tape, h, &batch, self.cfg.encoder.readout)
            }
        };
        gin::predict(tape, &self.store, hg)
    }

    fn scores(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.graphs.len())
            .into_par_iter()
            .map(|r| {
                let mut tape = Tape::new();
                let z = self.forward(&mut tape, &[r]);
                tape.check()?;
                Ok(tape.value(z).data.clone())
            })
            .collect()
    }
}

/// Trains a fresh head (and, in full mode, the encoder) on the training
/// part of a scaffold split; the epoch with the best validation AUC
/// determines the reported test AUC. `encoder` supplies pre-trained
/// `enc.*` weights; `None` keeps the random initialization.
pub fn finetune(
    encoder: Option<&ParamStore>,
    data: &Dataset,
    cfg: &RunConfig,
) -> Result<FinetuneReport> {
    cfg.validate()?;
    let tasks = data.label_names.len();
    if tasks == 0 || data.is_empty() {
        return Err(Error::Data("fine-tuning needs labeled molecules".into()));
    }
    let graphs = data.graphs();
    let labels: Vec<Vec<Option<f64>>> = data.records.iter().map(|r| r.labels.clone()).collect();
    let keys: Vec<String> = graphs.par_iter().map(|g| scaffold_key(g)).collect();
    let split = scaffold_split(&keys);
    finetune_split(encoder, &graphs, &labels, &split, cfg)
}

/// [`finetune`] on an explicit split.
pub fn finetune_split(
    encoder: Option<&ParamStore>,
    graphs: &[&MolGraph],
    labels: &[Vec<Option<f64>>],
    split: &Split,
    cfg: &RunConfig,
) -> Result<FinetuneReport> {
    let tasks = labels.first().map_or(0, Vec::len);
    for (name, part) in [
        ("train", &split.train),
        ("valid", &split.valid),
        ("test", &split.test),
    ] {
        let zeros = vec![vec![0.0; tasks]; labels.len()];
        if mean_auc(&zeros, labels, part).is_none() {
            return Err(Error::Data(format!(
                "{name} split has no task with both classes"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6669_6e65_7475_6e65);
    let mut store = ParamStore::new();
    gin::init_encoder(&mut store, &cfg.encoder, &mut rng);
    gin::init_head(&mut store, cfg.encoder.embed_dim, tasks, &mut rng);
    if let Some(pre) = encoder {
        let copied = store.copy_from(pre, "enc.");
        let expected = store.iter().filter(|p| p.name.starts_with("enc.")).count();
        if copied != expected {
            return Err(Error::Config(format!(
                "checkpoint encoder does not match the configured encoder ({copied} of {expected} tensors)"
            )));
        }
    }
    let mode = cfg.finetune.mode;
    let frozen = match mode {
        FinetuneMode::Probe => {
            store.set_trainable_prefix("enc.", false);
            Some(graph_embeddings(&store, &cfg.encoder, graphs)?)
        }
        FinetuneMode::Full => None,
    };
    let mut model = Model {
        cfg,
        graphs: graphs.to_vec(),
        frozen,
        store,
    };

    let adam = AdamConfig {
        lr: cfg.finetune.lr,
        ..AdamConfig::default()
    };
    let mut order = split.train.clone();
    let mut best: Option<(usize, f64, f64)> = None;
    for epoch in 1..=cfg.finetune.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.finetune.batch) {
            let mut tape = Tape::new();
            let z = model.forward(&mut tape, chunk);
            let y: Vec<Option<f64>> = chunk
                .iter()
                .flat_map(|&r| labels[r].iter().copied())
                .collect();
            let loss = tape.bce_loss(z, y);
            tape.backward(loss, &mut model.store)?;
            model.store.adam_step(&adam);
            model.store.zero_grad();
        }
        let scores = model.scores()?;
        let valid = mean_auc(&scores, labels, &split.valid).expect("checked above");
        if best.is_none_or(|(_, v, _)| valid > v) {
            let test = mean_auc(&scores, labels, &split.test).expect("checked above");
            best = Some((epoch, valid, test));
        }
    }
    let (best_epoch, valid_auc, test_auc) = best.unwrap_or((0, f64::NAN, f64::NAN));
    Ok(FinetuneReport {
        mode,
        split_sizes: [split.train.len(), split.valid.len(), split.test.len()],
        best_epoch,
        valid_auc,
        test_auc,
        warning: split.warning.clone(),
    })
}
