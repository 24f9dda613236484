//! Reconstruction losses, the fingerprint alignment loss and their mix.

use crate::fingerprint::{tanimoto, Fingerprint};
use crate::gin::{Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecKind {
    Sce,
    Ce,
    Mse,
}

impl RecKind {
    pub fn name(self) -> &'static str {
        match self {
            RecKind::Sce => "sce",
            RecKind::Ce => "ce",
            RecKind::Mse => "mse",
        }
    }

    pub fn from_name(s: &str) -> Option<RecKind> {
        match s {
            "sce" => Some(RecKind::Sce),
            "ce" => Some(RecKind::Ce),
            "mse" => Some(RecKind::Mse),
            _ => None,
        }
    }
}

/// Which attribute dimensions are reconstructed, and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    AtomType,
    Chirality,
    /// One decoder emitting both logit blocks; the two losses are summed.
    BothOneDecoder,
    /// Independent decoders; the two losses are averaged.
    BothTwoDecoders,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::AtomType => "atom_type",
            Target::Chirality => "chirality",
            Target::BothOneDecoder => "both_one_decoder",
            Target::BothTwoDecoders => "both_two_decoders",
        }
    }

    pub fn from_name(s: &str) -> Option<Target> {
        match s {
            "atom_type" => Some(Target::AtomType),
            "chirality" => Some(Target::Chirality),
            "both_one_decoder" => Some(Target::BothOneDecoder),
            "both_two_decoders" => Some(Target::BothTwoDecoders),
            _ => None,
        }
    }

    /// Attribute dimensions produced by the decoder, in output order.
    pub fn dims(self) -> &'static [usize] {
        match self {
            Target::AtomType => &[0],
            Target::Chirality => &[1],
            _ => &[0, 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxForm {
    /// `(t − cos)²`
    Squared,
    /// `t − cos` as printed; unbounded below.
    Raw,
}

impl AuxForm {
    pub fn name(self) -> &'static str {
        match self {
            AuxForm::Squared => "squared",
            AuxForm::Raw => "raw_difference",
        }
    }

    pub fn from_name(s: &str) -> Option<AuxForm> {
        match s {
            "squared" => Some(AuxForm::Squared),
            "raw_difference" => Some(AuxForm::Raw),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    pub rec: RecKind,
    pub gamma: f64,
    pub beta: f64,
    pub target: Target,
    pub aux_form: AuxForm,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            rec: RecKind::Sce,
            gamma: 1.0,
            beta: 0.5,
            target: Target::AtomType,
            aux_form: AuxForm::Squared,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma >= 1.0) {
            return Err(format!("loss.gamma must be >= 1, got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(format!("loss.beta must lie in [0, 1], got {}", self.beta));
        }
        Ok(())
    }

    pub fn uses_aux(&self) -> bool {
        self.beta < 1.0
    }
}

/// Masked batch rows per attribute dimension with their true codes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaskedTargets {
    pub rows: [Vec<usize>; 2],
    pub codes: [Vec<usize>; 2],
}

impl MaskedTargets {
    pub fn push(&mut self, dim: usize, row: usize, code: usize) {
        self.rows[dim].push(row);
        self.codes[dim].push(code);
    }
}

fn single(tape: &mut Tape, z: Var, rows: Vec<usize>, codes: Vec<usize>, cfg: &LossConfig) -> Var {
    match cfg.rec {
        RecKind::Sce => tape.sce_loss(z, rows, codes, cfg.gamma),
        RecKind::Ce => tape.ce_loss(z, rows, codes),
        RecKind::Mse => tape.mse_loss(z, rows, codes),
    }
}

/// Reconstruction loss over the masked rows; `logits` comes from
/// [`crate::gin::decode`]. Returns `None` when nothing is masked.
pub fn rec_loss(
    tape: &mut Tape,
    logits: &[Var],
    masked: &MaskedTargets,
    cfg: &LossConfig,
) -> Option<Var> {
    let dims = cfg.target.dims();
    assert_eq!(
        logits.len(),
        dims.len(),
        "one logit block per target dimension"
    );
    let mut terms = Vec::new();
    for (&z, &d) in logits.iter().zip(dims) {
        if !masked.rows[d].is_empty() {
            terms.push(single(
                tape,
                z,
                masked.rows[d].clone(),
                masked.codes[d].clone(),
                cfg,
            ));
        }
    }
    let mut total = *terms.first()?;
    for &t in &terms[1..] {
        total = tape.add(total, t);
    }
    if cfg.target == Target::BothTwoDecoders && terms.len() == 2 {
        total = tape.scale(total, 0.5);
    }
    Some(total)
}

/// Row-major pairwise Tanimoto matrix.
pub fn tanimoto_matrix(fps: &[&Fingerprint]) -> Vec<f64> {
    let b = fps.len();
    let mut out = vec![1.0; b * b];
    for i in 0..b {
        for j in i + 1..b {
            let t = tanimoto(fps[i], fps[j]).expect("fingerprints share a width");
            out[i * b + j] = t;
            out[j * b + i] = t;
        }
    }
    out
}

/// Alignment between graph-vector cosines and fingerprint similarity over
/// all pairs of the batch. `None` for batches smaller than two.
pub fn aux_loss(tape: &mut Tape, hg: Var, fps: &[&Fingerprint], form: AuxForm) -> Option<Var> {
    if fps.len() < 2 {
        return None;
    }
    assert_eq!(tape.value(hg).rows, fps.len());
    Some(tape.aux_loss(hg, tanimoto_matrix(fps), form == AuxForm::Squared))
}

/// `β·rec + (1 − β)·aux`, with a missing term treated as zero.
pub fn total_loss(tape: &mut Tape, rec: Option<Var>, aux: Option<Var>, beta: f64) -> Option<Var> {
    let rec = rec.map(|r| tape.scale(r, beta));
    let aux = aux.map(|a| tape.scale(a, 1.0 - beta));
    match (rec, aux) {
        (Some(r), Some(a)) => Some(tape.add(r, a)),
        (r, a) => r.or(a),
    }
}

pub fn combine(rec: f64, aux: f64, beta: f64) -> f64 {
    beta * rec + (1.0 - beta) * aux
}
