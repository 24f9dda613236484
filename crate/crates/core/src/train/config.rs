//! Flat `key=value` run configuration.
//!
//! Lines are `section.key=value`; `#` starts a comment and blank lines are
//! ignored. Unknown keys are errors. [`RunConfig::to_text`] writes every key,
//! so its output reproduces the run exactly.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::gin::{DecoderKind, EncoderConfig, Readout};
use crate::influence::{InfluenceConfig, InfluenceMode};
use crate::loss::{AuxForm, LossConfig, RecKind, Target};
use crate::masking::{MaskConfig, MaskMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinetuneMode {
    /// Encoder frozen, only the head is trained.
    Probe,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneConfig {
    pub mode: FinetuneMode,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            mode: FinetuneMode::Probe,
            epochs: 50,
            lr: 1e-3,
            batch: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub data_path: Option<PathBuf>,
    pub labels: Vec<String>,
    pub mask: MaskConfig,
    /// Explicit `mask.hop_k`; the encoder depth is used when unset.
    pub hop_k: Option<usize>,
    /// Re-sample mask plans every epoch rather than once.
    pub resample_per_epoch: bool,
    pub encoder: EncoderConfig,
    pub decoder: DecoderKind,
    pub loss: LossConfig,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub checkpoint: PathBuf,
    pub fp_radius: usize,
    pub fp_width: usize,
    pub finetune: FinetuneConfig,
    pub influence: InfluenceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            data_path: None,
            labels: Vec::new(),
            mask: MaskConfig::default(),
            hop_k: None,
            resample_per_epoch: true,
            encoder: EncoderConfig::default(),
            decoder: DecoderKind::Gnn,
            loss: LossConfig::default(),
            epochs: 30,
            lr: 1e-3,
            batch: 32,
            checkpoint: PathBuf::from("model.ckpt"),
            fp_radius: 2,
            fp_width: 2048,
            finetune: FinetuneConfig::default(),
            influence: InfluenceConfig::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true or false, got {value:?}"
        ))),
    }
}

fn named<T>(key: &str, value: &str, f: impl Fn(&str) -> Option<T>) -> Result<T> {
    f(value).ok_or_else(|| Error::Config(format!("{key}: unknown value {value:?}")))
}

impl RunConfig {
    /// Mask settings with the effective hop limit and the run seed.
    pub fn mask_config(&self) -> MaskConfig {
        MaskConfig {
            hop_k: self.hop_k.unwrap_or(self.encoder.layers),
            seed: self.seed,
            ..self.mask.clone()
        }
    }

    pub fn from_text(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Applies a single `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "data.path" => {
                self.data_path = (!value.is_empty()).then(|| PathBuf::from(value));
            }
            "data.labels" => {
                self.labels = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect();
            }
            "mask.alpha_min" => self.mask.alpha_min = parse(key, value)?,
            "mask.alpha_max" => self.mask.alpha_max = parse(key, value)?,
            "mask.coverage" => self.mask.coverage = parse(key, value)?,
            "mask.mode" => self.mask.mode = named(key, value, MaskMode::from_name)?,
            "mask.hop_k" => {
                self.hop_k = if value == "auto" {
                    None
                } else {
                    Some(parse(key, value)?)
                };
            }
            "mask.random_fraction" => self.mask.random_fraction = parse(key, value)?,
            "mask.attempts" => self.mask.attempts = parse(key, value)?,
            "mask.resample" => {
                self.resample_per_epoch = match value {
                    "per_epoch" => true,
                    "once" => false,
                    _ => return Err(Error::Config(format!("{key}: expected per_epoch or once"))),
                }
            }
            "encoder.layers" => self.encoder.layers = parse(key, value)?,
            "encoder.embed_dim" => self.encoder.embed_dim = parse(key, value)?,
            "encoder.readout" => self.encoder.readout = named(key, value, Readout::from_name)?,
            "encoder.learn_eps" => self.encoder.learn_eps = parse_bool(key, value)?,
            "encoder.decoder" => self.decoder = named(key, value, DecoderKind::from_name)?,
            "loss.rec" => self.loss.rec = named(key, value, RecKind::from_name)?,
            "loss.gamma" => self.loss.gamma = parse(key, value)?,
            "loss.beta" => self.loss.beta = parse(key, value)?,
            "loss.target" => self.loss.target = named(key, value, Target::from_name)?,
            "loss.aux_form" => self.loss.aux_form = named(key, value, AuxForm::from_name)?,
            "train.epochs" => self.epochs = parse(key, value)?,
            "train.lr" => self.lr = parse(key, value)?,
            "train.batch" => self.batch = parse(key, value)?,
            "train.checkpoint" => self.checkpoint = PathBuf::from(value),
            "fingerprint.radius" => self.fp_radius = parse(key, value)?,
            "fingerprint.width" => self.fp_width = parse(key, value)?,
            "finetune.mode" => {
                self.finetune.mode = match value {
                    "probe" => FinetuneMode::Probe,
                    "full" => FinetuneMode::Full,
                    _ => return Err(Error::Config(format!("{key}: expected probe or full"))),
                }
            }
            "finetune.epochs" => self.finetune.epochs = parse(key, value)?,
            "finetune.lr" => self.finetune.lr = parse(key, value)?,
            "finetune.batch" => self.finetune.batch = parse(key, value)?,
            "influence.top_k" => self.influence.top_k = parse(key, value)?,
            "influence.mode" => {
                self.influence.mode = named(key, value, InfluenceMode::from_name)?;
            }
            "influence.max_graphs" => self.influence.max_graphs = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        self.mask_config().validate()?;
        self.loss.validate().map_err(Error::Config)?;
        if self.encoder.layers == 0 || self.encoder.embed_dim == 0 {
            return fail("encoder.layers and encoder.embed_dim must be positive".into());
        }
        if self.epochs == 0 || self.batch == 0 || self.finetune.batch == 0 {
            return fail("epoch and batch counts must be positive".into());
        }
        if !(self.lr > 0.0 && self.finetune.lr > 0.0) {
            return fail("learning rates must be positive".into());
        }
        if self.fp_width == 0 || !self.fp_width.is_power_of_two() {
            return fail(format!(
                "fingerprint.width must be a power of two, got {}",
                self.fp_width
            ));
        }
        if self.influence.top_k == 0 {
            return fail("influence.top_k must be positive".into());
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order.
    pub fn to_text(&self) -> String {
        let m = &self.mask;
        let lines: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            (
                "data.path",
                self.data_path
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            ),
            ("data.labels", self.labels.join(",")),
            ("mask.alpha_min", m.alpha_min.to_string()),
            ("mask.alpha_max", m.alpha_max.to_string()),
            ("mask.coverage", m.coverage.to_string()),
            ("mask.mode", m.mode.name().to_string()),
            (
                "mask.hop_k",
                self.hop_k.map_or("auto".to_string(), |k| k.to_string()),
            ),
            ("mask.random_fraction", m.random_fraction.to_string()),
            ("mask.attempts", m.attempts.to_string()),
            (
                "mask.resample",
                if self.resample_per_epoch {
                    "per_epoch"
                } else {
                    "once"
                }
                .to_string(),
            ),
            ("encoder.layers", self.encoder.layers.to_string()),
            ("encoder.embed_dim", self.encoder.embed_dim.to_string()),
            ("encoder.readout", self.encoder.readout.name().to_string()),
            ("encoder.learn_eps", self.encoder.learn_eps.to_string()),
            ("encoder.decoder", self.decoder.name().to_string()),
            ("loss.rec", self.loss.rec.name().to_string()),
            ("loss.gamma", self.loss.gamma.to_string()),
            ("loss.beta", self.loss.beta.to_string()),
            ("loss.target", self.loss.target.name().to_string()),
            ("loss.aux_form", self.loss.aux_form.name().to_string()),
            ("train.epochs", self.epochs.to_string()),
            ("train.lr", self.lr.to_string()),
            ("train.batch", self.batch.to_string()),
            ("train.checkpoint", self.checkpoint.display().to_string()),
            ("fingerprint.radius", self.fp_radius.to_string()),
            ("fingerprint.width", self.fp_width.to_string()),
            (
                "finetune.mode",
                match self.finetune.mode {
                    FinetuneMode::Probe => "probe",
                    FinetuneMode::Full => "full",
                }
                .to_string(),
            ),
            ("finetune.epochs", self.finetune.epochs.to_string()),
            ("finetune.lr", self.finetune.lr.to_string()),
            ("finetune.batch", self.finetune.batch.to_string()),
            ("influence.top_k", self.influence.top_k.to_string()),
            ("influence.mode", self.influence.mode.name().to_string()),
            (
                "influence.max_graphs",
                self.influence.max_graphs.to_string(),
            ),
        ];
        lines
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}
