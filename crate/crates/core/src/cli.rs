//! Command-line front end.
//!
//! Every command reads a headed CSV with a `smiles` column, writes its
//! artifacts into `--out` and records the effective configuration in
//! `effective-config.txt`, which can be passed back with `--config`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fingerprint::morgan_fingerprint;
use crate::influence::analyze;
use crate::masking::{molecule_seed, sample_motifs};
use crate::motif::{decompose, MotifDecomposition};
use crate::smiles::{read_dataset, Dataset};
use crate::train::{finetune, write_curve, Checkpoint, Pretrainer, RunConfig};

pub const EFFECTIVE_CONFIG: &str = "effective-config.txt";

#[derive(Debug, Parser)]
#[command(
    name = "moama",
    version,
    about = "Motif-aware masked pre-training for molecular graphs"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// key=value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Extra `key=value` overrides, applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Motif decomposition per molecule.
    Decompose { input: Option<PathBuf> },
    /// Mask plans sampled for one epoch.
    MaskPreview {
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        epoch: u64,
    },
    /// Masked-attribute pre-training.
    Pretrain {
        input: Option<PathBuf>,
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Scaffold-split downstream evaluation.
    Finetune {
        input: Option<PathBuf>,
        /// Pre-trained encoder; omitted means a random encoder.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Intra/inter-motif influence analysis.
    Influence {
        input: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Hex-encoded circular fingerprints.
    Fingerprint { input: Option<PathBuf> },
}

impl Command {
    fn input(&self) -> Option<&PathBuf> {
        match self {
            Command::Decompose { input }
            | Command::MaskPreview { input, .. }
            | Command::Pretrain { input, .. }
            | Command::Finetune { input, .. }
            | Command::Influence { input, .. }
            | Command::Fingerprint { input } => input.as_ref(),
        }
    }
}

/// Config file, then `--set` overrides, then `--seed`, then the input path.
pub fn resolve_config(common: &Common, input: Option<&PathBuf>) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            RunConfig::from_text(&text)?
        }
        None => RunConfig::default(),
    };
    for kv in &common.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(p) = input {
        cfg.data_path = Some(p.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn data_path(cfg: &RunConfig) -> Result<&Path> {
    cfg.data_path
        .as_deref()
        .ok_or_else(|| Error::Config("no input file: pass one or set data.path".into()))
}

fn load(cfg: &RunConfig, labels: Option<&[String]>) -> Result<Dataset> {
    let path = data_path(cfg)?;
    let data = read_dataset(path, labels)?;
    if !data.skipped.is_empty() {
        eprintln!(
            "skipped {} unparsable row(s) in {}",
            data.skipped.len(),
            path.display()
        );
    }
    if data.is_empty() {
        return Err(Error::Data(format!(
            "{} holds no usable molecules",
            path.display()
        )));
    }
    Ok(data)
}

/// Every column except `smiles`.
fn label_columns(path: &Path) -> Result<Vec<String>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Data(e.to_string()))?;
    let headers = r.headers().map_err(|e| Error::Data(e.to_string()))?;
    Ok(headers
        .iter()
        .map(str::trim)
        .filter(|h| *h != "smiles")
        .map(String::from)
        .collect())
}

fn decompositions(data: &Dataset) -> Vec<MotifDecomposition> {
    data.records
        .par_iter()
        .map(|r| decompose(&r.graph))
        .collect()
}

fn checkpoint_path(cfg: &RunConfig, out: &Path, flag: Option<&PathBuf>) -> PathBuf {
    match flag {
        Some(p) => p.clone(),
        None if cfg.checkpoint.is_absolute() => cfg.checkpoint.clone(),
        None => out.join(&cfg.checkpoint),
    }
}

/// Loads a checkpoint and adopts its encoder settings.
fn load_encoder(cfg: &mut RunConfig, path: &Path) -> Result<Checkpoint> {
    let ck = Checkpoint::load(path)?;
    let saved = RunConfig::from_text(&ck.config)
        .map_err(|e| Error::Data(format!("checkpoint config is unreadable: {e}")))?;
    cfg.encoder = saved.encoder;
    Ok(ck)
}

fn quote(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn join(xs: impl IntoIterator<Item = usize>) -> String {
    xs.into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn run_command(cli: &Cli) -> Result<()> {
    let out = &cli.common.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut cfg = resolve_config(&cli.common, cli.command.input())?;
    match &cli.command {
        Command::Decompose { .. } => {
            write(&out.join(EFFECTIVE_CONFIG), &cfg.to_text())?;
            let data = load(&cfg, None)?;
            let decs = decompositions(&data);
            let mut body = String::from("smiles,n_motifs,motif_sizes,cut_edges\n");
            for (r, d) in data.records.iter().zip(&decs) {
                let sizes = join(d.motifs.iter().map(|m| m.len()));
                body.push_str(&format!(
                    "{},{},{sizes},{}\n",
                    quote(&r.smiles),
                    d.num_motifs(),
                    d.cut_edges.len()
                ));
            }
            write(&out.join("motifs.csv"), &body)?;
            println!("decomposed {} molecules", data.len());
        }
        Command::MaskPreview { epoch, .. } => {
            write(&out.join(EFFECTIVE_CONFIG), &cfg.to_text())?;
            let data = load(&cfg, None)?;
            let decs = decompositions(&data);
            let base = cfg.mask_config();
            let plans = data
                .records
                .par_iter()
                .zip(&decs)
                .enumerate()
                .map(|(i, (r, d))| {
                    let mut mc = base.clone();
                    mc.seed = molecule_seed(cfg.seed, *epoch, i);
                    sample_motifs(&r.graph, d, &mc)
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let mut body = String::from(
                "smiles,n_atoms,n_motifs,feasible,alpha,selected_motifs,masked_atom_type,masked_chirality\n",
            );
            for ((r, d), p) in data.records.iter().zip(&decs).zip(&plans) {
                body.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    quote(&r.smiles),
                    r.graph.num_atoms(),
                    d.num_motifs(),
                    p.feasible,
                    p.realized_alpha,
                    join(p.selected_motifs.iter().copied()),
                    join(p.masked[0].iter().copied()),
                    join(p.masked[1].iter().copied()),
                ));
            }
            write(&out.join("mask_plans.csv"), &body)?;
            let feasible = plans.iter().filter(|p| p.feasible).count();
            println!("{feasible}/{} plans feasible", plans.len());
        }
        Command::Pretrain { resume, .. } => {
            write(&out.join(EFFECTIVE_CONFIG), &cfg.to_text())?;
            let data = load(&cfg, None)?;
            let graphs: Vec<_> = data.records.into_iter().map(|r| r.graph).collect();
            let mut run = match resume {
                Some(p) => Pretrainer::resume(&graphs, &cfg, Checkpoint::load(p)?)?,
                None => Pretrainer::new(&graphs, &cfg)?,
            };
            let mut curve = Vec::new();
            while run.epoch() < cfg.epochs {
                let s = run.run_epoch()?;
                eprintln!(
                    "epoch {:>3}  loss {:.5}  rec {:.5}  aux {}  feasible {:.3}",
                    s.epoch,
                    s.loss,
                    s.rec,
                    s.aux.map_or("-".to_string(), |a| format!("{a:.5}")),
                    s.feasible_frac
                );
                curve.push(s);
            }
            write_curve(&out.join("loss.csv"), &curve)?;
            let path = checkpoint_path(&cfg, out, None);
            run.checkpoint().save(&path)?;
            println!("checkpoint written to {}", path.display());
        }
        Command::Finetune { checkpoint, .. } => {
            let ck = match checkpoint {
                Some(p) => Some(load_encoder(&mut cfg, p)?),
                None => None,
            };
            if cfg.labels.is_empty() {
                cfg.labels = label_columns(data_path(&cfg)?)?;
            }
            write(&out.join(EFFECTIVE_CONFIG), &cfg.to_text())?;
            let data = load(&cfg, Some(&cfg.labels))?;
            let report = finetune(ck.as_ref().map(|c| &c.store), &data, &cfg)?;
            if let Some(w) = &report.warning {
                eprintln!("warning: {w}");
            }
            let [tr, va, te] = report.split_sizes;
            let mode = match report.mode {
                crate::train::FinetuneMode::Probe => "probe",
                crate::train::FinetuneMode::Full => "full",
            };
            let body = format!(
                "mode,train,valid,test,best_epoch,valid_auc,test_auc\n{mode},{tr},{va},{te},{},{},{}\n",
                report.best_epoch, report.valid_auc, report.test_auc
            );
            write(&out.join("finetune.csv"), &body)?;
            println!(
                "test AUC {:.4} (valid {:.4}, epoch {})",
                report.test_auc, report.valid_auc, report.best_epoch
            );
        }
        Command::Influence { checkpoint, .. } => {
            let path = checkpoint_path(&cfg, out, checkpoint.as_ref());
            let ck = load_encoder(&mut cfg, &path)?;
            write(&out.join(EFFECTIVE_CONFIG), &cfg.to_text())?;
            let data = load(&cfg, None)?;
            let decs = decompositions(&data);
            let graphs = data.graphs();
            let dec_refs: Vec<_> = decs.iter().collect();
            let report = analyze(&graphs, &dec_refs, &ck.store, &cfg.encoder, &cfg.influence)?;
            report.write(out)?;
            print!("{}", report.summary_csv());
        }
        Command::Fingerprint { .. } => {
            write(&out.join(EFFECTIVE_CONFIG), &cfg.to_text())?;
            let data = load(&cfg, None)?;
            let fps = data
                .records
                .par_iter()
                .map(|r| morgan_fingerprint(&r.graph, cfg.fp_radius, cfg.fp_width))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(e.to_string()))?;
            let mut body = String::from("smiles,bits\n");
            for (r, f) in data.records.iter().zip(&fps) {
                body.push_str(&format!("{},{}\n", quote(&r.smiles), f.to_hex()));
            }
            write(&out.join("fingerprints.csv"), &body)?;
            println!("fingerprinted {} molecules", data.len());
        }
    }
    Ok(())
}

/// Runs one command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Ok(n) = std::env::var("MOAMA_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                // the global pool can only be set once per process
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: MOAMA_THREADS must be a positive integer, got {n:?}");
                return 1;
            }
        }
    }
    match run_command(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
