//! Pre-training, scaffold splitting, downstream evaluation and checkpoints.

pub mod auc;
pub mod checkpoint;
pub mod config;
pub mod finetune;
pub mod pretrain;
pub mod scaffold;

pub use auc::roc_auc;
pub use checkpoint::{training_rng, Checkpoint};
pub use config::{FinetuneConfig, FinetuneMode, RunConfig};
pub use finetune::{finetune, finetune_split, graph_embeddings, FinetuneReport};
pub use pretrain::{curve_csv, pretrain, write_curve, EpochStats, PretrainOutput, Pretrainer};
pub use scaffold::{scaffold_key, scaffold_split, Split};
