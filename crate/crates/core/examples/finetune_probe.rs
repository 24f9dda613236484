//! Compares a linear-probe evaluation of a pre-trained encoder with a
//! randomly initialized one on a synthetic "contains an amide" task.
//!
//! cargo run --release --example finetune_probe

use moama::smiles::{parse, Dataset, Record};
use moama::synth::{corpus, has_amide};
use moama::train::{finetune, pretrain, RunConfig};

fn main() {
    let smiles = corpus(800, 3);
    let records: Vec<Record> = smiles
        .iter()
        .enumerate()
        .map(|(row, s)| {
            let graph = parse(s).unwrap();
            let y = has_amide(&graph) as u8 as f64;
            Record {
                row,
                smiles: s.clone(),
                graph,
                labels: vec![Some(y)],
            }
        })
        .collect();
    let data = Dataset {
        records,
        skipped: Vec::new(),
        label_names: vec!["amide".into()],
    };
    let cfg = RunConfig {
        epochs: 10,
        ..RunConfig::default()
    };
    let graphs: Vec<_> = data.records.iter().map(|r| r.graph.clone()).collect();
    let pre = pretrain(&graphs, &cfg).expect("pre-training");
    let trained = finetune(Some(&pre.checkpoint.store), &data, &cfg).expect("probe");
    let random = finetune(None, &data, &cfg).expect("probe");
    println!("pre-trained encoder: test AUC {:.4}", trained.test_auc);
    println!("random encoder:      test AUC {:.4}", random.test_auc);
}
