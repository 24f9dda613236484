//! Intra- versus inter-motif influence of a briefly pre-trained encoder.
//!
//! cargo run --release --example influence_analysis

use moama::influence::{analyze, InfluenceConfig};
use moama::motif::decompose;
use moama::smiles::parse;
use moama::synth::corpus;
use moama::train::{pretrain, RunConfig};

fn main() {
    let graphs: Vec<_> = corpus(400, 5).iter().map(|s| parse(s).unwrap()).collect();
    let cfg = RunConfig {
        epochs: 5,
        ..RunConfig::default()
    };
    let store = pretrain(&graphs, &cfg)
        .expect("pre-training")
        .checkpoint
        .store;
    let decs: Vec<_> = graphs.iter().map(decompose).collect();
    let report = analyze(
        &graphs.iter().collect::<Vec<_>>(),
        &decs.iter().collect::<Vec<_>>(),
        &store,
        &cfg.encoder,
        &InfluenceConfig {
            max_graphs: 100,
            ..InfluenceConfig::default()
        },
    )
    .expect("influence");
    print!("{}", report.summary_csv());
    print!("{}", report.mrr_inter_csv());
}
