//! Pre-trains a small encoder on a synthetic corpus and prints the loss
//! curve.
//!
//! cargo run --release --example pretrain_desk -- 500 10

use moama::smiles::parse;
use moama::synth::corpus;
use moama::train::{curve_csv, pretrain, RunConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(500, |s| s.parse().expect("count"));
    let epochs: usize = args.next().map_or(10, |s| s.parse().expect("epochs"));
    let graphs: Vec<_> = corpus(n, 1).iter().map(|s| parse(s).unwrap()).collect();
    let cfg = RunConfig {
        epochs,
        ..RunConfig::default()
    };
    let out = pretrain(&graphs, &cfg).expect("pre-training");
    print!("{}", curve_csv(&out.curve));
    println!("checkpoint: {} bytes", out.checkpoint.to_bytes().len());
}
