//! Circular fingerprints and pairwise Tanimoto similarity.
//!
//! cargo run --example fingerprints -- "CCO" "CCN" "c1ccccc1O"

use moama::fingerprint::{morgan_fingerprint, tanimoto, DEFAULT_RADIUS, DEFAULT_WIDTH};
use moama::smiles::parse;

fn main() {
    let mut inputs: Vec<String> = std::env::args().skip(1).collect();
    if inputs.is_empty() {
        inputs = vec!["c1ccccc1O".into(), "c1ccccc1N".into(), "CCCCCC".into()];
    }
    let fps: Vec<_> = inputs
        .iter()
        .map(|s| {
            morgan_fingerprint(
                &parse(s).expect("valid SMILES"),
                DEFAULT_RADIUS,
                DEFAULT_WIDTH,
            )
            .unwrap()
        })
        .collect();
    for (s, f) in inputs.iter().zip(&fps) {
        println!("{s}: {} bits set", f.count_ones());
    }
    for i in 0..fps.len() {
        for j in i + 1..fps.len() {
            println!(
                "tanimoto({}, {}) = {:.3}",
                inputs[i],
                inputs[j],
                tanimoto(&fps[i], &fps[j]).unwrap()
            );
        }
    }
}
