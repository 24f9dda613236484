//! Writes a synthetic labeled corpus as CSV.
//!
//! cargo run --example make_corpus -- corpus.csv 2000 7

use moama::smiles::parse;
use moama::synth::{corpus, has_amide, has_halogen};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "corpus.csv".into());
    let n: usize = args.next().map_or(1000, |s| s.parse().expect("count"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let mut out = String::from("smiles,amide,halogen\n");
    for s in corpus(n, seed) {
        let g = parse(&s).expect("generated SMILES parse");
        out.push_str(&format!(
            "{s},{},{}\n",
            has_amide(&g) as u8,
            has_halogen(&g) as u8
        ));
    }
    std::fs::write(&path, out).expect("write corpus");
    println!("wrote {n} molecules to {path}");
}
