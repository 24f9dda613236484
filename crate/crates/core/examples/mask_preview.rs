//! Samples motif-aware and random mask plans for one molecule.
//!
//! cargo run --example mask_preview -- "CC(=O)Nc1ccc(OCC)cc1C(=O)OC" 3

use moama::masking::{apply_mask, random_mask, sample_motifs, MaskConfig, MaskToken};
use moama::motif::decompose;
use moama::smiles::parse;

fn main() {
    let mut args = std::env::args().skip(1);
    let smiles = args
        .next()
        .unwrap_or_else(|| "CC(=O)Nc1ccc(OCC)cc1C(=O)OCc1ccccc1".into());
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let g = parse(&smiles).expect("valid SMILES");
    let dec = decompose(&g);
    let cfg = MaskConfig {
        seed,
        ..MaskConfig::default()
    };
    let plan = sample_motifs(&g, &dec, &cfg).expect("valid config");
    println!(
        "{smiles}: {} atoms, {} motifs",
        g.num_atoms(),
        dec.num_motifs()
    );
    println!(
        "motif-aware: motifs {:?}, nodes {:?}, alpha {:.3}, feasible {}",
        plan.selected_motifs, plan.masked[0], plan.realized_alpha, plan.feasible
    );
    let x = apply_mask(&g, &plan, MaskToken::default());
    let masked_rows: Vec<_> = plan.masked[0].iter().map(|&v| x.row(v)).collect();
    println!("masked rows carry {:?}", masked_rows.first());
    let rand = random_mask(&g, cfg.random_fraction, seed).expect("valid fraction");
    println!("random: nodes {:?}", rand.masked[0]);
}
