//! Parses SMILES and prints the resulting graph.
//!
//! cargo run --example parse_smiles -- "CC(=O)Oc1ccccc1C(=O)O"

use moama::smiles::{elements::symbol, parse};

fn main() {
    let smiles = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "CC(=O)Oc1ccccc1C(=O)O".into());
    let g = match parse(&smiles) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("{smiles}: {e}");
            std::process::exit(2);
        }
    };
    println!("{smiles}: {} atoms, {} bonds", g.num_atoms(), g.num_bonds());
    for v in 0..g.num_atoms() {
        let a = g.atom(v);
        println!(
            "  atom {v:>2} {:<2} chirality {} aromatic {:<5} ring {:<5} degree {}",
            symbol(a.atomic_number()),
            a.chirality,
            g.is_aromatic(v),
            g.in_ring(v),
            g.degree(v)
        );
    }
    for b in g.bonds() {
        let (u, v) = b.endpoints;
        println!("  bond {u}-{v} {:?} ring {}", b.order, b.in_ring);
    }
}
