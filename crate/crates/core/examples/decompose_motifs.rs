//! Splits molecules into motifs along the fragmentation rules.
//!
//! cargo run --example decompose_motifs -- "CCN(CC)C(=O)c1ccccc1" "COc1ccc(CCN)cc1"

use moama::motif::{decompose, motif_adjacency};
use moama::smiles::{elements::symbol, parse};

fn main() {
    let mut inputs: Vec<String> = std::env::args().skip(1).collect();
    if inputs.is_empty() {
        inputs = vec![
            "CCN(CC)C(=O)c1ccccc1".into(),
            "c1ccccc1Cc1ccccc1".into(),
            "CC(=O)Oc1ccccc1".into(),
        ];
    }
    for s in inputs {
        let g = parse(&s).expect("valid SMILES");
        let dec = decompose(&g);
        let adj = motif_adjacency(&g, &dec);
        println!(
            "{s}: {} motif(s), {} cut bond(s)",
            dec.num_motifs(),
            dec.cut_edges.len()
        );
        for (i, m) in dec.motifs.iter().enumerate() {
            let atoms: String = m
                .node_ids
                .iter()
                .map(|&v| symbol(g.atom(v).atomic_number()))
                .collect::<Vec<_>>()
                .join("");
            println!(
                "  motif {i}: nodes {:?} ({atoms}), neighbours {:?}",
                m.node_ids, adj[i]
            );
        }
    }
}
