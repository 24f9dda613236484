//! Compares analytic gradients of the pre-training loss with central
//! finite differences for every parameter entry of a tiny model.
//!
//! cargo run --release --example gradient_check

use moama::fingerprint::morgan_fingerprint;
use moama::gin::{self, DecoderKind, EncoderConfig, GraphBatch, ParamStore, Tape};
use moama::loss::{self, LossConfig, MaskedTargets};
use moama::smiles::parse;

fn loss_value(store: &ParamStore, backward: Option<&mut ParamStore>) -> f64 {
    let cfg = EncoderConfig {
        layers: 2,
        embed_dim: 4,
        ..EncoderConfig::default()
    };
    let lc = LossConfig::default();
    let gs = [
        parse("CC(=O)Nc1ccccc1").unwrap(),
        parse("OCCc1ccncc1").unwrap(),
    ];
    let refs: Vec<_> = gs.iter().collect();
    let mut xs: Vec<_> = gs.iter().map(|g| g.attr_matrix()).collect();
    let mut targets = MaskedTargets::default();
    for (v, off) in [(1usize, 0usize), (3, 10)] {
        let gi = (off > 0) as usize;
        targets.push(0, off + v, gs[gi].atom(v).atom_type as usize);
        xs[gi].0[v] = [119, 4];
    }
    let batch = GraphBatch::new(&refs, &xs);
    let fps: Vec<_> = gs
        .iter()
        .map(|g| morgan_fingerprint(g, 2, 256).unwrap())
        .collect();
    let mut tape = Tape::new();
    let h = gin::encode(&mut tape, store, &cfg, &batch, &[]);
    let logits = gin::decode(&mut tape, store, DecoderKind::Gnn, lc.target, h, &batch);
    let rec = loss::rec_loss(&mut tape, &logits, &targets, &lc);
    let hg = gin::readout(&mut tape, h, &batch, cfg.readout);
    let aux = loss::aux_loss(&mut tape, hg, &fps.iter().collect::<Vec<_>>(), lc.aux_form);
    let total = loss::total_loss(&mut tape, rec, aux, lc.beta).unwrap();
    if let Some(s) = backward {
        tape.backward(total, s).unwrap();
    }
    tape.value(total).item()
}

fn main() {
    let cfg = EncoderConfig {
        layers: 2,
        embed_dim: 4,
        ..EncoderConfig::default()
    };
    let mut store =
        gin::init_pretrain_params(&cfg, DecoderKind::Gnn, moama::loss::Target::AtomType, 11);
    let frozen = store.clone();
    loss_value(&frozen, Some(&mut store));
    let (mut worst, mut checked) = (0.0f64, 0usize);
    for p in store.iter().filter(|p| p.trainable) {
        for i in 0..p.value.data.len() {
            let h = 1e-6;
            let mut plus = frozen.clone();
            plus.get_mut(&p.name).unwrap().value.data[i] += h;
            let mut minus = frozen.clone();
            minus.get_mut(&p.name).unwrap().value.data[i] -= h;
            let fd = (loss_value(&plus, None) - loss_value(&minus, None)) / (2.0 * h);
            let err = (fd - p.grad.data[i]).abs() / fd.abs().max(p.grad.data[i].abs()).max(1e-6);
            worst = worst.max(err);
            checked += 1;
        }
    }
    println!("checked {checked} entries, worst relative error {worst:.2e}");
}
