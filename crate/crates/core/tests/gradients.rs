mod common;

use std::sync::Arc;

use common::{fd_check, random_graph, rng};
use moama::fingerprint::morgan_fingerprint;
use moama::gin::{
    self, AdamConfig, DecoderKind, EncoderConfig, GraphBatch, ParamStore, Readout, Tape, Tensor,
    Var,
};
use moama::loss::{self, AuxForm, LossConfig, MaskedTargets, RecKind, Target};
use moama::molgraph::MolGraph;
use moama::smiles::parse;

#[derive(Clone)]
struct Setup {
    enc: EncoderConfig,
    decoder: DecoderKind,
    loss: LossConfig,
    graphs: Vec<MolGraph>,
    masked: Vec<Vec<usize>>,
}

impl Setup {
    fn new(loss: LossConfig) -> Setup {
        let graphs = vec![
            parse("CC(=O)N[C@@H](C)c1ccncc1").unwrap(),
            parse("OCC(F)Cc1ccccc1").unwrap(),
            parse("CC#N").unwrap(),
        ];
        Setup {
            enc: EncoderConfig {
                layers: 2,
                embed_dim: 4,
                ..EncoderConfig::default()
            },
            decoder: DecoderKind::Gnn,
            loss,
            graphs,
            masked: vec![vec![1, 4], vec![0, 5], vec![2]],
        }
    }

    fn store(&self) -> ParamStore {
        gin::init_pretrain_params(&self.enc, self.decoder, self.loss.target, 21)
    }

    fn forward(&self, tape: &mut Tape, store: &ParamStore) -> Var {
        let refs: Vec<&MolGraph> = self.graphs.iter().collect();
        let mut xs: Vec<_> = self.graphs.iter().map(|g| g.attr_matrix()).collect();
        let mut targets = MaskedTargets::default();
        let mut off = 0;
        for (gi, g) in self.graphs.iter().enumerate() {
            for &v in &self.masked[gi] {
                let a = g.atom(v);
                targets.push(0, off + v, a.atom_type as usize);
                targets.push(1, off + v, a.chirality as usize);
                xs[gi].0[v] = [119, 4];
            }
            off += g.num_atoms();
        }
        let batch = GraphBatch::new(&refs, &xs);
        let h = gin::encode(tape, store, &self.enc, &batch, &[]);
        let logits = gin::decode(tape, store, self.decoder, self.loss.target, h, &batch);
        let rec = loss::rec_loss(tape, &logits, &targets, &self.loss);
        let aux = if self.loss.uses_aux() {
            let hg = gin::readout(tape, h, &batch, self.enc.readout);
            let fps: Vec<_> = self
                .graphs
                .iter()
                .map(|g| morgan_fingerprint(g, 2, 512).unwrap())
                .collect();
            loss::aux_loss(
                tape,
                hg,
                &fps.iter().collect::<Vec<_>>(),
                self.loss.aux_form,
            )
        } else {
            None
        };
        loss::total_loss(tape, rec, aux, self.loss.beta).unwrap()
    }

    fn value(&self, store: &ParamStore) -> f64 {
        let mut tape = Tape::new();
        let l = self.forward(&mut tape, store);
        tape.value(l).item()
    }

    fn check(&self) {
        let base = self.store();
        let mut analytic = base.clone();
        let mut tape = Tape::new();
        let l = self.forward(&mut tape, &base);
        tape.backward(l, &mut analytic).unwrap();
        let r = fd_check(&base, &analytic, |s| self.value(s), 1e-4, 1e-6);
        assert!(r.checked > 100);
        assert!(
            r.failures.is_empty(),
            "{} of {} entries off: {:?}",
            r.failures.len(),
            r.checked,
            &r.failures[..r.failures.len().min(5)]
        );
    }
}

#[test]
fn sce_with_aux_gnn_decoder() {
    Setup::new(LossConfig::default()).check();
}

#[test]
fn cross_entropy_and_mse() {
    for rec in [RecKind::Ce, RecKind::Mse] {
        Setup::new(LossConfig {
            rec,
            beta: 1.0,
            ..LossConfig::default()
        })
        .check();
    }
}

#[test]
fn sce_gamma_two_raw_aux() {
    Setup::new(LossConfig {
        gamma: 2.0,
        aux_form: AuxForm::Raw,
        ..LossConfig::default()
    })
    .check();
}

#[test]
fn mlp_decoder_and_both_targets() {
    for target in [
        Target::Chirality,
        Target::BothOneDecoder,
        Target::BothTwoDecoders,
    ] {
        let mut s = Setup::new(LossConfig {
            target,
            ..LossConfig::default()
        });
        s.decoder = DecoderKind::Mlp;
        s.check();
    }
}

#[test]
fn sum_and_max_readouts_with_learned_eps() {
    for readout in [Readout::Sum, Readout::Max] {
        let mut s = Setup::new(LossConfig {
            beta: 0.0,
            ..LossConfig::default()
        });
        s.enc.readout = readout;
        s.enc.learn_eps = true;
        s.check();
    }
}

#[test]
fn head_with_bce() {
    let enc = EncoderConfig {
        layers: 2,
        embed_dim: 4,
        ..EncoderConfig::default()
    };
    let graphs = [
        parse("CCO").unwrap(),
        parse("c1ccccc1N").unwrap(),
        parse("CC(=O)O").unwrap(),
    ];
    let labels = vec![Some(1.0), None, Some(0.0), Some(0.0), Some(1.0), Some(1.0)];
    let mut base = ParamStore::new();
    let mut r = rng(4);
    gin::init_encoder(&mut base, &enc, &mut r);
    gin::init_head(&mut base, 4, 2, &mut r);
    let f = |store: &ParamStore, tape: &mut Tape| {
        let refs: Vec<&MolGraph> = graphs.iter().collect();
        let batch = GraphBatch::plain(&refs);
        let h = gin::encode(tape, store, &enc, &batch, &[]);
        let hg = gin::readout(tape, h, &batch, Readout::Mean);
        let z = gin::predict(tape, store, hg);
        tape.bce_loss(z, labels.clone())
    };
    let mut analytic = base.clone();
    let mut tape = Tape::new();
    let l = f(&base, &mut tape);
    tape.backward(l, &mut analytic).unwrap();
    let value = |s: &ParamStore| {
        let mut t = Tape::new();
        let l = f(s, &mut t);
        t.value(l).item()
    };
    let rep = fd_check(&base, &analytic, value, 1e-4, 1e-6);
    assert!(rep.failures.is_empty(), "{:?}", rep.failures);
}

#[test]
fn zeroed_rows_slices_and_gathers() {
    let mut base = ParamStore::new();
    let id = base.insert(
        "x",
        Tensor::from_vec(3, 4, (0..12).map(|i| (i as f64 * 0.37).sin()).collect()),
        true,
    );
    let f = |store: &ParamStore, tape: &mut Tape| {
        let x = tape.param(store, id);
        let g = tape.gather(x, Arc::new(vec![2, 0, 2]));
        let z = tape.zero_rows(g, vec![1]);
        let s = tape.slice_cols(z, 1, 2);
        let t = tape.transpose(s);
        let m = tape.matmul(s, t);
        let m = tape.scale(m, 0.5);
        tape.sce_loss(m, vec![0, 2], vec![1, 0], 1.0)
    };
    let mut analytic = base.clone();
    let mut tape = Tape::new();
    let l = f(&base, &mut tape);
    tape.backward(l, &mut analytic).unwrap();
    let value = |s: &ParamStore| {
        let mut t = Tape::new();
        let l = f(s, &mut t);
        t.value(l).item()
    };
    let rep = fd_check(&base, &analytic, value, 1e-4, 1e-6);
    assert!(rep.failures.is_empty(), "{:?}", rep.failures);
}

#[test]
fn overfits_a_fixed_batch() {
    let mut s = Setup::new(LossConfig::default());
    s.graphs = [
        "CC(=O)Oc1ccccc1",
        "CCN(CC)C(=O)c1ccccc1",
        "COc1ccccc1",
        "OCc1ccncc1",
        "NC(=O)c1ccco1",
        "CCOC(=O)C",
        "FC(F)c1ccccc1",
        "CC(C)Cc1ccccc1",
    ]
    .iter()
    .map(|x| parse(x).unwrap())
    .collect();
    s.masked = vec![vec![1]; 8];
    s.enc.embed_dim = 8;
    let mut store = s.store();
    let adam = AdamConfig {
        lr: 1e-2,
        ..AdamConfig::default()
    };
    let first = s.value(&store);
    for _ in 0..50 {
        let mut tape = Tape::new();
        let l = s.forward(&mut tape, &store);
        tape.backward(l, &mut store).unwrap();
        store.adam_step(&adam);
        store.zero_grad();
    }
    let last = s.value(&store);
    assert!(last < 0.5 * first, "{first} -> {last}");
}

#[test]
fn identical_steps_are_deterministic() {
    let s = Setup::new(LossConfig::default());
    let step = || {
        let mut store = s.store();
        for _ in 0..2 {
            let mut tape = Tape::new();
            let l = s.forward(&mut tape, &store);
            tape.backward(l, &mut store).unwrap();
            store.adam_step(&AdamConfig::default());
            store.zero_grad();
        }
        store
    };
    assert_eq!(step(), step());
}

#[test]
fn receptive_field_is_bounded_by_depth() {
    let mut r = rng(8);
    for trial in 0..20 {
        let g = random_graph(&mut r, 12);
        let enc = EncoderConfig {
            layers: 2,
            embed_dim: 5,
            ..EncoderConfig::default()
        };
        let store = gin::init_pretrain_params(&enc, DecoderKind::Mlp, Target::AtomType, trial);
        let u = trial as usize % g.num_atoms();
        let mut x = g.attr_matrix();
        x.0[u] = [119, 4];
        let run = |x: &moama::molgraph::AttrMatrix| {
            let mut tape = Tape::new();
            let b = GraphBatch::new(&[&g], std::slice::from_ref(x));
            let h = gin::encode(&mut tape, &store, &enc, &b, &[]);
            tape.value(h).clone()
        };
        let (a, b) = (run(&g.attr_matrix()), run(&x));
        let dist = g.distances_from(u).unwrap();
        for v in 0..g.num_atoms() {
            if dist[v].is_none_or(|d| d > 2) {
                assert_eq!(a.row(v), b.row(v));
            }
        }
    }
}
