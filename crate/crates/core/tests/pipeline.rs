use causonet::harness::*;
use causonet::lindyn::MdofSystem;
use causonet::neuralcore::{Activation, LrSchedule};
use causonet::operatornets::Architecture;
use causonet::signalgen::*;
use ndarray::Array2;
use proptest::prelude::*;

fn small_corpus(count: usize, seed: u64) -> ResponseDataset {
    let spec = CorpusSpec { count, duration: 2.0, dt: 0.05, band: (0.2, 9.0), pga: (1.0, 3.0), seed };
    let signals = synth_corpus(&spec).unwrap();
    let sys = MdofSystem::shear_building(3, 1.0, 0.05).unwrap();
    build_dataset(&sys, &[0.05; 3], 0, &signals, Solver::Duhamel, Units::GCm).unwrap()
}

/// Forward-backward gain of a bilinear Butterworth band-pass: the squared
/// magnitude of the analog prototype at prewarped frequencies.
fn zero_phase_gain(f: f64, lo: f64, hi: f64, order: i32, dt: f64) -> f64 {
    let warp = |f: f64| (2.0 / dt) * (std::f64::consts::PI * f * dt).tan();
    let (w, wl, wh) = (warp(f), warp(lo), warp(hi));
    let x = (w * w - wl * wh) / (w * (wh - wl));
    1.0 / (1.0 + x.powi(2 * order))
}

#[test]
fn bandpass_is_zero_phase_and_band_limited() {
    let dt = 0.01;
    let tone = |f: f64| Signal::from_fn(dt, 4000, |t| (2.0 * std::f64::consts::PI * f * t).sin()).unwrap();
    for f in [0.3, 2.0, 12.0, 30.0] {
        let input = tone(f);
        let out = butterworth_bandpass(&input, 0.5, 8.0, 4).unwrap();
        let g = zero_phase_gain(f, 0.5, 8.0, 4, dt);
        // steady state, away from the edges: scaled copy with no shift
        let err = (1000..3000).map(|j| (out.samples()[j] - g * input.samples()[j]).abs()).fold(0.0, f64::max);
        assert!(err < 2e-3, "f={f} gain={g} err={err}");
    }
}

#[test]
fn synthetic_motions_hit_their_pga() {
    let g = synth_ground_motion(3, 8.0, 0.02, (0.1, 24.9), 2.5).unwrap();
    assert!((g.peak() - 2.5).abs() < 1e-12);
    assert_eq!(g.len(), 400);
}

#[test]
fn dataset_survives_disk_round_trip() {
    let ds = small_corpus(3, 2);
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&ds, dir.path()).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back.m, ds.m);
    assert_eq!(back.meta.units, Units::GCm);
    assert_eq!(back.output_matrix(), ds.output_matrix());
}

#[test]
fn short_training_run_improves_and_is_reproducible() {
    let ds = small_corpus(6, 4);
    let (tr, te) = (ds.select(&[0, 1, 2, 3]), ds.select(&[4, 5]));
    let spec = ModelSpec::new(Architecture::Causality, vec![ds.m, 20, 20], vec![1, 20, 20], Activation::Tanh);
    let mut cfg = TrainConfig::new(LrSchedule::constant(1e-3).unwrap(), 60);
    cfg.loss = LossKind::WeightedMse;
    cfg.include_ic_pair = true;
    let run = || {
        let model = build_model(&spec, &tr, 0).unwrap();
        train_any(model, &cfg, &tr, Some(&te)).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.history, b.history);
    let first = a.history.records[0].loss;
    let last = a.history.records.last().unwrap().loss;
    assert!(last < first, "{first} -> {last}");
    let report = evaluate(&a.best, &te, None).unwrap();
    assert_eq!(report.samples.len(), 2);
    assert_eq!(report.predictions.dim(), (2, ds.m));
}

#[test]
fn mismatched_branch_width_is_rejected() {
    let ds = small_corpus(2, 1);
    let spec = ModelSpec::new(Architecture::DeepOnet, vec![ds.m + 1, 8], vec![1, 8], Activation::Tanh);
    assert!(matches!(build_model(&spec, &ds, 0), Err(causonet::Error::DimensionMismatch { .. })));
}

proptest! {
    #[test]
    fn rel_l2_is_scale_invariant(vals in prop::collection::vec(0.1f64..2.0, 12), noise in prop::collection::vec(-0.5f64..0.5, 12), c in 0.01f64..100.0) {
        let truth = Array2::from_shape_vec((2, 6), vals).unwrap();
        let pred = &truth + &Array2::from_shape_vec((2, 6), noise).unwrap();
        let a = rel_l2(pred.view(), truth.view()).unwrap();
        let b = rel_l2((&pred * c).view(), (&truth * c).view()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        prop_assert_eq!(rel_l2(truth.view(), truth.view()).unwrap(), 0.0);
        // weighted loss scales linearly, plain MSE quadratically
        let w1 = loss_weighted(pred.view(), truth.view()).unwrap();
        let w2 = loss_weighted((&pred * c).view(), (&truth * c).view()).unwrap();
        prop_assert!((w2 - c * w1).abs() <= 1e-9 * (1.0 + c * w1));
        let m1 = loss_mse(pred.view(), truth.view()).unwrap();
        let m2 = loss_mse((&pred * c).view(), (&truth * c).view()).unwrap();
        prop_assert!((m2 - c * c * m1).abs() <= 1e-9 * (1.0 + c * c * m1));
    }

    #[test]
    fn rel_err_bounds(vals in prop::collection::vec(-2.0f64..2.0, 8), noise in prop::collection::vec(-0.5f64..0.5, 8)) {
        let truth = ndarray::Array1::from(vals);
        prop_assume!(truth.iter().any(|v| v.abs() > 1e-3));
        let pred = &truth + &ndarray::Array1::from(noise);
        let e = rel_err(pred.view(), truth.view()).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert_eq!(rel_err(truth.view(), truth.view()).unwrap(), 0.0);
    }
}
