use causonet::neuralcore::{check_gradients, Activation, Mlp, Mode};
use causonet::operatornets::*;
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const M: usize = 16;
const DT: f64 = 0.05;

fn batch(seed: u64, n: usize, m: usize) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, m), |_| rng.gen_range(-1.0..1.0))
}

fn causal(conv: bool, seed: u64, m: usize) -> CausalityModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CausalityModel::new(&[m, 12, 8], &[1, 12, 8], Activation::Tanh, conv, DT, &mut rng).unwrap()
}

#[test]
fn mlp_gradients_for_every_activation() {
    for act in Activation::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(&[5, 7, 6, 3], act, &mut rng).unwrap();
        let r = check_gradients(&net, 4, 1e-6, 11).unwrap();
        assert!(r.max_rel_err <= 1e-5, "{act:?}: {r:?}");
    }
}

#[test]
fn operator_gradients_for_every_architecture() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = batch(1, 3, M);
    let outs = batch(2, 6, M);
    let check = |name: &str, r: causonet::neuralcore::GradReport| {
        assert!(r.max_rel_err <= 1e-5, "{name}: {r:?}");
    };
    let d = DeepOnetModel::new(&[M, 10, 6], &[1, 10, 6], Activation::Tanh, DT, &mut rng).unwrap();
    check("deeponet", check_operator_gradients(&d, x.view(), 1e-6, 200, 0).unwrap());
    let pod = PodDeepOnetModel::new(&[M, 10, 4], Activation::Tanh, pod_basis(outs.view(), 4).unwrap(), &mut rng).unwrap();
    check("pod", check_operator_gradients(&pod, x.view(), 1e-6, 200, 0).unwrap());
    let ms = MsDeepOnetModel::new(&[M, 10, 6], &[1, 8, 6], default_scales(3), Activation::Tanh, DT, &mut rng).unwrap();
    check("ms", check_operator_gradients(&ms, x.view(), 1e-6, 200, 0).unwrap());
    for conv in [true, false] {
        check("causal", check_operator_gradients(&causal(conv, 7, M), x.view(), 1e-6, 200, 0).unwrap());
    }
}

#[test]
fn fast_forward_matches_direct() {
    let model = causal(true, 9, 64);
    let u = batch(4, 1, 64).row(0).to_vec();
    let a = model.forward_all(&u, true).unwrap();
    let b = model.forward_all(&u, false).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
    }
    let noconv = causal(false, 9, 64);
    assert!(matches!(noconv.forward_all(&u, true), Err(causonet::Error::FastPathUndefined)));
    assert_eq!(noconv.forward_all(&u, false).unwrap().len(), 64);
}

#[test]
fn pod_with_full_rank_reconstructs_training_rows() {
    let outs = batch(8, 6, M);
    let basis = pod_basis(outs.view(), 6).unwrap();
    let back = basis.reconstruct(outs.view());
    let err = (&back - &outs).mapv(|v| v * v).sum().sqrt() / outs.mapv(|v| v * v).sum().sqrt();
    assert!(err <= 1e-8, "{err}");
}

#[test]
fn model_file_round_trip() {
    let model = AnyModel::Causality(causal(true, 1, M));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    let x = batch(3, 2, M);
    assert_eq!(model.predict(x.view()).unwrap(), back.predict(x.view()).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn prediction_ignores_future_samples(seed in 0u64..1000, p in 1usize..=M, noise in prop::collection::vec(-5.0f64..5.0, M)) {
        let model = causal(true, seed % 4, M);
        let u = batch(seed, 1, M).row(0).to_vec();
        let mut v = u.clone();
        v[p..].copy_from_slice(&noise[p..]);
        let a = model.forward(&u, p, Mode::Eval).unwrap();
        let b = model.forward(&v, p, Mode::Eval).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn conv_window_is_shift_equivariant(seed in 0u64..1000, p in 1usize..M) {
        let model = causal(true, seed % 4, M);
        let u = batch(seed, 1, M).row(0).to_vec();
        let mut shifted = vec![0.0; M];
        shifted[1..].copy_from_slice(&u[..M - 1]);
        let a = model.branch_features(&u, p, Mode::Eval).unwrap();
        let b = model.branch_features(&shifted, p + 1, Mode::Eval).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn noconv_window_breaks_shift(seed in 0u64..1000, p in 2usize..M) {
        let model = causal(false, seed % 4, M);
        let u = batch(seed, 1, M).row(0).to_vec();
        let mut shifted = vec![0.0; M];
        shifted[1..].copy_from_slice(&u[..M - 1]);
        let a = model.branch_features(&u, p, Mode::Eval).unwrap();
        let b = model.branch_features(&shifted, p + 1, Mode::Eval).unwrap();
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(gap > 1e-6);
    }
}
