//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion.
//!
//! The training criteria (7, 8 and 10) take most of the runtime; select a
//! subset with `ACCEPTANCE_ONLY=1,2,3`. The process exits nonzero on a
//! failed criterion only when `ACCEPTANCE_STRICT=1`, so the suite can run
//! under `cargo test` and still report shortfalls.

use std::time::Instant;

use causonet::harness::*;
use causonet::lindyn::*;
use causonet::neuralcore::{check_gradients, Activation, LrSchedule, Mlp, Mode};
use causonet::operatornets::*;
use causonet::signalgen::*;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DT: f64 = 0.02;
const DURATION: f64 = 10.0;
const M: usize = 500;
const EPOCHS: usize = 5000;
const SEEDS: u64 = 5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn random_signal(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn building() -> (MdofSystem, Vec<f64>) {
    let xi = vec![0.05; 6];
    (MdofSystem::shear_building(6, 3.0, 0.05).unwrap(), xi)
}

fn c1_physics() -> Outcome {
    let (sys, xi) = building();
    let modes = modal_decompose(&sys, &xi).unwrap();
    let mut err = [0.0; 2];
    for seed in 0..10 {
        let g = synth_ground_motion(seed, DURATION, DT, (0.1, 24.9), 3.0).unwrap();
        let fine = resample(&g, DT / 2.0).unwrap();
        for (k, s) in [g, fine].iter().enumerate() {
            let d = duhamel_response(&modes, 0, s).unwrap();
            let n = newmark_response(&sys, s, NewmarkParams::default()).unwrap().dof(0).unwrap();
            err[k] += rel(n.samples(), d.samples()) / 10.0;
        }
    }
    let ratio = err[0] / err[1];
    Outcome {
        pass: err[0] <= 5e-3 && ratio >= 3.5,
        detail: format!("mean rel-L2 {:.3e} (<= 5e-3), halving dt improves {ratio:.2}x (>= 3.5)", err[0]),
    }
}

fn c2_step() -> Outcome {
    let (omega, xi, dt) = (2.0 * std::f64::consts::PI, 0.05, 0.005);
    let sys = MdofSystem::undamped(ndarray::array![[1.0]], ndarray::array![[omega * omega]], ndarray::array![1.0])
        .unwrap()
        .with_modal_damping(&[xi])
        .unwrap();
    let modes = modal_decompose(&sys, &[xi]).unwrap();
    let u = Signal::from_fn(dt, 2001, |_| 1.0).unwrap();
    let x = duhamel_response(&modes, 0, &u).unwrap();
    let wd = omega * (1.0 - xi * xi).sqrt();
    let exact: Vec<f64> = (0..u.len())
        .map(|j| {
            let t = j as f64 * dt;
            let decay = (-xi * omega * t).exp();
            -(1.0 - decay * ((wd * t).cos() + xi / (1.0 - xi * xi).sqrt() * (wd * t).sin())) / (omega * omega)
        })
        .collect();
    let e = rel(x.samples(), &exact);
    Outcome { pass: e <= 1e-3, detail: format!("rel-L2 {e:.3e} (<= 1e-3)") }
}

fn c3_gradients() -> Outcome {
    let mut worst = 0.0f64;
    let mut parts = vec![];
    for (i, act) in Activation::ALL.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let net = Mlp::new(&[6, 10, 8, 3], act, &mut rng).unwrap();
        let r = check_gradients(&net, 5, 1e-6, 7 + i as u64).unwrap();
        worst = worst.max(r.max_rel_err);
        parts.push(format!("{act} {:.1e}", r.max_rel_err));
    }
    Outcome { pass: worst <= 1e-5, detail: format!("max rel err {worst:.2e} (<= 1e-5): {}", parts.join(", ")) }
}

fn causal_model(m: usize, conv: bool, seed: u64) -> CausalityModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CausalityModel::new(&[m, 60, 60, 60], &[1, 60, 60, 60], Activation::Tanh, conv, DT, &mut rng).unwrap()
}

fn c4_causality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let models = [causal_model(M, true, 1), causal_model(M, false, 2)];
    let mut bad = 0;
    for case in 0..100 {
        let model = &models[case % 2];
        let p = rng.gen_range(1..=M);
        let u = random_signal(&mut rng, M);
        let mut v = random_signal(&mut rng, M);
        v[..p].copy_from_slice(&u[..p]);
        let a = model.forward(&u, p, Mode::Eval).unwrap();
        let b = model.forward(&v, p, Mode::Eval).unwrap();
        let pa = model.forward_all(&u, false).unwrap();
        let pb = model.forward_all(&v, false).unwrap();
        if a.to_bits() != b.to_bits() || pa[..p] != pb[..p] {
            bad += 1;
        }
    }
    Outcome { pass: bad == 0, detail: format!("{bad}/100 pairs differ on the shared prefix") }
}

fn c5_shift() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let conv = causal_model(M, true, 3);
    let noconv = causal_model(M, false, 3);
    let (mut conv_bad, mut noconv_min) = (0, f64::INFINITY);
    for _ in 0..100 {
        let p = rng.gen_range(1..M);
        let u = random_signal(&mut rng, M);
        let mut shifted = vec![0.0; M];
        shifted[1..].copy_from_slice(&u[..M - 1]);
        if conv.branch_features(&u, p, Mode::Eval).unwrap() != conv.branch_features(&shifted, p + 1, Mode::Eval).unwrap() {
            conv_bad += 1;
        }
        let a = noconv.branch_features(&u, p, Mode::Eval).unwrap();
        let b = noconv.branch_features(&shifted, p + 1, Mode::Eval).unwrap();
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        noconv_min = noconv_min.min(gap);
    }
    Outcome {
        pass: conv_bad == 0 && noconv_min > 1e-6,
        detail: format!("conv mismatches {conv_bad}/100; smallest no-conv feature gap {noconv_min:.2e} (> 1e-6)"),
    }
}

fn best_time(reps: usize, mut f: impl FnMut()) -> f64 {
    (0..reps)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

fn c6_fast_path() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pass = true;
    let mut parts = vec![];
    for m in [256, 1024] {
        let model = causal_model(m, true, 6);
        let u = random_signal(&mut rng, m);
        let fast = model.forward_all(&u, true).unwrap();
        let direct = model.forward_all(&u, false).unwrap();
        let diff = fast.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pass &= diff <= 1e-9;
        let tf = best_time(3, || drop(model.forward_all(&u, true).unwrap()));
        let td = best_time(3, || drop(model.forward_all(&u, false).unwrap()));
        if m == 1024 {
            pass &= tf < td;
        }
        parts.push(format!("m={m}: diff {diff:.1e}, fast {:.1} ms vs direct {:.1} ms", tf * 1e3, td * 1e3));
    }
    Outcome { pass, detail: parts.join("; ") }
}

struct Suite {
    train: ResponseDataset,
    test: ResponseDataset,
}

fn suite() -> Suite {
    let spec = CorpusSpec { count: 44, duration: DURATION, dt: DT, band: (0.1, 24.9), pga: (1.0, 4.0), seed: 1 };
    let signals = synth_corpus(&spec).unwrap();
    let (sys, xi) = building();
    let ds = build_dataset(&sys, &xi, 0, &signals, Solver::Duhamel, Units::GCm).unwrap();
    assert_eq!(ds.m, M);
    Suite { train: ds.select(&(0..10).collect::<Vec<_>>()), test: ds.select(&(10..44).collect::<Vec<_>>()) }
}

struct Run {
    history: RunHistory,
    model: AnyModel,
    seconds: f64,
}

fn run(suite: &Suite, arch: Architecture, branch: Vec<usize>, activation: Activation, seed: u64) -> Run {
    let spec = ModelSpec::new(arch, branch, vec![1, 60, 60, 60], activation);
    let schedule = LrSchedule::new(vec![(EPOCHS / 10, 1e-3), (EPOCHS / 2, 1e-4), (EPOCHS, 1e-5)]).unwrap();
    let mut cfg = TrainConfig::new(schedule, EPOCHS);
    cfg.loss = LossKind::WeightedMse;
    cfg.include_ic_pair = arch.is_causal();
    cfg.seed = seed;
    cfg.eval_every = 10;
    let t = Instant::now();
    let model = build_model(&spec, &suite.train, seed).unwrap();
    let out = train_any(model, &cfg, &suite.train, Some(&suite.test)).unwrap();
    let seconds = t.elapsed().as_secs_f64();
    let h = &out.history;
    println!(
        "  {arch} {activation} seed {seed}: train {:.4} test {:.4} ({seconds:.0} s)",
        h.final_train_rel_l2,
        h.final_test_rel_l2.unwrap()
    );
    Run { history: out.history, model: out.model, seconds }
}

fn improved(h: &RunHistory) -> bool {
    h.final_train_rel_l2 < h.records[0].train_rel_l2
}

const WIDE: [usize; 4] = [M, 60, 60, 60];

fn c7_contrast(causal: &[Run], deep: &[Run]) -> Outcome {
    let ct: Vec<f64> = causal.iter().map(|r| r.history.final_test_rel_l2.unwrap()).collect();
    let dt: Vec<f64> = deep.iter().map(|r| r.history.final_test_rel_l2.unwrap()).collect();
    let good = ct.iter().filter(|&&e| e <= 0.05).count();
    let deep_ok = dt.iter().all(|&e| e >= 0.5);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let minutes = causal.iter().chain(deep).map(|r| r.seconds).sum::<f64>() / 60.0;
    let params = (causal[0].model.param_count(), deep[0].model.param_count());
    let all_improved = causal.iter().chain(deep).all(|r| improved(&r.history));
    Outcome {
        pass: good >= 4 && deep_ok && all_improved,
        detail: format!(
            "causality test <= 0.05 on {good}/5 seeds (mean {:.4}); deeponet test min {:.3} (>= 0.5, mean {:.3}); \
             ratio {:.0}x; params {} vs {}; train improved on every run: {all_improved}; runtime {minutes:.1} min (target < 20)",
            mean(&ct),
            dt.iter().cloned().fold(f64::INFINITY, f64::min),
            mean(&dt),
            mean(&dt) / mean(&ct),
            params.0,
            params.1,
        ),
    }
}

fn c8_pod(suite: &Suite, deep: &Run) -> Outcome {
    let outs = suite.train.output_matrix();
    let n = outs.nrows();
    let basis = pod_basis(outs.view(), n).unwrap();
    let back = basis.reconstruct(outs.view());
    let mean = outs.mean_axis(ndarray::Axis(0)).unwrap();
    let centered = &outs - &mean;
    let recon = ((&back - &outs).mapv(|v| v * v).sum() / centered.mapv(|v| v * v).sum()).sqrt();
    let pod = run(suite, Architecture::Pod, vec![M, 60, 60, n], Activation::Tanh, 0);
    let (pt, dt) = (pod.history.final_train_rel_l2, deep.history.final_train_rel_l2);
    Outcome {
        pass: recon <= 1e-8 && pt < dt && improved(&pod.history),
        detail: format!("p=n reconstruction {recon:.1e} (<= 1e-8); POD train {pt:.4} vs DeepONet train {dt:.4} (need POD lower)"),
    }
}

fn c9_identities(suite: &Suite, trained: &AnyModel) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let truth = Array2::from_shape_fn((6, 40), |_| rng.gen_range(-3.0..3.0));
    let zero_rows = rel_l2_rows(Array2::zeros(truth.raw_dim()).view(), truth.view()).unwrap();
    let zero_ok = zero_rows.iter().all(|&e| (e - 1.0).abs() <= 1e-15);

    let mut unit = truth.clone();
    for mut row in unit.rows_mut() {
        let peak = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        row /= peak;
    }
    let pred = &unit + &Array2::from_shape_fn(unit.raw_dim(), |_| rng.gen_range(-0.1..0.1));
    let (lw, lm) = (loss_weighted(pred.view(), unit.view()).unwrap(), loss_mse(pred.view(), unit.view()).unwrap());
    let loss_ok = (lw - lm).abs() <= 1e-15 * lm.max(1.0);

    let inputs = suite.train.input_matrix();
    let (normed, stats) = gaussian_normalize(inputs.view());
    let round = stats.invert(normed.view());
    let norm_err = (&round - &inputs).iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    save_model(trained, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    let a = evaluate(trained, &suite.test, None).unwrap();
    let b = evaluate(&loaded, &suite.test, None).unwrap();
    let bits = |r: &Report| r.predictions.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let ckpt_ok = bits(&a) == bits(&b) && a.mean_rel_l2.to_bits() == b.mean_rel_l2.to_bits();

    Outcome {
        pass: zero_ok && loss_ok && norm_err <= 1e-12 && ckpt_ok,
        detail: format!(
            "rel_l2(0, x)=1: {zero_ok}; weighted=mse on unit rows: {loss_ok} ({lw:.6e} vs {lm:.6e}); \
             normalization round trip {norm_err:.1e} (<= 1e-12); checkpoint bit-exact: {ckpt_ok}"
        ),
    }
}

fn c10_activations(suite: &Suite, tanh: &Run) -> Outcome {
    let sig = run(suite, Architecture::Causality, WIDE.to_vec(), Activation::Sigmoid, 0);
    let shifted = run(suite, Architecture::Causality, WIDE.to_vec(), Activation::ShiftedSigmoid, 0);
    let t = tanh.history.final_train_rel_l2;
    let (s, h) = (sig.history.final_train_rel_l2, shifted.history.final_train_rel_l2);
    Outcome {
        pass: s >= 5.0 * t && h <= 3.0 * t,
        detail: format!(
            "train rel-L2 tanh {t:.4}, sigmoid {s:.4} ({:.2}x, need >= 5x), shifted sigmoid {h:.4} ({:.2}x, need <= 3x)",
            s / t,
            h / t
        ),
    }
}

fn main() {
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let want = |k: usize| only.as_ref().is_none_or(|o| o.contains(&k));
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");

    let mut results: Vec<(usize, Outcome, f64)> = vec![];
    let mut record = |k: usize, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        results.push((k, o, t.elapsed().as_secs_f64()));
        let (k, o, s) = results.last().unwrap();
        println!("{} criterion {k}: {} [{s:.1} s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };

    if want(1) {
        record(1, &mut c1_physics);
    }
    if want(2) {
        record(2, &mut c2_step);
    }
    if want(3) {
        record(3, &mut c3_gradients);
    }
    if want(4) {
        record(4, &mut c4_causality);
    }
    if want(5) {
        record(5, &mut c5_shift);
    }
    if want(6) {
        record(6, &mut c6_fast_path);
    }

    if [7, 8, 9, 10].into_iter().any(want) {
        let suite = suite();
        let need_causal = want(7) || want(9) || want(10);
        let causal_seeds = if want(7) { SEEDS } else { 1 };
        let causal: Vec<Run> = if need_causal {
            (0..causal_seeds).map(|s| run(&suite, Architecture::Causality, WIDE.to_vec(), Activation::Tanh, s)).collect()
        } else {
            vec![]
        };
        let deep_seeds = if want(7) { SEEDS } else if want(8) { 1 } else { 0 };
        let deep: Vec<Run> =
            (0..deep_seeds).map(|s| run(&suite, Architecture::DeepOnet, WIDE.to_vec(), Activation::Tanh, s)).collect();
        if want(7) {
            record(7, &mut || c7_contrast(&causal, &deep));
        }
        if want(8) {
            record(8, &mut || c8_pod(&suite, &deep[0]));
        }
        if want(9) {
            record(9, &mut || c9_identities(&suite, &causal[0].model));
        }
        if want(10) {
            record(10, &mut || c10_activations(&suite, &causal[0]));
        }
    }

    let failed: Vec<usize> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    println!("acceptance: {}/{} criteria pass", results.len() - failed.len(), results.len());
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}
