use causonet::lindyn::*;
use causonet::signalgen::*;
use ndarray::{array, Array1, Array2};

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Relative displacement of a damped SDOF under a unit ground-acceleration
/// step starting at rest.
fn step_response(omega: f64, xi: f64, t: f64) -> f64 {
    let wd = omega * (1.0 - xi * xi).sqrt();
    let decay = (-xi * omega * t).exp();
    -(1.0 - decay * ((wd * t).cos() + xi / (1.0 - xi * xi).sqrt() * (wd * t).sin())) / (omega * omega)
}

#[test]
fn sdof_step_matches_closed_form() {
    let (omega, xi, dt) = (2.0 * std::f64::consts::PI, 0.05, 0.005);
    let sys = MdofSystem::undamped(array![[1.0]], array![[omega * omega]], array![1.0])
        .unwrap()
        .with_modal_damping(&[xi])
        .unwrap();
    let modes = modal_decompose(&sys, &[xi]).unwrap();
    let u = Signal::from_fn(dt, 2001, |_| 1.0).unwrap();
    let x = duhamel_response(&modes, 0, &u).unwrap();
    let exact: Vec<f64> = (0..u.len()).map(|j| step_response(omega, xi, j as f64 * dt)).collect();
    assert!(rel(x.samples(), &exact) <= 1e-3);
    let nm = newmark_response(&sys, &u, NewmarkParams::default()).unwrap().dof(0).unwrap();
    assert!(rel(nm.samples(), &exact) <= 1e-3);
}

#[test]
fn duhamel_and_newmark_converge_together() {
    let sys = MdofSystem::shear_building(6, 3.0, 0.05).unwrap();
    let modes = modal_decompose(&sys, &[0.05; 6]).unwrap();
    let mut e = [0.0; 2];
    for seed in 0..3 {
        let g = synth_ground_motion(seed, 10.0, 0.02, (0.1, 24.9), 3.0).unwrap();
        let fine = resample(&g, 0.01).unwrap();
        for (k, s) in [g, fine].iter().enumerate() {
            let d = duhamel_response(&modes, 0, s).unwrap();
            let n = newmark_response(&sys, s, NewmarkParams::default()).unwrap().dof(0).unwrap();
            e[k] += rel(n.samples(), d.samples()) / 3.0;
        }
    }
    assert!(e[0] <= 5e-3, "{e:?}");
    assert!(e[0] / e[1] >= 3.5, "{e:?}");
}

#[test]
fn nonclassical_solver_reduces_to_classical() {
    let sys = MdofSystem::shear_building(3, 1.0, 0.04).unwrap();
    let classical = modal_decompose(&sys, &[0.04; 3]).unwrap();
    let states = state_eigen(&sys).unwrap();
    let g = synth_ground_motion(4, 6.0, 0.01, (0.1, 24.9), 2.0).unwrap();
    for dof in 0..3 {
        let a = duhamel_response(&classical, dof, &g).unwrap();
        let b = nonclassical_response(&states, dof, &g).unwrap();
        assert!(rel(b.samples(), a.samples()) < 1e-8, "dof {dof}");
    }
}

#[test]
fn nonclassical_damping_tracks_newmark() {
    // heavier damping on the first floor only: not diagonal in the modes
    let base = MdofSystem::shear_building(3, 1.0, 0.02).unwrap();
    let mut c = base.damping().clone();
    c[[2, 2]] += 2.0;
    let sys = base.with_damping(c).unwrap();
    let states = state_eigen(&sys).unwrap();
    let g = synth_ground_motion(5, 6.0, 0.005, (0.1, 24.9), 2.0).unwrap();
    let a = nonclassical_response(&states, 0, &g).unwrap();
    let b = newmark_response(&sys, &g, NewmarkParams::default()).unwrap().dof(0).unwrap();
    assert!(rel(b.samples(), a.samples()) < 1e-2);
}

#[test]
fn response_is_linear_in_the_input() {
    let sys = MdofSystem::new(
        Array2::eye(2),
        array![[0.4, -0.1], [-0.1, 0.3]],
        array![[30.0, -10.0], [-10.0, 20.0]],
        Array1::ones(2),
    )
    .unwrap();
    let states = state_eigen(&sys).unwrap();
    let a = synth_ground_motion(1, 4.0, 0.01, (0.2, 20.0), 1.0).unwrap();
    let b = synth_ground_motion(2, 4.0, 0.01, (0.2, 20.0), 1.0).unwrap();
    let sum = Signal::new(0.01, a.samples().iter().zip(b.samples()).map(|(x, y)| 2.0 * x - y).collect()).unwrap();
    let ra = nonclassical_response(&states, 1, &a).unwrap();
    let rb = nonclassical_response(&states, 1, &b).unwrap();
    let rs = nonclassical_response(&states, 1, &sum).unwrap();
    for j in 0..rs.len() {
        let want = 2.0 * ra.samples()[j] - rb.samples()[j];
        assert!((rs.samples()[j] - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }
}
