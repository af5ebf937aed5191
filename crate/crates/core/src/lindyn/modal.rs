use ndarray::{Array1, Array2};

use super::MdofSystem;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::signalgen::Signal;

/// One undamped mode with its assigned modal damping.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    /// Natural circular frequency ω (rad/s).
    pub omega: f64,
    /// Damping ratio ξ, `0 <= ξ < 1`.
    pub xi: f64,
    /// Damped frequency `ω sqrt(1 - ξ²)`.
    pub omega_d: f64,
    /// Mode shape, mass-normalized (`φᵀMφ = 1`), largest entry positive.
    pub phi: Array1<f64>,
    /// Participation factor `Γ = φᵀMι / φᵀMφ`.
    pub gamma: f64,
}

/// Modes of a classically damped system, ascending in frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalModes {
    modes: Vec<Mode>,
}

impl ClassicalModes {
    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn dof_count(&self) -> usize {
        self.modes.first().map_or(0, |m| m.phi.len())
    }

    /// Impulse response at `dof` evaluated at time `t`.
    pub fn green(&self, dof: usize, t: f64) -> f64 {
        -self
            .modes
            .iter()
            .map(|m| m.phi[dof] * m.gamma / m.omega_d * (-m.xi * m.omega * t).exp() * (m.omega_d * t).sin())
            .sum::<f64>()
    }
}

/// Solves `K φ = ω² M φ` and attaches the supplied modal damping ratios.
///
/// `M` is first diagonalized by its own Jacobi pass to form `M^{-1/2}`; the
/// symmetric problem `M^{-1/2} K M^{-1/2} y = ω² y` is then solved by Jacobi
/// and mapped back with `φ = M^{-1/2} y`.
pub fn modal_decompose(system: &MdofSystem, damping_ratios: &[f64]) -> Result<ClassicalModes> {
    let n = system.dof_count();
    if damping_ratios.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: damping_ratios.len() });
    }
    if let Some(x) = damping_ratios.iter().find(|x| !(0.0..1.0).contains(*x)) {
        return Err(Error::InvalidArgument(format!("damping ratio {x} outside [0, 1)")));
    }
    let mass = system.mass();
    let (mw, mv) = symmetric_eigen(mass)?;
    if mw.iter().any(|&w| w <= 0.0) {
        return Err(Error::InvalidSystem("mass matrix is not positive definite".into()));
    }
    let inv_sqrt = Array1::from_iter(mw.iter().map(|w| 1.0 / w.sqrt()));
    let m_inv_half: Array2<f64> = mv.dot(&Array2::from_diag(&inv_sqrt)).dot(&mv.t());
    let a = m_inv_half.dot(system.stiffness()).dot(&m_inv_half);
    let a = (&a + &a.t()) * 0.5;
    let (w2, y) = symmetric_eigen(&a)?;

    if let Some(w) = w2.iter().find(|&&w| w <= 0.0) {
        return Err(Error::InvalidSystem(format!("stiffness is not positive definite (eigenvalue {w:e})")));
    }
    for pair in w2.as_slice().unwrap().windows(2) {
        if (pair[1] - pair[0]).abs() <= 1e-9 * pair[1].abs() {
            return Err(Error::InvalidSystem("repeated natural frequencies are not supported".into()));
        }
    }

    let iota = system.influence();
    let modes = (0..n)
        .map(|l| {
            let mut phi = m_inv_half.dot(&y.column(l));
            let imax = (0..n).max_by(|&i, &j| phi[i].abs().total_cmp(&phi[j].abs())).unwrap();
            if phi[imax] < 0.0 {
                phi.mapv_inplace(|x| -x);
            }
            let mphi = mass.dot(&phi);
            let mnorm = phi.dot(&mphi);
            phi /= mnorm.sqrt();
            let mphi = mass.dot(&phi);
            let gamma = mphi.dot(iota) / phi.dot(&mphi);
            let omega = w2[l].sqrt();
            let xi = damping_ratios[l];
            Mode { omega, xi, omega_d: omega * (1.0 - xi * xi).sqrt(), phi, gamma }
        })
        .collect();
    Ok(ClassicalModes { modes })
}

/// `h(t_j)` at `t_j = j·dt` for `j = 0..m` at the chosen DOF.
pub fn impulse_response(modes: &ClassicalModes, dof: usize, dt: f64, m: usize) -> Result<Vec<f64>> {
    if dof >= modes.dof_count() {
        return Err(Error::InvalidArgument(format!("dof {dof} out of range")));
    }
    if !(dt > 0.0) || m == 0 {
        return Err(Error::InvalidArgument("impulse response needs dt > 0 and m >= 1".into()));
    }
    let mut h: Vec<f64> = (0..m).map(|j| modes.green(dof, j as f64 * dt)).collect();
    h[0] = 0.0;
    Ok(h)
}

/// Trapezoidal Duhamel sum `x_j = dt Σ_{k=0}^{j} w_k u_k g_{j-k}` with end
/// weights `1/2`; `x_0 = 0`. Reads only `u[..=j]` for output `j`.
pub(crate) fn trapezoid_convolve(u: &[f64], kernel: &[f64], dt: f64) -> Vec<f64> {
    let m = u.len();
    let mut x = vec![0.0; m];
    for j in 1..m {
        let mut acc = 0.5 * u[0] * kernel[j] + 0.5 * u[j] * kernel[0];
        for k in 1..j {
            acc += u[k] * kernel[j - k];
        }
        x[j] = dt * acc;
    }
    x
}

/// Response at `dof` to ground acceleration `signal`, by trapezoidal
/// convolution with the modal Green's function. Starts at rest: `x(0) = 0`.
pub fn duhamel_response(modes: &ClassicalModes, dof: usize, signal: &Signal) -> Result<Signal> {
    let h = impulse_response(modes, dof, signal.dt(), signal.len())?;
    Signal::new(signal.dt(), trapezoid_convolve(signal.samples(), &h, signal.dt()))
}
