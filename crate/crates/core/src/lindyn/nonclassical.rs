use ndarray::Array2;
use num_complex::Complex64;

use super::modal::trapezoid_convolve;
use super::MdofSystem;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, inverse_iteration, Lu};
use crate::signalgen::Signal;

/// One complex mode of the first-order state equation (the member of the
/// conjugate pair with positive imaginary part).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMode {
    /// Eigenvalue λ of the state matrix.
    pub lambda: Complex64,
    /// Displacement part ψ of the state eigenvector (unit norm).
    pub psi: Vec<Complex64>,
    /// `|λ|`.
    pub omega_n: f64,
    /// `-Re(λ)/|λ|`.
    pub xi_n: f64,
    /// `ω_n sqrt(1 - ξ_n²)`.
    pub omega_nd: f64,
    /// `β = -ψᵀMι / (2λ ψᵀMψ + ψᵀCψ)` (plain transpose, not Hermitian).
    pub beta_delta: Complex64,
}

impl ComplexMode {
    /// `Re(2βψ_dof)`.
    pub fn alpha_delta(&self, dof: usize) -> f64 {
        (self.beta_delta * 2.0 * self.psi[dof]).re
    }

    /// `Im(2βψ_dof)`.
    pub fn gamma_delta(&self, dof: usize) -> f64 {
        (self.beta_delta * 2.0 * self.psi[dof]).im
    }

    /// `ξ_n α − sqrt(1 − ξ_n²) γ`.
    pub fn gamma_tilde_delta(&self, dof: usize) -> f64 {
        self.xi_n * self.alpha_delta(dof) - (1.0 - self.xi_n * self.xi_n).sqrt() * self.gamma_delta(dof)
    }
}

/// Complex modes ascending in `ω_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonClassicalModes {
    modes: Vec<ComplexMode>,
    residual: f64,
}

impl NonClassicalModes {
    pub fn modes(&self) -> &[ComplexMode] {
        &self.modes
    }

    pub fn dof_count(&self) -> usize {
        self.modes.first().map_or(0, |m| m.psi.len())
    }

    /// Largest relative eigen-residual `‖Aψ − λψ‖ / (‖A‖ ‖ψ‖)` over all
    /// modes (state-space vectors).
    pub fn max_residual(&self) -> f64 {
        self.residual
    }
}

fn bilinear(a: &[Complex64], mat: &Array2<f64>, b: &[Complex64]) -> Complex64 {
    let n = a.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += b[j] * mat[[i, j]];
        }
        acc += a[i] * row;
    }
    acc
}

/// State matrix `[[0, I], [-M⁻¹K, -M⁻¹C]]` of size `2n`.
pub fn state_matrix(system: &MdofSystem) -> Result<Array2<f64>> {
    let n = system.dof_count();
    let m_lu = Lu::new(system.mass())?;
    let mut a = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        a[[i, n + i]] = 1.0;
    }
    for col in 0..n {
        let kcol: Vec<f64> = system.stiffness().column(col).to_vec();
        let ccol: Vec<f64> = system.damping().column(col).to_vec();
        let mk = m_lu.solve(&kcol);
        let mc = m_lu.solve(&ccol);
        for row in 0..n {
            a[[n + row, col]] = -mk[row];
            a[[n + row, n + col]] = -mc[row];
        }
    }
    Ok(a)
}

/// Complex eigenpairs of the state matrix and the modal coefficients of the
/// non-classical Green's function.
///
/// Eigenvalues come from Hessenberg reduction plus shifted QR; eigenvectors
/// from inverse iteration. Overdamped (real) or repeated eigenvalues are
/// rejected.
pub fn state_eigen(system: &MdofSystem) -> Result<NonClassicalModes> {
    let n = system.dof_count();
    let a = state_matrix(system)?;
    let values = eigenvalues(&a)?;
    let a_norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut upper: Vec<Complex64> = values.into_iter().filter(|l| l.im > 0.0).collect();
    if upper.len() != n {
        return Err(Error::InvalidSystem(format!(
            "expected {n} underdamped conjugate pairs, found {}",
            upper.len()
        )));
    }
    upper.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    for w in upper.windows(2) {
        if (w[1] - w[0]).norm() <= 1e-9 * w[1].norm() {
            return Err(Error::InvalidSystem("repeated eigenvalues are not supported".into()));
        }
    }

    let mass = system.mass();
    let damping = system.damping();
    let iota: Vec<Complex64> = system.influence().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut residual = 0.0f64;
    let mut modes = Vec::with_capacity(n);
    for lambda in upper {
        let z = inverse_iteration(&a, lambda)?;
        let res: f64 = (0..2 * n)
            .map(|i| {
                let az: Complex64 = (0..2 * n).map(|j| z[j] * a[[i, j]]).sum();
                (az - lambda * z[i]).norm_sqr()
            })
            .sum::<f64>()
            .sqrt();
        residual = residual.max(res / a_norm.max(f64::MIN_POSITIVE));

        let psi: Vec<Complex64> = z[..n].to_vec();
        let num = -bilinear(&psi, mass, &iota);
        let den = lambda * 2.0 * bilinear(&psi, mass, &psi) + bilinear(&psi, damping, &psi);
        let omega_n = lambda.norm();
        let xi_n = -lambda.re / omega_n;
        modes.push(ComplexMode {
            lambda,
            psi,
            omega_n,
            xi_n,
            omega_nd: omega_n * (1.0 - xi_n * xi_n).sqrt(),
            beta_delta: num / den,
        });
    }
    if residual > 1e-8 {
        return Err(Error::EigenFailure(format!("eigen residual {residual:e} above 1e-8")));
    }
    Ok(NonClassicalModes { modes, residual })
}

/// `H(t) = -(1/ω_D) e^{-ξωt} sin(ω_D t)`.
pub fn green_nonclassical(mode: &ComplexMode, t: f64) -> f64 {
    -(-mode.xi_n * mode.omega_n * t).exp() * (mode.omega_nd * t).sin() / mode.omega_nd
}

/// Analytic time derivative of [`green_nonclassical`].
pub fn green_nonclassical_rate(mode: &ComplexMode, t: f64) -> f64 {
    let decay = mode.xi_n * mode.omega_n;
    let wd = mode.omega_nd;
    -(-decay * t).exp() * (wd * (wd * t).cos() - decay * (wd * t).sin()) / wd
}

/// `x(t) = -Σ_ℓ [γ̃_ℓ ω_ℓ D_ℓ(t) + α_ℓ Ḋ_ℓ(t)]` where `D_ℓ` and `Ḋ_ℓ` are
/// the trapezoidal convolutions of the excitation with `H_ℓ` and `Ḣ_ℓ`.
pub fn nonclassical_response(modes: &NonClassicalModes, dof: usize, signal: &Signal) -> Result<Signal> {
    if dof >= modes.dof_count() {
        return Err(Error::InvalidArgument(format!("dof {dof} out of range")));
    }
    let dt = signal.dt();
    let m = signal.len();
    let u = signal.samples();
    let mut x = vec![0.0; m];
    for mode in modes.modes() {
        let (alpha, gt) = (mode.alpha_delta(dof), mode.gamma_tilde_delta(dof));
        let h: Vec<f64> = (0..m).map(|j| green_nonclassical(mode, j as f64 * dt)).collect();
        let hd: Vec<f64> = (0..m).map(|j| green_nonclassical_rate(mode, j as f64 * dt)).collect();
        let d = trapezoid_convolve(u, &h, dt);
        let dd = trapezoid_convolve(u, &hd, dt);
        for j in 0..m {
            x[j] -= gt * mode.omega_n * d[j] + alpha * dd[j];
        }
    }
    Signal::new(dt, x)
}
