//! Exact responses of linear multi-degree-of-freedom systems to ground
//! acceleration.
//!
//! The equation of motion is `M ẍ + C ẋ + K x = f(t)` with the system at rest
//! at `t = 0`. Three solvers compute the roof (or any) displacement history:
//!
//! * [`duhamel_response`]: modal superposition of the damped-sinusoid Green's
//!   function, convolved with the excitation by the trapezoidal rule;
//! * [`nonclassical_response`]: the same convolution structure built from the
//!   complex eigenpairs of the first-order state matrix, valid when `C` is
//!   not diagonalized by the undamped modes;
//! * [`newmark_response`]: constant-average-acceleration time stepping, an
//!   independent check on the other two.
//!
//! Sign convention: the Green's function carries a leading minus
//! (`h(t) = -Σ φ Γ/ω_D e^{-ξωt} sin ω_D t`), which corresponds to the
//! relative-displacement equation `M ẍ + C ẋ + K x = -M ι ü_g`. The Newmark
//! integrator uses that effective load so all three solvers agree.

mod modal;
mod newmark;
mod nonclassical;
mod sysfile;

pub(crate) use modal::trapezoid_convolve;
pub use modal::{duhamel_response, impulse_response, modal_decompose, ClassicalModes, Mode};
pub use newmark::{newmark_response, NewmarkParams, Trajectories};
pub use nonclassical::{
    green_nonclassical, green_nonclassical_rate, nonclassical_response, state_eigen, state_matrix,
    ComplexMode, NonClassicalModes,
};
pub use sysfile::{DampingSpec, SystemFile};

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// Mass, damping and stiffness matrices plus the influence vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MdofSystem {
    mass: Array2<f64>,
    damping: Array2<f64>,
    stiffness: Array2<f64>,
    influence: Array1<f64>,
}

fn check_square(name: &str, a: &Array2<f64>, n: usize) -> Result<()> {
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::InvalidSystem(format!(
            "{name} is {}x{}, expected {n}x{n}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSystem(format!("{name} has non-finite entries")));
    }
    Ok(())
}

fn is_symmetric(a: &Array2<f64>) -> bool {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let n = a.nrows();
    (0..n).all(|i| (0..i).all(|j| (a[[i, j]] - a[[j, i]]).abs() <= 1e-12 * scale))
}

impl MdofSystem {
    /// Validates shapes, symmetry of `M` and `K`, and positive definiteness
    /// of `M`.
    pub fn new(
        mass: Array2<f64>,
        damping: Array2<f64>,
        stiffness: Array2<f64>,
        influence: Array1<f64>,
    ) -> Result<Self> {
        let n = mass.nrows();
        if n == 0 {
            return Err(Error::InvalidSystem("system has no degrees of freedom".into()));
        }
        check_square("mass", &mass, n)?;
        check_square("damping", &damping, n)?;
        check_square("stiffness", &stiffness, n)?;
        if influence.len() != n || influence.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSystem(format!("influence vector must hold {n} finite entries")));
        }
        if !is_symmetric(&mass) {
            return Err(Error::InvalidSystem("mass matrix is not symmetric".into()));
        }
        if !is_symmetric(&stiffness) {
            return Err(Error::InvalidSystem("stiffness matrix is not symmetric".into()));
        }
        let (w, _) = symmetric_eigen(&mass)?;
        if w.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidSystem("mass matrix is not positive definite".into()));
        }
        Ok(Self { mass, damping, stiffness, influence })
    }

    /// Undamped system (zero `C`).
    pub fn undamped(mass: Array2<f64>, stiffness: Array2<f64>, influence: Array1<f64>) -> Result<Self> {
        let n = mass.nrows();
        Self::new(mass, Array2::zeros((n, n)), stiffness, influence)
    }

    /// Shear-building chain of `n` equal floors.
    ///
    /// DOF 0 is the roof and DOF `n-1` the first floor, which is tied to the
    /// ground by one more story spring. The influence vector is all ones.
    pub fn shear_chain(n: usize, floor_mass: f64, story_stiffness: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSystem("system has no degrees of freedom".into()));
        }
        let mass = Array2::from_diag(&Array1::from_elem(n, floor_mass));
        let mut k = Array2::zeros((n, n));
        for i in 0..n {
            // spring below floor i connects it to floor i+1 (or the ground)
            k[[i, i]] += story_stiffness;
            if i + 1 < n {
                k[[i + 1, i + 1]] += story_stiffness;
                k[[i, i + 1]] -= story_stiffness;
                k[[i + 1, i]] -= story_stiffness;
            }
        }
        Self::undamped(mass, k, Array1::ones(n))
    }

    /// Unit-mass shear chain whose story stiffness puts the fundamental
    /// period at `period` seconds, with modal damping `xi` on every mode.
    pub fn shear_building(n: usize, period: f64, xi: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::InvalidSystem("period must be positive".into()));
        }
        // ω₁ = 2√k sin(π / (2(2n+1))) for the fixed-free chain
        let w1 = 2.0 * std::f64::consts::PI / period;
        let k = (w1 / (2.0 * (std::f64::consts::PI / (2 * (2 * n + 1)) as f64).sin())).powi(2);
        Self::shear_chain(n, 1.0, k)?.with_modal_damping(&vec![xi; n])
    }

    /// Replaces the damping matrix with `a·M + b·K`.
    pub fn with_rayleigh(mut self, a: f64, b: f64) -> Self {
        self.damping = &self.mass * a + &self.stiffness * b;
        self
    }

    /// Replaces the damping matrix with the classical modal damping matrix
    /// `C = M Φ diag(2 ξ_ℓ ω_ℓ) Φᵀ M` (mass-normalized modes).
    pub fn with_modal_damping(mut self, ratios: &[f64]) -> Result<Self> {
        let modes = modal_decompose(&self, ratios)?;
        let n = self.dof_count();
        let mut c = Array2::zeros((n, n));
        for mode in modes.modes() {
            let mphi = self.mass.dot(&mode.phi);
            let mnorm = mode.phi.dot(&mphi);
            let coef = 2.0 * mode.xi * mode.omega / mnorm;
            for i in 0..n {
                for j in 0..n {
                    c[[i, j]] += coef * mphi[i] * mphi[j];
                }
            }
        }
        self.damping = c;
        Ok(self)
    }

    pub fn with_damping(mut self, damping: Array2<f64>) -> Result<Self> {
        check_square("damping", &damping, self.dof_count())?;
        self.damping = damping;
        Ok(self)
    }

    pub fn dof_count(&self) -> usize {
        self.mass.nrows()
    }

    pub fn mass(&self) -> &Array2<f64> {
        &self.mass
    }

    pub fn damping(&self) -> &Array2<f64> {
        &self.damping
    }

    pub fn stiffness(&self) -> &Array2<f64> {
        &self.stiffness
    }

    pub fn influence(&self) -> &Array1<f64> {
        &self.influence
    }

    /// Modal damping ratios `ξ_ℓ = φᵀCφ / (2 ω_ℓ φᵀMφ)` read off the
    /// diagonal of the modal damping matrix. Exact for classical damping; a
    /// diagonal approximation otherwise.
    pub fn projected_damping_ratios(&self) -> Result<Vec<f64>> {
        let n = self.dof_count();
        let modes = modal_decompose(self, &vec![0.0; n])?;
        Ok(modes
            .modes()
            .iter()
            .map(|m| {
                let c = m.phi.dot(&self.damping.dot(&m.phi));
                let mm = m.phi.dot(&self.mass.dot(&m.phi));
                c / (2.0 * m.omega * mm)
            })
            .collect())
    }
}

/// Rayleigh coefficients `(a, b)` giving damping ratio `xi` at the two
/// circular frequencies `omega_i` and `omega_j`.
pub fn rayleigh_coefficients(omega_i: f64, omega_j: f64, xi: f64) -> (f64, f64) {
    let a = 2.0 * xi * omega_i * omega_j / (omega_i + omega_j);
    let b = 2.0 * xi / (omega_i + omega_j);
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn shear_building_period() {
        let b = MdofSystem::shear_building(6, 3.0, 0.05).unwrap();
        let modes = modal_decompose(&b, &[0.05; 6]).unwrap();
        assert!((modes.modes()[0].omega - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-10);
        for r in b.projected_damping_ratios().unwrap() {
            assert!((r - 0.05).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_invalid_systems() {
        let k = array![[2.0, -1.0], [-1.0, 1.0]];
        let bad_mass = array![[1.0, 0.5], [0.0, 1.0]];
        let err = MdofSystem::undamped(bad_mass, k.clone(), Array1::ones(2)).unwrap_err();
        assert!(err.to_string().starts_with("invalid system"));
        let indefinite = array![[1.0, 0.0], [0.0, -1.0]];
        assert!(MdofSystem::undamped(indefinite, k.clone(), Array1::ones(2)).is_err());
        assert!(MdofSystem::undamped(Array2::eye(2), k, Array1::ones(3)).is_err());
        assert!(MdofSystem::shear_chain(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn shear_chain_matrices() {
        let s = MdofSystem::shear_chain(3, 2.0, 5.0).unwrap();
        assert_eq!(
            s.stiffness(),
            &array![[5.0, -5.0, 0.0], [-5.0, 10.0, -5.0], [0.0, -5.0, 10.0]]
        );
        assert_eq!(s.mass(), &(Array2::eye(3) * 2.0));
    }

    #[test]
    fn modal_damping_round_trips_ratios() {
        let xi = [0.02, 0.05, 0.07];
        let s = MdofSystem::shear_chain(3, 1.0, 100.0).unwrap().with_modal_damping(&xi).unwrap();
        let back = s.projected_damping_ratios().unwrap();
        for (a, b) in back.iter().zip(xi) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rayleigh_hits_targets() {
        let (a, b) = rayleigh_coefficients(2.0, 20.0, 0.05);
        for w in [2.0f64, 20.0] {
            assert!((a / (2.0 * w) + b * w / 2.0 - 0.05).abs() < 1e-15);
        }
    }
}
