use ndarray::{Array1, Array2};

use super::MdofSystem;
use crate::error::{Error, Result};
use crate::linalg::Lu;
use crate::signalgen::Signal;

/// Newmark-beta parameters. The default is constant average acceleration
/// (`β = 1/4`, `γ = 1/2`), unconditionally stable and second-order accurate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewmarkParams {
    pub beta: f64,
    pub gamma: f64,
}

impl Default for NewmarkParams {
    fn default() -> Self {
        Self { beta: 0.25, gamma: 0.5 }
    }
}

/// Displacement histories of every DOF, one row per time sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectories {
    pub dt: f64,
    pub displacements: Array2<f64>,
}

impl Trajectories {
    pub fn dof(&self, dof: usize) -> Result<Signal> {
        if dof >= self.displacements.ncols() {
            return Err(Error::InvalidArgument(format!("dof {dof} out of range")));
        }
        Signal::new(self.dt, self.displacements.column(dof).to_vec())
    }
}

/// Integrates `M ẍ + C ẋ + K x = -M ι ü_g(t)` from rest.
///
/// The effective stiffness `K + γ/(βΔt) C + 1/(βΔt²) M` is factored once;
/// each step then costs one pair of triangular solves.
pub fn newmark_response(system: &MdofSystem, signal: &Signal, params: NewmarkParams) -> Result<Trajectories> {
    let NewmarkParams { beta, gamma } = params;
    if !(beta > 0.0) || !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("Newmark parameters beta={beta}, gamma={gamma}")));
    }
    let n = system.dof_count();
    let dt = signal.dt();
    let u = signal.samples();
    let (m, c, k) = (system.mass(), system.damping(), system.stiffness());
    let load_shape: Array1<f64> = -m.dot(system.influence());

    let a0 = 1.0 / (beta * dt * dt);
    let a1 = gamma / (beta * dt);
    let a2 = 1.0 / (beta * dt);
    let a3 = 1.0 / (2.0 * beta) - 1.0;
    let a4 = gamma / beta - 1.0;
    let a5 = dt * (gamma / (2.0 * beta) - 1.0);

    let k_eff = k + &(c * a1) + &(m * a0);
    let k_lu = Lu::new(&k_eff).map_err(|e| Error::Singular(format!("effective stiffness: {e}")))?;
    let m_lu = Lu::new(m)?;

    let mut out = Array2::zeros((u.len(), n));
    let mut x = Array1::<f64>::zeros(n);
    let mut v = Array1::<f64>::zeros(n);
    let f0 = &load_shape * u[0];
    let mut acc = Array1::from(m_lu.solve(f0.as_slice().unwrap()));

    for j in 1..u.len() {
        let f = &load_shape * u[j];
        let rhs = f
            + m.dot(&(&x * a0 + &v * a2 + &acc * a3))
            + c.dot(&(&x * a1 + &v * a4 + &acc * a5));
        let x_new = Array1::from(k_lu.solve(rhs.as_slice().unwrap()));
        let acc_new = (&x_new - &x) * a0 - &v * a2 - &acc * a3;
        let v_new = &v + &(&acc * ((1.0 - gamma) * dt)) + &(&acc_new * (gamma * dt));
        x = x_new;
        v = v_new;
        acc = acc_new;
        out.row_mut(j).assign(&x);
    }
    Ok(Trajectories { dt, displacements: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_signal_stays_at_rest() {
        let s = MdofSystem::shear_chain(3, 1.0, 50.0).unwrap().with_rayleigh(0.1, 0.001);
        let tr = newmark_response(&s, &Signal::zeros(0.01, 50).unwrap(), NewmarkParams::default()).unwrap();
        assert!(tr.displacements.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        let s = MdofSystem::undamped(array![[1.0]], array![[1.0]], array![1.0]).unwrap();
        let sig = Signal::zeros(0.01, 5).unwrap();
        assert!(newmark_response(&s, &sig, NewmarkParams { beta: 0.0, gamma: 0.5 }).is_err());
    }
}
