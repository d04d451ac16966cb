//! Exact references: dense matrices for small systems and the free-fermion
//! solution of the open transverse-field Ising chain.
//!
//! Everything here works in `f64` and is built without the symplectic
//! Pauli algebra of [`crate::pauli`], so it can be used to check it.

mod bdg;
mod dense;
mod lanczos;

use nalgebra::{DMatrix, SymmetricEigen};

pub use bdg::{bdg_ground_energy, reference_table, write_reference_csv, ReferenceEnergy};
pub use dense::{
    imaginary_conjugation, pauli_exponential, pauli_rotation, real_conjugation, DenseOperator, C64,
    DEFAULT_MAX_DENSE_QUBITS,
};

use dense::{guard, RowSparse, SparseHamiltonian};

use crate::error::{Error, Result};
use crate::models::Hamiltonian;
use crate::opsum::PauliSum;
use crate::propagate::{trotter_step_gates, ScheduleConfig};

/// Above this dimension ground energies come from Lanczos instead of a full
/// eigendecomposition.
const FULL_EIGEN_MAX_DIM: usize = 1024;

/// Expectation values of a normalized thermal-like state at one `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSample {
    pub tau: f64,
    pub energy: f64,
    pub observables: Vec<f64>,
    /// `Tr(rho^2) / 2^n` with `rho` normalized to `Tr(rho) / 2^n = 1`.
    pub purity: f64,
}

/// Dense reference calculations, refusing systems above `max_qubits`.
#[derive(Debug, Clone, Copy)]
pub struct DenseOracle {
    pub max_qubits: usize,
}

impl Default for DenseOracle {
    fn default() -> Self {
        DenseOracle {
            max_qubits: DEFAULT_MAX_DENSE_QUBITS,
        }
    }
}

struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl DenseOracle {
    pub fn new(max_qubits: usize) -> Self {
        DenseOracle { max_qubits }
    }

    fn spectrum(&self, h: &Hamiltonian<f64>) -> Result<Spectrum> {
        guard(h.n_qubits(), self.max_qubits)?;
        let m = DenseOperator::from_hamiltonian(h).matrix;
        if m.iter().all(|z| z.im == 0.0) {
            let re = m.map(|z| z.re);
            let eig = SymmetricEigen::try_new(re, 1e-15, 0)
                .ok_or_else(|| Error::Numerical("eigensolver failed".into()))?;
            Ok(Spectrum {
                values: eig.eigenvalues.iter().copied().collect(),
                vectors: eig.eigenvectors.map(|x| C64::new(x, 0.0)),
            })
        } else {
            let eig = SymmetricEigen::try_new(m, 1e-15, 0)
                .ok_or_else(|| Error::Numerical("eigensolver failed".into()))?;
            Ok(Spectrum {
                values: eig.eigenvalues.iter().copied().collect(),
                vectors: eig.eigenvectors,
            })
        }
    }

    /// `<O> = Tr(O e^{-tau H}) / Tr(e^{-tau H})` for each `tau`, from the
    /// eigendecomposition of `H`.
    pub fn exact_ite(
        &self,
        h: &Hamiltonian<f64>,
        taus: &[f64],
        observables: &[PauliSum<f64>],
    ) -> Result<Vec<DenseSample>> {
        for o in observables {
            if o.n_qubits() != h.n_qubits() {
                return Err(Error::DimensionMismatch {
                    left: h.n_qubits(),
                    right: o.n_qubits(),
                });
            }
        }
        let spec = self.spectrum(h)?;
        let dim = spec.values.len();
        let diag: Vec<Vec<f64>> = observables
            .iter()
            .map(|o| {
                let op = SparseHamiltonian::from_sum(o);
                (0..dim).map(|k| op.expectation_column(&spec.vectors, k).re).collect()
            })
            .collect();
        let e_min = spec.values.iter().copied().fold(f64::INFINITY, f64::min);
        taus.iter()
            .map(|&tau| {
                let w: Vec<f64> = spec.values.iter().map(|e| (-tau * (e - e_min)).exp()).collect();
                let z: f64 = w.iter().sum();
                let avg = |vals: &[f64]| vals.iter().zip(&w).map(|(v, wk)| v * wk).sum::<f64>() / z;
                Ok(DenseSample {
                    tau,
                    energy: avg(&spec.values),
                    observables: diag.iter().map(|d| avg(d)).collect(),
                    purity: dim as f64 * w.iter().map(|x| x * x).sum::<f64>() / (z * z),
                })
            })
            .collect()
    }

    /// Dense replay of the first-order Trotter product: each gate
    /// `V = exp(-tau_eff Q / 2)` maps `rho -> V rho V`, followed by trace
    /// normalization. One sample at `tau = 0` and one after every step.
    pub fn trotter_ite(
        &self,
        h: &Hamiltonian<f64>,
        schedule: &ScheduleConfig<f64>,
        observables: &[PauliSum<f64>],
    ) -> Result<Vec<DenseSample>> {
        let n = h.n_qubits();
        guard(n, self.max_qubits)?;
        let gates: Vec<RowSparse> = trotter_step_gates(h, schedule)?
            .iter()
            .map(|g| RowSparse::from_dense(&pauli_exponential(&g.generator, g.tau_eff / 2.0)))
            .collect();
        let energy_op = SparseHamiltonian::new(h);
        let obs_ops: Vec<SparseHamiltonian> = observables
            .iter()
            .map(|o| {
                if o.n_qubits() != n {
                    return Err(Error::DimensionMismatch {
                        left: n,
                        right: o.n_qubits(),
                    });
                }
                Ok(SparseHamiltonian::from_sum(o))
            })
            .collect::<Result<_>>()?;
        let dim = 1usize << n;
        let mut rho = DMatrix::<C64>::identity(dim, dim);
        let sample = |rho: &DMatrix<C64>, tau: f64| {
            let tr = rho.trace().re;
            let hs = rho.iter().map(|z| z.norm_sqr()).sum::<f64>();
            DenseSample {
                tau,
                energy: energy_op.trace_with(rho).re / tr,
                observables: obs_ops.iter().map(|o| o.trace_with(rho).re / tr).collect(),
                purity: dim as f64 * hs / (tr * tr),
            }
        };
        let mut out = vec![sample(&rho, 0.0)];
        for step in 1..=schedule.n_steps() {
            for g in &gates {
                rho = g.conjugate(&rho);
                let t = rho.trace().re / dim as f64;
                if !(t > 0.0) || !t.is_finite() {
                    return Err(Error::DegenerateState);
                }
                rho /= C64::new(t, 0.0);
            }
            out.push(sample(&rho, schedule.tau_at(step)));
        }
        Ok(out)
    }

    /// Ground-state energy: full diagonalization up to dimension 1024,
    /// Lanczos above.
    pub fn ground_energy(&self, h: &Hamiltonian<f64>) -> Result<f64> {
        guard(h.n_qubits(), self.max_qubits)?;
        if (1usize << h.n_qubits()) <= FULL_EIGEN_MAX_DIM {
            let spec = self.spectrum(h)?;
            return Ok(spec.values.iter().copied().fold(f64::INFINITY, f64::min));
        }
        lanczos::lowest_eigenvalue(&SparseHamiltonian::new(h), 600, 1e-10)
    }
}

pub fn dense_exact_ite(
    h: &Hamiltonian<f64>,
    taus: &[f64],
    observables: &[PauliSum<f64>],
) -> Result<Vec<DenseSample>> {
    DenseOracle::default().exact_ite(h, taus, observables)
}

pub fn dense_trotter_ite(
    h: &Hamiltonian<f64>,
    schedule: &ScheduleConfig<f64>,
    observables: &[PauliSum<f64>],
) -> Result<Vec<DenseSample>> {
    DenseOracle::default().trotter_ite(h, schedule, observables)
}

pub fn dense_ground_energy(h: &Hamiltonian<f64>) -> Result<f64> {
    DenseOracle::default().ground_energy(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_tfim, hamiltonian_from_terms, TfimParams};

    #[test]
    fn single_spin_thermal_value() {
        // H = -Z: <Z> = tanh(tau), <H> = -tanh(tau)
        let h = hamiltonian_from_terms(1, &[(-1.0, "Z")]).unwrap();
        let z = PauliSum::parse("1 Z").unwrap();
        let out = dense_exact_ite(&h, &[0.0, 0.5, 3.0], &[z]).unwrap();
        for s in &out {
            assert!((s.observables[0] - s.tau.tanh()).abs() < 1e-14);
            assert!((s.energy + s.tau.tanh()).abs() < 1e-14);
        }
        assert!((out[0].purity - 1.0).abs() < 1e-14);
    }

    #[test]
    fn size_guard() {
        let h = build_tfim(&TfimParams::new(15, 1.0, 0.5)).unwrap();
        assert!(matches!(
            dense_ground_energy(&h),
            Err(Error::SizeGuard { n: 15, max: 14 })
        ));
        assert!(DenseOracle::new(3).ground_energy(&build_tfim(&TfimParams::new(4, 1.0, 0.5)).unwrap()).is_err());
    }

    #[test]
    fn ground_energy_matches_free_fermions() {
        for n in [2, 3, 5, 8] {
            let p = TfimParams::new(n, 1.0, 0.5);
            let ed = dense_ground_energy(&build_tfim(&p).unwrap()).unwrap();
            let ff = bdg_ground_energy(&p).unwrap();
            assert!((ed - ff).abs() < 1e-10 * ff.abs(), "n={n}: {ed} vs {ff}");
        }
    }

    #[test]
    fn lanczos_matches_free_fermions() {
        let p = TfimParams::new(11, 1.0, 0.5);
        let ed = dense_ground_energy(&build_tfim(&p).unwrap()).unwrap();
        let ff = bdg_ground_energy(&p).unwrap();
        assert!((ed - ff).abs() < 1e-10 * ff.abs(), "{ed} vs {ff}");
    }

    #[test]
    fn trotter_energy_error_is_second_order() {
        let h = build_tfim(&TfimParams::new(4, 1.0, 0.5)).unwrap();
        let exact = dense_exact_ite(&h, &[2.0], &[]).unwrap()[0].energy;
        let errs: Vec<f64> = [0.08, 0.04, 0.02]
            .iter()
            .map(|&dt| {
                let sched = ScheduleConfig::new(dt, 2.0).unwrap();
                let tr = dense_trotter_ite(&h, &sched, &[]).unwrap();
                assert_eq!(tr.len(), sched.n_steps() + 1);
                (tr.last().unwrap().energy - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 3.5 && ratio < 4.5, "{errs:?}");
        }
    }
}
