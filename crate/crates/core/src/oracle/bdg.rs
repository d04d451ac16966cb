use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};
use crate::models::TfimParams;
use crate::scalar::Real;

/// Ground energy of the open transverse-field Ising chain from its
/// free-fermion spectrum: `E0 = -1/2 sum_k eps_k`, where `eps_k` are the
/// singular values of the bidiagonal matrix with `2h` on the diagonal and
/// `2J` next to it.
pub fn bdg_ground_energy<T: Real>(params: &TfimParams<T>) -> Result<f64> {
    let n = params.n;
    if n < 2 {
        return Err(Error::InvalidModel(format!("TFIM needs at least 2 spins, got {n}")));
    }
    let (j, h) = (params.j.to_f64_lossy(), params.h.to_f64_lossy());
    if !j.is_finite() || !h.is_finite() {
        return Err(Error::InvalidModel("non-finite couplings".into()));
    }
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        b[(i, i)] = 2.0 * h;
        if i + 1 < n {
            b[(i, i + 1)] = 2.0 * j;
        }
    }
    let svd = SVD::try_new(b, false, false, 1e-15, 100_000)
        .ok_or_else(|| Error::Numerical("bidiagonal SVD did not converge".into()))?;
    Ok(-0.5 * svd.singular_values.iter().sum::<f64>())
}

/// One row of a reference-energy table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceEnergy {
    pub n: usize,
    pub j: f64,
    pub h: f64,
    pub e0: f64,
}

/// Free-fermion ground energies for every `n` in `sizes`.
pub fn reference_table(sizes: &[usize], j: f64, h: f64) -> Result<Vec<ReferenceEnergy>> {
    sizes
        .iter()
        .map(|&n| {
            Ok(ReferenceEnergy {
                n,
                j,
                h,
                e0: bdg_ground_energy(&TfimParams::new(n, j, h))?,
            })
        })
        .collect()
}

/// Writes `n,J,h,E0` rows with full precision.
pub fn write_reference_csv<W: std::io::Write>(rows: &[ReferenceEnergy], mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,J,h,E0")?;
    for r in rows {
        writeln!(out, "{},{},{},{:.17e}", r.n, r.j, r.h, r.e0)?;
    }
    Ok(())
}
