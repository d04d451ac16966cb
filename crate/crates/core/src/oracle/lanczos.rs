use nalgebra::{DMatrix, SymmetricEigen};

use super::dense::{SparseHamiltonian, C64};
use crate::error::{Error, Result};

/// Lowest eigenvalue of a Hermitian operator by Lanczos with full
/// reorthogonalization. Deterministic: the start vector is a fixed
/// non-symmetric pattern.
pub(crate) fn lowest_eigenvalue(h: &SparseHamiltonian, max_iter: usize, tol: f64) -> Result<f64> {
    let dim = h.dim;
    let mut v: Vec<C64> = (0..dim)
        .map(|k| C64::new(1.0 + 0.5 * (1.7 * k as f64 + 0.3).sin(), 0.25 * (0.9 * k as f64).cos()))
        .collect();
    normalize(&mut v);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let max_iter = max_iter.min(dim);
    let mut last = f64::NAN;

    for it in 0..max_iter {
        h.apply(&v, &mut w);
        let alpha = dot(&v, &w).re;
        basis.push(v.clone());
        alphas.push(alpha);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let beta = norm(&w);
        let k = alphas.len();
        if k % 4 == 0 || beta < 1e-13 || it + 1 == max_iter {
            let (theta, last_comp) = tridiagonal_lowest(&alphas, &betas)?;
            let residual = beta * last_comp.abs();
            if residual <= tol * theta.abs().max(1.0) || beta < 1e-13 {
                return Ok(theta);
            }
            last = theta;
        }
        betas.push(beta);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / beta;
        }
    }
    Err(Error::Numerical(format!(
        "Lanczos did not converge in {max_iter} iterations (last estimate {last})"
    )))
}

fn tridiagonal_lowest(alphas: &[f64], betas: &[f64]) -> Result<(f64, f64)> {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::try_new(t, 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("tridiagonal eigensolver failed".into()))?;
    let (idx, theta) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, e)| if e < acc.1 { (i, e) } else { acc });
    Ok((theta, eig.eigenvectors[(k - 1, idx)]))
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(a: &mut [C64]) {
    let n = norm(a);
    a.iter_mut().for_each(|z| *z /= n);
}
