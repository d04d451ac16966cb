//! Benchmark Hamiltonians.

use std::io::BufRead;

use crate::error::{Error, Result};
use crate::opsum::{parse_real, PauliSum, MERGE_ZERO_TOLERANCE};
use crate::pauli::{Pauli, PauliString};
use crate::scalar::Real;

/// `H = sum_j alpha_j h_j` as an ordered list of distinct Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian<T> {
    n_qubits: usize,
    terms: Vec<(T, PauliString)>,
}

impl<T: Real> Hamiltonian<T> {
    /// Builds from `(coefficient, string)` pairs, merging repeated strings into
    /// the position of their first occurrence.
    pub fn new(n_qubits: usize, terms: Vec<(T, PauliString)>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidModel("zero qubits".into()));
        }
        let mut merged: Vec<(T, PauliString)> = Vec::with_capacity(terms.len());
        for (c, p) in terms {
            if p.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch {
                    left: n_qubits,
                    right: p.n_qubits(),
                });
            }
            match merged.iter_mut().find(|(_, q)| *q == p) {
                Some(entry) => entry.0 = entry.0 + c,
                None => merged.push((c, p)),
            }
        }
        let scale = merged.iter().map(|(c, _)| c.abs()).fold(T::zero(), T::max);
        merged.retain(|(c, _)| c.abs() > T::lit(MERGE_ZERO_TOLERANCE) * scale);
        Ok(Hamiltonian {
            n_qubits,
            terms: merged,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(T, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of identity coefficients (the constant energy offset).
    pub fn identity_offset(&self) -> T {
        self.terms
            .iter()
            .filter(|(_, p)| p.is_identity())
            .map(|(c, _)| *c)
            .sum()
    }

    /// Non-identity terms, in order.
    pub fn gated_terms(&self) -> impl Iterator<Item = &(T, PauliString)> + '_ {
        self.terms.iter().filter(|(_, p)| !p.is_identity())
    }

    pub fn to_pauli_sum(&self) -> PauliSum<T> {
        let mut s = PauliSum::new(self.n_qubits);
        for (c, p) in &self.terms {
            s.add_term(p.clone(), *c).expect("widths checked at construction");
        }
        s
    }

    /// Returns a copy with terms permuted: `ordering[k]` is the index of the
    /// term placed at position `k`.
    pub fn reordered(&self, ordering: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.terms.len()];
        if ordering.len() != self.terms.len() {
            return Err(Error::InvalidSchedule(format!(
                "ordering has {} entries for {} terms",
                ordering.len(),
                self.terms.len()
            )));
        }
        for &i in ordering {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidSchedule(format!(
                    "ordering is not a permutation of 0..{}",
                    self.terms.len()
                )));
            }
        }
        Ok(Hamiltonian {
            n_qubits: self.n_qubits,
            terms: ordering.iter().map(|&i| self.terms[i].clone()).collect(),
        })
    }

    pub fn cast<U: Real>(&self) -> Hamiltonian<U> {
        Hamiltonian {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|(c, p)| (U::from_f64(c.to_f64_lossy()).unwrap_or_else(U::nan), p.clone()))
                .collect(),
        }
    }
}

/// Open-chain transverse-field Ising parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TfimParams<T> {
    pub n: usize,
    pub j: T,
    pub h: T,
}

impl<T: Real> TfimParams<T> {
    pub fn new(n: usize, j: T, h: T) -> Self {
        TfimParams { n, j, h }
    }
}

/// `H = -J sum_i Z_i Z_{i+1} - h sum_i X_i` with open boundaries: all bonds
/// left to right, then all fields left to right.
pub fn build_tfim<T: Real>(params: &TfimParams<T>) -> Result<Hamiltonian<T>> {
    let n = params.n;
    if n < 2 {
        return Err(Error::InvalidModel(format!("TFIM needs at least 2 spins, got {n}")));
    }
    let mut terms = Vec::with_capacity(2 * n - 1);
    for i in 0..n - 1 {
        terms.push((
            -params.j,
            PauliString::from_sparse(n, &[(i, Pauli::Z), (i + 1, Pauli::Z)]),
        ));
    }
    for i in 0..n {
        terms.push((-params.h, PauliString::from_sparse(n, &[(i, Pauli::X)])));
    }
    // zero couplings still contribute (inert) gates; keep every term so the
    // ordering and gate count do not depend on parameter values
    Ok(Hamiltonian { n_qubits: n, terms })
}

/// Parses and merges `(coefficient, text)` terms on `n` qubits.
pub fn hamiltonian_from_terms<T: Real>(n: usize, terms: &[(T, &str)]) -> Result<Hamiltonian<T>> {
    let parsed = terms
        .iter()
        .map(|(c, text)| Ok((*c, PauliString::from_text(text)?)))
        .collect::<Result<Vec<_>>>()?;
    Hamiltonian::new(n, parsed)
}

/// Reads a term file: one `coefficient pauli_string` pair per line, `#`
/// starting a comment. The width is taken from the first string.
pub fn read_term_file<T: Real, R: BufRead>(input: R) -> Result<Hamiltonian<T>> {
    let mut terms = Vec::new();
    let mut width = None;
    for (i, line) in input.lines().enumerate() {
        let fail = |message: String| Error::Format { line: i + 1, message };
        let line = line.map_err(|e| fail(e.to_string()))?;
        let content = line.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let cols: Vec<&str> = content.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(fail(format!("expected `coefficient pauli`, got {content:?}")));
        }
        let c: T = parse_real(cols[0]).ok_or_else(|| fail(format!("invalid coefficient {:?}", cols[0])))?;
        let p = PauliString::from_text(cols[1]).map_err(|e| fail(e.to_string()))?;
        let n = *width.get_or_insert(p.n_qubits());
        if p.n_qubits() != n {
            return Err(fail(format!("string {} has {} qubits, expected {n}", cols[1], p.n_qubits())));
        }
        terms.push((c, p));
    }
    let n = width.ok_or_else(|| Error::Format {
        line: 0,
        message: "term file has no terms".into(),
    })?;
    Hamiltonian::new(n, terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(h: &Hamiltonian<f64>) -> Vec<(f64, String)> {
        h.terms().iter().map(|(c, p)| (*c, p.to_string())).collect()
    }

    #[test]
    fn tfim_two_sites() {
        let h = build_tfim(&TfimParams::new(2, 1.0, 0.5)).unwrap();
        assert_eq!(
            labels(&h),
            vec![(-1.0, "ZZ".into()), (-0.5, "XI".into()), (-0.5, "IX".into())]
        );
    }

    #[test]
    fn tfim_term_counts() {
        let h = build_tfim(&TfimParams::new(3, 1.0, 0.5)).unwrap();
        assert_eq!(
            labels(&h).into_iter().map(|t| t.1).collect::<Vec<_>>(),
            vec!["ZZI", "IZZ", "XII", "IXI", "IIX"]
        );
        for n in 2..=30 {
            assert_eq!(build_tfim(&TfimParams::new(n, 1.0, 0.5)).unwrap().len(), 2 * n - 1);
        }
        assert_eq!(build_tfim(&TfimParams::new(10, 1.0, 0.5)).unwrap().len(), 19);
        assert!(build_tfim(&TfimParams::new(1, 1.0, 0.5)).is_err());
    }

    #[test]
    fn from_terms_merges_and_checks_width() {
        let h = hamiltonian_from_terms(1, &[(-1.0, "Z")]).unwrap();
        assert_eq!(h.len(), 1);
        let h = hamiltonian_from_terms(2, &[(1.0, "ZZ"), (1.0, "ZZ")]).unwrap();
        assert_eq!(labels(&h), vec![(2.0, "ZZ".into())]);
        assert!(matches!(
            hamiltonian_from_terms(2, &[(1.0, "ZZZ")]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            hamiltonian_from_terms(2, &[(1.0, "ZQ")]),
            Err(Error::Parse { position: 1, .. })
        ));
    }

    #[test]
    fn term_file_parsing() {
        let text = "# two-site model\n-1.0 ZZ  # bond\n\n-0.5 XI\n-0.5 IX\n0.25 II\n";
        let h: Hamiltonian<f64> = read_term_file(text.as_bytes()).unwrap();
        assert_eq!(h.len(), 4);
        assert_eq!(h.identity_offset(), 0.25);
        assert_eq!(h.gated_terms().count(), 3);
        assert!(read_term_file::<f64, _>("1.0 ZZ\n1.0 Z\n".as_bytes()).is_err());
        assert!(read_term_file::<f64, _>("abc ZZ\n".as_bytes()).is_err());
        assert!(read_term_file::<f64, _>("# nothing\n".as_bytes()).is_err());
    }

    #[test]
    fn reorder_validates_permutation() {
        let h = build_tfim(&TfimParams::new(2, 1.0, 0.5)).unwrap();
        let r = h.reordered(&[2, 0, 1]).unwrap();
        assert_eq!(r.terms()[0].1.to_string(), "IX");
        assert!(h.reordered(&[0, 0, 1]).is_err());
        assert!(h.reordered(&[0, 1]).is_err());
    }
}
