use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::Hamiltonian;
use crate::opsum::PauliSum;
use crate::pauli::{Pauli, PauliString};
use crate::scalar::Real;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Default cap on qubit count for anything that materializes `2^n` vectors.
pub const DEFAULT_MAX_DENSE_QUBITS: usize = 14;

pub(crate) fn guard(n: usize, max_qubits: usize) -> Result<()> {
    if n > max_qubits {
        return Err(Error::SizeGuard { n, max: max_qubits });
    }
    Ok(())
}

fn single_qubit(letter: Pauli) -> DMatrix<C64> {
    let i = C64::new(0.0, 1.0);
    match letter {
        Pauli::I => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

/// A `2^n x 2^n` complex matrix. Basis index bit `q` is the state of qubit `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub n_qubits: usize,
    pub matrix: DMatrix<C64>,
}

impl DenseOperator {
    pub fn zeros(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        DenseOperator {
            n_qubits,
            matrix: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        DenseOperator {
            n_qubits,
            matrix: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Kronecker product of the single-qubit matrices, qubit `n-1` outermost.
    pub fn from_pauli(p: &PauliString) -> Self {
        let n = p.n_qubits();
        let mut m = single_qubit(p.get(n - 1));
        for q in (0..n - 1).rev() {
            m = m.kronecker(&single_qubit(p.get(q)));
        }
        DenseOperator { n_qubits: n, matrix: m }
    }

    pub fn from_pauli_sum<T: Real>(s: &PauliSum<T>) -> Self {
        let mut out = Self::zeros(s.n_qubits());
        for (p, c) in s.iter() {
            out.matrix += Self::from_pauli(p).matrix * C64::new(c.to_f64_lossy(), 0.0);
        }
        out
    }

    pub fn from_complex_terms<'a, I>(n_qubits: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (&'a PauliString, C64)>,
    {
        let mut out = Self::zeros(n_qubits);
        for (p, c) in terms {
            out.matrix += Self::from_pauli(p).matrix * c;
        }
        out
    }

    pub fn from_hamiltonian<T: Real>(h: &Hamiltonian<T>) -> Self {
        let mut out = Self::zeros(h.n_qubits());
        for (c, p) in h.terms() {
            out.matrix += Self::from_pauli(p).matrix * C64::new(c.to_f64_lossy(), 0.0);
        }
        out
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr(M) / 2^n`.
    pub fn normalized_trace(&self) -> C64 {
        self.trace() / self.dim() as f64
    }

    /// Coefficient `Tr(P M) / 2^n` of every Pauli string, dropping those
    /// with magnitude at most `tol`. Exponential in `n`; for small tests.
    pub fn pauli_coefficients(&self, tol: f64) -> Vec<(PauliString, C64)> {
        let n = self.n_qubits;
        let mut out = Vec::new();
        for code in 0..(1u64 << (2 * n)) {
            let letters: Vec<(usize, Pauli)> = (0..n)
                .map(|q| {
                    let bits = (code >> (2 * q)) & 3;
                    (q, Pauli::from_bits(bits & 1 == 1, bits & 2 == 2))
                })
                .collect();
            let p = PauliString::from_sparse(n, &letters);
            let c = trace_pauli_times(&p, &self.matrix) / self.dim() as f64;
            if c.norm() > tol {
                out.push((p, c));
            }
        }
        out
    }

    /// Largest `|M - M^dag|` entry.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Row/column action of a Pauli string: `P |b> = phase(b) |b ^ x>` with
/// `phase(b) = i^{#Y} (-1)^{popcount(b & z)}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PauliAction {
    flip: usize,
    zmask: usize,
    y_phase: C64,
}

impl PauliAction {
    pub fn new(p: &PauliString) -> Self {
        let n = p.n_qubits();
        assert!(n < usize::BITS as usize);
        let (mut flip, mut zmask, mut ys) = (0usize, 0usize, 0u32);
        for q in 0..n {
            let (x, z) = (p.x(q), p.z(q));
            if x {
                flip |= 1 << q;
            }
            if z {
                zmask |= 1 << q;
            }
            if x && z {
                ys += 1;
            }
        }
        let y_phase = match ys % 4 {
            0 => ONE,
            1 => C64::new(0.0, 1.0),
            2 => -ONE,
            _ => C64::new(0.0, -1.0),
        };
        PauliAction { flip, zmask, y_phase }
    }

    /// `(target index, amplitude)` for basis state `b`.
    #[inline]
    pub fn on(&self, b: usize) -> (usize, C64) {
        let sign = if (b & self.zmask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        (b ^ self.flip, self.y_phase * sign)
    }
}

/// `Tr(P M)`.
pub(crate) fn trace_pauli_times(p: &PauliString, m: &DMatrix<C64>) -> C64 {
    let act = PauliAction::new(p);
    // Tr(P M) = sum_k <k|P M|k> = sum_b phase(b) M[b, b ^ x] ... with P|b> = ph |b^x>,
    // <k|P = sum_b <k|P|b><b| -> P[k, b] = ph(b) when k = b ^ x
    (0..m.nrows())
        .map(|b| {
            let (k, ph) = act.on(b);
            ph * m[(b, k)]
        })
        .sum()
}

/// `y = P x` for a state vector.
pub(crate) fn apply_pauli_vec(act: &PauliAction, x: &[C64], y: &mut [C64], scale: C64) {
    for (b, &xb) in x.iter().enumerate() {
        let (k, ph) = act.on(b);
        y[k] += scale * ph * xb;
    }
}

/// Matrix-free Hamiltonian action `y = H x`.
pub(crate) struct SparseHamiltonian {
    pub dim: usize,
    terms: Vec<(C64, PauliAction)>,
}

impl SparseHamiltonian {
    pub fn new<T: Real>(h: &Hamiltonian<T>) -> Self {
        SparseHamiltonian {
            dim: 1usize << h.n_qubits(),
            terms: h
                .terms()
                .iter()
                .map(|(c, p)| (C64::new(c.to_f64_lossy(), 0.0), PauliAction::new(p)))
                .collect(),
        }
    }

    pub fn from_sum<T: Real>(s: &PauliSum<T>) -> Self {
        SparseHamiltonian {
            dim: 1usize << s.n_qubits(),
            terms: s
                .iter()
                .map(|(p, c)| (C64::new(c.to_f64_lossy(), 0.0), PauliAction::new(p)))
                .collect(),
        }
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for (c, act) in &self.terms {
            apply_pauli_vec(act, x, y, *c);
        }
    }

    /// `<v| H |v>` for a column of `m`.
    pub fn expectation_column(&self, m: &DMatrix<C64>, col: usize) -> C64 {
        let v = m.column(col);
        let mut acc = ZERO;
        for (c, act) in &self.terms {
            let mut s = ZERO;
            for b in 0..self.dim {
                let (k, ph) = act.on(b);
                s += v[k].conj() * ph * v[b];
            }
            acc += c * s;
        }
        acc
    }

    /// `Tr(H M)` without forming `H`.
    pub fn trace_with(&self, m: &DMatrix<C64>) -> C64 {
        self.terms
            .iter()
            .map(|(c, act)| {
                let s: C64 = (0..self.dim)
                    .map(|b| {
                        let (k, ph) = act.on(b);
                        ph * m[(b, k)]
                    })
                    .sum();
                c * s
            })
            .sum()
    }
}

/// Row-compressed copy of a dense matrix, for conjugating by gate factors
/// that have only a couple of nonzeros per row.
pub(crate) struct RowSparse {
    rows: Vec<Vec<(usize, C64)>>,
}

impl RowSparse {
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let rows = (0..m.nrows())
            .map(|r| {
                (0..m.ncols())
                    .filter_map(|c| {
                        let v = m[(r, c)];
                        (v != ZERO).then_some((c, v))
                    })
                    .collect()
            })
            .collect();
        RowSparse { rows }
    }

    /// `A M A^dag`.
    pub fn conjugate(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let d = m.nrows();
        // left: L = A M
        let mut left = DMatrix::<C64>::zeros(d, d);
        for col in 0..d {
            for (r, row) in self.rows.iter().enumerate() {
                let mut s = ZERO;
                for &(k, a) in row {
                    s += a * m[(k, col)];
                }
                left[(r, col)] = s;
            }
        }
        // right: L A^dag, (L A^dag)[r, c] = sum_k L[r, k] conj(A[c, k])
        let mut out = DMatrix::<C64>::zeros(d, d);
        for (c, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                let a = a.conj();
                for r in 0..d {
                    out[(r, c)] += left[(r, k)] * a;
                }
            }
        }
        out
    }
}

/// `exp(-a P)` from the spectral projectors `(I +- P) / 2` of a Pauli string.
pub fn pauli_exponential(p: &PauliString, a: f64) -> DMatrix<C64> {
    let pm = DenseOperator::from_pauli(p).matrix;
    let d = pm.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    let plus = (&id + &pm) * C64::new(0.5, 0.0);
    let minus = (&id - &pm) * C64::new(0.5, 0.0);
    plus * C64::new((-a).exp(), 0.0) + minus * C64::new(a.exp(), 0.0)
}

/// `exp(-i theta P / 2) = cos(theta/2) I - i sin(theta/2) P`.
pub fn pauli_rotation(p: &PauliString, theta: f64) -> DMatrix<C64> {
    let pm = DenseOperator::from_pauli(p).matrix;
    let d = pm.nrows();
    DMatrix::<C64>::identity(d, d) * C64::new((theta / 2.0).cos(), 0.0) - pm * C64::new(0.0, (theta / 2.0).sin())
}

/// `V^dag M V` with `V = exp(-tau Q / 2)`.
pub fn imaginary_conjugation(q: &PauliString, tau: f64, m: &DMatrix<C64>) -> DMatrix<C64> {
    let v = pauli_exponential(q, tau / 2.0);
    RowSparse::from_dense(&v.adjoint()).conjugate(m)
}

/// `U^dag M U` with `U = exp(-i theta Q / 2)`.
pub fn real_conjugation(q: &PauliString, theta: f64, m: &DMatrix<C64>) -> DMatrix<C64> {
    let u = pauli_rotation(q, theta);
    RowSparse::from_dense(&u.adjoint()).conjugate(m)
}
