//! Phase-free Pauli strings in the symplectic (x, z) bit representation.
//!
//! Qubit `q` of a string is encoded by the bit pair `(x_q, z_q)`:
//! `(0,0) = I`, `(1,0) = X`, `(1,1) = Y`, `(0,1) = Z`. The bits are packed into
//! 64-bit words, x-words first and z-words after, so products and commutation
//! tests cost `O(n / 64)` word operations. No phase is ever stored: products
//! return their phase alongside the resulting string.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_complex::Complex;
use num_traits::One;
use smallvec::SmallVec;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A power of the imaginary unit, `i^k` with `k` taken mod 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn new(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    /// Exponent `k` in `i^k`, in `0..4`.
    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    /// `+1` or `-1` for a real phase, `None` otherwise.
    pub fn real_sign(self) -> Option<i8> {
        match self.0 {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    /// `+1` or `-1` for `i^k` with `k` odd, i.e. the real number `-i * phase`.
    pub fn imag_sign(self) -> Option<i8> {
        match self.0 {
            1 => Some(1),
            3 => Some(-1),
            _ => None,
        }
    }

    pub fn to_complex<T: num_traits::Float>(self) -> Complex<T> {
        match self.0 {
            0 => Complex::one(),
            1 => Complex::i(),
            2 => -Complex::<T>::one(),
            _ => -Complex::<T>::i(),
        }
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }
}

impl Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        })
    }
}

/// An n-qubit Pauli string without phase.
///
/// The storage holds `2 * ceil(n / 64)` words. Strings up to 64 qubits never
/// allocate.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: u32,
    words: SmallVec<[u64; 2]>,
}

#[inline]
fn words_for(n_qubits: usize) -> usize {
    n_qubits.div_ceil(WORD)
}

impl PauliString {
    /// The identity on `n_qubits` qubits.
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits > 0, "Pauli strings need at least one qubit");
        let w = words_for(n_qubits);
        PauliString {
            n_qubits: n_qubits as u32,
            words: SmallVec::from_elem(0, 2 * w),
        }
    }

    /// Builds a string from `(qubit, letter)` pairs; unmentioned qubits are identity.
    pub fn from_sparse(n_qubits: usize, factors: &[(usize, Pauli)]) -> Self {
        let mut p = Self::identity(n_qubits);
        for &(q, letter) in factors {
            p.set(q, letter);
        }
        p
    }

    /// Builds a string from per-qubit `x` and `z` bits.
    pub fn from_bits(x: &[bool], z: &[bool]) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch {
                left: x.len(),
                right: z.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::EmptyPauli);
        }
        let mut p = Self::identity(x.len());
        for q in 0..x.len() {
            p.set(q, Pauli::from_bits(x[q], z[q]));
        }
        Ok(p)
    }

    /// Parses text over `{I, X, Y, Z}`; the leftmost character is qubit 0.
    pub fn from_text(text: &str) -> Result<Self> {
        let n = text.chars().count();
        if n == 0 {
            return Err(Error::EmptyPauli);
        }
        let mut p = Self::identity(n);
        for (position, character) in text.chars().enumerate() {
            let letter =
                Pauli::from_char(character).ok_or(Error::Parse { position, character })?;
            p.set(position, letter);
        }
        Ok(p)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits as usize
    }

    #[inline]
    fn n_words(&self) -> usize {
        self.words.len() / 2
    }

    /// Packed x-bits; bit `q % 64` of word `q / 64` belongs to qubit `q`.
    #[inline]
    pub fn x_words(&self) -> &[u64] {
        &self.words[..self.n_words()]
    }

    /// Packed z-bits, same layout as [`x_words`](Self::x_words).
    #[inline]
    pub fn z_words(&self) -> &[u64] {
        &self.words[self.n_words()..]
    }

    pub fn x(&self, q: usize) -> bool {
        assert!(q < self.n_qubits());
        (self.x_words()[q / WORD] >> (q % WORD)) & 1 == 1
    }

    pub fn z(&self, q: usize) -> bool {
        assert!(q < self.n_qubits());
        (self.z_words()[q / WORD] >> (q % WORD)) & 1 == 1
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x(q), self.z(q))
    }

    pub fn set(&mut self, q: usize, letter: Pauli) {
        assert!(q < self.n_qubits(), "qubit {q} out of range");
        let w = self.n_words();
        let (x, z) = letter.bits();
        let mask = 1u64 << (q % WORD);
        let xi = q / WORD;
        let zi = w + q / WORD;
        self.words[xi] = (self.words[xi] & !mask) | if x { mask } else { 0 };
        self.words[zi] = (self.words[zi] & !mask) | if z { mask } else { 0 };
    }

    pub fn is_identity(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        let w = self.n_words();
        (0..w)
            .map(|i| (self.words[i] | self.words[w + i]).count_ones() as usize)
            .sum()
    }

    /// Number of `Y` factors.
    pub fn y_count(&self) -> usize {
        let w = self.n_words();
        (0..w)
            .map(|i| (self.words[i] & self.words[w + i]).count_ones() as usize)
            .sum()
    }

    fn check_width(&self, other: &PauliString) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.n_qubits(),
                right: other.n_qubits(),
            });
        }
        Ok(())
    }

    /// Whether the two strings commute, from the symplectic inner product.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_width(other)?;
        Ok(self.commutes_unchecked(other))
    }

    #[inline]
    pub(crate) fn commutes_unchecked(&self, other: &PauliString) -> bool {
        let w = self.n_words();
        let mut acc = 0u32;
        for i in 0..w {
            let s = (self.words[i] & other.words[w + i]) ^ (self.words[w + i] & other.words[i]);
            acc ^= s.count_ones();
        }
        acc & 1 == 0
    }

    /// Operator product `self * other = phase * result`.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        self.check_width(other)?;
        Ok(self.multiply_unchecked(other))
    }

    /// With `P = i^{x.z} X^x Z^z`, the product picks up `(-1)^{z_P . x_Q}` from
    /// reordering plus the `i^{x.z}` corrections of the three strings.
    #[inline]
    pub(crate) fn multiply_unchecked(&self, other: &PauliString) -> (Phase, PauliString) {
        let w = self.n_words();
        let mut words: SmallVec<[u64; 2]> = SmallVec::with_capacity(2 * w);
        words.extend(self.words.iter().zip(&other.words).map(|(a, b)| a ^ b));
        let mut k: u32 = 0;
        for i in 0..w {
            let (x1, z1) = (self.words[i], self.words[w + i]);
            let (x2, z2) = (other.words[i], other.words[w + i]);
            let (x3, z3) = (words[i], words[w + i]);
            k += (x1 & z1).count_ones();
            k += (x2 & z2).count_ones();
            k += 2 * (z1 & x2).count_ones();
            // subtract y-count of the result, mod 4
            k += 3 * (x3 & z3).count_ones();
        }
        (
            Phase::new(k),
            PauliString {
                n_qubits: self.n_qubits,
                words,
            },
        )
    }

    /// Hex encoding of the x-bits and z-bits: `ceil(n/4)` digits each, most
    /// significant digit first, bit `q` of the number belonging to qubit `q`.
    pub fn to_hex(&self) -> (String, String) {
        (
            hex_encode(self.x_words(), self.n_qubits()),
            hex_encode(self.z_words(), self.n_qubits()),
        )
    }

    pub fn from_hex(n_qubits: usize, x_hex: &str, z_hex: &str) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::EmptyPauli);
        }
        let mut p = Self::identity(n_qubits);
        let w = p.n_words();
        let x = hex_decode(x_hex, n_qubits)?;
        let z = hex_decode(z_hex, n_qubits)?;
        p.words[..w].copy_from_slice(&x);
        p.words[w..].copy_from_slice(&z);
        Ok(p)
    }
}

fn hex_encode(words: &[u64], n_qubits: usize) -> String {
    let digits = n_qubits.div_ceil(4);
    (0..digits)
        .rev()
        .map(|d| {
            let bit = 4 * d;
            let nibble = (words[bit / WORD] >> (bit % WORD)) & 0xf;
            char::from_digit(nibble as u32, 16).unwrap()
        })
        .collect()
}

fn hex_decode(text: &str, n_qubits: usize) -> Result<SmallVec<[u64; 2]>> {
    let bad = |message: String| Error::Format { line: 0, message };
    let digits = n_qubits.div_ceil(4);
    if text.len() != digits {
        return Err(bad(format!(
            "expected {digits} hex digits for {n_qubits} qubits, got {:?}",
            text
        )));
    }
    let mut words: SmallVec<[u64; 2]> = SmallVec::from_elem(0, words_for(n_qubits));
    for (i, c) in text.chars().rev().enumerate() {
        let nibble = c
            .to_digit(16)
            .ok_or_else(|| bad(format!("invalid hex digit {c:?}")))? as u64;
        let bit = 4 * i;
        words[bit / WORD] |= nibble << (bit % WORD);
    }
    let spare = words.len() * WORD - n_qubits;
    if spare > 0 {
        let last = words.len() - 1;
        if words[last] >> (WORD - spare) != 0 {
            return Err(bad(format!("bits set beyond qubit {}", n_qubits - 1)));
        }
    }
    Ok(words)
}

/// Canonical order: lexicographic over the interleaved bit sequence
/// `x_0 z_0 x_1 z_1 ...`, widths compared first.
impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n_qubits.cmp(&other.n_qubits).then_with(|| {
            let w = self.n_words();
            for i in 0..w {
                let (xa, za) = (self.words[i], self.words[w + i]);
                let (xb, zb) = (other.words[i], other.words[w + i]);
                let diff = (xa ^ xb) | (za ^ zb);
                if diff != 0 {
                    let q = diff.trailing_zeros();
                    let code = |x: u64, z: u64| (((x >> q) & 1) << 1) | ((z >> q) & 1);
                    return code(xa, za).cmp(&code(xb, zb));
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits() {
            write!(f, "{}", self.get(q).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

/// Complex scalar helper used for phase bookkeeping in tests and products.
pub(crate) fn phase_times<T: num_traits::Float>(phase: Phase, value: Complex<T>) -> Complex<T> {
    match phase.exponent() {
        0 => value,
        1 => Complex::new(-value.im, value.re),
        2 => Complex::new(-value.re, -value.im),
        _ => Complex::new(value.im, -value.re),
    }
}
