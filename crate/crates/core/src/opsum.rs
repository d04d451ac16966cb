//! Sparse expansions over Pauli strings.
//!
//! Traces use the normalized convention `tr = Tr / 2^n`, under which distinct
//! Pauli strings are orthonormal: `tr(I) = 1` and `tr(P Q) = delta(P, Q)`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use num_complex::Complex;
use num_traits::Zero;
use rustc_hash::FxBuildHasher;

use crate::error::{Error, Result};
use crate::pauli::{phase_times, PauliString};
use crate::scalar::Real;

pub(crate) type TermMap<V> = IndexMap<PauliString, V, FxBuildHasher>;

/// Relative size below which a merged coefficient counts as a numerical zero.
pub const MERGE_ZERO_TOLERANCE: f64 = 1e-15;

/// Default identity-coefficient floor for [`PauliSum::normalize_by_trace`].
pub const DEFAULT_TRACE_EPSILON: f64 = 1e-300;

/// Coefficient plus the first-seen counter used to break truncation ties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term<T> {
    pub coefficient: T,
    pub index: u64,
}

/// A real-coefficient sum `sum_P c_P P`.
///
/// Iteration follows insertion order, which is also increasing
/// `insertion_index` order: new strings are always appended with a fresh
/// index and removals keep the relative order of the survivors.
#[derive(Clone)]
pub struct PauliSum<T> {
    pub(crate) n_qubits: usize,
    pub(crate) terms: TermMap<Term<T>>,
    pub(crate) next_index: u64,
}

impl<T: Real> PauliSum<T> {
    pub fn new(n_qubits: usize) -> Self {
        assert!(n_qubits > 0, "Pauli sums need at least one qubit");
        PauliSum {
            n_qubits,
            terms: TermMap::default(),
            next_index: 0,
        }
    }

    /// `1 * I`, the unnormalized maximally mixed state.
    pub fn identity(n_qubits: usize) -> Self {
        let mut s = Self::new(n_qubits);
        s.push_fresh(PauliString::identity(n_qubits), T::one());
        s
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, T)>,
    {
        let mut s = Self::new(n_qubits);
        for (p, c) in terms {
            s.add_term(p, c)?;
        }
        Ok(s)
    }

    /// Parses `c1 P1 + c2 P2 - c3 P3`; a bare string has coefficient 1.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |message: String| Error::Format { line: 0, message };
        let mut items: Vec<(T, PauliString)> = Vec::new();
        let mut sign = T::one();
        let mut coef: Option<T> = None;
        let mut expect_sep = false;
        for token in text.split_whitespace() {
            match token {
                "+" | "-" => {
                    if !expect_sep && !items.is_empty() || coef.is_some() {
                        return Err(bad(format!("misplaced {token:?} in {text:?}")));
                    }
                    if token == "-" {
                        sign = -sign;
                    }
                    expect_sep = false;
                    continue;
                }
                _ if expect_sep => return Err(bad(format!("expected + or - before {token:?}"))),
                _ => {}
            }
            let (token_sign, body) = match token.strip_prefix('-') {
                Some(rest) => (-T::one(), rest),
                None => (T::one(), token.strip_prefix('+').unwrap_or(token)),
            };
            if coef.is_none() {
                if let Ok(c) = body.parse::<T>() {
                    coef = Some(sign * token_sign * c);
                    continue;
                }
            }
            let p = PauliString::from_text(body)?;
            let c = match coef.take() {
                Some(c) => c * token_sign,
                None => sign * token_sign,
            };
            items.push((c, p));
            sign = T::one();
            expect_sep = true;
        }
        if coef.is_some() || (!expect_sep && !items.is_empty()) {
            return Err(bad(format!("dangling coefficient or sign in {text:?}")));
        }
        let n = items
            .first()
            .map(|(_, p)| p.n_qubits())
            .ok_or_else(|| bad("empty Pauli sum".into()))?;
        Self::from_terms(n, items.into_iter().map(|(c, p)| (p, c)))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Index that the next newly created string will receive.
    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    fn check_width(&self, p: &PauliString) -> Result<()> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.n_qubits,
                right: p.n_qubits(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_same_width<U>(&self, other: &PauliSum<U>) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(())
    }

    pub(crate) fn push_fresh(&mut self, p: PauliString, c: T) {
        let index = self.next_index;
        self.next_index += 1;
        self.terms.insert(p, Term { coefficient: c, index });
    }

    /// Adds `c * p`, merging with an existing entry for `p`.
    pub fn add_term(&mut self, p: PauliString, c: T) -> Result<()> {
        self.check_width(&p)?;
        if c.is_zero() {
            return Ok(());
        }
        match self.terms.get_mut(&p) {
            Some(term) => {
                let scale = term.coefficient.abs().max(c.abs());
                let merged = term.coefficient + c;
                term.coefficient = merged;
                if merged.abs() <= T::lit(MERGE_ZERO_TOLERANCE) * scale {
                    self.terms.shift_remove(&p);
                }
            }
            None => self.push_fresh(p, c),
        }
        Ok(())
    }

    pub fn coefficient(&self, p: &PauliString) -> T {
        self.terms.get(p).map_or(T::zero(), |t| t.coefficient)
    }

    pub fn insertion_index(&self, p: &PauliString) -> Option<u64> {
        self.terms.get(p).map(|t| t.index)
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        self.terms.contains_key(p)
    }

    /// Terms in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, T)> + '_ {
        self.terms.iter().map(|(p, t)| (p, t.coefficient))
    }

    pub fn iter_terms(&self) -> impl Iterator<Item = (&PauliString, &Term<T>)> + '_ {
        self.terms.iter()
    }

    /// Terms sorted by the canonical string order.
    pub fn canonical_terms(&self) -> Vec<(&PauliString, &Term<T>)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_unstable_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn max_abs(&self) -> T {
        self.terms
            .values()
            .map(|t| t.coefficient.abs())
            .fold(T::zero(), T::max)
    }

    pub fn scale(&mut self, factor: T) {
        for t in self.terms.values_mut() {
            t.coefficient = t.coefficient * factor;
        }
        self.terms.retain(|_, t| !t.coefficient.is_zero());
    }

    /// Normalized trace: the identity coefficient.
    pub fn normalized_trace(&self) -> T {
        self.coefficient(&PauliString::identity(self.n_qubits))
    }

    /// `tr(A B) = sum_P a_P b_P`.
    pub fn overlap(&self, other: &PauliSum<T>) -> Result<T> {
        self.check_same_width(other)?;
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        Ok(small
            .terms
            .iter()
            .filter_map(|(p, t)| large.terms.get(p).map(|u| t.coefficient * u.coefficient))
            .sum())
    }

    /// `tr(A^2)`, the squared L2 norm of the coefficient vector.
    pub fn purity(&self) -> T {
        self.terms
            .values()
            .map(|t| t.coefficient * t.coefficient)
            .sum()
    }

    /// Full operator product, with complex coefficients.
    pub fn product(&self, other: &PauliSum<T>) -> Result<ComplexPauliSum<T>> {
        self.check_same_width(other)?;
        let mut out = ComplexPauliSum::new(self.n_qubits);
        for (p, a) in self.iter() {
            for (q, b) in other.iter() {
                let (phase, r) = p.multiply_unchecked(q);
                let value = phase_times(phase, Complex::new(a * b, T::zero()));
                *out.terms.entry(r).or_insert_with(Complex::<T>::zero) += value;
            }
        }
        out.drop_numerical_zeros();
        Ok(out)
    }

    /// Applies every stage of `policy` in order.
    pub fn truncate(mut self, policy: &TruncationPolicy<T>) -> Self {
        self.truncate_in_place(policy);
        self
    }

    pub fn truncate_in_place(&mut self, policy: &TruncationPolicy<T>) {
        for stage in &policy.stages {
            match *stage {
                Truncation::None => {}
                Truncation::Threshold(delta) => {
                    if delta > T::zero() {
                        self.terms.retain(|_, t| t.coefficient.abs() > delta);
                    }
                }
                Truncation::WeightCutoff(w_max) => {
                    self.terms.retain(|p, _| p.weight() <= w_max);
                }
                Truncation::FixedK(k) => self.keep_largest(k),
            }
        }
    }

    /// Keeps the `k` largest coefficients by magnitude; equal magnitudes are
    /// ordered by smaller insertion index.
    fn keep_largest(&mut self, k: usize) {
        let m = self.terms.len();
        if m <= k {
            return;
        }
        if k == 0 {
            self.terms.clear();
            return;
        }
        let mut ranked: Vec<(T, u64, usize)> = self
            .terms
            .values()
            .enumerate()
            .map(|(pos, t)| (t.coefficient.abs(), t.index, pos))
            .collect();
        ranked.select_nth_unstable_by(k - 1, |a, b| rank_order(a, b));
        let mut keep = vec![false; m];
        for r in &ranked[..k] {
            keep[r.2] = true;
        }
        let mut pos = 0;
        self.terms.retain(|_, _| {
            let k = keep[pos];
            pos += 1;
            k
        });
    }

    /// Divides by the identity coefficient so that it becomes exactly 1.
    pub fn normalize_by_trace(self) -> Result<Self> {
        self.normalize_by_trace_with(T::lit(DEFAULT_TRACE_EPSILON))
    }

    pub fn normalize_by_trace_with(mut self, epsilon: T) -> Result<Self> {
        let trace = self.normalized_trace();
        if trace.is_zero() || trace.abs() < epsilon {
            return Err(Error::TraceCollapse {
                identity: trace.to_f64_lossy(),
                epsilon: epsilon.to_f64_lossy(),
                step: None,
                gate: None,
            });
        }
        let mut underflow = false;
        for t in self.terms.values_mut() {
            t.coefficient = t.coefficient / trace;
            underflow |= t.coefficient.is_zero();
        }
        if underflow {
            self.terms.retain(|_, t| !t.coefficient.is_zero());
        }
        Ok(self)
    }

    /// Largest absolute imaginary part is zero by construction; kept for API
    /// symmetry with [`ComplexPauliSum`].
    pub fn to_complex(&self) -> ComplexPauliSum<T> {
        let mut out = ComplexPauliSum::new(self.n_qubits);
        for (p, c) in self.iter() {
            out.terms.insert(p.clone(), Complex::new(c, T::zero()));
        }
        out
    }

    /// Converts the coefficient type, keeping strings, order and indices.
    pub fn cast<U: Real>(&self) -> PauliSum<U> {
        let mut terms = TermMap::with_capacity_and_hasher(self.len(), FxBuildHasher);
        for (p, t) in &self.terms {
            let c = U::from_f64(t.coefficient.to_f64_lossy()).unwrap_or_else(U::nan);
            if !c.is_zero() {
                terms.insert(
                    p.clone(),
                    Term {
                        coefficient: c,
                        index: t.index,
                    },
                );
            }
        }
        PauliSum {
            n_qubits: self.n_qubits,
            terms,
            next_index: self.next_index,
        }
    }

    /// Reassembles a sum from stored rows; rows are ordered by index.
    pub fn from_indexed_rows(
        n_qubits: usize,
        mut rows: Vec<(PauliString, T, u64)>,
        next_index: u64,
    ) -> Result<Self> {
        rows.sort_by_key(|r| r.2);
        let mut s = Self::new(n_qubits);
        for (p, c, index) in rows {
            s.check_width(&p)?;
            if index >= next_index {
                return Err(Error::Format {
                    line: 0,
                    message: format!("insertion index {index} is not below next_index {next_index}"),
                });
            }
            if c.is_zero() {
                continue;
            }
            if s.terms.insert(p.clone(), Term { coefficient: c, index }).is_some() {
                return Err(Error::Format {
                    line: 0,
                    message: format!("duplicate string {p}"),
                });
            }
        }
        s.next_index = next_index;
        Ok(s)
    }
}

/// Strictly larger magnitude first, then smaller insertion index.
fn rank_order<T: Real>(a: &(T, u64, usize), b: &(T, u64, usize)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

impl<T: Real> PartialEq for PauliSum<T> {
    /// Equal as operators: same strings with identical coefficients.
    fn eq(&self, other: &Self) -> bool {
        self.n_qubits == other.n_qubits
            && self.len() == other.len()
            && self.iter().all(|(p, c)| other.terms.get(p).is_some_and(|t| t.coefficient == c))
    }
}

impl<T: fmt::Debug> fmt::Debug for PauliSum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut rows: Vec<_> = self.terms.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        f.debug_map()
            .entries(rows.into_iter().map(|(p, t)| (p.to_string(), &t.coefficient)))
            .finish()
    }
}

/// Complex-coefficient sum, produced only by [`PauliSum::product`].
#[derive(Clone, Debug)]
pub struct ComplexPauliSum<T> {
    n_qubits: usize,
    pub(crate) terms: TermMap<Complex<T>>,
}

impl<T: Real> ComplexPauliSum<T> {
    pub fn new(n_qubits: usize) -> Self {
        ComplexPauliSum {
            n_qubits,
            terms: TermMap::default(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, p: &PauliString) -> Complex<T> {
        self.terms.get(p).copied().unwrap_or_else(Complex::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, Complex<T>)> + '_ {
        self.terms.iter().map(|(p, c)| (p, *c))
    }

    fn drop_numerical_zeros(&mut self) {
        let scale = self.terms.values().map(|c| c.norm()).fold(T::zero(), T::max);
        let floor = T::lit(MERGE_ZERO_TOLERANCE) * scale;
        self.terms.retain(|_, c| !c.is_zero() && c.norm() > floor);
    }

    /// `tr(A B)` against a real sum.
    pub fn overlap_real(&self, other: &PauliSum<T>) -> Result<Complex<T>> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        let mut acc = Complex::<T>::zero();
        for (p, c) in self.iter() {
            if let Some(t) = other.terms.get(p) {
                acc += c * t.coefficient;
            }
        }
        Ok(acc)
    }

    pub fn product(&self, other: &ComplexPauliSum<T>) -> Result<ComplexPauliSum<T>> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        let mut out = ComplexPauliSum::new(self.n_qubits);
        for (p, a) in self.iter() {
            for (q, b) in other.iter() {
                let (phase, r) = p.multiply_unchecked(q);
                *out.terms.entry(r).or_insert_with(Complex::<T>::zero) += phase_times(phase, a * b);
            }
        }
        out.drop_numerical_zeros();
        Ok(out)
    }

    /// Largest `|Im c|` over the terms.
    pub fn max_imag(&self) -> T {
        self.terms.values().map(|c| c.im.abs()).fold(T::zero(), T::max)
    }

    /// Real part as a [`PauliSum`], in this sum's iteration order.
    pub fn real_part(&self) -> PauliSum<T> {
        let mut out = PauliSum::new(self.n_qubits);
        for (p, c) in self.iter() {
            if !c.re.is_zero() {
                out.push_fresh(p.clone(), c.re);
            }
        }
        out
    }
}

/// One truncation rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation<T> {
    None,
    /// Keep terms with `|c| > delta`.
    Threshold(T),
    /// Keep the `K` largest magnitudes.
    FixedK(usize),
    /// Keep terms of weight at most `w_max`.
    WeightCutoff(usize),
}

/// Ordered list of truncation stages, applied left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationPolicy<T> {
    pub stages: Vec<Truncation<T>>,
}

impl<T: Real> Default for TruncationPolicy<T> {
    fn default() -> Self {
        Self::none()
    }
}

impl<T: Real> TruncationPolicy<T> {
    pub fn none() -> Self {
        TruncationPolicy {
            stages: vec![Truncation::None],
        }
    }

    pub fn threshold(delta: T) -> Self {
        TruncationPolicy {
            stages: vec![Truncation::Threshold(delta)],
        }
    }

    pub fn fixed_k(k: usize) -> Self {
        TruncationPolicy {
            stages: vec![Truncation::FixedK(k)],
        }
    }

    pub fn weight(w_max: usize) -> Self {
        TruncationPolicy {
            stages: vec![Truncation::WeightCutoff(w_max)],
        }
    }

    pub fn then(mut self, stage: Truncation<T>) -> Self {
        self.stages.retain(|s| *s != Truncation::None);
        self.stages.push(stage);
        self
    }

    /// True when no stage can remove a term.
    pub fn is_noop(&self) -> bool {
        self.stages.iter().all(|s| match s {
            Truncation::None => true,
            Truncation::Threshold(d) => *d <= T::zero(),
            _ => false,
        })
    }
}

impl<T: Real> fmt::Display for TruncationPolicy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .stages
            .iter()
            .map(|s| match s {
                Truncation::None => "none".to_string(),
                Truncation::Threshold(d) => format!("threshold={d:e}"),
                Truncation::FixedK(k) => format!("fixed_k={k}"),
                Truncation::WeightCutoff(w) => format!("weight={w}"),
            })
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Parses a real that may be written as `base^exponent`, e.g. `2^-7`.
pub fn parse_real<T: Real>(text: &str) -> Option<T> {
    let text = text.trim();
    match text.split_once('^') {
        Some((base, exp)) => {
            let base: f64 = base.trim().parse().ok()?;
            let exp: i32 = exp.trim().parse().ok()?;
            T::from_f64(base.powi(exp))
        }
        None => text.parse().ok(),
    }
}

/// Parses `none`, `threshold=d`, `fixed_k=K`, `weight=w`, comma-combined.
impl<T: Real> FromStr for TruncationPolicy<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |message: String| Error::Format { line: 0, message };
        let mut policy = TruncationPolicy::none();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if item == "none" {
                continue;
            }
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {item:?}")))?;
            let stage = match key.trim() {
                "threshold" => {
                    let d: T = parse_real(value)
                        .ok_or_else(|| bad(format!("invalid threshold {value:?}")))?;
                    if !(d >= T::zero()) {
                        return Err(bad(format!("threshold must be >= 0, got {value}")));
                    }
                    Truncation::Threshold(d)
                }
                "fixed_k" => {
                    let k = parse_count(value)
                        .filter(|&k| k > 0)
                        .ok_or_else(|| bad(format!("fixed_k must be a positive integer, got {value:?}")))?;
                    Truncation::FixedK(k)
                }
                "weight" => {
                    let w = parse_count(value)
                        .filter(|&w| w > 0)
                        .ok_or_else(|| bad(format!("weight must be a positive integer, got {value:?}")))?;
                    Truncation::WeightCutoff(w)
                }
                other => return Err(bad(format!("unknown truncation kind {other:?}"))),
            };
            policy = policy.then(stage);
        }
        Ok(policy)
    }
}

/// Integer with optional `_` digit separators.
pub(crate) fn parse_count(text: &str) -> Option<usize> {
    let digits: String = text.trim().chars().filter(|c| *c != '_').collect();
    digits.parse().ok()
}
