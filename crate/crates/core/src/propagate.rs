//! Pauli-rotation rules, Trotter sequencing and the imaginary-time driver.
//!
//! Conventions: an imaginary-time gate with generator `Q` and parameter `t`
//! is `V = exp(-t Q / 2)` and acts on the state as `rho -> V^dag rho V`.
//! Starting from `rho = I`, a full schedule therefore approximates
//! `exp(-tau H)`, i.e. a thermal state at inverse temperature `beta = tau`.

use std::ops::ControlFlow;
use std::time::Instant;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::Hamiltonian;
use crate::opsum::{PauliSum, Term, TruncationPolicy, DEFAULT_TRACE_EPSILON, MERGE_ZERO_TOLERANCE};
use crate::pauli::{Phase, PauliString};
use crate::scalar::Real;

/// Below this many terms a gate is always applied on the calling thread.
const PARALLEL_MIN_TERMS: usize = 1 << 14;

/// One imaginary-time factor `exp(-tau_eff / 2 * generator)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSpec<T> {
    pub generator: PauliString,
    pub tau_eff: T,
}

impl<T: Real> GateSpec<T> {
    pub fn new(generator: PauliString, tau_eff: T) -> Result<Self> {
        if generator.is_identity() {
            return Err(Error::IdentityGenerator);
        }
        Ok(GateSpec { generator, tau_eff })
    }
}

/// Trotter step size, final imaginary time and term ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleConfig<T> {
    pub delta_tau: T,
    pub tau_final: T,
    /// Permutation of the Hamiltonian's terms; `None` keeps their order.
    pub term_ordering: Option<Vec<usize>>,
}

impl<T: Real> ScheduleConfig<T> {
    pub fn new(delta_tau: T, tau_final: T) -> Result<Self> {
        if !(delta_tau > T::zero()) || !delta_tau.is_finite() {
            return Err(Error::InvalidSchedule(format!("delta_tau must be > 0, got {delta_tau}")));
        }
        if !(tau_final >= T::zero()) || !tau_final.is_finite() {
            return Err(Error::InvalidSchedule(format!("tau_final must be >= 0, got {tau_final}")));
        }
        Ok(ScheduleConfig {
            delta_tau,
            tau_final,
            term_ordering: None,
        })
    }

    pub fn with_ordering(mut self, ordering: Vec<usize>) -> Self {
        self.term_ordering = Some(ordering);
        self
    }

    /// `ceil(tau_final / delta_tau)`, treating ratios within `1e-9` of an
    /// integer as that integer so that e.g. `10 / 0.04` gives 250 steps.
    pub fn n_steps(&self) -> usize {
        let ratio = (self.tau_final / self.delta_tau).to_f64_lossy();
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        }
    }

    /// Imaginary time reached after `step` full Trotter steps.
    pub fn tau_at(&self, step: usize) -> T {
        T::from_usize(step).unwrap() * self.delta_tau
    }
}

/// Real sign multiplying the partner coefficient of an active term.
#[derive(Clone, Copy)]
enum Rule<T> {
    /// `[P, Q] = 0` splits: `cosh(t) P - sinh(t) Q P`.
    Imaginary { cosh: T, sinh: T },
    /// `{P, Q} = 0` splits: `cos(t) P + i sin(t) Q P`.
    Real { cos: T, sin: T },
}

impl<T: Real> Rule<T> {
    #[inline]
    fn is_active(&self, commutes: bool) -> bool {
        match self {
            Rule::Imaginary { .. } => commutes,
            Rule::Real { .. } => !commutes,
        }
    }

    #[inline]
    fn own(&self) -> T {
        match *self {
            Rule::Imaginary { cosh, .. } => cosh,
            Rule::Real { cos, .. } => cos,
        }
    }

    /// Coefficient of `R` produced by `c * P` where `Q P = phase * R`.
    #[inline]
    fn cross(&self, phase: Phase) -> T {
        match *self {
            Rule::Imaginary { sinh, .. } => match phase.real_sign() {
                Some(1) => -sinh,
                Some(_) => sinh,
                None => unreachable!("commuting Pauli strings have a real product phase"),
            },
            // i * (+i) = -1, i * (-i) = +1
            Rule::Real { sin, .. } => match phase.imag_sign() {
                Some(1) => -sin,
                Some(_) => sin,
                None => unreachable!("anticommuting Pauli strings have an imaginary product phase"),
            },
        }
    }
}

struct Update<T> {
    coefficient: T,
    /// Larger magnitude of the two merged contributions, zero if unmerged.
    merged: T,
    fresh: Option<(PauliString, T)>,
}

/// New coefficient of the term at `pos` (and its partner, if the partner is
/// not yet present), computed from the input state only.
#[inline]
fn plan_term<T: Real>(state: &PauliSum<T>, pos: usize, q: &PauliString, rule: &Rule<T>) -> Option<Update<T>> {
    let (p, term) = state.terms.get_index(pos).unwrap();
    if !rule.is_active(q.commutes_unchecked(p)) {
        return None;
    }
    let (phase, partner) = q.multiply_unchecked(p);
    let c = term.coefficient;
    let own = rule.own() * c;
    Some(match state.terms.get(&partner) {
        // Q * partner = conj(phase) * P
        Some(other) => {
            let cross = rule.cross(phase.conj()) * other.coefficient;
            Update {
                coefficient: own + cross,
                merged: own.abs().max(cross.abs()),
                fresh: None,
            }
        }
        None => Update {
            coefficient: own,
            merged: T::zero(),
            fresh: Some((partner, rule.cross(phase) * c)),
        },
    })
}

fn apply_rule<T: Real>(state: &PauliSum<T>, generator: &PauliString, rule: Rule<T>) -> Result<PauliSum<T>> {
    let mut out = state.clone();
    apply_rule_in_place(&mut out, generator, rule)?;
    Ok(out)
}

fn apply_rule_in_place<T: Real>(out: &mut PauliSum<T>, generator: &PauliString, rule: Rule<T>) -> Result<()> {
    let state: &PauliSum<T> = out;
    if generator.n_qubits() != state.n_qubits() {
        return Err(Error::DimensionMismatch {
            left: state.n_qubits(),
            right: generator.n_qubits(),
        });
    }
    let m = state.len();
    let plans: Vec<Option<Update<T>>> = if m >= PARALLEL_MIN_TERMS && rayon::current_num_threads() > 1 {
        (0..m)
            .into_par_iter()
            .map(|i| plan_term(state, i, generator, &rule))
            .collect()
    } else {
        (0..m).map(|i| plan_term(state, i, generator, &rule)).collect()
    };

    // merged coefficients that cancelled down to round-off of their own
    // contributions are zeroed, then all zeros are dropped
    let tol = T::lit(MERGE_ZERO_TOLERANCE);
    let mut fresh = Vec::new();
    let mut has_zero = false;
    for (pos, plan) in plans.into_iter().enumerate() {
        let value = out.terms.get_index_mut(pos).unwrap().1;
        if let Some(update) = plan {
            value.coefficient = if update.coefficient.abs() <= tol * update.merged {
                T::zero()
            } else {
                update.coefficient
            };
            if let Some((partner, c)) = update.fresh {
                if !c.is_zero() {
                    fresh.push((partner, c));
                }
            }
        }
        has_zero |= value.coefficient.is_zero();
    }
    if has_zero {
        out.terms.retain(|_, t| !t.coefficient.is_zero());
    }

    out.terms.reserve(fresh.len());
    for (p, c) in fresh {
        let index = out.next_index;
        out.next_index += 1;
        out.terms.insert(p, Term { coefficient: c, index });
    }
    debug_assert!(out.terms.values().all(|t| t.coefficient.is_finite()));
    Ok(())
}

pub(crate) fn apply_imaginary_gate_in_place<T: Real>(
    state: &mut PauliSum<T>,
    generator: &PauliString,
    tau_eff: T,
) -> Result<()> {
    apply_rule_in_place(
        state,
        generator,
        Rule::Imaginary {
            cosh: tau_eff.cosh(),
            sinh: tau_eff.sinh(),
        },
    )
}

/// Heisenberg update under `exp(-tau_eff Q / 2)`: anticommuting terms are
/// fixed, commuting ones map to `cosh(tau) P - sinh(tau) Q P`.
pub fn apply_imaginary_gate<T: Real>(state: &PauliSum<T>, generator: &PauliString, tau_eff: T) -> Result<PauliSum<T>> {
    apply_rule(
        state,
        generator,
        Rule::Imaginary {
            cosh: tau_eff.cosh(),
            sinh: tau_eff.sinh(),
        },
    )
}

/// Heisenberg update under `exp(-i theta Q / 2)`: commuting terms are fixed,
/// anticommuting ones map to `cos(theta) P + i sin(theta) Q P`.
pub fn apply_real_gate<T: Real>(state: &PauliSum<T>, generator: &PauliString, theta: T) -> Result<PauliSum<T>> {
    apply_rule(
        state,
        generator,
        Rule::Real {
            cos: theta.cos(),
            sin: theta.sin(),
        },
    )
}

/// Gates of one Trotter step, identity terms skipped.
pub fn trotter_step_gates<T: Real>(h: &Hamiltonian<T>, schedule: &ScheduleConfig<T>) -> Result<Vec<GateSpec<T>>> {
    let ordered;
    let h = match &schedule.term_ordering {
        Some(ordering) => {
            ordered = h.reordered(ordering)?;
            &ordered
        }
        None => h,
    };
    let gates: Vec<GateSpec<T>> = h
        .gated_terms()
        .map(|(alpha, p)| GateSpec {
            generator: p.clone(),
            tau_eff: *alpha * schedule.delta_tau,
        })
        .collect();
    if gates.is_empty() {
        return Err(Error::EmptyHamiltonian);
    }
    Ok(gates)
}

/// The full first-order sequence: the ordered step repeated `n_steps` times.
pub fn trotter_sequence<T: Real>(h: &Hamiltonian<T>, schedule: &ScheduleConfig<T>) -> Result<Vec<GateSpec<T>>> {
    let step = trotter_step_gates(h, schedule)?;
    let n = schedule.n_steps();
    let mut seq = Vec::with_capacity(n * step.len());
    for _ in 0..n {
        seq.extend(step.iter().cloned());
    }
    Ok(seq)
}

/// `tr(O rho) / tr(rho)`.
pub fn expectation<T: Real>(observable: &PauliSum<T>, rho: &PauliSum<T>) -> Result<T> {
    let trace = rho.normalized_trace();
    if trace.is_zero() {
        return Err(Error::TraceCollapse {
            identity: 0.0,
            epsilon: 0.0,
            step: None,
            gate: None,
        });
    }
    Ok(observable.overlap(rho)? / trace)
}

/// Estimate at doubled imaginary time from the squared state,
/// `tr((O rho) rho) / tr(rho^2)`, without forming `rho^2`.
pub fn expectation_squared_state<T: Real>(observable: &PauliSum<T>, rho: &PauliSum<T>) -> Result<T> {
    observable.check_same_width(rho)?;
    let purity = rho.purity();
    if purity.is_zero() {
        return Err(Error::DegenerateState);
    }
    let o_rho = observable.product(rho)?;
    let value = o_rho.overlap_real(rho)? / Complex::new(purity, T::zero());
    real_part_checked(value)
}

/// Real part of a scalar that must be real up to round-off.
pub fn real_part_checked<T: Real>(value: Complex<T>) -> Result<T> {
    let bound = T::lit(1e-9) * value.re.abs() + T::lit(1e-12);
    if value.im.abs() > bound {
        return Err(Error::ImaginaryResidue {
            real: value.re.to_f64_lossy(),
            imag: value.im.to_f64_lossy(),
        });
    }
    Ok(value.re)
}

/// `|E - E0| / |E0|`.
pub fn relative_error<T: Real>(energy: T, reference: T) -> Result<T> {
    if reference.is_zero() {
        return Err(Error::DivisionByZero);
    }
    Ok((energy - reference).abs() / reference.abs())
}

/// One sample of the propagated state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T> {
    /// Completed Trotter steps.
    pub step: usize,
    /// Gate within the step for per-gate samples; `None` at step boundaries.
    pub gate: Option<usize>,
    /// Accumulated imaginary time (equal to the inverse temperature).
    pub tau: T,
    pub energy: T,
    pub relative_error: Option<T>,
    pub n_terms: usize,
    pub purity: T,
    pub wall_time_s: f64,
    /// Expectation values of the extra observables, in order.
    pub observables: Vec<T>,
    /// Squared-state energy estimate, which refers to imaginary time `2 tau`.
    pub energy_doubled: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory<T> {
    pub records: Vec<TrajectoryRecord<T>>,
}

impl<T> Trajectory<T> {
    pub fn last(&self) -> Option<&TrajectoryRecord<T>> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Largest term count over the samples.
    pub fn max_terms(&self) -> usize {
        self.records.iter().map(|r| r.n_terms).max().unwrap_or(0)
    }
}

/// Final state, samples and whether an observer stopped the run early.
#[derive(Debug, Clone)]
pub struct ItppOutcome<T> {
    pub state: PauliSum<T>,
    pub trajectory: Trajectory<T>,
    pub completed_steps: usize,
    pub stopped_early: bool,
}

/// Imaginary-time Pauli propagation of the identity.
///
/// ```
/// use itpp::{build_tfim, Itpp, ScheduleConfig, TfimParams};
///
/// let h = build_tfim(&TfimParams::new(2, 1.0, 0.5)).unwrap();
/// let out = Itpp::new(&h, ScheduleConfig::new(0.04, 10.0).unwrap())
///     .run()
///     .unwrap();
/// let e = out.trajectory.last().unwrap().energy;
/// assert!((e + 2f64.sqrt()).abs() < 1e-2);
/// ```
pub struct Itpp<'a, T: Real> {
    hamiltonian: &'a Hamiltonian<T>,
    schedule: ScheduleConfig<T>,
    policy: TruncationPolicy<T>,
    observables: Vec<PauliSum<T>>,
    reference_energy: Option<T>,
    per_gate: bool,
    squared_estimator: bool,
    trace_epsilon: T,
    start: Option<(PauliSum<T>, usize)>,
    elapsed_offset: f64,
}

impl<'a, T: Real> Itpp<'a, T> {
    pub fn new(hamiltonian: &'a Hamiltonian<T>, schedule: ScheduleConfig<T>) -> Self {
        Itpp {
            hamiltonian,
            schedule,
            policy: TruncationPolicy::none(),
            observables: Vec::new(),
            reference_energy: None,
            per_gate: false,
            squared_estimator: false,
            trace_epsilon: T::from_f64(DEFAULT_TRACE_EPSILON).unwrap_or_else(T::min_positive_value),
            start: None,
            elapsed_offset: 0.0,
        }
    }

    pub fn policy(mut self, policy: TruncationPolicy<T>) -> Self {
        self.policy = policy;
        self
    }

    pub fn observables(mut self, observables: Vec<PauliSum<T>>) -> Self {
        self.observables = observables;
        self
    }

    pub fn reference_energy(mut self, e0: Option<T>) -> Self {
        self.reference_energy = e0;
        self
    }

    /// Sample after every gate instead of once per Trotter step.
    pub fn sample_every_gate(mut self, on: bool) -> Self {
        self.per_gate = on;
        self
    }

    /// Also report the squared-state energy estimate in each sample.
    pub fn squared_estimator(mut self, on: bool) -> Self {
        self.squared_estimator = on;
        self
    }

    pub fn trace_epsilon(mut self, epsilon: T) -> Self {
        self.trace_epsilon = epsilon;
        self
    }

    /// Continue from a stored state after `completed_steps` Trotter steps.
    pub fn resume_from(mut self, state: PauliSum<T>, completed_steps: usize, elapsed_s: f64) -> Self {
        self.start = Some((state, completed_steps));
        self.elapsed_offset = elapsed_s;
        self
    }

    pub fn run(self) -> Result<ItppOutcome<T>> {
        self.run_with(|_, _| ControlFlow::Continue(()))
    }

    /// Runs the schedule, handing every sample and the state it was taken
    /// from to `observer`. Returning `Break` stops after that sample.
    pub fn run_with<F>(self, mut observer: F) -> Result<ItppOutcome<T>>
    where
        F: FnMut(&TrajectoryRecord<T>, &PauliSum<T>) -> ControlFlow<()>,
    {
        let n = self.hamiltonian.n_qubits();
        let gates = trotter_step_gates(self.hamiltonian, &self.schedule)?;
        for o in &self.observables {
            if o.n_qubits() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: o.n_qubits(),
                });
            }
        }
        let h_sum = self.hamiltonian.to_pauli_sum();
        let clock = Instant::now();
        let n_steps = self.schedule.n_steps();
        let n_gates = T::from_usize(gates.len()).unwrap();

        let (mut state, first_step) = match &self.start {
            Some((s, k)) => (s.clone(), *k),
            None => (PauliSum::identity(n), 0),
        };
        if state.n_qubits() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: state.n_qubits(),
            });
        }

        let mut trajectory = Trajectory::default();
        let sample = |state: &PauliSum<T>, step: usize, gate: Option<usize>, tau: T| -> Result<TrajectoryRecord<T>> {
            let energy = expectation(&h_sum, state)?;
            let relative_error = match self.reference_energy {
                Some(e0) => Some(relative_error(energy, e0)?),
                None => None,
            };
            let observables = self
                .observables
                .iter()
                .map(|o| expectation(o, state))
                .collect::<Result<Vec<_>>>()?;
            let energy_doubled = if self.squared_estimator {
                Some(expectation_squared_state(&h_sum, state)?)
            } else {
                None
            };
            Ok(TrajectoryRecord {
                step,
                gate,
                tau,
                energy,
                relative_error,
                n_terms: state.len(),
                purity: state.purity(),
                wall_time_s: self.elapsed_offset + clock.elapsed().as_secs_f64(),
                observables,
                energy_doubled,
            })
        };

        if self.start.is_none() {
            let rec = sample(&state, 0, None, T::zero())?;
            let flow = observer(&rec, &state);
            trajectory.records.push(rec);
            if flow.is_break() {
                return Ok(ItppOutcome {
                    state,
                    trajectory,
                    completed_steps: 0,
                    stopped_early: n_steps > 0,
                });
            }
        }

        let skip_truncation = self.policy.is_noop();
        for step in first_step + 1..=n_steps {
            for (g, gate) in gates.iter().enumerate() {
                let mut next = state;
                apply_imaginary_gate_in_place(&mut next, &gate.generator, gate.tau_eff)?;
                if !skip_truncation {
                    next.truncate_in_place(&self.policy);
                }
                state = next.normalize_by_trace_with(self.trace_epsilon).map_err(|e| match e {
                    Error::TraceCollapse { identity, epsilon, .. } => Error::TraceCollapse {
                        identity,
                        epsilon,
                        step: Some(step),
                        gate: Some(g),
                    },
                    other => other,
                })?;
                if self.per_gate && g + 1 < gates.len() {
                    let frac = T::from_usize(g + 1).unwrap() / n_gates;
                    let tau = self.schedule.tau_at(step - 1) + frac * self.schedule.delta_tau;
                    let rec = sample(&state, step - 1, Some(g), tau)?;
                    let flow = observer(&rec, &state);
                    trajectory.records.push(rec);
                    if flow.is_break() {
                        return Ok(ItppOutcome {
                            state,
                            trajectory,
                            completed_steps: step - 1,
                            stopped_early: true,
                        });
                    }
                }
            }
            let rec = sample(&state, step, None, self.schedule.tau_at(step))?;
            let flow = observer(&rec, &state);
            trajectory.records.push(rec);
            if flow.is_break() {
                return Ok(ItppOutcome {
                    state,
                    trajectory,
                    completed_steps: step,
                    stopped_early: step < n_steps,
                });
            }
        }
        Ok(ItppOutcome {
            state,
            trajectory,
            completed_steps: n_steps.max(first_step),
            stopped_early: false,
        })
    }
}

/// Convenience wrapper around [`Itpp`].
pub fn run_itpp<T: Real>(
    hamiltonian: &Hamiltonian<T>,
    schedule: &ScheduleConfig<T>,
    policy: &TruncationPolicy<T>,
    observables: &[PauliSum<T>],
    reference_energy: Option<T>,
) -> Result<(PauliSum<T>, Trajectory<T>)> {
    let out = Itpp::new(hamiltonian, schedule.clone())
        .policy(policy.clone())
        .observables(observables.to_vec())
        .reference_energy(reference_energy)
        .run()?;
    Ok((out.state, out.trajectory))
}
