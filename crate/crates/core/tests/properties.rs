use itpp::oracle::{imaginary_conjugation, real_conjugation, DenseOperator, C64};
use itpp::{apply_imaginary_gate, apply_real_gate, Pauli, PauliString, PauliSum, Phase, TruncationPolicy};
use nalgebra::DMatrix;
use proptest::prelude::*;

const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

fn all_strings(n: usize) -> Vec<PauliString> {
    (0..4usize.pow(n as u32))
        .map(|mut code| {
            let letters: Vec<(usize, Pauli)> = (0..n)
                .map(|q| {
                    let l = LETTERS[code % 4];
                    code /= 4;
                    (q, l)
                })
                .collect();
            PauliString::from_sparse(n, &letters)
        })
        .collect()
}

fn pauli_string(n: usize) -> impl Strategy<Value = PauliString> {
    proptest::collection::vec(0usize..4, n).prop_map(move |codes| {
        let letters: Vec<(usize, Pauli)> = codes.iter().enumerate().map(|(q, &c)| (q, LETTERS[c])).collect();
        PauliString::from_sparse(n, &letters)
    })
}

fn sized_string() -> impl Strategy<Value = PauliString> {
    (1usize..=8).prop_flat_map(pauli_string)
}

fn pair() -> impl Strategy<Value = (PauliString, PauliString)> {
    (1usize..=8).prop_flat_map(|n| (pauli_string(n), pauli_string(n)))
}

fn pauli_sum(n: usize, max_terms: usize) -> impl Strategy<Value = PauliSum<f64>> {
    proptest::collection::vec((pauli_string(n), -1.0f64..1.0), 1..=max_terms).prop_map(move |terms| {
        let mut s = PauliSum::new(n);
        for (p, c) in terms {
            s.add_term(p, c).unwrap();
        }
        s
    })
}

fn dense(p: &PauliString) -> DMatrix<C64> {
    DenseOperator::from_pauli(p).matrix
}

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_product(p: &PauliString, q: &PauliString) {
    let (phase, r) = p.multiply(q).unwrap();
    let lhs = dense(p) * dense(q);
    let rhs = dense(&r) * phase.to_complex::<f64>();
    assert!(max_diff(&lhs, &rhs) == 0.0, "{p} * {q} != {phase} {r}");
    let comm = dense(p) * dense(q) - dense(q) * dense(p);
    let commutes = comm.iter().all(|z| z.norm() == 0.0);
    assert_eq!(p.commutes(q).unwrap(), commutes, "{p} vs {q}");
}

#[test]
fn products_match_dense_exhaustively() {
    for n in 1..=3 {
        let all = all_strings(n);
        for p in &all {
            for q in &all {
                check_product(p, q);
            }
        }
    }
}

fn sum_to_dense(s: &PauliSum<f64>) -> DMatrix<C64> {
    DenseOperator::from_pauli_sum(s).matrix
}

fn complex_to_dense(s: &itpp::ComplexPauliSum<f64>) -> DMatrix<C64> {
    DenseOperator::from_complex_terms(s.n_qubits(), s.iter().map(|(p, c)| (p, C64::new(c.re, c.im)))).matrix
}

fn check_imaginary_rule(p: &PauliString, q: &PauliString, tau: f64) {
    let mut s = PauliSum::new(p.n_qubits());
    s.add_term(p.clone(), 1.0).unwrap();
    let out = apply_imaginary_gate(&s, q, tau).unwrap();
    let expect = imaginary_conjugation(q, tau, &dense(p));
    let err = max_diff(&sum_to_dense(&out), &expect);
    assert!(err <= 1e-12, "P={p} Q={q} tau={tau} err={err}");
}

fn check_real_rule(p: &PauliString, q: &PauliString, theta: f64) {
    let mut s = PauliSum::new(p.n_qubits());
    s.add_term(p.clone(), 1.0).unwrap();
    let out = apply_real_gate(&s, q, theta).unwrap();
    let expect = real_conjugation(q, theta, &dense(p));
    let err = max_diff(&sum_to_dense(&out), &expect);
    assert!(err <= 1e-12, "P={p} Q={q} theta={theta} err={err}");
}

const TAUS: [f64; 6] = [0.04, -0.04, 0.5, -0.5, 2.0, -2.0];

#[test]
fn gate_rules_match_dense_exhaustively() {
    for n in 1..=3 {
        let all = all_strings(n);
        for p in &all {
            for q in all.iter().filter(|q| !q.is_identity()) {
                for &t in &TAUS {
                    check_imaginary_rule(p, q, t);
                    check_real_rule(p, q, t);
                }
            }
        }
    }
}

#[test]
fn anticommuting_terms_are_fixed_points() {
    let all = all_strings(2);
    for p in &all {
        for q in all.iter().filter(|q| !q.is_identity()) {
            let mut s = PauliSum::<f64>::new(2);
            s.add_term(p.clone(), 0.3).unwrap();
            let out = apply_imaginary_gate(&s, q, 0.7).unwrap();
            if !p.commutes(q).unwrap() {
                assert_eq!(out, s);
                assert_eq!(out.coefficient(p).to_bits(), 0.3f64.to_bits());
            } else {
                assert_eq!(out.len(), 2, "{p} under {q}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn products_match_dense((p, q) in pair()) {
        check_product(&p, &q);
    }

    #[test]
    fn product_symmetry((p, q) in pair()) {
        let (a, r1) = p.multiply(&q).unwrap();
        let (b, r2) = q.multiply(&p).unwrap();
        prop_assert_eq!(&r1, &r2);
        if p.commutes(&q).unwrap() {
            prop_assert_eq!(a, b);
        } else {
            prop_assert_eq!(a, b * Phase::MINUS_ONE);
        }
    }

    #[test]
    fn identity_is_neutral(p in sized_string()) {
        let id = PauliString::identity(p.n_qubits());
        prop_assert_eq!(p.multiply(&id).unwrap(), (Phase::ONE, p.clone()));
        prop_assert!(p.commutes(&id).unwrap());
    }

    #[test]
    fn text_and_hex_round_trip(p in sized_string()) {
        let text = p.to_string();
        prop_assert_eq!(&PauliString::from_text(&text).unwrap(), &p);
        let (x, z) = p.to_hex();
        prop_assert_eq!(&PauliString::from_hex(p.n_qubits(), &x, &z).unwrap(), &p);
    }

    #[test]
    fn gate_rules_match_dense((p, q) in pair(), t in prop::sample::select(TAUS.to_vec())) {
        prop_assume!(!q.is_identity());
        check_imaginary_rule(&p, &q, t);
        check_real_rule(&p, &q, t);
    }

    #[test]
    fn gates_invert_and_bound_growth(s in pauli_sum(4, 12), q in pauli_string(4), t in -2.0f64..2.0) {
        prop_assume!(!q.is_identity());
        let fwd = apply_imaginary_gate(&s, &q, t).unwrap();
        prop_assert!(fwd.len() <= 2 * s.len());
        let back = apply_imaginary_gate(&fwd, &q, -t).unwrap();
        let scale = s.max_abs().max(1.0) * t.cosh().powi(2);
        for (p, c) in s.iter() {
            prop_assert!((back.coefficient(p) - c).abs() <= 1e-12 * scale);
        }
        for (p, c) in back.iter() {
            prop_assert!((s.coefficient(p) - c).abs() <= 1e-12 * scale);
        }
        let rot = apply_real_gate(&s, &q, t).unwrap();
        prop_assert!(rot.len() <= 2 * s.len());
    }

    #[test]
    fn overlap_and_purity(a in pauli_sum(3, 10), b in pauli_sum(3, 10)) {
        prop_assert!((a.overlap(&b).unwrap() - b.overlap(&a).unwrap()).abs() <= 1e-15);
        prop_assert_eq!(a.purity(), a.overlap(&a).unwrap());
        let dense_overlap = (sum_to_dense(&a) * sum_to_dense(&b)).trace().re / 8.0;
        prop_assert!((dense_overlap - a.overlap(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn product_matches_dense(a in pauli_sum(3, 8), b in pauli_sum(3, 8)) {
        let prod = a.product(&b).unwrap();
        let err = max_diff(&complex_to_dense(&prod), &(sum_to_dense(&a) * sum_to_dense(&b)));
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn product_is_associative(a in pauli_sum(3, 6), b in pauli_sum(3, 6), c in pauli_sum(3, 6)) {
        let left = a.product(&b).unwrap().product(&c.to_complex()).unwrap();
        let right = a.to_complex().product(&b.product(&c).unwrap()).unwrap();
        let err = max_diff(&complex_to_dense(&left), &complex_to_dense(&right));
        prop_assert!(err <= 1e-12);
    }

    #[test]
    fn truncation_never_grows(a in pauli_sum(4, 20), delta in 0.0f64..1.0, k in 0usize..25, w in 0usize..5) {
        for policy in [
            TruncationPolicy::threshold(delta),
            TruncationPolicy::fixed_k(k),
            TruncationPolicy::weight(w),
            TruncationPolicy::threshold(delta).then(itpp::Truncation::FixedK(k)),
        ] {
            prop_assert!(a.clone().truncate(&policy).len() <= a.len());
        }
        prop_assert_eq!(&a.clone().truncate(&TruncationPolicy::none()), &a);
        prop_assert_eq!(&a.clone().truncate(&TruncationPolicy::threshold(0.0)), &a);
        prop_assert!(a.clone().truncate(&TruncationPolicy::fixed_k(k)).len() <= k);
    }

    #[test]
    fn fixed_k_is_stable(a in pauli_sum(4, 20), k in 1usize..20) {
        prop_assume!(a.len() >= k);
        let kept = a.clone().truncate(&TruncationPolicy::fixed_k(k));
        // smallest kept magnitude, latest insertion among equals
        let (victim, _) = kept
            .iter_terms()
            .min_by(|x, y| {
                x.1.coefficient.abs().partial_cmp(&y.1.coefficient.abs()).unwrap().then(y.1.index.cmp(&x.1.index))
            })
            .map(|(p, t)| (p.clone(), *t))
            .unwrap();
        let smaller = a.clone().truncate(&TruncationPolicy::fixed_k(k - 1));
        let mut expect: Vec<_> = kept.iter().filter(|(p, _)| **p != victim).map(|(p, _)| p.clone()).collect();
        let mut got: Vec<_> = smaller.iter().map(|(p, _)| p.clone()).collect();
        expect.sort();
        got.sort();
        prop_assert_eq!(got, expect);
    }

    #[test]
    fn normalization_is_idempotent(a in pauli_sum(3, 10), c in 0.1f64..3.0) {
        let mut a = a;
        a.add_term(PauliString::identity(3), c).unwrap();
        prop_assume!(a.normalized_trace().abs() > 1e-6);
        let once = a.normalize_by_trace().unwrap();
        prop_assert_eq!(once.normalized_trace(), 1.0);
        let twice = once.clone().normalize_by_trace().unwrap();
        prop_assert_eq!(twice, once);
    }
}
