//! Randomized invariants.  Each property is a theorem (or an exact
//! contract of the implementation), so a single counterexample is a
//! bug — shrunk cases are reported by proptest as usual.

use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ramlab_core::breaks::{
    irat_check, lower_to_upper, nu_to_lower, nu_to_upper, parse_breaks_json, phi_eval, psi_eval_upper,
    upper_to_lower, validate_upper, BreaksData, NuSequence, UpperBreaks,
};
use ramlab_core::exactmath::{
    certified_floor, pow_rational, BigInt, BigRational, CertifiedReal,
};
use ramlab_core::heights::{ht3_estimate, Ht3Verdict};
use ramlab_core::nottingham::{
    comp_inverse, comp_power, compose, ram_number, ram_sequence, FieldSpec, RamResult, WildSeries,
};

fn big(v: i64) -> BigInt {
    BigInt::from(v)
}

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

/// A small prime for break arithmetic.
fn prime() -> impl Strategy<Value = i64> {
    prop::sample::select(vec![2i64, 3, 5, 7])
}

/// A prime small enough for series work at truncation ≤ 48.
fn series_prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![2u64, 3, 5])
}

/// A valid upper-break sequence: `p ∤ a_0`, growth at least `p`-fold,
/// and `p ∤ a_{n+1}` whenever the growth is strict.
fn valid_upper() -> impl Strategy<Value = (i64, Vec<i64>)> {
    (prime(), 1usize..7, prop::collection::vec((any::<bool>(), 1i64..40), 8), 1i64..60).prop_map(
        |(p, len, choices, seed)| {
            let mut a0 = seed;
            if a0 % p == 0 {
                a0 += 1;
            }
            let mut a = vec![a0];
            for (strict, extra) in choices.into_iter().take(len) {
                let prev = *a.last().expect("nonempty");
                let next = if strict {
                    let mut cand = p * prev + extra;
                    if cand % p == 0 {
                        cand += 1;
                    }
                    cand
                } else {
                    p * prev
                };
                a.push(next);
            }
            (p, a)
        },
    )
}

/// A valid ν sequence: ν_0 ≥ 1 with p ∤ ν_0; each later entry is zero
/// or a positive non-multiple of p.
fn nu_sequence() -> impl Strategy<Value = (i64, Vec<i64>)> {
    (prime(), 1i64..25, prop::collection::vec(0i64..12, 0..6)).prop_map(|(p, first, rest)| {
        let mut nu0 = first;
        if nu0 % p == 0 {
            nu0 += 1;
        }
        let mut nu = vec![nu0];
        nu.extend(rest.into_iter().map(|v| if v > 0 && v % p == 0 { v + 1 } else { v }));
        (p, nu)
    })
}

/// A random wild series as (p, truncation, seed); materialized inside
/// the property so shrinking stays on plain integers.
fn series_params() -> impl Strategy<Value = (u64, usize, u64)> {
    (series_prime(), 24usize..48, any::<u64>())
}

fn make_series(p: u64, n: usize, seed: u64, stream: u64) -> WildSeries {
    let field = FieldSpec::gf(p).expect("small prime");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    WildSeries::random(&field, n, None, &mut rng).expect("valid parameters")
}

// ---------------------------------------------------------------------------
// Exact arithmetic
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The enclosure of p^{u/v}, raised to the v-th power, must
    /// bracket p^u exactly.
    #[test]
    fn pow_rational_brackets_the_root(p in prime(), u in 1i64..12, v in 1i64..5) {
        let exponent = BigRational::new(big(u), big(v));
        let value = pow_rational(&big(p), &exponent)
            .and_then(|c| c.refined(96))
            .expect("within precision cap");
        let (lo, hi) = value.bounds_rational();
        prop_assert!(lo <= hi);
        let target = BigRational::from(num_traits::pow::pow(big(p), u as usize));
        let vp = v as usize;
        let lo_v = num_traits::pow::pow(lo, vp);
        let hi_v = num_traits::pow::pow(hi, vp);
        prop_assert!(lo_v <= target && target <= hi_v,
            "p^u escapes the v-th power of the enclosure");
    }

    /// certified_floor returns the integer n with n ≤ x < n+1.
    #[test]
    fn certified_floor_postcondition(p in prime(), u in 1i64..10, v in 2i64..5) {
        let exponent = BigRational::new(big(u), big(v));
        let x = pow_rational(&big(p), &exponent).expect("valid base");
        let n = certified_floor(&x).expect("not an exact-integer boundary");
        let (lo, hi) = x.refined(96).expect("within cap").bounds_rational();
        let n_q = BigRational::from(n.clone());
        let n1_q = BigRational::from(&n + BigInt::one());
        // The true value lies in [lo, hi]; the floor contract then
        // demands n ≤ hi and lo < n+1.
        prop_assert!(n_q <= hi && lo < n1_q, "floor {n} incompatible with enclosure");
    }

    /// Sums and products of certified values keep enclosing the
    /// rational they were built from.
    #[test]
    fn certified_arithmetic_encloses(a in -40i64..40, b in -40i64..40, d in 1i64..9) {
        let qa = BigRational::new(big(a), big(d));
        let qb = BigRational::new(big(b), big(d));
        let ca = CertifiedReal::from_rational(qa.clone());
        let cb = CertifiedReal::from_rational(qb.clone());
        let sum = ca.add(&cb);
        let prod = ca.mul(&cb);
        let (slo, shi) = sum.bounds_rational();
        let (plo, phi_) = prod.bounds_rational();
        let qs = &qa + &qb;
        let qp = &qa * &qb;
        prop_assert!(slo <= qs && qs <= shi);
        prop_assert!(plo <= qp && qp <= phi_);
    }
}

// ---------------------------------------------------------------------------
// Break conversions
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// lower_to_upper inverts upper_to_lower exactly on valid data.
    #[test]
    fn conversion_round_trip((p, a) in valid_upper()) {
        let upper = UpperBreaks::new(big(p), a.iter().map(|&v| big(v)).collect())
            .expect("strategy yields increasing data");
        prop_assert!(validate_upper(&upper).is_ok(), "strategy yields valid data");
        let lower = upper_to_lower(&upper);
        let back = lower_to_upper(&lower).expect("round trip stays convertible");
        prop_assert_eq!(back.values(), upper.values());
    }

    /// The two computations of the lower breaks from ν agree: the
    /// closed form inside nu_to_lower and the composite
    /// upper_to_lower(nu_to_upper(ν)).
    #[test]
    fn nu_paths_agree((p, nu) in nu_sequence()) {
        let s = NuSequence::new(big(p), nu.iter().map(|&v| big(v)).collect())
            .expect("strategy yields positive leading entry");
        let direct = nu_to_lower(&s);
        let via_upper = upper_to_lower(&nu_to_upper(&s));
        prop_assert_eq!(direct.values(), via_upper.values());
    }

    /// The constructed upper breaks of any ν sequence validate, and
    /// satisfy a_n ≥ pⁿ.
    #[test]
    fn nu_upper_validates((p, nu) in nu_sequence()) {
        let s = NuSequence::new(big(p), nu.iter().map(|&v| big(v)).collect())
            .expect("strategy yields positive leading entry");
        let upper = nu_to_upper(&s);
        prop_assert!(validate_upper(&upper).is_ok());
        for (n, a_n) in upper.values().iter().enumerate() {
            prop_assert!(a_n >= &num_traits::pow::pow(big(p), n));
        }
    }

    /// irat residuals vanish identically on valid ν data.
    #[test]
    fn irat_residuals_vanish((p, nu) in nu_sequence()) {
        let s = NuSequence::new(big(p), nu.iter().map(|&v| big(v)).collect())
            .expect("strategy yields positive leading entry");
        for r in irat_check(&s) {
            prop_assert!(r.is_zero(), "nonzero residual {r}");
        }
    }

    /// φ and ψ are mutually inverse: ψ(φ(x)) = x at random rational
    /// points inside the data range (and exactly at the breaks).
    #[test]
    fn phi_psi_mutually_inverse((p, a) in valid_upper(), num in 0i64..1000, den in 1i64..8) {
        let upper = UpperBreaks::new(big(p), a.iter().map(|&v| big(v)).collect())
            .expect("valid by construction");
        let lower = upper_to_lower(&upper);
        let b_last = lower.values().last().expect("nonempty").clone();
        // A rational point in [0, b_last].
        let x = BigRational::new(big(num), big(den * 1000)) * BigRational::from(b_last);
        let phi_x = phi_eval(&lower, &x, false).expect("in range");
        let back = psi_eval_upper(&upper, &phi_x, false).expect("in range");
        prop_assert_eq!(&back, &x, "psi(phi(x)) != x at x = {}", x);
        // Exactness at every break point.
        for (b_n, a_n) in lower.values().iter().zip(upper.values()) {
            let img = phi_eval(&lower, &BigRational::from(b_n.clone()), false).expect("in range");
            prop_assert_eq!(&img, &BigRational::from(a_n.clone()));
        }
    }

    /// JSON round-trip: every payload kind parses back to itself.
    #[test]
    fn json_round_trip((p, a) in valid_upper()) {
        let upper = UpperBreaks::new(big(p), a.iter().map(|&v| big(v)).collect())
            .expect("valid by construction");
        let lower = upper_to_lower(&upper);
        match parse_breaks_json(&upper.to_json()).expect("upper parses") {
            BreaksData::Upper(u) => prop_assert_eq!(u.values(), upper.values()),
            other => prop_assert!(false, "wrong kind {other:?}"),
        }
        match parse_breaks_json(&lower.to_json()).expect("lower parses") {
            BreaksData::Lower(l) => prop_assert_eq!(l.values(), lower.values()),
            other => prop_assert!(false, "wrong kind {other:?}"),
        }
    }

    /// The ratio-limit estimator is invariant under dropping a short
    /// head of the data: verdicts from the full sequence and from a
    /// one-step tail agree when both are consistent.
    #[test]
    fn ht3_tail_stability(p in prop::sample::select(vec![2i64, 3])) {
        // Geometric family data is long enough for both windows.
        let report = ramlab_core::constructions::construct_h2(&big(p), 24)
            .expect("constructible");
        let lower = report.lower.expect("present");
        let full = ht3_estimate(&lower, 4, 1e-3).expect("enough data");
        let tail_values = lower.values()[1..].to_vec();
        let tail = ramlab_core::breaks::LowerBreaks::new_relaxed(big(p), tail_values)
            .expect("still increasing");
        let shifted = ht3_estimate(&tail, 4, 1e-3).expect("enough data");
        match (full.verdict, shifted.verdict) {
            (Ht3Verdict::Consistent { h: h1, .. }, Ht3Verdict::Consistent { h: h2, .. }) => {
                prop_assert!((h1 - h2).abs() < 1e-6, "tail shift moved the estimate");
            }
            (a, b) => prop_assert!(false, "unexpected verdicts {a:?} / {b:?}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Series composition and ramification
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Composition is associative: (f∘g)∘h = f∘(g∘h).
    #[test]
    fn composition_associative((p, n, seed) in series_params()) {
        let f = make_series(p, n, seed, 1);
        let g = make_series(p, n, seed, 2);
        let h = make_series(p, n, seed, 3);
        let left = compose(&compose(&f, &g).expect("same field"), &h).expect("same field");
        let right = compose(&f, &compose(&g, &h).expect("same field")).expect("same field");
        prop_assert_eq!(left, right);
    }

    /// f ∘ f⁻¹ = f⁻¹ ∘ f = identity.
    #[test]
    fn inverse_cancels((p, n, seed) in series_params()) {
        let f = make_series(p, n, seed, 1);
        let inv = comp_inverse(&f).expect("wild series invert");
        let id = WildSeries::identity(f.field(), n).expect("identity");
        prop_assert_eq!(compose(&f, &inv).expect("same field"), id.clone());
        prop_assert_eq!(compose(&inv, &f).expect("same field"), id);
    }

    /// comp_power agrees with repeated composition.
    #[test]
    fn power_matches_iteration((p, n, seed) in series_params(), k in 1i64..6) {
        let f = make_series(p, n, seed, 1);
        let fast = comp_power(&f, &big(k)).expect("positive power");
        let mut slow = WildSeries::identity(f.field(), n).expect("identity");
        for _ in 0..k {
            slow = compose(&slow, &f).expect("same field");
        }
        prop_assert_eq!(fast, slow);
    }

    /// The ultrametric law: i(στ) ≥ min(i(σ), i(τ)), with equality
    /// under strict inequality of the arguments.
    #[test]
    fn ultrametric_law((p, n, seed) in series_params()) {
        let f = make_series(p, n, seed, 1);
        let g = make_series(p, n, seed, 2);
        let fg = compose(&f, &g).expect("same field");
        if let (RamResult::Definite(a), RamResult::Definite(b), RamResult::Definite(c)) =
            (ram_number(&f), ram_number(&g), ram_number(&fg))
        {
            prop_assert!(c >= a.min(b), "i(fg) = {c} below min({a}, {b})");
            if a != b {
                prop_assert_eq!(c, a.min(b), "strict case must be equality");
            }
        }
    }

    /// Conjugation preserves the whole ramification sequence.
    #[test]
    fn conjugation_preserves_sequence((p, n, seed) in series_params()) {
        let f = make_series(p, n, seed, 1);
        let g = make_series(p, n, seed, 2);
        let conj = compose(&compose(&g, &f).expect("same field"), &comp_inverse(&g).expect("wild"))
            .expect("same field");
        let levels = 2usize;
        let a = ram_sequence(&f, levels).expect("levels fit");
        let b = ram_sequence(&conj, levels).expect("levels fit");
        prop_assert_eq!(a, b);
    }

    /// The power rule: for p ∤ u, the sequence of σ^{u·p^w} is the
    /// w-shifted sequence of σ.
    #[test]
    fn power_rule_shifts((p, n, seed) in series_params(), w in 0usize..2) {
        let f = make_series(p, n, seed, 1);
        let u = if p == 2 { 3i64 } else { 2 };
        let exponent = big(u) * num_traits::pow::pow(big(p as i64), w);
        let g = comp_power(&f, &exponent).expect("positive power");
        let base = ram_sequence(&f, 2 + w).expect("levels fit");
        let shifted = ram_sequence(&g, 2).expect("levels fit");
        for (m, got) in shifted.iter().enumerate() {
            prop_assert_eq!(*got, base[m + w], "level {} after shift {}", m, w);
        }
    }
}
