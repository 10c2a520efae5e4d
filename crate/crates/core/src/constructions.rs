//! Constructions of wild automorphisms with prescribed heights.
//!
//! Each constructor here produces break data for a family with a
//! known asymptotic profile, together with a battery of exact
//! self-checks derived from the theorems the family witnesses:
//!
//! * [`construct_h1_synthetic`] — the characteristic-zero pattern
//!   `i_n = A + B·pⁿ` (height 1), whose *upper* breaks form an
//!   arithmetic progression and therefore fail the characteristic-`p`
//!   validation: the failure is itself the theorem being checked.
//! * [`construct_h2`] — the geometric family `aₙ = pⁿ` of height 2
//!   with scaled limit `p/(p+1)`.
//! * [`construct_h_gt2`] — for every rational `h > 2`, a greedy
//!   sequence tracking the ideal sum `S_n = (p^{h(n+1)}−1)/(p^h−1)`
//!   with height `h` and scaled limit `p^h/(p^h−1)`.
//! * [`construct_ex_3not2`] — a family whose ratio-limit height is 2
//!   while `i_n/p^{2n}` diverges: the third notion without the
//!   second.
//! * [`construct_ex_2not1`] — a family with scaled limit at `h = 3`
//!   whose difference ratios never become constant: the second
//!   notion without the first.
//! * [`construct_ex1`] — a rank-2 group generated by σ₁ of height 7
//!   and σ₂ of the fractional height 7/2, built from an explicit
//!   index function whose thresholds involve the quadratic irrational
//!   `α = p^{3/2}(p^{5/2}+p)/(p^{5/2}+1)`; exact arithmetic in
//!   `ℚ(√p)` certifies the defining identities symbolically.
//!
//! Every check is exact (rational, integer, or `ℚ(√p)` arithmetic);
//! the heights estimators enter only as *cross*-validation of data
//! whose asymptotics are known in closed form.

use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::json;

use crate::breaks::{
    irat_check, lower_to_upper, nu_to_lower, nu_to_upper, psi_eval, upper_to_lower,
    validate_upper, BreaksError, IndexFunction, LowerBreaks, NuSequence, UpperBreaks,
};
use crate::exactmath::{
    certified_compare, certified_floor, pow_rational, ratio_string, BigInt, BigRational,
    CertifiedReal, ExactError,
};
use crate::heights::{
    admissible_height, analyze_default, combine, filtration, ht1_extrapolate, ht2_estimate,
    CombineInput, CombinedHeight, FiltrationRow, HeightsError, Ht2Verdict,
};

/// Errors from the construction layer.
#[derive(Debug)]
pub enum ConstructionsError {
    /// A precondition on the parameters failed.
    Parameter(String),
    /// The construction requires odd characteristic.
    CharTwo,
    /// Propagated exact-arithmetic failure.
    Exact(ExactError),
    /// Propagated break-calculus failure.
    Breaks(BreaksError),
    /// Propagated height-estimation failure.
    Heights(HeightsError),
    /// A self-check failed; the full report is attached so the
    /// failure can be inspected.  Checks encode theorems, so this
    /// means a bug or genuinely contradictory data — it is never
    /// silently downgraded.
    CheckFailed { name: String, report: Box<ConstructionReport> },
}

impl fmt::Display for ConstructionsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstructionsError::Parameter(msg) => write!(f, "bad parameter: {msg}"),
            ConstructionsError::CharTwo => {
                write!(f, "this construction requires p > 2")
            }
            ConstructionsError::Exact(e) => write!(f, "exact arithmetic: {e}"),
            ConstructionsError::Breaks(e) => write!(f, "break calculus: {e}"),
            ConstructionsError::Heights(e) => write!(f, "height estimation: {e}"),
            ConstructionsError::CheckFailed { name, .. } => {
                write!(f, "self-check {name:?} failed (see attached report)")
            }
        }
    }
}

impl std::error::Error for ConstructionsError {}

impl From<ExactError> for ConstructionsError {
    fn from(e: ExactError) -> Self {
        ConstructionsError::Exact(e)
    }
}

impl From<BreaksError> for ConstructionsError {
    fn from(e: BreaksError) -> Self {
        ConstructionsError::Breaks(e)
    }
}

impl From<HeightsError> for ConstructionsError {
    fn from(e: HeightsError) -> Self {
        ConstructionsError::Heights(e)
    }
}

/// One named self-check with a human-readable witness.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub witness: String,
}

/// Everything a constructor produced: the break data (whichever
/// shapes apply), the self-checks, and the family's asymptotic
/// targets.  Limits are stored as enclosures `[lo, hi]` (degenerate
/// when the target is rational).
#[derive(Clone, Debug, Default)]
pub struct ConstructionReport {
    pub name: String,
    pub p: BigInt,
    pub upper: Option<UpperBreaks>,
    pub lower: Option<LowerBreaks>,
    pub nu: Option<NuSequence>,
    pub checks: Vec<Check>,
    pub target_height: Option<BigRational>,
    pub target_limit: Option<(BigRational, BigRational)>,
    /// The rank-2 example's explicit step function.
    pub index_function: Option<IndexFunction>,
    /// Per-generator ramification sequences (rank ≥ 2 families).
    pub generators: Vec<(String, LowerBreaks)>,
    /// Enclosure of the quadratic irrational α (rank-2 example).
    pub alpha: Option<(BigRational, BigRational)>,
    /// The adjusted ceiling sequence `c_n` (rank-2 example).
    pub c_sequence: Option<Vec<BigInt>>,
    /// Filtration ranks at the generators' heights (rank-2 example).
    pub filtration: Option<Vec<FiltrationRow>>,
}

impl ConstructionReport {
    fn check(&mut self, name: &str, pass: bool, witness: String) {
        self.checks.push(Check { name: name.to_string(), pass, witness });
    }

    /// `Ok(self)` when every check passed, otherwise
    /// [`ConstructionsError::CheckFailed`] naming the first failure.
    fn gate(self) -> Result<ConstructionReport, ConstructionsError> {
        match self.checks.iter().find(|c| !c.pass) {
            None => Ok(self),
            Some(c) => Err(ConstructionsError::CheckFailed {
                name: c.name.clone(),
                report: Box::new(self.clone()),
            }),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        let seq = |values: &[BigInt]| -> Vec<String> {
            values.iter().map(|v| v.to_string()).collect()
        };
        let mut obj = json!({
            "name": self.name,
            "p": self.p.to_string(),
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "pass": c.pass,
                "witness": c.witness,
            })).collect::<Vec<_>>(),
        });
        if let Some(u) = &self.upper {
            obj["upper"] = json!(seq(u.values()));
        }
        if let Some(l) = &self.lower {
            obj["lower"] = json!(seq(l.values()));
        }
        if let Some(nu) = &self.nu {
            obj["nu"] = json!(seq(nu.values()));
        }
        if let Some(h) = &self.target_height {
            obj["target_height"] = json!(ratio_string(h));
        }
        if let Some((lo, hi)) = &self.target_limit {
            obj["target_limit"] = json!([ratio_string(lo), ratio_string(hi)]);
        }
        if let Some(f) = &self.index_function {
            obj["index_function"] = serde_json::from_str(&f.to_json()).expect("valid json");
        }
        if !self.generators.is_empty() {
            obj["generators"] = json!(self
                .generators
                .iter()
                .map(|(label, b)| json!({ "label": label, "i": seq(b.values()) }))
                .collect::<Vec<_>>());
        }
        if let Some((lo, hi)) = &self.alpha {
            obj["alpha"] = json!([ratio_string(lo), ratio_string(hi)]);
        }
        if let Some(c) = &self.c_sequence {
            obj["c"] = json!(seq(c));
        }
        if let Some(rows) = &self.filtration {
            obj["filtration"] = json!(rows
                .iter()
                .map(|r| json!({
                    "h": ratio_string(&r.h),
                    "rank": r.rank,
                    "multiplicity": r.multiplicity,
                }))
                .collect::<Vec<_>>());
        }
        obj.to_string()
    }
}

fn big(x: i64) -> BigInt {
    BigInt::from(x)
}

fn rat_int(x: i64) -> BigRational {
    BigRational::from(big(x))
}

fn rat(x: BigInt) -> BigRational {
    BigRational::from(x)
}

fn pow_big(base: &BigInt, e: usize) -> BigInt {
    num_traits::pow::pow(base.clone(), e)
}

fn require_prime(p: &BigInt) -> Result<u64, ConstructionsError> {
    let small = p
        .to_u64()
        .ok_or_else(|| ConstructionsError::Parameter(format!("p = {p} is too large")))?;
    if small < 2 || (2..).take_while(|d| d * d <= small).any(|d| small % d == 0) {
        return Err(ConstructionsError::Parameter(format!("p = {small} is not prime")));
    }
    Ok(small)
}

// ---------------------------------------------------------------------------
// Height 1: the characteristic-zero pattern
// ---------------------------------------------------------------------------

/// Builds the height-1 profile `i_n = A + B·pⁿ` with `B = p·e_F` and
/// `A = c − p·e_F` for `n = 0, …, N` — the ramification shape of a
/// characteristic-zero local field with residue characteristic `p`
/// and absolute ramification index `e_F`, planted here as *synthetic*
/// lower-break data.
///
/// The corresponding upper breaks form the arithmetic progression
/// `a_n = c + n·e_F(p−1)`, which is impossible for an automorphism of
/// `k((t))`: the `char0_upper_not_char_p` check passes precisely
/// because [`validate_upper`] rejects the progression.  Requires
/// `p ∤ c` and `N ≥ 2` (a single gap can still be realizable).
pub fn construct_h1_synthetic(
    p: &BigInt,
    e_f: &BigInt,
    c: &BigInt,
    n_max: usize,
) -> Result<ConstructionReport, ConstructionsError> {
    require_prime(p)?;
    if e_f < &BigInt::one() || c < &BigInt::one() {
        return Err(ConstructionsError::Parameter("need e_F >= 1 and c >= 1".into()));
    }
    if (c % p).is_zero() {
        return Err(ConstructionsError::Parameter(format!("c = {c} must not be divisible by p")));
    }
    if n_max < 2 {
        return Err(ConstructionsError::Parameter(
            "need N >= 2: one gap alone does not separate the characteristics".into(),
        ));
    }
    let b_coef = p * e_f;
    let a_const = c - &b_coef;
    let values: Vec<BigInt> =
        (0..=n_max).map(|n| &a_const + &b_coef * pow_big(p, n)).collect();
    let lower = LowerBreaks::new(p.clone(), values)?;

    let mut report = ConstructionReport {
        name: "h1-synthetic".into(),
        p: p.clone(),
        target_height: Some(rat_int(1)),
        target_limit: Some((rat(b_coef.clone()), rat(b_coef.clone()))),
        ..Default::default()
    };

    // Exact-form detection recovers A and B.
    let model = ht1_extrapolate(&lower, 0, 1)?;
    report.check(
        "ht1_exact_form",
        model.a == rat(a_const.clone()) && model.b_coef == rat(b_coef.clone()),
        format!("A = {}, B = {}", ratio_string(&model.a), ratio_string(&model.b_coef)),
    );

    // The upper breaks are the arithmetic progression c + n·e_F(p−1).
    let upper = lower_to_upper(&lower)?;
    let step = e_f * (p - BigInt::one());
    let progression_ok = upper
        .values()
        .iter()
        .enumerate()
        .all(|(n, a_n)| *a_n == c + big(n as i64) * &step);
    report.check(
        "upper_is_arithmetic",
        progression_ok,
        format!("a_n = {c} + n*{step}"),
    );

    // …and that progression is NOT a characteristic-p break sequence.
    let verdict = validate_upper(&upper);
    report.check(
        "char0_upper_not_char_p",
        verdict.is_err(),
        match &verdict {
            Err(v) => format!("rejected as expected: {v}"),
            Ok(()) => "unexpectedly validated".into(),
        },
    );

    report.upper = Some(upper);
    report.lower = Some(lower);
    report.gate()
}

// ---------------------------------------------------------------------------
// Height 2
// ---------------------------------------------------------------------------

/// The geometric family `a_n = pⁿ`, `b_n = (p^{2n+1}+1)/(p+1)` for
/// `n = 0, …, N`: exact form at height 2 with scaled limit
/// `p/(p+1)`.
pub fn construct_h2(p: &BigInt, n_max: usize) -> Result<ConstructionReport, ConstructionsError> {
    require_prime(p)?;
    if n_max < 1 {
        return Err(ConstructionsError::Parameter("need N >= 1".into()));
    }
    let nu_values: Vec<BigInt> =
        std::iter::once(BigInt::one()).chain((1..=n_max).map(|_| BigInt::zero())).collect();
    let nu = NuSequence::new(p.clone(), nu_values)?;
    let upper = nu_to_upper(&nu);
    let lower = nu_to_lower(&nu); // asserts the closed form internally

    let p1 = p + BigInt::one();
    let target_limit = BigRational::new(p.clone(), p1.clone());

    let mut report = ConstructionReport {
        name: "h2".into(),
        p: p.clone(),
        target_height: Some(rat_int(2)),
        target_limit: Some((target_limit.clone(), target_limit.clone())),
        ..Default::default()
    };

    report.check(
        "upper_is_geometric",
        upper.values().iter().enumerate().all(|(n, a_n)| *a_n == pow_big(p, n)),
        "a_n = p^n".into(),
    );
    report.check(
        "lower_closed_form",
        lower
            .values()
            .iter()
            .enumerate()
            .all(|(n, b_n)| b_n * &p1 == pow_big(p, 2 * n + 1) + BigInt::one()),
        "b_n = (p^(2n+1)+1)/(p+1)".into(),
    );
    report.check(
        "upper_validates",
        validate_upper(&upper).is_ok(),
        "growth and coprimality conditions hold".into(),
    );

    if n_max >= 2 {
        let model = ht1_extrapolate(&lower, 0, 2)?;
        report.check(
            "ht1_exact_form",
            model.limit == target_limit
                && model.a == BigRational::new(BigInt::one(), p1.clone()),
            format!(
                "A = {}, B = {} (limit {})",
                ratio_string(&model.a),
                ratio_string(&model.b_coef),
                ratio_string(&model.limit)
            ),
        );
    }
    if n_max + 1 >= 7 {
        let ht2 = ht2_estimate(&lower, &rat_int(2), 5, 1e-6)?;
        report.check(
            "ht2_limit",
            matches!(ht2.verdict, Ht2Verdict::Consistent { .. })
                && ht2.limit_matches(&target_limit, 1e-6),
            format!("certified window around {}", ratio_string(&target_limit)),
        );
    }

    report.upper = Some(upper);
    report.lower = Some(lower);
    report.nu = Some(nu);
    report.gate()
}

// ---------------------------------------------------------------------------
// Heights above 2
// ---------------------------------------------------------------------------

/// For rational `h > 2`, builds upper breaks `a_0 < … < a_N` whose
/// lower breaks track `S_n = (p^{h(n+1)}−1)/(p^h−1)` from below:
///
/// * a seed range `0 ≤ n ≤ n₀` with `a_n = (p^{n+1}−1)/(p−1)` (so
///   `b_n = (p^{2(n+1)}−1)/(p²−1)`), where `n₀ ≥ 1` is the least
///   index at which `(p^{h−1}−1)/(p−1) ≥ 1 + 1/(p^{(h−1)n}−2)`;
/// * beyond the seeds, the greedy step: `a_n` is the largest integer
///   with `p ∤ a_n` and `a_n ≤ a_{n−1} + p^{−n}(S_n − b_{n−1})`.
///
/// The family satisfies `S_n − 2pⁿ < b_n ≤ S_n` (the strict lower
/// bound from the post-seed range on), has exact height-`h` scaled
/// limit `p^h/(p^h−1)`, and obeys `a_n ≤ (p^{(h−1)(n+1)}−1)/(p^{h−1}−1)`
/// and `a_{n+1} > p·a_n` throughout.  Fractional `h` runs on
/// certified interval arithmetic; all comparisons against the
/// irrational `S_n` refine until decided.
pub fn construct_h_gt2(
    p: &BigInt,
    h: &BigRational,
    n_max: usize,
) -> Result<ConstructionReport, ConstructionsError> {
    require_prime(p)?;
    if h <= &rat_int(2) {
        return Err(ConstructionsError::Parameter(format!(
            "need h > 2 (got {}); h = 2 is the geometric family",
            ratio_string(h)
        )));
    }
    if !admissible_height(h) {
        // Unreachable given h > 2, but keep the invariant visible.
        return Err(ConstructionsError::Parameter("inadmissible height".into()));
    }
    if n_max < 1 {
        return Err(ConstructionsError::Parameter("need N >= 1".into()));
    }

    let one = CertifiedReal::from_int(1);
    let h_minus_1 = h - BigRational::one();

    // n₀: least n ≥ 1 with (p^{h−1}−1)/(p−1) ≥ 1 + 1/(p^{(h−1)n}−2).
    let lhs = pow_rational(p, &h_minus_1)?
        .sub(&one)
        .div(&CertifiedReal::from_bigint(&(p - BigInt::one())))?;
    let mut n0 = None;
    for n in 1..=64usize {
        let power = pow_rational(p, &(&h_minus_1 * rat_int(n as i64)))?;
        let rhs = one.add(&one.div(&power.sub(&CertifiedReal::from_int(2)))?);
        if certified_compare(&lhs, &rhs)? != std::cmp::Ordering::Less {
            n0 = Some(n);
            break;
        }
    }
    let n0 = n0.ok_or_else(|| {
        ConstructionsError::Parameter("no seed boundary n0 found below 64".into())
    })?;

    // Seeds.
    let mut a: Vec<BigInt> = Vec::with_capacity(n_max + 1);
    let mut b: Vec<BigInt> = Vec::with_capacity(n_max + 1);
    for n in 0..=n0.min(n_max) {
        a.push((pow_big(p, n + 1) - BigInt::one()) / (p - BigInt::one()));
        b.push((pow_big(p, 2 * (n + 1)) - BigInt::one()) / (p * p - BigInt::one()));
    }
    // Greedy continuation.
    let p_h = pow_rational(p, h)?;
    let s_denom = p_h.sub(&one);
    let mut s_values: Vec<CertifiedReal> = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let numer = pow_rational(p, &(h * rat_int(n as i64 + 1)))?.sub(&one);
        s_values.push(numer.div(&s_denom)?);
    }
    for n in (n0 + 1)..=n_max {
        let prev_a = a[n - 1].clone();
        let prev_b = b[n - 1].clone();
        let budget = s_values[n]
            .sub(&CertifiedReal::from_bigint(&prev_b))
            .div(&CertifiedReal::from_bigint(&pow_big(p, n)))?
            .add(&CertifiedReal::from_bigint(&prev_a));
        let mut candidate = certified_floor(&budget)?;
        if (&candidate % p).is_zero() {
            candidate -= BigInt::one();
        }
        b.push(&prev_b + pow_big(p, n) * (&candidate - &prev_a));
        a.push(candidate);
    }

    let upper = UpperBreaks::new(p.clone(), a)?;
    let lower = LowerBreaks::new(p.clone(), b)?;

    let mut report = ConstructionReport {
        name: "h-gt-2".into(),
        p: p.clone(),
        target_height: Some(h.clone()),
        ..Default::default()
    };
    // Target limit p^h/(p^h−1) as an enclosure.
    {
        let limit = p_h.div(&s_denom)?.refined(128)?;
        report.target_limit = Some(limit.bounds_rational());
    }

    report.check(
        "upper_validates",
        validate_upper(&upper).is_ok(),
        format!("n0 = {n0}"),
    );
    report.check(
        "round_trip",
        upper_to_lower(&upper) == lower,
        "lower breaks match the conversion".into(),
    );

    // Strict growth a_{n+1} > p·a_n everywhere.
    let growth = upper.values().windows(2).all(|w| w[1] > p * &w[0]);
    report.check("growth_strict", growth, "a_(n+1) > p*a_n".into());

    // ν-decomposition exists (positive non-multiples of p).
    match NuSequence::new(
        p.clone(),
        std::iter::once(upper.values()[0].clone())
            .chain(upper.values().windows(2).map(|w| &w[1] - p * &w[0]))
            .collect(),
    ) {
        Ok(nu) => {
            report.check(
                "nu_round_trip",
                nu_to_upper(&nu) == upper,
                "a_n = p*a_(n-1) + nu_n".into(),
            );
            report.nu = Some(nu);
        }
        Err(e) => report.check("nu_round_trip", false, e.to_string()),
    }

    // (S_n − 2pⁿ, S_n] window: weak upper bound everywhere, strict
    // lower bound beyond the seeds.  At n = 0 the upper bound holds
    // with equality (b_0 = 1 = S_0); that case is checked rationally,
    // because two expressions with the same irrational value cannot
    // be separated by refinement.
    let mut ineq_ok = lower.values()[0] == BigInt::one();
    let mut witness = String::new();
    for (n, b_n) in lower.values().iter().enumerate().skip(1) {
        if !ineq_ok {
            witness = "b_0 != 1".into();
            break;
        }
        let b_cr = CertifiedReal::from_bigint(b_n);
        let upper_ok = certified_compare(&b_cr, &s_values[n])? != std::cmp::Ordering::Greater;
        let lower_ok = if n > n0 {
            let floor_bound =
                s_values[n].sub(&CertifiedReal::from_bigint(&(big(2) * pow_big(p, n))));
            certified_compare(&floor_bound, &b_cr)? == std::cmp::Ordering::Less
        } else {
            true
        };
        if !(upper_ok && lower_ok) {
            ineq_ok = false;
            witness = format!("violated at n = {n} (b_n = {b_n})");
            break;
        }
    }
    if ineq_ok {
        witness = format!("S_n - 2p^n < b_n <= S_n for n > {n0}; b_n <= S_n for all n");
    }
    report.check("tracking_inequality", ineq_ok, witness);

    // a_n ≤ (p^{(h−1)(n+1)}−1)/(p^{h−1}−1).  At n = 0 the bound is
    // identically 1 = a_0 (equality again, so checked rationally).
    let bound_denom = pow_rational(p, &h_minus_1)?.sub(&one);
    let mut a_bound_ok = upper.values()[0] == BigInt::one();
    for (n, a_n) in upper.values().iter().enumerate().skip(1) {
        let bound = pow_rational(p, &(&h_minus_1 * rat_int(n as i64 + 1)))?
            .sub(&one)
            .div(&bound_denom)?;
        if certified_compare(&CertifiedReal::from_bigint(a_n), &bound)?
            == std::cmp::Ordering::Greater
        {
            a_bound_ok = false;
            break;
        }
    }
    report.check(
        "a_upper_bound",
        a_bound_ok,
        "a_n <= (p^((h-1)(n+1))-1)/(p^(h-1)-1)".into(),
    );

    // Scaled limit at height h over a certified window.
    if n_max + 1 >= 7 {
        let tol = if h.is_integer() { 1e-6 } else { 1e-3 };
        let ht2 = ht2_estimate(&lower, h, 5, tol)?;
        let consistent = matches!(ht2.verdict, Ht2Verdict::Consistent { .. });
        let in_range = match (&ht2.verdict, &report.target_limit) {
            (Ht2Verdict::Consistent { limit: (lo, hi), .. }, Some((tlo, thi))) => {
                let slack = BigRational::from_float(tol).expect("finite") * thi;
                &(tlo - &slack) <= hi && lo <= &(thi + &slack)
            }
            _ => false,
        };
        report.check(
            "ht2_limit",
            consistent && in_range,
            "certified window around p^h/(p^h-1)".into(),
        );
    }

    report.upper = Some(upper);
    report.lower = Some(lower);
    report.gate()
}

// ---------------------------------------------------------------------------
// Ratio limit without scaled limit
// ---------------------------------------------------------------------------

/// The family with ratio-limit height 2 but divergent `i_n/p^{2n}`:
/// `ν_0 = 1` and for `n ≥ 1`
///
/// ```text
/// ν_n = ⌊ b_{n−1}/(n·pⁿ) + (p−1)·Σ_{j<n} p^{j−n}·ν_j ⌋ + γ_n,
/// ```
///
/// with `γ_n ∈ {0, 1}` chosen (preferring 0) so `p ∤ ν_n`.  Writing
/// `ε_n = ν_n − (floor argument)`, the ratios obey the exact identity
/// `i_n/i_{n−1} = p² + 1/n + pⁿ·ε_n/b_{n−1}`, so they converge to
/// `p²` while the harmonic `1/n` term makes `i_n/p^{2n}` grow like a
/// positive power of `n`.  All arithmetic is rational-exact.
pub fn construct_ex_3not2(
    p: &BigInt,
    n_max: usize,
) -> Result<ConstructionReport, ConstructionsError> {
    require_prime(p)?;
    if n_max < 2 {
        return Err(ConstructionsError::Parameter("need N >= 2".into()));
    }

    let mut nu: Vec<BigInt> = vec![BigInt::one()];
    let mut a: Vec<BigInt> = vec![BigInt::one()];
    let mut b: Vec<BigInt> = vec![BigInt::one()];
    let mut epsilons: Vec<BigRational> = Vec::with_capacity(n_max);

    for n in 1..=n_max {
        let p_n = pow_big(p, n);
        let weighted: BigInt = nu.iter().enumerate().map(|(j, v)| pow_big(p, j) * v).sum();
        let floor_arg = BigRational::new(b[n - 1].clone(), big(n as i64) * &p_n)
            + BigRational::new((p - BigInt::one()) * weighted, p_n.clone());
        let mut nu_n = floor_arg.floor().to_integer();
        if (&nu_n % p).is_zero() {
            nu_n += BigInt::one(); // γ_n = 1; p ∤ nu_n afterwards
        }
        epsilons.push(rat(nu_n.clone()) - &floor_arg);
        let a_n = p * &a[n - 1] + &nu_n;
        let b_n = &b[n - 1] + &p_n * (&a_n - &a[n - 1]);
        nu.push(nu_n);
        a.push(a_n);
        b.push(b_n);
    }

    let nu = NuSequence::new(p.clone(), nu)?;
    let upper = UpperBreaks::new(p.clone(), a)?;
    let lower = LowerBreaks::new(p.clone(), b)?;

    let mut report = ConstructionReport {
        name: "ex-3not2".into(),
        p: p.clone(),
        target_height: Some(rat_int(2)),
        target_limit: None, // the scaled limit genuinely diverges
        ..Default::default()
    };

    report.check(
        "upper_validates",
        validate_upper(&upper).is_ok(),
        "growth and coprimality hold".into(),
    );
    report.check(
        "nu_round_trip",
        nu_to_upper(&nu) == upper && nu_to_lower(&nu) == lower,
        "recurrence and closed form agree".into(),
    );
    report.check(
        "epsilon_bounded",
        epsilons.iter().all(|e| e.abs() <= BigRational::one()),
        "|epsilon_n| <= 1".into(),
    );

    // The exact ratio identity i_n/i_(n-1) = p² + 1/n + pⁿεₙ/b_(n-1).
    let i = lower.values();
    let mut quot_ok = true;
    for n in 1..=n_max {
        let lhs = BigRational::new(i[n].clone(), i[n - 1].clone());
        let rhs = rat(p * p)
            + BigRational::new(BigInt::one(), big(n as i64))
            + rat(pow_big(p, n)) * &epsilons[n - 1] / rat(i[n - 1].clone());
        if lhs != rhs {
            quot_ok = false;
            break;
        }
    }
    report.check(
        "quotient_identity",
        quot_ok,
        "i_n/i_(n-1) = p^2 + 1/n + p^n*eps_n/i_(n-1), exactly".into(),
    );

    // b_{n} ≥ (p^{2n+1}+1)/(p+1): the geometric family is a floor.
    let p1 = p + BigInt::one();
    report.check(
        "geometric_floor",
        i.iter()
            .enumerate()
            .all(|(n, b_n)| b_n * &p1 >= pow_big(p, 2 * n + 1) + BigInt::one()),
        "b_n >= (p^(2n+1)+1)/(p+1)".into(),
    );

    if n_max >= 30 {
        // Third notion holds at 2; second notion drifts away.
        let analysis = analyze_default(&lower)?;
        let ht3_at_2 = analysis
            .findings
            .ht3
            .as_ref()
            .and_then(|(snapped, _)| snapped.clone())
            .map(|h| h == rat_int(2))
            .unwrap_or(false);
        report.check("ht3_consistent_at_2", ht3_at_2, "accelerated ratios settle at 2".into());

        let ht2 = ht2_estimate(&lower, &rat_int(2), 5, 1e-6)?;
        report.check(
            "ht2_diverges",
            matches!(ht2.verdict, Ht2Verdict::Refuted { .. }),
            match &ht2.verdict {
                Ht2Verdict::Refuted { detail } => detail.clone(),
                other => format!("expected refuted, got {other:?}"),
            },
        );
    }

    report.upper = Some(upper);
    report.lower = Some(lower);
    report.nu = Some(nu);
    report.gate()
}

// ---------------------------------------------------------------------------
// Scaled limit without exact form
// ---------------------------------------------------------------------------

/// The family with scaled limit at height 3 but no exact form:
/// `ν_n = (p^{2n+1}+1)/(p+1) + p`, giving the closed form
///
/// ```text
/// i_n = (p^{3n+3}−1)/(p³−1) + p·(p^{2n+2}−1)/(p²−1),
/// ```
///
/// consecutive differences `i_{n+1} − i_n = p^{3n+3} + p^{2n+3}`, and
/// difference ratios `p²(pⁿ+1)/(p^{n−1}+1)` — converging to `p³` but
/// never equal to it, so the exact form fails at every index while
/// `i_n/p^{3n} → p³/(p³−1)`.
pub fn construct_ex_2not1(
    p: &BigInt,
    n_max: usize,
) -> Result<ConstructionReport, ConstructionsError> {
    require_prime(p)?;
    if n_max < 2 {
        return Err(ConstructionsError::Parameter("need N >= 2".into()));
    }
    let p1 = p + BigInt::one();
    let nu_values: Vec<BigInt> = (0..=n_max)
        .map(|n| (pow_big(p, 2 * n + 1) + BigInt::one()) / &p1 + p)
        .collect();
    let nu = NuSequence::new(p.clone(), nu_values)?;
    let upper = nu_to_upper(&nu);
    let lower = nu_to_lower(&nu);

    let p3 = pow_big(p, 3);
    let target_limit = BigRational::new(p3.clone(), &p3 - BigInt::one());

    let mut report = ConstructionReport {
        name: "ex-2not1".into(),
        p: p.clone(),
        target_height: Some(rat_int(3)),
        target_limit: Some((target_limit.clone(), target_limit.clone())),
        ..Default::default()
    };

    // The closed form must reproduce the ν-expansion exactly; a
    // mismatch would be an implementation bug.
    let denom3 = &p3 - BigInt::one();
    let denom2 = p * p - BigInt::one();
    let closed_ok = lower.values().iter().enumerate().all(|(n, i_n)| {
        let term3 = (pow_big(p, 3 * n + 3) - BigInt::one()) / &denom3;
        let term2 = p * ((pow_big(p, 2 * n + 2) - BigInt::one()) / &denom2);
        *i_n == term3 + term2
    });
    report.check(
        "closed_form",
        closed_ok,
        "i_n = (p^(3n+3)-1)/(p^3-1) + p(p^(2n+2)-1)/(p^2-1)".into(),
    );

    report.check(
        "upper_validates",
        validate_upper(&upper).is_ok(),
        "growth and coprimality hold".into(),
    );
    report.check(
        "irat_residuals_zero",
        irat_check(&nu).iter().all(|r| r.is_zero()),
        "p-adic recursion identity holds exactly".into(),
    );

    // Differences and their never-constant ratios.
    let i = lower.values();
    let diffs_ok = i
        .windows(2)
        .enumerate()
        .all(|(n, w)| &w[1] - &w[0] == pow_big(p, 3 * n + 3) + pow_big(p, 2 * n + 3));
    report.check("difference_closed_form", diffs_ok, "i_(n+1)-i_n = p^(3n+3)+p^(2n+3)".into());

    let mut ratio_ok = true;
    let mut never_constant = true;
    let mut prev_ratio: Option<BigRational> = None;
    for n in 1..=n_max.saturating_sub(1) {
        let lhs = BigRational::new(&i[n + 1] - &i[n], &i[n] - &i[n - 1]);
        let rhs = BigRational::new(
            p * p * (pow_big(p, n) + BigInt::one()),
            pow_big(p, n - 1) + BigInt::one(),
        );
        if lhs != rhs {
            ratio_ok = false;
        }
        if prev_ratio.as_ref() == Some(&lhs) {
            never_constant = false;
        }
        prev_ratio = Some(lhs);
    }
    report.check(
        "ratio_closed_form",
        ratio_ok,
        "diff ratio = p^2(p^n+1)/(p^(n-1)+1)".into(),
    );
    report.check(
        "ratios_never_constant",
        never_constant,
        "no two consecutive difference ratios agree".into(),
    );

    if n_max + 1 >= 7 {
        let ht2 = ht2_estimate(&lower, &rat_int(3), 5, 1e-6)?;
        report.check(
            "ht2_limit",
            matches!(ht2.verdict, Ht2Verdict::Consistent { .. })
                && ht2.limit_matches(&target_limit, 1e-6),
            format!("certified window around {}", ratio_string(&target_limit)),
        );
    }

    report.upper = Some(upper);
    report.lower = Some(lower);
    report.nu = Some(nu);
    report.gate()
}

// ---------------------------------------------------------------------------
// Exact arithmetic in ℚ(√p)
// ---------------------------------------------------------------------------

/// An element `a + b·√p` of the real quadratic field `ℚ(√p)`, with
/// exact arithmetic and exact ordering.  `p` prime keeps `√p`
/// irrational, which the sign logic relies on.
#[derive(Clone, Debug, PartialEq)]
struct QSqrtP {
    p: BigInt,
    a: BigRational,
    b: BigRational,
}

impl QSqrtP {
    fn new(p: &BigInt, a: BigRational, b: BigRational) -> Self {
        QSqrtP { p: p.clone(), a, b }
    }

    fn from_ratio(p: &BigInt, a: BigRational) -> Self {
        QSqrtP::new(p, a, BigRational::zero())
    }

    fn sqrt_p(p: &BigInt) -> Self {
        QSqrtP::new(p, BigRational::zero(), BigRational::one())
    }

    fn add(&self, other: &Self) -> Self {
        QSqrtP::new(&self.p, &self.a + &other.a, &self.b + &other.b)
    }

    fn sub(&self, other: &Self) -> Self {
        QSqrtP::new(&self.p, &self.a - &other.a, &self.b - &other.b)
    }

    fn mul(&self, other: &Self) -> Self {
        // (a + b√p)(c + d√p) = (ac + bd·p) + (ad + bc)√p.
        let p_q = rat(self.p.clone());
        QSqrtP::new(
            &self.p,
            &self.a * &other.a + &self.b * &other.b * &p_q,
            &self.a * &other.b + &self.b * &other.a,
        )
    }

    fn div(&self, other: &Self) -> Self {
        // Multiply by the conjugate: 1/(c + d√p) = (c − d√p)/(c² − d²p).
        let p_q = rat(self.p.clone());
        let norm = &other.a * &other.a - &other.b * &other.b * &p_q;
        assert!(!norm.is_zero(), "division by zero in Q(sqrt p)");
        let conj = QSqrtP::new(&self.p, other.a.clone(), -other.b.clone());
        let num = self.mul(&conj);
        QSqrtP::new(&self.p, num.a / &norm, num.b / &norm)
    }

    fn scale(&self, k: &BigRational) -> Self {
        QSqrtP::new(&self.p, &self.a * k, &self.b * k)
    }

    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Exact sign of `a + b√p`.
    fn sign(&self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        let (sa, sb) = (sign_of(&self.a), sign_of(&self.b));
        match (sa, sb) {
            (Equal, Equal) => Equal,
            (Less | Equal, Less | Equal) => Less,
            (Greater | Equal, Greater | Equal) => Greater,
            // Mixed signs: compare a² with b²p (equality would make
            // √p rational, impossible for prime p).
            (Greater, Less) | (Less, Greater) => {
                let a2 = &self.a * &self.a;
                let b2p = &self.b * &self.b * rat(self.p.clone());
                debug_assert_ne!(a2, b2p, "sqrt(p) cannot be rational");
                if (a2 > b2p) == (sa == Greater) {
                    Greater
                } else {
                    Less
                }
            }
        }
    }

    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sub(other).sign()
    }

    /// Exact floor via integer-square-root bracketing of the radical
    /// part: writes the value as `(u ± √D)/w` and adjusts an integer
    /// candidate with the exact predicates `t ≶ ±√D ⟺ t² ≶ D`.
    fn floor(&self) -> BigInt {
        if self.b.is_zero() {
            return self.a.floor().to_integer();
        }
        // Common denominator w > 0: value = (u + v√p)/w.
        let w = self.a.denom().lcm(self.b.denom());
        let u = self.a.numer() * (&w / self.a.denom());
        let v = self.b.numer() * (&w / self.b.denom());
        let d = &v * &v * &self.p;
        let s = d.sqrt(); // ⌊√D⌋
        let e: i8 = if v.is_positive() { 1 } else { -1 };
        let radical_floor = if e > 0 { s } else { -s - BigInt::one() };
        let mut m = (&u + radical_floor).div_floor(&w);
        // m is the floor iff  mw − u ≤ e√D < (m+1)w − u.
        while cmp_int_vs_signed_sqrt(&(&m * &w - &u), &d, e) == std::cmp::Ordering::Greater {
            m -= BigInt::one();
        }
        while cmp_int_vs_signed_sqrt(&((&m + BigInt::one()) * &w - &u), &d, e)
            != std::cmp::Ordering::Greater
        {
            m += BigInt::one();
        }
        m
    }

    /// Rational enclosure with `bits` bits of √p.
    fn enclosure(&self, bits: u32) -> (BigRational, BigRational) {
        let scale = BigInt::one() << bits;
        let s = (&self.p * (&scale * &scale)).sqrt();
        let lo_root = BigRational::new(s.clone(), scale.clone());
        let hi_root = BigRational::new(s + BigInt::one(), scale);
        let (t1, t2) = (&self.a + &self.b * &lo_root, &self.a + &self.b * &hi_root);
        if t1 <= t2 {
            (t1, t2)
        } else {
            (t2, t1)
        }
    }
}

fn sign_of(q: &BigRational) -> std::cmp::Ordering {
    if q.is_zero() {
        std::cmp::Ordering::Equal
    } else if q.is_positive() {
        std::cmp::Ordering::Greater
    } else {
        std::cmp::Ordering::Less
    }
}

/// Exact comparison of an integer `t` with `e·√d` (`d > 0` not a
/// perfect square, `e = ±1`).
fn cmp_int_vs_signed_sqrt(t: &BigInt, d: &BigInt, e: i8) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    if e > 0 {
        if !t.is_positive() {
            return Less;
        }
        (t * t).cmp(d)
    } else {
        if !t.is_negative() {
            return Greater;
        }
        d.cmp(&(t * t))
    }
}

// ---------------------------------------------------------------------------
// The rank-2 example
// ---------------------------------------------------------------------------

/// The rank-2 example for odd `p`: a group generated by σ₁ of
/// height 7 and σ₂ of height 7/2, realized through the index
/// function
///
/// ```text
/// |G:G^x| = 1 on [0, 2],   p^{3i+1} on (p^{4i}+1, c_i],
///           p^{3i+2} on (c_i, p^{4i+4}+1],
/// ```
///
/// where `c_i` is the smallest integer `≥ p^{4i}·α` not divisible by
/// `p`, and `α = p^{3/2}(p^{5/2}+p)/(p^{5/2}+1)` is the quadratic
/// irrational making the even and odd scaled limits of σ₂ agree.
/// `levels` is the number of `c`-levels built (σ₂ gets `2·levels + 1`
/// ramification numbers, σ₁ gets `levels`).
///
/// All defining identities are certified in exact `ℚ(√p)`
/// arithmetic — in particular the equality of the two limit
/// constants, which no amount of interval refinement could decide.
pub fn construct_ex1(
    p: &BigInt,
    levels: usize,
) -> Result<ConstructionReport, ConstructionsError> {
    require_prime(p)?;
    if *p == big(2) {
        return Err(ConstructionsError::CharTwo);
    }
    if levels < 2 {
        return Err(ConstructionsError::Parameter("need at least 2 levels".into()));
    }

    let one = QSqrtP::from_ratio(p, BigRational::one());
    let sqrt_p = QSqrtP::sqrt_p(p);
    let p_q = rat(p.clone());

    // Half-integer powers of p as exact elements of ℚ(√p).
    let p_pow = |twice_exp: i64| -> QSqrtP {
        // p^{twice_exp / 2}: integer part p^⌊e⌋ times √p when odd.
        let (q, r) = (twice_exp.div_euclid(2), twice_exp.rem_euclid(2));
        let rational_part = if q >= 0 {
            rat(pow_big(p, q as usize))
        } else {
            BigRational::new(BigInt::one(), pow_big(p, (-q) as usize))
        };
        let base = QSqrtP::from_ratio(p, rational_part);
        if r == 0 {
            base
        } else {
            base.mul(&sqrt_p)
        }
    };

    // α = p^{3/2}·(p^{5/2} + p)/(p^{5/2} + 1).
    let p52 = p_pow(5);
    let alpha = p_pow(3)
        .mul(&p52.add(&QSqrtP::from_ratio(p, p_q.clone())))
        .div(&p52.add(&one));

    let mut report = ConstructionReport {
        name: "ex1".into(),
        p: p.clone(),
        alpha: Some(alpha.enclosure(128)),
        ..Default::default()
    };

    // α is a genuine quadratic irrational in the window (p^{3/2}, p²).
    report.check("alpha_irrational", !alpha.b.is_zero(), "sqrt-part nonzero".into());
    report.check(
        "alpha_window",
        alpha.cmp(&p_pow(3)) == std::cmp::Ordering::Greater
            && alpha.cmp(&QSqrtP::from_ratio(p, &p_q * &p_q)) == std::cmp::Ordering::Less,
        "p^(3/2) < alpha < p^2".into(),
    );

    // The two limit constants agree exactly — the defining equation
    // of α.  K_even = (p⁶ − p − p²α + pα)/(p⁷ − 1) and
    // K_odd = (p^{9/2}α − p^{9/2} + p^{5/2} − p^{−3/2}α)/(p⁷ − 1).
    let p7_minus_1 = rat(pow_big(p, 7) - BigInt::one());
    let k_even = QSqrtP::from_ratio(p, rat(pow_big(p, 6) - p))
        .sub(&alpha.scale(&(&p_q * &p_q - &p_q)))
        .scale(&p7_minus_1.recip());
    let k_odd = p_pow(9)
        .mul(&alpha.sub(&one))
        .add(&p_pow(5))
        .sub(&p_pow(-3).mul(&alpha))
        .scale(&p7_minus_1.recip());
    report.check(
        "limit_constants_equal",
        k_even.sub(&k_odd).is_zero(),
        "K_even = K_odd exactly in Q(sqrt p)".into(),
    );

    // c_i: smallest integer ≥ p^{4i}α with p ∤ c_i.
    let mut c: Vec<BigInt> = Vec::with_capacity(levels);
    let mut c_checks_ok = true;
    let mut c_witness = String::new();
    for i in 0..levels {
        let target = alpha.scale(&rat(pow_big(p, 4 * i)));
        // α is irrational, so the value is never an integer and the
        // ceiling is floor + 1.
        let mut candidate = target.floor() + BigInt::one();
        if (&candidate % p).is_zero() {
            candidate += BigInt::one();
        }
        // |c_i − (p^{4i}α + 1)| < 1  ⟺  p^{4i}α < c_i < p^{4i}α + 2.
        let cand_q = QSqrtP::from_ratio(p, rat(candidate.clone()));
        let above = cand_q.cmp(&target) == std::cmp::Ordering::Greater;
        let below = cand_q.cmp(&target.add(&QSqrtP::from_ratio(p, rat_int(2))))
            == std::cmp::Ordering::Less;
        // Interleaving: p(p^{4i}+1) < c_i and p·c_i < p^{4(i+1)}+1.
        let left = p * (pow_big(p, 4 * i) + BigInt::one()) < candidate;
        let right = p * &candidate < pow_big(p, 4 * (i + 1)) + BigInt::one();
        if !(above && below && left && right) {
            c_checks_ok = false;
            c_witness = format!("window or interleaving failed at i = {i} (c_i = {candidate})");
            break;
        }
        c.push(candidate);
    }
    if c_checks_ok {
        c_witness = "p^{4i}a < c_i < p^{4i}a + 2 and p(p^{4i}+1) < c_i < (p^{4i+4}+1)/p".into();
    }
    report.check("c_sequence", c_checks_ok, c_witness);
    if !c_checks_ok {
        return report.gate();
    }

    // The index function: thresholds 2, c_0, p⁴+1, c_1, p⁸+1, …
    let mut steps: Vec<(BigRational, BigInt)> = vec![(rat_int(2), BigInt::one())];
    for (i, c_i) in c.iter().enumerate() {
        steps.push((rat(c_i.clone()), pow_big(p, 3 * i + 1)));
        steps.push((rat(pow_big(p, 4 * (i + 1)) + BigInt::one()), pow_big(p, 3 * i + 2)));
    }
    let f = IndexFunction::new(p.clone(), steps)?;

    // ψ at the thresholds, by direct integration.
    let psi_at = |x: &BigInt| -> Result<BigInt, ConstructionsError> {
        let value = psi_eval(&f, &rat(x.clone()), false)?;
        debug_assert!(value.is_integer());
        Ok(value.to_integer())
    };
    let mut psi_pow = Vec::with_capacity(levels + 1); // ψ(p^{4n}+1)
    for n in 0..=levels {
        psi_pow.push(psi_at(&(pow_big(p, 4 * n) + BigInt::one()))?);
    }
    let mut psi_c = Vec::with_capacity(levels); // ψ(c_n)
    for c_n in &c {
        psi_c.push(psi_at(c_n)?);
    }

    // Closed form for ψ(p^{4n}+1), checked against the integration:
    // 2 + (p⁶−p)(p^{7n}−1)/(p⁷−1) + (p²−p)(p^{3n}−1)/(p³−1)
    //   − (p²−p)·Σ_{i<n} p^{3i}c_i.
    let p6_minus_p = pow_big(p, 6) - p;
    let p2_minus_p = p * p - p;
    let d7 = pow_big(p, 7) - BigInt::one();
    let d3 = pow_big(p, 3) - BigInt::one();
    let mut closed_ok = true;
    let mut partial: BigInt = BigInt::zero(); // Σ_{i<n} p^{3i} c_i
    for (n, direct) in psi_pow.iter().enumerate() {
        let closed = big(2)
            + &p6_minus_p * ((pow_big(p, 7 * n) - BigInt::one()) / &d7)
            + &p2_minus_p * ((pow_big(p, 3 * n) - BigInt::one()) / &d3)
            - &p2_minus_p * &partial;
        if &closed != direct {
            closed_ok = false;
            break;
        }
        if n < levels {
            partial += pow_big(p, 3 * n) * &c[n];
        }
    }
    report.check(
        "psi_closed_form",
        closed_ok,
        "direct integration matches the closed form at every p^{4n}+1".into(),
    );

    // ψ(c_n) = ψ(p^{4n}+1) + p^{3n+1}(c_n − p^{4n} − 1).
    let psi_c_ok = psi_c.iter().enumerate().all(|(n, direct)| {
        *direct
            == &psi_pow[n] + pow_big(p, 3 * n + 1) * (&c[n] - pow_big(p, 4 * n) - BigInt::one())
    });
    report.check("psi_at_c", psi_c_ok, "segment formula for psi(c_n)".into());

    // Generators: i_n(σ₁) = ψ(p^{4(n+1)}+1);
    // i_{2n}(σ₂) = ψ(p^{4n}+1), i_{2n+1}(σ₂) = ψ(c_n).
    let sigma1_values: Vec<BigInt> = (1..=levels).map(|n| psi_pow[n].clone()).collect();
    let mut sigma2_values: Vec<BigInt> = Vec::with_capacity(2 * levels + 1);
    for n in 0..levels {
        sigma2_values.push(psi_pow[n].clone());
        sigma2_values.push(psi_c[n].clone());
    }
    sigma2_values.push(psi_pow[levels].clone());
    // The strict constructor enforces i_{m+1} ≡ i_m (mod p^{m+1}) —
    // the congruence genuine ramification numbers must satisfy.
    let sigma1 = LowerBreaks::new(p.clone(), sigma1_values)?;
    let sigma2 = LowerBreaks::new(p.clone(), sigma2_values)?;
    report.check(
        "congruences",
        true,
        "both generators satisfy i_(m+1) = i_m mod p^(m+1)".into(),
    );

    // Scaled limits: σ₁ at height 7 with limit p⁷·K, σ₂ at height
    // 7/2 with limit K.  The targets live in ℚ(√p), so the
    // comparison against the certified windows is done exactly.
    let k_enclosure = k_even.enclosure(192);
    let sigma1_target = k_even.scale(&rat(pow_big(p, 7)));
    if levels >= 7 {
        let ht2 = ht2_estimate(&sigma1, &rat_int(7), 5, 1e-6)?;
        let ok = match &ht2.verdict {
            Ht2Verdict::Consistent { limit: (lo, hi), .. } => {
                within_rel(&sigma1_target, lo, hi, 1e-6)
            }
            _ => false,
        };
        report.check("ht2_sigma1", ok, "window at h = 7 encloses p^7*K".into());

        let ht2 = ht2_estimate(&sigma2, &BigRational::new(big(7), big(2)), 5, 1e-3)?;
        let ok = match &ht2.verdict {
            Ht2Verdict::Consistent { limit: (lo, hi), .. } => within_rel(&k_even, lo, hi, 1e-3),
            _ => false,
        };
        report.check("ht2_sigma2", ok, "window at h = 7/2 encloses K".into());

        // Relative error of the closed-form asymptotics at the top
        // level: |ψ(p^{4n}+1) − K·p^{7n}| ≤ 10⁻⁶·ψ(p^{4n}+1) — an
        // exact ℚ(√p) comparison, no floats involved.
        let n = levels;
        let psi_q = QSqrtP::from_ratio(p, rat(psi_pow[n].clone()));
        let deviation = psi_q.sub(&k_even.scale(&rat(pow_big(p, 7 * n))));
        let deviation_abs = if deviation.sign() == std::cmp::Ordering::Less {
            QSqrtP::from_ratio(p, BigRational::zero()).sub(&deviation)
        } else {
            deviation
        };
        let budget = psi_q.scale(&BigRational::new(BigInt::one(), big(1_000_000)));
        report.check(
            "asymptotic_relative_error",
            deviation_abs.cmp(&budget) != std::cmp::Ordering::Greater,
            format!("|psi(p^{{4n}}+1) - K*p^{{7n}}| <= 1e-6 * psi at n = {n}"),
        );
    }

    // The word rules: σ₁^a·σ₂^b has height 7/2 when b ≠ 0, height 7
    // when a ≠ 0 = b, and is trivial when both vanish.
    let seven_half = BigRational::new(big(7), big(2));
    let sigma1_input = |is_zero: bool| CombineInput {
        label: "sigma1".into(),
        height: Some(rat_int(7)),
        limit: Some({
            let e = sigma1_target.enclosure(192);
            (e.0, e.1)
        }),
        valuation: 0,
        is_zero,
    };
    let sigma2_input = |is_zero: bool| CombineInput {
        label: "sigma2".into(),
        height: Some(seven_half.clone()),
        limit: Some((k_enclosure.0.clone(), k_enclosure.1.clone())),
        valuation: 0,
        is_zero,
    };
    let case_b = combine(p, &[sigma1_input(false), sigma2_input(false)])?;
    let case_a = combine(p, &[sigma1_input(false), sigma2_input(true)])?;
    let case_0 = combine(p, &[sigma1_input(true), sigma2_input(true)])?;
    let words_ok = matches!(&case_b, CombinedHeight::Finite { h, from, .. }
            if *h == seven_half && from == "sigma2")
        && matches!(&case_a, CombinedHeight::Finite { h, from, .. }
            if *h == rat_int(7) && from == "sigma1")
        && case_0 == CombinedHeight::Infinite;
    report.check(
        "word_heights",
        words_ok,
        "b != 0 -> 7/2; a != 0 = b -> 7; a = b = 0 -> infinite".into(),
    );

    // Filtration ranks (2, 1, 0) at h = 7/2, 7, and beyond.
    let rows = filtration(
        &[rat_int(7), seven_half.clone()],
        &[seven_half.clone(), rat_int(7), rat_int(8)],
    );
    let ranks: Vec<usize> = rows.iter().map(|r| r.rank).collect();
    let mults: usize = rows.iter().map(|r| r.multiplicity).sum();
    report.check(
        "filtration_ranks",
        ranks == vec![2, 1, 0] && mults == 2,
        format!("ranks {ranks:?}, multiplicities sum {mults}"),
    );
    report.filtration = Some(rows);

    report.index_function = Some(f);
    report.generators = vec![("sigma1".into(), sigma1), ("sigma2".into(), sigma2)];
    report.c_sequence = Some(c);
    report.gate()
}

/// Exact test that the rational interval `[lo, hi]` sits within
/// relative `tol` of the `ℚ(√p)` target: `target(1−tol) ≤ hi` and
/// `lo ≤ target(1+tol)`.
fn within_rel(target: &QSqrtP, lo: &BigRational, hi: &BigRational, tol: f64) -> bool {
    let tol_q = BigRational::from_float(tol).expect("finite tolerance");
    let one = BigRational::one();
    let lower = target.scale(&(&one - &tol_q));
    let upper = target.scale(&(&one + &tol_q));
    lower.cmp(&QSqrtP::from_ratio(&target.p, hi.clone())) != std::cmp::Ordering::Greater
        && QSqrtP::from_ratio(&target.p, lo.clone()).cmp(&upper) != std::cmp::Ordering::Greater
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bigs(vals: &[i64]) -> Vec<BigInt> {
        vals.iter().map(|&v| BigInt::from(v)).collect()
    }

    #[test]
    fn h1_synthetic_shape_and_dichotomy() {
        // p = 2, e_F = 1, c = 3: i_n = 1 + 2·2ⁿ = (3, 5, 9, 17, 33).
        let report = construct_h1_synthetic(&big(2), &big(1), &big(3), 4).unwrap();
        assert_eq!(report.lower.as_ref().unwrap().values(), &bigs(&[3, 5, 9, 17, 33])[..]);
        assert_eq!(report.upper.as_ref().unwrap().values(), &bigs(&[3, 4, 5, 6, 7])[..]);
        assert!(report.all_pass());
        assert_eq!(report.target_limit.as_ref().unwrap().0, rat_int(2));

        // c = 1 hits A = −1 < 0; the data is still a valid break
        // sequence and the dichotomy still fires.
        let report = construct_h1_synthetic(&big(2), &big(1), &big(1), 4).unwrap();
        assert_eq!(report.lower.as_ref().unwrap().values(), &bigs(&[1, 3, 7, 15, 31])[..]);
        assert!(report.all_pass());

        // Parameter screening.
        assert!(matches!(
            construct_h1_synthetic(&big(2), &big(1), &big(2), 4),
            Err(ConstructionsError::Parameter(_))
        ));
        assert!(matches!(
            construct_h1_synthetic(&big(2), &big(1), &big(3), 1),
            Err(ConstructionsError::Parameter(_))
        ));
        assert!(matches!(
            construct_h1_synthetic(&big(4), &big(1), &big(3), 4),
            Err(ConstructionsError::Parameter(_))
        ));
    }

    #[test]
    fn h2_family_matches_closed_forms() {
        let report = construct_h2(&big(3), 3).unwrap();
        assert_eq!(report.upper.as_ref().unwrap().values(), &bigs(&[1, 3, 9, 27])[..]);
        assert_eq!(report.lower.as_ref().unwrap().values(), &bigs(&[1, 7, 61, 547])[..]);
        assert!(report.all_pass());
        assert_eq!(
            report.target_limit.as_ref().unwrap().0,
            BigRational::new(big(3), big(4))
        );

        let report = construct_h2(&big(2), 3).unwrap();
        assert_eq!(report.lower.as_ref().unwrap().values(), &bigs(&[1, 3, 11, 43])[..]);

        // Large N exercises the certified scaled-limit window.
        let report = construct_h2(&big(3), 20).unwrap();
        assert!(report.all_pass());
        assert!(report.checks.iter().any(|c| c.name == "ht2_limit" && c.pass));
    }

    #[test]
    fn h_gt2_integer_height_frozen_prefix() {
        // (p, h) = (2, 3): n₀ = 1, a = (1, 3, 19, 83), b = (1, 5, 69, 581).
        let report = construct_h_gt2(&big(2), &rat_int(3), 3).unwrap();
        assert_eq!(report.upper.as_ref().unwrap().values(), &bigs(&[1, 3, 19, 83])[..]);
        assert_eq!(report.lower.as_ref().unwrap().values(), &bigs(&[1, 5, 69, 581])[..]);
        assert!(report.all_pass());

        // (3, 3): n₀ = 1, seeds (1, 4).
        let report = construct_h_gt2(&big(3), &rat_int(3), 3).unwrap();
        let a = report.upper.as_ref().unwrap().values();
        assert_eq!(&a[..2], &bigs(&[1, 4])[..]);
        assert!(report.all_pass());
    }

    #[test]
    fn h_gt2_fractional_height_frozen_prefix() {
        // (2, 5/2): n₀ = 2, a = (1, 3, 7, 31), b = (1, 5, 21, 213).
        let h = BigRational::new(big(5), big(2));
        let report = construct_h_gt2(&big(2), &h, 3).unwrap();
        assert_eq!(report.upper.as_ref().unwrap().values(), &bigs(&[1, 3, 7, 31])[..]);
        assert_eq!(report.lower.as_ref().unwrap().values(), &bigs(&[1, 5, 21, 213])[..]);
        assert!(report.all_pass());
    }

    #[test]
    fn h_gt2_certified_limits_at_depth() {
        let report = construct_h_gt2(&big(2), &rat_int(3), 20).unwrap();
        assert!(report.all_pass());
        let (lo, hi) = report.target_limit.as_ref().unwrap();
        let eight_sevenths = BigRational::new(big(8), big(7));
        assert!(lo <= &eight_sevenths && &eight_sevenths <= hi);

        let h = BigRational::new(big(5), big(2));
        let report = construct_h_gt2(&big(2), &h, 18).unwrap();
        assert!(report.all_pass());

        assert!(matches!(
            construct_h_gt2(&big(2), &rat_int(2), 10),
            Err(ConstructionsError::Parameter(_))
        ));
    }

    #[test]
    fn ex_3not2_frozen_prefix_and_identities() {
        let report = construct_ex_3not2(&big(2), 2).unwrap();
        assert_eq!(report.nu.as_ref().unwrap().values(), &bigs(&[1, 1, 1])[..]);
        assert_eq!(report.upper.as_ref().unwrap().values(), &bigs(&[1, 3, 7])[..]);
        assert_eq!(report.lower.as_ref().unwrap().values(), &bigs(&[1, 5, 21])[..]);
        assert!(report.all_pass());
        assert!(report.target_limit.is_none());
    }

    #[test]
    fn ex_3not2_heights_verdicts_at_depth() {
        let report = construct_ex_3not2(&big(2), 40).unwrap();
        assert!(report.all_pass(), "failing checks: {:?}",
            report.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        assert!(report.checks.iter().any(|c| c.name == "ht3_consistent_at_2" && c.pass));
        assert!(report.checks.iter().any(|c| c.name == "ht2_diverges" && c.pass));
    }

    #[test]
    fn ex_2not1_frozen_prefix_and_identities() {
        let report = construct_ex_2not1(&big(2), 2).unwrap();
        assert_eq!(report.nu.as_ref().unwrap().values(), &bigs(&[3, 5, 13])[..]);
        assert_eq!(&report.lower.as_ref().unwrap().values()[..2], &bigs(&[3, 19])[..]);
        assert!(report.all_pass());

        // Difference ratio at n = 1 is p²(p+1)/2 = 6 for p = 2.
        let i = report.lower.as_ref().unwrap().values().to_vec();
        let r = BigRational::new(&i[2] - &i[1], &i[1] - &i[0]);
        assert_eq!(r, rat_int(6));
    }

    #[test]
    fn ex_2not1_certified_limit_at_depth() {
        let report = construct_ex_2not1(&big(2), 40).unwrap();
        assert!(report.all_pass());
        assert_eq!(
            report.target_limit.as_ref().unwrap().0,
            BigRational::new(big(8), big(7))
        );
    }

    #[test]
    fn qsqrtp_arithmetic_and_floor() {
        let p = big(3);
        let root = QSqrtP::sqrt_p(&p);
        // (1 + √3)(1 − √3) = −2.
        let one = QSqrtP::from_ratio(&p, rat_int(1));
        let prod = one.add(&root).mul(&one.sub(&root));
        assert!(prod.b.is_zero());
        assert_eq!(prod.a, rat_int(-2));
        // Division round-trips.
        let x = QSqrtP::new(&p, BigRational::new(big(7), big(2)), BigRational::new(big(-1), big(5)));
        let y = QSqrtP::new(&p, rat_int(2), rat_int(1));
        let q = x.div(&y);
        assert_eq!(q.mul(&y), x);
        // Signs.
        assert_eq!(one.sub(&root).sign(), std::cmp::Ordering::Less); // 1 − √3 < 0
        assert_eq!(root.sub(&one).sign(), std::cmp::Ordering::Greater);
        // Floors: ⌊√3⌋ = 1, ⌊−√3⌋ = −2, ⌊10 − √3⌋ = 8,
        // ⌊(5 + 2√3)/3⌋... compute (5 + 2·1.732)/3 ≈ 2.82 → 2.
        assert_eq!(root.floor(), big(1));
        assert_eq!(QSqrtP::new(&p, rat_int(0), rat_int(-1)).floor(), big(-2));
        assert_eq!(QSqrtP::new(&p, rat_int(10), rat_int(-1)).floor(), big(8));
        let z = QSqrtP::new(&p, BigRational::new(big(5), big(3)), BigRational::new(big(2), big(3)));
        assert_eq!(z.floor(), big(2));
        // ⌊3^{5/2}⌋ = ⌊9√3⌋ = 15.
        assert_eq!(QSqrtP::new(&p, rat_int(0), rat_int(9)).floor(), big(15));
    }

    #[test]
    fn ex1_frozen_values_p3() {
        let report = construct_ex1(&big(3), 2).unwrap();
        assert!(report.all_pass(), "failing: {:?}",
            report.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        // ⌊α⌋ = 5 (α ≈ 5.8226); c_0 = 7 (6 is divisible by 3);
        // ⌊81α⌋ = 471 → c_1 = 472.
        assert_eq!(report.c_sequence.as_ref().unwrap(), &bigs(&[7, 472]));
        let (lo, hi) = report.alpha.as_ref().unwrap();
        let lo_f = lo.to_f64().unwrap();
        let hi_f = hi.to_f64().unwrap();
        assert!(lo_f < 5.8227 && 5.8225 < hi_f, "alpha in [{lo_f}, {hi_f}]");

        // σ₂'s ramification numbers start ψ(2), ψ(7), ψ(82):
        // 2, 2 + 3·5 = 17, 17 + 9·75 = 692.
        let sigma2 = &report.generators[1].1;
        assert_eq!(&sigma2.values()[..3], &bigs(&[2, 17, 692])[..]);
        // σ₁ starts at ψ(p⁴+1) = 692.
        let sigma1 = &report.generators[0].1;
        assert_eq!(sigma1.values()[0], big(692));

        // φ/ψ sanity through the index function: ψ(7) = 17.
        let f = report.index_function.as_ref().unwrap();
        assert_eq!(psi_eval(f, &rat_int(7), false).unwrap(), rat_int(17));
    }

    #[test]
    fn ex1_deep_levels_certify_heights() {
        let report = construct_ex1(&big(3), 8).unwrap();
        assert!(report.all_pass(), "failing: {:?}",
            report.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        for name in [
            "limit_constants_equal",
            "ht2_sigma1",
            "ht2_sigma2",
            "asymptotic_relative_error",
            "word_heights",
            "filtration_ranks",
        ] {
            assert!(
                report.checks.iter().any(|c| c.name == name && c.pass),
                "missing or failing check {name}"
            );
        }
        // p = 5 exercises a second prime.
        let report = construct_ex1(&big(5), 4).unwrap();
        assert!(report.all_pass());

        assert!(matches!(construct_ex1(&big(2), 4), Err(ConstructionsError::CharTwo)));
    }

    #[test]
    fn reports_serialize() {
        let report = construct_h2(&big(3), 3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(v["name"], "h2");
        assert_eq!(v["upper"][1], "3");
        assert_eq!(v["target_height"], "2");
        assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));

        let report = construct_ex1(&big(3), 2).unwrap();
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(v["c"][0], "7");
        assert_eq!(v["generators"][1]["i"][2], "692");
        assert_eq!(v["filtration"][0]["rank"], 2);
    }
}
