//! Exact calculus of ramification break sequences.
//!
//! A closed subgroup `G ≅ Z_p` of wild automorphisms has a sequence of
//! *upper* breaks `a_0 < a_1 < …` (jumps of the filtration `G^x` by
//! upper numbering) and *lower* breaks `b_n = i_n(σ)` (jumps of `G_x`,
//! equivalently the ramification numbers of `σ^{pⁿ}`).  The two are
//! tied together by the Hasse–Herbrand functions
//!
//! ```text
//! φ(x) = ∫₀ˣ dt/|G:G_t|        ψ(x) = ∫₀ˣ |G:G^t| dt
//! ```
//!
//! which are mutually inverse piecewise-linear bijections; in rank 1
//! the index is `|G:G_t| = pⁿ` on `(b_{n−1}, b_n]` and `|G:G^t| = pⁿ`
//! on `(a_{n−1}, a_n]`, giving the exact conversion
//! `b_n = b_{n−1} + pⁿ(a_n − a_{n−1})`, `b_0 = a_0`.
//!
//! This module validates upper sequences (coprimality and growth
//! conditions that characterize realizable upper breaks), converts
//! exactly in both directions, evaluates φ/ψ at exact rationals,
//! expands ν-sequences into break data, and estimates the slope
//! `lim log_p |G:G^x| / x` from step-function data.  All arithmetic is
//! exact; the only floating point lives in the slope *estimators*,
//! which are labeled as such.

use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Deserialize;
use serde_json::json;

use crate::exactmath::{parse_bigint, parse_ratio, ratio_string, BigInt, BigRational};

/// Errors from break-sequence construction and evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BreaksError {
    /// A type invariant failed at construction.
    Invalid(String),
    /// `lower_to_upper` hit a difference not divisible by `pⁿ`.
    Divisibility { n: usize, difference: BigInt, modulus: BigInt },
    /// φ/ψ evaluation beyond the data with extrapolation disabled.
    OutOfRange { x: BigRational, max: BigRational },
    /// The hypothesis `i_n < C·p^{λn}` of the index lower-bound lemma
    /// failed at index `n`.
    HypothesisFailed { n: usize, i_n: BigInt },
    /// A JSON payload was malformed or had inadmissible values.
    BadEncoding(String),
}

impl fmt::Display for BreaksError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BreaksError::Invalid(msg) => write!(f, "invalid break data: {msg}"),
            BreaksError::Divisibility { n, difference, modulus } => write!(
                f,
                "lower breaks are not convertible: b_{n} - b_{} = {difference} \
                 is not divisible by {modulus}",
                n - 1
            ),
            BreaksError::OutOfRange { x, max } => write!(
                f,
                "evaluation point {} exceeds the last break {} and extrapolation is disabled",
                ratio_string(x),
                ratio_string(max)
            ),
            BreaksError::HypothesisFailed { n, i_n } => {
                write!(f, "hypothesis i_n < C*p^(lambda*n) fails at n = {n} (i_{n} = {i_n})")
            }
            BreaksError::BadEncoding(msg) => write!(f, "bad break-data encoding: {msg}"),
        }
    }
}

impl std::error::Error for BreaksError {}

fn big(x: i64) -> BigInt {
    BigInt::from(x)
}

fn pow_big(base: &BigInt, e: usize) -> BigInt {
    num_traits::pow::pow(base.clone(), e)
}

/// Approximate binary log of a positive integer, exact to roughly
/// double precision regardless of magnitude (top 53 bits plus the bit
/// length).  Estimator support only.
pub fn log2_bigint(n: &BigInt) -> f64 {
    debug_assert!(n.is_positive());
    let bits = n.bits();
    if bits <= 53 {
        return n.to_f64().expect("fits").log2();
    }
    let shifted = n >> (bits - 53);
    shifted.to_f64().expect("53 bits fit").log2() + (bits - 53) as f64
}

/// Approximate binary log of a positive rational.
pub fn log2_ratio(q: &BigRational) -> f64 {
    log2_bigint(q.numer()) - log2_bigint(q.denom())
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Strictly increasing upper ramification breaks `a_0 < a_1 < …`, with
/// `a_0 ≥ 1`, over a fixed `p ≥ 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpperBreaks {
    p: BigInt,
    a: Vec<BigInt>,
}

/// Strictly increasing lower ramification breaks `b_0 < b_1 < …`
/// (equivalently a sequence of ramification numbers `i_n`), `b_0 ≥ 1`.
///
/// Genuine rank-1 lower breaks satisfy `b_n ≡ b_{n−1} (mod pⁿ)` — the
/// shape forced by the conversion from upper breaks — and
/// [`LowerBreaks::new`] enforces that congruence.  Estimator inputs
/// and deliberate negative tests may need sequences outside that
/// class; build those with [`LowerBreaks::new_relaxed`], which checks
/// only positivity and strict growth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowerBreaks {
    p: BigInt,
    b: Vec<BigInt>,
}

/// A left-continuous step function `x ↦ |G:G^x|`: value `v_0` on
/// `[0, x_0]` and `v_i` on `(x_{i−1}, x_i]`, with strictly increasing
/// thresholds and weakly increasing values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexFunction {
    p: BigInt,
    steps: Vec<(BigRational, BigInt)>,
}

/// A sequence `ν_0, ν_1, …` with `ν_0` a positive non-multiple of `p`
/// and every later `ν_n` either zero or a positive non-multiple of
/// `p` — the raw data from which upper breaks `a_n = p·a_{n−1} + ν_n`
/// are built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NuSequence {
    p: BigInt,
    nu: Vec<BigInt>,
}

fn check_p(p: &BigInt) -> Result<(), BreaksError> {
    if p < &big(2) {
        return Err(BreaksError::Invalid(format!("p must be at least 2, got {p}")));
    }
    Ok(())
}

fn check_increasing(values: &[BigInt], name: &str) -> Result<(), BreaksError> {
    if values.is_empty() {
        return Err(BreaksError::Invalid(format!("{name} must be nonempty")));
    }
    if values[0] < big(1) {
        return Err(BreaksError::Invalid(format!("{name}[0] must be >= 1, got {}", values[0])));
    }
    for w in values.windows(2) {
        if w[1] <= w[0] {
            return Err(BreaksError::Invalid(format!(
                "{name} must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

impl UpperBreaks {
    pub fn new(p: BigInt, a: Vec<BigInt>) -> Result<Self, BreaksError> {
        check_p(&p)?;
        check_increasing(&a, "upper breaks")?;
        Ok(UpperBreaks { p, a })
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }

    pub fn values(&self) -> &[BigInt] {
        &self.a
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    /// The rank-1 index step function: `|G:G^x| = pⁿ` on
    /// `(a_{n−1}, a_n]` and 1 on `[0, a_0]`.
    pub fn index_function(&self) -> IndexFunction {
        let steps = self
            .a
            .iter()
            .enumerate()
            .map(|(n, a_n)| (BigRational::from(a_n.clone()), pow_big(&self.p, n)))
            .collect();
        IndexFunction { p: self.p.clone(), steps }
    }

    /// JSON encoding `{"p":"…","kind":"upper","values":["…",…]}`.
    pub fn to_json(&self) -> String {
        breaks_json(&self.p, "upper", &self.a)
    }
}

impl LowerBreaks {
    /// Checked constructor: positivity, strict growth, and the rank-1
    /// congruence `b_n ≡ b_{n−1} (mod pⁿ)`.
    pub fn new(p: BigInt, b: Vec<BigInt>) -> Result<Self, BreaksError> {
        let s = LowerBreaks::new_relaxed(p, b)?;
        for (n, w) in s.b.windows(2).enumerate() {
            let modulus = pow_big(&s.p, n + 1);
            if !((&w[1] - &w[0]) % &modulus).is_zero() {
                return Err(BreaksError::Invalid(format!(
                    "b_{} - b_{} = {} is not divisible by {} = p^{}",
                    n + 1,
                    n,
                    &w[1] - &w[0],
                    modulus,
                    n + 1
                )));
            }
        }
        Ok(s)
    }

    /// Relaxed constructor: positivity and strict growth only.  For
    /// estimator inputs (arbitrary `i_n` data) and negative tests; not
    /// every such sequence converts to upper breaks.
    pub fn new_relaxed(p: BigInt, b: Vec<BigInt>) -> Result<Self, BreaksError> {
        check_p(&p)?;
        check_increasing(&b, "lower breaks")?;
        Ok(LowerBreaks { p, b })
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }

    pub fn values(&self) -> &[BigInt] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Whether the rank-1 congruence `b_n ≡ b_{n−1} (mod pⁿ)` holds.
    pub fn satisfies_congruence(&self) -> bool {
        self.b.windows(2).enumerate().all(|(n, w)| {
            ((&w[1] - &w[0]) % pow_big(&self.p, n + 1)).is_zero()
        })
    }

    pub fn to_json(&self) -> String {
        breaks_json(&self.p, "lower", &self.b)
    }
}

impl NuSequence {
    pub fn new(p: BigInt, nu: Vec<BigInt>) -> Result<Self, BreaksError> {
        check_p(&p)?;
        if nu.is_empty() {
            return Err(BreaksError::Invalid("nu sequence must be nonempty".into()));
        }
        if nu[0] < big(1) || (&nu[0] % &p).is_zero() {
            return Err(BreaksError::Invalid(format!(
                "nu_0 must be a positive non-multiple of p, got {}",
                nu[0]
            )));
        }
        for (n, v) in nu.iter().enumerate().skip(1) {
            if v.is_negative() || (!v.is_zero() && (v % &p).is_zero()) {
                return Err(BreaksError::Invalid(format!(
                    "nu_{n} must be zero or a positive non-multiple of p, got {v}"
                )));
            }
        }
        Ok(NuSequence { p, nu })
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }

    pub fn values(&self) -> &[BigInt] {
        &self.nu
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_json(&self) -> String {
        breaks_json(&self.p, "nu", &self.nu)
    }
}

impl IndexFunction {
    /// Builds a step function from `(threshold, value)` pairs; the
    /// value `steps[0].1` applies on `[0, steps[0].0]`.
    pub fn new(p: BigInt, steps: Vec<(BigRational, BigInt)>) -> Result<Self, BreaksError> {
        check_p(&p)?;
        if steps.is_empty() {
            return Err(BreaksError::Invalid("index function needs at least one step".into()));
        }
        if steps[0].1 < big(1) {
            return Err(BreaksError::Invalid("index values must be >= 1".into()));
        }
        if steps[0].0 < BigRational::zero() {
            return Err(BreaksError::Invalid("thresholds must be >= 0".into()));
        }
        for w in steps.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(BreaksError::Invalid(format!(
                    "thresholds must be strictly increasing, got {} then {}",
                    ratio_string(&w[0].0),
                    ratio_string(&w[1].0)
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(BreaksError::Invalid(format!(
                    "index values must be weakly increasing, got {} then {}",
                    w[0].1, w[1].1
                )));
            }
        }
        Ok(IndexFunction { p, steps })
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }

    pub fn steps(&self) -> &[(BigRational, BigInt)] {
        &self.steps
    }

    /// The index value at `x ≥ 0`; beyond the last threshold the last
    /// value continues when `extrapolate` is set (estimator mode).
    pub fn value_at(&self, x: &BigRational, extrapolate: bool) -> Result<BigInt, BreaksError> {
        if x.is_negative() {
            return Err(BreaksError::Invalid(format!("x must be >= 0, got {}", ratio_string(x))));
        }
        for (thr, v) in &self.steps {
            if x <= thr {
                return Ok(v.clone());
            }
        }
        let (last_thr, last_v) = self.steps.last().expect("nonempty");
        if extrapolate {
            Ok(last_v.clone())
        } else {
            Err(BreaksError::OutOfRange { x: x.clone(), max: last_thr.clone() })
        }
    }

    /// JSON encoding
    /// `{"p":"…","kind":"index","values":[["thr","idx"],…]}` with
    /// thresholds as `"n"` or `"n/d"`.
    pub fn to_json(&self) -> String {
        let values: Vec<[String; 2]> = self
            .steps
            .iter()
            .map(|(t, v)| [ratio_string(t), v.to_string()])
            .collect();
        json!({ "p": self.p.to_string(), "kind": "index", "values": values }).to_string()
    }
}

fn breaks_json(p: &BigInt, kind: &str, values: &[BigInt]) -> String {
    let strings: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    json!({ "p": p.to_string(), "kind": kind, "values": strings }).to_string()
}

/// Any of the four break-data payloads, as read back from JSON.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BreaksData {
    Upper(UpperBreaks),
    Lower(LowerBreaks),
    Nu(NuSequence),
    Index(IndexFunction),
}

/// Parses `{"p":"…","kind":…,"values":…}` into the matching type.
/// Lower breaks are parsed with the relaxed constructor so that
/// deliberately non-convertible sequences can still be fed to
/// [`lower_to_upper`] and to the estimators.
pub fn parse_breaks_json(s: &str) -> Result<BreaksData, BreaksError> {
    #[derive(Deserialize)]
    struct Shadow {
        p: String,
        kind: String,
        values: serde_json::Value,
    }
    let shadow: Shadow =
        serde_json::from_str(s).map_err(|e| BreaksError::BadEncoding(e.to_string()))?;
    let p = parse_bigint(&shadow.p).map_err(BreaksError::BadEncoding)?;
    let scalar_values = |v: &serde_json::Value| -> Result<Vec<BigInt>, BreaksError> {
        let arr: Vec<String> = serde_json::from_value(v.clone())
            .map_err(|e| BreaksError::BadEncoding(format!("values: {e}")))?;
        arr.iter()
            .map(|s| parse_bigint(s).map_err(BreaksError::BadEncoding))
            .collect()
    };
    match shadow.kind.as_str() {
        "upper" => Ok(BreaksData::Upper(UpperBreaks::new(p, scalar_values(&shadow.values)?)?)),
        "lower" => {
            Ok(BreaksData::Lower(LowerBreaks::new_relaxed(p, scalar_values(&shadow.values)?)?))
        }
        "nu" => Ok(BreaksData::Nu(NuSequence::new(p, scalar_values(&shadow.values)?)?)),
        "index" => {
            let arr: Vec<[String; 2]> = serde_json::from_value(shadow.values)
                .map_err(|e| BreaksError::BadEncoding(format!("values: {e}")))?;
            let mut steps = Vec::with_capacity(arr.len());
            for [t, v] in &arr {
                steps.push((
                    parse_ratio(t).map_err(BreaksError::BadEncoding)?,
                    parse_bigint(v).map_err(BreaksError::BadEncoding)?,
                ));
            }
            Ok(BreaksData::Index(IndexFunction::new(p, steps)?))
        }
        other => Err(BreaksError::BadEncoding(format!(
            "unknown kind {other:?} (expected upper|lower|nu|index)"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Validation and conversion
// ---------------------------------------------------------------------------

/// The first violated condition of the upper-break characterization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UpperViolation {
    /// `p | a_0`.
    PDividesFirst,
    /// `a_{n+1} < p·a_n` at the reported index (of `a_{n+1}`).
    GapTooSmall { n: usize },
    /// `a_{n+1} > p·a_n` but `p | a_{n+1}` at the reported index.
    DivisibleStrictGap { n: usize },
}

impl fmt::Display for UpperViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpperViolation::PDividesFirst => write!(f, "p divides a_0"),
            UpperViolation::GapTooSmall { n } => {
                write!(f, "a_{} < p*a_{}", n, n - 1)
            }
            UpperViolation::DivisibleStrictGap { n } => {
                write!(f, "a_{} > p*a_{} but p divides a_{}", n, n - 1, n)
            }
        }
    }
}

/// Checks the three conditions that characterize realizable rank-1
/// upper breaks: `p ∤ a_0`; `a_{n+1} ≥ p·a_n` for all `n`; and
/// `p ∤ a_{n+1}` whenever the growth is strict.  Returns the first
/// violation.  (Whether the strictness clause is also necessary for
/// higher-rank data is not settled; this validator is for rank-1
/// sequences.)
pub fn validate_upper(s: &UpperBreaks) -> Result<(), UpperViolation> {
    if (&s.a[0] % &s.p).is_zero() {
        return Err(UpperViolation::PDividesFirst);
    }
    for (n, w) in s.a.windows(2).enumerate() {
        let scaled = &w[0] * &s.p;
        if w[1] < scaled {
            return Err(UpperViolation::GapTooSmall { n: n + 1 });
        }
        if w[1] > scaled && (&w[1] % &s.p).is_zero() {
            return Err(UpperViolation::DivisibleStrictGap { n: n + 1 });
        }
    }
    Ok(())
}

/// Exact conversion `b_0 = a_0`, `b_n = b_{n−1} + pⁿ(a_n − a_{n−1})`.
///
/// Never fails; callers that care whether the input is realizable run
/// [`validate_upper`] separately (the CLI does so in warn-only mode).
pub fn upper_to_lower(s: &UpperBreaks) -> LowerBreaks {
    let mut b = Vec::with_capacity(s.a.len());
    b.push(s.a[0].clone());
    for (n, w) in s.a.windows(2).enumerate() {
        let step = pow_big(&s.p, n + 1) * (&w[1] - &w[0]);
        let prev = b.last().expect("nonempty").clone();
        b.push(prev + step);
    }
    LowerBreaks::new(s.p.clone(), b).expect("conversion preserves the invariants")
}

/// Exact inverse of [`upper_to_lower`]: `a_0 = b_0`,
/// `a_n = a_{n−1} + (b_n − b_{n−1})/pⁿ`.
///
/// # Errors
///
/// [`BreaksError::Divisibility`] at the first `n` where
/// `pⁿ ∤ (b_n − b_{n−1})`.
pub fn lower_to_upper(s: &LowerBreaks) -> Result<UpperBreaks, BreaksError> {
    let mut a = Vec::with_capacity(s.b.len());
    a.push(s.b[0].clone());
    for (n, w) in s.b.windows(2).enumerate() {
        let modulus = pow_big(&s.p, n + 1);
        let diff = &w[1] - &w[0];
        let (q, r) = diff.div_rem(&modulus);
        if !r.is_zero() {
            return Err(BreaksError::Divisibility { n: n + 1, difference: diff, modulus });
        }
        let prev = a.last().expect("nonempty").clone();
        a.push(prev + q);
    }
    UpperBreaks::new(s.p.clone(), a)
}

// ---------------------------------------------------------------------------
// Hasse–Herbrand evaluation
// ---------------------------------------------------------------------------

/// Exact `φ(x) = ∫₀ˣ dt/|G:G_t|` for rank-1 lower breaks:
/// slope 1 on `[0, b_0]`, slope `1/pⁿ` on `(b_{n−1}, b_n]`.
///
/// With `extrapolate` the last slope continues past `b_last`
/// (estimator mode); otherwise [`BreaksError::OutOfRange`].
pub fn phi_eval(s: &LowerBreaks, x: &BigRational, extrapolate: bool) -> Result<BigRational, BreaksError> {
    if x.is_negative() {
        return Err(BreaksError::Invalid(format!("x must be >= 0, got {}", ratio_string(x))));
    }
    let mut acc = BigRational::zero();
    let mut prev = BigRational::zero();
    for (n, b_n) in s.b.iter().enumerate() {
        let thr = BigRational::from(b_n.clone());
        let slope = BigRational::new(BigInt::one(), pow_big(&s.p, n));
        if x <= &thr {
            return Ok(acc + (x - prev) * slope);
        }
        acc += (&thr - &prev) * slope;
        prev = thr;
    }
    if extrapolate {
        let slope = BigRational::new(BigInt::one(), pow_big(&s.p, s.b.len() - 1));
        Ok(acc + (x - prev) * slope)
    } else {
        Err(BreaksError::OutOfRange { x: x.clone(), max: prev })
    }
}

/// Exact `ψ(x) = ∫₀ˣ |G:G^t| dt` for an arbitrary index step
/// function.  With `extrapolate` the last index value continues past
/// the final threshold (estimator mode).
pub fn psi_eval(f: &IndexFunction, x: &BigRational, extrapolate: bool) -> Result<BigRational, BreaksError> {
    if x.is_negative() {
        return Err(BreaksError::Invalid(format!("x must be >= 0, got {}", ratio_string(x))));
    }
    let mut acc = BigRational::zero();
    let mut prev = BigRational::zero();
    for (thr, v) in &f.steps {
        let value = BigRational::from(v.clone());
        if x <= thr {
            return Ok(acc + (x - prev) * value);
        }
        acc += (thr - &prev) * value;
        prev = thr.clone();
    }
    if extrapolate {
        let value = BigRational::from(f.steps.last().expect("nonempty").1.clone());
        Ok(acc + (x - prev) * value)
    } else {
        Err(BreaksError::OutOfRange { x: x.clone(), max: prev })
    }
}

/// `ψ` for rank-1 upper breaks (`|G:G^t| = pⁿ` on `(a_{n−1}, a_n]`).
pub fn psi_eval_upper(
    s: &UpperBreaks,
    x: &BigRational,
    extrapolate: bool,
) -> Result<BigRational, BreaksError> {
    psi_eval(&s.index_function(), x, extrapolate)
}

// ---------------------------------------------------------------------------
// ν-sequences
// ---------------------------------------------------------------------------

/// Upper breaks from a ν-sequence: `a_0 = ν_0`, `a_n = p·a_{n−1} + ν_n`
/// (equivalently `a_n = Σ_j p^{n−j} ν_j`).
///
/// The produced sequence always satisfies the three conditions of
/// [`validate_upper`] and the growth bound `a_n ≥ pⁿ`.
pub fn nu_to_upper(s: &NuSequence) -> UpperBreaks {
    let mut a = Vec::with_capacity(s.nu.len());
    a.push(s.nu[0].clone());
    for v in s.nu.iter().skip(1) {
        let prev = a.last().expect("nonempty").clone();
        a.push(prev * &s.p + v);
    }
    UpperBreaks::new(s.p.clone(), a).expect("nu expansion preserves the invariants")
}

/// Lower breaks from a ν-sequence, computed two independent ways:
/// through [`nu_to_upper`] followed by [`upper_to_lower`], and by the
/// closed form
///
/// ```text
/// b_n = Σ_{j=0}^{n} (p^{2n+1−j} + p^j)/(p+1) · ν_j
/// ```
///
/// whose terms are integral because `p^{2(n−j)+1} + 1` is divisible by
/// `p + 1`.  The two computations agreeing exactly is a theorem, so a
/// mismatch panics (it would be an implementation bug, not bad data).
pub fn nu_to_lower(s: &NuSequence) -> LowerBreaks {
    let via_recurrence = upper_to_lower(&nu_to_upper(s));
    let p1 = BigRational::from(&s.p + BigInt::one());
    for (n, b_n) in via_recurrence.values().iter().enumerate() {
        let mut sum = BigRational::zero();
        for (j, v) in s.nu.iter().take(n + 1).enumerate() {
            let weight = pow_big(&s.p, 2 * n + 1 - j) + pow_big(&s.p, j);
            sum += BigRational::from(weight * v) / &p1;
        }
        assert!(sum.is_integer(), "closed-form term failed integrality at n = {n}");
        assert_eq!(
            sum.to_integer(),
            *b_n,
            "closed form and recurrence disagree at n = {n} — implementation bug"
        );
    }
    via_recurrence
}

/// Exact residuals of the identity
///
/// ```text
/// i_{n+1} − p²·i_n = p^{n+1}·ν_{n+1} − (p−1)·Σ_{j=0}^{n} p^j ν_j
/// ```
///
/// for `n = 0, …, len−2`.  Every residual is zero for valid data; the
/// list is returned (rather than a boolean) so that cross-validation
/// can display witnesses.
pub fn irat_check(s: &NuSequence) -> Vec<BigInt> {
    let b = nu_to_lower(s);
    let i = b.values();
    let p = &s.p;
    let mut residuals = Vec::new();
    let mut weighted_sum = BigInt::zero(); // Σ_{j≤n} p^j ν_j
    for n in 0..s.nu.len().saturating_sub(1) {
        weighted_sum += pow_big(p, n) * &s.nu[n];
        let rhs = pow_big(p, n + 1) * &s.nu[n + 1] - (p - BigInt::one()) * &weighted_sum;
        let lhs = &i[n + 1] - p * p * &i[n];
        residuals.push(lhs - rhs);
    }
    residuals
}

// ---------------------------------------------------------------------------
// Slope estimation and the index lower bound
// ---------------------------------------------------------------------------

/// Finite-sample evidence for the limit `lim log_p |G:G^x| / x`.
///
/// `ratios` holds `log_p(value(x))/x` at each sample; `slope` is the
/// least-squares slope of `log_p(value(x))` against `x` over the last
/// `⌈k/2⌉` samples.  Both are `f64` estimates — this is the one
/// deliberately inexact corner of the module, and it reports evidence
/// for a limit, never the limit itself.
#[derive(Clone, Debug)]
pub struct SlopeReport {
    pub ratios: Vec<f64>,
    pub slope: f64,
    pub tail_len: usize,
}

/// Evaluates the index function at increasing positive samples
/// (extrapolating past the data with the last value, as documented on
/// [`IndexFunction::value_at`]) and reports the slope evidence.
pub fn ef_slope(f: &IndexFunction, samples: &[BigRational]) -> Result<SlopeReport, BreaksError> {
    if samples.is_empty() {
        return Err(BreaksError::Invalid("need at least one sample".into()));
    }
    for w in samples.windows(2) {
        if w[1] <= w[0] {
            return Err(BreaksError::Invalid("samples must be strictly increasing".into()));
        }
    }
    if !samples[0].is_positive() {
        return Err(BreaksError::Invalid("samples must be positive".into()));
    }
    let logp = log2_bigint(&f.p);
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    let mut ratios = Vec::with_capacity(samples.len());
    for x in samples {
        let v = f.value_at(x, true)?;
        let y = log2_bigint(&v) / logp;
        let xf = x.to_f64().ok_or_else(|| {
            BreaksError::Invalid(format!("sample {} too large for f64", ratio_string(x)))
        })?;
        ratios.push(y / xf);
        xs.push(xf);
        ys.push(y);
    }
    let tail_len = samples.len().div_ceil(2);
    let start = samples.len() - tail_len;
    let (xs, ys) = (&xs[start..], &ys[start..]);
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - xbar) * (y - ybar);
        den += (x - xbar) * (x - xbar);
    }
    let slope = if den == 0.0 { 0.0 } else { num / den };
    Ok(SlopeReport { ratios, slope, tail_len })
}

/// Outcome of the lower-bound check at one sample point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GxSample {
    /// `x < C`: the conclusion holds vacuously.
    Vacuous { x: BigRational },
    /// Within the data: the strict inequality held (or not).
    Checked { x: BigRational, index: BigInt, holds: bool },
    /// Beyond the supplied breaks: `|G:G_x|` is unknown, skipped.
    BeyondData { x: BigRational },
}

/// Report of [`lemma_gx_check`].
#[derive(Clone, Debug)]
pub struct GxReport {
    pub samples: Vec<GxSample>,
    /// True when no checked sample violated the inequality.
    pub all_hold: bool,
}

/// Verifies the index lower bound: under the hypothesis that every
/// listed generator satisfies `i_n < C·p^{λn}` for all supplied `n`,
/// the filtration of a rank-`d` group obeys `|G:G_x| > (x/C)^{d/λ}`.
///
/// The hypothesis is checked exactly first (rational `λ = u/v` via
/// `v`-th powers); a failure is [`BreaksError::HypothesisFailed`].
/// The conclusion is then checked at each sample against the rank-1
/// reconstruction `|G:G_x| = pⁿ` on `(b_{n−1}, b_n]` from the *first*
/// table entry — only `d = 1` data can be reconstructed this way, so
/// `d ≠ 1` is rejected.  Samples below `C` hold vacuously; samples
/// beyond the data are skipped with a marker.
pub fn lemma_gx_check(
    table: &[LowerBreaks],
    c: &BigRational,
    lambda: &BigRational,
    d: u32,
    samples: &[BigRational],
) -> Result<GxReport, BreaksError> {
    if table.is_empty() {
        return Err(BreaksError::Invalid("need at least one break sequence".into()));
    }
    if d != 1 {
        return Err(BreaksError::Invalid(
            "only rank-1 break data can be reconstructed; d must be 1".into(),
        ));
    }
    if !c.is_positive() || !lambda.is_positive() {
        return Err(BreaksError::Invalid("C and lambda must be positive".into()));
    }
    let p = table[0].p().clone();
    let u = lambda.numer().clone();
    let v = lambda
        .denom()
        .to_usize()
        .ok_or_else(|| BreaksError::Invalid("lambda denominator too large".into()))?;
    let u_usize = u
        .to_usize()
        .ok_or_else(|| BreaksError::Invalid("lambda numerator too large".into()))?;

    // Hypothesis: i_n < C·p^{u n / v}  ⟺  (i_n / C)^v < p^{u n}.
    for entry in table {
        if entry.p() != &p {
            return Err(BreaksError::Invalid("mixed primes in the table".into()));
        }
        for (n, i_n) in entry.values().iter().enumerate() {
            let lhs = num_traits::pow::pow(BigRational::from(i_n.clone()) / c, v);
            let rhs = BigRational::from(pow_big(&p, u_usize * n));
            if lhs >= rhs {
                return Err(BreaksError::HypothesisFailed { n, i_n: i_n.clone() });
            }
        }
    }

    // Conclusion at the samples: |G:G_x|^u > (x/C)^{d·v}, d = 1.
    let b = table[0].values();
    let mut out = Vec::with_capacity(samples.len());
    let mut all_hold = true;
    for x in samples {
        if x.is_negative() {
            return Err(BreaksError::Invalid("samples must be >= 0".into()));
        }
        if x < c {
            out.push(GxSample::Vacuous { x: x.clone() });
            continue;
        }
        let xq = x.clone();
        let last = BigRational::from(b[b.len() - 1].clone());
        if xq > last {
            out.push(GxSample::BeyondData { x: x.clone() });
            continue;
        }
        let k = b.iter().position(|b_n| xq <= BigRational::from(b_n.clone())).expect("within data");
        let index = pow_big(&p, k);
        let lhs = BigRational::from(num_traits::pow::pow(index.clone(), u_usize));
        let rhs = num_traits::pow::pow(&xq / c, v);
        let holds = lhs > rhs;
        if !holds {
            all_hold = false;
        }
        out.push(GxSample::Checked { x: x.clone(), index, holds });
    }
    Ok(GxReport { samples: out, all_hold })
}
