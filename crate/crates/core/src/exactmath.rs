//! Exact arbitrary-precision arithmetic and certified real numbers.
//!
//! All integer quantities in this crate (break sequences, ramification
//! numbers, indices of ramification subgroups) are [`BigInt`]s, and the
//! values of the Hasse–Herbrand functions φ and ψ are [`BigRational`]s.
//! Both are re-exported from the `num` family.
//!
//! A handful of constructions also need *irrational* constants of the
//! shape `p^{u/v}` — for instance the fractional powers appearing in
//! floor expressions of the form `⌊c + p^{h(n+1)}/(p^h − 1)⌋` with
//! non-integer rational `h`.  Floating point is useless there: a floor
//! taken a hair below an integer must be provably correct.  This module
//! provides [`CertifiedReal`], an exact expression DAG over rationals
//! and fractional powers that evaluates itself to a shrinking interval
//! with dyadic endpoints at any requested working precision.
//! [`certified_floor`] and [`certified_compare`] drive that refinement
//! (precision doubling from 64 bits up to a configurable cap, 16384 by
//! default) until the answer is certain, and report an error rather
//! than ever rounding silently.
//!
//! Exponents are restricted to rationals.  Every irrational constant
//! needed downstream has the form `p^{u/v}` or a rational combination
//! of such powers, and rational exponents keep every floor decidable:
//! a sum `Σ q_j · p^{u_j/v}` is rational only when all fractional
//! powers cancel, which the symbolic layer detects, so interval
//! refinement terminates on every non-degenerate input.

use std::cmp::Ordering;
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Pow, Signed, Zero};

pub use num_bigint::BigInt;
pub use num_rational::BigRational;

/// Working precision used for the first evaluation of every expression.
pub const INITIAL_PRECISION: u32 = 64;

/// Default ceiling for refinement precision, in bits.
pub const DEFAULT_PRECISION_CAP: u32 = 16384;

static PRECISION_CAP: AtomicU32 = AtomicU32::new(DEFAULT_PRECISION_CAP);

/// Sets the global refinement cap in bits (minimum 64).
///
/// Refinement loops double the working precision until they certify an
/// answer or exceed this cap, so raising it trades time for reach.
pub fn set_precision_cap(bits: u32) {
    PRECISION_CAP.store(bits.max(INITIAL_PRECISION), AtomicOrdering::SeqCst);
}

/// Returns the current global refinement cap in bits.
pub fn precision_cap() -> u32 {
    PRECISION_CAP.load(AtomicOrdering::SeqCst)
}

/// Errors from certified arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExactError {
    /// `pow_rational` requires a base ≥ 2.
    InvalidBase(BigInt),
    /// Exponent numerator or denominator out of supported range.
    InvalidExponent(String),
    /// Division by a value that is symbolically exactly zero.
    DivisionByZero,
    /// Refinement reached the precision cap without certifying an
    /// answer.  The payload is the cap that was in force.
    RefinementCap { bits: u32 },
}

impl fmt::Display for ExactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactError::InvalidBase(b) => write!(f, "pow_rational requires base >= 2, got {b}"),
            ExactError::InvalidExponent(msg) => write!(f, "unsupported exponent: {msg}"),
            ExactError::DivisionByZero => write!(f, "division by exact zero"),
            ExactError::RefinementCap { bits } => {
                write!(f, "could not certify answer within the {bits}-bit precision cap")
            }
        }
    }
}

impl std::error::Error for ExactError {}

// ---------------------------------------------------------------------------
// Dyadic rationals
// ---------------------------------------------------------------------------

/// A dyadic rational `mant · 2^exp`.
///
/// Dyadics make interval endpoints cheap: halving is exact, directed
/// rounding only ever truncates mantissa bits, and denominators never
/// grow under addition or multiplication.
#[derive(Clone, Debug)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

fn div_ceil_big(a: &BigInt, b: &BigInt) -> BigInt {
    -(-a).div_floor(b)
}

impl Dyadic {
    /// Builds `mant · 2^exp`.
    pub fn new(mant: BigInt, exp: i64) -> Self {
        Dyadic { mant, exp }.normalized()
    }

    pub fn zero() -> Self {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { mant: BigInt::one(), exp: 0 }
    }

    pub fn from_bigint(n: &BigInt) -> Self {
        Dyadic { mant: n.clone(), exp: 0 }.normalized()
    }

    fn normalized(mut self) -> Self {
        if self.mant.is_zero() {
            self.exp = 0;
        } else if let Some(t) = self.mant.trailing_zeros() {
            if t > 0 {
                self.mant >>= t;
                self.exp += t as i64;
            }
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    /// The exact value as a `BigRational`.
    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from(&self.mant << (self.exp as u64))
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << ((-self.exp) as u64))
        }
    }

    /// Exact floor.
    pub fn floor(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << (self.exp as u64)
        } else {
            self.mant.div_floor(&(BigInt::one() << ((-self.exp) as u64)))
        }
    }

    /// Rounds toward −∞ keeping at most `prec` mantissa bits.
    fn round_down(&self, prec: u32) -> Dyadic {
        let bits = self.mant.bits();
        if bits <= prec as u64 {
            return self.clone();
        }
        let s = bits - prec as u64;
        let mant = self.mant.div_floor(&(BigInt::one() << s));
        Dyadic { mant, exp: self.exp + s as i64 }.normalized()
    }

    /// Rounds toward +∞ keeping at most `prec` mantissa bits.
    fn round_up(&self, prec: u32) -> Dyadic {
        let bits = self.mant.bits();
        if bits <= prec as u64 {
            return self.clone();
        }
        let s = bits - prec as u64;
        let mant = div_ceil_big(&self.mant, &(BigInt::one() << s));
        Dyadic { mant, exp: self.exp + s as i64 }.normalized()
    }

    fn add(&self, rhs: &Dyadic) -> Dyadic {
        let (lo_exp, a, b) = self.aligned(rhs);
        Dyadic { mant: a + b, exp: lo_exp }.normalized()
    }

    fn sub(&self, rhs: &Dyadic) -> Dyadic {
        let (lo_exp, a, b) = self.aligned(rhs);
        Dyadic { mant: a - b, exp: lo_exp }.normalized()
    }

    fn mul(&self, rhs: &Dyadic) -> Dyadic {
        Dyadic { mant: &self.mant * &rhs.mant, exp: self.exp + rhs.exp }.normalized()
    }

    fn neg(&self) -> Dyadic {
        Dyadic { mant: -&self.mant, exp: self.exp }
    }

    /// Directed division: a lower bound of `self / rhs` when `up` is
    /// false, an upper bound when `up` is true.  `rhs` must be nonzero.
    fn div_dir(&self, rhs: &Dyadic, prec: u32, up: bool) -> Dyadic {
        debug_assert!(!rhs.mant.is_zero());
        let shift = prec as u64 + rhs.mant.bits();
        let num = &self.mant << shift;
        let mant = if up { div_ceil_big(&num, &rhs.mant) } else { num.div_floor(&rhs.mant) };
        Dyadic { mant, exp: self.exp - rhs.exp - shift as i64 }.normalized()
    }

    /// Mantissas of both operands shifted to a common exponent.
    fn aligned(&self, rhs: &Dyadic) -> (i64, BigInt, BigInt) {
        if self.exp >= rhs.exp {
            let a = &self.mant << ((self.exp - rhs.exp) as u64);
            (rhs.exp, a, rhs.mant.clone())
        } else {
            let b = &rhs.mant << ((rhs.exp - self.exp) as u64);
            (self.exp, self.mant.clone(), b)
        }
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (_, a, b) = self.aligned(other);
        a.cmp(&b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", decimal_string(&self.to_rational(), 12, false))
    }
}

// ---------------------------------------------------------------------------
// Intervals
// ---------------------------------------------------------------------------

/// A closed interval with dyadic endpoints, `lo ≤ hi`.
///
/// All arithmetic rounds outward, so an interval that encloses the true
/// value of each operand encloses the true value of the result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: Dyadic,
    hi: Dyadic,
}

impl Interval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    /// The degenerate interval `[d, d]`.
    pub fn point(d: Dyadic) -> Self {
        Interval { lo: d.clone(), hi: d }
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    /// Exact width `hi − lo` as a rational.
    pub fn width(&self) -> BigRational {
        self.hi.sub(&self.lo).to_rational()
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    fn round_out(&self, prec: u32) -> Interval {
        Interval { lo: self.lo.round_down(prec), hi: self.hi.round_up(prec) }
    }

    fn add(&self, rhs: &Interval, prec: u32) -> Interval {
        Interval { lo: self.lo.add(&rhs.lo), hi: self.hi.add(&rhs.hi) }.round_out(prec)
    }

    fn sub(&self, rhs: &Interval, prec: u32) -> Interval {
        Interval { lo: self.lo.sub(&rhs.hi), hi: self.hi.sub(&rhs.lo) }.round_out(prec)
    }

    fn mul(&self, rhs: &Interval, prec: u32) -> Interval {
        let mut products = [
            self.lo.mul(&rhs.lo),
            self.lo.mul(&rhs.hi),
            self.hi.mul(&rhs.lo),
            self.hi.mul(&rhs.hi),
        ];
        products.sort();
        let [lo, .., hi] = products;
        Interval { lo, hi }.round_out(prec)
    }

    fn neg(&self) -> Interval {
        Interval { lo: self.hi.neg(), hi: self.lo.neg() }
    }

    fn sign(&self) -> Option<Ordering> {
        if self.lo.mant.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.mant.is_negative() {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    /// Reciprocal; `self` must not contain zero.
    fn recip(&self, prec: u32) -> Interval {
        Interval {
            lo: Dyadic::one().div_dir(&self.hi, prec, false),
            hi: Dyadic::one().div_dir(&self.lo, prec, true),
        }
    }

    /// Outward-rounded enclosure of the rational `q`.
    fn from_rational(q: &BigRational, prec: u32) -> Interval {
        let den = q.denom();
        if den.is_one() {
            return Interval::point(Dyadic::from_bigint(q.numer()));
        }
        // A power-of-two denominator is exactly representable.
        if den.trailing_zeros() == Some(den.bits() - 1) {
            let exp = -((den.bits() - 1) as i64);
            return Interval::point(Dyadic::new(q.numer().clone(), exp));
        }
        let n = Dyadic::from_bigint(q.numer());
        let d = Dyadic::from_bigint(den);
        Interval { lo: n.div_dir(&d, prec, false), hi: n.div_dir(&d, prec, true) }
    }
}

// ---------------------------------------------------------------------------
// Certified reals
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum Expr {
    Rational(BigRational),
    /// `base^{num/den}` with `base ≥ 2`, `den ≥ 1`, the fraction in
    /// lowest terms.  `exact` is populated when the value is rational
    /// (integer exponent, or base a perfect `den`-th power).
    Root { base: BigInt, num: i64, den: u32, exact: Option<BigRational> },
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
}

enum EvalProblem {
    /// A divisor interval straddles zero at the current precision.
    SpansZero,
    /// A divisor is symbolically exactly zero.
    ExactZero,
}

fn bigint_pow(base: &BigInt, e: u64) -> BigInt {
    Pow::pow(base, e)
}

impl Expr {
    fn exact_value(&self) -> Option<BigRational> {
        match self {
            Expr::Rational(q) => Some(q.clone()),
            Expr::Root { exact, .. } => exact.clone(),
            Expr::Add(a, b) => Some(a.exact_value()? + b.exact_value()?),
            Expr::Sub(a, b) => Some(a.exact_value()? - b.exact_value()?),
            Expr::Mul(a, b) => Some(a.exact_value()? * b.exact_value()?),
            Expr::Div(a, b) => {
                let d = b.exact_value()?;
                if d.is_zero() {
                    None
                } else {
                    Some(a.exact_value()? / d)
                }
            }
            Expr::Neg(a) => Some(-a.exact_value()?),
        }
    }

    fn eval(&self, prec: u32) -> Result<Interval, EvalProblem> {
        match self {
            Expr::Rational(q) => Ok(Interval::from_rational(q, prec)),
            Expr::Root { exact: Some(q), .. } => Ok(Interval::from_rational(q, prec)),
            Expr::Root { base, num, den, exact: None } => Ok(eval_root(base, *num, *den, prec)),
            Expr::Add(a, b) => Ok(a.eval(prec)?.add(&b.eval(prec)?, prec)),
            Expr::Sub(a, b) => Ok(a.eval(prec)?.sub(&b.eval(prec)?, prec)),
            Expr::Mul(a, b) => Ok(a.eval(prec)?.mul(&b.eval(prec)?, prec)),
            Expr::Div(a, b) => {
                let num = a.eval(prec)?;
                let den = b.eval(prec)?;
                if den.sign().is_none() {
                    if b.exact_value().map_or(false, |q| q.is_zero()) {
                        return Err(EvalProblem::ExactZero);
                    }
                    return Err(EvalProblem::SpansZero);
                }
                Ok(num.mul(&den.recip(prec), prec))
            }
            Expr::Neg(a) => Ok(a.eval(prec)?.neg()),
        }
    }
}

/// Enclosure of `base^{num/den}` for an irrational value, by an integer
/// `den`-th root of the scaled power: with `n = base^{|num|}`,
/// `r = ⌊(n · 2^{den·prec})^{1/den}⌋` gives
/// `r · 2^{−prec} ≤ n^{1/den} < (r+1) · 2^{−prec}`.
fn eval_root(base: &BigInt, num: i64, den: u32, prec: u32) -> Interval {
    let n = bigint_pow(base, num.unsigned_abs());
    let scaled = n << (den as u64 * prec as u64);
    let r = scaled.nth_root(den);
    let pos = Interval {
        lo: Dyadic::new(r.clone(), -(prec as i64)),
        hi: Dyadic::new(r + 1, -(prec as i64)),
    };
    if num >= 0 {
        pos
    } else {
        pos.recip(prec)
    }
}

/// An exact real number: an expression over rationals and fractional
/// powers `p^{u/v}`, carrying a certified enclosure of its value.
///
/// Values are immutable; [`CertifiedReal::refined`] returns a *new*
/// value whose enclosure was computed at higher working precision.
/// Arithmetic composes expression DAGs, so precision lost in an
/// intermediate step is always recoverable by re-evaluating the whole
/// expression — no decision downstream ever rests on a stale rounding.
///
/// # Examples
///
/// ```
/// use ramlab_core::exactmath::{pow_rational, certified_floor, BigInt, BigRational};
///
/// // ⌊3^{5/2}⌋ = ⌊15.588…⌋ = 15, certified.
/// let x = pow_rational(&BigInt::from(3), &BigRational::new(5.into(), 2.into())).unwrap();
/// assert_eq!(certified_floor(&x).unwrap(), BigInt::from(15));
/// ```
#[derive(Clone, Debug)]
pub struct CertifiedReal {
    expr: Arc<Expr>,
    bounds: Interval,
    prec: u32,
}

impl CertifiedReal {
    fn build(expr: Arc<Expr>) -> Result<Self, ExactError> {
        // The first evaluation may hit a divisor interval that straddles
        // zero; retry at doubled precision like the refinement loops do.
        let cap = precision_cap();
        let mut prec = INITIAL_PRECISION;
        loop {
            match expr.eval(prec) {
                Ok(bounds) => return Ok(CertifiedReal { expr, bounds, prec }),
                Err(EvalProblem::ExactZero) => return Err(ExactError::DivisionByZero),
                Err(EvalProblem::SpansZero) => {
                    if prec >= cap {
                        return Err(ExactError::RefinementCap { bits: cap });
                    }
                    prec = (prec * 2).min(cap);
                }
            }
        }
    }

    /// An exact rational value (zero-width enclosure).
    pub fn from_rational(q: BigRational) -> Self {
        CertifiedReal::build(Arc::new(Expr::Rational(q)))
            .expect("rational evaluation cannot fail")
    }

    pub fn from_bigint(n: &BigInt) -> Self {
        CertifiedReal::from_rational(BigRational::from(n.clone()))
    }

    pub fn from_int(n: i64) -> Self {
        CertifiedReal::from_rational(BigRational::from(BigInt::from(n)))
    }

    /// The rational value, when the expression is symbolically exact.
    ///
    /// This is a conservative test: it recognizes rational leaves,
    /// integer exponents, perfect-power bases, and rational combinations
    /// thereof, but does not attempt to prove identities between
    /// distinct irrational subtrees.
    pub fn exact_value(&self) -> Option<BigRational> {
        self.expr.exact_value()
    }

    /// The current certified enclosure.
    pub fn bounds(&self) -> &Interval {
        &self.bounds
    }

    /// The current enclosure as exact rational endpoints `(lo, hi)`.
    pub fn bounds_rational(&self) -> (BigRational, BigRational) {
        (self.bounds.lo.to_rational(), self.bounds.hi.to_rational())
    }

    /// Working precision, in bits, of the current enclosure.
    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Re-evaluates the expression at `prec` bits and returns the
    /// resulting value.  The new enclosure is contained in (or equal
    /// to) the old one up to the outward rounding at each node.
    pub fn refined(&self, prec: u32) -> Result<CertifiedReal, ExactError> {
        match self.expr.eval(prec) {
            Ok(bounds) => Ok(CertifiedReal { expr: Arc::clone(&self.expr), bounds, prec }),
            // A divisor that excluded zero once keeps excluding it at
            // higher precision, so only an exact-zero divisor can
            // surface here, and only if the DAG was built unchecked.
            Err(_) => Err(ExactError::DivisionByZero),
        }
    }

    pub fn add(&self, rhs: &CertifiedReal) -> CertifiedReal {
        CertifiedReal::build(Arc::new(Expr::Add(self.share(), rhs.share())))
            .expect("addition cannot fail")
    }

    pub fn sub(&self, rhs: &CertifiedReal) -> CertifiedReal {
        CertifiedReal::build(Arc::new(Expr::Sub(self.share(), rhs.share())))
            .expect("subtraction cannot fail")
    }

    pub fn mul(&self, rhs: &CertifiedReal) -> CertifiedReal {
        CertifiedReal::build(Arc::new(Expr::Mul(self.share(), rhs.share())))
            .expect("multiplication cannot fail")
    }

    pub fn neg(&self) -> CertifiedReal {
        CertifiedReal::build(Arc::new(Expr::Neg(self.share()))).expect("negation cannot fail")
    }

    /// Division.  Fails with [`ExactError::DivisionByZero`] when `rhs`
    /// is symbolically zero, or with [`ExactError::RefinementCap`] when
    /// the sign of `rhs` cannot be certified within the cap.
    pub fn div(&self, rhs: &CertifiedReal) -> Result<CertifiedReal, ExactError> {
        CertifiedReal::build(Arc::new(Expr::Div(self.share(), rhs.share())))
    }

    fn share(&self) -> Arc<Expr> {
        Arc::clone(&self.expr)
    }
}

impl fmt::Display for CertifiedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = self.exact_value() {
            write!(f, "{q}")
        } else {
            write!(f, "[{}, {}]", self.bounds.lo, self.bounds.hi)
        }
    }
}

impl std::ops::Add for &CertifiedReal {
    type Output = CertifiedReal;
    fn add(self, rhs: &CertifiedReal) -> CertifiedReal {
        CertifiedReal::add(self, rhs)
    }
}

impl std::ops::Sub for &CertifiedReal {
    type Output = CertifiedReal;
    fn sub(self, rhs: &CertifiedReal) -> CertifiedReal {
        CertifiedReal::sub(self, rhs)
    }
}

impl std::ops::Mul for &CertifiedReal {
    type Output = CertifiedReal;
    fn mul(self, rhs: &CertifiedReal) -> CertifiedReal {
        CertifiedReal::mul(self, rhs)
    }
}

impl std::ops::Neg for &CertifiedReal {
    type Output = CertifiedReal;
    fn neg(self) -> CertifiedReal {
        CertifiedReal::neg(self)
    }
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Certified `base^{u/v}` for `base ≥ 2` and a rational exponent.
///
/// Integer exponents and perfect-power bases take a symbolic path and
/// return a zero-width (exact) enclosure; genuinely irrational values
/// are enclosed by integer-root bounds at the working precision.
///
/// # Examples
///
/// ```
/// use ramlab_core::exactmath::{pow_rational, BigInt, BigRational};
///
/// let eight = pow_rational(&BigInt::from(2), &BigRational::from(BigInt::from(3))).unwrap();
/// assert_eq!(eight.exact_value(), Some(BigRational::from(BigInt::from(8))));
///
/// let irr = pow_rational(&BigInt::from(3), &BigRational::new(5.into(), 2.into())).unwrap();
/// assert!(irr.exact_value().is_none());
/// let (lo, hi) = irr.bounds_rational();
/// assert!(lo < hi);
/// ```
pub fn pow_rational(base: &BigInt, exponent: &BigRational) -> Result<CertifiedReal, ExactError> {
    if base < &BigInt::from(2) {
        return Err(ExactError::InvalidBase(base.clone()));
    }
    let num = i64::try_from(exponent.numer()).map_err(|_| {
        ExactError::InvalidExponent(format!("numerator {} out of range", exponent.numer()))
    })?;
    let den = u32::try_from(exponent.denom()).map_err(|_| {
        ExactError::InvalidExponent(format!("denominator {} out of range", exponent.denom()))
    })?;
    let exact = exact_power(base, num, den);
    CertifiedReal::build(Arc::new(Expr::Root { base: base.clone(), num, den, exact }))
}

/// Rational value of `base^{num/den}` when one exists.
fn exact_power(base: &BigInt, num: i64, den: u32) -> Option<BigRational> {
    let root = if den == 1 {
        base.clone()
    } else {
        let r = base.nth_root(den);
        if bigint_pow(&r, den as u64) != *base {
            return None;
        }
        r
    };
    let power = bigint_pow(&root, num.unsigned_abs());
    if num >= 0 {
        Some(BigRational::from(power))
    } else {
        Some(BigRational::new(BigInt::one(), power))
    }
}

/// Certified floor.
///
/// Takes the symbolic path when the value is exactly rational;
/// otherwise refines the enclosure (doubling precision up to the
/// global cap) until both endpoints have the same floor.
///
/// # Errors
///
/// [`ExactError::RefinementCap`] when the value cannot be separated
/// from an integer within the cap — in particular when the expression
/// is an exact integer that the symbolic layer fails to recognize.
pub fn certified_floor(x: &CertifiedReal) -> Result<BigInt, ExactError> {
    if let Some(q) = x.exact_value() {
        return Ok(q.floor().to_integer());
    }
    let cap = precision_cap();
    let mut current = x.clone();
    loop {
        let flo = current.bounds.lo.floor();
        let fhi = current.bounds.hi.floor();
        if flo == fhi {
            return Ok(flo);
        }
        if current.prec >= cap {
            return Err(ExactError::RefinementCap { bits: cap });
        }
        current = current.refined((current.prec * 2).min(cap))?;
    }
}

/// Certified three-way comparison.
///
/// Equality is only ever reported symbolically (shared subexpression
/// or equal exact rational values); strict orderings are certified by
/// refining both enclosures until they are disjoint.
///
/// # Errors
///
/// [`ExactError::RefinementCap`] when the two values may be equal but
/// are not symbolically comparable.
pub fn certified_compare(x: &CertifiedReal, y: &CertifiedReal) -> Result<Ordering, ExactError> {
    if Arc::ptr_eq(&x.expr, &y.expr) {
        return Ok(Ordering::Equal);
    }
    let ex = x.exact_value();
    let ey = y.exact_value();
    if let (Some(a), Some(b)) = (&ex, &ey) {
        return Ok(a.cmp(b));
    }
    let cap = precision_cap();
    let mut cx = x.clone();
    let mut cy = y.clone();
    loop {
        if cx.bounds.hi < cy.bounds.lo {
            return Ok(Ordering::Less);
        }
        if cy.bounds.hi < cx.bounds.lo {
            return Ok(Ordering::Greater);
        }
        let prec = cx.prec.max(cy.prec);
        if prec >= cap {
            return Err(ExactError::RefinementCap { bits: cap });
        }
        let next = (prec * 2).min(cap);
        cx = cx.refined(next)?;
        cy = cy.refined(next)?;
    }
}

// ---------------------------------------------------------------------------
// String conversions shared by the JSON layer
// ---------------------------------------------------------------------------

/// Parses a decimal-string integer.
pub fn parse_bigint(s: &str) -> Result<BigInt, String> {
    s.trim().parse::<BigInt>().map_err(|e| format!("invalid integer {s:?}: {e}"))
}

/// Parses `"n"` or `"n/d"` into a rational.
pub fn parse_ratio(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    match s.split_once('/') {
        None => Ok(BigRational::from(parse_bigint(s)?)),
        Some((n, d)) => {
            let den = parse_bigint(d)?;
            if den.is_zero() {
                return Err(format!("invalid rational {s:?}: zero denominator"));
            }
            Ok(BigRational::new(parse_bigint(n)?, den))
        }
    }
}

/// Formats a rational as `"n"` when integral, else `"n/d"`.
pub fn ratio_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Decimal string of `q` with `digits` fractional digits, rounded
/// toward −∞ (`round_up` false) or +∞ (`round_up` true).
pub fn decimal_string(q: &BigRational, digits: usize, round_up: bool) -> String {
    let scale = bigint_pow(&BigInt::from(10), digits as u64);
    let scaled = q * BigRational::from(scale.clone());
    let n = if round_up {
        div_ceil_big(scaled.numer(), scaled.denom())
    } else {
        scaled.numer().div_floor(scaled.denom())
    };
    if digits == 0 {
        return n.to_string();
    }
    let (sign, mag) = if n.is_negative() { ("-", -&n) } else { ("", n.clone()) };
    let (int, frac) = mag.div_rem(&scale);
    format!("{sign}{int}.{frac:0>width$}", width = digits)
}
