//! Wild power-series automorphisms under composition, at finite
//! truncation.
//!
//! Over a field `k` of characteristic `p`, the series
//! `t + a₂t² + a₃t³ + …` form a group under composition
//! `(f·g)(t) = f(g(t))` — the wild part of the group of invertible
//! series, which is isomorphic to the group of wild automorphisms of
//! `k((t))` fixing `k`.  (The isomorphism with automorphisms reverses
//! composition order; this module fixes `compose(f, g) = f(g(t))`, and
//! every ramification number computed here is insensitive to that
//! choice.)
//!
//! Everything is truncated mod `t^{N+1}`: a [`WildSeries`] knows its
//! coefficients `c_1..c_N` with `c_1 = 1`.  The ramification number
//! `i(σ) = v(σ(t) − t) − 1` of a truncated series is certain only when
//! it is strictly below `N`; otherwise [`RamResult::Exceeded`] is
//! reported, deliberately refusing to distinguish "torsion within
//! truncation" from "break beyond truncation" — neither is decidable
//! at finite `N`.
//!
//! Composition is the performance-critical kernel.  Three private
//! representations are used: packed bits for `F₂`, single `u64` words
//! with delayed modular reduction for prime fields of odd
//! characteristic, and generic [`FieldElement`] vectors for proper
//! extensions `F_{p^m}`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Largest supported extension degree for [`FieldSpec`].
pub const MAX_DEGREE: u32 = 4;

/// Errors from series and field construction or arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NottinghamError {
    /// The claimed characteristic is not prime (or out of range).
    NotPrime(u64),
    /// Extension degree is zero or exceeds [`MAX_DEGREE`].
    BadDegree(u32),
    /// Modulus polynomial missing, wrong degree, not monic, or reducible.
    BadModulus(String),
    /// A series violated wildness: `c_1 ≠ 1` or truncation `N < 2`.
    NotWild(String),
    /// Operands live over different fields.
    FieldMismatch,
    /// θ-series arithmetic degenerates in characteristic 2.
    CharTwo,
    /// Composition powers require a nonnegative exponent.
    NegativeExponent(BigInt),
    /// A JSON payload had the right shape but inadmissible values.
    BadEncoding(String),
}

impl fmt::Display for NottinghamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NottinghamError::NotPrime(p) => write!(f, "characteristic {p} is not a prime in [2, 2^31)"),
            NottinghamError::BadDegree(m) => {
                write!(f, "extension degree {m} not supported (must be 1..={MAX_DEGREE})")
            }
            NottinghamError::BadModulus(msg) => write!(f, "bad modulus polynomial: {msg}"),
            NottinghamError::NotWild(msg) => write!(f, "series is not wild: {msg}"),
            NottinghamError::FieldMismatch => write!(f, "operands live over different fields"),
            NottinghamError::CharTwo => {
                write!(f, "theta series is not defined in characteristic 2")
            }
            NottinghamError::NegativeExponent(k) => {
                write!(f, "composition power requires k >= 0, got {k}")
            }
            NottinghamError::BadEncoding(msg) => write!(f, "bad series encoding: {msg}"),
        }
    }
}

impl std::error::Error for NottinghamError {}

// ---------------------------------------------------------------------------
// Finite fields F_{p^m}, m ≤ 4
// ---------------------------------------------------------------------------

/// A finite field `F_{p^m}` presented as `F_p[x]/(modulus)`.
///
/// `p` must be prime (and below `2^31` so products fit in `u64`), and
/// the modulus must be monic, of degree `m`, and irreducible; for
/// `m = 1` the canonical modulus `x` is used and need not be given.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldSpec {
    p: u64,
    m: u32,
    modulus: Vec<u64>,
}

/// An element of `F_{p^m}`: coefficients with respect to the power
/// basis `1, x, …, x^{m−1}` of its [`FieldSpec`], reduced mod `p`.
///
/// Elements are plain data; all arithmetic goes through the owning
/// `FieldSpec`, which knows `p` and the modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldElement {
    c: [u64; MAX_DEGREE as usize],
}

impl FieldElement {
    fn zero() -> Self {
        FieldElement { c: [0; MAX_DEGREE as usize] }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0)
    }
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

// Dense polynomials over F_p (little-endian coefficient vectors),
// used only for the irreducibility check at field construction.
mod fppoly {
    pub fn trim(a: &mut Vec<u64>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    pub fn rem(a: &[u64], f: &[u64], p: u64) -> Vec<u64> {
        let mut r: Vec<u64> = a.to_vec();
        trim(&mut r);
        let df = f.len() - 1; // f monic
        while r.len() > df {
            let lead = r[r.len() - 1];
            let shift = r.len() - 1 - df;
            if lead != 0 {
                for j in 0..=df {
                    let idx = shift + j;
                    r[idx] = (r[idx] + (p - lead % p) * f[j]) % p;
                }
            }
            r.pop();
            trim(&mut r);
        }
        r
    }

    pub fn mulmod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return vec![];
        }
        let mut prod = vec![0u64; a.len() + b.len() - 1];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + ai * bj) % p;
            }
        }
        rem(&prod, f, p)
    }

    /// `g^e mod f` by binary powering.
    pub fn powmod(g: &[u64], e: u64, f: &[u64], p: u64) -> Vec<u64> {
        let mut result = vec![1u64];
        let mut base = g.to_vec();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = mulmod(&result, &base, f, p);
            }
            base = mulmod(&base, &base, f, p);
            e >>= 1;
        }
        result
    }

    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        trim(&mut a);
        trim(&mut b);
        while !b.is_empty() {
            // Make b monic so `rem` applies.
            let lead = *b.last().unwrap();
            let linv = mod_inv(lead, p);
            let monic: Vec<u64> = b.iter().map(|&c| c * linv % p).collect();
            let r = rem(&a, &monic, p);
            a = b;
            b = r;
            trim(&mut b);
        }
        a
    }

    pub fn mod_inv(a: u64, p: u64) -> u64 {
        // Fermat: a^{p−2} mod p.
        let mut result = 1u64;
        let mut base = a % p;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        result
    }

    pub fn sub_x(mut a: Vec<u64>, p: u64) -> Vec<u64> {
        if a.len() < 2 {
            a.resize(2, 0);
        }
        a[1] = (a[1] + p - 1) % p;
        trim(&mut a);
        a
    }
}

/// Irreducibility over `F_p` of a monic `f` of degree `m ≥ 2`:
/// `x^{p^m} ≡ x (mod f)` and, for every prime `q | m`,
/// `gcd(x^{p^{m/q}} − x, f)` is constant.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let m = (f.len() - 1) as u32;
    let x = vec![0u64, 1];
    // Successive Frobenius powers x^{p^k} mod f.
    let mut frob = Vec::with_capacity(m as usize + 1);
    frob.push(x.clone()); // x^{p^0}
    for _ in 0..m {
        let prev = frob.last().unwrap();
        frob.push(fppoly::powmod(prev, p, f, p));
    }
    if fppoly::sub_x(frob[m as usize].clone(), p) != Vec::<u64>::new() {
        return false;
    }
    for q in [2u32, 3] {
        if m % q == 0 {
            let g = fppoly::sub_x(frob[(m / q) as usize].clone(), p);
            let d = fppoly::gcd(&g, f, p);
            if d.len() > 1 {
                return false;
            }
        }
    }
    true
}

impl FieldSpec {
    /// The prime field `F_p`.
    pub fn gf(p: u64) -> Result<Self, NottinghamError> {
        if p >= 1 << 31 || !is_prime_u64(p) {
            return Err(NottinghamError::NotPrime(p));
        }
        Ok(FieldSpec { p, m: 1, modulus: vec![0, 1] })
    }

    /// The extension `F_p[x]/(modulus)` with `modulus` given as
    /// little-endian coefficients of a monic irreducible polynomial of
    /// degree `m = modulus.len() − 1 ∈ {2, …, 4}`.
    pub fn extension(p: u64, modulus: &[u64]) -> Result<Self, NottinghamError> {
        if p >= 1 << 31 || !is_prime_u64(p) {
            return Err(NottinghamError::NotPrime(p));
        }
        if modulus.len() < 3 {
            return Err(NottinghamError::BadModulus(format!(
                "need degree >= 2, got {} coefficients",
                modulus.len()
            )));
        }
        let m = (modulus.len() - 1) as u32;
        if m > MAX_DEGREE {
            return Err(NottinghamError::BadDegree(m));
        }
        let reduced: Vec<u64> = modulus.iter().map(|&c| c % p).collect();
        if reduced.last() != Some(&1) {
            return Err(NottinghamError::BadModulus("leading coefficient must be 1".into()));
        }
        if !is_irreducible(&reduced, p) {
            return Err(NottinghamError::BadModulus(format!(
                "polynomial {reduced:?} is reducible over F_{p}"
            )));
        }
        Ok(FieldSpec { p, m, modulus: reduced })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Modulus coefficients, little-endian, length `m + 1`.
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    /// Field size `p^m`.
    pub fn order(&self) -> u128 {
        (self.p as u128).pow(self.m)
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::zero()
    }

    pub fn one(&self) -> FieldElement {
        self.scalar(1)
    }

    /// The image of the integer `c` in the prime subfield.
    pub fn scalar(&self, c: u64) -> FieldElement {
        let mut e = FieldElement::zero();
        e.c[0] = c % self.p;
        e
    }

    /// Element from power-basis coefficients (reduced mod `p`; at most
    /// `m` may be given, missing ones are zero).
    pub fn element(&self, coeffs: &[u64]) -> Result<FieldElement, NottinghamError> {
        if coeffs.len() > self.m as usize {
            return Err(NottinghamError::BadEncoding(format!(
                "element has {} coefficients but the field has degree {}",
                coeffs.len(),
                self.m
            )));
        }
        let mut e = FieldElement::zero();
        for (i, &c) in coeffs.iter().enumerate() {
            e.c[i] = c % self.p;
        }
        Ok(e)
    }

    /// Power-basis coefficients, length `m`.
    pub fn coeffs(&self, e: &FieldElement) -> Vec<u64> {
        e.c[..self.m as usize].to_vec()
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let mut r = FieldElement::zero();
        for i in 0..self.m as usize {
            r.c[i] = (a.c[i] + b.c[i]) % self.p;
        }
        r
    }

    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let mut r = FieldElement::zero();
        for i in 0..self.m as usize {
            r.c[i] = (a.c[i] + self.p - b.c[i]) % self.p;
        }
        r
    }

    pub fn neg(&self, a: &FieldElement) -> FieldElement {
        self.sub(&FieldElement::zero(), a)
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let m = self.m as usize;
        if m == 1 {
            let mut r = FieldElement::zero();
            r.c[0] = a.c[0] * b.c[0] % self.p;
            return r;
        }
        // Schoolbook product, then reduction by the monic modulus.
        let mut prod = [0u64; 2 * MAX_DEGREE as usize - 1];
        for i in 0..m {
            if a.c[i] == 0 {
                continue;
            }
            for j in 0..m {
                prod[i + j] = (prod[i + j] + a.c[i] * b.c[j]) % self.p;
            }
        }
        for d in (m..2 * m - 1).rev() {
            let lead = prod[d];
            if lead != 0 {
                prod[d] = 0;
                for j in 0..m {
                    let idx = d - m + j;
                    prod[idx] = (prod[idx] + (self.p - self.modulus[j]) * lead) % self.p;
                }
            }
        }
        let mut r = FieldElement::zero();
        r.c[..m].copy_from_slice(&prod[..m]);
        r
    }

    /// Scalar multiple by an integer.
    pub fn scale(&self, a: &FieldElement, k: u64) -> FieldElement {
        let k = k % self.p;
        let mut r = FieldElement::zero();
        for i in 0..self.m as usize {
            r.c[i] = a.c[i] * k % self.p;
        }
        r
    }

    /// Multiplicative inverse by Fermat: `a^{p^m − 2}`.
    ///
    /// Returns zero for zero input; callers guard.
    pub fn inv(&self, a: &FieldElement) -> FieldElement {
        let mut e: u128 = self.order() - 2;
        let mut result = self.one();
        let mut base = *a;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(&result, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        result
    }

    /// Uniformly random element.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        let mut e = FieldElement::zero();
        for i in 0..self.m as usize {
            e.c[i] = rng.gen_range(0..self.p);
        }
        e
    }

    /// Uniformly random nonzero element.
    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        loop {
            let e = self.random_element(rng);
            if !e.is_zero() {
                return e;
            }
        }
    }

    fn format_element(&self, e: &FieldElement) -> String {
        if self.m == 1 {
            e.c[0].to_string()
        } else {
            format!("{:?}", &e.c[..self.m as usize])
        }
    }
}

// ---------------------------------------------------------------------------
// Wild series
// ---------------------------------------------------------------------------

/// The result of a ramification-number computation at truncation `N`.
///
/// A [`RamResult::Definite`] value `v` always satisfies `1 ≤ v < N`.
/// [`RamResult::Exceeded`] means the series agrees with `t` mod
/// `t^{N+1}`: either the true break is ≥ N, or the automorphism is
/// torsion and has no finite break at all — finite truncation cannot
/// tell the two apart, so neither is ever claimed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RamResult {
    Definite(u64),
    Exceeded,
}

impl RamResult {
    pub fn value(&self) -> Option<u64> {
        match self {
            RamResult::Definite(v) => Some(*v),
            RamResult::Exceeded => None,
        }
    }

    pub fn is_definite(&self) -> bool {
        matches!(self, RamResult::Definite(_))
    }
}

impl fmt::Display for RamResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RamResult::Definite(v) => write!(f, "{v}"),
            RamResult::Exceeded => write!(f, "Exceeded"),
        }
    }
}

/// A wild series `t + c_2 t² + … + c_N t^N`, truncated mod `t^{N+1}`,
/// over a finite field.
///
/// Wildness means `c_1 = 1`; the truncation order must be at least 2.
/// Coefficients are stored densely indexed by degree.
///
/// # Examples
///
/// ```
/// use ramlab_core::nottingham::{compose, ram_number, FieldSpec, RamResult, WildSeries};
///
/// let f2 = FieldSpec::gf(2).unwrap();
/// let f = WildSeries::from_support(&f2, 8, &[2]).unwrap(); // t + t²
/// let ff = compose(&f, &f).unwrap();                       // t + t⁴
/// assert_eq!(ram_number(&ff), RamResult::Definite(3));
/// ```
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WildSeries {
    field: FieldSpec,
    n: usize,
    /// `coeff[d]` = coefficient of `t^d`; `coeff[0] = 0`, `coeff[1] = 1`.
    coeff: Vec<FieldElement>,
}

#[derive(Serialize, Deserialize)]
struct WildSeriesJson {
    p: u64,
    m: u32,
    #[serde(default)]
    modulus: Vec<u64>,
    #[serde(rename = "N")]
    n: usize,
    coeffs: Vec<Vec<u64>>,
}

impl WildSeries {
    /// Builds a series from coefficients `c_1..c_N` (index 0 ↦ `c_1`).
    pub fn new(
        field: FieldSpec,
        n: usize,
        coefficients: &[FieldElement],
    ) -> Result<Self, NottinghamError> {
        if n < 2 {
            return Err(NottinghamError::NotWild(format!("truncation N = {n} < 2")));
        }
        if coefficients.len() != n {
            return Err(NottinghamError::NotWild(format!(
                "expected {n} coefficients c_1..c_{n}, got {}",
                coefficients.len()
            )));
        }
        if coefficients[0] != field.one() {
            return Err(NottinghamError::NotWild("c_1 must be 1".into()));
        }
        let mut coeff = vec![FieldElement::zero(); n + 1];
        coeff[1..].copy_from_slice(coefficients);
        Ok(WildSeries { field, n, coeff })
    }

    /// The identity `t` at truncation `n`.
    pub fn identity(field: &FieldSpec, n: usize) -> Result<Self, NottinghamError> {
        let mut coeffs = vec![FieldElement::zero(); n];
        coeffs[0] = field.one();
        WildSeries::new(field.clone(), n, &coeffs)
    }

    /// Series with coefficient 1 exactly at the listed degrees (plus
    /// the mandatory `c_1 = 1`): handy for `t + t²`-style examples.
    pub fn from_support(
        field: &FieldSpec,
        n: usize,
        degrees: &[usize],
    ) -> Result<Self, NottinghamError> {
        let mut coeffs = vec![FieldElement::zero(); n];
        coeffs[0] = field.one();
        for &d in degrees {
            if d < 2 || d > n {
                return Err(NottinghamError::NotWild(format!(
                    "support degree {d} outside 2..={n}"
                )));
            }
            coeffs[d - 1] = field.one();
        }
        WildSeries::new(field.clone(), n, &coeffs)
    }

    /// Uniformly random wild series: `c_1 = 1`, higher coefficients
    /// uniform.  With `min_break = v ≥ 1`, coefficients `c_2..c_v` are
    /// pinned to zero and `c_{v+1}` is forced nonzero, so the series
    /// has `i(σ) = v` exactly (requires `v + 1 ≤ N`).
    pub fn random<R: Rng + ?Sized>(
        field: &FieldSpec,
        n: usize,
        min_break: Option<u64>,
        rng: &mut R,
    ) -> Result<Self, NottinghamError> {
        let mut coeffs = vec![FieldElement::zero(); n];
        coeffs[0] = field.one();
        let start = match min_break {
            None => 2usize,
            Some(v) => {
                let v = v as usize;
                if v + 1 > n {
                    return Err(NottinghamError::NotWild(format!(
                        "cannot pin break {v} at truncation {n}"
                    )));
                }
                coeffs[v] = field.random_nonzero(rng);
                v + 2
            }
        };
        for c in coeffs.iter_mut().skip(start - 1) {
            *c = field.random_element(rng);
        }
        WildSeries::new(field.clone(), n, &coeffs)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    /// Truncation order `N`: the series is known mod `t^{N+1}`.
    pub fn truncation(&self) -> usize {
        self.n
    }

    /// Coefficient of `t^i`, `1 ≤ i ≤ N`.
    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeff[i]
    }

    /// JSON encoding
    /// `{"p":…, "m":…, "modulus":[…], "N":…, "coeffs":[[…],…]}` with
    /// `coeffs[0]` holding `c_1`.  The modulus is `[]` for `m = 1`.
    pub fn to_json(&self) -> String {
        let fs = &self.field;
        let json = WildSeriesJson {
            p: fs.p,
            m: fs.m,
            modulus: if fs.m == 1 { vec![] } else { fs.modulus.clone() },
            n: self.n,
            coeffs: self.coeff[1..].iter().map(|e| fs.coeffs(e)).collect(),
        };
        serde_json::to_string(&json).expect("series serialization cannot fail")
    }

    /// Parses the encoding produced by [`WildSeries::to_json`],
    /// validating primality, irreducibility, and wildness.
    pub fn from_json(s: &str) -> Result<Self, NottinghamError> {
        let json: WildSeriesJson = serde_json::from_str(s)
            .map_err(|e| NottinghamError::BadEncoding(e.to_string()))?;
        let field = if json.m == 1 {
            if !(json.modulus.is_empty() || json.modulus == [0, 1]) {
                return Err(NottinghamError::BadEncoding(
                    "m = 1 takes no modulus (or the canonical [0,1])".into(),
                ));
            }
            FieldSpec::gf(json.p)?
        } else {
            if json.modulus.is_empty() {
                return Err(NottinghamError::BadModulus("required when m > 1".into()));
            }
            let fs = FieldSpec::extension(json.p, &json.modulus)?;
            if fs.m != json.m {
                return Err(NottinghamError::BadEncoding(format!(
                    "modulus degree {} does not match m = {}",
                    fs.m, json.m
                )));
            }
            fs
        };
        let mut coeffs = Vec::with_capacity(json.coeffs.len());
        for c in &json.coeffs {
            coeffs.push(field.element(c)?);
        }
        WildSeries::new(field, json.n, &coeffs)
    }
}

impl fmt::Display for WildSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for d in 1..=self.n {
            let c = &self.coeff[d];
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let cs = self.field.format_element(c);
            match (cs.as_str(), d) {
                ("1", 1) => write!(f, "t")?,
                ("1", _) => write!(f, "t^{d}")?,
                (_, 1) => write!(f, "{cs}·t")?,
                (_, _) => write!(f, "{cs}·t^{d}")?,
            }
        }
        if first {
            write!(f, "t")?; // identity prints its linear term
        }
        write!(f, " (mod t^{})", self.n + 1)
    }
}

// ---------------------------------------------------------------------------
// Composition kernels
// ---------------------------------------------------------------------------
//
// Each kernel works on a degree-indexed representation of length n+1
// (index = exponent of t) and provides exactly the primitives the
// shared algorithms (substitution, Newton inversion) need.  All loops
// are bounded by an explicit working truncation `m ≤ n` so the Newton
// iteration can work at doubling precision.

trait Kernel {
    type Rep: Clone;

    fn from_elems(&self, coeff: &[FieldElement], fs: &FieldSpec) -> Self::Rep;
    fn to_elems(&self, rep: &Self::Rep, n: usize, fs: &FieldSpec) -> Vec<FieldElement>;
    /// The series `t`.
    fn identity(&self, n: usize) -> Self::Rep;
    /// Lowest degree in `lo..=hi` with a nonzero coefficient.
    fn min_support(&self, a: &Self::Rep, lo: usize, hi: usize) -> Option<usize>;
    /// `Σ_{i≥1} h_i g^i` mod `t^{m+1}` (`h_0` is ignored, `g_0 = 0`).
    fn subst(&self, h: &Self::Rep, g: &Self::Rep, m: usize) -> Self::Rep;
    /// `a − b` mod `t^{m+1}`.
    fn sub(&self, a: &Self::Rep, b: &Self::Rep, m: usize) -> Self::Rep;
    /// `a·b` mod `t^{m+1}` where `a` has valuation ≥ `va`, `b` ≥ `vb`.
    fn mul(&self, a: &Self::Rep, va: usize, b: &Self::Rep, vb: usize, m: usize) -> Self::Rep;
    /// Inverse of a unit series with constant term 1, mod `t^{m+1}`.
    fn unit_inv(&self, u: &Self::Rep, m: usize) -> Self::Rep;
    /// `d ↦ ((d+1) mod p)·c_{d+1}` for `d ≥ 1`, entry 0 = 0: the tail
    /// of the formal derivative, so that `f′(g) = 1 + subst(tail, g)`.
    fn deriv_tail(&self, f: &Self::Rep, m: usize) -> Self::Rep;
    /// Sets the constant coefficient to 1.
    fn set_unit0(&self, a: &mut Self::Rep);
}

/// F₂ kernel: one bit per coefficient.
struct BitsKernel {
    words: usize,
}

impl BitsKernel {
    fn new(n: usize) -> Self {
        BitsKernel { words: n / 64 + 1 }
    }
}

fn bit_get(w: &[u64], i: usize) -> bool {
    (w[i >> 6] >> (i & 63)) & 1 == 1
}

fn bit_flip(w: &mut [u64], i: usize) {
    w[i >> 6] ^= 1 << (i & 63);
}

/// `dst ^= src << s`, keeping only bit positions ≤ `max_deg`.
fn bxor_shifted(dst: &mut [u64], src: &[u64], s: usize, max_deg: usize) {
    let word_shift = s >> 6;
    let bit_shift = s & 63;
    let top_word = max_deg >> 6;
    if bit_shift == 0 {
        for i in 0..src.len() {
            let d = i + word_shift;
            if d > top_word {
                break;
            }
            dst[d] ^= src[i];
        }
    } else {
        let mut carry = 0u64;
        for i in 0..src.len() {
            let d = i + word_shift;
            if d > top_word {
                break;
            }
            dst[d] ^= (src[i] << bit_shift) | carry;
            carry = src[i] >> (64 - bit_shift);
        }
        let d = src.len() + word_shift;
        if carry != 0 && d <= top_word {
            dst[d] ^= carry;
        }
    }
    // Clear bits above max_deg in the top word.
    let extra = (max_deg & 63) as u32;
    if extra < 63 {
        dst[top_word] &= (1u64 << (extra + 1)) - 1;
    }
    for w in dst.iter_mut().skip(top_word + 1) {
        *w = 0;
    }
}

fn for_each_bit(w: &[u64], lo: usize, hi: usize, mut f: impl FnMut(usize)) {
    for (wi, &word) in w.iter().enumerate() {
        if word == 0 {
            continue;
        }
        let base = wi << 6;
        if base > hi {
            break;
        }
        let mut x = word;
        while x != 0 {
            let b = x.trailing_zeros() as usize;
            let d = base + b;
            if d > hi {
                break;
            }
            if d >= lo {
                f(d);
            }
            x &= x - 1;
        }
    }
}

impl Kernel for BitsKernel {
    type Rep = Vec<u64>;

    fn from_elems(&self, coeff: &[FieldElement], _fs: &FieldSpec) -> Vec<u64> {
        let mut w = vec![0u64; self.words];
        for (d, c) in coeff.iter().enumerate() {
            if !c.is_zero() {
                bit_flip(&mut w, d);
            }
        }
        w
    }

    fn to_elems(&self, rep: &Vec<u64>, n: usize, fs: &FieldSpec) -> Vec<FieldElement> {
        (0..=n).map(|d| if bit_get(rep, d) { fs.one() } else { fs.zero() }).collect()
    }

    fn identity(&self, _n: usize) -> Vec<u64> {
        let mut w = vec![0u64; self.words];
        bit_flip(&mut w, 1);
        w
    }

    fn min_support(&self, a: &Vec<u64>, lo: usize, hi: usize) -> Option<usize> {
        let mut found = None;
        for_each_bit(a, lo, hi, |d| {
            if found.is_none() {
                found = Some(d);
            }
        });
        found
    }

    fn subst(&self, h: &Vec<u64>, g: &Vec<u64>, m: usize) -> Vec<u64> {
        let mut res = vec![0u64; self.words];
        let mut pw = g.clone();
        bxor_shifted(&mut pw, &[0], 0, m); // clamp to m
        let mut i = 1usize;
        loop {
            if bit_get(h, i) {
                for (r, p) in res.iter_mut().zip(pw.iter()) {
                    *r ^= *p;
                }
            }
            if i >= m {
                break;
            }
            pw = self.mul(&pw, i, g, 1, m);
            i += 1;
            if self.min_support(&pw, 0, m).is_none() {
                break;
            }
        }
        res
    }

    fn sub(&self, a: &Vec<u64>, b: &Vec<u64>, m: usize) -> Vec<u64> {
        let mut r: Vec<u64> = a.iter().zip(b.iter()).map(|(x, y)| x ^ y).collect();
        bxor_shifted(&mut r, &[0], 0, m);
        r
    }

    fn mul(&self, a: &Vec<u64>, va: usize, b: &Vec<u64>, _vb: usize, m: usize) -> Vec<u64> {
        let mut res = vec![0u64; self.words];
        for_each_bit(a, va, m, |j| {
            bxor_shifted(&mut res, b, j, m);
        });
        res
    }

    fn unit_inv(&self, u: &Vec<u64>, m: usize) -> Vec<u64> {
        let mut v = vec![0u64; self.words];
        bit_flip(&mut v, 0);
        for k in 1..=m {
            let mut acc = false;
            for_each_bit(u, 1, k, |j| {
                if bit_get(&v, k - j) {
                    acc = !acc;
                }
            });
            if acc {
                bit_flip(&mut v, k);
            }
        }
        v
    }

    fn deriv_tail(&self, f: &Vec<u64>, m: usize) -> Vec<u64> {
        // In characteristic 2 only even i·c_i vanish: entry d = c_{d+1}
        // for even d+1 is dropped, i.e. surviving d are even ≥ 2? No:
        // (d+1)·c_{d+1} ≠ 0 iff d+1 is odd, so d is even; d = 0 is the
        // constant term and is zeroed by contract.
        let mut r = vec![0u64; self.words];
        for_each_bit(f, 1, m + 1, |i| {
            if i % 2 == 1 && i >= 3 {
                bit_flip(&mut r, i - 1);
            }
        });
        r
    }

    fn set_unit0(&self, a: &mut Vec<u64>) {
        a[0] |= 1;
    }
}

/// Prime-field kernel for odd `p`: one `u64` word per coefficient,
/// delayed modular reduction inside convolutions.
struct WordsKernel {
    p: u64,
    /// How many maximal products fit in a `u64` accumulator.
    chunk: usize,
}

impl WordsKernel {
    fn new(p: u64) -> Self {
        let sq = (p - 1) * (p - 1);
        let chunk = if sq == 0 { usize::MAX } else { (u64::MAX / sq).max(1) as usize };
        WordsKernel { p, chunk }
    }
}

impl Kernel for WordsKernel {
    type Rep = Vec<u64>;

    fn from_elems(&self, coeff: &[FieldElement], _fs: &FieldSpec) -> Vec<u64> {
        coeff.iter().map(|e| e.c[0]).collect()
    }

    fn to_elems(&self, rep: &Vec<u64>, n: usize, fs: &FieldSpec) -> Vec<FieldElement> {
        (0..=n).map(|d| fs.scalar(rep[d])).collect()
    }

    fn identity(&self, n: usize) -> Vec<u64> {
        let mut r = vec![0u64; n + 1];
        r[1] = 1;
        r
    }

    fn min_support(&self, a: &Vec<u64>, lo: usize, hi: usize) -> Option<usize> {
        (lo..=hi.min(a.len() - 1)).find(|&d| a[d] != 0)
    }

    fn subst(&self, h: &Vec<u64>, g: &Vec<u64>, m: usize) -> Vec<u64> {
        let n = g.len() - 1;
        let mut res = vec![0u64; n + 1];
        let mut pw = g.clone();
        for d in m + 1..=n {
            pw[d] = 0;
        }
        let mut i = 1usize;
        loop {
            let hi = h[i];
            if hi != 0 {
                for d in i..=m {
                    res[d] = (res[d] + hi * pw[d]) % self.p;
                }
            }
            if i >= m {
                break;
            }
            pw = self.mul(&pw, i, g, 1, m);
            i += 1;
            if self.min_support(&pw, 0, m).is_none() {
                break;
            }
        }
        res
    }

    fn sub(&self, a: &Vec<u64>, b: &Vec<u64>, m: usize) -> Vec<u64> {
        let n = a.len() - 1;
        (0..=n)
            .map(|d| if d <= m { (a[d] + self.p - b[d]) % self.p } else { 0 })
            .collect()
    }

    fn mul(&self, a: &Vec<u64>, va: usize, b: &Vec<u64>, vb: usize, m: usize) -> Vec<u64> {
        let n = a.len() - 1;
        let mut res = vec![0u64; n + 1];
        for d in (va + vb)..=m {
            let mut acc = 0u64;
            let mut cnt = 0usize;
            let jmax = d - vb;
            for j in va..=jmax {
                let t = a[j] * b[d - j];
                acc += t;
                cnt += 1;
                if cnt == self.chunk {
                    acc %= self.p;
                    cnt = 0;
                }
            }
            res[d] = acc % self.p;
        }
        res
    }

    fn unit_inv(&self, u: &Vec<u64>, m: usize) -> Vec<u64> {
        let n = u.len() - 1;
        let mut v = vec![0u64; n + 1];
        v[0] = 1; // u_0 = 1 by contract
        for k in 1..=m {
            let mut acc = 0u64;
            let mut cnt = 0usize;
            for j in 1..=k {
                acc += u[j] * v[k - j];
                cnt += 1;
                if cnt == self.chunk {
                    acc %= self.p;
                    cnt = 0;
                }
            }
            v[k] = (self.p - acc % self.p) % self.p;
        }
        v
    }

    fn deriv_tail(&self, f: &Vec<u64>, m: usize) -> Vec<u64> {
        let n = f.len() - 1;
        let mut r = vec![0u64; n + 1];
        for d in 1..=m.min(n - 1) {
            r[d] = (d as u64 + 1) % self.p * f[d + 1] % self.p;
        }
        r
    }

    fn set_unit0(&self, a: &mut Vec<u64>) {
        a[0] = 1;
    }
}

/// Generic kernel for extensions `F_{p^m}`, `m > 1`.
struct ElemsKernel<'a> {
    fs: &'a FieldSpec,
}

impl Kernel for ElemsKernel<'_> {
    type Rep = Vec<FieldElement>;

    fn from_elems(&self, coeff: &[FieldElement], _fs: &FieldSpec) -> Vec<FieldElement> {
        coeff.to_vec()
    }

    fn to_elems(&self, rep: &Vec<FieldElement>, n: usize, _fs: &FieldSpec) -> Vec<FieldElement> {
        rep[..=n].to_vec()
    }

    fn identity(&self, n: usize) -> Vec<FieldElement> {
        let mut r = vec![self.fs.zero(); n + 1];
        r[1] = self.fs.one();
        r
    }

    fn min_support(&self, a: &Vec<FieldElement>, lo: usize, hi: usize) -> Option<usize> {
        (lo..=hi.min(a.len() - 1)).find(|&d| !a[d].is_zero())
    }

    fn subst(&self, h: &Vec<FieldElement>, g: &Vec<FieldElement>, m: usize) -> Vec<FieldElement> {
        let n = g.len() - 1;
        let mut res = vec![self.fs.zero(); n + 1];
        let mut pw = g.clone();
        for d in m + 1..=n {
            pw[d] = self.fs.zero();
        }
        let mut i = 1usize;
        loop {
            if !h[i].is_zero() {
                for d in i..=m {
                    res[d] = self.fs.add(&res[d], &self.fs.mul(&h[i], &pw[d]));
                }
            }
            if i >= m {
                break;
            }
            pw = self.mul(&pw, i, g, 1, m);
            i += 1;
            if self.min_support(&pw, 0, m).is_none() {
                break;
            }
        }
        res
    }

    fn sub(&self, a: &Vec<FieldElement>, b: &Vec<FieldElement>, m: usize) -> Vec<FieldElement> {
        let n = a.len() - 1;
        (0..=n)
            .map(|d| if d <= m { self.fs.sub(&a[d], &b[d]) } else { self.fs.zero() })
            .collect()
    }

    fn mul(
        &self,
        a: &Vec<FieldElement>,
        va: usize,
        b: &Vec<FieldElement>,
        vb: usize,
        m: usize,
    ) -> Vec<FieldElement> {
        let n = a.len() - 1;
        let mut res = vec![self.fs.zero(); n + 1];
        for d in (va + vb)..=m {
            let mut acc = self.fs.zero();
            for j in va..=(d - vb) {
                if !a[j].is_zero() && !b[d - j].is_zero() {
                    acc = self.fs.add(&acc, &self.fs.mul(&a[j], &b[d - j]));
                }
            }
            res[d] = acc;
        }
        res
    }

    fn unit_inv(&self, u: &Vec<FieldElement>, m: usize) -> Vec<FieldElement> {
        let n = u.len() - 1;
        let mut v = vec![self.fs.zero(); n + 1];
        v[0] = self.fs.one();
        for k in 1..=m {
            let mut acc = self.fs.zero();
            for j in 1..=k {
                acc = self.fs.add(&acc, &self.fs.mul(&u[j], &v[k - j]));
            }
            v[k] = self.fs.neg(&acc);
        }
        v
    }

    fn deriv_tail(&self, f: &Vec<FieldElement>, m: usize) -> Vec<FieldElement> {
        let n = f.len() - 1;
        let mut r = vec![self.fs.zero(); n + 1];
        for d in 1..=m.min(n - 1) {
            r[d] = self.fs.scale(&f[d + 1], d as u64 + 1);
        }
        r
    }

    fn set_unit0(&self, a: &mut Vec<FieldElement>) {
        a[0] = self.fs.one();
    }
}

fn compose_with<K: Kernel>(k: &K, f: &WildSeries, g: &WildSeries, n: usize) -> Vec<FieldElement> {
    let fs = &f.field;
    let fr = k.from_elems(&f.coeff, fs);
    let gr = k.from_elems(&g.coeff, fs);
    let res = k.subst(&fr, &gr, n);
    k.to_elems(&res, n, fs)
}

fn inverse_with<K: Kernel>(k: &K, f: &WildSeries, n: usize) -> Vec<FieldElement> {
    let fs = &f.field;
    let fr = k.from_elems(&f.coeff, fs);
    let mut g = k.identity(n);
    let mut d = 1usize;
    // Newton: if f(g) ≡ t mod t^{d+1}, then g − (f(g) − t)/f′(g) is
    // correct mod t^{2d+2}.  The Taylor expansion behind the step is
    // the Hasse-derivative identity, valid in any characteristic; the
    // k ≥ 2 terms carry valuation ≥ 2(d+1) because the update has
    // valuation ≥ d+1, and f′(g) is a unit since c_1 = 1.
    while d < n {
        let m = (2 * d + 1).min(n);
        let fg = k.subst(&fr, &g, m);
        let e = k.sub(&fg, &k.identity(n), m);
        if k.min_support(&e, 0, m).is_some() {
            let tail = k.deriv_tail(&fr, m);
            let mut u = k.subst(&tail, &g, m);
            k.set_unit0(&mut u);
            let uinv = k.unit_inv(&u, m);
            let delta = k.mul(&e, d + 1, &uinv, 0, m);
            g = k.sub(&g, &delta, m);
        }
        d = m;
    }
    k.to_elems(&g, n, fs)
}

enum KernelChoice {
    Bits,
    Words,
    Elems,
}

fn choose_kernel(fs: &FieldSpec) -> KernelChoice {
    if fs.m == 1 && fs.p == 2 {
        KernelChoice::Bits
    } else if fs.m == 1 {
        KernelChoice::Words
    } else {
        KernelChoice::Elems
    }
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Composition `f(g(t))` mod `t^{min(N_f, N_g)+1}`.
///
/// Both series must live over the same field.
pub fn compose(f: &WildSeries, g: &WildSeries) -> Result<WildSeries, NottinghamError> {
    if f.field != g.field {
        return Err(NottinghamError::FieldMismatch);
    }
    let n = f.n.min(g.n);
    let coeff = match choose_kernel(&f.field) {
        KernelChoice::Bits => compose_with(&BitsKernel::new(f.n.max(g.n)), f, g, n),
        KernelChoice::Words => compose_with(&WordsKernel::new(f.field.p), f, g, n),
        KernelChoice::Elems => compose_with(&ElemsKernel { fs: &f.field }, f, g, n),
    };
    WildSeries::new(f.field.clone(), n, &coeff[1..=n])
}

/// Compositional inverse: the wild `g` with `f(g(t)) ≡ g(f(t)) ≡ t`
/// mod `t^{N+1}`, found by Newton iteration with doubling precision.
pub fn comp_inverse(f: &WildSeries) -> Result<WildSeries, NottinghamError> {
    let n = f.n;
    let coeff = match choose_kernel(&f.field) {
        KernelChoice::Bits => inverse_with(&BitsKernel::new(n), f, n),
        KernelChoice::Words => inverse_with(&WordsKernel::new(f.field.p), f, n),
        KernelChoice::Elems => inverse_with(&ElemsKernel { fs: &f.field }, f, n),
    };
    WildSeries::new(f.field.clone(), n, &coeff[1..=n])
}

/// `k`-fold composition `f ∘ f ∘ … ∘ f` (`k = 0` gives the identity),
/// by binary powering on the composition monoid.
pub fn comp_power(f: &WildSeries, k: &BigInt) -> Result<WildSeries, NottinghamError> {
    if k.is_negative() {
        return Err(NottinghamError::NegativeExponent(k.clone()));
    }
    if k.is_zero() {
        return WildSeries::identity(&f.field, f.n);
    }
    let bits = k.bits();
    let mut acc = f.clone();
    for i in (0..bits - 1).rev() {
        acc = compose(&acc, &acc)?;
        if k.bit(i) {
            acc = compose(&acc, f)?;
        }
    }
    Ok(acc)
}

/// The ramification number `i(σ) = v(σ(t) − t) − 1` of the truncated
/// series: one less than the lowest degree ≥ 2 with nonzero
/// coefficient, or [`RamResult::Exceeded`] when there is none.
pub fn ram_number(f: &WildSeries) -> RamResult {
    for d in 2..=f.n {
        if !f.coeff[d].is_zero() {
            return RamResult::Definite(d as u64 - 1);
        }
    }
    RamResult::Exceeded
}

/// The sequence `i_0, …, i_{n_max}` with `i_n = i(σ^{pⁿ})`, computed
/// by repeatedly taking `p`-th composition powers.  Once an entry is
/// `Exceeded`, all later entries are reported `Exceeded` without
/// further computation.
pub fn ram_sequence(f: &WildSeries, n_max: usize) -> Result<Vec<RamResult>, NottinghamError> {
    let p = BigInt::from(f.field.p);
    let mut out = Vec::with_capacity(n_max + 1);
    let mut g = f.clone();
    for level in 0..=n_max {
        let r = ram_number(&g);
        out.push(r);
        if !r.is_definite() {
            out.resize(n_max + 1, RamResult::Exceeded);
            break;
        }
        if level < n_max {
            g = comp_power(&g, &p)?;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Multiplicative 1-units and the θ series
// ---------------------------------------------------------------------------

/// A truncated series `u_0 + u_1 t + … + u_N t^N` with `u_0 = 1`,
/// under multiplication — the shape in which θ-series identities are
/// checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitSeries {
    field: FieldSpec,
    n: usize,
    /// `coeff[d]` = coefficient of `t^d`; `coeff[0] = 1`.
    coeff: Vec<FieldElement>,
}

impl UnitSeries {
    pub fn new(
        field: FieldSpec,
        coefficients: &[FieldElement],
    ) -> Result<Self, NottinghamError> {
        if coefficients.is_empty() || coefficients[0] != field.one() {
            return Err(NottinghamError::BadEncoding(
                "a 1-unit needs constant coefficient 1".into(),
            ));
        }
        Ok(UnitSeries { n: coefficients.len() - 1, field, coeff: coefficients.to_vec() })
    }

    pub fn one(field: &FieldSpec, n: usize) -> Self {
        let mut coeff = vec![field.zero(); n + 1];
        coeff[0] = field.one();
        UnitSeries { field: field.clone(), n, coeff }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn truncation(&self) -> usize {
        self.n
    }

    /// Coefficient of `t^d`, `0 ≤ d ≤ N`.
    pub fn coeff(&self, d: usize) -> FieldElement {
        self.coeff[d]
    }

    /// Product mod `t^{min(N, N')+1}`.
    pub fn mul(&self, rhs: &UnitSeries) -> Result<UnitSeries, NottinghamError> {
        if self.field != rhs.field {
            return Err(NottinghamError::FieldMismatch);
        }
        let n = self.n.min(rhs.n);
        let fs = &self.field;
        let mut coeff = vec![fs.zero(); n + 1];
        for d in 0..=n {
            let mut acc = fs.zero();
            for j in 0..=d {
                if !self.coeff[j].is_zero() && !rhs.coeff[d - j].is_zero() {
                    acc = fs.add(&acc, &fs.mul(&self.coeff[j], &rhs.coeff[d - j]));
                }
            }
            coeff[d] = acc;
        }
        Ok(UnitSeries { field: fs.clone(), n, coeff })
    }

    /// Multiplicative inverse mod `t^{N+1}` (triangular solve; always
    /// exists for a 1-unit).
    pub fn inverse(&self) -> UnitSeries {
        let fs = &self.field;
        let mut v = vec![fs.zero(); self.n + 1];
        v[0] = fs.one();
        for k in 1..=self.n {
            let mut acc = fs.zero();
            for j in 1..=k {
                acc = fs.add(&acc, &fs.mul(&self.coeff[j], &v[k - j]));
            }
            v[k] = fs.neg(&acc);
        }
        UnitSeries { field: fs.clone(), n: self.n, coeff: v }
    }
}

impl fmt::Display for UnitSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1")?;
        for d in 1..=self.n {
            let c = &self.coeff[d];
            if c.is_zero() {
                continue;
            }
            let cs = self.field.format_element(c);
            if cs == "1" {
                write!(f, " + t^{d}")?;
            } else {
                write!(f, " + {cs}·t^{d}")?;
            }
        }
        write!(f, " (mod t^{})", self.n + 1)
    }
}

/// The 1-unit `θ(scale·t) = (1 + scale·t)/(1 − scale·t)
/// = 1 + 2·scale·t + 2·scale²·t² + …` mod `t^{N+1}`.
///
/// Defined only in odd characteristic: for `p = 2` the series
/// degenerates (all higher coefficients vanish and `θ(−X) = θ(X)`
/// trivially), so [`NottinghamError::CharTwo`] is returned.
///
/// The defining identity `θ(−X) = θ(X)^{−1}` can be checked with
/// [`UnitSeries::mul`] against [`UnitSeries::inverse`] or against
/// `theta_series` at the negated scale.
pub fn theta_series(
    field: &FieldSpec,
    scale: &FieldElement,
    n: usize,
) -> Result<UnitSeries, NottinghamError> {
    if field.p == 2 {
        return Err(NottinghamError::CharTwo);
    }
    let mut coeff = vec![field.zero(); n + 1];
    coeff[0] = field.one();
    let two = field.scalar(2);
    let mut power = field.one();
    for c in coeff.iter_mut().skip(1) {
        power = field.mul(&power, scale);
        *c = field.mul(&two, &power);
    }
    Ok(UnitSeries { field: field.clone(), n, coeff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf(p: u64) -> FieldSpec {
        FieldSpec::gf(p).unwrap()
    }

    /// Independent reference composition: naive polynomial powers with
    /// naive truncated multiplication, sharing no code with the
    /// kernels.
    fn naive_compose(f: &WildSeries, g: &WildSeries) -> Vec<FieldElement> {
        let fs = f.field();
        let n = f.truncation().min(g.truncation());
        let gv: Vec<FieldElement> = (0..=n).map(|d| if d == 0 { fs.zero() } else { g.coeff(d) }).collect();
        let mul = |a: &[FieldElement], b: &[FieldElement]| -> Vec<FieldElement> {
            let mut r = vec![fs.zero(); n + 1];
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let t = fs.mul(&a[i], &b[j]);
                    r[i + j] = fs.add(&r[i + j], &t);
                }
            }
            r
        };
        let mut res = vec![fs.zero(); n + 1];
        let mut pw = gv.clone();
        for i in 1..=n {
            let ci = f.coeff(i);
            for d in 0..=n {
                res[d] = fs.add(&res[d], &fs.mul(&ci, &pw[d]));
            }
            pw = mul(&pw, &gv);
        }
        res
    }

    fn assert_matches_naive(f: &WildSeries, g: &WildSeries) {
        let got = compose(f, g).unwrap();
        let want = naive_compose(f, g);
        for d in 1..=got.truncation() {
            assert_eq!(got.coeff(d), want[d], "coefficient of t^{d}");
        }
    }

    #[test]
    fn field_construction_validates() {
        assert!(FieldSpec::gf(2).is_ok());
        assert!(FieldSpec::gf(31).is_ok());
        assert_eq!(FieldSpec::gf(4).unwrap_err(), NottinghamError::NotPrime(4));
        assert_eq!(FieldSpec::gf(1).unwrap_err(), NottinghamError::NotPrime(1));

        // x² + x + 1 is irreducible over F₂; x² + 1 is (x+1)².
        assert!(FieldSpec::extension(2, &[1, 1, 1]).is_ok());
        assert!(matches!(
            FieldSpec::extension(2, &[1, 0, 1]),
            Err(NottinghamError::BadModulus(_))
        ));
        // x² + 1 is irreducible over F₃ (−1 is a non-residue).
        assert!(FieldSpec::extension(3, &[1, 0, 1]).is_ok());
        // x⁴ + x + 1 irreducible over F₂; x⁴ + x² + 1 = (x²+x+1)² has
        // no roots, so the factor-free check must catch it.
        assert!(FieldSpec::extension(2, &[1, 1, 0, 0, 1]).is_ok());
        assert!(matches!(
            FieldSpec::extension(2, &[1, 0, 1, 0, 1]),
            Err(NottinghamError::BadModulus(_))
        ));
        // Non-monic rejected.
        assert!(matches!(
            FieldSpec::extension(3, &[1, 0, 2]),
            Err(NottinghamError::BadModulus(_))
        ));
    }

    #[test]
    fn f4_multiplication_table() {
        let f4 = FieldSpec::extension(2, &[1, 1, 1]).unwrap();
        let x = f4.element(&[0, 1]).unwrap();
        // x² = x + 1 mod x² + x + 1.
        assert_eq!(f4.mul(&x, &x), f4.element(&[1, 1]).unwrap());
        // x³ = 1.
        let x3 = f4.mul(&f4.mul(&x, &x), &x);
        assert_eq!(x3, f4.one());
        assert_eq!(f4.mul(&x, &f4.inv(&x)), f4.one());
    }

    #[test]
    fn wildness_is_enforced() {
        let f3 = gf(3);
        let bad = [f3.scalar(2), f3.zero()];
        assert!(matches!(
            WildSeries::new(f3.clone(), 2, &bad),
            Err(NottinghamError::NotWild(_))
        ));
        assert!(matches!(
            WildSeries::identity(&f3, 1),
            Err(NottinghamError::NotWild(_))
        ));
    }

    #[test]
    fn compose_char2_square_cancels() {
        // (t + t²) ∘ (t + t²) = t + t⁴ over F₂.
        let f2 = gf(2);
        let f = WildSeries::from_support(&f2, 8, &[2]).unwrap();
        let ff = compose(&f, &f).unwrap();
        let expect = WildSeries::from_support(&f2, 8, &[4]).unwrap();
        assert_eq!(ff, expect);
        assert_matches_naive(&f, &f);
    }

    #[test]
    fn compose_identity_is_neutral() {
        let f3 = gf(3);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let f = WildSeries::random(&f3, 20, None, &mut rng).unwrap();
        let id = WildSeries::identity(&f3, 20).unwrap();
        assert_eq!(compose(&f, &id).unwrap(), f);
        assert_eq!(compose(&id, &f).unwrap(), f);
    }

    #[test]
    fn compose_f3_matches_brute_force() {
        // (t + t²) ∘ (t + t³) over F₃ at truncation 8:
        // g + g² with g = t + t³ gives t + t² + t³ + 2t⁴ + t⁶.
        let f3 = gf(3);
        let f = WildSeries::from_support(&f3, 8, &[2]).unwrap();
        let g = WildSeries::from_support(&f3, 8, &[3]).unwrap();
        let fg = compose(&f, &g).unwrap();
        let expected: &[(usize, u64)] =
            &[(1, 1), (2, 1), (3, 1), (4, 2), (5, 0), (6, 1), (7, 0), (8, 0)];
        for &(d, c) in expected {
            assert_eq!(fg.coeff(d), f3.scalar(c), "coefficient of t^{d}");
        }
        assert_matches_naive(&f, &g);
    }

    #[test]
    fn kernels_agree_with_reference_on_random_input() {
        for p in [2u64, 3, 5] {
            let fs = gf(p);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + p);
            for _ in 0..5 {
                let f = WildSeries::random(&fs, 40, None, &mut rng).unwrap();
                let g = WildSeries::random(&fs, 40, None, &mut rng).unwrap();
                assert_matches_naive(&f, &g);
            }
        }
        let f4 = FieldSpec::extension(2, &[1, 1, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = WildSeries::random(&f4, 24, None, &mut rng).unwrap();
        let g = WildSeries::random(&f4, 24, None, &mut rng).unwrap();
        assert_matches_naive(&f, &g);
    }

    #[test]
    fn mixed_truncations_compose_to_the_smaller() {
        let f2 = gf(2);
        let f = WildSeries::from_support(&f2, 16, &[2]).unwrap();
        let g = WildSeries::from_support(&f2, 9, &[2, 5]).unwrap();
        let fg = compose(&f, &g).unwrap();
        assert_eq!(fg.truncation(), 9);
        assert_matches_naive(&f, &g);
    }

    #[test]
    fn inverse_of_t_plus_t2_has_power_of_two_support() {
        // g + g² = t forces g = t + t² + t⁴ + t⁸ + … over F₂.
        let f2 = gf(2);
        let f = WildSeries::from_support(&f2, 12, &[2]).unwrap();
        let g = comp_inverse(&f).unwrap();
        for d in 1..=12usize {
            let expect = if d.is_power_of_two() { f2.one() } else { f2.zero() };
            assert_eq!(g.coeff(d), expect, "coefficient of t^{d}");
        }
        let id = WildSeries::identity(&f2, 12).unwrap();
        assert_eq!(compose(&f, &g).unwrap(), id);
        assert_eq!(compose(&g, &f).unwrap(), id);
    }

    #[test]
    fn inverse_is_two_sided_and_involutive() {
        for p in [2u64, 3, 5] {
            let fs = gf(p);
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + p);
            let f = WildSeries::random(&fs, 33, None, &mut rng).unwrap();
            let g = comp_inverse(&f).unwrap();
            let id = WildSeries::identity(&fs, 33).unwrap();
            assert_eq!(compose(&f, &g).unwrap(), id, "p = {p}: right inverse");
            assert_eq!(compose(&g, &f).unwrap(), id, "p = {p}: left inverse");
            assert_eq!(comp_inverse(&g).unwrap(), f, "p = {p}: involution");
        }
        let f4 = FieldSpec::extension(2, &[1, 1, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = WildSeries::random(&f4, 20, None, &mut rng).unwrap();
        let g = comp_inverse(&f).unwrap();
        assert_eq!(compose(&f, &g).unwrap(), WildSeries::identity(&f4, 20).unwrap());
    }

    #[test]
    fn comp_power_examples() {
        let f2 = gf(2);
        let f = WildSeries::from_support(&f2, 32, &[2]).unwrap();
        let id = WildSeries::identity(&f2, 32).unwrap();
        assert_eq!(comp_power(&f, &BigInt::from(0)).unwrap(), id);
        assert_eq!(
            comp_power(&f, &BigInt::from(2)).unwrap(),
            WildSeries::from_support(&f2, 32, &[4]).unwrap()
        );
        assert_eq!(
            comp_power(&f, &BigInt::from(4)).unwrap(),
            WildSeries::from_support(&f2, 32, &[16]).unwrap()
        );
        assert!(matches!(
            comp_power(&f, &BigInt::from(-1)),
            Err(NottinghamError::NegativeExponent(_))
        ));
    }

    #[test]
    fn comp_power_respects_addition_law() {
        let f3 = gf(3);
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let f = WildSeries::random(&f3, 30, None, &mut rng).unwrap();
        let a = comp_power(&f, &BigInt::from(3)).unwrap();
        let b = compose(&a, &a).unwrap();
        assert_eq!(b, comp_power(&f, &BigInt::from(6)).unwrap());
    }

    #[test]
    fn ram_number_reads_first_deviation() {
        let f2 = gf(2);
        assert_eq!(
            ram_number(&WildSeries::from_support(&f2, 8, &[2]).unwrap()),
            RamResult::Definite(1)
        );
        assert_eq!(
            ram_number(&WildSeries::from_support(&f2, 8, &[4]).unwrap()),
            RamResult::Definite(3)
        );
        assert_eq!(
            ram_number(&WildSeries::identity(&f2, 8).unwrap()),
            RamResult::Exceeded
        );
    }

    #[test]
    fn ram_sequence_of_t_plus_t2_over_f2() {
        // i_n = 2^{2ⁿ} − 1: at truncation 32 the values 1, 3, 15 are
        // definite and i_3 = 255 exceeds.
        let f2 = gf(2);
        let f = WildSeries::from_support(&f2, 32, &[2]).unwrap();
        let seq = ram_sequence(&f, 3).unwrap();
        assert_eq!(
            seq,
            vec![
                RamResult::Definite(1),
                RamResult::Definite(3),
                RamResult::Definite(15),
                RamResult::Exceeded
            ]
        );
    }

    #[test]
    fn ram_sequence_over_f3_satisfies_sen_congruence() {
        let f3 = gf(3);
        let f = WildSeries::from_support(&f3, 81, &[2]).unwrap();
        let seq = ram_sequence(&f, 3).unwrap();
        assert_eq!(seq[0], RamResult::Definite(1));
        let mut prev: Option<u64> = None;
        for (n, r) in seq.iter().enumerate() {
            if let Some(v) = r.value() {
                if let Some(pv) = prev {
                    assert!(v > pv, "strict increase at n = {n}");
                    let modulus = 3u64.pow(n as u32);
                    assert_eq!((v - pv) % modulus, 0, "Sen congruence at n = {n}");
                }
                prev = Some(v);
            }
        }
    }

    #[test]
    fn ultrametric_inequality_on_random_pairs() {
        let f3 = gf(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let f = WildSeries::random(&f3, 40, None, &mut rng).unwrap();
            let g = WildSeries::random(&f3, 40, None, &mut rng).unwrap();
            if let (Some(a), Some(b), Some(c)) = (
                ram_number(&f).value(),
                ram_number(&g).value(),
                ram_number(&compose(&f, &g).unwrap()).value(),
            ) {
                assert!(c >= a.min(b));
                if a != b {
                    assert_eq!(c, a.min(b));
                }
            }
        }
    }

    #[test]
    fn conjugation_preserves_ram_number() {
        let f5 = gf(5);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let f = WildSeries::random(&f5, 40, None, &mut rng).unwrap();
        let h = WildSeries::random(&f5, 40, None, &mut rng).unwrap();
        let conj = compose(&compose(&h, &f).unwrap(), &comp_inverse(&h).unwrap()).unwrap();
        assert_eq!(ram_number(&conj), ram_number(&f));
    }

    #[test]
    fn theta_coefficients_match_the_pattern() {
        let f3 = gf(3);
        let th = theta_series(&f3, &f3.one(), 4).unwrap();
        let expect: [u64; 5] = [1, 2, 2, 2, 2];
        for (d, &c) in expect.iter().enumerate() {
            assert_eq!(th.coeff(d), f3.scalar(c), "coefficient of t^{d}");
        }

        // p = 5, scale = 2: coefficients 2·2^k mod 5 → 1, 4, 3, 1, 2.
        let f5 = gf(5);
        let th = theta_series(&f5, &f5.scalar(2), 4).unwrap();
        let expect: [u64; 5] = [1, 4, 3, 1, 2];
        for (d, &c) in expect.iter().enumerate() {
            assert_eq!(th.coeff(d), f5.scalar(c), "coefficient of t^{d}");
        }
    }

    #[test]
    fn theta_of_minus_x_is_the_inverse() {
        for p in [3u64, 5] {
            let fs = gf(p);
            let scale = fs.scalar(1);
            let th = theta_series(&fs, &scale, 64).unwrap();
            let th_neg = theta_series(&fs, &fs.neg(&scale), 64).unwrap();
            assert_eq!(th.mul(&th_neg).unwrap(), UnitSeries::one(&fs, 64));
            assert_eq!(th.inverse(), th_neg);
        }
    }

    #[test]
    fn theta_rejects_characteristic_two() {
        let f2 = gf(2);
        assert_eq!(theta_series(&f2, &f2.one(), 8).unwrap_err(), NottinghamError::CharTwo);
    }

    #[test]
    fn random_series_honors_pinned_break() {
        let f3 = gf(3);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for v in [1u64, 2, 5] {
            let f = WildSeries::random(&f3, 30, Some(v), &mut rng).unwrap();
            assert_eq!(ram_number(&f), RamResult::Definite(v));
        }
        let f = WildSeries::random(&f3, 30, None, &mut rng).unwrap();
        assert_eq!(f.coeff(1), f3.one());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let f4 = FieldSpec::extension(2, &[1, 1, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = WildSeries::random(&f4, 12, None, &mut rng).unwrap();
        let encoded = f.to_json();
        let decoded = WildSeries::from_json(&encoded).unwrap();
        assert_eq!(decoded, f);

        let f2 = gf(2);
        let g = WildSeries::from_support(&f2, 4, &[2]).unwrap();
        assert_eq!(WildSeries::from_json(&g.to_json()).unwrap(), g);

        // c_1 = 0 must be rejected.
        let bad = r#"{"p":2,"m":1,"modulus":[],"N":3,"coeffs":[[0],[1],[0]]}"#;
        assert!(matches!(
            WildSeries::from_json(bad),
            Err(NottinghamError::NotWild(_))
        ));
        // Composite characteristic must be rejected.
        let bad = r#"{"p":6,"m":1,"modulus":[],"N":2,"coeffs":[[1],[1]]}"#;
        assert!(matches!(WildSeries::from_json(bad), Err(NottinghamError::NotPrime(6))));
    }

    #[test]
    fn field_mismatch_is_detected() {
        let f2 = gf(2);
        let f3 = gf(3);
        let f = WildSeries::from_support(&f2, 8, &[2]).unwrap();
        let g = WildSeries::from_support(&f3, 8, &[2]).unwrap();
        assert_eq!(compose(&f, &g).unwrap_err(), NottinghamError::FieldMismatch);
    }
}
