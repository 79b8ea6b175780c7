//! Exact arithmetic in cyclotomic fields.
//!
//! A [`CycloScalar`] is an element of ℚ(ζ_M) stored in the tensor power
//! basis: writing ζ_M^k as a product of prime-power roots ζ_{p^e}^{j_p}, the
//! exponent k is a basis element iff every j_p = a + p^{e-1}·b has b ≤ p-2.
//! Elements are always stored at their minimal conductor, so equality is
//! syntactic.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::rc::Rc;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("conductor {0} exceeds the configured cap {1}")]
    ConductorCap(u64, u64),
    #[error("square root of zero requested")]
    SqrtZero,
    #[error("cannot parse scalar {0:?}: {1}")]
    Parse(String, String),
}

static CONDUCTOR_CAP: AtomicU64 = AtomicU64::new(100_000);

/// Sets the largest conductor any operation may produce.
pub fn set_conductor_cap(cap: u64) {
    CONDUCTOR_CAP.store(cap.max(1), Ordering::Relaxed);
}

pub fn conductor_cap() -> u64 {
    CONDUCTOR_CAP.load(Ordering::Relaxed)
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn big_from_r64(x: Rational64) -> Rational {
    rat(*x.numer(), *x.denom())
}

/// Prime-power decomposition data for one conductor.
#[derive(Debug)]
struct Layout {
    m: u64,
    parts: Vec<PrimePart>,
}

#[derive(Debug)]
struct PrimePart {
    p: u64,
    q: u64,
    /// M / q
    cof: u64,
    /// (M/q)^{-1} mod q
    inv: u64,
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn mod_inv(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let e = (a as i128).extended_gcd(&(m as i128));
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(m as i128) as u64
}

thread_local! {
    static LAYOUTS: RefCell<HashMap<u64, Rc<Layout>>> = RefCell::new(HashMap::new());
}

fn layout(m: u64) -> Rc<Layout> {
    LAYOUTS.with(|cache| {
        if let Some(l) = cache.borrow().get(&m) {
            return l.clone();
        }
        let parts = factorize(m)
            .into_iter()
            .map(|(p, e)| {
                let q = p.pow(e);
                let cof = m / q;
                PrimePart { p, q, cof, inv: mod_inv(cof % q, q) }
            })
            .collect();
        let l = Rc::new(Layout { m, parts });
        cache.borrow_mut().insert(m, l.clone());
        l
    })
}

impl Layout {
    /// Rewrites ζ_M^k in the power basis, pushing (exponent, sign) pairs.
    fn expand(&self, k: u64, out: &mut Vec<(u64, bool)>) {
        out.clear();
        out.push((0, false));
        for part in &self.parts {
            let j = ((k % part.q) as u128 * part.inv as u128 % part.q as u128) as u64;
            let step = part.q / part.p;
            let (a, b) = (j % step, j / step);
            let cof = part.cof as u128;
            let m = self.m as u128;
            if b + 2 <= part.p {
                let add = (j as u128 * cof % m) as u64;
                for e in out.iter_mut() {
                    e.0 = ((e.0 as u128 + add as u128) % m) as u64;
                }
            } else {
                let mut next = Vec::with_capacity(out.len() * (part.p as usize - 1));
                for bb in 0..part.p - 1 {
                    let jj = a + step * bb;
                    let add = (jj as u128 * cof % m) as u64;
                    for &(e, s) in out.iter() {
                        next.push((((e as u128 + add as u128) % m) as u64, !s));
                    }
                }
                *out = next;
            }
        }
    }

    fn is_basis(&self, k: u64) -> bool {
        self.parts.iter().all(|part| {
            let j = ((k % part.q) as u128 * part.inv as u128 % part.q as u128) as u64;
            j / (part.q / part.p) + 2 <= part.p
        })
    }
}

/// An element Σ r_k ζ_M^k of the cyclotomic field ℚ(ζ_M).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycloScalar {
    conductor: u64,
    coeffs: BTreeMap<u64, Rational>,
}

impl CycloScalar {
    pub fn zero() -> Self {
        CycloScalar { conductor: 1, coeffs: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn from_rational(r: Rational) -> Self {
        let mut coeffs = BTreeMap::new();
        if !r.is_zero() {
            coeffs.insert(0, r);
        }
        CycloScalar { conductor: 1, coeffs }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(rat_int(n))
    }

    /// ζ_m^k.
    pub fn zeta(m: u64, k: i64) -> Self {
        Self::try_from_terms(m, [(k.rem_euclid(m as i64) as u64, Rational::one())]).expect("conductor cap exceeded")
    }

    /// e(x) = exp(2πix) for rational x.
    pub fn e(x: &Rational) -> Self {
        let d = x.denom().to_u64().expect("root of unity order too large");
        let n = x.numer().mod_floor(x.denom()).to_u64().unwrap();
        Self::zeta(d, n as i64)
    }

    pub fn e64(x: Rational64) -> Self {
        Self::zeta(*x.denom() as u64, *x.numer())
    }

    /// Builds Σ r ζ_m^k from arbitrary (k, r) pairs and normalizes.
    pub fn try_from_terms(m: u64, terms: impl IntoIterator<Item = (u64, Rational)>) -> Result<Self, ArithError> {
        let cap = conductor_cap();
        if m > cap {
            return Err(ArithError::ConductorCap(m, cap));
        }
        let l = layout(m);
        let mut acc: BTreeMap<u64, Rational> = BTreeMap::new();
        let mut buf = Vec::new();
        for (k, r) in terms {
            if r.is_zero() {
                continue;
            }
            let k = k % m;
            if l.is_basis(k) {
                add_into(&mut acc, k, r);
                continue;
            }
            l.expand(k, &mut buf);
            for &(kk, neg) in &buf {
                add_into(&mut acc, kk, if neg { -r.clone() } else { r.clone() });
            }
        }
        let mut out = CycloScalar { conductor: m, coeffs: acc };
        out.minimize();
        Ok(out)
    }

    /// Drops the conductor while the element lies in a smaller cyclotomic field.
    fn minimize(&mut self) {
        if self.coeffs.is_empty() {
            self.conductor = 1;
            return;
        }
        loop {
            let l = layout(self.conductor);
            let mut reduced = false;
            for part in &l.parts {
                let p = part.p;
                if self.coeffs.keys().all(|k| k % p == 0) {
                    let coeffs = std::mem::take(&mut self.coeffs);
                    self.coeffs = coeffs.into_iter().map(|(k, r)| (k / p, r)).collect();
                    self.conductor /= p;
                    reduced = true;
                    break;
                }
            }
            if !reduced {
                break;
            }
        }
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    /// Canonical coefficients, keyed by exponent of ζ_conductor.
    pub fn terms(&self) -> impl Iterator<Item = (u64, &Rational)> {
        self.coeffs.iter().map(|(k, r)| (*k, r))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.conductor == 1 && self.coeffs.get(&0).is_some_and(|r| r.is_one())
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self.conductor {
            1 => Some(self.coeffs.get(&0).cloned().unwrap_or_else(Rational::zero)),
            _ => None,
        }
    }

    /// Some((r, m, k)) when the element equals r·ζ_m^k.
    pub fn as_monomial(&self) -> Option<(Rational, u64, u64)> {
        if self.coeffs.len() == 1 {
            let (k, r) = self.coeffs.iter().next().unwrap();
            Some((r.clone(), self.conductor, *k))
        } else {
            None
        }
    }

    fn lift(&self, m: u64) -> impl Iterator<Item = (u64, Rational)> + '_ {
        let f = m / self.conductor;
        self.coeffs.iter().map(move |(k, r)| (k * f, r.clone()))
    }

    fn joint(&self, other: &Self) -> u64 {
        self.conductor.lcm(&other.conductor)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, ArithError> {
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        let m = self.joint(other);
        Self::try_from_terms(m, self.lift(m).chain(other.lift(m)))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, ArithError> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        if let Some(r) = other.as_rational() {
            return Ok(self.scale(&r));
        }
        if let Some(r) = self.as_rational() {
            return Ok(other.scale(&r));
        }
        let m = self.joint(other);
        let a: Vec<_> = self.lift(m).collect();
        let b: Vec<_> = other.lift(m).collect();
        let mut raw: BTreeMap<u64, Rational> = BTreeMap::new();
        for (ka, ra) in &a {
            for (kb, rb) in &b {
                add_into(&mut raw, (ka + kb) % m, ra * rb);
            }
        }
        Self::try_from_terms(m, raw)
    }

    pub fn scale(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        CycloScalar { conductor: self.conductor, coeffs: self.coeffs.iter().map(|(k, c)| (*k, c * r)).collect() }
    }

    /// Multiplicative inverse.
    pub fn try_inv(&self) -> Result<Self, ArithError> {
        if self.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        if let Some((r, m, k)) = self.as_monomial() {
            let k = (m - k) % m;
            return Self::try_from_terms(m, [(k, r.recip())]);
        }
        self.inv_linear()
    }

    /// Solves x·y = 1 in the power basis by Gaussian elimination.
    fn inv_linear(&self) -> Result<Self, ArithError> {
        let m = self.conductor;
        let l = layout(m);
        let basis: Vec<u64> = (0..m).filter(|&k| l.is_basis(k)).collect();
        let n = basis.len();
        let pos: HashMap<u64, usize> = basis.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        // column j holds x·ζ^{basis[j]}
        let mut mat = vec![vec![Rational::zero(); n + 1]; n];
        for (j, &bk) in basis.iter().enumerate() {
            let prod = Self::try_from_terms(m, self.coeffs.iter().map(|(k, r)| ((k + bk) % m, r.clone())))?;
            for (k, r) in prod.lift(m) {
                mat[pos[&k]][j] = r;
            }
        }
        mat[pos[&0]][n] = Rational::one();
        for col in 0..n {
            let piv = (col..n).find(|&r| !mat[r][col].is_zero()).ok_or(ArithError::DivisionByZero)?;
            mat.swap(col, piv);
            let pv = mat[col][col].clone();
            for c in col..=n {
                mat[col][c] = &mat[col][c] / &pv;
            }
            for r in 0..n {
                if r != col && !mat[r][col].is_zero() {
                    let f = mat[r][col].clone();
                    for c in col..=n {
                        let t = &f * &mat[col][c];
                        mat[r][c] -= t;
                    }
                }
            }
        }
        Self::try_from_terms(m, basis.iter().enumerate().map(|(i, &k)| (k, mat[i][n].clone())))
    }

    pub fn inv(&self) -> Self {
        self.try_inv().expect("inverse of zero")
    }

    pub fn pow(&self, e: i64) -> Self {
        let base = if e < 0 { self.inv() } else { self.clone() };
        let mut out = Self::one();
        let mut sq = base;
        let mut e = e.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                out = &out * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        out
    }

    /// Complex conjugation ζ ↦ ζ^{-1}.
    pub fn conj(&self) -> Self {
        let m = self.conductor;
        Self::try_from_terms(m, self.coeffs.iter().map(|(k, r)| ((m - k) % m, r.clone()))).expect("conjugation stays at the same conductor")
    }

    /// Complex embedding ζ_M ↦ e^{2πi/M}. Evaluation is in f64, so at most 53 bits are honoured.
    pub fn to_complex(&self, _precision_bits: u32) -> Complex64 {
        self.to_c64()
    }

    pub fn to_c64(&self) -> Complex64 {
        let m = self.conductor as f64;
        self.coeffs
            .iter()
            .map(|(k, r)| {
                let x = r.to_f64().unwrap_or(f64::NAN);
                Complex64::from_polar(x, std::f64::consts::TAU * (*k as f64) / m)
            })
            .sum()
    }
}

fn add_into(map: &mut BTreeMap<u64, Rational>, k: u64, r: Rational) {
    use std::collections::btree_map::Entry;
    match map.entry(k) {
        Entry::Vacant(v) => {
            v.insert(r);
        }
        Entry::Occupied(mut o) => {
            *o.get_mut() += r;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

/// Canonical form; provided for symmetry with the rest of the API since
/// every constructor already normalizes.
pub fn cyclo_normalize(x: &CycloScalar) -> CycloScalar {
    let m = x.conductor;
    CycloScalar::try_from_terms(m, x.lift(m)).expect("normalizing never raises the conductor")
}

/// √d under the principal branch, built from quadratic Gauss sums.
pub fn sqrt_int_embed(d: i64) -> Result<CycloScalar, ArithError> {
    if d == 0 {
        return Err(ArithError::SqrtZero);
    }
    let mut square = 1i64;
    let mut core = 1i64;
    for (p, e) in factorize(d.unsigned_abs()) {
        square *= (p as i64).pow(e / 2);
        if e % 2 == 1 {
            core *= p as i64;
        }
    }
    let mut out = CycloScalar::from_int(square);
    for (p, _) in factorize(core as u64) {
        out = out.try_mul(&sqrt_prime(p))?;
    }
    if d < 0 {
        out = out.try_mul(&CycloScalar::zeta(4, 1))?;
    }
    Ok(out)
}

fn sqrt_prime(p: u64) -> CycloScalar {
    if p == 2 {
        return &CycloScalar::zeta(8, 1) + &CycloScalar::zeta(8, 7);
    }
    let terms = (1..p).map(|n| {
        let leg = legendre(n, p);
        (n, rat_int(leg))
    });
    let g = CycloScalar::try_from_terms(p, terms).expect("prime conductor below cap");
    if p % 4 == 1 {
        g
    } else {
        &g * &CycloScalar::zeta(4, 3)
    }
}

fn legendre(n: u64, p: u64) -> i64 {
    let mut r = 1u128;
    let mut b = (n % p) as u128;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u128;
        }
        b = b * b % p as u128;
        e >>= 1;
    }
    if r == 1 {
        1
    } else if r == 0 {
        0
    } else {
        -1
    }
}

/// Field arithmetic dispatcher mirroring the four basic operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycloOp {
    Add,
    Mul,
    Neg,
    Inv,
}

pub fn cyclo_arith(x: &CycloScalar, y: &CycloScalar, op: CycloOp) -> Result<CycloScalar, ArithError> {
    match op {
        CycloOp::Add => x.try_add(y),
        CycloOp::Mul => x.try_mul(y),
        CycloOp::Neg => Ok(-x),
        CycloOp::Inv => x.try_inv(),
    }
}

impl Default for CycloScalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl<'a> Add<&'a CycloScalar> for &'a CycloScalar {
    type Output = CycloScalar;
    fn add(self, rhs: &CycloScalar) -> CycloScalar {
        self.try_add(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Add for CycloScalar {
    type Output = CycloScalar;
    fn add(self, rhs: CycloScalar) -> CycloScalar {
        &self + &rhs
    }
}

impl<'a> Sub<&'a CycloScalar> for &'a CycloScalar {
    type Output = CycloScalar;
    fn sub(self, rhs: &CycloScalar) -> CycloScalar {
        self + &(-rhs)
    }
}

impl Sub for CycloScalar {
    type Output = CycloScalar;
    fn sub(self, rhs: CycloScalar) -> CycloScalar {
        &self - &rhs
    }
}

impl<'a> Mul<&'a CycloScalar> for &'a CycloScalar {
    type Output = CycloScalar;
    fn mul(self, rhs: &CycloScalar) -> CycloScalar {
        self.try_mul(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Mul for CycloScalar {
    type Output = CycloScalar;
    fn mul(self, rhs: CycloScalar) -> CycloScalar {
        &self * &rhs
    }
}

impl Neg for &CycloScalar {
    type Output = CycloScalar;
    fn neg(self) -> CycloScalar {
        self.scale(&-Rational::one())
    }
}

impl Neg for CycloScalar {
    type Output = CycloScalar;
    fn neg(self) -> CycloScalar {
        -&self
    }
}

impl fmt::Display for CycloScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (k, r)) in self.coeffs.iter().enumerate() {
            let neg = r.is_negative();
            let a = r.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            if self.conductor == 1 {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "z{}^{}", self.conductor, k)?;
            } else {
                write!(f, "{a}*z{}^{}", self.conductor, k)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for CycloScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for CycloScalar {
    type Err = ArithError;

    /// Parses sums of terms `[a/b][*]z{M}[^k]` or bare rationals.
    fn from_str(s: &str) -> Result<Self, ArithError> {
        let err = |msg: &str| ArithError::Parse(s.to_string(), msg.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err("empty input"));
        }
        let mut out = CycloScalar::zero();
        let mut rest = compact.as_str();
        let mut first = true;
        while !rest.is_empty() {
            let mut negative = false;
            if let Some(r) = rest.strip_prefix('+') {
                rest = r;
            } else if let Some(r) = rest.strip_prefix('-') {
                negative = true;
                rest = r;
            } else if !first {
                return Err(err("expected + or -"));
            }
            first = false;
            let end = rest.find(['+', '-']).unwrap_or(rest.len());
            let (term, tail) = rest.split_at(end);
            rest = tail;
            let mut t = parse_term(term).map_err(|m| err(&m))?;
            if negative {
                t = -t;
            }
            out = out.try_add(&t)?;
        }
        Ok(out)
    }
}

fn parse_term(term: &str) -> Result<CycloScalar, String> {
    let (coef, root) = match term.find('z') {
        Some(i) => (term[..i].trim_end_matches('*'), Some(&term[i + 1..])),
        None => (term, None),
    };
    let c = if coef.is_empty() { Rational::one() } else { parse_rational(coef)? };
    let Some(root) = root else {
        return Ok(CycloScalar::from_rational(c));
    };
    let (m, k) = match root.split_once('^') {
        Some((m, k)) => (m, k.parse::<u64>().map_err(|e| e.to_string())?),
        None => (root, 1),
    };
    let m: u64 = m.parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
    if m == 0 {
        return Err("conductor must be positive".into());
    }
    CycloScalar::try_from_terms(m, [(k % m, c)]).map_err(|e| e.to_string())
}

pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| format!("bad numerator {n:?}"))?;
            let d: BigInt = d.trim().parse().map_err(|_| format!("bad denominator {d:?}"))?;
            if d.is_zero() {
                return Err("zero denominator".into());
            }
            Ok(Rational::new(n, d))
        }
        None => s.parse::<BigInt>().map(Rational::from_integer).map_err(|_| format!("bad rational {s:?}")),
    }
}

pub fn parse_rational64(s: &str) -> Result<Rational64, String> {
    let r = parse_rational(s)?;
    match (r.numer().to_i64(), r.denom().to_i64()) {
        (Some(n), Some(d)) => Ok(Rational64::new(n, d)),
        _ => Err(format!("rational {s:?} does not fit in 64 bits")),
    }
}

impl serde::Serialize for CycloScalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for CycloScalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(m: u64, k: i64) -> CycloScalar {
        CycloScalar::zeta(m, k)
    }

    #[test]
    fn vanishing_sums() {
        let s = &(&CycloScalar::one() + &z(3, 1)) + &z(3, 2);
        assert!(s.is_zero());
        let mut t = CycloScalar::zero();
        for k in 0..15 {
            t = &t + &z(15, k);
        }
        assert!(t.is_zero());
    }

    #[test]
    fn conductor_reduction() {
        assert_eq!(z(4, 2), CycloScalar::from_int(-1));
        assert_eq!(z(4, 2).conductor(), 1);
        let x = z(12, 4);
        assert_eq!(x.conductor(), 3);
        assert_eq!(x, z(3, 1));
        assert_eq!(z(10, 2).conductor(), 5);
        assert_eq!(z(6, 1).conductor(), 3);
    }

    #[test]
    fn basic_ops() {
        assert!((&z(8, 1) + &z(8, 5)).is_zero());
        assert!((&z(6, 1) * &z(6, 5)).is_one());
        let x = &CycloScalar::one() + &z(4, 1);
        let expect = (&CycloScalar::one() - &z(4, 1)).scale(&rat(1, 2));
        assert_eq!(x.inv(), expect);
        let y = &(&z(7, 1) + &z(7, 3)).scale(&rat(2, 3)) + &CycloScalar::from_int(5);
        assert!((&y * &y.inv()).is_one());
    }

    #[test]
    fn square_roots() {
        assert!(sqrt_int_embed(1).unwrap().is_one());
        assert_eq!(sqrt_int_embed(-1).unwrap(), z(4, 1));
        assert!((sqrt_int_embed(3).unwrap().to_c64().re - 3f64.sqrt()).abs() < 1e-12);
        for d in [-30i64, -7, -3, -2, 2, 3, 5, 6, 7, 11, 12, 18, 54] {
            let s = sqrt_int_embed(d).unwrap();
            assert_eq!(&s * &s, CycloScalar::from_int(d), "d = {d}");
            let c = s.to_c64();
            let want = if d > 0 { num_complex::Complex64::new((d as f64).sqrt(), 0.0) } else { num_complex::Complex64::new(0.0, (-d as f64).sqrt()) };
            assert!((c - want).norm() < 1e-10, "d = {d}");
        }
        assert!(sqrt_int_embed(0).is_err());
    }

    #[test]
    fn embedding() {
        assert!((z(4, 1).to_c64() - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let c = (&CycloScalar::one() + &z(3, 1)).to_c64();
        assert!((c - Complex64::new(0.5, 0.75f64.sqrt())).norm() < 1e-15);
        assert_eq!(CycloScalar::zero().to_c64(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn text_round_trip() {
        let x = &(&z(24, 5).scale(&rat(3, 2)) - &z(24, 7)) + &CycloScalar::from_int(2);
        let s = x.to_string();
        assert_eq!(s.parse::<CycloScalar>().unwrap(), x);
        assert_eq!("-1/2 + 3*z4^1".parse::<CycloScalar>().unwrap(), &CycloScalar::from_rational(rat(-1, 2)) + &z(4, 1).scale(&rat_int(3)));
        assert_eq!("z3 + z3^2".parse::<CycloScalar>().unwrap(), CycloScalar::from_int(-1));
        assert!("3*q".parse::<CycloScalar>().is_err());
        assert_eq!("0".parse::<CycloScalar>().unwrap(), CycloScalar::zero());
    }

    #[test]
    fn cap_is_enforced() {
        assert!(CycloScalar::try_from_terms(200_003, [(1, Rational::one())]).is_err());
    }
}
