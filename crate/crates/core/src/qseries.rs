//! Truncated q-expansions with rational exponents.
//!
//! Exponents are absolute: a stored pair (e, c) is the term c·e^{2πi e τ},
//! whatever the cusp width. The width travels along as metadata only.
//! `bound = None` marks an exact (finite) expansion; otherwise every term with
//! exponent below the bound is present and correct.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_arith::{parse_rational64, CycloScalar};

pub type Exponent = Rational64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QSeriesError {
    #[error("coefficient at q^{exponent} requested but the expansion is only known below q^{bound}")]
    BeyondBound { exponent: Exponent, bound: Exponent },
    #[error("cannot invert an expansion with no known leading term")]
    NoLeadingTerm,
    #[error("malformed expansion: {0}")]
    Malformed(String),
}

#[derive(Clone, PartialEq, Eq)]
pub struct QExpansion {
    width: Exponent,
    terms: BTreeMap<Exponent, CycloScalar>,
    bound: Option<Exponent>,
}

fn min_bound(a: Option<Exponent>, b: Option<Exponent>) -> Option<Exponent> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl QExpansion {
    /// The zero expansion known up to `bound`.
    pub fn zero(bound: Option<Exponent>) -> Self {
        QExpansion { width: Exponent::one(), terms: BTreeMap::new(), bound }
    }

    pub fn constant(c: CycloScalar) -> Self {
        Self::monomial(c, Exponent::zero())
    }

    /// Exact single term c·q^e.
    pub fn monomial(c: CycloScalar, e: Exponent) -> Self {
        let mut out = Self::zero(None);
        out.insert(e, c);
        out
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Exponent, CycloScalar)>, bound: Option<Exponent>) -> Self {
        let mut out = Self::zero(bound);
        for (e, c) in terms {
            out.insert(e, c);
        }
        out
    }

    /// Adds c·q^e in place, dropping it if it falls at or beyond the bound.
    pub fn insert(&mut self, e: Exponent, c: CycloScalar) {
        if c.is_zero() || self.bound.is_some_and(|b| e >= b) {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                *v = &*v + &c;
                if v.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn width(&self) -> Exponent {
        self.width
    }

    pub fn with_width(mut self, w: Exponent) -> Self {
        self.width = w;
        self
    }

    pub fn bound(&self) -> Option<Exponent> {
        self.bound
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exponent, &CycloScalar)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// lcm of the exponent denominators.
    pub fn denominator(&self) -> i64 {
        self.terms.keys().fold(1i64, |acc, e| acc.lcm(e.denom()))
    }

    /// Smallest stored exponent, or the bound when nothing is stored.
    pub fn min_exponent(&self) -> Option<Exponent> {
        self.terms.keys().next().copied().or(self.bound)
    }

    pub fn leading(&self) -> Option<(Exponent, &CycloScalar)> {
        self.terms.iter().next().map(|(e, c)| (*e, c))
    }

    pub fn coefficient(&self, e: Exponent) -> Result<CycloScalar, QSeriesError> {
        if let Some(b) = self.bound {
            if e >= b {
                return Err(QSeriesError::BeyondBound { exponent: e, bound: b });
            }
        }
        Ok(self.terms.get(&e).cloned().unwrap_or_default())
    }

    /// Lowers the bound (never raises it).
    pub fn truncate(&self, bound: Exponent) -> Self {
        let b = min_bound(self.bound, Some(bound));
        QExpansion { width: self.width, terms: self.terms.iter().filter(|(e, _)| b.is_none_or(|b| **e < b)).map(|(e, c)| (*e, c.clone())).collect(), bound: b }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = QExpansion { width: self.width, terms: BTreeMap::new(), bound: min_bound(self.bound, other.bound) };
        for (e, c) in self.terms.iter().chain(other.terms.iter()) {
            out.insert(*e, c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&-CycloScalar::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &CycloScalar) -> Self {
        let mut out = QExpansion { width: self.width, terms: BTreeMap::new(), bound: self.bound };
        if c.is_zero() {
            return out;
        }
        for (e, v) in &self.terms {
            out.terms.insert(*e, v * c);
        }
        out
    }

    /// Cauchy product with pessimistic bound propagation.
    pub fn mul(&self, other: &Self) -> Self {
        let bound = match (self.bound, other.bound) {
            (None, None) => None,
            (Some(bf), None) => other.min_exponent().map(|m| bf + m).or(Some(bf)),
            (None, Some(bg)) => self.min_exponent().map(|m| bg + m).or(Some(bg)),
            (Some(bf), Some(bg)) => Some((bf + other.min_exponent().unwrap()).min(bg + self.min_exponent().unwrap())),
        };
        let mut raw: BTreeMap<Exponent, Vec<CycloScalar>> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea + eb;
                if bound.is_some_and(|b| e >= b) {
                    continue;
                }
                raw.entry(e).or_default().push(ca * cb);
            }
        }
        let mut out = QExpansion { width: self.width, terms: BTreeMap::new(), bound };
        for (e, cs) in raw {
            let s = cs.iter().fold(CycloScalar::zero(), |acc, c| &acc + c);
            out.insert(e, s);
        }
        out
    }

    /// Multiplies by q^s.
    pub fn shift(&self, s: Exponent) -> Self {
        QExpansion { width: self.width, terms: self.terms.iter().map(|(e, c)| (e + s, c.clone())).collect(), bound: self.bound.map(|b| b + s) }
    }

    /// f(τ) ↦ f(λτ) for λ > 0.
    pub fn rescale(&self, lambda: Exponent) -> Self {
        assert!(lambda.is_positive(), "rescale factor must be positive");
        QExpansion { width: self.width, terms: self.terms.iter().map(|(e, c)| (e * lambda, c.clone())).collect(), bound: self.bound.map(|b| b * lambda) }
    }

    /// f(τ) ↦ f((aτ + b)/d) with a, d > 0.
    pub fn substitute(&self, a: i64, b: i64, d: i64) -> Self {
        assert!(a > 0 && d > 0, "substitution needs a, d > 0");
        let r = Exponent::new(a, d);
        let mut out = QExpansion { width: self.width, terms: BTreeMap::new(), bound: self.bound.map(|x| x * r) };
        for (e, c) in &self.terms {
            let phase = CycloScalar::e64(e * Exponent::new(b, d));
            out.insert(e * r, c * &phase);
        }
        out
    }

    /// Terms with exponent ≤ 0. The bound becomes the first positive exponent
    /// of the input, so the result is still correct below its bound.
    pub fn principal_part(&self) -> Self {
        QExpansion {
            width: self.width,
            terms: self.terms.range(..=Exponent::zero()).map(|(e, c)| (*e, c.clone())).collect(),
            bound: self.terms.range((std::ops::Bound::Excluded(Exponent::zero()), std::ops::Bound::Unbounded)).next().map(|(e, _)| *e).or(self.bound),
        }
    }

    /// Reciprocal expansion, computed up to `target` when the input is exact.
    pub fn inverse(&self, target: Option<Exponent>) -> Result<Self, QSeriesError> {
        let (e0, c0) = self.leading().ok_or(QSeriesError::NoLeadingTerm)?;
        let bound = match (self.bound.map(|b| b - e0 - e0), target) {
            (None, None) if self.terms.len() == 1 => None,
            (None, None) => return Err(QSeriesError::Malformed("an exact series needs a target bound to invert".into())),
            (b, t) => min_bound(b, t),
        };
        let c0inv = c0.inv();
        // 1/g = c0^{-1} q^{-e0} / (1 + D), D = Σ d_j q^{δ_j}
        let d: Vec<(Exponent, CycloScalar)> = self.terms.iter().skip(1).map(|(e, c)| (e - e0, c * &c0inv)).collect();
        let rel_bound = bound.map(|b| b + e0);
        let mut exps: BTreeSet<Exponent> = BTreeSet::new();
        exps.insert(Exponent::zero());
        if let Some(rb) = rel_bound {
            let mut frontier = vec![Exponent::zero()];
            while let Some(x) = frontier.pop() {
                for (dj, _) in &d {
                    let y = x + dj;
                    if y < rb && exps.insert(y) {
                        frontier.push(y);
                    }
                }
            }
        }
        let mut r: BTreeMap<Exponent, CycloScalar> = BTreeMap::new();
        for eps in exps {
            let v = if eps.is_zero() {
                CycloScalar::one()
            } else {
                let mut acc = CycloScalar::zero();
                for (dj, cj) in &d {
                    if let Some(prev) = r.get(&(eps - dj)) {
                        acc = &acc - &(cj * prev);
                    }
                }
                acc
            };
            if !v.is_zero() {
                r.insert(eps, v);
            }
        }
        let mut out = QExpansion { width: self.width, terms: BTreeMap::new(), bound };
        for (eps, v) in r {
            out.insert(eps - e0, &v * &c0inv);
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = QExpansion::constant(CycloScalar::one()).with_width(self.width);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Numerical value Σ c·e^{2πieτ} of the stored terms.
    pub fn evaluate(&self, tau: Complex64) -> Complex64 {
        let two_pi_i = Complex64::new(0.0, std::f64::consts::TAU);
        self.terms.iter().map(|(e, c)| c.to_c64() * (two_pi_i * tau * (*e.numer() as f64 / *e.denom() as f64)).exp()).sum()
    }

    /// Whether both expansions agree on every exponent below the smaller bound.
    pub fn agrees_with(&self, other: &Self) -> bool {
        let b = min_bound(self.bound, other.bound);
        let keep = |e: &Exponent| b.is_none_or(|b| *e < b);
        let a: Vec<_> = self.terms.iter().filter(|(e, _)| keep(e)).collect();
        let c: Vec<_> = other.terms.iter().filter(|(e, _)| keep(e)).collect();
        a == c
    }

    /// If self = u·other on the common range for a single scalar u, returns u.
    pub fn ratio_to(&self, other: &Self) -> Option<CycloScalar> {
        let b = min_bound(self.bound, other.bound);
        let keep = |e: &Exponent| b.is_none_or(|b| *e < b);
        let a: Vec<_> = self.terms.iter().filter(|(e, _)| keep(e)).collect();
        let c: Vec<_> = other.terms.iter().filter(|(e, _)| keep(e)).collect();
        if a.len() != c.len() || a.is_empty() {
            return None;
        }
        let u = a[0].1 * &c[0].1.inv();
        for ((ea, ca), (ec, cc)) in a.iter().zip(c.iter()) {
            if ea != ec || **ca != &u * *cc {
                return None;
            }
        }
        Some(u)
    }
}

impl std::fmt::Debug for QExpansion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})q^{e}")?;
        }
        if first {
            write!(f, "0")?;
        }
        match self.bound {
            Some(b) => write!(f, " + O(q^{b})"),
            None => Ok(()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QExpansionJson {
    width: String,
    denominator: i64,
    terms: Vec<(i64, i64, CycloScalar)>,
    bound: Option<String>,
}

impl Serialize for QExpansion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        QExpansionJson {
            width: self.width.to_string(),
            denominator: self.denominator(),
            terms: self.terms.iter().map(|(e, c)| (*e.numer(), *e.denom(), c.clone())).collect(),
            bound: self.bound.map(|b| b.to_string()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QExpansion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let j = QExpansionJson::deserialize(d)?;
        let width = parse_rational64(&j.width).map_err(D::Error::custom)?;
        let bound = j.bound.map(|b| parse_rational64(&b)).transpose().map_err(D::Error::custom)?;
        let mut out = QExpansion::zero(bound).with_width(width);
        for (n, den, c) in j.terms {
            if den == 0 {
                return Err(D::Error::custom("zero exponent denominator"));
            }
            let e = Exponent::new(n, den);
            if bound.is_some_and(|b| e >= b) {
                return Err(D::Error::custom(format!("exponent {e} lies beyond the bound")));
            }
            out.insert(e, c);
        }
        Ok(out)
    }
}
