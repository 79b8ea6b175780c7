//! Theta series of lattice cosets and their expansions at cusps.
//!
//! Every theta object is reduced to sums of products of components
//! Θ_{μ,P}(τ) = Σ_{x∈μ+ℤⁿ} P(x)·q^{½xᵀGx} for an even Gram matrix G and
//! μ ∈ G⁻¹ℤⁿ/ℤⁿ, with P = 1 or P(x) = x in rank one. These components span
//! a Weil representation:
//!
//! * Θ_μ(τ+1) = e(Q(μ))·Θ_μ(τ)
//! * Θ_μ(−1/τ) = (−i)^{deg P}·det(G)^{−1/2}·(−iτ)^{n/2+deg P}·Σ_{μ'} e(μ'ᵀGμ)·Θ_{μ'}(τ)
//!
//! so the expansion of f|γ at any cusp follows by replaying an S/T word.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_arith::{big_from_r64, rat_int, sqrt_int_embed, CycloScalar, Rational};
use crate::modular_group::{decompose_st, half_automorphy, scale_factor, GroupError, STWord, Token};
use crate::qseries::{Exponent, QExpansion};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ThetaError {
    #[error("Gram matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("invalid theta data: {0}")]
    Invalid(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("discriminant group of order {0} is too large to replay (limit {1})")]
    TooLarge(i64, i64),
    #[error("truncation bound {0} leaves no term of the expansion")]
    EmptyExpansion(Exponent),
    #[error(transparent)]
    Group(#[from] GroupError),
}

pub type Label = Vec<Rational64>;

const DISCRIMINANT_LIMIT: i64 = 5000;

fn frac(x: Rational64) -> Rational64 {
    x - x.floor()
}

fn reduce(mu: &[Rational64]) -> Label {
    mu.iter().map(|x| frac(*x)).collect()
}

fn is_even_gram(g: &[Vec<i64>]) -> bool {
    g.iter().enumerate().all(|(i, row)| row[i] % 2 == 0)
}

fn check_gram(g: &[Vec<i64>]) -> Result<(), ThetaError> {
    let n = g.len();
    if n == 0 || g.iter().any(|r| r.len() != n) {
        return Err(ThetaError::Invalid("Gram matrix must be square".into()));
    }
    for i in 0..n {
        for j in 0..n {
            if g[i][j] != g[j][i] {
                return Err(ThetaError::NotPositiveDefinite);
            }
        }
    }
    for k in 1..=n {
        let minor: Vec<Vec<i64>> = g[..k].iter().map(|r| r[..k].to_vec()).collect();
        if det_int(&minor) <= 0 {
            return Err(ThetaError::NotPositiveDefinite);
        }
    }
    Ok(())
}

fn det_int(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    match n {
        0 => 1,
        1 => m[0][0],
        _ => (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..].iter().map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| *v).collect()).collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * m[0][j] * det_int(&minor)
            })
            .sum(),
    }
}

fn inverse_rat(m: &[Vec<i64>]) -> Vec<Vec<Rational64>> {
    let n = m.len();
    let mut a: Vec<Vec<Rational64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row: Vec<Rational64> = r.iter().map(|&v| Rational64::from_integer(v)).collect();
            row.extend((0..n).map(|j| if i == j { Rational64::one() } else { Rational64::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero()).expect("nonsingular");
        a.swap(col, piv);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                for c in 0..2 * n {
                    let t = a[col][c] * f;
                    a[r][c] -= t;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// An even lattice ℤⁿ with Gram matrix G, optionally carrying P(x) = x (rank one).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeilLattice {
    pub gram: Vec<Vec<i64>>,
    pub linear: bool,
}

impl WeilLattice {
    pub fn new(gram: Vec<Vec<i64>>, linear: bool) -> Result<Self, ThetaError> {
        check_gram(&gram)?;
        if !is_even_gram(&gram) {
            return Err(ThetaError::Invalid("Gram matrix must be even".into()));
        }
        if linear && gram.len() != 1 {
            return Err(ThetaError::Unsupported("linear polynomial weights are only modelled in rank one".into()));
        }
        Ok(WeilLattice { gram, linear })
    }

    pub fn unary(g: i64, linear: bool) -> Result<Self, ThetaError> {
        Self::new(vec![vec![g]], linear)
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn det(&self) -> i64 {
        det_int(&self.gram)
    }

    /// Twice the weight: n + 2·deg P.
    pub fn weight2(&self) -> i64 {
        self.rank() as i64 + if self.linear { 2 } else { 0 }
    }

    pub fn q(&self, mu: &[Rational64]) -> Rational64 {
        self.b(mu, mu) / 2
    }

    pub fn b(&self, x: &[Rational64], y: &[Rational64]) -> Rational64 {
        let n = self.rank();
        let mut s = Rational64::zero();
        for i in 0..n {
            for j in 0..n {
                s += x[i] * y[j] * self.gram[i][j];
            }
        }
        s
    }

    pub fn in_dual(&self, mu: &[Rational64]) -> bool {
        (0..self.rank()).all(|i| (0..self.rank()).map(|j| mu[j] * self.gram[i][j]).sum::<Rational64>().is_integer())
    }

    /// G⁻¹ℤⁿ/ℤⁿ, memoized per Gram matrix.
    pub fn discriminant_group(&self) -> Result<Arc<Vec<Label>>, ThetaError> {
        static CACHE: OnceLock<Mutex<HashMap<Vec<Vec<i64>>, Arc<Vec<Label>>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(g) = cache.lock().unwrap().get(&self.gram) {
            return Ok(g.clone());
        }
        let g = Arc::new(self.enumerate_discriminant_group()?);
        cache.lock().unwrap().insert(self.gram.clone(), g.clone());
        Ok(g)
    }

    fn enumerate_discriminant_group(&self) -> Result<Vec<Label>, ThetaError> {
        let det = self.det();
        if det > DISCRIMINANT_LIMIT {
            return Err(ThetaError::TooLarge(det, DISCRIMINANT_LIMIT));
        }
        let inv = inverse_rat(&self.gram);
        let n = self.rank();
        let gens: Vec<Label> = (0..n).map(|j| (0..n).map(|i| inv[i][j]).collect()).collect();
        let zero: Label = vec![Rational64::zero(); n];
        let mut seen = BTreeSet::from([zero.clone()]);
        let mut stack = vec![zero];
        while let Some(x) = stack.pop() {
            for g in &gens {
                let y = reduce(&x.iter().zip(g).map(|(a, b)| a + b).collect::<Vec<_>>());
                if seen.insert(y.clone()) {
                    stack.push(y);
                }
            }
        }
        Ok(seen.into_iter().collect())
    }

    /// Θ_{μ,P} at i∞, all terms with exponent < bound.
    pub fn component_expansion(&self, mu: &[Rational64], bound: Exponent) -> QExpansion {
        let mut acc: BTreeMap<Exponent, Rational> = BTreeMap::new();
        let n = self.rank();
        let inv = inverse_rat(&self.gram);
        let b = bound.to_f64().unwrap().max(0.0);
        // |x_i| ≤ sqrt(2B·(G⁻¹)_ii)
        let radius: Vec<f64> = (0..n).map(|i| (2.0 * b * inv[i][i].to_f64().unwrap()).sqrt() + 1.0).collect();
        let mut x = vec![Rational64::zero(); n];
        self.enumerate(0, mu, &radius, &mut x, bound, &mut acc);
        QExpansion::from_terms(acc.into_iter().map(|(e, r)| (e, CycloScalar::from_rational(r))), Some(bound))
    }

    fn enumerate(&self, i: usize, mu: &[Rational64], radius: &[f64], x: &mut Vec<Rational64>, bound: Exponent, acc: &mut BTreeMap<Exponent, Rational>) {
        if i == self.rank() {
            let e = self.q(x);
            if e < bound {
                let w = if self.linear { big_from_r64(x[0]) } else { Rational::one() };
                let slot = acc.entry(e).or_insert_with(Rational::zero);
                *slot += w;
            }
            return;
        }
        let m = mu[i].to_f64().unwrap();
        let lo = (-radius[i] - m).floor() as i64;
        let hi = (radius[i] - m).ceil() as i64;
        for k in lo..=hi {
            x[i] = mu[i] + k;
            self.enumerate(i + 1, mu, radius, x, bound, acc);
        }
    }

    /// e(Q(μ)).
    pub fn t_phase(&self, mu: &[Rational64]) -> CycloScalar {
        CycloScalar::e64(frac(self.q(mu)))
    }

    /// (−i)^{deg P}·det(G)^{−1/2}.
    pub fn s_constant(&self) -> CycloScalar {
        let root = sqrt_int_embed(self.det()).expect("positive determinant");
        let c = root.scale(&crate::exact_arith::rat(1, self.det()));
        if self.linear {
            &c * &CycloScalar::zeta(4, 3)
        } else {
            c
        }
    }

    /// Θ_{−μ} = ±Θ_μ.
    pub fn parity(&self) -> i64 {
        if self.linear {
            -1
        } else {
            1
        }
    }
}

/// Each coefficient as (k, n) pairs meaning Σ (n/den)·ζ_m^k, if the numerators fit in i64.
fn integer_images<'a>(coeffs: impl Iterator<Item = &'a CycloScalar>, m: u64) -> Option<(BigInt, Vec<Vec<(usize, i64)>>)> {
    let coeffs: Vec<&CycloScalar> = coeffs.collect();
    let mut den = BigInt::one();
    for c in &coeffs {
        for (_, r) in c.terms() {
            den = den.lcm(r.denom());
        }
    }
    let mut images = Vec::with_capacity(coeffs.len());
    for c in coeffs {
        let step = m / c.conductor();
        let mut img = Vec::new();
        for (k, r) in c.terms() {
            let n = (r.numer() * (&den / r.denom())).to_i64()?;
            img.push(((k * step) as usize, n));
        }
        images.push(img);
    }
    Some((den, images))
}

fn s_dense(
    group: &[Label],
    phases: &[Vec<Rational64>],
    images: &[Vec<(usize, i64)>],
    den: &BigInt,
    m: u64,
) -> Result<BTreeMap<Label, CycloScalar>, ThetaError> {
    let mu = m as usize;
    let mut out = BTreeMap::new();
    let mut acc = vec![0i128; mu];
    for (nu, row) in group.iter().zip(phases) {
        acc.iter_mut().for_each(|a| *a = 0);
        for (x, img) in row.iter().zip(images) {
            let shift = (*x.numer() as u64 * (m / *x.denom() as u64)) as usize;
            for &(k, n) in img {
                acc[(k + shift) % mu] += n as i128;
            }
        }
        if acc.iter().all(|a| *a == 0) {
            continue;
        }
        let terms = acc.iter().enumerate().filter(|(_, a)| **a != 0).map(|(k, a)| (k as u64, Rational::new(BigInt::from(*a), den.clone())));
        let c = CycloScalar::try_from_terms(m, terms).map_err(|e| ThetaError::Unsupported(e.to_string()))?;
        if !c.is_zero() {
            out.insert(nu.clone(), c);
        }
    }
    Ok(out)
}

fn s_generic(group: &[Label], support: &[(&Label, &CycloScalar)], phases: &[Vec<Rational64>]) -> BTreeMap<Label, CycloScalar> {
    let mut out = BTreeMap::new();
    let mut roots: HashMap<Rational64, CycloScalar> = HashMap::new();
    for (nu, row) in group.iter().zip(phases) {
        let mut acc = CycloScalar::zero();
        for (x, (_, c)) in row.iter().zip(support) {
            if x.is_zero() {
                acc = &acc + *c;
                continue;
            }
            let z = roots.entry(*x).or_insert_with(|| CycloScalar::e64(*x));
            acc = &acc + &(*c * &*z);
        }
        if !acc.is_zero() {
            out.insert(nu.clone(), acc);
        }
    }
    out
}

/// A vector Σ_μ v_μ·Θ_μ over one lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorVector {
    pub lattice: Arc<WeilLattice>,
    pub coeffs: BTreeMap<Label, CycloScalar>,
}

impl FactorVector {
    pub fn basis(lattice: Arc<WeilLattice>, mu: &[Rational64]) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(reduce(mu), CycloScalar::one());
        FactorVector { lattice, coeffs }
    }

    fn apply_t(&mut self, m: i64) {
        for (mu, c) in self.coeffs.iter_mut() {
            let phase = CycloScalar::e64(frac(self.lattice.q(mu) * m));
            *c = &*c * &phase;
        }
        self.coeffs.retain(|_, c| !c.is_zero());
    }

    fn apply_s(&mut self) -> Result<(), ThetaError> {
        let group = self.lattice.discriminant_group()?;
        let support: Vec<(&Label, &CycloScalar)> = self.coeffs.iter().collect();
        let phases: Vec<Vec<Rational64>> = group.iter().map(|nu| support.iter().map(|(mu, _)| frac(self.lattice.b(nu, mu))).collect()).collect();
        let mut m: u64 = 1;
        for x in phases.iter().flatten() {
            m = m.lcm(&(*x.denom() as u64));
        }
        for (_, c) in &support {
            m = m.lcm(&c.conductor());
        }
        let out = match integer_images(support.iter().map(|(_, c)| *c), m) {
            Some((den, images)) => s_dense(&group, &phases, &images, &den, m)?,
            None => s_generic(&group, &support, &phases),
        };
        self.coeffs = out;
        Ok(())
    }

    /// Identifies Θ_μ with ±Θ_{−μ} so that equal functions have equal vectors.
    pub fn folded(&self) -> BTreeMap<Label, CycloScalar> {
        let mut out: BTreeMap<Label, CycloScalar> = BTreeMap::new();
        let par = self.lattice.parity();
        for (mu, c) in &self.coeffs {
            let neg = reduce(&mu.iter().map(|x| -*x).collect::<Vec<_>>());
            let (key, c) = if neg < *mu { (neg, c.scale(&rat_int(par))) } else { (mu.clone(), c.clone()) };
            let slot = out.entry(key).or_default();
            *slot = &*slot + &c;
        }
        out.retain(|k, v| {
            let self_dual = reduce(&k.iter().map(|x| -*x).collect::<Vec<_>>()) == *k;
            !v.is_zero() && !(self_dual && par < 0)
        });
        out
    }

    pub fn expansion(&self, bound: Exponent) -> QExpansion {
        let mut out = QExpansion::zero(Some(bound));
        for (mu, c) in self.folded() {
            let comp = self.lattice.component_expansion(&mu, bound);
            out = out.add(&comp.scale(&c));
        }
        out
    }
}

/// coeff · ∏ factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaTerm {
    pub coeff: CycloScalar,
    pub factors: Vec<FactorVector>,
}

impl ThetaTerm {
    pub fn weight2(&self) -> i64 {
        self.factors.iter().map(|f| f.lattice.weight2()).sum()
    }

    pub fn expansion(&self, bound: Exponent) -> QExpansion {
        let mut out = QExpansion::constant(self.coeff.clone());
        for f in &self.factors {
            out = out.mul(&f.expansion(bound));
        }
        out.truncate(bound)
    }
}

/// A finite sum of theta terms of equal weight, evaluated at λτ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaSource {
    pub terms: Vec<ThetaTerm>,
    pub scale: Exponent,
    pub name: String,
}

impl ThetaSource {
    pub fn weight2(&self) -> i64 {
        self.terms.first().map_or(0, |t| t.weight2())
    }

    /// The same function written at a smaller scale, through ϑ_G(kτ) = ϑ_{kG}(τ).
    pub fn at_scale(&self, target: Exponent) -> Result<ThetaSource, ThetaError> {
        let k = self.scale / target;
        if !k.is_integer() || !k.is_positive() {
            return Err(ThetaError::Unsupported(format!("scale {} is not a multiple of {target}", self.scale)));
        }
        let k = k.to_integer();
        let mut out = self.clone();
        out.scale = target;
        if k == 1 {
            return Ok(out);
        }
        for t in &mut out.terms {
            for f in &mut t.factors {
                let gram = f.lattice.gram.iter().map(|row| row.iter().map(|x| x * k).collect()).collect();
                f.lattice = Arc::new(WeilLattice::new(gram, f.lattice.linear)?);
            }
        }
        Ok(out)
    }

    /// Sum of two sources; differing scales are brought to their rational gcd.
    pub fn add(&self, other: &ThetaSource) -> Result<ThetaSource, ThetaError> {
        if self.scale != other.scale {
            let (a, b) = (self.scale, other.scale);
            let common = Exponent::new(a.numer().gcd(b.numer()), a.denom().lcm(b.denom()));
            return self.at_scale(common)?.add(&other.at_scale(common)?);
        }
        if !self.terms.is_empty() && !other.terms.is_empty() && self.weight2() != other.weight2() {
            return Err(ThetaError::Invalid("weights differ".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(ThetaSource { terms, scale: self.scale, name: format!("{} + {}", self.name, other.name) })
    }

    pub fn scaled_by(&self, c: &CycloScalar) -> ThetaSource {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff = &t.coeff * c;
        }
        out
    }

    /// f(τ) ↦ f(λτ).
    pub fn rescaled(&self, lambda: Exponent) -> ThetaSource {
        let mut out = self.clone();
        out.scale *= lambda;
        out
    }

    /// Lattice level: least L with L·Q(x) ∈ ℤ on the dual and L·G⁻¹ even; relevant to Γ₀(L).
    pub fn lattice_level(&self) -> i64 {
        let mut level = 1i64;
        for t in &self.terms {
            for f in &t.factors {
                let inv = inverse_rat(&f.lattice.gram);
                let n = f.lattice.rank();
                for i in 0..n {
                    for j in 0..n {
                        let x = if i == j { inv[i][j] / 2 } else { inv[i][j] };
                        level = level.lcm(x.denom());
                    }
                }
            }
        }
        level
    }
}

/// Θ_{L+ν} for an integral Gram matrix and rational shift.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftedLattice {
    pub gram: Vec<Vec<i64>>,
    pub shift: Vec<Rational64>,
}

/// Shimura's θ(τ; h, A, N, P) = Σ_{x≡h (N)} P(x)·e(τ·xᵀAx/(2N²)).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaSpec {
    pub h: Vec<i64>,
    pub a: Vec<Vec<i64>>,
    pub n: i64,
    /// None for P = 1, Some(ℓ) for P(x) = ℓᵀx.
    pub linear: Option<Vec<i64>>,
}

/// ϑ_{h,t,N}(τ) = Σ_{r≡h (2N/t)} r·q^{tr²}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnaryThetaSpec {
    pub h: i64,
    pub t: i64,
    pub n: i64,
}

fn is_squarefree(n: i64) -> bool {
    (2..).take_while(|p| p * p <= n).all(|p| n % (p * p) != 0)
}

impl UnaryThetaSpec {
    pub fn new(h: i64, t: i64, n: i64) -> Result<Self, ThetaError> {
        if n < 1 || t < 1 || (2 * n) % t != 0 || !is_squarefree(t) {
            return Err(ThetaError::Invalid(format!("need t squarefree dividing 2N, got t={t}, N={n}")));
        }
        Ok(UnaryThetaSpec { h: h.rem_euclid(2 * n / t), t, n })
    }

    pub fn modulus(&self) -> i64 {
        2 * self.n / self.t
    }

    pub fn label(&self) -> String {
        format!("theta_{{{},{},{}}}", self.h, self.t, self.n)
    }

    /// ϑ_{h,t,N} = (2N/t)·Θ_{μ,x} on G = 8N²/t with μ = ht/(2N).
    pub fn source(&self) -> ThetaSource {
        let g = 8 * self.n * self.n / self.t;
        let lat = Arc::new(WeilLattice::unary(g, true).expect("valid unary lattice"));
        let mu = Rational64::new(self.h * self.t, 2 * self.n);
        ThetaSource {
            terms: vec![ThetaTerm { coeff: CycloScalar::from_int(self.modulus()), factors: vec![FactorVector::basis(lat, &[mu])] }],
            scale: Exponent::one(),
            name: self.label(),
        }
    }

    /// Direct summation of the defining series.
    pub fn naive_expansion(&self, bound: Exponent) -> QExpansion {
        let m = self.modulus();
        let mut out = QExpansion::zero(Some(bound));
        let b = bound.to_f64().unwrap();
        let rmax = (b / self.t as f64).sqrt() as i64 + 1;
        for r in -rmax..=rmax {
            if (r - self.h).rem_euclid(m) == 0 {
                out.insert(Exponent::from_integer(self.t * r * r), CycloScalar::from_int(r));
            }
        }
        out
    }
}

impl ShiftedLattice {
    pub fn new(gram: Vec<Vec<i64>>, shift: Vec<Rational64>) -> Result<Self, ThetaError> {
        check_gram(&gram)?;
        if shift.len() != gram.len() {
            return Err(ThetaError::Invalid("shift length must match the rank".into()));
        }
        Ok(ShiftedLattice { gram, shift })
    }

    pub fn q(&self, x: &[Rational64]) -> Rational64 {
        let n = self.gram.len();
        let mut s = Rational64::zero();
        for i in 0..n {
            for j in 0..n {
                s += x[i] * x[j] * self.gram[i][j];
            }
        }
        s / 2
    }

    fn is_diagonal(&self) -> bool {
        let n = self.gram.len();
        (0..n).all(|i| (0..n).all(|j| i == j || self.gram[i][j] == 0))
    }

    /// Rewrites Θ_{L+ν} in Weil components: pass to the sublattice dℤⁿ with d minimal so that
    /// d²G is even and dGν is integral; then L+ν = ⋃_ε d·((ν+ε)/d + ℤⁿ).
    pub fn source(&self) -> Result<ThetaSource, ThetaError> {
        let n = self.gram.len();
        let mut d = 1i64;
        for i in 0..n {
            let gnu: Rational64 = (0..n).map(|j| self.shift[j] * self.gram[i][j]).sum();
            d = d.lcm(gnu.denom());
        }
        if !is_even_gram(&self.gram) && d % 2 == 1 {
            d *= 2;
        }
        let gram2: Vec<Vec<i64>> = self.gram.iter().map(|r| r.iter().map(|v| v * d * d).collect()).collect();
        let mut eps_list: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..n {
            eps_list = eps_list.into_iter().flat_map(|e| (0..d).map(move |k| [e.clone(), vec![k]].concat())).collect();
        }
        let diag = self.is_diagonal();
        let unary: Vec<Arc<WeilLattice>> =
            if diag { (0..n).map(|i| WeilLattice::unary(gram2[i][i], false).map(Arc::new)).collect::<Result<_, _>>()? } else { Vec::new() };
        let full = if diag { None } else { Some(Arc::new(WeilLattice::new(gram2.clone(), false)?)) };
        let mut terms = Vec::new();
        for eps in eps_list {
            let mu: Vec<Rational64> = (0..n).map(|i| (self.shift[i] + eps[i]) / d).collect();
            let factors = if diag {
                (0..n).map(|i| FactorVector::basis(unary[i].clone(), &[mu[i]])).collect()
            } else {
                vec![FactorVector::basis(full.clone().unwrap(), &mu)]
            };
            terms.push(ThetaTerm { coeff: CycloScalar::one(), factors });
        }
        Ok(ThetaSource { terms, scale: Exponent::one(), name: "Theta_{L+nu}".into() })
    }

    /// Naive enumeration over a cube; used as an oracle.
    pub fn naive_expansion(&self, bound: Exponent) -> QExpansion {
        let n = self.gram.len();
        let mut acc: BTreeMap<Exponent, i64> = BTreeMap::new();
        let min_diag = (0..n).map(|i| self.gram[i][i]).min().unwrap_or(1) as f64;
        let _ = min_diag;
        let inv = inverse_rat(&self.gram);
        let r = (0..n).map(|i| (2.0 * bound.to_f64().unwrap() * inv[i][i].to_f64().unwrap()).sqrt()).fold(0.0, f64::max) as i64 + 2;
        let mut idx = vec![-r; n];
        loop {
            let x: Vec<Rational64> = (0..n).map(|i| self.shift[i] + idx[i]).collect();
            let e = self.q(&x);
            if e < bound {
                *acc.entry(e).or_insert(0) += 1;
            }
            let mut k = 0;
            loop {
                if k == n {
                    return QExpansion::from_terms(acc.into_iter().map(|(e, c)| (e, CycloScalar::from_int(c))), Some(bound));
                }
                idx[k] += 1;
                if idx[k] <= r {
                    break;
                }
                idx[k] = -r;
                k += 1;
            }
        }
    }
}

impl ThetaSpec {
    pub fn new(h: Vec<i64>, a: Vec<Vec<i64>>, n: i64, linear: Option<Vec<i64>>) -> Result<Self, ThetaError> {
        check_gram(&a)?;
        if n < 1 || h.len() != a.len() {
            return Err(ThetaError::Invalid("need N ≥ 1 and h of matching length".into()));
        }
        for row in &a {
            let s: i64 = row.iter().zip(&h).map(|(x, y)| x * y).sum();
            if s % n != 0 {
                return Err(ThetaError::Invalid("A·h must vanish mod N".into()));
            }
        }
        Ok(ThetaSpec { h, a, n, linear })
    }

    /// x = h + N·k runs over μ + ℤⁿ scaled by N (A even), or by 2N over the 2ⁿ parity classes.
    pub fn source(&self) -> Result<ThetaSource, ThetaError> {
        let rank = self.a.len();
        if let Some(l) = &self.linear {
            if rank != 1 {
                return Err(ThetaError::Unsupported("linear P in rank > 1".into()));
            }
            if l.len() != 1 {
                return Err(ThetaError::Invalid("direction vector length".into()));
            }
        }
        let even = is_even_gram(&self.a);
        let (scale, mult) = if even { (self.n, 1) } else { (2 * self.n, 4) };
        let gram: Vec<Vec<i64>> = self.a.iter().map(|r| r.iter().map(|v| v * mult).collect()).collect();
        let classes: Vec<Vec<i64>> = if even {
            vec![vec![0; rank]]
        } else {
            let mut v: Vec<Vec<i64>> = vec![vec![]];
            for _ in 0..rank {
                v = v.into_iter().flat_map(|e| (0..2).map(move |k| [e.clone(), vec![k]].concat())).collect();
            }
            v
        };
        let lin = self.linear.as_ref().map(|l| l[0]);
        let lat = Arc::new(WeilLattice::new(gram, lin.is_some())?);
        let coeff = match lin {
            Some(l) => CycloScalar::from_int(l * scale),
            None => CycloScalar::one(),
        };
        let terms = classes
            .into_iter()
            .map(|eps| {
                let mu: Vec<Rational64> = (0..rank).map(|i| Rational64::new(self.h[i] + self.n * eps[i], scale)).collect();
                ThetaTerm { coeff: coeff.clone(), factors: vec![FactorVector::basis(lat.clone(), &mu)] }
            })
            .collect();
        Ok(ThetaSource { terms, scale: Exponent::one(), name: "shimura_theta".into() })
    }
}

/// Output of [`polygonal_to_lattice`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolygonalLattice {
    pub lattice: ShiftedLattice,
    /// Σ q^{P(x,y,z)} = q^{−constant_shift}·Θ_{L+ν}(scale·τ)
    pub constant_shift: Rational64,
    pub scale: Rational64,
}

/// Completing the square: 8(m−2)·p_m(x) + (m−4)² = (2(m−2)x − (m−4))².
/// With g = gcd(2(m−2), m−4) and M = 2(m−2)/g, X = (2(m−2)x − (m−4))/g runs over
/// the coset r + Mℤ, r ≡ −(m−4)/g mod M; writing X = M·(ν + k) gives Gram
/// diag(2aM², 2bM², 2cM²) and ν = r/M in each coordinate.
pub fn polygonal_to_lattice(m: i64, a: i64, b: i64, c: i64) -> Result<PolygonalLattice, ThetaError> {
    if m < 3 || a < 1 || b < 1 || c < 1 {
        return Err(ThetaError::Invalid("need m ≥ 3 and positive coefficients".into()));
    }
    let two = 2 * (m - 2);
    let g = two.gcd(&(m - 4));
    let big_m = two / g;
    let r = (-(m - 4) / g).rem_euclid(big_m);
    let nu = Rational64::new(r, big_m);
    let gram = vec![vec![2 * a * big_m * big_m, 0, 0], vec![0, 2 * b * big_m * big_m, 0], vec![0, 0, 2 * c * big_m * big_m]];
    // Q(X) = Σ a X²  = Σ a (2(m−2)x−(m−4))²/g² = (8(m−2)·P + (a+b+c)(m−4)²)/g²
    let d = 8 * (m - 2);
    let scale = Rational64::new(g * g, d);
    let constant_shift = Rational64::new((a + b + c) * (m - 4) * (m - 4), d);
    Ok(PolygonalLattice { lattice: ShiftedLattice::new(gram, vec![nu; 3])?, constant_shift, scale })
}

/// p_m(x) = ((m−2)x² − (m−4)x)/2.
pub fn polygonal_number(m: i64, x: i64) -> i64 {
    ((m - 2) * x * x - (m - 4) * x) / 2
}

/// All terms of f at i∞ with exponent < bound.
pub fn theta_expansion_infty(src: &ThetaSource, bound: Exponent) -> QExpansion {
    let inner = bound / src.scale;
    let mut out = QExpansion::zero(Some(inner));
    for t in &src.terms {
        out = out.add(&t.expansion(inner));
    }
    out.rescale(src.scale).truncate(bound)
}

/// χ_{−3}(n) = Kronecker symbol (−3/n).
pub fn chi_minus3(n: i64) -> i64 {
    match n.rem_euclid(3) {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

/// ϑ_{χ−3}(τ) = Σ_{n∈ℤ} χ_{−3}(n)·n·q^{n²}, from the character directly.
pub fn chi_theta_expansion(bound: Exponent) -> QExpansion {
    let mut out = QExpansion::zero(Some(bound));
    let mut n = 1i64;
    while Exponent::from_integer(n * n) < bound {
        for m in [n, -n] {
            out.insert(Exponent::from_integer(m * m), CycloScalar::from_int(chi_minus3(m) * m));
        }
        n += 1;
    }
    out
}

/// Checks ϑ_{χ−3}(τ) = ϑ_{2,1,3}(τ/4) up to the bound.
pub fn chi_theta_rewrite_check(bound: Exponent) -> bool {
    let lhs = chi_theta_expansion(bound);
    let rhs = theta_expansion_infty(&UnaryThetaSpec { h: 2, t: 1, n: 3 }.source().rescaled(Exponent::new(1, 4)), bound);
    lhs == rhs
}

/// Replay state: f(γτ) = (∏ s_k^{2w})·Σ_terms (vector)(τ_end).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaVector {
    pub terms: Vec<ThetaTerm>,
    pub s_steps: usize,
}

impl ThetaVector {
    pub fn new(src: &ThetaSource) -> Self {
        ThetaVector { terms: src.terms.clone(), s_steps: 0 }
    }
}

pub fn theta_transform(vec: &ThetaVector, token: Token) -> Result<ThetaVector, ThetaError> {
    let mut out = vec.clone();
    match token {
        Token::T(m) => {
            for t in &mut out.terms {
                for f in &mut t.factors {
                    f.apply_t(m);
                }
            }
        }
        Token::S => {
            for t in &mut out.terms {
                // equal factors transform equally
                let mut done: Vec<(FactorVector, FactorVector)> = Vec::new();
                for f in &mut t.factors {
                    if let Some((_, img)) = done.iter().find(|(src, _)| src.lattice.gram == f.lattice.gram && src.coeffs == f.coeffs) {
                        *f = img.clone();
                    } else {
                        let src = f.clone();
                        f.apply_s()?;
                        done.push((src, f.clone()));
                    }
                    t.coeff = &t.coeff * &f.lattice.s_constant();
                }
            }
            out.s_steps += 1;
        }
    }
    Ok(out)
}

/// The word replay behind a cusp expansion; exposed for two-path checks.
#[derive(Debug, Clone)]
pub struct ReplayedTheta {
    /// f|γ = constant · Σ terms evaluated at (a'τ + b')/d'
    pub vector: ThetaVector,
    pub constant: CycloScalar,
    pub a1: i64,
    pub b1: i64,
    pub d1: i64,
}

/// Replays the word of γ (or of γ'' for a rescaled source).
pub fn replay(src: &ThetaSource, word: &STWord) -> Result<ReplayedTheta, ThetaError> {
    let gamma = word.eval();
    let (p, q) = (*src.scale.numer(), *src.scale.denom());
    let (word2, a1, b1, d1) = if p == 1 && q == 1 {
        (word.clone(), 1, 0, 1)
    } else {
        let (g2, a1, b1, d1) = scale_factor(&gamma, p, q)?;
        (decompose_st(&g2), a1, b1, d1)
    };
    let mut v = ThetaVector::new(src);
    for t in &word2.tokens {
        v = theta_transform(&v, *t)?;
    }
    let r = src.weight2();
    let auto = half_automorphy(&word2, a1, b1, d1, q, &gamma);
    Ok(ReplayedTheta { vector: v, constant: auto.factor(r), a1, b1, d1 })
}

impl ReplayedTheta {
    pub fn expansion(&self, bound: Exponent) -> QExpansion {
        // exponents in τ' = A'τ scale by a'/d'
        let inner = bound * self.d1 / self.a1;
        let mut out = QExpansion::zero(Some(inner));
        for t in &self.vector.terms {
            out = out.add(&t.expansion(inner));
        }
        out.scale(&self.constant).substitute(self.a1, self.b1, self.d1).truncate(bound)
    }
}

/// Exact expansion of f|γ, γ = word.eval(), with exponents below `bound`.
pub fn expansion_at_cusp(src: &ThetaSource, word: &STWord, bound: Exponent) -> Result<QExpansion, ThetaError> {
    if !bound.is_positive() {
        return Err(ThetaError::EmptyExpansion(bound));
    }
    Ok(replay(src, word)?.expansion(bound))
}

/// Numerical value of a theta source by direct lattice summation (validation only).
pub fn evaluate_numeric(src: &ThetaSource, tau: num_complex::Complex64) -> num_complex::Complex64 {
    let v = tau.im * src.scale.to_f64().unwrap();
    // terms with e^{−2π·e·v} < 1e−18 are dropped
    let bound = Exponent::from_integer((45.0 / (std::f64::consts::TAU * v)).ceil() as i64 + 1) / src.scale;
    theta_expansion_infty(src, bound * src.scale).evaluate(tau)
}
