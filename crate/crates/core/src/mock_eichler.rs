//! Appell-Lerch sums μ, their completions μ̃, and the weight 1/2 harmonic
//! pre-images F_{h,t,N} of unary theta functions.
//!
//! The transformation laws are carried by the family
//! Φ_w(τ) = e^{−πi(α−α')²τ}·μ̃(ατ+β, α'τ+β'; τ), w = (α, β, α', β'), which is
//! closed under
//!
//! * S: Φ_w(−1/τ) = −e(AB)·√(−iτ)·Φ_{(β,−α,β',−α')}(τ)
//! * T: Φ_w(τ+1) = e(−1/8)·e(−A²/2)·Φ_{(α,α+β,α',α'+β')}(τ)
//! * Φ_{w+(k,l,m,n)} = (−1)^{k+l+m+n}·e((k−m)B)·Φ_w
//!
//! with A = α−α', B = β−β'. F_{h,t,N}(τ) = −Φ_v(Kτ) for K = 8N²/t² and
//! v = ((ht−N)/2N, 0, 0, −1/2).

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_arith::{rat, CycloScalar, Rational};
use crate::modular_group::{decompose_st, half_automorphy, scale_factor, GroupError, SL2Matrix, STWord, Token};
use crate::qseries::{Exponent, QExpansion};
use crate::theta_forms::{ThetaSource, UnaryThetaSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MockError {
    #[error("theta(z) vanishes identically at the torsion point {0}")]
    ThetaZero(String),
    #[error("Appell-Lerch sum has a pole at the torsion point {0}")]
    Pole(String),
    #[error("invalid mock data: {0}")]
    Invalid(String),
    #[error("truncation bound {0} does not reach the constant term")]
    BoundTooSmall(Exponent),
    #[error(transparent)]
    Group(#[from] GroupError),
}

fn i() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

fn f(x: Rational64) -> f64 {
    x.to_f64().unwrap()
}

fn frac(x: Rational64) -> Rational64 {
    x - x.floor()
}

/// The elliptic argument ατ + β.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorsionArg {
    pub alpha: Rational64,
    pub beta: Rational64,
}

impl TorsionArg {
    pub fn new(alpha: Rational64, beta: Rational64) -> Self {
        TorsionArg { alpha, beta }
    }

    pub fn at(&self, tau: Complex64) -> Complex64 {
        tau * f(self.alpha) + f(self.beta)
    }

    fn is_lattice_point(&self) -> bool {
        self.alpha.is_integer() && self.beta.is_integer()
    }
}

impl std::fmt::Display for TorsionArg {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(fm, "{}τ + {}", self.alpha, self.beta)
    }
}

/// θ(z; τ) = Σ_{ν∈½+ℤ} e^{πiν²τ + 2πiν(z+½)} at z = ατ + β.
pub fn jacobi_theta_expansion(z: TorsionArg, bound: Exponent) -> Result<QExpansion, MockError> {
    if z.is_lattice_point() {
        return Err(MockError::ThetaZero(z.to_string()));
    }
    let half = Rational64::new(1, 2);
    let mut out = QExpansion::zero(Some(bound));
    // ν²/2 + να ≥ bound once |ν + α| ≥ sqrt(2·bound + α²)
    let reach = (2.0 * f(bound).max(0.0) + f(z.alpha).powi(2)).sqrt() + f(z.alpha).abs() + 2.0;
    let k = reach.ceil() as i64;
    for n in -k..=k {
        let nu = half + n;
        let e = nu * nu / 2 + nu * z.alpha;
        out.insert(e, CycloScalar::e64(frac(nu * (z.beta + half))));
    }
    Ok(out)
}

/// Minimal exponent contributed by the n-th Lerch term.
fn lerch_min_exponent(n: i64, a: TorsionArg, b: TorsionArg) -> Exponent {
    let base = Rational64::from_integer(n * n + n) / 2 + b.alpha * n;
    let x = a.alpha + n;
    if x.is_negative() {
        base - x
    } else {
        base
    }
}

/// Σ_n (−1)ⁿ q^{(n²+n)/2} e(nb) / (1 − e(nτ + a)) below `bound`, scanning
/// `extra` additional n on each side of the provably sufficient window.
fn lerch_sum(a: TorsionArg, b: TorsionArg, bound: Exponent, extra: i64) -> Result<QExpansion, MockError> {
    let mut out = QExpansion::zero(Some(bound));
    let vertex = (f(b.alpha).abs() + f(a.alpha).abs() + 2.0).ceil() as i64;
    let mut window = Vec::new();
    for dir in [1i64, -1] {
        let mut n = if dir == 1 { 0 } else { -1 };
        let mut overshoot = 0;
        loop {
            if lerch_min_exponent(n, a, b) < bound {
                window.push(n);
            } else if n.abs() > vertex {
                overshoot += 1;
                if overshoot > extra {
                    break;
                }
            }
            n += dir;
        }
    }
    window.sort();
    for n in window {
        let sign = if n % 2 == 0 { 1 } else { -1 };
        let e0 = Rational64::from_integer(n * n + n) / 2 + b.alpha * n;
        let c0 = CycloScalar::e64(frac(b.beta * n)).scale(&rat(sign, 1));
        let x = a.alpha + n;
        if x.is_zero() {
            // 1/(1 − e(β)) = −(1/m)·Σ_{j=1}^{m−1} j·ζ_m^{j}, ζ_m = e(β)
            let beta = frac(a.beta);
            if beta.is_zero() {
                return Err(MockError::Pole(a.to_string()));
            }
            let inv = (&CycloScalar::one() - &CycloScalar::e64(beta)).inv();
            out.insert(e0, &c0 * &inv);
        } else if x.is_positive() {
            let mut k = 0i64;
            while e0 + x * k < bound {
                out.insert(e0 + x * k, &c0 * &CycloScalar::e64(frac(a.beta * k)));
                k += 1;
            }
        } else {
            let mut k = 1i64;
            while e0 - x * k < bound {
                out.insert(e0 - x * k, -(&c0 * &CycloScalar::e64(frac(-a.beta * k))));
                k += 1;
            }
        }
    }
    Ok(out)
}

/// μ(a, b; τ) = e^{πia}/θ(b) · Σ_n (−1)ⁿ e^{πi(n²+n)τ + 2πinb} / (1 − e^{2πinτ + 2πia}).
pub fn mu_expansion(a: TorsionArg, b: TorsionArg, bound: Exponent) -> Result<QExpansion, MockError> {
    mu_expansion_window(a, b, bound, 0)
}

/// As [`mu_expansion`] with `extra` further Lerch terms scanned past the sufficient window.
pub fn mu_expansion_window(a: TorsionArg, b: TorsionArg, bound: Exponent, extra: i64) -> Result<QExpansion, MockError> {
    if a.is_lattice_point() {
        return Err(MockError::Pole(a.to_string()));
    }
    if b.is_lattice_point() {
        return Err(MockError::ThetaZero(b.to_string()));
    }
    let half_alpha = a.alpha / 2;
    // leading exponent of θ(b): min over ν of ν²/2 + να'
    let theta_probe = jacobi_theta_expansion(b, Exponent::from_integer(1) + b.alpha.abs() * b.alpha.abs())?;
    let e_theta = theta_probe.leading().map(|(e, _)| e).ok_or_else(|| MockError::ThetaZero(b.to_string()))?;
    let lerch_bound = bound - half_alpha + e_theta;
    let lerch = lerch_sum(a, b, lerch_bound, extra)?;
    let m_l = lerch.min_exponent().unwrap_or(lerch_bound);
    let theta_bound = bound - half_alpha - m_l + e_theta * 2;
    let theta = jacobi_theta_expansion(b, theta_bound.max(e_theta + Exponent::one()))?;
    let inv = theta.inverse(None).map_err(|_| MockError::ThetaZero(b.to_string()))?;
    let out = lerch.mul(&inv).shift(half_alpha).scale(&CycloScalar::e64(frac(a.beta / 2)));
    debug_assert!(out.bound().is_none_or(|x| x >= bound));
    Ok(out.truncate(bound))
}

/// β(x) = ∫_x^∞ t^{−1/2}e^{−πt} dt = erfc(√(πx)).
pub fn beta_fn(x: f64) -> f64 {
    statrs::function::erf::erfc((PI * x).sqrt())
}

/// θ(z; τ) by direct summation.
pub fn theta_numeric(z: Complex64, tau: Complex64) -> Complex64 {
    let v = tau.im;
    let shift = z.im / v;
    let k = ((90.0 / (PI * v)).sqrt() + shift.abs() + 3.0) as i64;
    (-k..=k)
        .map(|n| {
            let nu = n as f64 + 0.5;
            (i() * PI * nu * nu * tau + i() * TAU * nu * (z + 0.5)).exp()
        })
        .sum()
}

/// μ(a, b; τ) by direct summation.
pub fn mu_numeric(a: Complex64, b: Complex64, tau: Complex64) -> Complex64 {
    let v = tau.im;
    let k = ((90.0 / (PI * v)).sqrt() + (a.im / v).abs() + (b.im / v).abs() + 4.0) as i64;
    let sum: Complex64 = (-k..=k)
        .map(|n| {
            let nf = n as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let log_num = i() * PI * a + i() * PI * (nf * nf + nf) * tau + i() * TAU * nf * b;
            let l = i() * TAU * (nf * tau + a);
            // 1/(1 − e^l) = −e^{−l}/(1 − e^{−l}) keeps both pieces finite when Re l > 0
            if l.re > 0.0 {
                -(log_num - l).exp() / (Complex64::one() - (-l).exp()) * sign
            } else {
                log_num.exp() / (Complex64::one() - l.exp()) * sign
            }
        })
        .sum();
    sum / theta_numeric(b, tau)
}

/// R(u; τ) = Σ_{ν∈½+ℤ} (sgn ν − E((ν + Im u/v)√(2v)))·(−1)^{ν−½}·e^{−πiν²τ − 2πiνu}.
pub fn r_function_numeric(u: Complex64, tau: Complex64, terms: usize) -> Complex64 {
    let v = tau.im;
    let shift = u.im / v;
    let center = (-shift).round() as i64;
    let k = terms as i64;
    let mut s = Complex64::zero();
    for n in (center - k)..=(center + k) {
        let nu = n as f64 + 0.5;
        let z = (nu + shift) * (2.0 * v).sqrt();
        let sg_nu = nu.signum();
        // sgn ν − E(z), E(z) = sgn(z)(1 − β(z²)); computed without cancellation
        let weight = if z == 0.0 {
            sg_nu
        } else if z.signum() == sg_nu {
            z.signum() * beta_fn(z * z)
        } else {
            sg_nu - z.signum() * (1.0 - beta_fn(z * z))
        };
        if weight == 0.0 {
            continue;
        }
        let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        s += (-i() * PI * nu * nu * tau - i() * TAU * nu * u).exp() * weight * sign;
    }
    s
}

/// Truncation for R that keeps every term above 1e−17 relative size.
fn r_terms(v: f64) -> usize {
    ((40.0 / (PI * v)).sqrt() + 4.0) as usize
}

/// μ̃(a, b; τ) = μ(a, b; τ) + (i/2)·R(a − b; τ).
pub fn mutilde_numeric(a: Complex64, b: Complex64, tau: Complex64) -> Complex64 {
    mu_numeric(a, b, tau) + i() * 0.5 * r_function_numeric(a - b, tau, r_terms(tau.im))
}

/// Label w = (α, β, α', β') of Φ_w.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhiLabel {
    pub alpha: Rational64,
    pub beta: Rational64,
    pub alpha2: Rational64,
    pub beta2: Rational64,
}

impl PhiLabel {
    pub fn new(alpha: Rational64, beta: Rational64, alpha2: Rational64, beta2: Rational64) -> Self {
        PhiLabel { alpha, beta, alpha2, beta2 }
    }

    pub fn a(&self) -> TorsionArg {
        TorsionArg::new(self.alpha, self.beta)
    }

    pub fn b(&self) -> TorsionArg {
        TorsionArg::new(self.alpha2, self.beta2)
    }

    pub fn big_a(&self) -> Rational64 {
        self.alpha - self.alpha2
    }

    pub fn big_b(&self) -> Rational64 {
        self.beta - self.beta2
    }

    /// Φ_w(−1/τ) = c·√(−iτ)·Φ_{w'}(τ); returns (c, w').
    pub fn apply_s(&self) -> (CycloScalar, PhiLabel) {
        let c = -CycloScalar::e64(frac(self.big_a() * self.big_b()));
        (c, PhiLabel::new(self.beta, -self.alpha, self.beta2, -self.alpha2))
    }

    /// Φ_w(τ+m) = c·Φ_{w'}(τ); returns (c, w').
    pub fn apply_t(&self, m: i64) -> (CycloScalar, PhiLabel) {
        let a = self.big_a();
        let c = CycloScalar::e64(frac(Rational64::new(-m, 8) - a * a * m / 2));
        (c, PhiLabel::new(self.alpha, self.beta + self.alpha * m, self.alpha2, self.beta2 + self.alpha2 * m))
    }

    /// Φ_w = c·Φ_{w₀} with every entry of w₀ in [0, 1).
    pub fn reduce(&self) -> (CycloScalar, PhiLabel) {
        let (k, l, m, n) = (self.alpha.floor(), self.beta.floor(), self.alpha2.floor(), self.beta2.floor());
        let base = PhiLabel::new(self.alpha - k, self.beta - l, self.alpha2 - m, self.beta2 - n);
        let parity = (k + l + m + n).to_integer().rem_euclid(2);
        let phase = CycloScalar::e64(frac((k - m) * base.big_b()));
        let c = if parity == 1 { -phase } else { phase };
        (c, base)
    }

    /// Φ_w = c·Φ_{w₀} with w₀ the smaller of the reductions of w and −w
    /// (μ̃ is even in (u, v) jointly).
    pub fn canonical(&self) -> (CycloScalar, PhiLabel) {
        let neg = PhiLabel::new(-self.alpha, -self.beta, -self.alpha2, -self.beta2);
        let (c1, w1) = self.reduce();
        let (c2, w2) = neg.reduce();
        if w2 < w1 {
            (c2, w2)
        } else {
            (c1, w1)
        }
    }

    /// Row action (α, β)·γ on both pairs.
    pub fn act(&self, g: &SL2Matrix) -> PhiLabel {
        let row = |x: Rational64, y: Rational64| (x * g.a + y * g.c, x * g.b + y * g.d);
        let (a1, b1) = row(self.alpha, self.beta);
        let (a2, b2) = row(self.alpha2, self.beta2);
        PhiLabel::new(a1, b1, a2, b2)
    }

    /// Φ_w(γτ) = c·(cτ+d)^{1/2}·Φ_{wγ}(τ) in closed form; returns (c, wγ) with
    /// c = v_η(γ)^{−3}·e(−(abA² + 2bcAB + cdB²)/2).
    pub fn general_law(&self, g: &SL2Matrix) -> (CycloScalar, PhiLabel) {
        let (a, b) = (self.big_a(), self.big_b());
        let x = -(a * a * (g.a * g.b) + a * b * (2 * g.b * g.c) + b * b * (g.c * g.d)) / 2;
        let c = &eta_multiplier(g).pow(-3) * &CycloScalar::e64(frac(x));
        (c, self.act(g))
    }

    pub fn is_pole(&self) -> bool {
        self.a().is_lattice_point() || self.b().is_lattice_point()
    }
}

impl std::fmt::Display for PhiLabel {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(fm, "({}, {}, {}, {})", self.alpha, self.beta, self.alpha2, self.beta2)
    }
}

/// Φ_w(τ) by direct summation.
pub fn phi_numeric(w: &PhiLabel, tau: Complex64) -> Complex64 {
    let a2 = f(w.big_a()).powi(2);
    (-i() * PI * a2 * tau).exp() * mutilde_numeric(w.a().at(tau), w.b().at(tau), tau)
}

/// The R-part e^{−πiA²τ}·(i/2)·R(a − b; τ) of Φ_w, which carries all of its τ̄-dependence.
pub fn phi_nonholo_numeric(w: &PhiLabel, tau: Complex64) -> Complex64 {
    let a2 = f(w.big_a()).powi(2);
    let u = w.a().at(tau) - w.b().at(tau);
    (-i() * PI * a2 * tau).exp() * i() * 0.5 * r_function_numeric(u, tau, r_terms(tau.im))
}

/// c·β(4|e|v)·e^{2πieτ}: one term of the non-holomorphic part, e < 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonHoloTerm {
    pub exponent: Exponent,
    pub coefficient: CycloScalar,
}

/// H = H⁺ + H⁻ with H⁻ kept as labelled incomplete-Gamma terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarmonicExpansion {
    pub holo: QExpansion,
    pub nonholo: Vec<NonHoloTerm>,
}

impl HarmonicExpansion {
    pub fn scale(&self, c: &CycloScalar) -> Self {
        HarmonicExpansion {
            holo: self.holo.scale(c),
            nonholo: self.nonholo.iter().map(|t| NonHoloTerm { exponent: t.exponent, coefficient: &t.coefficient * c }).collect(),
        }
    }

    /// τ ↦ (aτ + b)/d on both parts.
    pub fn substitute(&self, a: i64, b: i64, d: i64) -> Self {
        let r = Exponent::new(a, d);
        HarmonicExpansion {
            holo: self.holo.substitute(a, b, d),
            nonholo: self
                .nonholo
                .iter()
                .map(|t| NonHoloTerm { exponent: t.exponent * r, coefficient: &t.coefficient * &CycloScalar::e64(frac(t.exponent * Exponent::new(b, d))) })
                .collect(),
        }
    }

    pub fn evaluate(&self, tau: Complex64) -> Complex64 {
        let v = tau.im;
        let nh: Complex64 = self
            .nonholo
            .iter()
            .map(|t| {
                let e = f(t.exponent);
                t.coefficient.to_c64() * beta_fn(4.0 * e.abs() * v) * (i() * TAU * e * tau).exp()
            })
            .sum();
        self.holo.evaluate(tau) + nh
    }
}

/// Holomorphic part of Φ_w below `bound`, with H⁻ labels for the same range.
///
/// H⁺ = q^{−A²/2}·μ(a, b) + (i/2)·Σ (sgn ν − sgn(ν+A))·(−1)^{ν−½}·e(−νB)·q^{−(ν+A)²/2},
/// the sum running over the finitely many ν ∈ ½+ℤ between 0 and −A.
pub fn phi_holo(w: &PhiLabel, bound: Exponent) -> Result<HarmonicExpansion, MockError> {
    let a = w.big_a();
    let b = w.big_b();
    let shift = -a * a / 2;
    let mu = mu_expansion(w.a(), w.b(), bound - shift)?;
    let mut holo = mu.shift(shift);
    let half = Rational64::new(1, 2);
    let i_half = CycloScalar::zeta(4, 1).scale(&rat(1, 2));
    let sgn = |x: Rational64| -> i64 {
        if x.is_positive() {
            1
        } else if x.is_negative() {
            -1
        } else {
            0
        }
    };
    let reach = f(a).abs().ceil() as i64 + (2.0 * f(bound).abs()).sqrt().ceil() as i64 + 2;
    let mut nonholo = Vec::new();
    for n in -reach - 1..=reach {
        let nu = half + n;
        let sign = if n.rem_euclid(2) == 0 { 1 } else { -1 };
        let e = -(nu + a) * (nu + a) / 2;
        let base = CycloScalar::e64(frac(-nu * b)).scale(&rat(sign, 1));
        let jump = sgn(nu) - sgn(nu + a);
        if jump != 0 {
            holo.insert(e, (&i_half * &base).scale(&rat(jump, 1)));
        }
        let s = sgn(nu + a);
        if s != 0 && -e < bound.abs() + Exponent::one() {
            nonholo.push(NonHoloTerm { exponent: e, coefficient: (&i_half * &base).scale(&rat(s, 1)) });
        }
    }
    nonholo.sort_by_key(|x| std::cmp::Reverse(x.exponent));
    Ok(HarmonicExpansion { holo: holo.truncate(bound), nonholo })
}

/// g_{a,b}(τ) = Σ_{ν∈a+ℤ} ν·e^{πiν²τ + 2πibν}.
pub fn g_ab_expansion(a: Rational64, b: Rational64, bound: Exponent) -> QExpansion {
    let mut out = QExpansion::zero(Some(bound));
    let k = (2.0 * f(bound).max(0.0)).sqrt().ceil() as i64 + f(a).abs().ceil() as i64 + 2;
    for n in -k..=k {
        let nu = a + n;
        let e = nu * nu / 2;
        let c = CycloScalar::e64(frac(b * nu)).scale(&Rational::new((*nu.numer()).into(), (*nu.denom()).into()));
        out.insert(e, c);
    }
    out
}

/// Dedekind sum s(h, k) for k > 0.
pub fn dedekind_sum(h: i64, k: i64) -> Rational {
    assert!(k > 0);
    let mut acc: i128 = 0;
    for r in 1..k {
        let hr = (h as i128 * r as i128).rem_euclid(k as i128);
        if hr == 0 {
            continue;
        }
        acc += (2 * r as i128 - k as i128) * (2 * hr - k as i128);
    }
    Rational::new(acc.into(), (4 * k as i128 * k as i128).into())
}

/// v_η(γ) = η(γτ) / ((cτ+d)^{1/2}·η(τ)), principal root.
pub fn eta_multiplier(g: &SL2Matrix) -> CycloScalar {
    if g.c == 0 {
        return if g.d == 1 {
            CycloScalar::e64(frac(Rational64::new(g.b, 24)))
        } else {
            // γ = −T^{−b}: η(τ − b)/(i·η(τ))
            &CycloScalar::zeta(4, 3) * &CycloScalar::e64(frac(Rational64::new(-g.b, 24)))
        };
    }
    if g.c < 0 {
        return &CycloScalar::zeta(4, 1) * &eta_multiplier(&g.neg());
    }
    let s = dedekind_sum(g.d, g.c);
    let x = Rational::new((g.a + g.d).into(), (24 * g.c).into()) - s / rat(2, 1) - rat(1, 8);
    let x = &x - &Rational::from_integer(x.floor().to_integer());
    CycloScalar::e(&x)
}

/// η(τ) = q^{1/24}∏(1 − qⁿ) by direct product.
pub fn eta_numeric(tau: Complex64) -> Complex64 {
    let q = (i() * TAU * tau).exp();
    let mut p = (i() * TAU * tau / 24.0).exp();
    let n_max = (45.0 / (TAU * tau.im)).ceil() as usize + 2;
    let mut qn = q;
    for _ in 1..=n_max {
        p *= Complex64::one() - qn;
        qn *= q;
    }
    p
}

/// F_{h,t,N}(λτ): the pre-image of ϑ_{h,t,N}, optionally rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MockSpec {
    pub h: i64,
    pub t: i64,
    pub n: i64,
    pub scale: Exponent,
}

impl MockSpec {
    pub fn new(h: i64, t: i64, n: i64) -> Result<Self, MockError> {
        if n < 1 || t < 1 || (2 * n) % t != 0 {
            return Err(MockError::Invalid(format!("need t | 2N, got t={t}, N={n}")));
        }
        Ok(MockSpec { h, t, n, scale: Exponent::one() })
    }

    pub fn from_unary(u: &UnaryThetaSpec) -> Self {
        MockSpec { h: u.h, t: u.t, n: u.n, scale: Exponent::one() }
    }

    /// τ ↦ λτ.
    pub fn rescaled(mut self, lambda: Exponent) -> Self {
        self.scale *= lambda;
        self
    }

    /// K = 8N²/t².
    pub fn k(&self) -> Exponent {
        Exponent::new(8 * self.n * self.n, self.t * self.t)
    }

    pub fn alpha0(&self) -> Rational64 {
        Rational64::new(self.h * self.t - self.n, 2 * self.n)
    }

    /// The torsion arguments of the theorem's μ̃: ((ht−N)/2N)·τ′ and −1/2.
    pub fn args(&self) -> (TorsionArg, TorsionArg) {
        (TorsionArg::new(self.alpha0(), Rational64::zero()), TorsionArg::new(Rational64::zero(), Rational64::new(-1, 2)))
    }

    /// −(h − N/t)², the exponent of the leading exponential in τ units.
    pub fn prefactor_exponent(&self) -> Rational64 {
        let x = Rational64::new(self.h * self.t - self.n, self.t);
        -x * x
    }

    pub fn label(&self) -> PhiLabel {
        let (a, b) = self.args();
        PhiLabel::new(a.alpha, a.beta, b.alpha, b.beta)
    }

    /// The Φ-variable is (K·λ)·τ.
    pub fn phi_scale(&self) -> Exponent {
        self.k() * self.scale
    }

    pub fn numeric(&self, tau: Complex64) -> Complex64 {
        -phi_numeric(&self.label(), tau * f(self.phi_scale()))
    }

    /// F minus its (meromorphic) μ-part.
    pub fn nonholo_numeric(&self, tau: Complex64) -> Complex64 {
        -phi_nonholo_numeric(&self.label(), tau * f(self.phi_scale()))
    }

    /// The unary theta ϑ_{h,t,N}.
    pub fn unary(&self) -> UnaryThetaSpec {
        UnaryThetaSpec::new(self.h, self.t, self.n).expect("validated on construction")
    }

    /// ξ_{1/2}F_{h,t,N} = ϑ_{h,t,N}(τ/t), so ξ_{1/2}(F(λτ)) = λ^{1/2}·ϑ_{h,t,N}(λτ/t).
    pub fn shadow(&self) -> ThetaSource {
        let (p, q) = (*self.scale.numer(), *self.scale.denom());
        let root = crate::exact_arith::sqrt_int_embed(p * q).expect("positive scale").scale(&rat(1, q));
        let mut src = self.unary().source().rescaled(self.scale / self.t).scaled_by(&root);
        src.name = format!("xi({})", self.label_string());
        src
    }

    /// F_{h,t,N}(tλτ), whose shadow is (tλ)^{1/2}·ϑ_{h,t,N}(λτ).
    pub fn preimage_of(u: &UnaryThetaSpec, lambda: Exponent) -> Self {
        MockSpec::from_unary(u).rescaled(lambda * u.t)
    }

    pub fn label_string(&self) -> String {
        if self.scale.is_one() {
            format!("F_{{{},{},{}}}", self.h, self.t, self.n)
        } else {
            format!("F_{{{},{},{}}}({}·tau)", self.h, self.t, self.n, self.scale)
        }
    }
}

/// H|γ = constant·Φ_label((a'τ + b')/d').
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockReplay {
    pub label: PhiLabel,
    pub constant: CycloScalar,
    pub a1: i64,
    pub b1: i64,
    pub d1: i64,
}

fn scaled_word(scale: Exponent, word: &STWord) -> Result<(STWord, SL2Matrix, i64, i64, i64, i64), MockError> {
    let gamma = word.eval();
    let (p, q) = (*scale.numer(), *scale.denom());
    if p == 1 && q == 1 {
        return Ok((word.clone(), gamma, 1, 0, 1, 1));
    }
    let (g2, a1, b1, d1) = scale_factor(&gamma, p, q)?;
    Ok((decompose_st(&g2), gamma, a1, b1, d1, q))
}

/// Replays a word through the S/T laws of the Φ family.
pub fn replay_mock(spec: &MockSpec, word: &STWord) -> Result<MockReplay, MockError> {
    let (word2, gamma, a1, b1, d1, q) = scaled_word(spec.phi_scale(), word)?;
    let mut label = spec.label();
    let mut constant = -CycloScalar::one();
    for t in &word2.tokens {
        let (c, w) = match t {
            Token::S => label.apply_s(),
            Token::T(m) => label.apply_t(*m),
        };
        constant = &constant * &c;
        label = w;
    }
    let (c, w) = label.canonical();
    constant = &constant * &c;
    let auto = half_automorphy(&word2, a1, b1, d1, q, &gamma);
    constant = &constant * &auto.factor(1);
    Ok(MockReplay { label: w, constant, a1, b1, d1 })
}

/// The same data from the closed-form law for a single matrix (no word).
pub fn closed_form_mock(spec: &MockSpec, gamma: &SL2Matrix) -> Result<MockReplay, MockError> {
    let s = spec.phi_scale();
    let (p, q) = (*s.numer(), *s.denom());
    let (g2, a1, b1, d1) = scale_factor(gamma, p, q)?;
    let (c, w) = spec.label().general_law(&g2);
    let (c2, w) = w.canonical();
    let g = num_integer::Integer::gcd(&q, &d1);
    let root = crate::exact_arith::sqrt_int_embed((q / g) * (d1 / g)).expect("positive").scale(&rat(1, d1 / g));
    let constant = &(&(-&c) * &c2) * &root;
    Ok(MockReplay { label: w, constant, a1, b1, d1 })
}

impl MockReplay {
    /// The unit u with self = u·other when both land on the same Φ and substitution.
    pub fn same_function_ratio(&self, other: &MockReplay) -> Option<CycloScalar> {
        let same = self.label == other.label && self.a1 == other.a1 && self.b1 == other.b1 && self.d1 == other.d1;
        same.then(|| &self.constant * &other.constant.inv())
    }

    pub fn holo(&self, bound: Exponent) -> Result<HarmonicExpansion, MockError> {
        let inner = bound * self.d1 / self.a1;
        let h = phi_holo(&self.label, inner)?;
        let mut out = h.scale(&self.constant).substitute(self.a1, self.b1, self.d1);
        out.holo = out.holo.truncate(bound);
        Ok(out)
    }
}

/// H⁺ (and H⁻ labels) of H|γ for γ = word.eval().
pub fn holo_part_at_cusp(spec: &MockSpec, word: &STWord, bound: Exponent) -> Result<HarmonicExpansion, MockError> {
    if !bound.is_positive() {
        return Err(MockError::BoundTooSmall(bound));
    }
    replay_mock(spec, word)?.holo(bound)
}

/// ξ_{1/2}F(τ) = 2i·v^{1/2}·conj(∂F/∂τ̄), by central differences of step h.
///
/// Only the R-part is differenced: the μ-part is holomorphic, and near the
/// principal part it is large enough to drown the differences in rounding.
pub fn xi_image_numeric(spec: &MockSpec, tau: Complex64, h: f64) -> Complex64 {
    let g = |z: Complex64| spec.nonholo_numeric(z);
    let fu = (g(tau + h) - g(tau - h)) / (2.0 * h);
    let fv = (g(tau + i() * h) - g(tau - i() * h)) / (2.0 * h);
    let dbar = (fu + i() * fv) * 0.5;
    i() * 2.0 * tau.im.sqrt() * dbar.conj()
}

/// max |ξ_{1/2}F(τ) − target(τ)| over the samples.
pub fn xi_check_against(spec: &MockSpec, samples: &[Complex64], h: f64, target: impl Fn(Complex64) -> Complex64) -> f64 {
    samples.iter().map(|&t| (xi_image_numeric(spec, t, h) - target(t)).norm()).fold(0.0, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) })
}

/// max |ξ_{1/2}F − shadow| with the shadow evaluated from its theta expansion.
pub fn xi_check(spec: &MockSpec, samples: &[Complex64], h: f64) -> f64 {
    let shadow = spec.shadow();
    xi_check_against(spec, samples, h, |t| crate::theta_forms::evaluate_numeric(&shadow, t))
}
