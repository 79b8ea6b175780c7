#![allow(dead_code)]

use num_integer::Integer;
use rand::Rng;
use thetapair::modular_group::SL2Matrix;

/// (a, b) with a·d − b·c = 1, for coprime c, d.
pub fn complete(c: i64, d: i64) -> SL2Matrix {
    let e = d.extended_gcd(&c);
    assert_eq!(e.gcd.abs(), 1);
    // x·d + y·c = ±1
    let (a, b) = if e.gcd == 1 { (e.x, -e.y) } else { (-e.x, e.y) };
    SL2Matrix::new(a, b, c, d).expect("unimodular")
}

/// A random matrix with |c|, |d| ≤ max and a, b reduced against them.
pub fn random_sl2(rng: &mut impl Rng, max: i64) -> SL2Matrix {
    loop {
        let c: i64 = rng.gen_range(-max..=max);
        let d: i64 = rng.gen_range(-max..=max);
        if c.gcd(&d) == 1 {
            return complete(c, d);
        }
    }
}

/// A random element of Γ₀(m0)∩Γ₁(m1) with c ≠ 0.
pub fn random_in_group(rng: &mut impl Rng, m0: i64, m1: i64, kmax: i64) -> SL2Matrix {
    loop {
        let k: i64 = rng.gen_range(1..=kmax) * if rng.gen_bool(0.5) { 1 } else { -1 };
        let c = m0 * k;
        let d = 1 + m1 * rng.gen_range(-kmax..=kmax);
        if c.gcd(&d) == 1 {
            let g = complete(c, d);
            // a ≡ d⁻¹ (mod c) is then ≡ 1 (mod m1)
            return g;
        }
    }
}

/// Instantiated transformation laws for F_{h,t,N}, evaluated numerically.
pub mod laws {
    use num_complex::Complex64;
    use thetapair::mock_eichler::*;
    use thetapair::modular_group::SL2Matrix;

    pub fn e_pi_i(x: Complex64) -> Complex64 {
        (Complex64::new(0.0, std::f64::consts::PI) * x).exp()
    }

    pub struct Case {
        pub h: f64,
        pub t: f64,
        pub n: f64,
        pub k: f64,
        pub alpha: f64,
    }

    impl Case {
        pub fn new(h: i64, t: i64, n: i64) -> Self {
            let (h, t, n) = (h as f64, t as f64, n as f64);
            Case { h, t, n, k: 8.0 * n * n / (t * t), alpha: (h * t - n) / (2.0 * n) }
        }
    }

    pub fn sample_points(g: &SL2Matrix) -> [Complex64; 2] {
        let (c, d) = (g.c as f64, g.d as f64);
        [Complex64::new(-d / c + 0.2 / c, 1.0 / c), Complex64::new(-d / c - 0.35 / c, 0.7 / c)]
    }

    /// μ̃(α(aKτ + Kb), −(cτ+d)/2; Kτ) reduced to μ̃(αKτ, −1/2; Kτ).
    pub fn elliptic_residual(cs: &Case, g: &SL2Matrix, tau: Complex64) -> f64 {
        let (a, b, c, d) = (g.a as f64, g.b as f64, g.c as f64, g.d as f64);
        let kt = tau * cs.k;
        let lhs = mutilde_numeric((kt * a + cs.k * b) * cs.alpha, -(tau * c + d) / 2.0, kt);
        let x = (a - 1.0) * cs.alpha + c * cs.t * cs.t / (16.0 * cs.n * cs.n);
        let sg = (a - 1.0) * cs.alpha + (cs.h - cs.n / cs.t) * 4.0 * cs.n * b / cs.t - c * cs.t * cs.t / (16.0 * cs.n * cs.n) - (d - 1.0) / 2.0;
        let rhs = e_pi_i(sg.into()) * e_pi_i(kt * x * x + (kt * cs.alpha + 0.5) * 2.0 * x) * mutilde_numeric(kt * cs.alpha, Complex64::new(-0.5, 0.0), kt);
        (lhs - rhs).norm() / (1.0 + rhs.norm())
    }

    pub fn gamma_prime(cs: &Case, g: &SL2Matrix) -> SL2Matrix {
        SL2Matrix::new(g.a, (cs.k * g.b as f64).round() as i64, (g.c as f64 / cs.k).round() as i64, g.d).unwrap()
    }

    /// F(γτ) against the μ̃-transformation applied in the variable Kτ.
    pub fn s_law_residual(cs: &Case, spec: &MockSpec, g: &SL2Matrix, tau: Complex64) -> f64 {
        let (a, b, c, d) = (g.a as f64, g.b as f64, g.c as f64, g.d as f64);
        let kt = tau * cs.k;
        let gp = gamma_prime(cs, g);
        let v = eta_multiplier(&gp).to_c64();
        let j = tau * c + d;
        let u = (kt * a + cs.k * b) * cs.alpha;
        let shift = (cs.h - cs.n / cs.t).powi(2);
        let lhs = spec.numeric(g.act(tau));
        let rhs =
            -e_pi_i(-g.act(tau) * 2.0 * shift) * v.powi(-3) * j.sqrt() * e_pi_i(-(u + j / 2.0).powi(2) * (c / cs.k) / j) * mutilde_numeric(u, -j / 2.0, kt);
        (lhs - rhs).norm() / (1.0 + rhs.norm())
    }

    /// F(γτ) / (multiplier·(cτ+d)^{1/2}·F(τ)) with every elliptic factor collected.
    pub fn full_law_ratio(cs: &Case, spec: &MockSpec, g: &SL2Matrix, tau: Complex64) -> Complex64 {
        let (a, b, c, d) = (g.a as f64, g.b as f64, g.c as f64, g.d as f64);
        let v = eta_multiplier(&gamma_prime(cs, g)).to_c64();
        let x = (a - 1.0) * cs.alpha + c * cs.t * cs.t / (16.0 * cs.n * cs.n);
        let sg = (a - 1.0) * cs.alpha + (cs.h - cs.n / cs.t) * 4.0 * cs.n * b / cs.t - c * cs.t * cs.t / (16.0 * cs.n * cs.n) - (d - 1.0) / 2.0;
        let hn = cs.h - cs.n / cs.t;
        let rhs = v.powi(-3)
            * (tau * c + d).sqrt()
            * e_pi_i(sg.into())
            * e_pi_i((-2.0 * hn * hn * a * b).into())
            * e_pi_i((-2.0 * b * hn * c * cs.t / (4.0 * cs.n)).into())
            * e_pi_i(x.into())
            * spec.numeric(tau);
        spec.numeric(g.act(tau)) / rhs
    }

    pub fn law_matrices() -> [SL2Matrix; 2] {
        [SL2Matrix::new(1, 1, 144, 145).unwrap(), SL2Matrix::new(1, 0, 144, 1).unwrap()]
    }
}
