//! SL₂(ℤ) words, congruence subgroups, cosets and cusps.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("gcd({0}, {1}) != 1")]
    NotCoprime(i64, i64),
    #[error("level {0} exceeds the enumeration bound {1}")]
    LevelTooLarge(i64, i64),
    #[error("matrix ({0} {1}; {2} {3}) does not have determinant 1")]
    NotUnimodular(i64, i64, i64, i64),
    #[error("levels must be positive")]
    BadLevel,
    #[error("scaling factor must be positive")]
    BadScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SL2Matrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl SL2Matrix {
    pub const IDENTITY: SL2Matrix = SL2Matrix { a: 1, b: 0, c: 0, d: 1 };
    pub const S: SL2Matrix = SL2Matrix { a: 0, b: -1, c: 1, d: 0 };
    pub const T: SL2Matrix = SL2Matrix { a: 1, b: 1, c: 0, d: 1 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self, GroupError> {
        if a as i128 * d as i128 - b as i128 * c as i128 != 1 {
            return Err(GroupError::NotUnimodular(a, b, c, d));
        }
        Ok(SL2Matrix { a, b, c, d })
    }

    pub fn t_pow(m: i64) -> Self {
        SL2Matrix { a: 1, b: m, c: 0, d: 1 }
    }

    pub fn mul(&self, o: &SL2Matrix) -> SL2Matrix {
        let m = |x: i64, y: i64, z: i64, w: i64| {
            let v = x as i128 * y as i128 + z as i128 * w as i128;
            i64::try_from(v).expect("matrix entry overflow")
        };
        SL2Matrix { a: m(self.a, o.a, self.b, o.c), b: m(self.a, o.b, self.b, o.d), c: m(self.c, o.a, self.d, o.c), d: m(self.c, o.b, self.d, o.d) }
    }

    pub fn inverse(&self) -> SL2Matrix {
        SL2Matrix { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn neg(&self) -> SL2Matrix {
        SL2Matrix { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }

    /// Möbius action on a point of the upper half-plane.
    pub fn act(&self, tau: num_complex::Complex64) -> num_complex::Complex64 {
        (tau * self.a as f64 + self.b as f64) / (tau * self.c as f64 + self.d as f64)
    }

    /// j(γ, τ) = cτ + d.
    pub fn j(&self, tau: num_complex::Complex64) -> num_complex::Complex64 {
        tau * self.c as f64 + self.d as f64
    }
}

impl fmt::Display for SL2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {}; {} {})", self.a, self.b, self.c, self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Token {
    S,
    T(i64),
}

impl Token {
    pub fn matrix(self) -> SL2Matrix {
        match self {
            Token::S => SL2Matrix::S,
            Token::T(m) => SL2Matrix::t_pow(m),
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::S => write!(f, "S"),
            Token::T(m) => write!(f, "T^{m}"),
        }
    }
}

/// ε·t₁t₂⋯t_k with tokens S or T^m.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct STWord {
    pub tokens: Vec<Token>,
    pub sign: i8,
}

impl STWord {
    pub fn identity() -> Self {
        STWord { tokens: Vec::new(), sign: 1 }
    }

    pub fn eval(&self) -> SL2Matrix {
        let m = self.tokens.iter().fold(SL2Matrix::IDENTITY, |acc, t| acc.mul(&t.matrix()));
        if self.sign < 0 {
            m.neg()
        } else {
            m
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn s_count(&self) -> usize {
        self.tokens.iter().filter(|t| matches!(t, Token::S)).count()
    }

    pub fn token_strings(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.to_string()).collect()
    }
}

/// Writes γ = ε·T^{m₀} S T^{m₁} S ⋯ by the nearest-integer continued fraction
/// recursion γ_{j+1} = S T^r γ_j with |a_j + r c_j| minimal.
pub fn decompose_st(g: &SL2Matrix) -> STWord {
    let mut tokens = Vec::new();
    let mut sign: i8 = 1;
    let mut cur = *g;
    loop {
        if cur.c == 0 {
            let eps = cur.a;
            debug_assert!(eps == 1 || eps == -1);
            let m = eps * cur.b;
            if m != 0 {
                tokens.push(Token::T(m));
            }
            if eps < 0 {
                sign = -sign;
            }
            break;
        }
        let c = cur.c;
        let cabs = c.abs();
        let x = cur.a.rem_euclid(cabs);
        let target = if 2 * x < cabs {
            x
        } else if 2 * x > cabs {
            x - cabs
        } else {
            c / 2
        };
        let r = (target - cur.a) / c;
        if r != 0 {
            tokens.push(Token::T(-r));
        }
        tokens.push(Token::S);
        // S^{-1} = -S
        sign = -sign;
        cur = SL2Matrix::S.mul(&SL2Matrix::t_pow(r)).mul(&cur);
    }
    STWord { tokens, sign }
}

/// Completes a coprime column (a, c) to (a b; c d), with |b| minimal and ties to b ≥ 0.
pub fn cusp_to_matrix(a: i64, c: i64) -> Result<SL2Matrix, GroupError> {
    if a.gcd(&c) != 1 {
        return Err(GroupError::NotCoprime(a, c));
    }
    if a == 0 {
        // -bc = 1
        return Ok(SL2Matrix { a, b: -c, c, d: 0 });
    }
    let e = (a as i128).extended_gcd(&(c as i128));
    // a·x + c·y = ±1 with gcd = 1
    let (x, y) = if e.gcd == 1 { (e.x, e.y) } else { (-e.x, -e.y) };
    // a·d - b·c = 1 with d = x, b = -y
    let (mut b, mut d) = (-y, x);
    let aa = (a as i128).abs();
    let k = b.div_euclid(aa);
    let sa = if a > 0 { 1 } else { -1 };
    b -= k * aa;
    d -= k * sa * c as i128;
    if 2 * b > aa {
        b -= aa;
        d -= sa * c as i128;
    }
    Ok(SL2Matrix { a, b: b as i64, c, d: d as i64 })
}

/// Γ₀(m0) ∩ Γ₁(m1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CongruenceGroup {
    pub m0: i64,
    pub m1: i64,
}

pub const DEFAULT_LEVEL_BOUND: i64 = 10_000;

impl CongruenceGroup {
    pub fn new(m0: i64, m1: i64) -> Result<Self, GroupError> {
        if m0 < 1 || m1 < 1 {
            return Err(GroupError::BadLevel);
        }
        Ok(CongruenceGroup { m0, m1 })
    }

    pub fn gamma0(m: i64) -> Self {
        CongruenceGroup { m0: m, m1: 1 }
    }

    pub fn level(&self) -> i64 {
        self.m0.lcm(&self.m1)
    }

    pub fn contains(&self, g: &SL2Matrix) -> bool {
        g.c % self.m0 == 0 && g.c % self.m1 == 0 && (g.a - 1).rem_euclid(self.m1) == 0 && (g.d - 1).rem_euclid(self.m1) == 0
    }

    pub fn contains_minus_identity(&self) -> bool {
        self.m1 <= 2
    }

    pub fn intersect(&self, o: &CongruenceGroup) -> CongruenceGroup {
        CongruenceGroup { m0: self.m0.lcm(&o.m0), m1: self.m1.lcm(&o.m1) }
    }

    pub fn label(&self) -> String {
        match (self.m0, self.m1) {
            (m, 1) => format!("Gamma0({m})"),
            (m0, m1) => format!("Gamma0({m0}) ∩ Gamma1({m1})"),
        }
    }
}

/// Units u mod L with u ≡ 1 mod m1: the bottom-row scalings by Γ.
fn row_units(g: &CongruenceGroup) -> Vec<i64> {
    let l = g.level();
    (1..=l).map(|u| u % l).filter(|&u| u.gcd(&l) == 1 && (u - 1).rem_euclid(g.m1) == 0).collect()
}

/// Right-coset enumeration of Γ\SL₂(ℤ).
#[derive(Debug, Clone)]
pub struct CosetTable {
    pub group: CongruenceGroup,
    pub reps: Vec<SL2Matrix>,
    index_of: HashMap<(i64, i64), usize>,
    units: Vec<i64>,
    s_action: Vec<usize>,
    t_action: Vec<usize>,
}

impl CosetTable {
    pub fn new(group: CongruenceGroup, level_bound: i64) -> Result<Self, GroupError> {
        if group.level() > level_bound {
            return Err(GroupError::LevelTooLarge(group.level(), level_bound));
        }
        let units = row_units(&group);
        let mut table = CosetTable { group, reps: Vec::new(), index_of: HashMap::new(), units, s_action: Vec::new(), t_action: Vec::new() };
        let start = SL2Matrix::IDENTITY;
        table.index_of.insert(table.key(&start), 0);
        table.reps.push(start);
        let mut queue = VecDeque::from([0usize]);
        let mut edges = Vec::new();
        while let Some(i) = queue.pop_front() {
            let g = table.reps[i];
            for (slot, gen) in [(0, SL2Matrix::S), (1, SL2Matrix::T)] {
                let h = g.mul(&gen);
                let k = table.key(&h);
                let j = match table.index_of.get(&k) {
                    Some(&j) => j,
                    None => {
                        let j = table.reps.len();
                        table.reps.push(h);
                        table.index_of.insert(k, j);
                        queue.push_back(j);
                        j
                    }
                };
                edges.push((i, slot, j));
            }
        }
        let n = table.reps.len();
        table.s_action = vec![0; n];
        table.t_action = vec![0; n];
        for (i, slot, j) in edges {
            if slot == 0 {
                table.s_action[i] = j;
            } else {
                table.t_action[i] = j;
            }
        }
        Ok(table)
    }

    /// Canonical bottom row mod L up to the unit action.
    fn key(&self, g: &SL2Matrix) -> (i64, i64) {
        let l = self.group.level();
        let (c, d) = (g.c.rem_euclid(l), g.d.rem_euclid(l));
        self.units.iter().map(|&u| ((u as i128 * c as i128 % l as i128) as i64, (u as i128 * d as i128 % l as i128) as i64)).min().unwrap_or((0, 0))
    }

    pub fn index_of(&self, g: &SL2Matrix) -> usize {
        self.index_of[&self.key(g)]
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// [PSL₂(ℤ) : Γ̄].
    pub fn psl_index(&self) -> usize {
        if self.group.contains_minus_identity() {
            self.len()
        } else {
            self.len() / 2
        }
    }

    /// Coset reached from coset `i` by right multiplication with T^k.
    pub fn t_step(&self, mut i: usize, k: u64) -> usize {
        for _ in 0..k {
            i = self.t_action[i];
        }
        i
    }

    pub fn s_step(&self, i: usize) -> usize {
        self.s_action[i]
    }

    /// Schreier generators r·s·rep(rs)^{-1} (identity entries dropped).
    pub fn schreier_generators(&self) -> Vec<SL2Matrix> {
        let mut out = Vec::new();
        for (i, r) in self.reps.iter().enumerate() {
            for (gen, j) in [(SL2Matrix::S, self.s_action[i]), (SL2Matrix::T, self.t_action[i])] {
                let g = r.mul(&gen).mul(&self.reps[j].inverse());
                debug_assert!(self.group.contains(&g));
                if g != SL2Matrix::IDENTITY && !out.contains(&g) {
                    out.push(g);
                }
            }
        }
        out
    }
}

pub fn coset_representatives(group: &CongruenceGroup) -> Result<Vec<SL2Matrix>, GroupError> {
    Ok(CosetTable::new(*group, DEFAULT_LEVEL_BOUND)?.reps)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuspData {
    /// a/c with c ≥ 0; (1, 0) is i∞.
    pub numerator: i64,
    pub denominator: i64,
    pub gamma_rho: SL2Matrix,
    pub word: STWord,
    pub width: u64,
    pub regular: bool,
}

impl CuspData {
    pub fn label(&self) -> String {
        match (self.numerator, self.denominator) {
            (_, 0) => "oo".to_string(),
            (a, 1) => a.to_string(),
            (a, c) => format!("{a}/{c}"),
        }
    }
}

/// Cusp at γ(∞) for a matrix, with its width and regularity.
pub fn cusp_of(table: &CosetTable, gamma_rho: SL2Matrix) -> CuspData {
    let start = table.index_of(&gamma_rho);
    let minus = table.index_of(&gamma_rho.neg());
    let mut i = start;
    let mut k = 0u64;
    loop {
        i = table.t_action[i];
        k += 1;
        if i == start || i == minus {
            break;
        }
    }
    let (a, c) = if gamma_rho.c < 0 || (gamma_rho.c == 0 && gamma_rho.a < 0) { (-gamma_rho.a, -gamma_rho.c) } else { (gamma_rho.a, gamma_rho.c) };
    CuspData { numerator: a, denominator: c, gamma_rho, word: decompose_st(&gamma_rho), width: k, regular: i == start }
}

/// Inequivalent cusps in normal form: per orbit, the point a/c minimizing (c, |a|, a < 0).
pub fn cusp_set_with(table: &CosetTable) -> Vec<CuspData> {
    let n = table.len();
    let mut orbit = vec![usize::MAX; n];
    let mut count = 0;
    for s in 0..n {
        if orbit[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            if orbit[i] != usize::MAX {
                continue;
            }
            orbit[i] = count;
            stack.push(table.t_action[i]);
            stack.push(table.index_of(&table.reps[i].neg()));
        }
        count += 1;
    }
    let l = table.group.level();
    let mut found: Vec<Option<(i64, i64)>> = vec![None; count];
    let mut missing = count;
    let mut reach = l.max(1);
    'outer: loop {
        for c in 0..=l {
            for step in 0..=2 * reach {
                let a = if step % 2 == 1 { (step + 1) / 2 } else { -step / 2 };
                if a.abs() > reach {
                    break;
                }
                if (c == 0 && a != 1) || a.gcd(&c) != 1 {
                    continue;
                }
                let g = cusp_to_matrix(a, c).expect("coprime");
                let o = orbit[table.index_of(&g)];
                if found[o].is_none() {
                    found[o] = Some((a, c));
                    missing -= 1;
                    if missing == 0 {
                        break 'outer;
                    }
                }
            }
        }
        reach *= 2;
    }
    let mut cusps: Vec<CuspData> = found
        .into_iter()
        .map(|p| {
            let (a, c) = p.unwrap();
            cusp_of(table, cusp_to_matrix(a, c).unwrap())
        })
        .collect();
    cusps.sort_by_key(|cd| (cd.denominator, cd.numerator.abs(), cd.numerator < 0));
    cusps
}

pub fn cusp_set(group: &CongruenceGroup) -> Result<Vec<CuspData>, GroupError> {
    Ok(cusp_set_with(&CosetTable::new(*group, DEFAULT_LEVEL_BOUND)?))
}

/// Factorization A_λ·γ = γ''·A' with A_λ = diag(p, q), A' = (a' b'; 0 d'),
/// a'd' = pq and 0 ≤ b' < d'. Returns (γ'', a', b', d').
pub fn scale_factor(g: &SL2Matrix, p: i64, q: i64) -> Result<(SL2Matrix, i64, i64, i64), GroupError> {
    if p <= 0 || q <= 0 {
        return Err(GroupError::BadScale);
    }
    let (x, z) = (p * g.a, q * g.c);
    let a1 = x.gcd(&z);
    let top = cusp_to_matrix(x / a1, z / a1)?;
    // A' = top^{-1} · diag(p,q)·γ
    let m = SL2Matrix { a: p * g.a, b: p * g.b, c: q * g.c, d: q * g.d };
    let inv = top.inverse();
    let b1 = inv.a * m.b + inv.b * m.d;
    let d1 = inv.c * m.b + inv.d * m.d;
    debug_assert_eq!(inv.c * m.a + inv.d * m.c, 0);
    debug_assert_eq!(a1 * d1, p * q);
    let k = b1.div_euclid(d1);
    Ok((top.mul(&SL2Matrix::t_pow(k)), a1, b1 - k * d1, d1))
}

/// Square-root bookkeeping for replaying a word at half-integral weight.
///
/// Replaying the word of γ'' at τ' = A'τ, each S-step at the point τ_k
/// contributes s_k = √(−iτ_k). Their product equals σ·ζ₈^m·√(q/d')·J(τ), where
/// J is the principal root of j(γ, τ) for the original γ and q/d' comes from
/// j(γ'', A'τ) = (q/d')·j(γ, τ).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfAutomorphy {
    pub sigma: i8,
    pub zeta8: u8,
    pub ratio_num: i64,
    pub ratio_den: i64,
}

impl HalfAutomorphy {
    /// (∏ s_k)^r·J^{-r} = σ^r·ζ₈^{mr}·(q/d')^{r/2} as an exact scalar.
    pub fn factor(&self, r: i64) -> crate::exact_arith::CycloScalar {
        use crate::exact_arith::{rat, sqrt_int_embed, CycloScalar};
        let sign = if self.sigma < 0 && r.rem_euclid(2) == 1 { -1 } else { 1 };
        let root = CycloScalar::zeta(8, self.zeta8 as i64 * r);
        let (n, d) = (self.ratio_num, self.ratio_den);
        let half = r.div_euclid(2);
        let mut out = root.scale(&(rat(sign, 1) * pow_rat(n, d, half)));
        if r.rem_euclid(2) == 1 {
            out = &out * &sqrt_int_embed(n * d).expect("positive ratio").scale(&rat(1, d));
        }
        out
    }
}

fn pow_rat(n: i64, d: i64, e: i64) -> crate::exact_arith::Rational {
    use num_traits::Pow;
    let base = crate::exact_arith::rat(n, d);
    if e >= 0 {
        base.pow(e as i32)
    } else {
        base.recip().pow((-e) as i32)
    }
}

/// Computes σ and m for a word of γ'' replayed at A'τ, where γ is the
/// matrix whose principal root J the caller divides by.
pub fn half_automorphy(word: &STWord, a1: i64, b1: i64, d1: i64, q: i64, gamma: &SL2Matrix) -> HalfAutomorphy {
    use num_integer::Integer;
    // suffix products applied to A' = (a1 b1; 0 d1), evaluated at i
    let mut m = [[a1 as i128, b1 as i128], [0i128, d1 as i128]];
    let mut arg_sum = 0.0f64;
    let det = (a1 as i128 * d1 as i128) as f64;
    for t in word.tokens.iter().rev() {
        match t {
            Token::T(k) => {
                let k = *k as i128;
                m = [[m[0][0] + k * m[1][0], m[0][1] + k * m[1][1]], m[1]];
            }
            Token::S => {
                // τ_k = m(i); −iτ_k = Im − i·Re
                let re_num = (m[0][0] * m[1][0] + m[0][1] * m[1][1]) as f64;
                arg_sum += 0.5 * (-re_num).atan2(det);
                m = [[-m[1][0], -m[1][1]], m[0]];
            }
        }
    }
    let s_count = word.s_count() as i64;
    let eps = word.sign as i64;
    // ρ² = (−i)^{#S}·ε·(q/d'), ρ = ζ₈^m·√(q/d')
    let mut zeta8 = (-2 * s_count).rem_euclid(8);
    if eps < 0 {
        zeta8 = (zeta8 + 4).rem_euclid(8);
    }
    let zeta8 = (zeta8 / 2) as u8;
    let j_arg = 0.5 * (gamma.c as f64).atan2(gamma.d as f64);
    let delta = arg_sum - j_arg - std::f64::consts::FRAC_PI_4 * zeta8 as f64;
    assert!(delta.sin().abs() < 1e-6, "automorphy phase is not a multiple of π: {delta}");
    let sigma = if delta.cos() > 0.0 { 1 } else { -1 };
    let g = q.gcd(&d1);
    HalfAutomorphy { sigma, zeta8, ratio_num: q / g, ratio_den: d1 / g }
}

/// Classical index of Γ₀(M) in SL₂(ℤ): M·∏(1 + 1/p).
pub fn gamma0_index(m: i64) -> i64 {
    let mut out = m;
    let mut n = m;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out = out / p * (p + 1);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out = out / n * (n + 1);
    }
    out
}

/// Classical cusp count of Γ₀(M): Σ_{d|M} φ(gcd(d, M/d)).
pub fn gamma0_cusp_count(m: i64) -> i64 {
    let phi = |n: i64| (1..=n).filter(|k| k.gcd(&n) == 1).count() as i64;
    (1..=m).filter(|d| m % d == 0).map(|d| phi(d.gcd(&(m / d)))).sum()
}
