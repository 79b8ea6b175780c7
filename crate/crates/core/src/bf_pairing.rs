//! Petersson products ⟨f, ξ_{1/2}H⟩ of weight 3/2 theta series against shadows of
//! harmonic pre-images, as a finite sum over cusps:
//!
//! ⟨f, ξH⟩ = (1/[PSL₂(ℤ):Γ̄])·Σ_ρ N_ρ·Σ_{n≥0} c_{f,ρ}(n)·c⁺_{H,ρ}(−n)
//!
//! with exponents measured in τ (so N_ρ restores the local parameter q^{1/N_ρ}).

use std::collections::BTreeSet;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_arith::{rat, CycloScalar};
use crate::mock_eichler::{holo_part_at_cusp, replay_mock, MockError, MockSpec};
use crate::modular_group::{cusp_set_with, decompose_st, CongruenceGroup, CosetTable, CuspData, GroupError, SL2Matrix, STWord, DEFAULT_LEVEL_BOUND};
use crate::par::{self, Execution};
use crate::qseries::{Exponent, QExpansion};
use crate::theta_forms::{expansion_at_cusp, polygonal_to_lattice, theta_expansion_infty, ThetaError, ThetaSource, UnaryThetaSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairingError {
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Mock(#[from] MockError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("irregular cusp {0} rejected")]
    IrregularCusp(String),
    #[error("{which} is not modular on {group}: generator {generator} breaks proportionality")]
    NotModular { which: String, group: String, generator: String },
    #[error("expansion of {which} needed to exponent {needed}, only {available} available")]
    Truncation { which: String, needed: Exponent, available: Exponent },
}

/// Positive exponents below this are treated as outside the principal part.
fn epsilon() -> Exponent {
    Exponent::new(1, 1 << 20)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingOptions {
    /// Working group; `None` picks [`default_group`].
    pub group: Option<CongruenceGroup>,
    pub reject_irregular: bool,
    /// Verify f and H transform with inverse characters on every Schreier generator.
    pub check_modularity: bool,
    pub exec: Execution,
    pub level_bound: i64,
}

impl Default for PairingOptions {
    fn default() -> Self {
        PairingOptions { group: None, reject_irregular: false, check_modularity: true, exec: Execution::default(), level_bound: DEFAULT_LEVEL_BOUND }
    }
}

/// One (n, c_{f,ρ}(n), c⁺_{H,ρ}(−n)) summand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTerm {
    pub n: Exponent,
    pub f_coeff: CycloScalar,
    pub h_coeff: CycloScalar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuspContribution {
    pub cusp: String,
    pub width: u64,
    pub regular: bool,
    /// N_ρ·Σ c_f(n)·c⁺_H(−n).
    pub contribution: CycloScalar,
    pub terms: Vec<PairTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingReport {
    pub f: String,
    pub h: String,
    pub group: CongruenceGroup,
    pub group_label: String,
    pub index: usize,
    pub psl_index: usize,
    pub contains_minus_identity: bool,
    /// False when f·H⁺ picks up a nontrivial character on Γ; the product is then 0.
    pub character_trivial: bool,
    pub per_cusp: Vec<CuspContribution>,
    pub total: CycloScalar,
    pub is_zero: bool,
}

/// Γ₀(lcm(level of f, 16N²λ/t²))∩Γ₁(4N/t).
pub fn default_group(f: &ThetaSource, h: &MockSpec) -> CongruenceGroup {
    let mock0 = Exponent::new(16 * h.n * h.n, h.t * h.t) * h.scale;
    let m0 = num_integer::lcm(f.lattice_level(), *mock0.numer());
    let m1 = 4 * h.n / h.t;
    CongruenceGroup { m0: num_integer::lcm(m0, m1), m1 }
}

/// A bound past the leading term of f at ∞ with some room for proportionality checks.
fn check_bound(f: &ThetaSource) -> Exponent {
    let mut b = Exponent::from_integer(4);
    while b < Exponent::from_integer(1 << 16) {
        if let Some((e, _)) = theta_expansion_infty(f, b).leading() {
            return e.max(Exponent::zero()) + 2;
        }
        b *= 2;
    }
    b
}

/// Coset table, cusps and Schreier generators of one working group.
#[derive(Debug, Clone)]
pub struct GroupContext {
    pub table: CosetTable,
    pub cusps: Vec<CuspData>,
    pub generators: Vec<SL2Matrix>,
}

impl GroupContext {
    pub fn new(group: CongruenceGroup, level_bound: i64) -> Result<Self, PairingError> {
        let table = CosetTable::new(group, level_bound)?;
        let cusps = cusp_set_with(&table);
        let generators = table.schreier_generators();
        Ok(GroupContext { table, cusps, generators })
    }
}

fn not_modular(which: String, ctx: &GroupContext, g: &SL2Matrix) -> PairingError {
    PairingError::NotModular { which, group: ctx.table.group.label(), generator: g.to_string() }
}

/// χ_f(g) with f|g = χ_f(g)·f, for every Schreier generator g.
pub fn theta_characters(f: &ThetaSource, ctx: &GroupContext, exec: Execution) -> Result<Vec<CycloScalar>, PairingError> {
    let fb = check_bound(f);
    let f_inf = theta_expansion_infty(f, fb);
    par::try_map(exec, &ctx.generators, |g| {
        let fg = expansion_at_cusp(f, &decompose_st(g), fb)?;
        fg.ratio_to(&f_inf).ok_or_else(|| not_modular(f.name.clone(), ctx, g))
    })
}

/// χ_H(g) with H|g = χ_H(g)·H, for every Schreier generator g.
pub fn mock_characters(h: &MockSpec, ctx: &GroupContext, exec: Execution) -> Result<Vec<CycloScalar>, PairingError> {
    let hb = Exponent::from_integer(3);
    let id = replay_mock(h, &STWord::identity())?;
    let h_inf = id.holo(hb)?.holo;
    par::try_map(exec, &ctx.generators, |g| {
        let rg = replay_mock(h, &decompose_st(g))?;
        let u = match rg.same_function_ratio(&id) {
            Some(u) => Some(u),
            None => rg.holo(hb)?.holo.ratio_to(&h_inf),
        };
        u.ok_or_else(|| not_modular(h.label_string(), ctx, g))
    })
}

/// width·Σ_{n≥0} c_f(n)·c_H⁺(−n) at one cusp representative.
pub fn cusp_contribution(f: &ThetaSource, h: &MockSpec, cusp: &CuspData) -> Result<CuspContribution, PairingError> {
    let hp = holo_part_at_cusp(h, &cusp.word, epsilon())?.holo;
    let principal: Vec<(Exponent, CycloScalar)> = hp.terms().filter(|(e, _)| !e.is_positive()).map(|(e, c)| (*e, c.clone())).collect();
    let mut terms = Vec::new();
    let mut ct = CycloScalar::zero();
    if let Some(deepest) = principal.first().map(|(e, _)| -*e) {
        let fr = expansion_at_cusp(f, &cusp.word, deepest + epsilon())?;
        for (e, ch) in principal {
            let cf =
                fr.coefficient(-e).map_err(|_| PairingError::Truncation { which: f.name.clone(), needed: -e, available: fr.bound().unwrap_or(deepest) })?;
            if cf.is_zero() {
                continue;
            }
            ct = &ct + &(&cf * &ch);
            terms.push(PairTerm { n: -e, f_coeff: cf, h_coeff: ch });
        }
    }
    Ok(CuspContribution { cusp: cusp.label(), width: cusp.width, regular: cusp.regular, contribution: ct.scale(&rat(cusp.width as i64, 1)), terms })
}

/// ⟨f, ξ_{1/2}H⟩ via the finite cusp sum.
pub fn bf_pair(f: &ThetaSource, h: &MockSpec, opts: &PairingOptions) -> Result<PairingReport, PairingError> {
    let group = opts.group.unwrap_or_else(|| default_group(f, h));
    let ctx = GroupContext::new(group, opts.level_bound)?;
    pair_in_context(f, None, h, &ctx, opts)
}

/// As [`bf_pair`] on a prepared group, optionally reusing f's characters.
pub fn pair_in_context(
    f: &ThetaSource,
    f_chars: Option<&[CycloScalar]>,
    h: &MockSpec,
    ctx: &GroupContext,
    opts: &PairingOptions,
) -> Result<PairingReport, PairingError> {
    let group = ctx.table.group;
    if opts.reject_irregular {
        if let Some(c) = ctx.cusps.iter().find(|c| !c.regular) {
            return Err(PairingError::IrregularCusp(c.label()));
        }
    }
    let trivial = if opts.check_modularity {
        let hc = mock_characters(h, ctx, opts.exec)?;
        let fc = match f_chars {
            Some(c) => c.to_vec(),
            None => theta_characters(f, ctx, opts.exec)?,
        };
        fc.iter().zip(&hc).all(|(a, b)| (a * b).is_one())
    } else {
        true
    };
    let per_cusp = if trivial { par::try_map(opts.exec, &ctx.cusps, |c| cusp_contribution(f, h, c))? } else { Vec::new() };
    let psl = ctx.table.psl_index();
    let mut total = CycloScalar::zero();
    for c in &per_cusp {
        total = &total + &c.contribution;
    }
    let total = total.scale(&rat(1, psl as i64));
    Ok(PairingReport {
        f: f.name.clone(),
        h: h.label_string(),
        group,
        group_label: group.label(),
        index: ctx.table.len(),
        psl_index: psl,
        contains_minus_identity: group.contains_minus_identity(),
        character_trivial: trivial,
        is_zero: total.is_zero(),
        per_cusp,
        total,
    })
}

/// One ϑ_{h,t,N} per ± pair, over squarefree t | 2N and h mod 2N/t, zero series dropped.
pub fn unary_candidates(n: i64) -> Vec<UnaryThetaSpec> {
    let mut out = Vec::new();
    for t in 1..=2 * n {
        let Ok(probe) = UnaryThetaSpec::new(0, t, n) else { continue };
        let m = probe.modulus();
        for h in 0..m {
            let neg = (-h).rem_euclid(m);
            if neg <= h {
                continue;
            }
            out.push(UnaryThetaSpec::new(h, t, n).expect("validated t"));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthogonalityOptions {
    /// The N of the unary candidates.
    pub n: i64,
    /// Each pre-image enters as F(λτ).
    pub rescale: Exponent,
    /// Skip candidates whose shadow exponents mod 1 miss those of f at ∞.
    pub filter: bool,
    pub pairing: PairingOptions,
}

impl Default for OrthogonalityOptions {
    fn default() -> Self {
        OrthogonalityOptions { n: 3, rescale: Exponent::new(1, 4), filter: false, pairing: PairingOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub polygon: [i64; 4],
    pub f: String,
    pub reports: Vec<PairingReport>,
    /// Candidates dropped by the exponent-class filter.
    pub skipped: Vec<String>,
    /// Candidates whose pre-image is not modular on the working group (not in the space of f).
    pub excluded: Vec<String>,
    pub orthogonal: bool,
}

fn exponent_classes(e: &QExpansion) -> BTreeSet<Exponent> {
    e.terms().map(|(x, _)| x - x.floor()).collect()
}

/// Pairs Θ_{L+ν} of the polygonal form against every unary candidate.
pub fn orthogonality_report(m: i64, a: i64, b: i64, c: i64, opts: &OrthogonalityOptions) -> Result<OrthogonalityReport, PairingError> {
    let poly = polygonal_to_lattice(m, a, b, c)?;
    let f = poly.lattice.source()?;
    orthogonality_for_source(&f, [m, a, b, c], opts)
}

pub fn orthogonality_for_source(f: &ThetaSource, polygon: [i64; 4], opts: &OrthogonalityOptions) -> Result<OrthogonalityReport, PairingError> {
    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    let f_classes = if opts.filter { exponent_classes(&theta_expansion_infty(f, Exponent::from_integer(40))) } else { BTreeSet::new() };
    for u in unary_candidates(opts.n) {
        let spec = MockSpec::preimage_of(&u, opts.rescale);
        if opts.filter {
            let shadow = exponent_classes(&theta_expansion_infty(&spec.shadow(), Exponent::from_integer(40)));
            if shadow.is_disjoint(&f_classes) {
                skipped.push(spec.label_string());
                continue;
            }
        }
        jobs.push(spec);
    }
    let mut reports = Vec::new();
    let mut excluded = Vec::new();
    let mut contexts: Vec<(GroupContext, Option<Vec<CycloScalar>>)> = Vec::new();
    for h in &jobs {
        let group = opts.pairing.group.unwrap_or_else(|| default_group(f, h));
        let slot = match contexts.iter().position(|(c, _)| c.table.group == group) {
            Some(i) => i,
            None => {
                let ctx = GroupContext::new(group, opts.pairing.level_bound)?;
                let chars = if opts.pairing.check_modularity { Some(theta_characters(f, &ctx, opts.pairing.exec)?) } else { None };
                contexts.push((ctx, chars));
                contexts.len() - 1
            }
        };
        let (ctx, chars) = &contexts[slot];
        match pair_in_context(f, chars.as_deref(), h, ctx, &opts.pairing) {
            Ok(r) => reports.push(r),
            Err(PairingError::NotModular { which, .. }) if which == h.label_string() => excluded.push(which),
            Err(e) => return Err(e),
        }
    }
    let orthogonal = reports.iter().all(|r| r.is_zero);
    Ok(OrthogonalityReport { polygon, f: f.name.clone(), reports, skipped, excluded, orthogonal })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub u_nodes: usize,
    pub v_nodes: usize,
    /// Above this height the integral is done termwise in closed form.
    pub v_split: f64,
    pub bound: i64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { u_nodes: 48, v_nodes: 48, v_split: 2.0, bound: 10 }
    }
}

/// (1/[SL₂(ℤ):Γ])·Σ_M ∫_F (f|M)·conj(g|M)·v^{3/2} du dv/v² over all coset representatives M.
///
/// Above `v_split` each pair of Fourier terms is integrated exactly:
/// ∫_{−½}^{½} e^{2πiδu} du = sinc(δ), ∫_Y^∞ v^{−½}e^{−2πsv} dv = √(π/2πs)·erfc(√(2πsY)).
pub fn petersson_numeric(
    f: &ThetaSource,
    g: &ThetaSource,
    group: CongruenceGroup,
    quad: QuadratureOptions,
    exec: Execution,
) -> Result<Complex64, PairingError> {
    let table = CosetTable::new(group, DEFAULT_LEVEL_BOUND)?;
    let ru = GaussLegendre::new(NonZeroUsize::new(quad.u_nodes).expect("nodes")).as_node_weight_pairs().to_vec();
    let rv = GaussLegendre::new(NonZeroUsize::new(quad.v_nodes).expect("nodes")).as_node_weight_pairs().to_vec();
    let bound = Exponent::from_integer(quad.bound);
    let ys = quad.v_split;
    let parts = par::try_map(exec, &table.reps, |m| -> Result<Complex64, PairingError> {
        let w = decompose_st(m);
        let fm = expansion_at_cusp(f, &w, bound)?;
        let gm = expansion_at_cusp(g, &w, bound)?;
        let mut low = Complex64::zero();
        for &(xu, wu) in &ru {
            let u = 0.5 * xu;
            let v0 = (1.0 - u * u).sqrt();
            let half = 0.5 * (ys - v0);
            for &(xv, wv) in &rv {
                let v = v0 + half * (xv + 1.0);
                let tau = Complex64::new(u, v);
                low += fm.evaluate(tau) * gm.evaluate(tau).conj() * v.powf(-0.5) * (0.5 * wu * half * wv);
            }
        }
        let mut high = Complex64::zero();
        for (e1, c1) in fm.terms() {
            for (e2, c2) in gm.terms() {
                let (e1, e2) = (e1.to_f64().unwrap(), e2.to_f64().unwrap());
                let s = e1 + e2;
                if s <= 0.0 {
                    continue;
                }
                let d = e1 - e2;
                let sinc = if d == 0.0 { 1.0 } else { (std::f64::consts::PI * d).sin() / (std::f64::consts::PI * d) };
                let tail = (0.5 / s).sqrt() * statrs::function::erf::erfc((2.0 * std::f64::consts::PI * s * ys).sqrt());
                high += c1.to_c64() * c2.to_c64().conj() * sinc * tail;
            }
        }
        Ok(low + high)
    })?;
    Ok(parts.into_iter().sum::<Complex64>() / table.len() as f64)
}

/// ⟨ϑ, ϑ⟩ by the cusp sum, for the pre-image of a unary theta on its default group.
pub fn self_pairing(u: &UnaryThetaSpec, opts: &PairingOptions) -> Result<PairingReport, PairingError> {
    let h = MockSpec::preimage_of(u, Exponent::one());
    bf_pair(&h.shadow(), &h, opts)
}

/// ⟨ϑ, ϑ⟩ by quadrature on the same group.
pub fn self_pairing_numeric(u: &UnaryThetaSpec, group: Option<CongruenceGroup>, quad: QuadratureOptions, exec: Execution) -> Result<f64, PairingError> {
    let h = MockSpec::preimage_of(u, Exponent::one());
    let s = h.shadow();
    let group = group.unwrap_or_else(|| default_group(&s, &h));
    Ok(petersson_numeric(&s, &s, group, quad, exec)?.re)
}

/// Rational value of a report total, if it is one.
pub fn total_rational(r: &PairingReport) -> Option<Rational64> {
    let q = r.total.as_rational()?;
    Some(Rational64::new(q.numer().try_into().ok()?, q.denom().try_into().ok()?))
}

/// The shadow source for a rescaled candidate, for building negative controls.
pub fn shadow_of(u: &UnaryThetaSpec, rescale: Exponent) -> ThetaSource {
    MockSpec::preimage_of(u, rescale).shadow()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidates_small_n() {
        let c: Vec<_> = unary_candidates(3).iter().map(|u| (u.h, u.t)).collect();
        assert_eq!(c, vec![(1, 1), (2, 1), (1, 2)]);
        assert!(unary_candidates(1).is_empty());
        for n in 2..6 {
            for u in unary_candidates(n) {
                assert!(!u.naive_expansion(Exponent::from_integer(4 * n * n + 1)).is_empty(), "{u:?}");
            }
        }
    }
}
