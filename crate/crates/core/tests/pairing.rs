//! End-to-end checks of the cusp-sum pairing.

use num_rational::Rational64;
use thetapair::bf_pairing::*;
use thetapair::exact_arith::{rat, CycloScalar};
use thetapair::mock_eichler::MockSpec;
use thetapair::modular_group::{CongruenceGroup, CuspData, STWord, Token};
use thetapair::par::Execution;
use thetapair::theta_forms::{polygonal_to_lattice, UnaryThetaSpec};

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

#[test]
fn self_pairings_match_quadrature() {
    let cases = [((1, 1, 2), r(1, 192)), ((2, 1, 3), r(1, 288))];
    for ((h, t, n), want) in cases {
        let u = UnaryThetaSpec::new(h, t, n).unwrap();
        let rep = self_pairing(&u, &PairingOptions::default()).unwrap();
        assert!(rep.character_trivial);
        assert_eq!(total_rational(&rep), Some(want), "{}", u.label());
        let num = self_pairing_numeric(&u, Some(rep.group), QuadratureOptions::default(), Execution::default()).unwrap();
        assert!((num - *want.numer() as f64 / *want.denom() as f64).abs() < 1e-8, "{num}");
    }
}

#[test]
fn even_t_pairing_is_irrational_and_matches_quadrature() {
    let u = UnaryThetaSpec::new(1, 2, 3).unwrap();
    // H = F_{1,2,3}(2τ) has shadow √2·ϑ_{1,2,3}
    let h = MockSpec::preimage_of(&u, r(1, 1));
    let f = h.shadow();
    let rep = bf_pair(&f, &h, &PairingOptions::default()).unwrap();
    let sqrt2 = CycloScalar::zeta(8, 1) - CycloScalar::zeta(8, 3);
    assert_eq!(rep.total, sqrt2.scale(&rat(1, 288)));
    let num = petersson_numeric(&f, &h.shadow(), rep.group, QuadratureOptions::default(), Execution::default()).unwrap();
    assert!((num.re - 2f64.sqrt() / 288.0).abs() < 1e-8 && num.im.abs() < 1e-8, "{num}");
}

#[test]
fn theta0_value() {
    let u = UnaryThetaSpec::new(1, 1, 3).unwrap();
    let f = u.source().rescaled(r(1, 24)).scaled_by(&CycloScalar::from_rational(rat(1, 6)));
    let h = MockSpec::new(1, 1, 3).unwrap().rescaled(r(1, 24));
    let base = bf_pair(&f, &h, &PairingOptions::default()).unwrap();
    assert_eq!(total_rational(&base), Some(r(1, 72)));
    // the value does not depend on the group chosen
    let opts = PairingOptions { group: Some(CongruenceGroup::new(base.group.level() * 2, 12).unwrap()), ..Default::default() };
    assert_eq!(total_rational(&bf_pair(&f, &h, &opts).unwrap()), Some(r(1, 72)));
}

#[test]
fn cusp_contribution_ignores_the_representative() {
    let u = UnaryThetaSpec::new(2, 1, 3).unwrap();
    let h = MockSpec::preimage_of(&u, r(1, 4));
    let f = h.shadow();
    let ctx = GroupContext::new(default_group(&f, &h), 10_000).unwrap();
    let mut seen = 0;
    for c in &ctx.cusps {
        let base = cusp_contribution(&f, &h, c).unwrap();
        // ρ·T^k with k a multiple of the width names the same cusp
        let mut word = c.word.clone();
        word.tokens.push(Token::T(3 * c.width as i64));
        let moved = CuspData { word, ..c.clone() };
        assert_eq!(cusp_contribution(&f, &h, &moved).unwrap().contribution, base.contribution, "{}", c.label());
        // and so does γ·ρ for γ in the group
        let g = ctx.generators[seen % ctx.generators.len()];
        let mut left = thetapair::modular_group::decompose_st(&g);
        left.tokens.extend(c.word.tokens.iter().copied());
        left.sign *= c.word.sign;
        let moved = CuspData { word: STWord { tokens: left.tokens, sign: left.sign }, ..c.clone() };
        assert_eq!(cusp_contribution(&f, &h, &moved).unwrap().contribution, base.contribution, "{}", c.label());
        seen += 1;
    }
    assert!(seen > 0);
}

#[test]
fn linearity_in_the_theta_argument() {
    let u = UnaryThetaSpec::new(2, 1, 3).unwrap();
    let h = MockSpec::preimage_of(&u, r(1, 4));
    let f = h.shadow();
    let g = f.scaled_by(&CycloScalar::from_int(2));
    let opts = PairingOptions::default();
    let a = bf_pair(&f, &h, &opts).unwrap().total;
    let sum = bf_pair(&f.add(&g).unwrap(), &h, &opts).unwrap().total;
    assert_eq!(sum, a.scale(&rat(3, 1)));
    assert!(!a.is_zero());
}

/// The octagonal theta and the shadow of F_{2,1,3}(τ/4) share the working group;
/// the shadow pairs nonzero there, so a zero for the polygon is not an artefact.
#[test]
fn shadow_pairs_nonzero_on_the_octagonal_group() {
    let group = CongruenceGroup::new(108, 12).unwrap();
    let opts = PairingOptions { group: Some(group), ..Default::default() };
    let u = UnaryThetaSpec::new(2, 1, 3).unwrap();
    let h = MockSpec::preimage_of(&u, r(1, 4));
    let rep = bf_pair(&h.shadow(), &h, &opts).unwrap();
    assert!(rep.character_trivial);
    assert!(!rep.is_zero);
    assert!(total_rational(&rep).unwrap() > r(0, 1));
}

#[test]
fn small_polygon_fixture() {
    let rep = orthogonality_report(4, 1, 1, 1, &OrthogonalityOptions::default()).unwrap();
    assert!(rep.orthogonal);
    let group = rep.reports[0].group;
    assert_eq!(group, CongruenceGroup::new(36, 12).unwrap());
    assert_eq!(rep.reports[0].psl_index, 144);
    let by_label = |s: &str| rep.reports.iter().find(|r| r.h.starts_with(s)).unwrap();
    assert!(!by_label("F_{1,1,3}").character_trivial);
    let b = by_label("F_{2,1,3}");
    assert!(b.character_trivial && b.is_zero);
    assert_eq!(rep.excluded.len(), 1);
    assert!(rep.excluded[0].starts_with("F_{1,2,3}"));
}

#[test]
fn override_group_without_gamma1_condition() {
    let lat = polygonal_to_lattice(4, 1, 1, 1).unwrap();
    let f = lat.lattice.source().unwrap();
    let u = UnaryThetaSpec::new(2, 1, 3).unwrap();
    let h = MockSpec::preimage_of(&u, r(1, 4));
    let opts = PairingOptions { group: Some(CongruenceGroup::gamma0(36)), ..Default::default() };
    let rep = bf_pair(&f, &h, &opts).unwrap();
    assert!(!rep.character_trivial);
    assert!(rep.is_zero);
}

fn octagonal() -> thetapair::theta_forms::ThetaSource {
    polygonal_to_lattice(8, 1, 3, 3).unwrap().lattice.source().unwrap()
}

/// Constant-times-constant summands (n = 0) are part of the cusp sum.
#[test]
fn constant_terms_enter_the_pairing() {
    let u = UnaryThetaSpec::new(2, 1, 3).unwrap();
    let h = MockSpec::preimage_of(&u, r(1, 4));
    let opts = PairingOptions { group: Some(CongruenceGroup::new(108, 12).unwrap()), ..Default::default() };
    let rep = bf_pair(&octagonal(), &h, &opts).unwrap();
    assert!(rep.character_trivial && rep.is_zero);
    let n0: Vec<_> = rep.per_cusp.iter().flat_map(|c| c.terms.iter()).filter(|t| t.n == r(0, 1)).collect();
    assert!(!n0.is_empty());
    assert!(n0.iter().all(|t| !(&t.f_coeff * &t.h_coeff).is_zero()));
}

#[test]
fn octagonal_on_the_larger_gamma0_group() {
    let opts = OrthogonalityOptions { pairing: PairingOptions { group: Some(CongruenceGroup::gamma0(108)), ..Default::default() }, ..Default::default() };
    let rep = orthogonality_report(8, 1, 3, 3, &opts).unwrap();
    assert!(rep.orthogonal);
    assert!(rep.reports.iter().all(|x| x.group == CongruenceGroup::gamma0(108) && x.psl_index == 216));
}
