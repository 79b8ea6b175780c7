//! One line per acceptance criterion. Known reds are reported but do not fail the run.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::laws::*;
use num_complex::Complex64;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thetapair::bf_pairing::*;
use thetapair::exact_arith::{cyclo_normalize, rat, CycloScalar};
use thetapair::mock_eichler::*;
use thetapair::modular_group::*;
use thetapair::par::Execution;
use thetapair::qseries::QExpansion;
use thetapair::theta_forms::*;

const XI_TOL: f64 = 1e-6;
const XI_STEP: f64 = 1e-4;
const LAW_TOL: f64 = 1e-8;
const ETA_TOL: f64 = 1e-10;
const PAIRING_REL_TOL: f64 = 1e-4;
const TIME_LIMIT_SECS: u64 = 600;

struct Outcome {
    id: u32,
    pass: bool,
    /// A failure here is expected and explained in the detail.
    known_red: bool,
    detail: String,
}

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn octagonal() -> ThetaSource {
    polygonal_to_lattice(8, 1, 3, 3).unwrap().lattice.source().unwrap()
}

fn octagonal_group() -> CongruenceGroup {
    CongruenceGroup::new(108, 12).unwrap()
}

fn criterion1() -> (Outcome, Option<OrthogonalityReport>) {
    let start = Instant::now();
    let rep = match orthogonality_report(8, 1, 3, 3, &OrthogonalityOptions::default()) {
        Ok(rep) => rep,
        Err(e) => return (Outcome { id: 1, pass: false, known_red: false, detail: format!("error: {e}") }, None),
    };
    let secs = start.elapsed().as_secs();
    let all_zero = rep.reports.iter().all(|x| x.is_zero);
    let mut parts: Vec<String> = rep
        .reports
        .iter()
        .map(|x| format!("{} [{}] total {}", x.h, if x.character_trivial { "trivial character" } else { "nontrivial character" }, x.total))
        .collect();
    parts.extend(rep.excluded.iter().map(|x| format!("{x} excluded, not modular on the group")));
    let group = rep.reports.first().map(|x| x.group_label.clone()).unwrap_or_default();
    let pass = rep.orthogonal && all_zero && secs < TIME_LIMIT_SECS;
    let detail = format!("{group}; {}; {secs}s", parts.join("; "));
    (Outcome { id: 1, pass, known_red: false, detail }, Some(rep))
}

fn plain_theta(step: i64, bound: i64) -> QExpansion {
    let mut out = QExpansion::zero(Some(Rational64::from_integer(bound)));
    let mut n = 0i64;
    while step * n * n < bound {
        let c = if n == 0 { 1 } else { 2 };
        out.insert(Rational64::from_integer(step * n * n), CycloScalar::from_int(c));
        n += 1;
    }
    out
}

fn criterion2() -> Outcome {
    let bound = 101;
    let b = Rational64::from_integer(bound);
    let th = |s| plain_theta(s, bound);
    let product = th(1).sub(&th(9)).mul(&th(3).sub(&th(27)).pow(2)).truncate(b);
    let lat = polygonal_to_lattice(8, 1, 3, 3).unwrap().lattice;
    let single = theta_expansion_infty(&lat.source().unwrap(), b);
    let mut cosets = QExpansion::zero(Some(b));
    for signs in 0..8 {
        let shift: Vec<Rational64> = lat.shift.iter().enumerate().map(|(k, x)| if signs >> k & 1 == 1 { -*x } else { *x }).collect();
        let l = ShiftedLattice::new(lat.gram.clone(), shift).unwrap();
        cosets = cosets.add(&theta_expansion_infty(&l.source().unwrap(), b));
    }
    let pass = cosets == product;
    let detail = format!(
        "product = sum over the 8 sign-class cosets through q^{}: {}; single coset x8 = product: {}; single coset = product: {}",
        bound - 1,
        pass,
        single.scale(&CycloScalar::from_int(8)) == product,
        single == product
    );
    Outcome { id: 2, pass, known_red: false, detail }
}

fn criterion3() -> Outcome {
    let pass = chi_theta_rewrite_check(Rational64::from_integer(201));
    Outcome { id: 3, pass, known_red: false, detail: "theta_chi(tau) = theta_{2,1,3}(tau/4) through q^200".into() }
}

fn criterion4() -> Outcome {
    let samples = [Complex64::new(0.0, 1.0), Complex64::new(1.0 / 3.0, 1.0), Complex64::new(0.0, 2.0)];
    let spec = MockSpec::new(2, 1, 3).unwrap();
    let err_a = xi_check(&spec, &samples, XI_STEP);
    let quarter = spec.rescaled(r(1, 4));
    let theta = UnaryThetaSpec::new(2, 1, 3).unwrap().source().rescaled(r(1, 4));
    let err_b = xi_check_against(&quarter, &samples, XI_STEP, |z| evaluate_numeric(&theta, z) * 0.25);
    let err_half = xi_check_against(&quarter, &samples, XI_STEP, |z| evaluate_numeric(&theta, z) * 0.5);
    let a = err_a < XI_TOL;
    let b = err_b < XI_TOL;
    let detail = format!(
        "xi F_{{2,1,3}} = theta_{{2,1,3}}: err {err_a:.2e} ({}); xi F(tau/4) = 1/4 theta(tau/4): err {err_b:.2e} ({}); with factor 1/2: err {err_half:.2e} ({})",
        verdict(a),
        verdict(b),
        verdict(err_half < XI_TOL)
    );
    // the 1/4 factor contradicts the chain rule, which gives (1/4)^{1/2}
    Outcome { id: 4, pass: a && b, known_red: a && !b && err_half < XI_TOL, detail }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "fails"
    }
}

fn criterion5() -> Outcome {
    let cs = Case::new(2, 1, 3);
    let spec = MockSpec::new(2, 1, 3).unwrap();
    let mut ell: f64 = 0.0;
    let mut slaw: f64 = 0.0;
    for g in law_matrices() {
        for tau in sample_points(&g) {
            ell = ell.max(elliptic_residual(&cs, &g, tau));
            slaw = slaw.max(s_law_residual(&cs, &spec, &g, tau));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut eta: f64 = 0.0;
    let mut check = |g: SL2Matrix| {
        let (c, d) = (g.c as f64, g.d as f64);
        let tau = Complex64::new(-d / c + 0.1 / c, 1.0 / c.abs());
        let want = eta_numeric(g.act(tau)) / (g.j(tau).sqrt() * eta_numeric(tau));
        eta = eta.max((eta_multiplier(&g).to_c64() - want).norm());
    };
    for _ in 0..20 {
        check(gamma_prime(&cs, &common::random_in_group(&mut rng, 144, 12, 6)));
    }
    for _ in 0..20 {
        check(common::random_in_group(&mut rng, 108, 12, 6));
    }
    let pass = ell < LAW_TOL && slaw < LAW_TOL && eta < ETA_TOL;
    let detail = format!("elliptic law {ell:.1e}, S-law {slaw:.1e} at 2 points x 2 matrices; eta multiplier {eta:.1e} on 40 matrices");
    Outcome { id: 5, pass, known_red: false, detail }
}

fn criterion6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..1000 {
        let g = common::random_sl2(&mut rng, 1_000_000);
        let w = decompose_st(&g);
        ok &= w.eval() == g;
        if g.c != 0 {
            let ratio = w.len() as f64 / (2.0 * (g.c.abs() as f64).log2() + 4.0);
            worst = worst.max(ratio);
        }
    }
    let pass = ok && worst <= 1.0;
    Outcome { id: 6, pass, known_red: false, detail: format!("1000 matrices reconstructed: {ok}; max length / (2 log2|c| + 4) = {worst:.3}") }
}

fn criterion7() -> Outcome {
    let mut bad = Vec::new();
    let mut n108 = (0, 0);
    for m in 1..=200 {
        let table = CosetTable::new(CongruenceGroup::gamma0(m), 10_000).unwrap();
        let (idx, cusps) = (table.psl_index() as i64, cusp_set_with(&table).len() as i64);
        if m == 108 {
            n108 = (idx, cusps);
        }
        if idx != gamma0_index(m) || cusps != gamma0_cusp_count(m) {
            bad.push(m);
        }
    }
    let pass = bad.is_empty() && n108 == (216, 18);
    Outcome { id: 7, pass, known_red: false, detail: format!("mismatches {bad:?}; Gamma0(108): index {}, {} cusps", n108.0, n108.1) }
}

fn criterion8() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (h, t, n) in [(2, 1, 3), (1, 1, 2)] {
        let u = UnaryThetaSpec::new(h, t, n).unwrap();
        let rep = self_pairing(&u, &PairingOptions::default()).unwrap();
        let exact = total_rational(&rep);
        let num = self_pairing_numeric(&u, Some(rep.group), QuadratureOptions::default(), Execution::default()).unwrap();
        let ok = match exact {
            Some(q) if q > r(0, 1) => {
                let x = *q.numer() as f64 / *q.denom() as f64;
                ((num - x) / x).abs() < PAIRING_REL_TOL
            }
            _ => false,
        };
        pass &= ok;
        parts.push(format!("<{0},{0}> = {1} vs quadrature {num:.10}", u.label(), rep.total));
    }
    // normalized Θ₀ = (1/6)ϑ_{1,1,3}(τ/24) against F_{1,1,3}(τ/24)
    let u = UnaryThetaSpec::new(1, 1, 3).unwrap();
    let f = u.source().rescaled(r(1, 24)).scaled_by(&CycloScalar::from_rational(rat(1, 6)));
    let h = MockSpec::new(1, 1, 3).unwrap().rescaled(r(1, 24));
    let rep = bf_pair(&f, &h, &PairingOptions::default()).unwrap();
    let num = petersson_numeric(&f, &h.shadow(), rep.group, QuadratureOptions::default(), Execution::default()).unwrap();
    let self_val = num.re * 6f64.sqrt() / 3.0;
    parts.push(format!(
        "Theta0: <Theta0, xi H> = {} vs quadrature {:.10}, so <Theta0,Theta0> = sqrt6/216 = {self_val:.6} (suggested 1/864 = {:.6} not confirmed)",
        rep.total,
        num.re,
        1.0 / 864.0
    ));
    Outcome { id: 8, pass, known_red: false, detail: parts.join("; ") }
}

fn random_series(rng: &mut ChaCha8Rng) -> QExpansion {
    let bound = Rational64::from_integer(rng.gen_range(8..14));
    let n = rng.gen_range(0..6);
    QExpansion::from_terms(
        (0..n).map(|_| (Rational64::new(rng.gen_range(-2..12), rng.gen_range(1..4)), CycloScalar::from_int(rng.gen_range(-4..5)))),
        Some(bound),
    )
}

fn random_cyclo(rng: &mut ChaCha8Rng) -> CycloScalar {
    let m = [1u64, 3, 4, 8, 12, 24][rng.gen_range(0..6)];
    let n = rng.gen_range(0..4);
    CycloScalar::try_from_terms(m, (0..n).map(|_| (rng.gen_range(0..m), rat(rng.gen_range(-6..7), rng.gen_range(1..6))))).unwrap()
}

fn criterion9(orth: Option<&OrthogonalityReport>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ring = true;
    for _ in 0..300 {
        let (a, b, c) = (random_series(&mut rng), random_series(&mut rng), random_series(&mut rng));
        ring &= a.mul(&b).mul(&c).agrees_with(&a.mul(&b.mul(&c)));
        ring &= a.mul(&b.add(&c)).agrees_with(&a.mul(&b).add(&a.mul(&c)));
        ring &= a.mul(&b).agrees_with(&b.mul(&a));
    }
    let mut normal = true;
    for _ in 0..300 {
        let x = random_cyclo(&mut rng);
        let n = cyclo_normalize(&x);
        normal &= cyclo_normalize(&n) == n && n == x && x.to_string().parse::<CycloScalar>().ok() == Some(x.clone());
    }

    // two spellings of every cusp representative of the octagonal group
    let f = octagonal();
    let spec = MockSpec::new(2, 1, 3).unwrap().rescaled(r(1, 4));
    let table = CosetTable::new(octagonal_group(), 10_000).unwrap();
    let mut two_path = true;
    for c in cusp_set_with(&table) {
        let mut w2 = STWord { tokens: vec![Token::S, Token::S, Token::T(1), Token::S, Token::S, Token::T(-1)], sign: 1 };
        w2.tokens.extend(c.word.tokens.iter().copied());
        w2.sign = c.word.sign;
        let b = Rational64::from_integer(2);
        two_path &= expansion_at_cusp(&f, &c.word, b).ok() == expansion_at_cusp(&f, &w2, b).ok();
        let (m1, m2) = (replay_mock(&spec, &c.word).unwrap(), replay_mock(&spec, &w2).unwrap());
        two_path &= m1.same_function_ratio(&m2).is_some_and(|u| u.is_one());
    }

    let u = UnaryThetaSpec::new(2, 1, 3).unwrap();
    let h = MockSpec::preimage_of(&u, r(1, 4));
    let opts = PairingOptions { group: Some(octagonal_group()), ..Default::default() };
    let g = h.shadow();
    let pg = bf_pair(&g, &h, &opts).unwrap().total;
    let sum = bf_pair(&g.add(&g.scaled_by(&CycloScalar::from_int(2))).unwrap(), &h, &opts).unwrap().total;
    let bilinear = sum == pg.scale(&rat(3, 1)) && !pg.is_zero();

    // adding ξH for one candidate to f switches on exactly that pairing
    let oopts = OrthogonalityOptions { pairing: opts.clone(), ..Default::default() };
    let fp = f.add(&shadow_of(&u, r(1, 4))).unwrap();
    let neg = orthogonality_for_source(&fp, [8, 1, 3, 3], &oopts).unwrap();
    let base_zero = orth.is_some_and(|o| o.orthogonal);
    let switched: Vec<&str> = neg.reports.iter().filter(|x| !x.is_zero).map(|x| x.h.as_str()).collect();
    let control = base_zero && switched == [h.label_string().as_str()];

    let pass = ring && normal && two_path && bilinear && control;
    let detail = format!(
        "ring axioms {}; normal form {}; two-path cusp expansions {}; bilinearity {}; negative control {} (nonzero: {})",
        verdict(ring),
        verdict(normal),
        verdict(two_path),
        verdict(bilinear),
        verdict(control),
        switched.join(", ")
    );
    Outcome { id: 9, pass, known_red: false, detail }
}

fn main() -> ExitCode {
    let (c1, orth) = criterion1();
    let results = [c1, criterion2(), criterion3(), criterion4(), criterion5(), criterion6(), criterion7(), criterion8(), criterion9(orth.as_ref())];
    let mut unexpected = 0;
    for o in &results {
        let tag = match (o.pass, o.known_red) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("criterion {}: {tag}: {}", o.id, o.detail);
    }
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
