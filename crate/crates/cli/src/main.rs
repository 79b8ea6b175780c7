//! `thetapair`: exact theta expansions, cusp data and Bruinier-Funke pairings as JSON.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 mathematical rejection.

mod cache;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thetapair::bf_pairing::{bf_pair, orthogonality_for_source, OrthogonalityOptions, OrthogonalityReport, PairingError, PairingOptions, PairingReport};
use thetapair::exact_arith::parse_rational64;
use thetapair::mock_eichler::{holo_part_at_cusp, xi_check, xi_check_against, MockError, MockSpec};
use thetapair::modular_group::{cusp_set_with, cusp_to_matrix, decompose_st, CongruenceGroup, CosetTable, GroupError, SL2Matrix, STWord};
use thetapair::par::Execution;
use thetapair::qseries::Exponent;
use thetapair::theta_forms::{evaluate_numeric, expansion_at_cusp, polygonal_to_lattice, ShiftedLattice, ThetaError, ThetaSource, UnaryThetaSpec};

use cache::Cache;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Mock(#[from] MockError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Pairing(#[from] PairingError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input(_) | CliError::Io(_) | CliError::Json(_) => 1,
            CliError::Theta(ThetaError::Invalid(_)) | CliError::Mock(MockError::Invalid(_)) => 1,
            CliError::Group(GroupError::NotCoprime(..) | GroupError::NotUnimodular(..) | GroupError::BadLevel) => 1,
            CliError::Pairing(PairingError::Theta(ThetaError::Invalid(_)) | PairingError::Mock(MockError::Invalid(_))) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "thetapair", version, about = "Exact Bruinier-Funke pairings of ternary theta series")]
struct Cli {
    /// Cache directory (default: $THETAPAIR_CACHE_DIR, then ~/.cache/thetapair)
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    no_cache: bool,
    /// Run everything on one thread
    #[arg(long, global = true)]
    sequential: bool,
    /// Write the JSON report here as well as to stdout
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// q-expansion of a lattice theta series at a cusp
    ThetaExpand {
        /// Lattice JSON: {"gram": [[..]], "shift": ["p/q", ..]} or {"polygonal": {"m":..,"a":..,"b":..,"c":..}}; "-" reads stdin
        #[arg(long)]
        input: String,
        #[arg(long, default_value = "oo")]
        cusp: String,
        #[arg(long, default_value = "30")]
        bound: String,
    },
    /// Holomorphic part (and non-holomorphic labels) of F_{h,t,N}(λτ) at a cusp
    MockExpand {
        #[command(flatten)]
        spec: MockArgs,
        #[arg(long, default_value = "oo")]
        cusp: String,
        #[arg(long, default_value = "30")]
        bound: String,
    },
    /// Cusps of Γ₀(M0) ∩ Γ₁(M1)
    Cusps {
        #[arg(long = "gamma0", alias = "group0")]
        gamma0: i64,
        #[arg(long = "gamma1", alias = "group1", default_value_t = 1)]
        gamma1: i64,
    },
    /// S/T word of a matrix in SL₂(ℤ)
    Decompose {
        #[arg(allow_hyphen_values = true)]
        a: i64,
        #[arg(allow_hyphen_values = true)]
        b: i64,
        #[arg(allow_hyphen_values = true)]
        c: i64,
        #[arg(allow_hyphen_values = true)]
        d: i64,
    },
    /// ⟨f, ξ_{1/2}H⟩ for a lattice theta f and H = F_{h,t,N}(tλτ)
    Pair {
        #[arg(long)]
        input: String,
        #[command(flatten)]
        spec: MockArgs,
        #[command(flatten)]
        group: GroupArgs,
    },
    /// Pair the theta of x ↦ a·p_m(x) + b·p_m(y) + c·p_m(z) against every unary candidate
    AlmostUniversal {
        #[arg(long)]
        m: i64,
        #[arg(long)]
        a: i64,
        #[arg(long)]
        b: i64,
        #[arg(long)]
        c: i64,
        /// Unary thetas ϑ_{h,t,N} are taken with this N
        #[arg(long, default_value_t = 3)]
        n: i64,
        #[arg(long, default_value = "1/4")]
        rescale: String,
        #[command(flatten)]
        group: GroupArgs,
        /// Accepted for compatibility; candidates are never pre-filtered unless --filter is given
        #[arg(long, conflicts_with = "filter")]
        no_filter: bool,
        /// Skip candidates whose exponent classes miss those of f
        #[arg(long)]
        filter: bool,
    },
    /// Max |ξ_{1/2}F − target| over sample points, by central differences
    XiCheck {
        #[command(flatten)]
        spec: MockArgs,
        /// Compare against factor·ϑ_{h,t,N}(λτ) instead of the exact shadow
        #[arg(long)]
        factor: Option<String>,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
    },
}

#[derive(Args, Debug, Clone)]
struct MockArgs {
    #[arg(long)]
    h: i64,
    #[arg(long)]
    t: i64,
    #[arg(long = "N", alias = "n-mod")]
    n: i64,
    /// λ in H = F_{h,t,N}(tλτ); the shadow is then (tλ)^{1/2}ϑ_{h,t,N}(λτ)
    #[arg(long, default_value = "1")]
    rescale: String,
}

#[derive(Args, Debug, Clone)]
struct GroupArgs {
    /// Override the working group Γ₀(M0) ∩ Γ₁(M1)
    #[arg(long = "group0", alias = "gamma0")]
    group0: Option<i64>,
    #[arg(long = "group1", alias = "gamma1", requires = "group0")]
    group1: Option<i64>,
}

impl GroupArgs {
    fn group(&self) -> Result<Option<CongruenceGroup>, CliError> {
        match self.group0 {
            Some(m0) => Ok(Some(CongruenceGroup::new(m0, self.group1.unwrap_or(1))?)),
            None => Ok(None),
        }
    }
}

/// Lattice input schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum LatticeInput {
    Shifted { gram: Vec<Vec<i64>>, shift: Vec<String> },
    Polygonal { polygonal: Polygon },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Polygon {
    m: i64,
    a: i64,
    b: i64,
    c: i64,
}

fn read_input(arg: &str) -> Result<LatticeInput, CliError> {
    let text = if arg == "-" {
        std::io::read_to_string(std::io::stdin())?
    } else if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("lattice JSON: {e}")))
}

fn source_of(input: &LatticeInput) -> Result<ThetaSource, CliError> {
    match input {
        LatticeInput::Shifted { gram, shift } => {
            let shift = shift.iter().map(|s| rational(s)).collect::<Result<Vec<_>, _>>()?;
            Ok(ShiftedLattice::new(gram.clone(), shift)?.source()?)
        }
        LatticeInput::Polygonal { polygonal: p } => Ok(polygonal_to_lattice(p.m, p.a, p.b, p.c)?.lattice.source()?),
    }
}

fn rational(s: &str) -> Result<Exponent, CliError> {
    parse_rational64(s).map_err(|e| CliError::Usage(format!("bad rational {s:?}: {e}")))
}

fn positive(s: &str, what: &str) -> Result<Exponent, CliError> {
    let r = rational(s)?;
    if r <= Exponent::from_integer(0) {
        return Err(CliError::Usage(format!("{what} must be positive, got {s}")));
    }
    Ok(r)
}

/// "oo" (or "1/0") for i∞, otherwise a/c.
fn cusp_word(s: &str) -> Result<(String, STWord), CliError> {
    let (a, c) = match s.trim() {
        "oo" | "inf" | "infinity" => (1, 0),
        t => match t.split_once('/') {
            Some((a, c)) => (parse_int(a)?, parse_int(c)?),
            None => (parse_int(t)?, 1),
        },
    };
    let g = cusp_to_matrix(a, c)?;
    let label = match (a, c) {
        (_, 0) => "oo".to_string(),
        (a, 1) => a.to_string(),
        (a, c) => format!("{a}/{c}"),
    };
    Ok((label, decompose_st(&g)))
}

fn parse_int(s: &str) -> Result<i64, CliError> {
    s.trim().parse().map_err(|_| CliError::Usage(format!("bad integer {s:?}")))
}

fn mock_spec(args: &MockArgs) -> Result<MockSpec, CliError> {
    let u = UnaryThetaSpec::new(args.h, args.t, args.n)?;
    Ok(MockSpec::preimage_of(&u, positive(&args.rescale, "rescale")?))
}

fn matrix_json(g: &SL2Matrix) -> Value {
    json!([[g.a, g.b], [g.c, g.d]])
}

fn exec(cli: &Cli) -> Execution {
    if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn cusps_json(group: CongruenceGroup) -> Result<Value, CliError> {
    let table = CosetTable::new(group, 100_000)?;
    let cusps: Vec<Value> = cusp_set_with(&table)
        .iter()
        .map(|c| json!({"cusp": c.label(), "width": c.width, "regular": c.regular, "matrix": matrix_json(&c.gamma_rho), "word": c.word.token_strings(), "sign": c.word.sign}))
        .collect();
    Ok(json!({
        "group": group.label(),
        "index": table.len(),
        "psl_index": table.psl_index(),
        "contains_minus_identity": group.contains_minus_identity(),
        "cusp_count": cusps.len(),
        "cusps": cusps,
    }))
}

fn pairing_json(rep: &PairingReport) -> Value {
    let mut totals = BTreeMap::new();
    totals.insert(rep.h.clone(), rep.total.to_string());
    json!({
        "f": rep.f,
        "group": rep.group_label,
        "index": rep.index,
        "psl_index": rep.psl_index,
        "contains_minus_identity": rep.contains_minus_identity,
        "character_trivial": rep.character_trivial,
        "cusps": rep.per_cusp.iter().map(|c| json!({
            "cusp": c.cusp,
            "width": c.width,
            "regular": c.regular,
            "contribution": c.contribution.to_string(),
            "terms": c.terms.iter().map(|t| json!({"n": t.n.to_string(), "f": t.f_coeff.to_string(), "h": t.h_coeff.to_string()})).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "totals": totals,
        "orthogonal": rep.is_zero,
    })
}

fn orthogonality_json(rep: &OrthogonalityReport) -> Result<Value, CliError> {
    let totals: BTreeMap<&str, String> = rep.reports.iter().map(|r| (r.h.as_str(), r.total.to_string())).collect();
    let main = rep.reports.first();
    let cusps: Vec<Value> = match main {
        Some(r) => {
            let table = CosetTable::new(r.group, 100_000)?;
            cusp_set_with(&table).iter().map(|c| json!({"cusp": c.label(), "width": c.width, "regular": c.regular})).collect()
        }
        None => Vec::new(),
    };
    Ok(json!({
        "polygon": rep.polygon,
        "f": rep.f,
        "group": main.map(|r| r.group_label.clone()),
        "index": main.map(|r| r.index),
        "psl_index": main.map(|r| r.psl_index),
        "cusps": cusps,
        "candidates": rep.reports.iter().map(|r| json!({
            "label": r.h,
            "group": r.group_label,
            "index": r.index,
            "character_trivial": r.character_trivial,
            "total": r.total.to_string(),
            "contributions": r.per_cusp.iter().filter(|c| !c.terms.is_empty()).map(|c| json!({
                "cusp": c.cusp,
                "contribution": c.contribution.to_string(),
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "totals": totals,
        "excluded": rep.excluded,
        "skipped": rep.skipped,
        "orthogonal": rep.orthogonal,
    }))
}

fn run(cli: &Cli) -> Result<Value, CliError> {
    let cache = Cache::resolve(cli.cache_dir.as_deref(), cli.no_cache);
    let exec = exec(cli);
    match &cli.command {
        Command::ThetaExpand { input, cusp, bound } => {
            let lattice = read_input(input)?;
            let bound = positive(bound, "bound")?;
            let (label, word) = cusp_word(cusp)?;
            let key = json!({"kind": "theta-expand", "input": lattice, "cusp": label, "bound": bound.to_string()});
            cache.get_or_compute(&key, || {
                let src = source_of(&lattice)?;
                let e = expansion_at_cusp(&src, &word, bound)?;
                Ok(json!({"source": src.name, "cusp": label, "word": word.token_strings(), "sign": word.sign, "bound": bound.to_string(), "expansion": e}))
            })
        }
        Command::MockExpand { spec, cusp, bound } => {
            let h = mock_spec(spec)?;
            let bound = positive(bound, "bound")?;
            let (label, word) = cusp_word(cusp)?;
            let key = json!({"kind": "mock-expand", "spec": h, "cusp": label, "bound": bound.to_string()});
            cache.get_or_compute(&key, || {
                let e = holo_part_at_cusp(&h, &word, bound)?;
                Ok(json!({"spec": h.label_string(), "cusp": label, "word": word.token_strings(), "sign": word.sign, "bound": bound.to_string(), "holo": e.holo, "nonholo": e.nonholo}))
            })
        }
        Command::Cusps { gamma0, gamma1 } => cusps_json(CongruenceGroup::new(*gamma0, *gamma1)?),
        Command::Decompose { a, b, c, d } => {
            let g = SL2Matrix::new(*a, *b, *c, *d)?;
            let w = decompose_st(&g);
            let product = w.eval();
            Ok(json!({"matrix": matrix_json(&g), "tokens": w.token_strings(), "sign": w.sign, "product": matrix_json(&product), "verified": product == g}))
        }
        Command::Pair { input, spec, group } => {
            let lattice = read_input(input)?;
            let h = mock_spec(spec)?;
            let group = group.group()?;
            let key = json!({"kind": "pair", "input": lattice, "spec": h, "group": group});
            let rep: PairingReport = cache.get_or_compute(&key, || {
                let f = source_of(&lattice)?;
                let opts = PairingOptions { group, exec, ..Default::default() };
                Ok(bf_pair(&f, &h, &opts)?)
            })?;
            Ok(pairing_json(&rep))
        }
        Command::AlmostUniversal { m, a, b, c, n, rescale, group, filter, .. } => {
            let rescale = positive(rescale, "rescale")?;
            let group = group.group()?;
            let key = json!({"kind": "almost-universal", "polygon": [m, a, b, c], "n": n, "rescale": rescale.to_string(), "group": group, "filter": filter});
            let rep: OrthogonalityReport = cache.get_or_compute(&key, || {
                let f = polygonal_to_lattice(*m, *a, *b, *c)?.lattice.source()?;
                let opts = OrthogonalityOptions { n: *n, rescale, filter: *filter, pairing: PairingOptions { group, exec, ..Default::default() } };
                Ok(orthogonality_for_source(&f, [*m, *a, *b, *c], &opts)?)
            })?;
            orthogonality_json(&rep)
        }
        Command::XiCheck { spec, factor, step } => {
            let h = mock_spec(spec)?;
            let samples = [Complex64::new(0.0, 1.0), Complex64::new(1.0 / 3.0, 1.0), Complex64::new(0.0, 2.0)];
            let err = match factor {
                None => xi_check(&h, &samples, *step),
                Some(fac) => {
                    let fac = rational(fac)?;
                    let lam = positive(&spec.rescale, "rescale")?;
                    let theta = UnaryThetaSpec::new(spec.h, spec.t, spec.n)?.source().rescaled(lam);
                    let x = *fac.numer() as f64 / *fac.denom() as f64;
                    xi_check_against(&h, &samples, *step, |z| evaluate_numeric(&theta, z) * x)
                }
            };
            Ok(json!({
                "spec": h.label_string(),
                "samples": samples.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "step": step,
                "factor": factor,
                "max_error": err,
            }))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(v) => {
            let text = serde_json::to_string_pretty(&v).expect("reports serialize");
            if let Some(path) = &cli.json {
                if let Err(e) = std::fs::write(path, format!("{text}\n")) {
                    eprintln!("error: writing {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}").and_then(|_| out.flush()) {
                Ok(()) => ExitCode::SUCCESS,
                // a closed reader (e.g. `| head`) is not an error
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: writing stdout: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
