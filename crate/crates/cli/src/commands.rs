//! The subcommands: read JSON inputs, run the library, build the report.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use epsilon_core::chars::Kind;
use epsilon_core::coeff::{CoeffField, CoeffInfo, PrimeField};
use epsilon_core::curve::{
    coeff_field_for, induction_check as run_induction, product_formula_check, random_corpus, upstairs_family, Caps,
    CorpusOptions, CoverFamily, GlobalAnalysis, GosReport,
};
use epsilon_core::epsilon::{eps_closed_form, eps_punctual, eps_tate_capped, gamma_psi, gamma_psi_symbolic};
use epsilon_core::gf::{field_of_size, FqElem};
use epsilon_core::io::{
    dt_form, gauss_sum_spec, parse, GlobalFormJson, GroupListJson, LaurentSeriesJson, LocalCharacterJson,
    SheafSpecJson, SpecListJson,
};
use epsilon_core::twisted::{default_field, twisted_suite, FiniteGroup, SuiteOptions};
use epsilon_core::{Error, Result};

/// A finished command: its verdict and the command-specific report.
pub struct Outcome {
    pub pass: bool,
    pub seed: Option<u64>,
    pub caps: Option<Caps>,
    pub report: Value,
}

fn outcome<T: Serialize>(pass: bool, seed: Option<u64>, caps: Option<Caps>, report: &T) -> Result<Outcome> {
    let report = serde_json::to_value(report).map_err(|e| Error::Internal(format!("report serialization: {e}")))?;
    Ok(Outcome { pass, seed, caps, report })
}

/// The common report shape: {command, pinned_ell, seed, caps, pass, report}.
pub fn envelope(command: &str, pinned_ell: Option<u64>, o: Outcome) -> Value {
    json!({
        "command": command,
        "pinned_ell": pinned_ell,
        "seed": o.seed,
        "caps": o.caps,
        "pass": o.pass,
        "report": o.report,
    })
}

fn read_json<T: for<'de> serde::Deserialize<'de>>(what: &str, path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{what}: cannot read {}: {e}", path.display())))?;
    parse(what, &text)
}

fn coeff_field(p: u32, orders: &[u64], d_max: u64, ell: Option<u64>) -> Result<CoeffField> {
    match ell {
        Some(l) => CoeffField::pinned(p, orders, d_max, l),
        None => CoeffField::setup(p, orders, d_max),
    }
}

#[derive(Serialize)]
struct ClosedFormComparison {
    value: u64,
    agrees: bool,
}

#[derive(Serialize)]
struct Complex {
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct EpsLocalReport {
    kind: &'static str,
    value: u64,
    a: i64,
    a_omega: i64,
    method: &'static str,
    ell: u64,
    coeff: CoeffInfo,
    swan: u32,
    /// The closed form, for wildly ramified characters where it applies.
    closed_form: Option<ClosedFormComparison>,
    complex: Option<Complex>,
}

pub fn eps_local(char_path: &Path, form_path: &Path, kind: &str, ell: Option<u64>, caps: Caps) -> Result<Outcome> {
    let cj: LocalCharacterJson = read_json("char", char_path)?;
    let fj: LaurentSeriesJson = read_json("form", form_path)?;
    let kind = Kind::parse(kind)?;
    let k = cj.field("char")?;
    let form = fj.build_form("form")?;
    if form.w.field() != &k {
        return Err(Error::InvalidInput("form.field: differs from char.field".into()));
    }
    let orders = [k.unit_order() as u64, cj.c_pi.order()];
    let cf = coeff_field(k.p(), &orders, 0, ell)?;
    let chi = cj.build(&cf, ell.is_some(), "char")?;
    let result = match kind {
        Kind::Punctual { .. } => eps_punctual(&cf, &[chi.c_pi()])?,
        _ => eps_tate_capped(&chi, &cf, &form, kind, caps.tate)?,
    };
    let wild = chi.swan() > 0 && !(k.p() == 2 && chi.swan() % 2 == 0);
    let closed_form = if wild && !matches!(kind, Kind::Punctual { .. }) {
        let c = eps_closed_form(&chi, &cf, &form)?;
        Some(ClosedFormComparison { value: c.value.value(), agrees: c.value == result.value })
    } else {
        None
    };
    let complex = result.symbolic.as_ref().map(|s| {
        let z = s.complex_embed(1);
        Complex { re: z.re, im: z.im }
    });
    let pass = closed_form.as_ref().is_none_or(|c| c.agrees);
    let report = EpsLocalReport {
        kind: kind.label(),
        value: result.value.value(),
        a: result.conductor_a,
        a_omega: result.conductor_a_omega,
        method: result.method.label(),
        ell: cf.ell(),
        coeff: cf.info(),
        swan: chi.swan(),
        closed_form,
        complex,
    };
    outcome(pass, None, Some(caps), &report)
}

#[derive(Serialize)]
struct EpsGlobalReport {
    d: i64,
    geometrically_constant: bool,
    ell: u64,
    coeff: CoeffInfo,
    /// c_0..c_d of det(1 − Frob·T | H¹_c).
    l_polynomial: Vec<u64>,
    /// det(Frob | RΓ_c)^{−1}.
    epsilon: u64,
    /// det(−Frob | RΓ_c)^{−1}.
    laumon: u64,
    gos: GosReport,
}

pub fn eps_global(spec_path: &Path, ell: Option<u64>, caps: Caps) -> Result<Outcome> {
    let spec = read_json::<SheafSpecJson>("spec", spec_path)?.build("spec")?;
    let analysis = GlobalAnalysis::new(&spec, caps)?;
    let cf = coeff_field_for(&analysis, &[], ell)?;
    let global = analysis.global_epsilon(&cf)?;
    let gos = analysis.verify_gos(&cf)?;
    let report = EpsGlobalReport {
        d: global.d,
        geometrically_constant: analysis.is_geometrically_constant(),
        ell: cf.ell(),
        coeff: cf.info(),
        l_polynomial: global.l_polynomial.iter().map(|c| c.value()).collect(),
        epsilon: global.epsilon.value(),
        laumon: global.laumon.value(),
        gos,
    };
    outcome(report.gos.pass, None, Some(caps), &report)
}

pub fn product_check(
    spec_path: Option<&Path>,
    omega_path: Option<&Path>,
    q: u64,
    ell: Option<u64>,
    second_ell: bool,
    caps: Caps,
) -> Result<Outcome> {
    let spec = match spec_path {
        Some(p) => read_json::<SheafSpecJson>("spec", p)?,
        None => {
            if q.is_multiple_of(2) {
                return Err(Error::Unsupported("the bundled Gauss-sum sheaf needs odd q".into()));
            }
            gauss_sum_spec(q)
        }
    }
    .build("spec")?;
    let omega = match omega_path {
        Some(p) => read_json::<GlobalFormJson>("omega", p)?,
        None => dt_form(spec.q()),
    }
    .build("omega")?;
    if omega.field() != spec.base() {
        return Err(Error::InvalidInput("omega.field: differs from spec.field".into()));
    }
    let report = product_formula_check(&spec, &omega, ell, second_ell, caps)?;
    outcome(report.pass, None, Some(caps), &report)
}

pub fn induction_check(
    cover_path: &Path,
    omega_path: &Path,
    spec_path: Option<&Path>,
    count: usize,
    ell: Option<u64>,
    caps: Caps,
) -> Result<Outcome> {
    let family: CoverFamily = read_json("cover", cover_path)?;
    let omega = read_json::<GlobalFormJson>("omega", omega_path)?.build("omega")?;
    let upstairs = match spec_path {
        Some(p) => read_json::<SpecListJson>("spec", p)?.build("spec")?,
        None => upstairs_family(omega.field(), family, count)?,
    };
    if let Some(i) = upstairs.iter().position(|s| s.base() != omega.field()) {
        return Err(Error::InvalidInput(format!("spec[{i}].field: differs from omega.field")));
    }
    let report = run_induction(family, &upstairs, &omega, ell, caps)?;
    outcome(report.pass, None, Some(caps), &report)
}

#[derive(Serialize)]
struct GaussReport {
    p: u32,
    q: u64,
    c: u32,
    ell: u64,
    /// γ_ψ(c) mod ℓ.
    value: u64,
    /// γ_ψ(c)/γ_ψ(1) mod ℓ, which must be the quadratic character of c.
    ratio: u64,
    quadratic_character: i64,
    ratio_matches: bool,
    complex: Complex,
    modulus: f64,
    sqrt_q: f64,
    modulus_matches: bool,
}

pub fn gauss(p: u32, q: u64, c: u32, ell: Option<u64>) -> Result<Outcome> {
    let k = field_of_size(q)?;
    if k.p() != p {
        return Err(Error::InvalidInput(format!("q = {q} is not a power of p = {p}")));
    }
    if c == 0 || c >= k.q() {
        return Err(Error::InvalidInput(format!("c must be a nonzero element of F_{q} (1..{q})")));
    }
    let cf = coeff_field(p, &[1], 0, ell)?;
    let x = FqElem(c);
    let value = gamma_psi(&k, &cf, x)?;
    let ratio = value / gamma_psi(&k, &cf, FqElem::ONE)?;
    let eta = if k.is_square(x) { 1 } else { -1 };
    let z = gamma_psi_symbolic(&k, x)?.complex_embed(1);
    let sqrt_q = (q as f64).sqrt();
    let report = GaussReport {
        p,
        q,
        c,
        ell: cf.ell(),
        value: value.value(),
        ratio: ratio.value(),
        quadratic_character: eta,
        ratio_matches: ratio == cf.elem(eta),
        complex: Complex { re: z.re, im: z.im },
        modulus: z.norm(),
        sqrt_q,
        modulus_matches: (z.norm() - sqrt_q).abs() < 1e-9,
    };
    outcome(report.ratio_matches && report.modulus_matches, None, None, &report)
}

pub fn twisted_check(groups_path: Option<&Path>, opts: SuiteOptions, ell: Option<u64>) -> Result<Outcome> {
    let groups = match groups_path {
        Some(p) => read_json::<GroupListJson>("groups", p)?.build("groups")?,
        None => FiniteGroup::small_groups(),
    };
    let lam = match ell {
        Some(l) => PrimeField::new(l)?,
        None => default_field(),
    };
    let report = twisted_suite(&groups, lam, &opts)?;
    outcome(report.pass, Some(opts.seed), None, &report)
}

#[derive(Serialize)]
struct CorpusEntry {
    index: usize,
    spec: SheafSpecJson,
    omega: GlobalFormJson,
    d: i64,
    ells: Vec<u64>,
    pass: bool,
}

#[derive(Serialize)]
struct CorpusReport {
    count: usize,
    passed: usize,
    cases: Vec<CorpusEntry>,
}

pub fn corpus(seed: u64, count: usize, ell: Option<u64>, second_ell: bool, caps: Caps) -> Result<Outcome> {
    let cases = random_corpus(seed, count, &CorpusOptions::default())?;
    let mut entries = Vec::with_capacity(cases.len());
    for case in &cases {
        let report = product_formula_check(&case.spec, &case.omega, ell, second_ell, caps)?;
        entries.push(CorpusEntry {
            index: case.index,
            spec: SheafSpecJson::of(&case.spec),
            omega: GlobalFormJson::of(&case.omega),
            d: report.d,
            ells: report.runs.iter().map(|r| r.ell).collect(),
            pass: report.pass,
        });
    }
    let passed = entries.iter().filter(|e| e.pass).count();
    let report = CorpusReport { count: entries.len(), passed, cases: entries };
    outcome(passed == report.count, Some(seed), Some(caps), &report)
}
