//! Pushforwards along the covers t = y^e and y^p − y = t, and extraction of
//! the induction constant λ_f(ω) at the branch point.
//!
//! For a rank-1 sheaf F upstairs, f_*F has the same cohomology as F, so its
//! global determinant is known.  Dividing by the local factors of f_*F away
//! from the branch point x₀ leaves ε_{x₀}(f_*F, ω); the induction formula says
//! that its ratio to ε_{x₀′}(F, f*ω) does not depend on F.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    contributing_points, form_at, form_order, histogram_sum, local_factor, local_factor_at, Caps, GlobalAnalysis,
    SheafSpec, TraceEvaluator,
};
use crate::arith::gcd;
use crate::chars::{Kind, LocalCharacter, WildDatum};
use crate::coeff::{CoeffElem, CoeffField, RootSum};
use crate::epsilon::gamma_psi;
use crate::error::{invalid, Error, Result};
use crate::gf::{embedding, poly, Field, FqElem, TowerEmbedding};
use crate::localfield::{closed_points_of, expand_at, ClosedPoint, PointData, RationalFunction};

/// The supported covers P¹_y → P¹_t.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum CoverFamily {
    /// t = y^e with p ∤ e: totally tamely ramified over 0 and ∞.
    Kummer { e: u32 },
    /// y^p − y = t: étale over A¹, totally wildly ramified over ∞.
    ArtinSchreier,
}

impl CoverFamily {
    pub fn label(&self) -> String {
        match self {
            CoverFamily::Kummer { e } => format!("t = y^{e}"),
            CoverFamily::ArtinSchreier => "y^p - y = t".into(),
        }
    }

    pub fn degree(&self, p: u32) -> u32 {
        match self {
            CoverFamily::Kummer { e } => *e,
            CoverFamily::ArtinSchreier => p,
        }
    }

    /// c(y) with t = c(y).
    pub fn map(&self, base: &Field) -> RationalFunction {
        let mut c = vec![FqElem::ZERO; self.degree(base.p()) as usize + 1];
        *c.last_mut().expect("degree ≥ 1") = FqElem::ONE;
        if *self == CoverFamily::ArtinSchreier {
            c[1] = base.neg(FqElem::ONE);
        }
        RationalFunction::polynomial(base, c)
    }

    /// The branch point x₀ where λ is extracted.
    pub fn branch_point(&self, base: &Field) -> ClosedPoint {
        match self {
            CoverFamily::Kummer { .. } => ClosedPoint::rational(base, FqElem::ZERO),
            CoverFamily::ArtinSchreier => ClosedPoint::Infinity,
        }
    }

    /// The unique point x₀′ above x₀ (same coordinates upstairs).
    pub fn point_above_branch(&self, base: &Field) -> ClosedPoint {
        self.branch_point(base)
    }

    fn validate(&self, base: &Field) -> Result<()> {
        if let CoverFamily::Kummer { e } = self {
            if *e < 2 || gcd(*e as u64, base.p() as u64) != 1 {
                return Err(Error::Unsupported(format!("Kummer cover of degree {e} in characteristic {}", base.p())));
            }
        }
        Ok(())
    }
}

/// f_*F for a cover in a supported family.
#[derive(Clone, Debug)]
pub struct PushforwardSpec {
    family: CoverFamily,
    cover: RationalFunction,
    upstairs: SheafSpec,
}

impl PushforwardSpec {
    pub fn new(family: CoverFamily, upstairs: SheafSpec) -> Result<PushforwardSpec> {
        family.validate(upstairs.base())?;
        let cover = family.map(upstairs.base());
        Ok(PushforwardSpec { family, cover, upstairs })
    }
    pub fn family(&self) -> CoverFamily {
        self.family
    }
    pub fn cover(&self) -> &RationalFunction {
        &self.cover
    }
    pub fn upstairs(&self) -> &SheafSpec {
        &self.upstairs
    }
    /// Generic rank of f_*F.
    pub fn rank(&self) -> u32 {
        self.family.degree(self.upstairs.base().p())
    }
}

/// Σ_{x ∈ P¹(F_{q^m})} Σ_{c(y) = x} t_m(y), with fibers found by exhaustive
/// root search over F_{q^m}.
pub fn trace_sum_push(push: &PushforwardSpec, m: u32, cap: u64) -> Result<RootSum> {
    let ev = TraceEvaluator::new(&push.upstairs, m, cap)?;
    let big = ev.field().clone();
    let emb = embedding(push.upstairs.base(), &big)?;
    let c = poly::map(push.cover.num(), |a| emb.apply(a));
    let len = big.q() as usize;
    // Counting sort of y by c(y): fiber(x) = order[start[x]..start[x + 1]].
    let image: Vec<u32> = (0..len).map(|y| poly::eval(&big, &c, FqElem(y as u32)).0).collect();
    let mut start = vec![0usize; len + 1];
    for &x in &image {
        start[x as usize + 1] += 1;
    }
    for i in 0..len {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut order = vec![0u32; len];
    for (y, &x) in image.iter().enumerate() {
        order[fill[x as usize]] = y as u32;
        fill[x as usize] += 1;
    }
    let (p, n) = ev.shape();
    let values = |range: std::ops::Range<usize>| {
        range.flat_map(|x| order[start[x]..start[x + 1]].iter().filter_map(|&y| ev.value(FqElem(y))))
    };
    let mut total = histogram_sum(p, n, len, &values);
    // Both covers send ∞ to ∞ and nothing else.
    if let Some((a, b)) = ev.value_at_infinity() {
        total.add_term(a as i64, b as i64, 1);
    }
    Ok(total)
}

/// The closed point of P¹ over the base containing z ∈ F_{q^d}.
pub fn closed_point_of(emb: &TowerEmbedding, z: FqElem) -> Result<ClosedPoint> {
    let (base, big) = (emb.from(), emb.to());
    let mut orbit = vec![z];
    loop {
        let next = big.frobenius(*orbit.last().expect("nonempty"), base.n());
        if next == z {
            break;
        }
        orbit.push(next);
    }
    let mut minpoly = vec![FqElem::ONE];
    for &r in &orbit {
        minpoly = poly::mul(big, &minpoly, &[big.neg(r), FqElem::ONE]);
    }
    let coeffs = minpoly
        .iter()
        .map(|&c| emb.preimage(c).ok_or_else(|| Error::Internal("minimal polynomial not over the base".into())))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClosedPoint::Finite(coeffs))
}

/// The image of an upstairs closed point under a polynomial cover.
fn image_point(cover: &RationalFunction, y: &ClosedPoint) -> Result<ClosedPoint> {
    let base = cover.field();
    match y {
        ClosedPoint::Infinity => Ok(ClosedPoint::Infinity),
        ClosedPoint::Finite(_) => {
            let pd = PointData::new(base, y)?;
            let alpha = pd.alpha.expect("finite point has a root");
            match cover.eval(&pd.embed, alpha) {
                None => Ok(ClosedPoint::Infinity),
                Some(z) => {
                    let emb = embedding(base, &pd.field)?;
                    closed_point_of(&emb, z)
                }
            }
        }
    }
}

/// One upstairs sheaf's contribution to the induction experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InductionCase {
    pub label: String,
    /// L-degree of F (and of f_*F).
    pub d: i64,
    /// ε_{x₀}(f_*F, ω) recovered from the global side.
    pub residual: u64,
    /// ε_{x₀′}(F, f*ω).
    pub eps_upstairs: u64,
    /// a(T′, F, f*ω).
    pub a_upstairs_omega: i64,
    /// a(T, f_*F, ω) from the Grothendieck–Ogg–Shafarevich formula.
    pub a_downstairs_omega: i64,
    pub lambda: u64,
    pub conductor_identity: bool,
}

/// A closed-form prediction of λ_f(ω).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaPrediction {
    pub formula: String,
    pub value: u64,
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InductionReport {
    pub family: CoverFamily,
    pub q: u64,
    pub ell: u64,
    pub branch_point: String,
    pub cases: Vec<InductionCase>,
    /// The common value of λ, if all cases agree.
    pub lambda: Option<u64>,
    pub independent: bool,
    pub conductor_identity: bool,
    pub prediction: Option<LambdaPrediction>,
    pub pass: bool,
}

/// Deterministic upstairs sheaves for the induction experiment: the constant
/// sheaf, then tame Kummer sheaves K{P(y)/y^{deg P}} (Kummer covers, so the
/// sheaf stays unramified over ∞) or K{P(y)} (Artin–Schreier covers) for
/// distinct monic irreducible P of degree ≤ 2, then one sheaf with a wild
/// part at a point of A¹ − {0}.  Distinct supports make the characters distinct.
pub fn upstairs_family(base: &Field, family: CoverFamily, count: usize) -> Result<Vec<SheafSpec>> {
    let qm1 = base.unit_order() as i64;
    let t = RationalFunction::t(base);
    let origin = ClosedPoint::rational(base, FqElem::ZERO);
    let mut points = Vec::new();
    for d in 1..=2u32 {
        let q = base.q() as u64;
        for index in 0..q.pow(d) {
            let mut m: Vec<FqElem> = (0..d).map(|i| FqElem((index / q.pow(i) % q) as u32)).collect();
            m.push(FqElem::ONE);
            if let [(pt, 1)] = closed_points_of(base, &m)?.as_slice() {
                if pt.degree() == d && *pt != origin {
                    points.push(pt.clone());
                }
            }
        }
    }
    let local = |pt: &ClosedPoint| -> Result<RationalFunction> {
        let ClosedPoint::Finite(m) = pt else { unreachable!("finite points only") };
        let pm = RationalFunction::polynomial(base, m.clone());
        match family {
            CoverFamily::Kummer { .. } => pm.div(&t.pow(pt.degree() as i64)?),
            CoverFamily::ArtinSchreier => Ok(pm),
        }
    };
    let mut out = vec![SheafSpec::trivial(base)];
    let tame_count = count.saturating_sub(2).min(points.len());
    for (i, pt) in points.iter().take(tame_count).enumerate() {
        let e = 1 + i as i64 % (qm1 - 1).max(1);
        out.push(SheafSpec::extended_by_zero(base, None, vec![(local(pt)?, e)], Vec::new())?);
    }
    if out.len() < count {
        let ClosedPoint::Finite(m) = &points[0] else { unreachable!("finite points only") };
        let f = RationalFunction::polynomial(base, m.clone()).inv()?;
        out.push(SheafSpec::extended_by_zero(base, Some(f), vec![(local(&points[0])?, 1)], Vec::new())?);
    }
    Ok(out)
}

fn sign(cf: &CoeffField, exponent: i64) -> CoeffElem {
    cf.elem(if exponent.rem_euclid(2) == 0 { 1 } else { -1 })
}

/// ∏_j ε(χ₀κ^j, ω) at ∞ for t = y^e, where χ₀ is the unramified character with
/// χ₀∘N = F|_{∞′} and κ runs over the characters trivial on norms from
/// F_q((1/y)): κ on units has order e, κ(π) = κ((−1)^{e−1})^{−1}.
fn kummer_infinity_factor(
    e: u32,
    base: &Field,
    chi0_pi: CoeffElem,
    zero_kind: Kind,
    omega: &RationalFunction,
    cf: &CoeffField,
    tate_cap: u64,
) -> Result<(CoeffElem, i64)> {
    let qm1 = base.unit_order() as u64;
    if !qm1.is_multiple_of(e as u64) {
        return Err(Error::Unsupported(format!("local factor of f_*F at ∞ needs {e} | q − 1")));
    }
    let pd = PointData::new(base, &ClosedPoint::Infinity)?;
    let w = form_at(omega, &pd, 2)?;
    let norm_sign = if (e - 1).is_multiple_of(2) { FqElem::ONE } else { base.neg(FqElem::ONE) };
    let mut value = cf.one();
    let mut a = 0;
    for j in 0..e as u64 {
        let tame = (j * (qm1 / e as u64)) as i64;
        let kappa_pi = cf.kummer_chi(base, tame, norm_sign)?.inv();
        let chi = LocalCharacter::new(&pd.field, chi0_pi * kappa_pi, tame, WildDatum::zero())?;
        let kind = if j == 0 { zero_kind } else { Kind::ExtensionByZero };
        let r = local_factor(&chi, cf, &w, kind, tate_cap)?;
        value *= r.value;
        a += r.conductor_a;
    }
    Ok((value, a))
}

/// δ_f(α) = det(f_*Λ)(α) for t = y^e at 0: ∏_j κ^j(α).
fn kummer_det(e: u32, base: &Field, alpha: &crate::localfield::LaurentSeries, cf: &CoeffField) -> Result<CoeffElem> {
    let qm1 = base.unit_order() as u64;
    let norm_sign = if (e - 1).is_multiple_of(2) { FqElem::ONE } else { base.neg(FqElem::ONE) };
    let mut value = cf.one();
    for j in 0..e as u64 {
        let tame = (j * (qm1 / e as u64)) as i64;
        let kappa = LocalCharacter::new(alpha.field(), cf.kummer_chi(base, tame, norm_sign)?.inv(), tame, WildDatum::zero())?;
        value *= kappa.eval(cf, alpha)?;
    }
    Ok(value)
}

/// λ_f(dπ) from the special-cover computation for t = y^e, D = {∞}, g = 0:
/// χ_cyc^{e/2} γ_ψ(−e) for e even and χ_cyc^{(e−1)/2} for e odd, times δ_f(ω/dπ).
fn kummer_prediction(e: u32, base: &Field, omega: &RationalFunction, cf: &CoeffField) -> Result<(String, CoeffElem)> {
    let q = base.q() as u64;
    let x0 = PointData::new(base, &ClosedPoint::rational(base, FqElem::ZERO))?;
    let alpha = expand_at(omega, &x0, 2)?;
    let det = kummer_det(e, base, &alpha, cf)?;
    if e.is_multiple_of(2) {
        let g = gamma_psi(base, cf, base.from_int(-(e as i64)))?;
        Ok((format!("q^-{} * gamma_psi(-{e}) * delta_f(omega/dt)", e / 2), cf.q_pow(q, -(e as i64 / 2)) * g * det))
    } else {
        Ok((format!("q^-{} * delta_f(omega/dt)", (e - 1) / 2), cf.q_pow(q, -((e as i64 - 1) / 2)) * det))
    }
}

/// Extracts λ_f(ω) at the branch point from each upstairs sheaf and checks
/// that the values agree, that the conductor identity holds, and (for Kummer
/// covers) that λ matches the closed-form prediction.
pub fn induction_check(
    family: CoverFamily,
    upstairs: &[SheafSpec],
    omega: &RationalFunction,
    ell: Option<u64>,
    caps: Caps,
) -> Result<InductionReport> {
    let base = match upstairs.first() {
        Some(s) => s.base().clone(),
        None => return invalid("no upstairs sheaves"),
    };
    family.validate(&base)?;
    if omega.is_zero() {
        return invalid("the global form is zero");
    }
    let cover = family.map(&base);
    let rank = family.degree(base.p()) as i64;
    let omega_up = omega.compose(&cover).mul(&cover.derivative());
    let x0 = family.branch_point(&base);
    let y0 = family.point_above_branch(&base);
    let q = base.q() as u64;

    let analyses: Vec<GlobalAnalysis> = upstairs.iter().map(|s| GlobalAnalysis::new(s, caps)).collect::<Result<_>>()?;
    let mut point_sets = Vec::new();
    let mut orders = BTreeSet::new();
    let mut d_max = 1;
    for an in &analyses {
        let mut pts: BTreeSet<ClosedPoint> = contributing_points(an, &omega_up)?.into_iter().collect();
        pts.insert(y0.clone());
        if matches!(family, CoverFamily::Kummer { .. }) {
            pts.insert(ClosedPoint::Infinity);
        }
        let images: Vec<ClosedPoint> = pts.iter().map(|y| image_point(&cover, y)).collect::<Result<_>>()?;
        let all: Vec<ClosedPoint> = pts.iter().chain(images.iter()).cloned().collect();
        orders.extend(an.orders(&all));
        d_max = d_max.max(an.d());
        point_sets.push(pts);
    }
    let orders: Vec<u64> = orders.into_iter().collect();
    let cf = match ell {
        Some(l) => CoeffField::pinned(base.p(), &orders, d_max as u64, l)?,
        None => CoeffField::setup(base.p(), &orders, d_max as u64)?,
    };

    let mut cases = Vec::new();
    for (an, pts) in analyses.iter().zip(point_sets) {
        let spec = an.spec();
        let glob = an.global_epsilon(&cf)?.epsilon;
        let mut by_x: BTreeMap<ClosedPoint, Vec<(super::LocalStructure, crate::epsilon::EpsilonResult)>> =
            BTreeMap::new();
        for y in &pts {
            let x = image_point(&cover, y)?;
            by_x.entry(x).or_default().push(local_factor_at(spec, y, &omega_up, &cf, caps.tate)?);
        }
        let mut prod = cf.one();
        let mut sum_deg_a = 0i64;
        for (x, ys) in &by_x {
            if *x == x0 {
                continue;
            }
            if let (CoverFamily::Kummer { e }, ClosedPoint::Infinity) = (family, x) {
                let (s, _) = &ys[0];
                if s.is_ramified() {
                    return Err(Error::Unsupported("upstairs sheaf ramified over ∞ of a Kummer cover".into()));
                }
                let (v, a) =
                    kummer_infinity_factor(e, &base, s.c_pi(&cf)?, s.kind, omega, &cf, caps.tate)?;
                prod *= v;
                sum_deg_a += a;
                continue;
            }
            let dx = x.degree() as i64;
            let mut a_x = 0;
            let mut eps = cf.one();
            for (s, r) in ys {
                let f = s.degree() as i64 / dx;
                a_x += f * r.conductor_a;
                eps *= r.value * sign(&cf, (f - 1) * r.conductor_a_omega);
            }
            prod *= eps * sign(&cf, (dx - 1) * a_x);
            sum_deg_a += dx * a_x;
        }
        let residual = glob / (cf.q_pow(q, rank) * prod);
        let (s0, r0) = by_x
            .get(&x0)
            .and_then(|v| v.first())
            .ok_or_else(|| Error::Internal("no point above the branch point".into()))?;
        let lambda = residual / r0.value;
        let a_down = an.d() + 2 * rank - sum_deg_a + rank * form_order(omega, &x0)?;
        cases.push(InductionCase {
            label: describe(spec),
            d: an.d(),
            residual: residual.value(),
            eps_upstairs: r0.value.value(),
            a_upstairs_omega: r0.conductor_a_omega,
            a_downstairs_omega: a_down,
            lambda: lambda.value(),
            conductor_identity: a_down == r0.conductor_a_omega && s0.degree() == 1,
        });
    }
    let independent = cases.windows(2).all(|w| w[0].lambda == w[1].lambda);
    let lambda = independent.then(|| cases[0].lambda);
    let conductor_identity = cases.iter().all(|c| c.conductor_identity);
    let prediction = match family {
        CoverFamily::Kummer { e } if (base.unit_order() as u64).is_multiple_of(e as u64) && (e % 2 == 1 || base.p() != 2) => {
            let (formula, value) = kummer_prediction(e, &base, omega, &cf)?;
            Some(LambdaPrediction { formula, value: value.value(), matches: lambda == Some(value.value()) })
        }
        _ => None,
    };
    let pass = independent && conductor_identity && prediction.as_ref().is_none_or(|p| p.matches);
    Ok(InductionReport {
        family,
        q,
        ell: cf.ell(),
        branch_point: x0.label(),
        cases,
        lambda,
        independent,
        conductor_identity,
        prediction,
        pass,
    })
}

fn describe(spec: &SheafSpec) -> String {
    let mut parts = Vec::new();
    if let Some(f) = spec.f() {
        parts.push(format!("L{{{f:?}}}"));
    }
    for (g, e) in spec.kummer() {
        parts.push(format!("K^{e}{{{g:?}}}"));
    }
    if parts.is_empty() {
        parts.push("trivial".into());
    }
    parts.join(" * ")
}
