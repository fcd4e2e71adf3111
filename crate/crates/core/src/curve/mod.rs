//! Rank-1 Artin–Schreier–Kummer sheaves on P¹ over F_q.
//!
//! A sheaf is given by an Artin–Schreier datum f, Kummer data (gᵢ, eᵢ) and a
//! zero set S.  On U = P¹ − S − {special points where it is unramified and
//! lisse anyway} its trace at x ∈ U(F_{q^m}) is
//!
//! t_m(x) = ψ(Tr f(x)) · ∏ ζ_{q−1}^{eᵢ · log N gᵢ(x)}.
//!
//! Local restrictions come from local symbols (the polar part of f for the
//! wild part, the tame symbol for the Kummer part).  Global determinants come
//! from point counts and Newton's identities.

mod corpus;
mod induction;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::rem;
use crate::chars::{as_reduce, Kind, LocalCharacter, WildDatum};
use crate::coeff::{CoeffElem, CoeffField, RootSum};
use crate::epsilon::{eps_closed_form, eps_tate_capped, EpsilonResult, Method, TATE_CAP};
use crate::error::{invalid, Error, Result};
use crate::gf::{embedding, extension, poly, Field, FqElem, TowerEmbedding};
use crate::localfield::{expand_at, ord_at, ClosedPoint, Form, PointData, RationalFunction};

pub use corpus::{random_corpus, random_form, random_spec, CorpusCase, CorpusOptions};
pub use induction::{
    closed_point_of, induction_check, trace_sum_push, upstairs_family, CoverFamily, InductionCase, InductionReport,
    LambdaPrediction, PushforwardSpec,
};

/// Default bound on the number of points enumerated by a trace sum.
pub const TRACE_CAP: u64 = 1 << 24;

/// Number of field elements handled per parallel work item.
const TRACE_CHUNK: usize = 1 << 12;

/// Dense per-chunk histograms are used up to this many (ψ, ζ) cells.
const DENSE_CELLS: usize = 1 << 12;

/// Summation bounds for global computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Caps {
    /// Largest field F_{q^m} whose points are enumerated.
    pub trace: u64,
    /// Largest Tate sum evaluated for a local factor.
    pub tate: u64,
}

impl Default for Caps {
    fn default() -> Caps {
        Caps { trace: TRACE_CAP, tate: TATE_CAP }
    }
}

impl Caps {
    /// The same bound for both kinds of sums.
    pub fn uniform(cap: u64) -> Caps {
        Caps { trace: cap, tate: cap }
    }
}

/// L_ψ{f} ⊗ ⊗ᵢ K_{χ^{eᵢ}}{gᵢ}, extended by zero at S and by j_* elsewhere.
#[derive(Clone, Debug)]
pub struct SheafSpec {
    base: Field,
    f: Option<RationalFunction>,
    kummer: Vec<(RationalFunction, u64)>,
    zero_set: Vec<ClosedPoint>,
}

impl SheafSpec {
    /// Validated constructor: every point where the sheaf ramifies must lie in S.
    pub fn new(
        base: &Field,
        f: Option<RationalFunction>,
        kummer: Vec<(RationalFunction, i64)>,
        zero_set: Vec<ClosedPoint>,
    ) -> Result<SheafSpec> {
        let spec = SheafSpec::normalized(base, f, kummer, zero_set)?;
        for x in spec.special_points()? {
            let s = spec.local_structure(&x)?;
            if s.is_ramified() && s.kind != Kind::ExtensionByZero {
                return invalid(format!("the sheaf ramifies at {} but the point is not in the zero set", x.label()));
            }
        }
        Ok(spec)
    }

    /// The sheaf extended by zero exactly at its ramification points and at `extra`.
    pub fn extended_by_zero(
        base: &Field,
        f: Option<RationalFunction>,
        kummer: Vec<(RationalFunction, i64)>,
        extra: Vec<ClosedPoint>,
    ) -> Result<SheafSpec> {
        let mut spec = SheafSpec::normalized(base, f, kummer, extra)?;
        let mut zs = spec.zero_set.clone();
        for x in spec.special_points()? {
            if spec.local_structure(&x)?.is_ramified() {
                zs.push(x);
            }
        }
        zs.sort();
        zs.dedup();
        spec.zero_set = zs;
        Ok(spec)
    }

    /// The constant sheaf Λ on P¹.
    pub fn trivial(base: &Field) -> SheafSpec {
        SheafSpec { base: base.clone(), f: None, kummer: Vec::new(), zero_set: Vec::new() }
    }

    fn normalized(
        base: &Field,
        f: Option<RationalFunction>,
        kummer: Vec<(RationalFunction, i64)>,
        zero_set: Vec<ClosedPoint>,
    ) -> Result<SheafSpec> {
        let qm1 = base.unit_order() as u64;
        let same = |r: &RationalFunction| r.field().desc() == base.desc();
        if f.as_ref().is_some_and(|f| !same(f)) || kummer.iter().any(|(g, _)| !same(g)) {
            return invalid("sheaf data live over a different base field");
        }
        let f = f.filter(|f| !f.is_zero());
        let mut kum = Vec::new();
        for (g, e) in kummer {
            if g.is_zero() {
                return invalid("Kummer datum g = 0");
            }
            let e = rem(e, qm1);
            if e != 0 {
                kum.push((g, e));
            }
        }
        let mut zs = zero_set;
        zs.sort();
        zs.dedup();
        for x in &zs {
            PointData::new(base, x)?;
        }
        Ok(SheafSpec { base: base.clone(), f, kummer: kum, zero_set: zs })
    }

    pub fn base(&self) -> &Field {
        &self.base
    }
    pub fn f(&self) -> Option<&RationalFunction> {
        self.f.as_ref()
    }
    pub fn kummer(&self) -> &[(RationalFunction, u64)] {
        &self.kummer
    }
    pub fn zero_set(&self) -> &[ClosedPoint] {
        &self.zero_set
    }
    pub fn q(&self) -> u64 {
        self.base.q() as u64
    }

    pub fn in_zero_set(&self, x: &ClosedPoint) -> bool {
        self.zero_set.binary_search(x).is_ok()
    }

    /// Poles of f, zeros and poles of the gᵢ, and S: the only points where the
    /// generic trace formula does not apply.
    pub fn special_points(&self) -> Result<Vec<ClosedPoint>> {
        let mut pts: BTreeSet<ClosedPoint> = self.zero_set.iter().cloned().collect();
        if let Some(f) = &self.f {
            for (x, m) in f.divisor()? {
                if m < 0 {
                    pts.insert(x);
                }
            }
        }
        for (g, _) in &self.kummer {
            for (x, _) in g.divisor()? {
                pts.insert(x);
            }
        }
        Ok(pts.into_iter().collect())
    }

    /// The restriction to the local field at x, described independently of ℓ.
    pub fn local_structure(&self, x: &ClosedPoint) -> Result<LocalStructure> {
        let data = PointData::new(&self.base, x)?;
        let k = data.field.clone();
        let qm1 = self.base.unit_order() as u64;
        let big_m1 = k.unit_order() as u64;
        let mut wild = WildDatum::zero();
        let mut psi_exp = 0u32;
        if let Some(f) = &self.f {
            let s = expand_at(f, &data, 1)?;
            wild = as_reduce(&k, &WildDatum::polar_part(&s))?;
            psi_exp = k.trace_fp(s.coeff(0)?);
        }
        let mut tame = 0u64;
        let mut zeta_exp = 0u64;
        let (t_inv, step) = (data.embed.twist_inverse(), data.embed.step());
        for (g, e) in &self.kummer {
            let s = expand_at(g, &data, 0)?;
            let m = s.valuation().expect("nonzero expansion");
            let mut lead = s.leading().expect("nonzero expansion");
            if m.rem_euclid(2) == 1 {
                lead = k.neg(lead);
            }
            // Tame symbol (g, π)_x = (−1)^m (g/π^m)(x); on units z the symbol
            // (g, z)_x = z(x)^{−m}.
            zeta_exp = (zeta_exp + e * data.embed.norm_log(lead)) % qm1;
            let small = (rem(-m, qm1) as u128 * *e as u128 % qm1 as u128 * t_inv as u128 % qm1 as u128) as u64;
            tame = ((tame as u128 + small as u128 * step as u128) % big_m1 as u128) as u64;
        }
        let kind = if self.in_zero_set(x) { Kind::ExtensionByZero } else { Kind::MiddleExtension };
        Ok(LocalStructure { data, wild, tame_e: tame, symbol: (psi_exp, zeta_exp), kind })
    }

    /// (χ_x, kind) for a given coefficient field.
    pub fn local_character_at(&self, cf: &CoeffField, x: &ClosedPoint) -> Result<(LocalCharacter, Kind)> {
        let s = self.local_structure(x)?;
        Ok((s.character(cf)?, s.kind))
    }
}

/// The local character at a closed point in ℓ-free form.
#[derive(Clone, Debug)]
pub struct LocalStructure {
    pub data: PointData,
    /// Reduced Artin–Schreier datum.
    pub wild: WildDatum,
    /// Tame exponent on F_{q_x}^×.
    pub tame_e: u64,
    /// χ_x(π) = ψ(a) ζ_{q−1}^b for symbol = (a, b).
    pub symbol: (u32, u64),
    pub kind: Kind,
}

impl LocalStructure {
    pub fn point(&self) -> &ClosedPoint {
        &self.data.point
    }
    pub fn degree(&self) -> u32 {
        self.data.degree()
    }
    pub fn is_ramified(&self) -> bool {
        self.tame_e != 0 || !self.wild.is_zero()
    }
    pub fn swan(&self) -> u32 {
        self.wild.pole_order() as u32
    }
    /// a(x, F) without a form.
    pub fn artin_a(&self) -> i64 {
        if self.kind == Kind::ExtensionByZero || self.is_ramified() {
            1 + self.swan() as i64
        } else {
            0
        }
    }
    pub fn c_pi(&self, cf: &CoeffField) -> Result<CoeffElem> {
        let qm1 = self.data.embed.from().unit_order() as u64;
        Ok(cf.psi(self.symbol.0 as i64) * cf.zeta(qm1)?.pow(self.symbol.1 as i64))
    }
    pub fn character(&self, cf: &CoeffField) -> Result<LocalCharacter> {
        LocalCharacter::new(&self.data.field, self.c_pi(cf)?, self.tame_e as i64, self.wild.clone())
    }
}

/// Evaluates t_m on P¹(F_{q^m}) as (ψ-exponent, ζ_{q−1}-exponent) pairs.
pub(crate) struct TraceEvaluator {
    big: Field,
    emb: Arc<TowerEmbedding>,
    p: u32,
    qm1: u64,
    f: Option<(poly::Poly, poly::Poly)>,
    kummer: Vec<(poly::Poly, poly::Poly, u64)>,
    special: HashMap<FqElem, Option<(u32, u64)>>,
    infinity: Option<(u32, u64)>,
}

impl TraceEvaluator {
    pub(crate) fn new(spec: &SheafSpec, m: u32, cap: u64) -> Result<TraceEvaluator> {
        let base = &spec.base;
        let size = (base.q() as u64).checked_pow(m).unwrap_or(u64::MAX);
        if size > cap {
            return Err(Error::CapExceeded { what: format!("points of P¹ over F_{{q^{m}}}"), needed: size, cap });
        }
        let big = extension(base, m)?;
        let emb = embedding(base, &big)?;
        let lift = |p: &poly::Poly| poly::map(p, |c| emb.apply(c));
        let f = spec.f.as_ref().map(|f| (lift(f.num()), lift(f.den())));
        let kummer = spec.kummer.iter().map(|(g, e)| (lift(g.num()), lift(g.den()), *e)).collect();
        let p = base.p();
        let qm1 = base.unit_order() as u64;
        let power = |sym: (u32, u64), k: u64| ((sym.0 as u64 * k % p as u64) as u32, sym.1 * k % qm1);
        let mut special = HashMap::new();
        let mut infinity = None;
        let mut infinity_special = false;
        for x in spec.special_points()? {
            let d = x.degree();
            if !m.is_multiple_of(d) {
                continue;
            }
            let s = spec.local_structure(&x)?;
            let value = (s.kind != Kind::ExtensionByZero).then(|| power(s.symbol, (m / d) as u64));
            match (&x, s.data.alpha) {
                (ClosedPoint::Infinity, _) => {
                    infinity_special = true;
                    infinity = value;
                }
                (_, Some(alpha)) => {
                    let to_big = embedding(&s.data.field, &big)?;
                    let a = to_big.apply(alpha);
                    for i in 0..d {
                        special.insert(big.frobenius(a, i * base.n()), value);
                    }
                }
                _ => return Err(Error::Internal("finite point without a root".into())),
            }
        }
        let mut ev = TraceEvaluator { big, emb, p, qm1, f, kummer, special, infinity: None };
        ev.infinity = if infinity_special { infinity } else { Some(ev.generic_at_infinity(spec, m)) };
        Ok(ev)
    }

    fn generic_at_infinity(&self, spec: &SheafSpec, m: u32) -> (u32, u64) {
        let base = &spec.base;
        let a = spec
            .f
            .as_ref()
            .map(|f| base.trace_fp(f.eval_infinity().expect("∞ is not a pole")) as u64 * m as u64 % self.p as u64)
            .unwrap_or(0) as u32;
        let mut b = 0u64;
        for (g, e) in &spec.kummer {
            let v = g.eval_infinity().expect("∞ is not a zero or pole");
            b = (b + e * (base.log_unit(v) as u64 * m as u64 % self.qm1)) % self.qm1;
        }
        (a, b)
    }

    fn generic(&self, x: FqElem) -> (u32, u64) {
        let big = &self.big;
        let at = |n: &poly::Poly, d: &poly::Poly| big.div(poly::eval(big, n, x), poly::eval(big, d, x));
        let a = self.f.as_ref().map(|(n, d)| big.trace_fp(at(n, d))).unwrap_or(0);
        let mut b = 0u64;
        for (n, d, e) in &self.kummer {
            b = (b + e * self.emb.norm_log(at(n, d))) % self.qm1;
        }
        (a, b)
    }

    /// t_m(x) for x ∈ F_{q^m}, `None` on S.
    pub(crate) fn value(&self, x: FqElem) -> Option<(u32, u64)> {
        match self.special.get(&x) {
            Some(v) => *v,
            None => Some(self.generic(x)),
        }
    }

    pub(crate) fn value_at_infinity(&self) -> Option<(u32, u64)> {
        self.infinity
    }

    pub(crate) fn field(&self) -> &Field {
        &self.big
    }

    pub(crate) fn shape(&self) -> (u32, u64) {
        (self.p, self.qm1)
    }

    /// Σ_{x ∈ P¹(F_{q^m})} t_m(x) as a root sum.
    pub(crate) fn sum(&self) -> RootSum {
        let values = |range: std::ops::Range<usize>| range.filter_map(|i| self.value(FqElem(i as u32)));
        let mut total = histogram_sum(self.p, self.qm1, self.big.q() as usize, &values);
        if let Some((a, b)) = self.infinity {
            total.add_term(a as i64, b as i64, 1);
        }
        total
    }
}

/// Sums the values produced on [0, len) in parallel chunks; the integer
/// histogram makes the result independent of the thread count.
pub(crate) fn histogram_sum<I>(p: u32, n: u64, len: usize, values: &(dyn Fn(std::ops::Range<usize>) -> I + Sync)) -> RootSum
where
    I: Iterator<Item = (u32, u64)>,
{
    let cells = p as usize * n as usize;
    let chunks = len.div_ceil(TRACE_CHUNK);
    let mut total = RootSum::new(p, n);
    if cells <= DENSE_CELLS {
        let hist = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut h = vec![0i64; cells];
                for (a, b) in values(c * TRACE_CHUNK..((c + 1) * TRACE_CHUNK).min(len)) {
                    h[a as usize * n as usize + b as usize] += 1;
                }
                h
            })
            .reduce(
                || vec![0i64; cells],
                |mut x, y| {
                    x.iter_mut().zip(y).for_each(|(u, v)| *u += v);
                    x
                },
            );
        total = RootSum::from_histogram(p, n, &hist);
    } else {
        let maps: Vec<BTreeMap<(u32, u64), i64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut h = BTreeMap::new();
                for key in values(c * TRACE_CHUNK..((c + 1) * TRACE_CHUNK).min(len)) {
                    *h.entry(key).or_insert(0) += 1;
                }
                h
            })
            .collect();
        for h in maps {
            for ((a, b), c) in h {
                total.add_term(a as i64, b as i64, c);
            }
        }
    }
    total
}

/// Σ_{x ∈ U(F_{q^m})} t_m(x).
pub fn trace_sum(spec: &SheafSpec, m: u32) -> Result<RootSum> {
    trace_sum_capped(spec, m, TRACE_CAP)
}

pub fn trace_sum_capped(spec: &SheafSpec, m: u32, cap: u64) -> Result<RootSum> {
    if m == 0 {
        return invalid("trace sums start at m = 1");
    }
    Ok(TraceEvaluator::new(spec, m, cap)?.sum())
}

/// d = Σ_x deg(x)·a_x − rank·(2 − 2g) for a rank-1 sheaf on P¹.
pub fn gos_degree(spec: &SheafSpec) -> Result<i64> {
    let mut d = -2;
    for x in spec.special_points()? {
        let s = spec.local_structure(&x)?;
        d += s.degree() as i64 * s.artin_a();
    }
    if d < 0 && !is_geometrically_constant(spec)? {
        return Err(Error::Internal(format!("negative L-degree {d}: inconsistent sheaf data")));
    }
    Ok(d)
}

/// True when the sheaf is unramified everywhere on P¹ (hence geometrically constant).
pub fn is_geometrically_constant(spec: &SheafSpec) -> Result<bool> {
    for x in spec.special_points()? {
        if spec.local_structure(&x)?.is_ramified() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Newton's identities: coefficients c_0..c_d of ∏(1 − λT) from power sums
/// s_1..s_d of the λ's.
pub fn newton_coefficients(cf: &CoeffField, s: &[CoeffElem]) -> Result<Vec<CoeffElem>> {
    let d = s.len();
    if d as u64 >= cf.ell() {
        return Err(Error::Unsupported(format!("Newton's identities need ℓ > {d}")));
    }
    let mut c = vec![cf.one()];
    for k in 1..=d {
        let mut acc = cf.elem(0);
        for i in 1..=k {
            acc += s[i - 1] * c[k - i];
        }
        c.push(-(acc / cf.elem(k as i64)));
    }
    Ok(c)
}

/// The power sum s_{d+1} forced by a degree-d polynomial.
pub fn newton_next_power_sum(c: &[CoeffElem], s: &[CoeffElem]) -> CoeffElem {
    let d = c.len() - 1;
    let mut acc = c[0].zero_like();
    for i in 1..=d {
        acc += s[i - 1] * c[d + 1 - i];
    }
    -acc
}

/// Everything about a sheaf that does not depend on ℓ: local structures at the
/// special points, the L-degree and the point counts.
#[derive(Clone, Debug)]
pub struct GlobalAnalysis {
    spec: SheafSpec,
    structures: Vec<LocalStructure>,
    d: i64,
    constant: bool,
    traces: Vec<RootSum>,
    caps: Caps,
}

/// Outcome of the L-degree consistency check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GosReport {
    pub d: i64,
    pub ell: u64,
    pub leading_nonzero: bool,
    /// The power sum of index d + 1 forced by the polynomial (c_d ≠ 0 case) or
    /// by the eigenvalue model (geometrically constant case).
    pub predicted: u64,
    pub observed: u64,
    pub pass: bool,
}

/// det(Frob | RΓ_c)^{−1} and det(−Frob | RΓ_c)^{−1}.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalEpsilon {
    pub d: i64,
    pub l_polynomial: Vec<CoeffElem>,
    pub epsilon: CoeffElem,
    pub laumon: CoeffElem,
}

impl GlobalAnalysis {
    pub fn new(spec: &SheafSpec, caps: Caps) -> Result<GlobalAnalysis> {
        let structures: Vec<LocalStructure> =
            spec.special_points()?.iter().map(|x| spec.local_structure(x)).collect::<Result<_>>()?;
        let constant = structures.iter().all(|s| !s.is_ramified());
        let d = structures.iter().map(|s| s.degree() as i64 * s.artin_a()).sum::<i64>() - 2;
        if d < 0 && !constant {
            return Err(Error::Internal(format!("negative L-degree {d}: inconsistent sheaf data")));
        }
        let needed = if constant { 0 } else { d.max(0) as u32 };
        let traces = (1..=needed).map(|m| trace_sum_capped(spec, m, caps.trace)).collect::<Result<_>>()?;
        Ok(GlobalAnalysis { spec: spec.clone(), structures, d, constant, traces, caps })
    }

    pub fn spec(&self) -> &SheafSpec {
        &self.spec
    }
    pub fn structures(&self) -> &[LocalStructure] {
        &self.structures
    }
    pub fn d(&self) -> i64 {
        self.d
    }
    pub fn caps(&self) -> Caps {
        self.caps
    }
    pub fn is_geometrically_constant(&self) -> bool {
        self.constant
    }
    /// Trace sums for m = 1..=d (empty for geometrically constant sheaves).
    pub fn traces(&self) -> &[RootSum] {
        &self.traces
    }

    /// The residue-field orders whose roots of unity the local factors need.
    pub fn orders(&self, extra_points: &[ClosedPoint]) -> Vec<u64> {
        let q = self.spec.q();
        let mut degrees: BTreeSet<u32> = self.structures.iter().map(|s| s.degree()).collect();
        degrees.extend(extra_points.iter().map(|x| x.degree()));
        degrees.insert(1);
        degrees.into_iter().map(|d| q.pow(d) - 1).collect()
    }

    /// Coefficients of det(1 − Frob·T | H¹_c).
    pub fn l_polynomial(&self, cf: &CoeffField) -> Result<Vec<CoeffElem>> {
        if self.constant {
            return Err(Error::Unsupported(
                "the sheaf is geometrically constant: H⁰ or H² does not vanish".into(),
            ));
        }
        let s: Vec<CoeffElem> = self.traces.iter().map(|t| Ok(-t.eval(cf)?)).collect::<Result<_>>()?;
        newton_coefficients(cf, &s)
    }

    /// The Frobenius eigenvalue of a geometrically constant sheaf.
    fn constant_eigenvalue(&self, cf: &CoeffField) -> Result<CoeffElem> {
        self.spec.clone().without_zero_set().local_structure(&ClosedPoint::Infinity)?.c_pi(cf)
    }

    /// Number of geometric points of S, and ∏_{x∈S} (−1)^{deg x − 1}.
    fn zero_set_shape(&self) -> (u64, i64) {
        let zs = self.spec.zero_set();
        let n: u64 = zs.iter().map(|x| x.degree() as u64).sum();
        let sign = zs.iter().map(|x| if x.degree() % 2 == 0 { -1 } else { 1 }).product();
        (n, sign)
    }

    pub fn global_epsilon(&self, cf: &CoeffField) -> Result<GlobalEpsilon> {
        let q = self.spec.q();
        if self.constant {
            let beta = self.constant_eigenvalue(cf)?;
            let qe = cf.elem(q as i64);
            let (n_s, sign) = self.zero_set_shape();
            let (epsilon, laumon) = if n_s == 0 {
                let v = (beta * beta * qe).inv();
                (v, v)
            } else {
                let det_h1 = beta.pow(n_s as i64 - 1) * cf.elem(sign);
                let v = det_h1 / (beta * qe);
                (v, if n_s % 2 == 0 { v } else { -v })
            };
            return Ok(GlobalEpsilon { d: self.d, l_polynomial: Vec::new(), epsilon, laumon });
        }
        let c = self.l_polynomial(cf)?;
        let cd = *c.last().expect("c_0 is present");
        if cd.is_zero() {
            return Err(Error::NotInvertible(format!("the L-polynomial has degree < {}", self.d)));
        }
        let epsilon = if self.d % 2 == 0 { cd } else { -cd };
        Ok(GlobalEpsilon { d: self.d, l_polynomial: c, epsilon, laumon: cd })
    }

    /// c_d ≠ 0 and the power sum of index d + 1 agrees with the polynomial.
    pub fn verify_gos(&self, cf: &CoeffField) -> Result<GosReport> {
        if self.constant {
            // Eigenvalue model: t_m sums to β^m (q^m + 1 − #S(F_{q^m})).
            let beta = self.constant_eigenvalue(cf)?;
            let q = self.spec.q();
            let m = 2u32;
            let count: u64 = self.spec.zero_set().iter().filter(|x| m.is_multiple_of(x.degree())).map(|x| x.degree() as u64).sum();
            let predicted = beta.pow(m as i64) * cf.elem((q.pow(m) + 1) as i64 - count as i64);
            let observed = trace_sum_capped(&self.spec, m, self.caps.trace)?.eval(cf)?;
            return Ok(GosReport {
                d: self.d,
                ell: cf.ell(),
                leading_nonzero: true,
                predicted: predicted.value(),
                observed: observed.value(),
                pass: predicted == observed,
            });
        }
        let c = self.l_polynomial(cf)?;
        let s: Vec<CoeffElem> = self.traces.iter().map(|t| Ok(-t.eval(cf)?)).collect::<Result<_>>()?;
        let predicted = newton_next_power_sum(&c, &s);
        let observed = -trace_sum_capped(&self.spec, self.d as u32 + 1, self.caps.trace)?.eval(cf)?;
        let leading_nonzero = !c.last().expect("c_0").is_zero();
        Ok(GosReport {
            d: self.d,
            ell: cf.ell(),
            leading_nonzero,
            predicted: predicted.value(),
            observed: observed.value(),
            pass: leading_nonzero && predicted == observed,
        })
    }
}

impl SheafSpec {
    fn without_zero_set(mut self) -> SheafSpec {
        self.zero_set.clear();
        self
    }
}

/// The coefficient field for a global computation: roots of unity for every
/// residue field in play and ℓ > d.
pub fn coeff_field_for(analysis: &GlobalAnalysis, extra_points: &[ClosedPoint], ell: Option<u64>) -> Result<CoeffField> {
    let orders = analysis.orders(extra_points);
    let d_max = analysis.d().max(1) as u64;
    let p = analysis.spec().base().p();
    match ell {
        Some(l) => CoeffField::pinned(p, &orders, d_max, l),
        None => CoeffField::setup(p, &orders, d_max),
    }
}

/// The local expansion of ω = r·dt at x, with relative precision `rel`.
pub fn form_at(r: &RationalFunction, x: &PointData, rel: i64) -> Result<Form> {
    let v = ord_at(r, x)?;
    match x.point {
        // t = 1/π, dt = −π^{−2} dπ.
        ClosedPoint::Infinity => Ok(Form::new(expand_at(r, x, v + rel)?.shift(-2).neg())),
        ClosedPoint::Finite(_) => Ok(Form::new(expand_at(r, x, v + rel)?)),
    }
}

/// v_x(r·dt).
pub fn form_order(r: &RationalFunction, x: &ClosedPoint) -> Result<i64> {
    match x {
        ClosedPoint::Infinity => Ok(r.ord_infinity().ok_or_else(|| Error::InvalidInput("ω = 0".into()))? - 2),
        ClosedPoint::Finite(_) => {
            let base = r.field();
            ord_at(r, &PointData::new(base, x)?)
        }
    }
}

/// Support of div(r·dt).
pub fn form_divisor(r: &RationalFunction) -> Result<Vec<(ClosedPoint, i64)>> {
    if r.is_zero() {
        return invalid("the global form is zero");
    }
    let mut out: Vec<(ClosedPoint, i64)> =
        r.divisor()?.into_iter().filter(|(x, _)| *x != ClosedPoint::Infinity).collect();
    let vi = form_order(r, &ClosedPoint::Infinity)?;
    if vi != 0 {
        out.push((ClosedPoint::Infinity, vi));
    }
    out.sort();
    Ok(out)
}

/// ε_x(T, F, ω), by the Tate sum when it fits under the cap and by the
/// stationary-phase closed forms for wild characters otherwise.
pub fn local_factor(
    chi: &LocalCharacter,
    cf: &CoeffField,
    omega: &Form,
    kind: Kind,
    tate_cap: u64,
) -> Result<EpsilonResult> {
    match eps_tate_capped(chi, cf, omega, kind, tate_cap) {
        Err(Error::CapExceeded { .. }) if !chi.is_tame() && (chi.q() % 2 == 1 || chi.swan() % 2 == 1) => {
            eps_closed_form(chi, cf, omega)
        }
        other => other,
    }
}

/// One closed point's entry in the product formula.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointContribution {
    pub point: String,
    pub degree: u32,
    pub kind: String,
    pub swan: u32,
    pub tame_e: u64,
    pub v_omega: i64,
    pub a: i64,
    pub a_omega: i64,
    pub epsilon: u64,
    pub method: Method,
    /// (−1)^{a_x}, the sign of the Laumon form.
    pub laumon_sign: i64,
    /// δ_{x/k}(Frob)^{a_x} = (−1)^{(deg x − 1) a_x}.
    pub delta_sign: i64,
}

/// Both sides of the product formula under one ℓ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductFormulaRun {
    pub ell: u64,
    /// det(−Frob | RΓ_c)^{−1}.
    pub lhs: u64,
    /// q^{rk} ∏_x (−1)^{a_x} ε_x.
    pub rhs: u64,
    /// det(Frob | RΓ_c)^{−1}.
    pub lhs_delta: u64,
    /// q^{rk} ∏_x δ_x^{a_x} ε_x.
    pub rhs_delta: u64,
    pub per_point: Vec<PointContribution>,
    pub pass: bool,
}

/// The product formula over P¹ checked under one or more ℓ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductFormulaReport {
    pub d: i64,
    pub geometrically_constant: bool,
    pub lhs: u64,
    pub rhs: u64,
    pub per_point: Vec<PointContribution>,
    pub runs: Vec<ProductFormulaRun>,
    /// ∏ δ-signs recomputed from (deg x, a_x) equals the per-point report.
    pub delta_signs_consistent: bool,
    pub gos: Vec<GosReport>,
    pub pass: bool,
}

/// The closed points that can contribute to the product formula for (F, ω).
pub fn contributing_points(analysis: &GlobalAnalysis, omega: &RationalFunction) -> Result<Vec<ClosedPoint>> {
    let mut pts: BTreeSet<ClosedPoint> = analysis.structures().iter().map(|s| s.point().clone()).collect();
    pts.extend(form_divisor(omega)?.into_iter().map(|(x, _)| x));
    Ok(pts.into_iter().collect())
}

/// Local factor of F at x for the global form r·dt.
pub fn local_factor_at(
    spec: &SheafSpec,
    x: &ClosedPoint,
    omega: &RationalFunction,
    cf: &CoeffField,
    tate_cap: u64,
) -> Result<(LocalStructure, EpsilonResult)> {
    let s = spec.local_structure(x)?;
    let chi = s.character(cf)?;
    let w = form_at(omega, &s.data, s.swan() as i64 + 2)?;
    let e = local_factor(&chi, cf, &w, s.kind, tate_cap)?;
    Ok((s, e))
}

pub fn product_formula_run(
    analysis: &GlobalAnalysis,
    omega: &RationalFunction,
    cf: &CoeffField,
) -> Result<ProductFormulaRun> {
    let spec = analysis.spec();
    let q = spec.q();
    let global = analysis.global_epsilon(cf)?;
    let mut rhs = cf.elem(q as i64);
    let mut rhs_delta = rhs;
    let mut per_point = Vec::new();
    for x in contributing_points(analysis, omega)? {
        let (s, e) = local_factor_at(spec, &x, omega, cf, analysis.caps().tate)?;
        let laumon_sign = if e.conductor_a % 2 == 0 { 1 } else { -1 };
        let delta_sign = if (s.degree() as i64 - 1) * e.conductor_a % 2 == 0 { 1 } else { -1 };
        rhs *= e.value * cf.elem(laumon_sign);
        rhs_delta *= e.value * cf.elem(delta_sign);
        per_point.push(PointContribution {
            point: x.label(),
            degree: s.degree(),
            kind: s.kind.label().to_string(),
            swan: s.swan(),
            tame_e: s.tame_e,
            v_omega: e.conductor_a_omega - e.conductor_a,
            a: e.conductor_a,
            a_omega: e.conductor_a_omega,
            epsilon: e.value.value(),
            method: e.method,
            laumon_sign,
            delta_sign,
        });
    }
    Ok(ProductFormulaRun {
        ell: cf.ell(),
        lhs: global.laumon.value(),
        rhs: rhs.value(),
        lhs_delta: global.epsilon.value(),
        rhs_delta: rhs_delta.value(),
        pass: global.laumon == rhs && global.epsilon == rhs_delta,
        per_point,
    })
}

/// Checks the product formula for (F, ω) under ℓ (the smallest admissible one
/// unless pinned) and, if requested, under the next admissible ℓ as well.
pub fn product_formula_check(
    spec: &SheafSpec,
    omega: &RationalFunction,
    ell: Option<u64>,
    second_ell: bool,
    caps: Caps,
) -> Result<ProductFormulaReport> {
    let analysis = GlobalAnalysis::new(spec, caps)?;
    let extra = contributing_points(&analysis, omega)?;
    let cf = coeff_field_for(&analysis, &extra, ell)?;
    let mut fields = vec![cf];
    if second_ell {
        let next = fields[0].next()?;
        fields.push(next);
    }
    let runs: Vec<ProductFormulaRun> =
        fields.iter().map(|cf| product_formula_run(&analysis, omega, cf)).collect::<Result<_>>()?;
    let gos: Vec<GosReport> = fields.iter().map(|cf| analysis.verify_gos(cf)).collect::<Result<_>>()?;
    let first = &runs[0];
    let delta_signs_consistent = runs.iter().all(|r| {
        let from_report: i64 = r.per_point.iter().map(|c| c.delta_sign).product();
        let recomputed: i64 = r
            .per_point
            .iter()
            .map(|c| if (c.degree as i64 - 1) * c.a % 2 == 0 { 1 } else { -1 })
            .product();
        from_report == recomputed
    });
    let pass = runs.iter().all(|r| r.pass) && gos.iter().all(|g| g.pass) && delta_signs_consistent;
    Ok(ProductFormulaReport {
        d: analysis.d(),
        geometrically_constant: analysis.is_geometrically_constant(),
        lhs: first.lhs,
        rhs: first.rhs,
        per_point: first.per_point.clone(),
        runs,
        delta_signs_consistent,
        gos,
        pass,
    })
}

#[cfg(test)]
mod tests;
