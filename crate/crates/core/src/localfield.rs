//! Truncated Laurent series over a residue field, meromorphic 1-forms,
//! rational functions on P¹ and their local expansions at closed points, and
//! norms along unramified and tame Kummer extensions.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::gf::poly::{self, Poly};
use crate::gf::{embedding, extension, Field, FqElem, TowerEmbedding};

/// A Laurent series Σ_{i ≥ v} a_i π^i known modulo π^prec.
///
/// The leading coefficient a_v is nonzero unless the series is zero to the
/// known precision, in which case `v == prec` and no coefficient is stored.
#[derive(Clone)]
pub struct LaurentSeries {
    field: Field,
    v: i64,
    prec: i64,
    coeffs: Vec<FqElem>,
}

impl fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "O(π^{})", self.prec);
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("{}·π^{}", c.0, self.v + i as i64))
            .collect();
        write!(f, "{} + O(π^{})", terms.join(" + "), self.prec)
    }
}

impl PartialEq for LaurentSeries {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.v == other.v && self.prec == other.prec && self.coeffs == other.coeffs
    }
}

impl LaurentSeries {
    /// Series with coefficients `coeffs[i]` at π^{start+i}, known mod π^prec.
    /// Coefficients at or beyond `prec` are dropped.
    pub fn new(field: &Field, start: i64, coeffs: Vec<FqElem>, prec: i64) -> LaurentSeries {
        let mut s = LaurentSeries { field: field.clone(), v: start, prec, coeffs };
        s.normalize();
        s
    }

    pub fn zero(field: &Field, prec: i64) -> LaurentSeries {
        LaurentSeries { field: field.clone(), v: prec, prec, coeffs: Vec::new() }
    }

    /// c·π^k + O(π^prec).
    pub fn monomial(field: &Field, c: FqElem, k: i64, prec: i64) -> LaurentSeries {
        LaurentSeries::new(field, k, vec![c], prec)
    }

    pub fn one(field: &Field, prec: i64) -> LaurentSeries {
        LaurentSeries::monomial(field, FqElem::ONE, 0, prec)
    }

    /// The uniformizer π itself.
    pub fn pi(field: &Field, prec: i64) -> LaurentSeries {
        LaurentSeries::monomial(field, FqElem::ONE, 1, prec)
    }

    fn normalize(&mut self) {
        let lead = self.coeffs.iter().position(|c| !c.is_zero());
        match lead {
            Some(i) if self.v + (i as i64) < self.prec => {
                self.coeffs.drain(..i);
                self.v += i as i64;
                let keep = (self.prec - self.v) as usize;
                self.coeffs.truncate(keep);
                while self.coeffs.last().is_some_and(|c| c.is_zero()) {
                    self.coeffs.pop();
                }
            }
            _ => {
                self.v = self.prec;
                self.coeffs.clear();
            }
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    /// Valuation, or `None` when the series is zero to its precision.
    pub fn valuation(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.v)
    }
    pub fn prec(&self) -> i64 {
        self.prec
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    /// Number of known coefficients after the leading one (inclusive).
    pub fn relative_prec(&self) -> i64 {
        self.prec - self.v
    }
    pub fn leading(&self) -> Option<FqElem> {
        self.coeffs.first().copied()
    }

    /// Coefficient of π^i; errors if it lies beyond the known precision.
    pub fn coeff(&self, i: i64) -> Result<FqElem> {
        if i >= self.prec {
            return Err(Error::Precision(format!("coefficient π^{i} requested from a series known mod π^{}", self.prec)));
        }
        if i < self.v {
            return Ok(FqElem::ZERO);
        }
        Ok(self.coeffs.get((i - self.v) as usize).copied().unwrap_or(FqElem::ZERO))
    }

    /// Known coefficients (index, value) from the valuation up to the precision.
    pub fn terms(&self) -> impl Iterator<Item = (i64, FqElem)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &c)| (self.v + i as i64, c))
    }

    fn check_field(&self, other: &LaurentSeries) {
        assert!(Arc::ptr_eq(&self.field, &other.field) || self.field == other.field, "series over different fields");
    }

    pub fn add(&self, other: &LaurentSeries) -> LaurentSeries {
        self.check_field(other);
        let k = &self.field;
        let prec = self.prec.min(other.prec);
        let start = self.v.min(other.v).min(prec);
        let coeffs = (start..prec)
            .map(|i| {
                let a = self.coeff(i).unwrap_or(FqElem::ZERO);
                let b = other.coeff(i).unwrap_or(FqElem::ZERO);
                k.add(a, b)
            })
            .collect();
        LaurentSeries::new(k, start, coeffs, prec)
    }

    pub fn neg(&self) -> LaurentSeries {
        let k = &self.field;
        LaurentSeries { coeffs: self.coeffs.iter().map(|&c| k.neg(c)).collect(), ..self.clone() }
    }

    pub fn sub(&self, other: &LaurentSeries) -> LaurentSeries {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: FqElem) -> LaurentSeries {
        let k = &self.field;
        LaurentSeries::new(k, self.v, self.coeffs.iter().map(|&x| k.mul(x, c)).collect(), self.prec)
    }

    /// Multiplication by π^k.
    pub fn shift(&self, k: i64) -> LaurentSeries {
        LaurentSeries { v: self.v + k, prec: self.prec + k, ..self.clone() }
    }

    /// Forget everything from π^prec on.
    pub fn truncate(&self, prec: i64) -> LaurentSeries {
        LaurentSeries::new(&self.field, self.v, self.coeffs.clone(), prec.min(self.prec))
    }

    pub fn mul(&self, other: &LaurentSeries) -> LaurentSeries {
        self.check_field(other);
        let k = &self.field;
        let prec = (self.v + other.prec).min(other.v + self.prec);
        let v = self.v + other.v;
        if self.is_zero() || other.is_zero() || v >= prec {
            return LaurentSeries::zero(k, prec);
        }
        let len = (prec - v) as usize;
        let mut out = vec![FqElem::ZERO; len];
        for (i, &a) in self.coeffs.iter().enumerate().take(len) {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate().take(len - i) {
                out[i + j] = k.add(out[i + j], k.mul(a, b));
            }
        }
        LaurentSeries::new(k, v, out, prec)
    }

    /// Multiplicative inverse; the relative precision is preserved.
    pub fn inv(&self) -> Result<LaurentSeries> {
        let k = &self.field;
        let Some(a0) = self.leading() else {
            return Err(Error::NotInvertible(format!("series O(π^{}) is zero to its precision", self.prec)));
        };
        let r = self.relative_prec() as usize;
        let a0_inv = k.inv(a0);
        let mut b = Vec::with_capacity(r);
        b.push(a0_inv);
        for n in 1..r {
            let mut s = FqElem::ZERO;
            for i in 1..=n {
                let ai = self.coeffs.get(i).copied().unwrap_or(FqElem::ZERO);
                if !ai.is_zero() {
                    s = k.add(s, k.mul(ai, b[n - i]));
                }
            }
            b.push(k.neg(k.mul(a0_inv, s)));
        }
        Ok(LaurentSeries::new(k, -self.v, b, -self.v + r as i64))
    }

    pub fn div(&self, other: &LaurentSeries) -> Result<LaurentSeries> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, e: i64) -> Result<LaurentSeries> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = LaurentSeries::one(&self.field, base.relative_prec().max(1));
        let mut b = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&b);
            }
            n >>= 1;
            if n > 0 {
                b = b.mul(&b);
            }
        }
        Ok(acc)
    }

    /// d/dπ.
    pub fn derivative(&self) -> LaurentSeries {
        let k = &self.field;
        let coeffs = self.terms().map(|(i, c)| k.mul_int(c, i)).collect();
        LaurentSeries::new(k, self.v - 1, coeffs, self.prec - 1)
    }

    /// The logarithmic derivative u′/u (the coefficient of dπ in du/u).
    pub fn dlog(&self) -> Result<LaurentSeries> {
        if self.is_zero() {
            return Err(Error::InvalidInput("logarithmic derivative of zero".into()));
        }
        Ok(self.derivative().mul(&self.inv()?))
    }

    /// Coefficient of π^{-1}.
    pub fn residue(&self) -> Result<FqElem> {
        self.coeff(-1)
    }

    /// u = s·π^{−v}: the unit part (valuation 0).
    pub fn unit_part(&self) -> Result<LaurentSeries> {
        if self.is_zero() {
            return Err(Error::InvalidInput("unit part of zero".into()));
        }
        Ok(self.shift(-self.v))
    }

    /// s(φ) for φ of valuation exactly 1 (a change of uniformizer).
    pub fn compose(&self, phi: &LaurentSeries) -> Result<LaurentSeries> {
        if phi.valuation() != Some(1) {
            return invalid("substitution requires a series of valuation 1");
        }
        let k = &self.field;
        if self.is_zero() {
            return Ok(LaurentSeries::zero(k, self.prec));
        }
        let r = self.relative_prec();
        let mut acc = LaurentSeries::zero(k, 0);
        for i in (0..r).rev() {
            let c = self.coeffs.get(i as usize).copied().unwrap_or(FqElem::ZERO);
            acc = acc.mul(phi).add(&LaurentSeries::monomial(k, c, 0, r));
        }
        Ok(acc.mul(&phi.pow(self.v)?))
    }

    /// Apply a map to every coefficient (e.g. Frobenius or an embedding).
    pub fn map_coeffs(&self, target: &Field, f: impl Fn(FqElem) -> FqElem) -> LaurentSeries {
        LaurentSeries::new(target, self.v, self.coeffs.iter().map(|&c| f(c)).collect(), self.prec)
    }
}

/// A meromorphic 1-form ω = w·dπ.
#[derive(Clone, PartialEq)]
pub struct Form {
    pub w: LaurentSeries,
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?})dπ", self.w)
    }
}

impl Form {
    pub fn new(w: LaurentSeries) -> Form {
        Form { w }
    }
    /// dπ itself.
    pub fn dpi(field: &Field, prec: i64) -> Form {
        Form::new(LaurentSeries::one(field, prec))
    }
    pub fn valuation(&self) -> Option<i64> {
        self.w.valuation()
    }
    pub fn residue(&self) -> Result<FqElem> {
        self.w.residue()
    }
    /// α·ω.
    pub fn times(&self, alpha: &LaurentSeries) -> Form {
        Form::new(self.w.mul(alpha))
    }
}

/// d(u) as a form.
pub fn differential(u: &LaurentSeries) -> Form {
    Form::new(u.derivative())
}

/// du/u as a form.
pub fn dlog(u: &LaurentSeries) -> Result<Form> {
    Ok(Form::new(u.dlog()?))
}

pub fn residue(omega: &Form) -> Result<FqElem> {
    omega.residue()
}

/// A closed point of P¹ over the base field.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClosedPoint {
    /// Finite point given by its monic minimal polynomial over F_q.
    Finite(Poly),
    Infinity,
}

impl ClosedPoint {
    pub fn degree(&self) -> u32 {
        match self {
            ClosedPoint::Infinity => 1,
            ClosedPoint::Finite(m) => poly::degree(m).unwrap_or(0) as u32,
        }
    }

    /// The rational point t = a.
    pub fn rational(k: &Field, a: FqElem) -> ClosedPoint {
        ClosedPoint::Finite(vec![k.neg(a), FqElem::ONE])
    }

    pub fn label(&self) -> String {
        match self {
            ClosedPoint::Infinity => "inf".into(),
            ClosedPoint::Finite(m) => {
                let c: Vec<String> = m.iter().map(|c| c.0.to_string()).collect();
                format!("[{}]", c.join(","))
            }
        }
    }
}

/// A rational function on P¹ over F_q, stored gcd-reduced with monic denominator.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalFunction {
    field: Field,
    num: Poly,
    den: Poly,
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |p: &Poly| p.iter().map(|c| c.0.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "[{}]/[{}]", show(&self.num), show(&self.den))
    }
}

impl RationalFunction {
    pub fn new(field: &Field, num: Poly, den: Poly) -> Result<RationalFunction> {
        let num = poly::trim(num);
        let den = poly::trim(den);
        if den.is_empty() {
            return invalid("rational function with zero denominator");
        }
        if num.is_empty() {
            return Ok(RationalFunction { field: field.clone(), num, den: vec![FqElem::ONE] });
        }
        let g = poly::gcd(field, &num, &den);
        let (mut n, _) = poly::divrem(field, &num, &g);
        let (mut d, _) = poly::divrem(field, &den, &g);
        let lead = d[d.len() - 1];
        let li = field.inv(lead);
        n = poly::scale(field, &n, li);
        d = poly::scale(field, &d, li);
        Ok(RationalFunction { field: field.clone(), num: n, den: d })
    }

    pub fn polynomial(field: &Field, num: Poly) -> RationalFunction {
        RationalFunction::new(field, num, vec![FqElem::ONE]).expect("nonzero denominator")
    }

    pub fn constant(field: &Field, c: FqElem) -> RationalFunction {
        RationalFunction::polynomial(field, vec![c])
    }

    /// The coordinate function t.
    pub fn t(field: &Field) -> RationalFunction {
        RationalFunction::polynomial(field, vec![FqElem::ZERO, FqElem::ONE])
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn num(&self) -> &Poly {
        &self.num
    }
    pub fn den(&self) -> &Poly {
        &self.den
    }
    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    pub fn mul(&self, o: &RationalFunction) -> RationalFunction {
        let k = &self.field;
        RationalFunction::new(k, poly::mul(k, &self.num, &o.num), poly::mul(k, &self.den, &o.den))
            .expect("product of denominators is nonzero")
    }

    pub fn inv(&self) -> Result<RationalFunction> {
        if self.is_zero() {
            return Err(Error::NotInvertible("zero rational function".into()));
        }
        RationalFunction::new(&self.field, self.den.clone(), self.num.clone())
    }

    pub fn div(&self, o: &RationalFunction) -> Result<RationalFunction> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn add(&self, o: &RationalFunction) -> RationalFunction {
        let k = &self.field;
        let n = poly::add(k, &poly::mul(k, &self.num, &o.den), &poly::mul(k, &o.num, &self.den));
        RationalFunction::new(k, n, poly::mul(k, &self.den, &o.den)).expect("nonzero denominator")
    }

    pub fn neg(&self) -> RationalFunction {
        RationalFunction { num: poly::neg(&self.field, &self.num), ..self.clone() }
    }

    pub fn sub(&self, o: &RationalFunction) -> RationalFunction {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: FqElem) -> RationalFunction {
        RationalFunction::new(&self.field, poly::scale(&self.field, &self.num, c), self.den.clone())
            .expect("nonzero denominator")
    }

    pub fn pow(&self, e: i64) -> Result<RationalFunction> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = RationalFunction::constant(&self.field, FqElem::ONE);
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base);
        }
        Ok(acc)
    }

    /// d/dt.
    pub fn derivative(&self) -> RationalFunction {
        let k = &self.field;
        let n = poly::sub(
            k,
            &poly::mul(k, &poly::derivative(k, &self.num), &self.den),
            &poly::mul(k, &self.num, &poly::derivative(k, &self.den)),
        );
        RationalFunction::new(k, n, poly::mul(k, &self.den, &self.den)).expect("nonzero denominator")
    }

    /// r(c(y)) for another rational function c.
    pub fn compose(&self, c: &RationalFunction) -> RationalFunction {
        let k = &self.field;
        let hom = |p: &Poly, deg: usize| -> Poly {
            // Σ a_i A^i B^{deg − i}
            let mut acc: Poly = Vec::new();
            for (i, &a) in p.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let term = poly::mul(k, &poly::pow(k, &c.num, i as u32), &poly::pow(k, &c.den, (deg - i) as u32));
                acc = poly::add(k, &acc, &poly::scale(k, &term, a));
            }
            acc
        };
        let dn = poly::degree(&self.num).unwrap_or(0);
        let dd = poly::degree(&self.den).unwrap_or(0);
        let deg = dn.max(dd);
        RationalFunction::new(k, hom(&self.num, deg), hom(&self.den, deg)).expect("composition has a denominator")
    }

    /// Order at ∞: deg(den) − deg(num).
    pub fn ord_infinity(&self) -> Option<i64> {
        let dn = poly::degree(&self.num)? as i64;
        let dd = poly::degree(&self.den).unwrap_or(0) as i64;
        Some(dd - dn)
    }

    /// Value in an extension field (via `emb`) at t = x; `None` at a pole.
    pub fn eval(&self, emb: &TowerEmbedding, x: FqElem) -> Option<FqElem> {
        let big = emb.to();
        let n = poly::map(&self.num, |c| emb.apply(c));
        let d = poly::map(&self.den, |c| emb.apply(c));
        let dv = poly::eval(big, &d, x);
        if dv.is_zero() {
            return None;
        }
        Some(big.div(poly::eval(big, &n, x), dv))
    }

    /// Value at ∞, `None` if ∞ is a pole.
    pub fn eval_infinity(&self) -> Option<FqElem> {
        let dn = poly::degree(&self.num);
        let dd = poly::degree(&self.den).unwrap_or(0);
        match dn {
            None => Some(FqElem::ZERO),
            Some(n) if n < dd => Some(FqElem::ZERO),
            Some(n) if n == dd => Some(self.field.div(self.num[n], self.den[dd])),
            _ => None,
        }
    }

    /// Finite zeros and poles with orders, and the order at ∞ (only nonzero
    /// orders are listed).
    pub fn divisor(&self) -> Result<Vec<(ClosedPoint, i64)>> {
        if self.is_zero() {
            return invalid("divisor of the zero function");
        }
        let mut out = Vec::new();
        for (pt, m) in closed_points_of(&self.field, &self.num)? {
            out.push((pt, m as i64));
        }
        for (pt, m) in closed_points_of(&self.field, &self.den)? {
            out.push((pt, -(m as i64)));
        }
        let oi = self.ord_infinity().unwrap_or(0);
        if oi != 0 {
            out.push((ClosedPoint::Infinity, oi));
        }
        out.sort();
        Ok(out)
    }
}

/// Residue field data of a closed point: F_{q^d}, the embedding of F_q, and
/// the distinguished root α (the root g^k with smallest k, or 0).
#[derive(Clone)]
pub struct PointData {
    pub point: ClosedPoint,
    pub field: Field,
    pub embed: Arc<TowerEmbedding>,
    pub alpha: Option<FqElem>,
}

impl fmt::Debug for PointData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} over {:?}", self.point.label(), self.field)
    }
}

impl PointData {
    pub fn new(base: &Field, point: &ClosedPoint) -> Result<PointData> {
        let d = point.degree();
        if d == 0 {
            return invalid("closed point with a constant minimal polynomial");
        }
        let big = extension(base, d)?;
        let embed = embedding(base, &big)?;
        let alpha = match point {
            ClosedPoint::Infinity => None,
            ClosedPoint::Finite(m) => {
                let mk = poly::map(m, |c| embed.apply(c));
                if poly::eval(&big, &mk, FqElem::ZERO).is_zero() {
                    if d != 1 {
                        return invalid("minimal polynomial is reducible");
                    }
                    Some(FqElem::ZERO)
                } else {
                    let root = (0..big.unit_order() as u64)
                        .map(|k| big.exp(k))
                        .find(|&a| poly::eval(&big, &mk, a).is_zero())
                        .ok_or_else(|| Error::InvalidInput(format!("{} has no root in F_q^{d}", point.label())))?;
                    // Irreducibility: the orbit of the root has exactly d elements.
                    let orbit = (1..=d).find(|&j| big.frobenius(root, j * base.n()) == root).unwrap_or(d);
                    if orbit != d {
                        return invalid(format!("{} is not irreducible", point.label()));
                    }
                    Some(root)
                }
            }
        };
        Ok(PointData { point: point.clone(), field: big, embed, alpha })
    }

    pub fn degree(&self) -> u32 {
        self.point.degree()
    }

    /// Number of elements of the residue field.
    pub fn q(&self) -> u64 {
        self.field.q() as u64
    }
}

/// Laurent expansion of r at the point in the local uniformizer
/// (π = t − α at finite points, π = 1/t at ∞), known mod π^prec (and always
/// at least through the leading coefficient).
pub fn expand_at(r: &RationalFunction, x: &PointData, prec: i64) -> Result<LaurentSeries> {
    if r.is_zero() {
        return invalid("expansion of the zero function");
    }
    let big = &x.field;
    let emb = &x.embed;
    let n = poly::map(&r.num, |c| emb.apply(c));
    let d = poly::map(&r.den, |c| emb.apply(c));
    let (n_loc, d_loc, shift) = match x.alpha {
        Some(a) => (poly::taylor_shift(big, &n, a), poly::taylor_shift(big, &d, a), 0i64),
        None => {
            let dn = poly::degree(&n).unwrap_or(0);
            let dd = poly::degree(&d).unwrap_or(0);
            (poly::reverse(&n, dn), poly::reverse(&d, dd), dd as i64 - dn as i64)
        }
    };
    let vn = n_loc.iter().position(|c| !c.is_zero()).unwrap_or(0) as i64;
    let vd = d_loc.iter().position(|c| !c.is_zero()).unwrap_or(0) as i64;
    let v = vn - vd + shift;
    let rel = (prec - v).max(1);
    let ns = LaurentSeries::new(big, 0, n_loc, vn + rel);
    let ds = LaurentSeries::new(big, 0, d_loc, vd + rel);
    Ok(ns.div(&ds)?.shift(shift))
}

/// Order of vanishing of r at x.
pub fn ord_at(r: &RationalFunction, x: &PointData) -> Result<i64> {
    Ok(expand_at(r, x, 0)?.valuation().expect("nonzero expansion"))
}

/// The closed points where a polynomial over F_q vanishes, with multiplicity.
pub fn closed_points_of(base: &Field, p: &[FqElem]) -> Result<Vec<(ClosedPoint, u32)>> {
    let mut rest = poly::monic(base, p);
    let mut out = Vec::new();
    let mut d = 1u32;
    while poly::degree(&rest).unwrap_or(0) > 0 {
        let deg = poly::degree(&rest).unwrap_or(0) as u32;
        if d > deg {
            return Err(Error::Internal("factorization did not terminate".into()));
        }
        let big = extension(base, d)?;
        let emb = embedding(base, &big)?;
        let rk = poly::map(&rest, |c| emb.apply(c));
        let mut seen = std::collections::HashSet::new();
        for a in big.elements() {
            if seen.contains(&a) || !poly::eval(&big, &rk, a).is_zero() {
                continue;
            }
            let orbit: Vec<FqElem> = (0..d).map(|j| big.frobenius(a, j * base.n())).collect();
            let exact = (1..d).all(|j| orbit[j as usize] != a);
            if !exact {
                continue;
            }
            for &b in &orbit {
                seen.insert(b);
            }
            let mp_big = orbit.iter().fold(vec![FqElem::ONE], |acc, &b| {
                poly::mul(&big, &acc, &[big.neg(b), FqElem::ONE])
            });
            let mp: Poly = mp_big
                .iter()
                .map(|&c| emb.preimage(c).ok_or_else(|| Error::Internal("minimal polynomial not over F_q".into())))
                .collect::<Result<_>>()?;
            let mut mult = 0u32;
            loop {
                let (quo, r) = poly::divrem(base, &rest, &mp);
                if !r.is_empty() {
                    break;
                }
                rest = quo;
                mult += 1;
            }
            out.push((ClosedPoint::Finite(mp), mult));
        }
        d += 1;
    }
    out.sort();
    Ok(out)
}

/// Norm from F_{q′}((π)) to F_q((π)) for an unramified extension: the product
/// of the Galois conjugates of u (Frobenius acting on coefficients).
pub fn norm_unramified(u: &LaurentSeries, emb: &TowerEmbedding) -> Result<LaurentSeries> {
    let big = emb.to();
    let small = emb.from();
    let m = emb.degree();
    let mut acc = u.clone();
    for j in 1..m {
        let conj = u.map_coeffs(big, |c| big.frobenius(c, j * small.n()));
        acc = acc.mul(&conj);
    }
    let coeffs: Vec<FqElem> = acc
        .terms()
        .map(|(_, c)| emb.preimage(c).ok_or_else(|| Error::Internal("norm left the subfield".into())))
        .collect::<Result<_>>()?;
    Ok(LaurentSeries::new(small, acc.v, coeffs, acc.prec))
}

/// Norm along the tame Kummer extension π = π′^e (μ_e must lie in the
/// residue field): ∏_{ζ^e = 1} u(ζπ′), re-expressed in π.
pub fn norm_kummer(u: &LaurentSeries, e: u32) -> Result<LaurentSeries> {
    let k = u.field().clone();
    if e == 0 || (e as u64).is_multiple_of(k.p() as u64) {
        return Err(Error::Unsupported(format!("wild or degenerate extension of degree {e}")));
    }
    if !(k.unit_order() as u64).is_multiple_of(e as u64) {
        return Err(Error::Unsupported(format!("μ_{e} is not contained in F_{}", k.q())));
    }
    let zeta = k.exp(k.unit_order() as u64 / e as u64);
    let mut acc = LaurentSeries::one(&k, u.relative_prec().max(1));
    for j in 0..e {
        let z = k.pow(zeta, j as i64);
        let twisted = LaurentSeries::new(
            &k,
            u.v,
            u.terms().map(|(i, c)| k.mul(c, k.pow(z, i))).collect(),
            u.prec,
        );
        acc = acc.mul(&twisted);
    }
    let e = e as i64;
    let mut coeffs = Vec::new();
    for (i, c) in acc.terms() {
        if i.rem_euclid(e) != 0 {
            if !c.is_zero() {
                return Err(Error::Internal("Kummer norm is not a series in π′^e".into()));
            }
            continue;
        }
        coeffs.push((i.div_euclid(e), c));
    }
    let start = acc.v.div_euclid(e);
    let prec = (acc.prec + e - 1).div_euclid(e);
    let mut dense = vec![FqElem::ZERO; (prec - start).max(0) as usize];
    for (j, c) in coeffs {
        if j < prec {
            dense[(j - start) as usize] = c;
        }
    }
    Ok(LaurentSeries::new(&k, start, dense, prec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::field;

    fn f(p: u32, n: u32) -> Field {
        field(p, n).unwrap()
    }

    fn series(k: &Field, start: i64, c: &[u32], prec: i64) -> LaurentSeries {
        LaurentSeries::new(k, start, c.iter().map(|&x| FqElem(x)).collect(), prec)
    }

    #[test]
    fn geometric_series_inverse() {
        let k = f(5, 1);
        let one_plus_pi = series(&k, 0, &[1, 1], 8);
        let inv = one_plus_pi.inv().unwrap();
        let alt: Vec<u32> = (0..8).map(|i| if i % 2 == 0 { 1 } else { 4 }).collect();
        assert_eq!(inv, series(&k, 0, &alt, 8));
        assert_eq!(one_plus_pi.mul(&inv), LaurentSeries::one(&k, 8));
    }

    #[test]
    fn derivative_and_inverse_of_monomials() {
        let k = f(7, 1);
        let p3 = LaurentSeries::monomial(&k, FqElem(1), 3, 10);
        assert_eq!(p3.derivative(), LaurentSeries::monomial(&k, FqElem(3), 2, 9));
        let pi = LaurentSeries::pi(&k, 5);
        let inv = pi.inv().unwrap();
        assert_eq!(inv.valuation(), Some(-1));
        assert_eq!(inv.leading(), Some(FqElem::ONE));
    }

    #[test]
    fn residue_examples() {
        let k = f(3, 1);
        let w = series(&k, -1, &[1, 2, 1], 5);
        assert_eq!(residue(&Form::new(w)).unwrap(), FqElem(1));
        assert_eq!(Form::dpi(&k, 5).residue().unwrap(), FqElem::ZERO);
        let u = series(&k, 0, &[1, 2, 0, 1], 6);
        assert_eq!(dlog(&u).unwrap().residue().unwrap(), FqElem::ZERO);
        assert!(series(&k, 0, &[1], 1).shift(-2).residue().is_err());
    }

    #[test]
    fn dlog_examples() {
        let k = f(5, 1);
        let pi = LaurentSeries::pi(&k, 8);
        let d = pi.dlog().unwrap();
        assert_eq!(d.valuation(), Some(-1));
        assert_eq!(d.terms().filter(|(_, c)| !c.is_zero()).count(), 1);
        // Res(π^{-1}·du/u) for u = 1 − cπ is −c.
        let c = FqElem(3);
        let u = LaurentSeries::new(&k, 0, vec![FqElem::ONE, k.neg(c)], 6);
        let h = LaurentSeries::monomial(&k, FqElem::ONE, -1, 6);
        let r = h.mul(&u.dlog().unwrap()).residue().unwrap();
        assert_eq!(r, k.neg(c));
    }

    #[test]
    fn expansion_examples() {
        let k = f(3, 1);
        let t = RationalFunction::t(&k);
        let inf = PointData::new(&k, &ClosedPoint::Infinity).unwrap();
        let e = expand_at(&t, &inf, 4).unwrap();
        assert_eq!(e.valuation(), Some(-1));
        let zero = PointData::new(&k, &ClosedPoint::rational(&k, FqElem::ZERO)).unwrap();
        assert_eq!(expand_at(&t, &zero, 4).unwrap(), series(&k, 1, &[1], 4));
        let t2p1 = RationalFunction::polynomial(&k, vec![FqElem(1), FqElem(0), FqElem(1)]);
        let pts = closed_points_of(&k, t2p1.num()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].0.degree(), 2);
        let x = PointData::new(&k, &pts[0].0).unwrap();
        assert_eq!(ord_at(&t2p1, &x).unwrap(), 1);
    }

    #[test]
    fn closed_points_with_multiplicity() {
        let k = f(3, 1);
        // (t − 1)^2 (t^2 + 1) t
        let a = vec![k.neg(FqElem::ONE), FqElem::ONE];
        let b = vec![FqElem::ONE, FqElem::ZERO, FqElem::ONE];
        let c = vec![FqElem::ZERO, FqElem::ONE];
        let p = poly::mul(&k, &poly::mul(&k, &poly::mul(&k, &a, &a), &b), &c);
        let pts = closed_points_of(&k, &p).unwrap();
        let degs: Vec<(u32, u32)> = pts.iter().map(|(pt, m)| (pt.degree(), *m)).collect();
        assert_eq!(degs.iter().map(|(d, m)| d * m).sum::<u32>(), 5);
        assert!(degs.contains(&(1, 2)));
        assert!(degs.contains(&(2, 1)));
    }

    #[test]
    fn norm_examples() {
        let k = f(5, 1);
        let one = LaurentSeries::one(&k, 5);
        assert_eq!(norm_kummer(&one, 2).unwrap(), LaurentSeries::one(&k, 3));
        let pi = LaurentSeries::pi(&k, 6);
        let n = norm_kummer(&pi, 2).unwrap();
        assert_eq!(n.valuation(), Some(1));
        assert_eq!(n.leading(), Some(k.neg(FqElem::ONE)));
        let k25 = f(5, 2);
        let emb = embedding(&k, &k25).unwrap();
        let c = k25.generator();
        let cs = LaurentSeries::monomial(&k25, c, 0, 4);
        let nc = norm_unramified(&cs, &emb).unwrap();
        assert_eq!(nc.leading(), Some(emb.norm(c)));
    }

    #[test]
    fn rational_function_normalizes() {
        let k = f(5, 1);
        let tm1 = vec![FqElem(4), FqElem(1)];
        let num = poly::mul(&k, &tm1, &[FqElem(2), FqElem(3)]);
        let den = poly::scale(&k, &tm1, FqElem(2));
        let r = RationalFunction::new(&k, num, den).unwrap();
        assert_eq!(r.den(), &vec![FqElem::ONE]);
        assert_eq!(r.divisor().unwrap().len(), 2);
    }

    #[test]
    fn composition_and_derivative() {
        let k = f(7, 1);
        let t = RationalFunction::t(&k);
        let y2 = t.mul(&t);
        let r = t.add(&RationalFunction::constant(&k, FqElem(3))).inv().unwrap();
        let c = r.compose(&y2);
        let inf = PointData::new(&k, &ClosedPoint::Infinity).unwrap();
        assert_eq!(ord_at(&c, &inf).unwrap(), 2);
        assert_eq!(y2.derivative(), t.scale(FqElem(2)));
    }
}
