//! Seeded random Artin–Schreier–Kummer sheaves and global forms on P¹.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{form_divisor, SheafSpec};
use crate::error::{Error, Result};
use crate::gf::{field_of_size, poly, Field, FqElem};
use crate::localfield::{closed_points_of, ClosedPoint, PointData, RationalFunction};

/// Shape and size bounds for randomly generated product-formula cases.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusOptions {
    pub q_choices: Vec<u64>,
    /// Largest degree of a ramification point.
    pub max_point_degree: u32,
    /// Largest degree of a zero or pole of ω.
    pub max_form_degree: u32,
    /// Bound on q^{d+1}, the largest field enumerated by the GOS check.
    pub trace_budget: u64,
    /// Bound on q_x^{sw+1}, the size of each local Tate sum.
    pub tate_budget: u64,
}

impl Default for CorpusOptions {
    fn default() -> CorpusOptions {
        CorpusOptions {
            q_choices: vec![3, 4, 5, 7, 9],
            max_point_degree: 3,
            max_form_degree: 2,
            trace_budget: 1 << 20,
            tate_budget: 1 << 20,
        }
    }
}

/// A generated (F, ω) pair.
#[derive(Clone, Debug)]
pub struct CorpusCase {
    pub index: usize,
    pub spec: SheafSpec,
    pub omega: RationalFunction,
}

fn random_elem(rng: &mut ChaCha8Rng, k: &Field) -> FqElem {
    FqElem(rng.gen_range(0..k.q()))
}

fn random_unit(rng: &mut ChaCha8Rng, k: &Field) -> FqElem {
    FqElem(rng.gen_range(1..k.q()))
}

fn random_poly(rng: &mut ChaCha8Rng, k: &Field, len: usize) -> poly::Poly {
    (0..len).map(|_| random_elem(rng, k)).collect()
}

/// A random finite closed point of degree d.
fn random_point(rng: &mut ChaCha8Rng, k: &Field, d: u32) -> Result<ClosedPoint> {
    for _ in 0..10_000 {
        let mut m = random_poly(rng, k, d as usize);
        m.push(FqElem::ONE);
        if let [(pt, 1)] = closed_points_of(k, &m)?.as_slice() {
            if pt.degree() == d {
                return Ok(pt.clone());
            }
        }
    }
    Err(Error::Internal(format!("no irreducible polynomial of degree {d} found")))
}

fn minpoly(pt: &ClosedPoint) -> &poly::Poly {
    match pt {
        ClosedPoint::Finite(m) => m,
        ClosedPoint::Infinity => unreachable!("∞ has no minimal polynomial"),
    }
}

/// A polar part at `pt` with pole order `k`.
fn random_polar(rng: &mut ChaCha8Rng, base: &Field, pt: &ClosedPoint, k: i64) -> Result<RationalFunction> {
    match pt {
        ClosedPoint::Infinity => {
            let mut c = random_poly(rng, base, k as usize);
            c[0] = FqElem::ZERO;
            c.push(random_unit(rng, base));
            Ok(RationalFunction::polynomial(base, c))
        }
        ClosedPoint::Finite(m) => {
            let d = m.len() - 1;
            loop {
                let a = random_poly(rng, base, d * k as usize);
                let (_, r) = poly::divrem(base, &a, m);
                if !poly::trim(r).is_empty() {
                    return RationalFunction::new(base, a, poly::pow(base, m, k as u32));
                }
            }
        }
    }
}

/// A random rank-1 sheaf with one to three ramification points of degree
/// ≤ `max_point_degree` (∞ with probability 1/2), each wild, tame or both,
/// extended by zero at its ramification and occasionally at one more point.
pub fn random_spec(rng: &mut ChaCha8Rng, base: &Field, opts: &CorpusOptions) -> Result<SheafSpec> {
    let p = base.p() as i64;
    let qm1 = base.unit_order() as i64;
    let sites = rng.gen_range(1..=3usize);
    let mut points: Vec<ClosedPoint> = Vec::new();
    if rng.gen_bool(0.5) {
        points.push(ClosedPoint::Infinity);
    }
    while points.len() < sites {
        let d = rng.gen_range(1..=opts.max_point_degree);
        let pt = random_point(rng, base, d)?;
        if !points.contains(&pt) {
            points.push(pt);
        }
    }
    let mut f: Option<RationalFunction> = None;
    let mut g = RationalFunction::constant(base, random_unit(rng, base));
    let mut tame_any = false;
    for pt in &points {
        let wild = rng.gen_bool(0.6);
        let tame = !wild || rng.gen_bool(0.4) || qm1 == 1;
        if wild {
            let max_k = if pt.degree() >= 3 { 1 } else { 2 };
            let mut k = rng.gen_range(1..=max_k);
            if k % p == 0 {
                k = 1;
            }
            let part = random_polar(rng, base, pt, k)?;
            f = Some(match f {
                Some(f) => f.add(&part),
                None => part,
            });
        }
        if tame && qm1 > 1 && *pt != ClosedPoint::Infinity {
            let m = *[-2i64, -1, 1, 2].choose(rng).expect("nonempty");
            let local = RationalFunction::polynomial(base, minpoly(pt).clone()).pow(m)?;
            g = g.mul(&local);
            tame_any = true;
        }
    }
    let kummer = if tame_any || rng.gen_bool(0.3) {
        let e = rng.gen_range(1..qm1.max(2));
        vec![(g, e)]
    } else {
        Vec::new()
    };
    let mut extra = Vec::new();
    if rng.gen_bool(0.3) {
        let d = rng.gen_range(1..=2.min(opts.max_point_degree));
        extra.push(random_point(rng, base, d)?);
    }
    SheafSpec::extended_by_zero(base, f, kummer, extra)
}

/// A random r with ω = r·dt having zeros and poles at points of degree ≤
/// `max_form_degree` (plus whatever ∞ receives).
pub fn random_form(rng: &mut ChaCha8Rng, base: &Field, opts: &CorpusOptions) -> Result<RationalFunction> {
    let mut r = RationalFunction::constant(base, random_unit(rng, base));
    for _ in 0..rng.gen_range(0..=2) {
        let d = rng.gen_range(1..=opts.max_form_degree);
        let pt = random_point(rng, base, d)?;
        let m = *[-2i64, -1, 1, 2].choose(rng).expect("nonempty");
        r = r.mul(&RationalFunction::polynomial(base, minpoly(&pt).clone()).pow(m)?);
    }
    Ok(r)
}

/// Cost estimates: (L-degree, largest local Tate sum) of (F, ω).
fn cost(spec: &SheafSpec, omega: &RationalFunction) -> Result<(i64, u64)> {
    let mut d = -2;
    let mut tate = 0u64;
    let mut pts = spec.special_points()?;
    pts.extend(form_divisor(omega)?.into_iter().map(|(x, _)| x));
    for x in pts {
        let s = spec.local_structure(&x)?;
        d += s.degree() as i64 * s.artin_a();
        let qx = PointData::new(spec.base(), &x)?.q();
        tate = tate.max(qx.saturating_pow(s.swan() + 1));
    }
    Ok((d, tate))
}

/// `count` product-formula cases drawn from a ChaCha8 stream seeded by `seed`,
/// rejecting cases outside the budgets or geometrically constant ones.
pub fn random_corpus(seed: u64, count: usize, opts: &CorpusOptions) -> Result<Vec<CorpusCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 200 * count.max(1) {
            return Err(Error::Internal("random corpus: too many rejected cases".into()));
        }
        let q = opts.q_choices[out.len() % opts.q_choices.len()];
        let base = field_of_size(q)?;
        let spec = random_spec(&mut rng, &base, opts)?;
        let omega = random_form(&mut rng, &base, opts)?;
        let (d, tate) = cost(&spec, &omega)?;
        let fits = q.checked_pow((d + 1).max(1) as u32).is_some_and(|n| n <= opts.trace_budget);
        if d < 0 || !fits || tate > opts.tate_budget {
            continue;
        }
        out.push(CorpusCase { index: out.len(), spec, omega });
    }
    Ok(out)
}
