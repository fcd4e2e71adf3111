//! Dense univariate polynomials over a [`GfField`], constant term first.
//! The zero polynomial is the empty vector; results are always trimmed.

use super::{FqElem, GfField};

pub type Poly = Vec<FqElem>;

pub fn trim(mut a: Poly) -> Poly {
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    a
}

/// Degree, or `None` for the zero polynomial.
pub fn degree(a: &[FqElem]) -> Option<usize> {
    a.iter().rposition(|c| !c.is_zero())
}

pub fn add(k: &GfField, a: &[FqElem], b: &[FqElem]) -> Poly {
    let n = a.len().max(b.len());
    let get = |v: &[FqElem], i: usize| v.get(i).copied().unwrap_or(FqElem::ZERO);
    trim((0..n).map(|i| k.add(get(a, i), get(b, i))).collect())
}

pub fn neg(k: &GfField, a: &[FqElem]) -> Poly {
    a.iter().map(|&c| k.neg(c)).collect()
}

pub fn sub(k: &GfField, a: &[FqElem], b: &[FqElem]) -> Poly {
    add(k, a, &neg(k, b))
}

pub fn scale(k: &GfField, a: &[FqElem], c: FqElem) -> Poly {
    trim(a.iter().map(|&x| k.mul(x, c)).collect())
}

pub fn mul(k: &GfField, a: &[FqElem], b: &[FqElem]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![FqElem::ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = k.add(out[i + j], k.mul(x, y));
        }
    }
    trim(out)
}

pub fn pow(k: &GfField, a: &[FqElem], e: u32) -> Poly {
    let mut acc = vec![FqElem::ONE];
    for _ in 0..e {
        acc = mul(k, &acc, a);
    }
    acc
}

/// Quotient and remainder; `b` must be nonzero.
pub fn divrem(k: &GfField, a: &[FqElem], b: &[FqElem]) -> (Poly, Poly) {
    let db = degree(b).expect("division by the zero polynomial");
    let lead_inv = k.inv(b[db]);
    let mut r = trim(a.to_vec());
    if r.len() <= db {
        return (Vec::new(), r);
    }
    let mut quo = vec![FqElem::ZERO; r.len() - db];
    while let Some(dr) = degree(&r) {
        if dr < db {
            break;
        }
        let c = k.mul(r[dr], lead_inv);
        quo[dr - db] = c;
        for (i, &bi) in b.iter().enumerate().take(db + 1) {
            r[dr - db + i] = k.sub(r[dr - db + i], k.mul(c, bi));
        }
        r = trim(r);
    }
    (trim(quo), r)
}

pub fn monic(k: &GfField, a: &[FqElem]) -> Poly {
    match degree(a) {
        None => Vec::new(),
        Some(d) => scale(k, a, k.inv(a[d])),
    }
}

/// Monic greatest common divisor.
pub fn gcd(k: &GfField, a: &[FqElem], b: &[FqElem]) -> Poly {
    let (mut x, mut y) = (trim(a.to_vec()), trim(b.to_vec()));
    while !y.is_empty() {
        let (_, r) = divrem(k, &x, &y);
        x = y;
        y = r;
    }
    monic(k, &x)
}

pub fn eval(k: &GfField, a: &[FqElem], x: FqElem) -> FqElem {
    a.iter().rev().fold(FqElem::ZERO, |acc, &c| k.add(k.mul(acc, x), c))
}

pub fn derivative(k: &GfField, a: &[FqElem]) -> Poly {
    trim(
        a.iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| k.mul_int(c, i as i64))
            .collect(),
    )
}

/// `a(b(x))`.
pub fn compose(k: &GfField, a: &[FqElem], b: &[FqElem]) -> Poly {
    a.iter()
        .rev()
        .fold(Vec::new(), |acc, &c| add(k, &mul(k, &acc, b), &[c]))
}

/// Coefficients of `a(x + s)` (Taylor shift by repeated synthetic division).
pub fn taylor_shift(k: &GfField, a: &[FqElem], s: FqElem) -> Poly {
    let mut c = a.to_vec();
    let n = c.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            c[j] = k.add(c[j], k.mul(s, c[j + 1]));
        }
    }
    trim(c)
}

/// Coefficients reversed with respect to degree `d`: x^d a(1/x).
pub fn reverse(a: &[FqElem], d: usize) -> Poly {
    let mut out = vec![FqElem::ZERO; d + 1];
    for (i, &c) in a.iter().enumerate() {
        if i <= d {
            out[d - i] = c;
        }
    }
    trim(out)
}

/// Map coefficients through a function (e.g. a field embedding).
pub fn map(a: &[FqElem], f: impl Fn(FqElem) -> FqElem) -> Poly {
    trim(a.iter().map(|&c| f(c)).collect())
}
