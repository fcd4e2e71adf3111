//! Finite fields F_{p^n} with log/exp tables, Frobenius, traces, norms and
//! embeddings between members of a tower F_p ⊂ F_q ⊂ F_{q^m}.
//!
//! Elements are encoded as integers `Σ c_i p^i` where `c_i` are the
//! coefficients of the residue polynomial modulo the field's modulus.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::arith::{gcd, inv_mod, is_prime, prime_factors};
use crate::error::{invalid, Error, Result};

pub mod poly;

/// Largest field that may be built (tables are kept for every field).
pub const FIELD_CAP: u64 = 1 << 24;

/// Serializable description of a finite field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDesc {
    pub p: u32,
    pub n: u32,
    /// Monic modulus, constant term first; length `n + 1`.
    pub modulus: Vec<u32>,
    /// Primitive element as a coefficient vector of length `n`.
    pub generator: Vec<u32>,
}

/// An element of some [`GfField`], in the base-p digit encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FqElem(pub u32);

impl FqElem {
    pub const ZERO: FqElem = FqElem(0);
    pub const ONE: FqElem = FqElem(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

pub type Field = Arc<GfField>;

/// A finite field with precomputed discrete-log tables.
pub struct GfField {
    desc: FieldDesc,
    p: u32,
    n: u32,
    q: u32,
    pow_p: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
    trace_basis: Vec<u32>,
}

impl std::fmt::Debug for GfField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "F_{}^{}", self.p, self.n)
    }
}

impl PartialEq for GfField {
    fn eq(&self, other: &Self) -> bool {
        self.desc == other.desc
    }
}

impl Eq for GfField {}

fn digits(mut x: u64, p: u32, n: u32) -> Vec<u32> {
    (0..n)
        .map(|_| {
            let d = (x % p as u64) as u32;
            x /= p as u64;
            d
        })
        .collect()
}

/// `a * b mod f` for residues of length `n` over F_p (f monic of degree n).
fn polymulmod(a: &[u32], b: &[u32], f: &[u32], p: u32) -> Vec<u32> {
    let n = f.len() - 1;
    let pp = p as u64;
    let mut prod = vec![0u64; 2 * n];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % pp;
        }
    }
    for k in (n..2 * n).rev() {
        let c = prod[k];
        if c == 0 {
            continue;
        }
        for (i, &fi) in f.iter().take(n).enumerate() {
            prod[k - n + i] = (prod[k - n + i] + (pp - c) * fi as u64) % pp;
        }
        prod[k] = 0;
    }
    prod.truncate(n);
    prod.into_iter().map(|c| c as u32).collect()
}

fn polypowmod(base: &[u32], mut e: u64, f: &[u32], p: u32) -> Vec<u32> {
    let n = f.len() - 1;
    let mut acc = vec![0u32; n];
    acc[0] = 1;
    let mut b = base.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            acc = polymulmod(&acc, &b, f, p);
        }
        b = polymulmod(&b, &b, f, p);
        e >>= 1;
    }
    acc
}

/// Is the class of x a generator of (F_p[x]/f)^× of order p^n − 1?  This
/// forces f to be irreducible, since the unit group then has p^n − 1 elements.
fn x_is_primitive(f: &[u32], p: u32, order: u64, factors: &[u64]) -> bool {
    let n = f.len() - 1;
    if f[0] == 0 {
        return false;
    }
    let mut x = vec![0u32; n];
    if n == 1 {
        x[0] = (p - f[0]) % p;
    } else {
        x[1] = 1;
    }
    let one = {
        let mut v = vec![0u32; n];
        v[0] = 1;
        v
    };
    if polypowmod(&x, order, f, p) != one {
        return false;
    }
    factors
        .iter()
        .all(|&r| polypowmod(&x, order / r, f, p) != one)
}

/// Builds a field descriptor deterministically.
///
/// Candidate moduli are monic polynomials whose lower coefficients, read as
/// base-p digits, enumerate `0, 1, 2, …` (rotated by `seed`).  The first
/// candidate for which the class of x is primitive is taken; such a modulus is
/// irreducible, and the generator is x itself.
pub fn fq_build(p: u32, n: u32, seed: u64) -> Result<FieldDesc> {
    if !is_prime(p as u64) {
        return invalid(format!("p = {p} is not prime"));
    }
    if n == 0 {
        return invalid("extension degree must be at least 1");
    }
    let q = (p as u64).checked_pow(n).filter(|&q| q <= FIELD_CAP);
    let Some(q) = q else {
        return Err(Error::CapExceeded {
            what: format!("field F_{p}^{n}"),
            needed: (p as f64).powi(n as i32) as u64,
            cap: FIELD_CAP,
        });
    };
    let count = q;
    let order = q - 1;
    let factors = prime_factors(order);
    for k in 0..count {
        let idx = (k + seed) % count;
        let mut f = digits(idx, p, n);
        f.push(1);
        if x_is_primitive(&f, p, order, &factors) {
            let generator = if n == 1 {
                vec![(p - f[0]) % p]
            } else {
                let mut g = vec![0u32; n as usize];
                g[1] = 1;
                g
            };
            return Ok(FieldDesc { p, n, modulus: f, generator });
        }
    }
    Err(Error::Internal(format!("no primitive modulus for F_{p}^{n}")))
}

impl GfField {
    /// Tabulates the field described by `desc` after validating it.
    pub fn from_desc(desc: FieldDesc) -> Result<GfField> {
        let (p, n) = (desc.p, desc.n);
        if !is_prime(p as u64) || n == 0 {
            return invalid("field descriptor needs a prime p and n ≥ 1");
        }
        let q64 = (p as u64).checked_pow(n).unwrap_or(u64::MAX);
        if q64 > FIELD_CAP {
            return Err(Error::CapExceeded {
                what: format!("field F_{p}^{n}"),
                needed: q64,
                cap: FIELD_CAP,
            });
        }
        if desc.modulus.len() != n as usize + 1
            || desc.modulus[n as usize] != 1
            || desc.generator.len() != n as usize
            || desc.modulus.iter().chain(&desc.generator).any(|&c| c >= p)
        {
            return invalid("field descriptor has malformed modulus or generator");
        }
        let q = q64 as u32;
        let order = q - 1;
        let pow_p: Vec<u32> = (0..=n).map(|i| p.pow(i)).collect();
        let encode = |v: &[u32]| v.iter().zip(&pow_p).map(|(c, m)| c * m).sum::<u32>();
        let mut exp = Vec::with_capacity(order as usize);
        let gen_is_x = n >= 2 && desc.generator.iter().enumerate().all(|(i, &c)| c == u32::from(i == 1));
        if gen_is_x {
            // Multiplication by x: shift the digits and fold the top digit
            // back with the modulus.
            let top_unit = pow_p[n as usize - 1];
            let fold: Vec<Vec<u32>> = (0..p)
                .map(|t| desc.modulus[..n as usize].iter().map(|&c| (p - c * t % p) % p).collect())
                .collect();
            let mut cur = 1u32;
            for _ in 0..order {
                exp.push(cur);
                let top = cur / top_unit;
                let shifted = (cur % top_unit) * p;
                let mut acc = 0u32;
                let mut rest = shifted;
                for (i, &m) in pow_p[..n as usize].iter().enumerate() {
                    let d = (rest % p + fold[top as usize][i]) % p;
                    acc += d * m;
                    rest /= p;
                }
                cur = acc;
            }
        } else {
            let mut cur = vec![0u32; n as usize];
            cur[0] = 1;
            for _ in 0..order {
                exp.push(encode(&cur));
                cur = polymulmod(&cur, &desc.generator, &desc.modulus, p);
            }
        }
        let mut log = vec![u32::MAX; q as usize];
        for (k, &x) in exp.iter().enumerate() {
            if x == 0 || log[x as usize] != u32::MAX {
                return invalid("generator is not primitive (or modulus reducible)");
            }
            log[x as usize] = k as u32;
        }
        let mut field = GfField {
            desc,
            p,
            n,
            q,
            pow_p,
            exp,
            log,
            trace_basis: Vec::new(),
        };
        let basis: Vec<u32> = (0..n)
            .map(|i| {
                let x = FqElem(field.pow_p[i as usize]);
                let t = (0..n).fold(FqElem::ZERO, |acc, j| field.add(acc, field.frobenius(x, j)));
                t.0
            })
            .collect();
        if basis.iter().any(|&t| t >= p) {
            return Err(Error::Internal("trace left the prime field".into()));
        }
        field.trace_basis = basis;
        Ok(field)
    }

    pub fn desc(&self) -> &FieldDesc {
        &self.desc
    }
    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    /// Number of elements.
    pub fn q(&self) -> u32 {
        self.q
    }
    /// Order of the multiplicative group, q − 1.
    pub fn unit_order(&self) -> u32 {
        self.q - 1
    }
    pub fn zero(&self) -> FqElem {
        FqElem::ZERO
    }
    pub fn one(&self) -> FqElem {
        FqElem::ONE
    }
    pub fn generator(&self) -> FqElem {
        FqElem(self.exp[1 % self.exp.len()])
    }

    /// All elements in encoding order.
    pub fn elements(&self) -> impl Iterator<Item = FqElem> {
        (0..self.q).map(FqElem)
    }

    /// Image of an integer under Z → F_p ⊂ F_q.
    pub fn from_int(&self, k: i64) -> FqElem {
        FqElem(k.rem_euclid(self.p as i64) as u32)
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FqElem> {
        if coeffs.len() > self.n as usize || coeffs.iter().any(|&c| c >= self.p) {
            return invalid(format!(
                "coefficient vector {coeffs:?} is not an element of F_{}^{}",
                self.p, self.n
            ));
        }
        Ok(FqElem(coeffs.iter().zip(&self.pow_p).map(|(c, m)| c * m).sum()))
    }

    pub fn from_index(&self, x: u64) -> Result<FqElem> {
        if x >= self.q as u64 {
            return invalid(format!("{x} is not an element index of a field of size {}", self.q));
        }
        Ok(FqElem(x as u32))
    }

    pub fn coeffs(&self, x: FqElem) -> Vec<u32> {
        digits(x.0 as u64, self.p, self.n)
    }

    /// The element as an integer in 0..p, if it lies in the prime field.
    pub fn as_prime(&self, x: FqElem) -> Option<u32> {
        (x.0 < self.p).then_some(x.0)
    }

    pub fn add(&self, a: FqElem, b: FqElem) -> FqElem {
        let p = self.p;
        if p == 2 {
            return FqElem(a.0 ^ b.0);
        }
        if self.n == 1 {
            let s = a.0 + b.0;
            return FqElem(if s >= p { s - p } else { s });
        }
        let (mut x, mut y, mut r, mut m) = (a.0, b.0, 0u32, 1u32);
        while x > 0 || y > 0 {
            let d = x % p + y % p;
            r += if d >= p { d - p } else { d } * m;
            x /= p;
            y /= p;
            m = m.wrapping_mul(p);
        }
        FqElem(r)
    }

    pub fn neg(&self, a: FqElem) -> FqElem {
        let p = self.p;
        if p == 2 {
            return a;
        }
        if self.n == 1 {
            return FqElem((p - a.0) % p);
        }
        let (mut x, mut r, mut m) = (a.0, 0u32, 1u32);
        while x > 0 {
            r += ((p - x % p) % p) * m;
            x /= p;
            m = m.wrapping_mul(p);
        }
        FqElem(r)
    }

    pub fn sub(&self, a: FqElem, b: FqElem) -> FqElem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FqElem, b: FqElem) -> FqElem {
        if a.0 == 0 || b.0 == 0 {
            return FqElem::ZERO;
        }
        let s = self.log[a.0 as usize] as u64 + self.log[b.0 as usize] as u64;
        FqElem(self.exp[(s % self.unit_order() as u64) as usize])
    }

    /// Multiplication by an integer (repeated addition).
    pub fn mul_int(&self, a: FqElem, k: i64) -> FqElem {
        self.mul(a, self.from_int(k))
    }

    pub fn checked_inv(&self, a: FqElem) -> Result<FqElem> {
        if a.is_zero() {
            return Err(Error::NotInvertible("zero in a finite field".into()));
        }
        let l = self.log[a.0 as usize];
        let o = self.unit_order();
        Ok(FqElem(self.exp[((o - l) % o) as usize]))
    }

    /// Inverse of a nonzero element.  Panics on zero: callers guarantee units.
    pub fn inv(&self, a: FqElem) -> FqElem {
        self.checked_inv(a).expect("inverse of zero field element")
    }

    pub fn div(&self, a: FqElem, b: FqElem) -> FqElem {
        self.mul(a, self.inv(b))
    }

    /// `a^k` for any integer k (k < 0 requires a ≠ 0; 0^0 = 1).
    pub fn pow(&self, a: FqElem, k: i64) -> FqElem {
        if a.is_zero() {
            return if k == 0 { FqElem::ONE } else { FqElem::ZERO };
        }
        let o = self.unit_order() as i128;
        let e = (self.log[a.0 as usize] as i128 * k as i128).rem_euclid(o);
        FqElem(self.exp[e as usize])
    }

    /// `x^{p^i}`.
    pub fn frobenius(&self, x: FqElem, i: u32) -> FqElem {
        if x.is_zero() {
            return x;
        }
        let o = self.unit_order() as u64;
        let mut e = self.log[x.0 as usize] as u64;
        for _ in 0..(i % self.n.max(1)) {
            e = e * self.p as u64 % o;
        }
        FqElem(self.exp[e as usize])
    }

    /// The unique p-th root (inverse Frobenius).
    pub fn pth_root(&self, x: FqElem) -> FqElem {
        self.frobenius(x, self.n - 1)
    }

    /// Discrete logarithm with respect to the field generator.
    pub fn log(&self, x: FqElem) -> Result<u32> {
        if x.is_zero() {
            return Err(Error::InvalidInput("discrete log of zero".into()));
        }
        Ok(self.log[x.0 as usize])
    }

    /// Discrete log of a nonzero element; panics on zero.
    pub fn log_unit(&self, x: FqElem) -> u32 {
        debug_assert!(!x.is_zero());
        self.log[x.0 as usize]
    }

    /// `g^k` for the field generator g.
    pub fn exp(&self, k: u64) -> FqElem {
        FqElem(self.exp[(k % self.unit_order() as u64) as usize])
    }

    /// Discrete logarithm to a primitive `base`.
    pub fn dlog(&self, x: FqElem, base: FqElem) -> Result<u64> {
        let o = self.unit_order() as u64;
        let lb = self.log(base)? as u64;
        let lx = self.log(x)? as u64;
        let Some(binv) = inv_mod(lb, o) else {
            return invalid("dlog base is not primitive");
        };
        Ok(((lx as u128 * binv as u128) % o as u128) as u64)
    }

    /// Multiplicative order of a nonzero element.
    pub fn order_of(&self, x: FqElem) -> Result<u64> {
        let o = self.unit_order() as u64;
        let l = self.log(x)? as u64;
        Ok(o / gcd(l, o))
    }

    /// Absolute trace Tr_{F_q/F_p}(x) as an integer in 0..p.
    pub fn trace_fp(&self, x: FqElem) -> u32 {
        if self.n == 1 {
            return x.0;
        }
        let p = self.p;
        let (mut v, mut acc) = (x.0, 0u32);
        for &t in &self.trace_basis {
            acc = (acc + (v % p) * t) % p;
            v /= p;
        }
        acc
    }

    /// Absolute norm N_{F_q/F_p}(x) as an integer in 0..p.
    pub fn norm_fp(&self, x: FqElem) -> u32 {
        if x.is_zero() {
            return 0;
        }
        let step = (self.q as u64 - 1) / (self.p as u64 - 1);
        self.pow(x, step as i64).0
    }

    pub fn is_square(&self, x: FqElem) -> bool {
        x.is_zero() || self.p == 2 || self.log[x.0 as usize].is_multiple_of(2)
    }

    /// A square root if one exists (the one with even logarithm halved).
    pub fn sqrt(&self, x: FqElem) -> Option<FqElem> {
        if x.is_zero() {
            return Some(x);
        }
        let l = self.log[x.0 as usize] as u64;
        let o = self.unit_order() as u64;
        if self.p == 2 {
            return Some(self.exp(if l.is_multiple_of(2) { l / 2 } else { (l + o) / 2 }));
        }
        l.is_multiple_of(2).then(|| self.exp(l / 2))
    }
}

/// Global cache of tabulated fields keyed by (p, n); construction is
/// deterministic so sharing them is observationally pure.
pub fn field(p: u32, n: u32) -> Result<Field> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), Field>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(f) = cache.lock().expect("field cache poisoned").get(&(p, n)) {
        return Ok(f.clone());
    }
    let built = Arc::new(GfField::from_desc(fq_build(p, n, 0)?)?);
    let mut guard = cache.lock().expect("field cache poisoned");
    Ok(guard.entry((p, n)).or_insert(built).clone())
}

/// The field of q = p^n elements, for q given as an integer.
pub fn field_of_size(q: u64) -> Result<Field> {
    let f = prime_factors(q);
    if f.len() != 1 {
        return invalid(format!("{q} is not a prime power"));
    }
    let p = f[0];
    let mut n = 0u32;
    let mut r = q;
    while r > 1 {
        r /= p;
        n += 1;
    }
    field(p as u32, n)
}

/// The degree-m extension of `base` (as a standalone tabulated field).
pub fn extension(base: &Field, m: u32) -> Result<Field> {
    if m == 0 {
        return invalid("extension degree must be at least 1");
    }
    let n = base.n.checked_mul(m).ok_or_else(|| Error::InvalidInput("degree overflow".into()))?;
    let size = (base.p as f64).powi(n as i32);
    if size > FIELD_CAP as f64 {
        return Err(Error::CapExceeded {
            what: format!("field F_{}^{}", base.p, n),
            needed: size as u64,
            cap: FIELD_CAP,
        });
    }
    field(base.p, n)
}

/// A field embedding F_q → F_Q, determined by the image of the generator.
pub struct TowerEmbedding {
    from: Field,
    to: Field,
    image: FqElem,
    step: u64,
    t: u64,
    t_inv: u64,
}

impl std::fmt::Debug for TowerEmbedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} -> {:?}", self.from, self.to)
    }
}

impl TowerEmbedding {
    /// Finds the root of the subfield modulus with the smallest logarithm in
    /// the big field and sends the subfield generator to it.
    pub fn new(from: &Field, to: &Field) -> Result<TowerEmbedding> {
        if from.p != to.p || !to.n.is_multiple_of(from.n) {
            return invalid(format!("{:?} does not embed in {:?}", from, to));
        }
        let small = from.unit_order() as u64;
        let big = to.unit_order() as u64;
        let step = big / small;
        let modulus: Vec<FqElem> = from.desc.modulus.iter().map(|&c| to.from_int(c as i64)).collect();
        let gen_poly: Vec<FqElem> = from.desc.generator.iter().map(|&c| to.from_int(c as i64)).collect();
        // Roots of the (irreducible) subfield modulus lie in the subgroup of
        // index `step`; take the one with the smallest logarithm.
        for j in 0..small {
            let root = to.exp(j * step);
            if !poly::eval(to, &modulus, root).is_zero() {
                continue;
            }
            let image = poly::eval(to, &gen_poly, root);
            if image.is_zero() {
                continue;
            }
            let li = to.log_unit(image) as u64;
            if !li.is_multiple_of(step) {
                continue;
            }
            let t = li / step;
            let Some(t_inv) = inv_mod(t, small) else {
                continue;
            };
            return Ok(TowerEmbedding { from: from.clone(), to: to.clone(), image, step, t, t_inv });
        }
        Err(Error::Internal(format!("no embedding {:?} -> {:?}", from, to)))
    }

    pub fn from(&self) -> &Field {
        &self.from
    }
    pub fn to(&self) -> &Field {
        &self.to
    }
    pub fn degree(&self) -> u32 {
        self.to.n / self.from.n
    }
    pub fn image_of_generator(&self) -> FqElem {
        self.image
    }
    /// The exponent r with ι(g_q) = G^{r (Q−1)/(q−1)}.
    pub fn twist_exponent(&self) -> u64 {
        self.t
    }
    /// Inverse of [`Self::twist_exponent`] modulo q − 1.
    pub fn twist_inverse(&self) -> u64 {
        self.t_inv
    }
    /// (Q − 1)/(q − 1).
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn apply(&self, x: FqElem) -> FqElem {
        if x.is_zero() {
            return x;
        }
        let k = self.from.log_unit(x) as u128;
        let e = k * self.t as u128 * self.step as u128 % self.to.unit_order() as u128;
        self.to.exp(e as u64)
    }

    /// The subfield element mapping to `y`, if `y` lies in the image.
    pub fn preimage(&self, y: FqElem) -> Option<FqElem> {
        if y.is_zero() {
            return Some(y);
        }
        let l = self.to.log_unit(y) as u64;
        if !l.is_multiple_of(self.step) {
            return None;
        }
        let small = self.from.unit_order() as u64;
        Some(self.from.exp(((l / self.step) as u128 * self.t_inv as u128 % small as u128) as u64))
    }

    /// Tr_{F_Q/F_q}(y) as an element of the subfield.
    pub fn trace(&self, y: FqElem) -> FqElem {
        let m = self.degree();
        let mut acc = FqElem::ZERO;
        for i in 0..m {
            acc = self.to.add(acc, self.to.frobenius(y, i * self.from.n));
        }
        self.preimage(acc).expect("trace lies in the subfield")
    }

    /// N_{F_Q/F_q}(y) as an element of the subfield.
    pub fn norm(&self, y: FqElem) -> FqElem {
        if y.is_zero() {
            return y;
        }
        let small = self.from.unit_order() as u64;
        let l = self.to.log_unit(y) as u128;
        self.from.exp((l * self.t_inv as u128 % small as u128) as u64)
    }

    /// Discrete log (in the subfield) of N_{F_Q/F_q}(y).
    pub fn norm_log(&self, y: FqElem) -> u64 {
        let small = self.from.unit_order() as u64;
        (self.to.log_unit(y) as u128 * self.t_inv as u128 % small as u128) as u64
    }
}

/// Cached embedding between two tabulated fields.
pub fn embedding(from: &Field, to: &Field) -> Result<Arc<TowerEmbedding>> {
    type Key = (u32, u32, u32);
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<TowerEmbedding>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (from.p, from.n, to.n);
    if from.desc == *field(from.p, from.n)?.desc() && to.desc == *field(to.p, to.n)?.desc() {
        if let Some(e) = cache.lock().expect("embedding cache poisoned").get(&key) {
            return Ok(e.clone());
        }
        let e = Arc::new(TowerEmbedding::new(from, to)?);
        let mut guard = cache.lock().expect("embedding cache poisoned");
        return Ok(guard.entry(key).or_insert(e).clone());
    }
    Ok(Arc::new(TowerEmbedding::new(from, to)?))
}
