//! The coefficient field Λ = F_ℓ together with the additive character ψ and
//! the tame (Kummer) characters of finite fields, all valued in Λ^×.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{inv_mod, is_prime, lcm, mul_mod, order_mod, pow_mod, prime_factors, rem};
use crate::error::{invalid, Error, Result};
use crate::gf::{FqElem, GfField};

/// Default bound on the prime search.
pub const ELL_SEARCH_CAP: u64 = 1 << 48;

/// An element of F_ℓ; carries its modulus so that operators can be used.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoeffElem {
    v: u64,
    ell: u64,
}

impl fmt::Debug for CoeffElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.v, self.ell)
    }
}

impl fmt::Display for CoeffElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

impl CoeffElem {
    pub fn value(self) -> u64 {
        self.v
    }
    pub fn ell(self) -> u64 {
        self.ell
    }
    pub fn is_zero(self) -> bool {
        self.v == 0
    }
    pub fn is_one(self) -> bool {
        self.v == 1
    }
    /// Zero of the same field.
    pub fn zero_like(self) -> CoeffElem {
        CoeffElem { v: 0, ell: self.ell }
    }
    /// One of the same field.
    pub fn one_like(self) -> CoeffElem {
        CoeffElem { v: 1 % self.ell, ell: self.ell }
    }

    pub fn checked_inv(self) -> Result<CoeffElem> {
        inv_mod(self.v, self.ell)
            .filter(|_| self.v != 0)
            .map(|v| CoeffElem { v, ell: self.ell })
            .ok_or_else(|| Error::NotInvertible("zero in Λ".into()))
    }

    /// Inverse of a unit; panics on zero (callers guarantee units).
    pub fn inv(self) -> CoeffElem {
        self.checked_inv().expect("inverse of zero in Λ")
    }

    /// `self^k` for any integer k (negative k requires a unit).
    pub fn pow(self, k: i64) -> CoeffElem {
        let base = if k < 0 { self.inv() } else { self };
        CoeffElem { v: pow_mod(base.v, k.unsigned_abs(), self.ell), ell: self.ell }
    }

    /// The centered representative in (−ℓ/2, ℓ/2].
    pub fn centered(self) -> i64 {
        if self.v > self.ell / 2 {
            self.v as i64 - self.ell as i64
        } else {
            self.v as i64
        }
    }
}

impl Add for CoeffElem {
    type Output = CoeffElem;
    fn add(self, o: CoeffElem) -> CoeffElem {
        debug_assert_eq!(self.ell, o.ell);
        let s = self.v + o.v;
        CoeffElem { v: if s >= self.ell { s - self.ell } else { s }, ell: self.ell }
    }
}

impl AddAssign for CoeffElem {
    fn add_assign(&mut self, o: CoeffElem) {
        *self = *self + o;
    }
}

impl Neg for CoeffElem {
    type Output = CoeffElem;
    fn neg(self) -> CoeffElem {
        CoeffElem { v: (self.ell - self.v) % self.ell, ell: self.ell }
    }
}

impl Sub for CoeffElem {
    type Output = CoeffElem;
    fn sub(self, o: CoeffElem) -> CoeffElem {
        self + (-o)
    }
}

impl Mul for CoeffElem {
    type Output = CoeffElem;
    fn mul(self, o: CoeffElem) -> CoeffElem {
        debug_assert_eq!(self.ell, o.ell);
        CoeffElem { v: mul_mod(self.v, o.v, self.ell), ell: self.ell }
    }
}

impl MulAssign for CoeffElem {
    fn mul_assign(&mut self, o: CoeffElem) {
        *self = *self * o;
    }
}

impl Div for CoeffElem {
    type Output = CoeffElem;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: CoeffElem) -> CoeffElem {
        self * o.inv()
    }
}

/// The prime field F_ℓ as a factory for [`CoeffElem`]s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    ell: u64,
}

impl PrimeField {
    pub fn new(ell: u64) -> Result<PrimeField> {
        if !is_prime(ell) {
            return invalid(format!("ℓ = {ell} is not prime"));
        }
        Ok(PrimeField { ell })
    }
    pub fn ell(self) -> u64 {
        self.ell
    }
    pub fn elem(self, x: i64) -> CoeffElem {
        CoeffElem { v: rem(x, self.ell), ell: self.ell }
    }
    pub fn from_u64(self, x: u64) -> CoeffElem {
        CoeffElem { v: x % self.ell, ell: self.ell }
    }
    pub fn zero(self) -> CoeffElem {
        self.elem(0)
    }
    pub fn one(self) -> CoeffElem {
        self.elem(1)
    }
    /// Smallest primitive root.
    pub fn primitive_root(self) -> CoeffElem {
        let factors = prime_factors(self.ell - 1);
        (1..self.ell)
            .find(|&h| order_mod(h, self.ell, &factors) == self.ell - 1)
            .map(|h| self.from_u64(h))
            .expect("prime fields have primitive roots")
    }
    /// A root of unity of exact order `n` (requires n | ℓ − 1), namely
    /// h^{(ℓ−1)/n} for the smallest primitive root h.
    pub fn root_of_unity(self, n: u64) -> Result<CoeffElem> {
        if n == 0 || !(self.ell - 1).is_multiple_of(n) {
            return invalid(format!("ℓ = {} has no primitive {n}-th root of unity", self.ell));
        }
        Ok(self.primitive_root().pow(((self.ell - 1) / n) as i64))
    }
}

/// Λ with its distinguished roots of unity ζ_p and ζ_M.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffField {
    lam: PrimeField,
    p: u32,
    m: u64,
    d_max: u64,
    zeta_p: CoeffElem,
    zeta_m: CoeffElem,
    psi_table: Vec<CoeffElem>,
}

/// The summary recorded in every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoeffInfo {
    pub ell: u64,
    #[serde(rename = "M")]
    pub m: u64,
    pub zeta_p: u64,
    pub zeta_m: u64,
}

fn admissible(ell: u64, modulus: u64, floor: u64) -> bool {
    ell > floor && ell % modulus == 1 && is_prime(ell)
}

impl CoeffField {
    /// Smallest prime ℓ ≡ 1 (mod p·M) with ℓ > max(d_max, p·M), where M is the
    /// lcm of `orders`.
    pub fn setup(p: u32, orders: &[u64], d_max: u64) -> Result<CoeffField> {
        Self::setup_after(p, orders, d_max, 0, ELL_SEARCH_CAP)
    }

    /// As [`Self::setup`] but only considering primes above `after`.
    pub fn setup_after(p: u32, orders: &[u64], d_max: u64, after: u64, cap: u64) -> Result<CoeffField> {
        if !is_prime(p as u64) {
            return invalid(format!("p = {p} is not prime"));
        }
        let m = orders.iter().fold(1u64, |acc, &o| lcm(acc, o.max(1)));
        let modulus = (p as u64).checked_mul(m).ok_or_else(|| Error::InvalidInput("p·M overflows".into()))?;
        let floor = d_max.max(modulus).max(after);
        let mut ell = floor - floor % modulus + 1;
        while ell <= floor {
            ell += modulus;
        }
        while !admissible(ell, modulus, floor) {
            ell += modulus;
            if ell > cap {
                return Err(Error::CapExceeded { what: "ℓ prime search".into(), needed: ell, cap });
            }
        }
        Self::with_ell(p, m, d_max, ell)
    }

    /// Pins a specific admissible ℓ.
    pub fn pinned(p: u32, orders: &[u64], d_max: u64, ell: u64) -> Result<CoeffField> {
        let m = orders.iter().fold(1u64, |acc, &o| lcm(acc, o.max(1)));
        let modulus = p as u64 * m;
        if !admissible(ell, modulus, d_max.max(modulus)) {
            return invalid(format!(
                "ℓ = {ell} is not admissible: need a prime ≡ 1 mod {modulus} exceeding {}",
                d_max.max(modulus)
            ));
        }
        Self::with_ell(p, m, d_max, ell)
    }

    fn with_ell(p: u32, m: u64, d_max: u64, ell: u64) -> Result<CoeffField> {
        let lam = PrimeField::new(ell)?;
        let zeta_p = lam.root_of_unity(p as u64)?;
        let zeta_m = lam.root_of_unity(m)?;
        let psi_table = (0..p as i64).map(|a| zeta_p.pow(a)).collect();
        Ok(CoeffField { lam, p, m, d_max, zeta_p, zeta_m, psi_table })
    }

    /// The next admissible prime with the same parameters (double-ℓ protocol).
    pub fn next(&self) -> Result<CoeffField> {
        let mut orders = vec![self.m];
        orders.retain(|&o| o > 0);
        Self::setup_after(self.p, &orders, self.d_max, self.lam.ell, ELL_SEARCH_CAP)
    }

    pub fn lam(&self) -> PrimeField {
        self.lam
    }
    pub fn ell(&self) -> u64 {
        self.lam.ell
    }
    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn m(&self) -> u64 {
        self.m
    }
    pub fn d_max(&self) -> u64 {
        self.d_max
    }
    pub fn zeta_p(&self) -> CoeffElem {
        self.zeta_p
    }
    pub fn zeta_m(&self) -> CoeffElem {
        self.zeta_m
    }
    pub fn info(&self) -> CoeffInfo {
        CoeffInfo { ell: self.ell(), m: self.m, zeta_p: self.zeta_p.v, zeta_m: self.zeta_m.v }
    }
    pub fn one(&self) -> CoeffElem {
        self.lam.one()
    }
    pub fn elem(&self, x: i64) -> CoeffElem {
        self.lam.elem(x)
    }

    /// q^a in Λ for any integer a.
    pub fn q_pow(&self, q: u64, a: i64) -> CoeffElem {
        self.lam.from_u64(q).pow(a)
    }

    /// ψ(a) = ζ_p^a.
    pub fn psi(&self, a: i64) -> CoeffElem {
        self.psi_table[rem(a, self.p as u64) as usize]
    }

    /// ψ(Tr_{F_q/F_p}(x)).
    pub fn psi_trace(&self, k: &GfField, x: FqElem) -> CoeffElem {
        self.psi_table[k.trace_fp(x) as usize]
    }

    /// Primitive N-th root of unity ζ_M^{M/N}, for N | M.
    pub fn zeta(&self, n: u64) -> Result<CoeffElem> {
        if n == 0 || !self.m.is_multiple_of(n) {
            return Err(Error::Unsupported(format!(
                "roots of unity of order {n} are not tracked (M = {})",
                self.m
            )));
        }
        Ok(self.zeta_m.pow((self.m / n) as i64))
    }

    /// The tame character x ↦ ζ_{q−1}^{e·log x} of F_q^×.
    pub fn kummer_chi(&self, k: &GfField, e: i64, x: FqElem) -> Result<CoeffElem> {
        let n = k.unit_order() as u64;
        let l = k.log(x)? as i64;
        let z = self.zeta(n)?;
        Ok(z.pow(rem(e, n) as i64 * l % n as i64))
    }

    /// ζ_p^a ζ_N^b.
    pub fn root(&self, a: i64, n: u64, b: i64) -> Result<CoeffElem> {
        Ok(self.psi(a) * self.zeta(n)?.pow(rem(b, n) as i64))
    }
}

/// An exact integer combination Σ c_{a,b} ζ_p^a ζ_N^b, optionally scaled by a
/// power of an integer q and a sign.  Character sums are accumulated in this
/// form so that they are independent of ℓ and can be embedded in ℂ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootSum {
    p: u32,
    n: u64,
    counts: BTreeMap<(u32, u64), i64>,
    q: u64,
    q_exp: i64,
}

impl RootSum {
    pub fn new(p: u32, n: u64) -> RootSum {
        RootSum { p, n: n.max(1), counts: BTreeMap::new(), q: 1, q_exp: 0 }
    }

    /// From a dense histogram indexed by `a * n + b`.
    pub fn from_histogram(p: u32, n: u64, hist: &[i64]) -> RootSum {
        let mut s = RootSum::new(p, n);
        for (i, &c) in hist.iter().enumerate() {
            if c != 0 {
                s.counts.insert(((i as u64 / s.n) as u32, i as u64 % s.n), c);
            }
        }
        s
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Adds `c · ζ_p^a ζ_N^b`.
    pub fn add_term(&mut self, a: i64, b: i64, c: i64) {
        let key = (rem(a, self.p as u64) as u32, rem(b, self.n));
        let e = self.counts.entry(key).or_insert(0);
        *e += c;
        if *e == 0 {
            self.counts.remove(&key);
        }
    }

    /// Multiplies by an integer.
    pub fn scaled(mut self, c: i64) -> RootSum {
        for v in self.counts.values_mut() {
            *v *= c;
        }
        self.counts.retain(|_, v| *v != 0);
        self
    }

    /// Multiplies by q^e.
    pub fn with_q_power(mut self, q: u64, e: i64) -> RootSum {
        assert!(self.q_exp == 0 || self.q == q, "mixed q-power bases in a root sum");
        self.q = q;
        self.q_exp += e;
        self
    }

    pub fn counts(&self) -> &BTreeMap<(u32, u64), i64> {
        &self.counts
    }

    /// Value in Λ.
    pub fn eval(&self, cf: &CoeffField) -> Result<CoeffElem> {
        let zn = cf.zeta(self.n)?;
        let mut acc = cf.lam.zero();
        for (&(a, b), &c) in &self.counts {
            acc += cf.elem(c) * cf.psi(a as i64) * zn.pow(b as i64);
        }
        Ok(acc * cf.q_pow(self.q, self.q_exp))
    }

    /// Complex value under ζ_p ↦ e^{2πi j/p}, ζ_N ↦ e^{2πi j/N}.
    pub fn complex_embed(&self, root_choice: u64) -> Complex64 {
        let tau = std::f64::consts::TAU;
        let mut acc = Complex64::new(0.0, 0.0);
        for (&(a, b), &c) in &self.counts {
            let theta = tau * (root_choice as f64)
                * ((a as f64) / self.p as f64 + (b as f64) / self.n as f64);
            acc += Complex64::from_polar(c as f64, theta);
        }
        acc * (self.q as f64).powi(self.q_exp as i32)
    }
}

/// Complex display of a tracked value; untracked values have no embedding.
pub fn complex_embed(value: Option<&RootSum>, root_choice: u64) -> Result<Complex64> {
    value
        .map(|s| s.complex_embed(root_choice))
        .ok_or_else(|| Error::Unsupported("no embedding available: value is not symbolically tracked".into()))
}
