//! Rank-1 quasicharacters of F_Q((π))^×: a value at the uniformizer, a tame
//! exponent on the residue field, and a wild Artin–Schreier datum h acting on
//! units by u ↦ ψ(Tr Res(h du/u)).

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::rem;
use crate::coeff::{CoeffElem, CoeffField};
use crate::error::{invalid, Error, Result};
use crate::gf::{Field, FqElem, GfField};
use crate::localfield::{Form, LaurentSeries};

/// Largest (O/m^ν)^× tabulated by [`to_oracle`].
pub const ORACLE_CAP: u64 = 1 << 16;

/// Bound on Artin–Schreier reduction steps.
const REDUCTION_LIMIT: usize = 64;

/// A Laurent polynomial Σ_{j ≥ 1} h_{−j} π^{−j} with zero constant term.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct WildDatum {
    /// `coeffs[j]` is the coefficient of π^{−(j+1)}; no trailing zeros.
    coeffs: Vec<FqElem>,
}

impl fmt::Debug for WildDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let t: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, c)| format!("{}·π^-{}", c.0, j + 1))
            .collect();
        write!(f, "{}", t.join(" + "))
    }
}

impl WildDatum {
    pub fn zero() -> WildDatum {
        WildDatum::default()
    }

    /// From (exponent, coefficient) pairs with negative exponents.
    pub fn from_terms(k: &GfField, terms: &[(i64, FqElem)]) -> Result<WildDatum> {
        let mut coeffs = Vec::new();
        for &(e, c) in terms {
            if e >= 0 {
                return invalid(format!("wild datum exponent {e} must be negative"));
            }
            let j = (-e - 1) as usize;
            if coeffs.len() <= j {
                coeffs.resize(j + 1, FqElem::ZERO);
            }
            coeffs[j] = k.add(coeffs[j], c);
        }
        Ok(WildDatum::from_coeffs(coeffs))
    }

    /// `coeffs[j]` is the coefficient of π^{−(j+1)}.
    pub fn from_coeffs(mut coeffs: Vec<FqElem>) -> WildDatum {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        WildDatum { coeffs }
    }

    /// The polar part of a Laurent series.
    pub fn polar_part(s: &LaurentSeries) -> WildDatum {
        let mut coeffs = Vec::new();
        for (i, c) in s.terms() {
            if i < 0 {
                let j = (-i - 1) as usize;
                if coeffs.len() <= j {
                    coeffs.resize(j + 1, FqElem::ZERO);
                }
                coeffs[j] = c;
            }
        }
        WildDatum::from_coeffs(coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    /// Pole order (−valuation), 0 for the zero datum.
    pub fn pole_order(&self) -> usize {
        self.coeffs.len()
    }
    pub fn coeffs(&self) -> &[FqElem] {
        &self.coeffs
    }
    /// Coefficient of π^{−j} for j ≥ 1.
    pub fn coeff(&self, j: usize) -> FqElem {
        self.coeffs.get(j - 1).copied().unwrap_or(FqElem::ZERO)
    }
    pub fn leading(&self) -> Option<FqElem> {
        self.coeffs.last().copied()
    }
    /// (exponent, coefficient) pairs of nonzero terms.
    pub fn terms(&self) -> Vec<(i64, FqElem)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(j, &c)| (-(j as i64) - 1, c))
            .collect()
    }

    pub fn add(&self, k: &GfField, o: &WildDatum) -> WildDatum {
        let n = self.coeffs.len().max(o.coeffs.len());
        let get = |v: &[FqElem], i: usize| v.get(i).copied().unwrap_or(FqElem::ZERO);
        WildDatum::from_coeffs((0..n).map(|i| k.add(get(&self.coeffs, i), get(&o.coeffs, i))).collect())
    }

    pub fn neg(&self, k: &GfField) -> WildDatum {
        WildDatum::from_coeffs(self.coeffs.iter().map(|&c| k.neg(c)).collect())
    }

    pub fn scale(&self, k: &GfField, c: FqElem) -> WildDatum {
        WildDatum::from_coeffs(self.coeffs.iter().map(|&x| k.mul(x, c)).collect())
    }

    /// As a Laurent series known mod π^prec.
    pub fn to_series(&self, k: &Field, prec: i64) -> LaurentSeries {
        let n = self.coeffs.len() as i64;
        if n == 0 {
            return LaurentSeries::zero(k, prec);
        }
        let dense: Vec<FqElem> = self.coeffs.iter().rev().copied().collect();
        LaurentSeries::new(k, -n, dense, prec)
    }

    /// Res(h·D dπ) for D given by its coefficients D_0, D_1, … (D = Σ D_i π^i).
    pub fn pair_with(&self, k: &GfField, d: &[FqElem]) -> FqElem {
        let mut acc = FqElem::ZERO;
        for (j, &h) in self.coeffs.iter().enumerate() {
            if !h.is_zero() {
                acc = k.add(acc, k.mul(h, d[j]));
            }
        }
        acc
    }
}

/// Replaces leading terms a·π^{−pk} by a^{1/p}·π^{−k} (h ↦ h + g − g^p with
/// g = a^{1/p} π^{−k}) until the pole order is prime to p.  The character
/// u ↦ ψ(Tr Res(h du/u)) is unchanged since Tr Res(g^p du/u) = Tr Res(g du/u).
pub fn as_reduce(k: &GfField, h: &WildDatum) -> Result<WildDatum> {
    let p = k.p() as usize;
    let mut coeffs = h.coeffs.clone();
    for _ in 0..REDUCTION_LIMIT {
        let n = coeffs.len();
        if n == 0 || !n.is_multiple_of(p) {
            return Ok(WildDatum::from_coeffs(coeffs));
        }
        let a = coeffs[n - 1];
        coeffs[n - 1] = FqElem::ZERO;
        let j = n / p - 1;
        coeffs[j] = k.add(coeffs[j], k.pth_root(a));
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
    }
    Err(Error::Internal("Artin–Schreier reduction did not terminate".into()))
}

/// Extension type of a rank-1 sheaf at a point of the local trait.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    /// j_!χ: extended by zero.
    ExtensionByZero,
    /// j_*χ: middle extension.
    MiddleExtension,
    /// A sheaf supported on the closed point, of the given rank.
    Punctual { rank: u32 },
}

impl Kind {
    pub fn label(&self) -> &'static str {
        match self {
            Kind::ExtensionByZero => "j!",
            Kind::MiddleExtension => "j*",
            Kind::Punctual { .. } => "punctual",
        }
    }

    pub fn parse(s: &str) -> Result<Kind> {
        match s {
            "j!" | "extension-by-zero" => Ok(Kind::ExtensionByZero),
            "j*" | "middle-extension" => Ok(Kind::MiddleExtension),
            "punctual" => Ok(Kind::Punctual { rank: 1 }),
            other => invalid(format!("unknown kind {other:?} (expected j!, j* or punctual)")),
        }
    }

    /// Generic rank of the sheaf.
    pub fn generic_rank(&self) -> i64 {
        match self {
            Kind::Punctual { .. } => 0,
            _ => 1,
        }
    }
}

/// A rank-1 character χ of F_Q((π))^×:
/// χ(π^v u) = c_pi^v · χ_tame(ū) · ψ(Tr Res(h du/u)).
#[derive(Clone, PartialEq)]
pub struct LocalCharacter {
    field: Field,
    c_pi: CoeffElem,
    tame_e: u64,
    wild: WildDatum,
}

impl fmt::Debug for LocalCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "χ[{:?}; c_pi = {}, tame = {}, h = {:?}]",
            self.field, self.c_pi, self.tame_e, self.wild
        )
    }
}

impl LocalCharacter {
    /// Builds a character, reducing the wild datum and the tame exponent.
    pub fn new(field: &Field, c_pi: CoeffElem, tame_e: i64, wild: WildDatum) -> Result<LocalCharacter> {
        if c_pi.is_zero() {
            return invalid("c_pi must be a unit of Λ");
        }
        let wild = as_reduce(field, &wild)?;
        Ok(LocalCharacter {
            field: field.clone(),
            c_pi,
            tame_e: rem(tame_e, field.unit_order() as u64),
            wild,
        })
    }

    pub fn trivial(field: &Field, cf: &CoeffField) -> LocalCharacter {
        LocalCharacter { field: field.clone(), c_pi: cf.one(), tame_e: 0, wild: WildDatum::zero() }
    }

    /// The unramified character with χ(π) = c.
    pub fn unramified(field: &Field, c: CoeffElem) -> Result<LocalCharacter> {
        LocalCharacter::new(field, c, 0, WildDatum::zero())
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn c_pi(&self) -> CoeffElem {
        self.c_pi
    }
    pub fn tame_e(&self) -> u64 {
        self.tame_e
    }
    pub fn wild(&self) -> &WildDatum {
        &self.wild
    }
    /// Residue field size q_x.
    pub fn q(&self) -> u64 {
        self.field.q() as u64
    }

    /// Swan conductor: pole order of the reduced wild datum.
    pub fn swan(&self) -> u32 {
        self.wild.pole_order() as u32
    }

    pub fn is_ramified(&self) -> bool {
        self.tame_e != 0 || !self.wild.is_zero()
    }

    pub fn is_tame(&self) -> bool {
        self.wild.is_zero()
    }

    /// Artin conductor a(T, F) of the sheaf of the given kind.
    pub fn artin_a(&self, kind: Kind) -> i64 {
        match kind {
            Kind::Punctual { rank } => -(rank as i64),
            Kind::ExtensionByZero => 1 + self.swan() as i64,
            Kind::MiddleExtension => {
                if self.is_ramified() {
                    1 + self.swan() as i64
                } else {
                    0
                }
            }
        }
    }

    /// a(T, F, ω) = a(T, F) + rk·v(ω).
    pub fn a_with_form(&self, omega: &Form, kind: Kind) -> Result<i64> {
        let v = omega
            .valuation()
            .ok_or_else(|| Error::InvalidInput("the form is zero to its precision".into()))?;
        Ok(self.artin_a(kind) + kind.generic_rank() * v)
    }

    /// The tame part evaluated on a residue unit.
    pub fn tame_value(&self, cf: &CoeffField, u0: FqElem) -> Result<CoeffElem> {
        cf.kummer_chi(&self.field, self.tame_e as i64, u0)
    }

    /// Tr Res(h·dz/z) ∈ F_p, the exponent of ψ in the wild part of χ(z).
    pub fn wild_exponent(&self, z: &LaurentSeries) -> Result<u32> {
        if self.wild.is_zero() {
            return Ok(0);
        }
        let n = self.swan() as i64;
        if z.relative_prec() < n + 1 {
            return Err(Error::Precision(format!(
                "evaluation of a Swan-{n} character needs relative precision {}, got {}",
                n + 1,
                z.relative_prec()
            )));
        }
        let d = z.dlog()?;
        let dc: Vec<FqElem> = (0..n).map(|i| d.coeff(i)).collect::<Result<_>>()?;
        Ok(self.field.trace_fp(self.wild.pair_with(&self.field, &dc)))
    }

    /// χ(z) for a nonzero series z.
    pub fn eval(&self, cf: &CoeffField, z: &LaurentSeries) -> Result<CoeffElem> {
        let v = z
            .valuation()
            .ok_or_else(|| Error::InvalidInput("character evaluated at zero".into()))?;
        if !std::sync::Arc::ptr_eq(z.field(), &self.field) && **z.field() != *self.field {
            return invalid("series and character live over different residue fields");
        }
        let u0 = z.leading().expect("nonzero series");
        let w = self.wild_exponent(z)?;
        Ok(self.c_pi.pow(v) * self.tame_value(cf, u0)? * cf.psi(w as i64))
    }

    pub fn mul(&self, o: &LocalCharacter) -> Result<LocalCharacter> {
        if self.field != o.field {
            return invalid("characters over different residue fields");
        }
        LocalCharacter::new(
            &self.field,
            self.c_pi * o.c_pi,
            (self.tame_e + o.tame_e) as i64,
            self.wild.add(&self.field, &o.wild),
        )
    }

    pub fn inverse(&self) -> LocalCharacter {
        LocalCharacter {
            field: self.field.clone(),
            c_pi: self.c_pi.inv(),
            tame_e: rem(-(self.tame_e as i64), self.field.unit_order() as u64),
            wild: self.wild.neg(&self.field),
        }
    }

    /// χ ⊗ (unramified character with π ↦ c).
    pub fn twist_unramified(&self, c: CoeffElem) -> LocalCharacter {
        LocalCharacter { c_pi: self.c_pi * c, ..self.clone() }
    }

    /// Same character with a different value at π.
    pub fn with_c_pi(&self, c: CoeffElem) -> LocalCharacter {
        LocalCharacter { c_pi: c, ..self.clone() }
    }
}

/// A character tabulated on (O/m^ν)^×, plus its value at π.
#[derive(Clone, Debug)]
pub struct OracleCharacter {
    field: Field,
    nu: u32,
    c_pi: CoeffElem,
    table: Vec<CoeffElem>,
}

impl OracleCharacter {
    pub fn field(&self) -> &Field {
        &self.field
    }
    pub fn nu(&self) -> u32 {
        self.nu
    }
    pub fn c_pi(&self) -> CoeffElem {
        self.c_pi
    }
    pub fn table(&self) -> &[CoeffElem] {
        &self.table
    }
    pub fn len(&self) -> usize {
        self.table.len()
    }
    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Unit digits (u_0, …, u_{ν−1}) of the index-th unit.
    pub fn unit(&self, index: usize) -> Vec<FqElem> {
        unit_digits(&self.field, self.nu, index)
    }

    pub fn index_of(&self, u: &[FqElem]) -> usize {
        unit_index(&self.field, u)
    }

    pub fn value(&self, u: &[FqElem]) -> CoeffElem {
        self.table[self.index_of(u)]
    }

    /// Product of two units modulo π^ν.
    pub fn mul_units(&self, a: &[FqElem], b: &[FqElem]) -> Vec<FqElem> {
        let k = &self.field;
        let n = self.nu as usize;
        let mut out = vec![FqElem::ZERO; n];
        for i in 0..n {
            for j in 0..n - i {
                out[i + j] = k.add(out[i + j], k.mul(a[i], b[j]));
            }
        }
        out
    }

    /// Largest j ≥ 1 with χ nontrivial on 1 + m^j, or 0 if χ is tame.
    pub fn swan_from_table(&self) -> u32 {
        let q = self.field.q() as usize;
        for j in (1..self.nu).rev() {
            let count = q.pow(self.nu - j);
            for idx in 0..count {
                let mut u = vec![FqElem::ZERO; self.nu as usize];
                u[0] = FqElem::ONE;
                let mut r = idx;
                for slot in u.iter_mut().skip(j as usize) {
                    *slot = FqElem((r % q) as u32);
                    r /= q;
                }
                if !self.value(&u).is_one() {
                    return j;
                }
            }
        }
        0
    }
}

fn unit_digits(k: &GfField, nu: u32, index: usize) -> Vec<FqElem> {
    let q = k.q() as usize;
    let mut r = index;
    let mut u = Vec::with_capacity(nu as usize);
    u.push(FqElem((r % (q - 1)) as u32 + 1));
    r /= q - 1;
    for _ in 1..nu {
        u.push(FqElem((r % q) as u32));
        r /= q;
    }
    u
}

fn unit_index(k: &GfField, u: &[FqElem]) -> usize {
    let q = k.q() as usize;
    let mut idx = 0usize;
    for &d in u[1..].iter().rev() {
        idx = idx * q + d.0 as usize;
    }
    idx * (q - 1) + (u[0].0 as usize - 1)
}

/// Tabulates χ on (O/m^ν)^× by direct evaluation and verifies
/// multiplicativity (exhaustively for small tables, on sampled pairs above).
pub fn to_oracle(chi: &LocalCharacter, cf: &CoeffField, nu: u32) -> Result<OracleCharacter> {
    let k = chi.field().clone();
    let q = k.q() as u64;
    let size = (q - 1).saturating_mul(q.saturating_pow(nu.saturating_sub(1)));
    if nu == 0 {
        return invalid("ν must be at least 1");
    }
    if size > ORACLE_CAP {
        return Err(Error::CapExceeded { what: "oracle table (O/m^ν)^×".into(), needed: size, cap: ORACLE_CAP });
    }
    if nu < chi.swan() + 1 {
        return invalid(format!("ν = {nu} is below the Swan level {} + 1", chi.swan()));
    }
    let mut table = Vec::with_capacity(size as usize);
    for idx in 0..size as usize {
        let u = unit_digits(&k, nu, idx);
        let z = LaurentSeries::new(&k, 0, u, nu as i64);
        table.push(chi.eval(cf, &z)?);
    }
    let oracle = OracleCharacter { field: k, nu, c_pi: chi.c_pi(), table };
    verify_multiplicative(&oracle)?;
    Ok(oracle)
}

fn verify_multiplicative(o: &OracleCharacter) -> Result<()> {
    let n = o.len();
    let check = |i: usize, j: usize| -> Result<()> {
        let (a, b) = (o.unit(i), o.unit(j));
        let ab = o.mul_units(&a, &b);
        if o.value(&ab) != o.table[i] * o.table[j] {
            return Err(Error::Internal(format!("oracle table is not multiplicative at units {i}, {j}")));
        }
        Ok(())
    };
    if n <= 512 {
        for i in 0..n {
            for j in 0..n {
                check(i, j)?;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..4096 {
            check(rng.gen_range(0..n), rng.gen_range(0..n))?;
        }
    }
    Ok(())
}
