//! Local ε-factors of rank-1 characters at the geometric Frobenius.
//!
//! The primitive is the Tate sum over (O/m^ν)^×; unramified, punctual and
//! stationary-phase closed forms are cross-checked against it.  Throughout,
//! χ_cyc(Frob) = q^{−1}: geometric Frobenius, the only normalization under
//! which the unramified formula is compatible with change of the 1-form.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chars::{Kind, LocalCharacter};
use crate::coeff::{CoeffElem, CoeffField, RootSum};
use crate::error::{invalid, Error, Result};
use crate::gf::{FqElem, GfField};
use crate::localfield::{Form, LaurentSeries};

/// Default bound on the number of terms of a Tate sum.
pub const TATE_CAP: u64 = 1 << 22;

/// Dense root-sum histograms are used up to this many (ψ, tame) cells.
const DENSE_HISTOGRAM_LIMIT: u64 = 1 << 24;

/// Number of 1-units handled per parallel work item.
const CHUNK: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TateSum,
    Unramified,
    Punctual,
    ClosedForm,
    Combined,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::TateSum => "tate_sum",
            Method::Unramified => "unramified",
            Method::Punctual => "punctual",
            Method::ClosedForm => "closed_form",
            Method::Combined => "combined",
        }
    }
}

/// ε(T, F, ω)(Frob) with its conductors.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonResult {
    pub value: CoeffElem,
    /// a(T, F).
    pub conductor_a: i64,
    /// a(T, F, ω).
    pub conductor_a_omega: i64,
    pub method: Method,
    /// The value as an exact root-of-unity sum, when that is cheap to keep.
    pub symbolic: Option<RootSum>,
}

impl EpsilonResult {
    /// Product of two ε-factors (direct sum of the underlying objects).
    pub fn combine(&self, o: &EpsilonResult) -> EpsilonResult {
        EpsilonResult {
            value: self.value * o.value,
            conductor_a: self.conductor_a + o.conductor_a,
            conductor_a_omega: self.conductor_a_omega + o.conductor_a_omega,
            method: Method::Combined,
            symbolic: None,
        }
    }
}

/// Outcome of an identity check: both sides and the verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub lhs: u64,
    pub rhs: u64,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, lhs: CoeffElem, rhs: CoeffElem) -> CheckReport {
        CheckReport { name: name.into(), lhs: lhs.value(), rhs: rhs.value(), pass: lhs == rhs }
    }
}

fn require_odd(k: &GfField) -> Result<()> {
    if k.p() == 2 {
        return Err(Error::Unsupported("quadratic Gauss sums need odd characteristic".into()));
    }
    Ok(())
}

/// γ_ψ(c) = −Σ_{t ∈ F_q} ψ(Tr(c t²/2)) as a root sum.
pub fn gamma_psi_symbolic(k: &GfField, c: FqElem) -> Result<RootSum> {
    require_odd(k)?;
    if c.is_zero() {
        return invalid("γ_ψ(0) is not defined");
    }
    let half = k.inv(k.from_int(2));
    let ch = k.mul(c, half);
    let mut s = RootSum::new(k.p(), 1);
    for t in k.elements() {
        s.add_term(k.trace_fp(k.mul(ch, k.mul(t, t))) as i64, 0, -1);
    }
    Ok(s)
}

/// γ_ψ(c) ∈ Λ: the quadratic Gauss sum, negated (det of Frobenius on H¹_c).
pub fn gamma_psi(k: &GfField, cf: &CoeffField, c: FqElem) -> Result<CoeffElem> {
    gamma_psi_symbolic(k, c)?.eval(cf)
}

fn omega_valuation(omega: &Form) -> Result<i64> {
    omega
        .valuation()
        .ok_or_else(|| Error::InvalidInput("the 1-form is zero to its precision".into()))
}

/// ε of an unramified character with its middle extension: χ(π)^{v(ω)} q^{v(ω)}.
pub fn eps_unramified(chi: &LocalCharacter, cf: &CoeffField, omega: &Form) -> Result<EpsilonResult> {
    if chi.is_ramified() {
        return invalid("eps_unramified requires an unramified character");
    }
    let v = omega_valuation(omega)?;
    let q = chi.q();
    let value = chi.c_pi().pow(v) * cf.q_pow(q, v);
    let symbolic = chi.c_pi().pow(v).is_one().then(|| {
        let mut s = RootSum::new(chi.field().p(), 1);
        s.add_term(0, 0, 1);
        s.with_q_power(q, v)
    });
    Ok(EpsilonResult { value, conductor_a: 0, conductor_a_omega: v, method: Method::Unramified, symbolic })
}

/// ε of a punctual sheaf with the given Frobenius eigenvalues: det^{−1}.
pub fn eps_punctual(cf: &CoeffField, eigenvalues: &[CoeffElem]) -> Result<EpsilonResult> {
    let mut det = cf.one();
    for &e in eigenvalues {
        if e.is_zero() {
            return invalid("punctual Frobenius eigenvalues must be units");
        }
        det *= e;
    }
    let r = eigenvalues.len() as i64;
    Ok(EpsilonResult {
        value: det.inv(),
        conductor_a: -r,
        conductor_a_omega: -r,
        method: Method::Punctual,
        symbolic: None,
    })
}

/// ε(T, F, ω) for the extension of χ of the given kind, by the Tate sum
/// unless χ is unramified and middle-extended.
pub fn eps_local(chi: &LocalCharacter, cf: &CoeffField, omega: &Form, kind: Kind) -> Result<EpsilonResult> {
    eps_tate_capped(chi, cf, omega, kind, TATE_CAP)
}

pub fn eps_tate(chi: &LocalCharacter, cf: &CoeffField, omega: &Form, kind: Kind) -> Result<EpsilonResult> {
    eps_tate_capped(chi, cf, omega, kind, TATE_CAP)
}

/// The Tate sum with an explicit bound on the number of terms:
///
/// ε = (−1)^a q^{a(ω) − ν} Σ_{u ∈ (O/m^ν)^×} χ^{−1}(π^{−a(ω)} u) ψ(Tr Res(π^{−a(ω)} u ω)),
///
/// with a = 1 + sw(χ), ν = sw(χ) + 1.  Units are split as u = u₀(1 + x); the
/// 1-unit part is enumerated once, recording the wild exponent of χ(1 + x) and
/// the residue pairing L(x), and the residue-field sum is folded in afterwards.
pub fn eps_tate_capped(
    chi: &LocalCharacter,
    cf: &CoeffField,
    omega: &Form,
    kind: Kind,
    cap: u64,
) -> Result<EpsilonResult> {
    match kind {
        Kind::Punctual { .. } => return invalid("the Tate sum applies to j! or j* extensions; use eps_punctual"),
        Kind::MiddleExtension if !chi.is_ramified() => return eps_unramified(chi, cf, omega),
        _ => {}
    }
    let k = chi.field().clone();
    let q = k.q() as u64;
    let p = k.p();
    let sw = chi.swan() as usize;
    let nu = sw + 1;
    let a = chi.artin_a(kind);
    let v = omega_valuation(omega)?;
    let a_omega = a + v;
    let terms = (q - 1).saturating_mul(q.saturating_pow(sw as u32));
    if terms > cap {
        return Err(Error::CapExceeded { what: "Tate sum terms".into(), needed: terms, cap });
    }
    // Residue pairing coefficients: Res(π^{−a(ω)} u ω) = Σ_i u_i w_{a(ω)−1−i}.
    let wv: Vec<FqElem> = (0..nu).map(|i| omega.w.coeff(a_omega - 1 - i as i64)).collect::<Result<_>>()?;
    let h: Vec<FqElem> = (1..=sw).map(|j| chi.wild().coeff(j)).collect();

    let n_units = q.pow(sw as u32) as usize;
    let chunks = n_units.div_ceil(CHUNK);
    let counts: HashMap<(u32, u32), i64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut local: HashMap<(u32, u32), i64> = HashMap::new();
            let mut x = vec![FqElem::ZERO; sw + 1];
            let mut scratch = DlogScratch::new(sw);
            for idx in c * CHUNK..((c + 1) * CHUNK).min(n_units) {
                let mut r = idx;
                for xi in x.iter_mut().skip(1) {
                    *xi = FqElem((r % q as usize) as u32);
                    r /= q as usize;
                }
                x[0] = FqElem::ONE;
                let w = if sw == 0 {
                    0
                } else {
                    let d = scratch.dlog(&k, &x);
                    let mut acc = FqElem::ZERO;
                    for (j, &hj) in h.iter().enumerate() {
                        acc = k.add(acc, k.mul(hj, d[j]));
                    }
                    k.trace_fp(acc)
                };
                let mut l = FqElem::ZERO;
                for (i, &wi) in wv.iter().enumerate() {
                    l = k.add(l, k.mul(x[i], wi));
                }
                *local.entry((w, l.0)).or_insert(0) += 1;
            }
            local
        })
        .reduce(HashMap::new, |mut acc, m| {
            for (key, c) in m {
                *acc.entry(key).or_insert(0) += c;
            }
            acc
        });

    // Fold in u₀ ∈ F_q^×: χ^{−1}(u₀(1+x)) ψ(Tr(u₀ L(x))).
    let qm1 = q - 1;
    let e = chi.tame_e();
    let mut keys: Vec<_> = counts.into_iter().collect();
    keys.sort_unstable();
    let dense = (p as u64) * qm1 <= DENSE_HISTOGRAM_LIMIT;
    let (sum, symbolic_sum) = if dense {
        let mut hist = vec![0i64; (p as u64 * qm1) as usize];
        for &((w, l), c) in &keys {
            let l = FqElem(l);
            for t in 0..qm1 {
                let u0 = k.exp(t);
                let ai = (p + k.trace_fp(k.mul(u0, l)) - w) % p;
                let bi = (qm1 - (e * t) % qm1) % qm1;
                hist[(ai as u64 * qm1 + bi) as usize] += c;
            }
        }
        let s = RootSum::from_histogram(p, qm1, &hist);
        (s.eval(cf)?, Some(s))
    } else {
        let z = cf.zeta(qm1)?;
        let mut acc = cf.elem(0);
        for &((w, l), c) in &keys {
            let l = FqElem(l);
            for t in 0..qm1 {
                let u0 = k.exp(t);
                let bi = (qm1 - (e * t) % qm1) % qm1;
                acc += cf.elem(c) * cf.psi(k.trace_fp(k.mul(u0, l)) as i64 - w as i64) * z.pow(bi as i64);
            }
        }
        (acc, None)
    };

    let sign = if a % 2 == 0 { 1 } else { -1 };
    let q_exp = a_omega - nu as i64;
    let cpi = chi.c_pi().pow(a_omega);
    let value = cf.elem(sign) * cf.q_pow(q, q_exp) * cpi * sum;
    let symbolic = if cpi.is_one() { symbolic_sum.map(|s| s.scaled(sign).with_q_power(q, q_exp)) } else { None };
    if value.is_zero() {
        return Err(Error::Internal("Tate sum vanished; ε must be a unit".into()));
    }
    Ok(EpsilonResult { value, conductor_a: a, conductor_a_omega: a_omega, method: Method::TateSum, symbolic })
}

/// Logarithmic derivative of a 1-unit truncated mod π^{sw+1}, reusing buffers.
struct DlogScratch {
    n: usize,
    inv: Vec<FqElem>,
    out: Vec<FqElem>,
}

impl DlogScratch {
    fn new(n: usize) -> DlogScratch {
        DlogScratch { n, inv: vec![FqElem::ZERO; n], out: vec![FqElem::ZERO; n] }
    }

    /// Coefficients 0..n of (1+x)′/(1+x) where `e[0] = 1`, `e[i] = x_i`.
    fn dlog(&mut self, k: &GfField, e: &[FqElem]) -> &[FqElem] {
        let n = self.n;
        self.inv[0] = FqElem::ONE;
        for m in 1..n {
            let mut s = FqElem::ZERO;
            for i in 1..=m {
                if !e[i].is_zero() {
                    s = k.add(s, k.mul(e[i], self.inv[m - i]));
                }
            }
            self.inv[m] = k.neg(s);
        }
        for m in 0..n {
            let mut s = FqElem::ZERO;
            for i in 0..=m {
                let d = k.mul_int(e[i + 1], i as i64 + 1);
                if !d.is_zero() {
                    s = k.add(s, k.mul(d, self.inv[m - i]));
                }
            }
            self.out[m] = s;
        }
        &self.out
    }
}

/// Product of a generic part (χ extended by zero or middle-extended) and a
/// punctual part at the closed point.
pub fn eps_combined(
    generic: Option<(&LocalCharacter, Kind)>,
    punctual: &[CoeffElem],
    omega: &Form,
    cf: &CoeffField,
) -> Result<EpsilonResult> {
    let mut out = eps_punctual(cf, punctual)?;
    out.method = Method::Combined;
    if let Some((chi, kind)) = generic {
        out = eps_local(chi, cf, omega, kind)?.combine(&out);
    }
    Ok(out)
}

/// Stationary-phase closed forms for χ = (tame ⊗ unramified) ⊗ wild(h) with h
/// reduced of pole order n ≥ 1.  In terms of the datum η = −h attached to the
/// Artin–Schreier sheaf and α = ω/dη:
///
/// * n = 2n′ − 1: ε = χ(α) q^{v(α) − n′};
/// * n = 2n′:     ε = χ(α) q^{v(α) − n′ − 1} γ_ψ(−n η₀), η₀ the leading coefficient.
pub fn eps_closed_form(chi: &LocalCharacter, cf: &CoeffField, omega: &Form) -> Result<EpsilonResult> {
    let k = chi.field().clone();
    let n = chi.swan() as i64;
    if n == 0 {
        return invalid("the closed forms need a wildly ramified character");
    }
    if n % 2 == 0 && k.p() == 2 {
        return Err(Error::Unsupported("even Swan conductor in characteristic 2: use the Tate sum".into()));
    }
    let v = omega_valuation(omega)?;
    let eta = chi.wild().neg(&k);
    let d_eta = eta.to_series(&k, 1).derivative();
    let alpha = omega.w.div(&d_eta)?;
    let v_alpha = alpha.valuation().expect("nonzero quotient");
    let q = chi.q();
    let chi_alpha = chi.eval(cf, &alpha)?;
    let value = if n % 2 == 1 {
        let n1 = (n + 1) / 2;
        chi_alpha * cf.q_pow(q, v_alpha - n1)
    } else {
        let n1 = n / 2;
        let eta0 = eta.leading().expect("nonzero datum");
        let g = gamma_psi(&k, cf, k.neg(k.mul_int(eta0, n)))?;
        chi_alpha * cf.q_pow(q, v_alpha - n1 - 1) * g
    };
    let a = 1 + n;
    Ok(EpsilonResult { value, conductor_a: a, conductor_a_omega: a + v, method: Method::ClosedForm, symbolic: None })
}

/// ε(χ, αω) = χ(α) q^{v(α)} ε(χ, ω).
pub fn check_change_of_form(
    chi: &LocalCharacter,
    cf: &CoeffField,
    omega: &Form,
    alpha: &LaurentSeries,
    kind: Kind,
) -> Result<CheckReport> {
    let va = alpha
        .valuation()
        .ok_or_else(|| Error::InvalidInput("α must be nonzero".into()))?;
    let lhs = eps_local(chi, cf, &omega.times(alpha), kind)?.value;
    let rhs = chi.eval(cf, alpha)? * cf.q_pow(chi.q(), va) * eps_local(chi, cf, omega, kind)?.value;
    Ok(CheckReport::new("change_of_form", lhs, rhs))
}

/// ε(χ ⊗ unr(c), ω) = c^{a(χ, ω)} ε(χ, ω).
pub fn check_unramified_twist(
    chi: &LocalCharacter,
    cf: &CoeffField,
    c: CoeffElem,
    omega: &Form,
    kind: Kind,
) -> Result<CheckReport> {
    let base = eps_local(chi, cf, omega, kind)?;
    let lhs = eps_local(&chi.twist_unramified(c), cf, omega, kind)?.value;
    let rhs = c.pow(base.conductor_a_omega) * base.value;
    Ok(CheckReport::new("unramified_twist", lhs, rhs))
}

/// ε of a direct sum of rank-1 pieces (and a punctual part) against the
/// product of the pieces.  The sum side evaluates wild summands through the
/// closed forms where they apply, the product side always through Tate sums.
pub fn check_multiplicativity(
    pieces: &[(LocalCharacter, Kind)],
    punctual: &[CoeffElem],
    omega: &Form,
    cf: &CoeffField,
) -> Result<CheckReport> {
    let mut lhs = eps_punctual(cf, punctual)?;
    let mut rhs = eps_punctual(cf, punctual)?.value;
    for (chi, kind) in pieces {
        let alt = match eps_closed_form(chi, cf, omega) {
            Ok(r) if matches!(kind, Kind::ExtensionByZero | Kind::MiddleExtension) => r,
            _ => eps_local(chi, cf, omega, *kind)?,
        };
        lhs = lhs.combine(&alt);
        rhs *= eps_local(chi, cf, omega, *kind)?.value;
    }
    Ok(CheckReport::new("multiplicativity", lhs.value, rhs))
}

/// The inverse substitution φ with φ·u(φ) = π′, i.e. π = φ(π′) when π′ = uπ.
fn invert_uniformizer(u: &LaurentSeries, prec: i64) -> Result<LaurentSeries> {
    let k = u.field().clone();
    let u0 = u.leading().filter(|_| u.valuation() == Some(0)).ok_or_else(|| {
        Error::InvalidInput("the change of uniformizer must be multiplication by a unit".into())
    })?;
    let pi = LaurentSeries::pi(&k, prec + 1);
    let mut phi = LaurentSeries::monomial(&k, k.inv(u0), 1, prec + 1);
    for _ in 0..prec {
        phi = pi.mul(&u.compose(&phi)?.inv()?);
    }
    Ok(phi)
}

/// Re-expresses χ and ω relative to the uniformizer π′ = uπ.  The value at
/// π′ is χ(uπ); the wild datum is the polar part of h(π(π′)); the tame
/// exponent is unchanged; ω = w(π(π′))·(dπ/dπ′)·dπ′.
pub fn transport_uniformizer(
    chi: &LocalCharacter,
    cf: &CoeffField,
    omega: &Form,
    u: &LaurentSeries,
) -> Result<(LocalCharacter, Form)> {
    let k = chi.field().clone();
    omega_valuation(omega)?;
    let prec = omega.w.relative_prec() + chi.swan() as i64 + 2;
    let u = u.truncate(prec);
    if u.relative_prec() < prec {
        return Err(Error::Precision(format!("transport needs the unit to precision {prec}")));
    }
    let phi = invert_uniformizer(&u, prec)?;
    let c_new = chi.eval(cf, &LaurentSeries::pi(&k, prec + 1).mul(&u))?;
    let h_new = chi.wild().to_series(&k, 1).compose(&phi)?;
    let wild = crate::chars::WildDatum::polar_part(&h_new);
    let chi_new = LocalCharacter::new(&k, c_new, chi.tame_e() as i64, wild)?;
    let w_new = omega.w.compose(&phi)?.mul(&phi.derivative());
    Ok((chi_new, Form::new(w_new)))
}
