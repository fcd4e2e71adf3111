//! JSON forms of the library's inputs: fields, Laurent series, rational
//! functions, local characters, sheaves on P¹, covers and groups.
//!
//! Elements of F_q are integers 0..q−1 in the base-p digit encoding of
//! [`crate::gf`]; polynomials are coefficient lists, constant term first.
//! Values in Λ are either integers mod ℓ (meaningful only with a pinned ℓ)
//! or roots of unity `{"zeta": n, "power": k}`, which make sense for every
//! admissible ℓ. Validation errors name the offending field.

use serde::{Deserialize, Serialize};

use crate::chars::{LocalCharacter, WildDatum};
use crate::coeff::{CoeffElem, CoeffField};
use crate::curve::SheafSpec;
use crate::error::{Error, Result};
use crate::gf::{field, field_of_size, Field, FieldDesc, FqElem};
use crate::localfield::{ClosedPoint, Form, LaurentSeries, RationalFunction};
use crate::twisted::GroupDesc;

fn at<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{path}: {m}")),
        Error::Unsupported(m) => Error::Unsupported(format!("{path}: {m}")),
        other => other,
    })
}

fn bad<T>(path: &str, msg: impl std::fmt::Display) -> Result<T> {
    Err(Error::InvalidInput(format!("{path}: {msg}")))
}

/// Parses JSON text, reporting the position of syntax and shape errors.
pub fn parse<T: for<'de> Deserialize<'de>>(what: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("{what}: {e}")))
}

/// A field, by descriptor or by size. Descriptors must be the canonical ones
/// produced by the library, since extension towers are built from them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldJson {
    Size { q: u64 },
    Desc(FieldDesc),
}

impl FieldJson {
    pub fn of(k: &Field) -> FieldJson {
        FieldJson::Desc(k.desc().clone())
    }

    pub fn build(&self, path: &str) -> Result<Field> {
        match self {
            FieldJson::Size { q } => at(path, field_of_size(*q)),
            FieldJson::Desc(d) => {
                let k = at(path, field(d.p, d.n))?;
                if k.desc() != d {
                    return Err(Error::Unsupported(format!(
                        "{path}: only the canonical descriptor of F_{}^{} is accepted (or give {{\"q\": {}}})",
                        d.p,
                        d.n,
                        k.q()
                    )));
                }
                Ok(k)
            }
        }
    }
}

fn elem(k: &Field, path: &str, x: u32) -> Result<FqElem> {
    if x >= k.q() {
        return bad(path, format!("{x} is not an element of F_{}", k.q()));
    }
    Ok(FqElem(x))
}

fn elems(k: &Field, path: &str, xs: &[u32]) -> Result<Vec<FqElem>> {
    xs.iter().enumerate().map(|(i, &x)| elem(k, &format!("{path}[{i}]"), x)).collect()
}

fn ints(xs: &[FqElem]) -> Vec<u32> {
    xs.iter().map(|x| x.0).collect()
}

/// A Laurent series Σ coeffs[i] π^{v+i} + O(π^prec).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaurentSeriesJson {
    pub field: FieldJson,
    pub v: i64,
    pub prec: i64,
    pub coeffs: Vec<u32>,
}

impl LaurentSeriesJson {
    pub fn of(s: &LaurentSeries) -> LaurentSeriesJson {
        let v = s.valuation().unwrap_or(s.prec());
        let coeffs = (v..s.prec()).map(|i| s.coeff(i).map_or(0, |c| c.0)).collect();
        LaurentSeriesJson { field: FieldJson::of(s.field()), v, prec: s.prec(), coeffs }
    }

    pub fn build(&self, path: &str) -> Result<LaurentSeries> {
        let k = self.field.build(&format!("{path}.field"))?;
        if self.v + self.coeffs.len() as i64 > self.prec && self.coeffs.iter().skip((self.prec - self.v).max(0) as usize).any(|&c| c != 0) {
            return bad(&format!("{path}.coeffs"), "coefficients beyond the precision");
        }
        let coeffs = elems(&k, &format!("{path}.coeffs"), &self.coeffs)?;
        Ok(LaurentSeries::new(&k, self.v, coeffs, self.prec))
    }

    /// The series read as the form ω = w·dπ.
    pub fn build_form(&self, path: &str) -> Result<Form> {
        let w = self.build(path)?;
        if w.is_zero() {
            return bad(path, "the form must be nonzero to its precision");
        }
        Ok(Form::new(w))
    }
}

/// num/den as coefficient lists; `den` defaults to 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalFunctionJson {
    pub num: Vec<u32>,
    #[serde(default = "one_poly")]
    pub den: Vec<u32>,
}

fn one_poly() -> Vec<u32> {
    vec![1]
}

impl RationalFunctionJson {
    pub fn of(r: &RationalFunction) -> RationalFunctionJson {
        RationalFunctionJson { num: ints(r.num()), den: ints(r.den()) }
    }

    pub fn build(&self, k: &Field, path: &str) -> Result<RationalFunction> {
        let num = elems(k, &format!("{path}.num"), &self.num)?;
        let den = elems(k, &format!("{path}.den"), &self.den)?;
        at(path, RationalFunction::new(k, num, den))
    }
}

/// A global form ω = r(t)·dt on P¹ over `field`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalFormJson {
    pub field: FieldJson,
    pub num: Vec<u32>,
    #[serde(default = "one_poly")]
    pub den: Vec<u32>,
}

impl GlobalFormJson {
    pub fn of(r: &RationalFunction) -> GlobalFormJson {
        GlobalFormJson { field: FieldJson::of(r.field()), num: ints(r.num()), den: ints(r.den()) }
    }

    pub fn build(&self, path: &str) -> Result<RationalFunction> {
        let k = self.field.build(&format!("{path}.field"))?;
        let r = RationalFunctionJson { num: self.num.clone(), den: self.den.clone() }.build(&k, path)?;
        if r.is_zero() {
            return bad(path, "ω must be nonzero");
        }
        Ok(r)
    }
}

/// A closed point: "inf" or the monic minimal polynomial, constant first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointJson {
    Named(String),
    Finite(Vec<u32>),
}

impl PointJson {
    pub fn of(x: &ClosedPoint) -> PointJson {
        match x {
            ClosedPoint::Infinity => PointJson::Named("inf".into()),
            ClosedPoint::Finite(m) => PointJson::Finite(ints(m)),
        }
    }

    pub fn build(&self, k: &Field, path: &str) -> Result<ClosedPoint> {
        match self {
            PointJson::Named(s) if s == "inf" || s == "infinity" => Ok(ClosedPoint::Infinity),
            PointJson::Named(s) => bad(path, format!("unknown point {s:?} (use \"inf\" or a minimal polynomial)")),
            PointJson::Finite(m) => {
                let m = elems(k, path, m)?;
                if m.len() < 2 || m.last() != Some(&FqElem::ONE) {
                    return bad(path, "a finite point is a monic polynomial of degree ≥ 1");
                }
                let pts = at(path, crate::localfield::closed_points_of(k, &m))?;
                match pts.as_slice() {
                    [(x, 1)] if x.degree() as usize == m.len() - 1 => Ok(x.clone()),
                    _ => bad(path, "the polynomial is not irreducible"),
                }
            }
        }
    }
}

/// One Kummer factor g^{e}: the character χ_e ∘ g with χ_e of order dividing q − 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KummerJson {
    pub g: RationalFunctionJson,
    pub e: i64,
}

/// L_ψ{f} ⊗ ⊗_i K_{χ_{e_i}}{g_i}, extended by zero over `zero_set`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SheafSpecJson {
    pub field: FieldJson,
    #[serde(default)]
    pub f: Option<RationalFunctionJson>,
    #[serde(default)]
    pub kummer: Vec<KummerJson>,
    #[serde(default)]
    pub zero_set: Vec<PointJson>,
}

impl SheafSpecJson {
    pub fn of(spec: &SheafSpec) -> SheafSpecJson {
        SheafSpecJson {
            field: FieldJson::of(spec.base()),
            f: spec.f().map(RationalFunctionJson::of),
            kummer: spec
                .kummer()
                .iter()
                .map(|(g, e)| KummerJson { g: RationalFunctionJson::of(g), e: *e as i64 })
                .collect(),
            zero_set: spec.zero_set().iter().map(PointJson::of).collect(),
        }
    }

    pub fn build(&self, path: &str) -> Result<SheafSpec> {
        let k = self.field.build(&format!("{path}.field"))?;
        let f = match &self.f {
            Some(f) => Some(f.build(&k, &format!("{path}.f"))?),
            None => None,
        };
        let mut kummer = Vec::new();
        for (i, kj) in self.kummer.iter().enumerate() {
            let p = format!("{path}.kummer[{i}]");
            let g = kj.g.build(&k, &format!("{p}.g"))?;
            if g.is_zero() {
                return bad(&format!("{p}.g"), "g must be nonzero");
            }
            kummer.push((g, kj.e));
        }
        let zero_set = self
            .zero_set
            .iter()
            .enumerate()
            .map(|(i, x)| x.build(&k, &format!("{path}.zero_set[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        at(path, SheafSpec::new(&k, f, kummer, zero_set))
    }
}

/// A value of Λ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaJson {
    /// ζ_n^k for the library's distinguished primitive n-th root of unity.
    Root { zeta: u64, power: i64 },
    /// An integer mod ℓ; requires a pinned ℓ.
    Int(u64),
}

impl LambdaJson {
    /// The root-of-unity order this value needs in Λ.
    pub fn order(&self) -> u64 {
        match self {
            LambdaJson::Root { zeta, .. } => *zeta,
            LambdaJson::Int(_) => 1,
        }
    }

    pub fn build(&self, cf: &CoeffField, pinned: bool, path: &str) -> Result<CoeffElem> {
        match *self {
            LambdaJson::Root { zeta, power } => {
                if zeta == 0 {
                    return bad(path, "zeta order must be positive");
                }
                Ok(at(path, cf.zeta(zeta))?.pow(power))
            }
            LambdaJson::Int(v) => {
                if !pinned {
                    return Err(Error::Unsupported(format!(
                        "{path}: integer Λ-values need a pinned --ell; use {{\"zeta\": n, \"power\": k}}"
                    )));
                }
                if v >= cf.ell() {
                    return bad(path, format!("{v} is not reduced mod ℓ = {}", cf.ell()));
                }
                Ok(cf.lam().from_u64(v))
            }
        }
    }
}

/// h = Σ coeffs[i] π^{exponents[i]} with negative exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WildJson {
    pub exponents: Vec<i64>,
    pub coeffs: Vec<u32>,
}

/// χ(π^v u) = c_pi^v · χ_tame(ū) · ψ(Tr Res(h du/u)), where χ_tame(ū) is
/// ζ_{q−1}^{tame_e · log ū}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalCharacterJson {
    pub field: FieldJson,
    pub c_pi: LambdaJson,
    #[serde(default)]
    pub tame_e: i64,
    #[serde(default)]
    pub wild_h: WildJson,
}

impl LocalCharacterJson {
    /// The JSON form of χ, with c_pi as an integer mod ℓ.
    pub fn of(chi: &LocalCharacter) -> LocalCharacterJson {
        let terms = chi.wild().terms();
        LocalCharacterJson {
            field: FieldJson::of(chi.field()),
            c_pi: LambdaJson::Int(chi.c_pi().value()),
            tame_e: chi.tame_e() as i64,
            wild_h: WildJson { exponents: terms.iter().map(|t| t.0).collect(), coeffs: terms.iter().map(|t| t.1 .0).collect() },
        }
    }

    pub fn field(&self, path: &str) -> Result<Field> {
        self.field.build(&format!("{path}.field"))
    }

    pub fn build(&self, cf: &CoeffField, pinned: bool, path: &str) -> Result<LocalCharacter> {
        let k = self.field(path)?;
        let c_pi = self.c_pi.build(cf, pinned, &format!("{path}.c_pi"))?;
        let wp = format!("{path}.wild_h");
        if self.wild_h.exponents.len() != self.wild_h.coeffs.len() {
            return bad(&wp, "exponents and coeffs differ in length");
        }
        let coeffs = elems(&k, &format!("{wp}.coeffs"), &self.wild_h.coeffs)?;
        let terms: Vec<(i64, FqElem)> = self.wild_h.exponents.iter().copied().zip(coeffs).collect();
        let wild = at(&wp, WildDatum::from_terms(&k, &terms))?;
        at(path, LocalCharacter::new(&k, c_pi, self.tame_e, wild))
    }
}

/// Either one sheaf or a list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecListJson {
    One(SheafSpecJson),
    Many(Vec<SheafSpecJson>),
}

impl SpecListJson {
    pub fn build(&self, path: &str) -> Result<Vec<SheafSpec>> {
        match self {
            SpecListJson::One(s) => Ok(vec![s.build(path)?]),
            SpecListJson::Many(v) => v.iter().enumerate().map(|(i, s)| s.build(&format!("{path}[{i}]"))).collect(),
        }
    }
}

/// One group or a list of groups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupListJson {
    One(GroupDesc),
    Many(Vec<GroupDesc>),
}

impl GroupListJson {
    pub fn build(&self, path: &str) -> Result<Vec<crate::twisted::FiniteGroup>> {
        match self {
            GroupListJson::One(g) => Ok(vec![at(path, g.build())?]),
            GroupListJson::Many(v) => v.iter().enumerate().map(|(i, g)| at(&format!("{path}[{i}]"), g.build())).collect(),
        }
    }
}

/// The sheaf L_ψ{t} ⊗ K_χ{t} on G_m ⊂ P¹ with χ quadratic, over F_q (q odd):
/// its trace sum over F_q is a quadratic Gauss sum.
pub fn gauss_sum_spec(q: u64) -> SheafSpecJson {
    SheafSpecJson {
        field: FieldJson::Size { q },
        f: Some(RationalFunctionJson { num: vec![0, 1], den: vec![1] }),
        kummer: vec![KummerJson { g: RationalFunctionJson { num: vec![0, 1], den: vec![1] }, e: (q as i64 - 1) / 2 }],
        zero_set: vec![PointJson::Finite(vec![0, 1]), PointJson::Named("inf".into())],
    }
}

/// ω = dt over F_q.
pub fn dt_form(q: u64) -> GlobalFormJson {
    GlobalFormJson { field: FieldJson::Size { q }, num: vec![1], den: vec![1] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{trace_sum, CoverFamily};

    #[test]
    fn field_forms() {
        let k = FieldJson::Size { q: 9 }.build("f").unwrap();
        assert_eq!(k.q(), 9);
        let desc: FieldJson = parse("field", &serde_json::to_string(&FieldJson::of(&k)).unwrap()).unwrap();
        assert_eq!(desc.build("f").unwrap(), k);
        let mut d = k.desc().clone();
        d.generator = vec![2, 2];
        let err = FieldJson::Desc(d).build("spec.field").unwrap_err();
        assert!(err.to_string().contains("spec.field"));
        assert!(FieldJson::Size { q: 6 }.build("f").is_err());
    }

    #[test]
    fn series_round_trip() {
        let k = field_of_size(5).unwrap();
        let s = LaurentSeries::new(&k, -2, vec![FqElem(1), FqElem(0), FqElem(3)], 4);
        let j = LaurentSeriesJson::of(&s);
        assert_eq!(j.v, -2);
        let text = serde_json::to_string(&j).unwrap();
        let back: LaurentSeriesJson = parse("series", &text).unwrap();
        assert_eq!(back.build("s").unwrap(), s);
        let bad = LaurentSeriesJson { coeffs: vec![1, 7], ..j };
        assert!(bad.build("form").unwrap_err().to_string().contains("form.coeffs[1]"));
    }

    #[test]
    fn spec_round_trip_and_gauss_trace() {
        let spec = gauss_sum_spec(3).build("spec").unwrap();
        let again = SheafSpecJson::of(&spec).build("spec").unwrap();
        assert_eq!(trace_sum(&spec, 1).unwrap(), trace_sum(&again, 1).unwrap());
        let text = serde_json::to_string(&gauss_sum_spec(5)).unwrap();
        let parsed: SheafSpecJson = parse("spec", &text).unwrap();
        assert_eq!(parsed, gauss_sum_spec(5));
    }

    #[test]
    fn malformed_specs_name_the_field() {
        let text = r#"{"field":{"q":5},"f":{"num":[0,9]},"zero_set":["inf"]}"#;
        let s: SheafSpecJson = parse("spec", text).unwrap();
        let e = s.build("spec").unwrap_err().to_string();
        assert!(e.contains("spec.f.num[1]"), "{e}");
        let text = r#"{"field":{"q":5},"zero_set":[[1,0,1]]}"#;
        let s: SheafSpecJson = parse("spec", text).unwrap();
        let e = s.build("spec").unwrap_err().to_string();
        assert!(e.contains("spec.zero_set[0]"), "{e}");
        let e = parse::<SheafSpecJson>("spec", r#"{"field":{"q":5},"kummr":[]}"#).unwrap_err().to_string();
        assert!(e.contains("kummr"), "{e}");
        // ramified outside the zero set
        let text = r#"{"field":{"q":5},"f":{"num":[0,1]}}"#;
        let s: SheafSpecJson = parse("spec", text).unwrap();
        assert!(s.build("spec").is_err());
    }

    #[test]
    fn characters() {
        let text = r#"{"field":{"q":5},"c_pi":{"zeta":4,"power":1},"tame_e":2,"wild_h":{"exponents":[-1],"coeffs":[3]}}"#;
        let j: LocalCharacterJson = parse("char", text).unwrap();
        let cf = CoeffField::setup(5, &[4], 0).unwrap();
        let chi = j.build(&cf, false, "char").unwrap();
        assert_eq!(chi.swan(), 1);
        assert_eq!(chi.tame_e(), 2);
        assert_eq!(chi.c_pi(), cf.zeta(4).unwrap());
        let back = LocalCharacterJson::of(&chi);
        assert_eq!(back.build(&cf, true, "char").unwrap(), chi);
        assert!(matches!(back.build(&cf, false, "char"), Err(Error::Unsupported(_))));
        let text = r#"{"field":{"q":5},"c_pi":1,"wild_h":{"exponents":[1],"coeffs":[3]}}"#;
        let j: LocalCharacterJson = parse("char", text).unwrap();
        assert!(j.build(&cf, true, "char").unwrap_err().to_string().contains("char.wild_h"));
    }

    #[test]
    fn covers_and_groups() {
        let c: CoverFamily = parse("cover", r#"{"family":"kummer","e":2}"#).unwrap();
        assert_eq!(c, CoverFamily::Kummer { e: 2 });
        let c: CoverFamily = parse("cover", r#"{"family":"artin_schreier"}"#).unwrap();
        assert_eq!(c, CoverFamily::ArtinSchreier);
        let g: GroupListJson = parse("groups", r#"[{"kind":"symmetric","n":4},{"kind":"quaternion"}]"#).unwrap();
        let gs = g.build("groups").unwrap();
        assert_eq!(gs.iter().map(|g| g.order()).collect::<Vec<_>>(), vec![24, 8]);
        let g: GroupListJson = parse("groups", r#"{"kind":"table","name":"x","table":[[0,1],[0,1]]}"#).unwrap();
        assert!(g.build("groups").unwrap_err().to_string().starts_with("invalid input: groups"));
    }
}
