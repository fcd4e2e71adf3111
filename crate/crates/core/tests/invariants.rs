//! Structural invariants of the arithmetic layers, as property tests:
//! field axioms, Frobenius and tower maps, additive and multiplicative
//! characters, series arithmetic, local characters and ε-factor identities.

use proptest::prelude::*;

use epsilon_core::chars::{Kind, LocalCharacter, WildDatum};
use epsilon_core::coeff::{CoeffElem, CoeffField};
use epsilon_core::epsilon::{check_change_of_form, check_unramified_twist, eps_closed_form, eps_tate};
use epsilon_core::gf::{field_of_size, Field, FqElem, TowerEmbedding};
use epsilon_core::localfield::{Form, LaurentSeries};

const SIZES: [u64; 9] = [2, 3, 4, 5, 7, 8, 9, 25, 27];

fn field_and_elems(n: usize) -> impl Strategy<Value = (Field, Vec<FqElem>)> {
    prop::sample::select(SIZES.to_vec()).prop_flat_map(move |q| {
        let k = field_of_size(q).unwrap();
        prop::collection::vec((0..q as u32).prop_map(FqElem), n).prop_map(move |xs| (k.clone(), xs))
    })
}

fn cf_for(k: &Field) -> CoeffField {
    CoeffField::setup(k.p(), &[k.unit_order() as u64], 0).unwrap()
}

/// A nonzero element of Λ from an arbitrary positive integer.
fn unit(cf: &CoeffField, c: i64) -> CoeffElem {
    cf.elem(1 + c % (cf.ell() as i64 - 1))
}

fn series(k: &Field, v: i64, coeffs: &[u32], len: usize) -> LaurentSeries {
    let q = k.q();
    let mut c: Vec<FqElem> = coeffs.iter().take(len).map(|&x| FqElem(x % q)).collect();
    if c[0].is_zero() {
        c[0] = FqElem::ONE;
    }
    LaurentSeries::new(k, v, c, v + len as i64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn field_axioms((k, xs) in field_and_elems(3)) {
        let (a, b, c) = (xs[0], xs[1], xs[2]);
        prop_assert_eq!(k.add(a, k.add(b, c)), k.add(k.add(a, b), c));
        prop_assert_eq!(k.mul(a, k.mul(b, c)), k.mul(k.mul(a, b), c));
        prop_assert_eq!(k.mul(a, k.add(b, c)), k.add(k.mul(a, b), k.mul(a, c)));
        prop_assert_eq!(k.add(a, k.neg(a)), FqElem::ZERO);
        if !a.is_zero() {
            prop_assert_eq!(k.mul(a, k.inv(a)), FqElem::ONE);
            prop_assert_eq!(k.pow(a, k.unit_order() as i64), FqElem::ONE);
            prop_assert_eq!(k.exp(k.log(a).unwrap() as u64), a);
        }
    }

    #[test]
    fn frobenius_is_a_field_automorphism((k, xs) in field_and_elems(2)) {
        let (a, b) = (xs[0], xs[1]);
        for i in 0..k.n() {
            prop_assert_eq!(k.frobenius(k.add(a, b), i), k.add(k.frobenius(a, i), k.frobenius(b, i)));
            prop_assert_eq!(k.frobenius(k.mul(a, b), i), k.mul(k.frobenius(a, i), k.frobenius(b, i)));
        }
        prop_assert_eq!(k.frobenius(a, k.n()), a);
        prop_assert_eq!(k.pow(k.pth_root(a), k.p() as i64), a);
    }

    #[test]
    fn absolute_trace_is_additive_and_norm_multiplicative((k, xs) in field_and_elems(2)) {
        let (a, b) = (xs[0], xs[1]);
        let p = k.p();
        prop_assert_eq!(k.trace_fp(k.add(a, b)), (k.trace_fp(a) + k.trace_fp(b)) % p);
        prop_assert_eq!(k.norm_fp(k.mul(a, b)), k.norm_fp(a) * k.norm_fp(b) % p);
    }

    #[test]
    fn tower_trace_and_norm_are_transitive(x in 0u32..729) {
        let f3 = field_of_size(3).unwrap();
        let f9 = field_of_size(9).unwrap();
        let f729 = field_of_size(729).unwrap();
        let small = TowerEmbedding::new(&f3, &f9).unwrap();
        let mid = TowerEmbedding::new(&f9, &f729).unwrap();
        let big = TowerEmbedding::new(&f3, &f729).unwrap();
        let y = FqElem(x);
        prop_assert_eq!(small.trace(mid.trace(y)), big.trace(y));
        prop_assert_eq!(small.norm(mid.norm(y)), big.norm(y));
        // The embedding is a ring map and the trace is F_9-linear.
        let c = FqElem(x % 9);
        prop_assert_eq!(mid.trace(f729.mul(mid.apply(c), y)), f9.mul(c, mid.trace(y)));
        prop_assert_eq!(mid.preimage(mid.apply(c)), Some(c));
    }

    #[test]
    fn additive_and_multiplicative_characters((k, xs) in field_and_elems(2), e in -30i64..30) {
        let cf = cf_for(&k);
        let (a, b) = (xs[0], xs[1]);
        prop_assert_eq!(cf.psi_trace(&k, k.add(a, b)), cf.psi_trace(&k, a) * cf.psi_trace(&k, b));
        if !a.is_zero() && !b.is_zero() {
            let ab = cf.kummer_chi(&k, e, k.mul(a, b)).unwrap();
            prop_assert_eq!(ab, cf.kummer_chi(&k, e, a).unwrap() * cf.kummer_chi(&k, e, b).unwrap());
        }
    }

    #[test]
    fn roots_of_unity_have_their_order(n in 1u64..40) {
        let cf = CoeffField::setup(3, &[n], 0).unwrap();
        let z = cf.zeta(n).unwrap();
        prop_assert!(z.pow(n as i64).is_one());
        for d in 1..n {
            if n % d == 0 {
                prop_assert!(!z.pow(d as i64).is_one());
            }
        }
    }

    #[test]
    fn series_ring_laws(
        q in prop::sample::select(vec![3u64, 4, 5, 9]),
        (va, vb) in (-3i64..3, -3i64..3),
        ca in prop::collection::vec(0u32..9, 8),
        cb in prop::collection::vec(0u32..9, 8),
    ) {
        let k = field_of_size(q).unwrap();
        let a = series(&k, va, &ca, 8);
        let b = series(&k, vb, &cb, 8);
        let ab = a.mul(&b);
        prop_assert_eq!(ab.valuation(), Some(va + vb));
        prop_assert_eq!(ab.relative_prec(), 8);
        let back = ab.div(&b).unwrap();
        prop_assert!(back.sub(&a).valuation().is_none_or(|v| v >= va + 8));
        // Leibniz rule and exactness: Res(df) = 0.
        let lhs = ab.derivative();
        let rhs = a.derivative().mul(&b).add(&a.mul(&b.derivative()));
        prop_assert!(lhs.sub(&rhs).is_zero());
        prop_assert_eq!(a.derivative().residue().unwrap(), FqElem::ZERO);
    }

    #[test]
    fn local_characters_are_multiplicative(
        q in prop::sample::select(vec![3u64, 4, 5, 7]),
        tame in 0i64..6,
        n in 0u32..4,
        h in prop::collection::vec(0u32..7, 3),
        (vz, vw) in (-2i64..3, -2i64..3),
        cz in prop::collection::vec(0u32..7, 8),
        cw in prop::collection::vec(0u32..7, 8),
        c in 1i64..1000,
    ) {
        let k = field_of_size(q).unwrap();
        let cf = cf_for(&k);
        let terms: Vec<(i64, FqElem)> = (1..=n as i64).map(|j| (-j, FqElem(h[j as usize - 1] % k.q()))).collect();
        let chi = LocalCharacter::new(&k, unit(&cf, c), tame, WildDatum::from_terms(&k, &terms).unwrap()).unwrap();
        let z = series(&k, vz, &cz, 8);
        let w = series(&k, vw, &cw, 8);
        let lhs = chi.eval(&cf, &z.mul(&w)).unwrap();
        prop_assert_eq!(lhs, chi.eval(&cf, &z).unwrap() * chi.eval(&cf, &w).unwrap());
        prop_assert_eq!(chi.eval(&cf, &LaurentSeries::pi(&k, 8)).unwrap(), unit(&cf, c));
        let prod = chi.mul(&chi.inverse()).unwrap();
        prop_assert!(!prod.is_ramified());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tate_sum_identities(
        q in prop::sample::select(vec![3u64, 4, 5, 7]),
        tame in 0i64..6,
        n in 0u32..3,
        h in prop::collection::vec(1u32..7, 2),
        v in -2i64..3,
        cw in prop::collection::vec(0u32..7, 8),
        va in -2i64..3,
        ca in prop::collection::vec(0u32..7, 8),
        c in 1i64..1000,
        s in 1i64..1000,
        shriek in any::<bool>(),
    ) {
        let k = field_of_size(q).unwrap();
        let cf = cf_for(&k);
        let n = if n % k.p() == 0 { 0 } else { n };
        let terms: Vec<(i64, FqElem)> = (1..=n as i64).map(|j| (-j, FqElem(h[j as usize - 1] % k.q()).max(FqElem::ONE))).collect();
        let chi = LocalCharacter::new(&k, unit(&cf, c), tame, WildDatum::from_terms(&k, &terms).unwrap()).unwrap();
        let omega = Form::new(series(&k, v, &cw, 8));
        let alpha = series(&k, va, &ca, 8);
        let kind = if shriek { Kind::ExtensionByZero } else { Kind::MiddleExtension };
        prop_assert!(check_change_of_form(&chi, &cf, &omega, &alpha, kind).unwrap().pass);
        prop_assert!(check_unramified_twist(&chi, &cf, unit(&cf, s), &omega, kind).unwrap().pass);
        if chi.swan() > 0 && !(k.p() == 2 && chi.swan().is_multiple_of(2)) {
            let t = eps_tate(&chi, &cf, &omega, Kind::ExtensionByZero).unwrap();
            prop_assert_eq!(eps_closed_form(&chi, &cf, &omega).unwrap().value, t.value);
        }
    }
}
