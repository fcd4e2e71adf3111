use super::*;
use crate::gf::field_of_size;

fn t(k: &Field) -> RationalFunction {
    RationalFunction::t(k)
}

fn origin(k: &Field) -> ClosedPoint {
    ClosedPoint::rational(k, FqElem::ZERO)
}

/// L_ψ{t} ⊗ K_χ{t} on G_m with χ quadratic.
fn gauss_spec(k: &Field) -> SheafSpec {
    let e = (k.unit_order() / 2) as i64;
    SheafSpec::new(k, Some(t(k)), vec![(t(k), e)], vec![origin(k), ClosedPoint::Infinity]).unwrap()
}

#[test]
fn trace_examples() {
    let k = field_of_size(3).unwrap();
    let cf = CoeffField::setup(3, &[2], 2).unwrap();
    let affine = SheafSpec::new(&k, None, vec![], vec![ClosedPoint::Infinity]).unwrap();
    assert_eq!(trace_sum(&affine, 1).unwrap().eval(&cf).unwrap(), cf.elem(3));
    let lpsi = SheafSpec::new(&k, Some(t(&k)), vec![], vec![ClosedPoint::Infinity]).unwrap();
    assert!(trace_sum(&lpsi, 1).unwrap().eval(&cf).unwrap().is_zero());
    let g = trace_sum(&gauss_spec(&k), 1).unwrap().eval(&cf).unwrap();
    assert_eq!(g, cf.psi(1) - cf.psi(2));
}

#[test]
fn gos_examples() {
    let k = field_of_size(5).unwrap();
    let lpsi = SheafSpec::new(&k, Some(t(&k)), vec![], vec![ClosedPoint::Infinity]).unwrap();
    assert_eq!(gos_degree(&lpsi).unwrap(), 0);
    assert_eq!(gos_degree(&gauss_spec(&k)).unwrap(), 1);
    let gm = SheafSpec::new(&k, None, vec![], vec![origin(&k), ClosedPoint::Infinity]).unwrap();
    assert_eq!(gos_degree(&gm).unwrap(), 0);
}

#[test]
fn local_character_examples() {
    let k = field_of_size(5).unwrap();
    let kum = SheafSpec::new(&k, None, vec![(t(&k), 1)], vec![origin(&k), ClosedPoint::Infinity]).unwrap();
    let s = kum.local_structure(&origin(&k)).unwrap();
    assert!(s.wild.is_zero());
    assert_eq!(s.tame_e, 4 - 1);
    let lpsi = SheafSpec::new(&k, Some(t(&k)), vec![], vec![ClosedPoint::Infinity]).unwrap();
    let s = lpsi.local_structure(&ClosedPoint::Infinity).unwrap();
    assert_eq!(s.swan(), 1);
    assert_eq!(s.wild.coeffs(), &[FqElem::ONE]);
    let s = lpsi.local_structure(&origin(&k)).unwrap();
    assert!(!s.is_ramified());
    assert_eq!(s.symbol, (0, 0));
}

#[test]
fn ramification_outside_the_zero_set_is_rejected() {
    let k = field_of_size(3).unwrap();
    assert!(SheafSpec::new(&k, Some(t(&k)), vec![], vec![]).is_err());
}

#[test]
fn trivial_sheaf_product_formula() {
    let k = field_of_size(3).unwrap();
    let spec = SheafSpec::trivial(&k);
    let r = RationalFunction::constant(&k, FqElem::ONE);
    let rep = product_formula_check(&spec, &r, None, true, Caps::default()).unwrap();
    assert!(rep.pass, "{rep:#?}");
    let cf = CoeffField::pinned(3, &[2], 1, rep.runs[0].ell).unwrap();
    assert_eq!(rep.lhs, cf.q_pow(3, -1).value());
}

#[test]
fn gauss_spec_product_formula() {
    for q in [3u64, 5, 7] {
        let k = field_of_size(q).unwrap();
        let r = RationalFunction::constant(&k, FqElem::ONE);
        let rep = product_formula_check(&gauss_spec(&k), &r, None, true, Caps::default()).unwrap();
        assert!(rep.pass, "q = {q}: {rep:#?}");
    }
}

#[test]
fn random_corpus_product_formula() {
    let cases = random_corpus(7, 8, &CorpusOptions::default()).unwrap();
    for c in &cases {
        let rep = product_formula_check(&c.spec, &c.omega, None, true, Caps::default()).unwrap();
        assert!(rep.pass, "case {} {:?} {:?}: {rep:#?}", c.index, c.spec, c.omega);
        assert_eq!(rep.runs.len(), 2);
        assert_ne!(rep.runs[0].ell, rep.runs[1].ell);
    }
}

#[test]
fn l_polynomial_examples() {
    let k = field_of_size(3).unwrap();
    let lpsi = SheafSpec::new(&k, Some(t(&k)), vec![], vec![ClosedPoint::Infinity]).unwrap();
    let an = GlobalAnalysis::new(&lpsi, Caps::default()).unwrap();
    let cf = coeff_field_for(&an, &[], None).unwrap();
    assert_eq!(an.l_polynomial(&cf).unwrap(), vec![cf.one()]);
    assert_eq!(an.global_epsilon(&cf).unwrap().epsilon, cf.one());
    let gauss = GlobalAnalysis::new(&gauss_spec(&k), Caps::default()).unwrap();
    let c = gauss.l_polynomial(&cf).unwrap();
    assert_eq!(c[1], trace_sum(&gauss_spec(&k), 1).unwrap().eval(&cf).unwrap());
    assert_eq!(gauss.global_epsilon(&cf).unwrap().epsilon, -c[1]);
    assert!(gauss.verify_gos(&cf).unwrap().pass);
}

#[test]
fn geometrically_constant_sheaves_refuse_the_l_polynomial() {
    let k = field_of_size(5).unwrap();
    let an = GlobalAnalysis::new(&SheafSpec::trivial(&k), Caps::default()).unwrap();
    let cf = coeff_field_for(&an, &[], None).unwrap();
    assert!(matches!(an.l_polynomial(&cf), Err(Error::Unsupported(_))));
    assert!(an.verify_gos(&cf).unwrap().pass);
}

#[test]
fn pushforward_traces_equal_upstairs_traces() {
    for (q, fam) in [(5u64, CoverFamily::Kummer { e: 2 }), (7, CoverFamily::Kummer { e: 3 }), (3, CoverFamily::ArtinSchreier)] {
        let k = field_of_size(q).unwrap();
        for up in upstairs_family(&k, fam, 5).unwrap() {
            let push = PushforwardSpec::new(fam, up.clone()).unwrap();
            for m in 1..=2 {
                assert_eq!(trace_sum_push(&push, m, TRACE_CAP).unwrap(), trace_sum(&up, m).unwrap());
            }
        }
    }
}

#[test]
fn induction_lambda_is_independent_and_predicted() {
    for (q, fam) in [
        (3u64, CoverFamily::Kummer { e: 2 }),
        (7, CoverFamily::Kummer { e: 2 }),
        (7, CoverFamily::Kummer { e: 3 }),
        (3, CoverFamily::ArtinSchreier),
    ] {
        let k = field_of_size(q).unwrap();
        let ups = upstairs_family(&k, fam, 7).unwrap();
        let omega = t(&k).add(&RationalFunction::constant(&k, FqElem::ONE));
        let rep = induction_check(fam, &ups, &omega, None, Caps::default()).unwrap();
        assert!(rep.pass, "{rep:#?}");
        assert_eq!(rep.cases.len(), 7);
        if matches!(fam, CoverFamily::Kummer { .. }) {
            assert!(rep.prediction.unwrap().matches);
        }
    }
}

#[test]
fn kummer_cover_needs_e_prime_to_p() {
    let k = field_of_size(3).unwrap();
    let ups = vec![SheafSpec::trivial(&k)];
    let omega = RationalFunction::constant(&k, FqElem::ONE);
    assert!(matches!(
        induction_check(CoverFamily::Kummer { e: 3 }, &ups, &omega, None, Caps::default()),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn trace_cap_is_enforced() {
    let k = field_of_size(3).unwrap();
    assert!(matches!(trace_sum_capped(&gauss_spec(&k), 3, 26), Err(Error::CapExceeded { .. })));
}
