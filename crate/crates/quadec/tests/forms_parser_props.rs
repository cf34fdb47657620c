use proptest::prelude::*;
use quadec::forms::catalog::{paraboloid, parsell_vinogradov, q1, q2};
use quadec::forms::{CoefficientSubspace, FormTuple, QuadraticForm};
use quadec::harness::{random_invertible, random_unimodular};
use quadec::linalg::{frac, rat, RationalMatrix, Subspace};
use quadec::parser::{format_tuple, parse_input, parse_tuple, ParseError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Coefficients a/b with small a, b, zero weighted up so sparse forms occur.
fn coef() -> impl Strategy<Value = (i64, i64)> {
    prop_oneof![3 => Just((0, 1)), 4 => (-9i64..=9, 1i64..=4)]
}

fn tuple_strategy() -> impl Strategy<Value = FormTuple> {
    (1usize..=5, 1usize..=4).prop_flat_map(|(d, n)| {
        let monomials = d * (d + 1) / 2;
        prop::collection::vec(prop::collection::vec(coef(), monomials), n).prop_map(move |forms| {
            let forms = forms
                .iter()
                .map(|cs| {
                    let mut terms = Vec::new();
                    let mut k = 0;
                    for i in 0..d {
                        for j in i..d {
                            terms.push((i, j, frac(cs[k].0, cs[k].1)));
                            k += 1;
                        }
                    }
                    QuadraticForm::from_terms(d, &terms)
                })
                .collect();
            FormTuple::new(d, forms).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn format_then_parse_is_identity(q in tuple_strategy()) {
        let text = format_tuple(&q);
        prop_assert_eq!(parse_tuple(&text, None).unwrap(), q.clone());
        prop_assert_eq!(parse_input(&q.to_json()).unwrap(), q);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Arbitrary printable input either parses or fails with a typed error
    /// whose offset lies inside the text.
    #[test]
    fn parse_is_total(text in "[x0-9*^+/; @d=-]{0,24}") {
        match parse_tuple(&text, None) {
            Ok(q) => prop_assert!(q.n() >= 1),
            Err(e) => prop_assert!(e.offset() <= text.len()),
        }
    }

    #[test]
    fn invertible_mixing_keeps_minimal_variables(q in tuple_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_invertible(q.n(), &mut rng);
        let mixed = q.mix_matrix(&m);
        prop_assert_eq!(mixed.minimal_variables(), q.minimal_variables());
        let full = q.mix(&CoefficientSubspace::full(q.n())).unwrap();
        prop_assert_eq!(full.minimal_variables(), q.minimal_variables());
    }

    #[test]
    fn composition_cannot_beat_minimal_variables(q in tuple_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_invertible(q.d(), &mut rng);
        let composed = q.compose(&m);
        prop_assert!(composed.nv_count() >= q.minimal_variables());
        prop_assert_eq!(composed.minimal_variables(), q.minimal_variables());
    }

    #[test]
    fn restriction_basis_does_not_matter(q in tuple_strategy(), seed in any::<u64>()) {
        let d = q.d();
        prop_assume!(d >= 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = Subspace::coordinate(d, &(0..d - 1).collect::<Vec<_>>());
        // Another basis of the same hyperplane.
        let g = random_unimodular(d - 1, &mut rng);
        let other: Vec<Vec<_>> = g.to_rows().iter().map(|row| {
            (0..d).map(|k| if k < d - 1 { row[k].clone() } else { rat(0) }).collect()
        }).collect();
        let h2 = Subspace::new(d, other).unwrap();
        prop_assert!(h.same_as(&h2));
        let a = q.restrict(&h).unwrap();
        let b = q.restrict(&h2).unwrap();
        prop_assert_eq!(a.minimal_variables(), b.minimal_variables());
    }
}

#[test]
fn parser_examples() {
    let q = parse_tuple("x1^2; x2^2 + x1*x3", None).unwrap();
    assert_eq!(q, q2());
    assert_eq!(q.hessian(1), &RationalMatrix::from_i64(&[vec![0, 0, 1], vec![0, 2, 0], vec![1, 0, 0]]).unwrap());
    let q = parse_tuple("x1*x2 - 2*x2*x1", None).unwrap();
    assert_eq!(q.hessian(0), &RationalMatrix::from_i64(&[vec![0, -1], vec![-1, 0]]).unwrap());
    assert!(matches!(parse_tuple("x1^3", None), Err(ParseError::DegreeError { offset: 0 })));
    assert!(matches!(parse_tuple("x1", None), Err(ParseError::DegreeError { .. })));
    assert!(matches!(parse_tuple("x1 x2", None), Err(ParseError::SyntaxError { .. })));
    assert!(matches!(parse_tuple("x4^2", Some(3)), Err(ParseError::UnknownVariable { index: 4, .. })));
    assert_eq!(format_tuple(&q1()), "x1*x2; x1*x3; x2*x3; x3^2");
    assert_eq!(format_tuple(&FormTuple::new(2, vec![QuadraticForm::zero(2)]).unwrap()), "@d=2 0");
    let third = parse_tuple("1/3*x1^2", None).unwrap();
    assert_eq!(format_tuple(&third), "1/3*x1^2");
}

#[test]
fn forms_examples() {
    let t = parse_tuple("@d=4 x1^2 + 2*x1*x3 + x3^2; x1^2 + x3^2 + x4^2 + 2*x1*x3 + 2*x1*x4 + 2*x3*x4", None).unwrap();
    assert_eq!(t.nv_count(), 3);
    assert_eq!(parse_tuple("x1*x2; x2*x3; x3*x4; x4*x1", None).unwrap().nv_count(), 4);
    assert_eq!(FormTuple::new(3, vec![QuadraticForm::zero(3)]).unwrap().nv_count(), 0);

    let h = Subspace::coordinate(3, &[0, 1]);
    assert_eq!(format_tuple(&q2().restrict(&h).unwrap()), "x1^2; x2^2");
    let h = Subspace::coordinate(3, &[1, 2]);
    assert_eq!(format_tuple(&q2().restrict(&h).unwrap()), "@d=2 0; x1^2");
    let pv = parsell_vinogradov(3).restrict(&Subspace::coordinate(3, &[0, 1])).unwrap();
    assert_eq!(pv.forms().iter().filter(|f| f.is_zero()).count(), 3);

    let pair = parse_tuple(
        "x1^2 + x2^2 + x3^2 + 2*x1*x2 + 2*x1*x3 + 2*x2*x3; x1^2 + 2*x1*x2 + x2^2; x1^2 + 2*x1*x2 + x2^2",
        None,
    )
    .unwrap();
    let zero = pair.mix(&CoefficientSubspace::span(3, &[vec![rat(0), rat(1), rat(-1)]])).unwrap();
    assert!(zero.forms()[0].is_zero());
    assert_eq!(pair.minimal_variables(), 2);
    assert_eq!(q1().minimal_variables(), 3);
    let picked = q1().mix(&CoefficientSubspace::span(4, &[vec![rat(0), rat(0), rat(0), rat(1)]])).unwrap();
    assert_eq!(format_tuple(&picked), "x3^2");

    assert!(parse_tuple("@d=3 x1^2", None).unwrap().common_radical().same_as(&Subspace::coordinate(3, &[1, 2])));
    assert_eq!(q2().common_radical().dim(), 0);
    assert_eq!(paraboloid(3).minimal_variables(), 3);
}
