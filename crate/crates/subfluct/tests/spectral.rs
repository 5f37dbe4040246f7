use num_bigint::BigInt;
use proptest::prelude::*;
use subfluct::scalar::Scalar;
use subfluct::spectral::*;
use subfluct::substitution::{is_primitive, theta_matrix, Substitution};

const TOL: f64 = 1e-9;

fn report(text: &str) -> SpectralReport {
    analyze(&theta_matrix(&Substitution::parse(text).unwrap()), TOL).unwrap()
}

fn ints(v: &[i64]) -> Vec<Scalar> {
    v.iter().map(|&x| Scalar::int(x)).collect()
}

fn proportional(u: &[Scalar], v: &[Scalar]) -> bool {
    (0..u.len()).all(|i| (0..u.len()).all(|j| (&u[i] * &v[j]).approx_eq(&(&u[j] * &v[i]), 1e-9)))
}

fn pair<'a>(r: &'a SpectralReport, value: &Scalar) -> &'a EigenPair {
    r.decomposition.pairs.iter().find(|p| p.value.approx_eq(value, 1e-9)).expect("eigenvalue missing")
}

#[test]
fn characteristic_polynomials() {
    let cp = |t: &str| characteristic_polynomial(&theta_matrix(&Substitution::parse(t).unwrap()));
    let big = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
    assert_eq!(cp("a=aab;b=bba"), big(&[3, -4, 1]));
    assert_eq!(cp("a=ab;b=a"), big(&[-1, -1, 1]));
    assert_eq!(cp("a=aaaaa"), big(&[-5, 1]));
}

#[test]
fn main_example_spectrum() {
    let r = report("a=aab;b=bba");
    let values: Vec<_> = r.decomposition.pairs.iter().map(|p| p.value.clone()).collect();
    assert_eq!(values, ints(&[3, 1]));
    assert!(proportional(&pair(&r, &Scalar::int(3)).left[0], &ints(&[1, 1])));
    assert!(proportional(&pair(&r, &Scalar::int(1)).left[0], &ints(&[1, -1])));
    assert_eq!(r.pf.lambda, Scalar::int(3));
    assert_eq!(r.pf.sigma, ints(&[1, 1]));
    assert_eq!(r.pf.rho, vec![Scalar::ratio(1, 2), Scalar::ratio(1, 2)]);
}

#[test]
fn coboundary_example_spectrum() {
    let r = report("a=ab;b=ca;c=cd;d=ac");
    let expected = [(2, [1, 1, 1, 1]), (1, [-1, 0, 1, 0]), (-1, [-1, 2, -1, 2]), (0, [1, -1, -1, 1])];
    for (value, vector) in expected {
        let p = pair(&r, &Scalar::int(value));
        assert_eq!((p.alg_mult, p.geo_mult), (1, 1));
        assert!(p.value.is_exact());
        assert!(proportional(&p.left[0], &ints(&vector)), "{value}: {:?}", p.left);
    }
    assert_eq!(r.pf.sigma, ints(&[1, 1, 1, 1]));
    let rho: Vec<_> = [2, 1, 2, 1].iter().map(|&x| Scalar::ratio(x, 6)).collect();
    assert_eq!(r.pf.rho, rho);
}

#[test]
fn rational_example_spectrum() {
    let r = report("a=abb;b=baa");
    assert_eq!(r.pf.lambda, Scalar::int(3));
    assert!(proportional(&r.pf.sigma, &ints(&[1, 1])));
    assert!(proportional(&pair(&r, &Scalar::int(-1)).left[0], &ints(&[1, -1])));
}

#[test]
fn fibonacci_is_float_with_golden_ratio() {
    let r = report("a=ab;b=a");
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    assert!(!r.pf.lambda.is_exact());
    assert!((r.pf.lambda.re() - phi).abs() < 1e-12);
    let dot: f64 = r.pf.sigma.iter().zip(&r.pf.rho).map(|(a, b)| a.re() * b.re()).sum();
    assert!((dot - 1.0).abs() < 1e-12);
    let other = &r.decomposition.pairs[1];
    assert!((other.value.re() + 1.0 / phi).abs() < 1e-12);
    assert_eq!(r.classes[1], EigenClass::ModulusLt1);
}

#[test]
fn eigenvalue_classes() {
    let three = Scalar::int(3);
    assert_eq!(classify_eigenvalue(&Scalar::int(1), &three, TOL).unwrap(), EigenClass::ModulusEq1Real1);
    assert_eq!(classify_eigenvalue(&three, &three, TOL).unwrap(), EigenClass::Pf);
    assert_eq!(classify_eigenvalue(&Scalar::int(-1), &three, TOL).unwrap(), EigenClass::ModulusEq1Other);
    assert_eq!(classify_eigenvalue(&Scalar::int(2), &three, TOL).unwrap(), EigenClass::ModulusGt1);
    let rot = Scalar::complex(0.6, 0.8);
    assert_eq!(classify_eigenvalue(&rot, &three, TOL).unwrap(), EigenClass::ModulusEq1Other);
}

#[test]
fn salem_example_has_unit_circle_pair() {
    let r = report("a=ad;b=adbbd;c=adbcbcbd;d=adbcbd");
    let unit: Vec<_> = r.classes.iter().filter(|c| **c == EigenClass::ModulusEq1Other).collect();
    assert_eq!(unit.len(), 2);
    assert!(r.decomposition.max_root_residual < 1e-10);
}

#[test]
fn report_serialises_exact_values_as_fractions() {
    let r = report("a=ab;b=ca;c=cd;d=ac");
    let json = serde_json::to_value(&r.pf).unwrap();
    assert_eq!(json["rho"][1], "1/6");
}

fn arb_primitive() -> impl Strategy<Value = Substitution> {
    (2usize..=4)
        .prop_flat_map(|n| proptest::collection::vec(proptest::collection::vec(0..n, 1..=4), n))
        .prop_map(|rules| {
            let text: Vec<String> = rules
                .iter()
                .enumerate()
                .map(|(i, r)| format!("{}={}", (b'a' + i as u8) as char, r.iter().map(|&j| (b'a' + j as u8) as char).collect::<String>()))
                .collect();
            Substitution::parse(&text.join(";")).unwrap()
        })
        .prop_filter("primitive", |s| is_primitive(s).primitive && s.is_growing())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_invariants(s in arb_primitive()) {
        let m = theta_matrix(&s);
        let r = analyze(&m, TOL).unwrap();
        let total: usize = r.decomposition.pairs.iter().map(|p| p.alg_mult).sum();
        prop_assert_eq!(total, s.size());
        let ms = m.to_scalar();
        for p in &r.decomposition.pairs {
            prop_assert!(p.geo_mult <= p.alg_mult && p.geo_mult == p.left.len());
            for v in &p.left {
                let res = left_residual(&ms, v, &p.value);
                if p.exactness == subfluct::Exactness::Exact {
                    prop_assert_eq!(res, 0.0);
                } else {
                    prop_assert!(res <= 1e-9, "residual {}", res);
                }
            }
        }
        let lam = r.pf.lambda.abs();
        for p in &r.decomposition.pairs[1..] {
            prop_assert!(p.value.abs() < lam - 1e-9);
        }
        prop_assert!(r.pf.sigma.iter().chain(&r.pf.rho).all(|x| x.re() > 0.0));
        let dot: Scalar = r.pf.sigma.iter().zip(&r.pf.rho).map(|(a, b)| a * b).sum();
        prop_assert!(dot.approx_eq(&Scalar::one(), 1e-12));
    }
}
