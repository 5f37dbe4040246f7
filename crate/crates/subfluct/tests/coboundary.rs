use num_complex::Complex64;
use proptest::prelude::*;
use subfluct::coboundary::*;
use subfluct::lab::fixed_point_sums;
use subfluct::path_space::BirkhoffLift;
use subfluct::scalar::Scalar;
use subfluct::substitution::{birkhoff_sum, Substitution};

const TOL: f64 = 1e-9;

fn sub(t: &str) -> Substitution {
    Substitution::parse(t).unwrap()
}

fn ints(v: &[i64]) -> Vec<Scalar> {
    v.iter().map(|&x| Scalar::int(x)).collect()
}

/// The six worked eigenfunctions with unit-modulus eigenvalue, and whether
/// each is a coboundary.
fn worked() -> Vec<(&'static str, Vec<Scalar>, Scalar, bool)> {
    vec![
        ("a=aab;b=bba", ints(&[1, -1]), Scalar::int(1), false),
        ("a=aab;b=bab", ints(&[1, -1]), Scalar::int(1), false),
        ("a=aba;b=bab", ints(&[1, -1]), Scalar::int(1), true),
        ("a=abb;b=baa", ints(&[1, -1]), Scalar::int(-1), false),
        ("a=ab;b=ca;c=cd;d=ac", ints(&[-1, 0, 1, 0]), Scalar::int(1), true),
        ("a=ab;b=ca;c=cd;d=ac", ints(&[-1, 2, -1, 2]), Scalar::int(-1), false),
    ]
}

fn certificate(t: &str, f: &[Scalar], lam: &Scalar) -> CoboundaryCertificate {
    let s = sub(t);
    Analysis::new(&s, TOL).unwrap().certificate(&s, f, lam, TOL).unwrap()
}

/// Residual of `S_f(theta(a)_{<j}) = drift + h(a) - lambda_f^{-1} h(theta(a)_j)`
/// evaluated straight from the rules.
fn letter_residual(s: &Substitution, f: &[Scalar], lam: &Scalar, drift: &Scalar, h: &[Scalar]) -> f64 {
    let inv = lam.recip();
    let mut worst = 0.0f64;
    for a in s.letters() {
        let img = s.rule(a);
        for j in 0..img.len() {
            let lhs = birkhoff_sum(f, &img[..j]);
            let rhs = drift + &h[a.index()] - &inv * &h[img[j].index()];
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// Variance oracle: propagate `E|S_n|^2` for `S_n = sum_{i<=n} lambda^i g(X_i)`
/// along the stationary chain and difference two horizons.
fn propagated_variance(t: &str, f: &[Scalar], lam: &Scalar) -> f64 {
    let s = sub(t);
    let an = Analysis::new(&s, TOL).unwrap();
    let lift = BirkhoffLift::new(&s, &an.space, f, lam).unwrap();
    let p = an.kernels.p.to_f64();
    let m: Vec<f64> = an.kernels.m.iter().map(Scalar::re).collect();
    let n = m.len();
    let fc: Vec<Complex64> = lift.fcheck.iter().map(Scalar::to_c64).collect();
    let mean: Complex64 = (0..n).map(|x| fc[x] * m[x]).sum();
    let g: Vec<Complex64> = fc.iter().map(|v| v - mean).collect();
    let pg: Vec<Complex64> = (0..n).map(|x| (0..n).map(|y| p[x][y] * g[y]).sum()).collect();
    let eg2: f64 = (0..n).map(|x| m[x] * g[x].norm_sqr()).sum();
    let l = lam.to_c64();
    let mut pow = l;
    let mut u: Vec<Complex64> = (0..n).map(|x| pow * g[x] * m[x]).collect();
    let mut second = eg2;
    let mut at = Vec::new();
    for k in 1..=800 {
        pow *= l;
        let cross: Complex64 = (0..n).map(|x| u[x].conj() * pg[x]).sum();
        second += 2.0 * (cross * pow).re + eg2;
        u = (0..n).map(|y| (0..n).map(|x| u[x] * p[x][y]).sum::<Complex64>() + pow * g[y] * m[y]).collect();
        if k + 1 == 400 || k + 1 == 800 {
            at.push(second);
        }
    }
    (at[1] - at[0]) / 400.0
}

#[test]
fn coboundary_decisions() {
    for (t, f, lam, want) in worked() {
        let c = certificate(t, &f, &lam);
        assert_eq!(c.is_coboundary, want, "{t} lambda_f={lam}");
    }
    let c = certificate("a=ab;b=ca;c=cd;d=ac", &ints(&[-1, 0, 1, 0]), &Scalar::one());
    assert_eq!(c.h.unwrap(), ints(&[0, 1, 1, 0]));
    assert_eq!(c.residual, 0.0);
    let c = certificate("a=aba;b=bab", &ints(&[1, -1]), &Scalar::one());
    let h = c.h.unwrap();
    assert_eq!(&h[0] - &h[1], Scalar::one());
}

#[test]
fn main_example_fails_on_the_first_equation() {
    // with h(a)-h(a) on the right, (a,1) forces S_f(empty) = drift and
    // (a,2) forces 1 = drift, so no solution exists
    let c = certificate("a=aab;b=bba", &ints(&[1, -1]), &Scalar::one());
    assert!(!c.is_coboundary && c.h.is_none());
}

#[test]
fn certificates_satisfy_the_letter_equations() {
    for (t, f, lam, want) in worked() {
        let s = sub(t);
        let c = certificate(t, &f, &lam);
        if want {
            let h = c.h.as_ref().unwrap();
            assert_eq!(letter_residual(&s, &f, &lam, &c.drift, h), 0.0, "{t}");
        }
    }
}

#[test]
fn zero_variance_iff_coboundary() {
    for (t, f, lam, want) in worked() {
        let s = sub(t);
        let v = Analysis::new(&s, TOL).unwrap().variance(&s, &f, &lam, TOL).unwrap();
        assert_eq!(v.e_abs_z2.abs() <= 1e-10, want, "{t}: {}", v.e_abs_z2);
    }
}

#[test]
fn exact_variances() {
    let want = [(2, 3), (2, 9), (0, 1), (2, 3), (0, 1), (1, 4)];
    for ((t, f, lam, _), (n, d)) in worked().into_iter().zip(want) {
        let s = sub(t);
        let v = Analysis::new(&s, TOL).unwrap().variance(&s, &f, &lam, TOL).unwrap();
        assert_eq!(v.e_abs_z2, Scalar::ratio(n, d), "{t}");
        // real lambda_f: E Z^2 = E|Z|^2
        assert_eq!(v.e_z2, v.e_abs_z2);
    }
}

#[test]
fn resolvent_matches_series_and_propagation() {
    for (t, f, lam, _) in worked() {
        let s = sub(t);
        let v = Analysis::new(&s, TOL).unwrap().variance(&s, &f, &lam, TOL).unwrap();
        let r = v.e_abs_z2.re();
        let scale = r.abs().max(1.0);
        assert!((r - v.series).abs() <= 1e-8 * scale, "{t}: {r} vs {}", v.series);
        let oracle = propagated_variance(t, &f, &lam);
        assert!((r - oracle).abs() <= 1e-8 * scale, "{t}: {r} vs {oracle}");
    }
}

#[test]
fn salem_unit_circle_variance() {
    let t = "a=ad;b=adbbd;c=adbcbcbd;d=adbcbd";
    let s = sub(t);
    let an = Analysis::new(&s, TOL).unwrap();
    let unit: Vec<_> = an
        .spectral
        .decomposition
        .pairs
        .iter()
        .filter(|p| (p.value.abs() - 1.0).abs() < 1e-9)
        .collect();
    assert_eq!(unit.len(), 2);
    for pair in unit {
        let f = &pair.left[0];
        let v = an.variance(&s, f, &pair.value, TOL).unwrap();
        let r = v.e_abs_z2.re();
        assert!(r > 1e-6);
        assert!((r - v.series).abs() <= 1e-8 * r, "{r} vs {}", v.series);
        assert!((r - propagated_variance(t, f, &pair.value)).abs() <= 1e-8 * r);
        // non-real lambda_f: E Z^2 vanishes
        assert!(v.e_z2.abs() <= 1e-9 * r);
        assert!((v.gamma[0][0] + v.gamma[1][1] - r).abs() < 1e-12);
    }
}

#[test]
fn variance_matches_enumeration() {
    // Var(S_f(u_{<=K})) / log_3 N at N = 3^13, within 15%
    let s = sub("a=aab;b=bba");
    let sums = fixed_point_sums(&s, &ints(&[1, -1]), 3usize.pow(13)).unwrap();
    let n = sums.len() as f64;
    let mean = sums.iter().map(|z| z.re).sum::<f64>() / n;
    let var = sums.iter().map(|z| (z.re - mean).powi(2)).sum::<f64>() / n;
    let ratio = var / (2.0 / 3.0 * 13.0);
    assert!((0.85..=1.15).contains(&ratio), "{ratio}");
}

#[test]
fn split_form_equivalence() {
    for (t, f, lam, want) in worked() {
        let s = sub(t);
        let c = certificate(t, &f, &lam);
        let split = solve_split_form(&s, &f, &lam, &c.drift, TOL);
        // when lambda_f = 1 a nonzero drift is not a coboundary even if the
        // algebra happens to close
        assert_eq!(split.is_some() && c.drift_vanishes.unwrap_or(true), want, "{t}");
        if let Some(h) = c.h.as_ref().filter(|_| want) {
            assert!(split_form_residual(&s, &f, &lam, &c.drift, h) <= 1e-10);
        }
        if let Some(h) = split.filter(|_| want) {
            assert!(letter_residual(&s, &f, &lam, &c.drift, &h) <= 1e-10, "{t}");
        }
    }
}

#[test]
fn coboundaries_have_bounded_sums() {
    for (t, f) in [("a=aba;b=bab", ints(&[1, -1])), ("a=ab;b=ca;c=cd;d=ac", ints(&[-1, 0, 1, 0]))] {
        let s = sub(t);
        let c = certificate(t, &f, &Scalar::one());
        let bound = c.birkhoff_bound(&Scalar::one()).unwrap();
        let sums = fixed_point_sums(&s, &f, 1_000_000).unwrap();
        let sup = sums.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(sup <= bound, "{t}: {sup} > {bound}");
        let early = sums[..10_000].iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert_eq!(sup, early, "{t}");
    }
}

#[test]
fn classifier_verdicts() {
    let fib = classify_discrepancy(&sub("a=ab;b=a"), TOL).unwrap();
    assert!(fib.bounded && fib.bounded_literal && fib.no_large_eigenvalues);

    let main = classify_discrepancy(&sub("a=aab;b=bba"), TOL).unwrap();
    assert!(!main.bounded && !main.bounded_literal);
    assert!(!main.unit_one_eigenfunctions_coboundaries);

    let cob = classify_discrepancy(&sub("a=ab;b=ca;c=cd;d=ac"), TOL).unwrap();
    assert!(!cob.bounded);
    assert!(!cob.unit_eigenfunctions_coboundaries);
    // the eigenvalue-1 eigenfunction alone is a coboundary
    assert!(cob.bounded_literal);
    let minus = cob.eigenvalues.iter().find(|e| e.value == Scalar::int(-1)).unwrap();
    assert!(!minus.certificates[0].is_coboundary);

    let periodic = classify_discrepancy(&sub("a=aba;b=bab"), TOL).unwrap();
    assert!(periodic.bounded);

    let growing = classify_discrepancy(&sub("a=aaab;b=abbb"), TOL).unwrap();
    assert!(!growing.no_large_eigenvalues && !growing.bounded);
}

#[test]
fn fibonacci_discrepancy_oracle() {
    // S_{f_a}(u_{<=n}) - n freq(a) stays bounded; its sup over 10^6 terms
    // barely exceeds the sup over the first 10^4
    let s = sub("a=ab;b=a");
    let freq = (5f64.sqrt() - 1.0) / 2.0;
    let sums = fixed_point_sums(&s, &[Scalar::one(), Scalar::zero()], 1_000_000).unwrap();
    let dev = |k: usize| (sums[k].re - (k + 1) as f64 * freq).abs();
    let early = (0..10_000).map(dev).fold(0.0, f64::max);
    let all = (0..sums.len()).map(dev).fold(0.0, f64::max);
    assert!(all < 1.0);
    assert!(all - early <= 0.02, "{early} {all}");
}

#[test]
fn verdict_is_reproducible_from_reasons() {
    for t in ["a=ab;b=a", "a=aab;b=bba", "a=ab;b=ca;c=cd;d=ac", "a=aba;b=bab", "a=aabc;b=bbca;c=ccab"] {
        let v = classify_discrepancy(&sub(t), TOL).unwrap();
        let large = v.eigenvalues.iter().any(|e| e.class == subfluct::spectral::EigenClass::ModulusGt1);
        let unit: Vec<_> = v.eigenvalues.iter().filter(|e| e.class.modulus_one()).collect();
        let diag = unit.iter().all(|e| e.alg_mult == e.geo_mult);
        let cob = unit.iter().all(|e| e.certificates.iter().all(|c| c.is_coboundary));
        assert_eq!(v.bounded, !large && diag && cob, "{t}");
    }
}

#[test]
fn repeated_unit_eigenvalue_is_basis_independent() {
    // M = I + J has eigenvalue 1 with a two-dimensional eigenspace
    let t = "a=aabc;b=bbca;c=ccab";
    let s = sub(t);
    let an = Analysis::new(&s, TOL).unwrap();
    let one = an.spectral.decomposition.pairs.iter().find(|p| p.value == Scalar::one()).unwrap();
    assert_eq!((one.alg_mult, one.geo_mult), (2, 2));
    let decide = |f: &[Scalar]| an.certificate(&s, f, &Scalar::one(), TOL).unwrap().is_coboundary;
    let (u, v) = (ints(&[1, -1, 0]), ints(&[0, 1, -1]));
    let combo = |x: i64, y: i64| -> Vec<Scalar> { (0..3).map(|i| &(&Scalar::int(x) * &u[i]) + &(&Scalar::int(y) * &v[i])).collect() };
    let first = [u.clone(), v.clone()].iter().all(|f| decide(f));
    let second = [combo(2, 3), combo(-1, 5)].iter().all(|f| decide(f));
    let library = one.left.iter().all(|f| decide(f));
    assert_eq!(first, second);
    assert_eq!(first, library);
}

#[test]
fn rejects_bad_input() {
    let s = sub("a=aab;b=bba");
    let an = Analysis::new(&s, TOL).unwrap();
    assert!(an.certificate(&s, &ints(&[1, 0]), &Scalar::one(), TOL).is_err());
    assert!(matches!(an.variance(&s, &ints(&[1, 1]), &Scalar::int(3), TOL), Err(CoboundaryError::NotUnitModulus(_))));
}

#[test]
fn certificate_serialises_exactly() {
    let c = certificate("a=ab;b=ca;c=cd;d=ac", &ints(&[-1, 0, 1, 0]), &Scalar::one());
    let json = serde_json::to_value(&c).unwrap();
    assert_eq!(json["h"][1], "1");
    assert_eq!(json["is_coboundary"], true);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scaling_preserves_the_decision(c in -20i64..20, d in 1i64..9) {
        prop_assume!(c != 0);
        let k = Scalar::ratio(c, d);
        for (t, f, lam, want) in worked() {
            let g: Vec<Scalar> = f.iter().map(|x| &k * x).collect();
            prop_assert_eq!(certificate(t, &g, &lam).is_coboundary, want);
        }
    }

    #[test]
    fn generated_coboundaries_are_detected(h in proptest::collection::vec(-5i64..5, 2)) {
        // on the periodic substitution, f = (d, -d) has transfer h(a)-h(b) = d
        let s = sub("a=aba;b=bab");
        let f = ints(&[h[0] - h[1], h[1] - h[0]]);
        let c = certificate("a=aba;b=bab", &f, &Scalar::one());
        prop_assert!(c.is_coboundary);
        let got = c.h.unwrap();
        prop_assert_eq!(&got[0] - &got[1], Scalar::int(h[0] - h[1]));
        let sums = fixed_point_sums(&s, &f, 2000).unwrap();
        let bound = 2.0 * (h[0] - h[1]).abs() as f64;
        prop_assert!(sums.iter().all(|z| z.norm() <= bound + 1e-12));
    }
}
