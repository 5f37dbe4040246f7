use num_bigint::BigUint;
use proptest::prelude::*;
use subfluct::measures::lift_pf;
use subfluct::path_space::*;
use subfluct::scalar::Scalar;
use subfluct::spectral::analyze;
use subfluct::substitution::{birkhoff_partial_sums, find_seed, fixed_point_prefix, theta_matrix, Substitution};

fn sub(t: &str) -> Substitution {
    Substitution::parse(t).unwrap()
}

fn big(n: u64) -> BigUint {
    BigUint::from(n)
}

#[test]
fn state_spaces() {
    let s = sub("a=aab;b=bba");
    let sp = build_state_space(&s);
    let names: Vec<_> = (0..sp.len()).map(|i| sp.render(i)).collect();
    assert_eq!(names, ["(a,1)", "(a,2)", "(a,3)", "(b,1)", "(b,2)", "(b,3)"]);
    assert_eq!(build_state_space(&sub("a=aa")).len(), 2);
    let fib = build_state_space(&sub("a=ab;b=a"));
    let names: Vec<_> = (0..fib.len()).map(|i| fib.render(i)).collect();
    assert_eq!(names, ["(a,1)", "(a,2)", "(b,1)"]);
}

#[test]
fn ssim_powers() {
    let s = sub("a=aab;b=bba");
    let sp = build_state_space(&s);
    let m1 = ssim_power(&sp, 1);
    // row (a,j) has ones at the states emitting a: (a,1),(a,2),(b,3)
    let row: Vec<u32> = (0..6).map(|y| if m1.get(0, y) == &big(1) { 1 } else { 0 }).collect();
    assert_eq!(row, [1, 1, 0, 0, 0, 1]);
    // the worked example prints the transpose of the definition
    let display = [
        [1, 1, 1, 0, 0, 0],
        [1, 1, 1, 0, 0, 0],
        [0, 0, 0, 1, 1, 1],
        [0, 0, 0, 1, 1, 1],
        [0, 0, 0, 1, 1, 1],
        [1, 1, 1, 0, 0, 0],
    ];
    for x in 0..6 {
        for y in 0..6 {
            assert_eq!(m1.get(x, y), &big(display[y][x]));
        }
    }
    let m = theta_matrix(&s);
    let m2 = ssim_power(&sp, 2);
    for x in 0..6 {
        for y in 0..6 {
            let want = m.get(sp.state(x).letter.index(), sp.emitted(y).index());
            assert_eq!(m2.get(x, y), &big(want));
        }
        let sum: BigUint = (0..6).map(|y| m2.get(x, y).clone()).sum();
        assert_eq!(sum, big(9));
    }
    // row sums of m1 count occurrences of the row letter across rule bodies
    for x in 0..6 {
        let sum: BigUint = (0..6).map(|y| m1.get(x, y).clone()).sum();
        assert_eq!(sum, big(3));
    }
}

#[test]
fn encode_examples() {
    let s = sub("a=aab;b=bba");
    let a = s.letter('a').unwrap();
    let p1 = encode(&s, a, 3, &big(1)).unwrap();
    assert!(p1.digits.iter().all(|x| x.pos == 1 && x.letter == a));
    let p = encode(&s, a, 2, &big(5)).unwrap();
    assert_eq!(decode(&s, a, &p).unwrap(), big(5));
    // rebuild the prefix of theta^2(a) from the digits
    let mut prefix = Vec::new();
    for (i, x) in p.digits.iter().enumerate() {
        let before = &s.rule(x.letter)[..x.pos - 1];
        let mut block = s.power_image(before, i);
        block.extend(prefix);
        prefix = block;
    }
    assert_eq!(s.render(&prefix), "aaba");
    let p = encode(&s, a, 2, &big(9)).unwrap();
    assert_eq!(p.digits[1].pos, 3);
    assert!(matches!(encode(&s, a, 2, &big(10)), Err(PathError::OutOfRange { .. })));
    assert!(matches!(encode(&s, a, 2, &big(0)), Err(PathError::OutOfRange { .. })));
}

#[test]
fn decode_examples() {
    let s = sub("a=aab;b=bba");
    let a = s.letter('a').unwrap();
    let p = Path { digits: vec![State { letter: a, pos: 3 }] };
    assert_eq!(decode(&s, a, &p).unwrap(), big(3));
    let bad = Path { digits: vec![State { letter: s.letter('b').unwrap(), pos: 1 }] };
    assert!(decode(&s, a, &bad).is_err());
}

#[test]
fn reversed_codings() {
    let s = sub("a=aab;b=bba");
    let a = s.letter('a').unwrap();
    let one = encode_reversed(&s, a, &big(1)).unwrap();
    assert!(one.digits.is_empty());
    assert_eq!(one.digit(5), State { letter: a, pos: 1 });
    let deep = encode_reversed(&s, a, &big(3u64.pow(8))).unwrap();
    for p in 4..8 {
        let z = encode_reversed(&s, a, &big(3u64.pow(p))).unwrap();
        assert_eq!(z.prefix(p as usize), deep.prefix(p as usize));
    }
    let fib = sub("a=ab;b=a");
    let z = encode_reversed(&fib, fib.letter('a').unwrap(), &big(2)).unwrap();
    assert_eq!(z.digit(1), State { letter: fib.letter('a').unwrap(), pos: 2 });
}

#[test]
fn successor_examples() {
    let s = sub("a=aab;b=bba");
    let a = s.letter('a').unwrap();
    let min = encode(&s, a, 3, &big(1)).unwrap();
    assert_eq!(adic_successor(&s, &min).unwrap(), encode(&s, a, 3, &big(2)).unwrap());
    let max = encode(&s, a, 3, &big(27)).unwrap();
    assert_eq!(adic_successor(&s, &max), Err(PathError::Maximal));
    for p in 1..=5 {
        let paths = enumerate_paths(&s, a, p);
        assert_eq!(paths.len(), 3usize.pow(p as u32));
        for (i, x) in paths.iter().enumerate() {
            assert_eq!(decode(&s, a, x).unwrap(), big(i as u64 + 1));
        }
    }
}

#[test]
fn renormalised_sums_match_direct_sums() {
    let s = sub("a=aab;b=bba");
    let a = s.letter('a').unwrap();
    let f = vec![Scalar::int(1), Scalar::int(-1)];
    let u = fixed_point_prefix(&s, &find_seed(&s).unwrap(), 729);
    let direct = birkhoff_partial_sums(&f, &u);
    let minimal = encode(&s, a, 6, &big(1)).unwrap();
    assert!(renormalized_birkhoff(&s, &f, &Scalar::one(), &minimal).unwrap().is_exact_zero());
    let sp = build_state_space(&s);
    let lift = BirkhoffLift::new(&s, &sp, &f, &Scalar::one()).unwrap();
    for (i, p) in enumerate_paths(&s, a, 6).iter().enumerate().skip(1) {
        // the path of position n codes the prefix u_{<n}
        assert_eq!(lift.eval(&sp, p), direct[i - 1]);
    }
}

#[test]
fn non_eigenvectors_are_rejected() {
    let s = sub("a=aab;b=bba");
    let f = vec![Scalar::int(1), Scalar::int(0)];
    assert!(matches!(check_eigenfunction(&s, &f, &Scalar::one()), Err(PathError::NotEigenvector(_))));
    assert!(matches!(check_eigenfunction(&s, &f[..1], &Scalar::one()), Err(PathError::Dimension { .. })));
}

#[test]
fn lifted_rho_is_a_right_eigenvector_of_the_state_matrix() {
    for t in ["a=aab;b=bba", "a=ab;b=a", "a=ab;b=ca;c=cd;d=ac"] {
        let s = sub(t);
        let sp = build_state_space(&s);
        let pf = analyze(&theta_matrix(&s), 1e-9).unwrap().pf;
        let lifted = lift_pf(&sp, &pf);
        let m1 = ssim_power(&sp, 1);
        for x in 0..sp.len() {
            let lhs: Scalar = (0..sp.len()).filter(|&y| m1.get(x, y) == &big(1)).map(|y| lifted.rho_hat[y].clone()).sum();
            let rhs = &lifted.lambda * &lifted.rho_hat[x];
            assert!((lhs - rhs).abs() <= 1e-12, "{t}");
        }
    }
}

#[test]
fn literal_successor_rule_is_only_a_diagnostic() {
    // the rule that compares k_l with |theta(v_{l+1})| disagrees with +1
    // on substitutions whose rules have different lengths
    let fib = sub("a=ab;b=a");
    assert!(literal_rule_disagreements(&fib, fib.letter('a').unwrap(), 6) > 0);
    let s = sub("a=aab;b=bba");
    assert_eq!(literal_rule_disagreements(&s, s.letter('a').unwrap(), 5), 0);
}

proptest! {
    #[test]
    fn encode_decode_round_trip(p in 1usize..12, seed in any::<u64>()) {
        for t in ["a=aab;b=bba", "a=ab;b=a", "a=abc;b=ca;c=b"] {
            let s = sub(t);
            let a = s.letter('a').unwrap();
            let max = s.length_table(p)[p][a.index()].clone();
            let n = BigUint::from(seed) % &max + 1u32;
            let path = encode(&s, a, p, &n).unwrap();
            check_consistent(&s, a, &path).unwrap();
            prop_assert_eq!(decode(&s, a, &path).unwrap(), n.clone());
            if n < max {
                prop_assert_eq!(adic_successor(&s, &path).unwrap(), encode(&s, a, p, &(n + 1u32)).unwrap());
            }
        }
    }

    #[test]
    fn fibonacci_renormalised_sums(n in 2u64..10_000) {
        let s = sub("a=ab;b=a");
        let a = s.letter('a').unwrap();
        let al = (5f64.sqrt() - 1.0) / 2.0;
        let f = vec![Scalar::float(al - 1.0), Scalar::float(al)];
        let u = fixed_point_prefix(&s, &find_seed(&s).unwrap(), n as usize - 1);
        let direct: f64 = u.iter().map(|c| f[c.index()].re()).sum();
        let p = 21;
        let path = encode(&s, a, p, &big(n)).unwrap();
        let r = renormalized_birkhoff(&s, &f, &Scalar::float(-al), &path).unwrap().re();
        prop_assert!((r - direct).abs() < 1e-9);
    }
}
