use lmoment_core::arith::{divisor_count, divisors, euler_phi, gcd, lcm, mobius};
use lmoment_core::chars::{enumerate_characters, gauss_sum};
use lmoment_core::expsums::{kloosterman, ramanujan_sum, ramanujan_sum_exponential};
use lmoment_core::series::TruncatedLaurent;
use lmoment_core::{Character, Complex64};
use proptest::prelude::*;

fn series(start: i32) -> impl Strategy<Value = TruncatedLaurent> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 2..8).prop_map(move |v| {
        let mut c: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
        if c[0].norm() < 0.25 {
            c[0] += 1.0;
        }
        TruncatedLaurent::new(start, c)
    })
}

fn character() -> impl Strategy<Value = Character> {
    (1u64..=40).prop_flat_map(|q| {
        let n = enumerate_characters(q).len();
        (Just(q), 0..n)
    })
    .prop_map(|(q, i)| Character::new(q, i).unwrap())
}

proptest! {
    #[test]
    fn gcd_lcm(a in 1u64..10_000, b in 1u64..10_000) {
        prop_assert_eq!(gcd(a, b) * lcm(a, b), a * b);
        prop_assert_eq!(a % gcd(a, b), 0);
    }

    #[test]
    fn divisor_sums(n in 1u64..3000) {
        let ds = divisors(n);
        prop_assert_eq!(ds.len() as u64, divisor_count(n));
        prop_assert_eq!(ds.iter().map(|&d| mobius(d)).sum::<i64>(), i64::from(n == 1));
        prop_assert_eq!(ds.iter().map(|&d| euler_phi(d)).sum::<u64>(), n);
    }

    #[test]
    fn mobius_multiplicative(a in 1u64..500, b in 1u64..500) {
        prop_assume!(gcd(a, b) == 1);
        prop_assert_eq!(mobius(a * b), mobius(a) * mobius(b));
    }

    #[test]
    fn character_multiplicative_periodic(chi in character(), m in -200i64..200, n in -200i64..200) {
        let q = chi.modulus() as i64;
        prop_assert!((chi.value(m * n) - chi.value(m) * chi.value(n)).norm() < 1e-12);
        prop_assert!((chi.value(m + q) - chi.value(m)).norm() < 1e-12);
        if gcd(m.unsigned_abs(), q as u64) != 1 {
            prop_assert_eq!(chi.value(m), Complex64::new(0.0, 0.0));
        } else {
            prop_assert!((chi.value(m).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn character_conjugate_is_inverse(chi in character(), n in 1i64..500) {
        let p = chi.mul(&chi.conj());
        let expected = if gcd(n as u64, chi.modulus()) == 1 { 1.0 } else { 0.0 };
        prop_assert!((p.value(n) - expected).norm() < 1e-12);
    }

    #[test]
    fn gauss_sum_conjugation(chi in character(), h in 1i64..50) {
        // G(χ̄, h) = χ(-1) conj(G(χ, h))
        let lhs = gauss_sum(&chi.conj(), h);
        let rhs = chi.value(-1) * gauss_sum(&chi, h).conj();
        prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()));
    }

    #[test]
    fn ramanujan_forms_agree(q in 1u64..200, h in -300i64..300) {
        let e = ramanujan_sum_exponential(q, h);
        prop_assert!((e.re - ramanujan_sum(q, h) as f64).abs() < 1e-8);
        prop_assert!(e.im.abs() < 1e-8);
    }

    #[test]
    fn kloosterman_symmetric_real_weil(m in -60i64..60, n in -60i64..60, c in 1u64..120) {
        let s = kloosterman(m, n, c);
        prop_assert!((s - kloosterman(n, m, c)).norm() < 1e-9);
        prop_assert!(s.im.abs() < 1e-9);
        let g = gcd(gcd(m.unsigned_abs(), n.unsigned_abs()), c) as f64;
        let weil = divisor_count(c) as f64 * (g * c as f64).sqrt();
        prop_assert!(s.norm() <= weil + 1e-9);
    }

    #[test]
    fn series_mul_associative(f in series(-1), g in series(0), h in series(1)) {
        let a = f.mul(&g).mul(&h);
        let b = f.mul(&g.mul(&h));
        prop_assert!(a.max_abs_diff(&b) < 1e-10);
        prop_assert_eq!(a.order(), b.order());
    }

    #[test]
    fn series_recip(f in series(-2)) {
        let one = f.mul(&f.recip().unwrap());
        prop_assert_eq!(one.start(), 0);
        for k in 0..=one.order() {
            let want = if k == 0 { 1.0 } else { 0.0 };
            prop_assert!((one.coeff(k).unwrap() - want).norm() < 1e-8);
        }
    }

    #[test]
    fn series_eval_homomorphism(f in series(0), g in series(0), z in 0.001f64..0.01) {
        let z = Complex64::new(z, 0.0);
        let fg = f.mul(&g);
        let n = fg.order() + 1;
        let direct = f.eval(z) * g.eval(z);
        // truncation error is O(z^n) with coefficients bounded by the inputs
        prop_assert!((fg.eval(z) - direct).norm() < 200.0 * z.norm().powi(n) + 1e-13);
    }
}
