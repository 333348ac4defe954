use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shor_mps::numtheory::*;

/// Brute-force order by repeated multiplication.
fn naive_order(a: u64, n: u64) -> u64 {
    let mut v = a % n;
    let mut k = 1;
    while v != 1 {
        v = v * a % n;
        k += 1;
    }
    k
}

fn small_semiprimes() -> Vec<(u64, u64)> {
    let primes: Vec<u64> = (3..120).filter(|&p| is_prime(p)).collect();
    let mut out = Vec::new();
    for (i, &p) in primes.iter().enumerate() {
        for &q in &primes[i + 1..] {
            if p * q <= 10_000 {
                out.push((p, q));
            }
        }
    }
    out
}

#[test]
fn orders_are_minimal_and_divide_lambda() {
    for (p, q) in small_semiprimes().into_iter().step_by(7) {
        let n = p * q;
        let lambda = carmichael_semiprime(p, q).unwrap();
        for a in (2..n).filter(|&a| gcd(a, n) == 1).step_by(11) {
            let r = multiplicative_order(a, n).unwrap();
            assert_eq!(r, naive_order(a, n), "a = {a}, N = {n}");
            assert_eq!(multiplicative_order_semiprime(a, p, q).unwrap(), r);
            assert_eq!(lambda % r, 0);
            let (alpha, _) = two_adic_split(r);
            assert!(alpha <= alpha_statistics(p, q).unwrap().alpha_max);
        }
    }
}

#[test]
fn published_orders() {
    for (a, n, r) in [(2, 1943, 924), (10, 8189, 3870), (5, 961307, 479568), (2, 21, 6)] {
        assert_eq!(multiplicative_order(a, n).unwrap(), r);
    }
    assert_eq!(two_adic_split(924), (2, 231));
    assert_eq!(two_adic_split(3870), (1, 1935));
}

#[test]
fn order_cap_is_enforced() {
    assert!(multiplicative_order_capped(2, 1943, 100).is_err());
    assert_eq!(multiplicative_order_capped(2, 1943, 924).unwrap(), 924);
}

#[test]
fn random_coprime_is_uniform_over_units() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 10_000;
    let mut counts = [0u32; 21];
    for _ in 0..draws {
        let d = random_coprime(21, &mut rng);
        assert_eq!(gcd(d.a, 21), 1);
        for f in d.lucky_factors {
            assert!(f == 3 || f == 7);
        }
        counts[d.a as usize] += 1;
    }
    let units: Vec<usize> = (2..21).filter(|&a| gcd(a as u64, 21) == 1).collect();
    let p = 1.0 / units.len() as f64;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for a in units {
        assert!((counts[a] as f64 - draws as f64 * p).abs() < 5.0 * sigma, "a = {a}: {}", counts[a]);
    }
}

#[test]
fn recovery_from_true_order() {
    for (p, q) in small_semiprimes().into_iter().step_by(13) {
        let n = p * q;
        for a in (2..n).filter(|&a| gcd(a, n) == 1).step_by(17) {
            let r = multiplicative_order(a, n).unwrap();
            let half = if r % 2 == 0 { Some(mod_pow(a, r / 2, n).unwrap()) } else { None };
            match recover_factors(n, a, r) {
                Some((x, y)) => {
                    assert_eq!(x * y, n);
                    assert_eq!((x.min(y), x.max(y)), (p, q));
                }
                None => assert!(half.is_none() || half == Some(n - 1), "a = {a}, N = {n}"),
            }
        }
    }
}

proptest! {
    #[test]
    fn mod_pow_matches_repeated_multiplication(base in 0u64..1000, e in 0u64..64, m in 2u64..5000) {
        let mut v = 1 % m;
        for _ in 0..e {
            v = v * (base % m) % m;
        }
        prop_assert_eq!(mod_pow(base, e, m).unwrap(), v);
    }

    #[test]
    fn two_adic_round_trip(r in 1u64..(1 << 40)) {
        let (alpha, beta) = two_adic_split(r);
        prop_assert_eq!(beta << alpha, r);
        prop_assert_eq!(beta % 2, 1);
    }

    #[test]
    fn convergents_are_reduced_and_close(l in 1u32..12, seed in any::<u64>()) {
        let denom = 1u64 << (2 * l);
        let s = seed % denom;
        let convs = continued_fraction_convergents(s, denom);
        prop_assert!(!convs.is_empty());
        for w in convs.windows(2) {
            prop_assert!(w[0].denominator < w[1].denominator);
        }
        let x = s as f64 / denom as f64;
        for c in &convs {
            prop_assert_eq!(gcd(c.numerator, c.denominator), 1);
            let err = (x - c.numerator as f64 / c.denominator as f64).abs();
            prop_assert!(err <= 1.0 / (c.denominator as f64).powi(2) + 1e-15);
        }
        let last = convs.last().unwrap();
        prop_assert_eq!(last.numerator as u128 * denom as u128, last.denominator as u128 * s as u128);
    }

    #[test]
    fn miller_rabin_matches_trial_division(n in 0u64..20_000) {
        let trial = n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
        prop_assert_eq!(is_prime(n), trial);
    }
}
