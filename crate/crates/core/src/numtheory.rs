//! Exact integer arithmetic behind order finding.
//!
//! Everything here works on `u64` with `u128` intermediates, which bounds the
//! supported moduli to `N < 2^62`. That is far beyond anything an MPS
//! simulation can reach, so no arbitrary-precision type is involved.

use rand::Rng;
use thiserror::Error;

/// Largest modulus accepted by the order and factoring routines.
pub const MAX_MODULUS: u64 = 1 << 62;

/// Default iteration cap for [`multiplicative_order`] when the factors of `N`
/// are not known.
pub const DEFAULT_ORDER_ITERATION_CAP: u64 = 1 << 26;

/// Asymptotic lower bound on `Pr(alpha = max(d_p, d_q))` for a uniformly random
/// base.
pub const MAX_ALPHA_PROBABILITY_FLOOR: f64 = 0.5;

/// Asymptotic expectation of `max(d_p, d_q)` over random primes `p`, `q`.
pub const EXPECTED_MAX_ALPHA: f64 = 8.0 / 3.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("order of {base} mod {modulus} not found within {cap} iterations")]
    IterationCapExceeded { base: u64, modulus: u64, cap: u64 },
}

pub type NumResult<T> = Result<T, NumError>;

fn invalid<T>(msg: impl Into<String>) -> NumResult<T> {
    Err(NumError::InvalidArgument(msg.into()))
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `base^exponent mod modulus` by square-and-multiply.
pub fn mod_pow(base: u64, mut exponent: u64, modulus: u64) -> NumResult<u64> {
    if modulus < 2 {
        return invalid(format!("modulus must be at least 2, got {modulus}"));
    }
    let mut result = 1 % modulus;
    let mut b = base % modulus;
    while exponent > 0 {
        if exponent & 1 == 1 {
            result = mul_mod(result, b, modulus);
        }
        b = mul_mod(b, b, modulus);
        exponent >>= 1;
    }
    Ok(result)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd(a, b) * b
}

/// Number of binary digits of `n`: the position of the highest set bit plus
/// one.
pub fn bit_length(n: u64) -> u32 {
    u64::BITS - n.leading_zeros()
}

/// Deterministic Miller-Rabin for the whole `u64` range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = mod_pow(a, d, n).expect("n >= 2");
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Integer `k`-th root, rounded down.
fn integer_root(n: u64, k: u32) -> u64 {
    if k == 1 || n < 2 {
        return n;
    }
    let mut x = (n as f64).powf(1.0 / k as f64).round() as u64;
    // correct the float estimate in both directions
    let pow_le = |x: u64| -> bool {
        let mut acc: u128 = 1;
        for _ in 0..k {
            acc *= x as u128;
            if acc > n as u128 {
                return false;
            }
        }
        true
    };
    while x > 0 && !pow_le(x) {
        x -= 1;
    }
    while pow_le(x + 1) {
        x += 1;
    }
    x
}

/// Returns `Some((p, k))` with `n = p^k`, `p` prime and `k >= 2`, if `n` is a
/// proper prime power.
pub fn prime_power(n: u64) -> Option<(u64, u32)> {
    if n < 4 {
        return None;
    }
    for k in (2..=bit_length(n)).rev() {
        let root = integer_root(n, k);
        if root >= 2 && root.checked_pow(k) == Some(n) && is_prime(root) {
            return Some((root, k));
        }
    }
    None
}

/// Prime factorization by trial division, as `(prime, exponent)` pairs in
/// increasing order.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Two-adic valuation and odd part of `r`: `r = beta * 2^alpha`.
pub fn two_adic_split(r: u64) -> (u32, u64) {
    assert!(r >= 1, "two_adic_split requires r >= 1");
    let alpha = r.trailing_zeros();
    (alpha, r >> alpha)
}

fn check_semiprime_factors(p: u64, q: u64) -> NumResult<()> {
    if p == q {
        return invalid(format!("p and q must differ (got {p} twice); N must be squarefree"));
    }
    if p < 3 || q < 3 || p % 2 == 0 || q % 2 == 0 {
        return invalid(format!("p = {p} and q = {q} must both be odd primes"));
    }
    Ok(())
}

/// Carmichael function of `N = pq`: `lcm(p - 1, q - 1)`.
pub fn carmichael_semiprime(p: u64, q: u64) -> NumResult<u64> {
    check_semiprime_factors(p, q)?;
    Ok(lcm(p - 1, q - 1))
}

/// Two-adic structure of `p - 1` and `q - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AlphaStatistics {
    pub dp: u32,
    pub dq: u32,
    /// `max(dp, dq)`: the largest `alpha` any base can produce for this `N`.
    pub alpha_max: u32,
}

pub fn alpha_statistics(p: u64, q: u64) -> NumResult<AlphaStatistics> {
    check_semiprime_factors(p, q)?;
    let dp = (p - 1).trailing_zeros();
    let dq = (q - 1).trailing_zeros();
    Ok(AlphaStatistics { dp, dq, alpha_max: dp.max(dq) })
}

fn check_order_args(a: u64, n: u64) -> NumResult<()> {
    if n < 3 || n >= MAX_MODULUS {
        return invalid(format!("modulus {n} outside supported range [3, 2^62)"));
    }
    if a <= 1 || a >= n {
        return invalid(format!("base must satisfy 1 < a < N (a = {a}, N = {n})"));
    }
    let g = gcd(a, n);
    if g != 1 {
        return invalid(format!("gcd({a}, {n}) = {g}: base shares a factor with N"));
    }
    Ok(())
}

/// Multiplicative order of `a` modulo `n` by iterating powers, with the default
/// iteration cap.
pub fn multiplicative_order(a: u64, n: u64) -> NumResult<u64> {
    multiplicative_order_capped(a, n, DEFAULT_ORDER_ITERATION_CAP)
}

pub fn multiplicative_order_capped(a: u64, n: u64, cap: u64) -> NumResult<u64> {
    check_order_args(a, n)?;
    let mut x = a;
    let mut r = 1u64;
    while x != 1 {
        if r >= cap {
            return Err(NumError::IterationCapExceeded { base: a, modulus: n, cap });
        }
        x = mul_mod(x, a, n);
        r += 1;
    }
    Ok(r)
}

/// Multiplicative order of `a` modulo `N = pq` when the factors are known.
///
/// Starts from `lambda(N)` and strips each prime factor while the power still
/// reduces to one.
pub fn multiplicative_order_semiprime(a: u64, p: u64, q: u64) -> NumResult<u64> {
    let lambda = carmichael_semiprime(p, q)?;
    let n = p
        .checked_mul(q)
        .filter(|&n| n < MAX_MODULUS)
        .ok_or_else(|| NumError::InvalidArgument(format!("p * q overflows the supported range")))?;
    check_order_args(a, n)?;
    let mut r = lambda;
    for (prime, exp) in factorize(lambda) {
        for _ in 0..exp {
            if mod_pow(a, r / prime, n)? == 1 {
                r /= prime;
            } else {
                break;
            }
        }
    }
    Ok(r)
}

/// Order data derived from a semiprime instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OrderProfile {
    pub r: u64,
    pub alpha: u32,
    pub beta: u64,
    /// Only present when the factors of `N` are known.
    pub lambda_n: Option<u64>,
    pub dp: Option<u32>,
    pub dq: Option<u32>,
}

impl OrderProfile {
    /// Profile computed without knowledge of the factors.
    pub fn from_base(a: u64, n: u64) -> NumResult<Self> {
        let r = multiplicative_order(a, n)?;
        let (alpha, beta) = two_adic_split(r);
        Ok(Self { r, alpha, beta, lambda_n: None, dp: None, dq: None })
    }

    /// Profile computed through `lambda(N)`; also fills the Carmichael fields.
    pub fn from_factors(a: u64, p: u64, q: u64) -> NumResult<Self> {
        let r = multiplicative_order_semiprime(a, p, q)?;
        let (alpha, beta) = two_adic_split(r);
        let stats = alpha_statistics(p, q)?;
        Ok(Self {
            r,
            alpha,
            beta,
            lambda_n: Some(carmichael_semiprime(p, q)?),
            dp: Some(stats.dp),
            dq: Some(stats.dq),
        })
    }
}

/// Problem parameters for one order-finding run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SemiprimeInstance {
    pub n: u64,
    pub a: u64,
    /// Bit length of `n`. The upper register holds `2 * l` qubits.
    pub l: u32,
    /// Known factors, for verification modes only. The simulation never reads
    /// them.
    pub factors: Option<(u64, u64)>,
}

impl SemiprimeInstance {
    pub fn new(n: u64, a: u64) -> NumResult<Self> {
        check_order_args(a, n)?;
        Ok(Self { n, a, l: bit_length(n), factors: None })
    }

    pub fn with_factors(n: u64, a: u64, p: u64, q: u64) -> NumResult<Self> {
        check_semiprime_factors(p, q)?;
        if p.checked_mul(q) != Some(n) {
            return invalid(format!("{p} * {q} != {n}"));
        }
        if !is_prime(p) || !is_prime(q) {
            return invalid(format!("{p} and {q} must both be prime"));
        }
        let mut inst = Self::new(n, a)?;
        inst.factors = Some((p.min(q), p.max(q)));
        Ok(inst)
    }

    pub fn upper_qubits(&self) -> usize {
        2 * self.l as usize
    }

    /// Size of the upper register's computational basis, `2^(2l)`.
    pub fn upper_dim(&self) -> u64 {
        1u64 << (2 * self.l)
    }

    /// Multiplier applied by the controlled gate on upper qubit `i`:
    /// `a^(2^i) mod N`, by repeated squaring.
    pub fn gate_multiplier(&self, i: usize) -> u64 {
        let mut m = self.a % self.n;
        for _ in 0..i {
            m = mul_mod(m, m, self.n);
        }
        m
    }
}

/// Checks the input contract of the sampling front end: `n` odd, composite and
/// not a prime power.
pub fn validate_shor_modulus(n: u64) -> NumResult<()> {
    if n < 15 || n >= MAX_MODULUS {
        return invalid(format!("N = {n} is outside the supported range [15, 2^62)"));
    }
    if n % 2 == 0 {
        return invalid(format!("N = {n} is even"));
    }
    if is_prime(n) {
        return invalid(format!("N = {n} is prime"));
    }
    if let Some((p, k)) = prime_power(n) {
        return invalid(format!("N = {n} is a prime power ({p}^{k})"));
    }
    Ok(())
}

/// One continued-fraction convergent `numerator / denominator`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Convergent {
    pub numerator: u64,
    pub denominator: u64,
}

/// Convergents of `s / denom` in lowest terms, strictly increasing in
/// denominator.
///
/// When two successive convergents share a denominator (leading partial
/// quotient 1, i.e. `s / denom > 1/2`), only the later and closer one is kept.
pub fn continued_fraction_convergents(s: u64, denom: u64) -> Vec<Convergent> {
    assert!(denom >= 1 && s < denom, "need 0 <= s < denom");
    let mut out: Vec<Convergent> = Vec::new();
    // h_{-2}, h_{-1} and k_{-2}, k_{-1}
    let (mut h2, mut h1): (u128, u128) = (0, 1);
    let (mut k2, mut k1): (u128, u128) = (1, 0);
    let (mut num, mut den) = (s as u128, denom as u128);
    loop {
        let q = num / den;
        let h = q * h1 + h2;
        let k = q * k1 + k2;
        let c = Convergent { numerator: h as u64, denominator: k as u64 };
        match out.last_mut() {
            Some(last) if last.denominator == c.denominator => *last = c,
            _ => out.push(c),
        }
        (h2, h1) = (h1, h);
        (k2, k1) = (k1, k);
        let rem = num - q * den;
        if rem == 0 {
            break;
        }
        (num, den) = (den, rem);
    }
    out
}

/// Classical post-processing: given a candidate order, try to split `n`.
///
/// Succeeds when `r_candidate` is even, `a^r_candidate = 1`, and
/// `a^(r_candidate/2) != -1 (mod n)`; returns the factor pair sorted.
pub fn recover_factors(n: u64, a: u64, r_candidate: u64) -> Option<(u64, u64)> {
    if n < 3 || a <= 1 || a >= n || r_candidate == 0 || r_candidate % 2 != 0 {
        return None;
    }
    if mod_pow(a, r_candidate, n).ok()? != 1 {
        return None;
    }
    let half = mod_pow(a, r_candidate / 2, n).ok()?;
    if half == n - 1 {
        return None;
    }
    let g1 = gcd((half + n - 1) % n, n);
    let g2 = gcd(half + 1, n);
    let nontrivial = |g: u64| g > 1 && g < n;
    if nontrivial(g1) && nontrivial(g2) {
        Some((g1.min(g2), g1.max(g2)))
    } else {
        None
    }
}

/// Result of drawing a random base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoprimeDraw {
    pub a: u64,
    /// Nontrivial factors of `n` found by candidates that were not coprime.
    pub lucky_factors: Vec<u64>,
}

/// Uniform draw of `a` in `{2, ..., n - 1}` coprime to `n`, by rejection.
/// Rejected candidates that share a factor with `n` are reported in
/// [`CoprimeDraw::lucky_factors`].
pub fn random_coprime<R: Rng + ?Sized>(n: u64, rng: &mut R) -> CoprimeDraw {
    assert!(n >= 4, "random_coprime needs a composite modulus");
    let mut lucky = Vec::new();
    loop {
        let a = rng.random_range(2..n);
        let g = gcd(a, n);
        if g == 1 {
            return CoprimeDraw { a, lucky_factors: lucky };
        }
        if g < n && !lucky.contains(&g) {
            lucky.push(g);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mod_pow_examples() {
        assert_eq!(mod_pow(2, 0, 21), Ok(1));
        assert_eq!(mod_pow(2, 10, 21), Ok(16));
        assert_eq!(mod_pow(5, 3, 21), Ok(20));
        assert!(matches!(mod_pow(2, 3, 1), Err(NumError::InvalidArgument(_))));
        // 128-bit intermediates
        let m = (1u64 << 61) - 1;
        assert_eq!(mod_pow(m - 1, 2, m), Ok(1));
    }

    #[test]
    fn order_examples() {
        assert_eq!(multiplicative_order(2, 21), Ok(6));
        assert_eq!(multiplicative_order(2, 1943), Ok(924));
        assert_eq!(multiplicative_order(10, 8189), Ok(3870));
        assert_eq!(multiplicative_order(5, 961307), Ok(479568));
        assert_eq!(multiplicative_order_semiprime(5, 619, 1553), Ok(479568));
        assert!(matches!(multiplicative_order(3, 21), Err(NumError::InvalidArgument(_))));
        assert!(matches!(
            multiplicative_order_capped(5, 961307, 1000),
            Err(NumError::IterationCapExceeded { .. })
        ));
    }

    #[test]
    fn two_adic_examples() {
        assert_eq!(two_adic_split(924), (2, 231));
        assert_eq!(two_adic_split(3870), (1, 1935));
        assert_eq!(two_adic_split(1), (0, 1));
    }

    #[test]
    fn carmichael_and_alpha() {
        assert_eq!(carmichael_semiprime(3, 7), Ok(6));
        assert_eq!(carmichael_semiprime(29, 67), Ok(924));
        assert_eq!(carmichael_semiprime(3, 5), Ok(4));
        assert!(carmichael_semiprime(7, 7).is_err());
        let s = |p, q| alpha_statistics(p, q).map(|s| (s.dp, s.dq, s.alpha_max));
        assert_eq!(s(29, 67), Ok((2, 1, 2)));
        assert_eq!(s(3, 7), Ok((1, 1, 1)));
        assert_eq!(s(5, 13), Ok((2, 2, 2)));
        assert!(s(5, 5).is_err());
    }

    #[test]
    fn convergent_examples() {
        let c = continued_fraction_convergents(171, 1024);
        assert!(c.iter().any(|c| (c.numerator, c.denominator) == (1, 6)));
        let pairs = |s, d| {
            continued_fraction_convergents(s, d)
                .into_iter()
                .map(|c| (c.numerator, c.denominator))
                .collect::<Vec<_>>()
        };
        assert_eq!(pairs(0, 1024), vec![(0, 1)]);
        assert_eq!(pairs(512, 1024), vec![(0, 1), (1, 2)]);
        assert_eq!(pairs(1023, 1024), vec![(1, 1), (1023, 1024)]);
    }

    #[test]
    fn recover_examples() {
        assert_eq!(recover_factors(21, 2, 6), Some((3, 7)));
        assert_eq!(recover_factors(21, 5, 6), None);
        assert_eq!(recover_factors(21, 2, 3), None);
        // a^(r/2) = 1 gives only the trivial split
        assert_eq!(recover_factors(21, 4, 6), None);
    }

    #[test]
    fn primality_and_powers() {
        assert!(is_prime(2) && is_prime(8191) && is_prime(1553));
        assert!(!is_prime(1) && !is_prime(961307) && !is_prime(3_215_031_751));
        assert!(is_prime(18_446_744_073_709_551_557));
        assert_eq!(prime_power(49), Some((7, 2)));
        assert_eq!(prime_power(3u64.pow(13)), Some((3, 13)));
        assert_eq!(prime_power(21), None);
        assert!(validate_shor_modulus(21).is_ok());
        assert!(validate_shor_modulus(49).is_err());
        assert!(validate_shor_modulus(23).is_err());
        assert!(validate_shor_modulus(22).is_err());
    }

    #[test]
    fn instance_fields() {
        let inst = SemiprimeInstance::new(21, 2).unwrap();
        assert_eq!(inst.l, 5);
        assert_eq!(inst.upper_qubits(), 10);
        assert_eq!(inst.gate_multiplier(9), 4);
        assert!(SemiprimeInstance::new(21, 7).is_err());
        assert!(SemiprimeInstance::with_factors(21, 2, 3, 5).is_err());
        assert_eq!(SemiprimeInstance::with_factors(21, 2, 7, 3).unwrap().factors, Some((3, 7)));
    }
}
