//! Integer primitives: Kronecker symbols, factorization, discriminant helpers
//! and real-valued Dirichlet characters.

use std::fmt;
use std::sync::OnceLock;

use num_integer::Integer;
use num_prime::nt_funcs::{factors, is_prime};

use crate::error::{Error, Result};

/// Exact rational carrier for class-number values.
///
/// `num_rational` keeps the value reduced with a positive denominator.
pub type Rational = num_rational::Ratio<i128>;

/// Trial division bound used before handing a cofactor to Pollard rho / SQUFOF.
const TRIAL_BOUND: u64 = 1_000_000;

/// Kronecker symbol `(a/n)` with the full extension to `n <= 0` and even `n`.
pub fn kronecker(a: i64, n: i64) -> i32 {
    kronecker_i128(a as i128, n as i128)
}

pub(crate) fn kronecker_i128(a: i128, n: i128) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut result = 1i32;
    let mut n = n;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    // factor out powers of two from n
    let twos = n.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        let a8 = a.rem_euclid(8);
        if twos % 2 == 1 && (a8 == 3 || a8 == 5) {
            result = -result;
        }
        n >>= twos;
    }
    // n is now odd and positive: Jacobi symbol
    let mut a = a.rem_euclid(n);
    while a != 0 {
        let tz = a.trailing_zeros();
        if tz > 0 {
            a >>= tz;
            let n8 = n % 8;
            if tz % 2 == 1 && (n8 == 3 || n8 == 5) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Prime-exponent pairs of a positive integer, sorted by prime.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Factorization {
    factors: Vec<(u128, u32)>,
}

impl Factorization {
    pub fn factors(&self) -> &[(u128, u32)] {
        &self.factors
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Recomposes the factored integer.
    pub fn value(&self) -> u128 {
        self.factors.iter().fold(1u128, |acc, &(p, e)| acc * p.pow(e))
    }

    /// All positive divisors, ascending.
    pub fn divisors(&self) -> Vec<u128> {
        let mut divs = vec![1u128];
        for &(p, e) in &self.factors {
            let len = divs.len();
            let mut pk = 1u128;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }

    /// Möbius function of the factored integer.
    pub fn mobius(&self) -> i32 {
        if self.factors.iter().any(|&(_, e)| e > 1) {
            0
        } else if self.factors.len().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// Sum of divisors.
    pub fn sigma1(&self) -> u128 {
        self.factors.iter().fold(1u128, |acc, &(p, e)| acc * ((p.pow(e + 1) - 1) / (p - 1)))
    }

    /// Euler's totient.
    pub fn totient(&self) -> u128 {
        self.factors.iter().fold(1u128, |acc, &(p, e)| acc * (p - 1) * p.pow(e - 1))
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> =
            self.factors.iter().map(|&(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") }).collect();
        write!(f, "{}", parts.join(" * "))
    }
}

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(TRIAL_BOUND as usize))
}

/// Sieve of Eratosthenes.
pub fn primes_up_to(n: usize) -> Vec<u32> {
    if n < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u32);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Smallest-prime-factor table on `0..=n` (entries 0 and 1 are 0).
pub fn smallest_prime_factors(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

/// Exact factorization of `n >= 1`.
///
/// Trial division by primes below 10^6, then Pollard-style splitting of the
/// cofactor with every returned prime re-verified.
pub fn factorize(n: u128) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::Domain("factorize requires n >= 1".into()));
    }
    let mut out: Vec<(u128, u32)> = Vec::new();
    let rest = if let Ok(small) = u64::try_from(n) {
        // 64-bit division is several times cheaper than 128-bit
        let mut rest = small;
        for &p in small_primes() {
            let p = p as u64;
            if p * p > rest {
                break;
            }
            if rest % p == 0 {
                let mut e = 0;
                while rest % p == 0 {
                    rest /= p;
                    e += 1;
                }
                out.push((p as u128, e));
            }
        }
        rest as u128
    } else {
        let mut rest = n;
        for &p in small_primes() {
            let p = p as u128;
            if p * p > rest {
                break;
            }
            if rest.is_multiple_of(p) {
                let mut e = 0;
                while rest.is_multiple_of(p) {
                    rest /= p;
                    e += 1;
                }
                out.push((p, e));
            }
        }
        rest
    };
    if rest > 1 {
        let bound = TRIAL_BOUND as u128;
        if rest < bound * bound || is_prime(&rest, None).probably() {
            verify_prime(rest)?;
            out.push((rest, 1));
        } else {
            let (map, unfactored) = factors(rest, None);
            if let Some(left) = unfactored {
                return Err(Error::Overflow(format!("could not split cofactor(s) {left:?} of {n}")));
            }
            for (p, e) in map {
                verify_prime(p)?;
                out.push((p, e as u32));
            }
        }
    }
    out.sort_unstable();
    Ok(Factorization { factors: out })
}

fn verify_prime(p: u128) -> Result<()> {
    if is_prime(&p, None).probably() {
        Ok(())
    } else {
        Err(Error::Domain(format!("factor {p} failed primality verification")))
    }
}

/// True iff `d != 0` and `d ≡ 0, 1 (mod 4)`.
pub fn is_discriminant(d: i64) -> bool {
    d != 0 && matches!(d.rem_euclid(4), 0 | 1)
}

/// Floor of the square root.
pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    // Newton iteration from an upper bound
    let mut x = 1u128 << ((128 - n.leading_zeros()).div_ceil(2));
    loop {
        let y = (x + n / x) >> 1;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// Exact square root when `h` is a perfect square.
pub fn sqrt_if_square(h: u128) -> Option<u128> {
    let r = isqrt(h);
    (r * r == h).then_some(r)
}

/// Writes a discriminant as `D0 * f^2` with `D0` fundamental.
pub fn fundamental_decomposition(d: i64) -> Result<(i64, u64)> {
    if !is_discriminant(d) {
        return Err(Error::Domain(format!("{d} is not a discriminant")));
    }
    let fac = factorize(d.unsigned_abs() as u128)?;
    let mut core: i64 = d.signum();
    let mut f: u64 = 1;
    for &(p, e) in fac.factors() {
        let p = p as i64;
        core *= p.pow(e % 2);
        f *= (p as u64).pow(e / 2);
    }
    // core is squarefree (up to sign); fix the 2-part
    if core.rem_euclid(4) != 1 {
        core *= 4;
        debug_assert!(f.is_multiple_of(2));
        f /= 2;
    }
    Ok((core, f))
}

/// True when `d` is a fundamental discriminant.
pub fn is_fundamental(d: i64) -> bool {
    match fundamental_decomposition(d) {
        Ok((_, f)) => f == 1,
        Err(_) => false,
    }
}

/// All `l >= 1` with `l^2 | d`, ascending.
pub fn square_divisors(d: u64) -> Vec<u64> {
    if d == 0 {
        return Vec::new();
    }
    let fac = factorize(d as u128).expect("u64 inputs always factor");
    let half =
        Factorization { factors: fac.factors().iter().filter(|&&(_, e)| e >= 2).map(|&(p, e)| (p, e / 2)).collect() };
    half.divisors().into_iter().map(|l| l as u64).collect()
}

/// Real-valued Dirichlet character stored as a full value table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirichletCharacter {
    modulus: u64,
    values: Vec<i8>,
}

impl DirichletCharacter {
    /// Builds a character from its values on `0..m`, validating that the
    /// table is supported exactly on units and completely multiplicative.
    pub fn from_table(modulus: u64, values: Vec<i8>) -> Result<Self> {
        if modulus == 0 || values.len() as u64 != modulus {
            return Err(Error::Domain(format!("character table needs exactly {modulus} values, got {}", values.len())));
        }
        for (r, &v) in values.iter().enumerate() {
            let unit = (r as u64).gcd(&modulus) == 1;
            if !matches!(v, -1..=1) {
                return Err(Error::Domain(format!("value {v} at residue {r} is not in {{-1,0,1}}")));
            }
            if unit == (v == 0) {
                return Err(Error::Domain(format!(
                    "value at residue {r} must be {} ",
                    if unit { "nonzero" } else { "zero" }
                )));
            }
        }
        if values[(1 % modulus) as usize] != 1 {
            return Err(Error::Domain("character must send 1 to 1".into()));
        }
        let m = modulus as usize;
        for a in 0..m {
            for b in a..m {
                if values[(a * b) % m] != values[a] * values[b] {
                    return Err(Error::Domain(format!("table is not multiplicative at residues {a}, {b}")));
                }
            }
        }
        Ok(Self { modulus, values })
    }

    /// The character `n -> kronecker(d, n)`, of modulus `|d|`.
    pub fn kronecker(d: i64) -> Result<Self> {
        if !is_discriminant(d) {
            return Err(Error::Domain(format!("kronecker character needs a discriminant, got {d}")));
        }
        let m = d.unsigned_abs();
        let values = (0..m).map(|r| kronecker(d, r as i64) as i8).collect();
        Self::from_table(m, values)
    }

    /// The trivial character modulo 1.
    pub fn trivial() -> Self {
        Self { modulus: 1, values: vec![1] }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn eval(&self, n: i64) -> i32 {
        self.values[n.rem_euclid(self.modulus as i64) as usize] as i32
    }

    /// `(1 - chi(-1)) / 2`.
    pub fn parity(&self) -> u32 {
        if self.eval(-1) == -1 {
            1
        } else {
            0
        }
    }

    pub fn is_odd(&self) -> bool {
        self.parity() == 1
    }
}

impl std::str::FromStr for DirichletCharacter {
    type Err = Error;

    /// `kronecker:D` or `table:m:v0,v1,...,v(m-1)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("character {s:?}: {what}"));
        let mut parts = s.splitn(3, ':');
        match (parts.next(), parts.next(), parts.next()) {
            (Some("kronecker"), Some(d), None) => {
                let d: i64 = d.trim().parse().map_err(|_| bad("discriminant is not an integer"))?;
                Self::kronecker(d)
            }
            (Some("table"), Some(m), Some(vals)) => {
                let m: u64 = m.trim().parse().map_err(|_| bad("modulus is not an integer"))?;
                let values = vals
                    .split(',')
                    .map(|v| v.trim().parse::<i8>().map_err(|_| bad("values must be -1, 0 or 1")))
                    .collect::<Result<Vec<_>>>()?;
                Self::from_table(m, values)
            }
            _ => Err(bad("expected kronecker:D or table:m:v0,...")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn legendre_brute(a: i64, p: i64) -> i32 {
        let a = a.rem_euclid(p);
        if a == 0 {
            return 0;
        }
        if (1..p).any(|x| (x * x) % p == a) {
            1
        } else {
            -1
        }
    }

    #[test]
    fn character_syntax() {
        let k: DirichletCharacter = "kronecker:-4".parse().unwrap();
        assert_eq!(k, DirichletCharacter::kronecker(-4).unwrap());
        let t: DirichletCharacter = "table:4:0,1,0,-1".parse().unwrap();
        assert_eq!(t, k);
        assert!(matches!("table:4:0,1,0".parse::<DirichletCharacter>(), Err(Error::Domain(_))));
        assert!(matches!("legendre:5".parse::<DirichletCharacter>(), Err(Error::Parse(_))));
        assert!(matches!("kronecker:x".parse::<DirichletCharacter>(), Err(Error::Parse(_))));
    }

    #[test]
    fn kronecker_examples() {
        for a in -20..20 {
            assert_eq!(kronecker(a, 1), 1);
        }
        assert_eq!(kronecker(-4, 3), -1);
        assert_eq!(kronecker(8, 5), -1);
        assert_eq!(legendre_brute(8, 5), -1);
    }

    #[test]
    fn kronecker_matches_legendre_for_odd_primes() {
        for &p in &[3i64, 5, 7, 11, 13, 97, 101] {
            for a in -60..60 {
                assert_eq!(kronecker(a, p), legendre_brute(a, p), "a={a} p={p}");
            }
        }
    }

    #[test]
    fn kronecker_completely_multiplicative() {
        for a in -200i64..=200 {
            for n in [-6i64, -3, -1, 2, 3, 4, 6, 10, 15, 16, 35, 199] {
                for n2 in [-1i64, 2, 3, 5, 8, 9, 12, 200] {
                    assert_eq!(kronecker(a, n * n2), kronecker(a, n) * kronecker(a, n2), "a={a} n={n} n2={n2}");
                }
            }
        }
        for n in -200i64..=200 {
            for a in [-7i64, -4, -3, -1, 2, 3, 5, 12] {
                for b in [-1i64, 2, 3, 6, 7, 11] {
                    assert_eq!(kronecker(a * b, n), kronecker(a, n) * kronecker(b, n));
                }
            }
        }
    }

    #[test]
    fn factorize_examples() {
        assert!(factorize(1).unwrap().is_empty());
        assert_eq!(factorize(112).unwrap().factors(), &[(2, 4), (7, 1)]);
        let n = 2_500_000_019u128 * 3;
        assert_eq!(factorize(n).unwrap().value(), n);
        assert!(factorize(0).is_err());
    }

    #[test]
    fn factorize_large_semiprime() {
        // two primes above the trial-division bound, product above 64 bits
        let p = 1_000_000_007u128;
        let q = (1u128 << 61) - 1;
        assert!(is_prime(&q, None).probably());
        let f = factorize(p * q).unwrap();
        assert_eq!(f.factors(), &[(p, 1), (q, 1)]);
    }

    #[test]
    fn factorization_timing_at_scale() {
        let start = std::time::Instant::now();
        let base = 2_500_000_000u128;
        for k in 0..1000 {
            let n = base + k;
            assert_eq!(factorize(n).unwrap().value(), n);
        }
        let per_call = start.elapsed().as_secs_f64() / 1000.0;
        // generous in debug builds
        assert!(per_call < 5e-3, "{per_call}");
    }

    #[test]
    fn discriminant_predicate() {
        assert!(is_discriminant(5));
        assert!(!is_discriminant(3));
        assert!(!is_discriminant(0));
        assert!(is_discriminant(-3));
        assert!(is_discriminant(-4));
        assert!(!is_discriminant(-5));
    }

    #[test]
    fn square_roots() {
        assert_eq!(sqrt_if_square(49), Some(7));
        assert_eq!(sqrt_if_square(50), None);
        assert_eq!(sqrt_if_square(1_000_000_000_000_000_000), Some(1_000_000_000));
        assert_eq!(sqrt_if_square(1_000_000_000_000_000_001), None);
        assert_eq!(sqrt_if_square(999_999_999_999_999_999), None);
        let big = (u64::MAX as u128) * (u64::MAX as u128);
        assert_eq!(sqrt_if_square(big), Some(u64::MAX as u128));
        assert_eq!(isqrt(big - 1), u64::MAX as u128 - 1);
    }

    #[test]
    fn fundamental_decompositions() {
        assert_eq!(fundamental_decomposition(-12).unwrap(), (-3, 2));
        assert_eq!(fundamental_decomposition(5).unwrap(), (5, 1));
        assert_eq!(fundamental_decomposition(-112).unwrap(), (-7, 4));
        assert_eq!(fundamental_decomposition(-4).unwrap(), (-4, 1));
        assert_eq!(fundamental_decomposition(-16).unwrap(), (-4, 2));
        assert_eq!(fundamental_decomposition(8).unwrap(), (8, 1));
        assert_eq!(fundamental_decomposition(4).unwrap(), (1, 2));
        assert!(fundamental_decomposition(3).is_err());
    }

    #[test]
    fn fundamental_decomposition_recomposes() {
        for d in -100_000i64..=100_000 {
            if !is_discriminant(d) {
                continue;
            }
            let (d0, f) = fundamental_decomposition(d).unwrap();
            assert_eq!(d0 * (f * f) as i64, d);
            // D0 fundamental: squarefree and 1 mod 4, or 4*squarefree with 2,3 mod 4
            let m = if d0.rem_euclid(4) == 1 { d0 } else { d0 / 4 };
            if d0.rem_euclid(4) == 0 {
                assert!(matches!(m.rem_euclid(4), 2 | 3), "d={d}");
            }
            let fac = factorize(m.unsigned_abs() as u128).unwrap();
            assert!(fac.factors().iter().all(|&(_, e)| e == 1), "d={d}");
        }
    }

    #[test]
    fn square_divisor_lists() {
        assert_eq!(square_divisors(4), vec![1, 2]);
        assert_eq!(square_divisors(5), vec![1]);
        assert_eq!(square_divisors(144), vec![1, 2, 3, 4, 6, 12]);
        for d in 1..=10_000u64 {
            let naive: Vec<u64> = (1..).take_while(|l| l * l <= d).filter(|l| d % (l * l) == 0).collect();
            assert_eq!(square_divisors(d), naive);
        }
    }

    #[test]
    fn kronecker_characters_are_valid_and_periodic() {
        for d in [-4i64, -3, -7, -8, 5, 8, 12, -20, 13, -23] {
            let chi = DirichletCharacter::kronecker(d).unwrap();
            let m = d.unsigned_abs() as i64;
            for n in 0..4 * m {
                assert_eq!(chi.eval(n), kronecker(d, n));
                assert_eq!(chi.eval(n), chi.eval(n + m));
            }
            assert_eq!(chi.parity(), if d < 0 { 1 } else { 0 });
        }
    }

    #[test]
    fn character_table_validation() {
        assert!(DirichletCharacter::from_table(4, vec![0, 1, 0, -1]).is_ok());
        assert!(DirichletCharacter::from_table(4, vec![0, 1, 1, -1]).is_err());
        assert!(DirichletCharacter::from_table(5, vec![0, 1, 1, -1, -1]).is_err());
        assert!(DirichletCharacter::from_table(5, vec![0, 1, -1, -1, 1]).is_ok());
        assert!(DirichletCharacter::from_table(3, vec![0, 1]).is_err());
        assert_eq!(DirichletCharacter::trivial().eval(17), 1);
    }

    #[test]
    fn multiplicative_helpers() {
        let f = factorize(360).unwrap();
        assert_eq!(f.sigma1(), 1170);
        assert_eq!(f.totient(), 96);
        assert_eq!(f.mobius(), 0);
        assert_eq!(factorize(30).unwrap().mobius(), -1);
        assert_eq!(f.divisors().len(), 24);
        assert_eq!(factorize(1).unwrap().sigma1(), 1);
    }
}
