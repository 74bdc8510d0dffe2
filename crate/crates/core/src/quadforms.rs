//! Class-number arithmetic of binary quadratic forms.
//!
//! Two independent Hurwitz class number backends are provided: direct
//! enumeration of reduced definite forms ([`hurwitz_direct`]) and the
//! analytic class number formula with a certified error bound
//! ([`hurwitz_fast`]). [`hurwitz`] switches between them at
//! [`HURWITZ_CROSSOVER`] and memoizes through the global [`HurwitzCache`].
//!
//! For positive discriminants the module computes fundamental units,
//! regulators, narrow class numbers via cycles of reduced indefinite forms,
//! and the regulator-weighted general Hurwitz function `h*`.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{OnceLock, RwLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::{
    factorize, fundamental_decomposition, is_discriminant, isqrt, kronecker_i128, smallest_prime_factors,
    sqrt_if_square, square_divisors, Rational,
};
use crate::error::{Error, Result};

/// Largest `n` accepted by [`hurwitz_direct`].
pub const HURWITZ_DIRECT_LIMIT: u64 = 100_000_000;

/// [`hurwitz`] uses direct enumeration below this value and the analytic
/// backend at and above it.
pub const HURWITZ_CROSSOVER: u64 = 1_000_000;

/// Environment variable naming the directory of the on-disk Hurwitz cache.
pub const CACHE_DIR_ENV: &str = "SESQUI_CACHE_DIR";

/// Binary quadratic form `a x^2 + b x y + c y^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bqf {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Bqf {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        Self { a, b, c }
    }

    pub fn discriminant(&self) -> i128 {
        let (a, b, c) = (self.a as i128, self.b as i128, self.c as i128);
        b * b - 4 * a * c
    }

    pub fn is_primitive(&self) -> bool {
        self.a.gcd(&self.b).gcd(&self.c) == 1
    }

    /// Reducedness for indefinite forms of non-square discriminant `d`:
    /// `0 < b < sqrt(d)` and `sqrt(d) - b < 2|a| < sqrt(d) + b`.
    pub fn is_reduced_indefinite(&self) -> bool {
        let d = self.discriminant();
        if d <= 0 {
            return false;
        }
        let (a, b) = (self.a.unsigned_abs() as i128, self.b as i128);
        // all comparisons with sqrt(d) done on squares
        b > 0 && b * b < d && (2 * a + b) * (2 * a + b) > d && (2 * a - b < 0 || (2 * a - b) * (2 * a - b) < d)
    }

    /// Right neighbour in the cycle of reduced forms: `(c, b', a')` with
    /// `b' ≡ -b (mod 2|c|)` the largest such value below `sqrt(d)`.
    pub fn rho(&self) -> Bqf {
        let d = self.discriminant();
        let s = isqrt(d as u128) as i128;
        let c2 = 2 * self.c.unsigned_abs() as i128;
        let minus_b = -(self.b as i128);
        let b_new = minus_b + c2 * Integer::div_floor(&(s - minus_b), &c2);
        let a_new = (b_new * b_new - d) / (4 * self.c as i128);
        Bqf::new(self.c, b_new as i64, a_new as i64)
    }
}

/// Weight `2/|Stab(Q)|` of a reduced positive definite form.
fn stabilizer_weight(q: &Bqf) -> Rational {
    if q.a == q.b && q.b == q.c {
        Rational::new(1, 3)
    } else if q.b == 0 && q.a == q.c {
        Rational::new(1, 2)
    } else {
        Rational::one()
    }
}

/// Reduced positive definite forms of discriminant `-n`
/// (`|b| <= a <= c`, `b >= 0` whenever `|b| = a` or `a = c`).
pub fn reduced_definite_forms(n: u64) -> Vec<Bqf> {
    let mut out = Vec::new();
    if n == 0 || !is_discriminant(-(n as i64)) {
        return out;
    }
    let n = n as i64;
    let mut a = 1i64;
    while 3 * a * a <= n {
        // b ≡ n (mod 2), -a < b <= a
        let mut b = -a + 1;
        if (b - n).rem_euclid(2) != 0 {
            b += 1;
        }
        while b <= a {
            let num = b * b + n;
            if num % (4 * a) == 0 {
                let c = num / (4 * a);
                if c >= a && !(c == a && b < 0) {
                    out.push(Bqf::new(a, b, c));
                }
            }
            b += 2;
        }
        a += 1;
    }
    out
}

/// Hurwitz class number by enumeration of reduced forms. `H(0) = -1/12`.
pub fn hurwitz_direct(n: u64) -> Result<Rational> {
    if n == 0 {
        return Ok(Rational::new(-1, 12));
    }
    if n > HURWITZ_DIRECT_LIMIT {
        return Err(Error::Domain(format!(
            "hurwitz_direct limited to n <= {HURWITZ_DIRECT_LIMIT}, got {n}; use hurwitz_fast"
        )));
    }
    Ok(reduced_definite_forms(n).iter().map(stabilizer_weight).fold(Rational::zero(), |acc, w| acc + w))
}

/// Number of roots of unity in the order of discriminant `d < 0`.
pub fn units_count(d: i64) -> u64 {
    match d {
        -3 => 6,
        -4 => 4,
        _ => 2,
    }
}

fn spf_table() -> &'static [u32] {
    static SPF: OnceLock<Vec<u32>> = OnceLock::new();
    SPF.get_or_init(|| smallest_prime_factors(1 << 21))
}

/// Values of the Kronecker character of `d` on `0..=len`.
fn character_values(d: i64, len: usize) -> Vec<i8> {
    let mut chi = vec![0i8; len + 1];
    if len >= 1 {
        chi[1] = 1;
    }
    let spf = spf_table();
    if len < spf.len() {
        for n in 2..=len {
            let p = spf[n] as usize;
            chi[n] = if p == n { kronecker_i128(d as i128, n as i128) as i8 } else { chi[p] * chi[n / p] };
        }
    } else {
        for (n, v) in chi.iter_mut().enumerate().skip(2) {
            *v = kronecker_i128(d as i128, n as i128) as i8;
        }
    }
    chi
}

/// Class number of a negative fundamental discriminant.
///
/// Evaluates `h(D) = (w/2) Σ χ_D(n) [erfc(n sqrt(π/|D|)) + sqrt(|D|)/(π n) e^{-π n²/|D|}]`,
/// truncated where the tail bound plus accumulated rounding error, scaled by
/// `w/2`, falls below 1/20; the result is accepted only when it lies within
/// 1/4 of an integer.
pub fn class_number_fundamental(d: i64) -> Result<u64> {
    if d >= 0 || fundamental_decomposition(d)?.1 != 1 {
        return Err(Error::Domain(format!("{d} is not a negative fundamental discriminant")));
    }
    let q = (-d) as f64;
    let w = units_count(d) as f64;
    let step = (PI / q).sqrt();
    let sqrt_q = q.sqrt();
    // choose K with (w/2) e^{-x^2} / (step sqrt(pi) x^2) < 1/40 at x = K*step
    let mut k = 1usize;
    loop {
        let x = k as f64 * step;
        if x > 1.0 && (w / 2.0) * (-x * x).exp() / (step * PI.sqrt() * x * x) < 0.025 {
            break;
        }
        k += 1 + k / 16;
    }
    let chi = character_values(d, k);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (n, &c) in chi.iter().enumerate().skip(1) {
        if c == 0 {
            continue;
        }
        let nf = n as f64;
        let x = nf * step;
        let term = libm::erfc(x) + sqrt_q / (PI * nf) * (-x * x).exp();
        let y = if c > 0 { term } else { -term } - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    let x = k as f64 * step;
    let tail = (-x * x).exp() / (step * PI.sqrt() * x * x);
    let rounding = (k as f64) * 4.0 * f64::EPSILON * (1.0 + sqrt_q / PI);
    let err = (w / 2.0) * (tail + rounding);
    let estimate = (w / 2.0) * sum;
    let rounded = estimate.round();
    if err >= 0.25 || (estimate - rounded).abs() > 0.25 || rounded < 1.0 {
        return Err(Error::Convergence(format!(
            "class number of {d}: estimate {estimate} (certified error {err:e}) is not within 1/4 of a positive integer"
        )));
    }
    Ok(rounded as u64)
}

/// Hurwitz class number from the class number of the fundamental
/// discriminant: writing `-n = D0 f^2`,
/// `H(n) = (2 h(D0) / w(D0)) Σ_{d | f} μ(d) χ_{D0}(d) σ1(f/d)`.
pub fn hurwitz_fast(n: u64) -> Result<Rational> {
    if n == 0 {
        return Ok(Rational::new(-1, 12));
    }
    let disc = -(n as i64);
    if !is_discriminant(disc) {
        return Ok(Rational::zero());
    }
    let (d0, f) = fundamental_decomposition(disc)?;
    let h0 = class_number_fundamental(d0)? as i128;
    let w0 = units_count(d0) as i128;
    let ff = factorize(f as u128)?;
    let mut sum: i128 = 0;
    for d in ff.divisors() {
        let fd = factorize(d)?;
        let mu = fd.mobius() as i128;
        if mu == 0 {
            continue;
        }
        let chi = kronecker_i128(d0 as i128, d as i128) as i128;
        let sigma = factorize(f as u128 / d)?.sigma1() as i128;
        sum += mu * chi * sigma;
    }
    Ok(Rational::new(2 * h0 * sum, w0))
}

/// Thread-safe memo of Hurwitz class numbers, optionally persisted as text
/// lines `n,num,den`.
#[derive(Debug, Default)]
pub struct HurwitzCache {
    values: RwLock<HashMap<u64, Rational>>,
    path: Option<PathBuf>,
    dirty: RwLock<Vec<u64>>,
}

impl HurwitzCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Cache backed by `<dir>/hurwitz.csv`; existing entries are loaded.
    pub fn with_dir(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join("hurwitz.csv");
        let mut map = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(fs::File::open(&path)?);
            for (lineno, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let (n, v) = parse_cache_line(&line).ok_or_else(|| {
                    Error::Parse(format!("{}:{}: bad cache line {line:?}", path.display(), lineno + 1))
                })?;
                map.insert(n, v);
            }
        }
        Ok(Self { values: RwLock::new(map), path: Some(path), dirty: RwLock::new(Vec::new()) })
    }

    /// Disk-backed when [`CACHE_DIR_ENV`] is set, in-memory otherwise.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) => Self::with_dir(Path::new(&dir)).unwrap_or_default(),
            None => Self::in_memory(),
        }
    }

    pub fn get(&self, n: u64) -> Option<Rational> {
        self.values.read().expect("cache lock").get(&n).copied()
    }

    pub fn insert(&self, n: u64, value: Rational) {
        let fresh = self.values.write().expect("cache lock").insert(n, value).is_none();
        if fresh && self.path.is_some() {
            self.dirty.write().expect("cache lock").push(n);
        }
    }

    pub fn len(&self) -> usize {
        self.values.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_compute(&self, n: u64) -> Result<Rational> {
        if let Some(v) = self.get(n) {
            return Ok(v);
        }
        let v = hurwitz_uncached(n)?;
        self.insert(n, v);
        Ok(v)
    }

    /// Appends entries inserted since the last flush to the backing file.
    pub fn flush(&self) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let mut dirty = self.dirty.write().expect("cache lock");
        if dirty.is_empty() {
            return Ok(());
        }
        dirty.sort_unstable();
        let values = self.values.read().expect("cache lock");
        let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
        for n in dirty.drain(..) {
            let v = values[&n];
            writeln!(file, "{},{},{}", n, v.numer(), v.denom())?;
        }
        Ok(())
    }
}

fn parse_cache_line(line: &str) -> Option<(u64, Rational)> {
    let mut it = line.trim().split(',');
    let n = it.next()?.parse().ok()?;
    let num: i128 = it.next()?.parse().ok()?;
    let den: i128 = it.next()?.parse().ok()?;
    if den <= 0 || it.next().is_some() {
        return None;
    }
    Some((n, Rational::new(num, den)))
}

fn hurwitz_uncached(n: u64) -> Result<Rational> {
    if n < HURWITZ_CROSSOVER {
        hurwitz_direct(n)
    } else {
        hurwitz_fast(n)
    }
}

/// Process-wide Hurwitz cache, configured from [`CACHE_DIR_ENV`].
pub fn global_cache() -> &'static HurwitzCache {
    static CACHE: OnceLock<HurwitzCache> = OnceLock::new();
    CACHE.get_or_init(HurwitzCache::from_env)
}

/// Hurwitz class number through the global cache.
pub fn hurwitz(n: u64) -> Result<Rational> {
    if n > 0 && !is_discriminant(-(n as i64)) {
        return Ok(Rational::zero());
    }
    global_cache().get_or_compute(n)
}

/// Batch evaluation, parallel across `ns`; output order follows input.
pub fn hurwitz_many(ns: &[u64]) -> Result<Vec<Rational>> {
    ns.par_iter().map(|&n| hurwitz(n)).collect()
}

/// Minimal positive solution of `t^2 - d u^2 = 4`, i.e. the fundamental
/// norm-one unit `(t + u sqrt(d))/2` of the order of discriminant `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PellSolution {
    pub t: BigUint,
    pub u: BigUint,
    pub d: u64,
}

impl PellSolution {
    /// Checks `t^2 - d u^2 = 4` exactly.
    pub fn satisfies_equation(&self) -> bool {
        let lhs = BigInt::from(self.t.clone() * &self.t);
        let rhs = BigInt::from(self.u.clone() * &self.u) * BigInt::from(self.d) + BigInt::from(4);
        lhs == rhs
    }

    /// log of the unit `(t + u sqrt(d)) / 2`.
    pub fn log_unit(&self) -> f64 {
        // ε + 1/ε = t, so log ε = log t + log((1 + sqrt(1 - 4/t^2)) / 2)
        let (log_t, t_f) = big_log(&self.t);
        let corr =
            if t_f.is_finite() && t_f < 1e150 { ((1.0 + (1.0 - 4.0 / (t_f * t_f)).sqrt()) / 2.0).ln() } else { 0.0 };
        log_t + corr
    }
}

/// Natural log of a big integer together with its f64 value (may be inf).
fn big_log(x: &BigUint) -> (f64, f64) {
    let bits = x.bits();
    if bits <= 1000 {
        let v = x.to_f64().unwrap_or(f64::INFINITY);
        if v.is_finite() {
            return (v.ln(), v);
        }
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit value");
    (top.ln() + shift as f64 * std::f64::consts::LN_2, f64::INFINITY)
}

/// Fundamental solution of `t^2 - d u^2 = 4` from the continued fraction of
/// `(b0 + sqrt(d))/2`, `b0 = d mod 2`; a norm `-1` unit is squared.
pub fn pell_fundamental(d: u64) -> Result<PellSolution> {
    if d == 0 || !is_discriminant(d as i64) || sqrt_if_square(d as u128).is_some() {
        return Err(Error::Domain(format!("{d} is not a positive non-square discriminant")));
    }
    let d_i = d as i128;
    let s = isqrt(d as u128) as i128;
    let b0 = (d % 2) as i128;
    let (mut p_q, mut q_q) = (b0, 2i128); // complete quotient (P + sqrt d)/Q
    let (mut p1, mut p2) = (BigInt::one(), BigInt::zero());
    let (mut q1, mut q2) = (BigInt::zero(), BigInt::one());
    let big_d = BigInt::from(d);
    let b0_big = BigInt::from(b0 as i64);
    for _ in 0..(64 * (s as usize + 10)) {
        let a =
            if q_q > 0 { Integer::div_floor(&(p_q + s), &q_q) } else { -(Integer::div_floor(&(p_q + s), &(-q_q)) + 1) };
        let p_new = BigInt::from(a) * &p1 + &p2;
        let q_new = BigInt::from(a) * &q1 + &q2;
        p2 = std::mem::replace(&mut p1, p_new);
        q2 = std::mem::replace(&mut q1, q_new);
        let t = BigInt::from(2) * &p1 - &b0_big * &q1;
        let norm = &t * &t - &big_d * &q1 * &q1;
        if t.is_positive() && q1.is_positive() && (norm == BigInt::from(4) || norm == BigInt::from(-4)) {
            let (t, u) = if norm.sign() == Sign::Minus {
                // ((t + u√d)/2)^2 = ((t² + d u²)/2 + t u √d)/2
                let t2 = (&t * &t + &big_d * &q1 * &q1) / 2;
                let u2 = &t * &q1;
                (t2, u2)
            } else {
                (t, q1.clone())
            };
            let sol = PellSolution { t: t.to_biguint().expect("positive"), u: u.to_biguint().expect("positive"), d };
            debug_assert!(sol.satisfies_equation());
            return Ok(sol);
        }
        let p_next = a * q_q - p_q;
        let q_next = (d_i - p_next * p_next) / q_q;
        p_q = p_next;
        q_q = q_next;
    }
    Err(Error::Convergence(format!("continued fraction for d = {d} did not reach a unit")))
}

/// Regulator: `2 log ε_d` for non-square `d`, `log d` for square `d`.
pub fn regulator(d: u64) -> Result<f64> {
    if d == 0 || !is_discriminant(d as i64) {
        return Err(Error::Domain(format!("{d} is not a positive discriminant")));
    }
    if sqrt_if_square(d as u128).is_some() {
        return Ok((d as f64).ln());
    }
    Ok(2.0 * pell_fundamental(d)?.log_unit())
}

/// Reduced primitive indefinite forms of a non-square discriminant `d > 0`.
pub fn reduced_indefinite_forms(d: u64) -> Vec<Bqf> {
    let mut out = Vec::new();
    let s = isqrt(d as u128) as i64;
    let d_i = d as i64;
    let mut b = if d.is_multiple_of(2) { 2 } else { 1 };
    while b <= s {
        let m = (d_i - b * b) / 4;
        if m > 0 {
            let mut g = 1;
            while g * g <= m {
                if m % g == 0 {
                    for aa in [g, m / g] {
                        for a in [aa, -aa] {
                            let q = Bqf::new(a, b, -m / a);
                            if q.is_reduced_indefinite() && q.is_primitive() {
                                out.push(q);
                            }
                        }
                    }
                }
                g += 1;
            }
        }
        b += 2;
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Cycles of reduced primitive forms under [`Bqf::rho`].
pub fn reduced_cycles(d: u64) -> Result<Vec<Vec<Bqf>>> {
    if !is_discriminant(d as i64) || sqrt_if_square(d as u128).is_some() {
        return Err(Error::Domain(format!("{d} is not a positive non-square discriminant")));
    }
    let forms = reduced_indefinite_forms(d);
    let mut seen: HashSet<Bqf> = HashSet::new();
    let mut cycles = Vec::new();
    for &start in &forms {
        if seen.contains(&start) {
            continue;
        }
        let mut cycle = vec![start];
        seen.insert(start);
        let mut q = start.rho();
        while q != start {
            if !seen.insert(q) || cycle.len() > forms.len() {
                return Err(Error::Convergence(format!("rho orbit of {start:?} is not a cycle")));
            }
            cycle.push(q);
            q = q.rho();
        }
        cycles.push(cycle);
    }
    Ok(cycles)
}

/// Number of SL2(Z)-classes of primitive forms of discriminant `d` whose
/// coefficients are bounded by `bound`, as components of the graph generated
/// by `S` and `T` inside that box.
pub fn bounded_orbit_count(d: u64, bound: i64) -> usize {
    let d_i = d as i64;
    let mut index: HashMap<Bqf, usize> = HashMap::new();
    let mut forms = Vec::new();
    for a in -bound..=bound {
        for b in -bound..=bound {
            if a == 0 {
                if b * b != d_i {
                    continue;
                }
                for c in -bound..=bound {
                    let q = Bqf::new(0, b, c);
                    if q.is_primitive() {
                        index.insert(q, forms.len());
                        forms.push(q);
                    }
                }
            } else {
                let num = b * b - d_i;
                if num % (4 * a) != 0 {
                    continue;
                }
                let c = num / (4 * a);
                let q = Bqf::new(a, b, c);
                if c.abs() <= bound && q.is_primitive() {
                    index.insert(q, forms.len());
                    forms.push(q);
                }
            }
        }
    }
    let mut parent: Vec<usize> = (0..forms.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (i, q) in forms.iter().enumerate() {
        let s = Bqf::new(q.c, -q.b, q.a);
        let t = Bqf::new(q.a, q.b + 2 * q.a, q.a + q.b + q.c);
        for img in [s, t] {
            if let Some(&j) = index.get(&img) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    (0..forms.len()).filter(|&i| find(&mut parent, i) == i).count()
}

/// Narrow class number `h+(d)` of a positive discriminant.
///
/// Non-square `d`: number of rho-cycles of reduced forms. Square `d`: bounded
/// orbit enumeration, accepted once the count is unchanged across two
/// doublings of the coefficient bound.
pub fn hplus(d: u64) -> Result<u64> {
    if d == 0 || !is_discriminant(d as i64) {
        return Err(Error::Domain(format!("{d} is not a positive discriminant")));
    }
    match sqrt_if_square(d as u128) {
        None => Ok(reduced_cycles(d)?.len() as u64),
        Some(f) => {
            let mut bound = (2 * f as i64).max(4);
            let mut history = vec![bounded_orbit_count(d, bound)];
            for _ in 0..6 {
                bound *= 2;
                history.push(bounded_orbit_count(d, bound));
                let k = history.len();
                if k >= 3 && history[k - 1] == history[k - 2] && history[k - 2] == history[k - 3] {
                    return Ok(history[k - 1] as u64);
                }
            }
            Err(Error::Convergence(format!("orbit count for square discriminant {d} did not stabilise: {history:?}")))
        }
    }
}

/// General Hurwitz function
/// `h*(d) = (1/2π) Σ_{l² | d, d/l² a discriminant} R(d/l²) h+(d/l²)`.
pub fn hstar(d: u64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("hstar requires d >= 1".into()));
    }
    let mut sum = 0.0;
    for l in square_divisors(d) {
        let e = d / (l * l);
        if is_discriminant(e as i64) {
            sum += regulator(e)? * hplus(e)? as f64;
        }
    }
    Ok(sum / (2.0 * PI))
}
