//! Truncated q-expansions: exact integer and floating point series, eta
//! quotients, unary theta series, the `V` and weight 2 Hecke operators and
//! the basis of `S_2(Γ0(64))`.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{primes_up_to, DirichletCharacter};
use crate::error::{Error, Result};

/// Coefficient storage of a [`PowerSeries`].
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficients {
    Exact(Vec<BigInt>),
    Float(Vec<f64>),
}

/// `Σ_{n ≤ N} a(n) q^n + O(q^{N+1})`.
///
/// The precision `N` is inclusive: coefficients `0..=N` are known. Binary
/// operations truncate to the smaller precision; mixing an exact and a float
/// series gives a float series.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries {
    coeffs: Coefficients,
}

impl PowerSeries {
    pub fn from_integers(coeffs: Vec<BigInt>) -> Self {
        assert!(!coeffs.is_empty(), "a power series needs at least the constant coefficient");
        Self { coeffs: Coefficients::Exact(coeffs) }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::from_integers(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn from_floats(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a power series needs at least the constant coefficient");
        Self { coeffs: Coefficients::Float(coeffs) }
    }

    pub fn zero(precision: usize) -> Self {
        Self::from_integers(vec![BigInt::zero(); precision + 1])
    }

    pub fn one(precision: usize) -> Self {
        let mut c = vec![BigInt::zero(); precision + 1];
        c[0] = BigInt::one();
        Self::from_integers(c)
    }

    /// `q^k + O(q^{N+1})`.
    pub fn monomial(k: usize, precision: usize) -> Self {
        let mut c = vec![BigInt::zero(); precision + 1];
        if k <= precision {
            c[k] = BigInt::one();
        }
        Self::from_integers(c)
    }

    pub fn precision(&self) -> usize {
        self.len() - 1
    }

    fn len(&self) -> usize {
        match &self.coeffs {
            Coefficients::Exact(c) => c.len(),
            Coefficients::Float(c) => c.len(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.coeffs, Coefficients::Exact(_))
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    /// Exact coefficients, if the series is exact.
    pub fn integers(&self) -> Option<&[BigInt]> {
        match &self.coeffs {
            Coefficients::Exact(c) => Some(c),
            Coefficients::Float(_) => None,
        }
    }

    /// Coefficient of `q^n`; an error beyond the precision.
    pub fn coefficient(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        Ok(match &self.coeffs {
            Coefficients::Exact(c) => c[n].to_f64().unwrap_or(f64::NAN),
            Coefficients::Float(c) => c[n],
        })
    }

    pub fn exact_coefficient(&self, n: usize) -> Result<BigInt> {
        self.check(n)?;
        match &self.coeffs {
            Coefficients::Exact(c) => Ok(c[n].clone()),
            Coefficients::Float(_) => Err(Error::Domain("series has float coefficients".into())),
        }
    }

    /// Exact coefficient as `i64`, for series with small coefficients.
    pub fn int_coefficient(&self, n: usize) -> Result<i64> {
        self.exact_coefficient(n)?.to_i64().ok_or_else(|| Error::Overflow(format!("coefficient of q^{n} exceeds i64")))
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.precision() {
            return Err(Error::Precision { needed: n, available: self.precision() });
        }
        Ok(())
    }

    pub fn to_float(&self) -> Self {
        match &self.coeffs {
            Coefficients::Exact(c) => Self::from_floats(c.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()),
            Coefficients::Float(_) => self.clone(),
        }
    }

    fn floats(&self) -> Vec<f64> {
        match self.to_float().coeffs {
            Coefficients::Float(c) => c,
            Coefficients::Exact(_) => unreachable!(),
        }
    }

    pub fn truncate(&self, precision: usize) -> Self {
        let n = precision.min(self.precision()) + 1;
        match &self.coeffs {
            Coefficients::Exact(c) => Self::from_integers(c[..n].to_vec()),
            Coefficients::Float(c) => Self::from_floats(c[..n].to_vec()),
        }
    }

    /// Order of vanishing at `q = 0`, `None` for the zero series.
    pub fn valuation(&self) -> Option<usize> {
        match &self.coeffs {
            Coefficients::Exact(c) => c.iter().position(|x| !x.is_zero()),
            Coefficients::Float(c) => c.iter().position(|&x| x != 0.0),
        }
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        match &self.coeffs {
            Coefficients::Exact(c) => Self::from_integers(c.iter().map(|x| x * k).collect()),
            Coefficients::Float(c) => {
                let k = k.to_f64().unwrap_or(f64::NAN);
                Self::from_floats(c.iter().map(|x| x * k).collect())
            }
        }
    }

    pub fn scale_float(&self, k: f64) -> Self {
        Self::from_floats(self.floats().into_iter().map(|x| x * k).collect())
    }

    /// Multiplication by `q^k`; the precision grows by `k`.
    pub fn shift(&self, k: usize) -> Self {
        match &self.coeffs {
            Coefficients::Exact(c) => {
                let mut out = vec![BigInt::zero(); k];
                out.extend(c.iter().cloned());
                Self::from_integers(out)
            }
            Coefficients::Float(c) => {
                let mut out = vec![0.0; k];
                out.extend(c.iter().copied());
                Self::from_floats(out)
            }
        }
    }

    /// `f(q^t)`; coefficient `a(n)` moves to index `tn` and the precision
    /// becomes `tN`.
    pub fn rescale(&self, t: usize) -> Self {
        assert!(t >= 1, "rescaling factor must be positive");
        let n = self.precision() * t + 1;
        match &self.coeffs {
            Coefficients::Exact(c) => {
                let mut out = vec![BigInt::zero(); n];
                for (i, x) in c.iter().enumerate() {
                    out[i * t] = x.clone();
                }
                Self::from_integers(out)
            }
            Coefficients::Float(c) => {
                let mut out = vec![0.0; n];
                for (i, &x) in c.iter().enumerate() {
                    out[i * t] = x;
                }
                Self::from_floats(out)
            }
        }
    }

    /// Multiplicative inverse; the constant coefficient must be ±1 for exact
    /// series and nonzero for float series.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.len();
        match &self.coeffs {
            Coefficients::Exact(c) => {
                let a0 = &c[0];
                if !(a0.is_one() || (-a0).is_one()) {
                    return Err(Error::Domain("exact inverse needs constant coefficient ±1".into()));
                }
                let mut inv = vec![BigInt::zero(); n];
                inv[0] = a0.clone();
                let support: Vec<usize> = (1..n).filter(|&k| !c[k].is_zero()).collect();
                for i in 1..n {
                    let mut s = BigInt::zero();
                    for &k in support.iter().take_while(|&&k| k <= i) {
                        s += &c[k] * &inv[i - k];
                    }
                    inv[i] = -(s * a0);
                }
                Ok(Self::from_integers(inv))
            }
            Coefficients::Float(c) => {
                if c[0] == 0.0 {
                    return Err(Error::Domain("series with zero constant term is not invertible".into()));
                }
                let mut inv = vec![0.0; n];
                inv[0] = 1.0 / c[0];
                for i in 1..n {
                    let s: f64 = (1..=i).map(|k| c[k] * inv[i - k]).sum();
                    inv[i] = -s / c[0];
                }
                Ok(Self::from_floats(inv))
            }
        }
    }

    /// Integer power by repeated squaring; negative exponents go through
    /// [`PowerSeries::inverse`].
    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = match &self.coeffs {
            Coefficients::Exact(_) => Self::one(self.precision()),
            Coefficients::Float(_) => Self::one(self.precision()).to_float(),
        };
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }

    /// Writes `n,coefficient` lines with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,coefficient")?;
        match &self.coeffs {
            Coefficients::Exact(c) => {
                for (i, x) in c.iter().enumerate() {
                    writeln!(w, "{i},{x}")?;
                }
            }
            Coefficients::Float(c) => {
                for (i, x) in c.iter().enumerate() {
                    writeln!(w, "{i},{x:?}")?;
                }
            }
        }
        Ok(())
    }

    /// Reads the format of [`PowerSeries::write_csv`]. Indices must be
    /// `0, 1, 2, ...` in order. The series is exact when every coefficient
    /// parses as an integer.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut raw = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('n')) {
                continue;
            }
            let (idx, val) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: expected n,coefficient", lineno + 1)))?;
            let idx: usize =
                idx.trim().parse().map_err(|e| Error::Parse(format!("line {}: bad index: {e}", lineno + 1)))?;
            if idx != raw.len() {
                return Err(Error::Parse(format!("line {}: expected index {}, found {idx}", lineno + 1, raw.len())));
            }
            raw.push(val.trim().to_string());
        }
        if raw.is_empty() {
            return Err(Error::Parse("empty series".into()));
        }
        let ints: std::result::Result<Vec<BigInt>, _> = raw.iter().map(|s| BigInt::from_str(s)).collect();
        if let Ok(ints) = ints {
            return Ok(Self::from_integers(ints));
        }
        let floats = raw
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse(format!("bad coefficient: {e}")))?;
        Ok(Self::from_floats(floats))
    }
}

fn mul_exact(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let n = a.len().min(b.len());
    let mut out = vec![BigInt::zero(); n];
    let bs: Vec<usize> = (0..n).filter(|&j| !b[j].is_zero()).collect();
    for (i, x) in a.iter().enumerate().take(n) {
        if x.is_zero() {
            continue;
        }
        for &j in &bs {
            if i + j >= n {
                break;
            }
            out[i + j] += x * &b[j];
        }
    }
    out
}

fn mul_float(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    let mut out = vec![0.0; n];
    for i in 0..n {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..n - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

impl Mul for &PowerSeries {
    type Output = PowerSeries;
    fn mul(self, rhs: &PowerSeries) -> PowerSeries {
        match (&self.coeffs, &rhs.coeffs) {
            (Coefficients::Exact(a), Coefficients::Exact(b)) => PowerSeries::from_integers(mul_exact(a, b)),
            _ => PowerSeries::from_floats(mul_float(&self.floats(), &rhs.floats())),
        }
    }
}

impl Add for &PowerSeries {
    type Output = PowerSeries;
    fn add(self, rhs: &PowerSeries) -> PowerSeries {
        let n = self.len().min(rhs.len());
        match (&self.coeffs, &rhs.coeffs) {
            (Coefficients::Exact(a), Coefficients::Exact(b)) => {
                PowerSeries::from_integers((0..n).map(|i| &a[i] + &b[i]).collect())
            }
            _ => {
                let (a, b) = (self.floats(), rhs.floats());
                PowerSeries::from_floats((0..n).map(|i| a[i] + b[i]).collect())
            }
        }
    }
}

impl Neg for &PowerSeries {
    type Output = PowerSeries;
    fn neg(self) -> PowerSeries {
        match &self.coeffs {
            Coefficients::Exact(c) => PowerSeries::from_integers(c.iter().map(|x| -x).collect()),
            Coefficients::Float(c) => PowerSeries::from_floats(c.iter().map(|x| -x).collect()),
        }
    }
}

impl Sub for &PowerSeries {
    type Output = PowerSeries;
    fn sub(self, rhs: &PowerSeries) -> PowerSeries {
        self + &(-rhs)
    }
}

impl fmt::Display for PowerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut term = |f: &mut fmt::Formatter<'_>, neg: bool, mag: String, n: usize| {
            let sign = match (first, neg) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            first = false;
            let mon = match n {
                0 => String::new(),
                1 => "q".to_string(),
                _ => format!("q^{n}"),
            };
            if n > 0 && mag == "1" {
                write!(f, "{sign}{mon}")
            } else {
                write!(f, "{sign}{mag}{mon}")
            }
        };
        match &self.coeffs {
            Coefficients::Exact(c) => {
                for (n, x) in c.iter().enumerate() {
                    if !x.is_zero() {
                        term(f, x.is_negative(), x.abs().to_string(), n)?;
                    }
                }
            }
            Coefficients::Float(c) => {
                for (n, &x) in c.iter().enumerate() {
                    if x != 0.0 {
                        term(f, x < 0.0, x.abs().to_string(), n)?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(q^{})", self.precision() + 1)
    }
}

/// `∏_{n≥1} (1 - q^n)` through `q^N`, from Euler's pentagonal number theorem.
pub fn euler_product_series(n: usize) -> PowerSeries {
    let mut c = vec![BigInt::zero(); n + 1];
    c[0] = BigInt::one();
    let mut k: usize = 1;
    loop {
        let sign = if k % 2 == 1 { -1 } else { 1 };
        let g1 = k * (3 * k - 1) / 2;
        let g2 = k * (3 * k + 1) / 2;
        if g1 > n {
            break;
        }
        c[g1] = BigInt::from(sign);
        if g2 <= n {
            c[g2] = BigInt::from(sign);
        }
        k += 1;
    }
    PowerSeries::from_integers(c)
}

/// `∏ η(t z)^{r}` as a list of `(t, r)` pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaQuotientSpec {
    factors: Vec<(u32, i32)>,
}

impl EtaQuotientSpec {
    pub fn new(factors: Vec<(u32, i32)>) -> Result<Self> {
        if factors.iter().any(|&(t, _)| t == 0) {
            return Err(Error::Domain("eta scale factors must be positive".into()));
        }
        let weight: i64 = factors.iter().map(|&(t, r)| t as i64 * r as i64).sum();
        if weight.rem_euclid(24) != 0 {
            return Err(Error::Domain(format!(
                "sum of t*r is {weight}, not divisible by 24; the leading q-power is fractional"
            )));
        }
        if weight < 0 {
            return Err(Error::Domain(format!("sum of t*r is {weight}; the expansion has a pole at infinity")));
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[(u32, i32)] {
        &self.factors
    }

    /// Exponent of the leading `q` power, `Σ t r / 24`.
    pub fn order_at_infinity(&self) -> usize {
        (self.factors.iter().map(|&(t, r)| t as i64 * r as i64).sum::<i64>() / 24) as usize
    }

    /// Weight `Σ r / 2`, doubled so that it stays an integer.
    pub fn twice_weight(&self) -> i64 {
        self.factors.iter().map(|&(_, r)| r as i64).sum()
    }
}

/// Exact q-expansion of an eta quotient through `q^N`.
pub fn eta_quotient(spec: &EtaQuotientSpec, n: usize) -> Result<PowerSeries> {
    let shift = spec.order_at_infinity();
    if shift > n {
        return Ok(PowerSeries::zero(n));
    }
    let m = n - shift;
    let mut acc = PowerSeries::one(m);
    for &(t, r) in spec.factors() {
        let t = t as usize;
        let base = euler_product_series(m / t).pow(r as i64)?;
        let scaled = base.rescale(t);
        // rescaling overshoots to t*(m/t) ≤ m; pad up to m
        let padded = pad_exact(&scaled, m);
        acc = &acc * &padded;
    }
    Ok(acc.shift(shift))
}

fn pad_exact(f: &PowerSeries, precision: usize) -> PowerSeries {
    let mut c = f.integers().expect("exact series").to_vec();
    c.resize(precision + 1, BigInt::zero());
    PowerSeries::from_integers(c)
}

/// `θ_χ = Σ_{n∈ℤ} χ(n) n^ν q^{n²}` through `q^N`, with `ν` the parity of
/// `χ`.
pub fn theta_series(chi: &DirichletCharacter, n: usize) -> PowerSeries {
    let nu = chi.parity();
    let mut c = vec![BigInt::zero(); n + 1];
    if nu == 0 {
        c[0] = BigInt::from(chi.eval(0));
    }
    let mut m: usize = 1;
    while m * m <= n {
        let v = chi.eval(m as i64) as i64;
        let w = if nu == 1 { v * m as i64 } else { v };
        c[m * m] = BigInt::from(2 * w);
        m += 1;
    }
    PowerSeries::from_integers(c)
}

/// `f | V(t)`.
pub fn v_operator(f: &PowerSeries, t: usize) -> PowerSeries {
    f.rescale(t)
}

fn is_small_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// `T_p f = Σ (c(np) + p^{k-1} c(n/p)) q^n` through `q^N`, for weight 2 and
/// trivial character.
pub fn hecke_t_p(f: &PowerSeries, p: u64, weight: u32, n: usize) -> Result<PowerSeries> {
    if weight != 2 {
        return Err(Error::Domain(format!("Hecke operators are implemented for weight 2 only, got {weight}")));
    }
    if p.is_multiple_of(2) || !is_small_prime(p) {
        return Err(Error::Domain(format!("T_p needs an odd prime, got {p}")));
    }
    let p = p as usize;
    let needed = n * p;
    if f.precision() < needed {
        return Err(Error::Precision { needed, available: f.precision() });
    }
    Ok(match f.coefficients() {
        Coefficients::Exact(c) => {
            let out = (0..=n)
                .map(|i| {
                    let mut v = c[i * p].clone();
                    if i % p == 0 {
                        v += &c[i / p] * p;
                    }
                    v
                })
                .collect();
            PowerSeries::from_integers(out)
        }
        Coefficients::Float(c) => {
            let out = (0..=n)
                .map(|i| {
                    let mut v = c[i * p];
                    if i % p == 0 {
                        v += c[i / p] * p as f64;
                    }
                    v
                })
                .collect();
            PowerSeries::from_floats(out)
        }
    })
}

/// `η(8z)^8 / (η(4z)^2 η(16z)^2)`.
pub fn f1_spec() -> EtaQuotientSpec {
    EtaQuotientSpec::new(vec![(8, 8), (4, -2), (16, -2)]).expect("valid spec")
}

/// `η(4z)^2 η(8z)^2`.
pub fn f2_spec() -> EtaQuotientSpec {
    EtaQuotientSpec::new(vec![(4, 2), (8, 2)]).expect("valid spec")
}

/// The basis `f1, f2, f3 = f2 | V(2)` of `S_2(Γ0(64))` through `q^N`.
pub fn basis_s2_64(n: usize) -> Result<[PowerSeries; 3]> {
    if n < 5 {
        return Err(Error::Domain(format!("basis needs precision at least 5, got {n}")));
    }
    let f1 = eta_quotient(&f1_spec(), n)?;
    let f2 = eta_quotient(&f2_spec(), n)?;
    let f3 = v_operator(&eta_quotient(&f2_spec(), n / 2)?, 2);
    let f3 = pad_exact(&f3, n);
    Ok([f1, f2, f3])
}

/// Odd primes up to `n`.
pub fn odd_primes_up_to(n: usize) -> Vec<u64> {
    primes_up_to(n).into_iter().filter(|&p| p != 2).map(u64::from).collect()
}
