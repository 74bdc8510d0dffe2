//! Holomorphic projection of `F · g` for a weight 1/2 sesquiharmonic form `F`
//! and a weight 3/2 cusp form `g = Σ ℓ(m) q^{m²}`, and the specialization
//! `r_χ(h)` obtained from the class number form `Z` and `θ_χ`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{isqrt, sqrt_if_square, DirichletCharacter};
use crate::error::{Error, Result};
use crate::qseries::PowerSeries;
use crate::quadforms::{hstar, hurwitz};
use crate::special::EULER_GAMMA;

/// Default length of the harmonic tail.
pub const DEFAULT_TRUNCATION: u64 = 10_000;

pub const CSV_HEADER: &str = "h,constant,harmonic,holomorphic,sesquiharmonic,total,uncertainty";

const SQRT_PI: f64 = 1.772_453_850_905_516;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Acceleration {
    None,
    Pairing,
}

/// Which logarithm appears in the second bracket of the constant block at
/// `h = m²`: `log(4πh)` or `log(4π√h)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogVariant {
    LogH,
    LogSqrtH,
}

/// Range of `m` in the truncated harmonic tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailRange {
    /// `m ∈ (√h, M]`.
    Absolute,
    /// `m ∈ (√h, √h + M]`.
    Shifted,
}

/// Prefactor of the harmonic sum: `h` as obtained from the kernel integral
/// `∫ Γ(1/2, 4πny) e^{-4πNy} dy = 1/(4√π(m+√n)m)`, or `√π·h` as printed in
/// the literature formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HarmonicPrefactor {
    Derived,
    Printed,
}

impl HarmonicPrefactor {
    fn scale(self, h: u64) -> f64 {
        match self {
            HarmonicPrefactor::Derived => h as f64,
            HarmonicPrefactor::Printed => SQRT_PI * h as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    /// Harmonic tail length `M`; see [`TailRange`].
    pub truncation: u64,
    pub tail_range: TailRange,
    pub acceleration: Acceleration,
    pub constant_log_variant: LogVariant,
    pub harmonic_prefactor: HarmonicPrefactor,
    pub tolerance: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            truncation: DEFAULT_TRUNCATION,
            tail_range: TailRange::Absolute,
            acceleration: Acceleration::Pairing,
            constant_log_variant: LogVariant::LogH,
            harmonic_prefactor: HarmonicPrefactor::Derived,
            tolerance: 1e-10,
        }
    }
}

impl ProjectionConfig {
    pub fn with_truncation(mut self, m: u64) -> Self {
        self.truncation = m;
        self
    }

    pub fn with_acceleration(mut self, a: Acceleration) -> Self {
        self.acceleration = a;
        self
    }

    pub fn with_log_variant(mut self, v: LogVariant) -> Self {
        self.constant_log_variant = v;
        self
    }

    pub fn with_tail_range(mut self, r: TailRange) -> Self {
        self.tail_range = r;
        self
    }

    pub fn with_prefactor(mut self, p: HarmonicPrefactor) -> Self {
        self.harmonic_prefactor = p;
        self
    }

    /// Last `m` of the harmonic tail for coefficient `h`.
    pub fn tail_end(&self, h: u64) -> u64 {
        match self.tail_range {
            TailRange::Absolute => self.truncation,
            TailRange::Shifted => isqrt(h as u128) as u64 + self.truncation,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.truncation == 0 {
            return Err(Error::Domain("harmonic truncation M must be at least 1".into()));
        }
        Ok(())
    }
}

/// The four pieces of a projected coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RChiBreakdown {
    pub h: u64,
    pub constant: f64,
    pub harmonic: f64,
    pub holomorphic: f64,
    pub sesquiharmonic: f64,
    pub total: f64,
    /// Heuristic size of the truncated harmonic tail.
    pub uncertainty: f64,
}

impl RChiBreakdown {
    fn new(h: u64, constant: f64, harmonic: f64, holomorphic: f64, sesquiharmonic: f64, uncertainty: f64) -> Self {
        let total = constant + harmonic + holomorphic + sesquiharmonic;
        Self { h, constant, harmonic, holomorphic, sesquiharmonic, total, uncertainty }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.h, self.constant, self.harmonic, self.holomorphic, self.sesquiharmonic, self.total, self.uncertainty
        )
    }
}

pub fn write_csv<W: Write>(rows: &[RChiBreakdown], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Neumaier's compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums tail terms in order and returns `(sum, uncertainty)`.
///
/// With pairing, terms are added two at a time and an unpaired last term
/// counts with weight 1/2; the uncertainty is the size of the last group.
/// Without it, the uncertainty is the size of the last term.
pub fn accumulate_tail(terms: &[f64], acceleration: Acceleration) -> (f64, f64) {
    let mut acc = CompensatedSum::new();
    let mut last = 0.0;
    match acceleration {
        Acceleration::None => {
            for &t in terms {
                acc.add(t);
                last = t;
            }
        }
        Acceleration::Pairing => {
            for pair in terms.chunks(2) {
                let g = if pair.len() == 2 { pair[0] + pair[1] } else { 0.5 * pair[0] };
                acc.add(g);
                last = g;
            }
        }
    }
    (acc.value(), last.abs())
}

/// `α_{n,m} = (2√n·arctan(m/√n) − m·log(4n/(n+m²))) / (4πm)`.
pub fn alpha_nm(n: f64, m: f64) -> f64 {
    let sn = n.sqrt();
    (2.0 * sn * (m / sn).atan() - m * (4.0 * n / (n + m * m)).ln()) / (4.0 * PI * m)
}

fn require_odd(chi: &DirichletCharacter) -> Result<()> {
    if !chi.is_odd() {
        return Err(Error::Domain(format!(
            "r_chi needs an odd character; the character mod {} is even",
            chi.modulus()
        )));
    }
    Ok(())
}

/// Terms `H(m²−h)·χ(m)/(√n(m+√n))`, `n = m² − h`, over the `m ∈ (√h, end]`
/// with `χ(m) ≠ 0`.
pub fn harmonic_terms(h: u64, chi: &DirichletCharacter, end: u64) -> Result<Vec<(u64, f64)>> {
    let s = isqrt(h as u128) as u64;
    let mut out = Vec::new();
    for m in s + 1..=end {
        let c = chi.eval(m as i64);
        if c == 0 {
            continue;
        }
        let n = m * m - h;
        let hn = if n % 4 == 1 || n % 4 == 2 { 0.0 } else { rational_to_f64(hurwitz(n)?) };
        let sn = (n as f64).sqrt();
        out.push((m, hn * c as f64 / (sn * (m as f64 + sn))));
    }
    Ok(out)
}

fn rational_to_f64(r: crate::arith::Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `h·Σ H(m²−h)χ(m)/(√n(m+√n))` (times `√π` with the printed prefactor),
/// truncated; returns `(value, uncertainty)`.
pub fn harmonic_term(h: u64, chi: &DirichletCharacter, cfg: &ProjectionConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    let terms: Vec<f64> = harmonic_terms(h, chi, cfg.tail_end(h))?.into_iter().map(|(_, t)| t).collect();
    let (sum, unc) = accumulate_tail(&terms, cfg.acceleration);
    let scale = cfg.harmonic_prefactor.scale(h);
    Ok((scale * sum, scale * unc))
}

/// `Σ_{m²<h} h*(h−m²)/√(h−m²)·χ(m)·m`.
pub fn holomorphic_term(h: u64, chi: &DirichletCharacter) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    let mut m = 1u64;
    while m * m < h {
        let c = chi.eval(m as i64);
        if c != 0 {
            let n = h - m * m;
            acc.add(hstar(n)? / (n as f64).sqrt() * (c as f64) * m as f64);
        }
        m += 1;
    }
    Ok(acc.value())
}

/// `Σ_{m²+n²=h} χ(m)/(2π)·(2n·arctan(m/n) − m·log(4n²/h))`.
pub fn sesqui_term(h: u64, chi: &DirichletCharacter) -> f64 {
    let mut acc = CompensatedSum::new();
    let mut m = 1u64;
    while m * m < h {
        if let Some(n) = sqrt_if_square((h - m * m) as u128) {
            let c = chi.eval(m as i64);
            if c != 0 {
                let (mf, nf) = (m as f64, n as f64);
                let v = 2.0 * nf * (mf / nf).atan() - mf * (4.0 * nf * nf / h as f64).ln();
                acc.add(c as f64 / (2.0 * PI) * v);
            }
        }
        m += 1;
    }
    acc.value()
}

/// The constant block, nonzero only at perfect squares `h = s²`.
pub fn constant_term(h: u64, chi: &DirichletCharacter, cfg: &ProjectionConfig) -> f64 {
    let Some(s) = sqrt_if_square(h as u128) else {
        return 0.0;
    };
    let c = chi.eval(s as i64);
    if c == 0 {
        return 0.0;
    }
    let sf = s as f64;
    let log_arg = match cfg.constant_log_variant {
        LogVariant::LogH => 4.0 * PI * h as f64,
        LogVariant::LogSqrtH => 4.0 * PI * sf,
    };
    let bracket =
        (EULER_GAMMA - (16.0 * PI).ln()) / (4.0 * PI) + (EULER_GAMMA + log_arg.ln()) / (4.0 * PI) + 1.0 / (12.0 * sf);
    c as f64 * sf * bracket
}

/// `r_χ(h)` with its four pieces.
pub fn r_chi(h: u64, chi: &DirichletCharacter, cfg: &ProjectionConfig) -> Result<RChiBreakdown> {
    require_odd(chi)?;
    cfg.validate()?;
    if h == 0 {
        return Err(Error::Domain("r_chi is defined for h >= 1".into()));
    }
    let constant = constant_term(h, chi, cfg);
    let (harmonic, uncertainty) = harmonic_term(h, chi, cfg)?;
    let holomorphic = holomorphic_term(h, chi)?;
    let sesqui = sesqui_term(h, chi);
    Ok(RChiBreakdown::new(h, constant, harmonic, holomorphic, sesqui, uncertainty))
}

/// [`r_chi`] for several `h`, evaluated in parallel; the output order matches
/// the input.
pub fn r_chi_many(hs: &[u64], chi: &DirichletCharacter, cfg: &ProjectionConfig) -> Result<Vec<RChiBreakdown>> {
    require_odd(chi)?;
    hs.par_iter().map(|&h| r_chi(h, chi, cfg)).collect()
}

/// Callback serving `b(n)` for `n < 0`.
pub type BCallback = Arc<dyn Fn(i64) -> Result<f64> + Send + Sync>;

/// Fourier data `d(0..3), c(n), b(n), a(n)` of a weight 1/2 sesquiharmonic
/// form. Missing entries are zero.
#[derive(Clone, Default)]
pub struct SesquiCoefficients {
    pub d: [f64; 4],
    pub c: BTreeMap<i64, f64>,
    pub b: BTreeMap<i64, f64>,
    pub b_negative: Option<BCallback>,
    pub a: BTreeMap<u64, f64>,
    /// `c(n)` and `a(n)` are known for `n` up to this bound.
    pub nmax: u64,
}

impl std::fmt::Debug for SesquiCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SesquiCoefficients")
            .field("d", &self.d)
            .field("c", &self.c.len())
            .field("b", &self.b.len())
            .field("b_negative", &self.b_negative.is_some())
            .field("a", &self.a.len())
            .field("nmax", &self.nmax)
            .finish()
    }
}

impl SesquiCoefficients {
    pub fn c(&self, n: i64) -> f64 {
        self.c.get(&n).copied().unwrap_or(0.0)
    }

    pub fn a(&self, n: u64) -> f64 {
        self.a.get(&n).copied().unwrap_or(0.0)
    }

    pub fn b(&self, n: i64) -> Result<f64> {
        if let Some(&v) = self.b.get(&n) {
            return Ok(v);
        }
        match (&self.b_negative, n < 0) {
            (Some(cb), true) => cb(n),
            _ => Ok(0.0),
        }
    }
}

/// Coefficients `ℓ(m)` of `g = Σ ℓ(m) q^{m²}`, indexed from `m = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CuspCoefficients {
    ell: Vec<f64>,
}

impl CuspCoefficients {
    /// `ell[0]` is `ℓ(1)`.
    pub fn new(ell: Vec<f64>) -> Self {
        Self { ell }
    }

    /// `ℓ(m) = χ(m)·m` for `m ≤ mmax`.
    pub fn theta(chi: &DirichletCharacter, mmax: u64) -> Self {
        Self { ell: (1..=mmax).map(|m| chi.eval(m as i64) as f64 * m as f64).collect() }
    }

    pub fn ell(&self, m: u64) -> f64 {
        if m == 0 {
            return 0.0;
        }
        self.ell.get(m as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn mmax(&self) -> u64 {
        self.ell.len() as u64
    }
}

/// Coefficient `a_h` of the projection of `F·g`, split into the four pieces
/// of [`RChiBreakdown`].
pub fn project_coefficient(
    f: &SesquiCoefficients,
    g: &CuspCoefficients,
    h: u64,
    cfg: &ProjectionConfig,
) -> Result<RChiBreakdown> {
    cfg.validate()?;
    if h > f.nmax + 1 {
        return Err(Error::Precision { needed: h as usize - 1, available: f.nmax as usize });
    }
    let s = isqrt(h as u128) as u64;
    let end = cfg.tail_end(h);
    if g.mmax() < end {
        return Err(Error::Precision { needed: end as usize, available: g.mmax() as usize });
    }

    let mut constant = 0.0;
    if s * s == h {
        let l = g.ell(s);
        if l != 0.0 {
            let hf = h as f64;
            let log_arg = match cfg.constant_log_variant {
                LogVariant::LogH => 4.0 * PI * hf,
                LogVariant::LogSqrtH => 4.0 * PI * (s as f64),
            };
            let [d0, d1, d2, d3] = f.d;
            let first = d0 - d1 * (log_arg.ln() + EULER_GAMMA);
            let second = (d2 + d3 * (2.0 - (16.0 * PI * hf).ln() - EULER_GAMMA)) / (4.0 * s as f64);
            constant = l * (first + second);
        }
    }

    let mut holo = CompensatedSum::new();
    let mut sesqui = CompensatedSum::new();
    let mut harm_principal = CompensatedSum::new();
    for m in 1..=s {
        let l = g.ell(m);
        if l == 0.0 || m * m == h {
            continue;
        }
        let n = h - m * m;
        holo.add(f.c(n as i64) * l);
        let a = f.a(n);
        if a != 0.0 {
            sesqui.add(a * l * alpha_nm(n as f64, m as f64));
        }
        let b = f.b(n as i64)?;
        if b != 0.0 {
            let mf = m as f64;
            harm_principal.add(b * l / ((mf + (n as f64).sqrt()) * mf));
        }
    }
    // holomorphic contributions from the finitely many c(n), n < 0
    for (&n, &c) in f.c.range(..0) {
        let sq = h as i64 - n;
        if let Some(m) = sqrt_if_square(sq as u128) {
            holo.add(c * g.ell(m as u64));
        }
    }

    let mut tail = Vec::new();
    for m in s + 1..=end {
        let l = g.ell(m);
        if l == 0.0 {
            continue;
        }
        let n = h as i64 - (m * m) as i64;
        let b = f.b(n)?;
        let mf = m as f64;
        tail.push(b * l / ((mf + ((-n) as f64).sqrt()) * mf));
    }
    let (tail_sum, unc) = accumulate_tail(&tail, cfg.acceleration);
    let scale = cfg.harmonic_prefactor.scale(h);
    let harmonic = scale * (harm_principal.value() + tail_sum);

    Ok(RChiBreakdown::new(h, constant, harmonic, holo.value(), sesqui.value(), scale * unc))
}

/// Breakdowns of `a_1, ..., a_hmax`.
pub fn project_general_breakdown(
    f: &SesquiCoefficients,
    g: &CuspCoefficients,
    hmax: u64,
    cfg: &ProjectionConfig,
) -> Result<Vec<RChiBreakdown>> {
    (1..=hmax).into_par_iter().map(|h| project_coefficient(f, g, h, cfg)).collect()
}

/// `π_hol(F·g)` through `q^hmax` as a float series.
pub fn project_general(
    f: &SesquiCoefficients,
    g: &CuspCoefficients,
    hmax: u64,
    cfg: &ProjectionConfig,
) -> Result<PowerSeries> {
    let rows = project_general_breakdown(f, g, hmax, cfg)?;
    let mut c = vec![0.0];
    c.extend(rows.iter().map(|r| r.total));
    Ok(PowerSeries::from_floats(c))
}

/// Fourier data of the class number form `Z`: `c(d) = h*(d)/√d`,
/// `b(−d) = H(d)/√d`, `a(n²) = 2` and the constant block.
///
/// `b` is served by a callback for `|n| ≤ b_callback_limit`.
pub fn z_coefficients(nmax: u64, b_callback_limit: u64) -> Result<SesquiCoefficients> {
    if nmax == 0 {
        return Err(Error::Domain("z_coefficients needs nmax >= 1".into()));
    }
    let mut c = BTreeMap::new();
    for d in 1..=nmax {
        let v = hstar(d)?;
        if v != 0.0 {
            c.insert(d as i64, v / (d as f64).sqrt());
        }
    }
    let mut a = BTreeMap::new();
    let mut j = 1u64;
    while j * j <= nmax {
        a.insert(j * j, 2.0);
        j += 1;
    }
    let cb: BCallback = Arc::new(move |n: i64| {
        let d = n.unsigned_abs();
        if d > b_callback_limit {
            return Err(Error::Domain(format!("b({n}) requested beyond the callback limit {b_callback_limit}")));
        }
        Ok(rational_to_f64(hurwitz(d)?) / (d as f64).sqrt())
    });
    Ok(SesquiCoefficients {
        d: [(EULER_GAMMA - (16.0 * PI).ln()) / (4.0 * PI), -1.0 / (4.0 * PI), 1.0 / 3.0, 0.0],
        c,
        b: BTreeMap::new(),
        b_negative: Some(cb),
        a,
        nmax,
    })
}

/// Zagier's weight 3/2 form `−1/12 + Σ H(n) q^n` in the same container.
/// The constant `−1/12` sits in `d(0)`. It is a coefficient source only; the
/// weight does not match [`project_general`].
pub fn zagier_coefficients(nmax: u64) -> Result<SesquiCoefficients> {
    let mut c = BTreeMap::new();
    for n in 1..=nmax {
        let v = rational_to_f64(hurwitz(n)?);
        if v != 0.0 {
            c.insert(n as i64, v);
        }
    }
    Ok(SesquiCoefficients { d: [-1.0 / 12.0, 0.0, 0.0, 0.0], c, nmax, ..Default::default() })
}
