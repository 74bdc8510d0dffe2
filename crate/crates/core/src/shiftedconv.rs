//! Shifted-convolution sums `Σ H(m²−h)·m·χ(m)`, their growth, the truncated
//! Dirichlet series `D_h(s)` and the symmetrized pairing with `n^{-s} − m^{-2s}`.

use std::fmt::Write as _;
use std::io::Write;

use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{isqrt, DirichletCharacter, Rational};
use crate::error::{Error, Result};
use crate::projection::{accumulate_tail, Acceleration, CompensatedSum};
use crate::quadforms::hurwitz;

pub const CSV_HEADER: &str = "m,S_exact_num,S_exact_den,S_float,normalized_54,normalized_32";

/// `H(m² − h)`, skipping the class-number computation when `m² − h ≡ 1, 2 (mod 4)`.
fn h_shift(m: u64, h: u64) -> Result<Rational> {
    let n = m * m - h;
    if n % 4 == 1 || n % 4 == 2 {
        return Ok(Rational::zero());
    }
    hurwitz(n)
}

fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftedRow {
    pub m: u64,
    #[serde(skip)]
    pub s: Rational,
    pub s_float: f64,
}

impl ShiftedRow {
    /// The growth variable `X = m²`.
    pub fn x(&self) -> f64 {
        (self.m as f64).powi(2)
    }

    /// `S / X^exponent`.
    pub fn normalized(&self, exponent: f64) -> f64 {
        self.s_float / self.x().powf(exponent)
    }
}

/// Partial sums `S(m) = Σ_{√h<k≤m} H(k²−h)·k·χ(k)` for every `m` up to
/// `m_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedSumSeries {
    pub h: u64,
    pub chi: DirichletCharacter,
    pub rows: Vec<ShiftedRow>,
}

/// Exact partial sums; rows run over `m ∈ (√h, m_max]`.
pub fn partial_sums(h: u64, chi: &DirichletCharacter, m_max: u64) -> Result<ShiftedSumSeries> {
    if h == 0 {
        return Err(Error::Domain("shift h must be positive".into()));
    }
    let start = isqrt(h as u128) as u64 + 1;
    let mut s = Rational::zero();
    let mut rows = Vec::new();
    for m in start..=m_max {
        let c = chi.eval(m as i64);
        if c != 0 && m * m != h {
            let term = h_shift(m, h)? * Rational::from_integer(m as i128 * c as i128);
            s += term;
        }
        rows.push(ShiftedRow { m, s, s_float: to_f64(&s) });
    }
    Ok(ShiftedSumSeries { h, chi: chi.clone(), rows })
}

impl ShiftedSumSeries {
    /// `S(m)` recomputed from scratch, without the running sum.
    pub fn recompute(&self, m: u64) -> Result<Rational> {
        let start = isqrt(self.h as u128) as u64 + 1;
        let mut s = Rational::zero();
        for k in start..=m {
            let c = self.chi.eval(k as i64);
            if c != 0 {
                s += h_shift(k, self.h)? * Rational::from_integer(k as i128 * c as i128);
            }
        }
        Ok(s)
    }

    /// `(X, S)` with `X = m²`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.x(), r.s_float)).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{:?},{:?},{:?}",
                r.m,
                r.s.numer(),
                r.s.denom(),
                r.s_float,
                r.normalized(1.25),
                r.normalized(1.5)
            )?;
        }
        Ok(())
    }

    /// Polyline plot of `S/X^{5/4}` and `S/X^{3/2}` against `m`.
    pub fn svg(&self) -> String {
        let c54: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.m as f64, r.normalized(1.25))).collect();
        let c32: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.m as f64, r.normalized(1.5))).collect();
        svg_plot(&format!("normalized shifted sums, h = {}", self.h), "m", &[("S/X^(5/4)", c54), ("S/X^(3/2)", c32)])
    }
}

/// Least-squares slope of `log max_{k≤x} |S(k)|` against `log x` over the
/// trailing `window` points. Returns `(slope, standard error)`.
pub fn fit_exponent_points(points: &[(f64, f64)], window: usize) -> Result<(f64, f64)> {
    let mut run = 0.0f64;
    let mut usable = Vec::new();
    for &(m, s) in points {
        run = run.max(s.abs());
        if m > 0.0 && run > 0.0 {
            usable.push((m.ln(), run.ln()));
        }
    }
    let take = window.min(usable.len());
    if take < 20 {
        return Err(Error::Domain(format!("exponent fit needs at least 20 points, have {take}")));
    }
    let pts = &usable[usable.len() - take..];
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("exponent fit has no spread in log m".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - icept - slope * p.0).powi(2)).sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

/// Growth exponent of `S` in `X = m²`.
pub fn fit_exponent(series: &ShiftedSumSeries, window: usize) -> Result<(f64, f64)> {
    fit_exponent_points(&series.points(), window)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DSeriesValue {
    pub value: f64,
    /// Estimated size of the omitted terms `m > M`.
    pub tail_bound: f64,
}

/// `Σ_{√h<m≤M} H(m²−h)·χ(m)·m / m^{2s+1}` for `s > 1`.
pub fn d_series_truncated(h: u64, chi: &DirichletCharacter, s: f64, m_max: u64) -> Result<DSeriesValue> {
    if s <= 1.0 {
        return Err(Error::Domain(format!("D_h(s) is only summed for s > 1, got {s}")));
    }
    let start = isqrt(h as u128) as u64 + 1;
    let mut acc = CompensatedSum::new();
    // largest |term|·m^{2s-1} over the trailing half, a proxy for the decay constant
    let mut c = 0.0f64;
    for m in start..=m_max {
        let x = chi.eval(m as i64);
        if x == 0 || m * m == h {
            continue;
        }
        let mf = m as f64;
        let t = to_f64(&h_shift(m, h)?) * x as f64 * mf / mf.powf(2.0 * s + 1.0);
        acc.add(t);
        if 2 * m >= m_max {
            c = c.max(t.abs() * mf.powf(2.0 * s - 1.0));
        }
    }
    let tail_bound = c * (m_max as f64).powf(2.0 - 2.0 * s) / (2.0 * s - 2.0);
    Ok(DSeriesValue { value: acc.value(), tail_bound })
}

/// `n^{-s} − m^{-2s}` for `n = m² − h`, without cancellation.
fn symmetric_weight(m: u64, h: u64, s: f64) -> f64 {
    let mf = m as f64;
    let x = -(h as f64) / (mf * mf);
    mf.powf(-2.0 * s) * (-s * x.ln_1p()).exp_m1()
}

/// `Σ_{√h<m≤end} H(n)·m·χ(m)·(n^{-s} − m^{-2s})`, `n = m² − h`, accumulated
/// like the harmonic tail; returns `(value, uncertainty)`.
pub fn symmetrized_sum(
    h: u64,
    chi: &DirichletCharacter,
    s: f64,
    end: u64,
    acceleration: Acceleration,
) -> Result<(f64, f64)> {
    let start = isqrt(h as u128) as u64 + 1;
    let mut terms = Vec::new();
    for m in start..=end {
        let x = chi.eval(m as i64);
        if x == 0 || m * m == h {
            continue;
        }
        let hn = to_f64(&h_shift(m, h)?);
        terms.push(hn * (m as f64) * x as f64 * symmetric_weight(m, h, s));
    }
    Ok(accumulate_tail(&terms, acceleration))
}

/// `|Σ H(n)mχ(m)(n^{-s} − m^{-2s}) − (Σ H(n)mχ(m)n^{-s} − Σ H(n)mχ(m)m^{-2s})|`
/// over `m ≤ M`: the same terms grouped two ways. Needs `s > 3/2`.
pub fn symmetrized_check(h: u64, chi: &DirichletCharacter, s: f64, m_max: u64) -> Result<f64> {
    if s <= 1.5 {
        return Err(Error::Domain(format!("the split sums converge only for s > 3/2, got {s}")));
    }
    let start = isqrt(h as u128) as u64 + 1;
    let mut joint = CompensatedSum::new();
    let mut left = CompensatedSum::new();
    let mut right = CompensatedSum::new();
    for m in start..=m_max {
        let x = chi.eval(m as i64);
        if x == 0 || m * m == h {
            continue;
        }
        let a = to_f64(&h_shift(m, h)?) * m as f64 * x as f64;
        let n = (m * m - h) as f64;
        joint.add(a * symmetric_weight(m, h, s));
        left.add(a * n.powf(-s));
        right.add(a * (m as f64).powf(-2.0 * s));
    }
    Ok((joint.value() - (left.value() - right.value())).abs())
}

/// Minimal SVG line chart: one polyline per curve, axes with the data range
/// printed at the ends.
pub fn svg_plot(title: &str, xlabel: &str, curves: &[(&str, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 720.0;
    const H: f64 = 420.0;
    const PAD: f64 = 50.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let all = curves.iter().flat_map(|(_, p)| p.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        W / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        out,
        r#"<polyline points="{PAD},{PAD} {PAD},{} {},{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            out,
            r##"<line x1="{PAD}" y1="{0}" x2="{1}" y2="{0}" stroke="#999" stroke-dasharray="4 3"/>"##,
            sy(0.0),
            W - PAD
        );
    }
    let label = |v: f64| format!("{v:.4}");
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
        H - PAD + 15.0,
        label(x0)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
        W - PAD,
        H - PAD + 15.0,
        label(x1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        W / 2.0,
        H - 10.0,
        xml_escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
        PAD - 4.0,
        H - PAD,
        label(y0)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
        PAD - 4.0,
        PAD + 4.0,
        label(y1)
    );
    for (i, (name, pts)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ =
            writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1"/>"#, coords.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            W - PAD - 120.0,
            PAD + 16.0 * i as f64,
            xml_escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
