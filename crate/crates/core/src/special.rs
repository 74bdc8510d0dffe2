//! Special functions and adaptive quadrature used by the projection formulas
//! and by the independent checks of their closed forms.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SQRT_PI: f64 = 1.772_453_850_905_516;

pub fn euler_gamma() -> f64 {
    EULER_GAMMA
}

/// Complementary error function.
///
/// Positive-term series for `x < 2`, Lentz continued fraction beyond.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

/// erf(x) = 2/sqrt(pi) e^{-x^2} sum 2^n x^{2n+1} / (1*3*...*(2n+1)); all terms positive.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    2.0 / SQRT_PI * (-x2).exp() * sum
}

/// erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / SQRT_PI / f
}

/// Upper incomplete gamma function Γ(1/2, x) = sqrt(pi) erfc(sqrt(x)).
pub fn upper_gamma_half(x: f64) -> f64 {
    assert!(x >= 0.0, "upper_gamma_half requires x >= 0");
    SQRT_PI * erfc(x.sqrt())
}

/// β(y) = Γ(1/2, πy)/sqrt(pi) = erfc(sqrt(πy)).
pub fn beta_fn(y: f64) -> f64 {
    erfc((PI * y).sqrt())
}

/// Result of a numerical integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integration on a finite interval, to relative
/// tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    integrate_with(&f, a, b, tol, 0.0)
}

/// Stops once the summed panel error is below `max(rel * |value|, abs)`.
fn integrate_with<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel: f64, abs: f64) -> Result<QuadratureResult> {
    struct Panel {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    impl PartialEq for Panel {
        fn eq(&self, other: &Self) -> bool {
            self.err == other.err
        }
    }
    impl Eq for Panel {}
    impl PartialOrd for Panel {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Panel {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.err.total_cmp(&other.err)
        }
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration bounds [{a}, {b}] must be finite")));
    }
    let (v, e) = gauss_kronrod(f, a, b);
    let mut panels = std::collections::BinaryHeap::new();
    panels.push(Panel { a, b, value: v, err: e });
    let mut total = v;
    let mut err = e;
    let mut evaluations = 15;
    loop {
        // the Kronrod estimate cannot resolve below a few ulps of the panel values
        let roundoff = 50.0 * f64::EPSILON * panels.iter().map(|p| p.value.abs()).sum::<f64>();
        if err <= (rel * total.abs()).max(abs).max(roundoff).max(f64::MIN_POSITIVE) {
            let total: f64 = panels.iter().map(|p| p.value).sum();
            return Ok(QuadratureResult { value: total, error_estimate: err.max(roundoff), evaluations });
        }
        if evaluations > 200_000 || !err.is_finite() {
            return Err(Error::Convergence(format!(
                "quadrature on [{a}, {b}] stalled at error {err:e} (tolerance {rel:e})"
            )));
        }
        let p = panels.pop().expect("at least one panel");
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::Convergence(format!("quadrature panel [{}, {}] cannot be split further", p.a, p.b)));
        }
        let (v1, e1) = gauss_kronrod(f, p.a, mid);
        let (v2, e2) = gauss_kronrod(f, mid, p.b);
        evaluations += 30;
        total += v1 + v2 - p.value;
        err = (err + e1 + e2 - p.err).max(0.0);
        panels.push(Panel { a: p.a, b: mid, value: v1, err: e1 });
        panels.push(Panel { a: mid, b: p.b, value: v2, err: e2 });
    }
}

/// Integral over `[0, ∞)` of an exponentially decaying integrand.
///
/// Integrates `[0, 1]` and then doubling panels `[2^k, 2^{k+1}]` until two
/// consecutive panels are negligible; their size is added to the error.
pub fn integrate_0_inf<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<QuadratureResult> {
    let first = integrate_with(&f, 0.0, 1.0, tol * 0.25, 0.0)?;
    let mut value = first.value;
    let mut err = first.error_estimate;
    let mut evaluations = first.evaluations;
    let mut lo = 1.0;
    let mut quiet = 0;
    for _ in 0..1000 {
        let hi = lo * 2.0;
        let panel = integrate_with(&f, lo, hi, tol * 0.25, tol * 0.25 * value.abs())?;
        value += panel.value;
        err += panel.error_estimate;
        evaluations += panel.evaluations;
        if panel.value.abs() <= tol * 1e-3 * value.abs() {
            quiet += 1;
            if quiet >= 2 {
                err += panel.value.abs();
                return Ok(QuadratureResult { value, error_estimate: err, evaluations });
            }
        } else {
            quiet = 0;
        }
        lo = hi;
    }
    Err(Error::Convergence("integrand does not decay on [0, inf)".into()))
}

/// α(y) = (sqrt(y)/4π) ∫_0^∞ t^{-1/2} e^{-πyt} log(1+t) dt, via t = u².
pub fn alpha_numeric(y: f64, tol: f64) -> Result<QuadratureResult> {
    if y <= 0.0 {
        return Err(Error::Domain(format!("alpha requires y > 0, got {y}")));
    }
    let scale = PI * y;
    let inner = integrate_0_inf(|u: f64| 2.0 * (-scale * u * u).exp() * (u * u).ln_1p(), tol)?;
    let factor = y.sqrt() / (4.0 * PI);
    let out = QuadratureResult {
        value: factor * inner.value,
        error_estimate: factor * inner.error_estimate,
        evaluations: inner.evaluations,
    };
    if out.error_estimate > tol * out.value.abs().max(1e-300) * 10.0 {
        return Err(Error::Convergence(format!("alpha({y}) tolerance not met")));
    }
    Ok(out)
}

/// Gauss hypergeometric function 2F1(a, b; c; z) for real z < 1.
///
/// Direct series on `[0, 1)`, Pfaff transformation
/// `(1-z)^{-a} 2F1(a, c-b; c; z/(z-1))` for `z < 0`.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if c <= 0.0 && c.fract() == 0.0 {
        return Err(Error::Domain(format!("2F1 undefined for c = {c}")));
    }
    if z >= 1.0 {
        return Err(Error::Domain(format!("2F1 series requires z < 1, got {z}")));
    }
    if z < 0.0 {
        let w = z / (z - 1.0);
        if w.abs() >= 1.0 {
            return Err(Error::Convergence(format!("transformed argument {w} outside unit disc")));
        }
        return Ok((1.0 - z).powf(-a) * hyp2f1_series(a, c - b, c, w)?);
    }
    hyp2f1_series(a, b, c, z)
}

fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..1_000_000 {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && k > 2.0 {
            return Ok(sum);
        }
    }
    Err(Error::Convergence(format!("2F1 series at z = {z} did not converge")))
}

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}
