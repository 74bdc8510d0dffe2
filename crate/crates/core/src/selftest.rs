//! Oracle checks shared by the `selftest` subcommand and the test suites.

use std::cell::RefCell;
use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::arith::DirichletCharacter;
use crate::error::Result;
use crate::projection::{alpha_nm, r_chi, ProjectionConfig};
use crate::qseries::{basis_s2_64, euler_product_series, PowerSeries};
use crate::quadforms::{hurwitz_direct, hurwitz_fast};
use crate::special::{alpha_numeric, gamma, hyp2f1, integrate_0_inf, upper_gamma_half, EULER_GAMMA};

/// Printed leading coefficients of `f1` through `q^17`.
pub const F1_PRINTED: &[(usize, i64)] = &[(1, 1), (5, 2), (9, -3), (13, -6), (17, 2)];
/// Printed leading coefficients of `f2` through `q^25`.
pub const F2_PRINTED: &[(usize, i64)] = &[(1, 1), (5, -2), (9, -3), (13, 6), (17, 2), (25, -1)];
/// Printed leading coefficients of `f3` through `q^50`.
pub const F3_PRINTED: &[(usize, i64)] = &[(2, 1), (10, -2), (18, -3), (26, 6), (34, 2), (50, -1)];

/// A few rows `(k, numerical)` of the published table of `r_χ4(k)`.
pub const TABLE_SPOT_ROWS: &[(u64, f64)] = &[(1, 0.0289), (2, 0.058), (9, -0.0869), (25, -0.03)];

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// `n ≤ nmax` exhaustively plus `random` draws from `(nmax, rmax]`.
/// Returns the first disagreement, if any.
pub fn hurwitz_backends_agree(nmax: u64, random: usize, rmax: u64, seed: u64) -> Result<Option<u64>> {
    let mut ns: Vec<u64> = (0..=nmax).collect();
    let mut rng = StdRng::seed_from_u64(seed);
    ns.extend((0..random).map(|_| rng.gen_range(nmax + 1..=rmax)));
    for n in ns {
        if hurwitz_direct(n)? != hurwitz_fast(n)? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Relative errors of quadrature against the three constant-block integrals
/// at `a`: `∫e^{−4πay}log y`, `∫√y e^{−4πay}` and `∫√y log y e^{−4πay}`.
pub fn constant_block_integrals(a: f64) -> Result<[f64; 3]> {
    let tol = 1e-13;
    let q1 = integrate_0_inf(|y: f64| (-4.0 * PI * a * y).exp() * y.ln(), tol)?.value;
    let c1 = -(EULER_GAMMA + (4.0 * PI * a).ln()) / (4.0 * PI * a);
    let q2 = integrate_0_inf(|y: f64| y.sqrt() * (-4.0 * PI * a * y).exp(), tol)?.value;
    let c2 = 1.0 / (16.0 * PI * a.powf(1.5));
    let q3 = integrate_0_inf(|y: f64| y.sqrt() * y.ln() * (-4.0 * PI * a * y).exp(), tol)?.value;
    let c3 = -(-2.0 + EULER_GAMMA + (16.0 * PI * a).ln()) / (16.0 * PI * a.powf(1.5));
    Ok([rel(q1, c1), rel(q2, c2), rel(q3, c3)])
}

/// `4π(n+m²)∫α(4ny)e^{−4π(n+m²)y}dy` by nested quadrature, against
/// [`alpha_nm`]. Returns the relative error.
pub fn alpha_integral(n: f64, m: f64) -> Result<f64> {
    let big = n + m * m;
    let failure = RefCell::new(None);
    let q = integrate_0_inf(
        |y: f64| {
            if y <= 0.0 {
                return 0.0;
            }
            match alpha_numeric(4.0 * n * y, 1e-12) {
                Ok(a) => a.value * (-4.0 * PI * big * y).exp(),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        },
        1e-11,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(rel(4.0 * PI * big * q?.value, alpha_nm(n, m)))
}

/// `∫y^s Γ(1/2,4πny)e^{−4πNy}dy` against its `2F1` closed form.
pub fn incomplete_gamma_moment(s: f64, n: f64, big_n: f64) -> Result<f64> {
    let q = integrate_0_inf(
        |y: f64| y.powf(s) * upper_gamma_half(4.0 * PI * n * y) * (-4.0 * PI * big_n * y).exp(),
        1e-13,
    )?;
    let closed =
        gamma(1.5 + s) * hyp2f1(1.0 + s, 1.5 + s, 2.0 + s, -big_n / n)? / ((1.0 + s) * (4.0 * PI * n).powf(1.0 + s));
    Ok(rel(q.value, closed))
}

/// `∫Γ(1/2,4πny)e^{−4πNy}dy = 1/(4√π(m+√n)m)` with `N = m² − n`.
pub fn harmonic_kernel(n: f64, m: f64) -> Result<f64> {
    let big_n = m * m - n;
    let q = integrate_0_inf(|y: f64| upper_gamma_half(4.0 * PI * n * y) * (-4.0 * PI * big_n * y).exp(), 1e-13)?;
    Ok(rel(q.value, 1.0 / (4.0 * PI.sqrt() * (m + n.sqrt()) * m)))
}

/// Largest relative error over every lemma instance.
pub fn lemma_errors() -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for a in [1.0, 2.5] {
        let e = constant_block_integrals(a)?;
        for (i, v) in e.iter().enumerate() {
            out.push((format!("constant block integral {} at a={a}", i + 1), *v));
        }
    }
    for (n, m) in [(1.0, 1.0), (2.0, 1.0), (1.0, 2.0)] {
        out.push((format!("alpha integral (n,m)=({n},{m})"), alpha_integral(n, m)?));
    }
    out.push(("incomplete gamma moment s=0.5 n=1 N=3".into(), incomplete_gamma_moment(0.5, 1.0, 3.0)?));
    for (n, m) in [(1.0, 2.0), (3.0, 2.0), (7.0, 4.0)] {
        out.push((format!("harmonic kernel (n,m)=({n},{m})"), harmonic_kernel(n, m)?));
    }
    Ok(out)
}

fn matches_printed(f: &PowerSeries, through: usize, printed: &[(usize, i64)]) -> Result<bool> {
    for k in 0..=through {
        let want = printed.iter().find(|p| p.0 == k).map_or(0, |p| p.1);
        if f.int_coefficient(k)? != want {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Basis coefficients against the printed expansions.
pub fn basis_matches_printed() -> Result<[bool; 3]> {
    let [f1, f2, f3] = basis_s2_64(50)?;
    Ok([
        matches_printed(&f1, 17, F1_PRINTED)?,
        matches_printed(&f2, 25, F2_PRINTED)?,
        matches_printed(&f3, 50, F3_PRINTED)?,
    ])
}

/// `η(z)^24 / q` from the pentagonal series against a schoolbook expansion
/// of `∏(1−q^n)^24` through `q^n`.
pub fn eta24_matches_product(n: usize) -> Result<bool> {
    let fast = euler_product_series(n).pow(24)?;
    let mut naive = vec![0i128; n + 1];
    naive[0] = 1;
    for k in 1..=n {
        for _ in 0..24 {
            for i in (k..=n).rev() {
                naive[i] -= naive[i - k];
            }
        }
    }
    for (i, v) in naive.iter().enumerate() {
        let c = fast.exact_coefficient(i)?;
        if c != (*v).into() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Runs the oracle suite. `quick` skips the slow exhaustive ranges.
pub fn run(quick: bool) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let (nmax, random) = if quick { (2000, 20) } else { (10_000, 100) };
    out.push(match hurwitz_backends_agree(nmax, random, 1_000_000, 7) {
        Ok(None) => CheckOutcome::new("hurwitz direct vs fast", true, format!("n <= {nmax} and {random} random n")),
        Ok(Some(n)) => CheckOutcome::new("hurwitz direct vs fast", false, format!("disagree at n={n}")),
        Err(e) => CheckOutcome::new("hurwitz direct vs fast", false, e.to_string()),
    });
    out.push(match lemma_errors() {
        Ok(v) => {
            let worst = v.iter().cloned().fold((String::new(), 0.0), |a, b| if b.1 > a.1 { b } else { a });
            CheckOutcome::new(
                "integral lemmas",
                worst.1 <= 1e-8,
                format!("max rel error {:.2e} ({})", worst.1, worst.0),
            )
        }
        Err(e) => CheckOutcome::new("integral lemmas", false, e.to_string()),
    });
    out.push(match basis_matches_printed() {
        Ok(b) => CheckOutcome::new("eta quotient basis", b.iter().all(|x| *x), format!("f1,f2,f3 = {b:?}")),
        Err(e) => CheckOutcome::new("eta quotient basis", false, e.to_string()),
    });
    out.push(match eta24_matches_product(300) {
        Ok(b) => CheckOutcome::new("eta^24 product", b, "through q^300".into()),
        Err(e) => CheckOutcome::new("eta^24 product", false, e.to_string()),
    });
    let chi = DirichletCharacter::kronecker(-4).expect("-4 is a discriminant");
    let cfg = ProjectionConfig::default();
    for &(k, want) in TABLE_SPOT_ROWS {
        let name = format!("table row k={k}");
        out.push(match r_chi(k, &chi, &cfg) {
            Ok(r) => CheckOutcome::new(&name, (r.total - want).abs() <= 2e-3, format!("{:.5} vs {want}", r.total)),
            Err(e) => CheckOutcome::new(&name, false, e.to_string()),
        });
    }
    out
}
