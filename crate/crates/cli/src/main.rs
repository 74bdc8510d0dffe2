mod output;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};

use output::{Format, Plot, Sink, UsageError};
use sesqui::decomp::{arithmetic_patterns, solve_on_basis, DecompositionReport, RValue};
use sesqui::projection::{
    self, project_general_breakdown, r_chi_many, z_coefficients, Acceleration, CuspCoefficients, HarmonicPrefactor,
    LogVariant, ProjectionConfig, RChiBreakdown, TailRange,
};
use sesqui::qseries::{
    basis_s2_64, eta_quotient, f1_spec, f2_spec, theta_series, Coefficients, EtaQuotientSpec, PowerSeries,
};
use sesqui::quadforms::{class_number_fundamental, hplus, hstar, hurwitz, regulator};
use sesqui::shiftedconv::{d_series_truncated, fit_exponent, partial_sums, svg_plot};
use sesqui::{DirichletCharacter, Error, Rational};

#[derive(Parser, Serialize)]
#[command(
    name = "sesqui",
    version,
    about = "Class numbers, q-series and holomorphic projection of sesquiharmonic forms"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize)]
struct Global {
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Output file; a `.manifest.json` is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for batches of independent coefficients.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print rationals as `p/q`.
    #[arg(long, global = true)]
    exact: bool,
    /// Also write a plot (shifted-sum and rchi).
    #[arg(long, global = true, value_enum)]
    plot: Option<Plot>,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Hurwitz class number H(n), or a range of them.
    Hurwitz {
        #[arg(long)]
        n: u64,
        /// Last n of a range starting at --n.
        #[arg(long)]
        to: Option<u64>,
    },
    /// Class number of a negative fundamental discriminant.
    Classno {
        #[arg(long, allow_hyphen_values = true)]
        d: i64,
    },
    /// Regulator 2 log ε of a positive discriminant.
    Regulator {
        #[arg(long)]
        d: u64,
    },
    /// Narrow class number of a positive discriminant.
    Hplus {
        #[arg(long)]
        d: u64,
    },
    /// General Hurwitz function h*(d).
    Hstar {
        #[arg(long)]
        d: u64,
    },
    /// Theta series Σ 2χ(m) m^ν q^{m²}.
    Theta {
        #[arg(long = "char", allow_hyphen_values = true)]
        character: String,
        /// Precision: coefficients of q^0..q^n.
        #[arg(long)]
        n: usize,
    },
    /// Eta quotient expansion, by name (f1, f2, f3) or as `t:r,t:r,...`.
    Eta {
        #[arg(long, conflicts_with = "factors")]
        form: Option<BasisForm>,
        #[arg(long, allow_hyphen_values = true)]
        factors: Option<String>,
        #[arg(long)]
        n: usize,
    },
    /// Projected coefficients r_χ(h) with their four pieces.
    Rchi {
        #[arg(long, conflicts_with = "hmax")]
        h: Option<u64>,
        /// Compute h = 1..hmax.
        #[arg(long)]
        hmax: Option<u64>,
        #[command(flatten)]
        proj: ProjectionArgs,
    },
    /// General projection of Z·θ_χ through the four-piece formula.
    Project {
        #[arg(long)]
        hmax: u64,
        #[command(flatten)]
        proj: ProjectionArgs,
    },
    /// Solve projected coefficients on the basis f1, f2, f3 of S_2(Γ0(64)).
    Decompose {
        #[arg(long, value_enum, default_value = "rchi")]
        target: Target,
        /// Coefficients r(1..hmax) used for the residual scan.
        #[arg(long, default_value_t = 100)]
        hmax: u64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u64, 2, 5])]
        pivots: Vec<u64>,
        /// Tolerance for the arithmetic pattern checks.
        #[arg(long, default_value_t = 1e-2)]
        pattern_tol: f64,
        #[command(flatten)]
        proj: ProjectionArgs,
    },
    /// Partial sums S(m) = Σ H(k²−h)·k·χ(k) and their growth exponent.
    ShiftedSum {
        #[arg(long)]
        h: u64,
        #[arg(long = "char", allow_hyphen_values = true, default_value = "kronecker:-4")]
        character: String,
        #[arg(long, default_value_t = 10_000)]
        m_max: u64,
        /// Trailing points used in the exponent fit.
        #[arg(long, default_value_t = 5_000)]
        window: usize,
    },
    /// Truncated shifted-convolution Dirichlet series D_h(s), s > 1.
    Dseries {
        #[arg(long)]
        h: u64,
        #[arg(long = "char", allow_hyphen_values = true, default_value = "kronecker:-4")]
        character: String,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 10_000)]
        m_max: u64,
    },
    /// Run the oracle suite; nonzero exit on any failure.
    Selftest {
        /// Smaller exhaustive ranges.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Args, Serialize, Clone)]
struct ProjectionArgs {
    #[arg(long = "char", allow_hyphen_values = true, default_value = "kronecker:-4")]
    character: String,
    /// Harmonic tail length M.
    #[arg(long, default_value_t = projection::DEFAULT_TRUNCATION)]
    terms: u64,
    #[arg(long, value_enum, default_value = "pairing")]
    accel: AccelArg,
    #[arg(long, value_enum, default_value = "log-h")]
    log_variant: LogArg,
    #[arg(long, value_enum, default_value = "absolute")]
    tail_range: TailArg,
    #[arg(long, value_enum, default_value = "derived")]
    prefactor: PrefactorArg,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum AccelArg {
    None,
    Pairing,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum LogArg {
    LogH,
    LogSqrtH,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TailArg {
    Absolute,
    Shifted,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum PrefactorArg {
    Derived,
    Printed,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum BasisForm {
    F1,
    F2,
    F3,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Target {
    Rchi,
    Project,
}

impl ProjectionArgs {
    fn config(&self) -> ProjectionConfig {
        ProjectionConfig::default()
            .with_truncation(self.terms)
            .with_acceleration(match self.accel {
                AccelArg::None => Acceleration::None,
                AccelArg::Pairing => Acceleration::Pairing,
            })
            .with_log_variant(match self.log_variant {
                LogArg::LogH => LogVariant::LogH,
                LogArg::LogSqrtH => LogVariant::LogSqrtH,
            })
            .with_tail_range(match self.tail_range {
                TailArg::Absolute => TailRange::Absolute,
                TailArg::Shifted => TailRange::Shifted,
            })
            .with_prefactor(match self.prefactor {
                PrefactorArg::Derived => HarmonicPrefactor::Derived,
                PrefactorArg::Printed => HarmonicPrefactor::Printed,
            })
    }

    fn character(&self) -> Result<DirichletCharacter> {
        Ok(self.character.parse()?)
    }
}

fn fmt_rational(r: &Rational, exact: bool) -> String {
    if exact {
        format!("{}/{}", r.numer(), r.denom())
    } else {
        format!("{}", r.to_f64().unwrap_or(f64::NAN))
    }
}

fn series_body(f: &PowerSeries, format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            f.write_csv(&mut buf)?;
            Ok(String::from_utf8(buf)?)
        }
        Format::Json => {
            let coeffs: Vec<Value> = match f.coefficients() {
                Coefficients::Exact(v) => v.iter().map(|c| Value::String(c.to_string())).collect(),
                Coefficients::Float(v) => v.iter().map(|c| json!(c)).collect(),
            };
            Ok(serde_json::to_string_pretty(&json!({ "precision": f.precision(), "coefficients": coeffs }))? + "\n")
        }
    }
}

fn breakdown_body(rows: &[RChiBreakdown], format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            projection::write_csv(rows, &mut buf)?;
            Ok(String::from_utf8(buf)?)
        }
        Format::Json => Ok(serde_json::to_string_pretty(rows)? + "\n"),
    }
}

fn scalar_body(name: &str, key: &str, arg: Value, value: String, format: Format) -> Result<String> {
    Ok(match format {
        Format::Csv => format!("{value}\n"),
        Format::Json => serde_json::to_string_pretty(&json!({ key: arg, name: value }))? + "\n",
    })
}

fn rchi_rows(hs: &[u64], proj: &ProjectionArgs) -> Result<Vec<RChiBreakdown>> {
    Ok(r_chi_many(hs, &proj.character()?, &proj.config())?)
}

fn project_rows(hmax: u64, proj: &ProjectionArgs) -> Result<Vec<RChiBreakdown>> {
    let cfg = proj.config();
    let chi = proj.character()?;
    let end = (1..=hmax).map(|h| cfg.tail_end(h)).max().unwrap_or(1);
    let z = z_coefficients(hmax, end.saturating_mul(end))?;
    let g = CuspCoefficients::theta(&chi, end);
    Ok(project_general_breakdown(&z, &g, hmax, &cfg)?)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let g = &cli.global;
    if let Some(t) = g.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global()?;
    }
    let sink = Sink::new(g.out.clone());
    let params = serde_json::to_value(&cli.command)?;
    let (name, params) = match params {
        Value::Object(mut m) if m.len() == 1 => {
            let (k, v) = m.iter_mut().next().map(|(k, v)| (k.clone(), v.take())).unwrap();
            (k, v)
        }
        Value::String(s) => (s, Value::Null),
        other => ("unknown".to_string(), other),
    };
    let wants_plot = g.plot.is_some();
    if wants_plot && !matches!(cli.command, Command::Rchi { .. } | Command::ShiftedSum { .. }) {
        bail!(UsageError("--plot is only available for rchi and shifted-sum".into()));
    }
    let mut truncation = None;
    let mut svg = None;
    let body = match &cli.command {
        Command::Hurwitz { n, to } => match to {
            None => scalar_body("value", "n", json!(n), fmt_rational(&hurwitz(*n)?, g.exact), g.format)?,
            Some(to) => {
                if to < n {
                    bail!(UsageError(format!("--to {to} is below --n {n}")));
                }
                let rows: Vec<(u64, String)> =
                    (*n..=*to).map(|k| Ok((k, fmt_rational(&hurwitz(k)?, g.exact)))).collect::<Result<_>>()?;
                match g.format {
                    Format::Csv => rows.iter().fold("n,H\n".to_string(), |mut s, (k, v)| {
                        let _ = writeln!(s, "{k},{v}");
                        s
                    }),
                    Format::Json => {
                        let v: Vec<Value> = rows.iter().map(|(k, v)| json!({"n": k, "value": v})).collect();
                        serde_json::to_string_pretty(&v)? + "\n"
                    }
                }
            }
        },
        Command::Classno { d } => {
            scalar_body("value", "d", json!(d), class_number_fundamental(*d)?.to_string(), g.format)?
        }
        Command::Regulator { d } => scalar_body("value", "d", json!(d), format!("{:?}", regulator(*d)?), g.format)?,
        Command::Hplus { d } => scalar_body("value", "d", json!(d), hplus(*d)?.to_string(), g.format)?,
        Command::Hstar { d } => scalar_body("value", "d", json!(d), format!("{:?}", hstar(*d)?), g.format)?,
        Command::Theta { character, n } => {
            let chi: DirichletCharacter = character.parse()?;
            series_body(&theta_series(&chi, *n), g.format)?
        }
        Command::Eta { form, factors, n } => {
            let f = match (form, factors) {
                (Some(BasisForm::F1), _) => eta_quotient(&f1_spec(), *n)?,
                (Some(BasisForm::F2), _) => eta_quotient(&f2_spec(), *n)?,
                (Some(BasisForm::F3), _) => {
                    let [_, _, f3] = basis_s2_64(*n)?;
                    f3
                }
                (None, Some(spec)) => eta_quotient(&parse_eta(spec)?, *n)?,
                (None, None) => bail!(UsageError("eta needs --form or --factors".into())),
            };
            series_body(&f, g.format)?
        }
        Command::Rchi { h, hmax, proj } => {
            let hs: Vec<u64> = match (h, hmax) {
                (Some(h), None) => vec![*h],
                (None, Some(k)) => (1..=*k).collect(),
                _ => bail!(UsageError("rchi needs --h or --hmax".into())),
            };
            let rows = rchi_rows(&hs, proj)?;
            truncation = Some(serde_json::to_value(proj.config())?);
            if wants_plot {
                let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h as f64, r.total)).collect();
                svg = Some(svg_plot(&format!("r_chi(h), chi = {}", proj.character), "h", &[("r(h)", pts)]));
            }
            breakdown_body(&rows, g.format)?
        }
        Command::Project { hmax, proj } => {
            let rows = project_rows(*hmax, proj)?;
            truncation = Some(serde_json::to_value(proj.config())?);
            breakdown_body(&rows, g.format)?
        }
        Command::Decompose { target, hmax, pivots, pattern_tol, proj } => {
            let rows = match target {
                Target::Rchi => rchi_rows(&(1..=*hmax).collect::<Vec<_>>(), proj)?,
                Target::Project => project_rows(*hmax, proj)?,
            };
            truncation = Some(serde_json::to_value(proj.config())?);
            let values: BTreeMap<u64, f64> = rows.iter().map(|r| (r.h, r.total)).collect();
            let rv: BTreeMap<u64, RValue> =
                rows.iter().map(|r| (r.h, RValue { value: r.total, uncertainty: r.uncertainty })).collect();
            let basis = basis_s2_64(*hmax as usize)?;
            let solve = solve_on_basis(&values, &basis, pivots)?;
            let patterns = arithmetic_patterns(&rv, *pattern_tol);
            let report = DecompositionReport::new(&solve, &patterns);
            match g.format {
                Format::Json => report.to_json()? + "\n",
                Format::Csv => {
                    let mut s = String::from("name,value\n");
                    for (i, x) in report.coefficients.iter().enumerate() {
                        let _ = writeln!(s, "x{},{x:?}", i + 1);
                    }
                    let _ = writeln!(s, "residual_max,{:?}", report.residual_max);
                    let _ = writeln!(s, "residual_index,{}", report.residual_index);
                    let _ = writeln!(s, "condition_number,{:?}", solve.condition_number);
                    let _ = writeln!(s, "pattern_violations,{}", report.pattern_violations.len());
                    s
                }
            }
        }
        Command::ShiftedSum { h, character, m_max, window } => {
            let chi: DirichletCharacter = character.parse()?;
            let series = partial_sums(*h, &chi, *m_max)?;
            let fit = fit_exponent(&series, *window).ok();
            if let Some((c, se)) = fit {
                eprintln!("fitted exponent {c:.4} ± {se:.4}");
            }
            if wants_plot {
                svg = Some(series.svg());
            }
            match g.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    series.write_csv(&mut buf)?;
                    String::from_utf8(buf)?
                }
                Format::Json => {
                    let rows: Vec<Value> = series
                        .rows
                        .iter()
                        .map(|r| {
                            json!({
                                "m": r.m,
                                "S_exact": format!("{}/{}", r.s.numer(), r.s.denom()),
                                "S_float": r.s_float,
                                "normalized_54": r.normalized(1.25),
                                "normalized_32": r.normalized(1.5),
                            })
                        })
                        .collect();
                    let fit = fit.map(|(c, se)| json!({"exponent": c, "stderr": se}));
                    serde_json::to_string_pretty(&json!({"h": h, "fit": fit, "rows": rows}))? + "\n"
                }
            }
        }
        Command::Dseries { h, character, s, m_max } => {
            let chi: DirichletCharacter = character.parse()?;
            let v = d_series_truncated(*h, &chi, *s, *m_max)?;
            match g.format {
                Format::Csv => {
                    format!("h,s,m_max,value,tail_bound\n{h},{s:?},{m_max},{:?},{:?}\n", v.value, v.tail_bound)
                }
                Format::Json => {
                    serde_json::to_string_pretty(
                        &json!({"h": h, "s": s, "m_max": m_max, "value": v.value, "tail_bound": v.tail_bound}),
                    )? + "\n"
                }
            }
        }
        Command::Selftest { quick } => {
            let checks = sesqui::selftest::run(*quick);
            let failed = checks.iter().filter(|c| !c.passed).count();
            let body = match g.format {
                Format::Csv => checks.iter().fold("check,passed,detail\n".to_string(), |mut s, c| {
                    let _ = writeln!(s, "{},{},\"{}\"", c.name, c.passed, c.detail.replace('"', "'"));
                    s
                }),
                Format::Json => serde_json::to_string_pretty(&checks)? + "\n",
            };
            sink.emit(&name, params, None, &body, None)?;
            return Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(3) });
        }
    };
    sink.emit(&name, params, truncation, &body, svg)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_eta(spec: &str) -> Result<EtaQuotientSpec> {
    let factors = spec
        .split(',')
        .map(|p| {
            let (t, r) = p.split_once(':').ok_or_else(|| UsageError(format!("eta factor {p:?} is not t:r")))?;
            let t: u32 = t.trim().parse().map_err(|_| UsageError(format!("bad level {t:?}")))?;
            let r: i32 = r.trim().parse().map_err(|_| UsageError(format!("bad exponent {r:?}")))?;
            Ok((t, r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EtaQuotientSpec::new(factors)?)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Convergence(_)) => 3,
        Some(Error::Io(_)) | None => 1,
        Some(Error::Parse(_)) => 1,
        Some(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = run(&cli).and_then(|code| {
        sesqui::quadforms::global_cache().flush()?;
        Ok(code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
