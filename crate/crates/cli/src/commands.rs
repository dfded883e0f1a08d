//! Command handlers. Each returns the rendered output and whether every
//! mathematical check passed.

use std::path::Path;

use anyhow::{bail, Context, Result};
use bvgamma_core::bounds::{self, BoundReport};
use bvgamma_core::energy::{
    self, format_value, lambda_quad, lambda_step, profile_total_variation, LambdaQuadConfig, Linear, Profile,
    SineBump, SweepRow,
};
use bvgamma_core::interaction::default_probe_grid;
use bvgamma_core::minprob::{minimize, MinProblem, MinimizeConfig, DEFAULT_SEED};
use bvgamma_core::verify::{run_suite, Suite, SuiteConfig};
use bvgamma_core::{parse_law_spec, InteractionLaw, Interval, StepFunction};
use serde::Serialize;
use serde_json::json;

use crate::params::{int_list, real_list, Params};

pub struct Outcome {
    pub body: String,
    pub passed: bool,
    /// Serialized failing case, reported on stderr.
    pub witness: Option<String>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self {
            body,
            passed: true,
            witness: None,
        }
    }
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn json_text<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn num(x: f64) -> String {
    format_value(x)
}

fn law_of(p: &Params) -> Result<InteractionLaw> {
    let spec = p.law.as_deref().context("missing law specification (--law / --spec)")?;
    Ok(parse_law_spec(spec)?)
}

fn seed(p: &Params) -> u64 {
    p.seed.unwrap_or(DEFAULT_SEED)
}

pub fn law(p: &Params, json_out: bool) -> Result<Outcome> {
    let law = law_of(p)?;
    let t_max = p.t_max.unwrap_or(4.0);
    let report = p
        .report
        .clone()
        .unwrap_or_else(|| if p.probe.is_some() { "table" } else { "summary" }.into());
    match report.to_ascii_lowercase().as_str() {
        "n" => {
            let sf = law.scale_factor()?;
            let exact = law.scale_factor_exact().map(|r| r.to_string());
            if json_out {
                return Ok(Outcome::ok(json_text(&json!({
                    "law": law.label(),
                    "N": sf.value,
                    "N_exact": exact,
                    "method": sf.method,
                    "error_estimate": sf.error_estimate,
                }))?));
            }
            Ok(Outcome::ok(csv_text(
                &["N_exact", "N", "method"],
                vec![vec![
                    exact.unwrap_or_default(),
                    num(sf.value),
                    format!("{:?}", sf.method).to_lowercase(),
                ]],
            )?))
        }
        "table" => {
            let ts = match &p.probe {
                Some(t) => real_list(&t.0)?,
                None => default_probe_grid(t_max),
            };
            let rows: Vec<(f64, f64)> = ts.iter().map(|&t| (t, law.evaluate(t))).collect();
            if json_out {
                let v: Vec<_> = rows.iter().map(|(t, v)| json!({"t": t, "phi": v})).collect();
                return Ok(Outcome::ok(json_text(&v)?));
            }
            Ok(Outcome::ok(csv_text(
                &["t", "phi"],
                rows.iter().map(|(t, v)| vec![num(*t), num(*v)]).collect(),
            )?))
        }
        "admissibility" | "summary" => {
            let adm = law.check_admissible(&default_probe_grid(t_max))?;
            let passed = adm.is_admissible();
            let sf = law.scale_factor()?;
            let exact = law.scale_factor_exact().map(|r| r.to_string());
            let body = if json_out {
                let mut v = json!({
                    "law": law.label(),
                    "N": sf.value,
                    "N_exact": exact,
                    "method": sf.method,
                    "admissible": passed,
                    "monotone": adm.monotone,
                    "quadratic_at_origin": adm.quadratic_at_origin,
                    "bounded": adm.bounded,
                    "a": adm.a,
                    "b": adm.b,
                });
                if report == "admissibility" {
                    v["grid_points"] = json!(adm.grid.len());
                }
                json_text(&v)?
            } else {
                let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
                let mut rows = vec![
                    vec!["law".into(), law.label()],
                    vec!["N".into(), num(sf.value)],
                    vec!["N_exact".into(), exact.unwrap_or_default()],
                    vec!["N_method".into(), format!("{:?}", sf.method).to_lowercase()],
                    vec!["admissible".into(), passed.to_string()],
                ];
                for (name, c) in [
                    ("monotone", &adm.monotone),
                    ("quadratic_at_origin", &adm.quadratic_at_origin),
                    ("bounded", &adm.bounded),
                ] {
                    rows.push(vec![name.into(), format!("{} ({})", c.pass, c.detail)]);
                }
                rows.push(vec!["a".into(), opt(adm.a)]);
                rows.push(vec!["b".into(), opt(adm.b)]);
                csv_text(&["quantity", "value"], rows)?
            };
            let witness = (!passed).then(|| serde_json::to_string(&adm).unwrap_or_default());
            Ok(Outcome { body, passed, witness })
        }
        other => bail!("unknown report `{other}` (summary, n, table, admissibility)"),
    }
}

pub fn minprob(p: &Params, json_out: bool) -> Result<Outcome> {
    let law = law_of(p)?;
    let ns = int_list::<usize>(&p.n.as_ref().context("missing --n")?.0)?;
    let defaults = MinimizeConfig::default();
    let cfg = MinimizeConfig {
        starts: p.starts.unwrap_or(defaults.starts),
        seed: seed(p),
        max_iters: p.max_iters.unwrap_or(defaults.max_iters),
        pattern_period_cap: p.pattern_period_cap.unwrap_or(defaults.pattern_period_cap),
        polish: true,
    };
    let mut results = Vec::with_capacity(ns.len());
    for &n in &ns {
        let pb = MinProblem::new(&law, n)?;
        results.push(minimize(&pb, &cfg));
    }
    if json_out {
        return Ok(Outcome::ok(json_text(&json!({
            "law": law.label(),
            "config": cfg,
            "results": results,
        }))?));
    }
    let dump = p.dump_minimizer.unwrap_or(false);
    let mut header = vec!["n", "value", "value_over_n", "winner"];
    if dump {
        header.push("minimizer");
    }
    let rows = results
        .iter()
        .map(|r| {
            let mut row = vec![
                r.n.to_string(),
                num(r.value),
                num(r.value / r.n as f64),
                r.winner.clone(),
            ];
            if dump {
                row.push(r.minimizer.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" "));
            }
            row
        })
        .collect();
    Ok(Outcome::ok(csv_text(&header, rows)?))
}

pub fn verify(p: &Params, json_out: bool) -> Result<Outcome> {
    let suite: Suite = p.suite.as_deref().context("missing suite name")?.parse()?;
    let default_count = match suite {
        Suite::Telescope | Suite::Domination => 10_000,
        Suite::Rearrange => 1_000,
        Suite::Chain => 500,
    };
    let cfg = SuiteConfig {
        count: p.count.unwrap_or(default_count),
        seed: seed(p),
        tolerance: p.tolerance.unwrap_or(1e-10),
    };
    let r = run_suite(suite, &cfg)?;
    let body = if json_out {
        json_text(&r)?
    } else {
        csv_text(
            &["suite", "count", "seed", "min_margin", "finite_cases", "failures", "passed"],
            vec![vec![
                r.suite.to_string(),
                r.count.to_string(),
                r.seed.to_string(),
                num(r.min_margin),
                r.finite_cases.to_string(),
                r.failures.to_string(),
                r.passed.to_string(),
            ]],
        )?
    };
    let witness = (!r.passed).then(|| r.witness.as_ref().map(|w| w.to_string()).unwrap_or_default());
    Ok(Outcome {
        body,
        passed: r.passed,
        witness,
    })
}

fn report_rows(reports: &[BoundReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| {
            let chain: Vec<String> = r.chain.iter().map(|c| format!("{}={}", c.step, num(c.constant))).collect();
            vec![
                r.law.clone(),
                num(r.scale_factor),
                r.scale_factor_exact.clone().unwrap_or_default(),
                num(r.gamma_factor),
                num(r.k_lower),
                format!("{:?}", r.method).to_lowercase(),
                chain.join("; "),
            ]
        })
        .collect()
}

fn reports_text(reports: &[BoundReport], json_out: bool) -> Result<String> {
    if json_out {
        return json_text(&reports);
    }
    csv_text(
        &["law", "N", "N_exact", "gamma", "K_lower", "method", "chain"],
        report_rows(reports),
    )
}

pub fn bounds(p: &Params, json_out: bool) -> Result<Outcome> {
    let target = p.target.as_deref().context("missing bounds target")?;
    match target {
        "psi" => {
            let ms = int_list::<u32>(p.m.as_ref().map(|t| t.0.as_str()).unwrap_or("1..12"))?;
            if json_out {
                let reports: Vec<BoundReport> = ms.iter().map(|&m| bounds::psi_bound(m)).collect::<Result<_, _>>()?;
                return Ok(Outcome::ok(json_text(&reports)?));
            }
            let rows = bounds::psi_table(ms)?;
            let mut buf = Vec::new();
            bounds::write_psi_csv(&rows, &mut buf)?;
            Ok(Outcome::ok(String::from_utf8(buf)?))
        }
        "theta" => {
            let r = bounds::theta_bound(p.m_cap.unwrap_or(8))?;
            Ok(Outcome::ok(reports_text(&[r], json_out)?))
        }
        "zeta" => {
            let path = p.sequence.as_ref().context("zeta bound needs --sequence FILE")?;
            let law = parse_law_spec(&format!("zeta:@{}", path.display()))?;
            let InteractionLaw::DyadicAffine { sequence } = &law else {
                unreachable!("zeta spec yields a dyadic law")
            };
            let r = bounds::zeta_bound(sequence, &default_probe_grid(64.0))?;
            Ok(Outcome::ok(reports_text(&[r], json_out)?))
        }
        "law" => {
            let law = law_of(p)?;
            let defaults = MinimizeConfig::default();
            let cfg = MinimizeConfig {
                starts: p.starts.unwrap_or(16),
                seed: seed(p),
                max_iters: p.max_iters.unwrap_or(defaults.max_iters),
                pattern_period_cap: p.pattern_period_cap.unwrap_or(defaults.pattern_period_cap),
                polish: true,
            };
            let r = bounds::shape_bound(&law, p.n_max.unwrap_or(16), &cfg)?;
            Ok(Outcome::ok(reports_text(&[r], json_out)?))
        }
        "counterexample" => {
            let c = bounds::counterexample_table(p.eps.unwrap_or(0.01))?;
            let passed = c.min_gap_on_unit > 0.0 && c.strict_gap > 0.0;
            let body = if json_out {
                json_text(&c)?
            } else {
                csv_text(
                    &["quantity", "value"],
                    vec![
                        vec!["c2".into(), c.c2.clone()],
                        vec!["psi_K_lower".into(), num(c.psi_k_lower)],
                        vec!["eps".into(), num(c.eps)],
                        vec!["phi_eps_N".into(), num(c.phi_eps_scale_factor)],
                        vec!["min_gap_on_unit".into(), num(c.min_gap_on_unit)],
                        vec!["claimed_phi_eps_limit".into(), num(c.claimed_phi_eps_limit)],
                        vec!["strict_gap".into(), num(c.strict_gap)],
                    ],
                )?
            };
            Ok(Outcome {
                body,
                passed,
                witness: (!passed).then(|| serde_json::to_string(&c).unwrap_or_default()),
            })
        }
        other => bail!("unknown bounds target `{other}` (psi, theta, zeta, law, counterexample)"),
    }
}

fn profile(name: &str) -> Result<(Box<dyn Profile + Sync>, Interval)> {
    let unit = Interval::new(0.0, 1.0)?;
    match name {
        "bump" => Ok((Box::new(SineBump::unit()), unit)),
        "linear" => Ok((
            Box::new(Linear {
                slope: 1.0,
                intercept: 0.0,
            }),
            unit,
        )),
        other => bail!("unknown profile `{other}` (bump, linear)"),
    }
}

fn read_step_function(path: &Path) -> Result<StepFunction> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read `{}`", path.display()))?;
    let u = if path.extension().is_some_and(|e| e == "json") {
        StepFunction::from_json(&text)?
    } else {
        StepFunction::from_csv(text.as_bytes())?
    };
    Ok(u)
}

pub fn energy(p: &Params, json_out: bool) -> Result<Outcome> {
    let mode = p.mode.as_deref().context("missing energy mode")?;
    match mode {
        "pointwise" => {
            let law = law_of(p)?;
            let (u, domain) = profile(p.u.as_deref().unwrap_or("bump"))?;
            let deltas = real_list(p.deltas.as_ref().map(|t| t.0.as_str()).unwrap_or("1e-1..1e-3"))?;
            let cfg = LambdaQuadConfig {
                tol: p.tolerance.unwrap_or(LambdaQuadConfig::default().tol),
                ..Default::default()
            };
            let reference = 2.0 * law.scale_factor()?.value * profile_total_variation(u.as_ref(), domain);
            let mut rows = Vec::with_capacity(deltas.len());
            for &delta in &deltas {
                let result = lambda_quad(&law, u.as_ref(), domain, delta, &cfg)?;
                rows.push(SweepRow {
                    delta,
                    result,
                    ratio: Some(result.value / reference),
                });
            }
            if json_out {
                let v: Vec<_> = rows
                    .iter()
                    .map(|r| json!({"delta": r.delta, "result": r.result, "ratio": r.ratio}))
                    .collect();
                return Ok(Outcome::ok(json_text(&json!({"reference": reference, "rows": v}))?));
            }
            let mut buf = Vec::new();
            energy::write_sweep_csv(&rows, &mut buf)?;
            Ok(Outcome::ok(String::from_utf8(buf)?))
        }
        "step" => {
            let law = law_of(p)?;
            let path = p.u.as_deref().context("step energy needs --u FILE (csv or json)")?;
            let u = read_step_function(Path::new(path))?;
            let deltas = match (&p.deltas, p.delta) {
                (Some(t), _) => real_list(&t.0)?,
                (None, Some(d)) => vec![d],
                (None, None) => bail!("step energy needs --delta or --deltas"),
            };
            let rows: Vec<SweepRow> = deltas
                .iter()
                .map(|&delta| {
                    lambda_step(&law, &u, delta).map(|result| SweepRow {
                        delta,
                        result,
                        ratio: None,
                    })
                })
                .collect::<Result<_, _>>()?;
            if json_out {
                let v: Vec<_> = rows.iter().map(|r| json!({"delta": r.delta, "result": r.result})).collect();
                return Ok(Outcome::ok(json_text(&v)?));
            }
            let mut buf = Vec::new();
            energy::write_sweep_csv(&rows, &mut buf)?;
            Ok(Outcome::ok(String::from_utf8(buf)?))
        }
        "geometric" => {
            let ds = int_list::<u32>(p.d.as_ref().map(|t| t.0.as_str()).unwrap_or("1..4"))?;
            let samples = p.samples.unwrap_or(1_000_000);
            let mut rows = Vec::with_capacity(ds.len());
            for &d in &ds {
                let g = energy::geometric_constant(d, samples, seed(p))?;
                rows.push((d, g, closed_form_g(d)));
            }
            if json_out {
                let v: Vec<_> = rows
                    .iter()
                    .map(|(d, g, c)| json!({"d": d, "result": g, "closed_form": c}))
                    .collect();
                return Ok(Outcome::ok(json_text(&v)?));
            }
            Ok(Outcome::ok(csv_text(
                &["d", "G", "method", "error_estimate", "closed_form"],
                rows.iter()
                    .map(|(d, g, c)| {
                        vec![
                            d.to_string(),
                            num(g.value),
                            g.method.to_string(),
                            num(g.error_estimate),
                            num(*c),
                        ]
                    })
                    .collect(),
            )?))
        }
        other => bail!("unknown energy mode `{other}` (pointwise, step, geometric)"),
    }
}

/// `2 omega_{d-1}`, twice the volume of the unit ball in `R^{d-1}`.
fn closed_form_g(d: u32) -> f64 {
    if d <= 1 {
        return 2.0;
    }
    2.0 * energy::sphere_area(d - 1) / (d - 1) as f64
}
