//! Dispatches a validated config to the estimators and shapes the outputs.

use mdim_core::counting::{entropy_curve_with, EpsTail};
use mdim_core::dimensions::{
    entdim_estimate, estimate_from_tails, local_mdim_estimate, mdim_estimate, power_rule_experiment, product_experiment,
    DimensionEstimate, MIN_SCALES,
};
use mdim_core::group_actions::{folner_defect, two_sided_defect, GroupElement, ScheduleKind};
use mdim_core::measures::{brin_katok_estimate, katok_entropy_with};
use mdim_core::metric_spaces::{box_dimension, lsq_slope};
use mdim_core::pressure::{pressure_curve, pressure_mdim_from_curve};
use mdim_core::rate_distortion::{rd_at_epsilon, rd_inequality_suite, BaOptions, RdConstraint, RD_CSV_HEADER};
use mdim_core::shift_systems::{BowenContext, Configuration};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Quantity};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub upper: f64,
    pub lower: f64,
    pub payload: Value,
    pub csv: String,
    /// A built-in inequality check of the quantity failed.
    pub check_failed: bool,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("estimates serialize")
}

fn payload(cfg: &ExperimentConfig, fields: Value) -> Value {
    let mut p = json!({
        "quantity": cfg.quantity.name(),
        "library_version": env!("CARGO_PKG_VERSION"),
    });
    if let (Value::Object(p), Value::Object(f)) = (&mut p, fields) {
        p.extend(f);
        if let Some((lo, hi)) = cfg.faithful_eps_window() {
            p.insert("faithful_eps_window".into(), json!([lo, hi]));
        }
    }
    p
}

fn tails_csv(parts: &[(&str, &[EpsTail])]) -> String {
    let mut out = String::from("series,epsilon,tail_max,tail_min\n");
    for (name, tails) in parts {
        for t in *tails {
            out.push_str(&format!("{name},{:.16e},{:.16e},{:.16e}\n", t.epsilon, t.tail_max, t.tail_min));
        }
    }
    out
}

fn dim_outcome(cfg: &ExperimentConfig, est: DimensionEstimate, extra: Value, csv: String) -> Outcome {
    let mut fields = json!({ "estimate": to_value(&est) });
    if let (Value::Object(f), Value::Object(e)) = (&mut fields, extra) {
        f.extend(e);
    }
    Outcome {
        upper: est.upper,
        lower: est.lower,
        payload: payload(cfg, fields),
        csv,
        check_failed: false,
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let eps = cfg.eps();
    let n_grid = &cfg.n_grid;
    let opts = cfg.curve_options();
    match cfg.quantity {
        Quantity::Boxdim => {
            let b = box_dimension(&cfg.alphabet()?, &eps)?;
            let mut csv = String::from("epsilon,log_covering\n");
            for (e, l) in &b.curve {
                csv.push_str(&format!("{e:.16e},{l:.16e}\n"));
            }
            Ok(Outcome {
                upper: b.upper_slope,
                lower: b.lower_slope,
                payload: payload(cfg, json!({ "estimate": to_value(&b) })),
                csv,
                check_failed: false,
            })
        }
        Quantity::Mdim | Quantity::Smdim | Quantity::Localmdim | Quantity::Entdim => {
            let sys = cfg.system()?;
            let sched = cfg.schedule()?;
            let pins = cfg.pins()?;
            if cfg.quantity == Quantity::Localmdim {
                let est = local_mdim_estimate(&sys, &pins, &sched, &eps, n_grid, &opts)
                    .map_err(|e| CliError::at("params.constraints", e))?;
                let curve = entropy_curve_with(&sys, &sched, &eps, n_grid, &opts, &pins)?;
                let csv = curve.to_csv();
                return Ok(dim_outcome(cfg, est, json!({ "curve": to_value(&curve) }), csv));
            }
            let curve = entropy_curve_with(&sys, &sched, &eps, n_grid, &opts, &pins)?;
            let csv = curve.to_csv();
            if cfg.quantity == Quantity::Entdim {
                let s_grid = cfg
                    .params
                    .s_grid
                    .clone()
                    .unwrap_or_else(|| (1..=20).map(|k| k as f64 * 0.05).collect());
                let ent = entdim_estimate(&curve, &s_grid).map_err(|e| CliError::at("params.s_grid", e))?;
                return Ok(Outcome {
                    upper: ent.transition_hi,
                    lower: ent.transition_lo,
                    payload: payload(cfg, json!({ "estimate": to_value(&ent), "curve": to_value(&curve) })),
                    csv,
                    check_failed: false,
                });
            }
            let s = if cfg.quantity == Quantity::Smdim { cfg.params.s.expect("validated") } else { 1.0 };
            let est = mdim_estimate(&curve, s).map_err(|e| CliError::at("eps_grid", e))?;
            Ok(dim_outcome(cfg, est, json!({ "curve": to_value(&curve) }), csv))
        }
        Quantity::Katok => {
            let sys = cfg.system()?;
            let sched = cfg.schedule()?;
            let mu = cfg.measure();
            let delta = cfg.params.delta.unwrap_or(0.05);
            let orbit = cfg.params.orbit.unwrap_or_default();
            let per_eps = eps
                .iter()
                .map(|&e| katok_entropy_with(&mu, &sys, &sched, n_grid, e, delta, orbit, &opts.caps))
                .collect::<Result<Vec<_>, _>>()?;
            let tails: Vec<EpsTail> = per_eps.iter().map(|k| k.tail(opts.tail_fraction)).collect();
            let mut csv = String::from("epsilon,delta,n,folner_size,log_r,normalized,lower_bound,method\n");
            for k in &per_eps {
                for r in &k.per_n {
                    csv.push_str(&format!(
                        "{:.16e},{},{},{},{:.16e},{:.16e},{},{}\n",
                        k.epsilon,
                        k.delta,
                        r.n,
                        r.folner_size,
                        r.log_r,
                        r.normalized,
                        r.lower_bound.map_or(String::new(), |v| format!("{v:.16e}")),
                        to_value(&r.method).as_str().unwrap_or_default()
                    ));
                }
            }
            let extra = json!({ "katok": to_value(&per_eps) });
            if tails.len() >= MIN_SCALES {
                let est = estimate_from_tails(&tails, 1.0, 1.0 / 3.0).map_err(|e| CliError::at("eps_grid", e))?;
                return Ok(dim_outcome(cfg, est, extra, csv));
            }
            let last = tails.last().expect("non-empty grid");
            Ok(Outcome {
                upper: last.tail_max,
                lower: last.tail_min,
                payload: payload(cfg, extra),
                csv,
                check_failed: false,
            })
        }
        Quantity::Brinkatok => {
            let sys = cfg.system()?;
            let sched = cfg.schedule()?;
            let mu = cfg.measure();
            let x = cfg
                .params
                .point
                .clone()
                .unwrap_or_else(|| Configuration::constant(cfg.system.rank));
            let orbit = cfg.params.orbit.unwrap_or_default();
            let mut rows = Vec::new();
            for &e in &eps {
                for &n in n_grid {
                    let ctx = BowenContext::new(&sys, sched.set(n)?, orbit)?;
                    rows.push((e, brin_katok_estimate(&mu, &ctx, &x, e).map_err(|err| CliError::at("params", err))?));
                }
            }
            let mut csv = String::from("epsilon,n,folner_size,value_lower,value_upper,method\n");
            for (e, r) in &rows {
                csv.push_str(&format!(
                    "{e:.16e},{},{},{:.16e},{},{}\n",
                    r.n,
                    r.folner_size,
                    r.value_lower,
                    r.value_upper.map_or(String::new(), |v| format!("{v:.16e}")),
                    to_value(&r.method).as_str().unwrap_or_default()
                ));
            }
            let (_, last) = rows.last().expect("non-empty grids");
            let rows_json: Vec<Value> = rows.iter().map(|(e, r)| json!({ "epsilon": e, "row": to_value(r) })).collect();
            Ok(Outcome {
                upper: last.value_upper.unwrap_or(f64::INFINITY),
                lower: last.value_lower,
                payload: payload(cfg, json!({ "rows": rows_json })),
                csv,
                check_failed: false,
            })
        }
        Quantity::Rd | Quantity::Rdsuite => {
            let sys = cfg.system()?;
            let f = cfg.schedule()?.set(cfg.params.n.unwrap_or(1))?;
            let mu = cfg.measure();
            let ba = BaOptions::default();
            if cfg.quantity == Quantity::Rdsuite {
                let report = rd_inequality_suite(&mu, &sys, &f, &eps, &ba)?;
                let v = report.violations() as f64;
                let mut csv = String::from("epsilon,l1_2eps,l2_2eps,l4_2eps,linf_holder,holder_level,katok,passed\n");
                for r in &report.rows {
                    csv.push_str(&format!(
                        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                        r.epsilon, r.l1_2eps, r.l2_2eps, r.l4_2eps, r.linf_holder, r.holder_level, r.katok, r.passed()
                    ));
                }
                return Ok(Outcome {
                    upper: v,
                    lower: v,
                    payload: payload(cfg, json!({ "report": to_value(&report) })),
                    csv,
                    check_failed: report.violations() > 0,
                });
            }
            let constraint = cfg.params.constraint.unwrap_or(RdConstraint::Lp { p: 2.0 });
            let rows = eps
                .iter()
                .map(|&e| rd_at_epsilon(&mu, &sys, &f, e, constraint, &ba))
                .collect::<Result<Vec<_>, _>>()?;
            let mut csv = format!("{RD_CSV_HEADER}\n");
            for r in &rows {
                csv.push_str(&r.csv_line());
                csv.push('\n');
            }
            let norm = rows.iter().map(|r| r.normalized);
            // finite windows only show a trend of rate against log(1/ε), never a limit
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((1.0 / r.epsilon).ln(), r.rate)).collect();
            let trend = (pts.len() >= 2).then(|| lsq_slope(&pts));
            let fields = json!({
                "rows": to_value(&rows),
                "finite_window_trend": { "slope": trend, "conclusive": false },
            });
            Ok(Outcome {
                upper: norm.clone().fold(f64::NEG_INFINITY, f64::max),
                lower: norm.fold(f64::INFINITY, f64::min),
                payload: payload(cfg, fields),
                csv,
                check_failed: false,
            })
        }
        Quantity::Pressure => {
            let sys = cfg.system()?;
            let sched = cfg.schedule()?;
            let pot = cfg.params.potential.clone().expect("validated");
            let curve = pressure_curve(&sys, &sched, &pot, &eps, n_grid, &opts, true)
                .map_err(|e| CliError::at("params.potential", e))?;
            let est = pressure_mdim_from_curve(&curve).map_err(|e| CliError::at("eps_grid", e))?;
            let csv = curve.to_csv();
            Ok(dim_outcome(cfg, est, json!({ "curve": to_value(&curve) }), csv))
        }
        Quantity::Powerrule => {
            let sys = cfg.system()?;
            let m = cfg.params.m.expect("validated");
            let r = power_rule_experiment(&sys, m, &eps, n_grid, &opts).map_err(|e| CliError::at("params.m", e))?;
            let csv = tails_csv(&[("full", &r.full.per_eps), ("sub", &r.sub.per_eps)]);
            Ok(Outcome {
                upper: r.ratio,
                lower: r.ratio,
                payload: payload(cfg, json!({ "result": to_value(&r) })),
                csv,
                check_failed: false,
            })
        }
        Quantity::Product => {
            let sys = cfg.system()?;
            let r = product_experiment(&sys, &cfg.schedule()?, &eps, n_grid, &opts)?;
            let csv = tails_csv(&[("single", &r.single.per_eps), ("squared", &r.squared.per_eps)]);
            Ok(Outcome {
                upper: r.squared.upper,
                lower: r.squared.lower,
                payload: payload(cfg, json!({ "result": to_value(&r) })),
                csv,
                check_failed: false,
            })
        }
        Quantity::Folnercheck => folner_check(cfg),
    }
}

/// `|gF_n △ F_n|/|F_n|` for each generator; the check fails unless it is non-increasing in n.
fn folner_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let sched = cfg.schedule()?;
    let rank = cfg.system.rank;
    let step = match cfg.schedule {
        ScheduleKind::Boxes => 1,
        ScheduleKind::Subgroup { m } => m as i64,
    };
    let mut ns = cfg.n_grid.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut csv = String::from("n,generator,defect,two_sided\n");
    let mut rows = Vec::new();
    let mut failed = false;
    for i in 0..rank {
        let mut coords = vec![0; rank];
        coords[i] = step;
        let g = GroupElement::new(coords);
        let mut prev = f64::INFINITY;
        for &n in &ns {
            let d = folner_defect(&sched, &g, n)?;
            let t = two_sided_defect(&sched, &g, n)?;
            failed |= d > prev;
            prev = d;
            csv.push_str(&format!("{n},{i},{d:.16e},{t:.16e}\n"));
            rows.push(json!({ "n": n, "generator": i, "defect": d, "two_sided": t }));
        }
    }
    let last_n = *ns.last().expect("validated non-empty");
    let at_last: Vec<f64> = rows
        .iter()
        .filter(|r| r["n"] == json!(last_n))
        .map(|r| r["defect"].as_f64().unwrap_or(f64::NAN))
        .collect();
    Ok(Outcome {
        upper: at_last.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        lower: at_last.iter().copied().fold(f64::INFINITY, f64::min),
        payload: payload(cfg, json!({ "rows": rows, "schedule": sched.label() })),
        csv,
        check_failed: failed,
    })
}
