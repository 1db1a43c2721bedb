//! Scenario dispatch: grid enumeration, per-point figures of merit, and the
//! deterministic worker pool.

use crate::config::{Axis, Scenario, SweepConfig, Weight};
use crate::output::{SweepRow, Value};
use ohm_core::adaptive::{fim_dichotomic, qfim_controlled_ideal, robustness_expansion};
use ohm_core::estimation::{
    bounds, check_rpd, full_report, ground_state_bundle, qfim_ground_state, thermal_bundle,
};
use ohm_core::hcrb::{holevo_bound, HolevoProblem};
use ohm_core::matrix::RealMatrix;
use ohm_core::model::{
    build_dh, build_dh_all, default_constants, lambdas_from_fields, seconds_to_inverse_kelvin,
    FieldSpec, ParamPoint,
};
use ohm_core::probes::{named_probe, ProbeId};
use ohm_core::unitary::{
    aligned_bound_exact, aligned_bound_reference, evolved_thermal_bundle, generators_spectral,
    qfim_unitary, thermal_dynamical_report,
};
use ohm_core::QuantumState;
use std::str::FromStr;
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("numerical failure at row {row}: {message}")]
    RowFailure { row: usize, message: String },
    #[error("invalid probe {0:?} for this scenario")]
    BadProbe(String),
}

/// Column names after the grid axes, per scenario.
pub fn output_columns(config: &SweepConfig) -> Vec<String> {
    let outs: Vec<&str> = match config.scenario {
        Scenario::StationaryGround => vec![
            "trQinv", "msnr", "cs", "ch_bar", "ch", "r", "rpd_residual",
        ],
        Scenario::StationaryThermal => vec![
            "trQinv", "msnr", "cs", "ch_bar", "ch", "r", "wcc_residual", "pcc_residual",
        ],
        Scenario::DynamicAligned => vec!["trQinv", "bound_exact", "bound_reference"],
        Scenario::DynamicThermal => vec!["trQinv", "cs", "ch_bar", "ch", "r", "r_qd"],
        Scenario::Adaptive => vec!["trQinv_ideal", "trFinv", "trFinv_predicted"],
        Scenario::HcrbCompare => vec!["cs", "ch", "ch_bar", "r", "r_qd"],
    };
    let flags: Vec<&str> = match config.scenario {
        Scenario::StationaryGround => vec!["degenerate", "singular_qfim"],
        Scenario::StationaryThermal => vec!["singular_qfim"],
        Scenario::DynamicAligned => vec![],
        Scenario::DynamicThermal => vec!["singular_qfim"],
        Scenario::Adaptive => vec!["diverged"],
        Scenario::HcrbCompare => vec!["chain_ok", "solver_converged"],
    };
    let keep = |name: &str| -> bool {
        match &config.outputs {
            None => true,
            Some(list) => list.iter().any(|o| o == name),
        }
    };
    let mut cols: Vec<String> = Vec::new();
    for a in config.scenario.axes() {
        cols.push(a.name().to_string());
    }
    for o in outs {
        if keep(o) {
            cols.push(o.to_string());
        }
    }
    for f in flags {
        cols.push(f.to_string());
    }
    cols
}

fn grid_points(config: &SweepConfig) -> Vec<Vec<(Axis, f64)>> {
    let axes: Vec<Axis> = config.scenario.axes().to_vec();
    let values: Vec<Vec<f64>> = axes.iter().map(|a| config.grid[a].values()).collect();
    let mut rows = vec![Vec::new()];
    for (axis, vals) in axes.iter().zip(&values) {
        let mut next = Vec::with_capacity(rows.len() * vals.len());
        for prefix in &rows {
            for v in vals {
                let mut p = prefix.clone();
                p.push((*axis, *v));
                next.push(p);
            }
        }
        rows = next;
    }
    rows
}

fn axis_value(point: &[(Axis, f64)], axis: Axis) -> f64 {
    point.iter().find(|(a, _)| *a == axis).map(|(_, v)| *v).unwrap()
}

fn time_factor(config: &SweepConfig) -> f64 {
    if config.time_ns {
        1e-9 * seconds_to_inverse_kelvin()
    } else {
        1.0
    }
}

fn weight_for(config: &SweepConfig, lam: &ParamPoint) -> Option<RealMatrix> {
    match config.weight {
        Weight::Identity => Some(RealMatrix::identity(3)),
        Weight::Msnr => {
            let a = lam.as_array();
            if a.iter().any(|x| *x == 0.0) {
                return None;
            }
            Some(RealMatrix::from_fn(3, |i, j| {
                if i == j {
                    1.0 / (a[i] * a[i])
                } else {
                    0.0
                }
            }))
        }
    }
}

fn probe_for(config: &SweepConfig, default: ProbeId) -> Result<ProbeId, SweepError> {
    match &config.probe {
        None => Ok(default),
        Some(s) => ProbeId::from_str(s).map_err(|_| SweepError::BadProbe(s.clone())),
    }
}

fn num(x: f64) -> Value {
    Value::Num(x)
}

fn compute_row(config: &SweepConfig, point: &[(Axis, f64)]) -> Result<Vec<(String, Value)>, String> {
    let consts = default_constants();
    let tfac = time_factor(config);
    let mut vals: Vec<(String, Value)> = point
        .iter()
        .map(|(a, v)| (a.name().to_string(), num(*v)))
        .collect();
    let mut push = |name: &str, v: Value| vals.push((name.to_string(), v));

    match config.scenario {
        Scenario::StationaryGround => {
            let f = FieldSpec::new(
                axis_value(point, Axis::B),
                axis_value(point, Axis::E),
                axis_value(point, Axis::Theta),
            )
            .map_err(|e| e.to_string())?;
            let lam = lambdas_from_fields(&f, &consts);
            match ground_state_bundle(&lam, &consts) {
                Err(_) => {
                    // degenerate ground space: bounds diverge, the rest is absent
                    for name in ["trQinv", "cs", "ch_bar"] {
                        push(name, Value::Num(f64::INFINITY));
                    }
                    for name in ["msnr", "ch", "r", "rpd_residual"] {
                        push(name, Value::Absent);
                    }
                    push("degenerate", Value::Bool(true));
                    push("singular_qfim", Value::Bool(true));
                }
                Ok(bundle) => {
                    let h = ohm_core::model::build_hamiltonian(&lam, &consts);
                    let q = qfim_ground_state(&h, &build_dh_all()).map_err(|e| e.to_string())?;
                    let w = weight_for(config, &lam).unwrap_or_else(|| RealMatrix::identity(3));
                    let rep = full_report(&bundle, &w, Some(&lam.as_array()))
                        .map_err(|e| e.to_string())?;
                    // the λ1 direction is not estimable when aligned: cs may be inf
                    let b = bounds(&q, &rep.uhlmann, &w, Some(&lam.as_array()))
                        .map_err(|e| e.to_string())?;
                    push("trQinv", num(b.cs));
                    push("msnr", b.msnr_bar.map(Value::Num).unwrap_or(Value::Absent));
                    push("cs", num(b.cs));
                    push("ch_bar", num(b.ch_bar));
                    let ch = if config.with_hcrb && b.cs.is_finite() {
                        let prob = HolevoProblem::new(bundle.clone(), w.clone());
                        holevo_bound(&prob).ok().map(|s| s.ch)
                    } else {
                        None
                    };
                    push("ch", ch.map(Value::Num).unwrap_or(Value::Absent));
                    push("r", num(b.r));
                    push(
                        "rpd_residual",
                        check_rpd(&bundle).map(Value::Num).unwrap_or(Value::Absent),
                    );
                    push("degenerate", Value::Bool(false));
                    push("singular_qfim", Value::Bool(!b.estimable.iter().all(|e| *e)));
                }
            }
        }
        Scenario::StationaryThermal => {
            let f = FieldSpec::new(
                axis_value(point, Axis::B),
                axis_value(point, Axis::E),
                axis_value(point, Axis::Theta),
            )
            .map_err(|e| e.to_string())?;
            let lam = lambdas_from_fields(&f, &consts);
            let temp = axis_value(point, Axis::Temp);
            let bundle = thermal_bundle(&lam, temp, &consts).map_err(|e| e.to_string())?;
            let w = weight_for(config, &lam).unwrap_or_else(|| RealMatrix::identity(3));
            let rep = full_report(&bundle, &w, Some(&lam.as_array())).map_err(|e| e.to_string())?;
            push("trQinv", num(rep.cs));
            push("msnr", rep.msnr_bar.map(Value::Num).unwrap_or(Value::Absent));
            push("cs", num(rep.cs));
            push("ch_bar", num(rep.ch_bar));
            let ch = if config.with_hcrb && rep.cs.is_finite() {
                let prob = HolevoProblem::new(bundle.clone(), w.clone());
                holevo_bound(&prob).ok().map(|s| s.ch)
            } else {
                None
            };
            push("ch", ch.map(Value::Num).unwrap_or(Value::Absent));
            push("r", num(rep.r));
            push("wcc_residual", num(rep.wcc_residual));
            push("pcc_residual", num(rep.pcc_residual));
            push("singular_qfim", Value::Bool(!rep.estimable.iter().all(|e| *e)));
        }
        Scenario::DynamicAligned => {
            let probe = probe_for(config, ProbeId::PsiA).map_err(|e| e.to_string())?;
            let aligned_probe = match probe {
                ProbeId::PsiA => ohm_core::unitary::AlignedProbe::PsiA,
                ProbeId::PsiB => ohm_core::unitary::AlignedProbe::PsiB,
                ProbeId::PsiOpt => return Err("dynamic-aligned expects psiA or psiB".into()),
            };
            let b = axis_value(point, Axis::B);
            let e = axis_value(point, Axis::E);
            let t = axis_value(point, Axis::Time) * tfac;
            let l1 = consts.mu_b_per_gauss * b;
            let l2 = consts.mu_e_per_kvcm * e;
            let h = ohm_core::model::build_hamiltonian(&ParamPoint::new(l1, l2, 0.0), &consts);
            let dh2 = [build_dh(1).unwrap(), build_dh(2).unwrap()];
            let gens = generators_spectral(&h, &dh2, t).map_err(|e| e.to_string())?;
            let psi = named_probe(probe);
            let q = qfim_unitary(&QuantumState::Pure(psi), &gens).map_err(|e| e.to_string())?;
            let tr = q
                .inverse()
                .map(|m| m.trace())
                .unwrap_or(f64::INFINITY);
            push("trQinv", num(tr));
            push("bound_exact", num(aligned_bound_exact(aligned_probe, l2, t, &consts)));
            push("bound_reference", num(aligned_bound_reference(aligned_probe, l2, t, &consts)));
        }
        Scenario::DynamicThermal | Scenario::HcrbCompare => {
            let f = FieldSpec::new(
                axis_value(point, Axis::B),
                axis_value(point, Axis::E),
                axis_value(point, Axis::Theta),
            )
            .map_err(|e| e.to_string())?;
            let lam = lambdas_from_fields(&f, &consts);
            let temp = axis_value(point, Axis::Temp);
            let t = axis_value(point, Axis::Time) * tfac;
            let w = weight_for(config, &lam).unwrap_or_else(|| RealMatrix::identity(3));
            let rep = thermal_dynamical_report(&lam, t, temp, &consts, &w)
                .map_err(|e| e.to_string())?;
            let want_ch = config.with_hcrb || config.scenario == Scenario::HcrbCompare;
            let (ch, converged) = if want_ch && rep.bounds.cs.is_finite() {
                let bundle = evolved_thermal_bundle(&lam, t, temp, &consts)
                    .map_err(|e| e.to_string())?;
                match holevo_bound(&HolevoProblem::new(bundle, w.clone())) {
                    Ok(s) => (Some(s.ch), s.certificate.converged),
                    Err(_) => (None, false),
                }
            } else {
                (None, false)
            };
            if config.scenario == Scenario::DynamicThermal {
                push("trQinv", num(rep.bounds.cs));
                push("cs", num(rep.bounds.cs));
                push("ch_bar", num(rep.bounds.ch_bar));
                push("ch", ch.map(Value::Num).unwrap_or(Value::Absent));
                push("r", num(rep.r));
                push("r_qd", num(rep.r_from_qd));
                push(
                    "singular_qfim",
                    Value::Bool(!rep.bounds.estimable.iter().all(|e| *e)),
                );
            } else {
                push("cs", num(rep.bounds.cs));
                push("ch", ch.map(Value::Num).unwrap_or(Value::Absent));
                push("ch_bar", num(rep.bounds.ch_bar));
                push("r", num(rep.r));
                push("r_qd", num(rep.r_from_qd));
                let chain_ok = match ch {
                    Some(chv) => {
                        let tol = 1e-6 * rep.bounds.cs.abs().max(1e-12);
                        rep.bounds.cs <= chv + tol
                            && chv <= rep.bounds.ch_bar + tol
                            && rep.bounds.ch_bar
                                <= rep.bounds.cs * (1.0 + rep.r) + 2.0 * tol
                    }
                    None => false,
                };
                push("chain_ok", Value::Bool(chain_ok));
                push("solver_converged", Value::Bool(converged));
            }
        }
        Scenario::Adaptive => {
            let probe = probe_for(config, ProbeId::PsiOpt).map_err(|e| e.to_string())?;
            let psi = named_probe(probe);
            let tau = axis_value(point, Axis::Tau) * tfac;
            let segments = axis_value(point, Axis::Segments).round().max(1.0) as usize;
            let eta = axis_value(point, Axis::Eta);
            let dh = build_dh_all();
            let q = qfim_controlled_ideal(&psi, &dh, tau);
            let tr_ideal = q.inverse().map(|m| m.trace()).unwrap_or(f64::INFINITY);
            push("trQinv_ideal", num(tr_ideal));
            // control error applied along λ1 (documented convention)
            let lam_true = ParamPoint::new(0.01, 0.02, 0.03);
            let lam_hat = ParamPoint::new(lam_true.l1 + eta, lam_true.l2, lam_true.l3);
            let f = fim_dichotomic(&psi, &lam_true, &lam_hat, tau, segments, &consts)
                .map_err(|e| e.to_string())?;
            let tr_f = f.fim.inverse().map(|m| m.trace()).unwrap_or(f64::INFINITY);
            push("trFinv", num(tr_f));
            let pred = robustness_expansion(&psi, &dh, tau, &[eta, 0.0, 0.0])
                .map(|e| e.predicted_tr_finv)
                .unwrap_or(f64::INFINITY);
            push("trFinv_predicted", num(pred));
            push("diverged", Value::Bool(f.diverged));
        }
    }
    Ok(vals)
}

/// Runs the sweep over the full grid with `workers` threads; rows are emitted
/// in deterministic lexicographic order regardless of worker count.
/// On a row failure, rows before the failure are returned along with the error.
pub fn run_sweep(config: &SweepConfig) -> (Vec<SweepRow>, Option<SweepError>) {
    let points = grid_points(config);
    let n = points.len();
    let results: Mutex<Vec<Option<Result<Vec<(String, Value)>, String>>>> =
        Mutex::new(vec![None; n]);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let workers = config.workers.max(1).min(n.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let r = compute_row(config, &points[i]);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let collected = results.into_inner().unwrap();
    let mut rows = Vec::with_capacity(n);
    for (i, slot) in collected.into_iter().enumerate() {
        match slot {
            Some(Ok(values)) => rows.push(SweepRow { values }),
            Some(Err(message)) => {
                return (rows, Some(SweepError::RowFailure { row: i, message }));
            }
            None => {
                return (
                    rows,
                    Some(SweepError::RowFailure {
                        row: i,
                        message: "row not computed".into(),
                    }),
                );
            }
        }
    }
    (rows, None)
}

/// Filters row values down to the configured output columns.
pub fn project_row(config: &SweepConfig, row: SweepRow) -> SweepRow {
    let cols = output_columns(config);
    let values = cols
        .iter()
        .map(|c| {
            row.values
                .iter()
                .find(|(k, _)| k == c)
                .map(|(k, v)| (k.clone(), v.clone()))
                .unwrap_or_else(|| (c.clone(), Value::Absent))
        })
        .collect();
    SweepRow { values }
}

/// Single-point structured report (JSON document).
pub fn report_point(config: &SweepConfig) -> Result<serde_json::Value, String> {
    let points = grid_points(config);
    let point = points
        .first()
        .ok_or_else(|| "empty grid".to_string())?;
    let consts = default_constants();
    let mut doc = serde_json::Map::new();
    doc.insert("schema".into(), serde_json::json!(crate::output::SCHEMA));
    doc.insert(
        "scenario".into(),
        serde_json::json!(config.scenario.name()),
    );
    for (a, v) in point {
        doc.insert(a.name().into(), serde_json::json!(v));
    }
    // reuse the sweep row and add matrices / residual detail where available
    let row = compute_row(config, point)?;
    for (k, v) in &row {
        doc.insert(k.clone(), v.json());
    }
    // attach the QFIM and estimability for report-style scenarios
    match config.scenario {
        Scenario::StationaryGround | Scenario::StationaryThermal => {
            let f = FieldSpec::new(
                axis_value(point, Axis::B),
                axis_value(point, Axis::E),
                axis_value(point, Axis::Theta),
            )
            .map_err(|e| e.to_string())?;
            let lam = lambdas_from_fields(&f, &consts);
            doc.insert("lambda".into(), serde_json::json!(lam.as_array()));
            let q = match config.scenario {
                Scenario::StationaryGround => {
                    let h = ohm_core::model::build_hamiltonian(&lam, &consts);
                    qfim_ground_state(&h, &build_dh_all()).ok()
                }
                _ => {
                    let temp = axis_value(point, Axis::Temp);
                    thermal_bundle(&lam, temp, &consts)
                        .ok()
                        .and_then(|b| ohm_core::estimation::qfim(&b).ok())
                }
            };
            if let Some(q) = q {
                let qm: Vec<Vec<f64>> = (0..3)
                    .map(|i| (0..3).map(|j| q[(i, j)]).collect())
                    .collect();
                doc.insert("qfim".into(), serde_json::json!(qm));
                let w = RealMatrix::identity(3);
                if let Ok(b) = bounds(&q, &RealMatrix::zeros(3), &w, Some(&lam.as_array())) {
                    doc.insert("estimable".into(), serde_json::json!(b.estimable));
                    let marks: Vec<String> = b
                        .estimable
                        .iter()
                        .enumerate()
                        .map(|(i, e)| {
                            if *e {
                                format!("lambda{}", i + 1)
                            } else {
                                format!("lambda{}: not estimable", i + 1)
                            }
                        })
                        .collect();
                    doc.insert("estimability".into(), serde_json::json!(marks));
                }
            }
        }
        _ => {}
    }
    Ok(serde_json::Value::Object(doc))
}
