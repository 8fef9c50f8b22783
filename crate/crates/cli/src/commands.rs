//! One function per subcommand. Each returns the report body, the CSV tables
//! to write next to it, and whether every check passed.

use doslab::discretize::rescaled_pair;
use doslab::dos::{
    counterexample, empirical_ids, free_ids_curve, free_laplace, laplace_of_ids, oracle_laplace, surface_average_ids,
    sweep, IDSCurve, SurfaceVariant, TraceCache,
};
use doslab::output::{column, csv_line, fmt_f64, object};
use doslab::spectral::heat_traces_dense;
use doslab::{mean_over_domain, Error as CoreError};
use serde_json::Value;

use crate::config::Resolved;
use crate::error::CliResult;

/// Largest admissible entrywise difference between a rescaled pair.
pub const RESCALE_ENTRY_TOL: f64 = 1e-15;
/// Largest admissible relative difference of their dense heat traces.
pub const RESCALE_TRACE_TOL: f64 = 1e-10;

pub struct Outcome {
    pub body: Value,
    /// (file name, contents); the first is `report.csv`.
    pub tables: Vec<(String, String)>,
    /// Reason the run counts as failed even though outputs were produced.
    pub failure: Option<String>,
}

fn descriptor_json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("descriptor serializes")
}

pub fn oracle(r: &Resolved) -> CliResult<Outcome> {
    let c = &r.config.oracle;
    let d = r.domain.dim();
    let mean = mean_over_domain(&r.potential, &r.domain, c.quad_tol)?;
    let values = c
        .t
        .iter()
        .map(|&t| oracle_laplace(&r.potential, &r.domain, t, c.quad_tol))
        .collect::<Result<Vec<f64>, CoreError>>()?;
    let free: Vec<f64> = c.t.iter().map(|&t| free_laplace(t, d)).collect();
    let body = object([
        ("domain", descriptor_json(&r.config.domain)),
        ("potential", descriptor_json(&r.config.potential)),
        ("dimension", Value::from(d as u64)),
        ("volume", Value::from(r.domain.volume())),
        ("quad_tol", Value::from(c.quad_tol)),
        ("mean_over_domain", Value::from(mean)),
        ("t", column(c.t.iter().map(|&x| Some(x)))),
        ("oracle_laplace", column(values.iter().map(|&x| Some(x)))),
        ("free_laplace", column(free.iter().map(|&x| Some(x)))),
    ]);
    let mut csv = csv_line(&["t", "oracle_laplace", "free_laplace", "mean_over_domain"].map(String::from));
    for ((t, v), f) in c.t.iter().zip(&values).zip(&free) {
        csv.push_str(&csv_line(&[fmt_f64(*t), fmt_f64(*v), fmt_f64(*f), fmt_f64(mean)]));
    }
    Ok(Outcome { body, tables: vec![("report.csv".into(), csv)], failure: None })
}

pub fn sweep_cmd(r: &Resolved, cache: Option<&dyn TraceCache>) -> CliResult<Outcome> {
    let report = sweep(&r.domain, &r.potential, &r.sweep_spec(), cache)?;
    let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
    let oracle_failed = report.oracle_error.iter().filter(|e| e.is_some()).count();
    let failure = (failed + oracle_failed > 0)
        .then(|| format!("{failed} sweep cell(s) and {oracle_failed} oracle value(s) failed; see report.json"));
    Ok(Outcome { body: report.to_json(), tables: vec![("report.csv".into(), report.to_csv())], failure })
}

pub fn compare(r: &Resolved, cache: Option<&dyn TraceCache>) -> CliResult<Outcome> {
    let report = counterexample(&r.domain, &r.compare_domain, &r.potential, &r.compare_options(), cache)?;
    Ok(Outcome { body: report.to_json(), tables: vec![("report.csv".into(), report.to_csv())], failure: None })
}

pub fn rescale_check(r: &Resolved) -> CliResult<Outcome> {
    let c = &r.config.rescale;
    let cap = r.config.method.dense_cap;
    let mut rows = Vec::new();
    let mut csv = csv_line(
        &["r", "n", "max_entry_deviation", "t", "trace_scaled", "trace_unit", "relative_deviation"].map(String::from),
    );
    let mut pass = true;
    for &factor in &c.r {
        let pair = rescaled_pair(&r.domain, &r.potential, factor, c.h)?;
        let entry_dev = pair.max_entry_deviation();
        let scaled = heat_traces_dense(&pair.scaled, &c.t, cap)?;
        let unit = heat_traces_dense(&pair.unit, &c.t, cap)?;
        let rel: Vec<f64> = scaled.iter().zip(&unit).map(|(a, b)| (a.value - b.value).abs() / b.value.abs()).collect();
        let max_rel = rel.iter().copied().fold(0.0, f64::max);
        let ok = entry_dev <= RESCALE_ENTRY_TOL && max_rel <= RESCALE_TRACE_TOL;
        pass &= ok;
        for (i, &t) in c.t.iter().enumerate() {
            csv.push_str(&csv_line(&[
                fmt_f64(factor),
                pair.unit.len().to_string(),
                fmt_f64(entry_dev),
                fmt_f64(t),
                fmt_f64(scaled[i].value),
                fmt_f64(unit[i].value),
                fmt_f64(rel[i]),
            ]));
        }
        rows.push(object([
            ("r", Value::from(factor)),
            ("n", Value::from(pair.unit.len() as u64)),
            ("max_entry_deviation", Value::from(entry_dev)),
            ("trace_scaled", column(scaled.iter().map(|e| Some(e.value)))),
            ("trace_unit", column(unit.iter().map(|e| Some(e.value)))),
            ("relative_deviation", column(rel.iter().map(|&x| Some(x)))),
            ("pass", Value::from(ok)),
        ]));
    }
    let body = object([
        ("domain", descriptor_json(&r.config.domain)),
        ("potential", descriptor_json(&r.config.potential)),
        ("h", Value::from(c.h)),
        ("t", column(c.t.iter().map(|&x| Some(x)))),
        ("entry_tol", Value::from(RESCALE_ENTRY_TOL)),
        ("trace_tol", Value::from(RESCALE_TRACE_TOL)),
        ("rows", Value::Array(rows)),
        ("pass", Value::from(pass)),
    ]);
    let failure = (!pass).then(|| "rescaling check failed; see report.json".to_string());
    Ok(Outcome { body, tables: vec![("report.csv".into(), csv)], failure })
}

pub fn ids(r: &Resolved) -> CliResult<Outcome> {
    let c = &r.config.ids;
    let d = r.domain.dim();
    let mut curves: Vec<IDSCurve> = Vec::new();
    let mut skipped = Vec::new();
    curves.push(empirical_ids(&r.domain, &r.potential, c.r, &r.lambdas, c.eta, r.config.method.dense_cap)?);
    for variant in [SurfaceVariant::Uniform, SurfaceVariant::ConeWeighted] {
        match surface_average_ids(&r.potential, &r.domain, &r.lambdas, variant, c.resolution) {
            Ok(curve) => curves.push(curve),
            Err(e @ CoreError::NonHomogeneous(_)) => skipped.push(object([
                ("variant", descriptor_json(&variant)),
                ("reason", Value::from(e.to_string())),
            ])),
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(v) = r.potential.as_constant() {
        curves.push(free_ids_curve(&r.lambdas, v, d)?);
    }

    let oracle = c
        .t
        .iter()
        .map(|&t| oracle_laplace(&r.potential, &r.domain, t, r.config.oracle.quad_tol))
        .collect::<Result<Vec<f64>, CoreError>>()?;
    let mut checks = Vec::new();
    let mut csv = csv_line(
        &["provenance", "t", "laplace_of_ids", "tail_bound", "grid_bound", "oracle_laplace", "relative_difference"]
            .map(String::from),
    );
    for curve in &curves {
        let mut values = Vec::new();
        for (&t, &o) in c.t.iter().zip(&oracle) {
            let l = laplace_of_ids(curve, t)?;
            let rel = (l.value - o).abs() / o.abs();
            csv.push_str(&csv_line(&[
                curve.provenance.as_str().to_string(),
                fmt_f64(t),
                fmt_f64(l.value),
                fmt_f64(l.tail_bound),
                fmt_f64(l.grid_bound),
                fmt_f64(o),
                fmt_f64(rel),
            ]));
            values.push((l, rel));
        }
        checks.push(object([
            ("provenance", Value::from(curve.provenance.as_str())),
            ("laplace_of_ids", column(values.iter().map(|(l, _)| Some(l.value)))),
            ("tail_bound", column(values.iter().map(|(l, _)| Some(l.tail_bound)))),
            ("grid_bound", column(values.iter().map(|(l, _)| Some(l.grid_bound)))),
            ("relative_difference", column(values.iter().map(|(_, x)| Some(*x)))),
        ]));
    }

    let body = object([
        ("domain", descriptor_json(&r.config.domain)),
        ("potential", descriptor_json(&r.config.potential)),
        ("r", Value::from(c.r)),
        ("eta", Value::from(c.eta)),
        ("t", column(c.t.iter().map(|&x| Some(x)))),
        ("oracle_laplace", column(oracle.iter().map(|&x| Some(x)))),
        ("laplace_checks", Value::Array(checks)),
        ("curves", Value::Array(curves.iter().map(IDSCurve::to_json).collect())),
        ("skipped", Value::Array(skipped)),
    ]);
    let mut tables = vec![("report.csv".to_string(), csv)];
    tables.extend(curves.iter().map(|c| (format!("curve_{}.csv", c.provenance.as_str()), c.to_csv())));
    Ok(Outcome { body, tables, failure: None })
}
