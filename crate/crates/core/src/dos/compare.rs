//! Two domains, one potential: oracle and discretized Laplace transforms and
//! the mean of V recovered from their small-t behaviour.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{free_laplace, oracle_laplace, sweep, DOSReport, SweepSpec, TraceCache};
use crate::error::{Error, Result};
use crate::geometry::{Domain, DomainDescriptor};
use crate::output::{column, csv_line, fmt_f64, fmt_opt, object};
use crate::potential::{mean_over_domain, Potential, PotentialDescriptor};

/// Mean of V from the two smallest t among `points` (t, L(t)).
///
/// With g(t) = -ln((4 pi t)^{d/2} L(t)) / t = mean(V) - t var(V)/2 + O(t^2),
/// the line through the two points is extrapolated to t = 0. Constant
/// potentials are recovered up to rounding.
pub fn extract_mean(points: &[(f64, f64)], d: usize) -> Result<f64> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < 2 {
        return Err(Error::InvalidParameter("mean extraction needs two distinct t values".into()));
    }
    if let Some(p) = pts.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return Err(Error::InvalidParameter(format!("mean extraction needs t > 0 and L > 0, got {p:?}")));
    }
    let g = |(t, l): (f64, f64)| -(l / free_laplace(t, d)).ln() / t;
    let (t1, t2) = (pts[0].0, pts[1].0);
    let (g1, g2) = (g(pts[0]), g(pts[1]));
    Ok((t2 * g1 - t1 * g2) / (t2 - t1))
}

#[derive(Clone, Debug)]
pub struct CompareOptions {
    /// Discretized sweep; the mean fit uses its two smallest t.
    pub sweep: SweepSpec,
    /// t values for the oracle-only fit.
    pub oracle_fit_ts: Vec<f64>,
    /// Relative oracle difference above which the two measures count as distinct.
    pub differ_tol: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            sweep: SweepSpec { ts: vec![0.25, 0.5], hbars: vec![0.1, 0.05], ..SweepSpec::default() },
            oracle_fit_ts: vec![0.05, 0.1],
            differ_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSummary {
    pub domain: DomainDescriptor,
    /// (1/|Omega|) int V by quadrature.
    pub mean_quadrature: f64,
    pub oracle_fit_ts: Vec<f64>,
    pub oracle_fit_values: Vec<f64>,
    pub mean_oracle: f64,
    pub sweep: DOSReport,
    /// Fit on the finest-hbar column.
    pub mean_raw: Option<f64>,
    /// Fit on the extrapolated column.
    pub mean_extrapolated: Option<f64>,
}

impl DomainSummary {
    pub fn to_json(&self) -> Value {
        object([
            ("domain", serde_json::to_value(&self.domain).expect("descriptor serializes")),
            ("mean_quadrature", Value::from(self.mean_quadrature)),
            ("oracle_fit_t", column(self.oracle_fit_ts.iter().map(|&x| Some(x)))),
            ("oracle_fit_value", column(self.oracle_fit_values.iter().map(|&x| Some(x)))),
            ("mean_oracle", Value::from(self.mean_oracle)),
            ("mean_raw", self.mean_raw.map_or(Value::Null, Value::from)),
            ("mean_extrapolated", self.mean_extrapolated.map_or(Value::Null, Value::from)),
            ("sweep", self.sweep.to_json()),
        ])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub potential: PotentialDescriptor,
    pub dim: usize,
    pub a: DomainSummary,
    pub b: DomainSummary,
    /// mean_a - mean_b from the oracle fit.
    pub oracle_gap: f64,
    pub raw_gap: Option<f64>,
    pub extrapolated_gap: Option<f64>,
    /// Largest relative difference of the two oracle transforms over all t used.
    pub max_oracle_relative_difference: f64,
    pub measures_differ: bool,
}

impl ComparisonReport {
    pub fn to_json(&self) -> Value {
        let opt = |x: Option<f64>| x.map_or(Value::Null, Value::from);
        object([
            ("potential", serde_json::to_value(&self.potential).expect("descriptor serializes")),
            ("dimension", Value::from(self.dim as u64)),
            ("oracle_gap", Value::from(self.oracle_gap)),
            ("raw_gap", opt(self.raw_gap)),
            ("extrapolated_gap", opt(self.extrapolated_gap)),
            ("max_oracle_relative_difference", Value::from(self.max_oracle_relative_difference)),
            ("measures_differ", Value::from(self.measures_differ)),
            ("domains", Value::Array(vec![self.a.to_json(), self.b.to_json()])),
        ])
    }

    /// One row per domain.
    pub fn to_csv(&self) -> String {
        let mut out = csv_line(
            &["domain", "mean_quadrature", "mean_oracle", "mean_raw", "mean_extrapolated"].map(String::from),
        );
        for s in [&self.a, &self.b] {
            let name = serde_json::to_value(&s.domain).expect("descriptor serializes")["kind"]
                .as_str()
                .unwrap_or_default()
                .to_string();
            out.push_str(&csv_line(&[
                name,
                fmt_f64(s.mean_quadrature),
                fmt_f64(s.mean_oracle),
                fmt_opt(s.mean_raw),
                fmt_opt(s.mean_extrapolated),
            ]));
        }
        out
    }
}

fn smallest_two(ts: &[f64], values: &[Option<f64>]) -> Option<Vec<(f64, f64)>> {
    let mut pts: Vec<(f64, f64)> = ts.iter().zip(values).filter_map(|(&t, v)| Some((t, (*v)?))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    (pts.len() >= 2).then(|| pts[..2].to_vec())
}

fn summarize(
    domain: &Domain,
    potential: &Potential,
    opts: &CompareOptions,
    cache: Option<&dyn TraceCache>,
) -> Result<DomainSummary> {
    let d = domain.dim();
    let tol = opts.sweep.quad_tol;
    let oracle_fit_values = opts
        .oracle_fit_ts
        .iter()
        .map(|&t| oracle_laplace(potential, domain, t, tol))
        .collect::<Result<Vec<f64>>>()?;
    let pts: Vec<(f64, f64)> = opts.oracle_fit_ts.iter().copied().zip(oracle_fit_values.iter().copied()).collect();
    let mean_oracle = extract_mean(&pts, d)?;
    let report = sweep(domain, potential, &opts.sweep, cache)?;
    let finest = report.hbars.len() - 1;
    let raw: Vec<Option<f64>> = (0..report.ts.len()).map(|ti| report.cell(ti, finest).value).collect();
    let mean_raw = smallest_two(&report.ts, &raw).map(|p| extract_mean(&p, d)).transpose()?;
    let mean_extrapolated = match &report.extrapolated {
        Some(x) => smallest_two(&report.ts, x).map(|p| extract_mean(&p, d)).transpose()?,
        None => None,
    };
    Ok(DomainSummary {
        domain: domain.descriptor(),
        mean_quadrature: mean_over_domain(potential, domain, tol)?,
        oracle_fit_ts: opts.oracle_fit_ts.clone(),
        oracle_fit_values,
        mean_oracle,
        sweep: report,
        mean_raw,
        mean_extrapolated,
    })
}

/// Runs both domains and compares the recovered means and oracle transforms.
pub fn counterexample(
    a: &Domain,
    b: &Domain,
    potential: &Potential,
    opts: &CompareOptions,
    cache: Option<&dyn TraceCache>,
) -> Result<ComparisonReport> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let sa = summarize(a, potential, opts, cache)?;
    let sb = summarize(b, potential, opts, cache)?;
    let oracle_pairs = sa.oracle_fit_values.iter().zip(&sb.oracle_fit_values).map(|(x, y)| (*x, *y));
    let sweep_pairs = sa.sweep.oracle.iter().zip(&sb.sweep.oracle).filter_map(|(x, y)| Some(((*x)?, (*y)?)));
    let max_rel = oracle_pairs
        .chain(sweep_pairs)
        .fold(0.0f64, |m, (la, lb)| m.max((la - lb).abs() / la.abs().max(lb.abs())));
    let gap = |x: Option<f64>, y: Option<f64>| Some(x? - y?);
    Ok(ComparisonReport {
        potential: potential.descriptor(),
        dim: a.dim(),
        oracle_gap: sa.mean_oracle - sb.mean_oracle,
        raw_gap: gap(sa.mean_raw, sb.mean_raw),
        extrapolated_gap: gap(sa.mean_extrapolated, sb.mean_extrapolated),
        max_oracle_relative_difference: max_rel,
        measures_differ: max_rel > opts.differ_tol,
        a: sa,
        b: sb,
    })
}
