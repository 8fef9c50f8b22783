//! Density of states through its Laplace transform: finite-volume traces,
//! the semiclassical sweep, analytic oracles, IDS curves and the box/ball
//! comparison.

mod compare;
mod ids;

pub use compare::{counterexample, extract_mean, CompareOptions, ComparisonReport, DomainSummary};
pub use ids::{
    empirical_ids, free_ids, free_ids_curve, laplace_of_ids, surface_average_ids, IDSCurve, LaplaceOfIds,
    Provenance, SurfaceVariant, Tail,
};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::discretize::{assemble, build_grid, DiscreteHamiltonian};
use crate::error::{Error, Result};
use crate::geometry::{Domain, DomainDescriptor};
use crate::output::{column, csv_line, fmt_f64, fmt_opt, object};
use crate::potential::{exp_integral, Potential, PotentialDescriptor};
use crate::spectral::{heat_traces, HeatTraceEstimate, Method, MethodPolicy};

pub const DEFAULT_ETA: f64 = 0.1;
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// (4 pi t)^{-d/2}, the free heat-kernel diagonal.
pub fn free_laplace(t: f64, d: usize) -> f64 {
    (4.0 * PI * t).powf(-(d as f64) / 2.0)
}

/// (4 pi t)^{-d/2} (1/|Omega|) int_Omega e^{-tV}; `tol` bounds the error of the
/// domain average of e^{-tV}.
pub fn oracle_laplace(potential: &Potential, domain: &Domain, t: f64, tol: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    if potential.dim() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: potential.dim() });
    }
    let d = domain.dim();
    if let Some(c) = potential.as_constant() {
        return Ok(free_laplace(t, d) * (-t * c).exp());
    }
    let vol = domain.volume();
    Ok(free_laplace(t, d) * exp_integral(potential, domain, t, tol * vol)? / vol)
}

/// Operator whose trace times `normalization` is the finite-volume Laplace
/// value on R Omega.
pub struct FiniteVolumeOperator {
    pub hamiltonian: DiscreteHamiltonian,
    /// 1/|R Omega|, written as hbar^d/|Omega| on the rescaled path.
    pub normalization: f64,
    pub hbar: f64,
    pub spacing: f64,
    pub rescaled: bool,
}

/// Homogeneous potentials use Omega with hbar = 1/R and h = hbar eta; other
/// potentials are assembled on R Omega with hbar = 1 and h = eta.
pub fn finite_volume_operator(domain: &Domain, potential: &Potential, r: f64, eta: f64) -> Result<FiniteVolumeOperator> {
    check_scale(r, eta)?;
    operator_at(domain, potential, 1.0 / r, eta)
}

fn check_scale(r: f64, eta: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("R must be positive, got {r}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    Ok(())
}

/// Grid spacing and 1/|R Omega| for a cell at semiclassical parameter hbar.
fn cell_geometry(domain: &Domain, hbar: f64, eta: f64, rescaled: bool) -> Result<(f64, f64)> {
    if rescaled {
        Ok((hbar * eta, hbar.powi(domain.dim() as i32) / domain.volume()))
    } else {
        Ok((eta, 1.0 / domain.scale(1.0 / hbar)?.volume()))
    }
}

fn operator_at(domain: &Domain, potential: &Potential, hbar: f64, eta: f64) -> Result<FiniteVolumeOperator> {
    let rescaled = potential.is_homogeneous();
    let (spacing, normalization) = cell_geometry(domain, hbar, eta, rescaled)?;
    let (grid, h_op) = if rescaled {
        (build_grid(domain, spacing)?, hbar)
    } else {
        (build_grid(&domain.scale(1.0 / hbar)?, spacing)?, 1.0)
    };
    Ok(FiniteVolumeOperator {
        hamiltonian: assemble(&grid, potential, h_op)?,
        normalization,
        hbar: h_op,
        spacing,
        rescaled,
    })
}

/// Assembly on R Omega at lattice spacing `eta`, bypassing the rescaling.
pub fn direct_operator(domain: &Domain, potential: &Potential, r: f64, eta: f64) -> Result<FiniteVolumeOperator> {
    check_scale(r, eta)?;
    let big = domain.scale(r)?;
    let grid = build_grid(&big, eta)?;
    Ok(FiniteVolumeOperator {
        hamiltonian: assemble(&grid, potential, 1.0)?,
        normalization: 1.0 / big.volume(),
        hbar: 1.0,
        spacing: eta,
        rescaled: false,
    })
}

/// Normalized trace (1/|R Omega|) Tr exp(-t H_{R Omega}) with its raw estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedTrace {
    pub value: f64,
    pub stderr: f64,
    pub truncation_bound: f64,
    pub hbar: f64,
    pub spacing: f64,
    pub estimate: HeatTraceEstimate,
}

fn normalize(op: &FiniteVolumeOperator, e: HeatTraceEstimate) -> NormalizedTrace {
    let k = op.normalization;
    NormalizedTrace {
        value: e.value * k,
        stderr: e.stderr * k,
        truncation_bound: e.truncation_bound * k,
        hbar: op.hbar,
        spacing: op.spacing,
        estimate: e,
    }
}

pub fn finite_volume_laplace(
    domain: &Domain,
    potential: &Potential,
    r: f64,
    t: f64,
    eta: f64,
    policy: &MethodPolicy,
) -> Result<NormalizedTrace> {
    finite_volume_laplace_many(domain, potential, r, &[t], eta, policy).map(|mut v| v.remove(0))
}

pub fn finite_volume_laplace_many(
    domain: &Domain,
    potential: &Potential,
    r: f64,
    ts: &[f64],
    eta: f64,
    policy: &MethodPolicy,
) -> Result<Vec<NormalizedTrace>> {
    let op = finite_volume_operator(domain, potential, r, eta)?;
    Ok(heat_traces(&op.hamiltonian, ts, policy)?.into_iter().map(|e| normalize(&op, e)).collect())
}

/// Everything that determines one sweep cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub domain: DomainDescriptor,
    pub potential: PotentialDescriptor,
    pub hbar: f64,
    pub t: f64,
    pub spacing: f64,
    pub rescaled: bool,
    pub policy: MethodPolicy,
}

/// Store for raw heat-trace estimates keyed by cell.
pub trait TraceCache: Sync {
    fn get(&self, key: &CellKey) -> Option<HeatTraceEstimate>;
    fn put(&self, key: &CellKey, estimate: &HeatTraceEstimate);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub t: f64,
    pub hbar: f64,
    pub spacing: f64,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub truncation_bound: Option<f64>,
    pub method: Option<Method>,
    pub n: Option<usize>,
    pub probes: Option<usize>,
    pub degree: Option<usize>,
    pub period: Option<usize>,
    pub seed: Option<u64>,
    pub error: Option<String>,
}

impl SweepCell {
    fn failed(t: f64, hbar: f64, spacing: f64, err: &Error) -> Self {
        Self {
            t,
            hbar,
            spacing,
            value: None,
            stderr: None,
            truncation_bound: None,
            method: None,
            n: None,
            probes: None,
            degree: None,
            period: None,
            seed: None,
            error: Some(err.to_string()),
        }
    }

    fn from_trace(nt: &NormalizedTrace) -> Self {
        let e = &nt.estimate;
        Self {
            t: e.t,
            hbar: nt.hbar,
            spacing: nt.spacing,
            value: Some(nt.value),
            stderr: Some(nt.stderr),
            truncation_bound: Some(nt.truncation_bound),
            method: Some(e.method),
            n: Some(e.n),
            probes: Some(e.probes),
            degree: Some(e.degree),
            period: Some(e.period),
            seed: Some(e.seed),
            error: None,
        }
    }
}

/// Table of normalized traces L(t, hbar) with oracle and O(hbar) extrapolation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DOSReport {
    pub domain: DomainDescriptor,
    pub potential: PotentialDescriptor,
    pub dim: usize,
    pub eta: f64,
    pub policy: MethodPolicy,
    pub ts: Vec<f64>,
    /// Strictly descending; R = 1/hbar.
    pub hbars: Vec<f64>,
    /// t-major: cell (i, j) is at i * hbars.len() + j.
    pub cells: Vec<SweepCell>,
    pub oracle: Vec<Option<f64>>,
    pub oracle_error: Vec<Option<String>>,
    /// None when only one hbar was swept.
    pub extrapolated: Option<Vec<Option<f64>>>,
}

/// Two-point extrapolation to hbar = 0 assuming an O(hbar) leading error.
pub fn richardson(h_coarse: f64, l_coarse: f64, h_fine: f64, l_fine: f64) -> f64 {
    (h_coarse * l_fine - h_fine * l_coarse) / (h_coarse - h_fine)
}

impl DOSReport {
    pub fn is_raw(&self) -> bool {
        self.extrapolated.is_none()
    }

    pub fn cell(&self, ti: usize, hi: usize) -> &SweepCell {
        &self.cells[ti * self.hbars.len() + hi]
    }

    /// Row of normalized traces for t index `ti`, in hbar order.
    pub fn values(&self, ti: usize) -> Vec<Option<f64>> {
        (0..self.hbars.len()).map(|hi| self.cell(ti, hi).value).collect()
    }

    /// |L(t, hbar) - oracle(t)| per hbar.
    pub fn discrepancies(&self, ti: usize) -> Vec<Option<f64>> {
        self.values(ti).iter().map(|v| Some((v.as_ref()? - self.oracle[ti]?).abs())).collect()
    }

    pub fn relative_discrepancies(&self, ti: usize) -> Vec<Option<f64>> {
        self.discrepancies(ti).iter().map(|d| Some(d.as_ref()? / self.oracle[ti]?)).collect()
    }

    pub fn extrapolated_value(&self, ti: usize) -> Option<f64> {
        self.extrapolated.as_ref()?[ti]
    }

    pub fn extrapolated_relative_error(&self, ti: usize) -> Option<f64> {
        let o = self.oracle[ti]?;
        Some((self.extrapolated_value(ti)? - o).abs() / o)
    }

    fn extrapolate(&self, ti: usize) -> Option<f64> {
        let k = self.hbars.len();
        if k < 2 {
            return None;
        }
        let (a, b) = (self.cell(ti, k - 2), self.cell(ti, k - 1));
        Some(richardson(a.hbar, a.value?, b.hbar, b.value?))
    }

    /// True when stored extrapolations match a recomputation from the cells.
    pub fn is_consistent(&self) -> bool {
        let cells_ok = self.cells.len() == self.ts.len() * self.hbars.len();
        let extra_ok = match &self.extrapolated {
            None => self.hbars.len() == 1,
            Some(x) => {
                x.len() == self.ts.len()
                    && (0..self.ts.len()).all(|ti| x[ti].map(f64::to_bits) == self.extrapolate(ti).map(f64::to_bits))
            }
        };
        cells_ok && extra_ok
    }

    /// Deterministic JSON body: descriptors plus column-major arrays.
    pub fn to_json(&self) -> Value {
        let n = self.cells.len();
        let per_cell = |f: &dyn Fn(&SweepCell) -> Option<f64>| column(self.cells.iter().map(f));
        let mut abs = Vec::with_capacity(n);
        let mut rel = Vec::with_capacity(n);
        for ti in 0..self.ts.len() {
            abs.extend(self.discrepancies(ti));
            rel.extend(self.relative_discrepancies(ti));
        }
        let ints = |f: &dyn Fn(&SweepCell) -> Option<u64>| {
            Value::Array(self.cells.iter().map(|c| f(c).map_or(Value::Null, Value::from)).collect())
        };
        let strings = |f: &dyn Fn(&SweepCell) -> Option<String>| {
            Value::Array(self.cells.iter().map(|c| f(c).map_or(Value::Null, Value::from)).collect())
        };
        let nt = self.ts.len();
        let extrap = |f: &dyn Fn(usize) -> Option<f64>| match self.extrapolated {
            None => Value::Null,
            Some(_) => column((0..nt).map(f)),
        };
        object([
            ("domain", serde_json::to_value(&self.domain).expect("descriptor serializes")),
            ("potential", serde_json::to_value(&self.potential).expect("descriptor serializes")),
            ("dimension", Value::from(self.dim as u64)),
            ("eta", Value::from(self.eta)),
            ("policy", serde_json::to_value(self.policy).expect("policy serializes")),
            ("raw", Value::from(self.is_raw())),
            (
                "cells",
                object([
                    ("t", per_cell(&|c| Some(c.t))),
                    ("hbar", per_cell(&|c| Some(c.hbar))),
                    ("spacing", per_cell(&|c| Some(c.spacing))),
                    ("value", per_cell(&|c| c.value)),
                    ("stderr", per_cell(&|c| c.stderr)),
                    ("truncation_bound", per_cell(&|c| c.truncation_bound)),
                    ("abs_discrepancy", column(abs)),
                    ("rel_discrepancy", column(rel)),
                    ("method", strings(&|c| c.method.map(|m| m.as_str().to_string()))),
                    ("n", ints(&|c| c.n.map(|v| v as u64))),
                    ("probes", ints(&|c| c.probes.map(|v| v as u64))),
                    ("degree", ints(&|c| c.degree.map(|v| v as u64))),
                    ("period", ints(&|c| c.period.map(|v| v as u64))),
                    ("seed", ints(&|c| c.seed)),
                    ("error", strings(&|c| c.error.clone())),
                ]),
            ),
            (
                "per_t",
                object([
                    ("t", column(self.ts.iter().map(|&t| Some(t)))),
                    ("oracle", column(self.oracle.iter().copied())),
                    (
                        "oracle_error",
                        Value::Array(self.oracle_error.iter().map(|e| e.clone().map_or(Value::Null, Value::from)).collect()),
                    ),
                    ("extrapolated", extrap(&|ti| self.extrapolated_value(ti))),
                    (
                        "extrapolated_abs_discrepancy",
                        extrap(&|ti| Some((self.extrapolated_value(ti)? - self.oracle[ti]?).abs())),
                    ),
                    ("extrapolated_rel_discrepancy", extrap(&|ti| self.extrapolated_relative_error(ti))),
                ]),
            ),
        ])
    }

    /// One row per (t, hbar) cell.
    pub fn to_csv(&self) -> String {
        let mut out = csv_line(
            &[
                "t", "hbar", "R", "spacing", "value", "stderr", "truncation_bound", "oracle", "abs_discrepancy",
                "rel_discrepancy", "extrapolated", "method", "n", "probes", "degree", "error",
            ]
            .map(String::from),
        );
        for ti in 0..self.ts.len() {
            let abs = self.discrepancies(ti);
            let rel = self.relative_discrepancies(ti);
            for hi in 0..self.hbars.len() {
                let c = self.cell(ti, hi);
                let int = |v: Option<usize>| v.map_or_else(String::new, |x| x.to_string());
                out.push_str(&csv_line(&[
                    fmt_f64(c.t),
                    fmt_f64(c.hbar),
                    fmt_f64(1.0 / c.hbar),
                    fmt_f64(c.spacing),
                    fmt_opt(c.value),
                    fmt_opt(c.stderr),
                    fmt_opt(c.truncation_bound),
                    fmt_opt(self.oracle[ti]),
                    fmt_opt(abs[hi]),
                    fmt_opt(rel[hi]),
                    fmt_opt(self.extrapolated_value(ti)),
                    c.method.map_or_else(String::new, |m| m.as_str().to_string()),
                    int(c.n),
                    int(c.probes),
                    int(c.degree),
                    c.error.clone().unwrap_or_default(),
                ]));
            }
        }
        out
    }
}

/// Inputs of a semiclassical sweep.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub ts: Vec<f64>,
    /// Strictly descending.
    pub hbars: Vec<f64>,
    pub eta: f64,
    pub policy: MethodPolicy,
    pub quad_tol: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            ts: vec![0.25, 0.5, 1.0, 2.0],
            hbars: vec![0.2, 0.1, 0.05],
            eta: DEFAULT_ETA,
            policy: MethodPolicy::default(),
            quad_tol: DEFAULT_QUAD_TOL,
        }
    }
}

fn check_sweep(spec: &SweepSpec) -> Result<()> {
    if spec.ts.is_empty() || spec.hbars.is_empty() {
        return Err(Error::InvalidParameter("t and hbar lists must be non-empty".into()));
    }
    if let Some(t) = spec.ts.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    if let Some(h) = spec.hbars.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidParameter(format!("hbar must be positive, got {h}")));
    }
    if spec.hbars.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("hbar list must be strictly descending".into()));
    }
    if !(spec.eta > 0.0 && spec.eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {}", spec.eta)));
    }
    Ok(())
}

/// Fills L(t, hbar) for every cell; a failing cell is recorded and the sweep
/// goes on. Cached cells are reused bit for bit.
pub fn sweep(
    domain: &Domain,
    potential: &Potential,
    spec: &SweepSpec,
    cache: Option<&dyn TraceCache>,
) -> Result<DOSReport> {
    check_sweep(spec)?;
    if potential.dim() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: potential.dim() });
    }
    let (nt, nh) = (spec.ts.len(), spec.hbars.len());
    let rescaled = potential.is_homogeneous();
    let mut cells: Vec<Option<SweepCell>> = vec![None; nt * nh];
    for (hi, &hbar) in spec.hbars.iter().enumerate() {
        // The operator is only needed for cache misses.
        let (spacing, normalization) = match cell_geometry(domain, hbar, spec.eta, rescaled) {
            Ok(g) => g,
            Err(err) => {
                for ti in 0..nt {
                    cells[ti * nh + hi] = Some(SweepCell::failed(spec.ts[ti], hbar, f64::NAN, &err));
                }
                continue;
            }
        };
        let keys: Vec<CellKey> = spec
            .ts
            .iter()
            .map(|&t| CellKey {
                domain: domain.descriptor(),
                potential: potential.descriptor(),
                hbar,
                t,
                spacing,
                rescaled,
                policy: spec.policy,
            })
            .collect();
        let mut missing = Vec::new();
        for (ti, key) in keys.iter().enumerate() {
            match cache.and_then(|c| c.get(key)) {
                Some(e) => {
                    let op_free = NormalizedTrace {
                        value: e.value * normalization,
                        stderr: e.stderr * normalization,
                        truncation_bound: e.truncation_bound * normalization,
                        hbar: if rescaled { hbar } else { 1.0 },
                        spacing,
                        estimate: e,
                    };
                    cells[ti * nh + hi] = Some(SweepCell { hbar, ..SweepCell::from_trace(&op_free) });
                }
                None => missing.push(ti),
            }
        }
        if missing.is_empty() {
            continue;
        }
        let ts: Vec<f64> = missing.iter().map(|&ti| spec.ts[ti]).collect();
        let result = operator_at(domain, potential, hbar, spec.eta)
            .and_then(|op| Ok((heat_traces(&op.hamiltonian, &ts, &spec.policy)?, op)));
        match result {
            Ok((estimates, op)) => {
                for (&ti, e) in missing.iter().zip(estimates) {
                    if let Some(c) = cache {
                        c.put(&keys[ti], &e);
                    }
                    cells[ti * nh + hi] = Some(SweepCell { hbar, ..SweepCell::from_trace(&normalize(&op, e)) });
                }
            }
            Err(err) => {
                for &ti in &missing {
                    cells[ti * nh + hi] = Some(SweepCell::failed(spec.ts[ti], hbar, spacing, &err));
                }
            }
        }
    }
    let mut oracle = Vec::with_capacity(nt);
    let mut oracle_error = Vec::with_capacity(nt);
    for &t in &spec.ts {
        match oracle_laplace(potential, domain, t, spec.quad_tol) {
            Ok(v) => {
                oracle.push(Some(v));
                oracle_error.push(None);
            }
            Err(e) => {
                oracle.push(None);
                oracle_error.push(Some(e.to_string()));
            }
        }
    }
    let mut report = DOSReport {
        domain: domain.descriptor(),
        potential: potential.descriptor(),
        dim: domain.dim(),
        eta: spec.eta,
        policy: spec.policy,
        ts: spec.ts.clone(),
        hbars: spec.hbars.clone(),
        cells: cells.into_iter().map(|c| c.expect("every cell is filled")).collect(),
        oracle,
        oracle_error,
        extrapolated: None,
    };
    if nh >= 2 {
        report.extrapolated = Some((0..nt).map(|ti| report.extrapolate(ti)).collect());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::MethodPolicy;

    #[test]
    fn free_oracle() {
        let v = Potential::zero(2).unwrap();
        let b = Domain::cube(2, 1.0).unwrap();
        assert!((oracle_laplace(&v, &b, 1.0, 1e-10).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        let c = Potential::constant(3, 0.7).unwrap();
        let expect = (8.0 * PI).powf(-1.5) * (-1.4f64).exp();
        let box3 = oracle_laplace(&c, &Domain::cube(3, 1.0).unwrap(), 2.0, 1e-10).unwrap();
        let ball3 = oracle_laplace(&c, &Domain::ball(3, 1.0).unwrap(), 2.0, 1e-10).unwrap();
        assert_eq!(box3.to_bits(), ball3.to_bits());
        assert!((box3 - expect).abs() < 1e-15);
    }

    #[test]
    fn constant_shift_is_exact_factor() {
        let b = Domain::cube(2, 1.0).unwrap();
        let policy = MethodPolicy::default();
        let zero = finite_volume_laplace(&b, &Potential::zero(2).unwrap(), 4.0, 1.0, 0.25, &policy).unwrap();
        let c = finite_volume_laplace(&b, &Potential::constant(2, 0.3).unwrap(), 4.0, 1.0, 0.25, &policy).unwrap();
        assert!((c.value - zero.value * (-0.3f64).exp()).abs() < 1e-12 * zero.value);
    }

    #[test]
    fn raw_single_hbar() {
        let b = Domain::cube(2, 1.0).unwrap();
        let spec = SweepSpec { ts: vec![1.0], hbars: vec![0.25], eta: 0.25, ..Default::default() };
        let r = sweep(&b, &Potential::zero(2).unwrap(), &spec, None).unwrap();
        assert!(r.is_raw());
        assert!(r.is_consistent());
        assert!(r.cells[0].value.unwrap() > 0.0);
    }

    #[test]
    fn sweep_rejects_ascending_hbar() {
        let b = Domain::cube(2, 1.0).unwrap();
        let spec = SweepSpec { ts: vec![1.0], hbars: vec![0.1, 0.2], ..Default::default() };
        assert!(sweep(&b, &Potential::zero(2).unwrap(), &spec, None).is_err());
    }

    #[test]
    fn failing_cells_are_recorded() {
        let b = Domain::cube(2, 1.0).unwrap();
        let policy = MethodPolicy { dense_cap: 10, probes: 4, estimator: crate::spectral::Estimator::Hutchinson, ..Default::default() };
        let spec = SweepSpec { ts: vec![1.0], hbars: vec![0.5, 0.25], eta: 0.5, policy, ..Default::default() };
        let r = sweep(&b, &Potential::zero(2).unwrap(), &spec, None).unwrap();
        assert!(r.cells.iter().all(|c| c.value.is_none() && c.error.is_some()));
        assert_eq!(r.extrapolated, Some(vec![None]));
    }

    #[test]
    fn richardson_linear_exact() {
        let f = |h: f64| 2.0 + 3.0 * h;
        assert!((richardson(0.2, f(0.2), 0.1, f(0.1)) - 2.0).abs() < 1e-15);
    }
}
