//! Integrated density of states curves and their Laplace transforms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::finite_volume_operator;
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::output::{column, csv_line, fmt_f64, object};
use crate::potential::Potential;
use crate::quadrature::integrate_1d;
use crate::special::gamma_half;
use crate::spectral::eigen_dense;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    EmpiricalCounting,
    SurfaceAverageUniform,
    SurfaceAverageWeighted,
    FreeConstant,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::EmpiricalCounting => "empirical-counting",
            Provenance::SurfaceAverageUniform => "surface-average-uniform",
            Provenance::SurfaceAverageWeighted => "surface-average-weighted",
            Provenance::FreeConstant => "free-constant",
        }
    }

    /// Human label.
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::EmpiricalCounting => "eigenvalue counting",
            Provenance::SurfaceAverageUniform => "paper form",
            Provenance::SurfaceAverageWeighted => "star-shaped form",
            Provenance::FreeConstant => "free constant",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceVariant {
    /// Weight dsigma / |boundary|.
    Uniform,
    /// Weight (sigma . n / d) dsigma / |Omega|.
    ConeWeighted,
}

/// What is known about the curve past its last grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Tail {
    /// The curve never exceeds `total`.
    Saturating { total: f64 },
    /// nu(l) <= nu(l_max) ((l - onset)/(l_max - onset))^exponent for l > l_max.
    PowerLaw { onset: f64, exponent: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IDSCurve {
    pub lambda: Vec<f64>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    pub dim: usize,
    pub tail: Tail,
}

impl IDSCurve {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn to_json(&self) -> Value {
        object([
            ("provenance", Value::from(self.provenance.as_str())),
            ("label", Value::from(self.provenance.label())),
            ("dimension", Value::from(self.dim as u64)),
            ("tail", serde_json::to_value(self.tail).expect("tail serializes")),
            ("lambda", column(self.lambda.iter().map(|&x| Some(x)))),
            ("values", column(self.values.iter().map(|&x| Some(x)))),
        ])
    }

    /// One row per lambda.
    pub fn to_csv(&self) -> String {
        let mut out = csv_line(&["lambda".to_string(), "ids".to_string()]);
        for (l, v) in self.lambda.iter().zip(&self.values) {
            out.push_str(&csv_line(&[fmt_f64(*l), fmt_f64(*v)]));
        }
        out
    }
}

/// IDS of -Delta + c in dimension d: (4 pi)^{-d/2} / Gamma(d/2 + 1) (lambda - c)_+^{d/2}.
pub fn free_ids(lambda: f64, c: f64, d: usize) -> f64 {
    if lambda <= c {
        return 0.0;
    }
    (4.0 * PI).powf(-(d as f64) / 2.0) / gamma_half(d + 2) * (lambda - c).powf(d as f64 / 2.0)
}

fn check_grid(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("lambda grid is empty".into()));
    }
    if lambdas.iter().any(|l| !l.is_finite()) || lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("lambda grid must be finite and strictly ascending".into()));
    }
    Ok(())
}

pub fn free_ids_curve(lambdas: &[f64], c: f64, d: usize) -> Result<IDSCurve> {
    check_grid(lambdas)?;
    Ok(IDSCurve {
        lambda: lambdas.to_vec(),
        values: lambdas.iter().map(|&l| free_ids(l, c, d)).collect(),
        provenance: Provenance::FreeConstant,
        dim: d,
        tail: Tail::PowerLaw { onset: c, exponent: d as f64 / 2.0 },
    })
}

/// Boundary average of free IDS curves shifted by V(sigma).
pub fn surface_average_ids(
    potential: &Potential,
    domain: &Domain,
    lambdas: &[f64],
    variant: SurfaceVariant,
    resolution: usize,
) -> Result<IDSCurve> {
    check_grid(lambdas)?;
    if !potential.is_homogeneous() {
        return Err(Error::NonHomogeneous("the surface-average formula needs V(tx) = V(x)".into()));
    }
    if potential.dim() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: potential.dim() });
    }
    let d = domain.dim();
    let q = domain.boundary_quadrature(resolution)?;
    let (weights, norm): (Vec<f64>, f64) = match variant {
        SurfaceVariant::Uniform => (q.weights.clone(), q.total_weight()),
        SurfaceVariant::ConeWeighted => {
            ((0..q.len()).map(|i| q.weights[i] * q.support(i) / d as f64).collect(), domain.volume())
        }
    };
    let shifts = (0..q.len()).map(|i| potential.eval(q.point(i))).collect::<Result<Vec<f64>>>()?;
    if let Some(c) = potential.as_constant() {
        return Ok(IDSCurve {
            provenance: provenance_of(variant),
            ..free_ids_curve(lambdas, c, d)?
        });
    }
    let values = lambdas
        .iter()
        .map(|&l| weights.iter().zip(&shifts).map(|(w, &c)| w * free_ids(l, c, d)).sum::<f64>() / norm)
        .collect();
    let onset = shifts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(IDSCurve {
        lambda: lambdas.to_vec(),
        values,
        provenance: provenance_of(variant),
        dim: d,
        tail: Tail::PowerLaw { onset, exponent: d as f64 / 2.0 },
    })
}

fn provenance_of(variant: SurfaceVariant) -> Provenance {
    match variant {
        SurfaceVariant::Uniform => Provenance::SurfaceAverageUniform,
        SurfaceVariant::ConeWeighted => Provenance::SurfaceAverageWeighted,
    }
}

/// #{eigenvalues <= lambda} / |R Omega| for the discretization on R Omega with
/// lattice spacing eta.
pub fn empirical_ids(
    domain: &Domain,
    potential: &Potential,
    r: f64,
    lambdas: &[f64],
    eta: f64,
    cap: usize,
) -> Result<IDSCurve> {
    check_grid(lambdas)?;
    let op = finite_volume_operator(domain, potential, r, eta)?;
    let ev = eigen_dense(&op.hamiltonian, cap)?;
    let k = op.normalization;
    Ok(IDSCurve {
        lambda: lambdas.to_vec(),
        values: lambdas.iter().map(|&l| ev.partition_point(|&e| e <= l) as f64 * k).collect(),
        provenance: Provenance::EmpiricalCounting,
        dim: domain.dim(),
        tail: Tail::Saturating { total: ev.len() as f64 * k },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceOfIds {
    /// Sum of e^{-t lambda_i} (nu_i - nu_{i-1}), nu_{-1} = 0: exact for a step
    /// function with jumps on the grid.
    pub value: f64,
    /// Upper bound on the mass beyond the last grid point, from the curve's tail model.
    pub tail_bound: f64,
    /// Gap to the left-endpoint sum; brackets any monotone curve through the samples.
    pub grid_bound: f64,
}

pub fn laplace_of_ids(curve: &IDSCurve, t: f64) -> Result<LaplaceOfIds> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    check_grid(&curve.lambda)?;
    if curve.values.len() != curve.lambda.len() {
        return Err(Error::InvalidParameter("curve has mismatched columns".into()));
    }
    if let Some(i) = curve.values.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::NonMonotone { index: i + 1 });
    }
    let mut value = 0.0;
    let mut grid_bound = 0.0;
    let mut prev = 0.0;
    for (i, (&l, &v)) in curve.lambda.iter().zip(&curve.values).enumerate() {
        let jump = v - prev;
        value += (-t * l).exp() * jump;
        if i > 0 {
            grid_bound += ((-t * curve.lambda[i - 1]).exp() - (-t * l).exp()) * jump;
        }
        prev = v;
    }
    let lm = *curve.lambda.last().expect("grid is non-empty");
    let vm = *curve.values.last().expect("grid is non-empty");
    Ok(LaplaceOfIds { value, tail_bound: tail_mass(curve.tail, lm, vm, t)?, grid_bound })
}

/// Bound on the integral of e^{-t l} d nu over (lm, infinity).
fn tail_mass(tail: Tail, lm: f64, vm: f64, t: f64) -> Result<f64> {
    match tail {
        Tail::Saturating { total } => Ok((-t * lm).exp() * (total - vm).max(0.0)),
        Tail::PowerLaw { onset, exponent } => {
            if onset >= lm {
                return Ok(f64::INFINITY);
            }
            // Integrating by parts against the envelope K (l - a)^p gives
            // K e^{-ta} t^{-p} Gamma(p + 1, t (lm - a)) - e^{-t lm} nu(lm).
            let x0 = t * (lm - onset);
            let scale = (-x0).exp() * x0.max(1.0).powf(exponent);
            let upper = integrate_1d(|x| (-x).exp() * x.powf(exponent), x0, x0 + 200.0 + 10.0 * exponent, &[], 1e-13 * scale, 1_000_000)?;
            let k = vm / (lm - onset).powf(exponent);
            let envelope = k * (-t * onset).exp() * t.powf(-exponent) * upper.value;
            Ok((envelope - (-t * lm).exp() * vm).max(0.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn free_values() {
        assert_eq!(free_ids(0.5, 1.0, 2), 0.0);
        assert!((free_ids(4.0 * PI, 0.0, 2) - 1.0).abs() < 1e-15);
        // d = 1: sqrt(lambda) / pi.
        assert!((free_ids(PI * PI, 0.0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_jump() {
        let c = IDSCurve {
            lambda: vec![0.0, 1.0, 2.0, 3.0],
            values: vec![0.0, 0.0, 1.0, 1.0],
            provenance: Provenance::EmpiricalCounting,
            dim: 1,
            tail: Tail::Saturating { total: 1.0 },
        };
        let l = laplace_of_ids(&c, 0.7).unwrap();
        assert_eq!(l.value, (-1.4f64).exp());
        assert_eq!(l.tail_bound, 0.0);
    }

    #[test]
    fn non_monotone_rejected() {
        let c = IDSCurve {
            lambda: vec![0.0, 1.0, 2.0],
            values: vec![0.0, 1.0, 0.5],
            provenance: Provenance::EmpiricalCounting,
            dim: 1,
            tail: Tail::Saturating { total: 1.0 },
        };
        assert_eq!(laplace_of_ids(&c, 1.0), Err(Error::NonMonotone { index: 2 }));
    }

    #[test]
    fn free_curve_laplace_with_tail() {
        // Truncating early leaves most of the mass to the tail bound.
        let c = free_ids_curve(&grid(0.0, 3.0, 3001), 0.0, 2).unwrap();
        let l = laplace_of_ids(&c, 1.0).unwrap();
        let exact = 1.0 / (4.0 * PI);
        assert!(l.value <= exact && exact <= l.value + l.grid_bound + l.tail_bound + 1e-12);
        // For d = 2 the envelope is the curve itself, so the tail is exact.
        assert!((l.value + l.tail_bound - exact).abs() < 1e-3 * exact);
    }

    #[test]
    fn surface_variants_agree_on_ball_and_box() {
        let v = Potential::example(2).unwrap();
        let ls = grid(0.0, 10.0, 101);
        for dom in [Domain::ball(2, 1.0).unwrap(), Domain::cube(2, 1.0).unwrap()] {
            let u = surface_average_ids(&v, &dom, &ls, SurfaceVariant::Uniform, 4000).unwrap();
            let w = surface_average_ids(&v, &dom, &ls, SurfaceVariant::ConeWeighted, 4000).unwrap();
            assert!(u.is_monotone());
            let tol = if matches!(dom.kind_name(), "ball") { 1e-6 } else { 1e-10 };
            for (a, b) in u.values.iter().zip(&w.values) {
                assert!((a - b).abs() <= tol * a.max(1e-300), "{} {a} {b}", dom.kind_name());
            }
        }
    }

    #[test]
    fn surface_constant_is_free() {
        let v = Potential::constant(2, 0.4).unwrap();
        let ls = grid(0.0, 5.0, 21);
        let u = surface_average_ids(&v, &Domain::ball(2, 1.0).unwrap(), &ls, SurfaceVariant::Uniform, 64).unwrap();
        for (l, x) in ls.iter().zip(&u.values) {
            assert_eq!(*x, free_ids(*l, 0.4, 2));
        }
    }

    #[test]
    fn empirical_below_spectrum() {
        let dom = Domain::cube(2, 1.0).unwrap();
        let c = empirical_ids(&dom, &Potential::zero(2).unwrap(), 4.0, &[0.01, 1.0, 5.0, 50.0], 0.25, 4000).unwrap();
        assert_eq!(c.values[0], 0.0);
        assert!(c.is_monotone());
        assert_eq!(c.provenance, Provenance::EmpiricalCounting);
    }
}
