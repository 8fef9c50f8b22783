//! Gauss rules, adaptive Gauss-Kronrod integration on intervals and adaptive
//! tensor-product Gauss cubature on hyperrectangles.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default evaluation budget for adaptive rules.
pub const DEFAULT_MAX_EVALS: usize = 20_000_000;

/// Points per axis of the tensor Gauss rule used on cubature panels.
const PANEL_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub evaluations: usize,
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(Debug)]
struct Piece<T> {
    err: f64,
    value: f64,
    data: T,
}

impl<T> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl<T> Eq for Piece<T> {}
impl<T> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn totals<T>(heap: &BinaryHeap<Piece<T>>) -> (f64, f64) {
    // Sorted summation keeps the result independent of heap layout.
    let mut pieces: Vec<(f64, f64)> = heap.iter().map(|p| (p.value, p.err)).collect();
    pieces.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    pieces.iter().fold((0.0, 0.0), |(v, e), p| (v + p.0, e + p.1))
}

/// Globally adaptive Gauss-Kronrod (7/15) integration of `f` over [a, b].
/// `breakpoints` inside (a, b) start the subdivision, e.g. at known kinks.
pub fn integrate_1d<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
    max_evals: usize,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite() && b >= a) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bad interval [{a}, {b}] or tolerance {tol}"
        )));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&p| p > a && p < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in cuts.windows(2) {
        let (value, err) = gk15(&mut f, w[0], w[1]);
        evals += 15;
        heap.push(Piece { err, value, data: (w[0], w[1]) });
    }
    loop {
        let (value, error) = totals(&heap);
        if error <= tol {
            return Ok(Integral { value, error, evaluations: evals });
        }
        if evals >= max_evals {
            return Err(Error::QuadratureNonConvergence { estimate: value, error, tol, evaluations: evals });
        }
        // Refine a batch of the worst pieces before re-summing.
        for _ in 0..heap.len().min(16) {
            let worst = heap.pop().expect("non-empty heap");
            let (lo, hi) = worst.data;
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                // Interval exhausted at machine precision; keep it as is.
                heap.push(Piece { err: 0.0, ..worst });
                continue;
            }
            for (l, r) in [(lo, mid), (mid, hi)] {
                let (value, err) = gk15(&mut f, l, r);
                evals += 15;
                heap.push(Piece { err, value, data: (l, r) });
            }
        }
    }
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

struct Region {
    lo: Vec<f64>,
    hi: Vec<f64>,
    child_values: Vec<f64>,
}

/// Adaptive tensor-product Gauss cubature over the box [lo, hi].
///
/// Each panel is integrated with a tensor Gauss-Legendre rule and with the
/// same rule on its 2^d children; their difference is the panel error
/// estimate. `cuts[k]` lists interior hyperplanes x_k = c that panels never
/// straddle, so integrands with kinks there stay smooth per panel.
pub fn integrate_box<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lo: &[f64],
    hi: &[f64],
    cuts: &[Vec<f64>],
    tol: f64,
    max_evals: usize,
) -> Result<Integral> {
    let d = lo.len();
    if d == 0 || hi.len() != d || !(tol > 0.0) {
        return Err(Error::InvalidParameter("bad cubature box or tolerance".into()));
    }
    if lo.iter().zip(hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && b >= a)) {
        return Err(Error::InvalidParameter("cubature box bounds must be finite and ordered".into()));
    }
    if lo.iter().zip(hi).any(|(a, b)| a == b) {
        return Ok(Integral { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let (nodes, weights) = gauss_legendre(PANEL_ORDER);
    let rule = Rule { nodes, weights };
    let mut evals = 0usize;
    let mut scratch = vec![0.0; d];

    // Axis-wise breakpoints.
    let axis_cuts: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut c = vec![lo[k]];
            if let Some(extra) = cuts.get(k) {
                c.extend(extra.iter().copied().filter(|&p| p > lo[k] && p < hi[k]));
            }
            c.push(hi[k]);
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        })
        .collect();

    let mut heap = BinaryHeap::new();
    let counts: Vec<usize> = axis_cuts.iter().map(|c| c.len() - 1).collect();
    let total: usize = counts.iter().product();
    for flat in 0..total {
        let mut rem = flat;
        let mut rlo = vec![0.0; d];
        let mut rhi = vec![0.0; d];
        for k in 0..d {
            let i = rem % counts[k];
            rem /= counts[k];
            rlo[k] = axis_cuts[k][i];
            rhi[k] = axis_cuts[k][i + 1];
        }
        let q = tensor_rule(&mut f, &rule, &rlo, &rhi, &mut scratch, &mut evals);
        heap.push(make_region(&mut f, &rule, rlo, rhi, q, &mut scratch, &mut evals));
    }

    loop {
        let (value, error) = totals(&heap);
        if error <= tol {
            return Ok(Integral { value, error, evaluations: evals });
        }
        if evals >= max_evals {
            return Err(Error::QuadratureNonConvergence { estimate: value, error, tol, evaluations: evals });
        }
        for _ in 0..heap.len().min(8) {
            let worst = heap.pop().expect("non-empty heap");
            let region = worst.data;
            let degenerate = (0..d).any(|k| {
                let mid = 0.5 * (region.lo[k] + region.hi[k]);
                !(mid > region.lo[k] && mid < region.hi[k])
            });
            if degenerate {
                heap.push(Piece { err: 0.0, value: worst.value, data: region });
                continue;
            }
            for (c, &q) in region.child_values.iter().enumerate() {
                let (clo, chi) = child_box(&region.lo, &region.hi, c);
                heap.push(make_region(&mut f, &rule, clo, chi, q, &mut scratch, &mut evals));
            }
        }
    }
}

fn child_box(lo: &[f64], hi: &[f64], c: usize) -> (Vec<f64>, Vec<f64>) {
    let d = lo.len();
    let mut clo = vec![0.0; d];
    let mut chi = vec![0.0; d];
    for k in 0..d {
        let mid = 0.5 * (lo[k] + hi[k]);
        if (c >> k) & 1 == 0 {
            clo[k] = lo[k];
            chi[k] = mid;
        } else {
            clo[k] = mid;
            chi[k] = hi[k];
        }
    }
    (clo, chi)
}

fn make_region<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    rule: &Rule,
    lo: Vec<f64>,
    hi: Vec<f64>,
    q_self: f64,
    scratch: &mut [f64],
    evals: &mut usize,
) -> Piece<Region> {
    let d = lo.len();
    let child_values: Vec<f64> = (0..1usize << d)
        .map(|c| {
            let (clo, chi) = child_box(&lo, &hi, c);
            tensor_rule(f, rule, &clo, &chi, scratch, evals)
        })
        .collect();
    let value: f64 = child_values.iter().sum();
    Piece { err: (value - q_self).abs(), value, data: Region { lo, hi, child_values } }
}

fn tensor_rule<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    rule: &Rule,
    lo: &[f64],
    hi: &[f64],
    x: &mut [f64],
    evals: &mut usize,
) -> f64 {
    let d = lo.len();
    let n = rule.nodes.len();
    let total = n.pow(d as u32);
    let mut sum = 0.0;
    for flat in 0..total {
        let mut rem = flat;
        let mut w = 1.0;
        for k in 0..d {
            let i = rem % n;
            rem /= n;
            let half = 0.5 * (hi[k] - lo[k]);
            x[k] = lo[k] + half * (1.0 + rule.nodes[i]);
            w *= half * rule.weights[i];
        }
        sum += w * f(x);
    }
    *evals += total;
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for p in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p + 1) as f64 };
                assert!((q - exact).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn adaptive_1d_handles_kinks_and_endpoint_singularities() {
        let r = integrate_1d(|x: f64| x.abs(), -1.0, 2.0, &[], 1e-12, DEFAULT_MAX_EVALS).unwrap();
        assert!((r.value - 2.5).abs() < 1e-11);
        let r = integrate_1d(|x: f64| x.sqrt(), 0.0, 1.0, &[], 1e-10, DEFAULT_MAX_EVALS).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-10);
        assert_eq!(integrate_1d(|x| x, 1.0, 1.0, &[], 1e-9, 100).unwrap().value, 0.0);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let r = integrate_1d(|x: f64| (1.0 / x).sin(), 1e-8, 1.0, &[], 1e-14, 1000);
        assert!(matches!(r, Err(Error::QuadratureNonConvergence { .. })));
    }

    #[test]
    fn cubature_smooth_and_discontinuous() {
        let r = integrate_box(
            |x: &[f64]| (x[0] + 2.0 * x[1]).exp(),
            &[0.0, 0.0],
            &[1.0, 1.0],
            &[],
            1e-12,
            DEFAULT_MAX_EVALS,
        )
        .unwrap();
        let exact = (1f64.exp() - 1.0) * (2f64.exp() - 1.0) / 2.0;
        assert!((r.value - exact).abs() < 1e-12);

        // Indicator of x0 < 0.3 with a cut placed at the jump.
        let r = integrate_box(
            |x: &[f64]| if x[0] < 0.3 { 1.0 } else { 0.0 },
            &[0.0, 0.0, 0.0],
            &[1.0, 1.0, 1.0],
            &[vec![0.3]],
            1e-12,
            DEFAULT_MAX_EVALS,
        )
        .unwrap();
        assert!((r.value - 0.3).abs() < 1e-12);
    }

    #[test]
    fn cubature_point_singularity() {
        // x y / (x^2 + y^2) on the unit square: (1/2) log 2.
        let r = integrate_box(
            |x: &[f64]| {
                let s = x[0] * x[0] + x[1] * x[1];
                if s == 0.0 { 0.0 } else { x[0] * x[1] / s }
            },
            &[0.0, 0.0],
            &[1.0, 1.0],
            &[],
            1e-10,
            DEFAULT_MAX_EVALS,
        )
        .unwrap();
        assert!((r.value - 0.5 * 2f64.ln()).abs() < 1e-9, "{}", r.value);
    }
}
