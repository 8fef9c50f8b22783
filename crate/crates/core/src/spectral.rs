//! Heat traces Tr exp(-tH): full spectra for small operators, Chebyshev
//! moment estimators for large ones.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::DiscreteHamiltonian;
use crate::error::{Error, Result};
use crate::special::scaled_bessel_i;

pub const DEFAULT_DENSE_CAP: usize = 4000;
pub const DEFAULT_POLY_TOL: f64 = 1e-10;
pub const MIN_PROBES: usize = 8;

/// Probe vectors advanced together through one sweep over the matrix.
const LANES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    /// Hutchinson averaging over Rademacher probes.
    Stochastic,
    /// Lattice-coloured probing with random signs inside each colour class.
    Probing,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::Stochastic => "stochastic",
            Method::Probing => "probing",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatTraceEstimate {
    pub t: f64,
    pub value: f64,
    pub method: Method,
    /// Estimated standard error of `value`; 0 for dense.
    pub stderr: f64,
    /// N times the uniform polynomial error; 0 for dense.
    pub truncation_bound: f64,
    /// Number of probe vectors (0 for dense).
    pub probes: usize,
    /// Chebyshev degree (0 for dense).
    pub degree: usize,
    pub seed: u64,
    /// Colouring period per axis (probing only, else 0).
    pub period: usize,
    /// Operator dimension.
    pub n: usize,
}

/// Full ascending spectrum.
pub fn eigen_dense(h: &DiscreteHamiltonian, cap: usize) -> Result<Vec<f64>> {
    if h.len() > cap {
        return Err(Error::OverDenseCap { n: h.len(), cap });
    }
    let mut ev: Vec<f64> = h.to_dense().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

pub fn heat_trace_dense(h: &DiscreteHamiltonian, t: f64, cap: usize) -> Result<HeatTraceEstimate> {
    heat_traces_dense(h, &[t], cap).map(|mut v| v.remove(0))
}

/// One eigensolve shared by every t.
pub fn heat_traces_dense(h: &DiscreteHamiltonian, ts: &[f64], cap: usize) -> Result<Vec<HeatTraceEstimate>> {
    check_times(ts)?;
    let ev = eigen_dense(h, cap)?;
    Ok(ts
        .iter()
        .map(|&t| HeatTraceEstimate {
            t,
            value: trace_from_spectrum(&ev, t),
            method: Method::Dense,
            stderr: 0.0,
            truncation_bound: 0.0,
            probes: 0,
            degree: 0,
            seed: 0,
            period: 0,
            n: h.len(),
        })
        .collect())
}

pub fn trace_from_spectrum(eigenvalues: &[f64], t: f64) -> f64 {
    eigenvalues.iter().map(|l| (-t * l).exp()).sum()
}

fn check_times(ts: &[f64]) -> Result<()> {
    match ts.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        Some(t) => Err(Error::InvalidParameter(format!("t must be positive, got {t}"))),
        None => Ok(()),
    }
}

/// Chebyshev expansion of lambda -> exp(-t lambda) on [lo, hi].
///
/// With lambda = lo + w (1 + x), w = (hi - lo)/2 and z = t w, the coefficients
/// are c_k = e^{-t lo} (2 - [k = 0]) (-1)^k e^{-z} I_k(z). The uniform error of
/// the truncation is at most the tail sum of |c_k|.
#[derive(Clone, Debug)]
pub struct ChebyshevExp {
    t: f64,
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
    uniform_error: f64,
}

impl ChebyshevExp {
    /// Picks the smallest degree meeting `tol` unless `degree` is given, in
    /// which case a degree that misses `tol` is an error naming the one needed.
    pub fn new(t: f64, lo: f64, hi: f64, degree: Option<usize>, tol: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidParameter(format!("bad interval [{lo}, {hi}]")));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
        }
        let (lo, hi) = widen(lo, hi);
        let z = t * 0.5 * (hi - lo);
        let scale = (-t * lo).exp();
        let kmax = degree.unwrap_or(0).max((z + 40.0 * (z + 1.0).sqrt()) as usize + 60);
        let s = scaled_bessel_i(z, kmax);
        let c: Vec<f64> = s
            .iter()
            .enumerate()
            .map(|(k, &sk)| {
                let w = if k == 0 { 1.0 } else { 2.0 };
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                scale * w * sign * sk
            })
            .collect();
        // tail[k] = sum_{j > k} |c_j|; the ratio s_{k+1}/s_k decreases in k, so
        // the part past kmax is bounded by a geometric series.
        let r = if s[kmax - 1] > 0.0 { s[kmax] / s[kmax - 1] } else { 0.0 };
        let mut tail = vec![0.0; kmax + 1];
        tail[kmax] = if r < 1.0 { c[kmax].abs() * r / (1.0 - r) } else { f64::INFINITY };
        for k in (0..kmax).rev() {
            tail[k] = tail[k + 1] + c[k + 1].abs();
        }
        let required = (0..=kmax).find(|&k| tail[k] <= tol).unwrap_or(kmax + 1);
        let deg = match degree {
            Some(d) if tail[d] > tol => {
                return Err(Error::DegreeInsufficient { degree: d, required, bound: tail[d], tol })
            }
            Some(d) => d,
            None if required > kmax => {
                return Err(Error::DegreeInsufficient { degree: kmax, required, bound: tail[kmax], tol })
            }
            None => required,
        };
        Ok(Self { t, lo, hi, coeffs: c[..=deg].to_vec(), uniform_error: tail[deg] })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn uniform_error(&self) -> f64 {
        self.uniform_error
    }

    /// Clenshaw evaluation of the truncated series.
    pub fn eval(&self, lambda: f64) -> f64 {
        let (center, inv_half) = affine(self.lo, self.hi);
        let x = (lambda - center) * inv_half;
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs[1..].iter().rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + self.coeffs[0]
    }

    /// Sum c_k mu_k over the stored degree.
    fn apply(&self, moments: &[f64]) -> f64 {
        self.coeffs.iter().zip(moments).map(|(c, m)| c * m).sum()
    }
}

/// Degenerate intervals are widened so the affine map stays finite.
fn widen(lo: f64, hi: f64) -> (f64, f64) {
    let floor = 1e-12 * (1.0 + lo.abs());
    if hi - lo < floor {
        (lo, lo + 1e-8 * (1.0 + lo.abs()))
    } else {
        (lo, hi)
    }
}

fn affine(lo: f64, hi: f64) -> (f64, f64) {
    let half = 0.5 * (hi - lo);
    (lo + half, 1.0 / half)
}

fn expansions(h: &DiscreteHamiltonian, ts: &[f64], degree: Option<usize>, tol: f64) -> Result<Vec<ChebyshevExp>> {
    check_times(ts)?;
    let (lo, hi) = h.gershgorin_interval();
    ts.iter().map(|&t| ChebyshevExp::new(t, lo, hi, degree, tol)).collect()
}

/// y <- (first ? A x : 2 A x - y), A = (H - center) * inv_half, on LANES columns.
fn chebyshev_step(
    h: &DiscreteHamiltonian,
    center: f64,
    inv_half: f64,
    x: &[[f64; LANES]],
    y: &mut [[f64; LANES]],
    first: bool,
) {
    let (row_ptr, cols, vals) = h.csr();
    for (i, yi) in y.iter_mut().enumerate() {
        let mut acc = [0.0; LANES];
        for p in row_ptr[i]..row_ptr[i + 1] {
            let a = vals[p];
            let xj = &x[cols[p] as usize];
            for l in 0..LANES {
                acc[l] += a * xj[l];
            }
        }
        let xi = &x[i];
        if first {
            for l in 0..LANES {
                yi[l] = (acc[l] - center * xi[l]) * inv_half;
            }
        } else {
            for l in 0..LANES {
                yi[l] = 2.0 * (acc[l] - center * xi[l]) * inv_half - yi[l];
            }
        }
    }
}

fn lane_dots(a: &[[f64; LANES]], b: &[[f64; LANES]]) -> [f64; LANES] {
    let mut out = [0.0; LANES];
    for (ai, bi) in a.iter().zip(b) {
        for l in 0..LANES {
            out[l] += ai[l] * bi[l];
        }
    }
    out
}

/// mu_k = v^T T_k(A) v for k = 0..=degree, using mu_{2k} = 2 v_k.v_k - mu_0 and
/// mu_{2k+1} = 2 v_{k+1}.v_k - mu_1, so about degree/2 products are needed.
fn block_moments(
    h: &DiscreteHamiltonian,
    center: f64,
    inv_half: f64,
    start: Vec<[f64; LANES]>,
    degree: usize,
) -> Vec<[f64; LANES]> {
    let mut mu = vec![[0.0; LANES]; degree + 1];
    mu[0] = lane_dots(&start, &start);
    if degree == 0 {
        return mu;
    }
    let mut prev = start;
    let mut cur = vec![[0.0; LANES]; prev.len()];
    chebyshev_step(h, center, inv_half, &prev, &mut cur, true);
    mu[1] = lane_dots(&cur, &prev);
    let mut k = 1;
    while 2 * k <= degree {
        let sq = lane_dots(&cur, &cur);
        for l in 0..LANES {
            mu[2 * k][l] = 2.0 * sq[l] - mu[0][l];
        }
        if 2 * k + 1 > degree {
            break;
        }
        chebyshev_step(h, center, inv_half, &cur, &mut prev, false);
        std::mem::swap(&mut prev, &mut cur);
        let cross = lane_dots(&cur, &prev);
        for l in 0..LANES {
            mu[2 * k + 1][l] = 2.0 * cross[l] - mu[1][l];
        }
        k += 1;
    }
    mu
}

/// Moments for `count` start vectors; `fill(index, block, lane)` writes start
/// vector `index` into lane `lane` of a zeroed block. Output is ordered by index.
fn moments_for_starts<F>(
    h: &DiscreteHamiltonian,
    lo: f64,
    hi: f64,
    count: usize,
    degree: usize,
    fill: F,
) -> Vec<Vec<f64>>
where
    F: Fn(usize, &mut [[f64; LANES]], usize) + Sync,
{
    let (center, inv_half) = affine(lo, hi);
    let n = h.len();
    let blocks = count.div_ceil(LANES);
    let per_block: Vec<Vec<[f64; LANES]>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut start = vec![[0.0; LANES]; n];
            for lane in 0..LANES {
                let idx = b * LANES + lane;
                if idx < count {
                    fill(idx, &mut start, lane);
                }
            }
            block_moments(h, center, inv_half, start, degree)
        })
        .collect();
    (0..count)
        .map(|idx| per_block[idx / LANES].iter().map(|m| m[idx % LANES]).collect())
        .collect()
}

fn probe_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StochasticOptions {
    pub probes: usize,
    pub degree: Option<usize>,
    pub poly_tol: f64,
    pub seed: u64,
}

impl Default for StochasticOptions {
    fn default() -> Self {
        Self { probes: 64, degree: None, poly_tol: DEFAULT_POLY_TOL, seed: 0 }
    }
}

/// Hutchinson estimate with Rademacher probes; probe i draws its signs from
/// its own ChaCha stream of `seed`, so results do not depend on scheduling.
pub fn heat_trace_stochastic(
    h: &DiscreteHamiltonian,
    t: f64,
    probes: usize,
    degree: Option<usize>,
    seed: u64,
) -> Result<HeatTraceEstimate> {
    let opts = StochasticOptions { probes, degree, poly_tol: DEFAULT_POLY_TOL, seed };
    heat_traces_stochastic(h, &[t], &opts).map(|mut v| v.remove(0))
}

/// Hutchinson estimates for several t from one set of probe moments.
pub fn heat_traces_stochastic(
    h: &DiscreteHamiltonian,
    ts: &[f64],
    opts: &StochasticOptions,
) -> Result<Vec<HeatTraceEstimate>> {
    if opts.probes < MIN_PROBES {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_PROBES} probes are required, got {}",
            opts.probes
        )));
    }
    let exps = expansions(h, ts, opts.degree, opts.poly_tol)?;
    let Some(first) = exps.first() else { return Ok(Vec::new()) };
    let (lo, hi) = first.interval();
    let dmax = exps.iter().map(ChebyshevExp::degree).max().unwrap_or(0);
    let seed = opts.seed;
    let moments = moments_for_starts(h, lo, hi, opts.probes, dmax, |idx, block, lane| {
        let mut rng = probe_rng(seed, idx as u64);
        for row in block.iter_mut() {
            row[lane] = sign(&mut rng);
        }
    });
    let p = opts.probes as f64;
    Ok(exps
        .iter()
        .map(|e| {
            let samples: Vec<f64> = moments.iter().map(|m| e.apply(m)).collect();
            let mean = samples.iter().sum::<f64>() / p;
            let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (p - 1.0);
            HeatTraceEstimate {
                t: e.t(),
                value: mean,
                method: Method::Stochastic,
                stderr: (var / p).sqrt(),
                truncation_bound: h.len() as f64 * e.uniform_error(),
                probes: opts.probes,
                degree: e.degree(),
                seed,
                period: 0,
                n: h.len(),
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbingOptions {
    /// Heat-kernel decay exponent between same-coloured nodes.
    pub decay: f64,
    /// Colour classes drawn twice to estimate the standard error.
    pub check_colors: usize,
    pub degree: Option<usize>,
    pub poly_tol: f64,
    pub seed: u64,
}

impl Default for ProbingOptions {
    fn default() -> Self {
        Self { decay: 4.0, check_colors: 64, degree: None, poly_tol: DEFAULT_POLY_TOL, seed: 0 }
    }
}

/// Colouring period p = ceil(2 (hbar/h) sqrt(t decay)): the lattice heat kernel
/// between nodes p apart is about e^{-decay} of its diagonal.
pub fn probing_period(h: &DiscreteHamiltonian, t: f64, decay: f64) -> usize {
    let ratio = h.kinetic().sqrt();
    ((2.0 * ratio * (t * decay).sqrt()).ceil() as usize).max(1)
}

/// Nodes grouped by lattice index modulo `period` on every axis, in colour order.
fn colour_classes(h: &DiscreteHamiltonian, period: usize) -> Vec<Vec<u32>> {
    let p = period as i64;
    let mut classes: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
    for i in 0..h.len() {
        let colour = h
            .lattice_index(i)
            .iter()
            .fold(0u64, |acc, &k| acc * period as u64 + (k as i64).rem_euclid(p) as u64);
        classes.entry(colour).or_default().push(i as u32);
    }
    classes.into_values().collect()
}

/// Probing estimate: one random-sign probe per colour class, summed over
/// classes. Cross terms only couple nodes at least `period` apart, so the
/// variance is far below Hutchinson's at equal cost. The standard error comes
/// from a second independent draw on an evenly spaced subset of classes.
pub fn heat_traces_probing(
    h: &DiscreteHamiltonian,
    ts: &[f64],
    opts: &ProbingOptions,
) -> Result<Vec<HeatTraceEstimate>> {
    if !(opts.decay > 0.0 && opts.decay.is_finite()) {
        return Err(Error::InvalidParameter(format!("decay must be positive, got {}", opts.decay)));
    }
    let exps = expansions(h, ts, opts.degree, opts.poly_tol)?;
    let mut out: Vec<Option<HeatTraceEstimate>> = vec![None; exps.len()];
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (j, e) in exps.iter().enumerate() {
        groups.entry(probing_period(h, e.t(), opts.decay)).or_default().push(j);
    }
    let seed = opts.seed;
    for (period, members) in groups {
        let classes = colour_classes(h, period);
        let c = classes.len();
        let exact = classes.iter().all(|cl| cl.len() == 1);
        let k = if exact { 0 } else { opts.check_colors.min(c) };
        let checked: Vec<usize> = (0..k).map(|j| j * c / k).collect();
        let dmax = members.iter().map(|&j| exps[j].degree()).max().unwrap_or(0);
        let (lo, hi) = exps[members[0]].interval();
        let moments = moments_for_starts(h, lo, hi, c + k, dmax, |idx, block, lane| {
            let (class, stream) = if idx < c {
                (idx, idx as u64)
            } else {
                (checked[idx - c], (1u64 << 40) + (idx - c) as u64)
            };
            let mut rng = probe_rng(seed, stream);
            for &node in &classes[class] {
                block[node as usize][lane] = if exact { 1.0 } else { sign(&mut rng) };
            }
        });
        for j in members {
            let e = &exps[j];
            let q: Vec<f64> = moments.iter().map(|m| e.apply(m)).collect();
            let value: f64 = q[..c].iter().sum();
            let stderr = if k == 0 {
                0.0
            } else {
                let s: f64 = checked.iter().enumerate().map(|(r, &cl)| (q[cl] - q[c + r]).powi(2) / 2.0).sum();
                (c as f64 / k as f64 * s).sqrt()
            };
            out[j] = Some(HeatTraceEstimate {
                t: e.t(),
                value,
                method: Method::Probing,
                stderr,
                truncation_bound: h.len() as f64 * e.uniform_error(),
                probes: c + k,
                degree: e.degree(),
                seed,
                period,
                n: h.len(),
            });
        }
    }
    Ok(out.into_iter().map(|e| e.expect("every t belongs to a period group")).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Hutchinson,
    Probing,
}

/// How a trace is computed: dense up to `dense_cap`, else `estimator`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodPolicy {
    pub dense_cap: usize,
    pub estimator: Estimator,
    /// Hutchinson probe count, or the number of re-drawn colour classes for probing.
    pub probes: usize,
    pub degree: Option<usize>,
    pub poly_tol: f64,
    pub decay: f64,
    pub seed: u64,
}

impl Default for MethodPolicy {
    fn default() -> Self {
        Self {
            dense_cap: DEFAULT_DENSE_CAP,
            estimator: Estimator::Probing,
            probes: 64,
            degree: None,
            poly_tol: DEFAULT_POLY_TOL,
            decay: 4.0,
            seed: 0,
        }
    }
}

impl MethodPolicy {
    pub fn dense_only(cap: usize) -> Self {
        Self { dense_cap: cap, ..Self::default() }
    }

    pub fn method_for(&self, n: usize) -> Method {
        match (n <= self.dense_cap, self.estimator) {
            (true, _) => Method::Dense,
            (false, Estimator::Hutchinson) => Method::Stochastic,
            (false, Estimator::Probing) => Method::Probing,
        }
    }
}

pub fn heat_traces(h: &DiscreteHamiltonian, ts: &[f64], policy: &MethodPolicy) -> Result<Vec<HeatTraceEstimate>> {
    match policy.method_for(h.len()) {
        Method::Dense => heat_traces_dense(h, ts, policy.dense_cap),
        Method::Stochastic => heat_traces_stochastic(
            h,
            ts,
            &StochasticOptions {
                probes: policy.probes,
                degree: policy.degree,
                poly_tol: policy.poly_tol,
                seed: policy.seed,
            },
        ),
        Method::Probing => heat_traces_probing(
            h,
            ts,
            &ProbingOptions {
                decay: policy.decay,
                check_colors: policy.probes,
                degree: policy.degree,
                poly_tol: policy.poly_tol,
                seed: policy.seed,
            },
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble, build_grid};
    use crate::geometry::Domain;
    use crate::potential::Potential;

    fn chain(n: usize) -> DiscreteHamiltonian {
        let h = 2.0 / (n + 1) as f64;
        let g = build_grid(&Domain::cube(1, 1.0).unwrap(), h).unwrap();
        assemble(&g, &Potential::zero(1).unwrap(), 1.0).unwrap()
    }

    fn square(n: usize, hbar: f64) -> DiscreteHamiltonian {
        let g = build_grid(&Domain::cube(2, 1.0).unwrap(), 2.0 / (n + 1) as f64).unwrap();
        assemble(&g, &Potential::example(2).unwrap(), hbar).unwrap()
    }

    #[test]
    fn chain_spectrum() {
        let n = 60;
        let h = 2.0 / (n + 1) as f64;
        let ev = eigen_dense(&chain(n), DEFAULT_DENSE_CAP).unwrap();
        for (k, l) in ev.iter().enumerate() {
            let s = (std::f64::consts::PI * (k + 1) as f64 * h / 4.0).sin();
            assert!((l - 4.0 / (h * h) * s * s).abs() < 1e-10);
        }
    }

    #[test]
    fn diagonal_traces() {
        let h = DiscreteHamiltonian::diagonal(&[3.0, 1.0, 2.0]);
        assert_eq!(eigen_dense(&h, 10).unwrap(), vec![1.0, 2.0, 3.0]);
        let e = heat_trace_dense(&h, 1.0, 10).unwrap();
        let expect = (-1.0f64).exp() + (-2.0f64).exp() + (-3.0f64).exp();
        assert!((e.value - expect).abs() < 1e-15);
        assert_eq!((e.stderr, e.truncation_bound), (0.0, 0.0));
        assert_eq!(heat_trace_dense(&DiscreteHamiltonian::diagonal(&[0.0; 7]), 2.0, 10).unwrap().value, 7.0);
    }

    #[test]
    fn over_cap() {
        assert_eq!(eigen_dense(&chain(20), 10), Err(Error::OverDenseCap { n: 20, cap: 10 }));
    }

    #[test]
    fn chebyshev_uniform_error() {
        for &(t, lo, hi) in &[(1.0, 0.0, 800.0), (0.25, -0.5, 40.0), (2.0, 0.0, 1e-20), (3.0, 1.0, 5.0)] {
            let e = ChebyshevExp::new(t, lo, hi, None, 1e-10).unwrap();
            assert!(e.uniform_error() <= 1e-10);
            let (a, b) = e.interval();
            for i in 0..=2000 {
                let x = a + (b - a) * i as f64 / 2000.0;
                let err = (e.eval(x) - (-t * x).exp()).abs();
                assert!(err <= e.uniform_error() + 1e-13, "t={t} x={x} err={err}");
            }
        }
    }

    #[test]
    fn chebyshev_degree_check() {
        let auto = ChebyshevExp::new(1.0, 0.0, 800.0, None, 1e-10).unwrap();
        assert!(auto.degree() > 60 && auto.degree() < 200, "{}", auto.degree());
        match ChebyshevExp::new(1.0, 0.0, 800.0, Some(20), 1e-10) {
            Err(Error::DegreeInsufficient { degree: 20, required, .. }) => assert_eq!(required, auto.degree()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hutchinson_diagonal_exact() {
        let vals: Vec<f64> = (0..50).map(|i| 0.1 * i as f64).collect();
        let h = DiscreteHamiltonian::diagonal(&vals);
        let exact = trace_from_spectrum(&vals, 1.0);
        let e = heat_trace_stochastic(&h, 1.0, 8, None, 3).unwrap();
        assert!((e.value - exact).abs() <= e.truncation_bound + 1e-12);
        assert_eq!(e.method, Method::Stochastic);
        assert!(e.stderr < 1e-9);
        let again = heat_trace_stochastic(&h, 1.0, 8, None, 3).unwrap();
        assert_eq!(e.value.to_bits(), again.value.to_bits());
    }

    #[test]
    fn too_few_probes() {
        assert!(heat_trace_stochastic(&chain(10), 1.0, 7, None, 0).is_err());
    }

    #[test]
    fn moments_independent_of_t_list() {
        let h = square(20, 0.2);
        let opts = StochasticOptions { probes: 11, ..Default::default() };
        let both = heat_traces_stochastic(&h, &[0.5, 2.0], &opts).unwrap();
        let single = heat_traces_stochastic(&h, &[0.5], &opts).unwrap();
        assert_eq!(both[0], single[0]);
    }

    #[test]
    fn probing_matches_dense() {
        let h = square(30, 0.2);
        let dense = heat_trace_dense(&h, 1.0, DEFAULT_DENSE_CAP).unwrap();
        let e = heat_traces_probing(&h, &[1.0], &ProbingOptions::default()).unwrap().remove(0);
        assert_eq!(e.method, Method::Probing);
        assert!((e.value - dense.value).abs() <= 4.0 * e.stderr + e.truncation_bound + 1e-9 * dense.value);
        assert!((e.value - dense.value).abs() / dense.value < 1e-2);
    }

    #[test]
    fn probing_exact_when_period_covers_grid() {
        let h = square(6, 1.0);
        let dense = heat_trace_dense(&h, 1.0, DEFAULT_DENSE_CAP).unwrap();
        let opts = ProbingOptions { decay: 100.0, ..Default::default() };
        let e = heat_traces_probing(&h, &[1.0], &opts).unwrap().remove(0);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.probes, h.len());
        assert!((e.value - dense.value).abs() <= e.truncation_bound + 1e-12);
    }

    #[test]
    fn policy_dispatch() {
        let p = MethodPolicy::default();
        assert_eq!(p.method_for(10), Method::Dense);
        assert_eq!(p.method_for(5000), Method::Probing);
        let h = Method::Stochastic;
        assert_eq!(MethodPolicy { estimator: Estimator::Hutchinson, ..p }.method_for(5000), h);
    }
}
