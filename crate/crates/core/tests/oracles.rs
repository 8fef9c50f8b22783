//! Library results against closed forms and brute-force references written here.

use std::f64::consts::{LN_2, PI};

use doslab::discretize::{assemble, build_grid};
use doslab::dos::{free_ids, free_laplace, oracle_laplace};
use doslab::spectral::{heat_trace_dense, heat_traces_probing, heat_trace_stochastic, ProbingOptions};
use doslab::{mean_over_domain, Domain, Potential};

/// Composite Simpson on [a, b] with n (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn example_angle(theta: f64) -> f64 {
    (theta.cos() * theta.sin()).abs()
}

/// (1/|Omega|) int e^{-tV} for the example potential in polar form:
/// the ray at angle theta leaves the domain at rho(theta).
fn polar_average(t: f64, rho: impl Fn(f64) -> f64, area: f64) -> f64 {
    // Integrand is smooth on each quarter; split at multiples of pi/4.
    (0..8)
        .map(|k| {
            let a = k as f64 * PI / 4.0;
            simpson(|th| (-t * example_angle(th)).exp() * rho(th).powi(2) / 2.0, a, a + PI / 4.0, 2000)
        })
        .sum::<f64>()
        / area
}

#[test]
fn example_potential_means() {
    let v = Potential::example(2).unwrap();
    let sq = Domain::cube(2, 1.0).unwrap();
    let disk = Domain::ball(2, 1.0).unwrap();
    assert!((mean_over_domain(&v, &sq, 1e-12).unwrap() - 0.5 * LN_2).abs() < 1e-9);
    assert!((mean_over_domain(&v, &disk, 1e-12).unwrap() - 1.0 / PI).abs() < 1e-9);
}

#[test]
fn oracle_matches_polar_reference() {
    let v = Potential::example(2).unwrap();
    let sq = Domain::cube(2, 1.0).unwrap();
    let disk = Domain::ball(2, 1.0).unwrap();
    for &t in &[0.25, 1.0, 4.0] {
        let box_ref = polar_average(t, |th| 1.0 / th.cos().abs().max(th.sin().abs()), 4.0);
        let ball_ref = polar_average(t, |_| 1.0, PI);
        let got_box = oracle_laplace(&v, &sq, t, 1e-12).unwrap() / free_laplace(t, 2);
        let got_ball = oracle_laplace(&v, &disk, t, 1e-12).unwrap() / free_laplace(t, 2);
        assert!((got_box - box_ref).abs() < 1e-10, "box t={t}: {got_box} vs {box_ref}");
        assert!((got_ball - ball_ref).abs() < 1e-10, "ball t={t}: {got_ball} vs {ball_ref}");
    }
    // Frozen after the polar cross-check above.
    let frozen = oracle_laplace(&v, &sq, 1.0, 1e-12).unwrap();
    assert!((frozen - 5.6932582812638646e-2).abs() < 1e-14);
}

#[test]
fn free_ids_closed_forms() {
    for &l in &[0.0, 0.3, 1.0, 7.5] {
        assert!((free_ids(l, 0.0, 1) - l.sqrt() / PI).abs() < 1e-15);
        assert!((free_ids(l, 0.0, 2) - l / (4.0 * PI)).abs() < 1e-15);
        assert!((free_ids(l, 0.0, 3) - l.powf(1.5) / (6.0 * PI * PI)).abs() < 1e-14);
    }
    assert_eq!(free_ids(-1.0, 0.0, 2), 0.0);
    assert!((free_ids(2.0, 0.5, 2) - 1.5 / (4.0 * PI)).abs() < 1e-15);
}

/// Dirichlet lattice Laplacian on an m-by-m square: eigenvalues are sums of
/// k (2 - 2 cos(j pi/(m+1))), so the trace factorizes.
fn separable_trace(m: usize, kinetic: f64, t: f64) -> f64 {
    let one: f64 = (1..=m)
        .map(|j| (-t * kinetic * (2.0 - 2.0 * (j as f64 * PI / (m + 1) as f64).cos())).exp())
        .sum();
    one * one
}

#[test]
fn square_heat_trace_factorizes() {
    let sq = Domain::cube(2, 1.0).unwrap();
    let grid = build_grid(&sq, 2.0 / 31.0).unwrap();
    assert_eq!(grid.len(), 900);
    let h = assemble(&grid, &Potential::zero(2).unwrap(), 0.2).unwrap();
    for &t in &[0.1, 1.0, 3.0] {
        let want = separable_trace(30, h.kinetic(), t);
        let dense = heat_trace_dense(&h, t, 1000).unwrap().value;
        assert!((dense - want).abs() < 1e-10 * want, "t={t}: {dense} vs {want}");
        let probe = heat_traces_probing(&h, &[t], &ProbingOptions { seed: 3, ..Default::default() }).unwrap();
        let e = &probe[0];
        assert!((e.value - want).abs() <= 4.0 * e.stderr + e.truncation_bound + 1e-9 * want, "probing t={t}");
    }
    // Frozen after the separable cross-check.
    let frozen = heat_trace_dense(&h, 1.0, 1000).unwrap().value;
    assert!((frozen - 5.474958803802749).abs() < 1e-11);
}

#[test]
fn hutchinson_within_its_error_bars() {
    let sq = Domain::cube(2, 1.0).unwrap();
    let grid = build_grid(&sq, 2.0 / 31.0).unwrap();
    let h = assemble(&grid, &Potential::zero(2).unwrap(), 0.2).unwrap();
    let want = separable_trace(30, h.kinetic(), 1.0);
    let e = heat_trace_stochastic(&h, 1.0, 256, None, 11).unwrap();
    assert!((e.value - want).abs() <= 4.0 * e.stderr + e.truncation_bound);
    assert!(e.stderr > 0.0 && e.stderr < 0.1 * want);
}

#[test]
fn three_dimensional_ball_mean() {
    // V depends on (x1, x2) only; the average over the unit sphere of
    // |x1 x2|/(x1^2+x2^2) is again 1/pi.
    let v = Potential::example(3).unwrap();
    let b = Domain::ball(3, 1.0).unwrap();
    assert!((mean_over_domain(&v, &b, 1e-9).unwrap() - 1.0 / PI).abs() < 1e-7);
}
