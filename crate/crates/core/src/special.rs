//! Small special-function helpers.

use std::f64::consts::PI;

/// Gamma(n / 2) for a positive integer n.
pub fn gamma_half(n: usize) -> f64 {
    assert!(n > 0, "gamma_half needs n >= 1");
    let (mut g, mut x) = if n % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = n as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma_half(d + 2)
}

/// e^{-z} I_k(z) for k = 0..=kmax, z >= 0, by Miller's backward recurrence
/// normalized with I_0 + 2 sum I_k = e^z.
pub fn scaled_bessel_i(z: f64, kmax: usize) -> Vec<f64> {
    assert!(z >= 0.0 && z.is_finite(), "scaled_bessel_i needs finite z >= 0");
    let mut out = vec![0.0; kmax + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    // Start far enough above both kmax and the bulk of the sequence (width ~ sqrt(z)).
    let start = kmax + 40 + (z + 60.0 * (z + 1.0).sqrt()) as usize;
    let mut next = 0.0f64; // I_{k+1}
    let mut cur = 1e-300f64; // I_k
    let mut sum = 0.0f64; // 2 * sum_{k>=1} I_k
    for k in (1..=start).rev() {
        let prev = next + 2.0 * k as f64 / z * cur; // I_{k-1}
        if k <= kmax {
            out[k] = cur;
        }
        sum += 2.0 * cur;
        next = cur;
        cur = prev;
        if cur > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            sum *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    out[0] = cur;
    let norm = cur + sum;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_half(2), 1.0);
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half(3) - PI.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(gamma_half(8), 6.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert_eq!(unit_ball_volume(1), 2.0);
    }

    #[test]
    fn bessel_against_series() {
        // Power series sum (z/2)^{2m+k} / (m! (m+k)!) at moderate z.
        for &z in &[0.1, 1.0, 5.0, 20.0] {
            let s = scaled_bessel_i(z, 12);
            for (k, &v) in s.iter().enumerate() {
                let mut term = (z / 2.0f64).powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>();
                let mut series = 0.0;
                for m in 0..200 {
                    series += term;
                    term *= (z / 2.0) * (z / 2.0) / ((m + 1) as f64 * (m + 1 + k) as f64);
                }
                let expect = series * (-z).exp();
                assert!((v - expect).abs() <= 1e-13 * expect.max(1e-300) + 1e-300, "z={z} k={k} {v} {expect}");
            }
        }
    }

    #[test]
    fn bessel_large_argument_normalization() {
        let s = scaled_bessel_i(800.0, 400);
        let total = s[0] + 2.0 * s[1..].iter().sum::<f64>();
        assert!((total - 1.0).abs() < 1e-12);
        // Asymptotic e^{-z} I_0(z) ~ 1/sqrt(2 pi z) (1 + 1/(8z)).
        let asym = 1.0 / (2.0 * PI * 800.0).sqrt() * (1.0 + 1.0 / 6400.0);
        assert!((s[0] - asym).abs() / asym < 1e-6);
    }
}
