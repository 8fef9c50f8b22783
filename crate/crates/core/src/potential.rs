//! Bounded potentials, the radially homogeneous class V(tx) = V(x), and
//! quadrature of functions of V over domains.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Shape};
use crate::quadrature::{integrate_1d, integrate_box, Integral, DEFAULT_MAX_EVALS};

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Angular profile of a radially homogeneous potential, evaluated on unit vectors.
#[derive(Clone)]
pub enum Profile {
    /// |u1 u2| / (u1^2 + u2^2).
    Example,
    /// `value` on directions whose (x1, x2)-angle lies in [start, end), 0 elsewhere.
    AngularStep { start: f64, end: f64, value: f64 },
    Custom { label: String, f: PointFn, breakpoints: Vec<f64> },
}

#[derive(Clone)]
pub enum PotentialKind {
    Constant(f64),
    Homogeneous(Profile),
    /// amplitude * exp(-|x|^2 / width^2), a non-homogeneous bounded example.
    GaussianBump { amplitude: f64, width: f64 },
    General { label: String, f: PointFn },
}

#[derive(Clone)]
pub struct Potential {
    dim: usize,
    kind: PotentialKind,
    bound: f64,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("dim", &self.dim)
            .field("descriptor", &self.descriptor())
            .field("bound", &self.bound)
            .finish()
    }
}

/// Serializable potential description (registry names).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialDescriptor {
    Constant { value: f64 },
    Example,
    AngularStep { start: f64, end: f64, value: f64 },
    GaussianBump { amplitude: f64, width: f64 },
    Custom { label: String, homogeneous: bool, bound: f64 },
}

impl Potential {
    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        check_dim(dim, 1)?;
        if !value.is_finite() {
            return Err(Error::InvalidParameter("constant potential must be finite".into()));
        }
        Ok(Self { dim, kind: PotentialKind::Constant(value), bound: value.abs() })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::constant(dim, 0.0)
    }

    /// V(x) = |x1 x2| / (x1^2 + x2^2), bounded by 1/2.
    pub fn example(dim: usize) -> Result<Self> {
        check_dim(dim, 2)?;
        Ok(Self { dim, kind: PotentialKind::Homogeneous(Profile::Example), bound: 0.5 })
    }

    pub fn angular_step(dim: usize, start: f64, end: f64, value: f64) -> Result<Self> {
        check_dim(dim, 2)?;
        if !(0.0..=2.0 * PI).contains(&start) || !(start..=2.0 * PI).contains(&end) || !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "angular step needs 0 <= start <= end <= 2 pi and finite value, got [{start}, {end}) value {value}"
            )));
        }
        Ok(Self {
            dim,
            kind: PotentialKind::Homogeneous(Profile::AngularStep { start, end, value }),
            bound: value.abs(),
        })
    }

    pub fn gaussian_bump(dim: usize, amplitude: f64, width: f64) -> Result<Self> {
        check_dim(dim, 1)?;
        if !amplitude.is_finite() || !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidParameter("gaussian bump needs finite amplitude and width > 0".into()));
        }
        Ok(Self { dim, kind: PotentialKind::GaussianBump { amplitude, width }, bound: amplitude.abs() })
    }

    /// Radially homogeneous potential from a profile on unit vectors. `bound`
    /// must dominate |profile|; `breakpoints` are (x1, x2)-angles of jumps or kinks.
    pub fn homogeneous(
        dim: usize,
        label: impl Into<String>,
        bound: f64,
        breakpoints: Vec<f64>,
        profile: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_dim(dim, 1)?;
        check_bound(bound)?;
        Ok(Self {
            dim,
            kind: PotentialKind::Homogeneous(Profile::Custom {
                label: label.into(),
                f: Arc::new(profile),
                breakpoints,
            }),
            bound,
        })
    }

    pub fn general(
        dim: usize,
        label: impl Into<String>,
        bound: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_dim(dim, 1)?;
        check_bound(bound)?;
        Ok(Self { dim, kind: PotentialKind::General { label: label.into(), f: Arc::new(f) }, bound })
    }

    pub fn from_descriptor(desc: &PotentialDescriptor, dim: usize) -> Result<Self> {
        match desc {
            PotentialDescriptor::Constant { value } => Self::constant(dim, *value),
            PotentialDescriptor::Example => Self::example(dim),
            PotentialDescriptor::AngularStep { start, end, value } => {
                Self::angular_step(dim, *start, *end, *value)
            }
            PotentialDescriptor::GaussianBump { amplitude, width } => {
                Self::gaussian_bump(dim, *amplitude, *width)
            }
            PotentialDescriptor::Custom { label, .. } => Err(Error::InvalidParameter(format!(
                "custom potential '{label}' cannot be rebuilt from a descriptor"
            ))),
        }
    }

    pub fn descriptor(&self) -> PotentialDescriptor {
        match &self.kind {
            PotentialKind::Constant(value) => PotentialDescriptor::Constant { value: *value },
            PotentialKind::Homogeneous(Profile::Example) => PotentialDescriptor::Example,
            PotentialKind::Homogeneous(Profile::AngularStep { start, end, value }) => {
                PotentialDescriptor::AngularStep { start: *start, end: *end, value: *value }
            }
            PotentialKind::Homogeneous(Profile::Custom { label, .. }) => {
                PotentialDescriptor::Custom { label: label.clone(), homogeneous: true, bound: self.bound }
            }
            PotentialKind::GaussianBump { amplitude, width } => {
                PotentialDescriptor::GaussianBump { amplitude: *amplitude, width: *width }
            }
            PotentialKind::General { label, .. } => {
                PotentialDescriptor::Custom { label: label.clone(), homogeneous: false, bound: self.bound }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// M with |V(x)| <= M everywhere.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Constants count as homogeneous.
    pub fn is_homogeneous(&self) -> bool {
        matches!(self.kind, PotentialKind::Constant(_) | PotentialKind::Homogeneous(_))
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::Constant(c) => Some(c),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            PotentialKind::Constant(c) => *c,
            PotentialKind::Homogeneous(profile) => {
                let mut dir = [0.0f64; 8];
                let mut heap_dir;
                let u: &mut [f64] = if x.len() <= 8 {
                    &mut dir[..x.len()]
                } else {
                    heap_dir = vec![0.0; x.len()];
                    &mut heap_dir
                };
                if !normalize_direction(x, u) {
                    return 0.0;
                }
                eval_profile(profile, u)
            }
            PotentialKind::GaussianBump { amplitude, width } => {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                amplitude * (-r2 / (width * width)).exp()
            }
            PotentialKind::General { f, .. } => f(x),
        }
    }

    /// Angles in the (x1, x2)-plane where the profile may jump or kink.
    fn angular_breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = (0..=4).map(|k| k as f64 * FRAC_PI_2).collect();
        if let PotentialKind::Homogeneous(p) = &self.kind {
            match p {
                Profile::AngularStep { start, end, .. } => b.extend([*start, *end]),
                Profile::Custom { breakpoints, .. } => b.extend(breakpoints.iter().copied()),
                Profile::Example => {}
            }
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Integral of g(V(x)) over the domain with absolute error at most `tol`.
    pub fn integrate_over<G: Fn(f64) -> f64>(&self, domain: &Domain, g: G, tol: f64) -> Result<Integral> {
        if domain.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: domain.dim() });
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
        }
        if let Shape::Mask(_) = domain.shape() {
            return Err(Error::UnsupportedDomain("quadrature over mask-function domains".into()));
        }
        if let Some(c) = self.as_constant() {
            return Ok(Integral { value: g(c) * domain.volume(), error: 0.0, evaluations: 1 });
        }
        let d = self.dim;
        let max = DEFAULT_MAX_EVALS;
        match domain.shape() {
            Shape::Box { half_width } => self.integrate_cube(*half_width, &g, tol),
            Shape::Ball { radius } if d == 1 => self.integrate_cube(*radius, &g, tol),
            Shape::Ball { radius } => {
                let r = *radius;
                let breaks = self.angular_breakpoints();
                match (d, self.is_homogeneous()) {
                    (2, true) => {
                        let scale = r * r / 2.0;
                        let mut res = integrate_1d(
                            |th: f64| g(self.eval_unchecked(&[th.cos(), th.sin()])),
                            0.0,
                            2.0 * PI,
                            &breaks,
                            tol / scale,
                            max,
                        )?;
                        res.value *= scale;
                        res.error *= scale;
                        Ok(res)
                    }
                    (2, false) => integrate_box(
                        |p: &[f64]| {
                            let (th, rho) = (p[0], p[1]);
                            rho * g(self.eval_unchecked(&[rho * th.cos(), rho * th.sin()]))
                        },
                        &[0.0, 0.0],
                        &[2.0 * PI, r],
                        &[breaks],
                        tol,
                        max,
                    ),
                    (3, true) => {
                        let scale = r * r * r / 3.0;
                        let mut res = integrate_box(
                            |p: &[f64]| g(self.eval_unchecked(&sphere_point(1.0, p[0], p[1]))),
                            &[-1.0, 0.0],
                            &[1.0, 2.0 * PI],
                            &[vec![0.0], breaks],
                            tol / scale,
                            max,
                        )?;
                        res.value *= scale;
                        res.error *= scale;
                        Ok(res)
                    }
                    (3, false) => integrate_box(
                        |p: &[f64]| p[0] * p[0] * g(self.eval_unchecked(&sphere_point(p[0], p[1], p[2]))),
                        &[0.0, -1.0, 0.0],
                        &[r, 1.0, 2.0 * PI],
                        &[vec![], vec![0.0], breaks],
                        tol,
                        max,
                    ),
                    _ => Err(Error::UnsupportedDomain(format!(
                        "ball quadrature is implemented for d <= 3, got d = {d}"
                    ))),
                }
            }
            Shape::StarPolygon { vertices } => self.integrate_fan(vertices, &g, tol),
            Shape::Mask(_) => unreachable!("rejected above"),
        }
    }

    fn integrate_cube<G: Fn(f64) -> f64>(&self, hw: f64, g: &G, tol: f64) -> Result<Integral> {
        let d = self.dim;
        let cuts = vec![vec![0.0]; d];
        integrate_box(
            |x: &[f64]| g(self.eval_unchecked(x)),
            &vec![-hw; d],
            &vec![hw; d],
            &cuts,
            tol,
            DEFAULT_MAX_EVALS,
        )
    }

    /// Fan of triangles (0, a, b) over the polygon edges.
    fn integrate_fan<G: Fn(f64) -> f64>(&self, vertices: &[[f64; 2]], g: &G, tol: f64) -> Result<Integral> {
        let n = vertices.len();
        let piece_tol = tol / n as f64;
        let angles = self.angular_breakpoints();
        let mut total = Integral { value: 0.0, error: 0.0, evaluations: 0 };
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            let e = [b[0] - a[0], b[1] - a[1]];
            let area2 = a[0] * b[1] - a[1] * b[0];
            // Edge parameters where the ray at a breakpoint angle crosses the edge.
            let breaks: Vec<f64> = angles
                .iter()
                .filter_map(|&al| {
                    let u = [al.cos(), al.sin()];
                    let den = u[0] * e[1] - u[1] * e[0];
                    if den == 0.0 {
                        return None;
                    }
                    let w = -(u[0] * a[1] - u[1] * a[0]) / den;
                    (w > 0.0 && w < 1.0).then_some(w)
                })
                .collect();
            let res = if self.is_homogeneous() {
                let scale = 0.5 * area2;
                let mut r = integrate_1d(
                    |w: f64| g(self.eval_unchecked(&[a[0] + w * e[0], a[1] + w * e[1]])),
                    0.0,
                    1.0,
                    &breaks,
                    piece_tol / scale,
                    DEFAULT_MAX_EVALS,
                )?;
                r.value *= scale;
                r.error *= scale;
                r
            } else {
                integrate_box(
                    |p: &[f64]| {
                        let (s, w) = (p[0], p[1]);
                        s * area2 * g(self.eval_unchecked(&[s * (a[0] + w * e[0]), s * (a[1] + w * e[1])]))
                    },
                    &[0.0, 0.0],
                    &[1.0, 1.0],
                    &[vec![], breaks],
                    piece_tol,
                    DEFAULT_MAX_EVALS,
                )?
            };
            total.value += res.value;
            total.error += res.error;
            total.evaluations += res.evaluations;
        }
        Ok(total)
    }
}

fn check_dim(dim: usize, min: usize) -> Result<()> {
    if dim < min {
        return Err(Error::InvalidParameter(format!("potential needs dimension >= {min}, got {dim}")));
    }
    Ok(())
}

fn check_bound(bound: f64) -> Result<()> {
    if !(bound >= 0.0 && bound.is_finite()) {
        return Err(Error::InvalidParameter(format!("potential bound must be finite and >= 0, got {bound}")));
    }
    Ok(())
}

fn sphere_point(rho: f64, u: f64, phi: f64) -> [f64; 3] {
    let s = (1.0 - u * u).max(0.0).sqrt();
    [rho * s * phi.cos(), rho * s * phi.sin(), rho * u]
}

/// Writes x / |x| into `out`. Prescaling by a power of two is exact, so the
/// result for 2^k x is bit-identical to the result for x. Returns false at 0.
fn normalize_direction(x: &[f64], out: &mut [f64]) -> bool {
    let m = x.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if m == 0.0 || !m.is_finite() {
        return false;
    }
    let e = m.log2().floor() as i32;
    let s = 2f64.powi(-e);
    for (o, c) in out.iter_mut().zip(x) {
        *o = c * s;
    }
    let norm = out.iter().map(|c| c * c).sum::<f64>().sqrt();
    out.iter_mut().for_each(|c| *c /= norm);
    true
}

fn eval_profile(profile: &Profile, u: &[f64]) -> f64 {
    match profile {
        Profile::Example => {
            let den = u[0] * u[0] + u[1] * u[1];
            if den == 0.0 {
                0.0
            } else {
                (u[0] * u[1]).abs() / den
            }
        }
        Profile::AngularStep { start, end, value } => {
            if u[0] == 0.0 && u[1] == 0.0 {
                return 0.0;
            }
            let mut th = u[1].atan2(u[0]);
            if th < 0.0 {
                th += 2.0 * PI;
            }
            if th >= *start && th < *end {
                *value
            } else {
                0.0
            }
        }
        Profile::Custom { f, .. } => f(u),
    }
}

/// (1/|Omega|) times the integral of V over Omega.
pub fn mean_over_domain(potential: &Potential, domain: &Domain, tol: f64) -> Result<f64> {
    let vol = domain.volume();
    let r = potential.integrate_over(domain, |v| v, tol * vol)?;
    Ok(r.value / vol)
}

/// Integral of exp(-t V) over Omega with absolute error at most `tol`.
pub fn exp_integral(potential: &Potential, domain: &Domain, t: f64, tol: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be finite and >= 0, got {t}")));
    }
    if t == 0.0 {
        if domain.dim() != potential.dim() {
            return Err(Error::DimensionMismatch { expected: potential.dim(), got: domain.dim() });
        }
        return Ok(domain.volume());
    }
    Ok(potential.integrate_over(domain, |v| (-t * v).exp(), tol)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    const LN2_HALF: f64 = 0.346_573_590_279_972_65;

    #[test]
    fn example_values() {
        let v = Potential::example(2).unwrap();
        assert_eq!(v.eval(&[1.0, 1.0]).unwrap(), 0.5);
        assert_eq!(v.eval(&[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(v.eval(&[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(v.eval(&[2.0, 2.0]).unwrap(), 0.5);
        assert_eq!(v.eval(&[0.0, 0.0]).unwrap(), 0.0);
        let v3 = Potential::example(3).unwrap();
        assert_eq!(v3.eval(&[1.0, 1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(v3.eval(&[0.0, 0.0, 1.0]).unwrap(), 0.0);
        assert!(Potential::example(1).is_err());
        assert!(matches!(v.eval(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn angular_step_sector() {
        let v = Potential::angular_step(2, 0.0, FRAC_PI_2, 2.0).unwrap();
        assert_eq!(v.eval(&[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(v.eval(&[-1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(v.eval(&[1.0, -1e-9]).unwrap(), 0.0);
        let dom = Domain::ball(2, 1.0).unwrap();
        let m = mean_over_domain(&v, &dom, 1e-10).unwrap();
        assert!((m - 0.5).abs() < 1e-9);
        let sq = Domain::cube(2, 1.0).unwrap();
        assert!((mean_over_domain(&v, &sq, 1e-10).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn example_means() {
        let v = Potential::example(2).unwrap();
        let sq = Domain::cube(2, 1.0).unwrap();
        let ball = Domain::ball(2, 1.0).unwrap();
        assert!((mean_over_domain(&v, &sq, 1e-9).unwrap() - LN2_HALF).abs() < 1e-7);
        assert!((mean_over_domain(&v, &ball, 1e-9).unwrap() - 1.0 / PI).abs() < 1e-7);
    }

    #[test]
    fn constant_integrals() {
        let c = Potential::constant(2, 0.7).unwrap();
        let ball = Domain::ball(2, 1.5).unwrap();
        assert!((mean_over_domain(&c, &ball, 1e-9).unwrap() - 0.7).abs() < 1e-14);
        let e = exp_integral(&c, &ball, 2.0, 1e-9).unwrap();
        assert!((e - ball.volume() * (-1.4f64).exp()).abs() < 1e-12);
        let v = Potential::example(2).unwrap();
        assert_eq!(exp_integral(&v, &ball, 0.0, 1e-9).unwrap(), ball.volume());
    }

    #[test]
    fn polygon_fan_matches_box() {
        let v = Potential::example(2).unwrap();
        let sq = Domain::star_polygon(vec![[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]]).unwrap();
        let m = mean_over_domain(&v, &sq, 1e-10).unwrap();
        assert!((m - LN2_HALF).abs() < 1e-9);
        let bump = Potential::gaussian_bump(2, 1.0, 0.5).unwrap();
        let a = exp_integral(&bump, &sq, 1.0, 1e-10).unwrap();
        let b = exp_integral(&bump, &Domain::cube(2, 1.0).unwrap(), 1.0, 1e-10).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn general_potential_on_ball_polar_rule() {
        // Integral of exp(-|x|^2) over the unit disk is pi (1 - e^{-1}).
        let bump = Potential::gaussian_bump(2, 1.0, 1.0).unwrap();
        let ball = Domain::ball(2, 1.0).unwrap();
        let m = mean_over_domain(&bump, &ball, 1e-11).unwrap();
        assert!((m - (1.0 - (-1f64).exp())).abs() < 1e-10);
        let ball3 = Domain::ball(3, 1.0).unwrap();
        let g = Potential::general(3, "x3^2", 1.0, |x| x[2] * x[2]).unwrap();
        // Mean of x3^2 over the unit ball is 1/5.
        assert!((mean_over_domain(&g, &ball3, 1e-10).unwrap() - 0.2).abs() < 1e-9);
    }

    #[test]
    fn three_dimensional_example_means() {
        let v = Potential::example(3).unwrap();
        // Same 2-variable structure: the box mean is unchanged by the x3 extent.
        let cube = Domain::cube(3, 1.0).unwrap();
        assert!((mean_over_domain(&v, &cube, 1e-7).unwrap() - LN2_HALF).abs() < 1e-6);
        // Spherical average of |u1 u2| / (u1^2 + u2^2) is 1/pi as well.
        let ball = Domain::ball(3, 1.0).unwrap();
        assert!((mean_over_domain(&v, &ball, 1e-9).unwrap() - 1.0 / PI).abs() < 1e-8);
    }

    #[test]
    fn mask_domains_are_rejected_by_quadrature() {
        let v = Potential::example(2).unwrap();
        let m = Domain::mask(2, "disk", 1.0, |x| x[0] * x[0] + x[1] * x[1] < 1.0).unwrap();
        assert!(matches!(mean_over_domain(&v, &m, 1e-6), Err(Error::UnsupportedDomain(_))));
    }

    #[test]
    fn power_of_two_scaling_is_bit_exact() {
        let v = Potential::example(2).unwrap();
        let x = [0.3141, -0.2718];
        for k in -20..20 {
            let s = 2f64.powi(k);
            assert_eq!(v.eval(&[x[0] * s, x[1] * s]).unwrap(), v.eval(&x).unwrap());
        }
    }
}
