//! Bounded open domains containing the origin, their dilations, and
//! boundary quadrature rules.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::special::unit_ball_volume;

/// Grid cells per unit of bounding radius used when counting mask volumes.
const MASK_CELLS_PER_RADIUS_2D: usize = 256;
const MASK_CELLS_PER_RADIUS_3D: usize = 48;
const MASK_CELLS_PER_RADIUS_HIGH: usize = 12;

pub type MaskPredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct Mask {
    label: String,
    predicate: MaskPredicate,
    bounding_radius: f64,
    /// Dilation applied on top of `predicate`: x is inside iff predicate(x / scale).
    scale: f64,
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mask")
            .field("label", &self.label)
            .field("bounding_radius", &self.bounding_radius)
            .field("scale", &self.scale)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum Shape {
    /// The open cube (-half_width, half_width)^d.
    Box { half_width: f64 },
    Ball { radius: f64 },
    /// Counter-clockwise vertex list of a polygon star-shaped about 0 (d = 2).
    StarPolygon { vertices: Vec<[f64; 2]> },
    Mask(Mask),
}

#[derive(Clone, Debug)]
pub struct Domain {
    dim: usize,
    shape: Shape,
}

/// Serializable description of a domain, used in reports and cache keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainDescriptor {
    Box { dimension: usize, half_width: f64 },
    Ball { dimension: usize, radius: f64 },
    StarPolygon { dimension: usize, vertices: Vec<[f64; 2]> },
    MaskFunction { dimension: usize, label: String, bounding_radius: f64, scale: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Counting-grid spacing when the value is approximate (mask domains).
    pub approximate_spacing: Option<f64>,
}

/// Nodes on the boundary with outward unit normals and surface weights.
#[derive(Clone, Debug, Default)]
pub struct BoundaryQuadrature {
    pub dim: usize,
    /// Flattened coordinates, `dim` per node.
    pub points: Vec<f64>,
    /// Flattened outward unit normals, `dim` per node.
    pub normals: Vec<f64>,
    pub weights: Vec<f64>,
}

impl BoundaryQuadrature {
    fn new(dim: usize) -> Self {
        Self { dim, ..Default::default() }
    }

    fn push(&mut self, point: &[f64], normal: &[f64], weight: f64) {
        self.points.extend_from_slice(point);
        self.normals.extend_from_slice(normal);
        self.weights.push(weight);
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn normal(&self, i: usize) -> &[f64] {
        &self.normals[i * self.dim..(i + 1) * self.dim]
    }

    /// Approximation of the (d-1)-dimensional boundary measure.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// sigma . n(sigma) at node i.
    pub fn support(&self, i: usize) -> f64 {
        dot(self.point(i), self.normal(i))
    }

    /// Sum of w (sigma . n) / d, which equals the volume for star-shaped domains.
    pub fn cone_volume(&self) -> f64 {
        (0..self.len())
            .map(|i| self.weights[i] * self.support(i))
            .sum::<f64>()
            / self.dim as f64
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok(())
}

impl Domain {
    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        check_dim(dim)?;
        check_positive("half-width", half_width)?;
        Ok(Self { dim, shape: Shape::Box { half_width } })
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        check_dim(dim)?;
        check_positive("radius", radius)?;
        Ok(Self { dim, shape: Shape::Ball { radius } })
    }

    /// Polygon star-shaped about the origin. Clockwise input is reversed.
    pub fn star_polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidParameter("star polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("star polygon vertices must be finite".into()));
        }
        let mut vertices = vertices;
        let n = vertices.len();
        let crosses: Vec<f64> = (0..n).map(|i| cross2(vertices[i], vertices[(i + 1) % n])).collect();
        if crosses.iter().all(|&c| c < 0.0) {
            vertices.reverse();
        } else if !crosses.iter().all(|&c| c > 0.0) {
            return Err(Error::InvalidParameter(
                "polygon is not strictly star-shaped about the origin".into(),
            ));
        }
        // Winding about 0 must be exactly one turn.
        let turn: f64 = (0..n)
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                cross2(a, b).atan2(dot(&a, &b))
            })
            .sum();
        if (turn - 2.0 * PI).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "polygon winds {:.6} turns about the origin, expected 1",
                turn / (2.0 * PI)
            )));
        }
        Ok(Self { dim: 2, shape: Shape::StarPolygon { vertices } })
    }

    /// Domain given by a membership predicate. `bounding_radius` must enclose it.
    pub fn mask(
        dim: usize,
        label: impl Into<String>,
        bounding_radius: f64,
        predicate: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Result<Self> {
        check_dim(dim)?;
        check_positive("bounding radius", bounding_radius)?;
        if !predicate(&vec![0.0; dim]) {
            return Err(Error::InvalidParameter("mask domain must contain the origin".into()));
        }
        Ok(Self {
            dim,
            shape: Shape::Mask(Mask {
                label: label.into(),
                predicate: Arc::new(predicate),
                bounding_radius,
                scale: 1.0,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn kind_name(&self) -> &'static str {
        match self.shape {
            Shape::Box { .. } => "box",
            Shape::Ball { .. } => "ball",
            Shape::StarPolygon { .. } => "star-polygon",
            Shape::Mask(_) => "mask-function",
        }
    }

    pub fn descriptor(&self) -> DomainDescriptor {
        let dimension = self.dim;
        match &self.shape {
            Shape::Box { half_width } => DomainDescriptor::Box { dimension, half_width: *half_width },
            Shape::Ball { radius } => DomainDescriptor::Ball { dimension, radius: *radius },
            Shape::StarPolygon { vertices } => {
                DomainDescriptor::StarPolygon { dimension, vertices: vertices.clone() }
            }
            Shape::Mask(m) => DomainDescriptor::MaskFunction {
                dimension,
                label: m.label.clone(),
                bounding_radius: m.bounding_radius * m.scale,
                scale: m.scale,
            },
        }
    }

    /// Rebuilds a domain; mask functions carry code and cannot be described.
    pub fn from_descriptor(desc: &DomainDescriptor) -> Result<Self> {
        match desc {
            DomainDescriptor::Box { dimension, half_width } => Self::cube(*dimension, *half_width),
            DomainDescriptor::Ball { dimension, radius } => Self::ball(*dimension, *radius),
            DomainDescriptor::StarPolygon { dimension, vertices } => {
                if *dimension != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: *dimension });
                }
                Self::star_polygon(vertices.clone())
            }
            DomainDescriptor::MaskFunction { label, .. } => Err(Error::UnsupportedDomain(format!(
                "mask-function domain '{label}' needs a predicate and cannot be built from a description"
            ))),
        }
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: point.len() });
        }
        Ok(())
    }

    /// Membership in the open set.
    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        self.check_point(point)?;
        Ok(self.contains_unchecked(point))
    }

    pub(crate) fn contains_unchecked(&self, x: &[f64]) -> bool {
        match &self.shape {
            Shape::Box { half_width } => x.iter().all(|c| c.abs() < *half_width),
            Shape::Ball { radius } => x.iter().map(|c| c * c).sum::<f64>() < radius * radius,
            Shape::StarPolygon { vertices } => polygon_contains(vertices, [x[0], x[1]]),
            Shape::Mask(m) => {
                let y: Vec<f64> = x.iter().map(|c| c / m.scale).collect();
                (m.predicate)(&y)
            }
        }
    }

    pub fn volume(&self) -> f64 {
        self.volume_estimate().value
    }

    /// Exact for box, ball and polygon; a counting estimate for masks.
    pub fn volume_estimate(&self) -> VolumeEstimate {
        let d = self.dim as i32;
        let exact = |value| VolumeEstimate { value, approximate_spacing: None };
        match &self.shape {
            Shape::Box { half_width } => exact((2.0 * half_width).powi(d)),
            Shape::Ball { radius } => exact(unit_ball_volume(self.dim) * radius.powi(d)),
            Shape::StarPolygon { vertices } => {
                let n = vertices.len();
                exact(0.5 * (0..n).map(|i| cross2(vertices[i], vertices[(i + 1) % n])).sum::<f64>())
            }
            Shape::Mask(m) => {
                let per_radius = match self.dim {
                    1 | 2 => MASK_CELLS_PER_RADIUS_2D,
                    3 => MASK_CELLS_PER_RADIUS_3D,
                    _ => MASK_CELLS_PER_RADIUS_HIGH,
                };
                let rb = m.bounding_radius * m.scale;
                let spacing = rb / per_radius as f64;
                let cells = 2 * per_radius;
                let total = cells.pow(self.dim as u32);
                let mut x = vec![0.0; self.dim];
                let mut count = 0usize;
                for flat in 0..total {
                    let mut rem = flat;
                    for c in x.iter_mut() {
                        *c = -rb + ((rem % cells) as f64 + 0.5) * spacing;
                        rem /= cells;
                    }
                    if self.contains_unchecked(&x) {
                        count += 1;
                    }
                }
                VolumeEstimate {
                    value: count as f64 * spacing.powi(d),
                    approximate_spacing: Some(spacing),
                }
            }
        }
    }

    /// The dilation R * Omega.
    pub fn scale(&self, factor: f64) -> Result<Self> {
        check_positive("scale factor", factor)?;
        let shape = match &self.shape {
            Shape::Box { half_width } => Shape::Box { half_width: half_width * factor },
            Shape::Ball { radius } => Shape::Ball { radius: radius * factor },
            Shape::StarPolygon { vertices } => Shape::StarPolygon {
                vertices: vertices.iter().map(|v| [v[0] * factor, v[1] * factor]).collect(),
            },
            Shape::Mask(m) => Shape::Mask(Mask { scale: m.scale * factor, ..m.clone() }),
        };
        Ok(Self { dim: self.dim, shape })
    }

    /// Radius of a ball about 0 enclosing the domain.
    pub fn bounding_radius(&self) -> f64 {
        match &self.shape {
            Shape::Box { half_width } => half_width * (self.dim as f64).sqrt(),
            Shape::Ball { radius } => *radius,
            Shape::StarPolygon { vertices } => {
                vertices.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
            }
            Shape::Mask(m) => m.bounding_radius * m.scale,
        }
    }

    /// Distance from 0 to the boundary, when known.
    pub fn inradius(&self) -> Option<f64> {
        match &self.shape {
            Shape::Box { half_width } => Some(*half_width),
            Shape::Ball { radius } => Some(*radius),
            Shape::StarPolygon { vertices } => {
                let n = vertices.len();
                Some(
                    (0..n)
                        .map(|i| segment_distance_to_origin(vertices[i], vertices[(i + 1) % n]))
                        .fold(f64::INFINITY, f64::min),
                )
            }
            Shape::Mask(_) => None,
        }
    }

    /// Boundary nodes with normals and weights. `resolution` is the approximate node count.
    pub fn boundary_quadrature(&self, resolution: usize) -> Result<BoundaryQuadrature> {
        if resolution == 0 {
            return Err(Error::InvalidParameter("boundary resolution must be positive".into()));
        }
        let d = self.dim;
        let mut q = BoundaryQuadrature::new(d);
        match &self.shape {
            Shape::Box { half_width } => box_boundary(&mut q, d, *half_width, resolution)?,
            Shape::Ball { radius } => ball_boundary(&mut q, d, *radius, resolution)?,
            Shape::StarPolygon { vertices } => polygon_boundary(&mut q, vertices, resolution),
            Shape::Mask(_) => {
                return Err(Error::UnsupportedDomain(
                    "mask-function domains carry no boundary data".into(),
                ))
            }
        }
        Ok(q)
    }
}

fn segment_distance_to_origin(a: [f64; 2], b: [f64; 2]) -> f64 {
    let e = [b[0] - a[0], b[1] - a[1]];
    let len2 = e[0] * e[0] + e[1] * e[1];
    let s = (-(a[0] * e[0] + a[1] * e[1]) / len2).clamp(0.0, 1.0);
    (a[0] + s * e[0]).hypot(a[1] + s * e[1])
}

fn polygon_contains(vertices: &[[f64; 2]], p: [f64; 2]) -> bool {
    if p == [0.0, 0.0] {
        return true;
    }
    let n = vertices.len();
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        // p lies in the cone spanned by a (inclusive) and b (exclusive).
        if cross2(a, p) >= 0.0 && cross2(p, b) > 0.0 {
            let e = [b[0] - a[0], b[1] - a[1]];
            return cross2(e, [p[0] - a[0], p[1] - a[1]]) > 0.0;
        }
    }
    false
}

fn box_boundary(q: &mut BoundaryQuadrature, d: usize, hw: f64, resolution: usize) -> Result<()> {
    if d == 1 {
        q.push(&[-hw], &[-1.0], 1.0);
        q.push(&[hw], &[1.0], 1.0);
        return Ok(());
    }
    // Each of the 2d faces is a (d-1)-cube split into m^(d-1) midpoint panels.
    let faces = 2 * d;
    let per_face = resolution.div_ceil(faces).max(1) as f64;
    let m = per_face.powf(1.0 / (d - 1) as f64).ceil() as usize;
    let panel = 2.0 * hw / m as f64;
    let weight = panel.powi(d as i32 - 1);
    let panels = m.pow(d as u32 - 1);
    let mut point = vec![0.0; d];
    let mut normal = vec![0.0; d];
    for axis in 0..d {
        for sign in [-1.0, 1.0] {
            normal.iter_mut().for_each(|c| *c = 0.0);
            normal[axis] = sign;
            for flat in 0..panels {
                let mut rem = flat;
                for (k, c) in point.iter_mut().enumerate() {
                    if k == axis {
                        *c = sign * hw;
                    } else {
                        *c = -hw + ((rem % m) as f64 + 0.5) * panel;
                        rem /= m;
                    }
                }
                q.push(&point, &normal, weight);
            }
        }
    }
    Ok(())
}

fn ball_boundary(q: &mut BoundaryQuadrature, d: usize, r: f64, resolution: usize) -> Result<()> {
    match d {
        1 => {
            q.push(&[-r], &[-1.0], 1.0);
            q.push(&[r], &[1.0], 1.0);
        }
        2 => {
            let w = 2.0 * PI * r / resolution as f64;
            for k in 0..resolution {
                let theta = 2.0 * PI * (k as f64 + 0.5) / resolution as f64;
                let n = [theta.cos(), theta.sin()];
                q.push(&[r * n[0], r * n[1]], &n, w);
            }
        }
        3 => {
            // Gauss-Legendre in cos(theta) times equal-angle azimuth.
            let n_lat = ((resolution as f64 / 2.0).sqrt().ceil() as usize).max(1);
            let n_lon = 2 * n_lat;
            let (us, ws) = gauss_legendre(n_lat);
            let dphi = 2.0 * PI / n_lon as f64;
            for (u, wu) in us.iter().zip(&ws) {
                let s = (1.0 - u * u).sqrt();
                for j in 0..n_lon {
                    let phi = dphi * (j as f64 + 0.5);
                    let n = [s * phi.cos(), s * phi.sin(), *u];
                    q.push(&[r * n[0], r * n[1], r * n[2]], &n, r * r * wu * dphi);
                }
            }
        }
        _ => {
            return Err(Error::UnsupportedDomain(format!(
                "boundary quadrature for balls is implemented for d <= 3, got d = {d}"
            )))
        }
    }
    Ok(())
}

fn polygon_boundary(q: &mut BoundaryQuadrature, vertices: &[[f64; 2]], resolution: usize) {
    let n = vertices.len();
    let lengths: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .collect();
    let perimeter: f64 = lengths.iter().sum();
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        let panels = ((resolution as f64 * lengths[i] / perimeter).round() as usize).max(1);
        let normal = [(b[1] - a[1]) / lengths[i], -(b[0] - a[0]) / lengths[i]];
        let w = lengths[i] / panels as f64;
        for k in 0..panels {
            let s = (k as f64 + 0.5) / panels as f64;
            q.push(&[a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])], &normal, w);
        }
    }
}
