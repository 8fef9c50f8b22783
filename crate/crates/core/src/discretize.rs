//! Lattice grids over domains and the Dirichlet finite-difference operator
//! H = hbar^2 (-Delta_h) + diag(V).

use std::collections::HashMap;
use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{Domain, Shape};
use crate::potential::Potential;

/// Lattice points of spacing h retained strictly inside a domain.
#[derive(Clone, Debug)]
pub struct Grid {
    dim: usize,
    spacing: f64,
    /// Flattened node coordinates, `dim` per node.
    nodes: Vec<f64>,
    /// Flattened integer lattice coordinates, `dim` per node.
    lattice: Vec<i32>,
    /// Node i sits at spacing * (lattice_index(i) + frame_origin) per axis.
    /// Zero-based half-integers when the lattice is symmetric about 0.
    frame_origin: f64,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn lattice_index(&self, i: usize) -> &[i32] {
        &self.lattice[i * self.dim..(i + 1) * self.dim]
    }

    /// Node i in lattice units, lattice_index(i) + frame_origin. For symmetric
    /// lattices this is exact, so directions from 0 do not depend on h.
    pub fn frame_point(&self, i: usize, out: &mut [f64]) {
        for (o, &k) in out.iter_mut().zip(self.lattice_index(i)) {
            *o = k as f64 + self.frame_origin;
        }
    }

    /// N h^d, the pixel-count volume.
    pub fn counted_volume(&self) -> f64 {
        self.len() as f64 * self.spacing.powi(self.dim as i32)
    }

    fn index_map(&self) -> HashMap<&[i32], usize> {
        (0..self.len()).map(|i| (self.lattice_index(i), i)).collect()
    }
}

/// Interior node count of the classical rule on (-a, a) with spacing h, and
/// the lattice-frame origin (exact when 2a/h is an integer).
fn box_rule(half_width: f64, h: f64) -> (usize, f64) {
    let m = 2.0 * half_width / h;
    let r = m.round();
    if (m - r).abs() <= 1e-9 * r.max(1.0) {
        ((r - 1.0).max(0.0) as usize, -r / 2.0)
    } else {
        (m.floor() as usize, -half_width / h)
    }
}

/// Lattice nodes strictly inside the domain.
///
/// Boxes use the classical interior rule x = -a + k h, k = 1..n; every other
/// shape uses cell centres x = h (k + 1/2), so no node sits on the origin axes
/// or on a centred circle.
pub fn build_grid(domain: &Domain, h: f64) -> Result<Grid> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {h}")));
    }
    let d = domain.dim();
    let (lo, count, frame_origin, coord): (i64, usize, f64, Box<dyn Fn(i64) -> f64>) =
        match domain.shape() {
            Shape::Box { half_width } => {
                let a = *half_width;
                let (n, origin) = box_rule(a, h);
                (1, n, origin, Box::new(move |k| -a + k as f64 * h))
            }
            _ => {
                let k = (domain.bounding_radius() / h).ceil() as i64 + 1;
                (-k - 1, (2 * k + 2) as usize, 0.5, Box::new(move |k| h * (k as f64 + 0.5)))
            }
        };
    let total = (count as u128).pow(d as u32);
    if total > u32::MAX as u128 {
        return Err(Error::InvalidParameter(format!("grid with spacing {h} is too large")));
    }
    let mut nodes = Vec::new();
    let mut lattice = Vec::new();
    let mut x = vec![0.0; d];
    let mut k = vec![0i32; d];
    for flat in 0..total as usize {
        let mut rem = flat;
        // Last axis varies fastest.
        for axis in (0..d).rev() {
            let ki = lo + (rem % count) as i64;
            rem /= count;
            k[axis] = ki as i32;
            x[axis] = coord(ki);
        }
        if domain.contains_unchecked(&x) {
            nodes.extend_from_slice(&x);
            lattice.extend_from_slice(&k);
        }
    }
    if nodes.is_empty() {
        return Err(Error::EmptyGrid { spacing: h });
    }
    Ok(Grid { dim: d, spacing: h, nodes, lattice, frame_origin })
}

/// Sparse symmetric (2d+1)-point operator with Dirichlet conditions by node omission.
#[derive(Clone, Debug)]
pub struct DiscreteHamiltonian {
    dim: usize,
    hbar: f64,
    spacing: f64,
    /// hbar^2 / h^2.
    kinetic: f64,
    potential_bound: f64,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    lattice: Vec<i32>,
}

/// Assembles hbar^2 (-Delta_h) + diag(V(node)) on the grid.
pub fn assemble(grid: &Grid, potential: &Potential, hbar: f64) -> Result<DiscreteHamiltonian> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
    }
    let ratio = hbar / grid.spacing;
    assemble_with_kinetic(grid, potential, hbar, ratio * ratio)
}

fn assemble_with_kinetic(
    grid: &Grid,
    potential: &Potential,
    hbar: f64,
    kinetic: f64,
) -> Result<DiscreteHamiltonian> {
    let d = grid.dim;
    if potential.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: potential.dim() });
    }
    let n = grid.len();
    let index = grid.index_map();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(n * (2 * d + 1));
    let mut vals = Vec::with_capacity(n * (2 * d + 1));
    row_ptr.push(0);
    let mut nb = vec![0i32; d];
    let mut row: Vec<(u32, f64)> = Vec::with_capacity(2 * d + 1);
    let mut frame = vec![0.0; d];
    // Homogeneous potentials only see directions; evaluating them in lattice
    // units makes V(node) independent of the dilation of the grid.
    let homogeneous = potential.is_homogeneous();
    for i in 0..n {
        row.clear();
        let v = if homogeneous {
            grid.frame_point(i, &mut frame);
            potential.eval_unchecked(&frame)
        } else {
            potential.eval_unchecked(grid.node(i))
        };
        row.push((i as u32, 2.0 * d as f64 * kinetic + v));
        let k = grid.lattice_index(i);
        for axis in 0..d {
            for step in [-1, 1] {
                nb.copy_from_slice(k);
                nb[axis] += step;
                if let Some(&j) = index.get(nb.as_slice()) {
                    row.push((j as u32, -kinetic));
                }
            }
        }
        row.sort_by_key(|e| e.0);
        for &(c, v) in &row {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    Ok(DiscreteHamiltonian {
        dim: d,
        hbar,
        spacing: grid.spacing,
        kinetic,
        potential_bound: potential.bound(),
        row_ptr,
        cols,
        vals,
        lattice: grid.lattice.clone(),
    })
}

impl DiscreteHamiltonian {
    /// Operator with explicit diagonal and no couplings (testing and diagnostics).
    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            dim: 1,
            hbar: 0.0,
            spacing: 1.0,
            kinetic: 0.0,
            potential_bound: values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            row_ptr: (0..=n).collect(),
            cols: (0..n as u32).collect(),
            vals: values.to_vec(),
            lattice: (0..n as i32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn kinetic(&self) -> f64 {
        self.kinetic
    }

    pub fn potential_bound(&self) -> f64 {
        self.potential_bound
    }

    /// 4 d hbar^2 / h^2 + M, above every eigenvalue.
    pub fn lambda_max(&self) -> f64 {
        4.0 * self.dim as f64 * self.kinetic + self.potential_bound
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn lattice_index(&self, i: usize) -> &[i32] {
        &self.lattice[i * self.dim..(i + 1) * self.dim]
    }

    /// (column, value) pairs of row i, sorted by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().zip(&self.vals[r]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn diagonal_entry(&self, i: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == i).map_or(0.0, |(_, v)| v)
    }

    /// Row-sum enclosure [min(a_ii - r_i), max(a_ii + r_i)] of the spectrum.
    pub fn gershgorin_interval(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.len() {
            let (mut diag, mut radius) = (0.0, 0.0);
            for (c, v) in self.row(i) {
                if c == i {
                    diag = v;
                } else {
                    radius += v.abs();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        (lo, hi)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.len());
        assert_eq!(y.len(), self.len());
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub(crate) fn csr(&self) -> (&[usize], &[u32], &[f64]) {
        (&self.row_ptr, &self.cols, &self.vals)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.len()).all(|i| {
            self.row(i).all(|(c, v)| self.row(c).any(|(cc, vv)| cc == i && vv.to_bits() == v.to_bits()))
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for (c, v) in self.row(i) {
                m[(i, c)] = v;
            }
        }
        m
    }

    /// Writes `row col value` lines sorted by (row, col), values in `{:.16e}`.
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        for i in 0..self.len() {
            for (c, v) in self.row(i) {
                writeln!(w, "{i} {c} {v:.16e}")?;
            }
        }
        Ok(())
    }
}

/// The operator on R * Omega (hbar = 1, spacing h R) and on Omega
/// (hbar = 1/R, spacing h), with the node bijection x <-> R x.
#[derive(Clone, Debug)]
pub struct RescaledPair {
    pub scaled: DiscreteHamiltonian,
    pub unit: DiscreteHamiltonian,
    /// `bijection[i]` is the node of `unit` matching node i of `scaled`.
    pub bijection: Vec<usize>,
}

impl RescaledPair {
    /// Largest entrywise |difference| after the bijection; infinite if the
    /// sparsity patterns disagree.
    pub fn max_entry_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for i in 0..self.scaled.len() {
            let bi = self.bijection[i];
            let mut a: Vec<(usize, f64)> =
                self.scaled.row(i).map(|(c, v)| (self.bijection[c], v)).collect();
            a.sort_by_key(|e| e.0);
            let b: Vec<(usize, f64)> = self.unit.row(bi).collect();
            if a.len() != b.len() {
                return f64::INFINITY;
            }
            for ((ca, va), (cb, vb)) in a.iter().zip(&b) {
                if ca != cb {
                    return f64::INFINITY;
                }
                dev = dev.max((va - vb).abs());
            }
        }
        dev
    }
}

/// Discrete form of the rescaling identity for homogeneous potentials.
///
/// Both grids are built independently; the kinetic coupling 1/(hR)^2 is the
/// same dimensionless lattice quantity for both operators and is shared.
pub fn rescaled_pair(domain: &Domain, potential: &Potential, r: f64, h: f64) -> Result<RescaledPair> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("R must be positive, got {r}")));
    }
    if !potential.is_homogeneous() {
        return Err(Error::NonHomogeneous(
            "the rescaling identity needs V(Rx) = V(x)".into(),
        ));
    }
    let unit_grid = build_grid(domain, h)?;
    let scaled_grid = build_grid(&domain.scale(r)?, h * r)?;
    if unit_grid.len() != scaled_grid.len() {
        return Err(Error::NoBijection(format!(
            "node counts differ: {} on Omega, {} on R Omega",
            unit_grid.len(),
            scaled_grid.len()
        )));
    }
    let index = unit_grid.index_map();
    let bijection = (0..scaled_grid.len())
        .map(|i| {
            index.get(scaled_grid.lattice_index(i)).copied().ok_or_else(|| {
                Error::NoBijection(format!("lattice point {:?} missing on Omega", scaled_grid.lattice_index(i)))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratio = 1.0 / (h * r);
    let kinetic = ratio * ratio;
    Ok(RescaledPair {
        scaled: assemble_with_kinetic(&scaled_grid, potential, 1.0, kinetic)?,
        unit: assemble_with_kinetic(&unit_grid, potential, 1.0 / r, kinetic)?,
        bijection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn one_dimensional_interior_rule() {
        let dom = Domain::cube(1, 1.0).unwrap();
        for n in [1usize, 2, 7, 19, 99] {
            let h = 2.0 / (n + 1) as f64;
            let g = build_grid(&dom, h).unwrap();
            assert_eq!(g.len(), n);
            for k in 0..n {
                assert!((g.node(k)[0] - (-1.0 + (k + 1) as f64 * h)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn small_square_and_disk() {
        let g = build_grid(&Domain::cube(2, 1.0).unwrap(), 0.5).unwrap();
        assert_eq!(g.len(), 9);
        let disk = build_grid(&Domain::ball(2, 1.0).unwrap(), 0.1).unwrap();
        let rel = (disk.counted_volume() - PI).abs() / PI;
        assert!(rel < 0.05, "{rel}");
    }

    #[test]
    fn empty_grid_and_bad_spacing() {
        let dom = Domain::cube(1, 1.0).unwrap();
        assert_eq!(build_grid(&dom, 2.5).unwrap_err(), Error::EmptyGrid { spacing: 2.5 });
        assert!(build_grid(&dom, 0.0).is_err());
        assert!(build_grid(&dom, f64::NAN).is_err());
    }

    #[test]
    fn every_node_is_inside() {
        let star = Domain::star_polygon(vec![[1.5, 0.0], [0.2, 0.3], [0.0, 1.0], [-1.0, 0.2], [0.1, -0.8]]).unwrap();
        for dom in [
            Domain::cube(2, 1.0).unwrap(),
            Domain::ball(3, 1.0).unwrap(),
            star,
            Domain::cube(3, 0.5).unwrap(),
        ] {
            let g = build_grid(&dom, 0.07).unwrap();
            for i in 0..g.len() {
                assert!(dom.contains(g.node(i)).unwrap());
            }
        }
    }

    #[test]
    fn stencil_structure() {
        let dom = Domain::cube(2, 1.0).unwrap();
        let v = Potential::example(2).unwrap();
        let g = build_grid(&dom, 0.25).unwrap();
        let h = assemble(&g, &v, 0.5).unwrap();
        let kin = (0.5f64 / 0.25).powi(2);
        assert_eq!(h.kinetic(), kin);
        assert!(h.is_symmetric());
        for i in 0..h.len() {
            let expect = 4.0 * kin + v.eval(g.node(i)).unwrap();
            assert!((h.diagonal_entry(i) - expect).abs() < 1e-14);
            for (c, val) in h.row(i) {
                if c != i {
                    assert_eq!(val, -kin);
                    let (a, b) = (g.lattice_index(i), g.lattice_index(c));
                    let dist: i32 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
                    assert_eq!(dist, 1);
                }
            }
        }
        assert_eq!(h.lambda_max(), 8.0 * kin + 0.5);
        let (lo, hi) = h.gershgorin_interval();
        assert!(lo >= 0.0 && hi <= h.lambda_max());
    }

    #[test]
    fn constant_potential_is_a_diagonal_shift() {
        let dom = Domain::ball(2, 1.0).unwrap();
        let g = build_grid(&dom, 0.2).unwrap();
        let h0 = assemble(&g, &Potential::zero(2).unwrap(), 1.0).unwrap();
        let hc = assemble(&g, &Potential::constant(2, 0.75).unwrap(), 1.0).unwrap();
        for i in 0..h0.len() {
            for ((c0, v0), (c1, v1)) in h0.row(i).zip(hc.row(i)) {
                assert_eq!(c0, c1);
                let expect = if c0 == i { v0 + 0.75 } else { v0 };
                assert_eq!(v1, expect);
            }
        }
    }

    #[test]
    fn interior_row_sums_to_potential() {
        let dom = Domain::cube(2, 1.0).unwrap();
        let v = Potential::example(2).unwrap();
        let g = build_grid(&dom, 0.1).unwrap();
        let h = assemble(&g, &v, 1.0).unwrap();
        let ones = vec![1.0; h.len()];
        let mut y = vec![0.0; h.len()];
        h.matvec(&ones, &mut y);
        for i in 0..h.len() {
            if h.row(i).count() == 5 {
                let vi = v.eval(g.node(i)).unwrap();
                assert!((y[i] - vi).abs() < 1e-9, "{} vs {}", y[i], vi);
            }
        }
    }

    #[test]
    fn rescaled_pair_identity() {
        let v = Potential::example(2).unwrap();
        for dom in [Domain::cube(2, 1.0).unwrap(), Domain::ball(2, 1.0).unwrap()] {
            for r in [1.0, 2.0, 3.0] {
                let pair = rescaled_pair(&dom, &v, r, 0.1).unwrap();
                assert_eq!(pair.scaled.len(), pair.unit.len());
                assert_eq!(pair.max_entry_deviation(), 0.0);
            }
        }
    }

    #[test]
    fn rescaled_pair_rejects_non_homogeneous() {
        let bump = Potential::gaussian_bump(2, 1.0, 0.5).unwrap();
        let dom = Domain::cube(2, 1.0).unwrap();
        assert!(matches!(rescaled_pair(&dom, &bump, 2.0, 0.1), Err(Error::NonHomogeneous(_))));
    }

    #[test]
    fn coo_dump_is_sorted() {
        let g = build_grid(&Domain::cube(1, 1.0).unwrap(), 0.5).unwrap();
        let h = assemble(&g, &Potential::zero(1).unwrap(), 1.0).unwrap();
        let mut out = Vec::new();
        h.write_coo(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], "0 0 8.0000000000000000e0");
        assert_eq!(lines[1], "0 1 -4.0000000000000000e0");
    }

    #[test]
    fn monotone_node_counts() {
        for dom in [Domain::cube(2, 1.0).unwrap(), Domain::ball(2, 1.0).unwrap()] {
            let mut prev = 0;
            for h in [0.5, 0.3, 0.2, 0.15, 0.1, 0.07, 0.05] {
                let n = build_grid(&dom, h).unwrap().len();
                assert!(n >= prev, "{} h={h}", dom.kind_name());
                prev = n;
            }
        }
    }
}
