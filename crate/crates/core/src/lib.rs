//! Numerical laboratory for the density of states of Dirichlet Schrodinger
//! operators -Delta + V on dilated domains R * Omega.
//!
//! For radially homogeneous potentials the trace on R * Omega equals a
//! semiclassical trace on Omega with hbar = 1/R; the crate exploits that
//! identity to reach the thermodynamic limit on fixed-size grids.

pub mod discretize;
pub mod dos;
pub mod error;
pub mod geometry;
pub mod output;
pub mod potential;
pub mod quadrature;
pub mod special;
pub mod spectral;

pub use error::{Error, ErrorKind, Result};
pub use geometry::{BoundaryQuadrature, Domain, DomainDescriptor};
pub use potential::{exp_integral, mean_over_domain, Potential, PotentialDescriptor};
pub use spectral::{HeatTraceEstimate, Method, MethodPolicy};
