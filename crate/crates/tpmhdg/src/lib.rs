//! Unfitted hybridizable discontinuous Galerkin solver for the
//! convection-diffusion distributed optimal control problem on curved 2D
//! domains.
//!
//! The computational mesh is a background triangulation clipped to the
//! interior of an implicitly defined domain; Dirichlet data living on the
//! true boundary is imposed on the mesh boundary by integrating the
//! extrapolated flux along transfer paths (segments joining each mesh
//! boundary point to the true boundary). The state and adjoint problems are
//! discretized together and solved in one shot, either monolithically or
//! statically condensed to the facet trace unknowns.
//!
//! Modules follow the pipeline: [`geometry`] (domains, meshes, transfer
//! paths, admissibility diagnostics), [`polybasis`] (element/edge bases,
//! quadrature, extrapolation constants), [`projections`] (facet L2 and HDG
//! projections), [`hdg`] (assembly and solve), [`verification`]
//! (manufactured solutions, errors, convergence studies) and [`config`]
//! (run configuration for the CLI).

pub mod config;
pub mod geometry;
pub mod hdg;
pub mod polybasis;
pub mod projections;
pub mod verification;

/// 2D point, in the same length units as the domain definition.
pub type Point = nalgebra::Point2<f64>;
/// 2D vector.
pub type Vector = nalgebra::Vector2<f64>;

pub(crate) fn point(x: f64, y: f64) -> Point {
    Point::new(x, y)
}
