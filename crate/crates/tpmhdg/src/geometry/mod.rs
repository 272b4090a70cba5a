//! Implicit domain descriptions, clipped meshes and transfer paths.

mod admissibility;
mod mesh;
mod transfer;

pub use admissibility::{
    check_closeness, estimate_delta, AdmissibilityReport, ClosenessConstants, FacetAdmissibility,
    FacetConstants,
};
pub use mesh::{
    extract_interior_mesh, generate_background_mesh, generate_disk_mesh, Facet, Rect,
    Triangulation,
};
pub use transfer::{
    build_transfer_map, strategy_by_name, strategy_names, FacetNormal, FacetTransfer,
    TransferMap, TransferNode, TransferStrategy, TransferWarning, VertexAveragedNormal,
};

use crate::{Point, Vector};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    /// The signed function does not change sign along the probed segment;
    /// the transfer direction is badly oriented for this facet.
    #[error("no boundary crossing along ray from ({x:.6}, {y:.6}) within {t_max:.6}")]
    NoRootInRange { x: f64, y: f64, t_max: f64 },
    /// No background element survived the containment test.
    #[error("interior mesh is empty: no element lies completely inside the domain")]
    EmptyMesh,
}

type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(Point) -> Vector + Send + Sync>;

/// A curved domain given as a signed implicit function: negative inside,
/// positive outside, zero on the boundary.
#[derive(Clone)]
pub struct ImplicitDomain {
    name: String,
    f: ScalarFn,
    grad: GradFn,
}

impl fmt::Debug for ImplicitDomain {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("ImplicitDomain").field("name", &self.name).finish()
    }
}

impl ImplicitDomain {
    /// Disk x^2 + y^2 <= 0.75.
    pub fn circle() -> Self {
        Self {
            name: "circle".into(),
            f: Arc::new(|p| p.x * p.x + p.y * p.y - 0.75),
            grad: Arc::new(|p| Vector::new(2.0 * p.x, 2.0 * p.y)),
        }
    }

    /// Kidney-shaped domain: (2r^2 - (x + 1/2))^2 - r^2 + 1/10 <= 0 with
    /// r^2 = (x + 1/2)^2 + y^2. Concave notch around (-1/2, 0).
    pub fn kidney() -> Self {
        Self {
            name: "kidney".into(),
            f: Arc::new(|p| {
                let u = p.x + 0.5;
                let r2 = u * u + p.y * p.y;
                (2.0 * r2 - u).powi(2) - r2 + 0.1
            }),
            grad: Arc::new(|p| {
                let u = p.x + 0.5;
                let r2 = u * u + p.y * p.y;
                let s = 2.0 * r2 - u;
                Vector::new(2.0 * s * (4.0 * u - 1.0) - 2.0 * u, 8.0 * s * p.y - 2.0 * p.y)
            }),
        }
    }

    /// Axis-aligned square of the given center and half-width (Chebyshev
    /// distance level set); useful for fitted polygonal test cases.
    pub fn square(center: Point, half_width: f64) -> Self {
        Self {
            name: "square".into(),
            f: Arc::new(move |p| {
                (p.x - center.x).abs().max((p.y - center.y).abs()) - half_width
            }),
            grad: Arc::new(move |p| {
                let dx = p.x - center.x;
                let dy = p.y - center.y;
                if dx.abs() >= dy.abs() {
                    Vector::new(dx.signum(), 0.0)
                } else {
                    Vector::new(0.0, dy.signum())
                }
            }),
        }
    }

    /// Unit square [0,1]^2.
    pub fn unit_square() -> Self {
        Self::square(Point::new(0.5, 0.5), 0.5)
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(Point) -> f64 + Send + Sync + 'static,
        grad: impl Fn(Point) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            grad: Arc::new(grad),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Signed value: negative strictly inside, positive strictly outside,
    /// zero on the boundary.
    pub fn value(&self, p: Point) -> f64 {
        (self.f)(p)
    }

    pub fn gradient(&self, p: Point) -> Vector {
        (self.grad)(p)
    }
}

/// Tolerance to which ray/boundary intersections are resolved (in the ray
/// parameter).
pub const ROOT_TOL: f64 = 1e-12;
const SCAN_SAMPLES: usize = 64;

/// Smallest t in [0, t_max] with F(origin + t dir) = 0, assuming
/// F(origin) <= 0 and |dir| = 1. Sign change is bracketed by a uniform scan
/// and resolved by bisection with a final Newton polish.
pub fn ray_intersect(
    domain: &ImplicitDomain,
    origin: Point,
    dir: Vector,
    t_max: f64,
) -> Result<f64, GeometryError> {
    let eval = |t: f64| domain.value(origin + t * dir);
    if eval(0.0).abs() < ROOT_TOL {
        return Ok(0.0);
    }
    let dt = t_max / SCAN_SAMPLES as f64;
    let mut lo = 0.0;
    let mut hi = None;
    for i in 1..=SCAN_SAMPLES {
        let t = i as f64 * dt;
        if eval(t) > 0.0 {
            hi = Some(t);
            break;
        }
        lo = t;
    }
    let Some(mut hi) = hi else {
        return Err(GeometryError::NoRootInRange {
            x: origin.x,
            y: origin.y,
            t_max,
        });
    };
    let mut lo = lo;
    while hi - lo > ROOT_TOL * 0.5 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    // Newton polish (kept inside the bracket)
    for _ in 0..3 {
        let g = domain.gradient(origin + t * dir).dot(&dir);
        if g.abs() > 1e-14 {
            let t_new = t - eval(t) / g;
            if t_new >= lo && t_new <= hi {
                t = t_new;
            }
        }
    }
    Ok(t.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point;

    #[test]
    fn circle_values() {
        let d = ImplicitDomain::circle();
        assert!((d.value(point(0.0, 0.0)) + 0.75).abs() < 1e-15);
        assert!((d.value(point(1.0, 0.0)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn kidney_values() {
        let d = ImplicitDomain::kidney();
        assert!((d.value(point(0.0, 0.0)) + 0.15).abs() < 1e-15);
        assert!((d.value(point(-0.5, 0.0)) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = 1234567u64;
        let mut next = || {
            // xorshift, good enough for sample points
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        for d in [ImplicitDomain::circle(), ImplicitDomain::kidney(), ImplicitDomain::unit_square()] {
            let mut checked = 0;
            while checked < 100 {
                let p = point(next() * 2.0 - 1.0, next() * 2.0 - 1.0);
                if d.value(p) >= -1e-3 {
                    continue; // want interior points
                }
                let h = 1e-6;
                let fdx = (d.value(point(p.x + h, p.y)) - d.value(point(p.x - h, p.y))) / (2.0 * h);
                let fdy = (d.value(point(p.x, p.y + h)) - d.value(point(p.x, p.y - h))) / (2.0 * h);
                let g = d.gradient(p);
                let scale = g.norm().max(1.0);
                assert!(
                    ((g.x - fdx).powi(2) + (g.y - fdy).powi(2)).sqrt() / scale < 1e-6,
                    "{}: grad mismatch at {p:?}",
                    d.name()
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn ray_crosses_circle() {
        let d = ImplicitDomain::circle();
        let l = ray_intersect(&d, point(0.0, 0.0), Vector::new(1.0, 0.0), 2.0).unwrap();
        assert!((l - 0.75f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn ray_from_boundary_is_zero() {
        let d = ImplicitDomain::circle();
        let r = 0.75f64.sqrt();
        let l = ray_intersect(&d, point(r, 0.0), Vector::new(1.0, 0.0), 2.0).unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn ray_without_crossing_errors() {
        let d = ImplicitDomain::unit_square();
        // short ray that stays inside
        let err = ray_intersect(&d, point(0.5, 0.5), Vector::new(1.0, 0.0), 0.25);
        assert!(matches!(err, Err(GeometryError::NoRootInRange { .. })));
    }

    #[test]
    fn ray_picks_smallest_root() {
        // annulus-like sign pattern along the ray: first crossing must win
        let d = ImplicitDomain::custom(
            "wavy",
            |p| (4.0 * std::f64::consts::PI * p.x).sin() - 0.5,
            |p| Vector::new(4.0 * std::f64::consts::PI * (4.0 * std::f64::consts::PI * p.x).cos(), 0.0 * p.y),
        );
        // F < 0 at x = 0; first root at sin(4 pi x) = 0.5 -> x = 1/24
        let l = ray_intersect(&d, point(0.0, 0.0), Vector::new(1.0, 0.0), 1.0).unwrap();
        assert!((l - 1.0 / 24.0).abs() < 1e-11, "{l}");
    }
}
