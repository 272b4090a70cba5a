//! The coupled state-adjoint HDG system: problem data, stabilization,
//! assembly (monolithic and statically condensed) and the sparse solve.

mod assemble;
mod local;
mod solve;

pub use assemble::{assemble_condensed, assemble_monolithic, tpm_path_integral, CondensedSystem};
pub use solve::{
    residual_monolithic, solve_condensed, solve_linear_system, solve_monolithic, solve_with_mode,
    AssemblyMode, SolveDiagnostics,
};

use crate::geometry::Triangulation;
use crate::polybasis::quadrature::gauss01;
use crate::{Point, Vector};
use nalgebra::DVector;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HdgError {
    /// B.3 fails: min(tau1 - beta.n / 2) <= 0 on some element boundary.
    #[error("stabilization violation on facet {facet}: min(tau1 - beta.n/2) = {margin:.6e} <= 0")]
    StabilizationViolation { facet: usize, margin: f64 },
    /// An element-local block of the condensation is not invertible.
    #[error("singular local block on element {element}")]
    SingularLocalBlock { element: usize },
    /// The global sparse matrix could not be factorized (or produced a
    /// non-finite solution).
    #[error("singular global system: {detail}")]
    SingularMatrix { detail: String },
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Basis(#[from] crate::polybasis::BasisError),
}

type Scalar = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
type Field = Arc<dyn Fn(Point) -> Vector + Send + Sync>;

/// Data of the optimal control problem: source f, target y_d, state
/// Dirichlet datum g on the true boundary, adjoint datum g_adj (zero for
/// the true control problem, nonzero in manufactured mode), divergence-free
/// velocity beta, and the regularization gamma > 0.
#[derive(Clone)]
pub struct ProblemData {
    pub f: Scalar,
    pub y_d: Scalar,
    pub g: Scalar,
    pub g_adj: Scalar,
    pub beta: Field,
    pub gamma: f64,
}

impl ProblemData {
    pub fn alpha(&self) -> f64 {
        1.0 / self.gamma
    }

    /// Largest |div beta| sampled by central differences at `n` points of
    /// the rectangle [-1,1]^2; the scheme requires div beta = 0.
    pub fn divergence_sample(&self, n: usize) -> f64 {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let p = Point::new(next() * 2.0 - 1.0, next() * 2.0 - 1.0);
            let dx = ((self.beta)(Point::new(p.x + h, p.y)).x
                - (self.beta)(Point::new(p.x - h, p.y)).x)
                / (2.0 * h);
            let dy = ((self.beta)(Point::new(p.x, p.y + h)).y
                - (self.beta)(Point::new(p.x, p.y - h)).y)
                / (2.0 * h);
            worst = worst.max((dx + dy).abs());
        }
        worst
    }
}

/// Stabilization of the two numerical fluxes. tau1 is one constant per
/// facet; tau2 = tau1 - beta.n pointwise at the facet quadrature nodes,
/// stored per side (owner side 0, neighbor side 1).
#[derive(Clone, Debug)]
pub struct StabilizationPair {
    pub tau1: Vec<f64>,
    pub tau2: Vec<[Vec<f64>; 2]>,
    /// min over all facets, sides and nodes of tau1 - beta.n / 2
    pub margin: f64,
    pub quad_points: usize,
}

/// tau1 = `tau1_value` on every facet; tau2 derived pointwise. Fails if the
/// coercivity margin min(tau1 - beta.n / 2) is not positive.
pub fn select_tau(
    mesh: &Triangulation,
    beta: &dyn Fn(Point) -> Vector,
    tau1_value: f64,
    quad_points: usize,
) -> Result<StabilizationPair, HdgError> {
    assert!(tau1_value > 0.0);
    let rule = gauss01(quad_points).expect("facet rule size");
    let nf = mesh.n_facets();
    let mut tau2 = Vec::with_capacity(nf);
    let mut margin = f64::INFINITY;
    let mut worst_facet = 0usize;
    for fi in 0..nf {
        let (pa, pb) = mesh.facet_endpoints(fi);
        let owner = mesh.facets[fi].owner.0;
        let n_owner = mesh.facet_normal(fi, owner);
        let mut sides = [Vec::new(), Vec::new()];
        for (side, normal) in [(0usize, n_owner), (1, -n_owner)] {
            if side == 1 && mesh.facets[fi].neighbor.is_none() {
                break;
            }
            for &s in &rule.nodes {
                let x = Point::from(pa.coords * (1.0 - s) + pb.coords * s);
                let bn = beta(x).dot(&normal);
                let m = tau1_value - 0.5 * bn;
                if m < margin {
                    margin = m;
                    worst_facet = fi;
                }
                sides[side].push(tau1_value - bn);
            }
        }
        tau2.push(sides);
    }
    if margin <= 0.0 {
        return Err(HdgError::StabilizationViolation {
            facet: worst_facet,
            margin,
        });
    }
    Ok(StabilizationPair {
        tau1: vec![tau1_value; nf],
        tau2,
        margin,
        quad_points,
    })
}

/// Discrete solution: element coefficient fields in the per-element
/// orthonormal bases, facet trace fields in the orthonormal edge bases,
/// and the recovered control u = z / gamma.
#[derive(Clone, Debug)]
pub struct HDGSolution {
    pub degree: usize,
    pub q: Vec<[DVector<f64>; 2]>,
    pub y: Vec<DVector<f64>>,
    pub p: Vec<[DVector<f64>; 2]>,
    pub z: Vec<DVector<f64>>,
    pub y_hat: Vec<DVector<f64>>,
    pub z_hat: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
}

impl HDGSolution {
    /// Max absolute coefficient over all six fields.
    pub fn max_coeff(&self) -> f64 {
        let mut m: f64 = 0.0;
        for e in 0..self.y.len() {
            for c in 0..2 {
                m = m.max(self.q[e][c].amax()).max(self.p[e][c].amax());
            }
            m = m.max(self.y[e].amax()).max(self.z[e].amax());
        }
        for f in 0..self.y_hat.len() {
            m = m.max(self.y_hat[f].amax()).max(self.z_hat[f].amax());
        }
        m
    }

    /// CSV of the coefficient fields, one row per (id, field).
    pub fn fields_csv(&self) -> String {
        let mut out = String::from("id,field,coeffs\n");
        let join = |v: &DVector<f64>| {
            v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(";")
        };
        for e in 0..self.y.len() {
            out.push_str(&format!("{e},q_x,{}\n", join(&self.q[e][0])));
            out.push_str(&format!("{e},q_y,{}\n", join(&self.q[e][1])));
            out.push_str(&format!("{e},y,{}\n", join(&self.y[e])));
            out.push_str(&format!("{e},p_x,{}\n", join(&self.p[e][0])));
            out.push_str(&format!("{e},p_y,{}\n", join(&self.p[e][1])));
            out.push_str(&format!("{e},z,{}\n", join(&self.z[e])));
            out.push_str(&format!("{e},u,{}\n", join(&self.u[e])));
        }
        for f in 0..self.y_hat.len() {
            out.push_str(&format!("{f},y_hat,{}\n", join(&self.y_hat[f])));
            out.push_str(&format!("{f},z_hat,{}\n", join(&self.z_hat[f])));
        }
        out
    }
}

/// Block layout of the monolithic unknown vector: per element
/// [q_x, q_y, y, p_x, p_y, z] (n_k coefficients each), elements
/// consecutive, then per facet [y_hat, z_hat] (n_mu each).
#[derive(Clone, Copy, Debug)]
pub struct DofLayout {
    pub n_elements: usize,
    pub n_facets: usize,
    pub n_k: usize,
    pub n_mu: usize,
}

impl DofLayout {
    pub fn new(mesh: &Triangulation, degree: usize) -> Self {
        Self {
            n_elements: mesh.n_elements(),
            n_facets: mesh.n_facets(),
            n_k: (degree + 1) * (degree + 2) / 2,
            n_mu: degree + 1,
        }
    }
    pub fn q(&self, e: usize, c: usize, a: usize) -> usize {
        e * 6 * self.n_k + c * self.n_k + a
    }
    pub fn y(&self, e: usize, a: usize) -> usize {
        e * 6 * self.n_k + 2 * self.n_k + a
    }
    pub fn p(&self, e: usize, c: usize, a: usize) -> usize {
        e * 6 * self.n_k + (3 + c) * self.n_k + a
    }
    pub fn z(&self, e: usize, a: usize) -> usize {
        e * 6 * self.n_k + 5 * self.n_k + a
    }
    pub fn trace_base(&self) -> usize {
        6 * self.n_k * self.n_elements
    }
    pub fn y_hat(&self, f: usize, j: usize) -> usize {
        self.trace_base() + f * 2 * self.n_mu + j
    }
    pub fn z_hat(&self, f: usize, j: usize) -> usize {
        self.trace_base() + f * 2 * self.n_mu + self.n_mu + j
    }
    pub fn dim(&self) -> usize {
        6 * self.n_k * self.n_elements + 2 * self.n_mu * self.n_facets
    }
    /// dimension of the trace-only (condensed) system
    pub fn trace_dim(&self) -> usize {
        2 * self.n_mu * self.n_facets
    }
}

/// Sparse square system in triplet form plus its layout manifest.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub dim: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    pub layout: DofLayout,
    /// true when the unknowns are the facet traces only
    pub trace_only: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_background_mesh, Rect};

    #[test]
    fn tau_pair_satisfies_b_conditions() {
        let mesh = generate_background_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), 2);
        let beta = |_: Point| Vector::new(1.0, 1.0);
        let tau = select_tau(&mesh, &beta, 1.0, 3).unwrap();
        // B.2: tau2 + beta.n = tau1 at every stored node
        let rule = gauss01(3).unwrap();
        for fi in 0..mesh.n_facets() {
            let (pa, pb) = mesh.facet_endpoints(fi);
            let owner = mesh.facets[fi].owner.0;
            for (side, sgn) in [(0usize, 1.0), (1, -1.0)] {
                if side == 1 && mesh.facets[fi].neighbor.is_none() {
                    continue;
                }
                let n = mesh.facet_normal(fi, owner) * sgn;
                for (i, &s) in rule.nodes.iter().enumerate() {
                    let x = Point::from(pa.coords * (1.0 - s) + pb.coords * s);
                    let bn = beta(x).dot(&n);
                    assert!((tau.tau2[fi][side][i] + bn - tau.tau1[fi]).abs() < 1e-12);
                }
            }
        }
        assert!(tau.margin > 0.0);
    }

    #[test]
    fn tau2_on_axis_facet() {
        // facet with normal (1,0), beta=(1,1): tau2 = 0 there, margin 1/2
        let mesh = generate_background_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), 1);
        let beta = |_: Point| Vector::new(1.0, 1.0);
        let tau = select_tau(&mesh, &beta, 1.0, 2).unwrap();
        let fi = *mesh
            .boundary_facets
            .iter()
            .find(|&&fi| {
                let owner = mesh.facets[fi].owner.0;
                (mesh.facet_normal(fi, owner) - Vector::new(1.0, 0.0)).norm() < 1e-12
            })
            .unwrap();
        for &t2 in &tau.tau2[fi][0] {
            assert!(t2.abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_facet_margin() {
        // beta=(1,1), n = (sqrt2/2, sqrt2/2): margin 1 - sqrt2/2 with tau1=1,
        // violation with tau1=0.5
        let mesh = generate_background_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), 1);
        let beta = |_: Point| Vector::new(1.0, 1.0);
        let tau = select_tau(&mesh, &beta, 1.0, 2).unwrap();
        let expect = 1.0 - std::f64::consts::SQRT_2 / 2.0;
        assert!((tau.margin - expect).abs() < 1e-12);
        match select_tau(&mesh, &beta, 0.5, 2) {
            Err(HdgError::StabilizationViolation { margin, .. }) => {
                assert!((margin - (0.5 - std::f64::consts::SQRT_2 / 2.0)).abs() < 1e-12);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn divergence_free_examples() {
        let data = ProblemData {
            f: Arc::new(|_| 0.0),
            y_d: Arc::new(|_| 0.0),
            g: Arc::new(|_| 0.0),
            g_adj: Arc::new(|_| 0.0),
            beta: Arc::new(|p: Point| Vector::new(p.y, p.x)),
            gamma: 1.0,
        };
        assert!(data.divergence_sample(100) < 1e-8);
    }

    #[test]
    fn layout_is_square_and_disjoint() {
        let mesh = generate_background_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), 2);
        for k in 0..=3 {
            let l = DofLayout::new(&mesh, k);
            assert_eq!(
                l.dim(),
                6 * mesh.n_elements() * l.n_k + 2 * mesh.n_facets() * l.n_mu
            );
            let mut seen = vec![false; l.dim()];
            for e in 0..mesh.n_elements() {
                for a in 0..l.n_k {
                    for c in 0..2 {
                        for d in [l.q(e, c, a), l.p(e, c, a)] {
                            assert!(!seen[d]);
                            seen[d] = true;
                        }
                    }
                    for d in [l.y(e, a), l.z(e, a)] {
                        assert!(!seen[d]);
                        seen[d] = true;
                    }
                }
            }
            for f in 0..mesh.n_facets() {
                for j in 0..l.n_mu {
                    for d in [l.y_hat(f, j), l.z_hat(f, j)] {
                        assert!(!seen[d]);
                        seen[d] = true;
                    }
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }
}
