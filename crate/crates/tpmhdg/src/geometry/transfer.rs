//! Transfer paths from the mesh boundary to the true boundary.
//!
//! For every boundary facet, segments of direction m join the facet's
//! quadrature points x to boundary points phi(x) = x + l(x) m(x) with
//! F(phi(x)) = 0. The direction field comes from a [`TransferStrategy`]
//! chosen by name at runtime.

use super::{ray_intersect, GeometryError, ImplicitDomain, Triangulation};
use crate::polybasis::quadrature::gauss01;
use crate::{Point, Vector};
use std::collections::HashMap;

/// How the transfer direction m is chosen along a boundary facet.
///
/// Implementations receive the boundary-normal context of the whole mesh so
/// that per-vertex data (averaged normals) is computed once.
pub trait TransferStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    /// Unit directions at the facet points with parameters `s` in [0,1]
    /// (0 and 1 are the facet endpoints).
    fn directions(&self, ctx: &BoundaryContext<'_>, facet: usize, s: &[f64]) -> Vec<Vector>;
}

/// Per-mesh boundary data shared by the strategies.
pub struct BoundaryContext<'a> {
    pub mesh: &'a Triangulation,
    /// unit outward normal of each boundary facet, indexed by facet id
    pub facet_normals: HashMap<usize, Vector>,
    /// normalized average of adjacent boundary-facet normals per boundary vertex
    pub vertex_normals: HashMap<usize, Vector>,
}

impl<'a> BoundaryContext<'a> {
    pub fn new(mesh: &'a Triangulation) -> Self {
        let mut facet_normals = HashMap::new();
        let mut sums: HashMap<usize, Vector> = HashMap::new();
        for &fi in &mesh.boundary_facets {
            let n = mesh.facet_normal(fi, mesh.facets[fi].owner.0);
            facet_normals.insert(fi, n);
            for &v in &mesh.facets[fi].vertices {
                *sums.entry(v).or_insert_with(Vector::zeros) += n;
            }
        }
        let vertex_normals = sums
            .into_iter()
            .map(|(v, s)| (v, s / s.norm()))
            .collect();
        Self {
            mesh,
            facet_normals,
            vertex_normals,
        }
    }
}

/// m = outward facet normal (constant along the facet, zero tangential part).
pub struct FacetNormal;

impl TransferStrategy for FacetNormal {
    fn name(&self) -> &'static str {
        "facet-normal"
    }
    fn directions(&self, ctx: &BoundaryContext<'_>, facet: usize, s: &[f64]) -> Vec<Vector> {
        let n = ctx.facet_normals[&facet];
        vec![n; s.len()]
    }
}

/// m interpolates the averaged vertex normals linearly along the facet and
/// renormalizes; produces non-crossing paths on concave boundaries and a
/// nonzero tangential component in general.
pub struct VertexAveragedNormal;

impl TransferStrategy for VertexAveragedNormal {
    fn name(&self) -> &'static str {
        "vertex-averaged-normal"
    }
    fn directions(&self, ctx: &BoundaryContext<'_>, facet: usize, s: &[f64]) -> Vec<Vector> {
        let [va, vb] = ctx.mesh.facets[facet].vertices;
        let ma = ctx.vertex_normals[&va];
        let mb = ctx.vertex_normals[&vb];
        s.iter()
            .map(|&t| {
                let m = (1.0 - t) * ma + t * mb;
                m / m.norm()
            })
            .collect()
    }
}

type StrategyCtor = fn() -> Box<dyn TransferStrategy>;

const REGISTRY: &[(&str, StrategyCtor)] = &[
    ("facet-normal", || Box::new(FacetNormal)),
    ("vertex-averaged-normal", || Box::new(VertexAveragedNormal)),
];

/// Names of the registered strategies, in registration order.
pub fn strategy_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

/// Look a strategy up by its registered name.
pub fn strategy_by_name(name: &str) -> Option<Box<dyn TransferStrategy>> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, ctor)| ctor())
}

/// Transfer data at one facet quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct TransferNode {
    pub x: Point,
    /// parameter of x along the facet, in [0,1]
    pub s: f64,
    /// facet quadrature weight (includes the facet length)
    pub weight: f64,
    /// unit transfer direction
    pub dir: Vector,
    /// segment length l >= 0
    pub len: f64,
    /// boundary point phi(x) = x + len * dir
    pub mapped: Point,
    /// tangential component t = m - (m.n) n
    pub tangential: Vector,
}

/// Transfer data and patch metrics of one boundary facet.
#[derive(Clone, Debug)]
pub struct FacetTransfer {
    pub facet: usize,
    pub element: usize,
    /// outward unit normal of the facet
    pub normal: Vector,
    pub nodes: Vec<TransferNode>,
    /// directions and lengths at the two facet endpoints
    pub vertex_dirs: [Vector; 2],
    pub vertex_lens: [f64; 2],
    /// H_e^perp: largest distance from the patch to the facet line
    pub patch_height: f64,
    /// h_e^perp: height of the owner element over the facet
    pub elem_height: f64,
    /// r_e = patch_height / elem_height
    pub height_ratio: f64,
    /// beta_e = min of m.n over nodes and endpoints
    pub beta_min: f64,
    pub max_len: f64,
    pub max_tangential: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TransferWarning {
    /// Two distinct facet points mapped to boundary points closer than 1e-10.
    NonBijective { facet_a: usize, facet_b: usize },
    /// A transfer segment left the domain closure (F > tol at an interior
    /// sample of the segment).
    SegmentOutside { facet: usize, value: f64 },
}

/// Per-boundary-facet transfer data plus the global patch metrics.
#[derive(Clone, Debug)]
pub struct TransferMap {
    pub facets: Vec<FacetTransfer>,
    /// R = max_e r_e
    pub height_ratio_max: f64,
    pub max_tangential: f64,
    pub warnings: Vec<TransferWarning>,
    /// number of quadrature nodes per facet
    pub quad_points: usize,
}

impl TransferMap {
    pub fn by_facet(&self, fi: usize) -> Option<&FacetTransfer> {
        self.facets.iter().find(|f| f.facet == fi)
    }

    /// Largest dist(x, phi(x)) over the sampled nodes of all facets, scaled
    /// by the owner diameter: the constant of the boundary-distance
    /// condition.
    pub fn distance_constant(&self, mesh: &Triangulation) -> f64 {
        self.facets
            .iter()
            .map(|f| f.max_len / mesh.diameters[f.element])
            .fold(0.0, f64::max)
    }

    /// Diagnostics CSV: facet_id, H_perp, h_perp, r_e, beta_e, max_t_norm.
    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("facet_id,H_perp,h_perp,r_e,beta_e,max_t_norm\n");
        for f in &self.facets {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                f.facet, f.patch_height, f.elem_height, f.height_ratio, f.beta_min,
                f.max_tangential
            ));
        }
        out
    }
}

const SEGMENT_TOL: f64 = 1e-10;
const FITTED_LEN: f64 = 1e-14;

/// Build the transfer map for every boundary facet: quadrature nodes,
/// directions, root lengths, mapped points and the patch metrics
/// (H_e^perp, h_e^perp, r_e, beta_e, R). Segments are checked to stay in
/// the domain closure at five interior samples.
pub fn build_transfer_map(
    mesh: &Triangulation,
    domain: &ImplicitDomain,
    strategy: &dyn TransferStrategy,
    quad_points: usize,
) -> Result<TransferMap, GeometryError> {
    assert!(!mesh.boundary_facets.is_empty(), "mesh has no boundary facets");
    let ctx = BoundaryContext::new(mesh);
    let rule = gauss01(quad_points).expect("facet rule size out of range");
    let t_max = 4.0 * mesh.h_max;
    let mut facets = Vec::with_capacity(mesh.boundary_facets.len());
    let mut warnings = Vec::new();
    for &fi in &mesh.boundary_facets {
        let (pa, pb) = mesh.facet_endpoints(fi);
        let le = mesh.facet_length(fi);
        let owner = mesh.facets[fi].owner.0;
        let n = ctx.facet_normals[&fi];

        let mut params: Vec<f64> = rule.nodes.clone();
        params.push(0.0);
        params.push(1.0);
        let dirs = strategy.directions(&ctx, fi, &params);

        let mut nodes = Vec::with_capacity(quad_points);
        let mut patch_height: f64 = 0.0;
        let mut beta_min = f64::INFINITY;
        let mut max_len: f64 = 0.0;
        let mut max_tang: f64 = 0.0;
        let mut vertex_dirs = [Vector::zeros(); 2];
        let mut vertex_lens = [0.0f64; 2];
        for (idx, (&s, m)) in params.iter().zip(&dirs).enumerate() {
            let x = Point::from(pa.coords * (1.0 - s) + pb.coords * s);
            let len = ray_intersect(domain, x, *m, t_max)?;
            let mapped = x + len * *m;
            let mn = m.dot(&n);
            let tangential = m - mn * n;
            patch_height = patch_height.max(len * mn);
            beta_min = beta_min.min(mn);
            max_len = max_len.max(len);
            max_tang = max_tang.max(tangential.norm());
            if len > FITTED_LEN {
                // five interior samples of the segment must stay in the closure
                for j in 1..=5 {
                    let xm = x + (len * j as f64 / 6.0) * *m;
                    let v = domain.value(xm);
                    if v > SEGMENT_TOL {
                        warnings.push(TransferWarning::SegmentOutside { facet: fi, value: v });
                        break;
                    }
                }
            }
            if idx < quad_points {
                nodes.push(TransferNode {
                    x,
                    s,
                    weight: rule.weights[idx] * le,
                    dir: *m,
                    len,
                    mapped,
                    tangential,
                });
            } else {
                let vslot = idx - quad_points;
                vertex_dirs[vslot] = *m;
                vertex_lens[vslot] = len;
            }
        }
        let elem_height = mesh.opposite_height(fi);
        facets.push(FacetTransfer {
            facet: fi,
            element: owner,
            normal: n,
            nodes,
            vertex_dirs,
            vertex_lens,
            patch_height,
            elem_height,
            height_ratio: patch_height / elem_height,
            beta_min,
            max_len,
            max_tangential: max_tang,
        });
    }
    // injectivity of phi at the sampled nodes: distinct sources must map to
    // distinct boundary points
    let all: Vec<(usize, Point, Point)> = facets
        .iter()
        .flat_map(|f| f.nodes.iter().map(move |nd| (f.facet, nd.x, nd.mapped)))
        .collect();
    'outer: for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            let (fa, xa, pa) = all[i];
            let (fb, xb, pb) = all[j];
            if (xa - xb).norm() > 1e-9 && (pa - pb).norm() < 1e-10 {
                warnings.push(TransferWarning::NonBijective { facet_a: fa, facet_b: fb });
                break 'outer;
            }
        }
    }
    let height_ratio_max = facets.iter().map(|f| f.height_ratio).fold(0.0, f64::max);
    let max_tangential = facets.iter().map(|f| f.max_tangential).fold(0.0, f64::max);
    Ok(TransferMap {
        facets,
        height_ratio_max,
        max_tangential,
        warnings,
        quad_points,
    })
}
