//! Simplicial meshes: background grids, interior clipping against an
//! implicit domain, a fitted disk mesh, and facet connectivity.

use super::{GeometryError, ImplicitDomain};
use crate::{point, Point, Vector};
use std::collections::HashMap;

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self { xmin, ymin, xmax, ymax }
    }
    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }
}

/// A mesh edge with its owning element(s). `owner` is always present;
/// `neighbor` is `None` exactly for boundary facets. The pair stores the
/// element index and the local edge index (edge `le` joins local vertices
/// `le` and `(le+1) % 3`).
#[derive(Clone, Copy, Debug)]
pub struct Facet {
    pub vertices: [usize; 2],
    pub owner: (usize, usize),
    pub neighbor: Option<(usize, usize)>,
}

/// Conforming triangulation with facet connectivity and per-element size
/// metrics. Triangles are stored counter-clockwise (positive signed area).
#[derive(Clone, Debug)]
pub struct Triangulation {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub facets: Vec<Facet>,
    /// facet index of each element's three local edges
    pub element_facets: Vec<[usize; 3]>,
    /// indices into `facets` with exactly one owner
    pub boundary_facets: Vec<usize>,
    pub h_max: f64,
    /// per-element diameter h_K
    pub diameters: Vec<f64>,
    /// per-element inradius rho_K
    pub inradii: Vec<f64>,
}

impl Triangulation {
    /// Build connectivity from raw cells. Negative-area triangles are
    /// reoriented; panics if an edge is shared by more than two elements.
    pub fn from_cells(vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Self {
        for tri in &mut triangles {
            let a = vertices[tri[1]] - vertices[tri[0]];
            let b = vertices[tri[2]] - vertices[tri[0]];
            if a.x * b.y - a.y * b.x < 0.0 {
                tri.swap(1, 2);
            }
        }
        let mut fmap: HashMap<(usize, usize), usize> = HashMap::new();
        let mut facets: Vec<Facet> = Vec::new();
        let mut element_facets = vec![[usize::MAX; 3]; triangles.len()];
        for (ei, tri) in triangles.iter().enumerate() {
            for le in 0..3 {
                let a = tri[le];
                let b = tri[(le + 1) % 3];
                let key = (a.min(b), a.max(b));
                match fmap.get(&key) {
                    Some(&fi) => {
                        assert!(
                            facets[fi].neighbor.is_none(),
                            "edge {key:?} shared by more than two elements"
                        );
                        facets[fi].neighbor = Some((ei, le));
                        element_facets[ei][le] = fi;
                    }
                    None => {
                        fmap.insert(key, facets.len());
                        element_facets[ei][le] = facets.len();
                        facets.push(Facet {
                            vertices: [a, b],
                            owner: (ei, le),
                            neighbor: None,
                        });
                    }
                }
            }
        }
        let boundary_facets = facets
            .iter()
            .enumerate()
            .filter(|(_, f)| f.neighbor.is_none())
            .map(|(i, _)| i)
            .collect();
        let mut diameters = Vec::with_capacity(triangles.len());
        let mut inradii = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let l0 = (p[1] - p[0]).norm();
            let l1 = (p[2] - p[1]).norm();
            let l2 = (p[0] - p[2]).norm();
            let area = 0.5
                * ((p[1].x - p[0].x) * (p[2].y - p[0].y)
                    - (p[1].y - p[0].y) * (p[2].x - p[0].x));
            diameters.push(l0.max(l1).max(l2));
            inradii.push(2.0 * area / (l0 + l1 + l2));
        }
        let h_max = diameters.iter().cloned().fold(0.0, f64::max);
        Self {
            vertices,
            triangles,
            facets,
            element_facets,
            boundary_facets,
            h_max,
            diameters,
            inradii,
        }
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn element_vertices(&self, ei: usize) -> [Point; 3] {
        let t = self.triangles[ei];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn area(&self, ei: usize) -> f64 {
        let [a, b, c] = self.element_vertices(ei);
        0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.area(e)).sum()
    }

    pub fn facet_endpoints(&self, fi: usize) -> (Point, Point) {
        let f = &self.facets[fi];
        (self.vertices[f.vertices[0]], self.vertices[f.vertices[1]])
    }

    pub fn facet_length(&self, fi: usize) -> f64 {
        let (a, b) = self.facet_endpoints(fi);
        (b - a).norm()
    }

    /// Outward unit normal of facet `fi` with respect to element `ei`.
    pub fn facet_normal(&self, fi: usize, ei: usize) -> Vector {
        let (a, b) = self.facet_endpoints(fi);
        let t = b - a;
        let n = Vector::new(t.y, -t.x) / t.norm();
        // facet vertices are stored in the owner's orientation, so n points
        // out of the owner; flip for the neighbor
        if self.facets[fi].owner.0 == ei {
            n
        } else {
            -n
        }
    }

    /// Height of the owner element over facet `fi` (distance from the
    /// opposite vertex to the facet line).
    pub fn opposite_height(&self, fi: usize) -> f64 {
        let (ei, _) = self.facets[fi].owner;
        2.0 * self.area(ei) / self.facet_length(fi)
    }

    /// Largest h_K / rho_K over the mesh.
    pub fn shape_regularity(&self) -> f64 {
        self.diameters
            .iter()
            .zip(&self.inradii)
            .map(|(h, r)| h / r)
            .fold(0.0, f64::max)
    }

    /// Plain-text export: header, counts, vertex coordinates, 0-based
    /// connectivity.
    pub fn export_text(&self) -> String {
        let mut out = String::from("tpmhdg-mesh v1\n");
        out.push_str(&format!("{} {}\n", self.vertices.len(), self.triangles.len()));
        for v in &self.vertices {
            out.push_str(&format!("{:.17e} {:.17e}\n", v.x, v.y));
        }
        for t in &self.triangles {
            out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        out
    }
}

/// Structured background grid: n x n cells on `bbox`, each split into two
/// triangles by the same diagonal.
pub fn generate_background_mesh(bbox: Rect, n: usize) -> Triangulation {
    assert!(n >= 1, "need at least one subdivision per axis");
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(point(
                bbox.xmin + (bbox.xmax - bbox.xmin) * i as f64 / n as f64,
                bbox.ymin + (bbox.ymax - bbox.ymin) * j as f64 / n as f64,
            ));
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    Triangulation::from_cells(vertices, triangles)
}

/// Probe tolerance used by the containment test: a point counts as inside
/// when F <= this value, so fitted boundaries (F = 0 exactly) are kept.
const CONTAINMENT_TOL: f64 = 1e-12;

/// Keep the elements lying completely inside the domain, probing the three
/// vertices, the three edge midpoints and the centroid of each triangle.
pub fn extract_interior_mesh(
    bg: &Triangulation,
    domain: &ImplicitDomain,
) -> Result<Triangulation, GeometryError> {
    let mut kept = Vec::new();
    for (ei, tri) in bg.triangles.iter().enumerate() {
        let p = bg.element_vertices(ei);
        let probes = [
            p[0],
            p[1],
            p[2],
            Point::from((p[0].coords + p[1].coords) * 0.5),
            Point::from((p[1].coords + p[2].coords) * 0.5),
            Point::from((p[2].coords + p[0].coords) * 0.5),
            Point::from((p[0].coords + p[1].coords + p[2].coords) / 3.0),
        ];
        if probes.iter().all(|&q| domain.value(q) <= CONTAINMENT_TOL) {
            kept.push(*tri);
        }
    }
    if kept.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    // compact the vertex list
    let mut remap = vec![usize::MAX; bg.vertices.len()];
    let mut vertices = Vec::new();
    for tri in &mut kept {
        for v in tri.iter_mut() {
            if remap[*v] == usize::MAX {
                remap[*v] = vertices.len();
                vertices.push(bg.vertices[*v]);
            }
            *v = remap[*v];
        }
    }
    Ok(Triangulation::from_cells(vertices, kept))
}

/// Fitted disk mesh with all boundary vertices on the circle of the given
/// radius: ring i carries 6i vertices, so element shapes stay uniform under
/// refinement. Boundary facets are chords, i.e. the mesh boundary is the
/// piecewise-linear interpolation of the circle.
pub fn generate_disk_mesh(radius: f64, rings: usize) -> Triangulation {
    assert!(rings >= 1);
    let mut vertices = vec![point(0.0, 0.0)];
    let mut ring_start = vec![0usize; rings + 1]; // start index of each ring
    for i in 1..=rings {
        ring_start[i] = vertices.len();
        let m = 6 * i;
        let r = radius * i as f64 / rings as f64;
        for j in 0..m {
            let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            vertices.push(point(r * th.cos(), r * th.sin()));
        }
    }
    let mut triangles = Vec::new();
    // center fan
    for j in 0..6 {
        triangles.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    // ring i-1 to ring i, merged by angle sweep
    for i in 2..=rings {
        let (sa, ma) = (ring_start[i - 1], 6 * (i - 1));
        let (sb, mb) = (ring_start[i], 6 * i);
        let ang = |m: usize, j: usize| {
            2.0 * std::f64::consts::PI * (j % m) as f64 / m as f64
                + if j >= m { 2.0 * std::f64::consts::PI } else { 0.0 }
        };
        let mut a = 0usize; // counts along ring i-1
        let mut b = 0usize; // counts along ring i
        while a < ma || b < mb {
            let next_a = ang(ma, a + 1);
            let next_b = ang(mb, b + 1);
            let va = sa + a % ma;
            let vb = sb + b % mb;
            if b < mb && (a == ma || next_b <= next_a) {
                let vb1 = sb + (b + 1) % mb;
                triangles.push([va, vb, vb1]);
                b += 1;
            } else {
                let va1 = sa + (a + 1) % ma;
                triangles.push([va, vb, va1]);
                a += 1;
            }
        }
    }
    Triangulation::from_cells(vertices, triangles)
}
