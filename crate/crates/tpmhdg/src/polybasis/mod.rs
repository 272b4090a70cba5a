//! Polynomial spaces on triangles and edges: per-element orthonormalized
//! monomial bases (which extend naturally outside the element), orthonormal
//! Legendre edge bases, quadrature, and the computable constants used by the
//! closeness conditions.

mod constants;
pub mod quadrature;

pub use constants::{
    closeness_constants, ext_constant, inv_constant, lambda_eval, patch_gram, trace_constant,
    triple_norm,
};

use crate::geometry::Triangulation;
use crate::{Point, Vector};
use nalgebra::{DMatrix, DVector, Matrix2};
use quadrature::triangle_rule;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("unsupported quadrature exactness {0}")]
    UnsupportedOrder(usize),
    #[error("singular Gram matrix on element {element}")]
    SingularGram { element: usize },
}

/// Scalar polynomial space of one degree.
#[derive(Clone, Copy, Debug)]
pub struct PolySpace {
    pub degree: usize,
}

impl PolySpace {
    pub fn new(degree: usize) -> Self {
        Self { degree }
    }
    /// dim P_k on a triangle: (k+1)(k+2)/2
    pub fn tri_dim(&self) -> usize {
        (self.degree + 1) * (self.degree + 2) / 2
    }
    /// dim P_k on an edge: k+1
    pub fn edge_dim(&self) -> usize {
        self.degree + 1
    }
}

fn monomial_exponents(degree: usize) -> Vec<(u32, u32)> {
    let mut exps = Vec::new();
    for d in 0..=degree as u32 {
        for b in 0..=d {
            exps.push((d - b, b));
        }
    }
    exps
}

/// Orthonormal basis of P_k on one element: shifted, scaled monomials
/// orthonormalized against the element mass matrix. Because the basis
/// functions are plain polynomials they evaluate anywhere in the plane,
/// which is exactly the extrapolation used on the transfer patches.
#[derive(Clone, Debug)]
pub struct ElementBasis {
    pub element: usize,
    pub degree: usize,
    center: Point,
    scale: f64,
    exps: Vec<(u32, u32)>,
    /// row i holds the monomial coefficients of orthonormal function i
    coeff: DMatrix<f64>,
}

impl ElementBasis {
    pub fn new(mesh: &Triangulation, element: usize, degree: usize) -> Result<Self, BasisError> {
        let exps = monomial_exponents(degree);
        let n = exps.len();
        let center = Point::from(
            (mesh.element_vertices(element)[0].coords
                + mesh.element_vertices(element)[1].coords
                + mesh.element_vertices(element)[2].coords)
                / 3.0,
        );
        let scale = mesh.diameters[element];
        let rule = triangle_rule((2 * degree).max(2))?;
        let [p0, p1, p2] = mesh.element_vertices(element);
        let jac = Matrix2::new(p1.x - p0.x, p2.x - p0.x, p1.y - p0.y, p2.y - p0.y);
        let detj = jac.determinant().abs();
        let mut mass = DMatrix::zeros(n, n);
        let mut vals = vec![0.0; n];
        for (&(rx, ry), &w) in rule.nodes.iter().zip(&rule.weights) {
            let p = Point::new(
                p0.x + jac[(0, 0)] * rx + jac[(0, 1)] * ry,
                p0.y + jac[(1, 0)] * rx + jac[(1, 1)] * ry,
            );
            eval_monomials(&exps, center, scale, p, &mut vals);
            let wq = w * detj;
            for a in 0..n {
                for b in 0..=a {
                    mass[(a, b)] += wq * vals[a] * vals[b];
                }
            }
        }
        for a in 0..n {
            for b in (a + 1)..n {
                mass[(a, b)] = mass[(b, a)];
            }
        }
        let chol = mass
            .clone()
            .cholesky()
            .ok_or(BasisError::SingularGram { element })?;
        // coeff = L^{-1}: orthonormal functions phi = coeff * monomials
        let coeff = chol.l().solve_lower_triangular(&DMatrix::identity(n, n)).unwrap();
        Ok(Self {
            element,
            degree,
            center,
            scale,
            exps,
            coeff,
        })
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    /// Values of all basis functions at p (any point in the plane).
    pub fn eval_into(&self, p: Point, out: &mut [f64]) {
        let n = self.dim();
        let mut mono = vec![0.0; n];
        eval_monomials(&self.exps, self.center, self.scale, p, &mut mono);
        for a in 0..n {
            let mut s = 0.0;
            for b in 0..=a {
                s += self.coeff[(a, b)] * mono[b];
            }
            out[a] = s;
        }
    }

    pub fn eval(&self, p: Point) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(p, &mut out);
        out
    }

    /// Gradients (d/dx, d/dy) of all basis functions at p.
    pub fn grad_into(&self, p: Point, out_x: &mut [f64], out_y: &mut [f64]) {
        let n = self.dim();
        let mut gx = vec![0.0; n];
        let mut gy = vec![0.0; n];
        let xi = (p.x - self.center.x) / self.scale;
        let eta = (p.y - self.center.y) / self.scale;
        for (i, &(a, b)) in self.exps.iter().enumerate() {
            gx[i] = if a > 0 {
                a as f64 / self.scale * xi.powi(a as i32 - 1) * eta.powi(b as i32)
            } else {
                0.0
            };
            gy[i] = if b > 0 {
                b as f64 / self.scale * xi.powi(a as i32) * eta.powi(b as i32 - 1)
            } else {
                0.0
            };
        }
        for a in 0..n {
            let mut sx = 0.0;
            let mut sy = 0.0;
            for b in 0..=a {
                sx += self.coeff[(a, b)] * gx[b];
                sy += self.coeff[(a, b)] * gy[b];
            }
            out_x[a] = sx;
            out_y[a] = sy;
        }
    }
}

fn eval_monomials(exps: &[(u32, u32)], center: Point, scale: f64, p: Point, out: &mut [f64]) {
    let xi = (p.x - center.x) / scale;
    let eta = (p.y - center.y) / scale;
    for (i, &(a, b)) in exps.iter().enumerate() {
        out[i] = xi.powi(a as i32) * eta.powi(b as i32);
    }
}

/// The orthonormal bases of every element of a mesh.
#[derive(Clone, Debug)]
pub struct ElementBases {
    pub degree: usize,
    pub bases: Vec<ElementBasis>,
}

impl ElementBases {
    pub fn build(mesh: &Triangulation, degree: usize) -> Result<Self, BasisError> {
        let bases = (0..mesh.n_elements())
            .map(|e| ElementBasis::new(mesh, e, degree))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { degree, bases })
    }
    pub fn basis(&self, element: usize) -> &ElementBasis {
        &self.bases[element]
    }
    pub fn dim(&self) -> usize {
        PolySpace::new(self.degree).tri_dim()
    }
}

/// Scalar polynomial on one element, expressed in that element's
/// orthonormal basis. Evaluation at exterior points is the natural
/// polynomial extension.
#[derive(Clone, Debug)]
pub struct ElementPoly {
    pub element: usize,
    pub coeffs: DVector<f64>,
}

impl ElementPoly {
    pub fn eval(&self, basis: &ElementBasis, p: Point) -> f64 {
        let vals = basis.eval(p);
        self.coeffs.iter().zip(&vals).map(|(c, v)| c * v).sum()
    }
}

/// Vector-valued polynomial on one element (one coefficient vector per
/// component).
#[derive(Clone, Debug)]
pub struct VectorElementPoly {
    pub element: usize,
    pub comps: [DVector<f64>; 2],
}

impl VectorElementPoly {
    pub fn eval(&self, basis: &ElementBasis, p: Point) -> Vector {
        let vals = basis.eval(p);
        let mut out = Vector::zeros();
        for c in 0..2 {
            out[c] = self.comps[c].iter().zip(&vals).map(|(a, v)| a * v).sum();
        }
        out
    }

    /// Jacobian (rows: components, columns: d/dx d/dy).
    pub fn grad(&self, basis: &ElementBasis, p: Point) -> Matrix2<f64> {
        let n = basis.dim();
        let mut gx = vec![0.0; n];
        let mut gy = vec![0.0; n];
        basis.grad_into(p, &mut gx, &mut gy);
        let mut out = Matrix2::zeros();
        for c in 0..2 {
            for a in 0..n {
                out[(c, 0)] += self.comps[c][a] * gx[a];
                out[(c, 1)] += self.comps[c][a] * gy[a];
            }
        }
        out
    }
}

/// Orthonormal Legendre basis on an edge of the given length, parametrized
/// by s in [0,1]: inner products over the physical edge are the identity.
#[derive(Clone, Copy, Debug)]
pub struct EdgeBasis {
    pub degree: usize,
    pub length: f64,
}

impl EdgeBasis {
    pub fn new(degree: usize, length: f64) -> Self {
        Self { degree, length }
    }
    pub fn dim(&self) -> usize {
        self.degree + 1
    }
    pub fn eval_into(&self, s: f64, out: &mut [f64]) {
        let t = 2.0 * s - 1.0;
        // Legendre recurrence
        let mut p_prev = 1.0;
        let mut p = t;
        for j in 0..=self.degree {
            let pj = match j {
                0 => 1.0,
                1 => t,
                _ => {
                    let jj = (j - 1) as f64;
                    let next = ((2.0 * jj + 1.0) * t * p - jj * p_prev) / (jj + 1.0);
                    p_prev = p;
                    p = next;
                    next
                }
            };
            out[j] = ((2.0 * j as f64 + 1.0) / self.length).sqrt() * pj;
        }
    }
    pub fn eval(&self, s: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(s, &mut out);
        out
    }
}
