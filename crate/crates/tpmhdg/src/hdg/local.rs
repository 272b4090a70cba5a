//! Per-element integral operators shared by the monolithic and condensed
//! assemblies.

use super::{ProblemData, StabilizationPair};
use crate::geometry::Triangulation;
use crate::polybasis::quadrature::{gauss01, triangle_rule};
use crate::polybasis::ElementBases;
use crate::{Point, Vector};
use nalgebra::{DMatrix, DVector};

/// Integrals over one facet of one element, in that element's basis and the
/// facet's orthonormal edge basis.
pub(super) struct FacetOps {
    pub facet: usize,
    /// outward normal with respect to this element
    pub normal: Vector,
    /// int_e phi_a phi_b
    pub mass: DMatrix<f64>,
    /// int_e tau2(x) phi_a phi_b  (tau2 of this side)
    pub mass_tau2: DMatrix<f64>,
    /// int_e phi_a mu_j
    pub mix: DMatrix<f64>,
    /// int_e (beta.n - tau1) phi_a mu_j
    pub mix_bn_tau1: DMatrix<f64>,
    /// int_e tau2(x) phi_a mu_j
    pub mix_tau2: DMatrix<f64>,
}

/// All integrals of one element needed by the scheme.
pub(super) struct LocalOps {
    /// D_c[a,b] = int_K d_c(phi_a) phi_b
    pub grad: [DMatrix<f64>; 2],
    /// int_K (beta . grad phi_a) phi_b
    pub conv: DMatrix<f64>,
    /// element mass (identity of the orthonormal basis, kept as assembled)
    pub mass: DMatrix<f64>,
    /// int_K f phi_a and int_K y_d phi_a
    pub f_vec: DVector<f64>,
    pub yd_vec: DVector<f64>,
    pub facets: [FacetOps; 3],
}

pub(super) fn facet_side(mesh: &Triangulation, fi: usize, element: usize) -> usize {
    if mesh.facets[fi].owner.0 == element {
        0
    } else {
        1
    }
}

pub(super) fn build_local_ops(
    mesh: &Triangulation,
    bases: &ElementBases,
    data: &ProblemData,
    tau: &StabilizationPair,
    element: usize,
) -> LocalOps {
    let degree = bases.degree;
    let nk = bases.dim();
    let nmu = degree + 1;
    let bs = bases.basis(element);
    let vol = triangle_rule(2 * degree + 2).expect("volume rule");
    let [p0, p1, p2] = mesh.element_vertices(element);
    let two_area = 2.0 * mesh.area(element);

    let mut grad = [DMatrix::zeros(nk, nk), DMatrix::zeros(nk, nk)];
    let mut conv = DMatrix::zeros(nk, nk);
    let mut mass = DMatrix::zeros(nk, nk);
    let mut f_vec = DVector::zeros(nk);
    let mut yd_vec = DVector::zeros(nk);
    let mut vals = vec![0.0; nk];
    let mut gx = vec![0.0; nk];
    let mut gy = vec![0.0; nk];
    for (&(rx, ry), &w) in vol.nodes.iter().zip(&vol.weights) {
        let p = Point::new(
            p0.x + (p1.x - p0.x) * rx + (p2.x - p0.x) * ry,
            p0.y + (p1.y - p0.y) * rx + (p2.y - p0.y) * ry,
        );
        let wq = w * two_area;
        bs.eval_into(p, &mut vals);
        bs.grad_into(p, &mut gx, &mut gy);
        let bv = (data.beta)(p);
        let fv = (data.f)(p);
        let ydv = (data.y_d)(p);
        for a in 0..nk {
            f_vec[a] += wq * fv * vals[a];
            yd_vec[a] += wq * ydv * vals[a];
            for b in 0..nk {
                grad[0][(a, b)] += wq * gx[a] * vals[b];
                grad[1][(a, b)] += wq * gy[a] * vals[b];
                conv[(a, b)] += wq * (bv.x * gx[a] + bv.y * gy[a]) * vals[b];
                mass[(a, b)] += wq * vals[a] * vals[b];
            }
        }
    }

    let frule = gauss01(tau.quad_points).expect("facet rule");
    let facets = std::array::from_fn(|le| {
        let fi = mesh.element_facets[element][le];
        let side = facet_side(mesh, fi, element);
        let (pa, pb) = mesh.facet_endpoints(fi);
        let length = (pb - pa).norm();
        let normal = mesh.facet_normal(fi, element);
        let tau1 = tau.tau1[fi];
        let mut mass_e = DMatrix::zeros(nk, nk);
        let mut mass_tau2 = DMatrix::zeros(nk, nk);
        let mut mix = DMatrix::zeros(nk, nmu);
        let mut mix_bn_tau1 = DMatrix::zeros(nk, nmu);
        let mut mix_tau2 = DMatrix::zeros(nk, nmu);
        let eb = crate::polybasis::EdgeBasis::new(degree, length);
        let mut mu = vec![0.0; nmu];
        let mut phv = vec![0.0; nk];
        for (i, (&s, &w)) in frule.nodes.iter().zip(&frule.weights).enumerate() {
            let x = Point::from(pa.coords * (1.0 - s) + pb.coords * s);
            let wq = w * length;
            bs.eval_into(x, &mut phv);
            eb.eval_into(s, &mut mu);
            let bn = (data.beta)(x).dot(&normal);
            let t2 = tau.tau2[fi][side][i];
            for a in 0..nk {
                for b in 0..nk {
                    mass_e[(a, b)] += wq * phv[a] * phv[b];
                    mass_tau2[(a, b)] += wq * t2 * phv[a] * phv[b];
                }
                for j in 0..nmu {
                    mix[(a, j)] += wq * phv[a] * mu[j];
                    mix_bn_tau1[(a, j)] += wq * (bn - tau1) * phv[a] * mu[j];
                    mix_tau2[(a, j)] += wq * t2 * phv[a] * mu[j];
                }
            }
        }
        FacetOps {
            facet: fi,
            normal,
            mass: mass_e,
            mass_tau2,
            mix,
            mix_bn_tau1,
            mix_tau2,
        }
    });

    LocalOps {
        grad,
        conv,
        mass,
        f_vec,
        yd_vec,
        facets,
    }
}

/// Element-local 6 n_k x 6 n_k matrix over [q_x, q_y, y, p_x, p_y, z], the
/// coupling columns to the element's six trace blocks
/// [y_hat & z_hat of facet 0, 1, 2], and the local right-hand side.
pub(super) fn local_block(
    ops: &LocalOps,
    nk: usize,
    nmu: usize,
    alpha: f64,
    tau1_of: impl Fn(usize) -> f64,
) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let dim = 6 * nk;
    let tdim = 6 * nmu;
    let mut a = DMatrix::zeros(dim, dim);
    let mut g = DMatrix::zeros(dim, tdim);
    let mut rhs = DVector::zeros(dim);
    // row blocks: [aq_x, aq_y, b, cp_x, cp_y, d]; column blocks match the
    // unknown layout [q_x, q_y, y, p_x, p_y, z]
    let (row_a, row_b, row_c, row_d) = (0, 2 * nk, 3 * nk, 5 * nk);
    let (col_q, col_y, col_p, col_z) = (0, 2 * nk, 3 * nk, 5 * nk);
    for c in 0..2 {
        for i in 0..nk {
            for b in 0..nk {
                // (q, r) and (p, r)
                a[(row_a + c * nk + i, col_q + c * nk + b)] += ops.mass[(i, b)];
                a[(row_c + c * nk + i, col_p + c * nk + b)] += ops.mass[(i, b)];
                // -(y, div r) and -(z, div r)
                a[(row_a + c * nk + i, col_y + b)] -= ops.grad[c][(i, b)];
                a[(row_c + c * nk + i, col_z + b)] -= ops.grad[c][(i, b)];
                // -(q, grad w) and -(p, grad w)
                a[(row_b + i, col_q + c * nk + b)] -= ops.grad[c][(i, b)];
                a[(row_d + i, col_p + c * nk + b)] -= ops.grad[c][(i, b)];
            }
        }
    }
    for i in 0..nk {
        for b in 0..nk {
            a[(row_b + i, col_y + b)] -= ops.conv[(i, b)]; // -(beta y, grad w)
            a[(row_b + i, col_z + b)] -= alpha * ops.mass[(i, b)]; // -(alpha z, w)
            a[(row_d + i, col_z + b)] += ops.conv[(i, b)]; // +(beta z, grad w)
            a[(row_d + i, col_y + b)] += ops.mass[(i, b)]; // +(y, w)
        }
        rhs[row_b + i] = ops.f_vec[i];
        rhs[row_d + i] = ops.yd_vec[i];
    }
    for (le, fo) in ops.facets.iter().enumerate() {
        let tau1 = tau1_of(fo.facet);
        let (ty, tz) = (le * 2 * nmu, le * 2 * nmu + nmu);
        for i in 0..nk {
            for b in 0..nk {
                for c in 0..2 {
                    // <q.n, w> and <p.n, w>
                    a[(row_b + i, col_q + c * nk + b)] += fo.normal[c] * fo.mass[(i, b)];
                    a[(row_d + i, col_p + c * nk + b)] += fo.normal[c] * fo.mass[(i, b)];
                }
                // <tau1 y, w> and <tau2 z, w>
                a[(row_b + i, col_y + b)] += tau1 * fo.mass[(i, b)];
                a[(row_d + i, col_z + b)] += fo.mass_tau2[(i, b)];
            }
            for j in 0..nmu {
                for c in 0..2 {
                    // <y_hat, r.n> and <z_hat, r.n>
                    g[(row_a + c * nk + i, ty + j)] += fo.normal[c] * fo.mix[(i, j)];
                    g[(row_c + c * nk + i, tz + j)] += fo.normal[c] * fo.mix[(i, j)];
                }
                // <(beta.n - tau1) y_hat, w> and <-(tau2 + beta.n) z_hat, w>
                // = -tau1 <z_hat, w> by the flux link tau1 = tau2 + beta.n
                g[(row_b + i, ty + j)] += fo.mix_bn_tau1[(i, j)];
                g[(row_d + i, tz + j)] -= tau1 * fo.mix[(i, j)];
            }
        }
    }
    (a, g, rhs)
}
