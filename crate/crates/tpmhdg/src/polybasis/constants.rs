//! Path functionals on transfer patches and the computable constants
//! (extrapolation, inverse and trace constants) entering the closeness
//! conditions.
//!
//! The patch K_ext of a boundary facet is the region swept by its transfer
//! segments; all patch integrals use the path-tensor measure
//! int_e int_0^{l(x)} ... dt dx, i.e. facet quadrature nodes with a segment
//! rule along each path.

use super::quadrature::{triangle_rule, SegmentRule};
use super::{BasisError, ElementBases, ElementBasis, VectorElementPoly};
use crate::geometry::{ClosenessConstants, FacetConstants, FacetTransfer, TransferMap, Triangulation};
use nalgebra::{DMatrix, Point2};

/// Below this segment length the path is treated as degenerate (fitted
/// boundary) and path functionals are zero.
pub const DEGENERATE_LEN: f64 = 1e-14;

/// Path-averaged discrepancy between p at a facet node and its extrapolation
/// along the transfer segment:
/// Lambda(x) = l^{-1} int_0^l (p(x) - E(p)(x + s m)) . m ds.
pub fn lambda_eval(
    basis: &ElementBasis,
    p: &VectorElementPoly,
    ft: &FacetTransfer,
    node_idx: usize,
    seg: &SegmentRule,
) -> f64 {
    let node = &ft.nodes[node_idx];
    if node.len < DEGENERATE_LEN {
        return 0.0;
    }
    let at_x = p.eval(basis, node.x).dot(&node.dir);
    let mut along = 0.0;
    for (&s, &w) in seg.nodes.iter().zip(&seg.weights) {
        let q = node.x + (s * node.len) * node.dir;
        along += w * p.eval(basis, q).dot(&node.dir);
    }
    at_x - along
}

/// Path-tensor L2 norm of p over the patch of facet e:
/// (int_e int_0^{l(x)} |p(x + t m(x))|^2 dt dx)^{1/2}.
pub fn triple_norm(
    basis: &ElementBasis,
    p: &VectorElementPoly,
    ft: &FacetTransfer,
    seg: &SegmentRule,
) -> f64 {
    let mut acc = 0.0;
    for node in &ft.nodes {
        if node.len < DEGENERATE_LEN {
            continue;
        }
        let mut inner = 0.0;
        for (&s, &w) in seg.nodes.iter().zip(&seg.weights) {
            let q = node.x + (s * node.len) * node.dir;
            inner += w * p.eval(basis, q).norm_squared();
        }
        acc += node.weight * node.len * inner;
    }
    acc.sqrt()
}

/// Gram matrix of the element basis over the patch, in the path-tensor
/// measure.
pub fn patch_gram(basis: &ElementBasis, ft: &FacetTransfer, seg: &SegmentRule) -> DMatrix<f64> {
    let n = basis.dim();
    let mut gram = DMatrix::zeros(n, n);
    let mut vals = vec![0.0; n];
    for node in &ft.nodes {
        if node.len < DEGENERATE_LEN {
            continue;
        }
        for (&s, &w) in seg.nodes.iter().zip(&seg.weights) {
            let q = node.x + (s * node.len) * node.dir;
            basis.eval_into(q, &mut vals);
            let wq = node.weight * node.len * w;
            for a in 0..n {
                for b in 0..=a {
                    gram[(a, b)] += wq * vals[a] * vals[b];
                }
            }
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    gram
}

fn sym_eig_max(m: &DMatrix<f64>) -> f64 {
    nalgebra::linalg::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest generalized eigenvalue of (a, m) for symmetric a and SPD m.
fn gen_eig_max(a: &DMatrix<f64>, m: &DMatrix<f64>, element: usize) -> Result<f64, BasisError> {
    let chol = m.clone().cholesky().ok_or(BasisError::SingularGram { element })?;
    let n = a.nrows();
    let li = chol.l().solve_lower_triangular(&DMatrix::identity(n, n)).unwrap();
    let b = &li * a * li.transpose();
    Ok(sym_eig_max(&b))
}

/// Extrapolation constant of one boundary facet:
/// C_ext = r_e^{-1/2} sup ||E(chi)||_{K_ext} / ||chi||_K over chi in P_k(K),
/// computed as the largest generalized eigenvalue of the patch Gram against
/// the element Gram. Zero for an empty patch (r_e = 0).
pub fn ext_constant(
    mesh: &Triangulation,
    basis: &ElementBasis,
    ft: &FacetTransfer,
    seg: &SegmentRule,
) -> Result<f64, BasisError> {
    if ft.height_ratio <= 0.0 {
        return Ok(0.0);
    }
    let gram_ext = patch_gram(basis, ft, seg);
    let gram_k = element_gram(mesh, basis)?;
    let lam = gen_eig_max(&gram_ext, &gram_k, basis.element)?;
    Ok((lam.max(0.0) / ft.height_ratio).sqrt())
}

fn element_gram(mesh: &Triangulation, basis: &ElementBasis) -> Result<DMatrix<f64>, BasisError> {
    let n = basis.dim();
    let rule = triangle_rule((2 * basis.degree).max(2))?;
    let [p0, p1, p2] = mesh.element_vertices(basis.element);
    let two_area = 2.0 * mesh.area(basis.element);
    let mut gram = DMatrix::zeros(n, n);
    let mut vals = vec![0.0; n];
    for (&(rx, ry), &w) in rule.nodes.iter().zip(&rule.weights) {
        let p = Point2::new(
            p0.x + (p1.x - p0.x) * rx + (p2.x - p0.x) * ry,
            p0.y + (p1.y - p0.y) * rx + (p2.y - p0.y) * ry,
        );
        basis.eval_into(p, &mut vals);
        let wq = w * two_area;
        for a in 0..n {
            for b in 0..=a {
                gram[(a, b)] += wq * vals[a] * vals[b];
            }
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    Ok(gram)
}

/// Inverse-inequality constant of one element, normalized so that
/// ||grad v||_K <= C_inv h_K^{-1} ||v||_K for v in P_k(K):
/// C_inv = h_K sqrt(lambda_max(S, M)). Zero for k = 0.
pub fn inv_constant(mesh: &Triangulation, basis: &ElementBasis) -> Result<f64, BasisError> {
    let n = basis.dim();
    if basis.degree == 0 {
        return Ok(0.0);
    }
    let rule = triangle_rule((2 * basis.degree).max(2))?;
    let [p0, p1, p2] = mesh.element_vertices(basis.element);
    let two_area = 2.0 * mesh.area(basis.element);
    let mut stiff = DMatrix::zeros(n, n);
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    for (&(rx, ry), &w) in rule.nodes.iter().zip(&rule.weights) {
        let p = Point2::new(
            p0.x + (p1.x - p0.x) * rx + (p2.x - p0.x) * ry,
            p0.y + (p1.y - p0.y) * rx + (p2.y - p0.y) * ry,
        );
        basis.grad_into(p, &mut gx, &mut gy);
        let wq = w * two_area;
        for a in 0..n {
            for b in 0..=a {
                stiff[(a, b)] += wq * (gx[a] * gx[b] + gy[a] * gy[b]);
            }
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            stiff[(a, b)] = stiff[(b, a)];
        }
    }
    let mass = element_gram(mesh, basis)?;
    let lam = gen_eig_max(&stiff, &mass, basis.element)?;
    Ok(mesh.diameters[basis.element] * lam.max(0.0).sqrt())
}

/// Discrete trace constant of one element: the smallest C with
/// ||v||^2_e <= C^2 h_K^{-1} ||v||^2_K for every facet e of K and
/// v in P_k(K); C = max_e sqrt(h_K lambda_max(T_e, M)).
pub fn trace_constant(
    mesh: &Triangulation,
    basis: &ElementBasis,
    seg: &SegmentRule,
) -> Result<f64, BasisError> {
    let n = basis.dim();
    let element = basis.element;
    let mass = element_gram(mesh, basis)?;
    let mut cmax: f64 = 0.0;
    let mut vals = vec![0.0; n];
    for le in 0..3 {
        let fi = mesh.element_facets[element][le];
        let (pa, pb) = mesh.facet_endpoints(fi);
        let length = (pb - pa).norm();
        let mut tgram = DMatrix::zeros(n, n);
        for (&s, &w) in seg.nodes.iter().zip(&seg.weights) {
            let p = Point2::from(pa.coords * (1.0 - s) + pb.coords * s);
            basis.eval_into(p, &mut vals);
            let wq = w * length;
            for a in 0..n {
                for b in 0..=a {
                    tgram[(a, b)] += wq * vals[a] * vals[b];
                }
            }
        }
        for a in 0..n {
            for b in (a + 1)..n {
                tgram[(a, b)] = tgram[(b, a)];
            }
        }
        let lam = gen_eig_max(&tgram, &mass, element)?;
        cmax = cmax.max((mesh.diameters[element] * lam.max(0.0)).sqrt());
    }
    Ok(cmax)
}

/// The constants required by the closeness check: C_ext and C_inv per
/// boundary facet (aligned with `map.facets`) and the global trace constant.
pub fn closeness_constants(
    mesh: &Triangulation,
    bases: &ElementBases,
    map: &TransferMap,
    seg: &SegmentRule,
) -> Result<ClosenessConstants, BasisError> {
    let mut facets = Vec::with_capacity(map.facets.len());
    for ft in &map.facets {
        let basis = bases.basis(ft.element);
        facets.push(FacetConstants {
            c_ext: ext_constant(mesh, basis, ft, seg)?,
            c_inv: inv_constant(mesh, basis)?,
        });
    }
    let mut c_tr: f64 = 0.0;
    for e in 0..mesh.n_elements() {
        c_tr = c_tr.max(trace_constant(mesh, bases.basis(e), seg)?);
    }
    Ok(ClosenessConstants { facets, c_tr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        build_transfer_map, extract_interior_mesh, generate_background_mesh, FacetNormal,
        ImplicitDomain, Rect,
    };
    use crate::polybasis::quadrature::segment_rule;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn circle_setup(n: usize, k: usize) -> (Triangulation, ElementBases, TransferMap) {
        let bg = generate_background_mesh(Rect::new(-1.0, -1.0, 1.0, 1.0), n);
        let mesh = extract_interior_mesh(&bg, &ImplicitDomain::circle()).unwrap();
        let bases = ElementBases::build(&mesh, k).unwrap();
        let map = build_transfer_map(&mesh, &ImplicitDomain::circle(), &FacetNormal, k + 2).unwrap();
        (mesh, bases, map)
    }

    #[test]
    fn lambda_of_constant_is_zero() {
        let (_, bases, map) = circle_setup(8, 1);
        let seg = segment_rule(4).unwrap();
        let ft = &map.facets[0];
        let bs = bases.basis(ft.element);
        let n = bs.dim();
        let p = VectorElementPoly {
            element: ft.element,
            comps: [
                DVector::from_fn(n, |i, _| if i == 0 { 2.0 } else { 0.0 }),
                DVector::from_fn(n, |i, _| if i == 0 { -1.0 } else { 0.0 }),
            ],
        };
        for i in 0..ft.nodes.len() {
            assert!(lambda_eval(bs, &p, ft, i, &seg).abs() < 1e-13);
        }
    }

    #[test]
    fn lambda_of_linear_field_closed_form() {
        // p = (x, 0), m = (1, 0): Lambda = -l/2 regardless of the start point
        let bg = generate_background_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), 2);
        let mesh = extract_interior_mesh(&bg, &ImplicitDomain::unit_square()).unwrap();
        let bases = ElementBases::build(&mesh, 1).unwrap();
        // fabricate a transfer facet along the right edge with fixed l
        let fi = *mesh
            .boundary_facets
            .iter()
            .find(|&&fi| {
                let (a, b) = mesh.facet_endpoints(fi);
                (a.x - 1.0).abs() < 1e-12 && (b.x - 1.0).abs() < 1e-12
            })
            .unwrap();
        let owner = mesh.facets[fi].owner.0;
        let bs = bases.basis(owner);
        // coefficients of p1(x,y) = x in the orthonormal basis via projection
        let rule = triangle_rule(4).unwrap();
        let [p0, p1, p2] = mesh.element_vertices(owner);
        let n = bs.dim();
        let mut cx = DVector::zeros(n);
        for (&(rx, ry), &w) in rule.nodes.iter().zip(&rule.weights) {
            let q = Point2::new(
                p0.x + (p1.x - p0.x) * rx + (p2.x - p0.x) * ry,
                p0.y + (p1.y - p0.y) * rx + (p2.y - p0.y) * ry,
            );
            let vals = bs.eval(q);
            for a in 0..n {
                cx[a] += w * 2.0 * mesh.area(owner) * q.x * vals[a];
            }
        }
        let p = VectorElementPoly { element: owner, comps: [cx, DVector::zeros(n)] };
        let seg = segment_rule(4).unwrap();
        let l = 0.37;
        let ft = FacetTransfer {
            facet: fi,
            element: owner,
            normal: crate::Vector::new(1.0, 0.0),
            nodes: vec![crate::geometry::TransferNode {
                x: crate::point(1.0, 0.4),
                s: 0.3,
                weight: 0.5,
                dir: crate::Vector::new(1.0, 0.0),
                len: l,
                mapped: crate::point(1.0 + l, 0.4),
                tangential: crate::Vector::zeros(),
            }],
            vertex_dirs: [crate::Vector::new(1.0, 0.0); 2],
            vertex_lens: [l; 2],
            patch_height: l,
            elem_height: 0.5,
            height_ratio: l / 0.5,
            beta_min: 1.0,
            max_len: l,
            max_tangential: 0.0,
        };
        let lam = lambda_eval(bs, &p, &ft, 0, &seg);
        assert!((lam + l / 2.0).abs() < 1e-12, "{lam}");
        // degenerate path contributes zero
        let mut ft0 = ft.clone();
        ft0.nodes[0].len = 0.0;
        assert_eq!(lambda_eval(bs, &p, &ft0, 0, &seg), 0.0);
    }

    #[test]
    fn triple_norm_closed_form_for_constant() {
        // p = (1, 0), constant l on a facet of length L: norm = sqrt(L l)
        let (_, bases, map) = circle_setup(8, 0);
        let ft0 = &map.facets[0];
        let bs = bases.basis(ft0.element);
        let l = 0.21;
        let mut ft = ft0.clone();
        for nd in &mut ft.nodes {
            nd.len = l;
        }
        let length: f64 = ft.nodes.iter().map(|n| n.weight).sum();
        let v0 = bs.eval(ft.nodes[0].x)[0];
        let p = VectorElementPoly {
            element: ft.element,
            comps: [DVector::from_element(1, 1.0 / v0), DVector::zeros(1)],
        };
        let seg = segment_rule(4).unwrap();
        let tn = triple_norm(bs, &p, &ft, &seg);
        assert!((tn - (length * l).sqrt()).abs() < 1e-12);
        // zero field and degenerate facet give zero
        let z = VectorElementPoly { element: ft.element, comps: [DVector::zeros(1), DVector::zeros(1)] };
        assert_eq!(triple_norm(bs, &z, &ft, &seg), 0.0);
        for nd in &mut ft.nodes {
            nd.len = 0.0;
        }
        assert_eq!(triple_norm(bs, &p, &ft, &seg), 0.0);
    }

    #[test]
    fn ext_constant_k0_closed_form() {
        // for k = 0: C_ext = r^{-1/2} (|K_ext| / |K|)^{1/2} in the path measure
        let (mesh, bases, map) = circle_setup(8, 0);
        let seg = segment_rule(4).unwrap();
        for ft in map.facets.iter().take(6) {
            if ft.height_ratio <= 0.0 {
                continue;
            }
            let bs = bases.basis(ft.element);
            let c = ext_constant(&mesh, bs, ft, &seg).unwrap();
            let patch_area: f64 = ft
                .nodes
                .iter()
                .map(|nd| nd.weight * nd.len)
                .sum();
            let expect = (patch_area / mesh.area(ft.element) / ft.height_ratio).sqrt();
            assert!((c - expect).abs() < 1e-10, "{c} vs {expect}");
        }
    }

    #[test]
    fn ext_constant_dominates_random_fields() {
        let (mesh, bases, map) = circle_setup(8, 2);
        let seg = segment_rule(6).unwrap();
        let ft = map
            .facets
            .iter()
            .max_by(|a, b| a.height_ratio.total_cmp(&b.height_ratio))
            .unwrap();
        let bs = bases.basis(ft.element);
        let c = ext_constant(&mesh, bs, ft, &seg).unwrap();
        let n = bs.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut best: f64 = 0.0;
        for _ in 0..1000 {
            let p = VectorElementPoly {
                element: ft.element,
                comps: [
                    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
                    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
                ],
            };
            let norm_k = (p.comps[0].norm_squared() + p.comps[1].norm_squared()).sqrt();
            let tn = triple_norm(bs, &p, ft, &seg);
            best = best.max(tn / norm_k / ft.height_ratio.sqrt());
        }
        assert!(c >= best - 1e-8, "eigen value {c} vs sampled sup {best}");
    }

    #[test]
    fn inv_constant_k0_is_zero_and_scale_invariant() {
        let mesh = generate_background_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), 1);
        let scaled = generate_background_mesh(Rect::new(0.0, 0.0, 2.0, 2.0), 1);
        let seg = segment_rule(6).unwrap();
        let b0 = ElementBasis::new(&mesh, 0, 0).unwrap();
        assert_eq!(inv_constant(&mesh, &b0).unwrap(), 0.0);
        for k in 1..=3 {
            let b = ElementBasis::new(&mesh, 0, k).unwrap();
            let bs = ElementBasis::new(&scaled, 0, k).unwrap();
            let c = inv_constant(&mesh, &b).unwrap();
            let cs = inv_constant(&scaled, &bs).unwrap();
            assert!((c - cs).abs() < 1e-10, "k={k}: {c} vs {cs}");
            let t = trace_constant(&mesh, &b, &seg).unwrap();
            let ts = trace_constant(&scaled, &bs, &seg).unwrap();
            assert!((t - ts).abs() < 1e-10, "k={k}: {t} vs {ts}");
        }
    }

    #[test]
    fn inv_constant_matches_random_search() {
        let mesh = generate_background_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), 1);
        let b = ElementBasis::new(&mesh, 0, 1).unwrap();
        let c = inv_constant(&mesh, &b).unwrap();
        let h = mesh.diameters[0];
        let rule = triangle_rule(4).unwrap();
        let [p0, p1, p2] = mesh.element_vertices(0);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut best: f64 = 0.0;
        let n = b.dim();
        for _ in 0..100_000 {
            let coeffs = DVector::<f64>::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let mut g2 = 0.0;
            let mut m2 = 0.0;
            let mut gx = vec![0.0; n];
            let mut gy = vec![0.0; n];
            for (&(rx, ry), &w) in rule.nodes.iter().zip(&rule.weights) {
                let p = Point2::new(
                    p0.x + (p1.x - p0.x) * rx + (p2.x - p0.x) * ry,
                    p0.y + (p1.y - p0.y) * rx + (p2.y - p0.y) * ry,
                );
                let wq = w * 2.0 * mesh.area(0);
                let v = b.eval(p);
                b.grad_into(p, &mut gx, &mut gy);
                let val: f64 = coeffs.iter().zip(&v).map(|(c, v)| c * v).sum();
                let dx: f64 = coeffs.iter().zip(&gx).map(|(c, v)| c * v).sum();
                let dy: f64 = coeffs.iter().zip(&gy).map(|(c, v)| c * v).sum();
                m2 += wq * val * val;
                g2 += wq * (dx * dx + dy * dy);
            }
            best = best.max(h * (g2 / m2).sqrt());
        }
        assert!(c >= best - 1e-9);
        assert!((c - best) / c < 0.01, "eigenvalue {c} vs search {best}");
    }
}
