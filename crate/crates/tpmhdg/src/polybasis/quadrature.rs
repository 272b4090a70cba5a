//! Quadrature rules: Gauss-Legendre on the unit segment and symmetric rules
//! on the reference triangle {x, y >= 0, x + y <= 1}.

use super::BasisError;

/// Gauss rule on [0, 1]; weights sum to 1.
#[derive(Clone, Debug)]
pub struct SegmentRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

/// Rule on the reference triangle; weights sum to 1/2 (the reference area).
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub nodes: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

pub const MAX_EXACTNESS: usize = 12;

/// Gauss-Legendre nodes/weights on [0,1], n = 1..=8 points (exact to 2n-1).
#[rustfmt::skip]
const GAUSS01: [&[(f64, f64)]; 8] = [
    &[(0.5, 1.0)],
    &[(0.21132486540518713, 0.5), (0.7886751345948129, 0.5)],
    &[(0.1127016653792583, 0.27777777777777785), (0.5, 0.4444444444444444),
      (0.8872983346207417, 0.27777777777777785)],
    &[(0.06943184420297371, 0.17392742256872684), (0.33000947820757187, 0.3260725774312731),
      (0.6699905217924281, 0.3260725774312731), (0.9305681557970262, 0.17392742256872684)],
    &[(0.04691007703066802, 0.11846344252809471), (0.23076534494715845, 0.2393143352496831),
      (0.5, 0.2844444444444445), (0.7692346550528415, 0.2393143352496831),
      (0.9530899229693319, 0.11846344252809471)],
    &[(0.033765242898423975, 0.08566224618958487), (0.16939530676686776, 0.18038078652406947),
      (0.3806904069584015, 0.23395696728634569), (0.6193095930415985, 0.23395696728634569),
      (0.8306046932331322, 0.18038078652406947), (0.966234757101576, 0.08566224618958487)],
    &[(0.025446043828620757, 0.06474248308443532), (0.12923440720030277, 0.1398526957446383),
      (0.2970774243113014, 0.19091502525255916), (0.5, 0.20897959183673448),
      (0.7029225756886985, 0.19091502525255916), (0.8707655927996972, 0.1398526957446383),
      (0.9745539561713792, 0.06474248308443532)],
    &[(0.019855071751231912, 0.050614268145188344), (0.10166676129318664, 0.11119051722668717),
      (0.2372337950418355, 0.15685332293894352), (0.4082826787521751, 0.18134189168918088),
      (0.5917173212478248, 0.18134189168918088), (0.7627662049581645, 0.15685332293894352),
      (0.8983332387068134, 0.11119051722668717), (0.9801449282487681, 0.050614268145188344)],
];

/// Gauss rule on [0,1] with `n` points (1..=8).
pub fn gauss01(n: usize) -> Result<SegmentRule, BasisError> {
    if n == 0 || n > GAUSS01.len() {
        return Err(BasisError::UnsupportedOrder(2 * n));
    }
    let tab = GAUSS01[n - 1];
    Ok(SegmentRule {
        nodes: tab.iter().map(|&(x, _)| x).collect(),
        weights: tab.iter().map(|&(_, w)| w).collect(),
        exactness: 2 * n - 1,
    })
}

/// Segment rule with at least the requested polynomial exactness.
pub fn segment_rule(exactness: usize) -> Result<SegmentRule, BasisError> {
    if exactness > 15 {
        return Err(BasisError::UnsupportedOrder(exactness));
    }
    gauss01(exactness / 2 + 1)
}

fn orbit3(a: f64, w: f64, pts: &mut Vec<(f64, f64)>, ws: &mut Vec<f64>) {
    let b = 1.0 - 2.0 * a;
    pts.extend_from_slice(&[(a, a), (b, a), (a, b)]);
    ws.extend_from_slice(&[w, w, w]);
}

fn orbit6(a: f64, b: f64, w: f64, pts: &mut Vec<(f64, f64)>, ws: &mut Vec<f64>) {
    let c = 1.0 - a - b;
    pts.extend_from_slice(&[(a, b), (b, a), (a, c), (c, a), (b, c), (c, b)]);
    ws.extend_from_slice(&[w; 6]);
}

/// Symmetric triangle rule with at least the requested exactness (<= 12).
///
/// Exactness <= 8 uses compact positive-weight symmetric tables; 9..=12 uses
/// a tensor Gauss rule collapsed onto the triangle and averaged over the six
/// affine symmetries (more points, still positive weights and symmetric).
pub fn triangle_rule(exactness: usize) -> Result<TriangleRule, BasisError> {
    if exactness > MAX_EXACTNESS {
        return Err(BasisError::UnsupportedOrder(exactness));
    }
    let mut pts = Vec::new();
    let mut ws = Vec::new();
    let deg = match exactness {
        0 | 1 => {
            pts.push((1.0 / 3.0, 1.0 / 3.0));
            ws.push(1.0);
            1
        }
        2 => {
            orbit3(1.0 / 6.0, 1.0 / 3.0, &mut pts, &mut ws);
            2
        }
        3 | 4 => {
            orbit3(0.445948490915965, 0.223381589678011, &mut pts, &mut ws);
            orbit3(0.091576213509771, 0.109951743655322, &mut pts, &mut ws);
            4
        }
        5 => {
            pts.push((1.0 / 3.0, 1.0 / 3.0));
            ws.push(0.225);
            orbit3(0.470142064105115, 0.132394152788506, &mut pts, &mut ws);
            orbit3(0.101286507323456, 0.125939180544827, &mut pts, &mut ws);
            5
        }
        6 => {
            orbit3(0.249286745170910, 0.116786275726379, &mut pts, &mut ws);
            orbit3(0.063089014491502, 0.050844906370207, &mut pts, &mut ws);
            orbit6(
                0.310352451033785,
                0.053145049844816,
                0.082851075618374,
                &mut pts,
                &mut ws,
            );
            6
        }
        7 | 8 => {
            pts.push((1.0 / 3.0, 1.0 / 3.0));
            ws.push(0.14431560767778592);
            orbit3(0.459292588292723, 0.09509163426728492, &mut pts, &mut ws);
            orbit3(0.170569307751760, 0.1032173705347182, &mut pts, &mut ws);
            orbit3(0.050547228317031, 0.03245849762319816, &mut pts, &mut ws);
            orbit6(
                0.263112829634638,
                0.008394777409958,
                0.02723031417443476,
                &mut pts,
                &mut ws,
            );
            8
        }
        d => {
            return symmetrized_collapsed(d);
        }
    };
    // tables above are normalized to sum 1; scale to the reference area
    for w in &mut ws {
        *w *= 0.5;
    }
    Ok(TriangleRule {
        nodes: pts,
        weights: ws,
        exactness: deg,
    })
}

/// Tensor Gauss rule mapped by (u, v) -> (u, v(1-u)) with Jacobian (1-u),
/// then averaged over the six affine maps of the triangle onto itself.
fn symmetrized_collapsed(deg: usize) -> Result<TriangleRule, BasisError> {
    let n = deg / 2 + 2; // 2n-1 >= deg+1 covers the Jacobian's extra degree
    let g = gauss01(n)?;
    let mut base = Vec::new();
    for (&u, &wu) in g.nodes.iter().zip(&g.weights) {
        for (&v, &wv) in g.nodes.iter().zip(&g.weights) {
            base.push((u, v * (1.0 - u), wu * wv * (1.0 - u)));
        }
    }
    // vertex permutations expressed in barycentric coordinates (l0, l1, l2)
    let mut pts = Vec::with_capacity(6 * base.len());
    let mut ws = Vec::with_capacity(6 * base.len());
    for &(x, y, w) in &base {
        let l = [1.0 - x - y, x, y];
        for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            pts.push((l[perm[1]], l[perm[2]]));
            ws.push(w / 6.0);
        }
    }
    Ok(TriangleRule {
        nodes: pts,
        weights: ws,
        exactness: deg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    /// Exact integral of x^a y^b over the reference triangle.
    fn mono_integral(a: usize, b: usize) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn segment_exactness_3_has_two_nodes() {
        let r = segment_rule(3).unwrap();
        assert_eq!(r.nodes.len(), 2);
    }

    #[test]
    fn segment_rules_integrate_monomials() {
        for deg in 0..=12 {
            let r = segment_rule(deg).unwrap();
            assert!(r.exactness >= deg);
            for p in 0..=r.exactness {
                let q: f64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(&x, &w)| w * x.powi(p as i32))
                    .sum();
                let exact = 1.0 / (p as f64 + 1.0);
                assert!((q - exact).abs() < 1e-12, "deg {deg} monomial {p}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn triangle_rules_integrate_monomials() {
        for deg in 0..=12 {
            let r = triangle_rule(deg).unwrap();
            assert!(r.exactness >= deg);
            let wsum: f64 = r.weights.iter().sum();
            assert!((wsum - 0.5).abs() < 1e-14, "deg {deg} weight sum {wsum}");
            for d in 0..=r.exactness {
                for a in 0..=d {
                    let b = d - a;
                    let q: f64 = r
                        .nodes
                        .iter()
                        .zip(&r.weights)
                        .map(|(&(x, y), &w)| w * x.powi(a as i32) * y.powi(b as i32))
                        .sum();
                    assert!(
                        (q - mono_integral(a, b)).abs() < 1e-12,
                        "deg {deg}: x^{a} y^{b} -> {q} vs {}",
                        mono_integral(a, b)
                    );
                }
            }
        }
    }

    #[test]
    fn triangle_x2y_is_one_sixtieth() {
        let r = triangle_rule(4).unwrap();
        let q: f64 = r
            .nodes
            .iter()
            .zip(&r.weights)
            .map(|(&(x, y), &w)| w * x * x * y)
            .sum();
        assert!((q - 1.0 / 60.0).abs() < 1e-14);
    }

    #[test]
    fn unsupported_order_is_an_error() {
        assert!(triangle_rule(13).is_err());
        assert!(segment_rule(16).is_err());
    }
}
