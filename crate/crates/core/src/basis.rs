//! Trilinear 8-node hexahedron: shape functions, Jacobians, forward map and
//! tensor Gauss-Legendre rules.
//!
//! Corner ordering (bottom face counterclockwise seen from above, then top):
//!
//! ```text
//!        7-------6
//!       /|      /|
//!      / |     / |
//!     4-------5  |        ξ₃
//!     |  3----|--2        |  ξ₂
//!     | /     | /         | /
//!     |/      |/          |/
//!     0-------1           +---- ξ₁
//! ```
//!
//! The Jacobian determinant is always reported signed. Tangled elements are
//! detected and handled through its sign, so nothing in this module takes an
//! absolute value.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use crate::error::BasisError;

/// A point in physical space.
pub type Point3 = Vector3<f64>;

/// A point of the reference cube `[-1, 1]³`.
pub type ParametricPoint = Vector3<f64>;

/// Parametric coordinates of the 8 corners.
pub const CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Tolerance on parametric coordinates for root-polish overshoot.
pub const PARAMETRIC_EPS: f64 = 1e-12;

/// Corner pairs of the 12 element edges.
pub const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Returns true if `xi` lies in the reference cube inflated by `eps`.
pub fn in_reference_cube(xi: &ParametricPoint, eps: f64) -> bool {
    xi.iter().all(|c| c.abs() <= 1.0 + eps)
}

/// Shape function values and parametric derivatives at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeEval {
    pub n: SVector<f64, 8>,
    /// `dn_dxi[(i, k)] = ∂N_i/∂ξ_k`.
    pub dn_dxi: SMatrix<f64, 8, 3>,
}

/// N_i = ⅛ Π_k (1 + ξ_k ξ_k,i).
pub fn shape_eval(xi: &ParametricPoint) -> ShapeEval {
    let mut n = SVector::<f64, 8>::zeros();
    let mut dn = SMatrix::<f64, 8, 3>::zeros();
    for (i, c) in CORNERS.iter().enumerate() {
        let f = [1.0 + c[0] * xi[0], 1.0 + c[1] * xi[1], 1.0 + c[2] * xi[2]];
        n[i] = 0.125 * f[0] * f[1] * f[2];
        dn[(i, 0)] = 0.125 * c[0] * f[1] * f[2];
        dn[(i, 1)] = 0.125 * c[1] * f[0] * f[2];
        dn[(i, 2)] = 0.125 * c[2] * f[0] * f[1];
    }
    ShapeEval { n, dn_dxi: dn }
}

/// Jacobian of the parametric map at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianEval {
    /// `j[(a, k)] = ∂x_a/∂ξ_k`.
    pub j: Matrix3<f64>,
    pub det: f64,
    /// `J⁻ᵀ`, absent when the Jacobian is singular relative to element scale.
    pub inv_transpose: Option<Matrix3<f64>>,
}

impl JacobianEval {
    /// Physical gradients of the 8 shape functions, one row per node.
    pub fn physical_gradients(&self, shape: &ShapeEval) -> Option<SMatrix<f64, 8, 3>> {
        self.inv_transpose.map(|jit| shape.dn_dxi * jit.transpose())
    }
}

/// Geometry of one hexahedron: corner coordinates plus the monomial
/// coefficients of its trilinear map.
///
/// `x(ξ) = c₀ + c₁ξ₁ + c₂ξ₂ + c₃ξ₃ + c₄ξ₁ξ₂ + c₅ξ₁ξ₃ + c₆ξ₂ξ₃ + c₇ξ₁ξ₂ξ₃`
#[derive(Debug, Clone, PartialEq)]
pub struct HexGeometry {
    pub nodes: [Point3; 8],
    coeff: [Vector3<f64>; 8],
    diag: f64,
    lo: Point3,
    hi: Point3,
}

impl HexGeometry {
    pub fn new(nodes: [Point3; 8]) -> Self {
        let mut coeff = [Vector3::zeros(); 8];
        for (x, c) in nodes.iter().zip(CORNERS.iter()) {
            let m = [
                1.0,
                c[0],
                c[1],
                c[2],
                c[0] * c[1],
                c[0] * c[2],
                c[1] * c[2],
                c[0] * c[1] * c[2],
            ];
            for (k, mk) in m.iter().enumerate() {
                coeff[k] += x * (0.125 * mk);
            }
        }
        let mut lo = nodes[0];
        let mut hi = nodes[0];
        for x in &nodes[1..] {
            lo = lo.inf(x);
            hi = hi.sup(x);
        }
        let diag = (hi - lo).norm();
        HexGeometry {
            nodes,
            coeff,
            diag,
            lo,
            hi,
        }
    }

    /// Length of the diagonal of the node bounding box.
    pub fn scale(&self) -> f64 {
        self.diag
    }

    /// Axis-aligned bounding box of the element image (exact: a trilinear
    /// map attains its extremes at the corners).
    pub fn bounds(&self) -> (Point3, Point3) {
        (self.lo, self.hi)
    }

    pub fn coefficients(&self) -> &[Vector3<f64>; 8] {
        &self.coeff
    }

    /// Forward map `x(ξ) = Σ N_i(ξ) x_i`.
    pub fn map(&self, xi: &ParametricPoint) -> Point3 {
        let c = &self.coeff;
        let (a, b, d) = (xi[0], xi[1], xi[2]);
        c[0] + c[1] * a + c[2] * b + c[3] * d + c[4] * (a * b) + c[5] * (a * d) + c[6] * (b * d)
            + c[7] * (a * b * d)
    }

    /// Jacobian matrix only (no inverse), from the monomial form.
    pub fn jacobian_matrix(&self, xi: &ParametricPoint) -> Matrix3<f64> {
        let c = &self.coeff;
        let (a, b, d) = (xi[0], xi[1], xi[2]);
        let d1 = c[1] + c[4] * b + c[5] * d + c[7] * (b * d);
        let d2 = c[2] + c[4] * a + c[6] * d + c[7] * (a * d);
        let d3 = c[3] + c[5] * a + c[6] * b + c[7] * (a * b);
        Matrix3::from_columns(&[d1, d2, d3])
    }

    pub fn det_j(&self, xi: &ParametricPoint) -> f64 {
        self.jacobian_matrix(xi).determinant()
    }

    /// Threshold below which `|detJ|` counts as singular.
    pub fn singular_det(&self) -> f64 {
        1e-14 * self.diag.powi(3)
    }

    pub fn jacobian(&self, xi: &ParametricPoint) -> JacobianEval {
        let j = self.jacobian_matrix(xi);
        let det = j.determinant();
        let inv_transpose = if det.abs() > self.singular_det() {
            j.try_inverse().map(|inv| inv.transpose())
        } else {
            None
        };
        JacobianEval {
            j,
            det,
            inv_transpose,
        }
    }

    /// Oriented volume `∫ detJ dξ`. Exact with the 2-point rule because
    /// detJ has degree at most 2 in each parametric variable.
    pub fn signed_volume(&self) -> f64 {
        let rule = gauss_rule(2).expect("order 2 is supported");
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(xi, w)| w * self.det_j(xi))
            .sum()
    }

    /// Bounds of the trilinear map over a parametric box, from its corners.
    pub fn image_bounds(&self, lo: &ParametricPoint, hi: &ParametricPoint) -> (Point3, Point3) {
        let mut bmin = Point3::repeat(f64::INFINITY);
        let mut bmax = Point3::repeat(f64::NEG_INFINITY);
        for k in 0..8 {
            let xi = Vector3::new(
                if k & 1 == 0 { lo[0] } else { hi[0] },
                if k & 2 == 0 { lo[1] } else { hi[1] },
                if k & 4 == 0 { lo[2] } else { hi[2] },
            );
            let x = self.map(&xi);
            bmin = bmin.inf(&x);
            bmax = bmax.sup(&x);
        }
        (bmin, bmax)
    }

    /// Exact ranges of the Jacobian entries over a parametric box, as
    /// `j[k][a] = ∂x_a/∂ξ_k`. Column `k` is bilinear in the two other
    /// variables, so its range is attained at the corners.
    pub(crate) fn jacobian_bounds(&self, lo: &ParametricPoint, hi: &ParametricPoint) -> [[Interval; 3]; 3] {
        let c = &self.coeff;
        let col_range = |k: usize| -> [Interval; 3] {
            let (p, q) = match k {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let mut r = [Interval::EMPTY; 3];
            for &u in &[lo[p], hi[p]] {
                for &v in &[lo[q], hi[q]] {
                    let col = match k {
                        0 => c[1] + c[4] * u + c[5] * v + c[7] * (u * v),
                        1 => c[2] + c[4] * u + c[6] * v + c[7] * (u * v),
                        _ => c[3] + c[5] * u + c[6] * v + c[7] * (u * v),
                    };
                    for a in 0..3 {
                        r[a] = r[a].hull(col[a]);
                    }
                }
            }
            r
        };
        [col_range(0), col_range(1), col_range(2)]
    }

    /// Conservative interval enclosing detJ over a parametric box, by
    /// interval arithmetic on the cofactor expansion.
    pub fn det_j_bounds(&self, lo: &ParametricPoint, hi: &ParametricPoint) -> (f64, f64) {
        let j = self.jacobian_bounds(lo, hi);
        let m = |a: usize, k: usize| j[k][a];
        let det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
            - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
        (det.lo, det.hi)
    }
}

/// Closed real interval used for conservative bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const EMPTY: Interval = Interval {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };

    pub fn hull(self, v: f64) -> Interval {
        Interval {
            lo: self.lo.min(v),
            hi: self.hi.max(v),
        }
    }
}

impl std::ops::Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Interval {
            lo: p.iter().cloned().fold(f64::INFINITY, f64::min),
            hi: p.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl std::ops::Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo - o.hi,
            hi: self.hi - o.lo,
        }
    }
}

impl std::ops::Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo + o.lo,
            hi: self.hi + o.hi,
        }
    }
}

/// One-dimensional Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre_1d(order: usize) -> Result<(Vec<f64>, Vec<f64>), BasisError> {
    let (x, w): (&[f64], &[f64]) = match order {
        1 => (&[0.0], &[2.0]),
        2 => {
            const A: f64 = 0.577_350_269_189_625_8;
            (&[-A, A], &[1.0, 1.0])
        }
        3 => (
            &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
            &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
        ),
        4 => (
            &[
                -0.861_136_311_594_052_6,
                -0.339_981_043_584_856_3,
                0.339_981_043_584_856_3,
                0.861_136_311_594_052_6,
            ],
            &[
                0.347_854_845_137_453_9,
                0.652_145_154_862_546_1,
                0.652_145_154_862_546_1,
                0.347_854_845_137_453_9,
            ],
        ),
        5 => (
            &[
                -0.906_179_845_938_664,
                -0.538_469_310_105_683,
                0.0,
                0.538_469_310_105_683,
                0.906_179_845_938_664,
            ],
            &[
                0.236_926_885_056_189_1,
                0.478_628_670_499_366_5,
                0.568_888_888_888_888_9,
                0.478_628_670_499_366_5,
                0.236_926_885_056_189_1,
            ],
        ),
        _ => return Err(BasisError::UnsupportedOrder(order)),
    };
    Ok((x.to_vec(), w.to_vec()))
}

/// Tensor-product Gauss-Legendre rule on `[-1, 1]³`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub order: usize,
    pub points: Vec<ParametricPoint>,
    pub weights: Vec<f64>,
}

pub fn gauss_rule(order: usize) -> Result<GaussRule, BasisError> {
    let (x, w) = gauss_legendre_1d(order)?;
    let mut points = Vec::with_capacity(order.pow(3));
    let mut weights = Vec::with_capacity(order.pow(3));
    for k in 0..order {
        for j in 0..order {
            for i in 0..order {
                points.push(Vector3::new(x[i], x[j], x[k]));
                weights.push(w[i] * w[j] * w[k]);
            }
        }
    }
    Ok(GaussRule {
        order,
        points,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cube(h: f64) -> HexGeometry {
        HexGeometry::new(CORNERS.map(|c| Vector3::new(c[0] + 1.0, c[1] + 1.0, c[2] + 1.0) * (h / 2.0)))
    }

    #[test]
    fn corner_and_centroid_values() {
        let s = shape_eval(&Vector3::new(-1.0, -1.0, -1.0));
        assert_eq!(s.n.as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let s = shape_eval(&Vector3::zeros());
        assert!(s.n.iter().all(|&v| v == 0.125));
        let s = shape_eval(&Vector3::new(1.0, 1.0, 1.0));
        for i in 0..8 {
            assert_eq!(s.n[i], if i == 6 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn affine_map_of_unit_cube() {
        let g = cube(1.0);
        for (i, c) in CORNERS.iter().enumerate() {
            assert_eq!(g.map(&Vector3::from(*c)), g.nodes[i]);
        }
        let x = g.map(&Vector3::new(-0.5, -0.5, -0.5));
        assert_relative_eq!(x, Vector3::new(0.25, 0.25, 0.25), epsilon = 1e-15);
        let mean = g.nodes.iter().sum::<Point3>() / 8.0;
        assert_relative_eq!(g.map(&Vector3::zeros()), mean, epsilon = 1e-15);
    }

    #[test]
    fn cube_jacobian_is_half_side_cubed() {
        for &h in &[1.0, 0.5, 3.0] {
            let g = cube(h);
            for xi in [Vector3::zeros(), Vector3::new(0.3, -0.9, 0.1)] {
                let j = g.jacobian(&xi);
                assert_relative_eq!(j.det, (h / 2.0f64).powi(3), max_relative = 1e-14);
                assert!(j.inv_transpose.is_some());
            }
        }
    }

    #[test]
    fn degenerate_jacobian_has_no_inverse() {
        let mut nodes = CORNERS.map(|c| Vector3::new(c[0], c[1], c[2]));
        for x in nodes.iter_mut() {
            x[2] = 0.0;
        }
        let g = HexGeometry::new(nodes);
        assert!(g.jacobian(&Vector3::zeros()).inv_transpose.is_none());
    }

    #[test]
    fn gauss_rules() {
        let r1 = gauss_rule(1).unwrap();
        assert_eq!(r1.points, vec![Vector3::zeros()]);
        assert_eq!(r1.weights, vec![8.0]);
        let r2 = gauss_rule(2).unwrap();
        assert_eq!(r2.points.len(), 8);
        for (p, w) in r2.points.iter().zip(&r2.weights) {
            assert_relative_eq!(*w, 1.0);
            for c in p.iter() {
                assert_relative_eq!(c.abs(), 1.0 / 3f64.sqrt(), max_relative = 1e-15);
            }
        }
        let moment: f64 = r2
            .points
            .iter()
            .zip(&r2.weights)
            .map(|(p, w)| w * (p[0] * p[1] * p[2]).powi(2))
            .sum();
        assert_relative_eq!(moment, 8.0 / 27.0, max_relative = 1e-14);
        for order in 1..=5 {
            let r = gauss_rule(order).unwrap();
            assert_relative_eq!(r.weights.iter().sum::<f64>(), 8.0, max_relative = 1e-14);
            // highest even degree the rule integrates exactly on each axis
            let e = 2 * order as i32 - 2;
            let q: f64 = r
                .points
                .iter()
                .zip(&r.weights)
                .map(|(p, w)| w * (p[0] * p[1] * p[2]).powi(e))
                .sum();
            let exact = (2.0 / (e as f64 + 1.0)).powi(3);
            assert!((q - exact).abs() < 1e-13, "order {order}");
        }
        assert!(matches!(gauss_rule(0), Err(BasisError::UnsupportedOrder(0))));
        assert!(gauss_rule(6).is_err());
    }

    fn arb_hex() -> impl Strategy<Value = HexGeometry> {
        proptest::collection::vec(-0.2f64..0.2, 24).prop_map(|p| {
            let mut nodes = CORNERS.map(|c| Vector3::new(c[0], c[1], c[2]));
            for (i, x) in nodes.iter_mut().enumerate() {
                *x += Vector3::new(p[3 * i], p[3 * i + 1], p[3 * i + 2]);
            }
            HexGeometry::new(nodes)
        })
    }

    fn arb_xi() -> impl Strategy<Value = ParametricPoint> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b, c)| Vector3::new(a, b, c))
    }

    proptest! {
        #[test]
        fn partition_of_unity_and_completeness(g in arb_hex(), xi in arb_xi()) {
            let s = shape_eval(&xi);
            prop_assert!((s.n.sum() - 1.0).abs() < 1e-14);
            for k in 0..3 {
                prop_assert!(s.dn_dxi.column(k).sum().abs() < 1e-14);
            }
            let x: Point3 = (0..8).map(|i| g.nodes[i] * s.n[i]).sum();
            prop_assert!((x - g.map(&xi)).norm() < 1e-13);
        }

        #[test]
        fn gradients_match_finite_differences(xi in arb_xi()) {
            let s = shape_eval(&xi);
            let h = 1e-6;
            for k in 0..3 {
                let mut p = xi;
                let mut m = xi;
                p[k] += h;
                m[k] -= h;
                let fd = (shape_eval(&p).n - shape_eval(&m).n) / (2.0 * h);
                for i in 0..8 {
                    prop_assert!((fd[i] - s.dn_dxi[(i, k)]).abs() < 1e-6);
                }
            }
        }

        #[test]
        fn jacobian_consistent_with_nodal_sum(g in arb_hex(), xi in arb_xi()) {
            let s = shape_eval(&xi);
            let mut j = Matrix3::zeros();
            for i in 0..8 {
                j += g.nodes[i] * s.dn_dxi.row(i);
            }
            let je = g.jacobian(&xi);
            prop_assert!((j - je.j).norm() < 1e-13);
            prop_assert!((je.det - je.j.determinant()).abs() <= 1e-13 * je.det.abs().max(1e-300));
        }

        #[test]
        fn signed_volume_matches_fine_quadrature(g in arb_hex()) {
            let r = gauss_rule(5).unwrap();
            let fine: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * g.det_j(p)).sum();
            prop_assert!((g.signed_volume() - fine).abs() < 1e-13);
        }

        #[test]
        fn linear_fields_are_reproduced(g in arb_hex(), xi in arb_xi(),
                                        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -1.0f64..1.0) {
            let grad = Vector3::new(a, b, c);
            let u: Vec<f64> = g.nodes.iter().map(|x| grad.dot(x) + d).collect();
            let s = shape_eval(&xi);
            let uh: f64 = (0..8).map(|i| s.n[i] * u[i]).sum();
            prop_assert!((uh - (grad.dot(&g.map(&xi)) + d)).abs() < 1e-13);
        }

        #[test]
        fn det_bounds_enclose_samples(g in arb_hex(), xi in arb_xi(), w in 0.01f64..0.5) {
            let lo = xi.map(|v| (v - w).max(-1.0));
            let hi = xi.map(|v| (v + w).min(1.0));
            let (dl, dh) = g.det_j_bounds(&lo, &hi);
            for t in [0.0, 0.3, 0.77, 1.0] {
                let p = lo + (hi - lo) * t;
                let d = g.det_j(&p);
                prop_assert!(d >= dl - 1e-14 && d <= dh + 1e-14);
            }
        }
    }
}
