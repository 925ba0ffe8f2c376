//! Element classification by the sign of the Jacobian determinant.

use nalgebra::Vector3;
use serde::Serialize;

use crate::basis::{HexGeometry, ParametricPoint};
use crate::error::GeometryError;
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ElementKind {
    Convex,
    Concave,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementClass {
    pub kind: ElementKind,
    /// For concave elements, points with `detJ > 0` and `detJ < 0`.
    pub witness: Option<(ParametricPoint, ParametricPoint)>,
}

impl ElementClass {
    pub fn is_concave(&self) -> bool {
        self.kind == ElementKind::Concave
    }
}

pub const DEFAULT_GRID: usize = 9;
pub const DEFAULT_REFINE: u32 = 6;

fn lattice(n: usize, lo: ParametricPoint, hi: ParametricPoint) -> impl Iterator<Item = ParametricPoint> {
    (0..n * n * n).map(move |idx| {
        let ijk = [idx % n, (idx / n) % n, idx / (n * n)];
        Vector3::from_fn(|k, _| lo[k] + (hi[k] - lo[k]) * ijk[k] as f64 / (n - 1) as f64)
    })
}

/// Samples `detJ` on a `grid³` lattice (corners included); a sign change
/// makes the element concave. Otherwise the lattice point closest to a sign
/// change is refined `refine_depth` times before the element is declared
/// convex.
pub fn classify_element(
    g: &HexGeometry,
    element: usize,
    grid: usize,
    refine_depth: u32,
) -> Result<ElementClass, GeometryError> {
    if grid < 3 {
        return Err(GeometryError::InvalidArgument(format!("grid = {grid} < 3")));
    }
    let tiny = g.singular_det();
    let n = grid;
    let mut pos: Option<(f64, ParametricPoint)> = None;
    let mut neg: Option<(f64, ParametricPoint)> = None;
    let mut face_alive = [false; 6];
    let lo = Vector3::repeat(-1.0);
    let hi = Vector3::repeat(1.0);
    for xi in lattice(n, lo, hi) {
        let det = g.det_j(&xi);
        if det.abs() > tiny {
            for (f, alive) in face_alive.iter_mut().enumerate() {
                let (axis, side) = match f {
                    0 => (2, -1.0),
                    1 => (2, 1.0),
                    2 => (1, -1.0),
                    3 => (0, 1.0),
                    4 => (1, 1.0),
                    _ => (0, -1.0),
                };
                if xi[axis] == side {
                    *alive = true;
                }
            }
        }
        if det > 0.0 && pos.is_none_or(|(d, _)| det > d) {
            pos = Some((det, xi));
        }
        if det < 0.0 && neg.is_none_or(|(d, _)| det < d) {
            neg = Some((det, xi));
        }
    }
    if let Some(face) = face_alive.iter().position(|a| !a) {
        return Err(GeometryError::DegenerateElement { element, face });
    }
    if let (Some((_, p)), Some((_, m))) = (pos, neg) {
        return Ok(ElementClass {
            kind: ElementKind::Concave,
            witness: Some((p, m)),
        });
    }
    // one-signed on the lattice: zoom in on the smallest |detJ|
    let sign = if pos.is_some() { 1.0 } else { -1.0 };
    let mut centre = lattice(n, lo, hi)
        .min_by(|a, b| (sign * g.det_j(a)).total_cmp(&(sign * g.det_j(b))))
        .unwrap_or_default();
    let mut half = 2.0 / (n - 1) as f64;
    for _ in 0..refine_depth {
        let clo = centre.map(|c| (c - half).max(-1.0));
        let chi = centre.map(|c| (c + half).min(1.0));
        let mut best = (f64::INFINITY, centre);
        for xi in lattice(5, clo, chi) {
            let v = sign * g.det_j(&xi);
            if v < 0.0 {
                let other = if sign > 0.0 { pos } else { neg };
                let (w_pos, w_neg) = match other {
                    Some((_, o)) if sign > 0.0 => (o, xi),
                    Some((_, o)) => (xi, o),
                    None => break,
                };
                return Ok(ElementClass {
                    kind: ElementKind::Concave,
                    witness: Some((w_pos, w_neg)),
                });
            }
            if v < best.0 {
                best = (v, xi);
            }
        }
        centre = best.1;
        half *= 0.5;
    }
    Ok(ElementClass {
        kind: ElementKind::Convex,
        witness: None,
    })
}

/// Classification of every element with the default lattice.
pub fn classify_mesh(mesh: &Mesh) -> Result<Vec<ElementClass>, GeometryError> {
    (0..mesh.elements.len())
        .map(|e| classify_element(&mesh.geometry(e), e, DEFAULT_GRID, DEFAULT_REFINE))
        .collect()
}

pub fn concave_elements(mesh: &Mesh) -> Result<Vec<usize>, GeometryError> {
    Ok(classify_mesh(mesh)?
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_concave())
        .map(|(e, _)| e)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_eight_element, gen_two_element};

    #[test]
    fn two_element_classes() {
        let m = gen_two_element(0.3).unwrap();
        let c = classify_mesh(&m).unwrap();
        assert_eq!(c[0].kind, ElementKind::Concave);
        assert_eq!(c[1].kind, ElementKind::Convex);
        let (p, n) = c[0].witness.unwrap();
        let g = m.geometry(0);
        assert!(g.det_j(&p) > 0.0 && g.det_j(&n) < 0.0);
    }

    #[test]
    fn eight_element_counts() {
        assert!(concave_elements(&gen_eight_element(1.0).unwrap()).unwrap().is_empty());
        for d in [0.1, 0.2, 0.3, 0.4] {
            assert_eq!(concave_elements(&gen_eight_element(d).unwrap()).unwrap().len(), 1, "d = {d}");
        }
    }

    #[test]
    fn flattened_element_is_degenerate() {
        let mut nodes = crate::basis::CORNERS.map(|c| Vector3::new(c[0], c[1], c[2]));
        for x in nodes.iter_mut() {
            x.z = 0.0;
        }
        let g = HexGeometry::new(nodes);
        assert!(matches!(
            classify_element(&g, 3, 5, 2),
            Err(GeometryError::DegenerateElement { element: 3, .. })
        ));
        assert!(classify_element(&g, 0, 2, 0).is_err());
    }
}
