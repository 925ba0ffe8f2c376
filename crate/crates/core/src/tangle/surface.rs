//! Triangulated image of the `detJ = 0` surface, for inspection only.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::Vector3;

use crate::basis::{HexGeometry, ParametricPoint, Point3};
use crate::error::GeometryError;
use crate::mesh::Mesh;

use super::classify::{classify_element, DEFAULT_GRID, DEFAULT_REFINE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldTriangle {
    pub x: [Point3; 3],
    pub xi: [ParametricPoint; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldSurface {
    pub element: usize,
    pub triangles: Vec<FoldTriangle>,
    pub resolution: usize,
}

impl FoldSurface {
    /// One triangle per line: the three physical vertices, 9 reals.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.triangles {
            let v: Vec<String> = t.x.iter().flat_map(|p| p.iter().map(|c| format!("{c:.17e}"))).collect();
            let _ = writeln!(s, "{}", v.join(" "));
        }
        s
    }

    /// Largest `|detJ|` over all triangle vertices.
    pub fn max_vertex_det(&self, g: &HexGeometry) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| t.xi.iter())
            .map(|xi| g.det_j(xi).abs())
            .fold(0.0, f64::max)
    }
}

/// The six tetrahedra of a cube sharing the diagonal from corner 0 to 7,
/// with corner `k` at offset `(k & 1, k >> 1 & 1, k >> 2 & 1)`.
const TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 3, 2, 7],
    [0, 2, 6, 7],
    [0, 6, 4, 7],
    [0, 4, 5, 7],
    [0, 5, 1, 7],
];

/// Root of `detJ` on the segment from `a` (value `fa`) to `b` (value `fb`),
/// which have opposite signs. Illinois regula falsi keeps the bracket.
fn polish(g: &HexGeometry, a: ParametricPoint, fa: f64, b: ParametricPoint, fb: f64, tol: f64) -> ParametricPoint {
    let (mut t0, mut f0, mut t1, mut f1) = (0.0, fa, 1.0, fb);
    let mut side = 0i8;
    let mut t = 0.5;
    for _ in 0..200 {
        t = (t0 * f1 - t1 * f0) / (f1 - f0);
        if !(t > t0 && t < t1) {
            t = 0.5 * (t0 + t1);
        }
        let f = g.det_j(&(a + (b - a) * t));
        if f.abs() <= tol || t1 - t0 <= f64::EPSILON {
            break;
        }
        if (f > 0.0) == (f0 > 0.0) {
            t0 = t;
            f0 = f;
            if side == -1 {
                f1 *= 0.5;
            }
            side = -1;
        } else {
            t1 = t;
            f1 = f;
            if side == 1 {
                f0 *= 0.5;
            }
            side = 1;
        }
    }
    a + (b - a) * t
}

/// Marching tetrahedra over a `resolution³` lattice of the reference cube.
/// Vertices are polished along lattice edges to `|detJ| ≤ 1e-12·scale³`;
/// triangles face the positive side in parametric space.
pub fn fold_surface_in(g: &HexGeometry, element: usize, resolution: usize) -> Result<FoldSurface, GeometryError> {
    if resolution == 0 {
        return Err(GeometryError::InvalidArgument("resolution must be positive".into()));
    }
    let class = classify_element(g, element, DEFAULT_GRID, DEFAULT_REFINE)?;
    let mut surface = FoldSurface {
        element,
        triangles: Vec::new(),
        resolution,
    };
    if !class.is_concave() {
        return Ok(surface);
    }
    let n = resolution;
    let tol = 1e-12 * g.scale().powi(3);
    let node = |i: usize, j: usize, k: usize| i + (n + 1) * (j + (n + 1) * k);
    let xi_of = |id: usize| {
        let (i, j, k) = (id % (n + 1), id / (n + 1) % (n + 1), id / ((n + 1) * (n + 1)));
        Vector3::new(i, j, k).map(|v| -1.0 + 2.0 * v as f64 / n as f64)
    };
    let det: Vec<f64> = (0..(n + 1).pow(3)).map(|id| g.det_j(&xi_of(id))).collect();
    // zero counts as positive so every sign change is strict
    let pos = |id: usize| det[id] >= 0.0;
    let mut cut: HashMap<(usize, usize), ParametricPoint> = HashMap::new();
    let mut vertex = |a: usize, b: usize| {
        let key = (a.min(b), a.max(b));
        *cut.entry(key).or_insert_with(|| {
            let (p, q) = key;
            polish(g, xi_of(p), det[p], xi_of(q), det[q], tol)
        })
    };

    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let corner: [usize; 8] =
                    std::array::from_fn(|c| node(i + (c & 1), j + (c >> 1 & 1), k + (c >> 2 & 1)));
                for tet in TETS {
                    let v = tet.map(|c| corner[c]);
                    let (inside, outside): (Vec<usize>, Vec<usize>) = v.iter().partition(|&&id| pos(id));
                    let mut tris: Vec<[ParametricPoint; 3]> = Vec::new();
                    match (inside.len(), outside.len()) {
                        (1, 3) | (3, 1) => {
                            let (lone, rest) = if inside.len() == 1 { (inside[0], &outside) } else { (outside[0], &inside) };
                            tris.push([vertex(lone, rest[0]), vertex(lone, rest[1]), vertex(lone, rest[2])]);
                        }
                        (2, 2) => {
                            let q = [
                                vertex(inside[0], outside[0]),
                                vertex(inside[0], outside[1]),
                                vertex(inside[1], outside[1]),
                                vertex(inside[1], outside[0]),
                            ];
                            tris.push([q[0], q[1], q[2]]);
                            tris.push([q[0], q[2], q[3]]);
                        }
                        _ => {}
                    }
                    if tris.is_empty() {
                        continue;
                    }
                    let centre_pos = inside.iter().map(|&id| xi_of(id)).sum::<Vector3<f64>>() / inside.len() as f64;
                    for mut t in tris {
                        let normal = (t[1] - t[0]).cross(&(t[2] - t[0]));
                        if normal.dot(&(centre_pos - t[0])) < 0.0 {
                            t.swap(1, 2);
                        }
                        surface.triangles.push(FoldTriangle {
                            x: t.map(|xi| g.map(&xi)),
                            xi: t,
                        });
                    }
                }
            }
        }
    }
    Ok(surface)
}

pub fn extract_fold_surface(mesh: &Mesh, element: usize, resolution: usize) -> Result<FoldSurface, GeometryError> {
    fold_surface_in(&mesh.geometry(element), element, resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_two_element;

    #[test]
    fn convex_element_has_no_surface() {
        let m = gen_two_element(0.3).unwrap();
        assert!(extract_fold_surface(&m, 1, 8).unwrap().triangles.is_empty());
    }

    #[test]
    fn vertices_lie_on_the_surface() {
        let m = gen_two_element(0.3).unwrap();
        let g = m.geometry(0);
        let s = extract_fold_surface(&m, 0, 12).unwrap();
        assert!(!s.triangles.is_empty());
        assert!(s.max_vertex_det(&g) <= 1e-12 * g.scale().powi(3));
        for t in &s.triangles {
            for (x, xi) in t.x.iter().zip(&t.xi) {
                assert!((g.map(xi) - x).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn triangle_count_grows_with_resolution() {
        let m = gen_two_element(0.2).unwrap();
        let counts: Vec<usize> = [4, 8, 16]
            .iter()
            .map(|&r| extract_fold_surface(&m, 0, r).unwrap().triangles.len())
            .collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    }

    #[test]
    fn export_has_nine_reals_per_line() {
        let m = gen_two_element(0.3).unwrap();
        let s = extract_fold_surface(&m, 0, 4).unwrap();
        let text = s.to_text();
        assert_eq!(text.lines().count(), s.triangles.len());
        for line in text.lines() {
            let v: Vec<f64> = line.split(' ').map(|t| t.parse().unwrap()).collect();
            assert_eq!(v.len(), 9);
        }
    }

    #[test]
    fn zero_resolution_is_rejected() {
        let m = gen_two_element(0.3).unwrap();
        assert!(extract_fold_surface(&m, 0, 0).is_err());
    }
}
