//! Area quadrature over the part of an exterior face outside its 2D fold.
//!
//! The face is projected onto the plane normal to its mean oriented normal.
//! There the projected map is a planar bilinear map whose Jacobian is affine
//! in `(s, t)`, and its boundary is four straight segments. Root counts only
//! change across those segments, so a quadtree cell that misses them is
//! decided by one inversion, and a boundary cell is cut line by line at the
//! exact segment crossings.

use nalgebra::{Vector2, Vector3};

use crate::basis::{gauss_legendre_1d, ParametricPoint, Point3, PARAMETRIC_EPS};
use crate::error::{Error, GeometryError};
use crate::mesh::{face_to_volume, FaceRef, Mesh};

use super::classify::{classify_element, DEFAULT_GRID, DEFAULT_REFINE};
use super::invert::{Bilinear2, Root2};
use super::region::FaceMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacePoint {
    pub x: Point3,
    /// Physical area weight.
    pub w: f64,
    /// Unit normal, outward where the element Jacobian is positive.
    pub normal: Vector3<f64>,
    /// Volume parametric coordinates of the positive-branch preimage.
    pub xi: ParametricPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceQuadrature {
    pub face: FaceRef,
    pub points: Vec<FacePoint>,
    pub depth: u32,
    /// Whether the face has a 2D fold and was integrated by the quadtree.
    pub folded: bool,
}

impl FaceQuadrature {
    pub fn area(&self) -> f64 {
        self.points.iter().map(|q| q.w).sum()
    }

    pub fn area_vector(&self) -> Vector3<f64> {
        self.points.iter().map(|q| q.normal * q.w).sum()
    }
}

/// Planar frame `(e1, e2, m)` with `e1 × e2 = m`, `m` along the face's mean
/// oriented normal.
fn frame(fm: &FaceMap) -> Option<(Vector3<f64>, Vector3<f64>)> {
    let m = fm.b.cross(&fm.c).try_normalize(0.0)?;
    let e1 = (fm.b - m * fm.b.dot(&m)).try_normalize(0.0)?;
    Some((e1, m.cross(&e1)))
}

fn project(fm: &FaceMap, e1: &Vector3<f64>, e2: &Vector3<f64>) -> Bilinear2 {
    let p = |v: &Vector3<f64>| Vector2::new(v.dot(e1), v.dot(e2));
    Bilinear2 {
        a: p(&fm.a),
        b: p(&fm.b),
        c: p(&fm.c),
        d: p(&fm.d),
    }
}

/// Whether the closed segment `p0 p1` meets the closed box `[lo, hi]`.
fn segment_hits(p0: &Vector2<f64>, p1: &Vector2<f64>, lo: &Vector2<f64>, hi: &Vector2<f64>) -> bool {
    let d = p1 - p0;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..2 {
        if d[k] == 0.0 {
            if p0[k] < lo[k] || p0[k] > hi[k] {
                return false;
            }
            continue;
        }
        let a = (lo[k] - p0[k]) / d[k];
        let b = (hi[k] - p0[k]) / d[k];
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
        if t0 > t1 {
            return false;
        }
    }
    true
}

struct Builder<'a> {
    fm: &'a FaceMap,
    face: usize,
    bl: Bilinear2,
    segs: [(Vector2<f64>, Vector2<f64>); 4],
    band: f64,
    max_depth: u32,
    rule: (Vec<f64>, Vec<f64>),
}

impl Builder<'_> {
    /// The unique positive preimage of a member point, `None` otherwise.
    fn member(&self, p: &Vector2<f64>) -> Option<Root2> {
        let roots = self.bl.invert(p, PARAMETRIC_EPS);
        if roots.iter().any(|r| r.det.abs() < self.band) {
            return None;
        }
        let mut pos = roots.iter().filter(|r| r.det > 0.0);
        let first = *pos.next()?;
        (pos.next().is_none() && roots.iter().all(|r| r.det > 0.0)).then_some(first)
    }

    /// Positive preimage of a point already known to be a member.
    fn positive_root(&self, p: &Vector2<f64>) -> Option<Root2> {
        self.bl
            .invert(p, 1e-9)
            .into_iter()
            .filter(|r| r.det > 0.0)
            .max_by(|a, b| a.det.total_cmp(&b.det))
    }

    fn push(&self, p: &Vector2<f64>, w_proj: f64, out: &mut Vec<FacePoint>) {
        let Some(r) = self.positive_root(p) else {
            return;
        };
        let (s, t) = (r.st.x, r.st.y);
        let da = self.fm.normal(s, t) * (w_proj / r.det);
        let w = da.norm();
        out.push(FacePoint {
            x: self.fm.eval(s, t),
            w,
            normal: da / w,
            xi: face_to_volume(self.face, s, t),
        });
    }

    fn cell(&self, lo: Vector2<f64>, hi: Vector2<f64>, level: u32, cand: &[usize], out: &mut Vec<FacePoint>) {
        let hits: Vec<usize> = cand
            .iter()
            .copied()
            .filter(|&i| segment_hits(&self.segs[i].0, &self.segs[i].1, &lo, &hi))
            .collect();
        if hits.is_empty() {
            self.uniform(&lo, &hi, out);
        } else if level < self.max_depth {
            let mid = (lo + hi) * 0.5;
            for k in 0..4 {
                let (mut clo, mut chi) = (lo, hi);
                for a in 0..2 {
                    if k >> a & 1 == 0 {
                        chi[a] = mid[a];
                    } else {
                        clo[a] = mid[a];
                    }
                }
                self.cell(clo, chi, level + 1, &hits, out);
            }
        } else {
            self.boundary(&lo, &hi, &hits, out);
        }
    }

    fn uniform(&self, lo: &Vector2<f64>, hi: &Vector2<f64>, out: &mut Vec<FacePoint>) {
        if self.member(&((lo + hi) * 0.5)).is_none() {
            return;
        }
        let h = (hi - lo) * 0.5;
        let (gx, gw) = &self.rule;
        for (xi, wi) in gx.iter().zip(gw) {
            for (xj, wj) in gx.iter().zip(gw) {
                let p = Vector2::new(lo.x + h.x * (xi + 1.0), lo.y + h.y * (xj + 1.0));
                self.push(&p, wi * wj * h.x * h.y, out);
            }
        }
    }

    /// Coordinates along axis `o` where the member length of a line along
    /// the other axis can kink: segment ends, segment exits through the
    /// cell sides and segment intersections.
    fn slab_breaks(&self, lo: &Vector2<f64>, hi: &Vector2<f64>, hits: &[usize], o: usize) -> Vec<f64> {
        let a = 1 - o;
        let mut br = vec![lo[o], hi[o]];
        for (k, &i) in hits.iter().enumerate() {
            let (p0, p1) = self.segs[i];
            br.extend([p0[o], p1[o]]);
            for side in [lo[a], hi[a]] {
                let (f0, f1) = (p0[a] - side, p1[a] - side);
                if f0 * f1 < 0.0 {
                    br.push(p0[o] + (p1[o] - p0[o]) * (f0 / (f0 - f1)));
                }
            }
            for &j in &hits[k + 1..] {
                let (q0, q1) = self.segs[j];
                let (d, e) = (p1 - p0, q1 - q0);
                let den = d.x * e.y - d.y * e.x;
                if den == 0.0 {
                    continue;
                }
                let w = q0 - p0;
                let u = (w.x * e.y - w.y * e.x) / den;
                let v = (w.x * d.y - w.y * d.x) / den;
                if (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v) {
                    br.push(p0[o] + d[o] * u);
                }
            }
        }
        let tiny = 1e-14 * (hi[o] - lo[o]);
        br.retain(|&c| c >= lo[o] && c <= hi[o]);
        br.sort_by(f64::total_cmp);
        br.dedup_by(|b, a| *b - *a <= tiny);
        br
    }

    /// Lines along the axis least parallel to the cell's segments, cut at
    /// their exact crossings. The cross direction is split into slabs in
    /// which the cut positions move linearly, so the rule stays exact for
    /// the area.
    fn boundary(&self, lo: &Vector2<f64>, hi: &Vector2<f64>, hits: &[usize], out: &mut Vec<FacePoint>) {
        let score = |a: usize| {
            hits.iter()
                .map(|&i| {
                    let d = self.segs[i].1 - self.segs[i].0;
                    d[1 - a].abs() / d.norm()
                })
                .fold(f64::INFINITY, f64::min)
        };
        let a = if score(0) >= score(1) { 0 } else { 1 };
        let o = 1 - a;
        let (gx, gw) = &self.rule;
        let tiny = 1e-14 * (hi[a] - lo[a]);
        let at = |r: f64, c: f64| {
            let mut p = Vector2::zeros();
            p[a] = r;
            p[o] = c;
            p
        };
        for slab in self.slab_breaks(lo, hi, hits, o).windows(2) {
            let ho = 0.5 * (slab[1] - slab[0]);
            if ho <= 0.0 {
                continue;
            }
            for (xo, wo) in gx.iter().zip(gw) {
                let c = slab[0] + ho * (xo + 1.0);
                let mut cuts = vec![lo[a], hi[a]];
                for &i in hits {
                    let (p0, p1) = self.segs[i];
                    let (f0, f1) = (p0[o] - c, p1[o] - c);
                    if f0 * f1 > 0.0 || f0 == f1 {
                        continue;
                    }
                    let pos = p0[a] + (p1[a] - p0[a]) * (f0 / (f0 - f1));
                    if pos > lo[a] && pos < hi[a] {
                        cuts.push(pos);
                    }
                }
                cuts.sort_by(f64::total_cmp);
                for w in cuts.windows(2) {
                    let (r0, r1) = (w[0], w[1]);
                    if r1 - r0 <= tiny || self.member(&at(0.5 * (r0 + r1), c)).is_none() {
                        continue;
                    }
                    let hl = 0.5 * (r1 - r0);
                    for (xl, wl) in gx.iter().zip(gw) {
                        self.push(&at(r0 + hl * (xl + 1.0), c), wo * ho * wl * hl, out);
                    }
                }
            }
        }
    }
}

/// Tensor Gauss rule over the whole face.
pub(crate) fn full_face(fm: &FaceMap, face: FaceRef, order: usize) -> Result<Vec<FacePoint>, Error> {
    let (gx, gw) = gauss_legendre_1d(order)?;
    let mut out = Vec::with_capacity(gx.len() * gx.len());
    for (t, wt) in gx.iter().zip(&gw) {
        for (s, ws) in gx.iter().zip(&gw) {
            let da = fm.normal(*s, *t) * (ws * wt);
            let w = da.norm();
            out.push(FacePoint {
                x: fm.eval(*s, *t),
                w,
                normal: da / w,
                xi: face_to_volume(face.face, *s, *t),
            });
        }
    }
    Ok(out)
}

/// Quadrature of one face map. A face whose projected Jacobian keeps one
/// sign gets the full tensor rule; otherwise the region outside the 2D fold
/// is integrated by a quadtree of `depth` levels.
pub fn face_quadrature(fm: &FaceMap, face: FaceRef, depth: u32, order: usize) -> Result<FaceQuadrature, Error> {
    let degenerate = GeometryError::DegenerateElement {
        element: face.element,
        face: face.face,
    };
    let (e1, e2) = frame(fm).ok_or(degenerate.clone())?;
    let bl = project(fm, &e1, &e2);
    let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    // the projected Jacobian is affine, so corner signs decide a sign change
    let folded = corners.iter().any(|&(s, t)| bl.det(s, t) < 0.0);
    if !folded {
        return Ok(FaceQuadrature {
            face,
            points: full_face(fm, face, order)?,
            depth,
            folded,
        });
    }
    let q = corners.map(|(s, t)| bl.eval(s, t));
    let lo = q.iter().fold(q[0], |m, p| m.inf(p));
    let hi = q.iter().fold(q[0], |m, p| m.sup(p));
    let diag = (hi - lo).norm();
    let b = Builder {
        fm,
        face: face.face,
        bl,
        segs: [(q[0], q[1]), (q[1], q[2]), (q[2], q[3]), (q[3], q[0])],
        band: 1e-8 * diag * diag,
        max_depth: depth,
        rule: gauss_legendre_1d(order)?,
    };
    let mut points = Vec::new();
    b.cell(lo, hi, 0, &[0, 1, 2, 3], &mut points);
    if points.is_empty() {
        return Err(degenerate.into());
    }
    Ok(FaceQuadrature {
        face,
        points,
        depth,
        folded,
    })
}

/// Quadrature of an exterior face. Faces of convex elements always get the
/// full tensor rule of `order`.
pub fn face_region_quadrature(mesh: &Mesh, face: FaceRef, depth: u32, order: usize) -> Result<FaceQuadrature, Error> {
    if !mesh.is_exterior(face) {
        return Err(GeometryError::NotExterior {
            element: face.element,
            face: face.face,
        }
        .into());
    }
    let g = mesh.geometry(face.element);
    let fm = FaceMap::of_element(&g, face.face);
    let concave = classify_element(&g, face.element, DEFAULT_GRID, DEFAULT_REFINE)?.is_concave();
    if !concave {
        return Ok(FaceQuadrature {
            face,
            points: full_face(&fm, face, order)?,
            depth,
            folded: false,
        });
    }
    face_quadrature(&fm, face, depth, order)
}
