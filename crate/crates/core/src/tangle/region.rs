//! Quadrature over the region of a concave element outside its fold.
//!
//! The element's bounding box is split into an octree. A cell that meets no
//! face image and no image of the `detJ = 0` surface has a constant root
//! count, so one inversion at its centre decides membership for the whole
//! cell and a tensor Gauss rule integrates it. Cells that still meet a face
//! at the maximum depth are integrated line by line: each quadrature line is
//! cut at its exact crossings with the face images and Gauss points are
//! placed on the segments that belong to the region.

use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;

use crate::basis::{gauss_legendre_1d, gauss_rule, HexGeometry, ParametricPoint, Point3};
use crate::error::{BasisError, Error, GeometryError};
use crate::mesh::{face_to_volume, Mesh, FACE_CORNERS};

use super::classify::{classify_element, DEFAULT_GRID, DEFAULT_REFINE};
use super::invert::{Bilinear2, Inverter, RootSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub x: Point3,
    /// Physical volume weight.
    pub w: f64,
    /// Positive-branch preimage of `x`.
    pub xi_plus: ParametricPoint,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RegionStats {
    pub uniform_cells: usize,
    pub boundary_cells: usize,
    pub inversions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionQuadrature {
    pub element: usize,
    pub points: Vec<QuadPoint>,
    pub depth: u32,
    pub cell_order: usize,
    pub stats: RegionStats,
}

impl RegionQuadrature {
    pub fn volume(&self) -> f64 {
        self.points.iter().map(|q| q.w).sum()
    }
}

/// Physical image of a local face, `X(s, t) = a + b s + c t + d s t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceMap {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub c: Vector3<f64>,
    pub d: Vector3<f64>,
}

impl FaceMap {
    pub fn from_corners(x: [Point3; 4]) -> Self {
        FaceMap {
            a: (x[0] + x[1] + x[2] + x[3]) * 0.25,
            b: (-x[0] + x[1] + x[2] - x[3]) * 0.25,
            c: (-x[0] - x[1] + x[2] + x[3]) * 0.25,
            d: (x[0] - x[1] + x[2] - x[3]) * 0.25,
        }
    }

    pub fn of_element(g: &HexGeometry, face: usize) -> Self {
        Self::from_corners(FACE_CORNERS[face].map(|c| g.nodes[c]))
    }

    pub fn eval(&self, s: f64, t: f64) -> Point3 {
        self.a + self.b * s + self.c * t + self.d * (s * t)
    }

    /// `X_s × X_t`; outward where the element's `detJ` is positive.
    pub fn normal(&self, s: f64, t: f64) -> Vector3<f64> {
        (self.b + self.d * t).cross(&(self.c + self.d * s))
    }

    /// The map seen along coordinate axis `axis`, in the other two axes.
    pub fn project(&self, axis: usize) -> Bilinear2 {
        let (i, j) = other_axes(axis);
        let p = |v: &Vector3<f64>| Vector2::new(v[i], v[j]);
        Bilinear2 {
            a: p(&self.a),
            b: p(&self.b),
            c: p(&self.c),
            d: p(&self.d),
        }
    }
}

pub(crate) fn other_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    }
}

#[derive(Debug, Clone, Copy)]
struct FacePatch {
    face: u8,
    level: u8,
    s: (f64, f64),
    t: (f64, f64),
    lo: Point3,
    hi: Point3,
}

#[derive(Debug, Clone, Copy)]
struct FoldPatch {
    level: u8,
    lo_xi: ParametricPoint,
    hi_xi: ParametricPoint,
    lo: Point3,
    hi: Point3,
}

const MAX_FACE_LEVEL: u8 = 18;
const MAX_FOLD_LEVEL: u8 = 12;

fn overlaps(lo: &Point3, hi: &Point3, clo: &Point3, chi: &Point3) -> bool {
    (0..3).all(|k| lo[k] < chi[k] && hi[k] > clo[k])
}

fn extent(lo: &Point3, hi: &Point3) -> f64 {
    (hi - lo).amax()
}

struct Builder<'a> {
    g: &'a HexGeometry,
    faces: [FaceMap; 6],
    inv: Inverter,
    max_depth: u32,
    cell_rule: (Vec<ParametricPoint>, Vec<f64>),
    outer: (Vec<f64>, Vec<f64>),
    outer_fine: (Vec<f64>, Vec<f64>),
    line: (Vec<f64>, Vec<f64>),
    /// Smallest `|n_axis| / |n|` over each face.
    axis_score: [[f64; 3]; 6],
}

#[derive(Default)]
struct Out {
    points: Vec<QuadPoint>,
    stats: RegionStats,
}

impl Builder<'_> {
    fn face_patch(&self, face: u8, level: u8, s: (f64, f64), t: (f64, f64)) -> FacePatch {
        let m = &self.faces[face as usize];
        let corners = [m.eval(s.0, t.0), m.eval(s.1, t.0), m.eval(s.1, t.1), m.eval(s.0, t.1)];
        let lo = corners.iter().fold(Vector3::repeat(f64::INFINITY), |a, c| a.inf(c));
        let hi = corners.iter().fold(Vector3::repeat(f64::NEG_INFINITY), |a, c| a.sup(c));
        FacePatch {
            face,
            level,
            s,
            t,
            lo,
            hi,
        }
    }

    fn fold_patch(&self, level: u8, lo_xi: ParametricPoint, hi_xi: ParametricPoint) -> Option<FoldPatch> {
        let (dl, dh) = self.g.det_j_bounds(&lo_xi, &hi_xi);
        if dl > 0.0 || dh < 0.0 {
            return None;
        }
        let (lo, hi) = self.g.image_bounds(&lo_xi, &hi_xi);
        Some(FoldPatch {
            level,
            lo_xi,
            hi_xi,
            lo,
            hi,
        })
    }

    fn initial_patches(&self) -> (Vec<FacePatch>, Vec<FoldPatch>) {
        let mut faces = Vec::new();
        let n = 8;
        for face in 0..6u8 {
            for i in 0..n {
                for j in 0..n {
                    let s = (-1.0 + 2.0 * i as f64 / n as f64, -1.0 + 2.0 * (i + 1) as f64 / n as f64);
                    let t = (-1.0 + 2.0 * j as f64 / n as f64, -1.0 + 2.0 * (j + 1) as f64 / n as f64);
                    faces.push(self.face_patch(face, 3, s, t));
                }
            }
        }
        let mut folds = Vec::new();
        let n = 8;
        let h = 2.0 / n as f64;
        for idx in 0..n * n * n {
            let ijk = [idx % n, (idx / n) % n, idx / (n * n)];
            let lo = Vector3::from_fn(|k, _| -1.0 + h * ijk[k] as f64);
            if let Some(p) = self.fold_patch(3, lo, lo + Vector3::repeat(h)) {
                folds.push(p);
            }
        }
        (faces, folds)
    }

    fn refine_faces(&self, patches: &[FacePatch], clo: &Point3, chi: &Point3) -> Vec<FacePatch> {
        let size = extent(clo, chi);
        let mut out = Vec::new();
        let mut stack: Vec<FacePatch> = patches.to_vec();
        while let Some(p) = stack.pop() {
            if !overlaps(&p.lo, &p.hi, clo, chi) {
                continue;
            }
            if extent(&p.lo, &p.hi) > size && p.level < MAX_FACE_LEVEL {
                let sm = 0.5 * (p.s.0 + p.s.1);
                let tm = 0.5 * (p.t.0 + p.t.1);
                for s in [(p.s.0, sm), (sm, p.s.1)] {
                    for t in [(p.t.0, tm), (tm, p.t.1)] {
                        stack.push(self.face_patch(p.face, p.level + 1, s, t));
                    }
                }
            } else {
                out.push(p);
            }
        }
        out
    }

    fn refine_folds(&self, patches: &[FoldPatch], clo: &Point3, chi: &Point3) -> Vec<FoldPatch> {
        let size = extent(clo, chi);
        let mut out = Vec::new();
        let mut stack: Vec<FoldPatch> = patches.to_vec();
        while let Some(p) = stack.pop() {
            if !overlaps(&p.lo, &p.hi, clo, chi) {
                continue;
            }
            if extent(&p.lo, &p.hi) > size && p.level < MAX_FOLD_LEVEL {
                let mid = (p.lo_xi + p.hi_xi) * 0.5;
                for k in 0..8 {
                    let mut lo = p.lo_xi;
                    let mut hi = p.hi_xi;
                    for a in 0..3 {
                        if k >> a & 1 == 0 {
                            hi[a] = mid[a];
                        } else {
                            lo[a] = mid[a];
                        }
                    }
                    if let Some(c) = self.fold_patch(p.level + 1, lo, hi) {
                        stack.push(c);
                    }
                }
            } else {
                out.push(p);
            }
        }
        out
    }

    fn invert(&self, x: &Point3, out: &mut Out) -> Result<RootSet, GeometryError> {
        out.stats.inversions += 1;
        self.inv.invert(x)
    }

    /// Positive root of a member point, warm-started from `seed`.
    fn xi_plus(&self, x: &Point3, seed: &ParametricPoint, _out: &mut Out) -> Result<Option<ParametricPoint>, GeometryError> {
        self.inv.member_root(x, seed)
    }

    fn cell(
        &self,
        lo: Point3,
        hi: Point3,
        depth: u32,
        faces: &[FacePatch],
        folds: &[FoldPatch],
        out: &mut Out,
    ) -> Result<(), GeometryError> {
        let faces = self.refine_faces(faces, &lo, &hi);
        let folds = self.refine_folds(folds, &lo, &hi);
        if faces.is_empty() && folds.is_empty() {
            return self.uniform(&lo, &hi, out);
        }
        if depth < self.max_depth {
            for (clo, chi) in children(&lo, &hi) {
                self.cell(clo, chi, depth + 1, &faces, &folds, out)?;
            }
            return Ok(());
        }
        self.boundary(&lo, &hi, &faces, !folds.is_empty(), out)
    }

    fn uniform(&self, lo: &Point3, hi: &Point3, out: &mut Out) -> Result<(), GeometryError> {
        out.stats.uniform_cells += 1;
        let centre = (lo + hi) * 0.5;
        let rs = self.invert(&centre, out)?;
        if !rs.is_member() {
            return Ok(());
        }
        let Some(root) = rs.positive() else {
            return Ok(());
        };
        let half = (hi - lo) * 0.5;
        let scale = half.x * half.y * half.z;
        let mut seed = root.xi;
        for (r, w) in self.cell_rule.0.iter().zip(&self.cell_rule.1) {
            let x = centre + half.component_mul(r);
            if let Some(xi) = self.xi_plus(&x, &seed, out)? {
                seed = xi;
                out.points.push(QuadPoint {
                    x,
                    w: w * scale,
                    xi_plus: xi,
                });
            }
        }
        Ok(())
    }

    /// Line axis for a cell. Faces that are nearly flat get one axis over
    /// their whole extent, so neighbouring cells agree and their clipped
    /// lines join up; curved faces fall back to local patch normals.
    fn choose_axis(&self, faces: &[usize], patches: &[FacePatch]) -> usize {
        let best_of = |score: &dyn Fn(usize) -> f64| {
            (0..3).map(|axis| (score(axis), axis)).fold((f64::NEG_INFINITY, 2), |b, c| if c.0 > b.0 { c } else { b })
        };
        let global = best_of(&|axis| faces.iter().map(|&f| self.axis_score[f][axis]).fold(f64::INFINITY, f64::min));
        if global.0 >= FLAT_FACE_SCORE {
            return global.1;
        }
        best_of(&|axis| {
            patches
                .iter()
                .map(|p| {
                    let n = self.faces[p.face as usize].normal(0.5 * (p.s.0 + p.s.1), 0.5 * (p.t.0 + p.t.1));
                    let len = n.norm();
                    if len > 0.0 {
                        n[axis].abs() / len
                    } else {
                        0.0
                    }
                })
                .fold(f64::INFINITY, f64::min)
        })
        .1
    }

    /// Crossings of the axis-parallel line through `x0` with the given faces,
    /// strictly between `r0` and `r1` along `axis`, sorted by position.
    /// The flag is false when a crossing is too close to a tangency or to
    /// the fold surface for its count change to be trusted.
    fn crossings(&self, faces: &[usize], axis: usize, x0: &Point3, r0: f64, r1: f64) -> (Vec<Crossing>, bool) {
        let (i, j) = other_axes(axis);
        let (lo, hi) = (r0.min(r1), r0.max(r1));
        let scale2 = self.g.scale() * self.g.scale();
        let band = self.inv.options().band;
        let mut out = Vec::new();
        let mut trusted = true;
        for &f in faces {
            let fm = &self.faces[f];
            for r in fm.project(axis).invert(&Vector2::new(x0[i], x0[j]), 1e-12) {
                let pos = fm.eval(r.st.x, r.st.y)[axis];
                if !(pos > lo && pos < hi) {
                    continue;
                }
                let xi = face_to_volume(f, r.st.x, r.st.y);
                let det = self.g.det_j(&xi);
                if r.det.abs() <= 1e-10 * scale2 || det.abs() <= band {
                    trusted = false;
                }
                out.push(Crossing {
                    pos,
                    change: if fm.normal(r.st.x, r.st.y)[axis] > 0.0 { -1 } else { 1 },
                    sign: if det > 0.0 { 1 } else { -1 },
                    xi,
                });
            }
        }
        out.sort_by(|a, b| a.pos.total_cmp(&b.pos));
        (out, trusted)
    }

    /// Root counts carried from `x0` to `x0 + (to − x0[axis]) e_axis`.
    fn carry(&self, counts: Option<(i32, i32)>, faces: &[usize], axis: usize, x0: &Point3, to: f64) -> Option<(i32, i32)> {
        let mut c = counts?;
        let (cross, trusted) = self.crossings(faces, axis, x0, x0[axis], to);
        if !trusted {
            return None;
        }
        let forward = to > x0[axis];
        for cr in &cross {
            c = cr.apply(c, forward)?;
        }
        Some(c)
    }

    fn boundary(
        &self,
        lo: &Point3,
        hi: &Point3,
        patches: &[FacePatch],
        has_fold: bool,
        out: &mut Out,
    ) -> Result<(), GeometryError> {
        out.stats.boundary_cells += 1;
        let mut faces: Vec<usize> = patches.iter().map(|p| p.face as usize).collect();
        faces.sort_unstable();
        faces.dedup();
        let axis = if faces.is_empty() { 2 } else { self.choose_axis(&faces, patches) };
        let (ib, ic) = other_axes(axis);

        let centre = (lo + hi) * 0.5;
        let mut centre_seed = None;
        let centre_counts = if has_fold {
            None
        } else {
            let rs = self.invert(&centre, out)?;
            centre_seed = rs.positive().map(|r| r.xi);
            (!rs.ambiguous).then(|| (rs.n_plus() as i32, rs.n_minus() as i32))
        };

        // cells touching several faces see the creases between them
        let (nodes, weights) = if faces.len() >= 2 { &self.outer_fine } else { &self.outer };
        for (ub, wb) in nodes.iter().zip(weights) {
            let pb = centre[ib] + 0.5 * (hi[ib] - lo[ib]) * ub;
            // counts at (pb, centre[ic], centre[axis])
            let along_b = self.carry(centre_counts, &faces, ib, &centre, pb);
            let mut x1 = centre;
            x1[ib] = pb;
            for (uc, wc) in nodes.iter().zip(weights) {
                let pc = centre[ic] + 0.5 * (hi[ic] - lo[ic]) * uc;
                let w_bc = 0.25 * (hi[ib] - lo[ib]) * (hi[ic] - lo[ic]) * wb * wc;
                let mut base = self.carry(along_b, &faces, ic, &x1, pc);
                let mut x2 = x1;
                x2[ic] = pc;

                let (cross, trusted) = self.crossings(&faces, axis, &x2, lo[axis], hi[axis]);
                if !trusted {
                    base = None;
                }
                let mut cuts = Vec::with_capacity(cross.len() + 2);
                cuts.push(lo[axis]);
                cuts.extend(cross.iter().map(|c| c.pos));
                cuts.push(hi[axis]);
                let nseg = cuts.len() - 1;

                // counts per segment, carried both ways from the middle
                let mut seg: Vec<Option<(i32, i32)>> = vec![None; nseg];
                if let Some(b) = base {
                    let k0 = cuts[1..].iter().position(|&c| c > centre[axis]).unwrap_or(nseg - 1);
                    seg[k0] = Some(b);
                    for k in k0 + 1..nseg {
                        seg[k] = seg[k - 1].and_then(|c| cross[k - 1].apply(c, true));
                    }
                    for k in (0..k0).rev() {
                        seg[k] = seg[k + 1].and_then(|c| cross[k].apply(c, false));
                    }
                }

                let point = |a: f64| {
                    let mut x = x2;
                    x[axis] = a;
                    x
                };
                let mut seed = centre_seed;
                for k in 0..nseg {
                    let (a0, a1) = (cuts[k], cuts[k + 1]);
                    if k > 0 && cross[k - 1].change == 1 && cross[k - 1].sign > 0 {
                        seed = Some(cross[k - 1].xi);
                    }
                    if a1 - a0 <= 1e-14 * self.g.scale() {
                        continue;
                    }
                    let counts = match seg[k] {
                        Some(c) => Some(c),
                        None => {
                            let rs = self.invert(&point(0.5 * (a0 + a1)), out)?;
                            if rs.positive().is_some() {
                                seed = rs.positive().map(|r| r.xi);
                            }
                            (!rs.ambiguous).then(|| (rs.n_plus() as i32, rs.n_minus() as i32))
                        }
                    };
                    if counts != Some((1, 0)) {
                        continue;
                    }
                    let (ln, lw) = &self.line;
                    for (ua, wa) in ln.iter().zip(lw) {
                        let a = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * ua;
                        let x = point(a);
                        let start = seed.unwrap_or_else(Vector3::zeros);
                        if let Some(xi) = self.xi_plus(&x, &start, out)? {
                            seed = Some(xi);
                            out.points.push(QuadPoint {
                                x,
                                w: w_bc * 0.5 * (a1 - a0) * wa,
                                xi_plus: xi,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// A line crossing a face image. Moving in the `+axis` direction, the net
/// count changes by `change` and a root of sign `sign` enters or leaves.
#[derive(Debug, Clone, Copy)]
struct Crossing {
    pos: f64,
    change: i32,
    sign: i8,
    xi: ParametricPoint,
}

impl Crossing {
    fn apply(&self, (np, nm): (i32, i32), forward: bool) -> Option<(i32, i32)> {
        let eff = if forward { self.change } else { -self.change };
        let next = if self.sign > 0 { (np + eff, nm) } else { (np, nm - eff) };
        (next.0 >= 0 && next.1 >= 0).then_some(next)
    }
}

fn children(lo: &Point3, hi: &Point3) -> [(Point3, Point3); 8] {
    let mid = (lo + hi) * 0.5;
    std::array::from_fn(|k| {
        let mut clo = *lo;
        let mut chi = *hi;
        for a in 0..3 {
            if k >> a & 1 == 0 {
                chi[a] = mid[a];
            } else {
                clo[a] = mid[a];
            }
        }
        (clo, chi)
    })
}

/// Region quadrature for one element geometry. `cell_order` is the Gauss
/// order of interior cells and of the lines through boundary cells.
pub fn region_quadrature_in(
    g: &HexGeometry,
    element: usize,
    depth: u32,
    cell_order: usize,
) -> Result<RegionQuadrature, Error> {
    if depth < 2 {
        return Err(GeometryError::DepthTooSmall { element, depth }.into());
    }
    let class = classify_element(g, element, DEFAULT_GRID, DEFAULT_REFINE)?;
    if !class.is_concave() {
        return Err(GeometryError::NotConcave(element).into());
    }
    let rule = gauss_rule(cell_order)?;
    let faces: [FaceMap; 6] = std::array::from_fn(|f| FaceMap::of_element(g, f));
    let axis_score = std::array::from_fn(|f| axis_scores(&faces[f]));
    let b = Builder {
        g,
        faces,
        axis_score,
        inv: Inverter::new(g),
        max_depth: depth,
        cell_rule: (rule.points, rule.weights),
        outer: gauss_legendre_1d(cell_order)?,
        outer_fine: composite_gauss(cell_order, EDGE_OUTER_SPLIT)?,
        line: gauss_legendre_1d(cell_order)?,
    };
    let (faces, folds) = b.initial_patches();
    let (lo, hi) = g.bounds();
    // second-level cells are independent; results are concatenated in cell order
    let cells: Vec<(Point3, Point3)> = children(&lo, &hi)
        .iter()
        .flat_map(|(l, h)| children(l, h))
        .collect();
    let parts: Vec<Result<Out, GeometryError>> = cells
        .par_iter()
        .map(|(clo, chi)| {
            let mut out = Out::default();
            let f = b.refine_faces(&faces, clo, chi);
            let d = b.refine_folds(&folds, clo, chi);
            b.cell(*clo, *chi, 2, &f, &d, &mut out)?;
            Ok(out)
        })
        .collect();
    let mut points = Vec::new();
    let mut stats = RegionStats::default();
    for p in parts {
        let p = p?;
        points.extend(p.points);
        stats.uniform_cells += p.stats.uniform_cells;
        stats.boundary_cells += p.stats.boundary_cells;
        stats.inversions += p.stats.inversions;
    }
    if points.is_empty() {
        return Err(GeometryError::DepthTooSmall { element, depth }.into());
    }
    Ok(RegionQuadrature {
        element,
        points,
        depth,
        cell_order,
        stats,
    })
}

pub fn concave_region_quadrature(
    mesh: &Mesh,
    element: usize,
    depth: u32,
    cell_order: usize,
) -> Result<RegionQuadrature, Error> {
    region_quadrature_in(&mesh.geometry(element), element, depth, cell_order)
}

/// Faces whose normal keeps at least this component along one axis.
const FLAT_FACE_SCORE: f64 = 0.5;

fn axis_scores(fm: &FaceMap) -> [f64; 3] {
    const N: usize = 8;
    let mut score = [f64::INFINITY; 3];
    for i in 0..=N {
        for j in 0..=N {
            let n = fm.normal(2.0 * i as f64 / N as f64 - 1.0, 2.0 * j as f64 / N as f64 - 1.0);
            let len = n.norm();
            for (axis, sc) in score.iter_mut().enumerate() {
                *sc = sc.min(if len > 0.0 { n[axis].abs() / len } else { 0.0 });
            }
        }
    }
    score
}

/// Outer-rule subdivision for cells that meet more than one element face.
const EDGE_OUTER_SPLIT: usize = 4;

/// Gauss rule on [-1, 1] repeated over `k` equal subintervals.
fn composite_gauss(order: usize, k: usize) -> Result<(Vec<f64>, Vec<f64>), BasisError> {
    let (u, w) = gauss_legendre_1d(order)?;
    let h = 1.0 / k as f64;
    let mut nodes = Vec::with_capacity(k * u.len());
    let mut weights = Vec::with_capacity(k * u.len());
    for j in 0..k {
        let mid = -1.0 + (2 * j + 1) as f64 * h;
        for (a, b) in u.iter().zip(&w) {
            nodes.push(mid + a * h);
            weights.push(b * h);
        }
    }
    Ok((nodes, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_two_element;

    #[test]
    fn face_map_matches_corners() {
        let m = gen_two_element(0.3).unwrap();
        let g = m.geometry(0);
        for f in 0..6 {
            let fm = FaceMap::of_element(&g, f);
            for (k, (s, t)) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)].iter().enumerate() {
                assert!((fm.eval(*s, *t) - g.nodes[FACE_CORNERS[f][k]]).norm() < 1e-15);
                assert!((g.map(&face_to_volume(f, *s, *t)) - fm.eval(*s, *t)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_convex_and_shallow() {
        let m = gen_two_element(0.3).unwrap();
        assert!(matches!(
            concave_region_quadrature(&m, 1, 4, 2),
            Err(Error::Geometry(GeometryError::NotConcave(1)))
        ));
        assert!(matches!(
            concave_region_quadrature(&m, 0, 1, 2),
            Err(Error::Geometry(GeometryError::DepthTooSmall { .. }))
        ));
    }

    #[test]
    fn volume_matches_signed_volume() {
        let m = gen_two_element(0.3).unwrap();
        let g = m.geometry(0);
        let rq = concave_region_quadrature(&m, 0, 4, 2).unwrap();
        let v = g.signed_volume();
        assert!((rq.volume() - v).abs() < 0.02 * v, "{} vs {}", rq.volume(), v);
        for q in &rq.points {
            assert!(g.det_j(&q.xi_plus) > 0.0);
            assert!((g.map(&q.xi_plus) - q.x).norm() < 1e-10);
        }
    }
}
