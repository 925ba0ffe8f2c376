//! All-roots inversion of the trilinear map, and of 2D bilinear maps.
//!
//! A point inside a fold has several parametric preimages. The trilinear
//! solver finds all of them: parametric boxes whose image bounds exclude the
//! target are discarded (a multilinear map attains its extremes at box
//! corners, so the bounds are exact), survivors are subdivided, and damped
//! Newton polishes a candidate inside each sufficiently small box.

use nalgebra::{Matrix2, Vector2, Vector3};

use crate::basis::{in_reference_cube, HexGeometry, ParametricPoint, Point3, PARAMETRIC_EPS};
use crate::error::GeometryError;

/// One preimage of a physical point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub xi: ParametricPoint,
    /// +1 on the positive-Jacobian branch, −1 on the negative one.
    pub sign: i8,
    pub det_j: f64,
}

/// Every parametric preimage of `target` inside the reference cube.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub target: Point3,
    pub roots: Vec<Root>,
    /// Some root lies within the detJ ambiguity band of the fold surface,
    /// or on the boundary of the reference cube.
    pub ambiguous: bool,
}

impl RootSet {
    pub fn n_plus(&self) -> usize {
        self.roots.iter().filter(|r| r.sign > 0).count()
    }

    pub fn n_minus(&self) -> usize {
        self.roots.iter().filter(|r| r.sign < 0).count()
    }

    /// Exactly one positive root and no negative root: the point belongs to
    /// the element's region outside its fold.
    pub fn is_member(&self) -> bool {
        !self.ambiguous && self.n_minus() == 0 && self.n_plus() == 1
    }

    /// Both branches present: the point lies in the element's fold.
    pub fn in_fold(&self) -> bool {
        !self.ambiguous && self.n_plus() == 1 && self.n_minus() == 1
    }

    pub fn positive(&self) -> Option<&Root> {
        self.roots.iter().find(|r| r.sign > 0)
    }

    pub fn negative(&self) -> Option<&Root> {
        self.roots.iter().find(|r| r.sign < 0)
    }
}

/// Tolerances of the trilinear inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvertOptions {
    /// Absolute tolerance on `‖x(ξ) − p‖`.
    pub tol: f64,
    /// Roots closer than this (max-norm, parametric) are merged.
    pub dedup: f64,
    pub max_newton: usize,
    /// Roots with `|detJ|` below this are flagged ambiguous.
    pub band: f64,
    /// Roots within this of a reference-cube face are flagged ambiguous.
    pub edge: f64,
}

impl InvertOptions {
    pub fn for_element(g: &HexGeometry) -> Self {
        let s = g.scale();
        InvertOptions {
            tol: 1e-12 * s,
            dedup: 1e-8,
            max_newton: 50,
            band: 1e-8 * s.powi(3),
            edge: 1e-10,
        }
    }
}

const MIN_DEPTH: u32 = 2;
const MAX_DEPTH: u32 = 8;

enum Krawczyk {
    /// No root in the box.
    Empty,
    /// Exactly one root in the box.
    Unique,
    Unknown,
}

/// Krawczyk test of `x(ξ) = p` on a parametric box.
///
/// `K = c − Y f(c) + (I − Y J(X)) (X − c)` with `Y = J(c)⁻¹`: `K ∩ X = ∅`
/// excludes a root, `K ⊂ int X` proves a unique one.
fn krawczyk(g: &HexGeometry, p: &Point3, lo: &ParametricPoint, hi: &ParametricPoint) -> Krawczyk {
    let c = (lo + hi) * 0.5;
    let r = (hi - lo) * 0.5;
    let Some(y) = g.jacobian_matrix(&c).try_inverse() else {
        return Krawczyk::Unknown;
    };
    let step = y * (g.map(&c) - p);
    let jb = g.jacobian_bounds(lo, hi);
    let mut inside = true;
    for i in 0..3 {
        let mut spread = 0.0;
        for j in 0..3 {
            // (Y J(X))_ij = Σ_a Y_ia ∂x_a/∂ξ_j
            let mut lo_ij = 0.0;
            let mut hi_ij = 0.0;
            for a in 0..3 {
                let v = jb[j][a];
                let (u, w) = (y[(i, a)] * v.lo, y[(i, a)] * v.hi);
                lo_ij += u.min(w);
                hi_ij += u.max(w);
            }
            let delta = if i == j { 1.0 } else { 0.0 };
            let m = (delta - lo_ij).abs().max((delta - hi_ij).abs());
            spread += m * r[j];
        }
        let centre = c[i] - step[i];
        let slack = 1e-12 + 1e-9 * r[i];
        let (klo, khi) = (centre - spread - slack, centre + spread + slack);
        if khi < lo[i] || klo > hi[i] {
            return Krawczyk::Empty;
        }
        inside &= klo > lo[i] && khi < hi[i];
    }
    if inside {
        Krawczyk::Unique
    } else {
        Krawczyk::Unknown
    }
}

pub(crate) enum Newton {
    Converged(ParametricPoint),
    Failed { xi: ParametricPoint, residual: f64 },
}

/// Damped Newton on `x(ξ) = p`, halving the step while the residual grows.
pub(crate) fn newton(g: &HexGeometry, p: &Point3, start: ParametricPoint, opts: &InvertOptions) -> Newton {
    let mut xi = start;
    let mut r = g.map(&xi) - p;
    let mut rn = r.norm();
    for _ in 0..opts.max_newton {
        if rn <= opts.tol {
            // one more step to land on the root to rounding
            if let Some(dx) = g.jacobian_matrix(&xi).lu().solve(&(-r)) {
                let cand = xi + dx;
                if (g.map(&cand) - p).norm() <= rn {
                    xi = cand;
                }
            }
            return Newton::Converged(xi);
        }
        let Some(dx) = g.jacobian_matrix(&xi).lu().solve(&(-r)) else {
            break;
        };
        let mut t = 1.0;
        let mut cand = xi + dx;
        let mut rc = g.map(&cand) - p;
        while rc.norm() > rn && t > 1.0 / 64.0 {
            t *= 0.5;
            cand = xi + dx * t;
            rc = g.map(&cand) - p;
        }
        xi = cand;
        r = rc;
        rn = r.norm();
        if xi.amax() > 4.0 {
            break;
        }
    }
    if rn <= opts.tol {
        Newton::Converged(xi)
    } else {
        Newton::Failed { xi, residual: rn }
    }
}

fn gradient_det(g: &HexGeometry, xi: &ParametricPoint) -> Vector3<f64> {
    let h = 1e-7;
    let mut grad = Vector3::zeros();
    for k in 0..3 {
        let mut a = *xi;
        let mut b = *xi;
        a[k] += h;
        b[k] -= h;
        grad[k] = (g.det_j(&a) - g.det_j(&b)) / (2.0 * h);
    }
    grad
}

struct Collector<'a> {
    g: &'a HexGeometry,
    opts: InvertOptions,
    roots: Vec<Root>,
    stalled_near_fold: bool,
}

impl<'a> Collector<'a> {
    fn new(g: &'a HexGeometry, opts: &InvertOptions) -> Self {
        Collector {
            g,
            opts: *opts,
            roots: Vec::new(),
            stalled_near_fold: false,
        }
    }

    fn insert(&mut self, xi: ParametricPoint) -> bool {
        if !in_reference_cube(&xi, PARAMETRIC_EPS) {
            return false;
        }
        if self
            .roots
            .iter()
            .any(|r| (r.xi - xi).amax() <= self.opts.dedup)
        {
            return true;
        }
        let det_j = self.g.det_j(&xi);
        self.roots.push(Root {
            xi,
            sign: if det_j >= 0.0 { 1 } else { -1 },
            det_j,
        });
        true
    }

    fn has_root_in(&self, lo: &ParametricPoint, hi: &ParametricPoint) -> bool {
        let e = self.opts.dedup;
        self.roots
            .iter()
            .any(|r| (0..3).all(|k| r.xi[k] >= lo[k] - e && r.xi[k] <= hi[k] + e))
    }
}

/// All preimages of `p` under the element's trilinear map, with absolute
/// position tolerance `tol`.
pub fn invert_trilinear(g: &HexGeometry, p: &Point3, tol: f64) -> Result<RootSet, GeometryError> {
    if !(tol > 0.0) {
        return Err(GeometryError::InvalidArgument(format!("tol = {tol}")));
    }
    let opts = InvertOptions {
        tol,
        ..InvertOptions::for_element(g)
    };
    invert_with(g, p, &opts)
}

type PBox = (ParametricPoint, ParametricPoint, u32);

fn outside(p: &Point3, lo: &Point3, hi: &Point3, slack: f64) -> bool {
    (0..3).any(|k| p[k] < lo[k] - slack || p[k] > hi[k] + slack)
}

fn split(lo: &ParametricPoint, hi: &ParametricPoint, depth: u32, stack: &mut Vec<PBox>) {
    let mid = (lo + hi) * 0.5;
    for k in (0..8).rev() {
        let mut clo = *lo;
        let mut chi = *hi;
        for a in 0..3 {
            if k >> a & 1 == 0 {
                chi[a] = mid[a];
            } else {
                clo[a] = mid[a];
            }
        }
        stack.push((clo, chi, depth + 1));
    }
}

impl Collector<'_> {
    /// Exclusion, subdivision and Newton polish over a stack of boxes.
    fn search(&mut self, p: &Point3, mut stack: Vec<PBox>) -> Result<(), GeometryError> {
        let g = self.g;
        let opts = self.opts;
        let slack = opts.tol;
        while let Some((lo, hi, depth)) = stack.pop() {
            let (ilo, ihi) = g.image_bounds(&lo, &hi);
            if outside(p, &ilo, &ihi, slack) {
                continue;
            }
            self.visit(p, lo, hi, depth, &mut stack)?;
        }
        Ok(())
    }

    /// One box whose image bounds contain `p`.
    fn visit(
        &mut self,
        p: &Point3,
        lo: ParametricPoint,
        hi: ParametricPoint,
        depth: u32,
        stack: &mut Vec<PBox>,
    ) -> Result<(), GeometryError> {
        let g = self.g;
        if depth >= MIN_DEPTH {
            match krawczyk(g, p, &lo, &hi) {
                Krawczyk::Empty => return Ok(()),
                Krawczyk::Unique => {
                    return match newton(g, p, (lo + hi) * 0.5, &self.opts) {
                        Newton::Converged(xi) => {
                            self.insert(xi);
                            Ok(())
                        }
                        Newton::Failed { residual, .. } => Err(GeometryError::NonConvergent {
                            lo: lo.into(),
                            hi: hi.into(),
                            residual,
                        }),
                    };
                }
                Krawczyk::Unknown => {}
            }
        }
        if depth >= MAX_DEPTH {
            match newton(g, p, (lo + hi) * 0.5, &self.opts) {
                Newton::Converged(xi) => {
                    self.insert(xi);
                }
                Newton::Failed { xi, residual } => {
                    let inside_box = (0..3).all(|k| xi[k] >= lo[k] && xi[k] <= hi[k]);
                    // a near-double root at the fold surface
                    self.stalled_near_fold |= inside_box && residual < 1e-6 * g.scale() && !self.has_root_in(&lo, &hi);
                }
            }
            return Ok(());
        }
        split(&lo, &hi, depth, stack);
        Ok(())
    }

    /// Near a fold the two branch roots nearly coincide; look for a missing
    /// partner on the other side of the `detJ = 0` surface.
    fn mirror_partners(&mut self, p: &Point3) {
        let n = self.roots.len();
        for i in 0..n {
            let r = self.roots[i];
            let grad = gradient_det(self.g, &r.xi);
            let gn2 = grad.norm_squared();
            if gn2 == 0.0 {
                continue;
            }
            let shift = grad * (r.det_j / gn2);
            if shift.amax() > 0.25 {
                continue;
            }
            if let Newton::Converged(xi) = newton(self.g, p, r.xi - shift * 2.0, &self.opts) {
                self.insert(xi);
            }
        }
    }

    fn finish(mut self, p: &Point3) -> RootSet {
        self.mirror_partners(p);
        let mut roots = self.roots;
        roots.sort_by(|a, b| {
            a.xi.iter()
                .zip(b.xi.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let ambiguous = self.stalled_near_fold
            || roots
                .iter()
                .any(|r| r.det_j.abs() < self.opts.band || r.xi.amax() > 1.0 - self.opts.edge);
        RootSet {
            target: *p,
            roots,
            ambiguous,
        }
    }
}

fn empty(p: &Point3) -> RootSet {
    RootSet {
        target: *p,
        roots: Vec::new(),
        ambiguous: false,
    }
}

/// Inversion starting from the whole reference cube.
pub fn invert_with(g: &HexGeometry, p: &Point3, opts: &InvertOptions) -> Result<RootSet, GeometryError> {
    let (blo, bhi) = g.bounds();
    if outside(p, &blo, &bhi, opts.tol) {
        return Ok(empty(p));
    }
    let mut c = Collector::new(g, opts);
    c.search(p, vec![(Vector3::repeat(-1.0), Vector3::repeat(1.0), 0)])?;
    Ok(c.finish(p))
}

const TABLE_DEPTH: u32 = 4;
const BINS: usize = 16;

#[derive(Debug, Clone)]
struct TableBox {
    lo: ParametricPoint,
    hi: ParametricPoint,
    img_lo: Point3,
    img_hi: Point3,
}

/// Inverter with a precomputed table of parametric boxes at a fixed depth,
/// binned by their physical image bounds. Gives the same roots as
/// [`invert_with`] at a fraction of the cost for repeated queries.
#[derive(Debug, Clone)]
pub struct Inverter {
    g: HexGeometry,
    opts: InvertOptions,
    boxes: Vec<TableBox>,
    bin_start: Vec<u32>,
    bin_items: Vec<u32>,
    lo: Point3,
    inv_cell: Vector3<f64>,
}

impl Inverter {
    pub fn new(g: &HexGeometry) -> Self {
        Self::with_options(g, InvertOptions::for_element(g))
    }

    pub fn with_options(g: &HexGeometry, opts: InvertOptions) -> Self {
        let n = 1usize << TABLE_DEPTH;
        let h = 2.0 / n as f64;
        let mut boxes = Vec::with_capacity(n * n * n);
        for idx in 0..n * n * n {
            let ijk = [idx % n, (idx / n) % n, idx / (n * n)];
            let lo = Vector3::from_fn(|k, _| -1.0 + h * ijk[k] as f64);
            let hi = lo + Vector3::repeat(h);
            let (img_lo, img_hi) = g.image_bounds(&lo, &hi);
            boxes.push(TableBox { lo, hi, img_lo, img_hi });
        }
        let (blo, bhi) = g.bounds();
        let size = (bhi - blo).map(|v| v.max(1e-300));
        let inv_cell = size.map(|v| BINS as f64 / v);
        let bin_of = |x: f64, k: usize| -> usize { (((x - blo[k]) * inv_cell[k]).floor().max(0.0) as usize).min(BINS - 1) };
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); BINS * BINS * BINS];
        let slack = opts.tol;
        for (i, b) in boxes.iter().enumerate() {
            let r0: [usize; 3] = std::array::from_fn(|k| bin_of(b.img_lo[k] - slack, k));
            let r1: [usize; 3] = std::array::from_fn(|k| bin_of(b.img_hi[k] + slack, k));
            for z in r0[2]..=r1[2] {
                for y in r0[1]..=r1[1] {
                    for x in r0[0]..=r1[0] {
                        lists[x + BINS * (y + BINS * z)].push(i as u32);
                    }
                }
            }
        }
        let mut bin_start = Vec::with_capacity(lists.len() + 1);
        let mut bin_items = Vec::new();
        bin_start.push(0);
        for l in &lists {
            bin_items.extend_from_slice(l);
            bin_start.push(bin_items.len() as u32);
        }
        Inverter {
            g: g.clone(),
            opts,
            boxes,
            bin_start,
            bin_items,
            lo: blo,
            inv_cell,
        }
    }

    pub fn geometry(&self) -> &HexGeometry {
        &self.g
    }

    pub fn options(&self) -> &InvertOptions {
        &self.opts
    }

    pub fn invert(&self, p: &Point3) -> Result<RootSet, GeometryError> {
        let (blo, bhi) = self.g.bounds();
        if outside(p, &blo, &bhi, self.opts.tol) {
            return Ok(empty(p));
        }
        let bin: [usize; 3] = std::array::from_fn(|k| {
            (((p[k] - self.lo[k]) * self.inv_cell[k]).floor().max(0.0) as usize).min(BINS - 1)
        });
        let b = bin[0] + BINS * (bin[1] + BINS * bin[2]);
        let items = &self.bin_items[self.bin_start[b] as usize..self.bin_start[b + 1] as usize];
        let mut c = Collector::new(&self.g, &self.opts);
        let mut stack = Vec::new();
        for &i in items {
            let tb = &self.boxes[i as usize];
            if outside(p, &tb.img_lo, &tb.img_hi, self.opts.tol) {
                continue;
            }
            c.visit(p, tb.lo, tb.hi, TABLE_DEPTH, &mut stack)?;
            if !stack.is_empty() {
                c.search(p, std::mem::take(&mut stack))?;
            }
        }
        Ok(c.finish(p))
    }

    /// Positive root near `guess`, falling back to a full inversion; `None`
    /// unless the point has exactly one positive and no negative root.
    pub fn member_root(&self, p: &Point3, guess: &ParametricPoint) -> Result<Option<ParametricPoint>, GeometryError> {
        if let Some(xi) = positive_root_near(&self.g, p, *guess, &self.opts) {
            return Ok(Some(xi));
        }
        let rs = self.invert(p)?;
        Ok(if rs.is_member() { rs.positive().map(|r| r.xi) } else { None })
    }
}

/// Newton from a nearby guess, accepted only if it lands on a positive root
/// inside the reference cube.
pub(crate) fn positive_root_near(
    g: &HexGeometry,
    p: &Point3,
    guess: ParametricPoint,
    opts: &InvertOptions,
) -> Option<ParametricPoint> {
    match newton(g, p, guess, opts) {
        Newton::Converged(xi) if in_reference_cube(&xi, PARAMETRIC_EPS) && g.det_j(&xi) > opts.band => {
            Some(xi)
        }
        _ => None,
    }
}

/// Bilinear map of the plane, `P(s, t) = a + b s + c t + d s t`, on `[-1, 1]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bilinear2 {
    pub a: Vector2<f64>,
    pub b: Vector2<f64>,
    pub c: Vector2<f64>,
    pub d: Vector2<f64>,
}

/// One preimage of a bilinear map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root2 {
    pub st: Vector2<f64>,
    pub det: f64,
}

fn cross2(u: &Vector2<f64>, v: &Vector2<f64>) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Real roots of `q2 x² + q1 x + q0` (none if degenerate).
fn quadratic_roots(q2: f64, q1: f64, q0: f64) -> Vec<f64> {
    let scale = q2.abs().max(q1.abs()).max(q0.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    let (q2, q1, q0) = (q2 / scale, q1 / scale, q0 / scale);
    if q2.abs() <= 1e-13 {
        if q1.abs() <= 1e-13 {
            return Vec::new();
        }
        return vec![-q0 / q1];
    }
    let mut disc = q1 * q1 - 4.0 * q2 * q0;
    if disc < 0.0 {
        if disc > -1e-12 * (q1 * q1).max(1e-300) {
            disc = 0.0;
        } else {
            return Vec::new();
        }
    }
    let q = -0.5 * (q1 + q1.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    let r1 = q / q2;
    let r2 = q0 / q;
    if (r1 - r2).abs() <= 1e-15 * r1.abs().max(1.0) {
        vec![r1]
    } else {
        vec![r1, r2]
    }
}

impl Bilinear2 {
    /// From the four corners at `(s, t) = (−1,−1), (1,−1), (1,1), (−1,1)`.
    pub fn from_corners(x: [Vector2<f64>; 4]) -> Self {
        Bilinear2 {
            a: (x[0] + x[1] + x[2] + x[3]) * 0.25,
            b: (-x[0] + x[1] + x[2] - x[3]) * 0.25,
            c: (-x[0] - x[1] + x[2] + x[3]) * 0.25,
            d: (x[0] - x[1] + x[2] - x[3]) * 0.25,
        }
    }

    pub fn eval(&self, s: f64, t: f64) -> Vector2<f64> {
        self.a + self.b * s + self.c * t + self.d * (s * t)
    }

    pub fn jacobian(&self, s: f64, t: f64) -> Matrix2<f64> {
        Matrix2::from_columns(&[self.b + self.d * t, self.c + self.d * s])
    }

    pub fn det(&self, s: f64, t: f64) -> f64 {
        cross2(&(self.b + self.d * t), &(self.c + self.d * s))
    }

    fn scale(&self) -> f64 {
        self.b.norm() + self.c.norm() + self.d.norm()
    }

    /// All preimages of `p` in `[-1−eps, 1+eps]²`.
    pub fn invert(&self, p: &Vector2<f64>, eps: f64) -> Vec<Root2> {
        let scale = self.scale();
        if scale == 0.0 {
            return Vec::new();
        }
        let a = self.a - p;
        // eliminate t: (a + b s) × (c + d s) = 0
        let s_roots = quadratic_roots(
            cross2(&self.b, &self.d),
            cross2(&a, &self.d) + cross2(&self.b, &self.c),
            cross2(&a, &self.c),
        );
        // eliminate s: (a + c t) × (b + d t) = 0
        let t_roots = quadratic_roots(
            cross2(&self.c, &self.d),
            cross2(&a, &self.d) + cross2(&self.c, &self.b),
            cross2(&a, &self.b),
        );
        let loose = 1e-6;
        let mut cands: Vec<Vector2<f64>> = Vec::new();
        for &s in &s_roots {
            if s.abs() > 1.0 + loose {
                continue;
            }
            let den = self.c + self.d * s;
            let num = a + self.b * s;
            let k = if den.x.abs() >= den.y.abs() { 0 } else { 1 };
            if den[k].abs() > 1e-12 * scale {
                cands.push(Vector2::new(s, -num[k] / den[k]));
            } else {
                for &t in &t_roots {
                    cands.push(Vector2::new(s, t));
                }
            }
        }
        let mut out: Vec<Root2> = Vec::new();
        let tol = 1e-12 * scale.max(p.norm()).max(1e-300);
        for mut st in cands {
            if st.amax() > 1.0 + loose {
                continue;
            }
            for _ in 0..3 {
                let r = self.eval(st.x, st.y) - p;
                match self.jacobian(st.x, st.y).lu().solve(&(-r)) {
                    Some(dx) => st += dx,
                    None => break,
                }
            }
            let res = (self.eval(st.x, st.y) - p).norm();
            if st.amax() > 1.0 + eps || res > 1e3 * tol {
                continue;
            }
            if out.iter().any(|r| (r.st - st).amax() <= 1e-9) {
                continue;
            }
            out.push(Root2 {
                st,
                det: self.det(st.x, st.y),
            });
        }
        out
    }
}
