//! Sampling of fold points, where an element covers space with both branches.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{HexGeometry, ParametricPoint, Point3};
use crate::error::GeometryError;
use crate::mesh::Mesh;

use super::classify::{classify_element, DEFAULT_GRID, DEFAULT_REFINE};
use super::invert::Inverter;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldSample {
    pub x: Point3,
    pub xi_plus: ParametricPoint,
    pub xi_minus: ParametricPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldSamples {
    pub element: usize,
    pub samples: Vec<FoldSample>,
    /// False when fewer than the requested count were found.
    pub complete: bool,
}

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Halton point `i` in bases 2, 3, 5, rotated by `shift` modulo 1.
pub(crate) fn halton3(i: u64, shift: &[f64; 3]) -> [f64; 3] {
    let h = [radical_inverse(i, 2), radical_inverse(i, 3), radical_inverse(i, 5)];
    [0, 1, 2].map(|k| (h[k] + shift[k]).fract())
}

/// Bounding box of the parametric region where `detJ < 0`, from interval
/// bounds on a depth-4 subdivision.
pub(crate) fn negative_region_bounds(g: &HexGeometry) -> Option<(ParametricPoint, ParametricPoint)> {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    let mut stack = vec![(Vector3::repeat(-1.0), Vector3::repeat(1.0), 0u32)];
    while let Some((blo, bhi, depth)) = stack.pop() {
        let (dl, dh) = g.det_j_bounds(&blo, &bhi);
        if dl >= 0.0 {
            continue;
        }
        if dh < 0.0 || depth == 4 {
            lo = lo.inf(&blo);
            hi = hi.sup(&bhi);
            continue;
        }
        let mid = (blo + bhi) * 0.5;
        for k in 0..8 {
            let mut clo = blo;
            let mut chi = bhi;
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
    (lo.x <= hi.x).then_some((lo, hi))
}

/// Low-discrepancy points of the negative-Jacobian parametric region, mapped
/// forward and kept when the element has exactly one root of each sign there.
pub fn fold_samples_in(
    g: &HexGeometry,
    element: usize,
    target_count: usize,
    seed: u64,
) -> Result<FoldSamples, GeometryError> {
    let class = classify_element(g, element, DEFAULT_GRID, DEFAULT_REFINE)?;
    if !class.is_concave() {
        return Err(GeometryError::FoldEmpty { element });
    }
    let Some((lo, hi)) = negative_region_bounds(g) else {
        return Err(GeometryError::FoldEmpty { element });
    };
    let inv = Inverter::new(g);
    let opts = *inv.options();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (element as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let shift = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
    let max_attempts = 1000 * target_count.max(1) as u64;
    let mut samples = Vec::with_capacity(target_count);
    let mut i = 0u64;
    while samples.len() < target_count && i < max_attempts {
        i += 1;
        let h = halton3(i, &shift);
        let xi = Vector3::from_fn(|k, _| lo[k] + (hi[k] - lo[k]) * h[k]);
        if g.det_j(&xi) >= -opts.band {
            continue;
        }
        let x = g.map(&xi);
        let rs = inv.invert(&x)?;
        if !rs.in_fold() {
            continue;
        }
        let (Some(p), Some(m)) = (rs.positive(), rs.negative()) else {
            continue;
        };
        samples.push(FoldSample {
            x,
            xi_plus: p.xi,
            xi_minus: m.xi,
        });
    }
    if samples.is_empty() {
        return Err(GeometryError::FoldEmpty { element });
    }
    Ok(FoldSamples {
        element,
        complete: samples.len() >= target_count,
        samples,
    })
}

pub fn fold_sample_points(
    mesh: &Mesh,
    element: usize,
    target_count: usize,
    seed: u64,
) -> Result<FoldSamples, GeometryError> {
    fold_samples_in(&mesh.geometry(element), element, target_count, seed)
}
