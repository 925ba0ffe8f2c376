//! Fold equality constraints `N⁺(p)·û − N⁻(p)·û = 0`.

use nalgebra::DMatrix;

use crate::basis::shape_eval;
use crate::error::Error;
use crate::mesh::Mesh;
use crate::tangle::{FoldSample, FoldSamples};

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub element: usize,
    pub nodes: [usize; 8],
    /// `N(ξ⁺) − N(ξ⁻)` in element corner order.
    pub coeffs: [f64; 8],
}

/// Retained constraint rows over `n` nodal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    pub n: usize,
    pub rows: Vec<ConstraintRow>,
    /// Indices of the retained rows among the raw rows, ascending.
    pub retained: Vec<usize>,
    pub raw_rows: usize,
    pub rank_tol: f64,
}

impl ConstraintMatrix {
    pub fn empty(n: usize) -> Self {
        ConstraintMatrix {
            n,
            rows: Vec::new(),
            retained: Vec::new(),
            raw_rows: 0,
            rank_tol: 0.0,
        }
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        dense(self.n, &self.rows)
    }

    /// `C̃ u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.nodes.iter().zip(&r.coeffs).map(|(&i, c)| c * u[i]).sum())
            .collect()
    }
}

fn dense(n: usize, rows: &[ConstraintRow]) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(rows.len(), n);
    for (r, row) in rows.iter().enumerate() {
        for (&i, v) in row.nodes.iter().zip(&row.coeffs) {
            c[(r, i)] += v;
        }
    }
    c
}

pub fn constraint_row(mesh: &Mesh, element: usize, s: &FoldSample) -> ConstraintRow {
    let d = shape_eval(&s.xi_plus).n - shape_eval(&s.xi_minus).n;
    ConstraintRow {
        element,
        nodes: mesh.elements[element].nodes,
        coeffs: d.into(),
    }
}

/// Rows of `a` forming a maximal independent subset, chosen by
/// Gram–Schmidt with largest-residual pivoting. A row is dependent when its
/// residual falls to `rel_tol` times the largest row norm. Indices ascend.
pub fn rank_filter(a: &DMatrix<f64>, rel_tol: f64) -> Vec<usize> {
    let m = a.nrows();
    let scale = (0..m).map(|r| a.row(r).norm()).fold(0.0, f64::max);
    rank_filter_scaled(a, rel_tol * scale)
}

pub(crate) fn rank_filter_scaled(a: &DMatrix<f64>, abs_tol: f64) -> Vec<usize> {
    let m = a.nrows();
    let mut res: Vec<_> = (0..m).map(|r| a.row(r).transpose()).collect();
    let mut open: Vec<usize> = (0..m).collect();
    let mut keep = Vec::new();
    while !open.is_empty() {
        let (pos, best) = open
            .iter()
            .enumerate()
            .map(|(p, &r)| (p, res[r].norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= abs_tol || best == 0.0 {
            break;
        }
        let r = open.swap_remove(pos);
        let q = &res[r] / best;
        for &o in &open {
            let proj = res[o].dot(&q);
            res[o] -= &q * proj;
        }
        keep.push(r);
    }
    keep.sort_unstable();
    keep
}

/// One raw row per fold sample, then the rank filter at `rank_tol`.
pub fn assemble_constraints(mesh: &Mesh, samples: &[FoldSamples], rank_tol: f64) -> Result<ConstraintMatrix, Error> {
    let n = mesh.nodes.len();
    let raw: Vec<ConstraintRow> = samples
        .iter()
        .flat_map(|fs| fs.samples.iter().map(|s| constraint_row(mesh, fs.element, s)))
        .collect();
    if let Some(r) = raw.iter().find(|r| r.element >= mesh.elements.len()) {
        return Err(Error::Precondition(format!("no element {}", r.element)));
    }
    let retained = rank_filter(&dense(n, &raw), rank_tol);
    Ok(ConstraintMatrix {
        n,
        rows: retained.iter().map(|&r| raw[r].clone()).collect(),
        retained,
        raw_rows: raw.len(),
        rank_tol,
    })
}
