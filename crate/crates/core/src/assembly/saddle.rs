//! Bordered solve of `[[K, C̃ᵀ], [C̃, 0]] [û; μ] = [f; g]`.

use nalgebra::{DMatrix, DVector};

use crate::error::SolveError;

use super::ldlt::SymmetricIndefinite;

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub u_hat: Vec<f64>,
    pub mu: Vec<f64>,
    /// `‖K û + C̃ᵀμ − f‖₂`.
    pub residual_primal: f64,
    /// `‖C̃ û − g‖₂`.
    pub residual_constraint: f64,
    /// Set when a residual exceeds `1e−9 ‖(f, g)‖`.
    pub flagged: bool,
}

pub fn solve_saddle(
    k: &DMatrix<f64>,
    c: &DMatrix<f64>,
    f: &DVector<f64>,
    g: &DVector<f64>,
) -> Result<SaddleSolution, SolveError> {
    let (n, m) = (k.nrows(), c.nrows());
    if k.ncols() != n || c.ncols() != n || f.len() != n || g.len() != m {
        return Err(SolveError::Dimension(format!(
            "K {:?}, C̃ {:?}, f {}, g {}",
            k.shape(),
            c.shape(),
            f.len(),
            g.len()
        )));
    }
    if n == 0 {
        return Ok(SaddleSolution {
            u_hat: Vec::new(),
            mu: vec![0.0; m],
            residual_primal: 0.0,
            residual_constraint: g.norm(),
            flagged: g.norm() > 0.0,
        });
    }
    let mut a = DMatrix::zeros(n + m, n + m);
    a.view_mut((0, 0), (n, n)).copy_from(k);
    a.view_mut((n, 0), (m, n)).copy_from(c);
    a.view_mut((0, n), (n, m)).copy_from(&c.transpose());
    let mut b = DVector::zeros(n + m);
    b.rows_mut(0, n).copy_from(f);
    b.rows_mut(n, m).copy_from(g);
    let mut x = SymmetricIndefinite::factor(&a)?.solve(&b);
    let r0 = &b - &a * &x;
    // one step of iterative refinement
    x += SymmetricIndefinite::factor(&a)?.solve(&r0);
    let u = x.rows(0, n).into_owned();
    let mu = x.rows(n, m).into_owned();
    let residual_primal = (k * &u + c.transpose() * &mu - f).norm();
    let residual_constraint = (c * &u - g).norm();
    let scale = b.norm().max(f64::MIN_POSITIVE);
    Ok(SaddleSolution {
        flagged: residual_primal.max(residual_constraint) > 1e-9 * scale,
        u_hat: u.as_slice().to_vec(),
        mu: mu.as_slice().to_vec(),
        residual_primal,
        residual_constraint,
    })
}
