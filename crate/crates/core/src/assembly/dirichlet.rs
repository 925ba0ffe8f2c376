//! Dirichlet elimination.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, SolveError};
use crate::mesh::{BoundarySpec, ExactSolution, Mesh};

use super::constraints::{rank_filter_scaled, ConstraintMatrix};
use super::load::LoadVector;
use super::GlobalStiffness;

/// System over the free nodes: `[[K, C̃ᵀ], [C̃, 0]] [û; μ] = [f; g]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub n: usize,
    pub free: Vec<usize>,
    pub fixed: Vec<usize>,
    pub fixed_values: Vec<f64>,
    pub k: DMatrix<f64>,
    pub f: DVector<f64>,
    pub c: DMatrix<f64>,
    /// Constraint right-hand side from the fixed columns.
    pub g: DVector<f64>,
    /// Rows of the unreduced constraint matrix kept after elimination.
    pub constraint_rows: Vec<usize>,
}

impl ReducedSystem {
    /// Full nodal vector with the prescribed values reinserted.
    pub fn expand(&self, u_free: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.n];
        for (&i, &v) in self.free.iter().zip(u_free) {
            u[i] = v;
        }
        for (&i, &v) in self.fixed.iter().zip(&self.fixed_values) {
            u[i] = v;
        }
        u
    }
}

/// Eliminates the nodes of the Dirichlet set. Constraint rows that lose
/// their rank once the fixed columns move to the right-hand side are
/// filtered again at the original tolerance.
pub fn apply_dirichlet(
    k: &GlobalStiffness,
    c: &ConstraintMatrix,
    f: &LoadVector,
    mesh: &Mesh,
    bc: &BoundarySpec,
    exact: &ExactSolution,
) -> Result<ReducedSystem, Error> {
    let n = mesh.nodes.len();
    if k.n != n || c.n != n || f.values.len() != n {
        return Err(SolveError::Dimension(format!(
            "mesh has {n} nodes, K {}, C̃ {}, f {}",
            k.n,
            c.n,
            f.values.len()
        ))
        .into());
    }
    let fixed = mesh.face_set_nodes(&bc.dirichlet_set)?;
    if fixed.is_empty() {
        return Err(SolveError::NoDirichlet.into());
    }
    let mut is_fixed = vec![false; n];
    for &i in &fixed {
        is_fixed[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
    let fixed_values: Vec<f64> = fixed.iter().map(|&i| exact.value(&mesh.coords(i))).collect();
    let uf = DVector::from_column_slice(&fixed_values);

    let kd = k.to_dense();
    let k_red = kd.select_rows(&free).select_columns(&free);
    let f_full = DVector::from_column_slice(&f.values);
    let f_red = f_full.select_rows(&free) - kd.select_rows(&free).select_columns(&fixed) * &uf;

    let cd = c.to_dense();
    let scale = (0..cd.nrows()).map(|r| cd.row(r).norm()).fold(0.0, f64::max);
    let c_free = cd.select_columns(&free);
    let g_all = -(cd.select_columns(&fixed) * &uf);
    let keep = rank_filter_scaled(&c_free, c.rank_tol * scale);
    Ok(ReducedSystem {
        n,
        k: k_red,
        f: f_red,
        c: c_free.select_rows(&keep),
        g: g_all.select_rows(&keep),
        constraint_rows: keep,
        free,
        fixed,
        fixed_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_fem, JacobianMode};
    use crate::mesh::FaceRef;

    #[test]
    fn unit_cube_left_face() {
        let m = crate::mesh::tests::unit_cube();
        let bc = BoundarySpec::left_dirichlet(&m);
        let ex = ExactSolution::benchmark();
        let sys = assemble_fem(&m, &bc, &ex, JacobianMode::Signed, 2).unwrap();
        let red = apply_dirichlet(&sys.stiffness, &sys.constraints, &sys.load, &m, &bc, &ex).unwrap();
        assert_eq!(red.free.len(), 4);
        assert_eq!(red.k.shape(), (4, 4));
        let u = red.expand(&[9.0; 4]);
        for &i in &red.fixed {
            assert_eq!(u[i], ex.value(&m.coords(i)));
        }
    }

    #[test]
    fn fixing_everything_leaves_nothing() {
        let mut m = crate::mesh::tests::unit_cube();
        m.face_sets.clear();
        m.face_sets.insert("all".into(), (0..6).map(|face| FaceRef { element: 0, face }).collect());
        let bc = BoundarySpec::with_dirichlet(&m, "all");
        let ex = ExactSolution::benchmark();
        let sys = assemble_fem(&m, &bc, &ex, JacobianMode::Signed, 2).unwrap();
        let red = apply_dirichlet(&sys.stiffness, &sys.constraints, &sys.load, &m, &bc, &ex).unwrap();
        assert!(red.free.is_empty());
        assert_eq!(red.expand(&[]), ex.nodal_values(&m));
    }

    #[test]
    fn empty_dirichlet_set_is_an_error() {
        let mut m = crate::mesh::tests::unit_cube();
        m.face_sets.insert("none".into(), Vec::new());
        let bc = BoundarySpec::with_dirichlet(&m, "none");
        let ex = ExactSolution::benchmark();
        let k = crate::assembly::assemble_standard(&m, 2, JacobianMode::Signed).unwrap();
        let c = ConstraintMatrix::empty(8);
        let f = LoadVector { values: vec![0.0; 8] };
        assert!(matches!(
            apply_dirichlet(&k, &c, &f, &m, &bc, &ex),
            Err(Error::Solve(SolveError::NoDirichlet))
        ));
    }
}
