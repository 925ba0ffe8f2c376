//! Galerkin systems for the Laplace problem: the standard stiffness, the
//! tangled stiffness with region-restricted concave contributions, fold
//! constraints, Neumann loads, Dirichlet elimination and the bordered solve.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{gauss_rule, shape_eval, HexGeometry};
use crate::error::{Error, SolveError};
use crate::mesh::{BoundarySpec, ExactSolution, Mesh};
use crate::tangle::{classify_mesh, concave_region_quadrature, fold_sample_points, RegionQuadrature};

mod constraints;
mod dirichlet;
mod field;
mod ldlt;
mod load;
mod saddle;

pub use constraints::{assemble_constraints, constraint_row, rank_filter, ConstraintMatrix, ConstraintRow};
pub use dirichlet::{apply_dirichlet, ReducedSystem};
pub use field::{field_at_point, FieldEvaluator};
pub use ldlt::SymmetricIndefinite;
pub use load::{assemble_load, assemble_standard_load, LoadVector};
pub use saddle::{solve_saddle, SaddleSolution};

pub type Matrix8 = SMatrix<f64, 8, 8>;

/// How the standard path treats the Jacobian determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    /// `detJ` as is; wrong on tangled meshes, which is the point of the baseline.
    Signed,
    Absolute,
}

/// One element's 8×8 contribution and the global ids it scatters to.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrix {
    pub element: usize,
    pub nodes: [usize; 8],
    pub k: Matrix8,
}

/// Symmetric sparse matrix stored as `(row, col, value)` triplets sorted by
/// row then column.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalStiffness {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl GlobalStiffness {
    /// Scatters element matrices in the given order; the summation order is
    /// fixed, so the result is bit-reproducible.
    pub fn from_elements<'a>(n: usize, parts: impl IntoIterator<Item = &'a ElementMatrix>) -> Self {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for em in parts {
            for (a, &i) in em.nodes.iter().enumerate() {
                for (b, &j) in em.nodes.iter().enumerate() {
                    *acc.entry((i, j)).or_insert(0.0) += em.k[(a, b)];
                }
            }
        }
        GlobalStiffness {
            n,
            entries: acc.into_iter().map(|((i, j), v)| (i, j, v)).collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(i, j)))
            .map_or(0.0, |k| self.entries[k].2)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt()
    }
}

/// `∫ ∇Nᵀ∇N detJ dξ` with a tensor Gauss rule of `order`.
pub fn element_stiffness(g: &HexGeometry, element: usize, order: usize, mode: JacobianMode) -> Result<Matrix8, Error> {
    let rule = gauss_rule(order)?;
    let mut k = Matrix8::zeros();
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        let jac = g.jacobian(xi);
        let grad = jac
            .physical_gradients(&shape_eval(xi))
            .ok_or(SolveError::SingularJacobian { element })?;
        let det = match mode {
            JacobianMode::Signed => jac.det,
            JacobianMode::Absolute => jac.det.abs(),
        };
        k += grad * grad.transpose() * (w * det);
    }
    Ok(k)
}

fn element_matrix(mesh: &Mesh, element: usize, k: Matrix8) -> ElementMatrix {
    ElementMatrix {
        element,
        nodes: mesh.elements[element].nodes,
        k,
    }
}

/// Standard stiffness over every element.
pub fn assemble_standard(mesh: &Mesh, order: usize, mode: JacobianMode) -> Result<GlobalStiffness, Error> {
    if order < 2 {
        return Err(Error::Precondition(format!("stiffness order {order} < 2")));
    }
    let parts = (0..mesh.elements.len())
        .map(|e| Ok(element_matrix(mesh, e, element_stiffness(&mesh.geometry(e), e, order, mode)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(GlobalStiffness::from_elements(mesh.nodes.len(), &parts))
}

/// `Σ_q w_q ∇N(ξ⁺_q)ᵀ∇N(ξ⁺_q)` over a region quadrature.
pub fn assemble_concave(mesh: &Mesh, element: usize, rq: &RegionQuadrature) -> Result<ElementMatrix, Error> {
    if rq.element != element {
        return Err(Error::Precondition(format!(
            "quadrature belongs to element {}, not {element}",
            rq.element
        )));
    }
    let g = mesh.geometry(element);
    // fixed-size chunks summed in order keep the result independent of the thread count
    let partial: Vec<Result<Matrix8, SolveError>> = rq
        .points
        .par_chunks(2048)
        .map(|chunk| {
            let mut k = Matrix8::zeros();
            for q in chunk {
                let grad = g
                    .jacobian(&q.xi_plus)
                    .physical_gradients(&shape_eval(&q.xi_plus))
                    .ok_or(SolveError::SingularJacobian { element })?;
                k += grad * grad.transpose() * q.w;
            }
            Ok(k)
        })
        .collect();
    let mut k = Matrix8::zeros();
    for p in partial {
        k += p?;
    }
    Ok(element_matrix(mesh, element, k))
}

/// Parameters of the tangled assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfemOptions {
    /// Octree depth of the concave region quadratures and face quadtrees.
    pub depth: u32,
    /// Gauss order inside octree cells.
    pub cell_order: usize,
    /// Gauss order of convex elements and faces.
    pub gauss_order: usize,
    /// Fold samples per concave element.
    pub samples: usize,
    pub seed: u64,
    /// Relative tolerance of the constraint rank filter.
    pub rank_tol: f64,
}

impl Default for TfemOptions {
    fn default() -> Self {
        TfemOptions {
            depth: 7,
            cell_order: 2,
            gauss_order: 2,
            samples: 32,
            seed: 7,
            rank_tol: 1e-10,
        }
    }
}

/// Unreduced system `K`, `C̃`, `f` plus what produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSystem {
    pub stiffness: GlobalStiffness,
    pub constraints: ConstraintMatrix,
    pub load: LoadVector,
    pub concave: Vec<usize>,
    pub warnings: Vec<String>,
}

impl AssembledSystem {
    /// Triplet dump of `K`, `C̃` and `f`.
    pub fn to_json(&self) -> serde_json::Value {
        let c = self.constraints.to_dense();
        let mut ct = Vec::new();
        for r in 0..c.nrows() {
            for j in 0..c.ncols() {
                if c[(r, j)] != 0.0 {
                    ct.push(serde_json::json!([r, j, c[(r, j)]]));
                }
            }
        }
        serde_json::json!({
            "n": self.stiffness.n,
            "concave_elements": self.concave,
            "stiffness": self.stiffness.entries.iter().map(|&(i, j, v)| serde_json::json!([i, j, v])).collect::<Vec<_>>(),
            "constraints": { "rows": c.nrows(), "entries": ct },
            "load": self.load.values,
        })
    }
}

/// Standard Galerkin system with every face integrated in full.
pub fn assemble_fem(
    mesh: &Mesh,
    bc: &BoundarySpec,
    exact: &ExactSolution,
    mode: JacobianMode,
    order: usize,
) -> Result<AssembledSystem, Error> {
    Ok(AssembledSystem {
        stiffness: assemble_standard(mesh, order, mode)?,
        constraints: ConstraintMatrix::empty(mesh.nodes.len()),
        load: assemble_standard_load(mesh, bc, exact, order)?,
        concave: Vec::new(),
        warnings: Vec::new(),
    })
}

/// Tangled system: standard stiffness on convex elements, region quadrature
/// on concave ones, fold constraints and region-restricted face loads.
pub fn assemble_tfem(
    mesh: &Mesh,
    bc: &BoundarySpec,
    exact: &ExactSolution,
    opts: &TfemOptions,
) -> Result<AssembledSystem, Error> {
    if opts.gauss_order < 2 {
        return Err(Error::Precondition(format!("stiffness order {} < 2", opts.gauss_order)));
    }
    let classes = classify_mesh(mesh)?;
    let concave: Vec<usize> = (0..mesh.elements.len()).filter(|&e| classes[e].is_concave()).collect();
    let mut parts = Vec::with_capacity(mesh.elements.len());
    let mut samples = Vec::with_capacity(concave.len());
    let mut warnings = Vec::new();
    for e in 0..mesh.elements.len() {
        if classes[e].is_concave() {
            let rq = concave_region_quadrature(mesh, e, opts.depth, opts.cell_order)?;
            parts.push(assemble_concave(mesh, e, &rq)?);
            let fs = fold_sample_points(mesh, e, opts.samples, opts.seed)?;
            if !fs.complete {
                warnings.push(format!(
                    "element {e}: only {} of {} fold samples found",
                    fs.samples.len(),
                    opts.samples
                ));
            }
            samples.push(fs);
        } else {
            let k = element_stiffness(&mesh.geometry(e), e, opts.gauss_order, JacobianMode::Signed)?;
            parts.push(element_matrix(mesh, e, k));
        }
    }
    let constraints = assemble_constraints(mesh, &samples, opts.rank_tol)?;
    if !samples.is_empty() && constraints.m() == 0 {
        warnings.push("every constraint row was filtered out".into());
    }
    Ok(AssembledSystem {
        stiffness: GlobalStiffness::from_elements(mesh.nodes.len(), &parts),
        constraints,
        load: assemble_load(mesh, bc, exact, opts.depth, opts.gauss_order)?,
        concave,
        warnings,
    })
}

/// Nodal solution of an assembled system.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u_hat: Vec<f64>,
    pub mu: Vec<f64>,
    /// Free unknowns after Dirichlet elimination.
    pub dofs: usize,
    /// Constraint rows left after both rank filters.
    pub constraints: usize,
    /// `max(‖K û + C̃ᵀμ − f‖, ‖C̃ û − g‖)` of the reduced system.
    pub residual: f64,
    pub flagged: bool,
}

pub fn solve_system(
    sys: &AssembledSystem,
    mesh: &Mesh,
    bc: &BoundarySpec,
    exact: &ExactSolution,
) -> Result<Solution, Error> {
    let red = apply_dirichlet(&sys.stiffness, &sys.constraints, &sys.load, mesh, bc, exact)?;
    let sol = solve_saddle(&red.k, &red.c, &red.f, &red.g)?;
    Ok(Solution {
        u_hat: red.expand(&sol.u_hat),
        dofs: red.free.len(),
        constraints: red.c.nrows(),
        residual: sol.residual_primal.max(sol.residual_constraint),
        flagged: sol.flagged,
        mu: sol.mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_eight_element, gen_two_element};
    use nalgebra::{DVector, SymmetricEigen};

    fn unit_cube() -> Mesh {
        crate::mesh::tests::unit_cube()
    }

    #[test]
    fn unit_cube_stiffness() {
        let m = unit_cube();
        let k = assemble_standard(&m, 2, JacobianMode::Signed).unwrap().to_dense();
        // unit cube Laplace stiffness: diagonal 1/3, neighbours by shared
        // dimension count 0, −1/12, −1/12 ... with row sums zero
        for i in 0..8 {
            assert!((k[(i, i)] - 1.0 / 3.0).abs() < 1e-14);
            assert!(k.row(i).sum().abs() < 1e-14);
        }
        let ci = crate::basis::CORNERS;
        for i in 0..8 {
            for j in 0..8 {
                let diff = (0..3).filter(|&a| ci[i][a] != ci[j][a]).count();
                let expect = [1.0 / 3.0, 0.0, -1.0 / 12.0, -1.0 / 12.0][diff];
                assert!((k[(i, j)] - expect).abs() < 1e-14, "{i} {j}");
            }
        }
    }

    #[test]
    fn untangled_stiffness_is_symmetric_with_constant_null_space() {
        let m = gen_eight_element(1.0).unwrap();
        let k = assemble_standard(&m, 2, JacobianMode::Signed).unwrap();
        let ones = vec![1.0; m.nodes.len()];
        assert!(k.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12 * k.frobenius_norm()));
        let d = k.to_dense();
        assert!((&d - d.transpose()).amax() <= 1e-12 * d.amax());
    }

    #[test]
    fn signed_baseline_is_indefinite_on_tangled_mesh() {
        let m = gen_two_element(0.3).unwrap();
        let g = m.geometry(0);
        let k = element_stiffness(&g, 0, 2, JacobianMode::Signed).unwrap();
        let eig = SymmetricEigen::new(k).eigenvalues;
        let abs = element_stiffness(&g, 0, 2, JacobianMode::Absolute).unwrap();
        let eig_abs = SymmetricEigen::new(abs).eigenvalues;
        assert!(eig.min() < -1e-8, "{eig}");
        assert!(eig_abs.min() > -1e-12);
    }

    #[test]
    fn concave_contribution_is_psd_with_zero_row_sums() {
        let m = gen_two_element(0.3).unwrap();
        let rq = concave_region_quadrature(&m, 0, 4, 2).unwrap();
        let em = assemble_concave(&m, 0, &rq).unwrap();
        for i in 0..8 {
            assert!(em.k.row(i).sum().abs() < 1e-10);
        }
        let eig = SymmetricEigen::new(em.k).eigenvalues;
        assert!(eig.min() >= -1e-10 * em.k.trace());
        assert!(assemble_concave(&m, 1, &rq).is_err());
    }

    #[test]
    fn untangled_tfem_equals_fem() {
        let m = gen_eight_element(1.0).unwrap();
        let bc = BoundarySpec::left_dirichlet(&m);
        let ex = ExactSolution::benchmark();
        let fem = assemble_fem(&m, &bc, &ex, JacobianMode::Signed, 2).unwrap();
        let tfem = assemble_tfem(&m, &bc, &ex, &TfemOptions::default()).unwrap();
        assert_eq!(fem.stiffness, tfem.stiffness);
        assert_eq!(fem.load, tfem.load);
        assert_eq!(tfem.constraints.m(), 0);
        let a = solve_system(&fem, &m, &bc, &ex).unwrap();
        let b = solve_system(&tfem, &m, &bc, &ex).unwrap();
        let exact = DVector::from(ex.nodal_values(&m));
        assert!((DVector::from(a.u_hat.clone()) - &exact).amax() < 1e-12);
        assert_eq!(a.u_hat, b.u_hat);
    }

    #[test]
    fn dump_lists_triplets() {
        let m = unit_cube();
        let bc = BoundarySpec::left_dirichlet(&m);
        let sys = assemble_fem(&m, &bc, &ExactSolution::benchmark(), JacobianMode::Signed, 2).unwrap();
        let j = sys.to_json();
        assert_eq!(j["n"], 8);
        assert_eq!(j["stiffness"].as_array().unwrap().len(), 64);
        assert_eq!(j["load"].as_array().unwrap().len(), 8);
    }
}
