//! Neumann load `f_i = ∫ N_i (g·n) dΓ` over the Neumann face sets.

use crate::basis::shape_eval;
use crate::error::Error;
use crate::mesh::{BoundarySpec, ExactSolution, FaceRef, Mesh};
use crate::tangle::face::full_face;
use crate::tangle::{classify_mesh, face_quadrature, FaceMap, FacePoint};

#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    pub values: Vec<f64>,
}

impl LoadVector {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn scatter(mesh: &Mesh, face: FaceRef, points: &[FacePoint], exact: &ExactSolution, f: &mut [f64]) {
    let nodes = mesh.elements[face.element].nodes;
    for p in points {
        let q = exact.flux(&p.normal) * p.w;
        let n = shape_eval(&p.xi).n;
        for (k, &i) in nodes.iter().enumerate() {
            f[i] += n[k] * q;
        }
    }
}

fn neumann_faces<'a>(mesh: &'a Mesh, bc: &'a BoundarySpec) -> Result<Vec<FaceRef>, Error> {
    bc.check(mesh)?;
    Ok(bc
        .neumann_sets
        .iter()
        .flat_map(|name| mesh.face_sets[name].iter().copied())
        .collect())
}

/// Every Neumann face integrated in full with a tensor rule of `order`.
pub fn assemble_standard_load(
    mesh: &Mesh,
    bc: &BoundarySpec,
    exact: &ExactSolution,
    order: usize,
) -> Result<LoadVector, Error> {
    let mut f = vec![0.0; mesh.nodes.len()];
    for face in neumann_faces(mesh, bc)? {
        let fm = FaceMap::of_element(&mesh.geometry(face.element), face.face);
        let points = full_face(&fm, face, order)?;
        scatter(mesh, face, &points, exact, &mut f);
    }
    Ok(LoadVector { values: f })
}

/// Tangled load: faces of concave elements are restricted to the region
/// outside their 2D fold, which the overlapping convex face supplies.
pub fn assemble_load(
    mesh: &Mesh,
    bc: &BoundarySpec,
    exact: &ExactSolution,
    depth: u32,
    order: usize,
) -> Result<LoadVector, Error> {
    let classes = classify_mesh(mesh)?;
    let mut f = vec![0.0; mesh.nodes.len()];
    for face in neumann_faces(mesh, bc)? {
        let fm = FaceMap::of_element(&mesh.geometry(face.element), face.face);
        let points = if classes[face.element].is_concave() {
            face_quadrature(&fm, face, depth, order)?.points
        } else {
            full_face(&fm, face, order)?
        };
        scatter(mesh, face, &points, exact, &mut f);
    }
    Ok(LoadVector { values: f })
}
