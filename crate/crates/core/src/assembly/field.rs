//! Field evaluation as an oriented sum over every element covering a point.

use crate::basis::{shape_eval, Point3};
use crate::error::{Error, GeometryError};
use crate::mesh::Mesh;
use crate::tangle::{inverters, Inverter};

/// Holds one inverter per element for repeated evaluations.
pub struct FieldEvaluator<'a> {
    mesh: &'a Mesh,
    inverters: Vec<Inverter>,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        FieldEvaluator {
            mesh,
            inverters: inverters(&mesh.geometries()),
        }
    }

    /// `Σ_e [Σ_{ξ⁺} N(ξ⁺)·û_e − Σ_{ξ⁻} N(ξ⁻)·û_e]`, provided the net
    /// oriented count at `p` is one.
    pub fn value(&self, u_hat: &[f64], p: &Point3) -> Result<f64, Error> {
        if u_hat.len() != self.mesh.nodes.len() {
            return Err(Error::Precondition(format!(
                "{} nodal values for {} nodes",
                u_hat.len(),
                self.mesh.nodes.len()
            )));
        }
        let mut net = 0i32;
        let mut value = 0.0;
        for (e, inv) in self.inverters.iter().enumerate() {
            let rs = inv.invert(p)?;
            if rs.ambiguous {
                return Err(GeometryError::Ambiguous.into());
            }
            let nodes = self.mesh.elements[e].nodes;
            for r in &rs.roots {
                let n = shape_eval(&r.xi).n;
                let v: f64 = nodes.iter().enumerate().map(|(k, &i)| n[k] * u_hat[i]).sum();
                value += f64::from(r.sign) * v;
                net += i32::from(r.sign);
            }
        }
        if net != 1 {
            return Err(GeometryError::CoverViolation(net).into());
        }
        Ok(value)
    }
}

pub fn field_at_point(mesh: &Mesh, u_hat: &[f64], p: &Point3) -> Result<f64, Error> {
    FieldEvaluator::new(mesh).value(u_hat, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_two_element, ExactSolution};
    use nalgebra::Vector3;

    #[test]
    fn reproduces_linear_fields() {
        let m = gen_two_element(0.3).unwrap();
        let ex = ExactSolution::benchmark();
        let u = ex.nodal_values(&m);
        let ev = FieldEvaluator::new(&m);
        for p in [Vector3::new(0.7, 0.8, 0.3), Vector3::new(0.1, 0.2, 0.9)] {
            assert!((ev.value(&u, &p).unwrap() - ex.value(&p)).abs() < 1e-9);
        }
        // a fold point: E₁ contributes both branches, which cancel for a linear field
        let p = m.geometry(0).map(&Vector3::new(0.9, 0.9, 0.0));
        assert!((ev.value(&u, &p).unwrap() - ex.value(&p)).abs() < 1e-9);
    }

    #[test]
    fn outside_point_violates_cover() {
        let m = gen_two_element(0.3).unwrap();
        let u = vec![0.0; m.nodes.len()];
        assert!(matches!(
            field_at_point(&m, &u, &Vector3::new(1.5, 0.5, 0.5)),
            Err(Error::Geometry(GeometryError::CoverViolation(0)))
        ));
    }
}
