//! Oriented preimage counts over a whole mesh.

use crate::basis::{HexGeometry, Point3};
use crate::error::GeometryError;
use crate::mesh::Mesh;

use super::invert::{Inverter, RootSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementCount {
    pub element: usize,
    pub n_plus: usize,
    pub n_minus: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrientedCount {
    /// Elements with at least one root, in element order.
    pub per_element: Vec<ElementCount>,
    /// `Σ (n_plus − n_minus)`.
    pub net: i32,
    pub ambiguous: bool,
}

impl OrientedCount {
    pub fn checked_net(&self) -> Result<i32, GeometryError> {
        if self.ambiguous {
            Err(GeometryError::Ambiguous)
        } else {
            Ok(self.net)
        }
    }
}

/// Per-element root sets of `p`, in element order.
pub fn root_sets(inverters: &[Inverter], p: &Point3) -> Result<Vec<RootSet>, GeometryError> {
    inverters.iter().map(|inv| inv.invert(p)).collect()
}

pub fn inverters(geoms: &[HexGeometry]) -> Vec<Inverter> {
    geoms.iter().map(Inverter::new).collect()
}

pub fn oriented_count_in(inverters: &[Inverter], p: &Point3) -> Result<OrientedCount, GeometryError> {
    let sets = root_sets(inverters, p)?;
    let mut per_element = Vec::new();
    let mut net = 0i32;
    let mut ambiguous = false;
    for (element, rs) in sets.iter().enumerate() {
        ambiguous |= rs.ambiguous;
        if rs.roots.is_empty() {
            continue;
        }
        let (n_plus, n_minus) = (rs.n_plus(), rs.n_minus());
        net += n_plus as i32 - n_minus as i32;
        per_element.push(ElementCount {
            element,
            n_plus,
            n_minus,
        });
    }
    Ok(OrientedCount {
        per_element,
        net,
        ambiguous,
    })
}

pub fn oriented_count(mesh: &Mesh, p: &Point3) -> Result<OrientedCount, GeometryError> {
    oriented_count_in(&inverters(&mesh.geometries()), p)
}
