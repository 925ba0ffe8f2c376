//! Hexahedral mesh model, validation, boundary description and the exact
//! linear solution used by the benchmarks.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::Vector3;

use crate::basis::{HexGeometry, Point3, CORNERS};
use crate::error::MeshError;

mod generate;
mod io;

pub use generate::{gen_eight_element, gen_two_element, Family};
pub use io::{load_mesh, mesh_from_json, mesh_to_json, save_mesh};

/// Corners of each local face, ordered counterclockwise seen from outside.
///
/// 0: ξ₃=−1, 1: ξ₃=+1, 2: ξ₂=−1, 3: ξ₁=+1, 4: ξ₂=+1, 5: ξ₁=−1.
pub const FACE_CORNERS: [[usize; 4]; 6] = [
    [0, 3, 2, 1],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [1, 2, 6, 5],
    [2, 3, 7, 6],
    [3, 0, 4, 7],
];

/// Parametric point of the volume for face coordinates `(s, t) ∈ [-1, 1]²`.
///
/// Face corners `k = 0..4` sit at `(s, t) = (−1,−1), (1,−1), (1,1), (−1,1)`.
pub fn face_to_volume(face: usize, s: f64, t: f64) -> Vector3<f64> {
    let m = bilinear_weights(s, t);
    let mut xi = Vector3::zeros();
    for (k, &c) in FACE_CORNERS[face].iter().enumerate() {
        xi += Vector3::from(CORNERS[c]) * m[k];
    }
    xi
}

/// Bilinear weights of the 4 face corners.
pub fn bilinear_weights(s: f64, t: f64) -> [f64; 4] {
    [
        0.25 * (1.0 - s) * (1.0 - t),
        0.25 * (1.0 + s) * (1.0 - t),
        0.25 * (1.0 + s) * (1.0 + t),
        0.25 * (1.0 - s) * (1.0 + t),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub coords: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct HexElement {
    pub id: usize,
    /// Node ids in the fixed corner ordering.
    pub nodes: [usize; 8],
}

/// A local face of one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceRef {
    pub element: usize,
    pub face: usize,
}

/// Hexahedral mesh. Ids are 0-based and equal to positions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub nodes: Vec<Node>,
    pub elements: Vec<HexElement>,
    pub face_sets: BTreeMap<String, Vec<FaceRef>>,
}

impl Mesh {
    pub fn coords(&self, node: usize) -> Point3 {
        Vector3::from(self.nodes[node].coords)
    }

    pub fn geometry(&self, element: usize) -> HexGeometry {
        let e = &self.elements[element];
        HexGeometry::new(e.nodes.map(|n| self.coords(n)))
    }

    pub fn geometries(&self) -> Vec<HexGeometry> {
        (0..self.elements.len()).map(|e| self.geometry(e)).collect()
    }

    /// Global node ids of a local face, in face-corner order.
    pub fn face_nodes(&self, f: FaceRef) -> [usize; 4] {
        FACE_CORNERS[f.face].map(|c| self.elements[f.element].nodes[c])
    }

    pub fn face_coords(&self, f: FaceRef) -> [Point3; 4] {
        self.face_nodes(f).map(|n| self.coords(n))
    }

    fn face_multiplicity(&self) -> HashMap<[usize; 4], usize> {
        let mut count = HashMap::new();
        for e in &self.elements {
            for face in 0..6 {
                let mut key = FACE_CORNERS[face].map(|c| e.nodes[c]);
                key.sort_unstable();
                *count.entry(key).or_insert(0) += 1;
            }
        }
        count
    }

    /// Faces owned by exactly one element.
    pub fn exterior_faces(&self) -> Vec<FaceRef> {
        let count = self.face_multiplicity();
        let mut out = Vec::new();
        for e in &self.elements {
            for face in 0..6 {
                let mut key = FACE_CORNERS[face].map(|c| e.nodes[c]);
                key.sort_unstable();
                if count[&key] == 1 {
                    out.push(FaceRef {
                        element: e.id,
                        face,
                    });
                }
            }
        }
        out
    }

    pub fn is_exterior(&self, f: FaceRef) -> bool {
        if f.element >= self.elements.len() || f.face >= 6 {
            return false;
        }
        let count = self.face_multiplicity();
        let mut key = self.face_nodes(f);
        key.sort_unstable();
        count.get(&key) == Some(&1)
    }

    /// Sorted, deduplicated node ids of a face set.
    pub fn face_set_nodes(&self, name: &str) -> Result<Vec<usize>, MeshError> {
        let faces = self
            .face_sets
            .get(name)
            .ok_or_else(|| MeshError::UnknownFaceSet(name.to_string()))?;
        let mut nodes: Vec<usize> = faces.iter().flat_map(|&f| self.face_nodes(f)).collect();
        nodes.sort_unstable();
        nodes.dedup();
        Ok(nodes)
    }
}

/// A problem found by [`validate_mesh`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoElements,
    NonSequentialNodeId { position: usize, id: usize },
    NonSequentialElementId { position: usize, id: usize },
    NonFiniteCoords { node: usize },
    DuplicateCoords { first: usize, second: usize },
    DuplicateNodeId { id: usize },
    DuplicateElementId { id: usize },
    DanglingNode { element: usize, node: usize },
    RepeatedNode { element: usize, node: usize },
    CoincidentCorners { element: usize },
    UnknownElement { set: String, element: usize },
    BadFaceIndex { set: String, element: usize, face: usize },
    NonExteriorFace { set: String, element: usize, face: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoElements => write!(f, "mesh has no elements"),
            NonSequentialNodeId { position, id } => {
                write!(f, "node at position {position} has id {id}")
            }
            NonSequentialElementId { position, id } => {
                write!(f, "element at position {position} has id {id}")
            }
            NonFiniteCoords { node } => write!(f, "node {node} has non-finite coordinates"),
            DuplicateCoords { first, second } => {
                write!(f, "nodes {first} and {second} share coordinates")
            }
            DuplicateNodeId { id } => write!(f, "duplicate node id {id}"),
            DuplicateElementId { id } => write!(f, "duplicate element id {id}"),
            DanglingNode { element, node } => {
                write!(f, "element {element} references missing node {node}")
            }
            RepeatedNode { element, node } => {
                write!(f, "element {element} uses node {node} twice")
            }
            CoincidentCorners { element } => write!(f, "element {element} has coincident corners"),
            UnknownElement { set, element } => {
                write!(f, "face set `{set}` references missing element {element}")
            }
            BadFaceIndex { set, element, face } => {
                write!(f, "face set `{set}`: element {element} has no local face {face}")
            }
            NonExteriorFace { set, element, face } => {
                write!(f, "face set `{set}`: face {face} of element {element} is interior")
            }
        }
    }
}

/// Lists every invariant violation; an empty list means the mesh is valid.
pub fn validate_mesh(mesh: &Mesh) -> Vec<Violation> {
    let mut out = Vec::new();
    if mesh.elements.is_empty() {
        out.push(Violation::NoElements);
    }
    for (i, n) in mesh.nodes.iter().enumerate() {
        if n.id != i {
            out.push(Violation::NonSequentialNodeId { position: i, id: n.id });
        }
        if n.coords.iter().any(|c| !c.is_finite()) {
            out.push(Violation::NonFiniteCoords { node: i });
        }
    }
    let mut order: Vec<usize> = (0..mesh.nodes.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&mesh.nodes[a].coords, &mesh.nodes[b].coords);
        ca.partial_cmp(cb).unwrap_or(std::cmp::Ordering::Equal)
    });
    for w in order.windows(2) {
        if mesh.nodes[w[0]].coords == mesh.nodes[w[1]].coords {
            out.push(Violation::DuplicateCoords {
                first: w[0].min(w[1]),
                second: w[0].max(w[1]),
            });
        }
    }
    let n_nodes = mesh.nodes.len();
    let mut structurally_ok = true;
    for (i, e) in mesh.elements.iter().enumerate() {
        if e.id != i {
            out.push(Violation::NonSequentialElementId { position: i, id: e.id });
        }
        for (k, &n) in e.nodes.iter().enumerate() {
            if n >= n_nodes {
                out.push(Violation::DanglingNode { element: e.id, node: n });
                structurally_ok = false;
            } else if e.nodes[..k].contains(&n) {
                out.push(Violation::RepeatedNode { element: e.id, node: n });
                structurally_ok = false;
            }
        }
        if e.nodes.iter().all(|&n| n < n_nodes) {
            let c: Vec<[f64; 3]> = e.nodes.iter().map(|&n| mesh.nodes[n].coords).collect();
            let coincident = (0..8).any(|a| (a + 1..8).any(|b| c[a] == c[b]));
            if coincident {
                out.push(Violation::CoincidentCorners { element: e.id });
            }
        }
    }
    if structurally_ok {
        let count = mesh.face_multiplicity();
        for (name, faces) in &mesh.face_sets {
            for f in faces {
                if f.element >= mesh.elements.len() {
                    out.push(Violation::UnknownElement {
                        set: name.clone(),
                        element: f.element,
                    });
                } else if f.face >= 6 {
                    out.push(Violation::BadFaceIndex {
                        set: name.clone(),
                        element: f.element,
                        face: f.face,
                    });
                } else {
                    let mut key = mesh.face_nodes(*f);
                    key.sort_unstable();
                    if count.get(&key) != Some(&1) {
                        out.push(Violation::NonExteriorFace {
                            set: name.clone(),
                            element: f.element,
                            face: f.face,
                        });
                    }
                }
            }
        }
    }
    out
}

/// The benchmark's exact harmonic field `u(x) = g·x + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    pub gradient: Vector3<f64>,
    pub offset: f64,
}

impl ExactSolution {
    pub fn new(gradient: Vector3<f64>, offset: f64) -> Self {
        ExactSolution { gradient, offset }
    }

    /// `u = 0.579x + 0.246y + 0.482z − 0.374`.
    pub fn benchmark() -> Self {
        ExactSolution::new(Vector3::new(0.579, 0.246, 0.482), -0.374)
    }

    pub fn value(&self, x: &Point3) -> f64 {
        self.gradient.dot(x) + self.offset
    }

    /// Normal flux `g·n` through a surface with (not necessarily unit) normal `n`.
    pub fn flux(&self, n: &Vector3<f64>) -> f64 {
        self.gradient.dot(n)
    }

    pub fn nodal_values(&self, mesh: &Mesh) -> Vec<f64> {
        (0..mesh.nodes.len())
            .map(|i| self.value(&mesh.coords(i)))
            .collect()
    }
}

/// Which face sets carry Dirichlet and Neumann data.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub dirichlet_set: String,
    pub neumann_sets: Vec<String>,
}

impl BoundarySpec {
    /// Dirichlet on `dirichlet_set`, Neumann on every other set of the mesh.
    pub fn with_dirichlet(mesh: &Mesh, dirichlet_set: &str) -> Self {
        BoundarySpec {
            dirichlet_set: dirichlet_set.to_string(),
            neumann_sets: mesh
                .face_sets
                .keys()
                .filter(|k| k.as_str() != dirichlet_set)
                .cloned()
                .collect(),
        }
    }

    /// Dirichlet on `left` (x = 0), Neumann elsewhere.
    pub fn left_dirichlet(mesh: &Mesh) -> Self {
        Self::with_dirichlet(mesh, "left")
    }

    /// Checks that the sets exist, are disjoint and jointly cover the
    /// exterior faces exactly once.
    pub fn check(&self, mesh: &Mesh) -> Result<(), MeshError> {
        let mut seen: BTreeMap<FaceRef, usize> = BTreeMap::new();
        for name in std::iter::once(&self.dirichlet_set).chain(&self.neumann_sets) {
            let faces = mesh
                .face_sets
                .get(name)
                .ok_or_else(|| MeshError::UnknownFaceSet(name.clone()))?;
            for f in faces {
                *seen.entry(*f).or_insert(0) += 1;
            }
        }
        let exterior = mesh.exterior_faces();
        let covered = exterior.iter().all(|f| seen.get(f) == Some(&1));
        if !covered || seen.len() != exterior.len() {
            return Err(MeshError::Parse(
                "boundary sets must be disjoint and cover every exterior face".into(),
            ));
        }
        Ok(())
    }
}
