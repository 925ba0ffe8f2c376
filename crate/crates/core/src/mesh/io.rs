//! JSON mesh files.
//!
//! ```json
//! {
//!   "nodes": [[1, 0.0, 0.0, 0.0], ...],
//!   "hexes": [[1, n1, n2, n3, n4, n5, n6, n7, n8], ...],
//!   "face_sets": { "left": [[1, 5]], ... }
//! }
//! ```
//!
//! Node and element ids are 1-based in files and renumbered to 0-based
//! positions on load. Face-set entries are `[element id, local face 0..=5]`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{validate_mesh, FaceRef, HexElement, Mesh, Node, Violation};
use crate::error::MeshError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    nodes: Vec<(u64, f64, f64, f64)>,
    hexes: Vec<[u64; 9]>,
    #[serde(default)]
    face_sets: BTreeMap<String, Vec<(u64, u64)>>,
}

pub fn mesh_from_json(text: &str) -> Result<Mesh, MeshError> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| MeshError::Parse(e.to_string()))?;
    let mut violations = Vec::new();

    let mut node_index: HashMap<u64, usize> = HashMap::new();
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for &(id, x, y, z) in &file.nodes {
        if node_index.insert(id, nodes.len()).is_some() {
            violations.push(Violation::DuplicateNodeId { id: id as usize });
            continue;
        }
        nodes.push(Node {
            id: nodes.len(),
            coords: [x, y, z],
        });
    }

    let mut elem_index: HashMap<u64, usize> = HashMap::new();
    let mut elements = Vec::with_capacity(file.hexes.len());
    for h in &file.hexes {
        if elem_index.insert(h[0], elements.len()).is_some() {
            violations.push(Violation::DuplicateElementId { id: h[0] as usize });
            continue;
        }
        let mut corners = [0usize; 8];
        for k in 0..8 {
            match node_index.get(&h[k + 1]) {
                Some(&n) => corners[k] = n,
                None => {
                    violations.push(Violation::DanglingNode {
                        element: h[0] as usize,
                        node: h[k + 1] as usize,
                    });
                    corners[k] = usize::MAX;
                }
            }
        }
        elements.push(HexElement {
            id: elements.len(),
            nodes: corners,
        });
    }

    let mut face_sets = BTreeMap::new();
    for (name, entries) in &file.face_sets {
        let mut faces = Vec::with_capacity(entries.len());
        for &(elem, face) in entries {
            match elem_index.get(&elem) {
                Some(&e) => faces.push(FaceRef {
                    element: e,
                    face: face as usize,
                }),
                None => violations.push(Violation::UnknownElement {
                    set: name.clone(),
                    element: elem as usize,
                }),
            }
        }
        face_sets.insert(name.clone(), faces);
    }

    if !violations.is_empty() {
        return Err(MeshError::Invalid(violations));
    }
    let mesh = Mesh {
        nodes,
        elements,
        face_sets,
    };
    let v = validate_mesh(&mesh);
    if !v.is_empty() {
        return Err(MeshError::Invalid(v));
    }
    Ok(mesh)
}

pub fn mesh_to_json(mesh: &Mesh) -> Result<String, MeshError> {
    let v = validate_mesh(mesh);
    if !v.is_empty() {
        return Err(MeshError::Invalid(v));
    }
    let file = MeshFile {
        nodes: mesh
            .nodes
            .iter()
            .map(|n| (n.id as u64 + 1, n.coords[0], n.coords[1], n.coords[2]))
            .collect(),
        hexes: mesh
            .elements
            .iter()
            .map(|e| {
                let mut h = [0u64; 9];
                h[0] = e.id as u64 + 1;
                for k in 0..8 {
                    h[k + 1] = e.nodes[k] as u64 + 1;
                }
                h
            })
            .collect(),
        face_sets: mesh
            .face_sets
            .iter()
            .map(|(k, v)| {
                (
                    k.clone(),
                    v.iter()
                        .map(|f| (f.element as u64 + 1, f.face as u64))
                        .collect(),
                )
            })
            .collect(),
    };
    serde_json::to_string(&file).map_err(|e| MeshError::Parse(e.to_string()))
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })?;
    mesh_from_json(&text)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let path = path.as_ref();
    let text = mesh_to_json(mesh)?;
    std::fs::write(path, text).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_eight_element, gen_two_element};

    const CUBE: &str = r#"{
        "nodes": [[1,0,0,0],[2,1,0,0],[3,1,1,0],[4,0,1,0],[5,0,0,1],[6,1,0,1],[7,1,1,1],[8,0,1,1]],
        "hexes": [[1,1,2,3,4,5,6,7,8]],
        "face_sets": {"left": [[1,5]]}
    }"#;

    #[test]
    fn single_cube() {
        let m = mesh_from_json(CUBE).unwrap();
        assert_eq!(m.nodes.len(), 8);
        assert_eq!(m.elements.len(), 1);
        assert_eq!(m.elements[0].nodes, [0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(m.face_sets["left"], vec![FaceRef { element: 0, face: 5 }]);
    }

    #[test]
    fn dangling_reference() {
        let bad = CUBE.replace("[[1,1,2,3,4,5,6,7,8]]", "[[1,1,2,3,4,5,6,7,99]]");
        match mesh_from_json(&bad) {
            Err(MeshError::Invalid(v)) => {
                assert_eq!(v, vec![Violation::DanglingNode { element: 1, node: 99 }])
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_and_duplicates() {
        assert!(matches!(mesh_from_json("{\"nodes\": 3}"), Err(MeshError::Parse(_))));
        let dup = CUBE.replace("[8,0,1,1]", "[7,0,1,1]");
        assert!(matches!(mesh_from_json(&dup), Err(MeshError::Invalid(_))));
    }

    #[test]
    fn round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        for (i, m) in [
            gen_two_element(0.3).unwrap(),
            gen_two_element(0.1).unwrap(),
            gen_eight_element(0.2).unwrap(),
        ]
        .iter()
        .enumerate()
        {
            let path = dir.path().join(format!("m{i}.json"));
            save_mesh(m, &path).unwrap();
            let back = load_mesh(&path).unwrap();
            assert_eq!(&back, m);
        }
        let eight = load_mesh(dir.path().join("m2.json")).unwrap();
        assert_eq!((eight.nodes.len(), eight.elements.len()), (27, 8));
    }

    #[test]
    fn empty_mesh_cannot_be_saved() {
        let dir = tempfile::tempdir().unwrap();
        let err = save_mesh(&Mesh::default(), dir.path().join("e.json")).unwrap_err();
        assert!(matches!(err, MeshError::Invalid(v) if v == vec![Violation::NoElements]));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(load_mesh("/nonexistent/m.json"), Err(MeshError::Io { .. })));
    }
}
