//! Parametric generators for the two benchmark mesh families.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{FaceRef, HexElement, Mesh, Node};
use crate::error::MeshError;

/// Benchmark mesh family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    TwoElement,
    EightElement,
}

impl Family {
    pub fn generate(self, d: f64) -> Result<Mesh, MeshError> {
        match self {
            Family::TwoElement => gen_two_element(d),
            Family::EightElement => gen_eight_element(d),
        }
    }

    /// Valid `(lo, hi]` range of the tangling parameter.
    pub fn d_range(self) -> (f64, f64) {
        match self {
            Family::TwoElement => (0.0, 0.5),
            Family::EightElement => (0.0, 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::TwoElement => "two_elem",
            Family::EightElement => "eight_elem",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two_elem" | "two-elem" => Ok(Family::TwoElement),
            "eight_elem" | "eight-elem" => Ok(Family::EightElement),
            _ => Err(format!("unknown family `{s}`")),
        }
    }
}

fn face_sets(entries: &[(&str, &[(usize, usize)])]) -> BTreeMap<String, Vec<FaceRef>> {
    entries
        .iter()
        .map(|(name, faces)| {
            (
                name.to_string(),
                faces
                    .iter()
                    .map(|&(element, face)| FaceRef { element, face })
                    .collect(),
            )
        })
        .collect()
}

/// Unit cube split into two hexes sharing two faces; the first one is
/// concave with re-entrant vertices 9 and 10 (1-based).
///
/// Node 9 sits at `(0.5 − d, 0.48 − d, 0)` and node 10 at `(0.45, 0.4, 1)`.
/// Valid for `0 < d < 0.5`.
pub fn gen_two_element(d: f64) -> Result<Mesh, MeshError> {
    if !(d > 0.0 && d < 0.5) {
        return Err(MeshError::ParameterOutOfRange {
            value: d,
            lo: 0.0,
            hi: 0.5,
        });
    }
    let coords = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
        [0.0, 1.0, 1.0],
        [0.5 - d, 0.48 - d, 0.0],
        [0.45, 0.4, 1.0],
    ];
    let nodes = coords
        .iter()
        .enumerate()
        .map(|(id, &coords)| Node { id, coords })
        .collect();
    let elements = vec![
        HexElement {
            id: 0,
            nodes: [0, 1, 8, 3, 4, 5, 9, 7],
        },
        HexElement {
            id: 1,
            nodes: [1, 2, 3, 8, 5, 6, 7, 9],
        },
    ];
    Ok(Mesh {
        nodes,
        elements,
        face_sets: face_sets(&[
            ("left", &[(0, 5)]),
            ("right", &[(1, 2)]),
            ("front", &[(0, 2)]),
            ("back", &[(1, 3)]),
            ("bottom", &[(0, 0), (1, 0)]),
            ("top", &[(0, 1), (1, 1)]),
        ]),
    })
}

/// 2×2×2 grid on the unit cube with the central node moved to
/// `d·(0.5, 0.45, 0.4)`. Valid for `0 < d ≤ 1`; the benchmark sweep uses
/// `d ∈ [0.1, 0.4]`, and `d = 1` gives an untangled, nearly regular grid.
pub fn gen_eight_element(d: f64) -> Result<Mesh, MeshError> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(MeshError::ParameterOutOfRange {
            value: d,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let id = |i: usize, j: usize, k: usize| i + 3 * j + 9 * k;
    let mut nodes = Vec::with_capacity(27);
    for k in 0..3 {
        for j in 0..3 {
            for i in 0..3 {
                let coords = if (i, j, k) == (1, 1, 1) {
                    [0.5 * d, 0.45 * d, 0.4 * d]
                } else {
                    [0.5 * i as f64, 0.5 * j as f64, 0.5 * k as f64]
                };
                nodes.push(Node {
                    id: id(i, j, k),
                    coords,
                });
            }
        }
    }
    let mut elements = Vec::with_capacity(8);
    let mut sets: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
    for k in 0..2 {
        for j in 0..2 {
            for i in 0..2 {
                let e = elements.len();
                elements.push(HexElement {
                    id: e,
                    nodes: [
                        id(i, j, k),
                        id(i + 1, j, k),
                        id(i + 1, j + 1, k),
                        id(i, j + 1, k),
                        id(i, j, k + 1),
                        id(i + 1, j, k + 1),
                        id(i + 1, j + 1, k + 1),
                        id(i, j + 1, k + 1),
                    ],
                });
                let faces = [
                    (i == 0, "left", 5),
                    (i == 1, "right", 3),
                    (j == 0, "front", 2),
                    (j == 1, "back", 4),
                    (k == 0, "bottom", 0),
                    (k == 1, "top", 1),
                ];
                for (on, name, face) in faces {
                    if on {
                        sets.entry(name).or_default().push((e, face));
                    }
                }
            }
        }
    }
    let entries: Vec<(&str, &[(usize, usize)])> =
        sets.iter().map(|(k, v)| (*k, v.as_slice())).collect();
    Ok(Mesh {
        nodes,
        elements,
        face_sets: face_sets(&entries),
    })
}
