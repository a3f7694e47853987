//! Regular polyhedron vertex constructions, golden-ratio based where needed.
//!
//! All constructions are closed-form algebra (no trig), so vertex
//! coordinates are bit-identical across runs and platforms.

use crate::counterexamples::FamilyError;
use crate::geometry::Vec3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolyhedronKind {
    Icosahedron,
    Dodecahedron,
    Cube,
    Octahedron,
}

impl PolyhedronKind {
    pub fn vertex_count(self) -> usize {
        match self {
            PolyhedronKind::Icosahedron => 12,
            PolyhedronKind::Dodecahedron => 20,
            PolyhedronKind::Cube => 8,
            PolyhedronKind::Octahedron => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PolyhedronKind::Icosahedron => "icosahedron",
            PolyhedronKind::Dodecahedron => "dodecahedron",
            PolyhedronKind::Cube => "cube",
            PolyhedronKind::Octahedron => "octahedron",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Polyhedron {
    pub kind: PolyhedronKind,
    pub circumradius: f64,
    pub vertices: Vec<Vec3>,
}

const PHI: f64 = 1.618033988749894848204586834365638118;

/// Vertices of a regular polyhedron at the given circumradius.
///
/// The vertex order is fixed: it is part of the contract because the fixed
/// counterexample subsets are stored as indices into these lists.
pub fn polyhedron(kind: PolyhedronKind, circumradius: f64) -> Result<Polyhedron, FamilyError> {
    if circumradius <= 0.0 {
        return Err(FamilyError::NonPositive {
            name: "circumradius",
            value: circumradius,
        });
    }
    let raw: Vec<Vec3> = match kind {
        PolyhedronKind::Icosahedron => {
            // (0, ±1, ±phi) and cyclic shifts, grouped by sign pattern
            let mut v = Vec::with_capacity(12);
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    v.push([0.0, s1, s2 * PHI]);
                    v.push([s1, s2 * PHI, 0.0]);
                    v.push([s1 * PHI, 0.0, s2]);
                }
            }
            v
        }
        PolyhedronKind::Dodecahedron => {
            // cube corners first, then (0, ±1/phi, ±phi) cyclic shifts
            let mut v = Vec::with_capacity(20);
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    for s3 in [1.0, -1.0] {
                        v.push([s1, s2, s3]);
                    }
                }
            }
            let (a, b) = (1.0 / PHI, PHI);
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    v.push([0.0, s1 * a, s2 * b]);
                }
            }
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    v.push([s1 * a, s2 * b, 0.0]);
                }
            }
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    v.push([s1 * b, 0.0, s2 * a]);
                }
            }
            v
        }
        PolyhedronKind::Cube => {
            let mut v = Vec::with_capacity(8);
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    for s3 in [1.0, -1.0] {
                        v.push([s1, s2, s3]);
                    }
                }
            }
            v
        }
        PolyhedronKind::Octahedron => vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ],
    };
    let scale = match kind {
        PolyhedronKind::Icosahedron => circumradius / (1.0 + PHI * PHI).sqrt(),
        PolyhedronKind::Dodecahedron | PolyhedronKind::Cube => circumradius / 3f64.sqrt(),
        PolyhedronKind::Octahedron => circumradius,
    };
    let vertices = raw
        .into_iter()
        .map(|p| [p[0] * scale, p[1] * scale, p[2] * scale])
        .collect();
    Ok(Polyhedron {
        kind,
        circumradius,
        vertices,
    })
}
