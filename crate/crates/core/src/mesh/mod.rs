//! Closed triangulated surfaces: construction, adjacency, queries, file I/O.
//!
//! A [`TriMesh`] is a closed, outward-oriented 2-manifold of genus 0. The
//! invariants (every edge shared by exactly two faces, Euler characteristic 2,
//! positive signed volume, single one-ring cycle per vertex) are checked once
//! at construction; connectivity never changes afterwards, only vertex
//! positions move, so evolved meshes share the adjacency tables.

mod io;

pub use io::{read_obj, write_obj, write_obj_raw, write_ply, MeshIoError};

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::Vector3;
use thiserror::Error;

use crate::scalar::{real, Scalar};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("face {face} references vertex {index}, but the mesh has {vertex_count} vertices")]
    IndexOutOfBounds {
        face: usize,
        index: u32,
        vertex_count: usize,
    },
    #[error("face {face} repeats a vertex index")]
    DegenerateFace { face: usize },
    #[error("edge ({a}, {b}) is shared by {count} faces; a closed manifold needs exactly 2")]
    NonManifoldEdge { a: u32, b: u32, count: usize },
    #[error("Euler characteristic V-E+F = {chi}, expected 2 (genus 0)")]
    EulerCharacteristic { chi: i64 },
    #[error("signed volume {volume} is not positive; faces are not oriented outward")]
    NotOutwardOriented { volume: f64 },
    #[error("vertex {vertex}: incident faces do not close into a single cycle")]
    NonManifoldVertex { vertex: usize },
    #[error("vertex {vertex}: area-weighted normal has magnitude below 1e-12")]
    DegenerateNormal { vertex: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinitePosition { vertex: usize },
    #[error("expected {expected} vertex positions, got {got}")]
    VertexCountMismatch { expected: usize, got: usize },
}

/// Connectivity shared between a mesh and everything evolved from it.
#[derive(Debug)]
struct Topology {
    faces: Vec<[u32; 3]>,
    /// Incident face indices per vertex.
    vertex_faces: Vec<Vec<u32>>,
    /// Neighbor cycle per vertex, in the rotational order induced by face
    /// orientation, starting from the smallest neighbor index.
    one_rings: Vec<Vec<u32>>,
    edge_count: usize,
}

/// Closed, outward-oriented triangulated surface.
#[derive(Debug, Clone)]
pub struct TriMesh<S: Scalar> {
    vertices: Vec<Vector3<S>>,
    topo: Arc<Topology>,
}

/// Per-vertex unit normals (area-weighted average of incident face normals).
#[derive(Debug, Clone)]
pub struct VertexNormals<S: Scalar> {
    normals: Vec<Vector3<S>>,
}

impl<S: Scalar> VertexNormals<S> {
    pub fn as_slice(&self) -> &[Vector3<S>] {
        &self.normals
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }
}

impl<S: Scalar> std::ops::Index<usize> for VertexNormals<S> {
    type Output = Vector3<S>;

    fn index(&self, v: usize) -> &Vector3<S> {
        &self.normals[v]
    }
}

impl<S: Scalar> TriMesh<S> {
    /// Build a mesh and verify the closed-manifold invariants.
    pub fn new(vertices: Vec<Vector3<S>>, faces: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        for (v, p) in vertices.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(MeshError::NonFinitePosition { vertex: v });
            }
        }
        let nv = vertices.len();
        for (i, f) in faces.iter().enumerate() {
            for &ix in f {
                if ix as usize >= nv {
                    return Err(MeshError::IndexOutOfBounds {
                        face: i,
                        index: ix,
                        vertex_count: nv,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::DegenerateFace { face: i });
            }
        }

        let mut edges: HashMap<(u32, u32), usize> = HashMap::new();
        for f in &faces {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                *edges.entry(key).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &edges {
            if count != 2 {
                return Err(MeshError::NonManifoldEdge { a, b, count });
            }
        }
        let ne = edges.len();
        let chi = nv as i64 - ne as i64 + faces.len() as i64;
        if chi != 2 {
            return Err(MeshError::EulerCharacteristic { chi });
        }

        let mut vertex_faces = vec![Vec::new(); nv];
        for (i, f) in faces.iter().enumerate() {
            for &ix in f {
                vertex_faces[ix as usize].push(i as u32);
            }
        }

        let mut one_rings = Vec::with_capacity(nv);
        for (v, incident) in vertex_faces.iter().enumerate() {
            let ring = ordered_one_ring(&faces, incident, v as u32)
                .ok_or(MeshError::NonManifoldVertex { vertex: v })?;
            one_rings.push(ring);
        }

        let mesh = TriMesh {
            vertices,
            topo: Arc::new(Topology {
                faces,
                vertex_faces,
                one_rings,
                edge_count: ne,
            }),
        };
        let vol = mesh.signed_volume();
        if vol <= S::zero() {
            return Err(MeshError::NotOutwardOriented {
                volume: vol.as_f64(),
            });
        }
        Ok(mesh)
    }

    /// Same connectivity, new positions. Positions must be finite; the
    /// geometric invariants (orientation, volume sign) are the caller's to
    /// re-check where they matter — evolution monitors them per iteration.
    pub fn with_vertices(&self, vertices: Vec<Vector3<S>>) -> Result<Self, MeshError> {
        if vertices.len() != self.vertices.len() {
            return Err(MeshError::VertexCountMismatch {
                expected: self.vertices.len(),
                got: vertices.len(),
            });
        }
        for (v, p) in vertices.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(MeshError::NonFinitePosition { vertex: v });
            }
        }
        Ok(TriMesh {
            vertices,
            topo: Arc::clone(&self.topo),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.topo.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.topo.edge_count
    }

    pub fn vertices(&self) -> &[Vector3<S>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.topo.faces
    }

    /// Indices of the faces incident to `v`.
    pub fn vertex_faces(&self, v: usize) -> &[u32] {
        &self.topo.vertex_faces[v]
    }

    /// The neighbors of `v` as a cycle in rotational order (orientation of
    /// the ring follows face orientation; reversing the faces reverses it).
    pub fn one_ring(&self, v: usize) -> &[u32] {
        &self.topo.one_rings[v]
    }

    pub fn face_area(&self, face: usize) -> S {
        let [a, b, c] = self.topo.faces[face];
        let p0 = self.vertices[a as usize];
        let e1 = self.vertices[b as usize] - p0;
        let e2 = self.vertices[c as usize] - p0;
        e1.cross(&e2).norm() * real(0.5)
    }

    pub fn total_area(&self) -> S {
        (0..self.face_count()).map(|f| self.face_area(f)).sum()
    }

    /// Σ over faces of det[v0, v1, v2]/6; positive for outward orientation.
    pub fn signed_volume(&self) -> S {
        let mut vol = S::zero();
        for f in &self.topo.faces {
            let a = self.vertices[f[0] as usize];
            let b = self.vertices[f[1] as usize];
            let c = self.vertices[f[2] as usize];
            vol += a.dot(&b.cross(&c));
        }
        vol / real(6.0)
    }
}

/// Reconstruct the ordered neighbor cycle of `center` from its incident
/// faces. Returns `None` when the faces do not close into a single simple
/// cycle (open fan, duplicated wedge, bowtie vertex).
///
/// Shared by `TriMesh` validation and the lenient Marching Cubes statistics
/// path, which skips vertices where this fails instead of erroring.
pub fn ordered_one_ring(faces: &[[u32; 3]], incident: &[u32], center: u32) -> Option<Vec<u32>> {
    if incident.is_empty() {
        return None;
    }
    // Each incident face (center, a, b) contributes the directed link edge
    // a -> b; a single closed fan yields one permutation cycle.
    let mut succ: HashMap<u32, u32> = HashMap::with_capacity(incident.len());
    for &fi in incident {
        let f = faces[fi as usize];
        let k = f.iter().position(|&x| x == center)?;
        let a = f[(k + 1) % 3];
        let b = f[(k + 2) % 3];
        if succ.insert(a, b).is_some() {
            return None;
        }
    }
    let start = *succ.keys().min().expect("non-empty ring");
    let mut ring = Vec::with_capacity(succ.len());
    ring.push(start);
    let mut cur = *succ.get(&start)?;
    while cur != start {
        if ring.len() > succ.len() {
            return None;
        }
        ring.push(cur);
        cur = *succ.get(&cur)?;
    }
    if ring.len() != succ.len() {
        return None;
    }
    Some(ring)
}

/// Subdivided icosahedron with all vertices projected onto the sphere of the
/// given radius; V = 10·4^s + 2, F = 20·4^s.
pub fn icosphere<S: Scalar>(radius: S, subdiv: u32) -> TriMesh<S> {
    assert!(radius > S::zero(), "icosphere radius must be positive");
    assert!(subdiv <= 7, "icosphere subdivision capped at 7");

    let phi = (S::one() + real::<S>(5.0).sqrt()) / real(2.0);
    let one = S::one();
    let zero = S::zero();
    let mut vertices: Vec<Vector3<S>> = vec![
        Vector3::new(-one, phi, zero),
        Vector3::new(one, phi, zero),
        Vector3::new(-one, -phi, zero),
        Vector3::new(one, -phi, zero),
        Vector3::new(zero, -one, phi),
        Vector3::new(zero, one, phi),
        Vector3::new(zero, -one, -phi),
        Vector3::new(zero, one, -phi),
        Vector3::new(phi, zero, -one),
        Vector3::new(phi, zero, one),
        Vector3::new(-phi, zero, -one),
        Vector3::new(-phi, zero, one),
    ];
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdiv {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let mut mid = |i: u32, j: u32, vs: &mut Vec<Vector3<S>>| -> u32 {
                let key = (i.min(j), i.max(j));
                if let Some(&m) = midpoints.get(&key) {
                    return m;
                }
                let m = (vs[i as usize] + vs[j as usize]) * real::<S>(0.5);
                vs.push(m);
                let idx = (vs.len() - 1) as u32;
                midpoints.insert(key, idx);
                idx
            };
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }

    for v in &mut vertices {
        *v = v.normalize() * radius;
    }

    TriMesh::new(vertices, faces).expect("icosphere construction yields a valid closed mesh")
}

/// Per-vertex unit normals: normalize the sum of incident face area vectors
/// (cross product / 2), i.e. the area-weighted average of face normals.
pub fn vertex_normals<S: Scalar>(mesh: &TriMesh<S>) -> Result<VertexNormals<S>, MeshError> {
    let mut sums = vec![Vector3::zeros(); mesh.vertex_count()];
    for f in mesh.faces() {
        let p0 = mesh.vertices()[f[0] as usize];
        let e1 = mesh.vertices()[f[1] as usize] - p0;
        let e2 = mesh.vertices()[f[2] as usize] - p0;
        let area_vec = e1.cross(&e2) * real::<S>(0.5);
        for &ix in f {
            sums[ix as usize] += area_vec;
        }
    }
    let min_mag = real::<S>(1e-12);
    let mut normals = Vec::with_capacity(sums.len());
    for (v, s) in sums.into_iter().enumerate() {
        let mag = s.norm();
        if mag < min_mag {
            return Err(MeshError::DegenerateNormal { vertex: v });
        }
        normals.push(s / mag);
    }
    Ok(VertexNormals { normals })
}

/// One third of the summed incident face areas; Σ_v A_v equals the total
/// surface area exactly. The quadrature weights for surface integrals.
pub fn lumped_vertex_area<S: Scalar>(mesh: &TriMesh<S>) -> Vec<S> {
    let third = real::<S>(1.0 / 3.0);
    let mut areas = vec![S::zero(); mesh.vertex_count()];
    for (i, f) in mesh.faces().iter().enumerate() {
        let a = mesh.face_area(i) * third;
        for &ix in f {
            areas[ix as usize] += a;
        }
    }
    areas
}
