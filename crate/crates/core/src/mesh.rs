//! Connectivity of closed, oriented, triangulated marked surfaces.
//!
//! Vertices are dense indices `0..n`. Edges live in slots whose ids stay
//! stable across flips: flipping edge `e` rewrites slot `e` to hold the new
//! diagonal, so per-edge data kept in parallel arrays stays aligned.
//!
//! Input must be simplicial, but flips may produce a general triangulation
//! (two edges with the same endpoints, or an edge from a vertex to itself).
//! Adjacency is therefore tracked by edge id, never by endpoint pair.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VertexId = usize;
pub type EdgeId = usize;
pub type FaceId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeshError {
    #[error("face {face} references vertex {vertex}, but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: FaceId,
        vertex: VertexId,
        vertex_count: usize,
    },
    #[error("face {0} repeats a vertex")]
    DegenerateFace(FaceId),
    #[error("edge {0} has a single incident face (surface has boundary)")]
    BoundaryEdge(EdgeKey),
    #[error("edge {edge} has {faces} incident faces")]
    NonManifold { edge: EdgeKey, faces: usize },
    #[error("the link of vertex {0} is not a single cycle")]
    NonManifoldVertex(VertexId),
    #[error("faces {0} and {1} share more than one edge")]
    InvalidFacePair(FaceId, FaceId),
    #[error("the face orientations cannot be made consistent")]
    NonOrientable,
    #[error("the surface is not connected")]
    Disconnected,
    #[error("the mesh has no faces")]
    Empty,
    #[error("edge {0} is not in the mesh")]
    UnknownEdge(EdgeKey),
    #[error("inconsistent face-edge adjacency: {0}")]
    InconsistentAdjacency(String),
    #[error("cannot flip edge {edge}: {reason}")]
    FlipForbidden { edge: EdgeKey, reason: &'static str },
}

/// Unordered vertex pair stored as `(min, max)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey(VertexId, VertexId);

impl EdgeKey {
    pub fn new(a: VertexId, b: VertexId) -> Self {
        if a <= b {
            EdgeKey(a, b)
        } else {
            EdgeKey(b, a)
        }
    }

    pub fn lo(self) -> VertexId {
        self.0
    }

    pub fn hi(self) -> VertexId {
        self.1
    }

    pub fn contains(self, v: VertexId) -> bool {
        self.0 == v || self.1 == v
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeRecord {
    pub key: EdgeKey,
    pub faces: [FaceId; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EulerData {
    pub chi: i64,
}

impl EulerData {
    pub fn genus(self) -> i64 {
        (2 - self.chi) / 2
    }
}

/// The quad around a flipped edge. Before the flip the faces were
/// `(i, j, k)` and `(j, i, l)`; afterwards they are `(k, i, l)` and
/// `(l, j, k)`. `sides` holds the edge ids of `[jk, ki, il, lj]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipQuad {
    pub edge: EdgeId,
    pub i: VertexId,
    pub j: VertexId,
    pub k: VertexId,
    pub l: VertexId,
    pub faces: [FaceId; 2],
    pub sides: [EdgeId; 4],
}

/// Where an edge sits inside one of its faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfEdgeView {
    pub face: FaceId,
    /// Corner of `face` opposite the edge.
    pub corner: usize,
    pub from: VertexId,
    pub to: VertexId,
    pub apex: VertexId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshConnectivity {
    vertex_count: usize,
    faces: Vec<[VertexId; 3]>,
    /// `face_edges[f][c]` is the edge opposite corner `c` of face `f`.
    face_edges: Vec<[EdgeId; 3]>,
    edges: Vec<EdgeRecord>,
}

impl MeshConnectivity {
    /// Builds adjacency for a closed surface. Faces may arrive with mixed
    /// orientations; they are reoriented to agree with face 0.
    pub fn build(vertex_count: usize, faces: &[[VertexId; 3]]) -> Result<Self, MeshError> {
        if faces.is_empty() || vertex_count == 0 {
            return Err(MeshError::Empty);
        }
        for (f, tri) in faces.iter().enumerate() {
            for &v in tri {
                if v >= vertex_count {
                    return Err(MeshError::IndexOutOfRange {
                        face: f,
                        vertex: v,
                        vertex_count,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[2] == tri[0] {
                return Err(MeshError::DegenerateFace(f));
            }
        }

        let mut incidence: HashMap<EdgeKey, Vec<FaceId>> = HashMap::new();
        for (f, tri) in faces.iter().enumerate() {
            for c in 0..3 {
                let key = EdgeKey::new(tri[(c + 1) % 3], tri[(c + 2) % 3]);
                incidence.entry(key).or_default().push(f);
            }
        }
        let mut keys: Vec<EdgeKey> = incidence.keys().copied().collect();
        keys.sort();
        for key in &keys {
            match incidence[key].len() {
                1 => return Err(MeshError::BoundaryEdge(*key)),
                2 => {}
                n => return Err(MeshError::NonManifold { edge: *key, faces: n }),
            }
        }
        for key in &keys {
            let [f, g] = [incidence[key][0], incidence[key][1]];
            if f == g {
                return Err(MeshError::InvalidFacePair(f, g));
            }
        }
        let mut seen_sets: HashMap<[VertexId; 3], FaceId> = HashMap::new();
        for (f, tri) in faces.iter().enumerate() {
            let mut s = *tri;
            s.sort_unstable();
            if let Some(&g) = seen_sets.get(&s) {
                return Err(MeshError::InvalidFacePair(g, f));
            }
            seen_sets.insert(s, f);
        }

        // Propagate orientation from face 0 across shared edges.
        let mut oriented: Vec<Option<[VertexId; 3]>> = vec![None; faces.len()];
        oriented[0] = Some(faces[0]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(f) = queue.pop_front() {
            let tri = oriented[f].expect("queued faces are oriented");
            for c in 0..3 {
                let (a, b) = (tri[(c + 1) % 3], tri[(c + 2) % 3]);
                let key = EdgeKey::new(a, b);
                let inc = &incidence[&key];
                let g = if inc[0] == f { inc[1] } else { inc[0] };
                // g must traverse the shared edge as b -> a.
                let want = |t: [VertexId; 3]| (0..3).any(|d| t[d] == b && t[(d + 1) % 3] == a);
                match oriented[g] {
                    Some(t) => {
                        if !want(t) {
                            return Err(MeshError::NonOrientable);
                        }
                    }
                    None => {
                        let t = faces[g];
                        let t = if want(t) { t } else { [t[0], t[2], t[1]] };
                        oriented[g] = Some(t);
                        queue.push_back(g);
                    }
                }
            }
        }
        if oriented.iter().any(Option::is_none) {
            return Err(MeshError::Disconnected);
        }
        let faces: Vec<[VertexId; 3]> = oriented.into_iter().map(|t| t.unwrap()).collect();

        let mut used = vec![false; vertex_count];
        for tri in &faces {
            for &v in tri {
                used[v] = true;
            }
        }
        if used.iter().any(|u| !u) {
            return Err(MeshError::Disconnected);
        }

        let mut edges = Vec::with_capacity(keys.len());
        let mut lookup = HashMap::with_capacity(keys.len());
        for key in keys {
            let inc = &incidence[&key];
            lookup.insert(key, edges.len());
            edges.push(EdgeRecord {
                key,
                faces: [inc[0], inc[1]],
            });
        }
        let face_edges = faces
            .iter()
            .map(|tri| std::array::from_fn(|c| lookup[&EdgeKey::new(tri[(c + 1) % 3], tri[(c + 2) % 3])]))
            .collect();

        let mesh = MeshConnectivity {
            vertex_count,
            faces,
            face_edges,
            edges,
        };
        mesh.check_vertex_links()?;
        Ok(mesh)
    }

    /// Rebuilds a possibly non-simplicial triangulation from its faces and
    /// `face_edges` table (the edge opposite each corner), as produced by
    /// [`faces`](Self::faces) and [`face_edges`](Self::face_edges).
    pub fn from_adjacency(vertex_count: usize, faces: &[[VertexId; 3]], face_edges: &[[EdgeId; 3]]) -> Result<Self, MeshError> {
        let bad = |m: String| Err(MeshError::InconsistentAdjacency(m));
        if faces.is_empty() || vertex_count == 0 {
            return Err(MeshError::Empty);
        }
        if faces.len() != face_edges.len() {
            return bad(format!("{} faces but {} face-edge rows", faces.len(), face_edges.len()));
        }
        if !faces.len().is_multiple_of(2) {
            return bad("odd number of faces".into());
        }
        let edge_count = 3 * faces.len() / 2;
        let mut sides: Vec<Vec<(FaceId, VertexId, VertexId)>> = vec![Vec::new(); edge_count];
        for (f, (tri, fe)) in faces.iter().zip(face_edges).enumerate() {
            for c in 0..3 {
                if tri[c] >= vertex_count {
                    return Err(MeshError::IndexOutOfRange {
                        face: f,
                        vertex: tri[c],
                        vertex_count,
                    });
                }
                if fe[c] >= edge_count {
                    return bad(format!("face {f} names edge {} of {edge_count}", fe[c]));
                }
                sides[fe[c]].push((f, tri[(c + 1) % 3], tri[(c + 2) % 3]));
            }
        }
        let mut edges = Vec::with_capacity(edge_count);
        for (e, s) in sides.iter().enumerate() {
            if s.len() != 2 {
                return bad(format!("edge {e} has {} sides", s.len()));
            }
            let ((f, a, b), (g, c, d)) = (s[0], s[1]);
            if (a, b) != (d, c) {
                return bad(format!("the sides of edge {e} are {a}->{b} and {c}->{d}"));
            }
            edges.push(EdgeRecord {
                key: EdgeKey::new(a, b),
                faces: [f, g],
            });
        }
        // Connectivity through edges, and every vertex used.
        let mut seen = vec![false; faces.len()];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(f) = queue.pop_front() {
            for &e in &face_edges[f] {
                for g in edges[e].faces {
                    if !seen[g] {
                        seen[g] = true;
                        queue.push_back(g);
                    }
                }
            }
        }
        let mut used = vec![false; vertex_count];
        faces.iter().flatten().for_each(|&v| used[v] = true);
        if seen.iter().any(|s| !s) || used.iter().any(|u| !u) {
            return Err(MeshError::Disconnected);
        }
        Ok(MeshConnectivity {
            vertex_count,
            faces: faces.to_vec(),
            face_edges: face_edges.to_vec(),
            edges,
        })
    }

    fn check_vertex_links(&self) -> Result<(), MeshError> {
        let mut link: Vec<Vec<(VertexId, VertexId)>> = vec![Vec::new(); self.vertex_count];
        for tri in &self.faces {
            for c in 0..3 {
                link[tri[c]].push((tri[(c + 1) % 3], tri[(c + 2) % 3]));
            }
        }
        for (v, arcs) in link.iter().enumerate() {
            // Each link vertex has exactly one outgoing arc on an oriented
            // edge-manifold, so following arcs from any start must visit all.
            let next: HashMap<VertexId, VertexId> = arcs.iter().copied().collect();
            if next.len() != arcs.len() {
                return Err(MeshError::NonManifoldVertex(v));
            }
            let start = arcs[0].0;
            let mut cur = start;
            let mut steps = 0;
            loop {
                cur = match next.get(&cur) {
                    Some(&n) => n,
                    None => return Err(MeshError::NonManifoldVertex(v)),
                };
                steps += 1;
                if cur == start || steps > arcs.len() {
                    break;
                }
            }
            if steps != arcs.len() {
                return Err(MeshError::NonManifoldVertex(v));
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn faces(&self) -> &[[VertexId; 3]] {
        &self.faces
    }

    pub fn face(&self, f: FaceId) -> [VertexId; 3] {
        self.faces[f]
    }

    pub fn face_edges(&self, f: FaceId) -> [EdgeId; 3] {
        self.face_edges[f]
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &EdgeRecord {
        &self.edges[e]
    }

    /// First edge joining `a` and `b`. Linear in the edge count.
    pub fn edge_id(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        let key = EdgeKey::new(a, b);
        self.edges.iter().position(|r| r.key == key)
    }

    /// No loops and no two edges with the same endpoints.
    pub fn is_simplicial(&self) -> bool {
        let keys = self.edge_keys();
        keys.len() == self.edges.len() && keys.iter().all(|k| k.lo() != k.hi())
    }

    pub fn euler_characteristic(&self) -> EulerData {
        EulerData {
            chi: self.vertex_count as i64 - self.edges.len() as i64 + self.faces.len() as i64,
        }
    }

    /// The two sides of edge `e`, one per incident face.
    pub fn half_edges(&self, e: EdgeId) -> [HalfEdgeView; 2] {
        let rec = &self.edges[e];
        let mut skip = usize::MAX;
        rec.faces.map(|f| {
            // An edge may appear twice in one face; take distinct corners.
            let c = (0..3)
                .find(|&c| self.face_edges[f][c] == e && !(skip == f * 3 + c))
                .expect("edge is recorded in its incident face");
            skip = f * 3 + c;
            let tri = self.faces[f];
            HalfEdgeView {
                face: f,
                corner: c,
                from: tri[(c + 1) % 3],
                to: tri[(c + 2) % 3],
                apex: tri[c],
            }
        })
    }

    /// Sorted neighbors of `v`.
    pub fn vertex_neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self
            .edges
            .iter()
            .filter(|r| r.key.contains(v))
            .map(|r| if r.key.lo() == v { r.key.hi() } else { r.key.lo() })
            .collect();
        out.sort_unstable();
        out
    }

    /// Quad around `e`. Only an edge whose two sides lie in one face
    /// cannot be flipped.
    pub fn flip_quad(&self, e: EdgeId) -> Result<FlipQuad, MeshError> {
        let [a, b] = self.half_edges(e);
        if a.face == b.face {
            return Err(MeshError::FlipForbidden {
                edge: self.edges[e].key,
                reason: "both sides of the edge lie in one face",
            });
        }
        let fa = self.face_edges[a.face];
        let fb = self.face_edges[b.face];
        Ok(FlipQuad {
            edge: e,
            i: a.from,
            j: a.to,
            k: a.apex,
            l: b.apex,
            faces: [a.face, b.face],
            sides: [
                fa[(a.corner + 1) % 3],
                fa[(a.corner + 2) % 3],
                fb[(b.corner + 1) % 3],
                fb[(b.corner + 2) % 3],
            ],
        })
    }

    /// Replaces edge `e` by the other diagonal of its quad, in place.
    pub fn flip_edge(&mut self, e: EdgeId) -> Result<FlipQuad, MeshError> {
        let q = self.flip_quad(e)?;
        let FlipQuad { i, j, k, l, .. } = q;
        let [f0, f1] = q.faces;
        let [jk, ki, il, lj] = q.sides;

        self.edges[e].key = EdgeKey::new(k, l);
        self.faces[f0] = [k, i, l];
        self.faces[f1] = [l, j, k];
        self.face_edges[f0] = [il, e, ki];
        self.face_edges[f1] = [jk, e, lj];
        // Re-seat the incidences of the five quad edges.
        const FREE: FaceId = usize::MAX;
        for x in [e, jk, ki, il, lj] {
            for slot in self.edges[x].faces.iter_mut() {
                if *slot == f0 || *slot == f1 {
                    *slot = FREE;
                }
            }
        }
        for f in [f0, f1] {
            for c in 0..3 {
                let x = self.face_edges[f][c];
                let slot = self.edges[x]
                    .faces
                    .iter_mut()
                    .find(|s| **s == FREE)
                    .expect("each edge has two sides");
                *slot = f;
            }
        }
        Ok(q)
    }

    /// Functional form of [`flip_edge`](Self::flip_edge).
    pub fn flipped(&self, e: EdgeId) -> Result<Self, MeshError> {
        let mut out = self.clone();
        out.flip_edge(e)?;
        Ok(out)
    }

    /// Face sets with each face rotated to start at its smallest vertex,
    /// sorted. Two meshes with the same triangulation compare equal.
    pub fn canonical_faces(&self) -> Vec<[VertexId; 3]> {
        let mut out: Vec<[VertexId; 3]> = self
            .faces
            .iter()
            .map(|t| {
                let m = (0..3).min_by_key(|&c| t[c]).unwrap();
                [t[m], t[(m + 1) % 3], t[(m + 2) % 3]]
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn edge_keys(&self) -> HashSet<EdgeKey> {
        self.edges.iter().map(|r| r.key).collect()
    }
}

/// Convenience wrapper matching the free-function style used elsewhere.
pub fn build_connectivity(faces: &[[VertexId; 3]], vertex_count: usize) -> Result<MeshConnectivity, MeshError> {
    MeshConnectivity::build(vertex_count, faces)
}

pub fn euler_characteristic(mesh: &MeshConnectivity) -> EulerData {
    mesh.euler_characteristic()
}

pub fn flip_connectivity(mesh: &MeshConnectivity, edge: EdgeId) -> Result<MeshConnectivity, MeshError> {
    mesh.flipped(edge)
}
