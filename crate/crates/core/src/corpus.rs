//! Small closed triangulations used by tests, examples and the CLI demos.

use rand::Rng;

use crate::mesh::{MeshConnectivity, VertexId};
use crate::metric::DecoratedMetric;

pub fn tetrahedron_faces() -> Vec<[VertexId; 3]> {
    vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]
}

pub fn octahedron_faces() -> Vec<[VertexId; 3]> {
    // Poles 0 and 5, equator 1-2-3-4.
    vec![
        [0, 1, 2],
        [0, 2, 3],
        [0, 3, 4],
        [0, 4, 1],
        [5, 2, 1],
        [5, 3, 2],
        [5, 4, 3],
        [5, 1, 4],
    ]
}

/// Regular `m x n` grid on the torus, each square split along the same
/// diagonal. Needs `m, n >= 3` to be simplicial.
pub fn grid_torus_faces(m: usize, n: usize) -> Vec<[VertexId; 3]> {
    let id = |i: usize, j: usize| (i % m) + m * (j % n);
    let mut faces = Vec::with_capacity(2 * m * n);
    for j in 0..n {
        for i in 0..m {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    faces
}

/// A vertex-minimal (10 vertices, 24 faces) triangulation of the genus-2
/// surface.
pub fn genus_two_faces() -> Vec<[VertexId; 3]> {
    vec![
        [1, 2, 4],
        [2, 3, 5],
        [2, 5, 4],
        [3, 6, 5],
        [4, 5, 0],
        [4, 0, 6],
        [5, 6, 1],
        [5, 1, 0],
        [6, 0, 2],
        [6, 2, 1],
        [0, 1, 3],
        [3, 1, 8],
        [3, 8, 7],
        [1, 7, 9],
        [1, 9, 8],
        [7, 8, 0],
        [7, 0, 9],
        [9, 0, 3],
        [7, 1, 4],
        [3, 7, 4],
        [4, 6, 3],
        [2, 0, 8],
        [9, 3, 2],
        [2, 8, 9],
    ]
}

/// One-to-four midpoint subdivision. New vertices are numbered after the
/// old ones in edge-id order.
pub fn subdivide(mesh: &MeshConnectivity) -> (usize, Vec<[VertexId; 3]>) {
    let n = mesh.vertex_count();
    let mid = |a: VertexId, b: VertexId| n + mesh.edge_id(a, b).expect("face edge");
    let mut faces = Vec::with_capacity(4 * mesh.face_count());
    for &[a, b, c] in mesh.faces() {
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        faces.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
    }
    (n + mesh.edge_count(), faces)
}

/// Genus-2 surface refined once: 46 vertices, 96 faces.
pub fn genus_two_refined() -> MeshConnectivity {
    let base = MeshConnectivity::build(10, &genus_two_faces()).expect("corpus mesh");
    let (n, faces) = subdivide(&base);
    MeshConnectivity::build(n, &faces).expect("subdivision of a closed surface")
}

/// All edges of length `length`, all radii `radius`.
pub fn uniform_metric(mesh: &MeshConnectivity, length: f64, radius: f64) -> DecoratedMetric {
    DecoratedMetric {
        lengths: vec![length; mesh.edge_count()],
        radii: vec![radius; mesh.vertex_count()],
    }
}

/// Unit edge lengths with independent radii drawn from `[lo, hi]`. Any
/// `hi < 0.35` keeps every pair of vertex-circles well separated.
pub fn random_radii_metric<R: Rng>(mesh: &MeshConnectivity, lo: f64, hi: f64, rng: &mut R) -> DecoratedMetric {
    DecoratedMetric {
        lengths: vec![1.0; mesh.edge_count()],
        radii: (0..mesh.vertex_count()).map(|_| rng.gen_range(lo..=hi)).collect(),
    }
}
