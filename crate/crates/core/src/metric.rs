//! Decorated PE metrics and their discrete conformal change.
//!
//! A conformal factor `u` scales radii by `e^{u_i}` and keeps every edge's
//! inversive distance fixed, so new lengths follow from
//! `l^2 = r_i^2 + r_j^2 + 2 r_i r_j I_ij`.

use thiserror::Error;

use crate::geometry::{self, DecoratedTriangle};
use crate::mesh::{EdgeKey, FaceId, MeshConnectivity};

/// Inversive distances at or below `1 + SEP_EPS` count as non-separated.
pub const SEP_EPS: f64 = 1e-9;
/// Largest admissible `|u_i|`.
pub const U_MAX: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("metric has {lengths} lengths and {radii} radii; mesh has {edges} edges and {vertices} vertices")]
    ShapeMismatch {
        lengths: usize,
        radii: usize,
        edges: usize,
        vertices: usize,
    },
    #[error("conformal factor entry {index} = {value} is outside [-{U_MAX}, {U_MAX}]")]
    FactorOutOfRange { index: usize, value: f64 },
    #[error("conformal length of an edge has non-positive square {0}")]
    NonPositiveSquaredLength(f64),
    #[error("face {face} violates the triangle inequality after the conformal change")]
    TriangleInequalityViolated { face: FaceId },
}

/// Lengths indexed by edge id, radii by vertex id.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoratedMetric {
    pub lengths: Vec<f64>,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDiagnostics {
    pub inversive: Vec<f64>,
    /// `arccosh(I)`; NaN where `I < 1`.
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    /// Faces whose lengths fail the strict triangle inequality.
    pub triangle_violations: Vec<(FaceId, [f64; 3])>,
    /// Edges whose vertex-circles are not separated.
    pub separation_violations: Vec<(EdgeKey, f64)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.triangle_violations.is_empty() && self.separation_violations.is_empty()
    }
}

pub fn inversive_distance(l: f64, ri: f64, rj: f64) -> f64 {
    (l * l - ri * ri - rj * rj) / (2.0 * ri * rj)
}

impl DecoratedMetric {
    pub fn check_shape(&self, mesh: &MeshConnectivity) -> Result<(), MetricError> {
        if self.lengths.len() != mesh.edge_count() || self.radii.len() != mesh.vertex_count() {
            return Err(MetricError::ShapeMismatch {
                lengths: self.lengths.len(),
                radii: self.radii.len(),
                edges: mesh.edge_count(),
                vertices: mesh.vertex_count(),
            });
        }
        Ok(())
    }

    /// Lengths of face `f` in its stored orientation `(v0v1, v1v2, v2v0)`.
    pub fn face_lengths(&self, mesh: &MeshConnectivity, f: FaceId) -> [f64; 3] {
        let fe = mesh.face_edges(f);
        // Edge opposite corner c joins corners c+1 and c+2.
        [self.lengths[fe[2]], self.lengths[fe[0]], self.lengths[fe[1]]]
    }

    pub fn triangle(&self, mesh: &MeshConnectivity, f: FaceId) -> DecoratedTriangle {
        let t = mesh.face(f);
        DecoratedTriangle {
            lengths: self.face_lengths(mesh, f),
            radii: t.map(|v| self.radii[v]),
        }
    }

    pub fn inversive_distances(&self, mesh: &MeshConnectivity) -> Vec<f64> {
        mesh.edges()
            .iter()
            .zip(&self.lengths)
            .map(|(rec, &l)| inversive_distance(l, self.radii[rec.key.lo()], self.radii[rec.key.hi()]))
            .collect()
    }

    pub fn diagnostics(&self, mesh: &MeshConnectivity) -> EdgeDiagnostics {
        let inversive = self.inversive_distances(mesh);
        let lambda = inversive.iter().map(|&i| i.acosh()).collect();
        EdgeDiagnostics { inversive, lambda }
    }

    /// Total area of all faces; `None` if some face is degenerate.
    pub fn total_area(&self, mesh: &MeshConnectivity) -> Option<f64> {
        (0..mesh.face_count())
            .map(|f| geometry::triangle_area(self.face_lengths(mesh, f)).ok())
            .sum()
    }
}

pub fn validate(metric: &DecoratedMetric, mesh: &MeshConnectivity) -> Result<ValidationReport, MetricError> {
    metric.check_shape(mesh)?;
    let mut report = ValidationReport::default();
    for f in 0..mesh.face_count() {
        let l = metric.face_lengths(mesh, f);
        if geometry::triangle_area(l).is_err() {
            report.triangle_violations.push((f, l));
        }
    }
    for (rec, i) in mesh.edges().iter().zip(metric.inversive_distances(mesh)) {
        let bad_radius = !(metric.radii[rec.key.lo()] > 0.0 && metric.radii[rec.key.hi()] > 0.0);
        if bad_radius || !(i > 1.0 + SEP_EPS) {
            report.separation_violations.push((rec.key, i));
        }
    }
    Ok(report)
}

fn check_factor(u: &[f64]) -> Result<(), MetricError> {
    match u.iter().position(|x| !(x.abs() <= U_MAX)) {
        Some(index) => Err(MetricError::FactorOutOfRange { index, value: u[index] }),
        None => Ok(()),
    }
}

pub fn conformal_radii(r0: &[f64], u: &[f64]) -> Result<Vec<f64>, MetricError> {
    check_factor(u)?;
    Ok(r0.iter().zip(u).map(|(r, x)| x.exp() * r).collect())
}

/// Length from the conformally invariant form of the edge's inversive distance.
pub fn length_from_inversive(ri: f64, rj: f64, inversive: f64) -> Result<f64, MetricError> {
    let sq = ri * ri + rj * rj + 2.0 * ri * rj * inversive;
    if !(sq > 0.0) {
        return Err(MetricError::NonPositiveSquaredLength(sq));
    }
    Ok(sq.sqrt())
}

pub fn conformal_length(l: f64, ri: f64, rj: f64, ui: f64, uj: f64) -> Result<f64, MetricError> {
    check_factor(&[ui, uj])?;
    let inv = inversive_distance(l, ri, rj);
    length_from_inversive(ui.exp() * ri, uj.exp() * rj, inv)
}

pub fn apply_conformal(metric: &DecoratedMetric, u: &[f64], mesh: &MeshConnectivity) -> Result<DecoratedMetric, MetricError> {
    metric.check_shape(mesh)?;
    if u.len() != mesh.vertex_count() {
        return Err(MetricError::ShapeMismatch {
            lengths: metric.lengths.len(),
            radii: u.len(),
            edges: mesh.edge_count(),
            vertices: mesh.vertex_count(),
        });
    }
    let radii = conformal_radii(&metric.radii, u)?;
    let inversive = metric.inversive_distances(mesh);
    let lengths = realize_lengths(mesh, &radii, &inversive)?;
    Ok(DecoratedMetric { lengths, radii })
}

/// Lengths for the given radii and per-edge inversive distances, checking
/// every face.
pub fn realize_lengths(mesh: &MeshConnectivity, radii: &[f64], inversive: &[f64]) -> Result<Vec<f64>, MetricError> {
    let lengths = mesh
        .edges()
        .iter()
        .zip(inversive)
        .map(|(rec, &i)| length_from_inversive(radii[rec.key.lo()], radii[rec.key.hi()], i))
        .collect::<Result<Vec<f64>, _>>()?;
    let out = DecoratedMetric {
        lengths,
        radii: radii.to_vec(),
    };
    for f in 0..mesh.face_count() {
        if geometry::triangle_area(out.face_lengths(mesh, f)).is_err() {
            return Err(MetricError::TriangleInequalityViolated { face: f });
        }
    }
    Ok(out.lengths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use proptest::prelude::*;

    /// The conformal length exactly as the discrete conformal equivalence
    /// is usually written, without the inversive-distance rewrite.
    fn literal_length(l: f64, ri: f64, rj: f64, ui: f64, uj: f64) -> f64 {
        let s = (ui + uj).exp();
        ((2.0 * ui).exp() - s) * ri * ri + ((2.0 * uj).exp() - s) * rj * rj + s * l * l
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn inversive_distance_values() {
        assert_eq!(inversive_distance(3.0, 1.0, 1.0), 3.5);
        assert_eq!(inversive_distance(2.0, 1.0, 1.0), 1.0);
        let (ri, rj) = (0.7f64, 1.3f64);
        assert!(inversive_distance((ri * ri + rj * rj).sqrt(), ri, rj).abs() < 1e-15);
    }

    #[test]
    fn validation_reports() {
        let tet = MeshConnectivity::build(4, &corpus::tetrahedron_faces()).unwrap();
        let good = corpus::uniform_metric(&tet, 3.0, 1.0);
        assert!(validate(&good, &tet).unwrap().is_valid());
        assert!(good.inversive_distances(&tet).iter().all(|&i| i == 3.5));

        let mut flat = good.clone();
        let f0 = tet.face_edges(0);
        flat.lengths[f0[0]] = 1.0;
        flat.lengths[f0[1]] = 1.0;
        flat.lengths[f0[2]] = 2.0;
        flat.radii = vec![0.1; 4];
        let rep = validate(&flat, &tet).unwrap();
        assert!(rep.triangle_violations.iter().any(|(f, _)| *f == 0));

        let mut touching = corpus::uniform_metric(&tet, 3.0, 1.0);
        touching.lengths[0] = 2.0;
        let rep = validate(&touching, &tet).unwrap();
        assert_eq!(rep.separation_violations.len(), 1);
        assert_eq!(rep.separation_violations[0].0, tet.edge(0).key);
    }

    #[test]
    fn shape_mismatch() {
        let tet = MeshConnectivity::build(4, &corpus::tetrahedron_faces()).unwrap();
        let m = DecoratedMetric {
            lengths: vec![1.0; 5],
            radii: vec![0.1; 4],
        };
        assert!(matches!(validate(&m, &tet), Err(MetricError::ShapeMismatch { .. })));
    }

    #[test]
    fn conformal_radii_cases() {
        let r0 = [0.5, 1.0, 2.0];
        assert_eq!(conformal_radii(&r0, &[0.0; 3]).unwrap(), r0.to_vec());
        let c = 0.3f64;
        let r = conformal_radii(&r0, &[c; 3]).unwrap();
        for (a, b) in r.iter().zip(r0) {
            assert!(rel(*a, c.exp() * b) < 1e-15);
        }
        let r = conformal_radii(&r0, &[2f64.ln(), 0.0, 0.0]).unwrap();
        assert!(rel(r[0], 1.0) < 1e-15);
        assert!(matches!(
            conformal_radii(&r0, &[701.0, 0.0, 0.0]),
            Err(MetricError::FactorOutOfRange { index: 0, .. })
        ));
        assert!(conformal_radii(&r0, &[0.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn conformal_length_cases() {
        assert!(rel(conformal_length(3.0, 1.0, 1.0, 0.0, 0.0).unwrap(), 3.0) < 1e-15);
        let c = -0.4f64;
        assert!(rel(conformal_length(3.0, 0.6, 1.1, c, c).unwrap(), c.exp() * 3.0) < 1e-15);
        // (4 - 2) + (1 - 2) + 2 * 9 = 19
        assert_eq!(literal_length(3.0, 1.0, 1.0, 2f64.ln(), 0.0), 19.0);
        assert!(rel(conformal_length(3.0, 1.0, 1.0, 2f64.ln(), 0.0).unwrap(), 19f64.sqrt()) < 1e-15);
    }

    #[test]
    fn identity_and_scaling() {
        let torus = MeshConnectivity::build(9, &corpus::grid_torus_faces(3, 3)).unwrap();
        let m = corpus::uniform_metric(&torus, 1.0, 0.3);
        let same = apply_conformal(&m, &[0.0; 9], &torus).unwrap();
        for (a, b) in same.lengths.iter().zip(&m.lengths) {
            assert!(rel(*a, *b) < 1e-15);
        }
        let scaled = apply_conformal(&m, &[0.5; 9], &torus).unwrap();
        for (a, b) in scaled.lengths.iter().zip(&m.lengths) {
            assert!(rel(*a, 0.5f64.exp() * b) < 1e-15);
        }
    }

    #[test]
    fn leaving_the_cell_is_reported() {
        let tet = MeshConnectivity::build(4, &corpus::tetrahedron_faces()).unwrap();
        let m = corpus::uniform_metric(&tet, 1.0, 0.1);
        let err = apply_conformal(&m, &[3.0, 3.0, 0.0, 0.0], &tet).unwrap_err();
        assert!(matches!(err, MetricError::TriangleInequalityViolated { .. }));
    }

    #[test]
    fn lambda_diagnostic() {
        let tet = MeshConnectivity::build(4, &corpus::tetrahedron_faces()).unwrap();
        let d = corpus::uniform_metric(&tet, 3.0, 1.0).diagnostics(&tet);
        assert!(d.lambda.iter().all(|&x| x > 0.0 && rel(x, 3.5f64.acosh()) < 1e-15));
    }

    proptest! {
        #[test]
        fn inversive_form_matches_literal(l in 1.0f64..3.0, ri in 0.05f64..0.4, rj in 0.05f64..0.4, ui in -3.0f64..3.0, uj in -3.0f64..3.0) {
            let a = conformal_length(l, ri, rj, ui, uj).unwrap();
            let b = literal_length(l, ri, rj, ui, uj).sqrt();
            prop_assert!(rel(a, b) < 1e-11);
        }

        #[test]
        fn inversive_distance_is_conformally_invariant(seed in any::<u64>(), amp in 0.0f64..0.3) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let tet = MeshConnectivity::build(4, &corpus::tetrahedron_faces()).unwrap();
            let m = corpus::uniform_metric(&tet, 1.0, 0.2);
            let u: Vec<f64> = (0..4).map(|_| rng.gen_range(-amp..=amp)).collect();
            let t = apply_conformal(&m, &u, &tet).unwrap();
            for (a, b) in m.inversive_distances(&tet).iter().zip(t.inversive_distances(&tet)) {
                prop_assert!(rel(*a, b) < 1e-12);
            }
        }

        #[test]
        fn conformal_changes_compose(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let torus = MeshConnectivity::build(9, &corpus::grid_torus_faces(3, 3)).unwrap();
            let m = corpus::uniform_metric(&torus, 1.0, 0.25);
            let u: Vec<f64> = (0..9).map(|_| rng.gen_range(-0.1..0.1)).collect();
            let v: Vec<f64> = (0..9).map(|_| rng.gen_range(-0.1..0.1)).collect();
            let uv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let two = apply_conformal(&apply_conformal(&m, &u, &torus).unwrap(), &v, &torus).unwrap();
            let one = apply_conformal(&m, &uv, &torus).unwrap();
            for (a, b) in two.lengths.iter().zip(&one.lengths) {
                prop_assert!(rel(*a, *b) < 1e-12);
            }
        }
    }
}
