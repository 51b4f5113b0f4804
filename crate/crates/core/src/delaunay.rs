//! Weighted Delaunay flips and movement through the discrete conformal class.
//!
//! A [`ConformalState`] stores the decoration at `u = 0` and, per edge of the
//! current triangulation, the inversive distance of its vertex-circles.
//! Within one triangulation these data determine the metric at any `u`
//! exactly; a flip replaces one edge and records the inversive distance of
//! the new diagonal measured in the metric where the flip happened.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::geometry::{self, FaceCircle, GeometryError, Hinge};
use crate::mesh::{EdgeId, EdgeKey, MeshConnectivity, MeshError, VertexId};
use crate::metric::{self, DecoratedMetric, MetricError, ValidationReport};

/// Tolerance on the cosine-sum margin; only edges below `-DEL_EPS` flip.
pub const DEL_EPS: f64 = 1e-10;
/// `make_weighted_delaunay` gives up after `MAX_FLIPS_PER_EDGE * |E|` flips.
pub const MAX_FLIPS_PER_EDGE: usize = 50;
/// Smallest substep, as a fraction of the segment, tried by `evaluate_at`.
pub const STEP_FLOOR: f64 = 1e-14;
const MAX_CROSSINGS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DelaunayError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("invalid decorated metric: {} triangle and {} separation violations", .0.triangle_violations.len(), .0.separation_violations.len())]
    InvalidMetric(ValidationReport),
    #[error("more than {0} flips without reaching a weighted Delaunay triangulation")]
    FlipLimitExceeded(usize),
    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),
    #[error("substep underflow at t = {t} along the segment: {detail}")]
    StepUnderflow { t: f64, detail: String },
}

/// Outcome of the weighted Delaunay test on one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaunayTest {
    pub delaunay: bool,
    /// `cos(alpha_ij^k) + cos(alpha_ij^l)`; non-negative iff the two
    /// intersection angles sum to at most pi.
    pub margin: f64,
}

/// One executed flip, with local checks taken before and after.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipRecord {
    /// Slot of the flipped edge; it holds the new diagonal afterwards.
    pub edge_id: EdgeId,
    /// Edge ids of the quad sides `[jk, ki, il, lj]`.
    pub sides: [EdgeId; 4],
    pub edge: EdgeKey,
    pub new_edge: EdgeKey,
    pub margin: f64,
    /// Quad vertices `[i, j, k, l]`; `{ij}` was removed, `{kl}` added.
    pub vertices: [VertexId; 4],
    pub area_before: f64,
    pub area_after: f64,
    /// Angle contributed by the two quad faces at each of `[i, j, k, l]`.
    pub angles_before: [f64; 4],
    pub angles_after: [f64; 4],
}

/// Flips and cell crossings met while moving to a new factor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transit {
    pub flips: Vec<FlipRecord>,
    /// Segment parameters in `(0, 1]` at which the triangulation changed.
    pub crossings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalState {
    mesh: MeshConnectivity,
    base_radii: Vec<f64>,
    inversive: Vec<f64>,
    u: Vec<f64>,
    metric: DecoratedMetric,
}

#[derive(PartialEq)]
struct Pending(f64, EdgeId);

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Most negative margin first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl ConformalState {
    /// State at `u = 0` for a valid decorated metric. No flips are made.
    pub fn new(mesh: MeshConnectivity, metric: DecoratedMetric) -> Result<Self, DelaunayError> {
        let report = metric::validate(&metric, &mesh)?;
        if !report.is_valid() {
            return Err(DelaunayError::InvalidMetric(report));
        }
        let inversive = metric.inversive_distances(&mesh);
        Ok(ConformalState {
            u: vec![0.0; mesh.vertex_count()],
            base_radii: metric.radii.clone(),
            inversive,
            mesh,
            metric,
        })
    }

    /// [`new`](Self::new) followed by [`make_weighted_delaunay`](Self::make_weighted_delaunay).
    pub fn delaunay(mesh: MeshConnectivity, metric: DecoratedMetric) -> Result<(Self, Vec<FlipRecord>), DelaunayError> {
        let mut state = Self::new(mesh, metric)?;
        let flips = state.make_weighted_delaunay()?;
        Ok((state, flips))
    }

    pub fn mesh(&self) -> &MeshConnectivity {
        &self.mesh
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Radii at `u = 0`.
    pub fn base_radii(&self) -> &[f64] {
        &self.base_radii
    }

    pub fn inversive(&self) -> &[f64] {
        &self.inversive
    }

    /// The realized metric at the current factor.
    pub fn metric(&self) -> &DecoratedMetric {
        &self.metric
    }

    pub fn radii(&self) -> &[f64] {
        &self.metric.radii
    }

    pub fn lengths(&self) -> &[f64] {
        &self.metric.lengths
    }

    pub fn vertex_count(&self) -> usize {
        self.mesh.vertex_count()
    }

    pub fn total_area(&self) -> f64 {
        self.metric.total_area(&self.mesh).unwrap_or(f64::NAN)
    }

    pub fn face_circle(&self, f: usize) -> Result<FaceCircle, GeometryError> {
        geometry::face_circle(&self.metric.triangle(&self.mesh, f))
    }

    pub fn is_weighted_delaunay(&self, e: EdgeId) -> Result<DelaunayTest, GeometryError> {
        let margin = edge_margin(&self.mesh, &self.metric, e)?;
        Ok(DelaunayTest {
            delaunay: margin >= -DEL_EPS,
            margin,
        })
    }

    /// Margins of every edge, indexed by edge id.
    pub fn margins(&self) -> Result<Vec<f64>, GeometryError> {
        all_margins(&self.mesh, &self.metric)
    }

    /// Flips `e` without changing the surface. Fails if `e` cannot be flipped
    /// in an edge-manifold triangulation or its hinge is not convex.
    pub fn flip_edge(&mut self, e: EdgeId) -> Result<FlipRecord, DelaunayError> {
        let margin = edge_margin(&self.mesh, &self.metric, e)?;
        let q = self.mesh.flip_quad(e)?;
        let len = |x: EdgeId| self.metric.lengths[x];
        let hinge = Hinge {
            ij: len(e),
            jk: len(q.sides[0]),
            ki: len(q.sides[1]),
            il: len(q.sides[2]),
            lj: len(q.sides[3]),
        };
        let new_len = match geometry::flip_diagonal_length(&hinge) {
            Ok(l) => l,
            Err(GeometryError::NonConvexQuad) => {
                return Err(DelaunayError::InternalInvariantViolation(format!(
                    "edge {} has margin {margin:.3e} but its hinge is not convex",
                    self.mesh.edge(e).key
                )))
            }
            Err(other) => return Err(other.into()),
        };
        let verts = [q.i, q.j, q.k, q.l];
        let [a, b] = self.mesh.half_edges(e);
        let (area_before, angles_before) = quad_summary(
            &self.mesh,
            &self.metric,
            [
                (q.faces[0], [(a.corner + 1) % 3, (a.corner + 2) % 3, a.corner, 3]),
                (q.faces[1], [(b.corner + 2) % 3, (b.corner + 1) % 3, 3, b.corner]),
            ],
        )?;
        let old_key = self.mesh.edge(e).key;

        self.mesh.flip_edge(e)?;
        self.metric.lengths[e] = new_len;
        let (rk, rl) = (self.metric.radii[q.k], self.metric.radii[q.l]);
        let inv = metric::inversive_distance(new_len, rk, rl);
        if !(inv > 1.0) {
            return Err(DelaunayError::InternalInvariantViolation(format!(
                "new diagonal {}-{} has inversive distance {inv}",
                q.k, q.l
            )));
        }
        self.inversive[e] = inv;
        let (area_after, angles_after) = quad_summary(&self.mesh, &self.metric, [(q.faces[0], [1, 3, 0, 2]), (q.faces[1], [3, 1, 2, 0])])?;

        Ok(FlipRecord {
            edge_id: e,
            sides: q.sides,
            edge: old_key,
            new_edge: self.mesh.edge(e).key,
            margin,
            vertices: verts,
            area_before,
            area_after,
            angles_before,
            angles_after,
        })
    }

    /// Flips edges, worst margin first, until every edge is weighted Delaunay.
    pub fn make_weighted_delaunay(&mut self) -> Result<Vec<FlipRecord>, DelaunayError> {
        let limit = MAX_FLIPS_PER_EDGE * self.mesh.edge_count();
        let mut heap = BinaryHeap::new();
        for (e, m) in self.margins()?.into_iter().enumerate() {
            if m < -DEL_EPS {
                heap.push(Pending(m, e));
            }
        }
        let mut log = Vec::new();
        while let Some(Pending(_, e)) = heap.pop() {
            let m = edge_margin(&self.mesh, &self.metric, e)?;
            if m >= -DEL_EPS {
                continue;
            }
            if log.len() >= limit {
                return Err(DelaunayError::FlipLimitExceeded(limit));
            }
            let rec = self.flip_edge(e)?;
            for id in rec.sides.into_iter().chain([e]) {
                let m = edge_margin(&self.mesh, &self.metric, id)?;
                if m < -DEL_EPS {
                    heap.push(Pending(m, id));
                }
            }
            log.push(rec);
        }
        Ok(log)
    }

    /// Metric at `u` in the current triangulation, if every face is valid.
    fn realize(&self, u: &[f64]) -> Result<DecoratedMetric, MetricError> {
        let radii = metric::conformal_radii(&self.base_radii, u)?;
        let lengths = metric::realize_lengths(&self.mesh, &radii, &self.inversive)?;
        Ok(DecoratedMetric { lengths, radii })
    }

    /// Metric at `u` if the current triangulation is valid and weighted
    /// Delaunay there.
    fn probe(&self, u: &[f64]) -> Option<DecoratedMetric> {
        let m = self.realize(u).ok()?;
        let margins = all_margins(&self.mesh, &m).ok()?;
        margins.iter().all(|&x| x >= -DEL_EPS).then_some(m)
    }

    /// Moves the state to `new_u` along the straight segment, flipping at
    /// every cell boundary met on the way.
    pub fn evaluate_at(&mut self, new_u: &[f64]) -> Result<Transit, DelaunayError> {
        assert_eq!(new_u.len(), self.u.len(), "factor length must match vertex count");
        let mut transit = Transit {
            flips: self.make_weighted_delaunay()?,
            crossings: Vec::new(),
        };
        if new_u.iter().any(|x| !x.is_finite()) {
            return Err(MetricError::FactorOutOfRange {
                index: new_u.iter().position(|x| !x.is_finite()).unwrap(),
                value: f64::NAN,
            }
            .into());
        }
        if new_u == self.u.as_slice() {
            return Ok(transit);
        }
        let start = self.u.clone();
        let point = |t: f64| -> Vec<f64> {
            if t >= 1.0 {
                new_u.to_vec()
            } else {
                start.iter().zip(new_u).map(|(a, b)| a + t * (b - a)).collect()
            }
        };

        let mut t = 0.0;
        loop {
            if let Some(m) = self.probe(&point(1.0)) {
                self.metric = m;
                self.u = new_u.to_vec();
                return Ok(transit);
            }
            if transit.crossings.len() >= MAX_CROSSINGS {
                return Err(DelaunayError::StepUnderflow {
                    t,
                    detail: format!("more than {MAX_CROSSINGS} cell crossings"),
                });
            }
            // Halve until the triangulation survives, then bisect the boundary.
            let mut bad = 1.0;
            let mut step = 1.0 - t;
            let mut good = loop {
                step *= 0.5;
                if step < STEP_FLOOR {
                    return Err(DelaunayError::StepUnderflow {
                        t,
                        detail: "no admissible substep in the current triangulation".into(),
                    });
                }
                if self.probe(&point(t + step)).is_some() {
                    break t + step;
                }
                bad = t + step;
            };
            while bad - good > STEP_FLOOR {
                let mid = 0.5 * (good + bad);
                if self.probe(&point(mid)).is_some() {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            let u_bad = point(bad);
            let m = match self.realize(&u_bad) {
                Ok(m) => m,
                Err(e) => {
                    return Err(DelaunayError::StepUnderflow {
                        t: bad,
                        detail: format!("a face degenerates before any edge stops being Delaunay ({e})"),
                    })
                }
            };
            self.metric = m;
            self.u = u_bad;
            let flips = self.make_weighted_delaunay()?;
            if flips.is_empty() {
                return Err(DelaunayError::StepUnderflow {
                    t: bad,
                    detail: "boundary located but no edge needed flipping".into(),
                });
            }
            transit.flips.extend(flips);
            transit.crossings.push(bad);
            t = bad;
        }
    }
}

fn half_edge_cosine(mesh: &MeshConnectivity, metric: &DecoratedMetric, face: usize, corner: usize) -> Result<f64, GeometryError> {
    let fc = geometry::face_circle(&metric.triangle(mesh, face))?;
    Ok(fc.edge_distances[(corner + 1) % 3] / fc.radius)
}

fn edge_margin(mesh: &MeshConnectivity, metric: &DecoratedMetric, e: EdgeId) -> Result<f64, GeometryError> {
    let [a, b] = mesh.half_edges(e);
    Ok(half_edge_cosine(mesh, metric, a.face, a.corner)? + half_edge_cosine(mesh, metric, b.face, b.corner)?)
}

fn all_margins(mesh: &MeshConnectivity, metric: &DecoratedMetric) -> Result<Vec<f64>, GeometryError> {
    let circles = (0..mesh.face_count())
        .map(|f| geometry::face_circle(&metric.triangle(mesh, f)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut margins = vec![0.0; mesh.edge_count()];
    for (f, fc) in circles.iter().enumerate() {
        let fe = mesh.face_edges(f);
        for c in 0..3 {
            margins[fe[c]] += fc.edge_distances[(c + 1) % 3] / fc.radius;
        }
    }
    Ok(margins)
}

/// Area of two faces and the angle each contributes to quad vertices
/// `[i, j, k, l]`. `slots[v]` is the corner of the face at quad vertex `v`,
/// or 3 if that vertex is not a corner.
fn quad_summary(
    mesh: &MeshConnectivity,
    metric: &DecoratedMetric,
    faces: [(usize, [usize; 4]); 2],
) -> Result<(f64, [f64; 4]), GeometryError> {
    let mut area = 0.0;
    let mut angles = [0.0; 4];
    for (f, slots) in faces {
        let l = metric.face_lengths(mesh, f);
        area += geometry::triangle_area(l)?;
        let th = geometry::triangle_angles(l)?;
        for (v, &c) in slots.iter().enumerate() {
            if c < 3 {
                angles[v] += th.0[c];
            }
        }
    }
    Ok((area, angles))
}
