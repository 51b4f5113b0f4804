//! JSON problem and result files.
//!
//! A problem lists the faces, edge lengths keyed `"i-j"` with `i < j`,
//! per-vertex radii, and optionally a target and solver overrides. A result
//! stores the final triangulation by faces plus face-edge adjacency, since
//! after flips two edges may join the same pair of vertices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curvature::{CaseLabel, CurvatureField};
use crate::mesh::{EdgeId, EdgeKey, MeshConnectivity, MeshError, VertexId};
use crate::metric::DecoratedMetric;
use crate::solver::{self, Normalization, SolveConfig, SolveReport, Uniqueness, VerificationRecord};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("invalid problem: {0}")]
    Invalid(String),
}

impl IoError {
    /// Parse failures are distinguished from well-formed but invalid input.
    pub fn is_parse(&self) -> bool {
        matches!(self, IoError::Parse(_) | IoError::Read { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub vertex_count: usize,
    pub faces: Vec<[VertexId; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    pub lengths: BTreeMap<String, f64>,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub constant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeMode {
    SumZero,
    None,
}

impl From<NormalizeMode> for Normalization {
    fn from(m: NormalizeMode) -> Self {
        match m {
            NormalizeMode::SumZero => Normalization::SumZero,
            NormalizeMode::None => Normalization::None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub normalize: Option<NormalizeMode>,
    #[serde(default)]
    pub max_starts: Option<usize>,
    #[serde(default)]
    pub force: Option<bool>,
}

impl SolverSection {
    pub fn apply(&self, cfg: &mut SolveConfig) {
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(m) = self.max_iters {
            cfg.max_iters = m;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.normalize {
            cfg.normalization = n.into();
        }
        if let Some(k) = self.max_starts {
            cfg.max_starts = k;
        }
        if let Some(f) = self.force {
            cfg.force = f;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub mesh: MeshSection,
    pub metric: MetricSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
}

/// A loaded problem with connectivity built and lengths attached to edges.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: MeshConnectivity,
    pub metric: DecoratedMetric,
    pub target: Option<TargetSection>,
    pub solver: SolverSection,
}

fn parse_key(key: &str) -> Option<EdgeKey> {
    let (a, b) = key.split_once('-')?;
    let (a, b): (VertexId, VertexId) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (a < b && key == format!("{a}-{b}")).then(|| EdgeKey::new(a, b))
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }

    pub fn into_problem(self) -> Result<Problem, IoError> {
        let mesh = MeshConnectivity::build(self.mesh.vertex_count, &self.mesh.faces)?;
        if self.metric.radii.len() != mesh.vertex_count() {
            return Err(IoError::Invalid(format!(
                "{} radii for {} vertices",
                self.metric.radii.len(),
                mesh.vertex_count()
            )));
        }
        let mut lengths = vec![f64::NAN; mesh.edge_count()];
        for (key, &l) in &self.metric.lengths {
            let k = parse_key(key).ok_or_else(|| IoError::Invalid(format!("edge key {key:?} is not of the form \"i-j\" with i < j")))?;
            let e = mesh
                .edge_id(k.lo(), k.hi())
                .ok_or_else(|| IoError::Invalid(format!("length given for {key}, which is not an edge")))?;
            lengths[e] = l;
        }
        if let Some(e) = lengths.iter().position(|l| l.is_nan()) {
            return Err(IoError::Invalid(format!("no length for edge {}", mesh.edge(e).key)));
        }
        if let Some(l) = lengths.iter().chain(&self.metric.radii).find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(IoError::Invalid(format!(
                "lengths and radii must be positive and finite, found {l}"
            )));
        }
        if let Some(t) = &self.target {
            if let Some(c) = &t.curvature {
                if c.len() != mesh.vertex_count() {
                    return Err(IoError::Invalid(format!(
                        "{} target values for {} vertices",
                        c.len(),
                        mesh.vertex_count()
                    )));
                }
            }
            if t.constant && t.curvature.is_some() {
                return Err(IoError::Invalid("target gives both \"constant\" and \"curvature\"".into()));
            }
        }
        Ok(Problem {
            metric: DecoratedMetric {
                lengths,
                radii: self.metric.radii,
            },
            mesh,
            target: self.target,
            solver: self.solver.unwrap_or_default(),
        })
    }

    /// Problem file for a simplicial mesh and metric.
    pub fn from_parts(mesh: &MeshConnectivity, metric: &DecoratedMetric, target: Option<TargetSection>) -> Self {
        let lengths = mesh
            .edges()
            .iter()
            .zip(&metric.lengths)
            .map(|(r, &l)| (r.key.to_string(), l))
            .collect();
        ProblemFile {
            mesh: MeshSection {
                vertex_count: mesh.vertex_count(),
                faces: mesh.faces().to_vec(),
            },
            metric: MetricSection {
                lengths,
                radii: metric.radii.clone(),
            },
            target,
            solver: None,
        }
    }
}

pub fn read_problem(path: &str) -> Result<Problem, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.into(), source })?;
    ProblemFile::from_json(&text)?.into_problem()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub vertex_count: usize,
    pub euler_characteristic: i64,
    pub faces: Vec<[VertexId; 3]>,
    /// `face_edges[f][c]` is the edge opposite corner `c` of face `f`.
    pub face_edges: Vec<[EdgeId; 3]>,
    pub lengths: Vec<f64>,
    pub radii: Vec<f64>,
    /// Radii of the input, at `u = 0`.
    pub base_radii: Vec<f64>,
    pub u: Vec<f64>,
    pub alpha: f64,
    pub target: Vec<f64>,
    pub constant: Option<f64>,
    pub curvature: CurvatureField,
    pub residual: f64,
    pub tolerance: f64,
    pub case_label: CaseLabel,
    pub uniqueness: Uniqueness,
    pub flip_count: usize,
    pub iterations: usize,
    pub constraint_residual: Option<f64>,
    pub lagrange_mu: Option<f64>,
    pub verification: VerificationRecord,
}

impl ResultFile {
    pub fn from_report(report: &SolveReport) -> Result<Self, IoError> {
        let state = &report.state;
        let mesh = state.mesh();
        let curvature = crate::curvature::curvature_field(state, report.target.alpha).map_err(|e| IoError::Invalid(e.to_string()))?;
        Ok(ResultFile {
            vertex_count: mesh.vertex_count(),
            euler_characteristic: mesh.euler_characteristic().chi,
            faces: mesh.faces().to_vec(),
            face_edges: (0..mesh.face_count()).map(|f| mesh.face_edges(f)).collect(),
            lengths: state.lengths().to_vec(),
            radii: state.radii().to_vec(),
            base_radii: state.base_radii().to_vec(),
            u: report.u.clone(),
            alpha: report.target.alpha,
            target: report.target.target.clone(),
            constant: report.constant,
            curvature,
            residual: report.residual,
            tolerance: report.tolerance,
            case_label: report.case_label,
            uniqueness: report.uniqueness,
            flip_count: report.flip_count(),
            iterations: report.iterations,
            constraint_residual: report.constraint_residual,
            lagrange_mu: report.lagrange_mu,
            verification: solver::verify_solution(report),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    /// Recomputes the verification record from the stored triangulation,
    /// metric, factor and target alone.
    pub fn verify(&self) -> Result<VerificationRecord, IoError> {
        let mesh = MeshConnectivity::from_adjacency(self.vertex_count, &self.faces, &self.face_edges)?;
        let metric = DecoratedMetric {
            lengths: self.lengths.clone(),
            radii: self.radii.clone(),
        };
        if metric.check_shape(&mesh).is_err() {
            return Err(IoError::Invalid("lengths or radii do not match the triangulation".into()));
        }
        if mesh.euler_characteristic().chi != self.euler_characteristic {
            return Err(IoError::Invalid("stored Euler characteristic does not match the faces".into()));
        }
        Ok(solver::verify_metric(
            &mesh,
            &metric,
            &self.base_radii,
            &self.u,
            self.alpha,
            &self.target,
            self.tolerance,
        ))
    }
}
