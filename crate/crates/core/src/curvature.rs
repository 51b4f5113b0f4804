//! Angle defects, combinatorial alpha-curvature, and target classification.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::delaunay::ConformalState;
use crate::geometry::{self, GeometryError};
use crate::mesh::{EulerData, MeshConnectivity};
use crate::metric::DecoratedMetric;

/// Relative tolerance for the Gauss-Bonnet condition on an `alpha = 0` target.
pub const GAUSS_BONNET_TOL: f64 = 1e-9;

/// Curvatures of one realized metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureField {
    /// Angle defects `2 pi - theta_i`.
    pub k: Vec<f64>,
    /// `K_i / r_i^alpha`.
    pub r_alpha: Vec<f64>,
    /// `K_i / e^(alpha u_i)`.
    pub cal_r_alpha: Vec<f64>,
}

/// Cone angle at every vertex.
pub fn cone_angles(mesh: &MeshConnectivity, metric: &DecoratedMetric) -> Result<Vec<f64>, GeometryError> {
    let mut theta = vec![0.0; mesh.vertex_count()];
    for f in 0..mesh.face_count() {
        let a = geometry::triangle_angles(metric.face_lengths(mesh, f))?;
        for (c, v) in mesh.face(f).into_iter().enumerate() {
            theta[v] += a.0[c];
        }
    }
    Ok(theta)
}

pub fn angle_defects_of(mesh: &MeshConnectivity, metric: &DecoratedMetric) -> Result<Vec<f64>, GeometryError> {
    Ok(cone_angles(mesh, metric)?.into_iter().map(|t| 2.0 * PI - t).collect())
}

pub fn angle_defects(state: &ConformalState) -> Result<Vec<f64>, GeometryError> {
    angle_defects_of(state.mesh(), state.metric())
}

pub fn alpha_curvature(k: &[f64], radii: &[f64], alpha: f64) -> Vec<f64> {
    k.iter().zip(radii).map(|(k, r)| k / r.powf(alpha)).collect()
}

pub fn curvature_field(state: &ConformalState, alpha: f64) -> Result<CurvatureField, GeometryError> {
    let k = angle_defects(state)?;
    let r_alpha = alpha_curvature(&k, state.radii(), alpha);
    let cal_r_alpha = k.iter().zip(state.u()).map(|(k, u)| k / (alpha * u).exp()).collect();
    Ok(CurvatureField { k, r_alpha, cal_r_alpha })
}

/// Which existence case a target falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    /// chi < 0, alpha != 0, target <= 0 and not identically 0.
    NegEulerNonPos,
    /// chi = 0, alpha != 0, target identically 0.
    ZeroEulerZero,
    /// chi > 0, alpha < 0, target > 0.
    PosEulerNegAlphaPos,
    /// alpha = 0, target < 2 pi, summing to 2 pi chi.
    Alpha0GaussBonnet,
    Unclassified,
}

impl CaseLabel {
    pub fn is_supported(self) -> bool {
        self != CaseLabel::Unclassified
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseLabel::NegEulerNonPos => "NegEulerNonPos",
            CaseLabel::ZeroEulerZero => "ZeroEulerZero",
            CaseLabel::PosEulerNegAlphaPos => "PosEulerNegAlphaPos",
            CaseLabel::Alpha0GaussBonnet => "Alpha0GaussBonnet",
            CaseLabel::Unclassified => "Unclassified",
        };
        f.write_str(s)
    }
}

/// The table of solvable sign cases, for error messages.
pub const CASE_TABLE: &str = "\
supported cases for target curvature R (alpha-curvature K_i / r_i^alpha):
  (1) chi > 0, alpha < 0, R > 0
  (2) chi < 0, alpha != 0, R <= 0, R not identically 0
  (3) chi = 0, alpha != 0, R identically 0
  (4) alpha = 0, R < 2 pi everywhere, sum of R = 2 pi chi";

pub fn classify_target(alpha: f64, target: &[f64], euler: EulerData) -> CaseLabel {
    let chi = euler.chi;
    if alpha == 0.0 {
        let sum: f64 = target.iter().sum();
        let scale = target.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        let gb = (sum - 2.0 * PI * chi as f64).abs() <= GAUSS_BONNET_TOL * scale;
        return if gb && target.iter().all(|&x| x < 2.0 * PI) {
            CaseLabel::Alpha0GaussBonnet
        } else {
            CaseLabel::Unclassified
        };
    }
    if chi > 0 && alpha < 0.0 && target.iter().all(|&x| x > 0.0) {
        CaseLabel::PosEulerNegAlphaPos
    } else if chi < 0 && target.iter().all(|&x| x <= 0.0) && target.iter().any(|&x| x < 0.0) {
        CaseLabel::NegEulerNonPos
    } else if chi == 0 && target.iter().all(|&x| x == 0.0) {
        CaseLabel::ZeroEulerZero
    } else {
        CaseLabel::Unclassified
    }
}

/// `alpha` and a target `R` for `K_i / r_i^alpha`, with the target moved to
/// the `u`-parametrization: `calR_i = R_i r0_i^alpha`, so that the condition
/// reads `K_i = calR_i e^(alpha u_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTarget {
    pub alpha: f64,
    pub target: Vec<f64>,
    pub cal_target: Vec<f64>,
    pub case_label: CaseLabel,
}

impl CurvatureTarget {
    pub fn new(alpha: f64, target: Vec<f64>, base_radii: &[f64], euler: EulerData) -> Self {
        assert_eq!(target.len(), base_radii.len(), "one target value per vertex");
        let cal_target = target.iter().zip(base_radii).map(|(t, r)| t * r.powf(alpha)).collect();
        CurvatureTarget {
            case_label: classify_target(alpha, &target, euler),
            alpha,
            target,
            cal_target,
        }
    }

    pub fn for_state(alpha: f64, target: Vec<f64>, state: &ConformalState) -> Self {
        Self::new(alpha, target, state.base_radii(), state.mesh().euler_characteristic())
    }

    /// `calR_i e^(alpha u_i)`, the angle defect the target asks for at `u`.
    pub fn demanded(&self, u: &[f64]) -> Vec<f64> {
        self.cal_target.iter().zip(u).map(|(c, u)| c * (self.alpha * u).exp()).collect()
    }

    /// `alpha * calR` vanishes identically: the problem is scale invariant.
    pub fn is_scale_invariant(&self) -> bool {
        self.alpha == 0.0 || self.cal_target.iter().all(|&c| c == 0.0)
    }

    /// `alpha * calR <= 0` everywhere: the energy is convex.
    pub fn is_convex(&self) -> bool {
        self.cal_target.iter().all(|&c| self.alpha * c <= 0.0)
    }
}

/// `sum calR_i e^(alpha u_i) - 2 pi chi`; zero at any solution.
pub fn constraint_residual(target: &CurvatureTarget, u: &[f64], euler: EulerData) -> f64 {
    target.demanded(u).iter().sum::<f64>() - 2.0 * PI * euler.chi as f64
}
