//! The energy of the angle defect and its target-corrected variant.
//!
//! Only gradients and Hessians are available in closed form. Energy values
//! are relative to a base point and obtained by integrating the gradient
//! along a straight segment, split wherever the triangulation changes.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;

use crate::curvature::{angle_defects, CurvatureTarget};
use crate::delaunay::{ConformalState, DelaunayError, Transit};
use crate::geometry::{self, GeometryError};

/// Gauss-Legendre nodes per panel.
pub const QUAD_NODES: usize = 16;
/// Longest panel, measured as the max-norm of the factor change across it.
pub const MAX_PANEL: f64 = 0.25;

/// `grad E = K`.
pub fn grad_e(state: &ConformalState) -> Result<Vec<f64>, GeometryError> {
    angle_defects(state)
}

/// `K_i - calR_i e^(alpha u_i)`.
pub fn grad_ee(state: &ConformalState, target: &CurvatureTarget) -> Result<Vec<f64>, GeometryError> {
    let k = angle_defects(state)?;
    Ok(k.iter().zip(target.demanded(state.u())).map(|(k, d)| k - d).collect())
}

fn gradient(state: &ConformalState, target: Option<&CurvatureTarget>) -> Result<Vec<f64>, GeometryError> {
    match target {
        Some(t) => grad_ee(state, t),
        None => grad_e(state),
    }
}

/// `dK_i/du_j` in the current triangulation.
///
/// Per face, `d theta_a / d u_b = h_ab / l_ab` for corners `a != b`, where
/// `h_ab` is the signed distance from the face-circle center to edge `ab`.
/// The diagonal follows from invariance under `u -> u + c`.
pub fn hessian_k(state: &ConformalState) -> Result<DMatrix<f64>, GeometryError> {
    let n = state.vertex_count();
    let mesh = state.mesh();
    let mut h = DMatrix::zeros(n, n);
    for f in 0..mesh.face_count() {
        let tri = state.metric().triangle(mesh, f);
        let fc = geometry::face_circle(&tri)?;
        let v = mesh.face(f);
        // Edge slot e joins corners e and e+1.
        for e in 0..3 {
            let w = fc.edge_distances[e] / tri.lengths[e];
            let (a, b) = (v[e], v[(e + 1) % 3]);
            h[(a, b)] -= w;
            h[(b, a)] -= w;
            h[(a, a)] += w;
            h[(b, b)] += w;
        }
    }
    Ok(h)
}

/// Hessian of `E` (no target) or of the target-corrected energy:
/// `dK/du - alpha diag(calR_i e^(alpha u_i))`.
pub fn hessian(state: &ConformalState, target: Option<&CurvatureTarget>) -> Result<DMatrix<f64>, GeometryError> {
    let mut h = hessian_k(state)?;
    if let Some(t) = target {
        for (i, d) in t.demanded(state.u()).into_iter().enumerate() {
            h[(i, i)] -= t.alpha * d;
        }
    }
    Ok(h)
}

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let q = GaussLegendre::new(NonZeroUsize::new(QUAD_NODES).unwrap());
        let mut pairs: Vec<(f64, f64)> = q.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    })
}

/// Result of integrating the gradient along one segment.
#[derive(Debug, Clone)]
pub struct SegmentIntegral {
    /// Energy at the end minus energy at the start.
    pub value: f64,
    /// The state moved to the end of the segment.
    pub end: ConformalState,
    /// Flips and crossings met on the way.
    pub transit: Transit,
}

/// Integrates the gradient of the chosen energy from `state.u()` to `u`.
pub fn integrate_segment(state: &ConformalState, u: &[f64], target: Option<&CurvatureTarget>) -> Result<SegmentIntegral, DelaunayError> {
    let start = state.u().to_vec();
    let d: Vec<f64> = u.iter().zip(&start).map(|(b, a)| b - a).collect();
    let span = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    // First pass locates the cell crossings.
    let mut end = state.clone();
    let transit = end.evaluate_at(u)?;
    if span == 0.0 {
        return Ok(SegmentIntegral { value: 0.0, end, transit });
    }
    let mut breaks = vec![0.0];
    breaks.extend(transit.crossings.iter().copied().filter(|&t| t > 0.0 && t < 1.0));
    breaks.push(1.0);

    let mut walker = state.clone();
    let mut value = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let panels = ((b - a) * span / MAX_PANEL).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let (pa, pb) = (a + p as f64 * h, a + (p + 1) as f64 * h);
            let mut sum = 0.0;
            for &(x, wt) in rule() {
                let t = 0.5 * ((pb - pa) * x + (pb + pa));
                let ut: Vec<f64> = start.iter().zip(&d).map(|(s, d)| s + t * d).collect();
                walker.evaluate_at(&ut)?;
                let g = gradient(&walker, target)?;
                sum += wt * g.iter().zip(&d).map(|(g, d)| g * d).sum::<f64>();
            }
            value += 0.5 * (pb - pa) * sum;
        }
    }
    Ok(SegmentIntegral { value, end, transit })
}

/// Energy at `u` relative to the base point `state_at_u0.u()`.
pub fn energy_value(state_at_u0: &ConformalState, u: &[f64], target: Option<&CurvatureTarget>) -> Result<f64, DelaunayError> {
    Ok(integrate_segment(state_at_u0, u, target)?.value)
}

/// Energy along a polyline starting at `state.u()`.
pub fn energy_along(state: &ConformalState, points: &[Vec<f64>], target: Option<&CurvatureTarget>) -> Result<f64, DelaunayError> {
    let mut cur = state.clone();
    let mut total = 0.0;
    for p in points {
        let seg = integrate_segment(&cur, p, target)?;
        total += seg.value;
        cur = seg.end;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::mesh::MeshConnectivity;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn random_state(seed: u64) -> ConformalState {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mesh = MeshConnectivity::build(10, &corpus::genus_two_faces()).unwrap();
        let metric = corpus::random_radii_metric(&mesh, 0.1, 0.3, &mut rng);
        let (mut s, _) = ConformalState::delaunay(mesh, metric).unwrap();
        let u: Vec<f64> = (0..10).map(|_| rng.gen_range(-0.3..0.3)).collect();
        s.evaluate_at(&u).unwrap();
        s
    }

    fn fd_hessian(s: &ConformalState, eps: f64) -> DMatrix<f64> {
        let n = s.vertex_count();
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut plus = s.clone();
            let mut minus = s.clone();
            let mut u = s.u().to_vec();
            u[j] += eps;
            plus.evaluate_at(&u).unwrap();
            u[j] -= 2.0 * eps;
            minus.evaluate_at(&u).unwrap();
            let (kp, km) = (grad_e(&plus).unwrap(), grad_e(&minus).unwrap());
            for i in 0..n {
                h[(i, j)] = (kp[i] - km[i]) / (2.0 * eps);
            }
        }
        h
    }

    #[test]
    fn hessian_matches_finite_differences() {
        for seed in 0..5 {
            let s = random_state(seed);
            let a = hessian_k(&s).unwrap();
            let fd = fd_hessian(&s, 1e-5);
            let err = (&a - &fd).abs().max();
            assert!(err < 1e-5, "seed {seed}: {err}");
            for i in 0..a.nrows() {
                assert!(a.row(i).sum().abs() < 1e-8);
            }
            let eig = a.clone().symmetric_eigenvalues();
            let mut ev: Vec<f64> = eig.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            assert!(ev[0] > -1e-10, "{ev:?}");
            assert!(ev[1] > 1e-6, "{ev:?}");
        }
    }

    #[test]
    fn gradient_sums_to_two_pi_chi() {
        let s = random_state(11);
        let g = grad_e(&s).unwrap();
        assert!((g.iter().sum::<f64>() + 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn scaling_law() {
        let s = random_state(3);
        let c = 0.37;
        let u: Vec<f64> = s.u().iter().map(|x| x + c).collect();
        let e = energy_value(&s, &u, None).unwrap();
        assert!((e - 2.0 * PI * c * -2.0).abs() < 1e-8, "{e}");
    }

    #[test]
    fn gradient_matches_energy_differences() {
        let s = random_state(5);
        let mesh_chi = s.mesh().euler_characteristic();
        let t = CurvatureTarget::new(2.0, vec![-1.0; 10], s.base_radii(), mesh_chi);
        let g = grad_ee(&s, &t).unwrap();
        let eps = 1e-5;
        for i in 0..10 {
            let mut up = s.u().to_vec();
            up[i] += eps;
            let mut dn = s.u().to_vec();
            dn[i] -= eps;
            let fd = (energy_value(&s, &up, Some(&t)).unwrap() - energy_value(&s, &dn, Some(&t)).unwrap()) / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-6, "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn path_independence_and_convexity() {
        let s = random_state(8);
        let mut rng = rand::rngs::StdRng::seed_from_u64(99);
        let t = CurvatureTarget::new(2.0, vec![-1.0; 10], s.base_radii(), s.mesh().euler_characteristic());
        let target: Vec<f64> = s.u().iter().map(|x| x + rng.gen_range(-0.8..0.8)).collect();
        let via: Vec<f64> = s.u().iter().map(|x| x + rng.gen_range(-0.8..0.8)).collect();
        let direct = energy_value(&s, &target, Some(&t)).unwrap();
        let bent = energy_along(&s, &[via.clone(), target.clone()], Some(&t)).unwrap();
        assert!((direct - bent).abs() < 1e-7, "{direct} vs {bent}");

        let mid: Vec<f64> = s.u().iter().zip(&target).map(|(a, b)| 0.5 * (a + b)).collect();
        let e_mid = energy_value(&s, &mid, Some(&t)).unwrap();
        assert!(e_mid <= 0.5 * direct + 1e-9);
    }
}
