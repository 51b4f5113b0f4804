//! Newton solver for prescribed and constant combinatorial alpha-curvature.
//!
//! When `alpha * calR <= 0` the target-corrected energy is convex and the
//! solver runs damped Newton with an Armijo search on the energy itself.
//! Otherwise, if the target has one sign matching `chi`, it minimizes the
//! scale-reduced energy `F(u) = E(u) - (2 pi chi / alpha) ln |sum calR_i e^(alpha u_i)|`,
//! which is invariant under `u -> u + c` and whose critical points, rescaled
//! onto `sum calR_i e^(alpha u_i) = 2 pi chi`, are exactly the solutions.
//! Anything else falls back to Levenberg-Marquardt on `|grad|^2 / 2`.
//! A start that stalls is retried from random factors.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curvature::{self, CaseLabel, CurvatureTarget, CASE_TABLE};
use crate::delaunay::{ConformalState, DelaunayError, FlipRecord, DEL_EPS};
use crate::energy::{self, integrate_segment};
use crate::geometry::GeometryError;
use crate::mesh::MeshConnectivity;
use crate::metric::{self, DecoratedMetric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// Shift scale-invariant solutions to `sum u = 0`.
    SumZero,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Uniqueness {
    UniqueUpToScaling,
    Unique,
    NotGuaranteed,
}

impl fmt::Display for Uniqueness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Uniqueness::UniqueUpToScaling => "UniqueUpToScaling",
            Uniqueness::Unique => "Unique",
            Uniqueness::NotGuaranteed => "NotGuaranteed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Stop when the max-norm of the gradient is at most this.
    pub tol: f64,
    pub max_iters: usize,
    pub armijo_c1: f64,
    pub backtrack: f64,
    /// Largest max-norm change of `u` per iteration.
    pub max_step: f64,
    pub normalization: Normalization,
    /// Initial factor of the first start; zero if absent.
    pub seed_u: Option<Vec<f64>>,
    /// Seeds the random restarts.
    pub seed: u64,
    pub max_starts: usize,
    pub threads: usize,
    /// Attempt unclassified targets.
    pub force: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-10,
            max_iters: 200,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            max_step: 1.0,
            normalization: Normalization::SumZero,
            seed_u: None,
            seed: 0,
            max_starts: 8,
            threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            force: false,
        }
    }
}

/// Progress of one iteration, passed to the caller's callback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationInfo {
    pub start: usize,
    pub iter: usize,
    pub residual: f64,
    pub flips: usize,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("{message}\n{CASE_TABLE}")]
    CaseUnsupported { case: CaseLabel, message: String },
    #[error("no convergence after {iters} iterations (residual {residual:.3e}) from {starts} start(s)")]
    MaxItersExceeded { iters: usize, residual: f64, starts: usize },
    #[error("line search failed at residual {residual:.3e}: {detail}")]
    StepUnderflow { residual: f64, detail: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Delaunay(#[from] DelaunayError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub u: Vec<f64>,
    pub state: ConformalState,
    pub target: CurvatureTarget,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    /// Index of the start that converged; 0 is the seed factor.
    pub start: usize,
    pub flips: Vec<FlipRecord>,
    pub case_label: CaseLabel,
    pub uniqueness: Uniqueness,
    /// `sum calR_i e^(alpha u_i) - 2 pi chi`, when `alpha != 0`.
    pub constraint_residual: Option<f64>,
    /// `2 pi chi / (alpha sum calR_i e^(alpha u_i))`; equals `1 / alpha`.
    pub lagrange_mu: Option<f64>,
    /// The curvature value for constant-curvature solves.
    pub constant: Option<f64>,
    pub tolerance: f64,
}

impl SolveReport {
    pub fn flip_count(&self) -> usize {
        self.flips.len()
    }
}

pub fn uniqueness(target: &CurvatureTarget) -> Uniqueness {
    if target.case_label == CaseLabel::PosEulerNegAlphaPos {
        // Reported as existence-only.
        Uniqueness::NotGuaranteed
    } else if target.is_scale_invariant() {
        Uniqueness::UniqueUpToScaling
    } else if target.is_convex() {
        Uniqueness::Unique
    } else {
        Uniqueness::NotGuaranteed
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Start {
    state: ConformalState,
    flips: Vec<FlipRecord>,
    history: Vec<f64>,
    iterations: usize,
}

enum StartError {
    Stalled(f64, String),
    Exhausted(f64),
    Fatal(SolveError),
}

/// Solves `(H + shift) d = -g` for the Newton direction.
fn newton_direction(h: &DMatrix<f64>, g: &[f64], target: &CurvatureTarget) -> Option<Vec<f64>> {
    let n = g.len();
    let rhs = -DVector::from_column_slice(g);
    if target.is_scale_invariant() {
        // Kernel along the constant vector: pin it with 11^T / n.
        let a = h + DMatrix::from_element(n, n, 1.0 / n as f64);
        let d = a.clone().cholesky().map(|c| c.solve(&rhs)).or_else(|| a.lu().solve(&rhs))?;
        let mean = d.mean();
        return Some(d.iter().map(|x| x - mean).collect());
    }
    if target.is_convex() {
        let trace = h.trace().abs().max(1e-300) / n as f64;
        let mut ridge = 0.0;
        for _ in 0..8 {
            let a = h + DMatrix::identity(n, n) * ridge;
            if let Some(c) = a.cholesky() {
                return Some(c.solve(&rhs).iter().copied().collect());
            }
            ridge = if ridge == 0.0 { 1e-12 * trace } else { ridge * 100.0 };
        }
        return None;
    }
    h.clone().lu().solve(&rhs).map(|d| d.iter().copied().collect())
}

/// Levenberg-Marquardt direction for the merit `|g|^2 / 2`.
fn lm_direction(h: &DMatrix<f64>, g: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let n = g.len();
    let gv = DVector::from_column_slice(g);
    let a = h.transpose() * h + DMatrix::identity(n, n) * lambda;
    let rhs = -(h.transpose() * gv);
    a.cholesky().map(|c| c.solve(&rhs).iter().copied().collect())
}

fn cap_step(d: &mut [f64], max_step: f64) {
    let m = max_abs(d);
    if m > max_step {
        d.iter_mut().for_each(|x| *x *= max_step / m);
    }
}

/// One accepted trial point.
struct Trial {
    state: ConformalState,
    flips: Vec<FlipRecord>,
    grad: Vec<f64>,
    step: f64,
}

/// Backtracking search along `d` on the energy (convex case).
fn energy_search(state: &ConformalState, g: &[f64], d: &[f64], target: &CurvatureTarget, cfg: &SolveConfig) -> Option<Trial> {
    let gd = dot(g, d);
    if !(gd < 0.0) {
        return None;
    }
    let res = max_abs(g);
    let mut t = 1.0;
    while t > 1e-12 {
        let u: Vec<f64> = state.u().iter().zip(d).map(|(u, d)| u + t * d).collect();
        if let Ok(seg) = integrate_segment(state, &u, Some(target)) {
            if let Ok(grad) = energy::grad_ee(&seg.end, target) {
                let armijo = seg.value <= cfg.armijo_c1 * t * gd;
                // Near the minimum the decrease is below rounding; accept
                // steps that still shrink the residual.
                let noise = seg.value.abs() <= 1e-14 && max_abs(&grad) < res;
                if armijo || noise {
                    return Some(Trial {
                        state: seg.end,
                        flips: seg.transit.flips,
                        grad,
                        step: t,
                    });
                }
            }
        }
        t *= cfg.backtrack;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Energy,
    Reduced,
    Merit,
}

fn mode(target: &CurvatureTarget, chi: i64) -> Mode {
    if target.is_convex() {
        Mode::Energy
    } else if chi != 0
        && target.alpha != 0.0
        && target.cal_target.iter().all(|&c| c * chi as f64 >= 0.0)
        && target.cal_target.iter().any(|&c| c != 0.0)
    {
        Mode::Reduced
    } else {
        Mode::Merit
    }
}

/// Shifts `u` by a constant so that `sum calR_i e^(alpha u_i) = 2 pi chi`.
fn rescale(state: &mut ConformalState, target: &CurvatureTarget, chi: i64) -> Result<(), DelaunayError> {
    let total: f64 = target.demanded(state.u()).iter().sum();
    let c = (2.0 * PI * chi as f64 / total).ln() / target.alpha;
    if c != 0.0 && c.is_finite() {
        let u: Vec<f64> = state.u().iter().map(|x| x + c).collect();
        state.evaluate_at(&u)?;
    }
    Ok(())
}

/// Newton direction on the reduced energy with the Hessian's eigenvalues
/// made positive. At a rescaled point its gradient equals `g`.
fn reduced_direction(state: &ConformalState, g: &[f64], target: &CurvatureTarget, chi: i64) -> Result<Vec<f64>, GeometryError> {
    let n = g.len();
    let mut h = energy::hessian_k(state)?;
    let w = DVector::from_vec(target.demanded(state.u()));
    let a = target.alpha;
    h -= DMatrix::from_diagonal(&w) * a;
    h += (&w * w.transpose()) * (a / (2.0 * PI * chi as f64));
    h += DMatrix::from_element(n, n, 1.0 / n as f64);
    let eig = h.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = 1e-10 * top.max(1e-300);
    let gv = DVector::from_column_slice(g);
    let coeff = eig.eigenvectors.transpose() * gv;
    let scaled = DVector::from_iterator(n, coeff.iter().zip(eig.eigenvalues.iter()).map(|(c, l)| -c / l.abs().max(floor)));
    let d = &eig.eigenvectors * scaled;
    let mean = d.mean();
    Ok(d.iter().map(|x| x - mean).collect())
}

/// Backtracking search along `d` on the reduced energy.
fn reduced_search(state: &ConformalState, g: &[f64], d: &[f64], target: &CurvatureTarget, chi: i64, cfg: &SolveConfig) -> Option<Trial> {
    let gd = dot(g, d);
    if !(gd < 0.0) {
        return None;
    }
    let res = max_abs(g);
    let total0: f64 = target.demanded(state.u()).iter().sum();
    let coef = 2.0 * PI * chi as f64 / target.alpha;
    let mut t = 1.0;
    while t > 1e-12 {
        let u: Vec<f64> = state.u().iter().zip(d).map(|(u, d)| u + t * d).collect();
        if let Ok(seg) = integrate_segment(state, &u, None) {
            let total: f64 = target.demanded(&u).iter().sum();
            let df = seg.value - coef * (total / total0).ln();
            let mut end = seg.end;
            if rescale(&mut end, target, chi).is_ok() {
                if let Ok(grad) = energy::grad_ee(&end, target) {
                    let armijo = df <= cfg.armijo_c1 * t * gd;
                    let noise = df.abs() <= 1e-14 && max_abs(&grad) < res;
                    if armijo || noise {
                        return Some(Trial {
                            state: end,
                            flips: seg.transit.flips,
                            grad,
                            step: t,
                        });
                    }
                }
            }
        }
        t *= cfg.backtrack;
    }
    None
}

/// Backtracking search along `d` on `|g|^2 / 2`.
fn merit_search(state: &ConformalState, g: &[f64], d: &[f64], target: &CurvatureTarget, cfg: &SolveConfig) -> Option<Trial> {
    let phi = 0.5 * dot(g, g);
    let mut t = 1.0;
    while t > 1e-12 {
        let u: Vec<f64> = state.u().iter().zip(d).map(|(u, d)| u + t * d).collect();
        let mut next = state.clone();
        if let Ok(transit) = next.evaluate_at(&u) {
            if let Ok(grad) = energy::grad_ee(&next, target) {
                if 0.5 * dot(&grad, &grad) <= (1.0 - cfg.armijo_c1 * t) * phi {
                    return Some(Trial {
                        state: next,
                        flips: transit.flips,
                        grad,
                        step: t,
                    });
                }
            }
        }
        t *= cfg.backtrack;
    }
    None
}

fn run_start(
    state0: &ConformalState,
    target: &CurvatureTarget,
    cfg: &SolveConfig,
    index: usize,
    u_init: &[f64],
    progress: Option<&(dyn Fn(&IterationInfo) + Sync)>,
) -> Result<Start, StartError> {
    let fatal = |e: SolveError| StartError::Fatal(e);
    let mut state = state0.clone();
    let chi = state0.mesh().euler_characteristic().chi;
    let mode = mode(target, chi);
    let mut flips = state.evaluate_at(u_init).map_err(|e| fatal(e.into()))?.flips;
    if mode == Mode::Reduced {
        rescale(&mut state, target, chi).map_err(|e| fatal(e.into()))?;
    }
    let mut g = energy::grad_ee(&state, target).map_err(|e| fatal(e.into()))?;
    let mut history = Vec::new();
    let mut lambda = 0.0;
    let mut step = 0.0;
    for iter in 0..=cfg.max_iters {
        let res = max_abs(&g);
        history.push(res);
        if let Some(cb) = progress {
            cb(&IterationInfo {
                start: index,
                iter,
                residual: res,
                flips: flips.len(),
                step,
            });
        }
        if res <= cfg.tol {
            return Ok(Start {
                state,
                flips,
                history,
                iterations: iter,
            });
        }
        if iter == cfg.max_iters {
            break;
        }
        let h = energy::hessian(&state, Some(target)).map_err(|e| fatal(e.into()))?;
        let trial = if mode == Mode::Reduced {
            let mut trial = None;
            if let Ok(mut d) = reduced_direction(&state, &g, target, chi) {
                cap_step(&mut d, cfg.max_step);
                trial = reduced_search(&state, &g, &d, target, chi, cfg);
            }
            if trial.is_none() {
                let mean = g.iter().sum::<f64>() / g.len() as f64;
                let mut d: Vec<f64> = g.iter().map(|x| mean - x).collect();
                cap_step(&mut d, cfg.max_step);
                trial = reduced_search(&state, &g, &d, target, chi, cfg);
            }
            trial
        } else if mode == Mode::Energy {
            let mut trial = None;
            if let Some(mut d) = newton_direction(&h, &g, target) {
                cap_step(&mut d, cfg.max_step);
                trial = energy_search(&state, &g, &d, target, cfg);
            }
            if trial.is_none() {
                let mut d: Vec<f64> = g.iter().map(|x| -x).collect();
                cap_step(&mut d, cfg.max_step);
                trial = energy_search(&state, &g, &d, target, cfg);
            }
            trial
        } else {
            let mut trial = None;
            if lambda == 0.0 {
                if let Some(mut d) = newton_direction(&h, &g, target) {
                    cap_step(&mut d, cfg.max_step);
                    trial = merit_search(&state, &g, &d, target, cfg);
                }
            }
            let scale = (h.transpose() * &h).trace() / g.len() as f64;
            if trial.is_none() {
                lambda = if lambda == 0.0 { 1e-6 * scale } else { lambda };
            }
            while trial.is_none() && lambda < 1e8 * scale.max(1.0) {
                if let Some(mut d) = lm_direction(&h, &g, lambda) {
                    cap_step(&mut d, cfg.max_step);
                    trial = merit_search(&state, &g, &d, target, cfg);
                }
                if trial.is_none() {
                    lambda *= 10.0;
                }
            }
            if trial.is_some() {
                lambda = if lambda < 1e-9 * scale { 0.0 } else { lambda / 10.0 };
            }
            trial
        };
        match trial {
            Some(t) => {
                state = t.state;
                g = t.grad;
                flips.extend(t.flips);
                step = t.step;
            }
            None => return Err(StartError::Stalled(res, format!("no acceptable step at iteration {iter}"))),
        }
    }
    Err(StartError::Exhausted(*history.last().unwrap()))
}

fn random_start(n: usize, seed: u64, index: usize) -> Vec<f64> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect()
}

/// Finds `u` with `K_i = calR_i e^(alpha u_i)` for all vertices.
pub fn solve_prescribed(state0: &ConformalState, target: &CurvatureTarget, cfg: &SolveConfig) -> Result<SolveReport, SolveError> {
    solve_prescribed_with_progress(state0, target, cfg, None)
}

pub fn solve_prescribed_with_progress(
    state0: &ConformalState,
    target: &CurvatureTarget,
    cfg: &SolveConfig,
    progress: Option<&(dyn Fn(&IterationInfo) + Sync)>,
) -> Result<SolveReport, SolveError> {
    let n = state0.vertex_count();
    if target.target.len() != n {
        return Err(SolveError::InvalidInput(format!(
            "{} target values for {n} vertices",
            target.target.len()
        )));
    }
    if !(cfg.tol > 0.0) {
        return Err(SolveError::InvalidInput("tolerance must be positive".into()));
    }
    if !target.alpha.is_finite() || target.target.iter().any(|x| !x.is_finite()) {
        return Err(SolveError::InvalidInput("alpha and target must be finite".into()));
    }
    if !target.case_label.is_supported() && !cfg.force {
        return Err(SolveError::CaseUnsupported {
            case: target.case_label,
            message: format!(
                "target with alpha = {} on a surface with chi = {} matches no supported case",
                target.alpha,
                state0.mesh().euler_characteristic().chi
            ),
        });
    }
    let mut seed_u = cfg.seed_u.clone().unwrap_or_else(|| state0.u().to_vec());
    if seed_u.len() != n {
        return Err(SolveError::InvalidInput(format!(
            "seed factor has {} entries for {n} vertices",
            seed_u.len()
        )));
    }
    let sum_zero = target.is_scale_invariant() && cfg.normalization == Normalization::SumZero;
    if sum_zero {
        let mean = seed_u.iter().sum::<f64>() / n as f64;
        seed_u.iter_mut().for_each(|x| *x -= mean);
    }

    let starts = cfg.max_starts.max(1);
    let mut last: Option<StartError> = None;
    let mut found = match run_start(state0, target, cfg, 0, &seed_u, progress) {
        Ok(s) => Some((0, s)),
        Err(StartError::Fatal(e)) => return Err(e),
        Err(e) => {
            last = Some(e);
            None
        }
    };
    if found.is_none() && starts > 1 {
        let threads = cfg.threads.max(1);
        let mut index = 1;
        while found.is_none() && index < starts {
            let batch: Vec<usize> = (index..starts.min(index + threads)).collect();
            index += batch.len();
            let results: Vec<(usize, Result<Start, StartError>)> = std::thread::scope(|scope| {
                let handles: Vec<_> = batch
                    .iter()
                    .map(|&k| {
                        let mut u = random_start(n, cfg.seed, k);
                        if sum_zero {
                            let mean = u.iter().sum::<f64>() / n as f64;
                            u.iter_mut().for_each(|x| *x -= mean);
                        }
                        scope.spawn(move || (k, run_start(state0, target, cfg, k, &u, progress)))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
            });
            for (k, r) in results {
                match r {
                    Ok(s) if found.is_none() => found = Some((k, s)),
                    Ok(_) => {}
                    Err(e) => last = Some(e),
                }
            }
        }
    }
    let (start, run) = match found {
        Some(f) => f,
        None => {
            return Err(match last {
                Some(StartError::Fatal(e)) => e,
                Some(StartError::Stalled(residual, detail)) if starts == 1 => SolveError::StepUnderflow { residual, detail },
                Some(StartError::Stalled(residual, _)) | Some(StartError::Exhausted(residual)) => SolveError::MaxItersExceeded {
                    iters: cfg.max_iters,
                    residual,
                    starts,
                },
                None => unreachable!("every start reports"),
            })
        }
    };

    let mut state = run.state;
    if sum_zero {
        let mean = state.u().iter().sum::<f64>() / n as f64;
        if mean != 0.0 {
            let u: Vec<f64> = state.u().iter().map(|x| x - mean).collect();
            state.evaluate_at(&u)?;
        }
    }
    let g = energy::grad_ee(&state, target)?;
    let residual = max_abs(&g);
    Ok(finish(
        state,
        target.clone(),
        residual,
        run.history,
        run.iterations,
        start,
        run.flips,
        cfg.tol,
        None,
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    state: ConformalState,
    target: CurvatureTarget,
    residual: f64,
    residual_history: Vec<f64>,
    iterations: usize,
    start: usize,
    flips: Vec<FlipRecord>,
    tolerance: f64,
    constant: Option<f64>,
) -> SolveReport {
    let euler = state.mesh().euler_characteristic();
    let (constraint_residual, lagrange_mu) = if target.alpha != 0.0 {
        let total: f64 = target.demanded(state.u()).iter().sum();
        let mu = if total != 0.0 {
            Some(2.0 * PI * euler.chi as f64 / (target.alpha * total))
        } else {
            None
        };
        (Some(curvature::constraint_residual(&target, state.u(), euler)), mu)
    } else {
        (None, None)
    };
    SolveReport {
        u: state.u().to_vec(),
        case_label: target.case_label,
        uniqueness: uniqueness(&target),
        state,
        target,
        residual,
        residual_history,
        iterations,
        start,
        flips,
        constraint_residual,
        lagrange_mu,
        constant,
        tolerance,
    }
}

/// The constant curvature used for [`solve_constant`]: 0 on tori, the
/// mean angle defect when `alpha = 0`, otherwise `-1` or `+1`.
pub fn constant_target(alpha: f64, chi: i64, vertex_count: usize) -> Result<f64, SolveError> {
    if chi == 0 {
        Ok(0.0)
    } else if alpha == 0.0 {
        Ok(2.0 * PI * chi as f64 / vertex_count as f64)
    } else if chi < 0 {
        Ok(-1.0)
    } else if alpha < 0.0 {
        Ok(1.0)
    } else {
        Err(SolveError::CaseUnsupported {
            case: CaseLabel::Unclassified,
            message: format!(
                "constant curvature with alpha = {alpha} > 0 on a surface with chi = {chi} > 0 is not covered \
                 (needs alpha * chi <= 0, or alpha < 0 and chi < 0)"
            ),
        })
    }
}

/// Finds a discretely conformal metric of constant alpha-curvature.
pub fn solve_constant(state0: &ConformalState, alpha: f64, cfg: &SolveConfig) -> Result<SolveReport, SolveError> {
    solve_constant_with_progress(state0, alpha, cfg, None)
}

pub fn solve_constant_with_progress(
    state0: &ConformalState,
    alpha: f64,
    cfg: &SolveConfig,
    progress: Option<&(dyn Fn(&IterationInfo) + Sync)>,
) -> Result<SolveReport, SolveError> {
    let n = state0.vertex_count();
    let c = constant_target(alpha, state0.mesh().euler_characteristic().chi, n)?;
    let target = CurvatureTarget::for_state(alpha, vec![c; n], state0);
    let mut report = solve_prescribed_with_progress(state0, &target, cfg, progress)?;
    report.constant = Some(c);
    Ok(report)
}

/// Independent checks of a claimed solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    /// Max relative deviation of `r_i` from `e^(u_i) r0_i`.
    pub radius_error: f64,
    /// `max |K_i - R_i r_i^alpha|`.
    pub residual: f64,
    pub tolerance: f64,
    /// `|sum K - 2 pi chi|`.
    pub gauss_bonnet_error: f64,
    /// `|sum R_i r_i^alpha - 2 pi chi| / (2 pi |chi|)`, when `alpha, chi != 0`.
    pub constraint_error: Option<f64>,
    pub triangle_violations: usize,
    pub min_inversive: f64,
    pub min_margin: f64,
    pub checks: Vec<(String, bool)>,
    pub passed: bool,
}

pub const RADIUS_TOL: f64 = 1e-12;
pub const GAUSS_BONNET_CHECK: f64 = 1e-10;
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// Recomputes everything from a triangulation, its metric, the base radii,
/// the factor, and the target. Uses nothing cached by the solver.
#[allow(clippy::too_many_arguments)]
pub fn verify_metric(
    mesh: &MeshConnectivity,
    metric: &DecoratedMetric,
    base_radii: &[f64],
    u: &[f64],
    alpha: f64,
    target: &[f64],
    tol: f64,
) -> VerificationRecord {
    let n = mesh.vertex_count();
    let chi = mesh.euler_characteristic().chi as f64;
    let shapes = metric.check_shape(mesh).is_ok() && base_radii.len() == n && u.len() == n && target.len() == n;
    let mut checks = vec![("shapes".to_string(), shapes)];
    if !shapes {
        return VerificationRecord {
            radius_error: f64::NAN,
            residual: f64::NAN,
            tolerance: tol,
            gauss_bonnet_error: f64::NAN,
            constraint_error: None,
            triangle_violations: 0,
            min_inversive: f64::NAN,
            min_margin: f64::NAN,
            checks,
            passed: false,
        };
    }

    let radius_error = metric
        .radii
        .iter()
        .zip(base_radii.iter().zip(u))
        .map(|(r, (r0, u))| ((r - r0 * u.exp()) / r).abs())
        .fold(0.0f64, f64::max);
    let triangle_violations = (0..mesh.face_count())
        .filter(|&f| crate::geometry::triangle_angles(metric.face_lengths(mesh, f)).is_err())
        .count();
    let min_inversive = metric.inversive_distances(mesh).into_iter().fold(f64::INFINITY, f64::min);

    let (residual, gb, constraint_error, min_margin) = if triangle_violations == 0 {
        let k = curvature::angle_defects_of(mesh, metric).unwrap_or_else(|_| vec![f64::NAN; n]);
        let demanded: Vec<f64> = target.iter().zip(&metric.radii).map(|(t, r)| t * r.powf(alpha)).collect();
        let residual = k.iter().zip(&demanded).map(|(k, d)| (k - d).abs()).fold(0.0f64, f64::max);
        let gb = (k.iter().sum::<f64>() - 2.0 * PI * chi).abs();
        let constraint =
            (alpha != 0.0 && chi != 0.0).then(|| (demanded.iter().sum::<f64>() - 2.0 * PI * chi).abs() / (2.0 * PI * chi.abs()));
        let margin = margins(mesh, metric).unwrap_or(f64::NAN);
        (residual, gb, constraint, margin)
    } else {
        (f64::NAN, f64::NAN, None, f64::NAN)
    };

    checks.push(("radii follow u".into(), radius_error <= RADIUS_TOL));
    checks.push(("triangle inequalities".into(), triangle_violations == 0));
    checks.push(("separation".into(), min_inversive > 1.0 + metric::SEP_EPS));
    checks.push(("weighted Delaunay".into(), min_margin >= -10.0 * DEL_EPS));
    checks.push(("curvature residual".into(), residual <= tol * (1.0 + 1e-6) + 1e-14));
    checks.push(("Gauss-Bonnet".into(), gb < GAUSS_BONNET_CHECK));
    if let Some(c) = constraint_error {
        checks.push(("constraint".into(), c < CONSTRAINT_TOL));
    }
    let passed = checks.iter().all(|(_, ok)| *ok);
    VerificationRecord {
        radius_error,
        residual,
        tolerance: tol,
        gauss_bonnet_error: gb,
        constraint_error,
        triangle_violations,
        min_inversive,
        min_margin,
        checks,
        passed,
    }
}

fn margins(mesh: &MeshConnectivity, metric: &DecoratedMetric) -> Result<f64, GeometryError> {
    let mut m = vec![0.0; mesh.edge_count()];
    for f in 0..mesh.face_count() {
        let fc = crate::geometry::face_circle(&metric.triangle(mesh, f))?;
        for (c, &e) in mesh.face_edges(f).iter().enumerate() {
            m[e] += fc.edge_distances[(c + 1) % 3] / fc.radius;
        }
    }
    Ok(m.into_iter().fold(f64::INFINITY, f64::min))
}

pub fn verify_solution(report: &SolveReport) -> VerificationRecord {
    verify_metric(
        report.state.mesh(),
        report.state.metric(),
        report.state.base_radii(),
        &report.u,
        report.target.alpha,
        &report.target.target,
        report.tolerance,
    )
}
