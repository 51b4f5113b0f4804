//! Commands behind the `decor-uniform` binary.
//!
//! Each command writes its report to `out`, diagnostics to `err`, and
//! returns the process exit code.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Mutex;

use decor_uniform::curvature::{self, CurvatureTarget};
use decor_uniform::delaunay::{ConformalState, DelaunayError};
use decor_uniform::io::{self, IoError, NormalizeMode, Problem, ResultFile};
use decor_uniform::metric;
use decor_uniform::solver::{self, IterationInfo, SolveConfig, SolveError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;

/// Environment variable capping solver threads.
pub const THREADS_ENV: &str = "DECOR_UNIFORM_THREADS";

#[derive(Debug, Clone, Default)]
pub struct UniformizeOptions {
    pub alpha: Option<f64>,
    /// Path of a JSON array with one target value per vertex.
    pub target: Option<String>,
    pub constant: bool,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub normalize: Option<NormalizeMode>,
    pub force: bool,
    pub trace: bool,
    /// Result path; the result goes to `out` when absent.
    pub out: Option<String>,
}

fn io_exit(e: &IoError, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {e}");
    if e.is_parse() {
        EXIT_PARSE
    } else {
        EXIT_INVALID
    }
}

fn load(path: &str, err: &mut dyn Write) -> Result<Problem, i32> {
    io::read_problem(path).map_err(|e| io_exit(&e, err))
}

/// Writes `x` as a multiple of pi when it is one, to display precision.
fn pi_multiple(x: f64) -> String {
    let m = x / PI;
    let r = m.round();
    if (m - r).abs() < 1e-9 {
        match r as i64 {
            0 => "0".into(),
            1 => "π".into(),
            -1 => "-π".into(),
            k => format!("{k}π"),
        }
    } else {
        format!("{x}")
    }
}

fn print_violations(report: &metric::ValidationReport, out: &mut dyn Write) {
    for (f, l) in &report.triangle_violations {
        let _ = writeln!(out, "  triangle inequality violated in face {f}: lengths {l:?}");
    }
    for (k, i) in &report.separation_violations {
        let _ = writeln!(out, "  separation violated on edge {k}: inversive distance {i}");
    }
}

/// Validity report of a problem file.
pub fn cmd_check(path: &str, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let p = match load(path, err) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let euler = p.mesh.euler_characteristic();
    let _ = writeln!(
        out,
        "{} vertices, {} edges, {} faces, genus {}",
        p.mesh.vertex_count(),
        p.mesh.edge_count(),
        p.mesh.face_count(),
        euler.genus()
    );
    let report = match metric::validate(&p.metric, &p.mesh) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    if !report.is_valid() {
        let _ = writeln!(out, "χ={}", euler.chi);
        let _ = writeln!(
            out,
            "invalid decorated metric: {} triangle inequality and {} separation violations",
            report.triangle_violations.len(),
            report.separation_violations.len()
        );
        print_violations(&report, out);
        return EXIT_INVALID;
    }
    let state = match ConformalState::new(p.mesh.clone(), p.metric.clone()) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    let k = match curvature::angle_defects(&state) {
        Ok(k) => k,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    let sum: f64 = k.iter().sum();
    let gb = (sum - 2.0 * PI * euler.chi as f64).abs();
    let _ = writeln!(out, "χ={}, ΣK={} (|ΣK - 2πχ| = {gb:.3e})", euler.chi, pi_multiple(sum));
    let _ = writeln!(out, "triangle inequalities: ok");
    let min_i = state.inversive().iter().copied().fold(f64::INFINITY, f64::min);
    let _ = writeln!(out, "separation: ok (min inversive distance {min_i})");
    match state.margins() {
        Ok(m) => {
            let bad = m.iter().filter(|&&x| x < -decor_uniform::delaunay::DEL_EPS).count();
            let min = m.iter().copied().fold(f64::INFINITY, f64::min);
            if bad == 0 {
                let _ = writeln!(out, "weighted Delaunay: yes (min margin {min})");
            } else {
                let _ = writeln!(out, "weighted Delaunay: no, {bad} edge(s) will be flipped (min margin {min})");
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    }
    if gb >= solver::GAUSS_BONNET_CHECK {
        let _ = writeln!(out, "Gauss-Bonnet check failed");
        return EXIT_INVALID;
    }
    EXIT_OK
}

/// Per-vertex angle defect and alpha-curvature of the input metric.
pub fn cmd_curvature(path: &str, alpha: f64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let p = match load(path, err) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let state = match ConformalState::new(p.mesh, p.metric) {
        Ok(s) => s,
        Err(DelaunayError::InvalidMetric(report)) => {
            let _ = writeln!(err, "error: invalid decorated metric");
            print_violations(&report, err);
            return EXIT_INVALID;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    let field = match curvature::curvature_field(&state, alpha) {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    let _ = writeln!(out, "vertex\tK\tR_{alpha}");
    for (i, (k, r)) in field.k.iter().zip(&field.r_alpha).enumerate() {
        let _ = writeln!(out, "{i}\t{k}\t{r}");
    }
    let chi = state.mesh().euler_characteristic().chi;
    let sum: f64 = field.k.iter().sum();
    let gb = (sum - 2.0 * PI * chi as f64).abs();
    let _ = writeln!(out, "ΣK={} (2πχ={}, error {gb:.3e})", sum, 2.0 * PI * chi as f64);
    if gb < solver::GAUSS_BONNET_CHECK {
        EXIT_OK
    } else {
        EXIT_INVALID
    }
}

fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

fn solve_exit(e: &SolveError) -> i32 {
    match e {
        SolveError::CaseUnsupported { .. } => EXIT_UNSUPPORTED,
        SolveError::InvalidInput(_) => EXIT_INVALID,
        _ => EXIT_NO_CONVERGENCE,
    }
}

fn read_target(path: &str, n: usize) -> Result<Vec<f64>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.into(), source })?;
    let t: Vec<f64> = serde_json::from_str(&text).map_err(|e| IoError::Parse(format!("{path}: {e}")))?;
    if t.len() != n {
        return Err(IoError::Invalid(format!("{path}: {} target values for {n} vertices", t.len())));
    }
    Ok(t)
}

/// Solves for the factor and writes a verified result file.
pub fn cmd_uniformize(path: &str, opts: &UniformizeOptions, out: &mut dyn Write, err: &mut (dyn Write + Send)) -> i32 {
    let p = match load(path, err) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let n = p.mesh.vertex_count();
    let file_target = p.target.clone();
    let Some(alpha) = opts.alpha.or(file_target.as_ref().map(|t| t.alpha)) else {
        let _ = writeln!(err, "error: no alpha given (use --alpha or a target section)");
        return EXIT_INVALID;
    };
    if !alpha.is_finite() {
        let _ = writeln!(err, "error: alpha must be finite");
        return EXIT_INVALID;
    }
    if opts.constant && opts.target.is_some() {
        let _ = writeln!(err, "error: --constant and --target are exclusive");
        return EXIT_INVALID;
    }
    let prescribed = if opts.constant {
        None
    } else if let Some(t) = &opts.target {
        match read_target(t, n) {
            Ok(t) => Some(t),
            Err(e) => return io_exit(&e, err),
        }
    } else {
        match file_target {
            Some(t) if t.constant => None,
            Some(t) if t.curvature.is_some() => t.curvature,
            _ => {
                let _ = writeln!(err, "error: no target given (use --target, --constant, or a target section)");
                return EXIT_INVALID;
            }
        }
    };

    let mut cfg = SolveConfig::default();
    p.solver.apply(&mut cfg);
    if let Some(t) = opts.tol {
        cfg.tol = t;
    }
    if let Some(m) = opts.max_iters {
        cfg.max_iters = m;
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(nm) = opts.normalize {
        cfg.normalization = nm.into();
    }
    cfg.force |= opts.force;
    if let Some(t) = threads_from_env() {
        cfg.threads = cfg.threads.min(t);
    }

    let state = match ConformalState::new(p.mesh, p.metric) {
        Ok(s) => s,
        Err(DelaunayError::InvalidMetric(report)) => {
            let _ = writeln!(err, "error: invalid decorated metric");
            print_violations(&report, err);
            return EXIT_INVALID;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };

    let trace = Mutex::new(&mut *err);
    let progress = |i: &IterationInfo| {
        if let Ok(mut w) = trace.lock() {
            let _ = writeln!(
                w,
                "start {} iter {} residual {:.6e} flips {} step {:.3e}",
                i.start, i.iter, i.residual, i.flips, i.step
            );
        }
    };
    let progress: Option<&(dyn Fn(&IterationInfo) + Sync)> = if opts.trace { Some(&progress) } else { None };
    let solved = match &prescribed {
        Some(t) => {
            let target = CurvatureTarget::for_state(alpha, t.clone(), &state);
            solver::solve_prescribed_with_progress(&state, &target, &cfg, progress)
        }
        None => solver::solve_constant_with_progress(&state, alpha, &cfg, progress),
    };
    let err = trace.into_inner().unwrap_or_else(|e| e.into_inner());
    let report = match solved {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return solve_exit(&e);
        }
    };
    if opts.trace {
        for (n, f) in report.flips.iter().enumerate() {
            let _ = writeln!(err, "flip {n}: edge {} -> {} (margin {:.6e})", f.edge, f.new_edge, f.margin);
        }
    }

    let result = match ResultFile::from_report(&report) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_NO_CONVERGENCE;
        }
    };
    let text = result.to_json();
    // The written content is verified after a load round trip.
    let record = match ResultFile::from_json(&text).and_then(|r| r.verify()) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: result does not reload: {e}");
            return EXIT_INVALID;
        }
    };
    match &opts.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, format!("{text}\n")) {
                let _ = writeln!(err, "error: cannot write {path}: {e}");
                return EXIT_INVALID;
            }
            let _ = writeln!(
                out,
                "case {}, {}, residual {:.3e}, {} iterations, {} flips, written to {path}",
                result.case_label, result.uniqueness, result.residual, result.iterations, result.flip_count
            );
        }
        None => {
            let _ = writeln!(out, "{text}");
        }
    }
    print_record(&record, err);
    if record.passed {
        EXIT_OK
    } else {
        EXIT_INVALID
    }
}

fn print_record(record: &solver::VerificationRecord, w: &mut dyn Write) {
    for (name, ok) in &record.checks {
        let _ = writeln!(w, "{:<24}{}", name, if *ok { "ok" } else { "FAILED" });
    }
    let _ = writeln!(
        w,
        "residual {:.3e} (tolerance {:.1e}), Gauss-Bonnet error {:.3e}",
        record.residual, record.tolerance, record.gauss_bonnet_error
    );
    if let Some(c) = record.constraint_error {
        let _ = writeln!(w, "constraint error {c:.3e}");
    }
}

/// Rechecks a result file from its stored content alone.
pub fn cmd_verify(path: &str, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {path}: {e}");
            return EXIT_PARSE;
        }
    };
    let record = match ResultFile::from_json(&text).and_then(|r| r.verify()) {
        Ok(r) => r,
        Err(e) => return io_exit(&e, err),
    };
    print_record(&record, out);
    if record.passed {
        let _ = writeln!(out, "verified");
        EXIT_OK
    } else {
        let _ = writeln!(out, "verification failed");
        EXIT_INVALID
    }
}
