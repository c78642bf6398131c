//! Iterative position-only IK solvers.
//!
//! Every solver runs the same outer loop: compute the task-space error
//! `e = x* − FK(q)`, stop once `‖e‖ < converge_tol` (or the iteration budget
//! is spent), otherwise take a method-specific step `Δq` and clamp
//! `q + Δq` into the joint limits. Success is judged separately against the
//! looser `success_tol`; non-convergence is reported through
//! [`SolveResult::success`], never as an error.

pub mod qp;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::{self, JointConfig, KinematicChain, TaskPosition};
use crate::linalg;
use crate::metrics;

/// Relative singular-value cutoff for the truncated pseudoinverse.
pub const PINV_RCOND: f64 = 1e-12;

/// Tikhonov weight added to the QP Hessian so the unconstrained optimum is
/// the (numerically) minimum-norm least-squares step.
pub const QP_REGULARIZATION: f64 = 1e-9;

/// Default task-space step clip for Newton and Halley, meters.
pub const QUIK_MAX_LINEAR_STEP: f64 = 0.34;

/// `e` rescaled to length at most `max_len`.
pub fn clip_error(e: &DVector<f64>, max_len: f64) -> DVector<f64> {
    let n = e.norm();
    if n > max_len {
        e * (max_len / n)
    } else {
        e.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SolverKind {
    Pinv,
    Dls,
    AdaptiveDls,
    Sdls,
    Newton,
    Halley,
    Qp,
    NullspaceManip,
    Mlp,
    MlpDls,
}

impl SolverKind {
    pub const ALL: [SolverKind; 10] = [
        SolverKind::Pinv,
        SolverKind::Dls,
        SolverKind::AdaptiveDls,
        SolverKind::Sdls,
        SolverKind::Newton,
        SolverKind::Halley,
        SolverKind::Qp,
        SolverKind::NullspaceManip,
        SolverKind::Mlp,
        SolverKind::MlpDls,
    ];

    /// The five classical iterative solvers of the headline comparison.
    pub const CLASSICAL: [SolverKind; 5] = [
        SolverKind::Pinv,
        SolverKind::Dls,
        SolverKind::AdaptiveDls,
        SolverKind::Newton,
        SolverKind::Halley,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SolverKind::Pinv => "pinv",
            SolverKind::Dls => "dls",
            SolverKind::AdaptiveDls => "adls",
            SolverKind::Sdls => "sdls",
            SolverKind::Newton => "newton",
            SolverKind::Halley => "halley",
            SolverKind::Qp => "qp",
            SolverKind::NullspaceManip => "ns-manip",
            SolverKind::Mlp => "mlp",
            SolverKind::MlpDls => "mlp+dls",
        }
    }

    pub fn needs_model(self) -> bool {
        matches!(self, SolverKind::Mlp | SolverKind::MlpDls)
    }

    /// Parse a comma-separated list; `all` expands to every solver.
    pub fn parse_list(s: &str) -> Result<Vec<SolverKind>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "all" => out.extend(SolverKind::ALL),
                "classical" => out.extend(SolverKind::CLASSICAL),
                other => out.push(other.parse()?),
            }
        }
        let mut seen = std::collections::HashSet::new();
        out.retain(|k| seen.insert(*k));
        Ok(out)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::UnknownSolver(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HessianMode {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// α, scale on the task-space step.
    pub step_scale: f64,
    /// λ for fixed DLS.
    pub damping: f64,
    pub lambda_max: f64,
    pub lambda_base: f64,
    pub w_thresh: f64,
    /// λ² used by Newton and Halley.
    pub halley_damping: f64,
    pub max_iters: usize,
    /// Success threshold on the position error, meters.
    pub success_tol: f64,
    /// The loop stops once the error drops below this, meters.
    pub converge_tol: f64,
    /// ‖Δq‖_∞ bound for the QP solver, radians per step.
    pub v_max: f64,
    pub w_min: f64,
    pub dt: f64,
    /// σ threshold below which SDLS starts damping a direction.
    pub sdls_sigma_thresh: f64,
    /// β, gain on the projected manipulability gradient.
    pub nullspace_gain: f64,
    pub hessian: HessianMode,
    pub qp_tol: f64,
    pub qp_max_iters: usize,
    pub record_trace: bool,
    /// Stop as soon as the error is below `success_tol`.
    pub early_exit: bool,
    /// Task-space error used by Newton and Halley steps is clipped to this
    /// length, meters. Infinite disables clipping.
    pub max_task_step: f64,
    /// SDLS steps are scaled down so that ‖Δq‖_∞ stays below this, rad.
    pub max_joint_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step_scale: 1.0,
            damping: 0.05,
            lambda_max: 0.5,
            lambda_base: 0.005,
            w_thresh: 0.05,
            halley_damping: 1e-10,
            max_iters: 80,
            success_tol: 1e-3,
            converge_tol: 1e-5,
            v_max: 0.5,
            w_min: 1e-3,
            dt: 1.0,
            sdls_sigma_thresh: 1e-2,
            nullspace_gain: 1.0,
            hessian: HessianMode::Analytic,
            qp_tol: 1e-8,
            qp_max_iters: 2000,
            record_trace: false,
            early_exit: true,
            max_task_step: f64::INFINITY,
            max_joint_step: f64::INFINITY,
        }
    }
}

impl SolverConfig {
    /// Per-solver defaults (step scale and iteration budget).
    pub fn for_solver(kind: SolverKind) -> Self {
        let base = Self::default();
        match kind {
            SolverKind::Pinv => Self { step_scale: 0.3, max_iters: 80, ..base },
            SolverKind::Dls | SolverKind::AdaptiveDls => Self { max_iters: 80, ..base },
            SolverKind::Sdls => Self { max_iters: 80, max_joint_step: std::f64::consts::FRAC_PI_4, ..base },
            SolverKind::Newton | SolverKind::Halley => {
                Self { max_iters: 100, max_task_step: QUIK_MAX_LINEAR_STEP, ..base }
            }
            SolverKind::Qp | SolverKind::NullspaceManip => Self { max_iters: 80, ..base },
            SolverKind::Mlp => Self { max_iters: 1, ..base },
            SolverKind::MlpDls => Self { max_iters: 50, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.step_scale > 0.0 && self.step_scale <= 1.0) {
            return bad("step_scale must lie in (0, 1]");
        }
        if !(self.damping >= 0.0) || !(self.lambda_max >= 0.0) || !(self.lambda_base >= 0.0) {
            return bad("damping parameters must be non-negative");
        }
        if !(self.halley_damping >= 0.0) {
            return bad("halley_damping must be non-negative");
        }
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1");
        }
        if !(self.success_tol > 0.0) || !(self.converge_tol > 0.0) {
            return bad("success_tol and converge_tol must be positive");
        }
        if !(self.max_task_step > 0.0) || !(self.max_joint_step > 0.0) {
            return bad("max_task_step and max_joint_step must be positive");
        }
        if !(self.w_thresh > 0.0) || !(self.v_max > 0.0) || !(self.dt > 0.0) {
            return bad("w_thresh, v_max and dt must be positive");
        }
        Ok(())
    }

    /// Apply one `key=value` override. Keys mirror the field names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = || {
            value
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: `{value}` is not a number")))
        };
        let int = || {
            value
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("{key}: `{value}` is not an integer")))
        };
        let flag = || match value {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(Error::Config(format!("{key}: `{value}` is not a boolean"))),
        };
        match key {
            "step_scale" => self.step_scale = num()?,
            "damping" => self.damping = num()?,
            "lambda_max" => self.lambda_max = num()?,
            "lambda_base" => self.lambda_base = num()?,
            "w_thresh" => self.w_thresh = num()?,
            "halley_damping" => self.halley_damping = num()?,
            "max_iters" => self.max_iters = int()?,
            "success_tol" => self.success_tol = num()?,
            "converge_tol" => self.converge_tol = num()?,
            "v_max" => self.v_max = num()?,
            "w_min" => self.w_min = num()?,
            "dt" => self.dt = num()?,
            "sdls_sigma_thresh" => self.sdls_sigma_thresh = num()?,
            "nullspace_gain" => self.nullspace_gain = num()?,
            "qp_tol" => self.qp_tol = num()?,
            "qp_max_iters" => self.qp_max_iters = int()?,
            "record_trace" => self.record_trace = flag()?,
            "early_exit" => self.early_exit = flag()?,
            "max_task_step" => self.max_task_step = num()?,
            "max_joint_step" => self.max_joint_step = num()?,
            "hessian" => {
                self.hessian = match value {
                    "analytic" => HessianMode::Analytic,
                    "fd" | "finite_difference" => HessianMode::FiniteDifference,
                    _ => return Err(Error::Config(format!("hessian: unknown mode `{value}`"))),
                }
            }
            _ => return Err(Error::Config(format!("unknown solver key `{key}`"))),
        }
        Ok(())
    }
}

/// One logged iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    /// Position error before the step, meters.
    pub error: f64,
    pub w: f64,
    pub kappa: f64,
    /// ‖Δq‖ of the raw step, before joint-limit clamping.
    pub step_norm: f64,
    /// Damping λ used for the step; NaN for undamped methods.
    pub damping: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveEvent {
    /// The start of this iteration violated w > w_min; the constraint was dropped.
    ManipConstraintDropped { iteration: usize },
    /// The inner QP did not converge; a fixed-DLS step was taken instead.
    QpFallback { iteration: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub q_final: JointConfig,
    pub position_error: f64,
    pub iterations_used: usize,
    pub success: bool,
    pub trace: Option<Vec<TraceRow>>,
    /// Seconds.
    pub wall_time: f64,
    /// ‖FK(q0) − x*‖ of the starting configuration.
    pub init_error: f64,
    pub events: Vec<SolveEvent>,
}

pub(crate) struct StepInput<'a> {
    pub q: &'a JointConfig,
    pub frames: &'a kinematics::JointFrames,
    pub jacobian: &'a DMatrix<f64>,
    pub error: &'a DVector<f64>,
    pub iteration: usize,
}

pub(crate) struct Step {
    pub dq: DVector<f64>,
    pub damping: f64,
    pub event: Option<SolveEvent>,
}

impl Step {
    fn plain(dq: DVector<f64>, damping: f64) -> Self {
        Self { dq, damping, event: None }
    }
}

/// The shared loop. `step` maps the current state to a joint update.
pub(crate) fn run_loop(
    chain: &KinematicChain,
    target: &TaskPosition,
    q0: &JointConfig,
    cfg: &SolverConfig,
    mut step: impl FnMut(&StepInput<'_>) -> Step,
) -> Result<SolveResult> {
    chain.check_dim(q0)?;
    let start = Instant::now();
    let mut q = chain.clamp(q0);
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut events = Vec::new();
    let mut iterations = 0;

    let mut frames = chain.frames_unchecked(&q);
    let init_error = (target - frames.position()).norm();
    let mut err_norm = init_error;

    while iterations < cfg.max_iters {
        if cfg.early_exit && err_norm < cfg.converge_tol {
            break;
        }
        let jv = kinematics::translational_from_frames(&frames);
        let j = chain.task_rows(&jv);
        let e = chain.task_vector(&(target - frames.position()));
        let s = step(&StepInput { q: &q, frames: &frames, jacobian: &j, error: &e, iteration: iterations });
        if let Some(tr) = trace.as_mut() {
            tr.push(TraceRow {
                error: err_norm,
                w: metrics::manipulability(&j).unwrap_or(f64::NAN),
                kappa: metrics::condition_number(&j).unwrap_or(f64::NAN),
                step_norm: s.dq.norm(),
                damping: s.damping,
            });
        }
        if let Some(ev) = s.event {
            events.push(ev);
        }
        let dq = s.dq.map(|v| if v.is_finite() { v } else { 0.0 });
        q = chain.clamp(&(&q + dq));
        frames = chain.frames_unchecked(&q);
        err_norm = (target - frames.position()).norm();
        iterations += 1;
    }

    Ok(SolveResult {
        q_final: q,
        position_error: err_norm,
        iterations_used: iterations,
        success: err_norm < cfg.success_tol,
        trace,
        wall_time: start.elapsed().as_secs_f64(),
        init_error,
        events,
    })
}

/// Adaptive damping λ(w) = λ_max (1 − min(w / w_thresh, 1))² + λ_base.
pub fn adaptive_damping(w: f64, cfg: &SolverConfig) -> f64 {
    let r = 1.0 - (w / cfg.w_thresh).min(1.0);
    cfg.lambda_max * r * r + cfg.lambda_base
}

/// SDLS per-direction damping λᵢ² = λ_base² (1 − σᵢ/σ_thresh)² below the threshold.
pub fn sdls_lambda_sq(sigma: f64, cfg: &SolverConfig) -> f64 {
    if sigma >= cfg.sdls_sigma_thresh {
        0.0
    } else {
        let r = 1.0 - sigma / cfg.sdls_sigma_thresh;
        cfg.lambda_base * cfg.lambda_base * r * r
    }
}

pub fn pinv_step(j: &DMatrix<f64>, e: &DVector<f64>, alpha: f64) -> DVector<f64> {
    linalg::pinv_truncated(j, PINV_RCOND) * e * alpha
}

pub fn sdls_step(j: &DMatrix<f64>, e: &DVector<f64>, cfg: &SolverConfig) -> DVector<f64> {
    let svd = j.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut dq = DVector::zeros(j.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let lsq = sdls_lambda_sq(s, cfg);
        let denom = s * s + lsq;
        if denom == 0.0 {
            continue;
        }
        let gain = s / denom;
        let coeff = gain * u.column(i).dot(e);
        dq += vt.row(i).transpose() * coeff;
    }
    dq * cfg.step_scale
}

/// Halley-type correction: solve the damped system with J + ½ H[·, Δq_N].
pub fn halley_step(
    j: &DMatrix<f64>,
    hessian: &[DMatrix<f64>],
    e: &DVector<f64>,
    lambda_sq: f64,
) -> DVector<f64> {
    let newton = linalg::dls_step(j, e, lambda_sq);
    let mut corrected = j.clone();
    for (h_j, &dn) in hessian.iter().zip(newton.iter()) {
        corrected += h_j * (0.5 * dn);
    }
    linalg::dls_step(&corrected, e, lambda_sq)
}

pub fn solve_pinv(
    chain: &KinematicChain,
    target: &TaskPosition,
    q0: &JointConfig,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    run_loop(chain, target, q0, cfg, |s| {
        Step::plain(pinv_step(s.jacobian, s.error, cfg.step_scale), f64::NAN)
    })
}

pub fn solve_dls_fixed(
    chain: &KinematicChain,
    target: &TaskPosition,
    q0: &JointConfig,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let lsq = cfg.damping * cfg.damping;
    run_loop(chain, target, q0, cfg, |s| {
        Step::plain(linalg::dls_step(s.jacobian, s.error, lsq) * cfg.step_scale, cfg.damping)
    })
}

pub fn solve_dls_adaptive(
    chain: &KinematicChain,
    target: &TaskPosition,
    q0: &JointConfig,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    run_loop(chain, target, q0, cfg, |s| {
        let w = metrics::manipulability(s.jacobian).unwrap_or(0.0);
        let lambda = adaptive_damping(w, cfg);
        Step::plain(
            linalg::dls_step(s.jacobian, s.error, lambda * lambda) * cfg.step_scale,
            lambda,
        )
    })
}

pub fn solve_sdls(
    chain: &KinematicChain,
    target: &TaskPosition,
    q0: &JointConfig,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    run_loop(chain, target, q0, cfg, |s| {
        let dq = sdls_step(s.jacobian, s.error, cfg);
        let peak = dq.amax();
        let dq = if peak > cfg.max_joint_step { dq * (cfg.max_joint_step / peak) } else { dq };
        Step::plain(dq, f64::NAN)
    })
}

/// Gauss–Newton with a tiny λ² and a full step on the (clipped) error.
pub fn solve_newton(
    chain: &KinematicChain,
    target: &TaskPosition,
    q0: &JointConfig,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    run_loop(chain, target, q0, cfg, |s| {
        let e = clip_error(s.error, cfg.max_task_step);
        Step::plain(linalg::dls_step(s.jacobian, &e, cfg.halley_damping), cfg.halley_damping.sqrt())
    })
}

pub fn solve_halley(
    chain: &KinematicChain,
    target: &TaskPosition,
    q0: &JointConfig,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    run_loop(chain, target, q0, cfg, |s| {
        let full = match cfg.hessian {
            HessianMode::Analytic => kinematics::hessian_from_frames(s.frames),
            HessianMode::FiniteDifference => chain
                .position_hessian_fd(s.q, 1e-6)
                .expect("dimension checked by the loop"),
        };
        let h: Vec<DMatrix<f64>> = full.iter().map(|m| chain.task_rows(m)).collect();
        let e = clip_error(s.error, cfg.max_task_step);
        Step::plain(
            halley_step(s.jacobian, &h, &e, cfg.halley_damping),
            cfg.halley_damping.sqrt(),
        )
    })
}

/// Bounds and linearised manipulability constraint for one QP step.
pub fn qp_step_problem(
    chain: &KinematicChain,
    q: &JointConfig,
    j: &DMatrix<f64>,
    e: &DVector<f64>,
    cfg: &SolverConfig,
    with_manip: Option<(f64, &DVector<f64>)>,
) -> qp::QpProblem {
    let n = chain.dof();
    let dt = cfg.dt;
    // Variables are joint velocities; the joint step is v·dt.
    let p = (j.transpose() * j) * (dt * dt) + DMatrix::identity(n, n) * QP_REGULARIZATION;
    let lin = -(j.transpose() * e) * dt;
    let rows = n + usize::from(with_manip.is_some());
    let mut a = DMatrix::zeros(rows, n);
    let mut l = DVector::zeros(rows);
    let mut u = DVector::zeros(rows);
    for i in 0..n {
        a[(i, i)] = 1.0;
        l[i] = ((chain.q_min()[i] - q[i]) / dt).max(-cfg.v_max);
        u[i] = ((chain.q_max()[i] - q[i]) / dt).min(cfg.v_max);
    }
    if let Some((w, grad)) = with_manip {
        for c in 0..n {
            a[(n, c)] = grad[c] * dt;
        }
        l[n] = cfg.w_min - w;
        u[n] = f64::INFINITY;
    }
    qp::QpProblem { p, q: lin, a, l, u }
}

pub fn solve_qp(
    chain: &KinematicChain,
    target: &TaskPosition,
    q0: &JointConfig,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let settings = qp::AdmmSettings { eps: cfg.qp_tol, max_iters: cfg.qp_max_iters, ..Default::default() };
    let n = chain.dof();
    run_loop(chain, target, q0, cfg, |s| {
        let w = metrics::manipulability(s.jacobian).unwrap_or(0.0);
        let mut event = None;
        let grad;
        let manip = if w > cfg.w_min {
            grad = metrics::manipulability_gradient(chain, s.q).expect("dimension checked");
            Some((w, &grad))
        } else {
            event = Some(SolveEvent::ManipConstraintDropped { iteration: s.iteration });
            None
        };
        let problem = qp_step_problem(chain, s.q, s.jacobian, s.error, cfg, manip);
        match qp::solve_admm(&problem, &settings) {
            Ok(sol) => {
                let v = sol.z.rows(0, n).into_owned();
                Step { dq: v * cfg.dt, damping: f64::NAN, event }
            }
            Err(_) => {
                let lsq = cfg.damping * cfg.damping;
                Step {
                    dq: linalg::dls_step(s.jacobian, s.error, lsq),
                    damping: cfg.damping,
                    event: Some(SolveEvent::QpFallback { iteration: s.iteration }),
                }
            }
        }
    })
}

/// `Δq = α J⁺e + β (I − J⁺J) ∇w`.
pub fn solve_nullspace_manip(
    chain: &KinematicChain,
    target: &TaskPosition,
    q0: &JointConfig,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let n = chain.dof();
    run_loop(chain, target, q0, cfg, |s| {
        let jp = linalg::pinv_truncated(s.jacobian, PINV_RCOND);
        let mut dq = &jp * s.error * cfg.step_scale;
        if cfg.nullspace_gain != 0.0 {
            let grad = metrics::manipulability_gradient(chain, s.q).expect("dimension checked");
            let proj = DMatrix::identity(n, n) - &jp * s.jacobian;
            dq += proj * grad * cfg.nullspace_gain;
        }
        Step::plain(dq, f64::NAN)
    })
}

/// Fixed-DLS refinement from a caller-supplied start (e.g. a learned proposal).
pub fn refine_with_dls(
    chain: &KinematicChain,
    target: &TaskPosition,
    q0: &JointConfig,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    solve_dls_fixed(chain, target, q0, cfg)
}

/// Dispatch for the solvers that need no learned model.
pub fn solve_classical(
    kind: SolverKind,
    chain: &KinematicChain,
    target: &TaskPosition,
    q0: &JointConfig,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    match kind {
        SolverKind::Pinv => solve_pinv(chain, target, q0, cfg),
        SolverKind::Dls => solve_dls_fixed(chain, target, q0, cfg),
        SolverKind::AdaptiveDls => solve_dls_adaptive(chain, target, q0, cfg),
        SolverKind::Sdls => solve_sdls(chain, target, q0, cfg),
        SolverKind::Newton => solve_newton(chain, target, q0, cfg),
        SolverKind::Halley => solve_halley(chain, target, q0, cfg),
        SolverKind::Qp => solve_qp(chain, target, q0, cfg),
        SolverKind::NullspaceManip => solve_nullspace_manip(chain, target, q0, cfg),
        SolverKind::Mlp | SolverKind::MlpDls => {
            Err(Error::Config(format!("solver `{kind}` needs a trained model")))
        }
    }
}

/// Convenience: a 3-D target from a slice.
pub fn target(x: f64, y: f64, z: f64) -> TaskPosition {
    Vector3::new(x, y, z)
}
