//! The four evaluation panels.
//!
//! * A: error and success per condition-number bin.
//! * B: tracking along an elbow sweep (velocity amplification, w).
//! * C: success under three target distributions.
//! * D: single-query latency after a warmup.
//!
//! Every panel produces per-query [`QueryRow`]s plus aggregates recomputed
//! from those rows, so the CSV alone reproduces the JSON.

mod report;
mod targets;

use std::sync::Arc;

use serde::Serialize;

use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::kinematics::{JointConfig, KinematicChain, TaskPosition};
use crate::learning::{self, MlpModel};
use crate::metrics;
use crate::solvers::{self, SolveResult, SolverConfig, SolverKind};

pub use report::{aggregate, rows_csv, summary_table, write_outputs, GroupStats, PanelReport, QueryRow, SweepPoint, SweepReport, CSV_HEADER};
pub use targets::{
    bin_by_condition, generate_targets_near_singular, generate_targets_safe, generate_targets_workspace_shift,
    in_outer_band, BenchmarkTarget, KappaBin, TargetDistribution, BIN_EDGES,
};

/// Success threshold on the position error, meters.
pub const SUCCESS_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Panel {
    A,
    B,
    C,
    D,
}

impl Panel {
    pub const ALL: [Panel; 4] = [Panel::A, Panel::B, Panel::C, Panel::D];

    pub fn id(self) -> &'static str {
        match self {
            Panel::A => "A",
            Panel::B => "B",
            Panel::C => "C",
            Panel::D => "D",
        }
    }

    /// `A`..`D` or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<Panel>> {
        match s.trim() {
            "all" => Ok(Panel::ALL.to_vec()),
            "A" | "a" => Ok(vec![Panel::A]),
            "B" | "b" => Ok(vec![Panel::B]),
            "C" | "c" => Ok(vec![Panel::C]),
            "D" | "d" => Ok(vec![Panel::D]),
            other => Err(Error::Config(format!("unknown panel `{other}` (expected A, B, C, D or all)"))),
        }
    }
}

impl std::fmt::Display for Panel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSettings {
    pub seed: u64,
    /// Panel A / D target count.
    pub n: usize,
    /// Per-distribution target count for Panel C.
    pub n_ood: usize,
    pub waypoints: usize,
    pub warmup: usize,
    /// Zero-based index of the joint biased toward zero for near-singular targets.
    pub near_singular_joint_index: usize,
    pub near_singular_std: f64,
    /// Fraction of each joint range (split over both ends) used for workspace shift.
    pub shift_band: f64,
    /// Zero-based index of the joint swept in Panel B.
    pub elbow_joint_index: usize,
    /// Sweep starts and ends this fraction of the range inside the limits.
    pub sweep_margin: f64,
    pub threads: Option<usize>,
}

impl BenchSettings {
    pub fn for_chain(chain: &KinematicChain) -> Self {
        let (ns, elbow) = match chain.name() {
            "panda" => (5, 3),
            _ => (chain.dof() / 2, chain.dof() / 2),
        };
        Self {
            seed: 42,
            n: 500,
            n_ood: 300,
            waypoints: 300,
            warmup: 50,
            near_singular_joint_index: ns,
            near_singular_std: 0.05,
            shift_band: 0.2,
            elbow_joint_index: elbow,
            sweep_margin: 0.1,
            threads: std::env::var("SINGIK_THREADS").ok().and_then(|v| v.parse().ok()).filter(|&t| t > 0),
        }
    }

    /// Chain defaults overridden by any matching keys in `file`.
    pub fn from_config(chain: &KinematicChain, file: &ConfigFile) -> Result<Self> {
        let mut s = Self::for_chain(chain);
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = file.get_parsed(stringify!($field))? {
                    s.$field = v;
                }
            )*};
        }
        take!(seed, n, n_ood, waypoints, warmup, near_singular_joint_index, near_singular_std, shift_band, elbow_joint_index, sweep_margin);
        if let Some(t) = file.get_parsed::<usize>("threads")? {
            s.threads = Some(t.max(1));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone)]
pub struct SolverEntry {
    pub kind: SolverKind,
    pub cfg: SolverConfig,
}

/// The solvers under test plus the shared model for the learned ones.
#[derive(Debug, Clone)]
pub struct SolverSuite {
    pub entries: Vec<SolverEntry>,
    model: Option<Arc<MlpModel>>,
}

impl SolverSuite {
    pub fn new(kinds: &[SolverKind], file: &ConfigFile, model: Option<MlpModel>) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::Config("no solvers selected".into()));
        }
        if model.is_none() {
            if let Some(k) = kinds.iter().find(|k| k.needs_model()) {
                return Err(Error::Config(format!("solver `{k}` needs a trained model")));
            }
        }
        let entries = kinds
            .iter()
            .map(|&kind| Ok(SolverEntry { kind, cfg: file.solver_config(kind)? }))
            .collect::<Result<_>>()?;
        Ok(Self { entries, model: model.map(Arc::new) })
    }

    pub fn with_defaults(kinds: &[SolverKind], model: Option<MlpModel>) -> Result<Self> {
        Self::new(kinds, &ConfigFile::default(), model)
    }

    pub fn model(&self) -> Option<&MlpModel> {
        self.model.as_deref()
    }

    pub fn solve(
        &self,
        entry: &SolverEntry,
        chain: &KinematicChain,
        target: &TaskPosition,
        q0: &JointConfig,
    ) -> Result<SolveResult> {
        match entry.kind {
            SolverKind::Mlp => learning::solve_mlp(chain, target, self.model.as_deref().expect("checked in new")),
            SolverKind::MlpDls => {
                learning::solve_mlp_dls(chain, target, self.model.as_deref().expect("checked in new"), &entry.cfg)
            }
            kind => solvers::solve_classical(kind, chain, target, q0, &entry.cfg),
        }
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn query_row(
    panel: Panel,
    entry: &SolverEntry,
    target: &BenchmarkTarget,
    res: &SolveResult,
) -> QueryRow {
    QueryRow {
        panel,
        solver: entry.kind,
        target_id: target.id,
        distribution: target.distribution.id().to_string(),
        kappa_bin: target.bin,
        kappa: target.kappa,
        pos_error_mm: res.position_error * 1e3,
        success: res.position_error < SUCCESS_THRESHOLD,
        iters: res.iterations_used,
        time_ms: res.wall_time * 1e3,
        init_error_mm: res.init_error * 1e3,
    }
}

/// Solve every target with every solver from `q0`, sharded over rayon workers.
/// Rows come back ordered by solver, then target id.
pub fn run_queries(
    panel: Panel,
    suite: &SolverSuite,
    chain: &KinematicChain,
    targets: &[BenchmarkTarget],
    q0: &JointConfig,
    threads: Option<usize>,
) -> Result<Vec<QueryRow>> {
    use rayon::prelude::*;
    let mut rows = Vec::with_capacity(suite.entries.len() * targets.len());
    for entry in &suite.entries {
        let part: Result<Vec<QueryRow>> = with_pool(threads, || {
            targets
                .par_iter()
                .map(|t| suite.solve(entry, chain, &t.position, q0).map(|r| query_row(panel, entry, t, &r)))
                .collect()
        })?;
        rows.extend(part?);
    }
    Ok(rows)
}

pub fn run_panel_a(
    suite: &SolverSuite,
    chain: &KinematicChain,
    targets: &[BenchmarkTarget],
    settings: &BenchSettings,
) -> Result<PanelReport> {
    let rows = run_queries(Panel::A, suite, chain, targets, &chain.neutral(), settings.threads)?;
    Ok(PanelReport::from_rows(Panel::A, rows))
}

pub fn run_panel_c(
    suite: &SolverSuite,
    chain: &KinematicChain,
    target_sets: &[Vec<BenchmarkTarget>],
    settings: &BenchSettings,
) -> Result<PanelReport> {
    let all: Vec<BenchmarkTarget> = target_sets.iter().flatten().cloned().collect();
    let rows = run_queries(Panel::C, suite, chain, &all, &chain.neutral(), settings.threads)?;
    Ok(PanelReport::from_rows(Panel::C, rows))
}

/// Sequential single-query timing on the calling thread. The first
/// `settings.warmup` queries per solver (cycling through `targets`) are run
/// and discarded.
pub fn run_panel_d(
    suite: &SolverSuite,
    chain: &KinematicChain,
    targets: &[BenchmarkTarget],
    settings: &BenchSettings,
) -> Result<PanelReport> {
    let q0 = chain.neutral();
    let mut rows = Vec::new();
    for entry in &suite.entries {
        for t in targets.iter().cycle().take(if targets.is_empty() { 0 } else { settings.warmup }) {
            suite.solve(entry, chain, &t.position, &q0)?;
        }
        for t in targets {
            let res = suite.solve(entry, chain, &t.position, &q0)?;
            rows.push(query_row(Panel::D, entry, t, &res));
        }
    }
    Ok(PanelReport::from_rows(Panel::D, rows))
}

/// Joint configurations of the Panel B sweep: the elbow runs from
/// `margin` above its lower limit to `margin` below its upper limit, every
/// other joint stays at the neutral (mid-limit) value.
pub fn elbow_sweep(chain: &KinematicChain, settings: &BenchSettings) -> Result<Vec<JointConfig>> {
    let j = settings.elbow_joint_index;
    if j >= chain.dof() {
        return Err(Error::Config(format!("elbow joint index {j} out of range for {} joints", chain.dof())));
    }
    if settings.waypoints < 2 || !(0.0..0.5).contains(&settings.sweep_margin) {
        return Err(Error::Config("sweep needs ≥ 2 waypoints and a margin in [0, 0.5)".into()));
    }
    let (lo, hi) = (chain.q_min()[j], chain.q_max()[j]);
    let start = lo + settings.sweep_margin * (hi - lo);
    let end = hi - settings.sweep_margin * (hi - lo);
    let base = chain.neutral();
    Ok((0..settings.waypoints)
        .map(|k| {
            let mut q = base.clone();
            q[j] = start + (end - start) * k as f64 / (settings.waypoints - 1) as f64;
            q
        })
        .collect())
}

/// Per-step amplification ratios `‖Δq‖/‖Δx‖`. Steps with `‖Δx‖ < 1e-12`
/// yield `None` and are counted in the second return value.
pub fn velocity_amplification(q_path: &[JointConfig], x_path: &[TaskPosition]) -> (Vec<Option<f64>>, usize) {
    let mut skipped = 0;
    let ratios = q_path
        .windows(2)
        .zip(x_path.windows(2))
        .map(|(q, x)| {
            let dx = (x[1] - x[0]).norm();
            if dx < 1e-12 {
                skipped += 1;
                None
            } else {
                Some((&q[1] - &q[0]).norm() / dx)
            }
        })
        .collect();
    (ratios, skipped)
}

/// Tracking along the elbow sweep: waypoint 0 starts from the neutral
/// configuration, every later waypoint from the previous solution.
pub fn run_panel_b(suite: &SolverSuite, chain: &KinematicChain, settings: &BenchSettings) -> Result<PanelReport> {
    let sweep = elbow_sweep(chain, settings)?;
    let sweep_targets: Vec<BenchmarkTarget> = sweep
        .iter()
        .enumerate()
        .map(|(k, q)| BenchmarkTarget::from_config(chain, k, q.clone(), TargetDistribution::Training))
        .collect();
    let x_path: Vec<TaskPosition> = sweep_targets.iter().map(|t| t.position).collect();
    let mut rows = Vec::new();
    let mut sweeps = Vec::new();
    for entry in &suite.entries {
        let mut q = chain.neutral();
        let mut q_path = Vec::with_capacity(sweep.len());
        let mut points = Vec::with_capacity(sweep.len());
        for t in &sweep_targets {
            let res = suite.solve(entry, chain, &t.position, &q)?;
            q = res.q_final.clone();
            let mut row = query_row(Panel::B, entry, t, &res);
            row.distribution = "sweep".into();
            rows.push(row);
            points.push(SweepPoint {
                waypoint: t.id,
                elbow: t.q_star[settings.elbow_joint_index],
                pos_error_mm: res.position_error * 1e3,
                amplification: None,
                w: metrics::chain_manipulability(chain, &q)?,
                w_reference: metrics::chain_manipulability(chain, &t.q_star)?,
            });
            q_path.push(q.clone());
        }
        let (ratios, skipped) = velocity_amplification(&q_path, &x_path);
        for (p, r) in points.iter_mut().skip(1).zip(ratios) {
            p.amplification = r;
        }
        sweeps.push(SweepReport::new(entry.kind, points, skipped));
    }
    let mut report = PanelReport::from_rows(Panel::B, rows);
    report.sweeps = sweeps;
    Ok(report)
}

/// Everything `singik bench` needs besides the output directory.
pub fn run_panels(
    panels: &[Panel],
    suite: &SolverSuite,
    chain: &KinematicChain,
    settings: &BenchSettings,
) -> Result<Vec<PanelReport>> {
    let mut reports = Vec::new();
    let safe = || generate_targets_safe(chain, settings.n, settings.seed);
    for &p in panels {
        let r = match p {
            Panel::A => run_panel_a(suite, chain, &safe(), settings)?,
            Panel::B => run_panel_b(suite, chain, settings)?,
            Panel::C => {
                let sets = vec![
                    generate_targets_safe(chain, settings.n_ood, settings.seed),
                    generate_targets_near_singular(
                        chain,
                        settings.n_ood,
                        settings.seed,
                        settings.near_singular_joint_index,
                        settings.near_singular_std,
                    )?,
                    generate_targets_workspace_shift(chain, settings.n_ood, settings.seed, settings.shift_band)?,
                ];
                run_panel_c(suite, chain, &sets, settings)?
            }
            Panel::D => run_panel_d(suite, chain, &safe(), settings)?,
        };
        reports.push(r);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn panel_parsing() {
        assert_eq!(Panel::parse_list("all").unwrap().len(), 4);
        assert_eq!(Panel::parse_list("C").unwrap(), vec![Panel::C]);
        assert!(Panel::parse_list("E").is_err());
    }

    #[test]
    fn amplification_of_a_unit_lever() {
        // 1-DoF arm of length 1: |dx| = 2 sin(dq/2), ratio → 1 as dq → 0
        let q: Vec<JointConfig> = (0..5).map(|k| DVector::from_element(1, k as f64 * 1e-4)).collect();
        let x: Vec<TaskPosition> = q.iter().map(|q| TaskPosition::new(q[0].cos(), q[0].sin(), 0.0)).collect();
        let (r, skipped) = velocity_amplification(&q, &x);
        assert_eq!(skipped, 0);
        assert!(r.iter().all(|v| (v.unwrap() - 1.0).abs() < 1e-8));
        let still = vec![DVector::from_element(1, 0.3); 3];
        let moving: Vec<TaskPosition> = (0..3).map(|k| TaskPosition::new(k as f64, 0.0, 0.0)).collect();
        assert!(velocity_amplification(&still, &moving).0.iter().all(|v| *v == Some(0.0)));
        let (r, skipped) = velocity_amplification(&still, &vec![TaskPosition::zeros(); 3]);
        assert_eq!((r, skipped), (vec![None, None], 2));
    }

    #[test]
    fn sweep_range() {
        let chain = KinematicChain::panda();
        let s = BenchSettings::for_chain(&chain);
        let sweep = elbow_sweep(&chain, &s).unwrap();
        assert_eq!(sweep.len(), 300);
        let (lo, hi) = (chain.q_min()[3], chain.q_max()[3]);
        assert!((sweep[0][3] - (lo + 0.1 * (hi - lo))).abs() < 1e-12);
        assert!((sweep[299][3] - (hi - 0.1 * (hi - lo))).abs() < 1e-12);
        assert_eq!(sweep[17][0], chain.neutral()[0]);
        let bad = BenchSettings { elbow_joint_index: 9, ..s };
        assert!(elbow_sweep(&chain, &bad).is_err());
    }

    #[test]
    fn suite_requires_model_for_learned_solvers() {
        assert!(SolverSuite::with_defaults(&[SolverKind::MlpDls], None).is_err());
        assert!(SolverSuite::with_defaults(&[], None).is_err());
        assert!(SolverSuite::with_defaults(&SolverKind::CLASSICAL, None).is_ok());
    }

    #[test]
    fn settings_from_config() {
        let chain = KinematicChain::panda();
        let file = ConfigFile::parse("n = 20\nelbow_joint_index = 2\nthreads = 0\n").unwrap();
        let s = BenchSettings::from_config(&chain, &file).unwrap();
        assert_eq!((s.n, s.elbow_joint_index, s.threads), (20, 2, Some(1)));
        assert_eq!(s.near_singular_joint_index, 5);
    }
}
