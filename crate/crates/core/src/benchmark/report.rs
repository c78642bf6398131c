//! Per-query rows, aggregates and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::{KappaBin, Panel, TargetDistribution};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::solvers::SolverKind;

pub const CSV_HEADER: &str =
    "panel,solver,target_id,distribution,kappa_bin,kappa,pos_error_mm,success,iters,time_ms,init_error_mm";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryRow {
    pub panel: Panel,
    pub solver: SolverKind,
    pub target_id: usize,
    pub distribution: String,
    pub kappa_bin: KappaBin,
    pub kappa: f64,
    pub pos_error_mm: f64,
    pub success: bool,
    pub iters: usize,
    pub time_ms: f64,
    pub init_error_mm: f64,
}

impl QueryRow {
    /// CSV fields; floats use shortest round-trip formatting so parsing is exact.
    pub fn csv_record(&self) -> [String; 11] {
        [
            self.panel.to_string(),
            self.solver.to_string(),
            self.target_id.to_string(),
            self.distribution.clone(),
            self.kappa_bin.label(),
            format!("{:?}", self.kappa),
            format!("{:?}", self.pos_error_mm),
            self.success.to_string(),
            self.iters.to_string(),
            format!("{:?}", self.time_ms),
            format!("{:?}", self.init_error_mm),
        ]
    }

    pub fn parse_csv(text: &str) -> Result<Vec<QueryRow>> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| Error::Config(format!("rows file: {e}")))?;
        if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
            return Err(Error::Config("rows file: unexpected header".into()));
        }
        reader
            .records()
            .enumerate()
            .map(|(i, rec)| {
                let rec = rec.map_err(|e| Error::Config(format!("rows file: {e}")))?;
                let fields: Vec<&str> = rec.iter().collect();
                Self::parse_fields(&fields).map_err(|m| Error::Config(format!("rows file record {}: {m}", i + 1)))
            })
            .collect()
    }

    fn parse_fields(f: &[&str]) -> std::result::Result<QueryRow, String> {
        if f.len() != 11 {
            return Err(format!("expected 11 fields, got {}", f.len()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number `{s}`"));
        let int = |s: &str| s.parse::<usize>().map_err(|_| format!("bad integer `{s}`"));
        let panel = *Panel::parse_list(f[0]).map_err(|e| e.to_string())?.first().ok_or("panel")?;
        let bin = KappaBin::ALL
            .into_iter()
            .find(|b| b.label() == f[4])
            .ok_or_else(|| format!("bad bin `{}`", f[4]))?;
        Ok(QueryRow {
            panel,
            solver: f[1].parse().map_err(|e: Error| e.to_string())?,
            target_id: int(f[2])?,
            distribution: f[3].to_string(),
            kappa_bin: bin,
            kappa: num(f[5])?,
            pos_error_mm: num(f[6])?,
            success: f[7].parse().map_err(|_| format!("bad bool `{}`", f[7]))?,
            iters: int(f[8])?,
            time_ms: num(f[9])?,
            init_error_mm: num(f[10])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub solver: SolverKind,
    pub group: String,
    pub n: usize,
    pub successes: usize,
    /// Percent.
    pub success_rate: f64,
    pub mean_error_mm: f64,
    pub std_error_mm: f64,
    pub median_error_mm: f64,
    pub mean_iters: f64,
    pub median_iters: f64,
    pub median_time_ms: f64,
    pub p99_time_ms: f64,
    pub mean_time_per_iter_ms: f64,
    pub mean_init_error_mm: f64,
    pub median_init_error_mm: f64,
}

pub(crate) fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Nearest-rank percentile, `p` in (0, 100].
pub(crate) fn percentile(v: &[f64], p: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * s.len() as f64).ceil() as usize;
    s[rank.clamp(1, s.len()) - 1]
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

impl GroupStats {
    pub fn from_rows(solver: SolverKind, group: impl Into<String>, rows: &[&QueryRow]) -> Self {
        let col = |f: fn(&QueryRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();
        let err = col(|r| r.pos_error_mm);
        let iters = col(|r| r.iters as f64);
        let time = col(|r| r.time_ms);
        let init = col(|r| r.init_error_mm);
        let per_iter: Vec<f64> = rows.iter().filter(|r| r.iters > 0).map(|r| r.time_ms / r.iters as f64).collect();
        let mean_err = mean(&err);
        let std_err = if err.is_empty() {
            f64::NAN
        } else {
            (err.iter().map(|e| (e - mean_err).powi(2)).sum::<f64>() / err.len() as f64).sqrt()
        };
        let successes = rows.iter().filter(|r| r.success).count();
        Self {
            solver,
            group: group.into(),
            n: rows.len(),
            successes,
            success_rate: if rows.is_empty() { f64::NAN } else { 100.0 * successes as f64 / rows.len() as f64 },
            mean_error_mm: mean_err,
            std_error_mm: std_err,
            median_error_mm: median(&err),
            mean_iters: mean(&iters),
            median_iters: median(&iters),
            median_time_ms: median(&time),
            p99_time_ms: percentile(&time, 99.0),
            mean_time_per_iter_ms: mean(&per_iter),
            mean_init_error_mm: mean(&init),
            median_init_error_mm: median(&init),
        }
    }
}

/// Aggregates for one panel: every solver gets an `all` group plus one group
/// per κ bin (A), per distribution (C) or none (B, D). Empty bins are kept.
pub fn aggregate(panel: Panel, rows: &[QueryRow]) -> Vec<GroupStats> {
    let mut solvers: Vec<SolverKind> = Vec::new();
    for r in rows {
        if !solvers.contains(&r.solver) {
            solvers.push(r.solver);
        }
    }
    let mut out = Vec::new();
    for s in solvers {
        let mine: Vec<&QueryRow> = rows.iter().filter(|r| r.solver == s && r.panel == panel).collect();
        out.push(GroupStats::from_rows(s, "all", &mine));
        match panel {
            Panel::A => {
                for bin in KappaBin::ALL {
                    let sub: Vec<&QueryRow> = mine.iter().copied().filter(|r| r.kappa_bin == bin).collect();
                    out.push(GroupStats::from_rows(s, bin.label(), &sub));
                }
            }
            Panel::C => {
                for d in TargetDistribution::ALL {
                    let sub: Vec<&QueryRow> = mine.iter().copied().filter(|r| r.distribution == d.id()).collect();
                    out.push(GroupStats::from_rows(s, d.id(), &sub));
                }
            }
            Panel::B | Panel::D => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub waypoint: usize,
    /// Commanded elbow angle, rad.
    pub elbow: f64,
    pub pos_error_mm: f64,
    /// `‖Δq‖/‖Δx‖` from the previous waypoint; `None` for the first or a skipped step.
    pub amplification: Option<f64>,
    /// w at the tracked solution.
    pub w: f64,
    /// w at the commanded configuration.
    pub w_reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub solver: SolverKind,
    pub points: Vec<SweepPoint>,
    pub skipped: usize,
    pub max_amplification: f64,
    pub mean_amplification: f64,
    pub min_w: f64,
    pub min_w_reference: f64,
}

impl SweepReport {
    pub fn new(solver: SolverKind, points: Vec<SweepPoint>, skipped: usize) -> Self {
        let amps: Vec<f64> = points.iter().filter_map(|p| p.amplification).collect();
        let fold_min = |f: fn(&SweepPoint) -> f64| points.iter().map(f).fold(f64::INFINITY, f64::min);
        Self {
            solver,
            max_amplification: amps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_amplification: mean(&amps),
            min_w: fold_min(|p| p.w),
            min_w_reference: fold_min(|p| p.w_reference),
            points,
            skipped,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for p in &self.points {
            let amp = p.amplification.map_or(String::new(), |a| format!("{a:?}"));
            let _ = writeln!(
                s,
                "{},{},{:?},{:?},{},{:?},{:?}",
                self.solver, p.waypoint, p.elbow, p.pos_error_mm, amp, p.w, p.w_reference
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelReport {
    pub panel: Panel,
    pub rows: Vec<QueryRow>,
    pub groups: Vec<GroupStats>,
    pub sweeps: Vec<SweepReport>,
}

impl PanelReport {
    pub fn from_rows(panel: Panel, rows: Vec<QueryRow>) -> Self {
        let groups = aggregate(panel, &rows);
        Self { panel, rows, groups, sweeps: Vec::new() }
    }

    pub fn group(&self, solver: SolverKind, group: &str) -> Option<&GroupStats> {
        self.groups.iter().find(|g| g.solver == solver && g.group == group)
    }

    pub fn sweep(&self, solver: SolverKind) -> Option<&SweepReport> {
        self.sweeps.iter().find(|s| s.solver == solver)
    }

    pub fn rows_for(&self, solver: SolverKind) -> impl Iterator<Item = &QueryRow> {
        self.rows.iter().filter(move |r| r.solver == solver)
    }

    /// `{solver: {group: stats}}`, plus sweep summaries for Panel B.
    pub fn to_json(&self) -> Value {
        let mut by_solver: BTreeMap<String, BTreeMap<String, &GroupStats>> = BTreeMap::new();
        for g in &self.groups {
            by_solver.entry(g.solver.to_string()).or_default().insert(g.group.clone(), g);
        }
        let mut v = serde_json::to_value(by_solver).expect("plain data serializes");
        if !self.sweeps.is_empty() {
            let sweeps: BTreeMap<String, Value> = self
                .sweeps
                .iter()
                .map(|s| {
                    (
                        s.solver.to_string(),
                        json!({
                            "max_amplification": s.max_amplification,
                            "mean_amplification": s.mean_amplification,
                            "skipped": s.skipped,
                            "min_w": s.min_w,
                            "min_w_reference": s.min_w_reference,
                        }),
                    )
                })
                .collect();
            v["sweep"] = serde_json::to_value(sweeps).expect("plain data serializes");
        }
        v
    }
}

pub fn rows_csv(reports: &[PanelReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
    for r in reports.iter().flat_map(|p| &p.rows) {
        w.write_record(r.csv_record()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are UTF-8")
}

/// Writes `rows.csv`, `aggregate.json` and, when Panel B ran, `sweep.csv`.
pub fn write_outputs(dir: impl AsRef<Path>, reports: &[PanelReport]) -> Result<()> {
    let dir = dir.as_ref();
    write_atomic(dir.join("rows.csv"), rows_csv(reports).as_bytes())?;
    let agg: BTreeMap<&str, Value> = reports.iter().map(|r| (r.panel.id(), r.to_json())).collect();
    let text = serde_json::to_string_pretty(&agg).map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(dir.join("aggregate.json"), text.as_bytes())?;
    let sweeps: Vec<&SweepReport> = reports.iter().flat_map(|r| &r.sweeps).collect();
    if !sweeps.is_empty() {
        let mut s = String::from("solver,waypoint,elbow_rad,pos_error_mm,amplification,w,w_reference\n");
        for sw in sweeps {
            s.push_str(&sw.to_csv());
        }
        write_atomic(dir.join("sweep.csv"), s.as_bytes())?;
    }
    Ok(())
}

/// Human-readable table: one line per solver and group.
pub fn summary_table(reports: &[PanelReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let _ = writeln!(s, "Panel {}", r.panel);
        let _ = writeln!(
            s,
            "  {:<9} {:<16} {:>5} {:>9} {:>12} {:>11} {:>10} {:>10}",
            "solver", "group", "n", "success%", "mean err mm", "median ms", "p99 ms", "mean iters"
        );
        for g in &r.groups {
            let _ = writeln!(
                s,
                "  {:<9} {:<16} {:>5} {:>9.1} {:>12.4} {:>11.4} {:>10.4} {:>10.2}",
                g.solver.id(),
                g.group,
                g.n,
                g.success_rate,
                g.mean_error_mm,
                g.median_time_ms,
                g.p99_time_ms,
                g.mean_iters
            );
        }
        for sw in &r.sweeps {
            let _ = writeln!(
                s,
                "  {:<9} sweep: max amplification {:.3}, mean {:.3}, min w {:.4} (reference {:.4}), skipped {}",
                sw.solver.id(),
                sw.max_amplification,
                sw.mean_amplification,
                sw.min_w,
                sw.min_w_reference,
                sw.skipped
            );
        }
    }
    s
}
