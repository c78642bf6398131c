//! Benchmark targets, their generators and condition-number bins.

use std::fmt;

use nalgebra::DVector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::{JointConfig, KinematicChain, TaskPosition};
use crate::learning::sample_uniform;
use crate::metrics;

/// Lower edges of the κ bins; the last bin is unbounded.
pub const BIN_EDGES: [f64; 5] = [1.0, 5.0, 20.0, 100.0, 500.0];

/// Left-closed κ interval, indexed 0..5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct KappaBin(pub usize);

impl KappaBin {
    pub const ALL: [KappaBin; 5] = [KappaBin(0), KappaBin(1), KappaBin(2), KappaBin(3), KappaBin(4)];

    pub fn of(kappa: f64) -> Self {
        let idx = BIN_EDGES.iter().rposition(|&edge| kappa >= edge).unwrap_or(0);
        KappaBin(idx)
    }

    pub fn label(self) -> String {
        match BIN_EDGES.get(self.0 + 1) {
            Some(hi) => format!("[{},{})", BIN_EDGES[self.0], hi),
            None => format!("[{},inf)", BIN_EDGES[self.0]),
        }
    }

    pub fn contains(self, kappa: f64) -> bool {
        KappaBin::of(kappa) == self
    }
}

impl fmt::Display for KappaBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetDistribution {
    Training,
    NearSingular,
    WorkspaceShift,
}

impl TargetDistribution {
    pub const ALL: [TargetDistribution; 3] =
        [TargetDistribution::Training, TargetDistribution::NearSingular, TargetDistribution::WorkspaceShift];

    pub fn id(self) -> &'static str {
        match self {
            TargetDistribution::Training => "training",
            TargetDistribution::NearSingular => "near_singular",
            TargetDistribution::WorkspaceShift => "workspace_shift",
        }
    }

    fn stream(self) -> u64 {
        match self {
            TargetDistribution::Training => 0,
            TargetDistribution::NearSingular => 1,
            TargetDistribution::WorkspaceShift => 2,
        }
    }
}

impl fmt::Display for TargetDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTarget {
    pub id: usize,
    pub position: TaskPosition,
    pub q_star: JointConfig,
    /// κ of the task Jacobian at `q_star`.
    pub kappa: f64,
    pub bin: KappaBin,
    pub distribution: TargetDistribution,
}

impl BenchmarkTarget {
    pub fn from_config(chain: &KinematicChain, id: usize, q: JointConfig, distribution: TargetDistribution) -> Self {
        let position = chain.frames_unchecked(&q).position();
        let kappa = metrics::chain_condition(chain, &q).unwrap_or(f64::INFINITY);
        Self { id, position, q_star: q, kappa, bin: KappaBin::of(kappa), distribution }
    }
}

fn rng_for(seed: u64, dist: TargetDistribution) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(dist.stream());
    rng
}

/// Uniform joint sampling inside the limits.
pub fn generate_targets_safe(chain: &KinematicChain, n: usize, seed: u64) -> Vec<BenchmarkTarget> {
    let mut rng = rng_for(seed, TargetDistribution::Training);
    (0..n)
        .map(|id| BenchmarkTarget::from_config(chain, id, sample_uniform(chain, &mut rng), TargetDistribution::Training))
        .collect()
}

/// Uniform sampling with `joint` (zero-based) redrawn from `N(0, std²)`,
/// rejecting draws outside its limits.
pub fn generate_targets_near_singular(
    chain: &KinematicChain,
    n: usize,
    seed: u64,
    joint: usize,
    std: f64,
) -> Result<Vec<BenchmarkTarget>> {
    if joint >= chain.dof() {
        return Err(Error::Config(format!("near-singular joint index {joint} out of range for {} joints", chain.dof())));
    }
    let (lo, hi) = (chain.q_min()[joint], chain.q_max()[joint]);
    if !(lo <= 0.0 && hi >= 0.0) {
        return Err(Error::Config(format!("joint {joint} limits [{lo}, {hi}] exclude zero")));
    }
    if !(std > 0.0) {
        return Err(Error::Config(format!("near_singular_std {std} must be positive")));
    }
    let normal = Normal::new(0.0, std).map_err(|e| Error::Config(format!("near_singular_std: {e}")))?;
    let mut rng = rng_for(seed, TargetDistribution::NearSingular);
    Ok((0..n)
        .map(|id| {
            let mut q = sample_uniform(chain, &mut rng);
            q[joint] = loop {
                let v = normal.sample(&mut rng);
                if (lo..=hi).contains(&v) {
                    break v;
                }
            };
            BenchmarkTarget::from_config(chain, id, q, TargetDistribution::NearSingular)
        })
        .collect())
}

/// Every joint drawn uniformly from the outer `band` fraction of its range,
/// split evenly between the two ends.
pub fn generate_targets_workspace_shift(
    chain: &KinematicChain,
    n: usize,
    seed: u64,
    band: f64,
) -> Result<Vec<BenchmarkTarget>> {
    if !(band > 0.0 && band <= 1.0) {
        return Err(Error::Config(format!("shift_band {band} must lie in (0, 1]")));
    }
    let mut rng = rng_for(seed, TargetDistribution::WorkspaceShift);
    let (lo, hi) = (chain.q_min(), chain.q_max());
    Ok((0..n)
        .map(|id| {
            let q = DVector::from_fn(chain.dof(), |i, _| {
                let width = (hi[i] - lo[i]) * band * 0.5;
                let u = rng.random_range(0.0..width);
                if rng.random_bool(0.5) {
                    lo[i] + u
                } else {
                    hi[i] - u
                }
            });
            BenchmarkTarget::from_config(chain, id, q, TargetDistribution::WorkspaceShift)
        })
        .collect())
}

/// True when every joint of `q` lies in the outer `band` of its range.
pub fn in_outer_band(chain: &KinematicChain, q: &JointConfig, band: f64) -> bool {
    (0..chain.dof()).all(|i| {
        let (lo, hi) = (chain.q_min()[i], chain.q_max()[i]);
        let width = (hi - lo) * band * 0.5;
        q[i] <= lo + width || q[i] >= hi - width
    })
}

pub fn bin_by_condition(targets: &mut [BenchmarkTarget]) {
    for t in targets {
        t.bin = KappaBin::of(t.kappa);
    }
}
