//! Dense feed-forward regressor from task positions to joint configurations.
//!
//! The network works in normalised coordinates: inputs are z-scored with
//! training-set statistics and outputs live in `[-1, 1]`, mapped back onto
//! the joint limits. Both sets of constants travel inside [`MlpModel`] so a
//! saved model is self-contained.

mod model_file;
mod train;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kinematics::{JointConfig, KinematicChain, TaskPosition};
use crate::solvers::{self, SolveResult, SolverConfig, SolverKind};

pub use train::{
    batch_loss_gradient, mlp_train, EpochStats, Gradients, Loss, TrainConfig, TrainOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
}

impl Activation {
    pub fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
        }
    }

    fn from_tag(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            other => Err(Error::ModelFormat(format!("unknown activation `{other}`"))),
        }
    }
}

/// Per-dimension affine map `raw = mean + scale ⊙ normalised`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub mean: DVector<f64>,
    pub scale: DVector<f64>,
}

impl Normalization {
    pub fn normalize(&self, v: &DVector<f64>) -> DVector<f64> {
        (v - &self.mean).component_div(&self.scale)
    }

    pub fn denormalize(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.mean + self.scale.component_mul(v)
    }

    /// Z-score statistics of `samples`; degenerate dimensions get scale 1.
    pub fn z_score(samples: &[DVector<f64>]) -> Self {
        let dim = samples.first().map_or(0, |s| s.len());
        let n = samples.len().max(1) as f64;
        let mean = samples.iter().fold(DVector::zeros(dim), |acc, s| acc + s) / n;
        let var = samples
            .iter()
            .fold(DVector::zeros(dim), |acc, s| acc + (s - &mean).map(|d| d * d))
            / n;
        let scale = var.map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 });
        Self { mean, scale }
    }

    /// Maps `[lo, hi]` onto `[-1, 1]`.
    pub fn from_limits(lo: &DVector<f64>, hi: &DVector<f64>) -> Self {
        Self { mean: (lo + hi) * 0.5, scale: (hi - lo) * 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    dims: Vec<usize>,
    activation: Activation,
    /// `weights[l]` is `dims[l+1] × dims[l]`.
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
    input: Normalization,
    output: Normalization,
}

impl MlpModel {
    pub fn new(
        weights: Vec<DMatrix<f64>>,
        biases: Vec<DVector<f64>>,
        activation: Activation,
        input: Normalization,
        output: Normalization,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::ModelFormat("need one bias per weight matrix".into()));
        }
        let mut dims = vec![weights[0].ncols()];
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.ncols() != dims[l] || b.len() != w.nrows() {
                return Err(Error::ModelFormat(format!("layer {l}: inconsistent shapes")));
            }
            dims.push(w.nrows());
        }
        if input.mean.len() != dims[0] || input.scale.len() != dims[0] {
            return Err(Error::ModelFormat("input normalisation size".into()));
        }
        let out = *dims.last().expect("non-empty");
        if output.mean.len() != out || output.scale.len() != out {
            return Err(Error::ModelFormat("output normalisation size".into()));
        }
        if input.scale.iter().chain(output.scale.iter()).any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::ModelFormat("normalisation scales must be positive".into()));
        }
        let finite = weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
            && input.mean.iter().chain(output.mean.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::ModelFormat("non-finite parameter".into()));
        }
        Ok(Self { dims, activation, weights, biases, input, output })
    }

    /// Uniform `±1/√fan_in` initialisation for weights and biases.
    pub fn init(dims: &[usize], input: Normalization, output: Normalization, seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::ModelFormat(format!("bad layer dims {dims:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in dims.windows(2) {
            let bound = 1.0 / (pair[0] as f64).sqrt();
            let w = DMatrix::from_fn(pair[1], pair[0], |_, _| rng.random_range(-bound..bound));
            let b = DVector::from_fn(pair[1], |_, _| rng.random_range(-bound..bound));
            weights.push(w);
            biases.push(b);
        }
        Self::new(weights, biases, Activation::Relu, input, output)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[DVector<f64>] {
        &self.biases
    }

    pub fn input_normalization(&self) -> &Normalization {
        &self.input
    }

    pub fn output_normalization(&self) -> &Normalization {
        &self.output
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [DMatrix<f64>], &mut [DVector<f64>]) {
        (&mut self.weights, &mut self.biases)
    }

    /// Network output in normalised coordinates for a batch (one column per sample).
    pub fn forward_normalized(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let last = self.weights.len() - 1;
        let mut a = x.clone();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w * &a;
            for mut col in z.column_iter_mut() {
                col += b;
            }
            if l < last {
                z.apply(|v| *v = v.max(0.0));
            }
            a = z;
        }
        a
    }

    /// De-normalised prediction without clamping.
    pub fn predict_raw(&self, x: &TaskPosition) -> JointConfig {
        let xn = self.input.normalize(&DVector::from_column_slice(x.as_slice()));
        let out = self.forward_normalized(&DMatrix::from_column_slice(xn.len(), 1, xn.as_slice()));
        self.output.denormalize(&out.column(0).into_owned())
    }

    /// De-normalised prediction clamped to `mean ± scale` of the output map,
    /// i.e. the joint limits the model was trained against.
    pub fn predict(&self, x: &TaskPosition) -> JointConfig {
        let raw = self.predict_raw(x);
        let lo = &self.output.mean - &self.output.scale;
        let hi = &self.output.mean + &self.output.scale;
        DVector::from_fn(raw.len(), |i, _| raw[i].clamp(lo[i], hi[i]))
    }
}

pub fn mlp_forward(model: &MlpModel, x: &TaskPosition) -> JointConfig {
    model.predict(x)
}

/// FK-generated `(x, q)` pairs with `q` uniform inside the joint limits.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub positions: Vec<TaskPosition>,
    pub configs: Vec<JointConfig>,
    pub seed: u64,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// First `ceil(len · (1 − holdout))` pairs for training, the rest held out.
    pub fn split(&self, holdout: f64) -> (TrainingSet, TrainingSet) {
        let n_train = ((self.len() as f64) * (1.0 - holdout)).ceil() as usize;
        let n_train = n_train.min(self.len());
        let part = |r: std::ops::Range<usize>| TrainingSet {
            positions: self.positions[r.clone()].to_vec(),
            configs: self.configs[r].to_vec(),
            seed: self.seed,
        };
        (part(0..n_train), part(n_train..self.len()))
    }
}

pub fn sample_uniform(chain: &KinematicChain, rng: &mut impl rand::Rng) -> JointConfig {
    let (lo, hi) = (chain.q_min(), chain.q_max());
    DVector::from_fn(chain.dof(), |i, _| rng.random_range(lo[i]..hi[i]))
}

pub fn generate_dataset(chain: &KinematicChain, n: usize, seed: u64) -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(n);
    let mut configs = Vec::with_capacity(n);
    for _ in 0..n {
        let q = sample_uniform(chain, &mut rng);
        positions.push(chain.frames_unchecked(&q).position());
        configs.push(q);
    }
    TrainingSet { positions, configs, seed }
}

/// Mean Euclidean position error of clamped predictions over a set, meters.
pub fn mean_position_error(chain: &KinematicChain, model: &MlpModel, set: &TrainingSet) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let total: f64 = set
        .positions
        .iter()
        .map(|x| (chain.frames_unchecked(&model.predict(x)).position() - x).norm())
        .sum();
    total / set.len() as f64
}

fn check_model(chain: &KinematicChain, model: &MlpModel) -> Result<()> {
    let out = *model.dims().last().expect("non-empty");
    if model.dims()[0] != 3 || out != chain.dof() {
        return Err(Error::DimensionMismatch { expected: chain.dof(), got: out });
    }
    Ok(())
}

/// A single forward pass; the prediction is the answer.
pub fn solve_mlp(chain: &KinematicChain, target: &TaskPosition, model: &MlpModel) -> Result<SolveResult> {
    check_model(chain, model)?;
    let start = Instant::now();
    let q = chain.clamp(&model.predict(target));
    let err = (target - chain.frames_unchecked(&q).position()).norm();
    let tol = SolverConfig::for_solver(SolverKind::Mlp).success_tol;
    Ok(SolveResult {
        q_final: q,
        position_error: err,
        iterations_used: 0,
        success: err < tol,
        trace: None,
        wall_time: start.elapsed().as_secs_f64(),
        init_error: err,
        events: Vec::new(),
    })
}

/// Network proposal refined by fixed DLS. `init_error` is the proposal's error.
pub fn solve_mlp_dls(
    chain: &KinematicChain,
    target: &TaskPosition,
    model: &MlpModel,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    check_model(chain, model)?;
    let start = Instant::now();
    let q0 = chain.clamp(&model.predict(target));
    let mut res = solvers::refine_with_dls(chain, target, &q0, cfg)?;
    res.wall_time = start.elapsed().as_secs_f64();
    Ok(res)
}
