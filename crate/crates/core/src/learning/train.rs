//! Mini-batch training with hand-written backpropagation and Adam.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{MlpModel, Normalization, TrainingSet};
use crate::error::{Error, Result};
use crate::kinematics::{self, JointConfig, KinematicChain, TaskPosition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// Mean squared error against the generating configuration, in
    /// normalised output units.
    JointMse,
    /// Mean squared FK position error of the (unclamped) prediction, m².
    Position,
}

impl std::str::FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" | "joint-mse" => Ok(Loss::JointMse),
            "position" => Ok(Loss::Position),
            other => Err(Error::Config(format!("unknown loss `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_max: f64,
    pub lr_min: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub loss: Loss,
    pub holdout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![512, 512, 512],
            epochs: 200,
            batch_size: 256,
            lr_max: 1e-3,
            lr_min: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 42,
            loss: Loss::Position,
            holdout: 0.1,
        }
    }
}

impl TrainConfig {
    /// Cosine decay from `lr_max` at epoch 0 to `lr_min` at the last epoch.
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 {
            return self.lr_max;
        }
        let t = epoch as f64 / (self.epochs - 1) as f64;
        self.lr_min + 0.5 * (self.lr_max - self.lr_min) * (1.0 + (std::f64::consts::PI * t).cos())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    /// Mean clamped-prediction position error on the held-out split, meters.
    pub holdout_error: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub final_loss: f64,
    pub curve: Vec<EpochStats>,
}

impl TrainOutcome {
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("epoch,lr,train_loss,holdout_error_mm\n");
        for e in &self.curve {
            s.push_str(&format!("{},{:e},{:e},{:.6}\n", e.epoch, e.lr, e.train_loss, e.holdout_error * 1e3));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

fn stack_inputs(model: &MlpModel, xs: &[TaskPosition]) -> DMatrix<f64> {
    let norm = model.input_normalization();
    DMatrix::from_fn(3, xs.len(), |r, c| (xs[c][r] - norm.mean[r]) / norm.scale[r])
}

/// Loss over a batch and its gradient with respect to every parameter.
pub fn batch_loss_gradient(
    model: &MlpModel,
    chain: &KinematicChain,
    xs: &[TaskPosition],
    qs: &[JointConfig],
    loss: Loss,
) -> (f64, Gradients) {
    let b = xs.len();
    let n_layers = model.weights().len();
    let mut acts = Vec::with_capacity(n_layers + 1);
    acts.push(stack_inputs(model, xs));
    for (l, (w, bias)) in model.weights().iter().zip(model.biases()).enumerate() {
        let mut z = w * &acts[l];
        for mut col in z.column_iter_mut() {
            col += bias;
        }
        if l + 1 < n_layers {
            z.apply(|v| *v = v.max(0.0));
        }
        acts.push(z);
    }
    let out = acts.last().expect("output layer");
    let out_norm = model.output_normalization();
    let mut g = DMatrix::zeros(out.nrows(), b);
    let mut total = 0.0;
    match loss {
        Loss::JointMse => {
            let k = out.nrows() as f64 * b as f64;
            for c in 0..b {
                let t = out_norm.normalize(&qs[c]);
                for r in 0..out.nrows() {
                    let d = out[(r, c)] - t[r];
                    total += d * d;
                    g[(r, c)] = 2.0 * d / k;
                }
            }
            total /= k;
        }
        Loss::Position => {
            for c in 0..b {
                let q = out_norm.denormalize(&out.column(c).into_owned());
                let frames = chain.frames_unchecked(&q);
                let d = frames.position() - xs[c];
                total += d.norm_squared();
                let jv = kinematics::translational_from_frames(&frames);
                let dq = jv.tr_mul(&DVector::from_column_slice(d.as_slice())) * (2.0 / b as f64);
                g.set_column(c, &dq.component_mul(&out_norm.scale));
            }
            total /= b as f64;
        }
    }

    let mut gw = vec![DMatrix::zeros(0, 0); n_layers];
    let mut gb = vec![DVector::zeros(0); n_layers];
    for l in (0..n_layers).rev() {
        gw[l] = &g * acts[l].transpose();
        gb[l] = g.column_sum();
        if l > 0 {
            let mut back = model.weights()[l].tr_mul(&g);
            back.zip_apply(&acts[l], |v, a| {
                if a <= 0.0 {
                    *v = 0.0;
                }
            });
            g = back;
        }
    }
    (total, Gradients { weights: gw, biases: gb })
}

struct Adam {
    m_w: Vec<DMatrix<f64>>,
    v_w: Vec<DMatrix<f64>>,
    m_b: Vec<DVector<f64>>,
    v_b: Vec<DVector<f64>>,
    t: i32,
}

impl Adam {
    fn new(model: &MlpModel) -> Self {
        let zw = |w: &DMatrix<f64>| DMatrix::zeros(w.nrows(), w.ncols());
        let zb = |b: &DVector<f64>| DVector::zeros(b.len());
        Self {
            m_w: model.weights().iter().map(zw).collect(),
            v_w: model.weights().iter().map(zw).collect(),
            m_b: model.biases().iter().map(zb).collect(),
            v_b: model.biases().iter().map(zb).collect(),
            t: 0,
        }
    }

    fn step(&mut self, model: &mut MlpModel, grads: &Gradients, lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        let (b1, b2, eps) = (cfg.beta1, cfg.beta2, cfg.eps);
        let update = |p: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]| {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        };
        let (ws, bs) = model.params_mut();
        for l in 0..ws.len() {
            update(ws[l].as_mut_slice(), self.m_w[l].as_mut_slice(), self.v_w[l].as_mut_slice(), grads.weights[l].as_slice());
            update(bs[l].as_mut_slice(), self.m_b[l].as_mut_slice(), self.v_b[l].as_mut_slice(), grads.biases[l].as_slice());
        }
    }
}

/// Train on the first `1 − holdout` of `set`, report on the rest.
///
/// Single-threaded and deterministic for a fixed `(set, cfg)`.
pub fn mlp_train(chain: &KinematicChain, set: &TrainingSet, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if set.is_empty() || cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::Config("training needs data, a batch size and at least one epoch".into()));
    }
    if set.configs[0].len() != chain.dof() {
        return Err(Error::DimensionMismatch { expected: chain.dof(), got: set.configs[0].len() });
    }
    let (train, holdout) = set.split(cfg.holdout);
    let xs: Vec<DVector<f64>> = train.positions.iter().map(|p| DVector::from_column_slice(p.as_slice())).collect();
    let input = Normalization::z_score(&xs);
    let output = Normalization::from_limits(chain.q_min(), chain.q_max());
    let mut dims = vec![3];
    dims.extend(&cfg.hidden);
    dims.push(chain.dof());
    let mut model = MlpModel::init(&dims, input, output, cfg.seed)?;
    let mut adam = Adam::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut final_loss = f64::NAN;

    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate(epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let bx: Vec<_> = batch.iter().map(|&i| train.positions[i]).collect();
            let bq: Vec<_> = batch.iter().map(|&i| train.configs[i].clone()).collect();
            let (loss, grads) = batch_loss_gradient(&model, chain, &bx, &bq, cfg.loss);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            adam.step(&mut model, &grads, lr, cfg);
            loss_sum += loss * batch.len() as f64;
            seen += batch.len();
        }
        final_loss = loss_sum / seen as f64;
        curve.push(EpochStats {
            epoch,
            lr,
            train_loss: final_loss,
            holdout_error: super::mean_position_error(chain, &model, &holdout),
        });
    }
    Ok(TrainOutcome { model, final_loss, curve })
}
