//! Affine-invariant geometry on SPD matrices and manipulability interpolation.
//!
//! Geodesics follow Γ(t) = A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}; the
//! distance is ‖log(A^{-1/2} B A^{-1/2})‖_F. All matrix functions go through
//! the Jacobi eigen-decomposition in [`crate::linalg::sym_eigen`].

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::{JointConfig, KinematicChain};
use crate::linalg;
use crate::metrics::{self, SpdMatrix};

pub fn spd_sqrt(a: &SpdMatrix) -> SpdMatrix {
    let (vals, vecs) = a.eigen();
    SpdMatrix::from_trusted(linalg::spectral_map(&vals, &vecs, f64::sqrt))
}

pub fn spd_inv_sqrt(a: &SpdMatrix) -> SpdMatrix {
    let (vals, vecs) = a.eigen();
    SpdMatrix::from_trusted(linalg::spectral_map(&vals, &vecs, |v| 1.0 / v.sqrt()))
}

/// Matrix logarithm; the result is symmetric but not necessarily definite.
pub fn spd_log(a: &SpdMatrix) -> DMatrix<f64> {
    let (vals, vecs) = a.eigen();
    linalg::spectral_map(&vals, &vecs, f64::ln)
}

/// Matrix exponential of a symmetric matrix.
pub fn spd_exp(s: &DMatrix<f64>) -> Result<SpdMatrix> {
    if s.nrows() != s.ncols() {
        return Err(Error::DimensionMismatch { expected: s.nrows(), got: s.ncols() });
    }
    let asym = linalg::max_asymmetry(s);
    if !(asym < SpdMatrix::SYMMETRY_TOL) {
        return Err(Error::NotSymmetric(asym));
    }
    let (vals, vecs) = linalg::sym_eigen(s);
    Ok(SpdMatrix::from_trusted(linalg::spectral_map(&vals, &vecs, f64::exp)))
}

fn same_dim(a: &SpdMatrix, b: &SpdMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(())
}

/// Eigen-decomposition of A^{-1/2} B A^{-1/2}.
fn relative(a: &SpdMatrix, b: &SpdMatrix) -> (DVector<f64>, DMatrix<f64>) {
    let a_is = spd_inv_sqrt(a);
    let c = linalg::symmetrize(&(a_is.matrix() * b.matrix() * a_is.matrix()));
    linalg::sym_eigen(&c)
}

/// Point at parameter `t` on the affine-invariant geodesic from `a` to `b`.
///
/// `t = 0` and `t = 1` return the endpoints exactly.
pub fn spd_geodesic(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    same_dim(a, b)?;
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    let a_s = spd_sqrt(a);
    let (vals, vecs) = relative(a, b);
    let ct = linalg::spectral_map(&vals, &vecs, |v| v.powf(t));
    let g = linalg::symmetrize(&(a_s.matrix() * ct * a_s.matrix()));
    Ok(SpdMatrix::from_trusted(g))
}

pub fn spd_distance(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    same_dim(a, b)?;
    let (vals, _) = relative(a, b);
    Ok(vals.iter().map(|v| v.ln().powi(2)).sum::<f64>().sqrt())
}

/// Straight-line interpolation (1 − t) A + t B.
pub fn euclidean_interp(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    a * (1.0 - t) + b * t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub t: f64,
    pub w_euclidean: f64,
    pub w_riemannian: f64,
}

/// Manipulability along Euclidean and geodesic interpolants of the
/// ellipsoids at two configurations.
#[derive(Debug, Clone, Serialize)]
pub struct InterpProfile {
    pub rows: Vec<ProfileRow>,
    pub w_start: f64,
    pub w_end: f64,
}

impl InterpProfile {
    /// max over t of w_euclidean / w_riemannian.
    pub fn max_overestimation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.w_euclidean / r.w_riemannian)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn geodesic_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].w_riemannian < w[0].w_riemannian)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,w_euclidean,w_riemannian\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.t, r.w_euclidean, r.w_riemannian));
        }
        out
    }
}

pub fn interp_profile(
    chain: &KinematicChain,
    q_start: &JointConfig,
    q_end: &JointConfig,
    steps: usize,
) -> Result<InterpProfile> {
    let steps = steps.max(1);
    let ma = metrics::manipulability_ellipsoid(&chain.task_jacobian(q_start)?)?;
    let mb = metrics::manipulability_ellipsoid(&chain.task_jacobian(q_end)?)?;
    let mut rows = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let e = euclidean_interp(ma.matrix(), mb.matrix(), t);
        let g = spd_geodesic(&ma, &mb, t)?;
        rows.push(ProfileRow {
            t,
            w_euclidean: metrics::sqrt_det(&e),
            w_riemannian: g.sqrt_det(),
        });
    }
    Ok(InterpProfile { rows, w_start: ma.sqrt_det(), w_end: mb.sqrt_det() })
}

/// Target (κ, w) for an interpolation endpoint. `w = None` matches κ only.
#[derive(Debug, Clone, Copy)]
pub struct EndpointTarget {
    pub kappa: f64,
    pub w: Option<f64>,
}

fn endpoint_residual(chain: &KinematicChain, q: &JointConfig, target: EndpointTarget) -> Option<DVector<f64>> {
    let j = chain.task_jacobian(q).ok()?;
    let k = metrics::condition_number(&j).ok()?;
    let w = metrics::manipulability(&j).ok()?;
    if !k.is_finite() || w <= 0.0 {
        return None;
    }
    let mut r = vec![(k / target.kappa).ln()];
    if let Some(wt) = target.w {
        r.push((w / wt).ln());
    }
    Some(DVector::from_vec(r))
}

fn endpoint_cost(chain: &KinematicChain, q: &JointConfig, target: EndpointTarget) -> f64 {
    endpoint_residual(chain, q, target).map_or(f64::INFINITY, |r| r.norm_squared())
}

/// Damped Gauss-Newton on the log residuals with a finite-difference Jacobian.
fn refine_endpoint(chain: &KinematicChain, q0: JointConfig, target: EndpointTarget) -> (f64, JointConfig) {
    const H: f64 = 1e-7;
    let mut q = q0;
    let Some(mut r) = endpoint_residual(chain, &q, target) else {
        return (f64::INFINITY, q);
    };
    for _ in 0..60 {
        if r.norm_squared() < 1e-14 {
            break;
        }
        let n = q.len();
        let mut jac = DMatrix::zeros(r.len(), n);
        for c in 0..n {
            let mut qp = q.clone();
            qp[c] += H;
            let Some(rp) = endpoint_residual(chain, &qp, target) else {
                return (r.norm_squared(), q);
            };
            jac.set_column(c, &((rp - &r) / H));
        }
        let jjt = &jac * jac.transpose() + DMatrix::identity(r.len(), r.len()) * 1e-9;
        let Some(inv) = jjt.try_inverse() else { break };
        let step = -(jac.transpose() * inv * &r);
        let mut alpha: f64 = 1.0;
        let mut improved = false;
        while alpha > 1e-4 {
            let cand = chain.clamp(&(&q + &step * alpha.min(0.3 / step.amax().max(1e-12))));
            if let Some(rc) = endpoint_residual(chain, &cand, target) {
                if rc.norm_squared() < r.norm_squared() {
                    q = cand;
                    r = rc;
                    improved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (r.norm_squared(), q)
}

/// Relative deviation of (κ, w) at `q` from `target`: max(|κ/κ*−1|, |w/w*−1|).
pub fn endpoint_deviation(
    chain: &KinematicChain,
    q: &JointConfig,
    target: EndpointTarget,
) -> Result<f64> {
    let j = chain.task_jacobian(q)?;
    let k = metrics::condition_number(&j)?;
    let mut dev = (k / target.kappa - 1.0).abs();
    if let Some(wt) = target.w {
        dev = dev.max((metrics::manipulability(&j)? / wt - 1.0).abs());
    }
    Ok(dev)
}

/// Seeded random search for a configuration matching `target`.
///
/// Uniform sampling over the joint limits, then Gauss-Newton refinement of
/// the best samples. Deterministic for a given seed.
pub fn search_endpoint(chain: &KinematicChain, target: EndpointTarget, seed: u64) -> JointConfig {
    const SAMPLES: usize = 4000;
    const STARTS: usize = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = chain.dof();
    let mut pool: Vec<(f64, JointConfig)> = (0..SAMPLES)
        .map(|_| {
            let q = JointConfig::from_iterator(
                n,
                (0..n).map(|i| rng.random_range(chain.q_min()[i]..chain.q_max()[i])),
            );
            (endpoint_cost(chain, &q, target), q)
        })
        .collect();
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    pool.truncate(STARTS);
    pool.into_iter()
        .map(|(_, q)| refine_endpoint(chain, q, target))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one start")
        .1
}

/// Stored interpolation endpoints for a chain.
#[derive(Debug, Clone)]
pub struct EndpointPair {
    pub chain: String,
    pub well_conditioned: JointConfig,
    pub near_singular: JointConfig,
}

const ENDPOINTS: &str = include_str!("../data/interp_endpoints.txt");

/// Well-conditioned / near-singular endpoint targets used for each bundled chain.
pub fn endpoint_targets(chain: &str) -> Option<(EndpointTarget, EndpointTarget)> {
    match chain {
        "panda" => Some((
            EndpointTarget { kappa: 2.8, w: Some(0.035) },
            EndpointTarget { kappa: 127.0, w: Some(0.001) },
        )),
        "planar3r" => Some((
            EndpointTarget { kappa: 2.8, w: None },
            EndpointTarget { kappa: 127.0, w: None },
        )),
        _ => None,
    }
}

/// Endpoint configurations bundled with the crate (`data/interp_endpoints.txt`).
pub fn bundled_endpoints(chain: &str) -> Result<EndpointPair> {
    parse_endpoints(ENDPOINTS)?
        .into_iter()
        .find(|p| p.chain == chain)
        .ok_or_else(|| Error::UnknownChain(chain.to_string()))
}

/// Format: `<chain> <well|near> q1 q2 ...`, `#` comments.
pub fn parse_endpoints(text: &str) -> Result<Vec<EndpointPair>> {
    let mut well: Vec<(String, JointConfig)> = Vec::new();
    let mut near: Vec<(String, JointConfig)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Config(format!("endpoints line {}: {msg}", idx + 1));
        let mut parts = line.split_whitespace();
        let (Some(chain), Some(kind)) = (parts.next(), parts.next()) else {
            return Err(bad("too short".into()));
        };
        let values = parts
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(e.to_string()))?;
        let q = DVector::from_vec(values);
        match kind {
            "well" => well.push((chain.to_string(), q)),
            "near" => near.push((chain.to_string(), q)),
            other => return Err(bad(format!("unknown kind `{other}`"))),
        }
    }
    well.into_iter()
        .map(|(chain, w)| {
            let n = near
                .iter()
                .find(|(c, _)| *c == chain)
                .map(|(_, q)| q.clone())
                .ok_or_else(|| Error::Config(format!("no near-singular endpoint for {chain}")))?;
            Ok(EndpointPair { chain, well_conditioned: w, near_singular: n })
        })
        .collect()
}
