//! Singularity-proximity metrics and the manipulability ellipsoid.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kinematics::{JointConfig, KinematicChain};
use crate::linalg;

/// Eigenvalue floor applied to ellipsoids that would otherwise leave the SPD cone.
pub const EIGEN_FLOOR: f64 = 1e-9;

/// Relative threshold below which σ_min counts as zero in [`condition_number`].
pub const KAPPA_RANK_TOL: f64 = 1e-15;

/// Central-difference step used by [`manipulability_gradient`].
pub const GRADIENT_STEP: f64 = 1e-6;

/// Symmetric positive-definite matrix.
///
/// Symmetric to 1e-10 with strictly positive eigenvalues. Built either by
/// validation ([`SpdMatrix::new`]) or by flooring the spectrum
/// ([`SpdMatrix::floored`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    pub const SYMMETRY_TOL: f64 = 1e-10;

    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square_symmetric(&m)?;
        let (vals, _) = linalg::sym_eigen(&m);
        let min = vals.min();
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite(min));
        }
        Ok(Self(m))
    }

    /// Clamp eigenvalues to at least `floor`. Matrices already above the floor
    /// are kept bit-for-bit.
    pub fn floored(m: DMatrix<f64>, floor: f64) -> Result<Self> {
        check_square_symmetric(&m)?;
        let (vals, vecs) = linalg::sym_eigen(&m);
        if vals.iter().all(|&v| v >= floor) {
            return Ok(Self(m));
        }
        Ok(Self(linalg::spectral_map(&vals, &vecs, |v| v.max(floor))))
    }

    pub(crate) fn from_trusted(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn eigen(&self) -> (DVector<f64>, DMatrix<f64>) {
        linalg::sym_eigen(&self.0)
    }

    /// √det, i.e. the manipulability this ellipsoid represents.
    pub fn sqrt_det(&self) -> f64 {
        sqrt_det(&self.0)
    }
}

fn check_square_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
    }
    let asym = linalg::max_asymmetry(m);
    if !(asym < SpdMatrix::SYMMETRY_TOL) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

pub(crate) fn sqrt_det(m: &DMatrix<f64>) -> f64 {
    let det = m.determinant();
    if det > 0.0 {
        det.sqrt()
    } else {
        0.0
    }
}

fn check_wide(j: &DMatrix<f64>) -> Result<()> {
    if j.nrows() > j.ncols() {
        return Err(Error::TooManyRows { rows: j.nrows(), cols: j.ncols() });
    }
    Ok(())
}

/// Yoshikawa manipulability w = √det(J Jᵀ); 0 when the determinant is not positive.
pub fn manipulability(j: &DMatrix<f64>) -> Result<f64> {
    check_wide(j)?;
    Ok(sqrt_det(&(j * j.transpose())))
}

/// κ = σ_max / σ_min. Returns `f64::INFINITY` when σ_min < 1e-15 σ_max.
pub fn condition_number(j: &DMatrix<f64>) -> Result<f64> {
    let s = linalg::singular_values(j);
    let smax = s[0];
    if smax == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let smin = s[s.len() - 1];
    if smin < KAPPA_RANK_TOL * smax {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}

/// The raw ellipsoid matrix J Jᵀ (symmetric positive semidefinite).
pub fn ellipsoid_matrix(j: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_wide(j)?;
    Ok(j * j.transpose())
}

/// M = J Jᵀ as an [`SpdMatrix`], with eigenvalues floored at [`EIGEN_FLOOR`]
/// when J is (numerically) rank deficient.
pub fn manipulability_ellipsoid(j: &DMatrix<f64>) -> Result<SpdMatrix> {
    SpdMatrix::floored(ellipsoid_matrix(j)?, EIGEN_FLOOR)
}

/// Manipulability of the chain's task Jacobian at `q`.
pub fn chain_manipulability(chain: &KinematicChain, q: &JointConfig) -> Result<f64> {
    manipulability(&chain.task_jacobian(q)?)
}

/// Condition number of the chain's task Jacobian at `q`.
pub fn chain_condition(chain: &KinematicChain, q: &JointConfig) -> Result<f64> {
    condition_number(&chain.task_jacobian(q)?)
}

/// ∇_q w by central differences with step [`GRADIENT_STEP`].
pub fn manipulability_gradient(chain: &KinematicChain, q: &JointConfig) -> Result<DVector<f64>> {
    chain.check_dim(q)?;
    let h = GRADIENT_STEP;
    let mut grad = DVector::zeros(chain.dof());
    let mut probe = q.clone();
    for i in 0..chain.dof() {
        let orig = probe[i];
        probe[i] = orig + h;
        let wp = chain_manipulability(chain, &probe)?;
        probe[i] = orig - h;
        let wm = chain_manipulability(chain, &probe)?;
        probe[i] = orig;
        grad[i] = (wp - wm) / (2.0 * h);
    }
    Ok(grad)
}
