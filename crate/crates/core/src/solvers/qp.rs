//! Dense ADMM solver for small convex QPs.
//!
//! ```text
//! minimize    ½ xᵀ P x + qᵀ x
//! subject to  l ≤ A x ≤ u
//! ```
//!
//! Operator splitting in the OSQP style: one Cholesky solve of
//! `P + σI + ρAᵀA` per iteration, projection of the constraint copy `z` onto
//! `[l, u]`, over-relaxation and periodic ρ rebalancing. Meant for n ≤ 10.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub l: DVector<f64>,
    pub u: DVector<f64>,
}

impl QpProblem {
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdmmSettings {
    pub rho: f64,
    pub sigma: f64,
    /// Over-relaxation factor in (0, 2).
    pub alpha: f64,
    /// Absolute tolerance on the primal and dual residuals (∞-norm).
    pub eps: f64,
    pub max_iters: usize,
    /// Iterations between ρ updates.
    pub rho_interval: usize,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self { rho: 0.1, sigma: 1e-6, alpha: 1.6, eps: 1e-8, max_iters: 2000, rho_interval: 25 }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Constraint copy of `A x`, exactly inside `[l, u]`.
    pub z: DVector<f64>,
    pub y: DVector<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QpFailure {
    #[error("ADMM hit {iterations} iterations (primal {primal:e}, dual {dual:e})")]
    MaxIterations { iterations: usize, primal: f64, dual: f64 },
    #[error("KKT matrix not positive definite")]
    Factorization,
    #[error("inconsistent bounds: l > u in row {0}")]
    Bounds(usize),
}

fn project(v: &DVector<f64>, l: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
    v.zip_zip_map(l, u, |x, lo, hi| x.max(lo).min(hi))
}

pub fn solve_admm(problem: &QpProblem, settings: &AdmmSettings) -> Result<QpSolution, QpFailure> {
    let n = problem.p.nrows();
    let m = problem.a.nrows();
    if let Some(i) = (0..m).find(|&i| problem.l[i] > problem.u[i]) {
        return Err(QpFailure::Bounds(i));
    }
    let a = &problem.a;
    let at = a.transpose();
    let ata = &at * a;
    let mut rho = settings.rho;
    let factor = |rho: f64| {
        (&problem.p + DMatrix::identity(n, n) * settings.sigma + &ata * rho)
            .cholesky()
            .ok_or(QpFailure::Factorization)
    };
    let mut chol = factor(rho)?;

    let mut x = DVector::zeros(n);
    let mut z = project(&DVector::zeros(m), &problem.l, &problem.u);
    let mut y = DVector::zeros(m);
    let (mut r_prim, mut r_dual) = (f64::INFINITY, f64::INFINITY);

    for it in 1..=settings.max_iters {
        let rhs = &x * settings.sigma - &problem.q + &at * (&z * rho - &y);
        let x_tilde = chol.solve(&rhs);
        let z_tilde = a * &x_tilde;

        let x_next = &x_tilde * settings.alpha + &x * (1.0 - settings.alpha);
        let z_relaxed = &z_tilde * settings.alpha + &z * (1.0 - settings.alpha);
        let z_next = project(&(&z_relaxed + &y / rho), &problem.l, &problem.u);
        y += (&z_relaxed - &z_next) * rho;
        x = x_next;
        z = z_next;

        let ax = a * &x;
        let px = &problem.p * &x;
        let aty = &at * &y;
        r_prim = (&ax - &z).amax();
        r_dual = (&px + &problem.q + &aty).amax();
        if r_prim < settings.eps && r_dual < settings.eps {
            return Ok(QpSolution { x, z, y, iterations: it, primal_residual: r_prim, dual_residual: r_dual });
        }

        if it % settings.rho_interval == 0 {
            let prim_scale = ax.amax().max(z.amax()).max(1e-12);
            let dual_scale = px.amax().max(aty.amax()).max(problem.q.amax()).max(1e-12);
            let ratio = ((r_prim / prim_scale) / (r_dual / dual_scale).max(1e-30)).sqrt();
            let new_rho = (rho * ratio).clamp(1e-6, 1e6);
            if new_rho > 5.0 * rho || new_rho < 0.2 * rho {
                rho = new_rho;
                chol = factor(rho)?;
            }
        }
    }
    Err(QpFailure::MaxIterations { iterations: settings.max_iters, primal: r_prim, dual: r_dual })
}
