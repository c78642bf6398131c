//! Small dense linear-algebra helpers shared by the metrics and solvers.

use nalgebra::{DMatrix, DVector};

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors stored as columns.
/// Sweeps stop once the off-diagonal Frobenius norm falls below
/// `1e-12 · ‖A‖_F` (or reaches exact zero). Intended for m ≤ 6.
pub fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm();
    let tol = 1e-12 * scale;

    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= tol || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (m.diagonal(), v)
}

/// `V · diag(f(λ)) · Vᵀ`.
pub fn spectral_map(values: &DVector<f64>, vectors: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let n = values.len();
    let mut scaled = vectors.clone();
    for j in 0..n {
        let fj = f(values[j]);
        scaled.column_mut(j).scale_mut(fj);
    }
    let out = scaled * vectors.transpose();
    symmetrize(&out)
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    (a - a.transpose()).abs().max()
}

/// Singular values in descending order.
pub fn singular_values(j: &DMatrix<f64>) -> DVector<f64> {
    let mut s = j.clone().svd(false, false).singular_values;
    s.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    s
}

/// Moore–Penrose pseudoinverse with singular values below
/// `rel_tol · σ_max` treated as zero.
pub fn pinv_truncated(j: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = j.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.max();
    let cutoff = rel_tol * smax;
    let k = svd.singular_values.len();
    let mut out = DMatrix::zeros(j.ncols(), j.nrows());
    for i in 0..k {
        let s = svd.singular_values[i];
        if s > cutoff && s > 0.0 {
            out += vt.row(i).transpose() * u.column(i).transpose() / s;
        }
    }
    out
}

/// Damped least-squares step `Jᵀ (J Jᵀ + λ² I)⁻¹ e`, solving the small
/// square system directly.
pub fn dls_step(j: &DMatrix<f64>, e: &DVector<f64>, lambda_sq: f64) -> DVector<f64> {
    let m = j.nrows();
    let a = j * j.transpose() + DMatrix::identity(m, m) * lambda_sq;
    let y = match a.clone().cholesky() {
        Some(ch) => ch.solve(e),
        None => a
            .lu()
            .solve(e)
            .unwrap_or_else(|| pinv_truncated(&(j * j.transpose()), 1e-12) * e),
    };
    j.transpose() * y
}
