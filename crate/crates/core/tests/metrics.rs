use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singik::metrics;
use singik::KinematicChain;

/// Singular values by one-sided Hestenes–Jacobi on the rows of `a`.
fn jacobi_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut rows: Vec<Vec<f64>> = (0..a.nrows()).map(|r| a.row(r).iter().copied().collect()).collect();
    let m = rows.len();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..m {
            for q in p + 1..m {
                let alpha: f64 = rows[p].iter().map(|x| x * x).sum();
                let beta: f64 = rows[q].iter().map(|x| x * x).sum();
                let gamma: f64 = rows[p].iter().zip(&rows[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-300 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..rows[p].len() {
                    let (x, y) = (rows[p][k], rows[q][k]);
                    rows[p][k] = c * x - s * y;
                    rows[q][k] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut s: Vec<f64> = rows.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

#[test]
fn kappa_matches_jacobi_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let j = random_matrix(&mut rng, 3, 7);
        let s = jacobi_singular_values(&j);
        let oracle = s[0] / s[2];
        let k = metrics::condition_number(&j).unwrap();
        assert!(((k - oracle) / oracle).abs() < 1e-9, "{k} vs {oracle}");
        let w = metrics::manipulability(&j).unwrap();
        let w_oracle: f64 = s.iter().product();
        assert!(((w - w_oracle) / w_oracle).abs() < 1e-10);
    }
}

#[test]
fn ellipsoid_sqrt_det_is_manipulability() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let j = random_matrix(&mut rng, 3, 7);
        let m = metrics::manipulability_ellipsoid(&j).unwrap();
        let w = metrics::manipulability(&j).unwrap();
        assert!(((m.sqrt_det() - w) / w).abs() < 1e-10);
    }
}

#[test]
fn gradient_ascent_does_not_decrease_w() {
    let chain = KinematicChain::panda();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let q = DVector::from_fn(7, |i, _| rng.random_range(chain.q_min()[i]..chain.q_max()[i]));
        let g = metrics::manipulability_gradient(&chain, &q).unwrap();
        if g.norm() < 1e-9 {
            continue;
        }
        let q2 = &q + g.normalize() * 1e-3;
        let w0 = metrics::chain_manipulability(&chain, &q).unwrap();
        let w1 = metrics::chain_manipulability(&chain, &q2).unwrap();
        assert!(w1 >= w0 - 1e-12, "{w0} -> {w1}");
    }
}

#[test]
fn gradient_vanishes_at_interior_maximum() {
    let chain = KinematicChain::planar_3r();
    let mut q = DVector::from_row_slice(&[0.2, 1.0, 1.0]);
    for _ in 0..5000 {
        let g = metrics::manipulability_gradient(&chain, &q).unwrap();
        q += g * 0.05;
    }
    let g = metrics::manipulability_gradient(&chain, &q).unwrap();
    assert!(g.norm() < 1e-6, "{g}");
    assert!(chain.within_limits(&q));
}
