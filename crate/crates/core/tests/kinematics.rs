use nalgebra::{DMatrix, DVector, Matrix3};
use proptest::prelude::*;
use singik::{JointConfig, KinematicChain};

type M4 = [[f64; 4]; 4];

fn mul(a: &M4, b: &M4) -> M4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// Craig link transform Rx(α) Tx(a) Rz(θ) Tz(d), written out element by element.
fn craig(a: f64, d: f64, alpha: f64, theta: f64) -> M4 {
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = alpha.sin_cos();
    [
        [ct, -st, 0.0, a],
        [st * ca, ct * ca, -sa, -sa * d],
        [st * sa, ct * sa, ca, ca * d],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

/// Independent Panda FK straight from the published table.
fn panda_oracle(q: &[f64]) -> [f64; 3] {
    const ROWS: [(f64, f64, f64); 7] = [
        (0.0, 0.333, 0.0),
        (0.0, 0.0, -std::f64::consts::FRAC_PI_2),
        (0.0, 0.316, std::f64::consts::FRAC_PI_2),
        (0.0825, 0.0, std::f64::consts::FRAC_PI_2),
        (-0.0825, 0.384, -std::f64::consts::FRAC_PI_2),
        (0.0, 0.0, std::f64::consts::FRAC_PI_2),
        (0.088, 0.0, std::f64::consts::FRAC_PI_2),
    ];
    let mut t = craig(0.0, 0.0, 0.0, 0.0);
    for (&(a, d, alpha), &qi) in ROWS.iter().zip(q) {
        t = mul(&t, &craig(a, d, alpha, qi));
    }
    t = mul(&t, &craig(0.0, 0.2104, 0.0, -std::f64::consts::FRAC_PI_4));
    [t[0][3], t[1][3], t[2][3]]
}

fn config(v: &[f64]) -> JointConfig {
    DVector::from_row_slice(v)
}

fn fd_jacobian(chain: &KinematicChain, q: &JointConfig, h: f64) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(3, chain.dof());
    for c in 0..chain.dof() {
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[c] += h;
        qm[c] -= h;
        let d = (chain.position(&qp).unwrap() - chain.position(&qm).unwrap()) / (2.0 * h);
        j.set_column(c, &d);
    }
    j
}

fn rotation_log(r: &Matrix3<f64>) -> nalgebra::Vector3<f64> {
    let angle = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
    if angle < 1e-12 {
        return nalgebra::Vector3::zeros();
    }
    let v = nalgebra::Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    v * (angle / (2.0 * angle.sin()))
}

#[test]
fn panda_zero_pose_hand_tcp() {
    let chain = KinematicChain::panda();
    let p = chain.position(&JointConfig::zeros(7)).unwrap();
    assert!((p - nalgebra::Vector3::new(0.088, 0.0, 0.8226)).norm() < 1e-12, "{p}");
}

#[test]
fn panda_neutral_matches_independent_oracle() {
    let chain = KinematicChain::panda();
    let q = chain.neutral();
    let p = chain.position(&q).unwrap();
    let o = panda_oracle(q.as_slice());
    for k in 0..3 {
        assert!((p[k] - o[k]).abs() < 1e-12, "axis {k}: {} vs {}", p[k], o[k]);
    }
}

#[test]
fn planar_bent_elbow_position() {
    let chain = KinematicChain::planar_3r();
    let p = chain.position(&config(&[0.0, std::f64::consts::FRAC_PI_2, 0.0])).unwrap();
    assert!((p - nalgebra::Vector3::new(1.0, 2.0, 0.0)).norm() < 1e-12);
}

#[test]
fn angular_rows_match_rotation_log_differences() {
    let chain = KinematicChain::panda();
    let q = config(&[0.3, -0.4, 0.5, -1.8, 0.2, 1.4, -0.6]);
    let j = chain.jacobian_geometric(&q).unwrap();
    let r0 = chain.forward_kinematics(&q).unwrap().rotation;
    let h = 1e-6;
    for c in 0..7 {
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[c] += h;
        qm[c] -= h;
        let rp = chain.forward_kinematics(&qp).unwrap().rotation;
        let rm = chain.forward_kinematics(&qm).unwrap().rotation;
        let w = (rotation_log(&(rp * r0.transpose())) - rotation_log(&(rm * r0.transpose()))) / (2.0 * h);
        for k in 0..3 {
            assert!((w[k] - j[(3 + k, c)]).abs() < 1e-6, "column {c} row {k}");
        }
    }
}

fn panda_config() -> impl Strategy<Value = JointConfig> {
    let chain = KinematicChain::panda();
    let ranges: Vec<_> = (0..7).map(|i| chain.q_min()[i]..chain.q_max()[i]).collect();
    ranges.prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rotation_is_orthonormal(q in panda_config()) {
        let r = KinematicChain::panda().forward_kinematics(&q).unwrap().rotation;
        prop_assert!((r.transpose() * r - Matrix3::identity()).amax() < 1e-10);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn position_matches_oracle(q in panda_config()) {
        let p = KinematicChain::panda().position(&q).unwrap();
        let o = panda_oracle(q.as_slice());
        for k in 0..3 {
            prop_assert!((p[k] - o[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(q in panda_config()) {
        let chain = KinematicChain::panda();
        let j = chain.jacobian_translational(&q).unwrap();
        prop_assert!((j - fd_jacobian(&chain, &q, 1e-6)).amax() < 1e-6);
    }

    #[test]
    fn hessian_is_symmetric_and_matches_fd(q in panda_config()) {
        let chain = KinematicChain::panda();
        let h = chain.position_hessian(&q).unwrap();
        let fd = chain.position_hessian_fd(&q, 1e-6).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let a = h[j].column(i);
                let b = h[i].column(j);
                prop_assert!((a - b).amax() < 1e-8);
            }
            prop_assert!((&h[i] - &fd[i]).amax() < 1e-5);
        }
    }

    #[test]
    fn planar_jacobian_matches_fd(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
        let chain = KinematicChain::planar_3r();
        let q = config(&[a, b, c]);
        let j = chain.jacobian_translational(&q).unwrap();
        prop_assert!((j - fd_jacobian(&chain, &q, 1e-6)).amax() < 1e-6);
    }
}
