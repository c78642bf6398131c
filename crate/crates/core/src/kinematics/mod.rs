//! Serial-chain forward kinematics and Jacobians.
//!
//! Every joint is revolute. A chain is described by DH rows in either the
//! classic (distal) or the modified (proximal, Craig) convention; the
//! convention is fixed per chain by its definition file.

pub mod chain_file;

use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Vector3};

use crate::error::{Error, Result};

pub type JointConfig = DVector<f64>;
pub type TaskPosition = Vector3<f64>;

const PANDA_DH: &str = include_str!("../../data/panda.dh");
const PLANAR_3R_DH: &str = include_str!("../../data/planar3r.dh");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// `Rz(theta) Tz(d) Tx(a) Rx(alpha)`; joint i turns about z_{i-1}.
    Classic,
    /// `Rx(alpha) Tx(a) Rz(theta) Tz(d)`; joint i turns about z_i.
    Modified,
}

/// Which rows of the translational Jacobian form the task space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskSpace {
    Xyz,
    /// In-plane tasks for planar arms; z is ignored.
    Xy,
}

impl TaskSpace {
    pub fn rows(self) -> &'static [usize] {
        match self {
            TaskSpace::Xyz => &[0, 1, 2],
            TaskSpace::Xy => &[0, 1],
        }
    }

    pub fn dim(self) -> usize {
        self.rows().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub a: f64,
    pub d: f64,
    pub alpha: f64,
    pub theta0: f64,
}

impl DhRow {
    fn transform(&self, convention: Convention, q: f64) -> Matrix4<f64> {
        let (st, ct) = (self.theta0 + q).sin_cos();
        let (sa, ca) = self.alpha.sin_cos();
        let (a, d) = (self.a, self.d);
        match convention {
            Convention::Classic => Matrix4::new(
                ct, -st * ca, st * sa, a * ct,
                st, ct * ca, -ct * sa, a * st,
                0.0, sa, ca, d,
                0.0, 0.0, 0.0, 1.0,
            ),
            Convention::Modified => Matrix4::new(
                ct, -st, 0.0, a,
                st * ca, ct * ca, -sa, -sa * d,
                st * sa, ct * sa, ca, ca * d,
                0.0, 0.0, 0.0, 1.0,
            ),
        }
    }
}

/// End-effector pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub position: TaskPosition,
    pub rotation: Matrix3<f64>,
}

/// World-frame joint axes, points on those axes, and the end-effector frame.
#[derive(Debug, Clone)]
pub struct JointFrames {
    pub axes: Vec<Vector3<f64>>,
    pub origins: Vec<Vector3<f64>>,
    pub end_effector: Matrix4<f64>,
}

impl JointFrames {
    pub fn position(&self) -> TaskPosition {
        self.end_effector.fixed_view::<3, 1>(0, 3).into_owned()
    }
}

#[derive(Debug, Clone)]
pub struct KinematicChain {
    name: String,
    convention: Convention,
    task: TaskSpace,
    joints: Vec<DhRow>,
    q_min: DVector<f64>,
    q_max: DVector<f64>,
    tool: Option<DhRow>,
}

impl KinematicChain {
    pub fn new(
        name: impl Into<String>,
        convention: Convention,
        task: TaskSpace,
        joints: Vec<DhRow>,
        q_min: Vec<f64>,
        q_max: Vec<f64>,
        tool: Option<DhRow>,
    ) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidChain("chain has no joints".into()));
        }
        if q_min.len() != joints.len() || q_max.len() != joints.len() {
            return Err(Error::InvalidChain(format!(
                "{} joints but {}/{} limits",
                joints.len(),
                q_min.len(),
                q_max.len()
            )));
        }
        for (i, (lo, hi)) in q_min.iter().zip(&q_max).enumerate() {
            if !(lo < hi) {
                return Err(Error::InvalidChain(format!(
                    "joint {i}: q_min {lo} must be below q_max {hi}"
                )));
            }
        }
        let finite = |r: &DhRow| [r.a, r.d, r.alpha, r.theta0].iter().all(|v| v.is_finite());
        if !joints.iter().chain(tool.iter()).all(finite) {
            return Err(Error::InvalidChain("non-finite DH parameter".into()));
        }
        Ok(Self {
            name: name.into(),
            convention,
            task,
            joints,
            q_min: DVector::from_vec(q_min),
            q_max: DVector::from_vec(q_max),
            tool,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        chain_file::parse(text)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Franka Panda class 7-DoF arm (modified DH, hand TCP).
    pub fn panda() -> Self {
        Self::parse(PANDA_DH).expect("bundled panda.dh is valid")
    }

    /// Planar 3R arm with unit links.
    pub fn planar_3r() -> Self {
        Self::parse(PLANAR_3R_DH).expect("bundled planar3r.dh is valid")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "panda" => Ok(Self::panda()),
            "planar3r" => Ok(Self::planar_3r()),
            other => Err(Error::UnknownChain(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn task_space(&self) -> TaskSpace {
        self.task
    }

    pub fn joints(&self) -> &[DhRow] {
        &self.joints
    }

    pub fn tool(&self) -> Option<&DhRow> {
        self.tool.as_ref()
    }

    pub fn q_min(&self) -> &DVector<f64> {
        &self.q_min
    }

    pub fn q_max(&self) -> &DVector<f64> {
        &self.q_max
    }

    /// Midpoint of the joint limits; the shared default initial guess.
    pub fn neutral(&self) -> JointConfig {
        (&self.q_min + &self.q_max) * 0.5
    }

    pub fn clamp(&self, q: &JointConfig) -> JointConfig {
        q.zip_zip_map(&self.q_min, &self.q_max, |v, lo, hi| v.clamp(lo, hi))
    }

    pub fn within_limits(&self, q: &JointConfig) -> bool {
        q.len() == self.dof()
            && q.iter()
                .zip(self.q_min.iter().zip(self.q_max.iter()))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Upper bound on the distance from the base origin to the end effector.
    pub fn total_reach(&self) -> f64 {
        self.joints
            .iter()
            .chain(self.tool.iter())
            .map(|r| r.a.hypot(r.d))
            .sum()
    }

    pub fn check_dim(&self, q: &JointConfig) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::DimensionMismatch { expected: self.dof(), got: q.len() });
        }
        Ok(())
    }

    /// World-frame axis and axis point of every joint, plus the end-effector frame.
    pub fn joint_frames(&self, q: &JointConfig) -> Result<JointFrames> {
        self.check_dim(q)?;
        Ok(self.frames_unchecked(q))
    }

    pub(crate) fn frames_unchecked(&self, q: &JointConfig) -> JointFrames {
        let n = self.dof();
        let mut axes = Vec::with_capacity(n);
        let mut origins = Vec::with_capacity(n);
        let mut t = Matrix4::identity();
        for (row, &qi) in self.joints.iter().zip(q.iter()) {
            let link = row.transform(self.convention, qi);
            match self.convention {
                Convention::Classic => {
                    axes.push(t.fixed_view::<3, 1>(0, 2).into_owned());
                    origins.push(t.fixed_view::<3, 1>(0, 3).into_owned());
                    t *= link;
                }
                Convention::Modified => {
                    t *= link;
                    axes.push(t.fixed_view::<3, 1>(0, 2).into_owned());
                    origins.push(t.fixed_view::<3, 1>(0, 3).into_owned());
                }
            }
        }
        if let Some(tool) = &self.tool {
            t *= tool.transform(self.convention, 0.0);
        }
        JointFrames { axes, origins, end_effector: t }
    }

    pub fn forward_kinematics(&self, q: &JointConfig) -> Result<Pose> {
        let f = self.joint_frames(q)?;
        Ok(Pose {
            position: f.position(),
            rotation: f.end_effector.fixed_view::<3, 3>(0, 0).into_owned(),
        })
    }

    pub fn position(&self, q: &JointConfig) -> Result<TaskPosition> {
        self.check_dim(q)?;
        Ok(self.frames_unchecked(q).position())
    }

    /// 3×n translational Jacobian, column i = z_i × (p_ee − o_i).
    pub fn jacobian_translational(&self, q: &JointConfig) -> Result<DMatrix<f64>> {
        self.check_dim(q)?;
        Ok(translational_from_frames(&self.frames_unchecked(q)))
    }

    /// 6×n geometric Jacobian: translational rows on top, joint axes below.
    pub fn jacobian_geometric(&self, q: &JointConfig) -> Result<DMatrix<f64>> {
        self.check_dim(q)?;
        let f = self.frames_unchecked(q);
        let jv = translational_from_frames(&f);
        let mut j = DMatrix::zeros(6, self.dof());
        j.view_mut((0, 0), (3, self.dof())).copy_from(&jv);
        for (i, z) in f.axes.iter().enumerate() {
            j.fixed_view_mut::<3, 1>(3, i).copy_from(z);
        }
        Ok(j)
    }

    /// Translational Jacobian restricted to the chain's task rows.
    pub fn task_jacobian(&self, q: &JointConfig) -> Result<DMatrix<f64>> {
        let jv = self.jacobian_translational(q)?;
        Ok(self.task_rows(&jv))
    }

    pub fn task_rows(&self, jv: &DMatrix<f64>) -> DMatrix<f64> {
        match self.task {
            TaskSpace::Xyz => jv.clone(),
            TaskSpace::Xy => jv.rows(0, 2).into_owned(),
        }
    }

    pub fn task_vector(&self, v: &Vector3<f64>) -> DVector<f64> {
        DVector::from_iterator(self.task.dim(), self.task.rows().iter().map(|&r| v[r]))
    }

    /// Second derivatives of the end-effector position.
    ///
    /// Returns one 3×n matrix per joint j holding ∂J_v/∂q_j, so that
    /// `H[:, i, j] = hess[j].column(i)`. Built from the cross-product
    /// recurrences for revolute joints.
    pub fn position_hessian(&self, q: &JointConfig) -> Result<Vec<DMatrix<f64>>> {
        self.check_dim(q)?;
        Ok(hessian_from_frames(&self.frames_unchecked(q)))
    }

    /// Central finite-difference version of [`Self::position_hessian`].
    pub fn position_hessian_fd(&self, q: &JointConfig, step: f64) -> Result<Vec<DMatrix<f64>>> {
        self.check_dim(q)?;
        let mut out = Vec::with_capacity(self.dof());
        for j in 0..self.dof() {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[j] += step;
            qm[j] -= step;
            let jp = translational_from_frames(&self.frames_unchecked(&qp));
            let jm = translational_from_frames(&self.frames_unchecked(&qm));
            out.push((jp - jm) / (2.0 * step));
        }
        Ok(out)
    }
}

pub(crate) fn translational_from_frames(f: &JointFrames) -> DMatrix<f64> {
    let p = f.position();
    let n = f.axes.len();
    let mut j = DMatrix::zeros(3, n);
    for i in 0..n {
        let col = f.axes[i].cross(&(p - f.origins[i]));
        j.fixed_view_mut::<3, 1>(0, i).copy_from(&col);
    }
    j
}

pub(crate) fn hessian_from_frames(f: &JointFrames) -> Vec<DMatrix<f64>> {
    let p = f.position();
    let n = f.axes.len();
    let cols: Vec<Vector3<f64>> = (0..n).map(|i| f.axes[i].cross(&(p - f.origins[i]))).collect();
    let mut out = vec![DMatrix::zeros(3, n); n];
    for j in 0..n {
        let zj = &f.axes[j];
        for i in 0..n {
            let zi = &f.axes[i];
            let h = if j <= i {
                let r = p - f.origins[i];
                zj.cross(zi).cross(&r) + zi.cross(&zj.cross(&r))
            } else {
                zi.cross(&cols[j])
            };
            out[j].fixed_view_mut::<3, 1>(0, i).copy_from(&h);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn q(v: &[f64]) -> JointConfig {
        DVector::from_row_slice(v)
    }

    #[test]
    fn planar_fk_trivial_poses() {
        let c = KinematicChain::planar_3r();
        let p = c.position(&q(&[0.0, 0.0, 0.0])).unwrap();
        assert!((p - Vector3::new(3.0, 0.0, 0.0)).norm() < 1e-12);
        let p = c.position(&q(&[FRAC_PI_2, 0.0, 0.0])).unwrap();
        assert!((p - Vector3::new(0.0, 3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn planar_jacobian_at_zero() {
        let c = KinematicChain::planar_3r();
        let j = c.jacobian_translational(&q(&[0.0, 0.0, 0.0])).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0., 0., 0., 3., 2., 1., 0., 0., 0.]);
        assert!((j - expected).abs().max() < 1e-12);
    }

    #[test]
    fn planar_jacobian_bent_elbow() {
        let c = KinematicChain::planar_3r();
        let j = c.task_jacobian(&q(&[0.0, FRAC_PI_2, 0.0])).unwrap();
        let expected = DMatrix::from_row_slice(2, 3, &[-2., -2., -1., 1., 0., 0.]);
        assert!((j - expected).abs().max() < 1e-12);
    }

    #[test]
    fn geometric_top_rows_match_translational() {
        let c = KinematicChain::panda();
        let qv = q(&[0.3, -0.4, 0.5, -2.0, 0.1, 1.5, -0.7]);
        let jg = c.jacobian_geometric(&qv).unwrap();
        let jv = c.jacobian_translational(&qv).unwrap();
        assert_eq!(jg.rows(0, 3).into_owned(), jv);
    }

    #[test]
    fn planar_angular_rows_are_z() {
        let c = KinematicChain::planar_3r();
        let jg = c.jacobian_geometric(&q(&[0.4, -1.1, 2.0])).unwrap();
        for i in 0..3 {
            assert_eq!(jg[(3, i)], 0.0);
            assert_eq!(jg[(4, i)], 0.0);
            assert_eq!(jg[(5, i)], 1.0);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let c = KinematicChain::planar_3r();
        assert!(matches!(
            c.forward_kinematics(&q(&[0.0, 0.0])),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(c.jacobian_translational(&q(&[0.0; 4])).is_err());
        assert!(c.jacobian_geometric(&q(&[0.0; 1])).is_err());
    }

    #[test]
    fn neutral_is_midpoint() {
        let c = KinematicChain::panda();
        let n = c.neutral();
        assert!((n[3] - (-3.0718 - 0.0698) / 2.0).abs() < 1e-15);
        assert!(c.within_limits(&n));
    }

    #[test]
    fn by_name_rejects_unknown() {
        assert!(matches!(KinematicChain::by_name("ur5"), Err(Error::UnknownChain(_))));
    }
}
