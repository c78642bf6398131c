//! Forward kinematics and Jacobians for the bundled Panda model and a
//! custom chain parsed from DH text.

use nalgebra::DVector;
use singik::KinematicChain;

fn main() -> singik::Result<()> {
    let panda = KinematicChain::panda();
    let q = panda.neutral();
    let pose = panda.forward_kinematics(&q)?;
    println!("{} ({} joints), reach {:.3} m", panda.name(), panda.dof(), panda.total_reach());
    println!("neutral position {:.4?}", pose.position.as_slice());
    println!("neutral rotation\n{:.4}", pose.rotation);
    println!("translational Jacobian\n{:.4}", panda.jacobian_translational(&q)?);

    let hess = panda.position_hessian(&q)?;
    println!("position Hessian slices: {}, each {}x{}", hess.len(), hess[0].nrows(), hess[0].ncols());

    // two-link arm in the plane, classic DH
    let two_link = KinematicChain::parse(
        "@name twolink\n@convention classic\n@task xy\n0.5 0 0 0 -3.1 3.1\n0.3 0 0 0 -3.1 3.1\n",
    )?;
    for angles in [[0.0, 0.0], [0.5, 1.0], [1.2, -2.0]] {
        let q = DVector::from_row_slice(&angles);
        let x = two_link.position(&q)?;
        println!("twolink q {angles:?} -> ({:.4}, {:.4})", x[0], x[1]);
    }
    Ok(())
}
