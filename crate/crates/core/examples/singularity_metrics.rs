//! Manipulability, condition number and the manipulability ellipsoid while
//! the Panda elbow straightens toward full extension.

use singik::{metrics, KinematicChain};

fn main() -> singik::Result<()> {
    let chain = KinematicChain::panda();
    let elbow = 3;
    let mut q = chain.neutral();
    println!("{:>8} {:>10} {:>10} {:>28}", "q4", "w", "kappa", "ellipsoid axes (m)");
    for k in 0..=10 {
        q[elbow] = chain.q_min()[elbow] + (chain.q_max()[elbow] - chain.q_min()[elbow]) * k as f64 / 10.0;
        let j = chain.task_jacobian(&q)?;
        let w = metrics::manipulability(&j)?;
        let kappa = metrics::condition_number(&j)?;
        let (eig, _) = metrics::manipulability_ellipsoid(&j)?.eigen();
        let axes: Vec<String> = eig.iter().map(|l| format!("{:.4}", l.max(0.0).sqrt())).collect();
        println!("{:>8.3} {:>10.5} {:>10.2} {:>28}", q[elbow], w, kappa, axes.join(" "));
    }

    let g = metrics::manipulability_gradient(&chain, &chain.neutral())?;
    println!("gradient of w at neutral {:.4?}", g.as_slice());
    Ok(())
}
