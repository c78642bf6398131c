//! Every model-free solver on the same target from the same start.

use singik::solvers::{self, target};
use singik::{KinematicChain, SolverConfig, SolverKind};

fn main() -> singik::Result<()> {
    let chain = KinematicChain::panda();
    let goal = target(0.45, 0.15, 0.40);
    let q0 = chain.neutral();
    println!("target {:?}", goal.as_slice());
    println!("{:>10} {:>8} {:>7} {:>12} {:>10}", "solver", "success", "iters", "error (mm)", "time (us)");
    for kind in SolverKind::ALL {
        if matches!(kind, SolverKind::Mlp | SolverKind::MlpDls) {
            continue;
        }
        let cfg = SolverConfig::for_solver(kind);
        let res = solvers::solve_classical(kind, &chain, &goal, &q0, &cfg)?;
        println!(
            "{:>10} {:>8} {:>7} {:>12.6} {:>10.1}",
            kind.id(),
            res.success,
            res.iterations_used,
            res.position_error * 1e3,
            res.wall_time * 1e6
        );
    }

    let cfg = SolverConfig { record_trace: true, ..SolverConfig::for_solver(SolverKind::Halley) };
    let res = solvers::solve_halley(&chain, &goal, &q0, &cfg)?;
    println!("halley error per iteration:");
    for (i, row) in res.trace.unwrap_or_default().iter().enumerate() {
        println!("  {i:>2} {:.3e} m  kappa {:.1}", row.error, row.kappa);
    }
    Ok(())
}
