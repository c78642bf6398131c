//! Train a small MLP, then compare its raw guesses with DLS refinement
//! from those guesses and DLS from the neutral pose.
//!
//! The network here is tiny so the example finishes in seconds; the
//! benchmark uses the bundled model trained with `singik train-mlp`.

use singik::benchmark::generate_targets_safe;
use singik::learning::{self, TrainConfig};
use singik::{solvers, KinematicChain, SolverConfig, SolverKind};

fn main() -> singik::Result<()> {
    let chain = KinematicChain::panda();
    let set = learning::generate_dataset(&chain, 4000, 1);
    let cfg = TrainConfig { hidden: vec![64, 64], epochs: 30, batch_size: 128, lr_max: 3e-3, ..TrainConfig::default() };
    let outcome = learning::mlp_train(&chain, &set, &cfg)?;
    for e in outcome.curve.iter().step_by(10) {
        println!("epoch {:>3} loss {:.3e} held-out {:.1} mm", e.epoch, e.train_loss, e.holdout_error * 1e3);
    }
    let model = outcome.model;

    let dls = SolverConfig::for_solver(SolverKind::Dls);
    let targets = generate_targets_safe(&chain, 200, 3);
    let (mut raw_mm, mut warm_iters, mut cold_iters, mut warm_ok, mut cold_ok) = (0.0, 0, 0, 0, 0);
    for t in &targets {
        raw_mm += learning::solve_mlp(&chain, &t.position, &model)?.position_error * 1e3;
        let warm = learning::solve_mlp_dls(&chain, &t.position, &model, &dls)?;
        let cold = solvers::solve_dls_fixed(&chain, &t.position, &chain.neutral(), &dls)?;
        warm_iters += warm.iterations_used;
        cold_iters += cold.iterations_used;
        warm_ok += warm.success as usize;
        cold_ok += cold.success as usize;
    }
    let n = targets.len() as f64;
    println!("raw MLP mean error {:.1} mm", raw_mm / n);
    println!("DLS from MLP guess: {warm_ok}/{} solved, mean {:.2} iterations", targets.len(), warm_iters as f64 / n);
    println!("DLS from neutral:   {cold_ok}/{} solved, mean {:.2} iterations", targets.len(), cold_iters as f64 / n);
    Ok(())
}
