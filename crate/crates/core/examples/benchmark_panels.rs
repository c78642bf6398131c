//! A reduced run of the benchmark panels with results written to disk.
//!
//! Usage: cargo run --example benchmark_panels -- [output-dir]

use singik::benchmark::{self, BenchSettings, Panel, SolverSuite};
use singik::{KinematicChain, SolverKind};

fn main() -> singik::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "bench_out".into());
    let chain = KinematicChain::panda();
    let settings = BenchSettings { n: 200, n_ood: 100, waypoints: 100, ..BenchSettings::for_chain(&chain) };
    let kinds = [SolverKind::Dls, SolverKind::AdaptiveDls, SolverKind::Sdls, SolverKind::Newton, SolverKind::Halley];
    let suite = SolverSuite::with_defaults(&kinds, None)?;
    let reports = benchmark::run_panels(&[Panel::A, Panel::B, Panel::C, Panel::D], &suite, &chain, &settings)?;
    print!("{}", benchmark::summary_table(&reports));
    benchmark::write_outputs(&out, &reports)?;
    println!("wrote rows.csv, aggregate.json and sweep.csv to {out}");
    Ok(())
}
