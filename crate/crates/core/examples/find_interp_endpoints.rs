//! Searches for well-conditioned and near-singular configurations matching
//! the interpolation endpoint targets and prints them in the format of
//! `data/interp_endpoints.txt`.
//!
//! ```text
//! cargo run --release --example find_interp_endpoints > crates/core/data/interp_endpoints.txt
//! ```

use singik::metrics;
use singik::riemannian::{endpoint_targets, interp_profile, search_endpoint};
use singik::KinematicChain;

fn main() -> singik::Result<()> {
    println!("# <chain> <well|near> q1 .. qn, found by examples/find_interp_endpoints.rs");
    for name in ["panda", "planar3r"] {
        let chain = KinematicChain::by_name(name)?;
        let (well_t, near_t) = endpoint_targets(name).expect("bundled chain");
        let well = search_endpoint(&chain, well_t, 7);
        let near = search_endpoint(&chain, near_t, 11);
        for (kind, q) in [("well", &well), ("near", &near)] {
            let vals: Vec<String> = q.iter().map(|v| format!("{v:?}")).collect();
            println!("{name} {kind} {}", vals.join(" "));
            eprintln!(
                "{name} {kind}: kappa {:.3} w {:.5}",
                metrics::chain_condition(&chain, q)?,
                metrics::chain_manipulability(&chain, q)?
            );
        }
        let profile = interp_profile(&chain, &well, &near, 100)?;
        eprintln!(
            "{name}: max overestimation {:.3}, geodesic strictly decreasing {}",
            profile.max_overestimation(),
            profile.geodesic_strictly_decreasing()
        );
    }
    Ok(())
}
