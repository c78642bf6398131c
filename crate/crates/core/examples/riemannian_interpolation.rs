//! Euclidean versus affine-invariant interpolation of manipulability
//! ellipsoids between a well-conditioned and a near-singular configuration.

use singik::{riemannian, KinematicChain};

fn main() -> singik::Result<()> {
    for name in ["planar3r", "panda"] {
        let chain = KinematicChain::by_name(name)?;
        let ends = riemannian::bundled_endpoints(name)?;
        let profile = riemannian::interp_profile(&chain, &ends.well_conditioned, &ends.near_singular, 10)?;
        println!("{name}: w {:.5} -> {:.5}", profile.w_start, profile.w_end);
        println!("{:>5} {:>12} {:>12}", "t", "euclidean", "geodesic");
        for row in &profile.rows {
            println!("{:>5.2} {:>12.6} {:>12.6}", row.t, row.w_euclidean, row.w_riemannian);
        }
        println!(
            "max overestimation {:.2}x, geodesic strictly decreasing: {}\n",
            profile.max_overestimation(),
            profile.geodesic_strictly_decreasing()
        );
    }
    Ok(())
}
