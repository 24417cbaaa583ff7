//! Unfolds a billiard among lines through the origin into a straight segment.

use linear_billiards::generating::{minimize, SolverOptions};
use linear_billiards::{fixtures, origami};

fn main() -> linear_billiards::Result<()> {
    let (arr, itinerary, a, b) = fixtures::two_lines(std::f64::consts::FRAC_PI_3);
    let r = minimize(&arr, &itinerary, &a, &b, &SolverOptions::default())?;
    let t = r.trajectory.expect("valid billiard");
    let u = origami::unfold(&t)?;
    println!("theta0 {:.6}, thetas {:?}, theta_k {:.6}", u.theta0, u.thetas, u.theta_k);
    println!("beta {:.6}, angle sum - pi = {:.2e}", u.beta, u.angle_sum() - std::f64::consts::PI);
    let d = origami::develop(&t)?;
    println!("developed points:");
    for p in &d.points {
        println!("  ({:.6}, {:.6})", p[0], p[1]);
    }
    println!("collinearity residual {:.2e}", d.collinearity_residual);
    println!("law of sines residual {:.2e}", origami::law_of_sines_residual(&t)?);
    println!("itinerary length bound {}", origami::itinerary_bound(&arr)?);
    Ok(())
}
