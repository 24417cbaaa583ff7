//! Bouncing off a point subspace: every incoming direction is allowed, so the
//! billiard is the broken line through the origin.

use linear_billiards::generating::SolverOptions;
use linear_billiards::scattering::RelationSample;
use linear_billiards::fixtures;

fn main() -> linear_billiards::Result<()> {
    let (arr, itinerary, a, b) = fixtures::total_collision();
    let s = RelationSample::solve(&arr, &itinerary, &a, &b, &SolverOptions::default())?.expect("valid billiard");
    println!("length {:.15}", s.value);
    println!("incoming v = {:?}", s.va.as_slice());
    println!("outgoing v = {:?}", s.vb.as_slice());
    println!("reduced lines: |Q-| = {:.2e}, |Q+| = {:.2e}", s.ell_minus.q().norm(), s.ell_plus.q().norm());

    // Scaling the anchors scales the whole trajectory.
    let scaled = s.scale_action(&arr, 2.5)?;
    println!("after scaling by 2.5: length {:.12}", scaled.value);
    Ok(())
}
