//! Reflection off a single line in the plane, solved by minimizing path length.

use linear_billiards::generating::{minimize, SolverOptions};
use linear_billiards::fixtures;

fn main() -> linear_billiards::Result<()> {
    let (arr, itinerary, a, b) = fixtures::mirror();
    let r = minimize(&arr, &itinerary, &a, &b, &SolverOptions::default())?;
    println!("classification: {}", r.classification);
    println!("vertex: ({:.12}, {:.12})", r.chain.points()[0][0], r.chain.points()[0][1]);
    println!("length: {:.15} (2 sqrt 2 = {:.15})", r.value, 2.0 * 2f64.sqrt());
    if let Some(t) = &r.trajectory {
        println!("reflection residual: {:.2e}", t.max_reflection_residual(&arr));
        println!("{}", t.to_json(&arr));
    }
    Ok(())
}
