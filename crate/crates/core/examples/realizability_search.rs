//! Which itineraries among two lines can be realized, with and without the
//! angle filter.

use linear_billiards::generating::SolverOptions;
use linear_billiards::{fixtures, origami};

fn main() -> linear_billiards::Result<()> {
    let theta: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(std::f64::consts::FRAC_PI_3);
    let arr = fixtures::two_lines(theta).0;
    let bound = origami::itinerary_bound(&arr)?;
    println!("angle {theta:.4}, bound {bound}");
    for filter in [true, false] {
        let rows = origami::search_realizable_with(&arr, bound + 1, 5000, 3, &SolverOptions::default(), filter)?;
        println!("angle filter {filter}:");
        for row in rows {
            println!("  {:<16} {:<10} {}", row.itinerary.names(&arr).join("-"), row.status.as_str(), row.samples_used);
        }
    }
    Ok(())
}
