//! Samples the scattering relation on a grid of anchors and checks that the
//! symplectic form is carried from the incoming to the outgoing side.

use linear_billiards::generating::SolverOptions;
use linear_billiards::scattering::{lagrangian_residual, sample_relation, write_patch_csv, PatchGrid};
use linear_billiards::{fixtures, linalg};
use nalgebra::DVector;

fn main() -> linear_billiards::Result<()> {
    let (arr, itinerary, _, _) = fixtures::mirror();
    let a = DVector::from_vec(vec![0.3, 1.2]);
    let b = DVector::from_vec(vec![2.1, 0.7]);
    let hs = [1e-2, 5e-3, 2.5e-3];
    let mut res = Vec::new();
    for &h in &hs {
        let patch = sample_relation(&arr, &itinerary, &PatchGrid::full(&a, &b, h, 5), &SolverOptions::default())?;
        let r = lagrangian_residual(&patch)?;
        println!("h = {h:.1e}: {} valid nodes, residual {r:.3e}", patch.n_valid());
        res.push(r);
    }
    println!("observed order {:.2}", linalg::log_log_slope(&hs, &res));

    let patch = sample_relation(&arr, &itinerary, &PatchGrid::full(&a, &b, 1e-2, 3), &SolverOptions::default())?;
    write_patch_csv(&patch, &arr, std::io::stdout())?;
    Ok(())
}
