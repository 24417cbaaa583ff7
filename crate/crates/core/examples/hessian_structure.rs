//! Second-order structure at a minimizer: the operator M, the weights of the
//! tridiagonal recursion and the spectral radius of A.

use linear_billiards::generating::{hessian, minimize, SolverOptions};
use linear_billiards::{fixtures, Itinerary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> linear_billiards::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let arr = fixtures::random_arrangement(4, 2, 3, &mut rng);
    let itinerary = Itinerary::new(vec![0, 1, 2])?;
    for trial in 0..20 {
        let a = fixtures::random_point(4, 3.0, &mut rng);
        let b = fixtures::random_point(4, 3.0, &mut rng);
        let r = minimize(&arr, &itinerary, &a, &b, &SolverOptions::default())?;
        if !r.is_valid() {
            println!("trial {trial}: {}", r.classification);
            continue;
        }
        let h = hessian(&arr, &a, &r.chain, &b)?;
        println!("trial {trial}: length {:.6}", r.value);
        println!("  min eig M     {:.6}", h.min_eigenvalue().unwrap_or(f64::NAN));
        println!("  rho(A)        {:.6} (direct {:.6})", h.a_spectral_radius()?, h.a_spectral_radius_direct()?);
        println!("  weights       {:?}", h.weights());
        println!("  |S_ij| norms  {:?}", h.offdiag_norms()?);
        println!("M =\n{:.4}", h.m()?);
        break;
    }
    Ok(())
}
