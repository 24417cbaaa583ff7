//! Linear and angular momentum along three-body collision trajectories,
//! without the centre of mass removed so translations are a symmetry.

use linear_billiards::generating::{minimize, SolverOptions};
use linear_billiards::nbody::NBodySystem;
use linear_billiards::symmetry::{conservation_report, translation_core};
use linear_billiards::{fixtures, Itinerary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> linear_billiards::Result<()> {
    let sys = NBodySystem::new(vec![1.0, 2.0, 0.5], 2, false)?;
    let arr = sys.build_arrangement()?;
    println!("translation core has dimension {}", translation_core(&arr).dim());
    let gens = vec![sys.rotation_generator(0, 1)?];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let itinerary = Itinerary::new(vec![0, 2, 1])?;
    let mut shown = 0;
    while shown < 3 {
        let a = fixtures::random_point(arr.dim(), 3.0, &mut rng);
        let b = fixtures::random_point(arr.dim(), 3.0, &mut rng);
        let r = minimize(&arr, &itinerary, &a, &b, &SolverOptions::default())?;
        let Some(t) = &r.trajectory else { continue };
        let rep = conservation_report(&arr, t, &gens)?;
        println!("{:?}: linear drift {:.2e}, angular jump {:.2e}", itinerary.names(&arr), rep.linear_max_dev, rep.angular_max_dev);
        shown += 1;
    }
    Ok(())
}
