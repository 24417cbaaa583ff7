//! The two-parameter slice of equal-mass three-body scattering with one
//! double collision followed by another.

use linear_billiards::generating::SolverOptions;
use linear_billiards::nbody;

fn main() -> linear_billiards::Result<()> {
    println!("{}", nbody::w_norm_note());
    let (phi, psi) = nbody::default_grids(36, 36);
    let slice = nbody::three_body_slice(&phi, &psi);
    println!("{} slice points", slice.points.len());
    println!("momentum residual {:.2e}, energy residual {:.2e}", slice.max_momentum_residual(), slice.max_energy_residual());
    let cv = nbody::cross_validate_slice(&slice, 200, 1, &SolverOptions::default())?;
    println!("{}", serde_json::to_string_pretty(&cv).expect("serializable"));
    let mut out = Vec::new();
    nbody::write_slice_csv(&slice, &mut out)?;
    print!("{}", String::from_utf8_lossy(&out).lines().take(6).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
