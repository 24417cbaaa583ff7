//! Replaces each line by a solid cylinder of radius r and follows the
//! minimizer as r shrinks.

use linear_billiards::generating::{minimize, SolverOptions};
use linear_billiards::thickened::{curve_shorten, r_family, replay, ThickenedOptions, ThickenedTable};
use linear_billiards::{fixtures, linalg};

fn main() -> linear_billiards::Result<()> {
    let (arr, itinerary, a, b) = fixtures::two_lines(std::f64::consts::FRAC_PI_3);
    let rs = [1e-1, 1e-2, 1e-3, 1e-4];
    let fam = r_family(&arr, &itinerary, &a, &b, &rs, &SolverOptions::default(), &ThickenedOptions::default())?;
    for e in &fam {
        println!("r = {:.0e}: deviation {:.3e}, itinerary match {}", e.r, e.deviation.unwrap_or(f64::NAN), e.itinerary_match);
    }
    let devs: Vec<f64> = fam.iter().map(|e| e.deviation.unwrap_or(f64::NAN)).collect();
    println!("deviation ~ r^{:.3}", linalg::log_log_slope(&rs, &devs));

    let table = ThickenedTable::new(arr.clone(), 1e-2)?;
    if let Ok(m) = &fam[1].result {
        let path = replay(&table, &a, m)?;
        for ev in &path.events {
            println!("t = {:.6}  hit {}  at {:?}", ev.time, arr.subspace(ev.label).name(), ev.point.as_slice());
        }
        println!("termination: {:?}", path.termination);
    }

    let point = minimize(&arr, &itinerary, &a, &b, &SolverOptions::default())?;
    let (_, lengths) = curve_shorten(&table, &itinerary, &a, point.chain.points(), &b)?;
    println!("curve shortening lengths: {lengths:?}");
    Ok(())
}
