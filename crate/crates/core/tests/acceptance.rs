//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
//! Tolerances and time limits are pinned below.

mod common;

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, PI};
use std::time::{Duration, Instant};

use linear_billiards::generating::{gradient_flat, hessian, minimize, multistart, Chain, SolverOptions};
use linear_billiards::nbody::{self, NBodySystem};
use linear_billiards::origami::{self, SearchStatus};
use linear_billiards::scattering::{lagrangian_residual, sample_relation, PatchGrid, RelationSample};
use linear_billiards::symmetry::{conservation_report, RotationGenerator};
use linear_billiards::thickened::{curve_shorten, minimize_thickened, r_family, replay, ThickenedOptions, ThickenedTable};
use linear_billiards::{fixtures, linalg, Arrangement, Classification, Itinerary, Point, Subspace};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn v(x: &[f64]) -> Point {
    DVector::from_column_slice(x)
}

fn all_fixtures() -> Vec<(&'static str, linear_billiards::fixtures::Fixture)> {
    vec![
        ("mirror", fixtures::mirror()),
        ("total-collision", fixtures::total_collision()),
        ("two-lines-60", fixtures::two_lines(FRAC_PI_3)),
        ("two-lines-30", fixtures::two_lines(FRAC_PI_6)),
        ("ghost", fixtures::ghost_lines()),
    ]
}

fn random_anchor(arr: &Arrangement, r: f64, rng: &mut impl Rng) -> Point {
    loop {
        let p = fixtures::random_point(arr.dim(), r, rng);
        if !arr.on_collision_locus(&p, 1e-2) {
            return p;
        }
    }
}

fn criterion_1() -> Outcome {
    let opts = SolverOptions::default();
    let (arr, it, a, b) = fixtures::mirror();
    let r = minimize(&arr, &it, &a, &b, &opts).unwrap();
    let chain_err = (&r.chain.points()[0] - v(&[1.0, 0.0])).norm();
    let len_err = (r.value - 2.0 * 2f64.sqrt()).abs();
    let (arr, it, a, b) = fixtures::total_collision();
    let s = RelationSample::solve(&arr, &it, &a, &b, &opts).unwrap();
    let (tc_len, q_err) = match &s {
        Some(s) => ((s.value - 7.0).abs(), s.ell_minus.q().norm().max(s.ell_plus.q().norm())),
        None => (f64::INFINITY, f64::INFINITY),
    };
    let ok = chain_err < 1e-10 && len_err < 1e-10 && tc_len < 1e-12 && q_err < 1e-10;
    (ok, format!("mirror chain err {chain_err:.1e}, length err {len_err:.1e}; total collision length err {tc_len:.1e}, |Q±| {q_err:.1e}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let setups: Vec<Arrangement> = vec![
        fixtures::star_lines(3),
        fixtures::random_arrangement(3, 1, 3, &mut rng),
        fixtures::random_arrangement(4, 2, 3, &mut rng),
        fixtures::random_arrangement(5, 2, 4, &mut rng),
        fixtures::random_arrangement(6, 3, 3, &mut rng),
    ];
    let (mut checks, mut worst_g, mut worst_h) = (0usize, 0f64, 0f64);
    for arr in &setups {
        for _ in 0..30 {
            let k = rng.gen_range(1..=4);
            let it = common::random_itinerary(arr.len(), k, &mut rng);
            let a = random_anchor(arr, 3.0, &mut rng);
            let b = random_anchor(arr, 3.0, &mut rng);
            let n: usize = it.labels().iter().map(|&l| arr.subspace(l).dim()).sum();
            let x = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
            let chain = Chain::from_flat(arr, &it, &x).unwrap();
            let f = |y: &DVector<f64>| common::length_at(arr, &it, &a, &b, y);
            let g = gradient_flat(arr, &a, &chain, &b).unwrap();
            let fd = common::fd_gradient(f, &x, 1e-6);
            worst_g = worst_g.max((&g - &fd).norm() / g.norm().max(1.0));
            let h = hessian(arr, &a, &chain, &b).unwrap().quadratic_form;
            let grad = |y: &DVector<f64>| gradient_flat(arr, &a, &Chain::from_flat(arr, &it, y).unwrap(), &b).unwrap();
            let fdh = common::fd_jacobian(grad, &x, 1e-5);
            worst_h = worst_h.max((&h - &fdh).norm() / h.norm().max(1.0));
            checks += 1;
        }
    }
    let ok = checks >= 100 && worst_g < 1e-6 && worst_h < 1e-5;
    (ok, format!("{checks} chains on {} arrangements; gradient rel err {worst_g:.1e}, Hessian rel err {worst_h:.1e}", setups.len()))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases: Vec<(Arrangement, Itinerary, Point, Point)> =
        all_fixtures().into_iter().map(|(_, (arr, it, a, b))| (arr, it, a, b)).collect();
    for _ in 0..60 {
        let arr = fixtures::random_arrangement(4, 2, 3, &mut rng);
        let k = rng.gen_range(1..=4);
        let it = common::random_itinerary(3, k, &mut rng);
        let a = random_anchor(&arr, 3.0, &mut rng);
        let b = random_anchor(&arr, 3.0, &mut rng);
        cases.push((arr, it, a, b));
    }
    let (mut n_valid, mut min_eig, mut max_rho, mut max_w) = (0usize, f64::INFINITY, 0f64, 0f64);
    for (arr, it, a, b) in &cases {
        let r = minimize(arr, it, a, b, &SolverOptions::default()).unwrap();
        // Chains with no free coordinates have an empty Hessian.
        if r.classification != Classification::ValidBilliard || r.chain.flat().is_empty() {
            continue;
        }
        let h = hessian(arr, a, &r.chain, b).unwrap();
        min_eig = min_eig.min(h.min_eigenvalue().unwrap_or(f64::NEG_INFINITY));
        max_rho = max_rho.max(h.a_spectral_radius().unwrap()).max(h.a_spectral_radius_direct().unwrap());
        for (x, y) in h.weights() {
            max_w = max_w.max((x + y - 1.0).abs());
        }
        n_valid += 1;
    }
    let ok = n_valid >= 20 && min_eig > 0.0 && max_rho < 1.0 && max_w < 1e-14;
    (ok, format!("{n_valid} valid solutions; min eig(M) {min_eig:.2e}, max rho(A) {max_rho:.4}, max |a+b-1| {max_w:.1e}"))
}

fn criterion_4() -> Outcome {
    let opts = SolverOptions { n_multistart: 100, ..SolverOptions::default() };
    let mut worst_ms: f64 = 0.0;
    let mut failures = 0;
    for (_, (arr, it, a, b)) in all_fixtures() {
        let rep = multistart(&arr, &it, &a, &b, &opts).unwrap();
        worst_ms = worst_ms.max(rep.max_deviation);
        failures += rep.failures;
    }
    // Brute force on small problems: the two-line fixtures and random line pairs in the plane.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cases: Vec<(Arrangement, Itinerary, Point, Point)> = vec![
        {
            let (arr, it, a, b) = fixtures::two_lines(FRAC_PI_3);
            (arr, it, a, b)
        },
        {
            let (arr, it, a, b) = fixtures::two_lines(FRAC_PI_6);
            (arr, it, a, b)
        },
    ];
    for _ in 0..6 {
        let arr = fixtures::random_arrangement(2, 1, 2, &mut rng);
        let a = random_anchor(&arr, 3.0, &mut rng);
        let b = random_anchor(&arr, 3.0, &mut rng);
        cases.push((arr, Itinerary::new(vec![0, 1]).unwrap(), a, b));
    }
    let mut worst_bf: f64 = 0.0;
    for (arr, it, a, b) in &cases {
        let r = minimize(arr, it, a, b, &SolverOptions::default()).unwrap();
        let f = |x: &DVector<f64>| common::length_at(arr, it, a, b, x);
        let x = common::brute_force(f, &DVector::zeros(it.len()), 6.0, 1e-9);
        // Coincidence stratum: both vertices at the common point.
        let mut best = (f(&x), x);
        let origin = f(&DVector::zeros(it.len()));
        if origin < best.0 {
            best = (origin, DVector::zeros(it.len()));
        }
        let bf_chain = Chain::from_flat(arr, it, &best.1).unwrap();
        let dev = if best.0 >= r.value - 1e-12 { bf_chain.distance(&r.chain) } else { f64::INFINITY };
        worst_bf = worst_bf.max(dev);
    }
    let ok = worst_ms < 1e-7 && failures == 0 && worst_bf < 1e-6;
    (ok, format!("multistart max deviation {worst_ms:.1e} ({failures} failures); brute force max deviation {worst_bf:.1e} on {} problems", cases.len()))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut n, mut refl, mut lin, mut ang) = (0usize, 0f64, 0f64, 0f64);
    // Coordinate planes in ℝ⁴ with their two plane rotations.
    let planes = Arrangement::new(4, vec![
        Subspace::from_slices("P12", 4, &[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]).unwrap(),
        Subspace::from_slices("P34", 4, &[&[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 1.0]]).unwrap(),
    ])
    .unwrap();
    let plane_gens = vec![RotationGenerator::plane(4, 0, 1).unwrap(), RotationGenerator::plane(4, 2, 3).unwrap()];
    // Three bodies in the plane without centre-of-mass reduction: translations are a symmetry.
    let sys = NBodySystem::new(vec![1.0, 2.0, 0.5], 2, false).unwrap();
    let bodies = sys.build_arrangement().unwrap();
    let body_gens = vec![sys.rotation_generator(0, 1).unwrap()];
    for (arr, gens) in [(&planes, &plane_gens), (&bodies, &body_gens)] {
        for _ in 0..60 {
            let k = rng.gen_range(1..=3);
            let it = common::random_itinerary(arr.len(), k, &mut rng);
            let a = random_anchor(arr, 3.0, &mut rng);
            let b = random_anchor(arr, 3.0, &mut rng);
            let r = minimize(arr, &it, &a, &b, &SolverOptions::default()).unwrap();
            if let Some(t) = &r.trajectory {
                refl = refl.max(t.max_reflection_residual(arr));
                let rep = conservation_report(arr, t, gens).unwrap();
                lin = lin.max(rep.linear_max_dev);
                ang = ang.max(rep.angular_max_dev);
                n += 1;
            }
        }
    }
    let ok = n >= 20 && refl < 1e-9 && lin < 1e-10 && ang < 1e-9;
    (ok, format!("{n} trajectories; reflection residual {refl:.1e}, linear momentum drift {lin:.1e}, angular jump {ang:.1e}"))
}

fn criterion_6() -> Outcome {
    let anchors = [
        ("mirror", fixtures::mirror(), v(&[0.3, 1.2]), v(&[2.1, 0.7])),
        ("total-collision", fixtures::total_collision(), v(&[3.2, 0.4]), v(&[0.3, 3.9])),
    ];
    let hs = [5e-3, 2.5e-3];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, (arr, it, _, _), a, b) in anchors {
        let res: Vec<f64> = hs
            .iter()
            .map(|&h| {
                let patch = sample_relation(&arr, &it, &PatchGrid::full(&a, &b, h, 5), &SolverOptions::default()).unwrap();
                lagrangian_residual(&patch).unwrap_or(f64::INFINITY)
            })
            .collect();
        let slope = linalg::log_log_slope(&hs, &res);
        ok &= res[0] < 1e-6 && (slope - 2.0).abs() <= 0.3;
        parts.push(format!("{name} {:.2e} at h={:.0e}, slope {slope:.2}", res[0], hs[0]));
    }
    (ok, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut n, mut sum_err, mut max_beta, mut sines) = (0usize, 0f64, 0f64, 0f64);
    let mut arrangements: Vec<Arrangement> = [FRAC_PI_3, FRAC_PI_6, 1.0, 2.0].iter().map(|&t| fixtures::two_lines(t).0).collect();
    arrangements.push(fixtures::star_lines(3));
    for arr in &arrangements {
        let bound = origami::itinerary_bound(arr).unwrap();
        for _ in 0..120 {
            let k = rng.gen_range(1..=bound.min(4));
            let it = common::random_itinerary(arr.len(), k, &mut rng);
            let a = random_anchor(arr, 3.0, &mut rng);
            let b = random_anchor(arr, 3.0, &mut rng);
            let r = minimize(arr, &it, &a, &b, &SolverOptions::default()).unwrap();
            let Some(t) = &r.trajectory else { continue };
            let Ok(u) = origami::unfold(t) else { continue };
            sum_err = sum_err.max((u.angle_sum() - PI).abs());
            max_beta = max_beta.max(u.beta);
            sines = sines.max(origami::law_of_sines_residual(t).unwrap());
            n += 1;
        }
    }
    let (arr, _, _, _) = fixtures::two_lines(FRAC_PI_3);
    let rows = origami::search_realizable_with(&arr, 5, 10_000, 7, &SolverOptions::default(), false).unwrap();
    let longest = rows.iter().filter(|r| r.status == SearchStatus::Realized).map(|r| r.itinerary.len()).max().unwrap_or(0);
    let ok = n >= 50 && sum_err < 1e-10 && max_beta < PI && sines < 1e-9 && longest <= 4;
    (ok, format!("{n} line solutions; angle sum err {sum_err:.1e}, max beta {max_beta:.4}, law of sines {sines:.1e}; two-lines-60 longest realized {longest} (budget 1e4)"))
}

fn criterion_8() -> Outcome {
    let r_list = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    let mut ok = true;
    let mut parts = Vec::new();
    let cases = [("mirror", fixtures::mirror()), ("two-lines-60", fixtures::two_lines(FRAC_PI_3)), ("two-lines-30", fixtures::two_lines(FRAC_PI_6))];
    for (name, (arr, it, a, b)) in cases {
        let fam = r_family(&arr, &it, &a, &b, &r_list, &SolverOptions::default(), &ThickenedOptions::default()).unwrap();
        let devs: Vec<f64> = fam.iter().map(|e| e.deviation.unwrap_or(f64::NAN)).collect();
        let slope = linalg::log_log_slope(&r_list, &devs);
        let matched = fam.iter().all(|e| e.itinerary_match);
        let point = minimize(&arr, &it, &a, &b, &SolverOptions::default()).unwrap();
        let mut decreasing = true;
        for r in [1e-2, 1e-3] {
            let table = ThickenedTable::new(arr.clone(), r).unwrap();
            match curve_shorten(&table, &it, &a, point.chain.points(), &b) {
                Ok((_, lengths)) => decreasing &= lengths.windows(2).all(|w| w[1] < w[0]),
                Err(_) => decreasing = false,
            }
        }
        ok &= (slope - 1.0).abs() <= 0.2 && matched && decreasing;
        parts.push(format!("{name} slope {slope:.3} match {matched} shorten {decreasing}"));
    }
    (ok, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut n, mut label_ok, mut worst) = (0usize, true, 0f64);
    let mut cases: Vec<(Arrangement, Itinerary, Point, Point, f64)> = Vec::new();
    for (arr, it, a, b) in [fixtures::mirror(), fixtures::two_lines(FRAC_PI_3), fixtures::two_lines(FRAC_PI_6)] {
        for r in [1e-1, 1e-2, 1e-3] {
            cases.push((arr.clone(), it.clone(), a.clone(), b.clone(), r));
        }
    }
    // Lines in space: escaping rays generically miss the other cylinders.
    let lines = fixtures::random_arrangement(3, 1, 3, &mut rng);
    for _ in 0..60 {
        let k = rng.gen_range(1..=3);
        let it = common::random_itinerary(3, k, &mut rng);
        let a = random_anchor(&lines, 3.0, &mut rng);
        let b = random_anchor(&lines, 3.0, &mut rng);
        cases.push((lines.clone(), it, a, b, 0.05));
    }
    for (arr, it, a, b, r) in cases {
        let table = ThickenedTable::new(arr.clone(), r).unwrap();
        if table.inside(&a).is_some() || table.inside(&b).is_some() {
            continue;
        }
        let Ok(m) = minimize_thickened(&table, &it, &a, &b, &ThickenedOptions::default()) else { continue };
        if !m.is_honest() {
            continue;
        }
        match replay(&table, &a, &m) {
            Ok(path) => {
                label_ok &= path.labels() == it.labels();
                let d = path.points().iter().zip(&m.chain).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
                worst = worst.max(d);
            }
            Err(_) => label_ok = false,
        }
        n += 1;
    }
    let ok = n >= 15 && label_ok && worst < 1e-8;
    (ok, format!("{n} honest minimizers replayed; labels match {label_ok}, max vertex deviation {worst:.1e}"))
}

fn criterion_10() -> Outcome {
    println!("  note: {}", nbody::w_norm_note());
    let (phi, psi) = nbody::default_grids(36, 36);
    let slice = nbody::three_body_slice(&phi, &psi);
    let (mom, en) = (slice.max_momentum_residual(), slice.max_energy_residual());
    let cv = nbody::cross_validate_slice(&slice, 200, 10, &SolverOptions::default()).unwrap();
    let ok = mom < 1e-12 && en < 1e-12 && cv.n_sampled >= 100 && cv.max_chain_deviation < 1e-7 && cv.max_reflection_residual < 1e-10;
    (
        ok,
        format!(
            "{} points, momentum {mom:.1e}, energy {en:.1e}; {} cross-validated ({} valid, {} non-generic), chain deviation {:.1e}",
            slice.points.len(),
            cv.n_sampled,
            cv.n_valid,
            cv.n_non_generic,
            cv.max_chain_deviation
        ),
    )
}

fn main() {
    let criteria: [(fn() -> Outcome, Duration); 10] = [
        (criterion_1, Duration::from_secs(1)),
        (criterion_2, Duration::from_secs(30)),
        (criterion_3, Duration::from_secs(60)),
        (criterion_4, Duration::from_secs(120)),
        (criterion_5, Duration::from_secs(60)),
        (criterion_6, Duration::from_secs(120)),
        (criterion_7, Duration::from_secs(120)),
        (criterion_8, Duration::from_secs(120)),
        (criterion_9, Duration::from_secs(120)),
        (criterion_10, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, details) = run();
        let elapsed = start.elapsed();
        let pass = ok && elapsed <= *limit;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} ({details}; {:.2}s of {}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
