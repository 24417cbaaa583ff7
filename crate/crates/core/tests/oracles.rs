//! Analytic derivatives and solver output against finite differences and
//! brute-force search.

mod common;

use linear_billiards::generating::{gradient_flat, hessian, minimize, Chain, SolverOptions};
use linear_billiards::{fixtures, Arrangement, Classification, Itinerary, Point};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn arrangements(rng: &mut ChaCha8Rng) -> Vec<Arrangement> {
    vec![
        fixtures::star_lines(3),
        fixtures::random_arrangement(3, 1, 3, rng),
        fixtures::random_arrangement(4, 2, 3, rng),
        fixtures::random_arrangement(5, 3, 4, rng),
        fixtures::random_arrangement(6, 2, 3, rng),
    ]
}

/// Random chain with all legs longer than `min_gap`.
fn random_smooth_chain(arr: &Arrangement, itin: &Itinerary, a: &Point, b: &Point, rng: &mut ChaCha8Rng) -> Chain {
    loop {
        let coords: Vec<DVector<f64>> = itin
            .labels()
            .iter()
            .map(|&l| DVector::from_fn(arr.subspace(l).dim(), |_, _| rng.gen_range(-2.0..2.0)))
            .collect();
        let chain = Chain::from_coords(arr, itin, coords).unwrap();
        let mut nodes = vec![a.clone()];
        nodes.extend(chain.points().iter().cloned());
        nodes.push(b.clone());
        if nodes.windows(2).all(|w| (&w[1] - &w[0]).norm() > 0.2) {
            return chain;
        }
    }
}

#[test]
fn gradient_and_hessian_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for arr in arrangements(&mut rng) {
        for _ in 0..30 {
            let k = rng.gen_range(1..=4);
            let itin = random_itinerary(arr.len(), k, &mut rng);
            let a = fixtures::random_point(arr.dim(), 3.0, &mut rng);
            let b = fixtures::random_point(arr.dim(), 3.0, &mut rng);
            let chain = random_smooth_chain(&arr, &itin, &a, &b, &mut rng);
            let x = chain.flat();
            let g = gradient_flat(&arr, &a, &chain, &b).unwrap();
            let fd = fd_gradient(|y| length_at(&arr, &itin, &a, &b, y), &x, 1e-5);
            let rel = (&fd - &g).norm() / g.norm().max(1e-3);
            assert!(rel < 1e-6, "gradient rel error {rel:e} on dim {} k {k}", arr.dim());

            let h = hessian(&arr, &a, &chain, &b).unwrap().quadratic_form;
            let grad_at = |y: &DVector<f64>| {
                gradient_flat(&arr, &a, &Chain::from_flat(&arr, &itin, y).unwrap(), &b).unwrap()
            };
            let fdh = fd_jacobian(grad_at, &x, 1e-5);
            let rel = (&fdh - &h).norm() / h.norm().max(1e-3);
            assert!(rel < 1e-5, "Hessian rel error {rel:e} on dim {} k {k}", arr.dim());
            checked += 1;
        }
    }
    assert!(checked >= 100);
}

fn brute_force_check(arr: &Arrangement, itin: &Itinerary, a: &Point, b: &Point) -> f64 {
    let r = minimize(arr, itin, a, b, &SolverOptions::default()).unwrap();
    let half = 2.0 * (a.norm() + b.norm());
    let x0 = DVector::zeros(r.chain.flat().len());
    let f = |y: &DVector<f64>| length_at(arr, itin, a, b, y);
    let best = brute_force(f, &x0, half, 1e-10);
    let mut candidate = Chain::from_flat(arr, itin, &best).unwrap();
    let mut value = f(&best);
    // Coincidence stratum q₁ = q₂ on L₁ ∩ L₂, searched separately.
    if itin.len() == 2 {
        let u = intersection_basis(arr, itin.labels()[0], itin.labels()[1]);
        let along = |t: &DVector<f64>| -> Point { if u.ncols() == 0 { DVector::zeros(a.len()) } else { &u * t } };
        let g = |t: &DVector<f64>| {
            let p = along(t);
            (a - &p).norm() + (&p - b).norm()
        };
        let t = brute_force(g, &DVector::zeros(u.ncols()), half, 1e-10);
        if g(&t) < value {
            value = g(&t);
            let p = along(&t);
            candidate = Chain::from_points(arr, itin, &[p.clone(), p]).unwrap();
        }
    }
    assert!(value >= r.value - 1e-12, "brute force found a lower value {value} < {}", r.value);
    candidate.distance(&r.chain)
}

#[test]
fn solver_matches_brute_force_on_fixtures() {
    let fx = [
        fixtures::mirror(),
        fixtures::total_collision(),
        fixtures::two_lines(std::f64::consts::FRAC_PI_3),
        fixtures::two_lines(0.8),
        fixtures::ghost_lines(),
    ];
    for (arr, itin, a, b) in fx {
        let dev = brute_force_check(&arr, &itin, &a, &b);
        assert!(dev < 1e-6, "brute force deviates by {dev:e}");
    }
}

#[test]
fn solver_matches_brute_force_on_random_planes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..4 {
        let arr = fixtures::random_arrangement(3, 2, 2, &mut rng);
        let itin = Itinerary::new(vec![0, 1]).unwrap();
        let a = fixtures::random_point(3, 2.0, &mut rng);
        let b = fixtures::random_point(3, 2.0, &mut rng);
        let dev = brute_force_check(&arr, &itin, &a, &b);
        assert!(dev < 1e-6, "brute force deviates by {dev:e}");
    }
}

#[test]
fn valid_solutions_are_critical_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let arr = fixtures::random_arrangement(4, 2, 3, &mut rng);
    let mut valid = 0;
    for _ in 0..50 {
        let itin = random_itinerary(3, rng.gen_range(1..=3), &mut rng);
        let a = fixtures::random_point(4, 3.0, &mut rng);
        let b = fixtures::random_point(4, 3.0, &mut rng);
        let r = minimize(&arr, &itin, &a, &b, &SolverOptions::default()).unwrap();
        if r.classification != Classification::ValidBilliard {
            continue;
        }
        valid += 1;
        let fd = fd_gradient(|y| length_at(&arr, &itin, &a, &b, y), &r.chain.flat(), 1e-6);
        assert!(fd.norm() < 1e-8 * r.value.max(1.0), "finite-difference gradient {:e}", fd.norm());
    }
    assert!(valid > 10);
}

