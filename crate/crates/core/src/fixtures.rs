//! Small reference problems used by the examples, tests and CLI defaults.
//!
//! Each constructor returns `(arrangement, itinerary, A, B)`.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::Rng;

use crate::arrangement::{Arrangement, Itinerary, Point, Subspace};

pub type Fixture = (Arrangement, Itinerary, Point, Point);

fn v(x: &[f64]) -> Point {
    DVector::from_column_slice(x)
}

fn line(name: &str, angle: f64) -> Subspace {
    Subspace::from_slices(name, 2, &[&[angle.cos(), angle.sin()]]).expect("unit direction")
}

/// Reflection off the x-axis in the plane: `(0,1) → (1,0) → (2,1)`.
pub fn mirror() -> Fixture {
    let arr = Arrangement::new(2, vec![line("L1", 0.0)]).expect("valid");
    (arr, Itinerary::new(vec![0]).expect("valid"), v(&[0.0, 1.0]), v(&[2.0, 1.0]))
}

/// Total collision at the origin: `L = {0}` in the plane, `A = (3,0)`, `B = (0,4)`.
pub fn total_collision() -> Fixture {
    let arr = Arrangement::new(2, vec![Subspace::zero("O", 2)]).expect("valid");
    (arr, Itinerary::new(vec![0]).expect("valid"), v(&[3.0, 0.0]), v(&[0.0, 4.0]))
}

/// `{0}` in ℝ³: the line through two generic anchors misses it, so the free
/// itinerary is realizable here.
pub fn origin_in_space() -> Arrangement {
    Arrangement::new(3, vec![Subspace::zero("O", 3)]).expect("valid")
}

/// Two lines through the origin at angle `theta`, itinerary `(L1, L2)`, and
/// anchors of a trajectory bouncing in the obtuse sector of opening `π − θ`.
/// The trajectory hits `q₁ = (1, 0)` and `q₂ = −(cos θ, sin θ)`.
pub fn two_lines(theta: f64) -> Fixture {
    let arr = Arrangement::new(2, vec![line("L1", 0.0), line("L2", theta)]).expect("valid");
    let q1 = v(&[1.0, 0.0]);
    let q2 = v(&[-theta.cos(), -theta.sin()]);
    let n = (&q2 - &q1).normalize();
    let phi = n[1].atan2(n[0]);
    let v_in = v(&[phi.cos(), -phi.sin()]);
    let out_angle = 2.0 * theta - phi;
    let v_out = v(&[out_angle.cos(), out_angle.sin()]);
    let a = &q1 - v_in;
    let b = &q2 + v_out;
    (arr, Itinerary::new(vec![0, 1]).expect("valid"), a, b)
}

/// Two lines in ℝ³ at a small angle whose joint minimizer collapses to the
/// origin: the single reflection off `L1` at `0` is already shortest.
pub fn ghost_lines() -> Fixture {
    let d = 0.05f64;
    let arr = Arrangement::new(
        3,
        vec![
            Subspace::from_slices("L1", 3, &[&[1.0, 0.0, 0.0]]).expect("valid"),
            Subspace::from_slices("L2", 3, &[&[d.cos(), d.sin(), 0.0]]).expect("valid"),
        ],
    )
    .expect("valid");
    (arr, Itinerary::new(vec![0, 1]).expect("valid"), v(&[-1.0, 0.0, 1.0]), v(&[1.0, 0.0, 1.0]))
}

/// `n` lines through the origin of the plane at multiples of `PI / n`.
pub fn star_lines(n: usize) -> Arrangement {
    let subs = (0..n).map(|i| line(&format!("L{}", i + 1), PI * i as f64 / n as f64)).collect();
    Arrangement::new(2, subs).expect("valid")
}

/// `count` random subspaces of dimension `sub_dim` in ℝ^`dim`.
pub fn random_arrangement(dim: usize, sub_dim: usize, count: usize, rng: &mut impl Rng) -> Arrangement {
    loop {
        let subs: Vec<Subspace> = (0..count)
            .map(|i| {
                let basis: Vec<Point> = (0..sub_dim)
                    .map(|_| DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0)))
                    .collect();
                Subspace::new(format!("L{}", i + 1), dim, &basis, 1.0)
            })
            .collect::<Result<_, _>>()
            .unwrap_or_default();
        if subs.len() == count {
            if let Ok(arr) = Arrangement::new(dim, subs) {
                return arr;
            }
        }
    }
}

/// Random point with coordinates uniform in `[-r, r]`.
pub fn random_point(dim: usize, r: f64, rng: &mut impl Rng) -> Point {
    DVector::from_fn(dim, |_, _| rng.gen_range(-r..r))
}
