//! Planar unfoldings of trajectories. The sectors `(0, q_i, q_{i+1})` are
//! laid side by side in a plane, together with the end sectors through `A`
//! and `B`; a billiard trajectory develops into a straight segment. This
//! gives the angle-sum identity, the sector bound on itinerary lengths for
//! line arrangements and an angle filter for realizability searches.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arrangement::{Arrangement, Itinerary, Point};
use crate::error::{Error, Result};
use crate::generating::{minimize, SolverOptions};
use crate::linalg::angle_between;
use crate::trajectory::BilliardTrajectory;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Unfolding {
    /// Angle between `q₁` and `−vA`.
    pub theta0: f64,
    /// Sector angles `angle(q_i, q_{i+1})`, `i = 1 … k−1`.
    pub thetas: Vec<f64>,
    /// Angle between `q_k` and `vB`.
    pub theta_k: f64,
    pub beta: f64,
}

impl Unfolding {
    pub fn angle_sum(&self) -> f64 {
        self.theta0 + self.beta + self.theta_k
    }

    /// The developed sector is convex: `β < π`.
    pub fn check_beta_bound(&self) -> bool {
        check_beta_bound(self.beta)
    }
}

pub fn check_beta_bound(beta: f64) -> bool {
    beta < PI
}

fn nonzero_vertices(traj: &BilliardTrajectory) -> Result<()> {
    let scale = traj.length().max(1e-300);
    for (i, q) in traj.chain().iter().enumerate() {
        if q.norm() <= 1e-12 * scale {
            return Err(Error::precondition(format!("vertex {} is at the origin; its ray is undefined", i + 1)));
        }
    }
    if traj.k() == 0 {
        return Err(Error::precondition("unfolding needs at least one collision"));
    }
    Ok(())
}

pub fn unfold(traj: &BilliardTrajectory) -> Result<Unfolding> {
    nonzero_vertices(traj)?;
    let q = traj.chain();
    let edges = traj.edge_velocities();
    let thetas: Vec<f64> = q.windows(2).map(|w| angle_between(&w[0], &w[1])).collect();
    let beta = thetas.iter().sum();
    let theta0 = angle_between(&q[0], &(-&edges[0]));
    let theta_k = angle_between(&q[q.len() - 1], &edges[edges.len() - 1]);
    Ok(Unfolding { theta0, thetas, theta_k, beta })
}

/// Planar images `A′, q₁′, …, q_k′, B′` of the developed cone, and the
/// largest distance of an interior image from the line `A′B′`, divided by
/// `|A′ − B′|`.
#[derive(Clone, Debug, Serialize)]
pub struct Development {
    pub points: Vec<[f64; 2]>,
    pub collinearity_residual: f64,
}

pub fn develop(traj: &BilliardTrajectory) -> Result<Development> {
    let u = unfold(traj)?;
    let q = traj.chain();
    let polar = |r: f64, phi: f64| [r * phi.cos(), r * phi.sin()];
    let mut points = Vec::with_capacity(q.len() + 2);
    points.push(polar(traj.a().norm(), -angle_between(&q[0], traj.a())));
    let mut phi = 0.0;
    for (i, qi) in q.iter().enumerate() {
        if i > 0 {
            phi += u.thetas[i - 1];
        }
        points.push(polar(qi.norm(), phi));
    }
    points.push(polar(traj.b().norm(), phi + angle_between(&q[q.len() - 1], traj.b())));
    let (a, b) = (points[0], points[points.len() - 1]);
    let d = [b[0] - a[0], b[1] - a[1]];
    let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
    let collinearity_residual = points[1..points.len() - 1]
        .iter()
        .map(|p| ((p[0] - a[0]) * d[1] - (p[1] - a[1]) * d[0]).abs() / (len * len))
        .fold(0.0, f64::max);
    Ok(Development { points, collinearity_residual })
}

/// `| |q₁| sin θ₀ − |q_k| sin θ_k | / max(|q₁|, |q_k|)`.
pub fn law_of_sines_residual(traj: &BilliardTrajectory) -> Result<f64> {
    let u = unfold(traj)?;
    let (s0, sk) = (u.theta0.sin(), u.theta_k.sin());
    if s0.abs() < 1e-12 || sk.abs() < 1e-12 {
        return Err(Error::precondition("end angle is 0 or π"));
    }
    let q = traj.chain();
    let (n1, nk) = (q[0].norm(), q[q.len() - 1].norm());
    Ok((n1 * s0 - nk * sk).abs() / n1.max(nk))
}

/// `1 + ⌊π / θ_min⌋`; a single subspace admits only the itinerary of length 1.
pub fn itinerary_bound(arr: &Arrangement) -> Result<usize> {
    if arr.len() == 1 {
        return Ok(1);
    }
    let theta = arr.min_angle()?;
    // The small slack keeps exact divisors such as π/3 on the right side of the floor.
    Ok(1 + (PI / theta + 1e-9).floor() as usize)
}

/// All repeat-free label sequences of length `1..=max_len` over `n` subspaces,
/// shortest first, lexicographic within a length.
pub fn enumerate_itineraries(n: usize, max_len: usize) -> Vec<Itinerary> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for _ in 0..max_len {
        out.extend(layer.iter().map(|l| Itinerary::new(l.clone()).expect("repeat-free")));
        let mut next = Vec::new();
        for l in &layer {
            for j in 0..n {
                if *l.last().expect("non-empty") != j {
                    let mut m = l.clone();
                    m.push(j);
                    next.push(m);
                }
            }
        }
        layer = next;
    }
    out
}

/// Smallest sector sum `Σ min(β_i, π − β_i)` over the angle selections of a
/// line-arrangement itinerary; `None` when some subspace is not a line.
pub fn min_sector_sum(arr: &Arrangement, itinerary: &Itinerary) -> Option<f64> {
    if arr.subspaces().iter().any(|s| s.dim() != 1) {
        return None;
    }
    Some(
        itinerary
            .labels()
            .windows(2)
            .map(|w| {
                let b = arr.angle_between(w[0], w[1]);
                b.min(PI - b)
            })
            .sum(),
    )
}

/// Whether every angle selection forces `β ≥ π`, so the itinerary is unrealizable.
pub fn angle_filter_rejects(arr: &Arrangement, itinerary: &Itinerary) -> bool {
    min_sector_sum(arr, itinerary).is_some_and(|s| s >= PI - 1e-12)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SearchStatus {
    Realized,
    NotFound,
    /// Skipped by the angle filter.
    Filtered,
}

impl SearchStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SearchStatus::Realized => "realized",
            SearchStatus::NotFound => "not-found",
            SearchStatus::Filtered => "filtered",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchRow {
    pub itinerary: Itinerary,
    pub status: SearchStatus,
    pub samples_used: usize,
    /// `(A, B, chain)` of the first valid billiard found.
    pub witness: Option<(Point, Point, Vec<Point>)>,
}

fn random_unit(dim: usize, rng: &mut impl Rng) -> Point {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Anchor directions: stratified angles in the plane, uniform on the sphere otherwise.
fn anchor_direction(dim: usize, slot: usize, strata: usize, rng: &mut impl Rng) -> Point {
    if dim == 2 {
        let phi = 2.0 * PI * (slot as f64 + rng.gen::<f64>()) / strata as f64;
        DVector::from_vec(vec![phi.cos(), phi.sin()])
    } else {
        random_unit(dim, rng)
    }
}

/// Best-effort search for realizations of every repeat-free itinerary up to
/// `max_len`. The budget of solver calls is split evenly over itineraries.
pub fn search_realizable(
    arr: &Arrangement,
    max_len: usize,
    sample_budget: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<Vec<SearchRow>> {
    search_realizable_with(arr, max_len, sample_budget, seed, opts, true)
}

/// [`search_realizable`] with the angle filter optionally disabled.
pub fn search_realizable_with(
    arr: &Arrangement,
    max_len: usize,
    sample_budget: usize,
    seed: u64,
    opts: &SolverOptions,
    use_filter: bool,
) -> Result<Vec<SearchRow>> {
    if let Ok(bound) = itinerary_bound(arr) {
        if max_len > bound + 1 {
            return Err(Error::precondition(format!("max_len {max_len} exceeds the bound {bound} by more than one")));
        }
    }
    let itineraries = enumerate_itineraries(arr.len(), max_len);
    let per = (sample_budget / itineraries.len().max(1)).max(1);
    let dim = arr.dim();
    let rows = itineraries
        .into_par_iter()
        .enumerate()
        .map(|(idx, itinerary)| {
            if use_filter && angle_filter_rejects(arr, &itinerary) {
                return SearchRow { itinerary, status: SearchStatus::Filtered, samples_used: 0, witness: None };
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(idx as u64));
            // Latin pairing of the A and B strata.
            let mut b_slots: Vec<usize> = (0..per).collect();
            for i in (1..per).rev() {
                b_slots.swap(i, rng.gen_range(0..=i));
            }
            for s in 0..per {
                let ra = if s % 2 == 0 { 1.0 } else { 10.0 };
                let rb = if (s / 2) % 2 == 0 { 1.0 } else { 10.0 };
                let a = anchor_direction(dim, s, per, &mut rng) * ra;
                let b = anchor_direction(dim, b_slots[s], per, &mut rng) * rb;
                if let Ok(r) = minimize(arr, &itinerary, &a, &b, opts) {
                    if r.is_valid() {
                        let chain = r.chain.points().to_vec();
                        return SearchRow { itinerary, status: SearchStatus::Realized, samples_used: s + 1, witness: Some((a, b, chain)) };
                    }
                }
            }
            SearchRow { itinerary, status: SearchStatus::NotFound, samples_used: per, witness: None }
        })
        .collect();
    Ok(rows)
}
