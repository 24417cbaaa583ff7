//! The `r`-thickened deterministic billiard. Each subspace `L` becomes the
//! solid cylinder `d(q, L) ≤ ρ_L = σ_L r`; the table is the closure of the
//! complement of the open cylinders.
//!
//! Provides exact event-driven simulation, minimization of the path length
//! over the product of solid cylinders, the vertex-by-vertex curve shortening
//! and the `r`-family of thickened minimizers of a point billiard.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrangement::{Arrangement, Itinerary, Point, Subspace};
use crate::error::{Error, Result};
use crate::generating::{self, Classification, Problem, SolverOptions};
use crate::trajectory::TRANSVERSE_TOL;

/// A hit within this distance of another cylinder is a corner collision.
pub const CORNER_TOL: f64 = 1e-9;
/// Normalized discriminants below this are grazing contacts, not hits.
pub const GRAZE_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct ThickenedTable {
    arr: Arrangement,
    r: f64,
    radii: Vec<f64>,
}

impl ThickenedTable {
    pub fn new(arr: Arrangement, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::input(format!("thickening radius must be positive, got {r}")));
        }
        let radii = arr.subspaces().iter().map(|s| s.sigma() * r).collect();
        Ok(ThickenedTable { arr, r, radii })
    }

    pub fn arrangement(&self) -> &Arrangement {
        &self.arr
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Effective radius `ρ_L = σ_L r` of subspace `l`.
    pub fn radius(&self, l: usize) -> f64 {
        self.radii[l]
    }

    fn inside_tol(&self, l: usize) -> f64 {
        1e-9 * self.radii[l].max(1e-300)
    }

    /// Index of a cylinder whose open interior contains `p`, beyond tolerance.
    pub fn inside(&self, p: &Point) -> Option<usize> {
        (0..self.arr.len()).find(|&l| self.arr.subspace(l).perp(p).norm() < self.radii[l] - self.inside_tol(l))
    }

    /// Exact projection onto the solid cylinder around subspace `l`.
    pub fn project_to_cylinder(&self, l: usize, q: &Point) -> Point {
        let s = self.arr.subspace(l);
        let perp = s.perp(q);
        let d = perp.norm();
        let rho = self.radii[l];
        if d <= rho {
            q.clone()
        } else {
            q - &perp * (1.0 - rho / d)
        }
    }

    /// First entering contact of the ray `p + t v`, `t > 0`.
    pub fn first_hit(&self, p: &Point, v: &Point) -> Result<Option<Hit>> {
        if p.len() != self.arr.dim() || v.len() != self.arr.dim() {
            return Err(Error::input("point or velocity has wrong dimension"));
        }
        if (v.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!("velocity is not unit (|v| = {})", v.norm())));
        }
        if let Some(l) = self.inside(p) {
            return Err(Error::precondition(format!("start point lies inside the cylinder around {}", self.arr.subspace(l).name())));
        }
        let mut best: Option<(f64, usize)> = None;
        for (l, s) in self.arr.subspaces().iter().enumerate() {
            if let Some(t) = entering_time(s, self.radii[l], p, v) {
                if best.is_none_or(|(tb, _)| t < tb) {
                    best = Some((t, l));
                }
            }
        }
        let Some((t, label)) = best else {
            return Ok(None);
        };
        let point = p + v * t;
        let perp = self.arr.subspace(label).perp(&point);
        let normal = &perp / perp.norm();
        for m in 0..self.arr.len() {
            if m != label && self.arr.subspace(m).perp(&point).norm() < self.radii[m] + CORNER_TOL {
                return Err(Error::CornerCollision {
                    time: t,
                    first: label,
                    second: m,
                    partial: Box::new(ThickenedPath::empty(p.clone(), v.clone())),
                });
            }
        }
        Ok(Some(Hit { t, label, point, normal }))
    }

    /// Event-driven simulation from `p` with unit velocity `v`.
    pub fn simulate(&self, p: &Point, v: &Point, max_events: usize, t_max: f64) -> Result<ThickenedPath> {
        let mut path = ThickenedPath::empty(p.clone(), v.clone());
        let mut pos = p.clone();
        let mut vel = v.clone();
        let mut time = 0.0;
        loop {
            let hit = match self.first_hit(&pos, &vel) {
                Ok(h) => h,
                Err(Error::CornerCollision { time: dt, first, second, .. }) => {
                    path.end = (pos.clone(), vel.clone());
                    path.end_time = time;
                    path.termination = Termination::Corner;
                    return Err(Error::CornerCollision { time: time + dt, first, second, partial: Box::new(path) });
                }
                Err(e) => return Err(e),
            };
            match hit {
                Some(h) if time + h.t <= t_max => {
                    let after = &vel - &h.normal * (2.0 * vel.dot(&h.normal));
                    // Renormalize to keep |v| = 1 exact to rounding.
                    let after = after.normalize();
                    time += h.t;
                    path.events.push(Event {
                        time,
                        label: h.label,
                        point: h.point.clone(),
                        v_before: vel.clone(),
                        v_after: after.clone(),
                    });
                    pos = h.point;
                    vel = after;
                    if path.events.len() >= max_events {
                        path.termination = Termination::EventLimit;
                        break;
                    }
                }
                Some(_) => {
                    pos = &pos + &vel * (t_max - time);
                    time = t_max;
                    path.termination = Termination::TimeLimit;
                    break;
                }
                None => {
                    path.termination = Termination::Escaped;
                    break;
                }
            }
        }
        path.end = (pos, vel);
        path.end_time = time;
        Ok(path)
    }
}

/// Smallest `t ≥ 0` where the ray enters the cylinder `|Π⊥x| ≤ rho`, if any.
fn entering_time(s: &Subspace, rho: f64, p: &Point, v: &Point) -> Option<f64> {
    let pp = s.perp(p);
    let vp = s.perp(v);
    let a = vp.norm_squared();
    let b = pp.dot(&vp);
    if a <= 1e-300 || b >= 0.0 {
        // Parallel, or the distance to L is already increasing.
        return None;
    }
    let d = pp.norm();
    let c = (d - rho) * (d + rho);
    // b² − a c = a (ρ² − d_min²), with the closest approach taken directly.
    let closest = &pp - &vp * (b / a);
    let dmin = closest.norm();
    let slack = (rho - dmin) * (rho + dmin);
    if slack / (rho * rho).max(1e-300) < GRAZE_TOL {
        return None;
    }
    let disc = a * slack;
    // Stable form of (−b − √disc)/a.
    let t = c.max(0.0) / (-b + disc.sqrt());
    Some(t)
}

#[derive(Clone, Debug)]
pub struct Hit {
    pub t: f64,
    pub label: usize,
    pub point: Point,
    /// Outward unit normal `Π⊥x / |Π⊥x|` of the cylinder at the hit point.
    pub normal: Point,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    /// Time since the start of the path.
    pub time: f64,
    pub label: usize,
    pub point: Point,
    pub v_before: Point,
    pub v_after: Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Escaped,
    TimeLimit,
    EventLimit,
    Corner,
}

#[derive(Clone, Debug)]
pub struct ThickenedPath {
    pub start: (Point, Point),
    pub events: Vec<Event>,
    pub end: (Point, Point),
    pub end_time: f64,
    pub termination: Termination,
}

impl ThickenedPath {
    fn empty(p: Point, v: Point) -> Self {
        ThickenedPath {
            start: (p.clone(), v.clone()),
            events: Vec::new(),
            end: (p, v),
            end_time: 0.0,
            termination: Termination::Escaped,
        }
    }

    pub fn labels(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.label).collect()
    }

    pub fn points(&self) -> Vec<Point> {
        self.events.iter().map(|e| e.point.clone()).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ThickenedOptions {
    pub max_iters: usize,
    /// Stopping tolerance on the projected step, relative to `|A − B|`.
    pub step_tol: f64,
    pub coincidence_tol: f64,
    pub n_multistart: usize,
    pub multistart_radius: f64,
    pub seed: u64,
}

impl Default for ThickenedOptions {
    fn default() -> Self {
        ThickenedOptions {
            max_iters: 20_000,
            step_tol: 1e-13,
            coincidence_tol: 1e-9,
            n_multistart: 50,
            multistart_radius: 10.0,
            seed: 0,
        }
    }
}

/// Minimizer of the path length over the product of solid cylinders.
#[derive(Clone, Debug)]
pub struct ThickenedMinimum {
    pub chain: Vec<Point>,
    pub value: f64,
    /// Stationarity plus feasibility residual of the KKT system.
    pub kkt_residual: f64,
    /// `ValidBilliard` for an honest transverse thickened billiard.
    pub classification: Classification,
    /// Multiplier of each cylinder constraint; 0 for interior vertices.
    pub multipliers: Vec<f64>,
    pub active: Vec<bool>,
    pub iterations: usize,
}

impl ThickenedMinimum {
    pub fn is_honest(&self) -> bool {
        self.classification == Classification::ValidBilliard
    }

    /// Unit direction of the first leg.
    pub fn incoming_direction(&self, a: &Point) -> Point {
        (&self.chain[0] - a).normalize()
    }
}

struct Constrained<'a> {
    problem: Problem<'a>,
    table: &'a ThickenedTable,
    labels: Vec<usize>,
    dim: usize,
}

impl Constrained<'_> {
    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = x.clone();
        for (i, &l) in self.labels.iter().enumerate() {
            let q = x.rows(i * self.dim, self.dim).into_owned();
            out.rows_mut(i * self.dim, self.dim).copy_from(&self.table.project_to_cylinder(l, &q));
        }
        out
    }

    fn vertex(&self, x: &DVector<f64>, i: usize) -> Point {
        x.rows(i * self.dim, self.dim).into_owned()
    }

    fn perp(&self, x: &DVector<f64>, i: usize) -> Point {
        self.table.arr.subspace(self.labels[i]).perp(&self.vertex(x, i))
    }

    /// Projected gradient with backtracking along the projection arc.
    fn projected_gradient(&self, mut x: DVector<f64>, opts: &ThickenedOptions) -> (DVector<f64>, usize) {
        let scale = self.problem.scale();
        let mut f = self.problem.value(&x, 0.0);
        let mut alpha = scale;
        for it in 0..opts.max_iters {
            let g = self.problem.gradient(&x, 0.0);
            let mut accepted = None;
            for _ in 0..80 {
                let trial = self.project(&(&x - &g * alpha));
                let ft = self.problem.value(&trial, 0.0);
                let d2 = (&trial - &x).norm_squared();
                if ft.is_finite() && trial.iter().all(|c| c.is_finite()) && ft <= f - 1e-4 / alpha * d2 {
                    accepted = Some((trial, ft));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((trial, ft)) = accepted else {
                return (x, it);
            };
            let step = (&trial - &x).norm();
            x = trial;
            f = ft;
            if step < opts.step_tol * scale {
                return (x, it + 1);
            }
            alpha *= 2.0;
        }
        (x, opts.max_iters)
    }

    /// Newton on the KKT system with every vertex on its cylinder wall.
    fn kkt_polish(&self, x0: &DVector<f64>) -> Option<(DVector<f64>, Vec<f64>)> {
        let k = self.labels.len();
        let n = k * self.dim;
        let mut x = x0.clone();
        let g = self.problem.gradient(&x, 0.0);
        let mut mu: Vec<f64> = (0..k)
            .map(|i| {
                let c = self.perp(&x, i);
                -g.rows(i * self.dim, self.dim).dot(&c) / c.norm_squared()
            })
            .collect();
        let mut best = self.kkt_residual(&x, &mu);
        for _ in 0..50 {
            if best < 1e-14 * self.problem.scale().max(1.0) {
                break;
            }
            let g = self.problem.gradient(&x, 0.0);
            let h = self.problem.hessian(&x, 0.0);
            let mut jac = DMatrix::zeros(n + k, n + k);
            let mut rhs = DVector::zeros(n + k);
            jac.view_mut((0, 0), (n, n)).copy_from(&h);
            rhs.rows_mut(0, n).copy_from(&(-&g));
            for i in 0..k {
                let s = self.table.arr.subspace(self.labels[i]);
                let basis = s.basis();
                let perp_proj = DMatrix::identity(self.dim, self.dim) - basis * basis.transpose();
                let o = i * self.dim;
                let mut view = jac.view_mut((o, o), (self.dim, self.dim));
                view += &perp_proj * mu[i];
                let c = self.perp(&x, i);
                jac.view_mut((o, n + i), (self.dim, 1)).copy_from(&c);
                jac.view_mut((n + i, o), (1, self.dim)).copy_from(&c.transpose());
                let mut r = rhs.rows_mut(o, self.dim);
                r -= &c * mu[i];
                let rho = self.table.radius(self.labels[i]);
                rhs[n + i] = -0.5 * (c.norm_squared() - rho * rho);
            }
            let delta = jac.lu().solve(&rhs)?;
            x += delta.rows(0, n);
            for i in 0..k {
                mu[i] += delta[n + i];
            }
            let res = self.kkt_residual(&x, &mu);
            if !res.is_finite() {
                return None;
            }
            best = res;
        }
        Some((x, mu))
    }

    fn kkt_residual(&self, x: &DVector<f64>, mu: &[f64]) -> f64 {
        let mut g = self.problem.gradient(x, 0.0);
        let mut feas: f64 = 0.0;
        for (i, &m) in mu.iter().enumerate() {
            let c = self.perp(x, i);
            let mut rows = g.rows_mut(i * self.dim, self.dim);
            rows += &c * m;
            if m != 0.0 {
                feas = feas.max((c.norm() - self.table.radius(self.labels[i])).abs());
            }
        }
        let (gn, x_ok) = (g.norm(), x.iter().all(|c| c.is_finite()));
        // `f64::max` would drop a NaN operand.
        if gn.is_nan() || feas.is_nan() || !x_ok {
            return f64::INFINITY;
        }
        gn.max(feas)
    }
}

/// Minimizes `S_{A,B}` over `L₁^(r) × … × L_k^(r)` from the projected chord.
pub fn minimize_thickened(
    table: &ThickenedTable,
    itinerary: &Itinerary,
    a: &Point,
    b: &Point,
    opts: &ThickenedOptions,
) -> Result<ThickenedMinimum> {
    let k = itinerary.len();
    let start: Vec<Point> = (0..k)
        .map(|i| {
            let s = (i + 1) as f64 / (k + 1) as f64;
            a * (1.0 - s) + b * s
        })
        .collect();
    minimize_thickened_from(table, itinerary, a, b, &start, opts)
}

/// As [`minimize_thickened`], from given initial vertices (projected first).
pub fn minimize_thickened_from(
    table: &ThickenedTable,
    itinerary: &Itinerary,
    a: &Point,
    b: &Point,
    start: &[Point],
    opts: &ThickenedOptions,
) -> Result<ThickenedMinimum> {
    let arr = table.arrangement();
    itinerary.check_against(arr)?;
    if itinerary.is_empty() || start.len() != itinerary.len() {
        return Err(Error::input("one start vertex per itinerary entry is required"));
    }
    let dim = arr.dim();
    if a.len() != dim || b.len() != dim || start.iter().any(|q| q.len() != dim) {
        return Err(Error::input("point has wrong dimension"));
    }
    if let Some(l) = table.inside(a).or_else(|| table.inside(b)) {
        return Err(Error::precondition(format!("anchor inside the cylinder around {}", arr.subspace(l).name())));
    }
    let identity = DMatrix::identity(dim, dim);
    let k = itinerary.len();
    let cons = Constrained {
        problem: Problem::ambient(&identity, k, a, b),
        table,
        labels: itinerary.labels().to_vec(),
        dim,
    };
    let mut x0 = DVector::zeros(k * dim);
    for (i, q) in start.iter().enumerate() {
        x0.rows_mut(i * dim, dim).copy_from(q);
    }
    let x0 = cons.project(&x0);
    let (mut x, iterations) = cons.projected_gradient(x0, opts);

    let active: Vec<bool> = (0..k)
        .map(|i| cons.perp(&x, i).norm() >= table.radius(cons.labels[i]) * (1.0 - 1e-6))
        .collect();
    let mut multipliers = vec![0.0; k];
    if active.iter().all(|&a| a) {
        if let Some((xp, mu)) = cons.kkt_polish(&x) {
            let before = cons.kkt_residual(&x, &least_squares_mu(&cons, &x));
            if cons.kkt_residual(&xp, &mu) < before {
                x = xp;
                multipliers = mu;
            }
        }
        if multipliers.iter().all(|&m| m == 0.0) {
            multipliers = least_squares_mu(&cons, &x);
        }
    }
    let kkt_residual = cons.kkt_residual(&x, &multipliers);
    let chain: Vec<Point> = (0..k).map(|i| cons.vertex(&x, i)).collect();
    let value = cons.problem.value(&x, 0.0);
    let classification = classify_thickened(table, itinerary, a, &chain, b, &active, &multipliers, opts.coincidence_tol);
    Ok(ThickenedMinimum { chain, value, kkt_residual, classification, multipliers, active, iterations })
}

fn least_squares_mu(cons: &Constrained, x: &DVector<f64>) -> Vec<f64> {
    let g = cons.problem.gradient(x, 0.0);
    (0..cons.labels.len())
        .map(|i| {
            let c = cons.perp(x, i);
            -g.rows(i * cons.dim, cons.dim).dot(&c) / c.norm_squared()
        })
        .collect()
}

/// Smallest distance to `L` along `p + t d` for `t` in `[0, t_hi]`.
fn min_distance_along(s: &Subspace, p: &Point, d: &Point, t_hi: f64) -> f64 {
    let pp = s.perp(p);
    let dp = s.perp(d);
    let a = dp.norm_squared();
    let t = if a > 0.0 { (-pp.dot(&dp) / a).clamp(0.0, t_hi) } else { 0.0 };
    (&pp + &dp * t).norm()
}

#[allow(clippy::too_many_arguments)]
fn classify_thickened(
    table: &ThickenedTable,
    itinerary: &Itinerary,
    a: &Point,
    chain: &[Point],
    b: &Point,
    active: &[bool],
    multipliers: &[f64],
    coincidence_tol: f64,
) -> Classification {
    let scale = (a - b).norm().max(1e-300);
    let mut nodes: Vec<&Point> = vec![a];
    nodes.extend(chain.iter());
    nodes.push(b);
    if nodes.windows(2).any(|w| (w[1] - w[0]).norm() < coincidence_tol * scale) {
        return Classification::Ghost;
    }
    let mu_floor = 1e-9;
    if multipliers.iter().any(|m| !m.is_finite()) || chain.iter().any(|q| q.iter().any(|c| !c.is_finite())) {
        return Classification::Ghost;
    }
    if active.iter().any(|&x| !x) || multipliers.iter().any(|&m| m <= mu_floor) {
        return Classification::Ghost;
    }
    let dirs: Vec<Point> = nodes.windows(2).map(|w| (w[1] - w[0]).normalize()).collect();
    if dirs.windows(2).any(|w| (&w[1] - &w[0]).norm() <= TRANSVERSE_TOL) {
        return Classification::Ghost;
    }
    let arr = table.arrangement();
    let _ = itinerary;
    // Every leg and both rays must stay out of all open cylinders.
    let k = chain.len();
    for (s_idx, s) in arr.subspaces().iter().enumerate() {
        let floor = table.radius(s_idx) * (1.0 - 1e-7);
        for w in nodes.windows(2) {
            let d = w[1] - w[0];
            if min_distance_along(s, w[0], &d, 1.0) < floor {
                return Classification::NonGenericRay;
            }
        }
        let back = (a - &chain[0]).normalize();
        let out = (b - &chain[k - 1]).normalize();
        if min_distance_along(s, &chain[0], &back, f64::INFINITY) < floor
            || min_distance_along(s, &chain[k - 1], &out, f64::INFINITY) < floor
        {
            return Classification::NonGenericRay;
        }
    }
    Classification::ValidBilliard
}

/// Runs the simulator from `A` along the first leg of a thickened minimizer.
pub fn replay(table: &ThickenedTable, a: &Point, m: &ThickenedMinimum) -> Result<ThickenedPath> {
    let v = m.incoming_direction(a);
    let horizon = 10.0 * (m.value + 1.0);
    table.simulate(a, &v, m.chain.len() + 4, horizon)
}

#[derive(Clone, Debug)]
pub struct ThickenedMultiStart {
    pub reference: ThickenedMinimum,
    pub max_deviation: f64,
    pub failures: usize,
}

/// Random restarts of [`minimize_thickened`] compared with the chord start.
pub fn multistart_thickened(
    table: &ThickenedTable,
    itinerary: &Itinerary,
    a: &Point,
    b: &Point,
    opts: &ThickenedOptions,
) -> Result<ThickenedMultiStart> {
    let reference = minimize_thickened(table, itinerary, a, b, opts)?;
    let radius = opts.multistart_radius * (a - b).norm();
    let dim = table.arrangement().dim();
    let results: Vec<Result<ThickenedMinimum>> = (0..opts.n_multistart)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(i as u64));
            let start: Vec<Point> = (0..itinerary.len())
                .map(|_| DVector::from_fn(dim, |_, _| rng.gen_range(-radius..radius)))
                .collect();
            minimize_thickened_from(table, itinerary, a, b, &start, opts)
        })
        .collect();
    let mut max_deviation: f64 = 0.0;
    let mut failures = 0;
    for r in results {
        match r {
            Ok(m) => {
                let dev = m.chain.iter().zip(&reference.chain).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
                max_deviation = max_deviation.max(dev);
            }
            Err(_) => failures += 1,
        }
    }
    Ok(ThickenedMultiStart { reference, max_deviation, failures })
}

/// Replaces each vertex in turn by the point of its cylinder wall on the
/// inner angle bisector of the triangle `(q_{i−1}, q_i, q_{i+1})`, using the
/// already replaced predecessor. Returns the new chain and the `k + 1` path
/// lengths (initial, then after each replacement).
pub fn curve_shorten(table: &ThickenedTable, itinerary: &Itinerary, a: &Point, chain: &[Point], b: &Point) -> Result<(Vec<Point>, Vec<f64>)> {
    let arr = table.arrangement();
    itinerary.check_against(arr)?;
    if chain.len() != itinerary.len() {
        return Err(Error::input("chain length differs from itinerary"));
    }
    let mut q: Vec<Point> = chain.to_vec();
    let mut lengths = vec![generating::action(a, &q, b)];
    let k = q.len();
    for i in 0..k {
        let l = itinerary.labels()[i];
        let s = arr.subspace(l);
        let rho = table.radius(l);
        let prev = if i == 0 { a.clone() } else { q[i - 1].clone() };
        let next = if i + 1 == k { b.clone() } else { q[i + 1].clone() };
        for (name, nb) in [("previous", &prev), ("next", &next)] {
            if s.perp(nb).norm() <= rho {
                return Err(Error::precondition(format!("{name} neighbour of vertex {} lies in its cylinder; r too large", i + 1)));
            }
        }
        let (dp, dn) = (&prev - &q[i], &next - &q[i]);
        let (np, nn) = (dp.norm(), dn.norm());
        if np == 0.0 || nn == 0.0 {
            return Err(Error::precondition(format!("vertex {} coincides with a neighbour", i + 1)));
        }
        let bisector = &dp / np + &dn / nn;
        if bisector.norm() <= TRANSVERSE_TOL {
            return Err(Error::precondition(format!("vertex {} is internal (no direction change)", i + 1)));
        }
        let off = s.perp(&bisector).norm();
        if off <= 1e-14 * bisector.norm() {
            return Err(Error::precondition(format!("bisector at vertex {} lies in its subspace", i + 1)));
        }
        let t = (rho - s.perp(&q[i]).norm()).max(0.0) / off;
        // Barycentric weights of the new point along the two triangle sides.
        let (wp, wn) = (t / np, t / nn);
        if wp + wn >= 1.0 {
            return Err(Error::precondition(format!("replacement for vertex {} leaves the triangle; r too large", i + 1)));
        }
        q[i] = &q[i] + bisector * t;
        lengths.push(generating::action(a, &q, b));
    }
    Ok((q, lengths))
}

#[derive(Clone, Debug)]
pub struct RFamilyEntry {
    pub r: f64,
    pub result: std::result::Result<ThickenedMinimum, String>,
    /// `max_i |q_i^(r) − q_i|` against the point billiard.
    pub deviation: Option<f64>,
    /// Replayed event labels equal the itinerary.
    pub itinerary_match: bool,
}

/// Thickened minimizers of a transverse point billiard for each radius.
pub fn r_family(
    arr: &Arrangement,
    itinerary: &Itinerary,
    a: &Point,
    b: &Point,
    r_list: &[f64],
    solver: &SolverOptions,
    opts: &ThickenedOptions,
) -> Result<Vec<RFamilyEntry>> {
    let point = generating::minimize(arr, itinerary, a, b, solver)?;
    let traj = point
        .trajectory
        .as_ref()
        .ok_or_else(|| Error::precondition(format!("point solution is {}, not a valid billiard", point.classification)))?;
    if !traj.is_transverse(TRANSVERSE_TOL) {
        return Err(Error::precondition("point billiard has an internal vertex"));
    }
    let base = traj.chain().to_vec();
    let entries = r_list
        .par_iter()
        .map(|&r| {
            let table = match ThickenedTable::new(arr.clone(), r) {
                Ok(t) => t,
                Err(e) => return RFamilyEntry { r, result: Err(e.to_string()), deviation: None, itinerary_match: false },
            };
            match minimize_thickened_from(&table, itinerary, a, b, &base, opts) {
                Ok(m) => {
                    let deviation = m.chain.iter().zip(&base).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
                    let itinerary_match = m.is_honest()
                        && replay(&table, a, &m).map(|p| p.labels() == itinerary.labels()).unwrap_or(false);
                    RFamilyEntry { r, result: Ok(m), deviation: Some(deviation), itinerary_match }
                }
                Err(e) => RFamilyEntry { r, result: Err(e.to_string()), deviation: None, itinerary_match: false },
            }
        })
        .collect();
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::SQRT_2;

    fn v(x: &[f64]) -> Point {
        DVector::from_column_slice(x)
    }

    fn mirror_table(r: f64) -> (ThickenedTable, Itinerary, Point, Point) {
        let (arr, it, a, b) = fixtures::mirror();
        (ThickenedTable::new(arr, r).unwrap(), it, a, b)
    }

    #[test]
    fn first_hit_examples() {
        let (t, _, _, _) = mirror_table(0.1);
        let h = t.first_hit(&v(&[0.0, 1.0]), &(v(&[1.0, -1.0]) / SQRT_2)).unwrap().unwrap();
        assert!((h.t - 0.9 * SQRT_2).abs() < 1e-14);
        assert!((&h.point - v(&[0.9, 0.1])).norm() < 1e-14);
        assert!((&h.normal - v(&[0.0, 1.0])).norm() < 1e-14);
        assert!(t.first_hit(&v(&[0.0, 1.0]), &v(&[1.0, 0.0])).unwrap().is_none());
        // Tangent to the wall y = 0.1 from outside: y stays at its start value.
        assert!(t.first_hit(&v(&[0.0, 0.1]), &v(&[1.0, 0.0])).unwrap().is_none());
        assert!(matches!(t.first_hit(&v(&[0.0, 0.05]), &v(&[1.0, 0.0])), Err(Error::Precondition(_))));
    }

    #[test]
    fn grazing_codim_two_cylinder_is_a_miss() {
        let arr = Arrangement::new(3, vec![Subspace::from_slices("z", 3, &[&[0.0, 0.0, 1.0]]).unwrap()]).unwrap();
        let t = ThickenedTable::new(arr, 0.5).unwrap();
        let hit = t.first_hit(&v(&[-2.0, 0.5, 0.0]), &v(&[1.0, 0.0, 0.0])).unwrap();
        assert!(hit.is_none());
    }

    #[test]
    fn single_bounce_is_specular() {
        let (t, _, _, _) = mirror_table(0.1);
        let path = t.simulate(&v(&[0.0, 1.0]), &(v(&[1.0, -1.0]) / SQRT_2), 10, 100.0).unwrap();
        assert_eq!(path.labels(), vec![0]);
        let e = &path.events[0];
        assert!((&e.v_after - v(&[1.0, 1.0]) / SQRT_2).norm() < 1e-15);
        assert_eq!(path.termination, Termination::Escaped);
    }

    #[test]
    fn corner_collision_reported() {
        let arr = fixtures::star_lines(2);
        let t = ThickenedTable::new(arr, 0.1).unwrap();
        // Aimed at the corner where both strips meet at (0.1, 0.1).
        let p = v(&[1.1, 1.1]);
        let d = v(&[-1.0, -1.0]) / SQRT_2;
        match t.simulate(&p, &d, 10, 100.0) {
            Err(Error::CornerCollision { partial, .. }) => assert!(partial.events.is_empty()),
            other => panic!("expected a corner collision, got {other:?}"),
        }
    }

    #[test]
    fn thickened_mirror_minimizer() {
        let (t, it, a, b) = mirror_table(0.1);
        let m = minimize_thickened(&t, &it, &a, &b, &ThickenedOptions::default()).unwrap();
        assert!(m.is_honest(), "{:?}", m.classification);
        assert!((&m.chain[0] - v(&[1.0, 0.1])).norm() < 1e-10);
        assert!(m.multipliers[0] > 0.0);
        let path = replay(&t, &a, &m).unwrap();
        assert_eq!(path.labels(), vec![0]);
        assert!((&path.events[0].point - &m.chain[0]).norm() < 1e-10);
    }

    #[test]
    fn chord_through_cylinder_is_ghost() {
        let (arr, it, _, _) = fixtures::mirror();
        let t = ThickenedTable::new(arr, 0.1).unwrap();
        let (a, b) = (v(&[-1.0, 0.15]), v(&[1.0, -0.15]));
        let m = minimize_thickened(&t, &it, &a, &b, &ThickenedOptions::default()).unwrap();
        assert_eq!(m.classification, Classification::Ghost);
        let q = &m.chain[0];
        // The vertex sits on the chord.
        assert!(((q[1] + 0.15 * q[0]).abs()) < 1e-8, "{q}");
    }

    #[test]
    fn curve_shortening_decreases() {
        let (t, it, a, b) = mirror_table(0.1);
        let (q, lengths) = curve_shorten(&t, &it, &a, &[v(&[1.0, 0.0])], &b).unwrap();
        assert!(lengths[1] < lengths[0]);
        assert!((q[0][1] - 0.1).abs() < 1e-15);
        let straight = Subspace::from_slices("z", 3, &[&[0.0, 0.0, 1.0]]).unwrap();
        let t3 = ThickenedTable::new(Arrangement::new(3, vec![straight]).unwrap(), 0.1).unwrap();
        let r = curve_shorten(&t3, &it, &v(&[-1.0, 0.0, 0.0]), &[v(&[0.0, 0.0, 0.0])], &v(&[1.0, 0.0, 0.0]));
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn mirror_r_family_deviation_is_rho() {
        let (arr, it, a, b) = fixtures::mirror();
        let rs = [1e-1, 1e-2];
        let fam = r_family(&arr, &it, &a, &b, &rs, &SolverOptions::default(), &ThickenedOptions::default()).unwrap();
        for e in fam {
            assert!((e.deviation.unwrap() - e.r).abs() < 1e-9, "{:?}", e.deviation);
            assert!(e.itinerary_match);
        }
    }

    #[test]
    fn merged_vertices_are_ghosts_not_nan() {
        let table = ThickenedTable::new(fixtures::star_lines(3), 0.05).unwrap();
        let a = DVector::from_vec(vec![0.6226367953308016, -1.406399059679638]);
        let b = DVector::from_vec(vec![-0.1755377198420005, -1.6628137860169354]);
        let it = Itinerary::new(vec![2, 0, 1]).unwrap();
        let m = minimize_thickened(&table, &it, &a, &b, &ThickenedOptions::default()).unwrap();
        assert!(m.chain.iter().all(|q| q.iter().all(|c| c.is_finite())));
        assert_eq!(m.classification, Classification::Ghost);
    }
}