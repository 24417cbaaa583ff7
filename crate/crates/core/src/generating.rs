//! The path-length generating family `S(A, λ, B)` over `Λ = L₁ × … × L_k`:
//! value, gradient and block Hessian in intrinsic chain coordinates, the
//! damped Newton minimizer, multi-start verification and classification of
//! the minimizer.
//!
//! Chain coordinates are the stacked vectors `c_i = B_iᵀ q_i`, so the
//! constraint `q_i ∈ L_i` holds by construction.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrangement::{Arrangement, Itinerary, Point, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::trajectory::{interior_edge_collisions, is_generic, BilliardTrajectory};

/// Relative gap `r_{i,i+1} / |A − B|` below which a chain is non-smooth.
pub const COINCIDENCE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Gradient tolerance relative to `max(1, S)`.
    pub grad_tol: f64,
    /// Relative gap below which the minimizer is declared a ghost.
    pub coincidence_tol: f64,
    /// Relative gap below which Newton hands over to the smoothed fallback.
    pub switch_tol: f64,
    pub n_multistart: usize,
    /// Multi-start coordinates are drawn in a ball of this many `|A − B|`.
    pub multistart_radius: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 200,
            grad_tol: 1e-10,
            coincidence_tol: COINCIDENCE_TOL,
            switch_tol: 1e-6,
            n_multistart: 100,
            multistart_radius: 10.0,
            seed: 0,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        let positive = [self.grad_tol, self.coincidence_tol, self.switch_tol, self.multistart_radius];
        if self.max_iters == 0 || positive.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::input("solver options must be positive"));
        }
        Ok(())
    }
}

/// A point of `Λ` together with its intrinsic coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    itinerary: Itinerary,
    coords: Vec<DVector<f64>>,
    points: Vec<Point>,
}

impl Chain {
    pub fn from_coords(arr: &Arrangement, itinerary: &Itinerary, coords: Vec<DVector<f64>>) -> Result<Self> {
        itinerary.check_against(arr)?;
        if coords.len() != itinerary.len() {
            return Err(Error::input("one coordinate block per itinerary entry is required"));
        }
        let mut points = Vec::with_capacity(coords.len());
        for (c, &l) in coords.iter().zip(itinerary.labels()) {
            let s = arr.subspace(l);
            if c.len() != s.dim() {
                return Err(Error::input(format!("block for {} has length {}, expected {}", s.name(), c.len(), s.dim())));
            }
            points.push(s.lift(c));
        }
        Ok(Chain { itinerary: itinerary.clone(), coords, points })
    }

    /// Chain through the projections of `points` onto the labelled subspaces.
    pub fn from_points(arr: &Arrangement, itinerary: &Itinerary, points: &[Point]) -> Result<Self> {
        itinerary.check_against(arr)?;
        if points.len() != itinerary.len() {
            return Err(Error::input("one point per itinerary entry is required"));
        }
        let coords = points
            .iter()
            .zip(itinerary.labels())
            .map(|(p, &l)| {
                if p.len() != arr.dim() {
                    return Err(Error::input("chain point has wrong dimension"));
                }
                Ok(arr.subspace(l).coords(p))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_coords(arr, itinerary, coords)
    }

    pub fn from_flat(arr: &Arrangement, itinerary: &Itinerary, x: &DVector<f64>) -> Result<Self> {
        let dims: Vec<usize> = itinerary.labels().iter().map(|&l| arr.subspace(l).dim()).collect();
        if x.len() != dims.iter().sum::<usize>() {
            return Err(Error::input("flat coordinate vector has wrong length"));
        }
        let mut at = 0;
        let coords = dims
            .iter()
            .map(|&d| {
                let c = x.rows(at, d).into_owned();
                at += d;
                c
            })
            .collect();
        Self::from_coords(arr, itinerary, coords)
    }

    pub fn itinerary(&self) -> &Itinerary {
        &self.itinerary
    }

    pub fn coords(&self) -> &[DVector<f64>] {
        &self.coords
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }

    pub fn flat(&self) -> DVector<f64> {
        let n = self.coords.iter().map(|c| c.len()).sum();
        let mut x = DVector::zeros(n);
        let mut at = 0;
        for c in &self.coords {
            x.rows_mut(at, c.len()).copy_from(c);
            at += c.len();
        }
        x
    }

    /// Largest vertex distance to another chain of the same itinerary.
    pub fn distance(&self, other: &Chain) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max)
    }

    /// Chain scaled by `lambda` (each `L_i` is a linear subspace).
    pub fn scaled(&self, lambda: f64) -> Chain {
        Chain {
            itinerary: self.itinerary.clone(),
            coords: self.coords.iter().map(|c| c * lambda).collect(),
            points: self.points.iter().map(|p| p * lambda).collect(),
        }
    }
}

/// `S = |A − q₁| + Σ |q_i − q_{i+1}| + |q_k − B|`.
pub fn action(a: &Point, chain: &[Point], b: &Point) -> f64 {
    let mut prev = a;
    let mut total = 0.0;
    for q in chain.iter().chain(std::iter::once(b)) {
        total += (q - prev).norm();
        prev = q;
    }
    total
}

/// Objective in flat chain coordinates for one `(A, itinerary, B)`.
///
/// Every quantity takes a smoothing parameter `eps`: each leg length `r` is
/// replaced by `√(r² + eps²)`; `eps = 0` is the exact action.
pub(crate) struct Problem<'a> {
    bases: Vec<&'a DMatrix<f64>>,
    offsets: Vec<usize>,
    n: usize,
    a: Point,
    b: Point,
    scale: f64,
}

impl<'a> Problem<'a> {
    pub(crate) fn new(arr: &'a Arrangement, itinerary: &Itinerary, a: &Point, b: &Point) -> Result<Self> {
        itinerary.check_against(arr)?;
        if a.len() != arr.dim() || b.len() != arr.dim() {
            return Err(Error::input("anchor has wrong dimension"));
        }
        let bases: Vec<&DMatrix<f64>> = itinerary.labels().iter().map(|&l| arr.subspace(l).basis()).collect();
        let mut offsets = Vec::with_capacity(bases.len());
        let mut n = 0;
        for bm in &bases {
            offsets.push(n);
            n += bm.ncols();
        }
        let d = (a - b).norm();
        let scale = if d > 0.0 { d } else { 1.0 };
        Ok(Problem { bases, offsets, n, a: a.clone(), b: b.clone(), scale })
    }

    /// Unconstrained vertices in `E`: every block uses the identity basis.
    pub(crate) fn ambient(identity: &'a DMatrix<f64>, k: usize, a: &Point, b: &Point) -> Self {
        let d = identity.ncols();
        let dist = (a - b).norm();
        Problem {
            bases: vec![identity; k],
            offsets: (0..k).map(|i| i * d).collect(),
            n: k * d,
            a: a.clone(),
            b: b.clone(),
            scale: if dist > 0.0 { dist } else { 1.0 },
        }
    }

    pub(crate) fn scale(&self) -> f64 {
        self.scale
    }

    fn k(&self) -> usize {
        self.bases.len()
    }

    /// `q_0 = A, q_1 … q_k, q_{k+1} = B`.
    pub(crate) fn nodes(&self, x: &DVector<f64>) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.k() + 2);
        out.push(self.a.clone());
        for (bm, &o) in self.bases.iter().zip(&self.offsets) {
            let c = x.rows(o, bm.ncols());
            if bm.ncols() == 0 {
                out.push(DVector::zeros(self.a.len()));
            } else {
                out.push(*bm * c);
            }
        }
        out.push(self.b.clone());
        out
    }

    pub(crate) fn gaps(&self, x: &DVector<f64>) -> Vec<f64> {
        self.nodes(x).windows(2).map(|w| (&w[1] - &w[0]).norm()).collect()
    }

    pub(crate) fn value(&self, x: &DVector<f64>, eps: f64) -> f64 {
        self.nodes(x)
            .windows(2)
            .map(|w| {
                let r2 = (&w[1] - &w[0]).norm_squared();
                if eps == 0.0 {
                    r2.sqrt()
                } else {
                    (r2 + eps * eps).sqrt()
                }
            })
            .sum()
    }

    fn add_block(&self, g: &mut DVector<f64>, node: usize, v: &Point, sign: f64) {
        if node == 0 || node > self.k() {
            return;
        }
        let bm = self.bases[node - 1];
        let o = self.offsets[node - 1];
        let c = bm.tr_mul(v);
        let mut rows = g.rows_mut(o, bm.ncols());
        rows.axpy(sign, &c, 1.0);
    }

    pub(crate) fn gradient(&self, x: &DVector<f64>, eps: f64) -> DVector<f64> {
        let nodes = self.nodes(x);
        let mut g = DVector::zeros(self.n);
        for e in 0..=self.k() {
            let y = &nodes[e + 1] - &nodes[e];
            let rho = (y.norm_squared() + eps * eps).sqrt();
            if rho == 0.0 {
                continue;
            }
            let u = y / rho;
            self.add_block(&mut g, e + 1, &u, 1.0);
            self.add_block(&mut g, e, &u, -1.0);
        }
        g
    }

    pub(crate) fn hessian(&self, x: &DVector<f64>, eps: f64) -> DMatrix<f64> {
        let nodes = self.nodes(x);
        let dim = self.a.len();
        let mut h = DMatrix::zeros(self.n, self.n);
        for e in 0..=self.k() {
            let y = &nodes[e + 1] - &nodes[e];
            let rho2 = y.norm_squared() + eps * eps;
            if rho2 == 0.0 {
                continue;
            }
            let rho = rho2.sqrt();
            let kmat = (DMatrix::identity(dim, dim) - &y * y.transpose() / rho2) / rho;
            let ends = [e, e + 1];
            for &i in &ends {
                for &j in &ends {
                    if i == 0 || j == 0 || i > self.k() || j > self.k() {
                        continue;
                    }
                    let (bi, bj) = (self.bases[i - 1], self.bases[j - 1]);
                    if bi.ncols() == 0 || bj.ncols() == 0 {
                        continue;
                    }
                    let block = bi.tr_mul(&(&kmat * bj));
                    let sign = if i == j { 1.0 } else { -1.0 };
                    let mut view = h.view_mut((self.offsets[i - 1], self.offsets[j - 1]), (bi.ncols(), bj.ncols()));
                    view += block * sign;
                }
            }
        }
        h
    }

    /// Straight chord from `A` to `B`, each sample projected onto its subspace.
    pub(crate) fn chord_start(&self) -> DVector<f64> {
        let k = self.k();
        let mut x = DVector::zeros(self.n);
        for (i, (bm, &o)) in self.bases.iter().zip(&self.offsets).enumerate() {
            let s = (i + 1) as f64 / (k + 1) as f64;
            let p = &self.a * (1.0 - s) + &self.b * s;
            x.rows_mut(o, bm.ncols()).copy_from(&bm.tr_mul(&p));
        }
        x
    }

    fn check_smooth(&self, x: &DVector<f64>, tol: f64) -> Result<()> {
        match self.gaps(x).iter().position(|&r| r < tol * self.scale) {
            Some(e) => Err(Error::NonSmoothPoint(e, e + 1)),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stop {
    Converged,
    /// Line search could not decrease `S` further at a small gradient.
    Stagnated,
    /// Line search failed away from a critical point.
    Stuck,
    NearCoincidence,
    MaxIters,
}

struct NewtonRun {
    x: DVector<f64>,
    iterations: usize,
    grad_norm: f64,
    stop: Stop,
}

/// Cholesky solve of `h p = −g`, shifting the diagonal until it succeeds.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let n = h.nrows();
    let diag_scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut shift = 0.0;
    for _ in 0..60 {
        let shifted = h + DMatrix::identity(n, n) * shift;
        if let Some(ch) = shifted.cholesky() {
            return -ch.solve(g);
        }
        shift = if shift == 0.0 { 1e-12 * diag_scale } else { shift * 10.0 };
    }
    -g.clone()
}

fn newton(p: &Problem, x0: DVector<f64>, eps: f64, grad_tol: f64, max_iters: usize, switch_tol: Option<f64>) -> NewtonRun {
    let mut x = x0;
    let mut f = p.value(&x, eps);
    let mut grad_norm = f64::INFINITY;
    for it in 0..max_iters {
        if let Some(tol) = switch_tol {
            if p.gaps(&x).iter().any(|&r| r < tol * p.scale) {
                return NewtonRun { x, iterations: it, grad_norm, stop: Stop::NearCoincidence };
            }
        }
        let g = p.gradient(&x, eps);
        grad_norm = g.norm();
        let h = p.hessian(&x, eps);
        let dir = newton_direction(&h, &g);
        let small_grad = grad_norm < grad_tol * f.max(1.0);
        if small_grad && dir.norm() < 1e-12 * p.scale {
            x += &dir;
            return NewtonRun { x, iterations: it + 1, grad_norm, stop: Stop::Converged };
        }
        let slope = g.dot(&dir);
        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1e-12 {
            let trial = &x + &dir * t;
            let ft = p.value(&trial, eps);
            if ft <= f + 1e-4 * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            // Below the rounding level of S, fall back to gradient decrease for the full step.
            if t == 1.0
                && (ft - f).abs() <= 8.0 * f64::EPSILON * f.abs().max(1.0)
                && p.gradient(&trial, eps).norm() < grad_norm
            {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, ft)) => {
                let step = (&trial - &x).norm();
                x = trial;
                f = ft;
                if small_grad && step < 1e-12 * p.scale {
                    return NewtonRun { x, iterations: it + 1, grad_norm, stop: Stop::Converged };
                }
            }
            None => {
                // At the rounding floor of S no further decrease is measurable.
                let floor = grad_norm < 1e-7 * f.max(1.0);
                let stop = if floor { Stop::Stagnated } else { Stop::Stuck };
                return NewtonRun { x, iterations: it + 1, grad_norm, stop };
            }
        }
    }
    NewtonRun { x, iterations: max_iters, grad_norm, stop: Stop::MaxIters }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    ValidBilliard,
    /// Two consecutive vertices coincide.
    Ghost,
    /// Some edge lies in a collision subspace at one of its ends.
    EdgeInSubspace,
    /// A vertex on a neighbouring subspace, an anchor on the locus, or an
    /// unlabelled collision along an edge or ray.
    NonGenericRay,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::ValidBilliard => "valid",
            Classification::Ghost => "ghost",
            Classification::EdgeInSubspace => "edge_in_subspace",
            Classification::NonGenericRay => "non_generic_ray",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub chain: Chain,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub classification: Classification,
    pub trajectory: Option<BilliardTrajectory>,
    /// Smallest eigenvalue of `M` when the minimizer is a smooth point.
    pub hessian_min_eig: Option<f64>,
    /// Whether the smoothed fallback was needed.
    pub used_fallback: bool,
}

impl MinimizeResult {
    pub fn is_valid(&self) -> bool {
        self.classification == Classification::ValidBilliard
    }
}

/// Minimizes `S_{A,B}` over `Λ` from the projected chord.
pub fn minimize(arr: &Arrangement, itinerary: &Itinerary, a: &Point, b: &Point, opts: &SolverOptions) -> Result<MinimizeResult> {
    let p = Problem::new(arr, itinerary, a, b)?;
    let x0 = p.chord_start();
    minimize_problem(arr, itinerary, &p, x0, opts)
}

/// Minimizes from a caller-supplied initial chain.
pub fn minimize_from(
    arr: &Arrangement,
    a: &Point,
    start: &Chain,
    b: &Point,
    opts: &SolverOptions,
) -> Result<MinimizeResult> {
    let p = Problem::new(arr, start.itinerary(), a, b)?;
    minimize_problem(arr, start.itinerary(), &p, start.flat(), opts)
}

fn minimize_problem(
    arr: &Arrangement,
    itinerary: &Itinerary,
    p: &Problem,
    x0: DVector<f64>,
    opts: &SolverOptions,
) -> Result<MinimizeResult> {
    opts.validate()?;
    let anchor_tol = MEMBERSHIP_TOL * p.a.norm().max(p.b.norm()).max(1.0);
    if arr.on_collision_locus(&p.a, anchor_tol) || arr.on_collision_locus(&p.b, anchor_tol) {
        return Err(Error::precondition("anchors must lie off the collision locus"));
    }
    if (&p.a - &p.b).norm() == 0.0 {
        return Err(Error::precondition("anchors coincide"));
    }

    let mut used_fallback = false;
    let run = newton(p, x0, 0.0, opts.grad_tol, opts.max_iters, Some(opts.switch_tol));
    let (x, iterations, grad_norm) = match run.stop {
        Stop::Converged | Stop::Stagnated => (run.x, run.iterations, run.grad_norm),
        Stop::MaxIters => {
            return Err(Error::MaxIterations { iterations: run.iterations, grad_norm: run.grad_norm });
        }
        Stop::NearCoincidence | Stop::Stuck => {
            used_fallback = true;
            let mut total = run.iterations;
            let mut x = run.x;
            let mut eps = 1e-2 * p.scale;
            while eps > 1e-13 * p.scale {
                let stage = newton(p, x, eps, opts.grad_tol, opts.max_iters, None);
                total += stage.iterations;
                x = stage.x;
                eps *= 0.1;
            }
            let gaps = p.gaps(&x);
            let mut grad_norm = f64::NAN;
            if gaps.iter().all(|&r| r >= opts.switch_tol * p.scale) {
                let polish = newton(p, x.clone(), 0.0, opts.grad_tol, opts.max_iters, None);
                total += polish.iterations;
                if matches!(polish.stop, Stop::Converged | Stop::Stagnated) {
                    x = polish.x;
                    grad_norm = polish.grad_norm;
                }
            }
            if grad_norm.is_nan() && gaps.iter().all(|&r| r > 0.0) {
                grad_norm = p.gradient(&x, 0.0).norm();
            }
            (x, total, grad_norm)
        }
    };

    let chain = Chain::from_flat(arr, itinerary, &x)?;
    let value = p.value(&x, 0.0);
    let classification = classify(arr, &p.a, &chain, &p.b, p.scale, opts.coincidence_tol);
    let smooth = p.check_smooth(&x, opts.coincidence_tol).is_ok();
    let hessian_min_eig = if smooth && p.n > 0 {
        HessianModel::from_problem(p, &x).ok().and_then(|h| h.min_eigenvalue())
    } else {
        None
    };
    let trajectory = if classification == Classification::ValidBilliard {
        Some(BilliardTrajectory::new(arr, itinerary.clone(), p.a.clone(), chain.points().to_vec(), p.b.clone())?)
    } else {
        None
    };
    Ok(MinimizeResult { chain, value, grad_norm, iterations, classification, trajectory, hessian_min_eig, used_fallback })
}

/// Ghost, then edge-in-subspace, then genericity.
pub fn classify(arr: &Arrangement, a: &Point, chain: &Chain, b: &Point, scale: f64, coincidence_tol: f64) -> Classification {
    let pts = chain.points();
    let mut nodes: Vec<&Point> = vec![a];
    nodes.extend(pts.iter());
    nodes.push(b);
    if nodes.windows(2).any(|w| (w[1] - w[0]).norm() < coincidence_tol * scale) {
        return Classification::Ghost;
    }
    let labels = chain.itinerary().labels();
    for (e, w) in nodes.windows(2).enumerate() {
        let n = (w[1] - w[0]).normalize();
        let ends = [e.checked_sub(1), (e < labels.len()).then_some(e)];
        if ends.into_iter().flatten().any(|i| arr.subspace(labels[i]).perp(&n).norm() <= MEMBERSHIP_TOL) {
            return Classification::EdgeInSubspace;
        }
    }
    let tol = MEMBERSHIP_TOL * scale;
    if !is_generic(arr, chain.itinerary(), a, pts, b, tol) || !interior_edge_collisions(arr, a, pts, b, tol).is_empty() {
        return Classification::NonGenericRay;
    }
    Classification::ValidBilliard
}

/// Analytic gradient, one block `B_iᵀ (n(q_i, q_{i−1}) − n(q_{i+1}, q_i))` per vertex.
pub fn gradient(arr: &Arrangement, a: &Point, chain: &Chain, b: &Point) -> Result<Vec<DVector<f64>>> {
    let p = Problem::new(arr, chain.itinerary(), a, b)?;
    let x = chain.flat();
    p.check_smooth(&x, COINCIDENCE_TOL)?;
    let g = p.gradient(&x, 0.0);
    Ok(p.offsets.iter().zip(&p.bases).map(|(&o, bm)| g.rows(o, bm.ncols()).into_owned()).collect())
}

/// Flattened analytic gradient.
pub fn gradient_flat(arr: &Arrangement, a: &Point, chain: &Chain, b: &Point) -> Result<DVector<f64>> {
    let blocks = gradient(arr, a, chain, b)?;
    Ok(DVector::from_iterator(blocks.iter().map(|c| c.len()).sum(), blocks.iter().flat_map(|c| c.iter().cloned())))
}

/// Second-order structure of `S` at a smooth chain.
#[derive(Clone, Debug)]
pub struct HessianModel {
    /// `β_i = 1/r_{i−1,i} + 1/r_{i,i+1}`.
    pub betas: Vec<f64>,
    /// Leg lengths `r_{i,i+1}`, `i = 0..=k`.
    pub gaps: Vec<f64>,
    /// `n_{i,i+1}`, `i = 0..=k`.
    pub unit_edges: Vec<Point>,
    /// `π_i(n_{i−1,i})` and `π_i(n_{i,i+1})`; equal at critical points.
    pub a_in: Vec<Point>,
    pub a_out: Vec<Point>,
    /// Gram matrices of the norms `‖·‖_i` in intrinsic coordinates, taken as
    /// the diagonal Hessian block divided by `β_i`. At a critical point this
    /// is `I − a_i a_iᵀ`.
    pub norms: Vec<DMatrix<f64>>,
    /// The Hessian quadratic form in chain coordinates.
    pub quadratic_form: DMatrix<f64>,
    offsets: Vec<usize>,
    dims: Vec<usize>,
}

impl HessianModel {
    fn from_problem(p: &Problem, x: &DVector<f64>) -> Result<Self> {
        p.check_smooth(x, COINCIDENCE_TOL)?;
        let nodes = p.nodes(x);
        let k = p.k();
        let gaps: Vec<f64> = nodes.windows(2).map(|w| (&w[1] - &w[0]).norm()).collect();
        let unit_edges: Vec<Point> = nodes.windows(2).zip(&gaps).map(|(w, r)| (&w[1] - &w[0]) / *r).collect();
        let betas: Vec<f64> = (0..k).map(|i| 1.0 / gaps[i] + 1.0 / gaps[i + 1]).collect();
        let proj = |i: usize, v: &Point| -> Point {
            let bm = p.bases[i];
            if bm.ncols() == 0 {
                DVector::zeros(v.len())
            } else {
                bm * bm.tr_mul(v)
            }
        };
        let a_in = (0..k).map(|i| proj(i, &unit_edges[i])).collect();
        let a_out = (0..k).map(|i| proj(i, &unit_edges[i + 1])).collect();
        let quadratic_form = p.hessian(x, 0.0);
        let dims: Vec<usize> = p.bases.iter().map(|b| b.ncols()).collect();
        let norms = (0..k)
            .map(|i| quadratic_form.view((p.offsets[i], p.offsets[i]), (dims[i], dims[i])) / betas[i])
            .collect();
        Ok(HessianModel { betas, gaps, unit_edges, a_in, a_out, norms, quadratic_form, offsets: p.offsets.clone(), dims })
    }

    pub fn k(&self) -> usize {
        self.betas.len()
    }

    fn block(&self, m: &DMatrix<f64>, i: usize, j: usize) -> DMatrix<f64> {
        m.view((self.offsets[i], self.offsets[j]), (self.dims[i], self.dims[j])).into_owned()
    }

    /// Block-diagonal Gram matrix `G` of the product inner product `⟨·,·⟩_*`.
    fn gram(&self) -> DMatrix<f64> {
        let n = self.quadratic_form.nrows();
        let mut g = DMatrix::zeros(n, n);
        for (i, gi) in self.norms.iter().enumerate() {
            g.view_mut((self.offsets[i], self.offsets[i]), (self.dims[i], self.dims[i])).copy_from(gi);
        }
        g
    }

    /// `M = G⁻¹ H`, the Hessian as an operator symmetric for `⟨·,·⟩_*`.
    pub fn m(&self) -> Result<DMatrix<f64>> {
        let n = self.quadratic_form.nrows();
        if n == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        let ch = self
            .gram()
            .cholesky()
            .ok_or_else(|| Error::precondition("norm forms are not positive definite"))?;
        Ok(ch.solve(&self.quadratic_form))
    }

    /// Off-diagonal operators `S_ij : L_j → L_i` for `|i − j| = 1` (0-based),
    /// defined by `(1/r_ij) ⟨ξ, S_ij ζ⟩_i = −H_ij(ξ, ζ)`.
    pub fn offdiag(&self, i: usize, j: usize) -> Result<DMatrix<f64>> {
        if i.abs_diff(j) != 1 || i.max(j) >= self.k() {
            return Err(Error::input(format!("no off-diagonal block ({i}, {j})")));
        }
        let r = self.gaps[i.max(j)];
        let gi = self.norms[i]
            .clone()
            .cholesky()
            .ok_or_else(|| Error::precondition("norm form is not positive definite"))?;
        Ok(gi.solve(&(-self.block(&self.quadratic_form, i, j) * r)))
    }

    /// Operator norms of every `S_ij` relative to `‖·‖_j` and `‖·‖_i`.
    pub fn offdiag_norms(&self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for i in 0..self.k() {
            for j in [i.wrapping_sub(1), i + 1] {
                if j >= self.k() || self.dims[i] == 0 || self.dims[j] == 0 {
                    continue;
                }
                let li = self.norms[i].clone().cholesky().ok_or_else(|| Error::precondition("singular norm"))?;
                let lj = self.norms[j].clone().cholesky().ok_or_else(|| Error::precondition("singular norm"))?;
                let s = self.offdiag(i, j)?;
                // ‖S‖ = ‖L_iᵀ S L_j⁻ᵀ‖₂ with G = L Lᵀ.
                let left = li.l().transpose() * s;
                let lj_t = lj.l().transpose();
                let inv = lj_t.try_inverse().ok_or_else(|| Error::precondition("singular norm"))?;
                let op = left * inv;
                out.push(op.singular_values().iter().cloned().fold(0.0, f64::max));
            }
        }
        Ok(out)
    }

    /// Row weights `(a_i, b_i) = (r_{i,i+1}, r_{i−1,i}) / (r_{i−1,i} + r_{i,i+1})`.
    pub fn weights(&self) -> Vec<(f64, f64)> {
        (0..self.k())
            .map(|i| {
                let (rl, rr) = (self.gaps[i], self.gaps[i + 1]);
                (rr / (rl + rr), rl / (rl + rr))
            })
            .collect()
    }

    /// `P = D M` with `D = diag(1/β_i)`.
    pub fn preconditioned_p(&self) -> Result<DMatrix<f64>> {
        let mut p = self.m()?;
        for i in 0..self.k() {
            let mut rows = p.rows_mut(self.offsets[i], self.dims[i]);
            rows /= self.betas[i];
        }
        Ok(p)
    }

    /// `A = I − P`.
    pub fn a_matrix(&self) -> Result<DMatrix<f64>> {
        let p = self.preconditioned_p()?;
        let n = p.nrows();
        Ok(DMatrix::identity(n, n) - p)
    }

    /// Spectral radius of `A` via the symmetric similarity
    /// `W^{-1/2} H W^{-1/2}` with `W = diag(β_i G_i)`.
    pub fn a_spectral_radius(&self) -> Result<f64> {
        let n = self.quadratic_form.nrows();
        if n == 0 {
            return Ok(0.0);
        }
        let mut w = self.gram();
        for i in 0..self.k() {
            let mut rows = w.rows_mut(self.offsets[i], self.dims[i]);
            rows *= self.betas[i];
        }
        let l = w.cholesky().ok_or_else(|| Error::precondition("norm forms are not positive definite"))?.unpack();
        let linv = l.try_inverse().ok_or_else(|| Error::precondition("singular norm"))?;
        let sym = &linv * &self.quadratic_form * linv.transpose();
        let sym = (&sym + sym.transpose()) * 0.5;
        let eig = sym.symmetric_eigenvalues();
        Ok(eig.iter().map(|mu| (1.0 - mu).abs()).fold(0.0, f64::max))
    }

    /// Spectral radius of `A` from its (non-symmetric) eigenvalues directly.
    pub fn a_spectral_radius_direct(&self) -> Result<f64> {
        let a = self.a_matrix()?;
        if a.nrows() == 0 {
            return Ok(0.0);
        }
        let eig = a.complex_eigenvalues();
        Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// Smallest eigenvalue of `M` (real, since `M` is `⟨·,·⟩_*`-symmetric).
    pub fn min_eigenvalue(&self) -> Option<f64> {
        let n = self.quadratic_form.nrows();
        if n == 0 {
            return None;
        }
        let l = self.gram().cholesky()?.unpack();
        let linv = l.try_inverse()?;
        let sym = &linv * &self.quadratic_form * linv.transpose();
        let sym = (&sym + sym.transpose()) * 0.5;
        sym.symmetric_eigenvalues().iter().cloned().reduce(f64::min)
    }

    /// Smallest eigenvalue of the quadratic form itself.
    pub fn min_form_eigenvalue(&self) -> Option<f64> {
        crate::linalg::min_symmetric_eigenvalue(&self.quadratic_form)
    }

    /// `max_i |π_i(n_{i−1,i}) − π_i(n_{i,i+1})|`.
    pub fn a_consistency(&self) -> f64 {
        self.a_in.iter().zip(&self.a_out).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }
}

pub fn hessian(arr: &Arrangement, a: &Point, chain: &Chain, b: &Point) -> Result<HessianModel> {
    let p = Problem::new(arr, chain.itinerary(), a, b)?;
    HessianModel::from_problem(&p, &chain.flat())
}

/// Incoming and outgoing unit directions, `vA = −∇_A S` and `vB = ∇_B S`.
pub fn envelope_gradients(result: &MinimizeResult, a: &Point, b: &Point) -> Result<(Point, Point)> {
    if !result.is_valid() {
        return Err(Error::precondition(format!("envelope needs a valid billiard, got {}", result.classification)));
    }
    let pts = result.chain.points();
    let first = pts.first().unwrap_or(b);
    let last = pts.last().unwrap_or(a);
    let grad_a = (a - first).normalize();
    let grad_b = (b - last).normalize();
    Ok((-grad_a, grad_b))
}

#[derive(Clone, Debug)]
pub struct MultiStartReport {
    pub reference: MinimizeResult,
    /// Largest vertex distance from any start's minimizer to the reference.
    pub max_deviation: f64,
    pub max_value_spread: f64,
    pub n_starts: usize,
    pub failures: usize,
}

/// Re-solves from `opts.n_multistart` random chains and compares with the
/// chord-started solution.
pub fn multistart(arr: &Arrangement, itinerary: &Itinerary, a: &Point, b: &Point, opts: &SolverOptions) -> Result<MultiStartReport> {
    let p = Problem::new(arr, itinerary, a, b)?;
    let reference = minimize_problem(arr, itinerary, &p, p.chord_start(), opts)?;
    let radius = opts.multistart_radius * p.scale;
    let starts: Vec<DVector<f64>> = (0..opts.n_multistart)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(i as u64));
            random_start(&p, radius, &mut rng)
        })
        .collect();
    let results: Vec<Result<MinimizeResult>> = starts
        .into_par_iter()
        .map(|x0| minimize_problem(arr, itinerary, &p, x0, opts))
        .collect();
    let mut max_deviation: f64 = 0.0;
    let mut max_value_spread: f64 = 0.0;
    let mut failures = 0;
    for r in results {
        match r {
            Ok(r) => {
                max_deviation = max_deviation.max(r.chain.distance(&reference.chain));
                max_value_spread = max_value_spread.max((r.value - reference.value).abs());
            }
            Err(_) => failures += 1,
        }
    }
    Ok(MultiStartReport { reference, max_deviation, max_value_spread, n_starts: opts.n_multistart, failures })
}

/// Each coordinate block uniform in the ball of the given radius.
fn random_start(p: &Problem, radius: f64, rng: &mut impl Rng) -> DVector<f64> {
    let mut x = DVector::zeros(p.n);
    for (bm, &o) in p.bases.iter().zip(&p.offsets) {
        let d = bm.ncols();
        if d == 0 {
            continue;
        }
        loop {
            let c = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
            if c.norm() <= 1.0 {
                x.rows_mut(o, d).copy_from(&(c * radius));
                break;
            }
        }
    }
    x
}
