//! Samples of the scattering relation: for anchors `(A, B)` the solved
//! trajectory yields the incoming and outgoing directions `(vA, vB)` and the
//! oriented lines `(ℓ₋, ℓ₊)`. Patches of samples over a grid of anchors are
//! checked for the Lagrangian property of `(A, vA, B, vB)` and for the
//! vanishing of `Θ = ⟨Q₋, dv₋⟩ − ⟨Q₊, dv₊⟩` on the reduced lines.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrangement::{Arrangement, Itinerary, Point};
use crate::error::{Error, Result};
use crate::generating::{envelope_gradients, minimize, Chain, Classification, SolverOptions};
use crate::trajectory::{BilliardTrajectory, OrientedLine};

/// Reduces a point and unit direction to the oriented line through them.
pub fn reduce(a: &Point, v: &Point) -> Result<OrientedLine> {
    OrientedLine::through(a, v)
}

#[derive(Clone, Debug)]
pub struct RelationSample {
    pub a: Point,
    pub b: Point,
    pub va: Point,
    pub vb: Point,
    pub ell_minus: OrientedLine,
    pub ell_plus: OrientedLine,
    pub chain: Chain,
    pub value: f64,
}

impl RelationSample {
    /// Solves at `(A, B)`; `None` unless the minimizer is a valid billiard.
    pub fn solve(arr: &Arrangement, itinerary: &Itinerary, a: &Point, b: &Point, opts: &SolverOptions) -> Result<Option<Self>> {
        let r = minimize(arr, itinerary, a, b, opts)?;
        if r.classification != Classification::ValidBilliard {
            return Ok(None);
        }
        let (va, vb) = envelope_gradients(&r, a, b)?;
        Ok(Some(RelationSample {
            a: a.clone(),
            b: b.clone(),
            ell_minus: OrientedLine::through_unchecked(a, &va),
            ell_plus: OrientedLine::through_unchecked(b, &vb),
            va,
            vb,
            chain: r.chain,
            value: r.value,
        }))
    }

    /// Image under the scaling `q ↦ λ q`; the result is re-validated as a
    /// billiard trajectory rather than trusted.
    pub fn scale_action(&self, arr: &Arrangement, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::input(format!("scale factor must be positive, got {lambda}")));
        }
        let chain = self.chain.scaled(lambda);
        let (a, b) = (&self.a * lambda, &self.b * lambda);
        let traj = BilliardTrajectory::new(arr, chain.itinerary().clone(), a.clone(), chain.points().to_vec(), b.clone())?;
        let residual = traj.max_reflection_residual(arr);
        if residual > 1e-9 {
            return Err(Error::precondition(format!("scaled chain violates the reflection law ({residual:e})")));
        }
        Ok(RelationSample {
            ell_minus: self.ell_minus.scaled(lambda),
            ell_plus: self.ell_plus.scaled(lambda),
            va: self.va.clone(),
            vb: self.vb.clone(),
            value: self.value * lambda,
            a,
            b,
            chain,
        })
    }
}

/// Tensor grid of anchors: `A = A₀ + h Σ i_j a_j`, `B = B₀ + h Σ l_j b_j`,
/// every index running over `n` points centred at 0.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PatchGrid {
    pub a_center: Vec<f64>,
    pub a_axes: Vec<Vec<f64>>,
    pub b_center: Vec<f64>,
    pub b_axes: Vec<Vec<f64>>,
    pub spacing: f64,
    pub n: usize,
}

impl PatchGrid {
    /// Full grid: all coordinate axes for both anchors.
    pub fn full(a_center: &Point, b_center: &Point, spacing: f64, n: usize) -> Self {
        let dim = a_center.len();
        let axes: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        PatchGrid {
            a_center: a_center.iter().cloned().collect(),
            a_axes: axes.clone(),
            b_center: b_center.iter().cloned().collect(),
            b_axes: axes,
            spacing,
            n,
        }
    }

    pub fn with_spacing(&self, spacing: f64) -> Self {
        PatchGrid { spacing, ..self.clone() }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.n < 1 || !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::input("grid needs n ≥ 1 points per axis and positive spacing"));
        }
        if self.a_center.len() != dim || self.b_center.len() != dim {
            return Err(Error::input("grid centre has wrong dimension"));
        }
        if self.a_axes.is_empty() && self.b_axes.is_empty() {
            return Err(Error::input("grid has no axes"));
        }
        for ax in self.a_axes.iter().chain(&self.b_axes) {
            let norm: f64 = ax.iter().map(|x| x * x).sum::<f64>().sqrt();
            if ax.len() != dim || (norm - 1.0).abs() > 1e-12 {
                return Err(Error::input("grid axes must be unit vectors of the ambient dimension"));
            }
        }
        Ok(())
    }

    pub fn n_axes(&self) -> usize {
        self.a_axes.len() + self.b_axes.len()
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.n_axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of flat position `idx` (first axis slowest).
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.n_axes()];
        for slot in out.iter_mut().rev() {
            *slot = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn anchors(&self, multi: &[usize]) -> (Point, Point) {
        let mid = (self.n - 1) as f64 / 2.0;
        let mut a = Point::from_column_slice(&self.a_center);
        let mut b = Point::from_column_slice(&self.b_center);
        let na = self.a_axes.len();
        for (j, &i) in multi.iter().enumerate() {
            let off = (i as f64 - mid) * self.spacing;
            if j < na {
                a += Point::from_column_slice(&self.a_axes[j]) * off;
            } else {
                b += Point::from_column_slice(&self.b_axes[j - na]) * off;
            }
        }
        (a, b)
    }
}

#[derive(Clone, Debug)]
pub struct RelationPatch {
    pub grid: PatchGrid,
    pub itinerary: Itinerary,
    /// One entry per grid node in flat order; `None` where no valid billiard exists.
    pub samples: Vec<Option<RelationSample>>,
}

impl RelationPatch {
    pub fn n_valid(&self) -> usize {
        self.samples.iter().filter(|s| s.is_some()).count()
    }

    /// Central-difference tangents at interior node `multi` in the
    /// `(A, vA, B, vB)` coordinates, or `None` if a neighbour is absent.
    fn tangents(&self, multi: &[usize]) -> Option<Vec<[Point; 4]>> {
        let h2 = 2.0 * self.grid.spacing;
        let mut out = Vec::with_capacity(multi.len());
        for j in 0..multi.len() {
            let mut up = multi.to_vec();
            let mut down = multi.to_vec();
            up[j] += 1;
            down[j] -= 1;
            let su = self.samples[self.grid.flat_index(&up)].as_ref()?;
            let sd = self.samples[self.grid.flat_index(&down)].as_ref()?;
            out.push([
                (&su.a - &sd.a) / h2,
                (&su.va - &sd.va) / h2,
                (&su.b - &sd.b) / h2,
                (&su.vb - &sd.vb) / h2,
            ]);
        }
        Some(out)
    }

    fn interior_nodes(&self) -> Vec<Vec<usize>> {
        (0..self.grid.len())
            .map(|i| self.grid.multi_index(i))
            .filter(|m| m.iter().all(|&i| i >= 1 && i + 1 < self.grid.n))
            .collect()
    }

    /// Sample at the centre node, if present.
    pub fn center(&self) -> Option<&RelationSample> {
        let mid = vec![(self.grid.n - 1) / 2; self.grid.n_axes()];
        self.samples[self.grid.flat_index(&mid)].as_ref()
    }
}

/// Solves at every node of the grid; invalid nodes become `None`.
pub fn sample_relation(
    arr: &Arrangement,
    itinerary: &Itinerary,
    grid: &PatchGrid,
    opts: &SolverOptions,
) -> Result<RelationPatch> {
    grid.validate(arr.dim())?;
    itinerary.check_against(arr)?;
    let samples = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (a, b) = grid.anchors(&grid.multi_index(i));
            RelationSample::solve(arr, itinerary, &a, &b, opts).ok().flatten()
        })
        .collect();
    Ok(RelationPatch { grid: grid.clone(), itinerary: itinerary.clone(), samples })
}

/// `ω((δq, δv), (δq′, δv′)) = ⟨δq, δv′⟩ − ⟨δq′, δv⟩`.
fn omega(dq: &Point, dv: &Point, dq2: &Point, dv2: &Point) -> f64 {
    dq.dot(dv2) - dq2.dot(dv)
}

/// Largest `|ω_B − ω_A|` over pairs of finite-difference tangents at the
/// interior nodes of the patch.
pub fn lagrangian_residual(patch: &RelationPatch) -> Result<f64> {
    let mut worst: Option<f64> = None;
    for node in patch.interior_nodes() {
        let Some(t) = patch.tangents(&node) else { continue };
        let mut local: f64 = 0.0;
        for j in 0..t.len() {
            for l in (j + 1)..t.len() {
                let wa = omega(&t[j][0], &t[j][1], &t[l][0], &t[l][1]);
                let wb = omega(&t[j][2], &t[j][3], &t[l][2], &t[l][3]);
                local = local.max((wb - wa).abs());
            }
        }
        worst = Some(worst.map_or(local, |w| w.max(local)));
    }
    worst.ok_or_else(|| Error::input("patch has no interior node with all neighbours present"))
}

/// Largest `|⟨Q₋, δv₋⟩ − ⟨Q₊, δv₊⟩|` over finite-difference tangents of the
/// reduced patch. Requires an itinerary of length > 1 unless `allow_short`.
pub fn legendrian_theta_residual(patch: &RelationPatch, allow_short: bool) -> Result<f64> {
    if patch.itinerary.len() <= 1 && !allow_short {
        return Err(Error::precondition("the Legendrian check applies to itineraries of length > 1"));
    }
    let mut worst: Option<f64> = None;
    for node in patch.interior_nodes() {
        let Some(t) = patch.tangents(&node) else { continue };
        let s = patch.samples[patch.grid.flat_index(&node)].as_ref().expect("centre of a complete stencil");
        let local = t
            .iter()
            .map(|tj| (s.ell_minus.q().dot(&tj[1]) - s.ell_plus.q().dot(&tj[3])).abs())
            .fold(0.0, f64::max);
        worst = Some(worst.map_or(local, |w| w.max(local)));
    }
    worst.ok_or_else(|| Error::input("patch has no interior node with all neighbours present"))
}

/// Writes one CSV row per grid node.
pub fn write_patch_csv<W: Write>(patch: &RelationPatch, arr: &Arrangement, out: W) -> Result<()> {
    let dim = arr.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = Vec::new();
    for p in ["A", "B"] {
        header.extend((0..dim).map(|i| format!("{p}{i}")));
    }
    header.push("status".to_string());
    for p in ["vA", "vB", "Qm", "Qp"] {
        header.extend((0..dim).map(|i| format!("{p}{i}")));
    }
    header.push("S".to_string());
    w.write_record(&header)?;
    let fmt = |x: f64| format!("{x:.17e}");
    for (i, s) in patch.samples.iter().enumerate() {
        let (a, b) = patch.grid.anchors(&patch.grid.multi_index(i));
        let mut row: Vec<String> = a.iter().chain(b.iter()).map(|&x| fmt(x)).collect();
        match s {
            Some(s) => {
                row.push("valid".into());
                for v in [&s.va, &s.vb, s.ell_minus.q(), s.ell_plus.q()] {
                    row.extend(v.iter().map(|&x| fmt(x)));
                }
                row.push(fmt(s.value));
            }
            None => {
                row.push("absent".into());
                row.extend(std::iter::repeat_n(String::new(), 4 * dim + 1));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
