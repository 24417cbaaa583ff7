//! N-body collision arrangements.
//!
//! Configurations `(q₁, …, q_N) ∈ (ℝ^d)^N` are embedded by
//! `y_a = √m_a q_a`, which turns the mass metric into the standard one. The
//! collision subspaces are `Δ_ab = {q_a = q_b}`, each with codimension `d`
//! and thickening factor `σ_ab = √((m_a + m_b)/(m_a m_b))`. With `reduce_cm`
//! everything is expressed in an orthonormal basis of the zero-centre-of-mass
//! subspace.
//!
//! The planar three-body slice fixes the incoming velocities
//! `(1, e^{2πi/3}, e^{4πi/3})` with masses `1/3` and the itinerary
//! `(Δ₁₂, Δ₁₃)`, and sweeps the two free directions of the elastic collisions.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Complex, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arrangement::{Arrangement, Itinerary, Point, Subspace};
use crate::error::{Error, Result};
use crate::generating::{minimize, Classification, SolverOptions};
use crate::linalg;
use crate::symmetry::{conservation_report, RotationGenerator};
use crate::trajectory::BilliardTrajectory;

#[derive(Clone, Debug)]
pub struct NBodySystem {
    masses: Vec<f64>,
    d: usize,
    reduce_cm: bool,
    /// Orthonormal columns spanning the embedded space `E` inside `ℝ^{Nd}`.
    basis: DMatrix<f64>,
}

impl NBodySystem {
    pub fn new(masses: Vec<f64>, d: usize, reduce_cm: bool) -> Result<Self> {
        if masses.len() < 2 {
            return Err(Error::input("need at least two bodies"));
        }
        if d == 0 {
            return Err(Error::input("body dimension must be positive"));
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::input(format!("masses must be positive, got {m}")));
        }
        let full = masses.len() * d;
        let basis = if reduce_cm {
            let total: f64 = masses.iter().sum();
            let cm: Vec<DVector<f64>> = (0..d)
                .map(|c| DVector::from_fn(full, |r, _| if r % d == c { (masses[r / d] / total).sqrt() } else { 0.0 }))
                .collect();
            linalg::columns(&linalg::complement_basis(&cm, full), full)
        } else {
            DMatrix::identity(full, full)
        };
        Ok(NBodySystem { masses, d, reduce_cm, basis })
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn reduce_cm(&self) -> bool {
        self.reduce_cm
    }

    /// Dimension of `E`: `Nd`, or `(N−1)d` when reduced.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    fn check_flat(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.n() * self.d {
            return Err(Error::input(format!("configuration has length {}, expected {}", q.len(), self.n() * self.d)));
        }
        Ok(())
    }

    /// Embeds a flat configuration `(q₁, …, q_N)`; the centre-of-mass part is
    /// dropped when reduced. Applies equally to velocities.
    pub fn embed(&self, q: &DVector<f64>) -> Result<Point> {
        self.check_flat(q)?;
        let y = DVector::from_fn(q.len(), |r, _| self.masses[r / self.d].sqrt() * q[r]);
        Ok(self.basis.tr_mul(&y))
    }

    /// Inverse of [`embed`](Self::embed) on `E`, with zero centre of mass when reduced.
    pub fn unembed(&self, x: &Point) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::input(format!("embedded point has length {}, expected {}", x.len(), self.dim())));
        }
        let y = &self.basis * x;
        Ok(DVector::from_fn(y.len(), |r, _| y[r] / self.masses[r / self.d].sqrt()))
    }

    /// Mass-metric squared norm `Σ m_a |v_a|²`.
    pub fn mass_norm_squared(&self, v: &DVector<f64>) -> Result<f64> {
        self.check_flat(v)?;
        Ok(v.iter().enumerate().map(|(r, x)| self.masses[r / self.d] * x * x).sum())
    }

    pub fn sigma(&self, a: usize, b: usize) -> f64 {
        let (ma, mb) = (self.masses[a], self.masses[b]);
        ((ma + mb) / (ma * mb)).sqrt()
    }

    /// Pairs `(a, b)`, `a < b`, in the order of the arrangement's subspaces.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
    }

    /// Normals `e_c/√m_a − e_c/√m_b` of `Δ_ab`, in `E` coordinates.
    fn normals(&self, a: usize, b: usize) -> Vec<Point> {
        let full = self.n() * self.d;
        (0..self.d)
            .map(|c| {
                let mut n = DVector::zeros(full);
                n[a * self.d + c] = 1.0 / self.masses[a].sqrt();
                n[b * self.d + c] = -1.0 / self.masses[b].sqrt();
                self.basis.tr_mul(&n)
            })
            .collect()
    }

    pub fn build_arrangement(&self) -> Result<Arrangement> {
        let dim = self.dim();
        let subs = self
            .pairs()
            .into_iter()
            .map(|(a, b)| {
                let normals = linalg::orthonormalize(&self.normals(a, b), 1e-10)
                    .map_err(|_| Error::input("degenerate collision normals"))?;
                let basis = linalg::complement_basis(&normals, dim);
                Subspace::new(format!("D{}{}", a + 1, b + 1), dim, &basis, self.sigma(a, b))
            })
            .collect::<Result<Vec<_>>>()?;
        Arrangement::new(dim, subs)
    }

    /// The diagonal action of the rotation generator of coordinate plane
    /// `(i, j)` of `ℝ^d` on every body.
    pub fn rotation_generator(&self, i: usize, j: usize) -> Result<RotationGenerator> {
        let single = RotationGenerator::plane(self.d, i, j)?;
        let full = DMatrix::identity(self.n(), self.n()).kronecker(single.matrix());
        RotationGenerator::new(self.basis.transpose() * full * &self.basis)
    }
}

/// `|w| = ½|v₁⁻ − v₂⁻|` for the slice's incoming velocities.
pub fn slice_w_norm() -> f64 {
    0.5 * (incoming()[0] - incoming()[1]).norm()
}

/// The value `3/2` printed for `|w|` alongside the formula `½|v₁⁻ − v₂⁻|`.
pub const STATED_W_NORM: f64 = 1.5;

/// One-line note on the `|w|` discrepancy, for run logs.
pub fn w_norm_note() -> String {
    format!(
        "|w| = 1/2 |v1- - v2-| evaluates to {:.16} (sqrt(3)/2); the stated value {STATED_W_NORM} is not used because it breaks energy conservation",
        slice_w_norm()
    )
}

pub fn incoming() -> [Complex<f64>; 3] {
    [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0].map(|t| Complex::from_polar(1.0, t))
}

#[derive(Clone, Debug, Serialize)]
pub struct SlicePoint {
    pub phi: f64,
    pub psi: f64,
    pub branch: i8,
    #[serde(skip)]
    pub v_mid: [Complex<f64>; 3],
    #[serde(skip)]
    pub v_plus: [Complex<f64>; 3],
    pub args: [f64; 3],
    pub momentum_residual: f64,
    pub energy_residual: f64,
    /// The first or second collision passes straight through (`v^m = v⁻` or
    /// `v⁺ = v^m`), or `v₁^m = v₃^m`.
    pub degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct ScatterSlice {
    pub v_minus: [Complex<f64>; 3],
    pub points: Vec<SlicePoint>,
}

fn slice_point(phi: f64, psi: f64, branch: i8) -> SlicePoint {
    let v = incoming();
    let w = Complex::from_polar(f64::from(branch) * slice_w_norm(), phi);
    let half12 = (v[0] + v[1]) * 0.5;
    let v_mid = [half12 + w, half12 - w, v[2]];
    let d13 = v_mid[2] - v_mid[0];
    let u = Complex::from_polar(0.5 * d13.norm(), psi);
    let half13 = (v_mid[0] + v_mid[2]) * 0.5;
    let v_plus = [half13 + u, v_mid[1], half13 - u];
    let momentum_residual = (v_plus[0] + v_plus[1] + v_plus[2]).norm();
    let energy_residual = (v_plus.iter().map(|z| z.norm_sqr() / 3.0).sum::<f64>() - 1.0).abs();
    let tol = 1e-9;
    let degenerate =
        (v_mid[0] - v[0]).norm() < tol || (v_plus[0] - v_mid[0]).norm() < tol || d13.norm() < tol;
    SlicePoint {
        phi,
        psi,
        branch,
        v_mid,
        v_plus,
        args: v_plus.map(|z| z.im.atan2(z.re)),
        momentum_residual,
        energy_residual,
        degenerate,
    }
}

/// Evaluates the slice on `branch × phi_grid × psi_grid`, `branch ∈ {+1, −1}`.
pub fn three_body_slice(phi_grid: &[f64], psi_grid: &[f64]) -> ScatterSlice {
    let params: Vec<(f64, f64, i8)> = [1i8, -1]
        .iter()
        .flat_map(|&br| phi_grid.iter().flat_map(move |&phi| psi_grid.iter().map(move |&psi| (phi, psi, br))))
        .collect();
    let points = params.into_par_iter().map(|(phi, psi, br)| slice_point(phi, psi, br)).collect();
    ScatterSlice { v_minus: incoming(), points }
}

/// `n` equally spaced angles in `[0, π)` for `φ` and `[0, 2π)` for `ψ`.
pub fn default_grids(n_phi: usize, n_psi: usize) -> (Vec<f64>, Vec<f64>) {
    (
        (0..n_phi).map(|i| PI * i as f64 / n_phi as f64).collect(),
        (0..n_psi).map(|i| 2.0 * PI * i as f64 / n_psi as f64).collect(),
    )
}

impl ScatterSlice {
    pub fn max_momentum_residual(&self) -> f64 {
        self.points.iter().map(|p| p.momentum_residual).fold(0.0, f64::max)
    }

    pub fn max_energy_residual(&self) -> f64 {
        self.points.iter().map(|p| p.energy_residual).fold(0.0, f64::max)
    }
}

pub fn three_body_system() -> NBodySystem {
    NBodySystem::new(vec![1.0 / 3.0; 3], 2, true).expect("valid masses")
}

fn flat(z: &[Complex<f64>; 3]) -> DVector<f64> {
    DVector::from_iterator(6, z.iter().flat_map(|c| [c.re, c.im]))
}

/// The explicit embedded trajectory realizing a slice point. Bodies 1 and 2
/// meet at time 0 and bodies 1 and 3 at time 1; the centre of mass is at the
/// origin.
pub fn slice_trajectory(sys: &NBodySystem, arr: &Arrangement, point: &SlicePoint) -> Result<BilliardTrajectory> {
    let v = incoming();
    let d13 = point.v_mid[0] - point.v_mid[2];
    let p = -d13 / 3.0;
    let q1 = sys.embed(&flat(&[p, p, p + d13]))?;
    let vm = sys.embed(&flat(&point.v_mid))?;
    let q2 = &q1 + &vm;
    let a = &q1 - sys.embed(&flat(&v))?;
    let b = &q2 + sys.embed(&flat(&point.v_plus))?;
    BilliardTrajectory::new(arr, Itinerary::new(vec![0, 1])?, a, vec![q1, q2], b)
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossValidation {
    pub n_sampled: usize,
    pub n_excluded: usize,
    pub max_reflection_residual: f64,
    pub max_chain_deviation: f64,
    pub max_angular_deviation: f64,
    pub n_valid: usize,
    pub n_non_generic: usize,
}

/// Samples up to `budget` non-degenerate slice points, builds their explicit
/// trajectories, and re-solves from the anchors with the generic minimizer.
pub fn cross_validate_slice(slice: &ScatterSlice, budget: usize, seed: u64, opts: &SolverOptions) -> Result<CrossValidation> {
    let sys = three_body_system();
    let arr = sys.build_arrangement()?;
    let gen = sys.rotation_generator(0, 1)?;
    let itin = Itinerary::new(vec![0, 1])?;
    let mut usable: Vec<usize> = (0..slice.points.len()).filter(|&i| !slice.points[i].degenerate).collect();
    let n_excluded = slice.points.len() - usable.len();
    usable.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    usable.truncate(budget);
    usable.sort_unstable();
    let rows = usable
        .par_iter()
        .map(|&i| -> Result<(f64, f64, f64, Classification)> {
            let traj = slice_trajectory(&sys, &arr, &slice.points[i])?;
            let refl = traj.max_reflection_residual(&arr);
            let ang = conservation_report(&arr, &traj, std::slice::from_ref(&gen))?.angular_max_dev;
            let r = minimize(&arr, &itin, traj.a(), traj.b(), opts)?;
            let dev = r
                .chain
                .points()
                .iter()
                .zip(traj.chain())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            Ok((refl, dev, ang, r.classification))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossValidation {
        n_sampled: rows.len(),
        n_excluded,
        max_reflection_residual: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        max_chain_deviation: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        max_angular_deviation: rows.iter().map(|r| r.2).fold(0.0, f64::max),
        n_valid: rows.iter().filter(|r| r.3 == Classification::ValidBilliard).count(),
        n_non_generic: rows.iter().filter(|r| r.3 == Classification::NonGenericRay).count(),
    })
}

/// Columns: `phi, psi, branch, arg1, arg2, arg3, momentum_residual, energy_residual, degenerate`.
pub fn write_slice_csv<W: Write>(slice: &ScatterSlice, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phi", "psi", "branch", "arg1", "arg2", "arg3", "momentum_residual", "energy_residual", "degenerate"])?;
    for p in &slice.points {
        w.write_record([
            format!("{:.17e}", p.phi),
            format!("{:.17e}", p.psi),
            p.branch.to_string(),
            format!("{:.17e}", p.args[0]),
            format!("{:.17e}", p.args[1]),
            format!("{:.17e}", p.args[2]),
            format!("{:.3e}", p.momentum_residual),
            format!("{:.3e}", p.energy_residual),
            p.degenerate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
