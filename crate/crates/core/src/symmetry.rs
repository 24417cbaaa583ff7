//! Conservation laws: the translation core `L_tr = ⋂ L`, linear momentum
//! (projection of the velocity onto `L_tr`) and the angular momenta
//! `J^ξ(x, v) = ⟨ξ(v), x⟩` of skew generators preserving every subspace.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::arrangement::{Arrangement, Point, Subspace};
use crate::error::{Error, Result};
use crate::linalg;
use crate::trajectory::BilliardTrajectory;

/// A skew-symmetric map `ξ : E → E`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationGenerator {
    xi: DMatrix<f64>,
}

impl RotationGenerator {
    pub fn new(xi: DMatrix<f64>) -> Result<Self> {
        if !xi.is_square() {
            return Err(Error::input("generator must be square"));
        }
        let skew = (&xi + xi.transpose()).norm();
        if skew >= 1e-12 * xi.norm().max(1.0) {
            return Err(Error::precondition(format!("generator is not skew-symmetric (|ξ + ξᵀ| = {skew:e})")));
        }
        Ok(RotationGenerator { xi })
    }

    /// The rotation generator of the coordinate plane `(i, j)`:
    /// `e ↦ ⟨e_j, e⟩ e_i − ⟨e_i, e⟩ e_j`.
    pub fn plane(dim: usize, i: usize, j: usize) -> Result<Self> {
        if i == j || i >= dim || j >= dim {
            return Err(Error::input(format!("invalid coordinate plane ({i}, {j}) in dimension {dim}")));
        }
        let mut xi = DMatrix::zeros(dim, dim);
        xi[(i, j)] = 1.0;
        xi[(j, i)] = -1.0;
        Ok(RotationGenerator { xi })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::input("generator rows must form a square matrix"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.xi
    }

    pub fn dim(&self) -> usize {
        self.xi.nrows()
    }

    pub fn apply(&self, v: &Point) -> Point {
        &self.xi * v
    }

    /// Checks that `ξ` maps every subspace of `arr` into itself.
    pub fn validate_for(&self, arr: &Arrangement) -> Result<()> {
        if self.dim() != arr.dim() {
            return Err(Error::input(format!("generator of dimension {} for arrangement in {}", self.dim(), arr.dim())));
        }
        let tol = 1e-10 * self.xi.norm().max(1.0);
        for s in arr.subspaces() {
            for b in s.basis_vectors() {
                let image = self.apply(&b);
                let off = s.perp(&image).norm();
                if off > tol {
                    return Err(Error::precondition(format!(
                        "generator does not preserve {} (off-subspace part {off:e})",
                        s.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Intersection of all subspaces of the arrangement.
pub fn translation_core(arr: &Arrangement) -> Subspace {
    let dim = arr.dim();
    let mut basis: Vec<Point> = arr.subspace(0).basis_vectors();
    for s in &arr.subspaces()[1..] {
        if basis.is_empty() {
            break;
        }
        // Coefficients c with Π⊥_L (U c) = 0.
        let u = linalg::columns(&basis, dim);
        let perp_u = DMatrix::from_columns(&basis.iter().map(|b| s.perp(b)).collect::<Vec<_>>());
        let null = linalg::null_space(&perp_u, 1e-10);
        let next: Vec<Point> = null.iter().map(|c| &u * c).collect();
        basis = linalg::orthonormalize(&next, 1e-8).unwrap_or_default();
    }
    if basis.is_empty() {
        return Subspace::zero("tr", dim);
    }
    Subspace::new("tr", dim, &basis, 1.0).expect("intersection of proper subspaces is proper")
}

/// Total linear momentum `π_tr(v)`.
pub fn linear_momentum(arr: &Arrangement, v: &Point) -> Result<Point> {
    translation_core(arr).project(v)
}

/// `J^ξ(x, v) = ⟨ξ(v), x⟩`.
pub fn angular_momentum(gen: &RotationGenerator, x: &Point, v: &Point) -> Result<f64> {
    if x.len() != gen.dim() || v.len() != gen.dim() {
        return Err(Error::input("point or velocity has wrong dimension"));
    }
    Ok(gen.apply(v).dot(x))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConservationReport {
    /// `π_tr` of each edge velocity `n_{i,i+1}`.
    pub linear: Vec<Vec<f64>>,
    pub linear_max_dev: f64,
    /// Per generator and vertex: `(J(q_i, v₋), J(q_i, v₊))`.
    pub angular: Vec<Vec<(f64, f64)>>,
    pub angular_max_dev: f64,
    /// Largest angular jump divided by `|q_i| ‖ξ‖`.
    pub angular_max_rel_dev: f64,
}

impl ConservationReport {
    pub fn max_deviation(&self) -> f64 {
        self.linear_max_dev.max(self.angular_max_dev)
    }
}

pub fn conservation_report(
    arr: &Arrangement,
    traj: &BilliardTrajectory,
    gens: &[RotationGenerator],
) -> Result<ConservationReport> {
    for g in gens {
        g.validate_for(arr)?;
    }
    let core = translation_core(arr);
    let linear: Vec<Point> = traj.edge_velocities().iter().map(|v| core.project_unchecked(v)).collect();
    let linear_max_dev = linear.windows(2).map(|w| (&w[1] - &w[0]).norm()).fold(0.0, f64::max);
    let mut angular = Vec::with_capacity(gens.len());
    let mut angular_max_dev: f64 = 0.0;
    let mut angular_max_rel_dev: f64 = 0.0;
    for g in gens {
        let mut rows = Vec::with_capacity(traj.k());
        for (i, q) in traj.chain().iter().enumerate() {
            let before = g.apply(&traj.edge_velocities()[i]).dot(q);
            let after = g.apply(&traj.edge_velocities()[i + 1]).dot(q);
            let jump = (after - before).abs();
            angular_max_dev = angular_max_dev.max(jump);
            let denom = q.norm() * g.matrix().norm();
            if denom > 0.0 {
                angular_max_rel_dev = angular_max_rel_dev.max(jump / denom);
            }
            rows.push((before, after));
        }
        angular.push(rows);
    }
    Ok(ConservationReport {
        linear: linear.iter().map(|v: &DVector<f64>| v.iter().cloned().collect()).collect(),
        linear_max_dev,
        angular,
        angular_max_dev,
        angular_max_rel_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::generating::{minimize, SolverOptions};

    fn v(x: &[f64]) -> Point {
        DVector::from_column_slice(x)
    }

    #[test]
    fn standard_angular_momentum() {
        let g = RotationGenerator::plane(2, 0, 1).unwrap();
        assert_eq!(angular_momentum(&g, &v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 1.0);
        assert_eq!(angular_momentum(&g, &v(&[2.0, 1.0]), &v(&[4.0, 2.0])).unwrap(), 0.0);
    }

    #[test]
    fn rejects_non_skew_and_non_preserving() {
        let sym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(RotationGenerator::new(sym), Err(Error::Precondition(_))));
        let (arr, _, _, _) = fixtures::mirror();
        let rot = RotationGenerator::plane(2, 0, 1).unwrap();
        assert!(matches!(rot.validate_for(&arr), Err(Error::Precondition(_))));
        let (origin, _, _, _) = fixtures::total_collision();
        rot.validate_for(&origin).unwrap();
    }

    #[test]
    fn translation_cores() {
        let arr = fixtures::star_lines(2);
        assert_eq!(translation_core(&arr).dim(), 0);
        let (mirror, _, _, _) = fixtures::mirror();
        let core = translation_core(&mirror);
        assert_eq!(core.dim(), 1);
        assert!(core.contains(&v(&[1.0, 0.0]), 1e-12));
    }

    #[test]
    fn mirror_momentum_report() {
        let (arr, it, a, b) = fixtures::mirror();
        let r = minimize(&arr, &it, &a, &b, &SolverOptions::default()).unwrap();
        let rep = conservation_report(&arr, r.trajectory.as_ref().unwrap(), &[]).unwrap();
        assert!(rep.linear_max_dev < 1e-12);
        assert!((rep.linear[0][0] - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn total_collision_angular_momentum_jump_vanishes() {
        let (arr, it, a, b) = fixtures::total_collision();
        let r = minimize(&arr, &it, &a, &b, &SolverOptions::default()).unwrap();
        let g = RotationGenerator::plane(2, 0, 1).unwrap();
        let rep = conservation_report(&arr, r.trajectory.as_ref().unwrap(), &[g]).unwrap();
        assert_eq!(rep.angular_max_dev, 0.0);
    }

    #[test]
    fn corrupted_trajectory_flagged() {
        let (arr, it, a, b) = fixtures::mirror();
        let bad = BilliardTrajectory::new(&arr, it, a, vec![v(&[1.4, 0.0])], b).unwrap();
        let rep = conservation_report(&arr, &bad, &[]).unwrap();
        assert!(rep.linear_max_dev > 1e-3);
    }
}
