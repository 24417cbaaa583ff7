//! Polygonal billiard trajectories, the reflection-law residuals at their
//! vertices, and the genericity / transversality classifications.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::arrangement::{Arrangement, Itinerary, Point, MEMBERSHIP_TOL};
use crate::error::{Error, Result};

/// Default tolerance on `|v₊ − v₋|` below which a vertex counts as internal.
pub const TRANSVERSE_TOL: f64 = 1e-8;

/// An oriented line stored as `(v, Q)` with `|v| = 1` and `Q ⊥ v` the point
/// of the line closest to the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientedLine {
    v: Point,
    q: Point,
}

impl OrientedLine {
    /// The line through `a` with unit direction `v`.
    pub fn through(a: &Point, v: &Point) -> Result<Self> {
        if a.len() != v.len() {
            return Err(Error::input("point and direction have different dimensions"));
        }
        if (v.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!("direction is not unit (|v| = {})", v.norm())));
        }
        Ok(Self::through_unchecked(a, v))
    }

    pub(crate) fn through_unchecked(a: &Point, v: &Point) -> Self {
        let q = a - v * a.dot(v);
        OrientedLine { v: v.clone(), q }
    }

    pub fn v(&self) -> &Point {
        &self.v
    }

    pub fn q(&self) -> &Point {
        &self.q
    }

    /// Image under the scaling `(v, Q) ↦ (v, λQ)`.
    pub fn scaled(&self, lambda: f64) -> Self {
        OrientedLine { v: self.v.clone(), q: &self.q * lambda }
    }

    /// Max-norm distance between the `(v, Q)` representatives.
    pub fn distance(&self, other: &OrientedLine) -> f64 {
        (&self.v - &other.v).norm().max((&self.q - &other.q).norm())
    }
}

#[derive(Clone, Debug)]
pub struct BilliardTrajectory {
    a: Point,
    b: Point,
    chain: Vec<Point>,
    itinerary: Itinerary,
    edge_velocities: Vec<Point>,
    length: f64,
}

impl BilliardTrajectory {
    /// Assembles a trajectory and checks the structural invariants: positive
    /// edge lengths, vertices on their labelled subspaces, and no edge inside
    /// an adjacent collision subspace. The reflection law is *not* enforced
    /// here; use [`BilliardTrajectory::max_reflection_residual`].
    pub fn new(arr: &Arrangement, itinerary: Itinerary, a: Point, chain: Vec<Point>, b: Point) -> Result<Self> {
        itinerary.check_against(arr)?;
        if chain.len() != itinerary.len() {
            return Err(Error::input(format!(
                "chain has {} vertices, itinerary {}",
                chain.len(),
                itinerary.len()
            )));
        }
        for p in chain.iter().chain([&a, &b]) {
            if p.len() != arr.dim() {
                return Err(Error::input("trajectory point has wrong dimension"));
            }
        }
        let scale = chain.iter().chain([&a, &b]).map(|p| p.norm()).fold(1.0, f64::max);
        for (i, (q, &l)) in chain.iter().zip(itinerary.labels()).enumerate() {
            if !arr.subspace(l).contains(q, MEMBERSHIP_TOL * scale) {
                return Err(Error::input(format!("vertex {} is not on {}", i + 1, arr.subspace(l).name())));
            }
        }
        let pts: Vec<&Point> = std::iter::once(&a).chain(chain.iter()).chain(std::iter::once(&b)).collect();
        let mut edge_velocities = Vec::with_capacity(pts.len() - 1);
        let mut length = 0.0;
        for (i, w) in pts.windows(2).enumerate() {
            let d = w[1] - w[0];
            let r = d.norm();
            if r <= 0.0 {
                return Err(Error::input(format!("consecutive points {i} and {} coincide", i + 1)));
            }
            length += r;
            edge_velocities.push(d / r);
        }
        let traj = BilliardTrajectory { a, b, chain, itinerary, edge_velocities, length };
        if let Some((e, l)) = traj.edge_in_subspace(arr, MEMBERSHIP_TOL) {
            return Err(Error::input(format!("edge {e} lies in subspace {}", arr.subspace(l).name())));
        }
        Ok(traj)
    }

    pub fn a(&self) -> &Point {
        &self.a
    }

    pub fn b(&self) -> &Point {
        &self.b
    }

    pub fn chain(&self) -> &[Point] {
        &self.chain
    }

    pub fn itinerary(&self) -> &Itinerary {
        &self.itinerary
    }

    /// Unit edge directions `n_{i,i+1}`, `i = 0..=k`.
    pub fn edge_velocities(&self) -> &[Point] {
        &self.edge_velocities
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn k(&self) -> usize {
        self.chain.len()
    }

    /// First edge (0-based) whose direction lies in the subspace at one of its
    /// ends, together with that subspace.
    pub fn edge_in_subspace(&self, arr: &Arrangement, tol: f64) -> Option<(usize, usize)> {
        let labels = self.itinerary.labels();
        for (e, n) in self.edge_velocities.iter().enumerate() {
            let ends = [e.checked_sub(1), (e < labels.len()).then_some(e)];
            for l in ends.into_iter().flatten().map(|i| labels[i]) {
                if arr.subspace(l).perp(n).norm() <= tol {
                    return Some((e, l));
                }
            }
        }
        None
    }

    /// Energy and momentum residuals at vertex `i` (1-based).
    pub fn reflection_residual(&self, arr: &Arrangement, i: usize) -> Result<(f64, f64)> {
        if i == 0 || i > self.k() {
            return Err(Error::input(format!("vertex index {i} outside 1..={}", self.k())));
        }
        let l = arr.subspace(self.itinerary.labels()[i - 1]);
        let v_minus = &self.edge_velocities[i - 1];
        let v_plus = &self.edge_velocities[i];
        let energy = (v_minus.norm() - v_plus.norm()).abs();
        let momentum = (l.project_unchecked(v_plus) - l.project_unchecked(v_minus)).norm();
        Ok((energy, momentum))
    }

    pub fn max_reflection_residual(&self, arr: &Arrangement) -> f64 {
        (1..=self.k())
            .map(|i| {
                let (e, m) = self.reflection_residual(arr, i).expect("index in range");
                e.max(m)
            })
            .fold(0.0, f64::max)
    }

    /// No internal vertices: the direction jumps at every vertex.
    pub fn is_transverse(&self, tol: f64) -> bool {
        self.edge_velocities.windows(2).all(|w| (&w[1] - &w[0]).norm() > tol)
    }

    /// Incoming line through `A` and outgoing line through `B`.
    pub fn boundary_lines(&self) -> (OrientedLine, OrientedLine) {
        let first = &self.edge_velocities[0];
        let last = self.edge_velocities.last().expect("at least one edge");
        (
            OrientedLine::through_unchecked(&self.a, first),
            OrientedLine::through_unchecked(&self.b, last),
        )
    }

    /// Replaces the anchors by other points of the incoming and outgoing rays.
    pub fn with_anchors_shifted(&self, arr: &Arrangement, s_a: f64, s_b: f64) -> Result<Self> {
        let a = &self.a + &self.edge_velocities[0] * s_a;
        let b = &self.b + self.edge_velocities.last().unwrap() * s_b;
        Self::new(arr, self.itinerary.clone(), a, self.chain.clone(), b)
    }

    /// Generic in the sense of the critical-point correspondence, plus no
    /// unlabelled collisions along interior edges.
    pub fn is_generic(&self, arr: &Arrangement, tol: f64) -> bool {
        is_generic(arr, &self.itinerary, &self.a, &self.chain, &self.b, tol)
            && interior_edge_collisions(arr, &self.a, &self.chain, &self.b, tol).is_empty()
    }

    pub fn to_record(&self, arr: &Arrangement) -> TrajectoryRecord {
        let vec = |p: &Point| p.iter().cloned().collect::<Vec<f64>>();
        TrajectoryRecord {
            a: vec(&self.a),
            b: vec(&self.b),
            chain: self.chain.iter().map(vec).collect(),
            itinerary: self.itinerary.names(arr).into_iter().map(String::from).collect(),
            length: self.length,
        }
    }

    pub fn to_json(&self, arr: &Arrangement) -> String {
        serde_json::to_string_pretty(&self.to_record(arr)).expect("trajectory serializes")
    }

    pub fn from_record(arr: &Arrangement, rec: &TrajectoryRecord) -> Result<Self> {
        let itinerary = Itinerary::from_names(arr, &rec.itinerary)?;
        let p = |x: &Vec<f64>| DVector::from_column_slice(x);
        let traj = Self::new(arr, itinerary, p(&rec.a), rec.chain.iter().map(p).collect(), p(&rec.b))?;
        if (traj.length - rec.length).abs() > 1e-9 * traj.length.max(1.0) {
            return Err(Error::input(format!(
                "stored length {} disagrees with recomputed {}",
                rec.length, traj.length
            )));
        }
        Ok(traj)
    }

    pub fn from_json(arr: &Arrangement, text: &str) -> Result<Self> {
        Self::from_record(arr, &serde_json::from_str(text)?)
    }
}

/// On-disk form of a trajectory; the itinerary is stored by subspace name.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TrajectoryRecord {
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    pub chain: Vec<Vec<f64>>,
    pub itinerary: Vec<String>,
    pub length: f64,
}

/// Genericity of `(A, λ, B)`: no chain vertex on a neighbouring subspace of
/// the itinerary, anchors off the collision locus, and the rays `q₁A`, `q_kB`
/// free of collisions beyond their initial points.
pub fn is_generic(arr: &Arrangement, itinerary: &Itinerary, a: &Point, chain: &[Point], b: &Point, tol: f64) -> bool {
    if chain.len() != itinerary.len() {
        return false;
    }
    if arr.on_collision_locus(a, tol) || arr.on_collision_locus(b, tol) {
        return false;
    }
    let labels = itinerary.labels();
    let k = chain.len();
    for i in 0..k {
        let neighbours = [i.checked_sub(1), (i + 1 < k).then_some(i + 1)];
        for j in neighbours.into_iter().flatten() {
            if arr.subspace(labels[j]).contains(&chain[i], tol) {
                return false;
            }
        }
    }
    if k == 0 {
        let d = b - a;
        return arr.ray_collisions(a, &(-&d), tol).is_empty() && arr.ray_collisions(a, &d, tol).is_empty();
    }
    let back = a - &chain[0];
    let out = b - &chain[k - 1];
    if back.norm() == 0.0 || out.norm() == 0.0 {
        return false;
    }
    arr.ray_collisions(&chain[0], &back, tol).is_empty() && arr.ray_collisions(&chain[k - 1], &out, tol).is_empty()
}

/// Subspaces crossed in the interior of the edges `q_i q_{i+1}` by a segment
/// whose endpoints are both outside that subspace's tolerance tube. Such a
/// crossing is an extra collision not recorded in the itinerary.
pub fn interior_edge_collisions(arr: &Arrangement, a: &Point, chain: &[Point], b: &Point, tol: f64) -> Vec<(usize, usize)> {
    let _ = (a, b);
    let mut out = Vec::new();
    for (e, w) in chain.windows(2).enumerate() {
        if (&w[1] - &w[0]).norm() == 0.0 {
            continue;
        }
        let hits = arr.segment_collisions(&w[0], &w[1], tol).unwrap_or_default();
        for h in hits {
            if h.t_enter > 0.0 && h.t_exit < 1.0 {
                out.push((e + 1, h.index));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::Subspace;

    fn v(x: &[f64]) -> Point {
        DVector::from_column_slice(x)
    }

    fn mirror() -> (Arrangement, BilliardTrajectory) {
        let arr = Arrangement::new(2, vec![Subspace::from_slices("x", 2, &[&[1.0, 0.0]]).unwrap()]).unwrap();
        let t = BilliardTrajectory::new(
            &arr,
            Itinerary::new(vec![0]).unwrap(),
            v(&[0.0, 1.0]),
            vec![v(&[1.0, 0.0])],
            v(&[2.0, 1.0]),
        )
        .unwrap();
        (arr, t)
    }

    #[test]
    fn mirror_residuals_vanish() {
        let (arr, t) = mirror();
        let (e, m) = t.reflection_residual(&arr, 1).unwrap();
        assert!(e < 1e-15 && m < 1e-15);
        assert!(t.is_transverse(TRANSVERSE_TOL));
        assert!(t.is_generic(&arr, 1e-9));
        assert!((t.length() - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(t.reflection_residual(&arr, 0), Err(Error::Input(_))));
        assert!(matches!(t.reflection_residual(&arr, 2), Err(Error::Input(_))));
    }

    #[test]
    fn orthogonal_escape_through_axis() {
        let arr = Arrangement::new(3, vec![Subspace::from_slices("z", 3, &[&[0.0, 0.0, 1.0]]).unwrap()]).unwrap();
        let t = BilliardTrajectory::new(
            &arr,
            Itinerary::new(vec![0]).unwrap(),
            v(&[1.0, 0.0, 0.0]),
            vec![v(&[0.0, 0.0, 0.0])],
            v(&[0.0, 1.0, 0.0]),
        )
        .unwrap();
        assert!(t.reflection_residual(&arr, 1).unwrap().1 < 1e-15);
    }

    #[test]
    fn shifted_vertex_breaks_momentum_law() {
        let (arr, _) = mirror();
        let t = BilliardTrajectory::new(
            &arr,
            Itinerary::new(vec![0]).unwrap(),
            v(&[0.0, 1.0]),
            vec![v(&[1.3, 0.0])],
            v(&[2.0, 1.0]),
        )
        .unwrap();
        assert!(t.reflection_residual(&arr, 1).unwrap().1 > 0.1);
    }

    #[test]
    fn straight_pass_is_not_transverse() {
        let arr = Arrangement::new(3, vec![Subspace::from_slices("z", 3, &[&[0.0, 0.0, 1.0]]).unwrap()]).unwrap();
        let t = BilliardTrajectory::new(
            &arr,
            Itinerary::new(vec![0]).unwrap(),
            v(&[-1.0, 0.0, 0.0]),
            vec![v(&[0.0, 0.0, 0.0])],
            v(&[1.0, 0.0, 0.0]),
        )
        .unwrap();
        assert!(!t.is_transverse(TRANSVERSE_TOL));
    }

    #[test]
    fn boundary_lines_examples() {
        let origin = Arrangement::new(2, vec![Subspace::zero("0", 2)]).unwrap();
        let t = BilliardTrajectory::new(
            &origin,
            Itinerary::new(vec![0]).unwrap(),
            v(&[3.0, 0.0]),
            vec![v(&[0.0, 0.0])],
            v(&[0.0, 4.0]),
        )
        .unwrap();
        let (lm, lp) = t.boundary_lines();
        assert!((lm.v() - v(&[-1.0, 0.0])).norm() < 1e-15 && lm.q().norm() < 1e-15);
        assert!((lp.v() - v(&[0.0, 1.0])).norm() < 1e-15 && lp.q().norm() < 1e-15);

        let (arr, t) = mirror();
        let (lm, _) = t.boundary_lines();
        let s = 0.5f64.sqrt();
        assert!((lm.v() - v(&[s, -s])).norm() < 1e-15);
        assert!((lm.q() - v(&[0.5, 0.5])).norm() < 1e-15);
        let shifted = t.with_anchors_shifted(&arr, 0.3, -0.2).unwrap();
        let (lm2, lp2) = shifted.boundary_lines();
        let (lm, lp) = t.boundary_lines();
        assert!(lm.distance(&lm2) < 1e-12 && lp.distance(&lp2) < 1e-12);
    }

    #[test]
    fn genericity_failures() {
        let s = 0.5f64.sqrt();
        let arr = Arrangement::new(
            2,
            vec![
                Subspace::from_slices("a", 2, &[&[1.0, 0.0]]).unwrap(),
                Subspace::from_slices("b", 2, &[&[s, s]]).unwrap(),
            ],
        )
        .unwrap();
        let it = Itinerary::new(vec![0, 1]).unwrap();
        let zero = v(&[0.0, 0.0]);
        assert!(!is_generic(&arr, &it, &v(&[1.0, 2.0]), &[zero.clone(), v(&[1.0, 1.0])], &v(&[0.0, 3.0]), 1e-9));
        // Outgoing ray from q2 = (1,1) towards B = (3, -1) recrosses the x-axis.
        let good_a = v(&[-1.0, 1.0]);
        assert!(!is_generic(&arr, &it, &good_a, &[v(&[2.0, 0.0]), v(&[1.0, 1.0])], &v(&[2.0, 0.5]), 1e-9));
        assert!(is_generic(&arr, &it, &v(&[3.0, 1.0]), &[v(&[2.0, 0.0]), v(&[1.0, 1.0])], &v(&[0.5, 2.0]), 1e-9));
    }

    #[test]
    fn json_round_trip() {
        let (arr, t) = mirror();
        let back = BilliardTrajectory::from_json(&arr, &t.to_json(&arr)).unwrap();
        assert_eq!(back.chain(), t.chain());
        assert_eq!(back.length(), t.length());
    }
}
