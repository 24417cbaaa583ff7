//! Euclidean space `E`, the collision subspaces through the origin, and the
//! projection, distance and angle primitives the rest of the crate consumes.
//!
//! Subspaces are stored by an orthonormal basis `B` (columns); the projector
//! is always applied as `B (Bᵀ x)` and never materialized.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub type Point = DVector<f64>;

/// Default tolerance for membership and containment tests on unit-scale data.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Subspace {
    name: String,
    ambient_dim: usize,
    basis: DMatrix<f64>,
    sigma: f64,
}

impl Subspace {
    /// Builds a subspace from raw (not necessarily orthonormal) spanning vectors.
    pub fn new(name: impl Into<String>, ambient_dim: usize, raw_basis: &[Point], sigma: f64) -> Result<Self> {
        let name = name.into();
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::input(format!("subspace {name}: sigma must be positive, got {sigma}")));
        }
        for v in raw_basis {
            if v.len() != ambient_dim {
                return Err(Error::input(format!(
                    "subspace {name}: basis vector of length {} in dimension {ambient_dim}",
                    v.len()
                )));
            }
        }
        let ortho = linalg::orthonormalize(raw_basis, 1e-10)
            .map_err(|i| Error::input(format!("subspace {name}: basis vector {i} is linearly dependent")))?;
        if ortho.len() >= ambient_dim {
            return Err(Error::input(format!("subspace {name}: codimension must be at least 1")));
        }
        Ok(Subspace {
            name,
            ambient_dim,
            basis: linalg::columns(&ortho, ambient_dim),
            sigma,
        })
    }

    pub fn from_slices(name: impl Into<String>, ambient_dim: usize, raw_basis: &[&[f64]]) -> Result<Self> {
        let vs: Vec<Point> = raw_basis.iter().map(|r| DVector::from_column_slice(r)).collect();
        Self::new(name, ambient_dim, &vs, 1.0)
    }

    /// The zero subspace `{0}`, represented by an empty basis.
    pub fn zero(name: impl Into<String>, ambient_dim: usize) -> Self {
        Subspace {
            name: name.into(),
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
            sigma: 1.0,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::input(format!("subspace {}: sigma must be positive", self.name)));
        }
        self.sigma = sigma;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim - self.dim()
    }

    /// Orthonormal basis, one vector per column.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Point> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.len() != self.ambient_dim {
            return Err(Error::input(format!(
                "point of dimension {} projected onto {} in dimension {}",
                x.len(),
                self.name,
                self.ambient_dim
            )));
        }
        Ok(())
    }

    /// Orthogonal projection `π_L(x)`.
    pub fn project(&self, x: &Point) -> Result<Point> {
        self.check_dim(x)?;
        Ok(self.project_unchecked(x))
    }

    /// Distance `|x − π_L(x)|` from `x` to the subspace.
    pub fn distance_to(&self, x: &Point) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.perp(x).norm())
    }

    pub(crate) fn project_unchecked(&self, x: &Point) -> Point {
        if self.dim() == 0 {
            return DVector::zeros(self.ambient_dim);
        }
        &self.basis * (self.basis.tr_mul(x))
    }

    /// Component of `x` orthogonal to the subspace, `(I − π_L) x`.
    pub fn perp(&self, x: &Point) -> Point {
        x - self.project_unchecked(x)
    }

    /// Intrinsic coordinates `Bᵀ x` of the projection of `x`.
    pub fn coords(&self, x: &Point) -> DVector<f64> {
        self.basis.tr_mul(x)
    }

    /// The point `B c` of the subspace with intrinsic coordinates `c`.
    pub fn lift(&self, c: &DVector<f64>) -> Point {
        if self.dim() == 0 {
            return DVector::zeros(self.ambient_dim);
        }
        &self.basis * c
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        self.perp(x).norm() <= tol
    }

    /// Smallest principal angle to `other`, and the dimension of the intersection.
    fn principal(&self, other: &Subspace) -> (f64, usize) {
        if self.dim() == 0 || other.dim() == 0 {
            return (std::f64::consts::FRAC_PI_2, 0);
        }
        let cross = self.basis.tr_mul(&other.basis);
        let cos_max = cross.singular_values().iter().cloned().fold(0.0_f64, f64::max).min(1.0);
        let residual = DMatrix::from_columns(
            &self.basis_vectors().iter().map(|b| other.perp(b)).collect::<Vec<_>>(),
        );
        let sines = residual.singular_values();
        let mut sines: Vec<f64> = sines.iter().cloned().collect();
        sines.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Principal angles of self relative to other; for equal dimensions the
        // sine list has exactly dim(self) entries.
        let shared = sines.iter().filter(|&&s| s < MEMBERSHIP_TOL).count();
        let sin_min = sines[0];
        let angle = if cos_max < 0.7 { cos_max.acos() } else { sin_min.min(1.0).asin() };
        (angle, shared)
    }
}

/// A parameter where a segment (or ray) passes within `tol` of a subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentHit {
    pub index: usize,
    /// Parameter of closest approach.
    pub t: f64,
    /// Entry and exit parameters of the tolerance tube, clipped to the domain.
    pub t_enter: f64,
    pub t_exit: f64,
}

#[derive(Clone, Debug)]
pub struct Arrangement {
    dim: usize,
    subspaces: Vec<Subspace>,
    common_codim: usize,
}

impl Arrangement {
    pub fn new(dim: usize, subspaces: Vec<Subspace>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::input(format!("ambient dimension must be at least 2, got {dim}")));
        }
        if subspaces.is_empty() {
            return Err(Error::input("arrangement needs at least one subspace"));
        }
        for s in &subspaces {
            if s.ambient_dim() != dim {
                return Err(Error::input(format!(
                    "subspace {} lives in dimension {}, arrangement in {dim}",
                    s.name(),
                    s.ambient_dim()
                )));
            }
        }
        let common_codim = subspaces[0].codim();
        if let Some(s) = subspaces.iter().find(|s| s.codim() != common_codim) {
            return Err(Error::input(format!(
                "subspace {} has codimension {}, expected {common_codim}",
                s.name(),
                s.codim()
            )));
        }
        for i in 0..subspaces.len() {
            for j in 0..i {
                if subspaces[i].name() == subspaces[j].name() {
                    return Err(Error::input(format!("duplicate subspace name {}", subspaces[i].name())));
                }
                let same = subspaces[i]
                    .basis_vectors()
                    .iter()
                    .all(|b| subspaces[j].contains(b, MEMBERSHIP_TOL));
                if same {
                    return Err(Error::input(format!(
                        "subspaces {} and {} coincide",
                        subspaces[j].name(),
                        subspaces[i].name()
                    )));
                }
            }
        }
        Ok(Arrangement { dim, subspaces, common_codim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn common_codim(&self) -> usize {
        self.common_codim
    }

    pub fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    pub fn subspace(&self, index: usize) -> &Subspace {
        &self.subspaces[index]
    }

    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.subspaces.iter().position(|s| s.name() == name)
    }

    /// Whether `x` lies (to `tol`) on the collision locus `C`.
    pub fn on_collision_locus(&self, x: &Point, tol: f64) -> bool {
        self.subspaces.iter().any(|s| s.contains(x, tol))
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::input(format!("point of dimension {} in dimension {}", x.len(), self.dim)));
        }
        Ok(())
    }

    /// All subspaces the segment `p + t (q − p)`, `t ∈ [0, 1]`, passes within
    /// `tol` of, sorted by the parameter of closest approach.
    pub fn segment_collisions(&self, p: &Point, q: &Point, tol: f64) -> Result<Vec<SegmentHit>> {
        self.check_point(p)?;
        self.check_point(q)?;
        let d = q - p;
        if d.norm() == 0.0 {
            return Err(Error::input("segment endpoints coincide"));
        }
        let mut hits = Vec::new();
        for (index, s) in self.subspaces.iter().enumerate() {
            if let Some((lo, hi, t)) = tube_interval(s, p, &d, tol) {
                let (lo, hi) = (lo.max(0.0), hi.min(1.0));
                if lo <= hi {
                    hits.push(SegmentHit { index, t: t.clamp(lo, hi), t_enter: lo, t_exit: hi });
                }
            }
        }
        hits.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
        Ok(hits)
    }

    /// Collisions of the ray `p + t d`, `t > 0`, with the tolerance tubes.
    /// Contact at the initial point is not a collision: a ray starting inside
    /// a (convex) tube can never re-enter it, so such subspaces are skipped.
    /// The test is analytic in `t`, so no truncation of the ray is needed.
    pub fn ray_collisions(&self, p: &Point, d: &Point, tol: f64) -> Vec<SegmentHit> {
        let mut hits = Vec::new();
        for (index, s) in self.subspaces.iter().enumerate() {
            if s.contains(p, tol) {
                continue;
            }
            if let Some((lo, hi, t)) = tube_interval(s, p, d, tol) {
                let lo = lo.max(0.0);
                if lo <= hi {
                    hits.push(SegmentHit { index, t: t.max(lo), t_enter: lo, t_exit: hi });
                }
            }
        }
        hits.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
        hits
    }

    /// Minimum over pairs of the smallest principal angle between subspaces.
    pub fn min_angle(&self) -> Result<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.len() {
            for j in 0..i {
                let (a, b) = (&self.subspaces[i], &self.subspaces[j]);
                if a.dim() == 0 || b.dim() == 0 {
                    continue;
                }
                let (angle, shared) = a.principal(b);
                if shared > 0 {
                    return Err(Error::precondition(format!(
                        "subspaces {} and {} intersect in dimension {shared}",
                        b.name(),
                        a.name()
                    )));
                }
                best = Some(best.map_or(angle, |m: f64| m.min(angle)));
            }
        }
        best.ok_or_else(|| Error::precondition("minimal angle needs two nonzero subspaces"))
    }

    /// Smallest principal angle between two specific subspaces.
    pub fn angle_between(&self, i: usize, j: usize) -> f64 {
        self.subspaces[i].principal(&self.subspaces[j]).0
    }

    /// Pairwise transversality: `codim(L ∩ M) = 2·codim` for all distinct pairs.
    /// Exposed for inspection; nothing in the crate depends on it.
    pub fn is_pairwise_transverse(&self) -> bool {
        for i in 0..self.len() {
            for j in 0..i {
                let (a, b) = (&self.subspaces[i], &self.subspaces[j]);
                let (_, shared) = a.principal(b);
                if self.dim - shared != 2 * self.common_codim {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_spec(&self) -> ArrangementSpec {
        ArrangementSpec {
            dim: self.dim,
            subspaces: self
                .subspaces
                .iter()
                .map(|s| SubspaceSpec {
                    name: s.name().to_string(),
                    basis: s.basis_vectors().iter().map(|v| v.iter().cloned().collect()).collect(),
                    sigma: s.sigma(),
                })
                .collect(),
        }
    }

    pub fn from_spec(spec: &ArrangementSpec) -> Result<Self> {
        let subspaces = spec
            .subspaces
            .iter()
            .map(|s| {
                let vs: Vec<Point> = s.basis.iter().map(|r| DVector::from_column_slice(r)).collect();
                Subspace::new(s.name.clone(), spec.dim, &vs, s.sigma)
            })
            .collect::<Result<Vec<_>>>()?;
        Arrangement::new(spec.dim, subspaces)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ArrangementSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("arrangement serializes")
    }
}

/// Interval of `t` where `|Π⊥(p + t d)| ≤ tol`, plus the closest-approach
/// parameter, from the quadratic `a t² + 2 b t + c = 0`.
fn tube_interval(s: &Subspace, p: &Point, d: &Point, tol: f64) -> Option<(f64, f64, f64)> {
    let pp = s.perp(p);
    let dp = s.perp(d);
    let a = dp.norm_squared();
    let b = pp.dot(&dp);
    if a <= 1e-30 * d.norm_squared() {
        // Parallel to the subspace: the distance never changes.
        return (pp.norm_squared() <= tol * tol).then_some((f64::NEG_INFINITY, f64::INFINITY, 0.5));
    }
    let t_star = -b / a;
    // Closest approach computed directly; `b² − a c` cancels the tol² term away.
    let closest = &pp + &dp * t_star;
    let slack = tol * tol - closest.norm_squared();
    if slack < 0.0 {
        return None;
    }
    let half = (slack / a).sqrt();
    Some((t_star - half, t_star + half, t_star))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArrangementSpec {
    pub dim: usize,
    pub subspaces: Vec<SubspaceSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubspaceSpec {
    pub name: String,
    #[serde(default)]
    pub basis: Vec<Vec<f64>>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_sigma() -> f64 {
    1.0
}

/// An ordered list of subspace indices with no consecutive repeats.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Itinerary {
    labels: Vec<usize>,
}

impl Itinerary {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::input("itinerary must have at least one collision"));
        }
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::input(format!("itinerary repeats subspace {} consecutively", w[0])));
        }
        Ok(Itinerary { labels })
    }

    /// The empty itinerary of free motion (no collisions). Only meaningful for
    /// relation sampling, where it produces the identity relation.
    pub fn free() -> Self {
        Itinerary { labels: Vec::new() }
    }

    pub fn from_names(arr: &Arrangement, names: &[impl AsRef<str>]) -> Result<Self> {
        let labels = names
            .iter()
            .map(|n| {
                arr.index_of(n.as_ref())
                    .ok_or_else(|| Error::input(format!("unknown subspace label {}", n.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn names<'a>(&self, arr: &'a Arrangement) -> Vec<&'a str> {
        self.labels.iter().map(|&i| arr.subspace(i).name()).collect()
    }

    pub fn check_against(&self, arr: &Arrangement) -> Result<()> {
        match self.labels.iter().find(|&&i| i >= arr.len()) {
            Some(i) => Err(Error::input(format!("itinerary label {i} out of range"))),
            None => Ok(()),
        }
    }
}
