//! Test-side oracles, independent of the solver: central finite differences
//! of the path length and a grid-plus-refine search for its minimum.

#![allow(dead_code)]

use linear_billiards::generating::{action, Chain};
use linear_billiards::{Arrangement, Itinerary, Point};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Path length as a function of the flat intrinsic coordinates.
pub fn length_at(arr: &Arrangement, itin: &Itinerary, a: &Point, b: &Point, x: &DVector<f64>) -> f64 {
    let chain = Chain::from_flat(arr, itin, x).expect("valid coordinates");
    action(a, chain.points(), b)
}

pub fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let mut up = x.clone();
        let mut down = x.clone();
        up[i] += h;
        down[i] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    })
}

/// Columns are central differences of `g`.
pub fn fd_jacobian(g: impl Fn(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut up = x.clone();
        let mut down = x.clone();
        up[j] += h;
        down[j] -= h;
        m.set_column(j, &((g(&up) - g(&down)) / (2.0 * h)));
    }
    m
}

/// Minimizes over a box with a coarse grid, then repeatedly shrinks a finer
/// grid around the incumbent. Only usable for up to four coordinates.
pub fn brute_force(f: impl Fn(&DVector<f64>) -> f64, center: &DVector<f64>, half_width: f64, tol: f64) -> DVector<f64> {
    let n = center.len();
    assert!(n <= 4, "brute force is limited to four coordinates");
    let mut best = center.clone();
    let mut best_val = f(&best);
    let mut w = half_width;
    let mut steps = 20usize;
    while w > tol {
        let per = steps + 1;
        let total = per.pow(n as u32);
        let base = best.clone();
        for idx in 0..total {
            let mut rem = idx;
            let mut x = base.clone();
            for c in 0..n {
                let k = rem % per;
                rem /= per;
                x[c] += -w + 2.0 * w * k as f64 / steps as f64;
            }
            let v = f(&x);
            if v < best_val {
                best_val = v;
                best = x;
            }
        }
        // Keep two grid cells of margin around the incumbent.
        w *= 4.0 / steps as f64;
        steps = 10;
    }
    best
}

/// Uniform random unit vector.
pub fn random_unit(dim: usize, rng: &mut impl Rng) -> Point {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Random repeat-free itinerary of length `k` over `n` labels.
pub fn random_itinerary(n: usize, k: usize, rng: &mut impl Rng) -> Itinerary {
    let mut labels: Vec<usize> = Vec::with_capacity(k);
    while labels.len() < k {
        let l = rng.gen_range(0..n);
        if labels.last() != Some(&l) {
            labels.push(l);
        }
    }
    Itinerary::new(labels).expect("repeat-free")
}

/// Orthonormal basis (as columns) of `L_i ∩ L_j`, from the null space of `[B_i, −B_j]`.
pub fn intersection_basis(arr: &Arrangement, i: usize, j: usize) -> DMatrix<f64> {
    let (bi, bj) = (arr.subspace(i).basis(), arr.subspace(j).basis());
    let dim = arr.dim();
    let (ni, nj) = (bi.ncols(), bj.ncols());
    if ni == 0 || nj == 0 {
        return DMatrix::zeros(dim, 0);
    }
    let mut m = DMatrix::zeros(dim, ni + nj);
    m.view_mut((0, 0), (dim, ni)).copy_from(bi);
    m.view_mut((0, ni), (dim, nj)).copy_from(&(-bj));
    // Null vectors of m are the eigenvectors of mᵀm with zero eigenvalue.
    let eig = (m.transpose() * &m).symmetric_eigen();
    let cols: Vec<DVector<f64>> = (0..ni + nj)
        .filter(|&c| eig.eigenvalues[c].abs() < 1e-12)
        .map(|c| {
            let v = eig.eigenvectors.column(c);
            let p = bi * v.rows(0, ni);
            p.normalize()
        })
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(dim, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}
