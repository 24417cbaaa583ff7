//! Small dense helpers shared by the geometry kernels.

use nalgebra::{DMatrix, DVector};

/// Orthonormalizes `vectors` by modified Gram-Schmidt with one full
/// re-orthogonalization pass. Vectors whose residual falls below
/// `rank_tol` (relative to their original norm) are reported as dependent.
pub fn orthonormalize(vectors: &[DVector<f64>], rank_tol: f64) -> Result<Vec<DVector<f64>>, usize> {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for (idx, v) in vectors.iter().enumerate() {
        let scale = v.norm();
        if scale == 0.0 {
            return Err(idx);
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let n = w.norm();
        if n <= rank_tol * scale {
            return Err(idx);
        }
        basis.push(w / n);
    }
    Ok(basis)
}

/// Extends an orthonormal family to an orthonormal basis of its orthogonal
/// complement in `R^dim`, by sweeping the standard basis.
pub fn complement_basis(orthonormal: &[DVector<f64>], dim: usize) -> Vec<DVector<f64>> {
    let mut all: Vec<DVector<f64>> = orthonormal.to_vec();
    let mut out = Vec::new();
    for j in 0..dim {
        if all.len() == dim {
            break;
        }
        let mut w = DVector::zeros(dim);
        w[j] = 1.0;
        for _ in 0..2 {
            for b in &all {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let n = w.norm();
        // Residual of a unit vector against an orthonormal family; anything
        // below 1/sqrt(dim) can be skipped because a better candidate exists.
        if n > 1e-6 {
            let w = w / n;
            all.push(w.clone());
            out.push(w);
        }
    }
    out
}

/// Stacks vectors as the columns of a matrix with `rows` rows.
pub fn columns(vectors: &[DVector<f64>], rows: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

/// Orthonormal basis of the null space of `m` (columns of the result).
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let n = m.ncols();
    if n == 0 {
        return Vec::new();
    }
    if m.nrows() == 0 {
        return (0..n)
            .map(|j| {
                let mut e = DVector::zeros(n);
                e[j] = 1.0;
                e
            })
            .collect();
    }
    // Row space via the normal matrix keeps the decomposition square.
    let gram = m.transpose() * m;
    let eig = gram.symmetric_eigen();
    let scale = eig.eigenvalues.iter().cloned().fold(1.0_f64, f64::max);
    let mut out = Vec::new();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() <= (tol * tol).max(1e-14) * scale {
            out.push(eig.eigenvectors.column(j).into_owned());
        }
    }
    orthonormalize(&out, 1e-8).unwrap_or(out)
}

/// Smallest eigenvalue of a symmetric matrix, `None` for an empty one.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> Option<f64> {
    if m.nrows() == 0 {
        return None;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.iter().cloned().reduce(f64::min)
}

pub fn angle_between(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let c = u.dot(v) / (u.norm() * v.norm());
    if (c.abs() - 1.0) > 1e-12 {
        log::warn!("cosine {c} clamped to [-1, 1]");
    }
    c.clamp(-1.0, 1.0).acos()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_schmidt_detects_dependence() {
        let v = vec![DVector::from_vec(vec![1.0, 1.0]), DVector::from_vec(vec![2.0, 2.0])];
        assert_eq!(orthonormalize(&v, 1e-10), Err(1));
    }

    #[test]
    fn complement_of_diagonal() {
        let b = vec![DVector::from_vec(vec![1.0, 1.0, 1.0]) / 3f64.sqrt()];
        let c = complement_basis(&b, 3);
        assert_eq!(c.len(), 2);
        for w in &c {
            assert!(w.dot(&b[0]).abs() < 1e-14);
            assert!((w.norm() - 1.0).abs() < 1e-14);
        }
        assert!(c[0].dot(&c[1]).abs() < 1e-14);
    }

    #[test]
    fn null_space_of_difference_map() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0]);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.len(), 1);
        let v = &ns[0];
        assert!((v[0] - v[1]).abs() < 1e-12 && (v[1] - v[2]).abs() < 1e-12);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1e-1, 1e-2, 1e-3];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v * v).collect();
        assert!((log_log_slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
