//! Dense eigen- and linear-solve helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::C64;

/// Eigenvalues of a general complex matrix, read off the Schur form.
///
/// Any 2×2 block the QR sweep leaves on the diagonal is solved in closed form.
pub fn eigenvalues(m: &DMatrix<C64>) -> Vec<C64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let (_, t) = Schur::new(m.clone()).unpack();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].norm() > 1e-13 * scale {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half_tr = (a + d) * 0.5;
            let disc = ((a - d) * (a - d) * 0.25 + b * c).sqrt();
            out.push(half_tr + disc);
            out.push(half_tr - disc);
            i += 2;
        } else {
            out.push(t[(i, i)]);
            i += 1;
        }
    }
    out
}

/// Largest absolute deviation from Hermiticity.
pub fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Ascending eigenvalues and matching orthonormal eigenvectors (columns)
/// of a Hermitian matrix.
pub fn hermitian_eigen(m: &DMatrix<C64>, tol: f64) -> Result<(Vec<f64>, DMatrix<C64>)> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape { expected: m.nrows(), got: m.ncols() });
    }
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = hermitian_defect(m);
    if defect > tol * scale {
        return Err(Error::NotHermitian(defect));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

pub fn solve(m: DMatrix<C64>, rhs: &DVector<C64>) -> Option<DVector<C64>> {
    m.lu()
        .solve(rhs)
        .filter(|z| z.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_triangular_and_rotation() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 1.0), C64::new(3.0, 0.0), C64::new(0.0, 0.0), C64::new(-2.0, 0.5)],
        );
        let mut ev = eigenvalues(&m);
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - C64::new(-2.0, 0.5)).norm() < 1e-12);
        assert!((ev[1] - C64::new(1.0, 1.0)).norm() < 1e-12);

        // real rotation generator: eigenvalues ±i
        let r = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        );
        let mut ev = eigenvalues(&r);
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0] - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - C64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn eigenvalues_match_characteristic_sums() {
        let n = 9;
        let m = DMatrix::from_fn(n, n, |i, j| {
            C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0)
        });
        let ev = eigenvalues(&m);
        let trace: C64 = (0..n).map(|i| m[(i, i)]).sum();
        let sum: C64 = ev.iter().sum();
        assert!((trace - sum).norm() < 1e-9);
        let m2 = &m * &m;
        let trace2: C64 = (0..n).map(|i| m2[(i, i)]).sum();
        let sum2: C64 = ev.iter().map(|z| z * z).sum();
        assert!((trace2 - sum2).norm() < 1e-8);
    }

    #[test]
    fn hermitian_eigen_sorted() {
        let v = C64::new(0.7, 0.0);
        let z = C64::new(0.0, 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[z, v, v, z]);
        let (vals, vecs) = hermitian_eigen(&m, 1e-10).unwrap();
        assert!((vals[0] + 0.7).abs() < 1e-14 && (vals[1] - 0.7).abs() < 1e-14);
        assert!(((vecs.adjoint() * &vecs) - DMatrix::identity(2, 2)).norm() < 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[z, v, z, z]);
        assert!(matches!(hermitian_eigen(&bad, 1e-10), Err(Error::NotHermitian(_))));
    }
}
