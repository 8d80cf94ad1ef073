//! Small dense linear-algebra helpers on top of `nalgebra`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
// shadowed by inherent float methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Row-centred scatter matrix `C = Xc Xcᵀ` of a `k × n` data matrix whose
/// rows are variables and columns are observations. Not divided by `n`.
pub fn covariance(data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if data.nrows() == 0 || data.ncols() < 2 {
        return Err(Error::EmptyInput);
    }
    let centered = center_rows(data);
    Ok(&centered * centered.transpose())
}

/// Subtracts each row's mean from that row.
pub fn center_rows(data: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = data.clone();
    for mut row in out.row_iter_mut() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
    }
    out
}

pub fn row_means(data: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(data.nrows(), data.row_iter().map(|r| r.mean()))
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order. Column `i` of the returned matrix pairs with value `i`.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(m.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).clone_owned();
        // fix the sign so that the largest-magnitude entry is positive
        let pivot = v.iter().copied().fold(0.0f64, |p, x| if x.abs() > p.abs() { x } else { p });
        if pivot < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(dst, &v);
    }
    (values, vectors)
}

/// Top-`rank` singular triplets of `x` (`n × m`), computed from the
/// eigen-decomposition of the smaller Gram matrix.
///
/// Returns `(u, sigma, v)` with `u: n × rank`, `v: m × rank`, singular values
/// in descending order and `x ≈ u · diag(sigma) · vᵀ`.
pub fn truncated_svd(x: &DMatrix<f64>, rank: usize) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (n, m) = x.shape();
    let rank = rank.min(n).min(m);
    let row_side = n <= m;
    let gram = if row_side { x * x.transpose() } else { x.transpose() * x };
    let (values, vectors) = sorted_symmetric_eigen(&gram);
    let sigma = DVector::from_iterator(rank, values.iter().take(rank).map(|v| v.max(0.0).sqrt()));
    let basis = vectors.columns(0, rank).clone_owned();
    // the other side follows from x v = sigma u (or xᵀ u = sigma v)
    let mut other = if row_side { x.transpose() * &basis } else { x * &basis };
    for (j, s) in sigma.iter().enumerate() {
        let mut col = other.column_mut(j);
        if *s > 0.0 {
            col /= *s;
        } else {
            col.fill(0.0);
        }
    }
    if row_side {
        (basis, sigma, other)
    } else {
        (other, sigma, basis)
    }
}

/// Pearson correlation of two equal-length sequences. Zero when either has
/// no variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}
