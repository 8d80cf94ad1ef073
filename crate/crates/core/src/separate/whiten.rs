use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
// shadowed by inherent float methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::warn;
use crate::linalg::{covariance, row_means, sorted_symmetric_eigen};
use crate::{Error, Result, Warning};

/// Eigenvalues below this fraction of the largest one count as zero.
const RANK_TOLERANCE: f64 = 1e-10;

/// PCA whitening of a `k × m` matrix whose rows are variables.
///
/// `rotation` holds the covariance eigenvectors as rows (largest variance
/// first) and `scale` the matching per-observation variances. Applying the
/// first `retained` rows of `rotation` and dividing by `√scale` gives rows
/// with zero mean, unit variance and no correlation.
#[derive(Debug, Clone)]
pub struct WhiteningResult {
    pub rotation: DMatrix<f64>,
    pub scale: DVector<f64>,
    pub reduced_basis: DMatrix<f64>,
    pub retained: usize,
    pub means: DVector<f64>,
    pub warnings: Vec<Warning>,
}

impl WhiteningResult {
    /// `retained × k` matrix mapping centred data to white rows.
    pub fn whitening_matrix(&self) -> DMatrix<f64> {
        let mut w = self.reduced_basis.clone();
        for (i, mut row) in w.row_iter_mut().enumerate() {
            row /= self.scale[i].sqrt();
        }
        w
    }

    /// `k × retained` right inverse of [`whitening_matrix`](Self::whitening_matrix).
    pub fn dewhitening_matrix(&self) -> DMatrix<f64> {
        let mut d = self.reduced_basis.transpose();
        for (j, mut col) in d.column_iter_mut().enumerate() {
            col *= self.scale[j].sqrt();
        }
        d
    }

    /// Centres `data` with the fitted means and whitens it.
    pub fn apply(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if data.nrows() != self.means.len() {
            return Err(Error::DimensionMismatch { expected: self.means.len(), actual: data.nrows() });
        }
        let mut centered = data.clone();
        for (i, mut row) in centered.row_iter_mut().enumerate() {
            row.add_scalar_mut(-self.means[i]);
        }
        Ok(self.whitening_matrix() * centered)
    }
}

pub fn whiten(data: &DMatrix<f64>, retained: usize) -> Result<WhiteningResult> {
    let (k, m) = data.shape();
    if retained == 0 || retained > k.min(m) {
        return Err(Error::InvalidConfig("retained must be in 1..=min(rows, columns)"));
    }
    let c = covariance(data)? / m as f64;
    let (values, vectors) = sorted_symmetric_eigen(&c);
    let scale = values.map(|v| v.max(0.0));
    let top = scale[0];
    if !(top > 0.0) {
        return Err(Error::NoVariance);
    }
    let rank = scale.iter().take_while(|v| **v > RANK_TOLERANCE * top).count();
    let mut warnings = Vec::new();
    let kept = if rank < retained {
        warnings.push(warn(Warning::RankDeficient { requested: retained, rank }));
        rank
    } else {
        retained
    };
    let rotation = vectors.transpose();
    let reduced_basis = rotation.rows(0, kept).clone_owned();
    Ok(WhiteningResult {
        rotation,
        scale,
        reduced_basis,
        retained: kept,
        means: row_means(data),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_covariance(z: &DMatrix<f64>) -> DMatrix<f64> {
        // recomputed from scratch, not via the module under test
        let (k, m) = z.shape();
        DMatrix::from_fn(k, k, |i, j| {
            let mi = z.row(i).sum() / m as f64;
            let mj = z.row(j).sum() / m as f64;
            (0..m).map(|t| (z[(i, t)] - mi) * (z[(j, t)] - mj)).sum::<f64>() / m as f64
        })
    }

    #[test]
    fn random_data_whitens_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mix = DMatrix::from_fn(10, 10, |_, _| rng.gen_range(-1.0..1.0));
        let raw = DMatrix::from_fn(10, 1000, |_, _| rng.gen_range(-1.0..1.0));
        let x = mix * raw;
        let w = whiten(&x, 10).unwrap();
        assert!(w.warnings.is_empty());
        let z = w.apply(&x).unwrap();
        let c = sample_covariance(&z);
        assert!((c - DMatrix::identity(10, 10)).amax() < 1e-6);
        // rotation rows orthonormal, scale non-increasing
        let r = &w.rotation;
        assert!((r * r.transpose() - DMatrix::identity(10, 10)).amax() < 1e-9);
        assert!(w.scale.as_slice().windows(2).all(|p| p[0] >= p[1] && p[1] >= 0.0));
    }

    #[test]
    fn already_white_data_is_a_fixed_point() {
        // orthogonal zero-mean +-1 rows: covariance is exactly the identity
        let x = DMatrix::from_row_slice(2, 4, &[1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0]);
        let w = whiten(&x, 2).unwrap();
        for v in w.rotation.iter() {
            assert!(v.abs() < 1e-12 || (v.abs() - 1.0).abs() < 1e-12);
        }
        assert!((w.scale.clone() - DVector::from_element(2, 1.0)).amax() < 1e-12);
    }

    #[test]
    fn rank_one_data_is_clamped() {
        let base: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = DMatrix::from_fn(2, 200, |r, c| base[c] * if r == 0 { 1.0 } else { -2.0 });
        let w = whiten(&x, 2).unwrap();
        assert_eq!(w.retained, 1);
        assert_eq!(w.warnings, alloc::vec![Warning::RankDeficient { requested: 2, rank: 1 }]);
        let z = w.apply(&x).unwrap();
        assert_eq!(z.nrows(), 1);
        assert!((sample_covariance(&z)[(0, 0)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_retained() {
        let x = DMatrix::from_fn(3, 10, |r, c| (r * c) as f64);
        assert!(whiten(&x, 0).is_err());
        assert!(whiten(&x, 4).is_err());
        assert_eq!(whiten(&DMatrix::from_element(2, 5, 1.0), 1).unwrap_err(), Error::NoVariance);
    }

    #[test]
    fn dewhitening_inverts_whitening() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = DMatrix::from_fn(4, 300, |_, _| rng.gen_range(-1.0..1.0));
        let w = whiten(&x, 4).unwrap();
        let prod = w.whitening_matrix() * w.dewhitening_matrix();
        assert!((prod - DMatrix::identity(4, 4)).amax() < 1e-9);
    }
}
