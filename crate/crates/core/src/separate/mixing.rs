use nalgebra::DMatrix;

use crate::{Error, Result};

/// A square, full-rank linear mixing `Y = M X` together with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingModel {
    mixing: DMatrix<f64>,
    unmixing: DMatrix<f64>,
}

impl MixingModel {
    pub fn new(mixing: DMatrix<f64>) -> Result<Self> {
        if !mixing.is_square() || mixing.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: mixing.nrows(), actual: mixing.ncols() });
        }
        let unmixing = mixing.clone().try_inverse().ok_or(Error::Singular)?;
        if unmixing.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular);
        }
        Ok(Self { mixing, unmixing })
    }

    pub fn from_unmixing(unmixing: DMatrix<f64>) -> Result<Self> {
        let inv = Self::new(unmixing)?;
        Ok(Self { mixing: inv.unmixing, unmixing: inv.mixing })
    }

    /// Model for an orthonormal un-mixing matrix; the mixing matrix is its
    /// transpose.
    pub(crate) fn orthonormal(unmixing: DMatrix<f64>) -> Self {
        Self { mixing: unmixing.transpose(), unmixing }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mixing: DMatrix::identity(dim, dim), unmixing: DMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.mixing.nrows()
    }

    pub fn mixing(&self) -> &DMatrix<f64> {
        &self.mixing
    }

    pub fn unmixing(&self) -> &DMatrix<f64> {
        &self.unmixing
    }

    /// `M` applied after `self`: the mixing of the composed model is
    /// `other.mixing · self.mixing`.
    pub fn then(&self, other: &MixingModel) -> Result<MixingModel> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        Ok(MixingModel {
            mixing: &other.mixing * &self.mixing,
            unmixing: &self.unmixing * &other.unmixing,
        })
    }
}

/// Mixes the rows of `sources` (`k × n`, one signal per row): `Y = M X`.
pub fn mix(sources: &DMatrix<f64>, model: &MixingModel) -> Result<DMatrix<f64>> {
    check_rows(sources, model)?;
    Ok(model.mixing() * sources)
}

/// Recovers sources from mixed rows: `X = M⁻¹ Y`.
pub fn unmix(mixed: &DMatrix<f64>, model: &MixingModel) -> Result<DMatrix<f64>> {
    check_rows(mixed, model)?;
    Ok(model.unmixing() * mixed)
}

fn check_rows(data: &DMatrix<f64>, model: &MixingModel) -> Result<()> {
    if data.nrows() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), actual: data.nrows() });
    }
    Ok(())
}
