//! Histogram density estimates and the information measures built on them.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
// shadowed by inherent float methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::warn;
use crate::{Error, Result, Warning};

pub const DEFAULT_BINS: usize = 64;
/// Added to every bin before taking logarithms.
pub const EPSILON_FLOOR: f64 = 1e-12;
/// Below this many samples histogram estimates get a warning.
pub const RECOMMENDED_SAMPLES: usize = 100;

/// Amplitude histogram approximating a probability density.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfHistogram {
    bin_edges: Vec<f64>,
    counts: Vec<f64>,
    mass: f64,
}

impl PdfHistogram {
    /// `bins` equal-width bins over `[min, max]` of the samples. A constant
    /// input gets a unit-wide range centred on the value.
    pub fn from_samples(samples: &[f64], bins: usize) -> Result<Self> {
        if samples.is_empty() || bins == 0 {
            return Err(Error::EmptyInput);
        }
        let range = Range::of(samples);
        let mut counts = vec![0.0; bins];
        for &s in samples {
            counts[range.index(s, bins)] += 1.0;
        }
        Ok(Self { bin_edges: range.edges(bins), counts, mass: samples.len() as f64 })
    }

    pub fn from_counts(bin_edges: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        if counts.is_empty() || bin_edges.len() != counts.len() + 1 {
            return Err(Error::BinningMismatch);
        }
        if counts.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::InvalidConfig("histogram counts must be non-negative"));
        }
        let mass = counts.iter().sum();
        Ok(Self { bin_edges, counts, mass })
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Counts divided by the mass; sums to one.
    pub fn normalized(&self) -> Vec<f64> {
        self.counts.iter().map(|c| c / self.mass).collect()
    }
}

#[derive(Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(samples: &[f64]) -> Self {
        let (lo, hi) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if hi > lo {
            Range { lo, hi }
        } else {
            Range { lo: lo - 0.5, hi: hi + 0.5 }
        }
    }

    fn index(&self, s: f64, bins: usize) -> usize {
        let pos = (s - self.lo) / (self.hi - self.lo) * bins as f64;
        (pos.floor().max(0.0) as usize).min(bins - 1)
    }

    fn edges(&self, bins: usize) -> Vec<f64> {
        (0..=bins).map(|i| self.lo + (self.hi - self.lo) * i as f64 / bins as f64).collect()
    }
}

/// `KL(p‖q) = Σ p ln(p/q)` in nats over two histograms with the same
/// binning. Both are normalised and floored by [`EPSILON_FLOOR`] first.
pub fn kl_divergence(p: &PdfHistogram, q: &PdfHistogram) -> Result<f64> {
    if p.counts.len() != q.counts.len() || p.bin_edges != q.bin_edges {
        return Err(Error::BinningMismatch);
    }
    if !(p.mass > 0.0) || !(q.mass > 0.0) {
        return Err(Error::EmptyInput);
    }
    Ok(kl_probabilities(&p.normalized(), &q.normalized()))
}

pub(crate) fn kl_probabilities(p: &[f64], q: &[f64]) -> f64 {
    let sum: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let (a, b) = (a + EPSILON_FLOOR, b + EPSILON_FLOOR);
            a * (a / b).ln()
        })
        .sum();
    sum.max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutualInformation {
    pub nats: f64,
    pub warnings: Vec<Warning>,
}

/// Mutual information between the rows of a `k × m` matrix, estimated as
/// the KL divergence between the joint 2-D histogram and the product of
/// the marginals. For `k > 2` the pairwise values are summed.
pub fn mutual_information(rows: &DMatrix<f64>, bins: usize) -> Result<MutualInformation> {
    let (k, m) = rows.shape();
    if k < 2 {
        return Err(Error::DimensionMismatch { expected: 2, actual: k });
    }
    if m == 0 || bins == 0 {
        return Err(Error::EmptyInput);
    }
    let mut warnings = Vec::new();
    if m < RECOMMENDED_SAMPLES {
        warnings.push(warn(Warning::InsufficientData { samples: m, recommended: RECOMMENDED_SAMPLES }));
    }
    let rows: Vec<Vec<f64>> = rows.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut nats = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            nats += pairwise_mi(&rows[i], &rows[j], bins);
        }
    }
    Ok(MutualInformation { nats, warnings })
}

pub(crate) fn pairwise_mi(a: &[f64], b: &[f64], bins: usize) -> f64 {
    let (ra, rb) = (Range::of(a), Range::of(b));
    let n = a.len() as f64;
    let mut joint = vec![0.0; bins * bins];
    let mut pa = vec![0.0; bins];
    let mut pb = vec![0.0; bins];
    for (&x, &y) in a.iter().zip(b) {
        let (i, j) = (ra.index(x, bins), rb.index(y, bins));
        joint[i * bins + j] += 1.0 / n;
        pa[i] += 1.0 / n;
        pb[j] += 1.0 / n;
    }
    let product: Vec<f64> = (0..bins * bins).map(|ij| pa[ij / bins] * pb[ij % bins]).collect();
    kl_probabilities(&joint, &product)
}
