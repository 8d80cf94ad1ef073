//! Final un-mixing rotation by fourth-order cumulant minimisation.
//!
//! For whitened data every orthonormal rotation keeps the total energy of
//! the fourth-order cumulant tensor, so minimising the cross-cumulants
//! (entries with mixed indices) concentrates it on the diagonal, i.e. makes
//! the outputs as non-Gaussian and as independent as fourth-order
//! statistics can tell. In two dimensions the contrast is scanned over a
//! grid of angles in `[0°, 90°)`; its local minima are candidate rotations
//! and the one with the lowest histogram mutual information wins. More than
//! two rows are handled with Jacobi sweeps over row pairs.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
// shadowed by inherent float methods whenever std is linked
#[allow(unused_imports)]
use num_traits::{Euclid, Float};

use super::density::{pairwise_mi, DEFAULT_BINS};
use super::MixingModel;
use crate::error::warn;
use crate::{Error, Result, Warning};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcaConfig {
    /// Grid points over `[0°, 90°)`.
    pub angle_steps: usize,
    /// Histogram bins per variable for the mutual-information tie-break.
    pub mi_bins: usize,
    pub max_sweeps: usize,
}

impl Default for IcaConfig {
    fn default() -> Self {
        Self { angle_steps: 90, mi_bins: DEFAULT_BINS, max_sweeps: 12 }
    }
}

#[derive(Debug, Clone)]
pub struct IcaRotation {
    /// Orthonormal model whose un-mixing matrix is the rotation.
    pub model: MixingModel,
    /// For two rows: the angle φ of the un-mixing rotation
    /// `[[cos φ, -sin φ], [sin φ, cos φ]]`, in `[0, π/2)`.
    pub angle: Option<f64>,
    pub warnings: Vec<Warning>,
}

/// Second- and fourth-order moments of a zero-mean pair.
#[derive(Debug, Clone, Copy)]
struct PairMoments {
    m2: [[f64; 2]; 2],
    m4: [[[[f64; 2]; 2]; 2]; 2],
}

impl PairMoments {
    fn of(a: &[f64], b: &[f64]) -> Self {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let (mut s2, mut s4) = ([0.0; 3], [0.0; 5]);
        for (&x, &y) in a.iter().zip(b) {
            let (x, y) = (x - ma, y - mb);
            s2[0] += x * x;
            s2[1] += x * y;
            s2[2] += y * y;
            s4[0] += x * x * x * x;
            s4[1] += x * x * x * y;
            s4[2] += x * x * y * y;
            s4[3] += x * y * y * y;
            s4[4] += y * y * y * y;
        }
        let mut m2 = [[0.0; 2]; 2];
        let mut m4 = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m2[i][j] = s2[i + j] / n;
                for k in 0..2 {
                    for l in 0..2 {
                        m4[i][j][k][l] = s4[i + j + k + l] / n;
                    }
                }
            }
        }
        Self { m2, m4 }
    }

    fn rotated(&self, r: &[[f64; 2]; 2]) -> Self {
        let mut m2 = [[0.0; 2]; 2];
        let mut m4 = [[[[0.0; 2]; 2]; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let mut s = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        s += r[a][i] * r[b][j] * self.m2[i][j];
                    }
                }
                m2[a][b] = s;
                for c in 0..2 {
                    for d in 0..2 {
                        let mut s = 0.0;
                        for i in 0..2 {
                            for j in 0..2 {
                                for k in 0..2 {
                                    for l in 0..2 {
                                        s += r[a][i] * r[b][j] * r[c][k] * r[d][l] * self.m4[i][j][k][l];
                                    }
                                }
                            }
                        }
                        m4[a][b][c][d] = s;
                    }
                }
            }
        }
        Self { m2, m4 }
    }

    fn cumulant(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let m = &self.m2;
        self.m4[i][j][k][l] - m[i][j] * m[k][l] - m[i][k] * m[j][l] - m[i][l] * m[j][k]
    }

    /// Sum of squared cumulants with mixed indices.
    fn cross_contrast(&self) -> f64 {
        let mut s = 0.0;
        for idx in 1..15usize {
            let (i, j, k, l) = (idx & 1, (idx >> 1) & 1, (idx >> 2) & 1, (idx >> 3) & 1);
            let c = self.cumulant(i, j, k, l);
            s += c * c;
        }
        s
    }

    /// Sum of all squared cumulants; invariant under rotation for white data.
    fn total(&self) -> f64 {
        let mut s = 0.0;
        for idx in 0..16usize {
            let c = self.cumulant(idx & 1, (idx >> 1) & 1, (idx >> 2) & 1, (idx >> 3) & 1);
            s += c * c;
        }
        s
    }
}

fn rotation(phi: f64) -> [[f64; 2]; 2] {
    let (s, c) = phi.sin_cos();
    [[c, -s], [s, c]]
}

/// Cross-cumulant contrast of a row pair after rotating it by `phi`.
pub fn pair_contrast(a: &[f64], b: &[f64], phi: f64) -> f64 {
    PairMoments::of(a, b).rotated(&rotation(phi)).cross_contrast()
}

struct PairSolution {
    angle: f64,
    degenerate: bool,
}

fn solve_pair(a: &[f64], b: &[f64], config: &IcaConfig) -> PairSolution {
    let moments = PairMoments::of(a, b);
    let [[saa, sab], [_, sbb]] = moments.m2;
    // linearly dependent rows leave no second direction to rotate into
    let det = saa * sbb - sab * sab;
    if !(det > 1e-9 * (saa * sbb).max(f64::MIN_POSITIVE)) {
        return PairSolution { angle: 0.0, degenerate: true };
    }
    let steps = config.angle_steps.max(4);
    let step = FRAC_PI_2 / steps as f64;
    let grid: Vec<f64> =
        (0..steps).map(|g| moments.rotated(&rotation(g as f64 * step)).cross_contrast()).collect();
    let (lo, hi) = grid.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    let total = moments.total();
    if !(hi - lo > 1e-6 * total) {
        return PairSolution { angle: 0.0, degenerate: true };
    }

    // local minima on the circular grid, refined by a parabola through the
    // neighbours
    let mut candidates = Vec::new();
    for g in 0..steps {
        let prev = grid[(g + steps - 1) % steps];
        let next = grid[(g + 1) % steps];
        let c = grid[g];
        if c < prev && c <= next {
            let curv = prev - 2.0 * c + next;
            let offset = if curv > 0.0 { 0.5 * (prev - next) / curv } else { 0.0 };
            let phi = (g as f64 + offset.clamp(-0.5, 0.5)) * step;
            candidates.push((Euclid::rem_euclid(&phi, &FRAC_PI_2), c));
        }
    }
    if candidates.is_empty() {
        let g = grid.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).map_or(0, |(g, _)| g);
        candidates.push((g as f64 * step, grid[g]));
    }

    let mut rotated_a = alloc::vec![0.0; a.len()];
    let mut rotated_b = alloc::vec![0.0; a.len()];
    let mut best = (f64::INFINITY, f64::INFINITY, 0.0);
    for &(phi, contrast) in &candidates {
        let r = rotation(phi);
        for t in 0..a.len() {
            rotated_a[t] = r[0][0] * a[t] + r[0][1] * b[t];
            rotated_b[t] = r[1][0] * a[t] + r[1][1] * b[t];
        }
        let mi = pairwise_mi(&rotated_a, &rotated_b, config.mi_bins);
        if mi < best.0 || (mi == best.0 && contrast < best.1) {
            best = (mi, contrast, phi);
        }
    }
    PairSolution { angle: best.2, degenerate: false }
}

/// Estimates the rotation that completes un-mixing of whitened rows
/// (`k × m`, `k ≥ 2`).
pub fn ica_rotation(whitened: &DMatrix<f64>, config: &IcaConfig) -> Result<IcaRotation> {
    let (k, m) = whitened.shape();
    if k < 2 {
        return Err(Error::DimensionMismatch { expected: 2, actual: k });
    }
    if m < 2 {
        return Err(Error::EmptyInput);
    }
    let mut rows: Vec<Vec<f64>> = whitened.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut warnings = Vec::new();

    if k == 2 {
        let sol = solve_pair(&rows[0], &rows[1], config);
        if sol.degenerate {
            warnings.push(warn(Warning::DegenerateContrast));
        }
        let r = rotation(sol.angle);
        let unmixing = DMatrix::from_row_slice(2, 2, &[r[0][0], r[0][1], r[1][0], r[1][1]]);
        return Ok(IcaRotation {
            model: MixingModel::orthonormal(unmixing),
            angle: Some(sol.angle),
            warnings,
        });
    }

    let mut unmixing = DMatrix::<f64>::identity(k, k);
    let step = FRAC_PI_2 / config.angle_steps.max(4) as f64;
    let mut any_solved = false;
    for _ in 0..config.max_sweeps {
        let mut moved = false;
        for p in 0..k {
            for q in p + 1..k {
                let sol = solve_pair(&rows[p], &rows[q], config);
                if sol.degenerate {
                    continue;
                }
                any_solved = true;
                // φ and φ - 90° differ by a permutation; take the smaller move
                let phi = if sol.angle > FRAC_PI_2 / 2.0 { sol.angle - FRAC_PI_2 } else { sol.angle };
                if phi.abs() < 0.25 * step {
                    continue;
                }
                moved = true;
                let (s, c) = phi.sin_cos();
                let (head, tail) = rows.split_at_mut(q);
                for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    (*x, *y) = (c * *x - s * *y, s * *x + c * *y);
                }
                for j in 0..k {
                    let (x, y) = (unmixing[(p, j)], unmixing[(q, j)]);
                    unmixing[(p, j)] = c * x - s * y;
                    unmixing[(q, j)] = s * x + c * y;
                }
            }
        }
        if !moved {
            break;
        }
    }
    if !any_solved {
        warnings.push(warn(Warning::DegenerateContrast));
    }
    Ok(IcaRotation { model: MixingModel::orthonormal(unmixing), angle: None, warnings })
}
