use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::ica::{ica_rotation, IcaConfig};
use super::whiten::whiten;
use super::MixingModel;
use crate::error::warn;
use crate::linalg::truncated_svd;
use crate::spectral::{istft_floored, stft, StftConfig};
use crate::{AudioBuffer, Error, Result, Warning};

/// Window-weight floor, relative to the window peak, used when
/// resynthesising subspace spectrograms.
pub const RESYNTHESIS_FLOOR: f64 = 0.5;

/// Minimum number of STFT frames for a separation.
pub const MIN_FRAMES: usize = 8;

/// Which reduced basis the ICA rotation runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IcaBasis {
    /// Rows are temporal activations (one value per frame).
    Temporal,
    /// Rows are spectral profiles (one value per frequency bin). Sources
    /// that occupy different bands give near-disjoint rows here even when
    /// their activations are locked to a shared grid.
    #[default]
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsaConfig {
    pub components: usize,
    /// `None` scales the window to the input with [`StftConfig::for_sample_rate`].
    pub stft: Option<StftConfig>,
    /// SVD rank kept before ICA; defaults to `components`.
    pub retained: Option<usize>,
    pub ica: IcaConfig,
    pub basis: IcaBasis,
}

impl IsaConfig {
    pub fn new(components: usize) -> Self {
        Self {
            components,
            stft: None,
            retained: None,
            ica: IcaConfig::default(),
            basis: IcaBasis::default(),
        }
    }

    /// The transform used for a mixture at `sample_rate`.
    pub fn stft_for(&self, sample_rate: u32) -> StftConfig {
        self.stft.unwrap_or_else(|| StftConfig::for_sample_rate(sample_rate))
    }
}

/// One separated source.
#[derive(Debug, Clone)]
pub struct SeparatedStream {
    pub audio: AudioBuffer,
    /// `bins × frames` magnitudes, `spectral_basis ⊗ temporal_weights`.
    pub subspace_spectrogram: DMatrix<f64>,
    pub temporal_weights: Vec<f64>,
    pub spectral_basis: Vec<f64>,
    /// Position in the output, which is sorted by descending energy.
    pub component_index: usize,
}

impl SeparatedStream {
    pub fn energy(&self) -> f64 {
        self.subspace_spectrogram.norm_squared()
    }
}

#[derive(Debug, Clone)]
pub struct Separation {
    pub streams: Vec<SeparatedStream>,
    /// Un-mixing from the reduced SVD coordinates to the independent
    /// components, in ICA order (before the energy sort).
    pub model: Option<MixingModel>,
    pub warnings: Vec<Warning>,
}

/// Independent subspace analysis of a mono mixture.
///
/// The magnitude spectrogram `X` is reduced to rank `r` by SVD,
/// `X ≈ U Σ Vᵀ`. ICA (whitening plus rotation) runs on the rows of
/// `(U Σ)ᵀ` (spectral basis, the default) or of `Σ Vᵀ` (temporal basis) and
/// the other factor is carried through the inverse un-mixing, so the
/// per-component rank-1 spectrograms add up to the rank-`r` approximation
/// of `X`. Each stream is
/// resynthesised with the mixture phase; negative magnitudes are clipped
/// to zero for resynthesis only.
///
/// With `components == 1` there is nothing to separate: the single stream
/// carries the mixture audio unchanged alongside the rank-1 factors of `X`.
pub fn isa_separate(mixture: &AudioBuffer, config: &IsaConfig) -> Result<Separation> {
    if mixture.channel_count() != 1 {
        return Err(Error::InvalidBuffer("separation input must be mono"));
    }
    if config.components == 0 {
        return Err(Error::InvalidConfig("components must be at least 1"));
    }
    let retained = config.retained.unwrap_or(config.components);
    if retained < config.components {
        return Err(Error::InvalidConfig("retained rank must be at least the component count"));
    }
    let stft_config = config.stft_for(mixture.sample_rate());
    stft_config.validate()?;
    let frames = stft_config.frame_count(mixture.frames());
    if frames < MIN_FRAMES {
        return Err(Error::TooShort {
            needed: stft_config.window_length + (MIN_FRAMES - 1) * stft_config.hop,
            actual: mixture.frames(),
        });
    }
    let spec = stft(mixture, &stft_config)?;
    let mag = spec.magnitude();
    let (n, m) = mag.shape();
    if retained > n.min(m) {
        return Err(Error::InvalidConfig("retained rank exceeds spectrogram dimensions"));
    }
    let mut warnings = Vec::new();

    if mag.iter().all(|v| *v == 0.0) {
        let streams = (0..config.components).map(|i| silent_stream(mixture, n, m, i)).collect();
        return Ok(Separation { streams, model: None, warnings });
    }

    let (u, sigma, v) = truncated_svd(&mag, retained);
    if config.components == 1 {
        let sign = if v.column(0).sum() < 0.0 { -1.0 } else { 1.0 };
        let spectral: Vec<f64> = u.column(0).iter().map(|x| sign * x * sigma[0]).collect();
        let temporal: Vec<f64> = v.column(0).iter().map(|x| sign * x).collect();
        let stream = SeparatedStream {
            audio: mixture.clone(),
            subspace_spectrogram: DMatrix::from_fn(n, m, |f, t| spectral[f] * temporal[t]),
            temporal_weights: temporal,
            spectral_basis: spectral,
            component_index: 0,
        };
        return Ok(Separation { streams: alloc::vec![stream], model: None, warnings });
    }

    let rank = sigma.iter().take_while(|s| **s > 1e-10 * sigma[0]).count();
    let r = if rank < retained {
        warnings.push(warn(Warning::RankDeficient { requested: retained, rank }));
        rank
    } else {
        retained
    };
    let u = u.columns(0, r).clone_owned();
    let v = v.columns(0, r).clone_owned();
    let sigma = DVector::from_iterator(r, sigma.iter().take(r).copied());

    // rows to un-mix, and the basis they are expressed in
    let (rows, basis) = match config.basis {
        IcaBasis::Temporal => (DMatrix::from_diagonal(&sigma) * v.transpose(), u),
        IcaBasis::Spectral => (DMatrix::from_diagonal(&sigma) * u.transpose(), v),
    };

    let (unmixing, mixing) = if r >= 2 {
        let white = whiten(&rows, r)?;
        warnings.extend(white.warnings.iter().cloned());
        let z = white.apply(&rows)?;
        if white.retained < r {
            // centring removed a direction the uncentred SVD still had
            return Err(Error::NoVariance);
        }
        let rot = ica_rotation(&z, &config.ica)?;
        warnings.extend(rot.warnings);
        let wh = white.whitening_matrix();
        let model = MixingModel::from_unmixing(rot.model.unmixing() * wh)?;
        (model.unmixing().clone(), model.mixing().clone())
    } else {
        (DMatrix::identity(1, 1), DMatrix::identity(1, 1))
    };

    let sources = &unmixing * &rows;
    let weights = &basis * &mixing;

    let mut components: Vec<(Vec<f64>, Vec<f64>)> = (0..r)
        .map(|c| {
            let mut src: Vec<f64> = sources.row(c).iter().copied().collect();
            let mut w: Vec<f64> = weights.column(c).iter().copied().collect();
            if src.iter().sum::<f64>() < 0.0 {
                src.iter_mut().for_each(|x| *x = -*x);
                w.iter_mut().for_each(|x| *x = -*x);
            }
            match config.basis {
                IcaBasis::Temporal => (w, src),
                IcaBasis::Spectral => (src, w),
            }
        })
        .collect();

    let energy = |(f, t): &(Vec<f64>, Vec<f64>)| {
        f.iter().map(|x| x * x).sum::<f64>() * t.iter().map(|x| x * x).sum::<f64>()
    };
    components.sort_by(|a, b| energy(b).total_cmp(&energy(a)));
    components.truncate(config.components);

    let mut streams = Vec::with_capacity(components.len());
    for (index, (spectral, temporal)) in components.into_iter().enumerate() {
        let sub = DMatrix::from_fn(n, m, |f, t| spectral[f] * temporal[t]);
        let audio = istft_floored(&spec.with_magnitude(&sub.map(|x| x.max(0.0)))?, RESYNTHESIS_FLOOR)?;
        streams.push(SeparatedStream {
            audio,
            subspace_spectrogram: sub,
            temporal_weights: temporal,
            spectral_basis: spectral,
            component_index: index,
        });
    }
    // a rank-deficient mixture still yields the requested stream count
    while streams.len() < config.components {
        streams.push(silent_stream(mixture, n, m, streams.len()));
    }
    let model = MixingModel::new(mixing).ok();
    Ok(Separation { streams, model, warnings })
}

fn silent_stream(mixture: &AudioBuffer, bins: usize, frames: usize, index: usize) -> SeparatedStream {
    SeparatedStream {
        audio: AudioBuffer::mono(alloc::vec![0.0; mixture.frames()], mixture.sample_rate())
            .expect("rate already validated"),
        subspace_spectrogram: DMatrix::zeros(bins, frames),
        temporal_weights: alloc::vec![0.0; frames],
        spectral_basis: alloc::vec![0.0; bins],
        component_index: index,
    }
}
