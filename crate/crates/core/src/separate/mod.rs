//! Independent subspace analysis: un-mixing a mono spectrogram into
//! per-source streams.

mod density;
mod ica;
mod isa;
mod mixing;
mod whiten;

pub use density::{
    kl_divergence, mutual_information, MutualInformation, PdfHistogram, DEFAULT_BINS, EPSILON_FLOOR,
    RECOMMENDED_SAMPLES,
};
pub use ica::{ica_rotation, pair_contrast, IcaConfig, IcaRotation};
pub use isa::{isa_separate, IcaBasis, IsaConfig, SeparatedStream, Separation, MIN_FRAMES, RESYNTHESIS_FLOOR};
pub use mixing::{mix, unmix, MixingModel};
pub use whiten::{whiten, WhiteningResult};
