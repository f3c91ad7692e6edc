#![cfg_attr(test, allow(clippy::approx_constant))]

pub mod channels;
pub mod cli;
pub mod config;
pub mod error;
pub mod fluctuation;
pub mod matcore;
pub mod presets;
pub mod random;
pub mod reversal;
pub mod state;
pub mod tolerance;
pub mod tpm;

pub use channels::{
    build_covariant, build_incovariant, check_covariance, stationary_state, ChannelClass, KrausChannel, StationaryState,
};
pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, SpectralDecomposition, C64};
pub use state::DensityMatrix;
pub use tolerance::Tolerances;
