//! Reassigned spectrogram analysis.
//!
//! Computes time-frequency reassigned spectrograms of sampled signals using
//! the efficient three-transform method (one STFT each under the analysis
//! window, its time-ramped variant and its time-derivative variant), with a
//! finite-difference cross-spectral backend for validation. Mixed and
//! second-order phase derivatives drive pruning of the reassigned point
//! cloud into quasi-sinusoidal and impulsive components, and reassigned
//! phases can be corrected to agree with the reassigned coordinates for use
//! in additive models.
//!
//! Frames are independent, so the batch operations are parallel maps over
//! frames (rayon, `parallel` feature, on by default) with deterministic
//! output regardless of schedule.

pub mod error;
pub mod phasecorrect;
pub mod phasederiv;
pub mod prune;
pub mod reassign;
pub mod signal_io;
pub mod spectral;
pub mod windows;

mod exec;

pub use error::{Error, Result};
pub use phasederiv::PhaseDerivField;
pub use prune::{CellClass, ConsensusStats, PruneMask};
pub use reassign::{Backend, ReassignConfig, ReassignedPoint, ReassignedSpectrogram};
pub use signal_io::{SampledSignal, SignalKind, SignalSpec};
pub use spectral::{StftGrid, StftSet};
pub use windows::{WindowKind, WindowSet, WindowSpec};
