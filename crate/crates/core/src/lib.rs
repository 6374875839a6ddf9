//! Eye-movement parameters from 8-bit gray images.
//!
//! The chain runs from Haar-cascade face and eye localisation through
//! histogram-valley thresholding and binary morphology to a pupil center and
//! radius, then on to gaze calibration and a pupil-dilation tension score.

pub mod cascade;
pub mod error;
pub mod gaze;
pub mod imagecore;
pub mod io;
pub mod morph;
pub mod pipeline;
pub mod pupil;
pub mod synth;
pub mod threshold;

pub use error::{Error, Result};
pub use imagecore::{BinaryImage, GrayImage, Rect};
pub use pupil::{detect_pupil, PupilConfig, PupilEstimate};
