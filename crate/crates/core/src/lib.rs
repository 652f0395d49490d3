//! Spatially varying BRDF recovery from an ambient photo and a point-lit
//! radiance map of a planar material sample.

pub mod brdf;
pub mod bundle;
pub mod clustering;
pub mod error;
pub mod fitting;
pub mod geometry;
pub mod grid;
pub mod heightfield;
pub mod imageio;
pub mod optim;
pub mod preview;
pub mod radiometry;
pub mod session;
pub mod synth;

pub use error::{Error, Result};
