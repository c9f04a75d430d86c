//! Color restoration from sparse color fragments and gray-level data.
//!
//! A scene holds exact colors on some pixels and only a scalar projection
//! `L(α r + β g + γ b)` on others. [`projection::estimate`] fits that
//! projection from the overlap, [`voronoi::restore`] copies fragment colors
//! into their Voronoi cells where they agree with the gray data, and
//! [`descent2d::steep_desc_2d`] diffuses color into the rest along level
//! lines. [`pipeline::run_combined`] chains the two. The 1D solver and the
//! Gabor frame operators are standalone building blocks.

pub mod descent1d;
pub mod descent2d;
pub mod error;
pub mod gabor;
pub mod image;
pub mod io;
pub mod pipeline;
pub mod projection;
pub mod voronoi;

pub use descent1d::{steep_desc, Descent1DConfig, Descent1DOutcome, Region, Signal1D};
pub use descent2d::{steep_desc_2d, Descent2DConfig, Descent2DOutcome, SweepOrder};
pub use error::{Result, TinctError};
pub use gabor::{GaborFrame, TFCoefficients};
pub use image::{ColorImage, GrayImage, ObservedScene, PixelMask, PixelState};
pub use pipeline::{run_combined, CombinedOutcome, PipelineConfig, QualityReport};
pub use projection::{estimate, Curve, CurveTable, FitReport, NonlinearProjection};
pub use voronoi::{restore, voronoi_assign, RestoreOutcome, RestoreParams, VoronoiLabels};
