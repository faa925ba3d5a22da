//! Wavefront extraction from band-limited Fourier samples.
//!
//! The crate takes continuous Fourier data of a piecewise-constant image
//! (plus a smooth, band-limited texture), applies a bank of directional
//! band-pass filters, turns the strongest filter responses into *surfels*
//! (a position plus an unoriented normal direction) and finally links the
//! surfels into closed curves.
//!
//! Module map:
//!
//! * [`grid`]: k-space and image grids, the inverse transform, noise.
//! * [`special`]: the Bessel function `J1`.
//! * [`phantom`]: analytic scenes and their exact Fourier transforms.
//! * [`asymptotics`]: stationary-phase approximations and their error constant.
//! * [`filters`]: directional filters and the constants that govern them.
//! * [`wavefront`]: thresholding, clustering and surfel extraction.
//! * [`segmentation`]: surfel linking and Hermite interpolation.
//! * [`io`]: file formats (k-space, CSV, PGM, SVG).
//! * [`truth`]: ground-truth edge geometry for scoring results.
//! * [`pipeline`]: end-to-end runs and constant reports.

// Parameter checks are written as `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod filters;
pub mod geom;
pub mod grid;
pub mod io;
pub mod phantom;
pub mod pipeline;
mod quad;
pub mod segmentation;
pub mod special;
pub mod truth;
pub mod wavefront;

pub use error::{Error, Result};
pub use geom::Vec2;
pub use grid::{Convention, ImageGrid, SpectralGrid};
