//! Joint elastic alignment of multivariate quasi-periodic functional data.
//!
//! The crate is organised bottom-up:
//!
//! - [`fungrid`]: discretised functions and warps on equidistant grids, the
//!   square-root slope function (SRSF) transform pair, the warping group
//!   action and the periodic extension / split operators.
//! - [`sphere`]: geometry of warp SRSFs on the positive orthant of the unit
//!   Hilbert sphere and the Karcher mean of warping functions.
//! - [`warpnet`]: the 1D convolutional warping network, its unit-simplex
//!   output activation, the Fisher-Rao loss, reverse-mode gradients and Adam.
//! - [`jam`]: the outer joint-alignment loop, template extraction and the
//!   multiscale (local/global) decomposition of warps.
//! - [`simgen`]: the two simulation scenarios with planted ground truth.
//! - [`metrics`]: cumulative cross-sectional variance and template distance.
//! - [`io`]: on-disk dataset and result formats.

pub mod error;
pub mod fungrid;
pub mod io;
pub mod jam;
pub mod metrics;
pub mod simgen;
pub mod sphere;
pub mod warpnet;

pub use error::{Error, Result};
pub use fungrid::{FunctionSample, Grid, PeriodStructure, SrsfSample, Warp};
pub use io::{Dataset, GroundTruth};
pub use jam::{AlignmentResult, AnchorRule, JamConfig, TemplateMode, TrainedAligner};
pub use metrics::VarianceReport;
pub use simgen::{Scenario, SimConfig, SimDataset};
pub use sphere::{KarcherConfig, PsiPoint, TangentVector};
pub use warpnet::{NetConfig, WarpNet};

