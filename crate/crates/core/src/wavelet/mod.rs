//! Orthogonal filter banks, multilevel decomposition and the dyadic projection oracle.

mod dwt;
mod filters;
mod haar;

pub use dwt::{
    analysis_step, mdwd, mdwd_with_boundary, reconstruct_branch, synthesis_step, Boundary, Branch,
    LevelCoeffs, WaveletPyramid,
};
pub use filters::{filter_bank, FilterPair, WaveletKind};
pub use haar::{haar_project, HaarProjection};
