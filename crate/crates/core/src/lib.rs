//! Design of spectrally shaped binary modulation sequences.
//!
//! Each sequence of a multi-branch set is found by relaxing a binary quadratic
//! program to a semidefinite program ([`sdp`]), solving it, and rounding the
//! relaxed matrix back to ±1 with Gaussian projections ([`rounding`]). The
//! [`designer`] chains these steps branch by branch, [`analysis`] scores the
//! resulting sets, and [`oracle`] holds brute-force references for small cases.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bases;
pub mod designer;
pub mod error;
pub mod numerics;
pub mod oracle;
pub mod rounding;
pub mod sdp;

pub use bases::{BandGeometry, BandSubspace, BasisKind, GridSpec, SlepianParams};
pub use designer::{
    design_set, design_single, hadamard_set, prbs_set, shifted_single_set, CoherenceTolerance,
    DesignConfig, DesignReport, PowerBound, Provenance, SequenceSet,
};
pub use error::{Error, Result};
pub use numerics::{EigDecomposition, RealSymMatrix};
pub use rounding::{BinarySequence, CandidateRecord, SelectionMode};
pub use sdp::{CoherenceConvention, SdpProblem, SdpSolution, SolveStatus, SolverOptions};
