//! Phase retrieval of sparse structured signals from Fourier intensities
//! sampled along a few lines.

// `!(x > 0.0)` style checks are deliberate: NaN has to fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambiguity;
pub mod error;
pub mod line;
pub mod multi;
pub mod oracle;
pub mod prony;
pub mod signal;
pub mod synth;

pub use ambiguity::{
    apply_frame, best_match_error, canonicalize, AmbiguityFrame, ErrorReport, MatchReport,
};
pub use error::{Error, Result};
pub use line::{retrieve_line, LabeledProjection, LineOptions};
pub use multi::{
    retrieve_2d_generic, retrieve_nd, AdaptiveDirections, CountingSampler, DirectionBundle,
    LineSampler, NdConfig, NdSolution, SampleBank,
};
pub use prony::{apm, ExponentialSum, PronyConfig, RootMethod};
pub use signal::{auto_step, LineSampleSet, SparseSignal, StructureKernel};
