//! BFGS minimization of the block-encoding cost and the search protocols
//! built on it.

mod bfgs;
mod driver;

pub use bfgs::{bfgs_minimize, BfgsOptions, BfgsResult, StopReason, TracePoint};
pub use driver::{
    derived_rng, greedy_generator_search, layer_threshold_search, multistart_encode,
    optimize_circuit, EncodeReport, GreedyReport, LayerTrial, OptimizeOptions, Stream,
    ThresholdOptions, ThresholdReport,
};
