//! Root-number refined Hecke traces and rank-stratified averages of
//! elliptic curve `a_p`.
//!
//! The crate is split by concern:
//!
//! - [`arith`]: factorization, multiplicative functions, Kronecker symbol
//! - [`classno`]: Hurwitz and weighted class numbers from reduced forms
//! - [`traces`]: exact Hecke traces on newform spaces, signed by `W_N`
//! - [`curves`]: Weierstrass models, batched point counting, dataset input
//! - [`bias`]: weight functions and checkpointed weighted averages
//! - [`verify`]: the property suites behind `apbias verify`

pub mod arith;
pub mod bias;
pub mod classno;
pub mod curves;
pub mod traces;
pub mod verify;

pub use arith::{ExactRational, Factorization};
pub use bias::{
    emit_dat, ec_bias_series, weighted_height_variant, Accumulator, BiasError, BiasSeries, Checkpoint,
    CheckpointGrid, StratumKey, StratumMode, WeightFunction,
};
pub use classno::{hurwitz, h_weighted, reduced_forms, ClassNumberCache, QuadForm};
pub use curves::{
    ap, batch_ap, parse_dataset, ApEntry, ApTable, CharTable, CurveError, CurveRecord, DatasetError,
    DatasetFormat, DatasetOptions, WeierstrassCurve,
};
pub use traces::{
    dim_new_signed, mf_bias_series, prop_bound_check, trace_full_tnwn, trace_new_tn, trace_new_tnwn,
    trace_signed, DimPair, SignedTraces, TraceError, TraceQuery,
};
