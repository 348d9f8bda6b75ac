//! RAES ("Request a link, then Accept if Enough Space") sparsifies a dense
//! regular expander into a bounded-degree expander by a synchronous
//! request/accept protocol driven entirely by an explicit random tape.
//!
//! The crate provides:
//!
//! - [`graph`]: regular graph generators, cut counting, the one-sided
//!   expander-mixing bound, and second-eigenvalue computation;
//! - [`protocol`]: a deterministic, tape-driven simulator of the protocol
//!   with full round-by-round instrumentation;
//! - [`analysis`]: expansion measurement of the produced subgraph, cut
//!   fractions, semi-saturated/critical node classification, and batch
//!   experiment statistics;
//! - [`codec`]: the lossless compressed encoding of execution randomness,
//!   its decoder, the bit-cost ledger, and the single-node termination
//!   witness codec;
//! - [`formats`]: JSON/binary file formats for all artifacts.
//!
//! With the `parallel` feature (on by default) the data-parallel kernels
//! (batch trials, exhaustive cut enumeration, matrix-vector products) run on
//! rayon; without it everything falls back to the sequential paths, which
//! are also exported for benchmarking.

pub mod analysis;
pub mod codec;
pub mod formats;
pub mod graph;
pub mod protocol;
