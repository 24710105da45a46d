//! Encoding, parallel two-graph decoding and Monte-Carlo simulation of
//! `G_N`-coset codes with successive-cancellation component decoders.
//!
//! Module map:
//!
//! - [`gn`]: the `F^{⊗n}` transform and the sub-code/position index map
//! - [`construction`]: frozen sets, Gaussian-approximation ordering, code-spec files
//! - [`quant`]: fixed-point and floating-point LLR arithmetic
//! - [`sc`]: syndrome check and fast SC component decoding
//! - [`pdf`]: the iterative frame decoder
//! - [`sim`]: BPSK-AWGN channel and seeded BLER sweeps
//! - [`perf`]: cycle, latency and area-efficiency models

pub mod construction;
pub mod error;
pub mod gn;
pub mod pdf;
pub mod perf;
pub mod quant;
pub mod sc;
pub mod sim;

pub use construction::{CodeSpec, FrozenSet};
pub use error::{Error, Result};
pub use gn::GraphId;
pub use pdf::{DampingSchedule, DecoderConfig, FrameDecoder};
pub use quant::QuantSpec;
