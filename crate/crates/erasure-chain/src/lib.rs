//! Simulation library for a concatenated forward-error-correction receiver
//! chain with learned erasure marking and decoder feedback.
//!
//! The transmit side of the modeled link is a classic deep-space stack: the
//! frame payload is split across several Reed-Solomon codewords, the
//! codewords are block-interleaved, and the interleaved byte stream is run
//! through a rate-1/2 convolutional code and BPSK-modulated onto an AWGN
//! channel. The receive side is where this crate earns its name. Beyond the
//! conventional soft-input Viterbi + RS decode, the [`pipeline`] module
//! iterates the chain: bytes recovered by one RS decode are *pinned* in the
//! Viterbi trellis on the next pass, and a small attention-based byte scorer
//! ([`model`]) predicts which of the remaining bytes are corrupted so the RS
//! decoder can treat them as erasures instead of errors — doubling how far a
//! fixed parity budget stretches.
//!
//! Modules, bottom up:
//!
//! * [`rng`] — seedable xoshiro256++ generator with per-frame substreams.
//! * [`gf`] — GF(2^m) arithmetic over exp/log tables.
//! * [`rs`] — systematic Reed-Solomon encode and errors-and-erasures decode.
//! * [`conv`] — rate-1/2 convolutional encoder and soft-input Viterbi
//!   decoder with bit pinning.
//! * [`frame`] — frame geometry, block interleaving, CRC-16, bit packing.
//! * [`channel`] — BPSK over AWGN and LLR computation.
//! * [`dataset`] — synthetic frame generators and corruption labeling.
//! * [`model`] — the byte-corruption scorer: a small transformer encoder
//!   trained from scratch, with exact gradients.
//! * [`pipeline`] — the iterative receiver loop tying it all together.
//! * [`sweep`] — BER/FER sweeps across SNR and receiver mode, CSV/SVG out.

pub mod channel;
pub mod conv;
pub mod dataset;
pub mod frame;
pub mod gf;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod rs;
pub mod sweep;
