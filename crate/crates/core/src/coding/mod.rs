//! Channel code, interleaver and bit/symbol mapping.

mod interleaver;
mod mapping;
mod rsc;

pub use interleaver::Interleaver;
pub use mapping::{bit_log_probs, Labeling, SymbolAlphabet};
pub use rsc::{clamp_llr, CodeConfig, DecodeOutput, RscCode, LLR_CLAMP};
