use thiserror::Error;

/// Errors raised by the modulation, channel, equalization and decoding layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported pulse shape `{0}`")]
    UnsupportedPulse(String),

    #[error("symbol {symbol} at position {position} is not in the {order}-ary alphabet")]
    InvalidSymbol {
        symbol: i32,
        position: usize,
        order: usize,
    },

    #[error("state {state} is out of range (trellis has {num_states} states)")]
    InvalidState { state: usize, num_states: usize },

    #[error("length mismatch in {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("intrafix cannot drive state {from} to state {to} in {len} symbols")]
    UnreachableState { from: usize, to: usize, len: usize },

    #[error("channel memory of {channel_len} samples exceeds the cyclic prefix ({cp_samples} samples)")]
    ChannelExceedsPrefix { channel_len: usize, cp_samples: usize },

    #[error("numerical divergence in {stage} at outer iteration {outer}")]
    Divergence { stage: &'static str, outer: usize },

    #[error("prior row {row} has no support")]
    DegeneratePrior { row: usize },

    #[error("malformed channel profile: {0}")]
    Profile(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            actual,
        })
    }
}
