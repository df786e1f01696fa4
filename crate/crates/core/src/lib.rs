//! Iterative receiver for coded continuous phase modulation over
//! frequency-selective channels.
//!
//! The transmit chain is a rate-1/2 recursive systematic convolutional
//! code, a random interleaver and an `M`-ary CPM modulator whose blocks are
//! closed by intrafix symbols and protected by a cyclic prefix. The
//! receiver iterates a frequency-domain UAMP equalizer, a trellis
//! demodulator and a log-MAP decoder.
//!
//! All numeric code is generic over [`num::Real`]; the aliases below fix
//! the scalar type.

pub mod channel;
pub mod coding;
pub mod cpm;
pub mod demod;
pub mod dft;
pub mod equalizer;
pub mod error;
pub mod framing;
pub mod link;
pub mod num;
pub mod receiver;

pub use error::{Error, Result};
pub use link::{Link, LinkConfig, TxFrame};
pub use receiver::{DemodPrior, ReceiverConfig, ReceiverOutput, ScheduleConfig};

pub type Link64 = link::Link<f64>;
pub type Link32 = link::Link<f32>;
pub type Cplx64 = num::Cplx<f64>;
pub type Cplx32 = num::Cplx<f32>;
pub type ChannelRealization64 = channel::ChannelRealization<f64>;
pub type ChannelRealization32 = channel::ChannelRealization<f32>;
pub type UampState64 = equalizer::UampState<f64>;
pub type UampState32 = equalizer::UampState<f32>;
pub type CpmModem64 = cpm::CpmModem<f64>;
pub type CpmModem32 = cpm::CpmModem<f32>;
