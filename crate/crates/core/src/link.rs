//! Transmit chain and shared per-configuration tables.

use rand::Rng;

use crate::channel::ChannelRealization;
use crate::coding::{CodeConfig, Interleaver, Labeling, RscCode, SymbolAlphabet};
use crate::cpm::{CpmConfig, CpmModem};
use crate::dft::UnitaryDft;
use crate::error::{Error, Result};
use crate::framing::{assemble_block, modulate_frame, FrameLayout, IntrafixConstraints, SymbolBlock};
use crate::num::{Cplx, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub cpm: CpmConfig,
    /// Payload symbols per block `N`.
    pub payload: usize,
    /// Intrafix length `N_K`.
    pub intrafix: usize,
    /// Cyclic prefix length `N_P` in symbols.
    pub prefix: usize,
    pub labeling: Labeling,
    pub interleaver_seed: u64,
    /// Enforce the intrafix construction rule in the receiver's trellis.
    pub known_intrafix: bool,
}

impl LinkConfig {
    /// Quaternary 2RC, `h = 1/3`, `κ = 2`, `N = 508`, `N_K = 2`.
    pub fn standard(prefix: usize) -> Self {
        Self {
            cpm: CpmConfig::quaternary_2rc(),
            payload: 508,
            intrafix: 2,
            prefix,
            labeling: Labeling::Natural,
            interleaver_seed: 0x5eed,
            known_intrafix: true,
        }
    }

    /// Shortest prefix (in symbols) covering a channel of `channel_len`
    /// samples, but never shorter than the intrafix.
    pub fn prefix_for_channel(&self, channel_len: usize) -> usize {
        let kappa = self.cpm.samples_per_symbol;
        channel_len.saturating_sub(1).div_ceil(kappa).max(self.intrafix)
    }
}

/// One transmitted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TxFrame<T> {
    pub info: Vec<u8>,
    /// Codeword in code order.
    pub coded: Vec<u8>,
    pub symbols: SymbolBlock,
    pub samples: Vec<Cplx<T>>,
}

/// Immutable tables for one link configuration; shareable across threads.
#[derive(Debug, Clone)]
pub struct Link<T: Real> {
    pub cfg: LinkConfig,
    pub modem: CpmModem<T>,
    pub layout: FrameLayout,
    pub code: RscCode,
    pub interleaver: Interleaver,
    pub alphabet: SymbolAlphabet,
    pub constraints: IntrafixConstraints,
    pub dft: UnitaryDft<T>,
}

impl<T: Real> Link<T> {
    pub fn new(cfg: LinkConfig) -> Result<Self> {
        let modem = CpmModem::new(&cfg.cpm)?;
        let layout = FrameLayout::new(&cfg.cpm, cfg.payload, cfg.intrafix, cfg.prefix)?;
        let alphabet = SymbolAlphabet::new(cfg.cpm.order, cfg.labeling)?;
        let coded_len = cfg.payload * alphabet.bits_per_symbol();
        let code = RscCode::new(CodeConfig::rsc57_for_coded_len(coded_len)?)?;
        let interleaver = Interleaver::new(coded_len, cfg.interleaver_seed);
        let constraints = if cfg.known_intrafix {
            IntrafixConstraints::new(&modem.trellis, &layout)?
        } else {
            IntrafixConstraints::free(layout.block_len())
        };
        let dft = UnitaryDft::new(layout.block_samples());
        Ok(Self {
            cfg,
            modem,
            layout,
            code,
            interleaver,
            alphabet,
            constraints,
            dft,
        })
    }

    pub fn info_len(&self) -> usize {
        self.code.info_len()
    }

    pub fn random_info<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        (0..self.info_len()).map(|_| rng.random_range(0..2u8)).collect()
    }

    /// Encodes, interleaves, maps, frames and modulates `info`.
    pub fn transmit(&self, info: &[u8]) -> Result<TxFrame<T>> {
        let coded = self.code.encode(info)?;
        let mapped = self.alphabet.map(&self.interleaver.interleave(&coded)?)?;
        let cpm = &self.cfg.cpm;
        let payload: Vec<i32> = mapped.iter().map(|&a| cpm.symbol(a)).collect();
        let symbols = assemble_block(&payload, &self.modem.trellis, &self.layout)?;
        let samples = modulate_frame(&symbols, &self.modem, &self.layout)?;
        Ok(TxFrame {
            info: info.to_vec(),
            coded,
            symbols,
            samples,
        })
    }

    /// Receiver view of a channel draw on this link's block length.
    pub fn realization(&self, taps: Vec<Cplx<T>>, sigma2: T) -> Result<ChannelRealization<T>> {
        self.layout.check_channel(taps.len())?;
        ChannelRealization::new(taps, sigma2, &self.dft)
    }

    /// Bit-level noise variance for `Eb/N0` in dB.
    pub fn noise_variance(&self, ebn0_db: f64) -> Result<f64> {
        if ebn0_db.is_nan() {
            return Err(Error::Config("Eb/N0 is NaN".into()));
        }
        Ok(crate::channel::noise_variance(
            ebn0_db,
            self.cfg.cpm.samples_per_symbol,
            self.alphabet.bits_per_symbol(),
            self.code.config().rate(),
        ))
    }
}
