//! Outer equalizer iterations around inner demodulator/decoder iterations.

use crate::channel::ChannelRealization;
use crate::coding::clamp_llr;
use crate::demod::{Demodulator, StateMessages};
use crate::equalizer::{DiscretePrior, OpCounter, UampConfig, UampState, WaveformPriors};
use crate::error::{check_len, Error, Result};
use crate::framing::strip_cp;
use crate::link::Link;
use crate::num::{Cplx, LogSum, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleConfig {
    /// Outer iterations `n_o`.
    pub outer: usize,
    /// Inner demodulator/decoder iterations `n_i`.
    pub inner: usize,
    /// Stop once the decoder's hard decisions form a codeword.
    pub early_stop: bool,
}

impl ScheduleConfig {
    pub fn new(outer: usize, inner: usize) -> Result<Self> {
        let s = Self {
            outer,
            inner,
            early_stop: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer == 0 || self.inner == 0 {
            return Err(Error::Config(format!(
                "iteration counts must be positive (outer {}, inner {})",
                self.outer, self.inner
            )));
        }
        Ok(())
    }

    pub fn iterations(&self) -> usize {
        self.outer * self.inner
    }
}

/// Which decoder output the demodulator uses as its symbol prior inside the
/// inner loop. The equalizer always receives APP information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DemodPrior {
    Posterior,
    #[default]
    Extrinsic,
}

impl std::str::FromStr for DemodPrior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "posterior" | "app" => Ok(DemodPrior::Posterior),
            "extrinsic" => Ok(DemodPrior::Extrinsic),
            other => Err(Error::Config(format!("unknown demodulator prior `{other}`"))),
        }
    }
}

impl std::fmt::Display for DemodPrior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DemodPrior::Posterior => "posterior",
            DemodPrior::Extrinsic => "extrinsic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverConfig {
    pub schedule: ScheduleConfig,
    pub uamp: UampConfig,
    pub log_sum: LogSum,
    pub demod_prior: DemodPrior,
}

impl ReceiverConfig {
    pub fn new(outer: usize, inner: usize) -> Result<Self> {
        Ok(Self {
            schedule: ScheduleConfig::new(outer, inner)?,
            uamp: UampConfig::default(),
            log_sum: LogSum::Exact,
            demod_prior: DemodPrior::default(),
        })
    }
}

/// Diagnostics after one inner iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T> {
    /// 1-based outer iteration.
    pub outer: usize,
    /// 1-based inner iteration.
    pub inner: usize,
    pub tau_x: T,
    pub tau_q: T,
    /// Information bit errors against the supplied truth.
    pub bit_errors: Option<usize>,
    pub decisions: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOutput<T> {
    pub decisions: Vec<u8>,
    /// `outer × inner` records in iteration order.
    pub trace: Vec<IterationRecord<T>>,
    pub ops: OpCounter,
}

impl<T: Real> Link<T> {
    /// Block symbol log priors from coded-bit LLRs in code order.
    fn block_priors(&self, coded_llrs: &[T]) -> Result<Vec<T>> {
        let m = self.alphabet.order();
        let payload = self.alphabet.symbol_log_priors(&self.interleaver.interleave(coded_llrs)?)?;
        let uniform = -T::count(m).ln();
        let mut out = vec![uniform; self.layout.block_len() * m];
        for (k, n) in self.layout.payload_positions().enumerate() {
            out[n * m..(n + 1) * m].copy_from_slice(&payload[k * m..(k + 1) * m]);
        }
        Ok(out)
    }

    /// Runs the iterative receiver on one received frame (CP included).
    pub fn receive(
        &self,
        frame: &[Cplx<T>],
        channel: &ChannelRealization<T>,
        cfg: &ReceiverConfig,
        truth: Option<&[u8]>,
    ) -> Result<ReceiverOutput<T>> {
        cfg.schedule.validate()?;
        if let Some(t) = truth {
            check_len("reference bits", self.info_len(), t.len())?;
        }
        let block = strip_cp(frame, &self.layout)?;
        let mut ops = OpCounter::default();
        let mut demod = Demodulator::new(&self.modem.trellis, &self.modem.table, &self.modem.tilt);
        demod.log_sum = cfg.log_sum;
        let m = self.alphabet.order();
        let kappa = self.layout.samples_per_symbol;

        let mut uamp = UampState::new(block, &self.dft, kappa, &mut ops)?;
        let mut coded_app = vec![T::zero(); self.code.coded_len()];
        let mut demod_llrs = coded_app.clone();
        let mut wf_priors: Option<WaveformPriors<T>> = None;
        let mut trace = Vec::with_capacity(cfg.schedule.iterations());
        let mut decisions = vec![0u8; self.info_len()];

        'outer: for t in 0..cfg.schedule.outer {
            if let Some(priors) = &wf_priors {
                let mut den = DiscretePrior {
                    table: &self.modem.table,
                    tilt: &self.modem.tilt,
                    priors,
                };
                uamp.update_beliefs(&mut den, &cfg.uamp, &mut ops)
                    .map_err(|e| divergence(e, t + 1))?;
            }
            uamp.forward(channel, &cfg.uamp, t + 1, &mut ops)?;
            let gamma = demod.branch_metrics(&uamp.q, uamp.tau_q, &mut ops)?;

            let mut last: Option<StateMessages<T>> = None;
            for j in 0..cfg.schedule.inner {
                let priors = self.block_priors(&demod_llrs)?;
                let msgs = demod.run(&gamma, &priors, &self.constraints, &mut ops)?;
                let sym = demod.symbol_output(&msgs, &gamma, &self.constraints, &mut ops)?;
                let mut payload_msgs = Vec::with_capacity(self.layout.payload * m);
                for n in self.layout.payload_positions() {
                    payload_msgs.extend_from_slice(&sym[n * m..(n + 1) * m]);
                }
                let bit_priors = self.interleaver.interleave(&demod_llrs)?;
                let ext = self.alphabet.extrinsic_bit_llrs(&payload_msgs, &bit_priors)?;
                let channel_llrs = self.interleaver.deinterleave(&ext)?;
                let dec = self.code.decode(&channel_llrs)?;
                ops.decoder += (self.code.coded_len() * self.code.num_states() * 16) as u64;
                if dec.coded_app.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Divergence {
                        stage: "decoder",
                        outer: t + 1,
                    });
                }
                coded_app = dec.coded_app;
                demod_llrs = match cfg.demod_prior {
                    DemodPrior::Posterior => coded_app.clone(),
                    DemodPrior::Extrinsic => coded_app
                        .iter()
                        .zip(&channel_llrs)
                        .map(|(&a, &c)| clamp_llr(a - c))
                        .collect(),
                };
                decisions = dec.decisions;
                trace.push(IterationRecord {
                    outer: t + 1,
                    inner: j + 1,
                    tau_x: uamp.tau_x,
                    tau_q: uamp.tau_q,
                    bit_errors: truth.map(|b| count_errors(b, &decisions)),
                    decisions: decisions.clone(),
                });
                last = Some(msgs);
                if cfg.schedule.early_stop && self.is_codeword(&decisions, &coded_app)? {
                    break 'outer;
                }
            }
            if t + 1 < cfg.schedule.outer {
                let msgs = last.expect("at least one inner iteration");
                let priors = self.block_priors(&coded_app)?;
                wf_priors = Some(demod.waveform_priors(&msgs, &priors, &self.constraints, &mut ops)?);
            }
        }

        // an early stop freezes the decisions for the remaining coordinates
        while trace.len() < cfg.schedule.iterations() {
            let mut rec = trace.last().cloned().expect("trace is never empty here");
            let k = trace.len();
            rec.outer = k / cfg.schedule.inner + 1;
            rec.inner = k % cfg.schedule.inner + 1;
            trace.push(rec);
        }
        Ok(ReceiverOutput {
            decisions,
            trace,
            ops,
        })
    }

    fn is_codeword(&self, info: &[u8], coded_app: &[T]) -> Result<bool> {
        let cw = self.code.encode(info)?;
        Ok(cw
            .iter()
            .zip(coded_app)
            .all(|(&b, &l)| (l < T::zero()) == (b == 1)))
    }
}

fn divergence(e: Error, outer: usize) -> Error {
    match e {
        Error::DegeneratePrior { .. } => Error::Divergence {
            stage: "equalizer beliefs",
            outer,
        },
        other => other,
    }
}

pub fn count_errors(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}
