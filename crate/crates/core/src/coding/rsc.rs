//! Rate-1/2 recursive systematic convolutional code and its log-MAP decoder.

use crate::error::{check_len, Error, Result};
use crate::num::{log_add, Real};

/// Bound on every LLR the decoder emits (natural-log units).
pub const LLR_CLAMP: f64 = 50.0;

#[inline]
pub fn clamp_llr<T: Real>(x: T) -> T {
    let c = T::lit(LLR_CLAMP);
    if x.is_nan() {
        T::zero()
    } else {
        x.max(-c).min(c)
    }
}

/// Code parameters. Polynomials are octal-style bit masks with the
/// coefficient of `D^0` as the most significant bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeConfig {
    /// Feedback polynomial, e.g. `0o7` for `1 + D + D²`.
    pub feedback: u32,
    /// Feedforward (parity) polynomial, e.g. `0o5` for `1 + D²`.
    pub feedforward: u32,
    /// Information bits per frame `K`.
    pub info_len: usize,
}

impl CodeConfig {
    /// The `[5,7]₈` code with feedback 7 and feedforward 5.
    pub fn rsc57(info_len: usize) -> Self {
        Self {
            feedback: 0o7,
            feedforward: 0o5,
            info_len,
        }
    }

    /// Largest `K` whose terminated codeword fits in `coded_len` bits.
    pub fn rsc57_for_coded_len(coded_len: usize) -> Result<Self> {
        let tail = 2;
        if coded_len % 2 != 0 || coded_len / 2 <= tail {
            return Err(Error::Config(format!(
                "coded length {coded_len} is not usable by a rate-1/2 terminated code"
            )));
        }
        Ok(Self::rsc57(coded_len / 2 - tail))
    }

    pub fn rate(&self) -> f64 {
        0.5
    }
}

/// Trellis of an RSC encoder. State bits hold the register contents
/// `a_{k−1} … a_{k−ν}` with `a_{k−1}` as the most significant bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RscCode {
    cfg: CodeConfig,
    memory: usize,
    /// `next[state * 2 + input]`
    next: Vec<usize>,
    /// Parity bit for `(state, input)`.
    parity: Vec<u8>,
    /// Input that feeds a zero into the register from `state`.
    tail_input: Vec<u8>,
}

impl RscCode {
    pub fn new(cfg: CodeConfig) -> Result<Self> {
        let degree = 31 - cfg.feedback.leading_zeros() as usize;
        if cfg.feedback < 2 || cfg.feedback & 1 == 0 && degree == 0 {
            return Err(Error::Config(format!(
                "feedback polynomial {:o} is degenerate",
                cfg.feedback
            )));
        }
        if cfg.feedforward == 0 || cfg.feedforward >> (degree + 1) != 0 {
            return Err(Error::Config(format!(
                "feedforward polynomial {:o} exceeds the feedback degree",
                cfg.feedforward
            )));
        }
        if cfg.info_len == 0 {
            return Err(Error::Config("information length must be positive".into()));
        }
        let memory = degree;
        let num_states = 1 << memory;
        let mut next = vec![0; num_states * 2];
        let mut parity = vec![0; num_states * 2];
        let mut tail_input = vec![0; num_states];
        // coefficient of D^j in a polynomial written MSB-first
        let coeff = |poly: u32, j: usize| ((poly >> (memory - j)) & 1) as u8;
        for state in 0..num_states {
            let reg = |j: usize| ((state >> (memory - j)) & 1) as u8; // a_{k-j}
            let fb: u8 = (1..=memory).fold(0, |acc, j| acc ^ (coeff(cfg.feedback, j) & reg(j)));
            tail_input[state] = fb;
            for input in 0..2u8 {
                let a = input ^ fb;
                let p = (1..=memory).fold(coeff(cfg.feedforward, 0) & a, |acc, j| {
                    acc ^ (coeff(cfg.feedforward, j) & reg(j))
                });
                next[state * 2 + input as usize] = ((a as usize) << (memory - 1)) | (state >> 1);
                parity[state * 2 + input as usize] = p;
            }
        }
        Ok(Self {
            cfg,
            memory,
            next,
            parity,
            tail_input,
        })
    }

    pub fn config(&self) -> &CodeConfig {
        &self.cfg
    }

    pub fn info_len(&self) -> usize {
        self.cfg.info_len
    }

    /// Number of termination steps `ν`.
    pub fn tail_len(&self) -> usize {
        self.memory
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory
    }

    /// `2·(K + ν)`.
    pub fn coded_len(&self) -> usize {
        2 * (self.cfg.info_len + self.memory)
    }

    /// Systematic then parity bit per step, zero-tail terminated.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        check_len("information bits", self.cfg.info_len, info.len())?;
        let mut out = Vec::with_capacity(self.coded_len());
        let mut state = 0;
        for step in 0..self.cfg.info_len + self.memory {
            let u = if step < info.len() {
                info[step] & 1
            } else {
                self.tail_input[state]
            };
            out.push(u);
            out.push(self.parity[state * 2 + u as usize]);
            state = self.next[state * 2 + u as usize];
        }
        debug_assert_eq!(state, 0);
        Ok(out)
    }

    /// Exact log-MAP decoding.
    ///
    /// `llr_in` holds a-priori LLRs `ln P(c=0)/P(c=1)` on all coded bits.
    /// Returns a-posteriori LLRs on every coded bit (including the input
    /// LLR, not extrinsic) and on the information bits.
    pub fn decode<T: Real>(&self, llr_in: &[T]) -> Result<DecodeOutput<T>> {
        check_len("decoder input LLRs", self.coded_len(), llr_in.len())?;
        let steps = self.cfg.info_len + self.memory;
        let ns = self.num_states();
        let half = T::lit(0.5);
        let ninf = T::neg_infinity();

        // γ(step, state, input) = ±L_sys/2 ± L_par/2
        let gamma = |step: usize, state: usize, input: usize| -> T {
            let ls = llr_in[2 * step];
            let lp = llr_in[2 * step + 1];
            let p = self.parity[state * 2 + input];
            let s = if input == 0 { ls } else { -ls };
            let q = if p == 0 { lp } else { -lp };
            (s + q) * half
        };
        let allowed = |step: usize, state: usize, input: usize| -> bool {
            step < self.cfg.info_len || self.tail_input[state] as usize == input
        };

        let mut alpha = vec![ninf; (steps + 1) * ns];
        alpha[0] = T::zero();
        for step in 0..steps {
            let (cur, nxt) = alpha.split_at_mut((step + 1) * ns);
            let cur = &cur[step * ns..];
            let nxt = &mut nxt[..ns];
            for s in 0..ns {
                if cur[s] == ninf {
                    continue;
                }
                for u in 0..2 {
                    if !allowed(step, s, u) {
                        continue;
                    }
                    let to = self.next[s * 2 + u];
                    nxt[to] = log_add(nxt[to], cur[s] + gamma(step, s, u));
                }
            }
            let norm = nxt.iter().copied().fold(ninf, |a, b| a.max(b));
            for v in nxt.iter_mut() {
                *v = *v - norm;
            }
        }

        let mut beta = vec![ninf; (steps + 1) * ns];
        beta[steps * ns] = T::zero();
        for step in (0..steps).rev() {
            let (cur, nxt) = beta.split_at_mut((step + 1) * ns);
            let cur = &mut cur[step * ns..];
            let nxt = &nxt[..ns];
            for s in 0..ns {
                let mut acc = ninf;
                for u in 0..2 {
                    if !allowed(step, s, u) {
                        continue;
                    }
                    let to = self.next[s * 2 + u];
                    acc = log_add(acc, nxt[to] + gamma(step, s, u));
                }
                cur[s] = acc;
            }
            let norm = cur.iter().copied().fold(ninf, |a, b| a.max(b));
            for v in cur.iter_mut() {
                *v = *v - norm;
            }
        }

        let mut coded_app = vec![T::zero(); self.coded_len()];
        for step in 0..steps {
            // [sys=0, sys=1, par=0, par=1]
            let mut acc = [ninf; 4];
            for s in 0..ns {
                let a = alpha[step * ns + s];
                if a == ninf {
                    continue;
                }
                for u in 0..2 {
                    if !allowed(step, s, u) {
                        continue;
                    }
                    let to = self.next[s * 2 + u];
                    let metric = a + gamma(step, s, u) + beta[(step + 1) * ns + to];
                    acc[u] = log_add(acc[u], metric);
                    let p = self.parity[s * 2 + u] as usize;
                    acc[2 + p] = log_add(acc[2 + p], metric);
                }
            }
            coded_app[2 * step] = clamp_llr(acc[0] - acc[1]);
            coded_app[2 * step + 1] = clamp_llr(acc[2] - acc[3]);
        }
        let info_app: Vec<T> = (0..self.cfg.info_len).map(|k| coded_app[2 * k]).collect();
        let decisions = info_app.iter().map(|&l| u8::from(l < T::zero())).collect();
        Ok(DecodeOutput {
            coded_app,
            info_app,
            decisions,
        })
    }
}

/// Log-MAP decoder output.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput<T> {
    /// APP LLRs on every coded bit, in codeword order.
    pub coded_app: Vec<T>,
    /// APP LLRs on the information bits.
    pub info_app: Vec<T>,
    /// Hard decisions on the information bits.
    pub decisions: Vec<u8>,
}
