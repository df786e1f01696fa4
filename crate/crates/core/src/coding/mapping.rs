use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, Error, Result};
use crate::num::{log_sum_exp, softplus, Real};

use super::rsc::clamp_llr;

/// Bit labelling of the `M`-ary modified symbol alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Labeling {
    /// Label `j` (MSB first) maps to modified symbol `j`.
    #[default]
    Natural,
    /// Binary reflected Gray code.
    Gray,
}

impl FromStr for Labeling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "natural" => Ok(Labeling::Natural),
            "gray" => Ok(Labeling::Gray),
            other => Err(Error::Config(format!("unknown labeling `{other}`"))),
        }
    }
}

impl fmt::Display for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Labeling::Natural => "natural",
            Labeling::Gray => "gray",
        })
    }
}

/// Mapping between groups of `log2 M` coded bits and modified symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolAlphabet {
    bits: usize,
    /// `label[a]`: bit label of modified symbol `a`.
    label: Vec<usize>,
    /// `symbol[j]`: modified symbol carrying label `j`.
    symbol: Vec<usize>,
}

impl SymbolAlphabet {
    pub fn new(order: usize, labeling: Labeling) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::Config(format!(
                "alphabet size {order} is not a power of two"
            )));
        }
        let bits = order.trailing_zeros() as usize;
        let label: Vec<usize> = (0..order)
            .map(|a| match labeling {
                Labeling::Natural => a,
                Labeling::Gray => a ^ (a >> 1),
            })
            .collect();
        let mut symbol = vec![0; order];
        for (a, &j) in label.iter().enumerate() {
            symbol[j] = a;
        }
        Ok(Self {
            bits,
            label,
            symbol,
        })
    }

    pub fn order(&self) -> usize {
        self.label.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    /// Bit `g` (0 = most significant) of the label of modified symbol `a`.
    #[inline]
    pub fn bit(&self, a: usize, g: usize) -> u8 {
        ((self.label[a] >> (self.bits - 1 - g)) & 1) as u8
    }

    /// Groups bits into modified symbols.
    pub fn map(&self, bits: &[u8]) -> Result<Vec<usize>> {
        if bits.len() % self.bits != 0 {
            return Err(Error::LengthMismatch {
                what: "bits to map",
                expected: bits.len().div_ceil(self.bits) * self.bits,
                actual: bits.len(),
            });
        }
        Ok(bits
            .chunks(self.bits)
            .map(|c| self.symbol[c.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)])
            .collect())
    }

    /// Inverse of [`map`](Self::map).
    pub fn demap(&self, symbols: &[usize]) -> Vec<u8> {
        symbols
            .iter()
            .flat_map(|&a| (0..self.bits).map(move |g| self.bit(a, g)))
            .collect()
    }

    /// Log-domain symbol priors `ln P(a)` (row-major, `order` per symbol)
    /// from independent bit LLRs `ln P(0)/P(1)`.
    pub fn symbol_log_priors<T: Real>(&self, llrs: &[T]) -> Result<Vec<T>> {
        if llrs.len() % self.bits != 0 {
            return Err(Error::LengthMismatch {
                what: "bit LLRs",
                expected: llrs.len().div_ceil(self.bits) * self.bits,
                actual: llrs.len(),
            });
        }
        let m = self.order();
        let mut out = Vec::with_capacity(llrs.len() / self.bits * m);
        for chunk in llrs.chunks(self.bits) {
            let lp: Vec<[T; 2]> = chunk.iter().map(|&l| bit_log_probs(l)).collect();
            for a in 0..m {
                out.push((0..self.bits).map(|g| lp[g][self.bit(a, g) as usize]).sum());
            }
        }
        Ok(out)
    }

    /// Extrinsic bit LLRs from symbol-level log messages.
    ///
    /// For each bit the LLR marginalises `msg(a) + Σ ln P(other bits of a)`
    /// over the symbols whose label bit is 0 versus 1, using the given
    /// bit prior LLRs for the other bits of the same symbol.
    pub fn extrinsic_bit_llrs<T: Real>(&self, messages: &[T], prior_llrs: &[T]) -> Result<Vec<T>> {
        let m = self.order();
        let n = messages.len() / m;
        check_len("symbol messages", n * m, messages.len())?;
        check_len("bit prior LLRs", n * self.bits, prior_llrs.len())?;
        let mut out = Vec::with_capacity(n * self.bits);
        let mut zero = vec![T::zero(); m];
        let mut one = vec![T::zero(); m];
        for k in 0..n {
            let msg = &messages[k * m..(k + 1) * m];
            let lp: Vec<[T; 2]> = prior_llrs[k * self.bits..(k + 1) * self.bits]
                .iter()
                .map(|&l| bit_log_probs(l))
                .collect();
            for g in 0..self.bits {
                let (mut nz, mut no) = (0, 0);
                for a in 0..m {
                    let other: T = (0..self.bits)
                        .filter(|&h| h != g)
                        .map(|h| lp[h][self.bit(a, h) as usize])
                        .sum();
                    let v = msg[a] + other;
                    if self.bit(a, g) == 0 {
                        zero[nz] = v;
                        nz += 1;
                    } else {
                        one[no] = v;
                        no += 1;
                    }
                }
                let l0 = log_sum_exp(&zero[..nz]);
                let l1 = log_sum_exp(&one[..no]);
                let llr = if l0 == l1 { T::zero() } else { l0 - l1 };
                out.push(clamp_llr(llr));
            }
        }
        Ok(out)
    }
}

/// `[ln P(b=0), ln P(b=1)]` for an LLR `ln P(0)/P(1)`.
#[inline]
pub fn bit_log_probs<T: Real>(llr: T) -> [T; 2] {
    [-softplus(-llr), -softplus(llr)]
}
