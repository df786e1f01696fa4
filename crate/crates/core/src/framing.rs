//! Block structure with intrafixes and a cyclic prefix.
//!
//! A transmitted frame is
//!
//! ```text
//! [ d2 | i2 ] [ d1 | i1 | d2 | i2 ]
//!   prefix            block (Ñ symbols)
//! ```
//!
//! Each intrafix drives the trellis back to the reference state `ε₀`
//! (state 0), so the frame starts, leaves the prefix and ends in `ε₀`.
//! The prefix is the tail `[d2; i2]` of the block, hence
//! `|d2| = N_P − N_K` and `|d1| = N − |d2|`.

use crate::cpm::{CpmConfig, CpmModem, CpmTrellis};
use crate::error::{check_len, Error, Result};
use crate::num::{Cplx, Real};

/// Reference trellis state at block boundaries.
pub const REFERENCE_STATE: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    /// Payload symbols `N`.
    pub payload: usize,
    /// Intrafix length `N_K`.
    pub intrafix: usize,
    /// Cyclic prefix length `N_P`, in symbols.
    pub prefix: usize,
    pub samples_per_symbol: usize,
}

impl FrameLayout {
    pub fn new(cfg: &CpmConfig, payload: usize, intrafix: usize, prefix: usize) -> Result<Self> {
        let layout = Self {
            payload,
            intrafix,
            prefix,
            samples_per_symbol: cfg.samples_per_symbol,
        };
        layout.validate(cfg)?;
        Ok(layout)
    }

    fn validate(&self, cfg: &CpmConfig) -> Result<()> {
        let p = cfg.index_den;
        if self.intrafix + 1 < p {
            return Err(Error::Config(format!(
                "intrafix length {} is below P - 1 = {}",
                self.intrafix,
                p - 1
            )));
        }
        // free intrafix symbols must be able to reach every phase residue
        let fixed = cfg.memory - 1;
        if self.intrafix < fixed || (self.intrafix - fixed) * (cfg.order - 1) < p - 1 {
            return Err(Error::Config(format!(
                "intrafix length {} cannot steer a {}-state trellis",
                self.intrafix,
                cfg.num_states()
            )));
        }
        if self.prefix < self.intrafix {
            return Err(Error::Config(format!(
                "cyclic prefix ({}) must be at least the intrafix length ({})",
                self.prefix, self.intrafix
            )));
        }
        if self.second_len() > self.payload {
            return Err(Error::Config(format!(
                "payload of {} symbols is shorter than the prefix data segment ({})",
                self.payload,
                self.second_len()
            )));
        }
        Ok(())
    }

    /// `|d1|`.
    pub fn first_len(&self) -> usize {
        self.payload - self.second_len()
    }

    /// `|d2| = N_P − N_K`.
    pub fn second_len(&self) -> usize {
        self.prefix - self.intrafix
    }

    /// `Ñ = N + 2·N_K`.
    pub fn block_len(&self) -> usize {
        self.payload + 2 * self.intrafix
    }

    /// `N_T = Ñ + N_P`.
    pub fn frame_len(&self) -> usize {
        self.block_len() + self.prefix
    }

    /// `κ·Ñ`.
    pub fn block_samples(&self) -> usize {
        self.block_len() * self.samples_per_symbol
    }

    pub fn prefix_samples(&self) -> usize {
        self.prefix * self.samples_per_symbol
    }

    pub fn frame_samples(&self) -> usize {
        self.frame_len() * self.samples_per_symbol
    }

    /// Block indices carrying payload symbols, in payload order.
    pub fn payload_positions(&self) -> impl Iterator<Item = usize> + '_ {
        let d2_start = self.first_len() + self.intrafix;
        (0..self.first_len()).chain(d2_start..d2_start + self.second_len())
    }

    /// Intrafix segments as `(start, len)` block index ranges.
    pub fn intrafix_segments(&self) -> [(usize, usize); 2] {
        let i1 = self.first_len();
        let i2 = self.block_len() - self.intrafix;
        [(i1, self.intrafix), (i2, self.intrafix)]
    }

    /// Fails when the channel memory does not fit inside the prefix.
    pub fn check_channel(&self, channel_len: usize) -> Result<()> {
        if channel_len == 0 || channel_len - 1 > self.prefix_samples() {
            return Err(Error::ChannelExceedsPrefix {
                channel_len,
                cp_samples: self.prefix_samples(),
            });
        }
        Ok(())
    }
}

/// One frame of symbols, by segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolBlock {
    pub prefix: Vec<i32>,
    pub first: Vec<i32>,
    pub first_intrafix: Vec<i32>,
    pub second: Vec<i32>,
    pub second_intrafix: Vec<i32>,
}

impl SymbolBlock {
    /// The `Ñ` symbols after the prefix.
    pub fn block(&self) -> Vec<i32> {
        [
            &self.first[..],
            &self.first_intrafix,
            &self.second,
            &self.second_intrafix,
        ]
        .concat()
    }

    /// All `N_T` symbols including the prefix.
    pub fn frame(&self) -> Vec<i32> {
        [&self.prefix[..], &self.block()].concat()
    }
}

/// Modified-data value the intrafix emits from `state` when `remaining`
/// intrafix symbols (including this one) are left before reaching `target`.
///
/// The rule is memoryless: calling it repeatedly along the path it
/// generates reproduces [`compute_intrafix`].
pub fn intrafix_input(
    trellis: &CpmTrellis,
    state: usize,
    target: usize,
    remaining: usize,
) -> Result<usize> {
    let cfg = trellis.config();
    let fixed = cfg.memory - 1;
    let unreachable = Error::UnreachableState {
        from: state,
        to: target,
        len: remaining,
    };
    if remaining == 0 {
        return Err(unreachable);
    }
    let target_mem = trellis.memory(target);
    if remaining <= fixed {
        // this symbol ends up as memory digit `remaining - 1` of the target
        return Ok(target_mem[remaining - 1]);
    }
    let p = cfg.index_den;
    let q_inv = mod_inverse(cfg.index_num % p, p).ok_or_else(|| unreachable.clone())?;
    let k = trellis.phase_index(state);
    let target_k = trellis.phase_index(target);
    let mem_sum: usize = trellis.memory(state).iter().sum();
    let absorbed = (k + cfg.index_num * mem_sum) % p;
    let deficit = (target_k + p - absorbed) % p;
    let needed = deficit * q_inv % p;
    let free = remaining - fixed;
    if needed > free * (cfg.order - 1) {
        return Err(unreachable);
    }
    Ok(needed.min(cfg.order - 1))
}

/// Symbols that take the trellis from `current` to `target` in `len` steps.
pub fn compute_intrafix(
    trellis: &CpmTrellis,
    current: usize,
    target: usize,
    len: usize,
) -> Result<Vec<i32>> {
    let cfg = trellis.config();
    let mut state = current;
    let mut out = Vec::with_capacity(len);
    for remaining in (1..=len).rev() {
        let a = intrafix_input(trellis, state, target, remaining)?;
        out.push(cfg.symbol(a));
        state = trellis.next_state(state, a);
    }
    if state != target {
        return Err(Error::UnreachableState {
            from: current,
            to: target,
            len,
        });
    }
    Ok(out)
}

fn mod_inverse(a: usize, m: usize) -> Option<usize> {
    if m == 1 {
        return Some(0);
    }
    (1..m).find(|&x| a * x % m == 1)
}

fn walk(trellis: &CpmTrellis, state: usize, symbols: &[i32]) -> Result<usize> {
    let cfg = trellis.config();
    symbols.iter().enumerate().try_fold(state, |s, (n, &sym)| {
        let a = cfg.modified(sym).ok_or(Error::InvalidSymbol {
            symbol: sym,
            position: n,
            order: cfg.order,
        })?;
        Ok(trellis.next_state(s, a))
    })
}

/// Splits `payload` into the two data segments, inserts intrafixes and
/// prepends the cyclic prefix.
pub fn assemble_block(
    payload: &[i32],
    trellis: &CpmTrellis,
    layout: &FrameLayout,
) -> Result<SymbolBlock> {
    check_len("payload symbols", layout.payload, payload.len())?;
    let (first, second) = payload.split_at(layout.first_len());
    let s1 = walk(trellis, REFERENCE_STATE, first)?;
    let first_intrafix = compute_intrafix(trellis, s1, REFERENCE_STATE, layout.intrafix)?;
    let s2 = walk(trellis, REFERENCE_STATE, second)?;
    let second_intrafix = compute_intrafix(trellis, s2, REFERENCE_STATE, layout.intrafix)?;
    let prefix = [second, &second_intrafix[..]].concat();
    Ok(SymbolBlock {
        prefix,
        first: first.to_vec(),
        first_intrafix,
        second: second.to_vec(),
        second_intrafix,
    })
}

/// Modulates a frame: the block is modulated from `ε₀` with sample time
/// counted from the block start, and the prefix is a copy of the last
/// `κ·N_P` block samples.
pub fn modulate_frame<T: Real>(
    block: &SymbolBlock,
    modem: &CpmModem<T>,
    layout: &FrameLayout,
) -> Result<Vec<Cplx<T>>> {
    let (body, end) = modem.modulate(&block.block(), REFERENCE_STATE)?;
    debug_assert_eq!(end, REFERENCE_STATE);
    let cp = layout.prefix_samples();
    let mut frame = Vec::with_capacity(layout.frame_samples());
    frame.extend_from_slice(&body[body.len() - cp..]);
    frame.extend_from_slice(&body);
    Ok(frame)
}

/// Drops the first `κ·N_P` samples of a received frame.
pub fn strip_cp<'a, T>(samples: &'a [T], layout: &FrameLayout) -> Result<&'a [T]> {
    check_len("received frame samples", layout.frame_samples(), samples.len())?;
    Ok(&samples[layout.prefix_samples()..])
}

/// Per-position branch constraints that the known intrafix rule imposes on
/// the receiver's trellis. Positions outside the intrafixes are free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntrafixConstraints {
    forced: Vec<Option<Vec<usize>>>,
}

impl IntrafixConstraints {
    pub fn new(trellis: &CpmTrellis, layout: &FrameLayout) -> Result<Self> {
        let mut forced = vec![None; layout.block_len()];
        for (start, len) in layout.intrafix_segments() {
            for j in 0..len {
                let remaining = len - j;
                let per_state = (0..trellis.num_states())
                    .map(|s| {
                        // states that cannot reach the target get any input;
                        // they carry no probability mass on a valid path
                        intrafix_input(trellis, s, REFERENCE_STATE, remaining).unwrap_or(0)
                    })
                    .collect();
                forced[start + j] = Some(per_state);
            }
        }
        Ok(Self { forced })
    }

    /// No constraints on a block of `len` symbols.
    pub fn free(len: usize) -> Self {
        Self {
            forced: vec![None; len],
        }
    }

    pub fn len(&self) -> usize {
        self.forced.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forced.is_empty()
    }

    /// Whether branch `(state, input)` is allowed at block position `n`.
    #[inline]
    pub fn allows(&self, n: usize, state: usize, input: usize) -> bool {
        match &self.forced[n] {
            None => true,
            Some(per_state) => per_state[state] == input,
        }
    }

    #[inline]
    pub fn is_constrained(&self, n: usize) -> bool {
        self.forced[n].is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpm::PulseShape;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn standard_layout() -> (CpmConfig, CpmTrellis, FrameLayout) {
        let cfg = CpmConfig::quaternary_2rc();
        let t = CpmTrellis::new(&cfg).unwrap();
        let layout = FrameLayout::new(&cfg, 508, 2, 13).unwrap();
        (cfg, t, layout)
    }

    fn random_payload(cfg: &CpmConfig, n: usize, rng: &mut impl Rng) -> Vec<i32> {
        (0..n).map(|_| cfg.symbol(rng.random_range(0..cfg.order))).collect()
    }

    #[test]
    fn standard_layout_lengths() {
        let (_, _, layout) = standard_layout();
        assert_eq!(layout.block_len(), 512);
        assert_eq!(layout.frame_len(), 525);
        assert_eq!(layout.block_samples(), 1024);
        assert_eq!(layout.second_len(), 11);
        assert_eq!(layout.first_len(), 497);
        assert_eq!(layout.payload_positions().count(), 508);
    }

    #[test]
    fn layout_validation() {
        let cfg = CpmConfig::quaternary_2rc();
        assert!(FrameLayout::new(&cfg, 508, 1, 13).is_err());
        assert!(FrameLayout::new(&cfg, 508, 2, 1).is_err());
        assert!(FrameLayout::new(&cfg, 5, 2, 13).is_err());
        // Proakis-style prefix equal to the intrafix: empty second segment
        let l = FrameLayout::new(&cfg, 508, 2, 2).unwrap();
        assert_eq!(l.second_len(), 0);
        assert_eq!(l.block_len(), 512);
    }

    #[test]
    fn identity_intrafix_is_all_lowest_symbols() {
        let (cfg, t, _) = standard_layout();
        let fix = compute_intrafix(&t, REFERENCE_STATE, REFERENCE_STATE, 2).unwrap();
        assert_eq!(fix, vec![cfg.symbol(0); 2]);
    }

    #[test]
    fn pair_sums_cover_all_residues() {
        // L = 1 view of the P = 3, M = 4 trellis: both intrafix symbols free
        let cfg = CpmConfig::new(4, 1, 1, 3, PulseShape::Rec, 2).unwrap();
        let t = CpmTrellis::new(&cfg).unwrap();
        let mut covered = [false; 3];
        for a in 0..4 {
            for b in 0..4 {
                covered[(a + b) % 3] = true;
            }
        }
        assert!(covered.iter().all(|&c| c));
        for from in 0..t.num_states() {
            for to in 0..t.num_states() {
                let fix = compute_intrafix(&t, from, to, 2).unwrap();
                assert_eq!(walk(&t, from, &fix).unwrap(), to);
            }
        }
    }

    #[test]
    fn intrafix_reaches_reference_from_any_state() {
        for cfg in [
            CpmConfig::quaternary_2rc(),
            CpmConfig::msk(2),
            CpmConfig::new(2, 2, 1, 2, PulseShape::Rc, 2).unwrap(),
            CpmConfig::new(4, 3, 2, 5, PulseShape::Rc, 2).unwrap(),
        ] {
            let t = CpmTrellis::new(&cfg).unwrap();
            let len = (cfg.memory - 1) + (cfg.index_den - 1).div_ceil(cfg.order - 1);
            for s in 0..t.num_states() {
                let fix = compute_intrafix(&t, s, REFERENCE_STATE, len.max(1)).unwrap();
                assert_eq!(walk(&t, s, &fix).unwrap(), REFERENCE_STATE);
            }
        }
    }

    #[test]
    fn payload_then_intrafix_hits_target() {
        let (cfg, t, _) = standard_layout();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.random_range(0..20);
            let payload = random_payload(&cfg, n, &mut rng);
            let target = rng.random_range(0..t.num_states());
            let s = walk(&t, REFERENCE_STATE, &payload).unwrap();
            let fix = compute_intrafix(&t, s, target, 2).unwrap();
            assert_eq!(walk(&t, s, &fix).unwrap(), target);
        }
    }

    #[test]
    fn too_short_intrafix_is_reported() {
        let (_, t, _) = standard_layout();
        let s = t.state_index(1, &[3]).unwrap();
        assert!(matches!(
            compute_intrafix(&t, s, REFERENCE_STATE, 1),
            Err(Error::UnreachableState { .. })
        ));
    }

    #[test]
    fn assembled_frames_are_state_coherent() {
        let (cfg, t, layout) = standard_layout();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let payload = random_payload(&cfg, layout.payload, &mut rng);
            let block = assemble_block(&payload, &t, &layout).unwrap();
            let frame = block.frame();
            assert_eq!(frame.len(), layout.frame_len());
            assert_eq!(frame[..layout.prefix], frame[layout.frame_len() - layout.prefix..]);
            assert_eq!(walk(&t, REFERENCE_STATE, &frame[..layout.prefix]).unwrap(), REFERENCE_STATE);
            let mid = layout.prefix + layout.first_len() + layout.intrafix;
            assert_eq!(walk(&t, REFERENCE_STATE, &frame[..mid]).unwrap(), REFERENCE_STATE);
            assert_eq!(walk(&t, REFERENCE_STATE, &frame).unwrap(), REFERENCE_STATE);
            let payload_back: Vec<i32> = {
                let b = block.block();
                layout.payload_positions().map(|n| b[n]).collect()
            };
            assert_eq!(payload_back, payload);
        }
    }

    #[test]
    fn assemble_rejects_wrong_length() {
        let (_, t, layout) = standard_layout();
        assert!(matches!(
            assemble_block(&[1; 10], &t, &layout),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn frame_samples_equal_continuous_modulation() {
        // with h(M-1)Ñ even the copied prefix is also phase continuous
        let (cfg, t, layout) = standard_layout();
        let modem = CpmModem::<f64>::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let payload = random_payload(&cfg, layout.payload, &mut rng);
        let block = assemble_block(&payload, &t, &layout).unwrap();
        let frame = modulate_frame(&block, &modem, &layout).unwrap();
        let (cont, end) = modem.modulate(&block.frame(), REFERENCE_STATE).unwrap();
        assert_eq!(end, REFERENCE_STATE);
        let rot = frame[0] / cont[0];
        for (a, b) in frame.iter().zip(&cont) {
            assert!((a - b * rot).norm() < 1e-10);
        }
    }

    #[test]
    fn strip_cp_lengths() {
        let (_, _, layout) = standard_layout();
        let x = vec![0u8; layout.frame_samples()];
        assert_eq!(strip_cp(&x, &layout).unwrap().len(), 1024);
        assert!(strip_cp(&x[1..], &layout).is_err());
    }

    #[test]
    fn constraints_follow_the_intrafix_rule() {
        let (cfg, t, layout) = standard_layout();
        let c = IntrafixConstraints::new(&t, &layout).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let payload = random_payload(&cfg, layout.payload, &mut rng);
        let block = assemble_block(&payload, &t, &layout).unwrap().block();
        let mut s = REFERENCE_STATE;
        for (n, &sym) in block.iter().enumerate() {
            let a = cfg.modified(sym).unwrap();
            assert!(c.allows(n, s, a));
            if c.is_constrained(n) {
                let allowed = (0..4).filter(|&b| c.allows(n, s, b)).count();
                assert_eq!(allowed, 1);
            }
            s = t.next_state(s, a);
        }
        assert_eq!(c.len(), layout.block_len());
        assert!((0..layout.block_len()).filter(|&n| c.is_constrained(n)).count() == 4);
    }

    #[test]
    fn channel_must_fit_prefix() {
        let (_, _, layout) = standard_layout();
        assert!(layout.check_channel(26).is_ok());
        assert!(layout.check_channel(28).is_err());
    }
}
