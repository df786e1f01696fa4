//! Continuous phase modulation: pulse shapes, the tilted-phase trellis and
//! the per-branch waveform bank.
//!
//! Time is normalised to the symbol period (`T = 1`) and every sample has
//! unit magnitude, so a symbol carries `κ` units of energy in the discrete
//! model. The trellis state is `(k, memory)` where `k ∈ [0, P)` indexes the
//! accumulated phase `2πk/P` and `memory` holds the modified data
//! `α̃ = (α + M − 1) / 2` of the last `L − 1` symbols.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::{Cplx, Real};

/// Frequency pulse family. The phase pulse is its integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseShape {
    /// Rectangular frequency pulse (LREC).
    Rec,
    /// Raised-cosine frequency pulse (LRC).
    Rc,
}

impl FromStr for PulseShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rec" | "lrec" => Ok(PulseShape::Rec),
            "rc" | "lrc" => Ok(PulseShape::Rc),
            "gmsk" | "gaussian" => Err(Error::UnsupportedPulse(s.to_owned())),
            _ => Err(Error::Config(format!("unknown pulse shape `{s}`"))),
        }
    }
}

impl fmt::Display for PulseShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PulseShape::Rec => "rec",
            PulseShape::Rc => "rc",
        })
    }
}

/// CPM parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CpmConfig {
    /// Modulation order `M` (power of two).
    pub order: usize,
    /// Pulse length `L` in symbols.
    pub memory: usize,
    /// Numerator `Q` of the modulation index `h = Q/P`.
    pub index_num: usize,
    /// Denominator `P` of the modulation index.
    pub index_den: usize,
    pub pulse: PulseShape,
    /// Samples per symbol `κ`.
    pub samples_per_symbol: usize,
}

impl CpmConfig {
    pub fn new(
        order: usize,
        memory: usize,
        index_num: usize,
        index_den: usize,
        pulse: PulseShape,
        samples_per_symbol: usize,
    ) -> Result<Self> {
        let cfg = Self {
            order,
            memory,
            index_num,
            index_den,
            pulse,
            samples_per_symbol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Quaternary 2RC with `h = 1/3`, two samples per symbol.
    pub fn quaternary_2rc() -> Self {
        Self {
            order: 4,
            memory: 2,
            index_num: 1,
            index_den: 3,
            pulse: PulseShape::Rc,
            samples_per_symbol: 2,
        }
    }

    /// Minimum shift keying (binary 1REC, `h = 1/2`).
    pub fn msk(samples_per_symbol: usize) -> Self {
        Self {
            order: 2,
            memory: 1,
            index_num: 1,
            index_den: 2,
            pulse: PulseShape::Rec,
            samples_per_symbol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 || !self.order.is_power_of_two() {
            return Err(Error::Config(format!(
                "modulation order {} must be a power of two >= 2",
                self.order
            )));
        }
        if self.memory < 1 {
            return Err(Error::Config("pulse length L must be >= 1".into()));
        }
        if self.samples_per_symbol < 1 {
            return Err(Error::Config("samples per symbol must be >= 1".into()));
        }
        if self.index_num == 0 || self.index_den == 0 {
            return Err(Error::Config("modulation index terms must be positive".into()));
        }
        if gcd(self.index_num, self.index_den) != 1 {
            return Err(Error::Config(format!(
                "modulation index {}/{} is not in lowest terms",
                self.index_num, self.index_den
            )));
        }
        Ok(())
    }

    /// Bits per symbol `G = log2 M`.
    pub fn bits_per_symbol(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    pub fn modulation_index(&self) -> f64 {
        self.index_num as f64 / self.index_den as f64
    }

    /// `M^(L-1)`, the number of distinct correlative memories.
    pub fn memory_states(&self) -> usize {
        self.order.pow((self.memory - 1) as u32)
    }

    /// `P · M^(L-1)`.
    pub fn num_states(&self) -> usize {
        self.index_den * self.memory_states()
    }

    /// `P · M^L`, the number of trellis branches and of distinct waveforms.
    pub fn num_branches(&self) -> usize {
        self.num_states() * self.order
    }

    /// Phase pulse `g(t)` with `t` in symbol periods.
    pub fn phase_pulse(&self, t: f64) -> f64 {
        phase_pulse(self.pulse, self.memory, t)
    }

    /// Maps a data symbol `α ∈ {±1, ±3, …}` to its modified value `α̃`.
    pub fn modified(&self, symbol: i32) -> Option<usize> {
        let m = self.order as i32;
        if symbol % 2 == 0 || symbol.abs() > m - 1 {
            return None;
        }
        Some(((symbol + m - 1) / 2) as usize)
    }

    /// Inverse of [`CpmConfig::modified`].
    pub fn symbol(&self, modified: usize) -> i32 {
        2 * modified as i32 - (self.order as i32 - 1)
    }
}

impl Default for CpmConfig {
    fn default() -> Self {
        Self::quaternary_2rc()
    }
}

/// Phase pulse `g(t)`: zero before the pulse, `1/2` after `L` symbols.
pub fn phase_pulse(pulse: PulseShape, memory: usize, t: f64) -> f64 {
    let lt = memory as f64;
    if t <= 0.0 {
        return 0.0;
    }
    if t >= lt {
        return 0.5;
    }
    match pulse {
        PulseShape::Rec => t / (2.0 * lt),
        PulseShape::Rc => (t - lt / (2.0 * PI) * (2.0 * PI * t / lt).sin()) / (2.0 * lt),
    }
}

pub(crate) fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Time-invariant tilted-phase trellis.
///
/// States are indexed as `k · M^(L-1) + memory`, where digit `j` of
/// `memory` (base `M`) is `α̃` of the symbol `j + 1` steps in the past.
/// Branch `l = state · M + α̃` also indexes the waveform bank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpmTrellis {
    cfg: CpmConfig,
    num_states: usize,
    next: Vec<usize>,
    /// Incoming `(state, input)` pairs, `M` per state.
    incoming: Vec<(usize, usize)>,
}

impl CpmTrellis {
    pub fn new(cfg: &CpmConfig) -> Result<Self> {
        cfg.validate()?;
        let m = cfg.order;
        let num_states = cfg.num_states();
        let mut next = vec![0; num_states * m];
        let mut incoming = Vec::with_capacity(num_states * m);
        let mut in_lists = vec![Vec::with_capacity(m); num_states];
        for state in 0..num_states {
            for input in 0..m {
                let to = Self::step(cfg, state, input);
                next[state * m + input] = to;
                in_lists[to].push((state, input));
            }
        }
        for (state, list) in in_lists.iter().enumerate() {
            if list.len() != m {
                return Err(Error::Config(format!(
                    "trellis state {state} has {} incoming branches",
                    list.len()
                )));
            }
            incoming.extend_from_slice(list);
        }
        Ok(Self {
            cfg: *cfg,
            num_states,
            next,
            incoming,
        })
    }

    fn step(cfg: &CpmConfig, state: usize, input: usize) -> usize {
        let m = cfg.order;
        let mem_states = cfg.memory_states();
        let k = state / mem_states;
        let mem = state % mem_states;
        let absorbed = if cfg.memory == 1 {
            input
        } else {
            mem / (mem_states / m)
        };
        let k_next = (k + cfg.index_num * absorbed) % cfg.index_den;
        let mem_next = if cfg.memory == 1 {
            0
        } else {
            (mem % (mem_states / m)) * m + input
        };
        k_next * mem_states + mem_next
    }

    pub fn config(&self) -> &CpmConfig {
        &self.cfg
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_branches(&self) -> usize {
        self.num_states * self.cfg.order
    }

    pub fn order(&self) -> usize {
        self.cfg.order
    }

    #[inline]
    pub fn next_state(&self, state: usize, input: usize) -> usize {
        self.next[state * self.cfg.order + input]
    }

    /// Branches `(from_state, input)` ending in `state`.
    #[inline]
    pub fn incoming(&self, state: usize) -> &[(usize, usize)] {
        let m = self.cfg.order;
        &self.incoming[state * m..(state + 1) * m]
    }

    #[inline]
    pub fn branch(&self, state: usize, input: usize) -> usize {
        state * self.cfg.order + input
    }

    /// Accumulated-phase index `k` of a state.
    pub fn phase_index(&self, state: usize) -> usize {
        state / self.cfg.memory_states()
    }

    /// Modified data held in the state's memory, most recent first.
    pub fn memory(&self, state: usize) -> Vec<usize> {
        let m = self.cfg.order;
        let mut mem = state % self.cfg.memory_states();
        (0..self.cfg.memory - 1)
            .map(|_| {
                let d = mem % m;
                mem /= m;
                d
            })
            .collect()
    }

    /// Builds a state index from `k` and memory digits (most recent first).
    pub fn state_index(&self, phase_index: usize, memory: &[usize]) -> Result<usize> {
        let m = self.cfg.order;
        if phase_index >= self.cfg.index_den
            || memory.len() != self.cfg.memory - 1
            || memory.iter().any(|&d| d >= m)
        {
            return Err(Error::Config("state components out of range".into()));
        }
        let mem = memory.iter().rev().fold(0, |acc, &d| acc * m + d);
        Ok(phase_index * self.cfg.memory_states() + mem)
    }

    /// Tilted phase of branch `(state, input)` at fractional time `tau ∈ [0, 1]`
    /// within the symbol interval.
    pub fn tilted_phase(&self, state: usize, input: usize, tau: f64) -> f64 {
        let cfg = &self.cfg;
        let h = cfg.modulation_index();
        let m1 = (cfg.order - 1) as f64;
        let k = self.phase_index(state);
        // window[l] = α̃ of the symbol l steps back, window[0] = input
        let mut window = Vec::with_capacity(cfg.memory);
        window.push(input);
        window.extend(self.memory(state));
        let mut phase = 2.0 * PI * k as f64 / cfg.index_den as f64
            + PI * h * m1 * (cfg.memory - 1) as f64
            + PI * h * m1 * tau;
        for (l, &a) in window.iter().enumerate() {
            let g = cfg.phase_pulse(tau + l as f64);
            phase += 4.0 * PI * h * a as f64 * g - 2.0 * PI * h * m1 * g;
        }
        phase
    }
}

/// Bank of tilted waveforms `χ_l`, one row of `κ` unit-modulus samples per
/// trellis branch. Samples sit at `τ = i/κ` within the symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformTable<T> {
    rows: usize,
    samples_per_symbol: usize,
    chi: Vec<Cplx<T>>,
}

impl<T: Real> WaveformTable<T> {
    pub fn new(trellis: &CpmTrellis) -> Self {
        let cfg = trellis.config();
        let kappa = cfg.samples_per_symbol;
        let rows = trellis.num_branches();
        let mut chi = Vec::with_capacity(rows * kappa);
        for state in 0..trellis.num_states() {
            for input in 0..cfg.order {
                for i in 0..kappa {
                    let phase = trellis.tilted_phase(state, input, i as f64 / kappa as f64);
                    chi.push(Complex::new(T::lit(phase.cos()), T::lit(phase.sin())));
                }
            }
        }
        Self {
            rows,
            samples_per_symbol: kappa,
            chi,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.samples_per_symbol
    }

    /// The `κ` samples of waveform `l`.
    #[inline]
    pub fn row(&self, l: usize) -> &[Cplx<T>] {
        let k = self.samples_per_symbol;
        &self.chi[l * k..(l + 1) * k]
    }

    #[inline]
    pub fn sample(&self, l: usize, i: usize) -> Cplx<T> {
        self.chi[l * self.samples_per_symbol + i]
    }
}

/// Cached tilt phasors `e^{jψ}` with `ψ = πh(M−1)·s/κ` for sample index `s`.
/// The sequence is periodic, so one period is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltTable<T> {
    phasors: Vec<Cplx<T>>,
}

impl<T: Real> TiltTable<T> {
    pub fn new(cfg: &CpmConfig) -> Self {
        // ψ advances by π·Q(M−1)/(Pκ) per sample
        let num = cfg.index_num * (cfg.order - 1);
        let den = cfg.index_den * cfg.samples_per_symbol;
        let period = 2 * den / gcd(num, 2 * den);
        let phasors = (0..period)
            .map(|s| {
                // reduce the rational phase before going to floating point
                let turns = (num * s) % (2 * den);
                let psi = PI * turns as f64 / den as f64;
                Complex::new(T::lit(psi.cos()), T::lit(psi.sin()))
            })
            .collect();
        Self { phasors }
    }

    pub fn period(&self) -> usize {
        self.phasors.len()
    }

    /// `e^{jψ}` at absolute sample index `κn + i`.
    #[inline]
    pub fn phasor(&self, sample: usize) -> Cplx<T> {
        self.phasors[sample % self.phasors.len()]
    }
}

/// Precomputed modulation tables shared by transmitter and receiver.
#[derive(Debug, Clone)]
pub struct CpmModem<T> {
    pub trellis: CpmTrellis,
    pub table: WaveformTable<T>,
    pub tilt: TiltTable<T>,
}

impl<T: Real> CpmModem<T> {
    pub fn new(cfg: &CpmConfig) -> Result<Self> {
        let trellis = CpmTrellis::new(cfg)?;
        let table = WaveformTable::new(&trellis);
        let tilt = TiltTable::new(cfg);
        Ok(Self {
            trellis,
            table,
            tilt,
        })
    }

    pub fn config(&self) -> &CpmConfig {
        self.trellis.config()
    }

    pub fn modulate(&self, symbols: &[i32], initial_state: usize) -> Result<(Vec<Cplx<T>>, usize)> {
        modulate(symbols, initial_state, &self.trellis, &self.table, &self.tilt)
    }
}

/// Walks the trellis from `initial_state` and emits the untilted samples
/// `x = χ · e^{−jψ}`, with sample time counted from the first symbol.
pub fn modulate<T: Real>(
    symbols: &[i32],
    initial_state: usize,
    trellis: &CpmTrellis,
    table: &WaveformTable<T>,
    tilt: &TiltTable<T>,
) -> Result<(Vec<Cplx<T>>, usize)> {
    let cfg = trellis.config();
    if initial_state >= trellis.num_states() {
        return Err(Error::InvalidState {
            state: initial_state,
            num_states: trellis.num_states(),
        });
    }
    let kappa = cfg.samples_per_symbol;
    let mut out = Vec::with_capacity(symbols.len() * kappa);
    let mut state = initial_state;
    for (n, &sym) in symbols.iter().enumerate() {
        let input = cfg.modified(sym).ok_or(Error::InvalidSymbol {
            symbol: sym,
            position: n,
            order: cfg.order,
        })?;
        let row = table.row(trellis.branch(state, input));
        for (i, &chi) in row.iter().enumerate() {
            out.push(chi * tilt.phasor(n * kappa + i).conj());
        }
        state = trellis.next_state(state, input);
    }
    Ok((out, state))
}
