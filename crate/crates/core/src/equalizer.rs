//! Frequency-domain UAMP equalizer with scalar step sizes.

use crate::channel::ChannelRealization;
use crate::cpm::{TiltTable, WaveformTable};
use crate::dft::{fft_flops, UnitaryDft};
use crate::error::{check_len, Error, Result};
use crate::num::{Cplx, Real};

/// Normalisation of the `1/τ_q` average over the gain vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauQNorm {
    /// Divide by the block length in samples `κÑ`.
    #[default]
    Samples,
    /// Divide by the block length in symbols `Ñ`.
    Symbols,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UampConfig {
    pub tau_q_norm: TauQNorm,
    /// Convex damping on `(x̂, τ_x)`: `new = β·update + (1−β)·old`.
    /// `None` disables damping.
    pub damping: Option<f64>,
    /// Lower bound on `τ_p + σ²` to keep `τ_s` finite at zero noise.
    pub precision_floor: f64,
}

impl Default for UampConfig {
    fn default() -> Self {
        Self {
            tau_q_norm: TauQNorm::Samples,
            damping: None,
            precision_floor: 1e-12,
        }
    }
}

/// Modelled floating point work, split by receiver stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub fft: u64,
    pub uamp: u64,
    pub belief: u64,
    pub demod: u64,
    pub decoder: u64,
}

impl OpCounter {
    /// Work attributed to the equalizer: transforms, UAMP vector updates
    /// and belief computation.
    pub fn equalizer(&self) -> u64 {
        self.fft + self.uamp + self.belief
    }

    pub fn total(&self) -> u64 {
        self.equalizer() + self.demod + self.decoder
    }
}

/// Posterior means and average variance from a denoising step.
pub trait Denoiser<T: Real> {
    /// Writes `E[x | q, τ_q]` into `xhat` and returns the mean posterior
    /// variance.
    fn denoise(
        &mut self,
        q: &[Cplx<T>],
        tau_q: T,
        xhat: &mut [Cplx<T>],
        ops: &mut OpCounter,
    ) -> Result<T>;
}

/// Zero-mean circular Gaussian prior with the given variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrior<T> {
    pub variance: T,
}

impl<T: Real> Denoiser<T> for GaussianPrior<T> {
    fn denoise(
        &mut self,
        q: &[Cplx<T>],
        tau_q: T,
        xhat: &mut [Cplx<T>],
        ops: &mut OpCounter,
    ) -> Result<T> {
        check_len("denoiser output", q.len(), xhat.len())?;
        let gain = self.variance / (self.variance + tau_q);
        for (x, &v) in xhat.iter_mut().zip(q) {
            *x = v * gain;
        }
        ops.belief += 2 * q.len() as u64;
        Ok(gain * tau_q)
    }
}

/// Per-symbol log prior over waveform rows `log Pᵃ(y_n = χ_l)`,
/// stored row-major (`num_rows` entries per symbol), unnormalised.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformPriors<T> {
    pub num_rows: usize,
    pub log_prior: Vec<T>,
}

impl<T: Real> WaveformPriors<T> {
    pub fn uniform(symbols: usize, num_rows: usize) -> Self {
        Self {
            num_rows,
            log_prior: vec![T::zero(); symbols * num_rows],
        }
    }

    pub fn symbols(&self) -> usize {
        self.log_prior.len() / self.num_rows.max(1)
    }

    pub fn row(&self, n: usize) -> &[T] {
        &self.log_prior[n * self.num_rows..(n + 1) * self.num_rows]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [T] {
        &mut self.log_prior[n * self.num_rows..(n + 1) * self.num_rows]
    }
}

/// Output of [`compute_beliefs`].
#[derive(Debug, Clone, PartialEq)]
pub struct Beliefs<T> {
    pub xhat: Vec<Cplx<T>>,
    /// Per-sample posterior variances.
    pub variances: Vec<T>,
    pub tau_x: T,
    /// Normalised posteriors `P(y_n^i = χ_l^i)`, `num_rows` per sample.
    pub posteriors: Vec<T>,
}

/// Discrete waveform-alphabet denoiser driven by [`WaveformPriors`].
#[derive(Debug, Clone, Copy)]
pub struct DiscretePrior<'a, T> {
    pub table: &'a WaveformTable<T>,
    pub tilt: &'a TiltTable<T>,
    pub priors: &'a WaveformPriors<T>,
}

impl<T: Real> DiscretePrior<'_, T> {
    fn check(&self, q: &[Cplx<T>]) -> Result<()> {
        check_len("waveform prior rows", self.table.num_rows(), self.priors.num_rows)?;
        check_len(
            "pseudo-observations",
            self.priors.symbols() * self.table.samples_per_symbol(),
            q.len(),
        )
    }

    /// Evaluates one sample; `post` receives the normalised posterior.
    /// Returns `(x̂, τ̂)`.
    #[inline]
    fn sample(&self, n: usize, i: usize, q: Cplx<T>, tau_q: T, post: &mut [T]) -> Result<(Cplx<T>, T)> {
        let kappa = self.table.samples_per_symbol();
        let tilt = self.tilt.phasor(n * kappa + i);
        let qt = q * tilt;
        let prior = self.priors.row(n);
        let inv = T::one() / tau_q;
        let mut max = T::neg_infinity();
        for (l, p) in post.iter_mut().enumerate() {
            let v = prior[l] - (self.table.sample(l, i) - qt).norm_sqr() * inv;
            *p = v;
            if v > max {
                max = v;
            }
        }
        if max == T::neg_infinity() || max.is_nan() {
            return Err(Error::DegeneratePrior { row: n });
        }
        let mut sum = T::zero();
        for p in post.iter_mut() {
            *p = (*p - max).exp();
            sum = sum + *p;
        }
        let mut mean = Cplx::new(T::zero(), T::zero());
        for (l, p) in post.iter_mut().enumerate() {
            *p = *p / sum;
            mean = mean + self.table.sample(l, i) * *p;
        }
        let var = post
            .iter()
            .enumerate()
            .map(|(l, &p)| (mean - self.table.sample(l, i)).norm_sqr() * p)
            .sum();
        Ok((mean * tilt.conj(), var))
    }

    fn op_cost(&self, samples: usize) -> u64 {
        // distance, exponent, normalisation, mean and variance per row
        (samples * self.table.num_rows() * 16) as u64
    }
}

impl<T: Real> Denoiser<T> for DiscretePrior<'_, T> {
    fn denoise(
        &mut self,
        q: &[Cplx<T>],
        tau_q: T,
        xhat: &mut [Cplx<T>],
        ops: &mut OpCounter,
    ) -> Result<T> {
        self.check(q)?;
        check_len("denoiser output", q.len(), xhat.len())?;
        let kappa = self.table.samples_per_symbol();
        let mut post = vec![T::zero(); self.table.num_rows()];
        let mut total = T::zero();
        for (s, (x, &qs)) in xhat.iter_mut().zip(q).enumerate() {
            let (m, v) = self.sample(s / kappa, s % kappa, qs, tau_q, &mut post)?;
            *x = m;
            total = total + v;
        }
        ops.belief += self.op_cost(q.len());
        Ok(total / T::count(q.len()))
    }
}

/// Belief step with full output, including per-sample posteriors.
pub fn compute_beliefs<T: Real>(
    q: &[Cplx<T>],
    tau_q: T,
    prior: &DiscretePrior<'_, T>,
) -> Result<Beliefs<T>> {
    prior.check(q)?;
    let kappa = prior.table.samples_per_symbol();
    let rows = prior.table.num_rows();
    let mut posteriors = vec![T::zero(); q.len() * rows];
    let mut xhat = Vec::with_capacity(q.len());
    let mut variances = Vec::with_capacity(q.len());
    for (s, &qs) in q.iter().enumerate() {
        let (m, v) = prior.sample(
            s / kappa,
            s % kappa,
            qs,
            tau_q,
            &mut posteriors[s * rows..(s + 1) * rows],
        )?;
        xhat.push(m);
        variances.push(v);
    }
    let tau_x = variances.iter().copied().sum::<T>() / T::count(q.len().max(1));
    Ok(Beliefs {
        xhat,
        variances,
        tau_x,
        posteriors,
    })
}

/// UAMP working state for one block.
#[derive(Debug, Clone)]
pub struct UampState<T: Real> {
    dft: UnitaryDft<T>,
    samples_per_symbol: usize,
    pub z: Vec<Cplx<T>>,
    pub xhat: Vec<Cplx<T>>,
    pub tau_x: T,
    pub s: Vec<Cplx<T>>,
    pub p: Vec<Cplx<T>>,
    pub tau_p: Vec<T>,
    pub tau_s: Vec<T>,
    pub q: Vec<Cplx<T>>,
    pub tau_q: T,
}

impl<T: Real> UampState<T> {
    /// Transforms the CP-free block `z = F·r` and initialises
    /// `x̂ = 0`, `τ_x = 1`, `s = 0`.
    pub fn new(
        block: &[Cplx<T>],
        dft: &UnitaryDft<T>,
        samples_per_symbol: usize,
        ops: &mut OpCounter,
    ) -> Result<Self> {
        let n = dft.len();
        check_len("received block", n, block.len())?;
        let mut z = block.to_vec();
        dft.forward(&mut z)?;
        ops.fft += fft_flops(n);
        let zero = Cplx::new(T::zero(), T::zero());
        Ok(Self {
            dft: dft.clone(),
            samples_per_symbol: samples_per_symbol.max(1),
            z,
            xhat: vec![zero; n],
            tau_x: T::one(),
            s: vec![zero; n],
            p: vec![zero; n],
            tau_p: vec![T::zero(); n],
            tau_s: vec![T::zero(); n],
            q: vec![zero; n],
            tau_q: T::one(),
        })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Computes `p, τ_p, s, τ_s, q, τ_q` from the current `x̂, τ_x, s`.
    pub fn forward(
        &mut self,
        ch: &ChannelRealization<T>,
        cfg: &UampConfig,
        outer: usize,
        ops: &mut OpCounter,
    ) -> Result<()> {
        let n = self.len();
        check_len("channel spectrum", n, ch.spectrum.len())?;
        let floor = T::lit(cfg.precision_floor);

        let mut fx = self.xhat.clone();
        self.dft.forward(&mut fx)?;
        let mut acc = T::zero();
        for k in 0..n {
            let lam = ch.gains[k];
            let tp = self.tau_x * lam;
            let p = ch.spectrum[k] * fx[k] - self.s[k] * tp;
            let ts = T::one() / (tp + ch.sigma2).max(floor);
            self.tau_p[k] = tp;
            self.p[k] = p;
            self.tau_s[k] = ts;
            self.s[k] = (self.z[k] - p) * ts;
            acc = acc + lam * ts;
            // reuse the buffer for Λᴴ·s
            fx[k] = ch.spectrum[k].conj() * self.s[k];
        }
        let denom = self.norm_len(cfg.tau_q_norm);
        let tau_q = denom / acc;
        if !tau_q.is_finite() || tau_q <= T::zero() {
            return Err(Error::Divergence {
                stage: "equalizer",
                outer,
            });
        }
        self.tau_q = tau_q;
        self.dft.inverse(&mut fx)?;
        for k in 0..n {
            self.q[k] = self.xhat[k] + fx[k] * tau_q;
        }
        if self.q.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Divergence {
                stage: "equalizer",
                outer,
            });
        }
        ops.fft += 2 * fft_flops(n);
        ops.uamp += 30 * n as u64;
        Ok(())
    }

    fn norm_len(&self, norm: TauQNorm) -> T {
        match norm {
            TauQNorm::Samples => T::count(self.len()),
            TauQNorm::Symbols => T::count(self.len()) / T::count(self.samples_per_symbol),
        }
    }

    /// Runs the belief step, applying optional damping.
    pub fn update_beliefs<D: Denoiser<T>>(
        &mut self,
        denoiser: &mut D,
        cfg: &UampConfig,
        ops: &mut OpCounter,
    ) -> Result<()> {
        let mut xhat = vec![Cplx::new(T::zero(), T::zero()); self.len()];
        let tau_x = denoiser.denoise(&self.q, self.tau_q, &mut xhat, ops)?;
        match cfg.damping {
            Some(beta) => {
                let b = T::lit(beta);
                let c = T::one() - b;
                for (old, new) in self.xhat.iter_mut().zip(&xhat) {
                    *old = *new * b + *old * c;
                }
                self.tau_x = tau_x * b + self.tau_x * c;
            }
            None => {
                self.xhat = xhat;
                self.tau_x = tau_x;
            }
        }
        ops.uamp += self.len() as u64;
        Ok(())
    }
}
