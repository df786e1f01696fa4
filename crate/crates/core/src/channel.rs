//! Multipath channel profiles, per-frame realizations and AWGN.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dft::UnitaryDft;
use crate::error::{check_len, Error, Result};
use crate::num::{Cplx, Real};

const NORM_TOLERANCE: f64 = 1e-3;

/// How tap values are turned into a realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingKind {
    /// Values are real amplitudes used unchanged every frame.
    Fixed,
    /// Values are tap powers; each frame draws independent complex
    /// Gaussian taps held constant over the frame.
    Rayleigh,
    /// As [`Rayleigh`](Self::Rayleigh), then each draw is scaled to unit
    /// energy so that every frame sees the nominal `Eb/N0`.
    RayleighNormalized,
}

impl FromStr for FadingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" => Ok(FadingKind::Fixed),
            "rayleigh" | "rayleigh-block" => Ok(FadingKind::Rayleigh),
            "rayleigh-normalized" => Ok(FadingKind::RayleighNormalized),
            other => Err(Error::Profile(format!("unknown fading kind `{other}`"))),
        }
    }
}

impl fmt::Display for FadingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FadingKind::Fixed => "fixed",
            FadingKind::Rayleigh => "rayleigh",
            FadingKind::RayleighNormalized => "rayleigh-normalized",
        })
    }
}

/// Tap delays (in samples) and values of a multipath channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    pub name: String,
    pub kind: FadingKind,
    pub delays: Vec<usize>,
    pub values: Vec<f64>,
}

impl ChannelProfile {
    pub fn new(name: &str, kind: FadingKind, delays: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let p = Self {
            name: name.to_string(),
            kind,
            delays,
            values,
        };
        p.validate()?;
        Ok(p)
    }

    /// Six-path typical urban profile, Rayleigh block fading.
    pub fn tu6() -> Self {
        Self {
            name: "tu6".into(),
            kind: FadingKind::Rayleigh,
            delays: vec![0, 1, 2, 8, 12, 25],
            values: vec![0.189, 0.379, 0.255, 0.090, 0.055, 0.032],
        }
    }

    /// Proakis C, a fixed five-tap channel with deep spectral nulls.
    pub fn proakis_c() -> Self {
        Self {
            name: "proakis-c".into(),
            kind: FadingKind::Fixed,
            delays: vec![0, 1, 2, 3, 4],
            values: vec![0.227, 0.460, 0.688, 0.460, 0.227],
        }
    }

    /// Single unit tap.
    pub fn flat() -> Self {
        Self {
            name: "flat".into(),
            kind: FadingKind::Fixed,
            delays: vec![0],
            values: vec![1.0],
        }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "tu6" | "tu-6" => Ok(Self::tu6()),
            "proakis-c" | "proakisc" | "proakis_c" => Ok(Self::proakis_c()),
            "flat" => Ok(Self::flat()),
            other => Err(Error::Profile(format!("no built-in channel named `{other}`"))),
        }
    }

    /// Parses the text format:
    ///
    /// ```text
    /// # comment
    /// name: my-channel
    /// kind: rayleigh
    /// 0 0.5
    /// 3 0.5
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut name = String::from("custom");
        let mut kind = None;
        let mut delays = vec![];
        let mut values = vec![];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((key, val)) = line.split_once(':') {
                match key.trim().to_ascii_lowercase().as_str() {
                    "kind" => kind = Some(val.parse()?),
                    "name" => name = val.trim().to_string(),
                    other => {
                        return Err(Error::Profile(format!(
                            "line {}: unknown key `{other}`",
                            lineno + 1
                        )))
                    }
                }
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(d), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Profile(format!(
                    "line {}: expected `delay value`",
                    lineno + 1
                )));
            };
            let d: usize = d
                .parse()
                .map_err(|_| Error::Profile(format!("line {}: bad delay `{d}`", lineno + 1)))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::Profile(format!("line {}: bad value `{v}`", lineno + 1)))?;
            delays.push(d);
            values.push(v);
        }
        let kind = kind.ok_or_else(|| Error::Profile("missing `kind:` header".into()))?;
        Self::new(&name, kind, delays, values)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Profile(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delays.is_empty() || self.delays.len() != self.values.len() {
            return Err(Error::Profile(format!(
                "{} delays for {} values",
                self.delays.len(),
                self.values.len()
            )));
        }
        let mut sorted = self.delays.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.delays.len() {
            return Err(Error::Profile("duplicate tap delay".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Profile("non-finite tap value".into()));
        }
        let energy: f64 = match self.kind {
            FadingKind::Rayleigh | FadingKind::RayleighNormalized => {
                if self.values.iter().any(|&v| v < 0.0) {
                    return Err(Error::Profile("negative tap power".into()));
                }
                self.values.iter().sum()
            }
            FadingKind::Fixed => self.values.iter().map(|v| v * v).sum(),
        };
        if (energy - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Profile(format!(
                "total energy {energy} is not normalized to 1"
            )));
        }
        Ok(())
    }

    /// Channel length `L_c` in samples (largest delay plus one).
    pub fn len(&self) -> usize {
        self.delays.iter().max().map_or(0, |d| d + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// Draws one frame's dense tap vector of length [`len`](Self::len).
    pub fn draw<T: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Cplx<T>> {
        let mut taps = vec![Cplx::new(T::zero(), T::zero()); self.len()];
        for (&d, &v) in self.delays.iter().zip(&self.values) {
            taps[d] = match self.kind {
                FadingKind::Fixed => Cplx::new(T::lit(v), T::zero()),
                FadingKind::Rayleigh | FadingKind::RayleighNormalized => {
                    complex_gaussian(rng, T::lit(v))
                }
            };
        }
        if self.kind == FadingKind::RayleighNormalized {
            let energy: T = taps.iter().map(|t| t.norm_sqr()).sum();
            if energy > T::zero() {
                let g = energy.sqrt().recip();
                for t in taps.iter_mut() {
                    *t = *t * g;
                }
            }
        }
        taps
    }
}

impl fmt::Display for ChannelProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "name: {}", self.name)?;
        writeln!(f, "kind: {}", self.kind)?;
        for (d, v) in self.delays.iter().zip(&self.values) {
            writeln!(f, "{d} {v}")?;
        }
        Ok(())
    }
}

/// Circular complex Gaussian sample with total variance `var`.
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R, var: T) -> Cplx<T> {
    let s = (var * T::lit(0.5)).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Cplx::new(T::lit(re) * s, T::lit(im) * s)
}

/// Complex noise variance per sample for a given `Eb/N0` in dB, with
/// unit-modulus samples (`Es = κ`) and `Eb = Es/(G·R)`.
pub fn noise_variance(ebn0_db: f64, samples_per_symbol: usize, bits_per_symbol: usize, rate: f64) -> f64 {
    if ebn0_db == f64::INFINITY {
        return 0.0;
    }
    samples_per_symbol as f64 / (bits_per_symbol as f64 * rate * 10f64.powf(ebn0_db / 10.0))
}

/// Signal power that the nominal `Eb/N0` refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseReference {
    /// Unit transmitted sample power; the channel gain shows up in the SNR.
    Transmitted,
    /// Mean power of each frame's noiseless received samples.
    #[default]
    Received,
}

impl NoiseReference {
    /// Noise variance for one frame given its noiseless channel output.
    pub fn frame_variance<T: Real>(self, nominal: T, clean: &[Cplx<T>]) -> T {
        match self {
            NoiseReference::Transmitted => nominal,
            NoiseReference::Received if clean.is_empty() => nominal,
            NoiseReference::Received => {
                nominal * clean.iter().map(|c| c.norm_sqr()).sum::<T>() / T::count(clean.len())
            }
        }
    }
}

impl FromStr for NoiseReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "transmitted" | "tx" => Ok(NoiseReference::Transmitted),
            "received" | "rx" => Ok(NoiseReference::Received),
            other => Err(Error::Config(format!("unknown noise reference `{other}`"))),
        }
    }
}

impl fmt::Display for NoiseReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseReference::Transmitted => "transmitted",
            NoiseReference::Received => "received",
        })
    }
}

/// Linear convolution truncated to the input length (zero history).
pub fn convolve<T: Real>(x: &[Cplx<T>], taps: &[Cplx<T>]) -> Vec<Cplx<T>> {
    (0..x.len())
        .map(|n| {
            taps.iter()
                .take(n + 1)
                .enumerate()
                .fold(Cplx::new(T::zero(), T::zero()), |acc, (l, &h)| acc + h * x[n - l])
        })
        .collect()
}

/// Passes a frame through the channel and adds noise of variance `sigma2`.
pub fn transmit<T: Real, R: Rng + ?Sized>(
    x: &[Cplx<T>],
    taps: &[Cplx<T>],
    sigma2: T,
    rng: &mut R,
) -> Vec<Cplx<T>> {
    let mut r = convolve(x, taps);
    if sigma2 > T::zero() {
        for v in r.iter_mut() {
            *v = *v + complex_gaussian(rng, sigma2);
        }
    }
    r
}

/// Like [`transmit`], with the noise variance scaled per `reference`.
/// Returns the received frame and the variance actually used.
pub fn transmit_referenced<T: Real, R: Rng + ?Sized>(
    x: &[Cplx<T>],
    taps: &[Cplx<T>],
    nominal: T,
    reference: NoiseReference,
    rng: &mut R,
) -> (Vec<Cplx<T>>, T) {
    let mut r = convolve(x, taps);
    let sigma2 = reference.frame_variance(nominal, &r);
    if sigma2 > T::zero() {
        for v in r.iter_mut() {
            *v = *v + complex_gaussian(rng, sigma2);
        }
    }
    (r, sigma2)
}

/// Receiver-side view of one frame's channel: taps, circulant spectrum
/// `Λ` and gains `λ = |Λ|²` on the block length, and noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    pub taps: Vec<Cplx<T>>,
    pub spectrum: Vec<Cplx<T>>,
    pub gains: Vec<T>,
    pub sigma2: T,
}

impl<T: Real> ChannelRealization<T> {
    pub fn new(taps: Vec<Cplx<T>>, sigma2: T, dft: &UnitaryDft<T>) -> Result<Self> {
        let spectrum = dft.spectrum(&taps)?;
        let gains = spectrum.iter().map(|c| c.norm_sqr()).collect();
        Ok(Self {
            taps,
            spectrum,
            gains,
            sigma2,
        })
    }

    pub fn block_len(&self) -> usize {
        self.spectrum.len()
    }

    /// Circular convolution of a block with the taps.
    pub fn apply_circulant(&self, x: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
        let n = self.block_len();
        check_len("circulant input", n, x.len())?;
        Ok((0..n)
            .map(|k| {
                self.taps
                    .iter()
                    .enumerate()
                    .fold(Cplx::new(T::zero(), T::zero()), |acc, (l, &h)| {
                        acc + h * x[(k + n - l % n) % n]
                    })
            })
            .collect())
    }
}
