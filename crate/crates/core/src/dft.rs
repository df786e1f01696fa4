use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Result};
use crate::num::{Cplx, Real};

/// Unitary DFT of a fixed length: both directions scale by `1/√n`.
#[derive(Clone)]
pub struct UnitaryDft<T: Real> {
    len: usize,
    scale: T,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for UnitaryDft<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitaryDft").field("len", &self.len).finish()
    }
}

impl<T: Real> UnitaryDft<T> {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            scale: T::one() / T::count(len.max(1)).sqrt(),
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place `F·x`.
    pub fn forward(&self, buf: &mut [Cplx<T>]) -> Result<()> {
        check_len("DFT input", self.len, buf.len())?;
        self.forward.process(buf);
        self.rescale(buf);
        Ok(())
    }

    /// In-place `Fᴴ·x`.
    pub fn inverse(&self, buf: &mut [Cplx<T>]) -> Result<()> {
        check_len("DFT input", self.len, buf.len())?;
        self.inverse.process(buf);
        self.rescale(buf);
        Ok(())
    }

    /// Unnormalized forward DFT of `taps` zero-padded to the transform length.
    pub fn spectrum(&self, taps: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
        if taps.len() > self.len {
            return Err(crate::Error::LengthMismatch {
                what: "channel taps",
                expected: self.len,
                actual: taps.len(),
            });
        }
        let mut buf = vec![Cplx::new(T::zero(), T::zero()); self.len];
        buf[..taps.len()].copy_from_slice(taps);
        self.forward.process(&mut buf);
        Ok(buf)
    }

    fn rescale(&self, buf: &mut [Cplx<T>]) {
        for v in buf.iter_mut() {
            *v = *v * self.scale;
        }
    }
}

/// Modelled real floating point operations of one length-`n` FFT.
pub fn fft_flops(n: usize) -> u64 {
    if n < 2 {
        return 0;
    }
    (5.0 * n as f64 * (n as f64).log2()).round() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Cplx<f64>]) -> Vec<Cplx<f64>> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(m, &v)| v * Cplx::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * m) as f64 / n as f64))
                    .sum::<Cplx<f64>>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn matches_naive_unitary_dft() {
        let x: Vec<Cplx<f64>> = (0..12).map(|i| Cplx::new(i as f64 * 0.3 - 1.0, (i * i) as f64 * 0.05)).collect();
        let mut y = x.clone();
        let dft = UnitaryDft::new(12);
        dft.forward(&mut y).unwrap();
        for (a, b) in y.iter().zip(naive_dft(&x)) {
            assert!((a - b).norm() < 1e-12);
        }
        dft.inverse(&mut y).unwrap();
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn preserves_norm() {
        let x: Vec<Cplx<f64>> = (0..64).map(|i| Cplx::from_polar(1.0 + i as f64, i as f64)).collect();
        let mut y = x.clone();
        UnitaryDft::new(64).forward(&mut y).unwrap();
        let e = |v: &[Cplx<f64>]| v.iter().map(|c| c.norm_sqr()).sum::<f64>();
        assert!((e(&x) - e(&y)).abs() < 1e-9 * e(&x));
    }

    #[test]
    fn spectrum_of_delayed_impulse() {
        let dft = UnitaryDft::<f64>::new(8);
        let s = dft.spectrum(&[Cplx::new(0.0, 0.0), Cplx::new(1.0, 0.0)]).unwrap();
        for (k, v) in s.iter().enumerate() {
            let e = Cplx::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / 8.0);
            assert!((v - e).norm() < 1e-12);
        }
        assert!(dft.spectrum(&[Cplx::new(1.0, 0.0); 9]).is_err());
    }

    #[test]
    fn flop_model() {
        assert_eq!(fft_flops(1), 0);
        assert_eq!(fft_flops(1024), 51200);
    }
}
