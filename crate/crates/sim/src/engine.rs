//! Frame-parallel Monte Carlo loop.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cpmeq::channel::transmit_referenced;
use cpmeq::num::Real;
use cpmeq::{Link, ReceiverConfig};

use crate::config::{Precision, SimConfig};
use crate::error::Result;
use crate::records::BerRecord;

/// Frames per parallel batch. The stop rule is checked between batches, so
/// results do not depend on the thread count.
pub const BATCH: usize = 32;

/// Per-frame generator: stream `frame` of the master seed.
pub fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

/// Error counts of one frame, one entry per `(outer, inner)` coordinate.
pub fn simulate_frame<T: Real>(
    link: &Link<T>,
    rcfg: &ReceiverConfig,
    cfg: &SimConfig,
    nominal_sigma2: f64,
    frame: u64,
) -> Result<Vec<usize>> {
    let mut rng = frame_rng(cfg.seed, frame);
    let info = link.random_info(&mut rng);
    let tx = link.transmit(&info)?;
    let taps = cfg.channel.draw::<T, _>(&mut rng);
    let (rx, sigma2) = transmit_referenced(
        &tx.samples,
        &taps,
        T::lit(nominal_sigma2),
        cfg.noise_reference,
        &mut rng,
    );
    let channel = link.realization(taps, sigma2)?;
    let out = link.receive(&rx, &channel, rcfg, Some(&info))?;
    Ok(out
        .trace
        .iter()
        .map(|r| r.bit_errors.unwrap_or_default())
        .collect())
}

/// Runs every `Eb/N0` point of `cfg`, calling `on_point` with each point's
/// records as soon as it finishes.
pub fn run_monte_carlo_with<F>(cfg: &SimConfig, mut on_point: F) -> Result<Vec<BerRecord>>
where
    F: FnMut(&[BerRecord]),
{
    cfg.validate()?;
    match cfg.precision {
        Precision::F64 => run_typed::<f64, F>(cfg, &mut on_point),
        Precision::F32 => run_typed::<f32, F>(cfg, &mut on_point),
    }
}

pub fn run_monte_carlo(cfg: &SimConfig) -> Result<Vec<BerRecord>> {
    run_monte_carlo_with(cfg, |_| {})
}

fn run_typed<T: Real, F: FnMut(&[BerRecord])>(cfg: &SimConfig, on_point: &mut F) -> Result<Vec<BerRecord>> {
    let link = Link::<T>::new(cfg.link.clone())?;
    let mut rcfg = ReceiverConfig::new(cfg.outer, cfg.inner)?;
    rcfg.uamp.damping = cfg.damping;
    rcfg.log_sum = cfg.log_sum;
    rcfg.demod_prior = cfg.demod_prior;
    let coords = cfg.outer * cfg.inner;
    let k = link.info_len();

    let mut records = Vec::new();
    for ebn0 in cfg.sorted_ebn0() {
        let start = Instant::now();
        let sigma2 = link.noise_variance(ebn0)?;
        let mut bit_errors = vec![0u64; coords];
        let mut frame_errors = vec![0u64; coords];
        let mut frames = 0usize;
        while frames < cfg.max_frames {
            let end = (frames + BATCH).min(cfg.max_frames);
            let batch: Vec<Vec<usize>> = (frames..end)
                .into_par_iter()
                .map(|f| simulate_frame(&link, &rcfg, cfg, sigma2, f as u64))
                .collect::<Result<_>>()?;
            for errs in &batch {
                for (c, &e) in errs.iter().enumerate() {
                    bit_errors[c] += e as u64;
                    frame_errors[c] += u64::from(e > 0);
                }
            }
            frames = end;
            if cfg.max_errors.is_some_and(|m| bit_errors[coords - 1] >= m) {
                break;
            }
        }
        let wall = if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 };
        let point: Vec<BerRecord> = (0..coords)
            .map(|c| BerRecord::new(ebn0, c / cfg.inner + 1, c % cfg.inner + 1, frames, k, bit_errors[c], frame_errors[c], wall))
            .collect();
        on_point(&point);
        records.extend(point);
    }
    Ok(records)
}
