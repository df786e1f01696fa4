use cpmeq::channel::{convolve, transmit_referenced, ChannelProfile, NoiseReference};
use cpmeq::framing::strip_cp;
use cpmeq::num::Real;
use cpmeq::{DemodPrior, Link, Link32, Link64, LinkConfig, ReceiverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn link_for<T: Real>(profile: &ChannelProfile) -> Link<T> {
    let mut cfg = LinkConfig::standard(0);
    cfg.prefix = cfg.prefix_for_channel(profile.len());
    Link::new(cfg).unwrap()
}

/// Bit errors at the last iteration for one frame.
fn run_frame<T: Real>(link: &Link<T>, profile: &ChannelProfile, ebn0: f64, cfg: &ReceiverConfig, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let info = link.random_info(&mut rng);
    let tx = link.transmit(&info).unwrap();
    let taps = profile.draw::<T, _>(&mut rng);
    let nominal = T::lit(link.noise_variance(ebn0).unwrap());
    let (rx, sigma2) = transmit_referenced(&tx.samples, &taps, nominal, NoiseReference::Received, &mut rng);
    let ch = link.realization(taps, sigma2).unwrap();
    let out = link.receive(&rx, &ch, cfg, Some(&info)).unwrap();
    assert_eq!(out.trace.len(), cfg.schedule.iterations());
    out.trace.last().unwrap().bit_errors.unwrap()
}

#[test]
fn noiseless_single_tap_decodes() {
    let flat = ChannelProfile::flat();
    let link: Link64 = link_for(&flat);
    let cfg = ReceiverConfig::new(1, 1).unwrap();
    for seed in 0..5 {
        assert_eq!(run_frame(&link, &flat, f64::INFINITY, &cfg, seed), 0);
    }
}

#[test]
fn single_precision_path_decodes() {
    let flat = ChannelProfile::flat();
    let link: Link32 = link_for(&flat);
    let cfg = ReceiverConfig::new(2, 1).unwrap();
    for seed in 0..3 {
        assert_eq!(run_frame(&link, &flat, f64::INFINITY, &cfg, seed), 0);
        assert_eq!(run_frame(&link, &flat, 8.0, &cfg, seed), 0);
    }
}

#[test]
fn both_demod_priors_clear_strong_multipath() {
    let pc = ChannelProfile::proakis_c();
    let link: Link64 = link_for(&pc);
    for prior in [DemodPrior::Extrinsic, DemodPrior::Posterior] {
        let mut cfg = ReceiverConfig::new(4, 1).unwrap();
        cfg.demod_prior = prior;
        for seed in 0..3 {
            assert_eq!(run_frame(&link, &pc, 12.0, &cfg, seed), 0, "{prior} seed {seed}");
        }
    }
}

#[test]
fn trace_covers_schedule() {
    let tu6 = ChannelProfile::tu6();
    let link: Link64 = link_for(&tu6);
    let mut cfg = ReceiverConfig::new(3, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let info = link.random_info(&mut rng);
    let tx = link.transmit(&info).unwrap();
    let taps = tu6.draw::<f64, _>(&mut rng);
    let (rx, s2) = transmit_referenced(&tx.samples, &taps, 0.2, NoiseReference::Received, &mut rng);
    let ch = link.realization(taps, s2).unwrap();
    for early in [false, true] {
        cfg.schedule.early_stop = early;
        let out = link.receive(&rx, &ch, &cfg, Some(&info)).unwrap();
        let coords: Vec<(usize, usize)> = out.trace.iter().map(|r| (r.outer, r.inner)).collect();
        assert_eq!(coords, [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2)]);
        assert_eq!(out.decisions, out.trace.last().unwrap().decisions);
    }
}

#[test]
fn prefix_turns_linear_channel_circulant() {
    for profile in [ChannelProfile::tu6(), ChannelProfile::proakis_c()] {
        let link: Link64 = link_for(&profile);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let info = link.random_info(&mut rng);
            let tx = link.transmit(&info).unwrap();
            let taps = profile.draw::<f64, _>(&mut rng);
            let rx = convolve(&tx.samples, &taps);
            let ch = link.realization(taps, 0.0).unwrap();
            let block = strip_cp(&tx.samples, &link.layout).unwrap();
            let circ = ch.apply_circulant(block).unwrap();
            let got = strip_cp(&rx, &link.layout).unwrap();
            let err = got.iter().zip(&circ).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{}: {err}", profile.name);
        }
    }
}

#[test]
fn short_prefix_is_rejected() {
    let tu6 = ChannelProfile::tu6();
    let link = Link64::new(LinkConfig::standard(2)).unwrap();
    let taps = tu6.draw::<f64, _>(&mut ChaCha8Rng::seed_from_u64(0));
    assert!(matches!(
        link.realization(taps, 0.1),
        Err(cpmeq::Error::ChannelExceedsPrefix { .. })
    ));
}
