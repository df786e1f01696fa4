//! Simulation parameters and the built-in presets.

use std::fmt;
use std::str::FromStr;

use cpmeq::channel::{ChannelProfile, NoiseReference};
use cpmeq::num::LogSum;
use cpmeq::{DemodPrior, LinkConfig};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl FromStr for Precision {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(SimError::Config(format!("unknown precision `{other}`"))),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

/// One Monte Carlo run: a link, a channel, a schedule and an `Eb/N0` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Short name used for per-run output files.
    pub label: String,
    pub link: LinkConfig,
    pub channel: ChannelProfile,
    pub ebn0_db: Vec<f64>,
    pub outer: usize,
    pub inner: usize,
    pub max_frames: usize,
    /// Stop a point once the last iteration has this many bit errors.
    pub max_errors: Option<u64>,
    pub seed: u64,
    pub noise_reference: NoiseReference,
    pub demod_prior: DemodPrior,
    pub log_sum: LogSum,
    pub damping: Option<f64>,
    pub precision: Precision,
    /// Fill `wall_seconds`; off keeps output byte-reproducible.
    pub timing: bool,
}

impl SimConfig {
    /// Standard link parameters on `channel` with the shortest covering prefix.
    pub fn new(label: &str, channel: ChannelProfile) -> Self {
        let mut link = LinkConfig::standard(0);
        link.prefix = link.prefix_for_channel(channel.len());
        Self {
            label: label.into(),
            link,
            channel,
            ebn0_db: vec![4.0],
            outer: 20,
            inner: 1,
            max_frames: 1000,
            max_errors: None,
            seed: 1,
            noise_reference: NoiseReference::default(),
            demod_prior: DemodPrior::default(),
            log_sum: LogSum::Exact,
            damping: None,
            precision: Precision::F64,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.max_frames == 0 {
            return bad("at least one frame is required".into());
        }
        if self.ebn0_db.is_empty() {
            return bad("the Eb/N0 list is empty".into());
        }
        if let Some(x) = self.ebn0_db.iter().find(|x| x.is_nan() || **x == f64::NEG_INFINITY) {
            return bad(format!("invalid Eb/N0 value {x}"));
        }
        if self.outer == 0 || self.inner == 0 {
            return bad(format!(
                "iteration counts must be positive (outer {}, inner {})",
                self.outer, self.inner
            ));
        }
        if self.max_errors == Some(0) {
            return bad("--max-errors must be positive".into());
        }
        if let Some(b) = self.damping {
            if !(b > 0.0 && b <= 1.0) {
                return bad(format!("damping {b} is outside (0, 1]"));
            }
        }
        self.channel.validate()?;
        let cp = self.link.prefix * self.link.cpm.samples_per_symbol;
        if self.channel.len() > cp + 1 {
            return Err(cpmeq::Error::ChannelExceedsPrefix {
                channel_len: self.channel.len(),
                cp_samples: cp,
            }
            .into());
        }
        Ok(())
    }

    /// `Eb/N0` points in ascending order.
    pub fn sorted_ebn0(&self) -> Vec<f64> {
        let mut v = self.ebn0_db.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

impl fmt::Display for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.link.cpm;
        writeln!(f, "[{}]", self.label)?;
        writeln!(
            f,
            "cpm: M={} L={} h={}/{} pulse={} kappa={}",
            c.order, c.memory, c.index_num, c.index_den, c.pulse, c.samples_per_symbol
        )?;
        writeln!(
            f,
            "frame: N={} N_K={} N_P={} labeling={} known_intrafix={}",
            self.link.payload, self.link.intrafix, self.link.prefix, self.link.labeling, self.link.known_intrafix
        )?;
        writeln!(
            f,
            "code: RSC feedback=7 feedforward=5 (octal) R=1/2 zero-tail, interleaver_seed={:#x}",
            self.link.interleaver_seed
        )?;
        writeln!(f, "channel:")?;
        for line in self.channel.to_string().lines() {
            writeln!(f, "  {line}")?;
        }
        let pts: Vec<String> = self.sorted_ebn0().iter().map(|x| x.to_string()).collect();
        writeln!(f, "ebn0_db: {}", pts.join(","))?;
        writeln!(f, "noise_reference: {}", self.noise_reference)?;
        writeln!(f, "schedule: outer={} inner={}", self.outer, self.inner)?;
        writeln!(
            f,
            "receiver: demod_prior={} log_sum={:?} damping={} precision={}",
            self.demod_prior,
            self.log_sum,
            self.damping.map_or("none".into(), |d| d.to_string()),
            self.precision
        )?;
        writeln!(
            f,
            "budget: max_frames={} max_errors={} seed={}",
            self.max_frames,
            self.max_errors.map_or("none".into(), |e| e.to_string()),
            self.seed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Tu6Fig3,
    ProakisCFig3,
    Fig4,
    Fig5,
    Fig6,
    Sanity,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Tu6Fig3,
        Preset::ProakisCFig3,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Sanity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Tu6Fig3 => "tu6-fig3",
            Preset::ProakisCFig3 => "proakisc-fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Sanity => "sanity",
        }
    }

    pub fn runs(self) -> Vec<SimConfig> {
        let tu6 = || SimConfig::new("tu6", ChannelProfile::tu6());
        let pc = || SimConfig::new("proakis-c", ChannelProfile::proakis_c());
        let sweep = |lo: f64, hi: f64| -> Vec<f64> {
            let n = ((hi - lo) / 0.5).round() as usize;
            (0..=n).map(|k| lo + 0.5 * k as f64).collect()
        };
        let inner_sweep = |base: SimConfig, ebn0: Vec<f64>| -> Vec<SimConfig> {
            (1..=4)
                .map(|ni| SimConfig {
                    label: format!("{}-ni{ni}", base.label),
                    inner: ni,
                    ebn0_db: ebn0.clone(),
                    ..base.clone()
                })
                .collect()
        };
        match self {
            Preset::Tu6Fig3 => vec![SimConfig {
                ebn0_db: sweep(2.0, 5.0),
                ..tu6()
            }],
            Preset::ProakisCFig3 => vec![SimConfig {
                ebn0_db: sweep(4.5, 7.5),
                ..pc()
            }],
            Preset::Fig4 => vec![
                SimConfig {
                    ebn0_db: vec![4.0],
                    ..tu6()
                },
                SimConfig {
                    ebn0_db: vec![6.5],
                    ..pc()
                },
            ],
            Preset::Fig5 => inner_sweep(tu6(), sweep(3.0, 4.5)),
            Preset::Fig6 => inner_sweep(pc(), sweep(5.0, 7.5)),
            Preset::Sanity => vec![SimConfig {
                ebn0_db: vec![f64::INFINITY],
                outer: 1,
                inner: 1,
                max_frames: 20,
                ..SimConfig::new("sanity", ChannelProfile::flat())
            }],
        }
    }
}

impl FromStr for Preset {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| SimError::Config(format!("unknown preset `{s}`")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_use_covering_prefixes() {
        assert_eq!(Preset::Tu6Fig3.runs()[0].link.prefix, 13);
        assert_eq!(Preset::ProakisCFig3.runs()[0].link.prefix, 2);
        for p in Preset::ALL {
            for r in p.runs() {
                r.validate().unwrap();
                assert_eq!(r.link.payload + r.link.intrafix, 510);
            }
        }
    }

    #[test]
    fn inner_sweeps_cover_one_to_four() {
        let runs = Preset::Fig5.runs();
        let ni: Vec<usize> = runs.iter().map(|r| r.inner).collect();
        assert_eq!(ni, [1, 2, 3, 4]);
        assert!(runs.iter().all(|r| r.channel.name == "tu6"));
        assert_eq!(Preset::Fig6.runs()[2].label, "proakis-c-ni3");
    }

    #[test]
    fn rejects_degenerate_configs() {
        let ok = SimConfig::new("t", ChannelProfile::tu6());
        ok.validate().unwrap();
        for bad in [
            SimConfig { max_frames: 0, ..ok.clone() },
            SimConfig { ebn0_db: vec![], ..ok.clone() },
            SimConfig { ebn0_db: vec![f64::NAN], ..ok.clone() },
            SimConfig { outer: 0, ..ok.clone() },
            SimConfig { max_errors: Some(0), ..ok.clone() },
            SimConfig { damping: Some(1.5), ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(SimError::Config(_))));
        }
        let mut short = ok.clone();
        short.link.prefix = 5;
        assert!(short.validate().is_err());
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("fig7".parse::<Preset>().is_err());
    }
}
