//! BER records, CSV round-tripping and a gnuplot helper.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub const CSV_HEADER: &str =
    "ebn0_db,outer_iter,inner_iter,frames,info_bits,bit_errors,ber,frame_errors,fer,wall_seconds";

/// Counts at one `(Eb/N0, outer, inner)` coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub ebn0_db: f64,
    pub outer_iter: usize,
    pub inner_iter: usize,
    pub frames: usize,
    pub info_bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub frame_errors: u64,
    pub fer: f64,
    pub wall_seconds: f64,
}

impl BerRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ebn0_db: f64,
        outer_iter: usize,
        inner_iter: usize,
        frames: usize,
        info_per_frame: usize,
        bit_errors: u64,
        frame_errors: u64,
        wall_seconds: f64,
    ) -> Self {
        let info_bits = (frames * info_per_frame) as u64;
        Self {
            ebn0_db,
            outer_iter,
            inner_iter,
            frames,
            info_bits,
            bit_errors,
            ber: ratio(bit_errors, info_bits),
            frame_errors,
            fer: ratio(frame_errors, frames as u64),
            wall_seconds,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn sorted(records: &[BerRecord]) -> Vec<&BerRecord> {
    let mut v: Vec<&BerRecord> = records.iter().collect();
    v.sort_by(|a, b| {
        a.ebn0_db
            .total_cmp(&b.ebn0_db)
            .then(a.outer_iter.cmp(&b.outer_iter))
            .then(a.inner_iter.cmp(&b.inner_iter))
    });
    v
}

/// Serializes `records` as CSV, sorted by `Eb/N0`, outer, inner.
pub fn write_records_to<W: Write>(records: &[BerRecord], out: W) -> Result<W> {
    let csv_err = |source| SimError::Csv {
        path: "<writer>".into(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in sorted(records) {
        w.serialize(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| csv_err(e.into_error().into()))
}

pub fn write_records(records: &[BerRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(SimError::Config("no records to write".into()));
    }
    let io = |source| SimError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    let mut w = write_records_to(records, BufWriter::new(file)).map_err(|e| match e {
        SimError::Csv { source, .. } => SimError::Csv {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })?;
    w.flush().map_err(io)
}

pub fn read_records(path: &Path) -> Result<Vec<BerRecord>> {
    let err = |source| SimError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    let header: Vec<&str> = r.headers().map_err(err)?.iter().collect();
    if header.join(",") != CSV_HEADER {
        return Err(SimError::Config(format!(
            "{}: unexpected header `{}`",
            path.display(),
            header.join(",")
        )));
    }
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(err)
}

/// A gnuplot script drawing BER against `Eb/N0` from `csv_path`, one curve
/// per requested outer iteration (at the last inner iteration).
pub fn gnuplot_script(csv_path: &str, records: &[BerRecord], outers: &[usize]) -> String {
    let inner = records.iter().map(|r| r.inner_iter).max().unwrap_or(1);
    let max_outer = records.iter().map(|r| r.outer_iter).max().unwrap_or(1);
    let mut picks: Vec<usize> = if outers.is_empty() {
        vec![1, max_outer]
    } else {
        outers.to_vec()
    };
    picks.sort_unstable();
    picks.dedup();

    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(s, "set format y '10^{{%L}}'");
    let _ = writeln!(s, "set xlabel 'E_b/N_0 (dB)'");
    let _ = writeln!(s, "set ylabel 'BER'");
    let _ = writeln!(s, "set grid");
    let _ = writeln!(s, "set key bottom left");
    let curves: Vec<String> = picks
        .iter()
        .map(|o| {
            format!(
                "'{csv_path}' skip 1 using 1:(($2=={o} && $3=={inner} && $7>0) ? $7 : 1/0) with linespoints title 'outer {o}'"
            )
        })
        .collect();
    let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    s
}
