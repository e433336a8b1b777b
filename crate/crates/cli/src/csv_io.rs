//! CSV emission and parsing. Floats are written with 17 significant digits
//! so every value round-trips exactly. An optional leading `#` line carries
//! a generation timestamp; readers skip it.

use std::io::{Read, Write};

use olin_core::CheckpointRow;

use crate::error::{CliError, Result};

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "seed",
    "algorithm",
    "t0",
    "t",
    "l1_err",
    "mse",
    "precision",
    "recall",
    "lambda",
    "in_cone",
    "solver_iters",
    "wall_ms",
];

pub const SWEEP_HEADER: [&str; 5] = ["t0", "algorithm", "mean_mse", "sd_mse", "n_seeds"];

pub const SLOPE_HEADER: [&str; 5] = ["algorithm", "t0", "t", "ln_t", "ln_mean_l1_err"];

/// One checkpoint of one (seed, algorithm, t0) trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub algorithm: String,
    pub t0: usize,
    pub row: CheckpointRow,
}

impl TrajectoryRecord {
    /// Canonical output order: seed, algorithm, t0, t.
    pub fn sort_key(&self) -> (u64, &str, usize, u64) {
        (self.seed, self.algorithm.as_str(), self.t0, self.row.t)
    }
}

/// Mean and spread of the final MSE over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub t0: usize,
    pub algorithm: String,
    pub mean_mse: f64,
    pub sd_mse: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopePoint {
    pub algorithm: String,
    pub t0: usize,
    pub t: u64,
    pub ln_t: f64,
    pub ln_mean_l1_err: f64,
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Csv(e.to_string())
}

fn write_preamble<W: Write>(out: &mut W, timestamp: Option<&str>) -> Result<()> {
    if let Some(ts) = timestamp {
        writeln!(out, "# generated {ts}").map_err(csv_err)?;
    }
    Ok(())
}

pub fn write_trajectories<W: Write>(mut out: W, records: &[TrajectoryRecord], timestamp: Option<&str>) -> Result<()> {
    write_preamble(&mut out, timestamp)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err)?;
    for rec in records {
        let r = &rec.row;
        w.write_record([
            rec.seed.to_string(),
            rec.algorithm.clone(),
            rec.t0.to_string(),
            r.t.to_string(),
            fmt_f64(r.l1_err),
            fmt_f64(r.mse),
            fmt_f64(r.support_precision),
            fmt_f64(r.support_recall),
            fmt_f64(r.lambda),
            r.in_cone.to_string(),
            r.solver_iters.to_string(),
            fmt_f64(r.wall_ms),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(csv_err)?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(CliError::Csv(format!("unexpected header: {header:?}")));
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let raw = rec.get(idx).ok_or_else(|| CliError::Csv(format!("missing column {name}")))?;
    raw.parse()
        .map_err(|_| CliError::Csv(format!("bad value {raw:?} in column {name}")))
}

pub fn read_trajectories<R: Read>(input: R) -> Result<Vec<TrajectoryRecord>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &TRAJECTORY_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        out.push(TrajectoryRecord {
            seed: parse(&rec, 0, "seed")?,
            algorithm: parse(&rec, 1, "algorithm")?,
            t0: parse(&rec, 2, "t0")?,
            row: CheckpointRow {
                t: parse(&rec, 3, "t")?,
                l1_err: parse(&rec, 4, "l1_err")?,
                mse: parse(&rec, 5, "mse")?,
                support_precision: parse(&rec, 6, "precision")?,
                support_recall: parse(&rec, 7, "recall")?,
                lambda: parse(&rec, 8, "lambda")?,
                in_cone: parse(&rec, 9, "in_cone")?,
                solver_iters: parse(&rec, 10, "solver_iters")?,
                wall_ms: parse(&rec, 11, "wall_ms")?,
            },
        });
    }
    Ok(out)
}

pub fn write_sweep<W: Write>(mut out: W, rows: &[SweepRow], timestamp: Option<&str>) -> Result<()> {
    write_preamble(&mut out, timestamp)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.t0.to_string(),
            r.algorithm.clone(),
            fmt_f64(r.mean_mse),
            fmt_f64(r.sd_mse),
            r.n_seeds.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub fn read_sweep<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &SWEEP_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            Ok(SweepRow {
                t0: parse(&rec, 0, "t0")?,
                algorithm: parse(&rec, 1, "algorithm")?,
                mean_mse: parse(&rec, 2, "mean_mse")?,
                sd_mse: parse(&rec, 3, "sd_mse")?,
                n_seeds: parse(&rec, 4, "n_seeds")?,
            })
        })
        .collect()
}

pub fn write_slope_points<W: Write>(mut out: W, points: &[SlopePoint], timestamp: Option<&str>) -> Result<()> {
    write_preamble(&mut out, timestamp)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SLOPE_HEADER).map_err(csv_err)?;
    for p in points {
        w.write_record([
            p.algorithm.clone(),
            p.t0.to_string(),
            p.t.to_string(),
            fmt_f64(p.ln_t),
            fmt_f64(p.ln_mean_l1_err),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
