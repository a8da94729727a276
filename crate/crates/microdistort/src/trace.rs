//! Sensor traces: fixed-point storage, CSV ingestion, synthetic generators,
//! and the descriptive statistics used to characterize a dataset.
//!
//! Readings are stored canonically as integer ticks on a resolution grid
//! (`value = tick * resolution`). The digital distortion schemes need a
//! well-defined least significant bit, which floating storage cannot give.

use std::fmt;
use std::io;
use std::path::Path;

use chrono::NaiveDateTime;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::keystream::derive_seed;

/// Default resolution for synthetic traces, in physical units per tick.
pub const SYNTH_RESOLUTION: f64 = 0.01;

/// Errors from trace construction, loading, and statistics.
#[derive(Debug)]
pub enum TraceError {
    EmptyTrace,
    InvalidArgument(String),
    Io(io::Error),
    Csv(csv::Error),
    /// The requested value or timestamp column is not in the header.
    MissingColumn(String),
    /// A cell failed to parse; `row` is the 1-based data row.
    BadCell { row: usize, column: String, value: String },
    EmptyFile,
    /// Value does not fit the fixed-point grid (non-finite or out of range).
    Unrepresentable { row: Option<usize>, value: f64 },
    NoTimestamps,
    /// A clock window selected no samples.
    EmptyWindow,
    /// Statistics need at least this many samples.
    TooShort { len: usize, min: usize },
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyTrace => write!(f, "trace must contain at least one reading"),
            Self::InvalidArgument(msg) => write!(f, "{msg}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
            Self::Csv(e) => write!(f, "csv error: {e}"),
            Self::MissingColumn(name) => write!(f, "column '{name}' not found in header"),
            Self::BadCell { row, column, value } => {
                write!(f, "row {row}: cannot parse '{value}' in column '{column}'")
            }
            Self::EmptyFile => write!(f, "no data rows in file"),
            Self::Unrepresentable { row: Some(row), value } => {
                write!(f, "row {row}: value {value} not representable on the tick grid")
            }
            Self::Unrepresentable { row: None, value } => {
                write!(f, "value {value} not representable on the tick grid")
            }
            Self::NoTimestamps => write!(f, "operation requires timestamps"),
            Self::EmptyWindow => write!(f, "clock window selects no samples"),
            Self::TooShort { len, min } => {
                write!(f, "trace has {len} samples, need at least {min}")
            }
        }
    }
}

impl std::error::Error for TraceError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Io(e) => Some(e),
            Self::Csv(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for TraceError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<csv::Error> for TraceError {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e)
    }
}

/// Quantize a physical value onto the tick grid, ties to even.
pub fn quantize(value: f64, resolution: f64) -> Result<i64, TraceError> {
    let scaled = value / resolution;
    if !scaled.is_finite() || scaled.abs() >= 9.0e15 {
        return Err(TraceError::Unrepresentable { row: None, value });
    }
    Ok(scaled.round_ties_even() as i64)
}

/// A timestamped sequence of quantized sensor readings.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorTrace {
    ticks: Vec<i64>,
    resolution: f64,
    unit: String,
    sample_interval: f64,
    timestamps: Option<Vec<i64>>,
}

impl SensorTrace {
    /// Build a trace from raw tick values.
    pub fn from_ticks(
        ticks: Vec<i64>,
        resolution: f64,
        unit: &str,
        sample_interval: f64,
    ) -> Result<Self, TraceError> {
        if ticks.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(TraceError::InvalidArgument(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if !(sample_interval > 0.0) || !sample_interval.is_finite() {
            return Err(TraceError::InvalidArgument(format!(
                "sample interval must be positive, got {sample_interval}"
            )));
        }
        Ok(Self {
            ticks,
            resolution,
            unit: unit.to_string(),
            sample_interval,
            timestamps: None,
        })
    }

    /// Quantize physical values onto the grid and build a trace.
    pub fn from_values(
        values: &[f64],
        resolution: f64,
        unit: &str,
        sample_interval: f64,
    ) -> Result<Self, TraceError> {
        let ticks = values
            .iter()
            .map(|&v| quantize(v, resolution))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_ticks(ticks, resolution, unit, sample_interval)
    }

    /// Attach per-sample timestamps (seconds since epoch).
    pub fn with_timestamps(mut self, timestamps: Vec<i64>) -> Result<Self, TraceError> {
        if timestamps.len() != self.ticks.len() {
            return Err(TraceError::InvalidArgument(format!(
                "{} timestamps for {} readings",
                timestamps.len(),
                self.ticks.len()
            )));
        }
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn ticks(&self) -> &[i64] {
        &self.ticks
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn sample_interval(&self) -> f64 {
        self.sample_interval
    }

    pub fn timestamps(&self) -> Option<&[i64]> {
        self.timestamps.as_deref()
    }

    /// Physical value at slot `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.ticks[i] as f64 * self.resolution
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.ticks.iter().map(|&t| t as f64 * self.resolution)
    }

    /// Copy out a contiguous window of `len` samples starting at `start`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self, TraceError> {
        let end = start.checked_add(len).filter(|&e| e <= self.ticks.len());
        let end = end.ok_or(TraceError::TooShort {
            len: self.ticks.len(),
            min: start.saturating_add(len),
        })?;
        Ok(Self {
            ticks: self.ticks[start..end].to_vec(),
            resolution: self.resolution,
            unit: self.unit.clone(),
            sample_interval: self.sample_interval,
            timestamps: self.timestamps.as_ref().map(|ts| ts[start..end].to_vec()),
        })
    }

    /// Gap mask over consecutive-difference positions: entry `i` is true when
    /// the step from sample `i` to `i+1` is not one nominal sample interval,
    /// so no difference may be formed across it. Traces without timestamps
    /// have no gaps.
    pub fn gap_mask(&self) -> Vec<bool> {
        let n = self.ticks.len();
        if n < 2 {
            return Vec::new();
        }
        match &self.timestamps {
            None => vec![false; n - 1],
            Some(ts) => ts
                .windows(2)
                .map(|w| ((w[1] - w[0]) as f64 - self.sample_interval).abs() > 1e-6)
                .collect(),
        }
    }

    /// Tick-space consecutive differences paired with the gap mask.
    pub fn delta_ticks(&self) -> (Vec<i64>, Vec<bool>) {
        let deltas = self.ticks.windows(2).map(|w| w[1] - w[0]).collect();
        (deltas, self.gap_mask())
    }
}

/// Column layout of a trace CSV file.
#[derive(Debug, Clone)]
pub struct CsvFormat {
    pub value_column: String,
    pub timestamp_column: Option<String>,
    pub delimiter: u8,
}

impl CsvFormat {
    pub fn new(value_column: &str) -> Self {
        Self {
            value_column: value_column.to_string(),
            timestamp_column: None,
            delimiter: b',',
        }
    }

    pub fn with_timestamps(mut self, column: &str) -> Self {
        self.timestamp_column = Some(column.to_string());
        self
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }
}

fn parse_timestamp(cell: &str) -> Option<i64> {
    let cell = cell.trim();
    if let Ok(secs) = cell.parse::<i64>() {
        return Some(secs);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%d/%m/%Y %I:%M:%S %p"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(cell, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    None
}

/// Load a trace from CSV. A header row is required; the value column is
/// addressed by name and quantized onto the resolution grid with ties to
/// even. Row order is preserved.
pub fn load_trace_csv(
    path: impl AsRef<Path>,
    format: &CsvFormat,
    resolution: f64,
    sample_interval: f64,
    unit: &str,
) -> Result<SensorTrace, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .from_path(path.as_ref())?;

    let headers = reader.headers()?.clone();
    let value_idx = headers
        .iter()
        .position(|h| h.trim() == format.value_column)
        .ok_or_else(|| TraceError::MissingColumn(format.value_column.clone()))?;
    let ts_idx = match &format.timestamp_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h.trim() == name.as_str())
                .ok_or_else(|| TraceError::MissingColumn(name.clone()))?,
        ),
        None => None,
    };

    let mut ticks = Vec::new();
    let mut timestamps = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        let record = record?;
        let cell = record.get(value_idx).unwrap_or("").trim();
        let value: f64 = cell.parse().map_err(|_| TraceError::BadCell {
            row,
            column: format.value_column.clone(),
            value: cell.to_string(),
        })?;
        if !value.is_finite() {
            return Err(TraceError::BadCell {
                row,
                column: format.value_column.clone(),
                value: cell.to_string(),
            });
        }
        let tick = quantize(value, resolution).map_err(|_| TraceError::Unrepresentable {
            row: Some(row),
            value,
        })?;
        ticks.push(tick);

        if let Some(idx) = ts_idx {
            let cell = record.get(idx).unwrap_or("");
            let ts = parse_timestamp(cell).ok_or_else(|| TraceError::BadCell {
                row,
                column: format.timestamp_column.clone().unwrap(),
                value: cell.to_string(),
            })?;
            timestamps.push(ts);
        }
    }
    if ticks.is_empty() {
        return Err(TraceError::EmptyFile);
    }

    let trace = SensorTrace::from_ticks(ticks, resolution, unit, sample_interval)?;
    if ts_idx.is_some() {
        trace.with_timestamps(timestamps)
    } else {
        Ok(trace)
    }
}

/// Write a trace as CSV with header `t,value`. `t` is the timestamp when
/// present, the sample index otherwise. Values print in shortest
/// round-trippable form, so saving and reloading at the same resolution
/// reproduces the ticks exactly.
pub fn write_trace_csv<W: io::Write>(trace: &SensorTrace, out: W) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "value"])?;
    for i in 0..trace.len() {
        let t = match trace.timestamps() {
            Some(ts) => ts[i],
            None => i as i64,
        };
        w.write_record(&[t.to_string(), trace.value(i).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Map a 64-bit word to a double in [0, 1) using the top 53 bits.
fn unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Synthesize `n` i.i.d. uniform draws on [low, high), quantized at
/// [`SYNTH_RESOLUTION`]. Bit-identical for equal seeds on every platform.
pub fn synth_uniform(low: f64, high: f64, n: usize, seed: u64) -> Result<SensorTrace, TraceError> {
    if !(low < high) {
        return Err(TraceError::InvalidArgument(format!(
            "uniform range requires low < high, got [{low}, {high})"
        )));
    }
    if n == 0 {
        return Err(TraceError::EmptyTrace);
    }
    let mut rng = ChaCha20Rng::from_seed(seed_bytes(seed));
    let span = high - low;
    let values: Vec<f64> = (0..n).map(|_| low + span * unit_f64(rng.next_u64())).collect();
    SensorTrace::from_values(&values, SYNTH_RESOLUTION, "units", 1.0)
}

fn seed_bytes(seed: u64) -> [u8; 32] {
    // Same expansion the keystream uses, but under a synth-specific label so
    // a shared master seed cannot alias key bits with trace values.
    let mut out = [0u8; 32];
    for (i, chunk) in out.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&derive_seed(seed, "synth", i as u64).to_le_bytes());
    }
    out
}

/// A trace of `n` identical readings.
pub fn synth_constant(value: f64, n: usize) -> Result<SensorTrace, TraceError> {
    if n == 0 {
        return Err(TraceError::EmptyTrace);
    }
    let tick = quantize(value, SYNTH_RESOLUTION)?;
    SensorTrace::from_ticks(vec![tick; n], SYNTH_RESOLUTION, "units", 1.0)
}

/// An arithmetic progression: `start`, `start + slope`, ... with `slope` in
/// units per slot. Start and slope are quantized, so the progression stays
/// exactly on the grid.
pub fn synth_ramp(start: f64, slope: f64, n: usize) -> Result<SensorTrace, TraceError> {
    if n == 0 {
        return Err(TraceError::EmptyTrace);
    }
    let start_tick = quantize(start, SYNTH_RESOLUTION)?;
    let slope_ticks = quantize(slope, SYNTH_RESOLUTION)?;
    let ticks = (0..n as i64).map(|i| start_tick + i * slope_ticks).collect();
    SensorTrace::from_ticks(ticks, SYNTH_RESOLUTION, "units", 1.0)
}

/// Summary statistics of a trace and of its consecutive-difference sequence,
/// both in physical units. Differences across timestamp gaps are excluded.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TraceStats {
    pub value_max: f64,
    pub value_min: f64,
    pub value_mean: f64,
    pub value_median: f64,
    pub delta_max: f64,
    pub delta_min: f64,
    pub delta_mean: f64,
    pub delta_median: f64,
}

fn median_of_ticks(ticks: &mut [i64]) -> f64 {
    ticks.sort_unstable();
    let n = ticks.len();
    if n % 2 == 1 {
        ticks[n / 2] as f64
    } else {
        (ticks[n / 2 - 1] as f64 + ticks[n / 2] as f64) / 2.0
    }
}

/// Compute [`TraceStats`]. Requires at least two samples and at least one
/// non-gap difference position.
pub fn trace_stats(trace: &SensorTrace) -> Result<TraceStats, TraceError> {
    if trace.len() < 2 {
        return Err(TraceError::TooShort { len: trace.len(), min: 2 });
    }
    let res = trace.resolution();
    let ticks = trace.ticks();

    let sum: i128 = ticks.iter().map(|&t| i128::from(t)).sum();
    let value_mean = (sum as f64 / ticks.len() as f64) * res;
    let value_max = *ticks.iter().max().unwrap() as f64 * res;
    let value_min = *ticks.iter().min().unwrap() as f64 * res;
    let value_median = median_of_ticks(&mut ticks.to_vec()) * res;

    let (deltas, gaps) = trace.delta_ticks();
    let mut kept: Vec<i64> = deltas
        .iter()
        .zip(&gaps)
        .filter(|(_, &gap)| !gap)
        .map(|(&d, _)| d)
        .collect();
    if kept.is_empty() {
        return Err(TraceError::InvalidArgument(
            "no gap-free consecutive pairs to form differences".into(),
        ));
    }
    let dsum: i128 = kept.iter().map(|&d| i128::from(d)).sum();
    let delta_mean = (dsum as f64 / kept.len() as f64) * res;
    let delta_max = *kept.iter().max().unwrap() as f64 * res;
    let delta_min = *kept.iter().min().unwrap() as f64 * res;
    let delta_median = median_of_ticks(&mut kept) * res;

    Ok(TraceStats {
        value_max,
        value_min,
        value_mean,
        value_median,
        delta_max,
        delta_min,
        delta_mean,
        delta_median,
    })
}

/// Wall-clock time of day, seconds after midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TimeOfDay(u32);

impl TimeOfDay {
    pub fn new(seconds: u32) -> Result<Self, TraceError> {
        if seconds > 86_400 {
            return Err(TraceError::InvalidArgument(format!(
                "time of day {seconds}s exceeds one day"
            )));
        }
        Ok(Self(seconds))
    }

    /// Parse `HH:MM` or `HH:MM:SS`.
    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || TraceError::InvalidArgument(format!("cannot parse time of day '{text}'"));
        if parts.len() != 2 && parts.len() != 3 {
            return Err(bad());
        }
        let h: u32 = parts[0].parse().map_err(|_| bad())?;
        let m: u32 = parts[1].parse().map_err(|_| bad())?;
        let s: u32 = if parts.len() == 3 {
            parts[2].parse().map_err(|_| bad())?
        } else {
            0
        };
        if h > 24 || m > 59 || s > 59 {
            return Err(bad());
        }
        Self::new(h * 3600 + m * 60 + s)
    }

    pub fn seconds(self) -> u32 {
        self.0
    }
}

/// Restrict a timestamped trace to samples whose time of day falls in
/// `[start, end)`, every day. Time of day is taken in the timestamps' own
/// frame (no timezone conversion). The surviving timestamps keep their
/// original values, so the jump at each excluded span shows up in the gap
/// mask and no difference is ever formed across it.
pub fn window_by_clock(
    trace: &SensorTrace,
    start: TimeOfDay,
    end: TimeOfDay,
) -> Result<SensorTrace, TraceError> {
    let timestamps = trace.timestamps().ok_or(TraceError::NoTimestamps)?;
    if start >= end {
        return Err(TraceError::InvalidArgument(format!(
            "clock window start {}s must precede end {}s",
            start.seconds(),
            end.seconds()
        )));
    }
    let (lo, hi) = (i64::from(start.seconds()), i64::from(end.seconds()));
    let mut ticks = Vec::new();
    let mut kept_ts = Vec::new();
    for (i, &ts) in timestamps.iter().enumerate() {
        let tod = ts.rem_euclid(86_400);
        if tod >= lo && tod < hi {
            ticks.push(trace.ticks()[i]);
            kept_ts.push(ts);
        }
    }
    if ticks.is_empty() {
        return Err(TraceError::EmptyWindow);
    }
    SensorTrace::from_ticks(ticks, trace.resolution(), trace.unit(), trace.sample_interval())?
        .with_timestamps(kept_ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tmp_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_quantizes_onto_grid() {
        let f = tmp_csv("t,v\n0,1.0\n1,2.0\n2,3.0\n");
        let trace = load_trace_csv(f.path(), &CsvFormat::new("v"), 0.5, 1.0, "units").unwrap();
        assert_eq!(trace.ticks(), &[2, 4, 6]);
    }

    #[test]
    fn csv_missing_column() {
        let f = tmp_csv("t,v\n0,1.0\n");
        let err = load_trace_csv(f.path(), &CsvFormat::new("w"), 1.0, 1.0, "units").unwrap_err();
        assert!(matches!(err, TraceError::MissingColumn(ref c) if c == "w"));
    }

    #[test]
    fn csv_bad_cell_names_row() {
        let f = tmp_csv("t,v\n0,1.0\n1,oops\n");
        let err = load_trace_csv(f.path(), &CsvFormat::new("v"), 1.0, 1.0, "units").unwrap_err();
        match err {
            TraceError::BadCell { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_empty_file() {
        let f = tmp_csv("t,v\n");
        let err = load_trace_csv(f.path(), &CsvFormat::new("v"), 1.0, 1.0, "units").unwrap_err();
        assert!(matches!(err, TraceError::EmptyFile));
    }

    #[test]
    fn csv_timestamps_iso_and_integer() {
        let f = tmp_csv("when,v\n2020-05-29T08:00:00,1.0\n2020-05-29 08:00:01,2.0\n");
        let format = CsvFormat::new("v").with_timestamps("when");
        let trace = load_trace_csv(f.path(), &format, 1.0, 1.0, "units").unwrap();
        let ts = trace.timestamps().unwrap();
        assert_eq!(ts[1] - ts[0], 1);

        let f = tmp_csv("when,v\n100,1.0\n101,2.0\n");
        let trace = load_trace_csv(f.path(), &format, 1.0, 1.0, "units").unwrap();
        assert_eq!(trace.timestamps().unwrap(), &[100, 101]);
    }

    #[test]
    fn round_trip_preserves_ticks() {
        let trace = SensorTrace::from_values(&[1.07, -2.33, 0.0, 5.55], 0.01, "units", 1.0).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let f = tmp_csv(std::str::from_utf8(&buf).unwrap());
        let reloaded = load_trace_csv(f.path(), &CsvFormat::new("value"), 0.01, 1.0, "units").unwrap();
        assert_eq!(trace.ticks(), reloaded.ticks());
    }

    #[test]
    fn quantize_ties_to_even() {
        assert_eq!(quantize(0.5, 1.0).unwrap(), 0);
        assert_eq!(quantize(1.5, 1.0).unwrap(), 2);
        assert_eq!(quantize(2.5, 1.0).unwrap(), 2);
        assert_eq!(quantize(-0.5, 1.0).unwrap(), 0);
    }

    #[test]
    fn uniform_sample_mean_near_midpoint() {
        let trace = synth_uniform(0.0, 100.0, 100_000, 7).unwrap();
        let mean = trace.values().sum::<f64>() / trace.len() as f64;
        assert!((49.0..=51.0).contains(&mean), "mean {mean}");
    }

    #[test]
    fn uniform_delta_mean_telescopes() {
        let trace = synth_uniform(0.0, 100.0, 100_000, 11).unwrap();
        let (deltas, _) = trace.delta_ticks();
        let dsum: i64 = deltas.iter().sum();
        let dmean = dsum as f64 / deltas.len() as f64 * trace.resolution();
        assert!(dmean.abs() <= 0.5, "delta mean {dmean}");
    }

    #[test]
    fn uniform_range_collapse() {
        let trace = synth_uniform(5.0, 5.0 + SYNTH_RESOLUTION, 1000, 3).unwrap();
        let lo = quantize(5.0, SYNTH_RESOLUTION).unwrap();
        assert!(trace.ticks().iter().all(|&t| t == lo || t == lo + 1));
    }

    #[test]
    fn uniform_rejects_bad_range() {
        assert!(synth_uniform(5.0, 5.0, 10, 0).is_err());
        assert!(synth_uniform(6.0, 5.0, 10, 0).is_err());
    }

    #[test]
    fn uniform_is_reproducible() {
        let a = synth_uniform(0.0, 100.0, 512, 99).unwrap();
        let b = synth_uniform(0.0, 100.0, 512, 99).unwrap();
        assert_eq!(a.ticks(), b.ticks());
        // Pinned prefix guards the generator against platform or dependency
        // drift; regenerate only if the documented algorithm changes.
        assert_eq!(&a.ticks()[..4], &[920, 2986, 6368, 7407]);
    }

    #[test]
    fn constant_and_ramp_shapes() {
        let c = synth_constant(7.0, 4).unwrap();
        assert_eq!(c.ticks(), &[700, 700, 700, 700]);

        let r = synth_ramp(0.0, 2.0, 4).unwrap();
        let vals: Vec<f64> = r.values().collect();
        assert_eq!(vals, vec![0.0, 2.0, 4.0, 6.0]);
        let (deltas, _) = r.delta_ticks();
        assert_eq!(deltas, vec![200, 200, 200]);
    }

    #[test]
    fn stats_hand_computed() {
        let trace = SensorTrace::from_values(&[1.0, 2.0, 4.0], 1.0, "units", 1.0).unwrap();
        let stats = trace_stats(&trace).unwrap();
        assert!((stats.value_mean - 7.0 / 3.0).abs() < 1e-12);
        assert_eq!(stats.value_median, 2.0);
        assert_eq!(stats.delta_mean, 1.5);
        assert_eq!(stats.delta_max, 2.0);
        assert_eq!(stats.delta_min, 1.0);
        assert_eq!(stats.delta_median, 1.5);
    }

    #[test]
    fn stats_require_two_samples() {
        let trace = SensorTrace::from_values(&[1.0], 1.0, "units", 1.0).unwrap();
        assert!(matches!(trace_stats(&trace), Err(TraceError::TooShort { .. })));
    }

    #[test]
    fn value_stats_permutation_invariant_delta_stats_not() {
        let trace = SensorTrace::from_values(&[1.0, 5.0, 2.0, 8.0], 1.0, "units", 1.0).unwrap();
        let permuted = SensorTrace::from_values(&[8.0, 1.0, 5.0, 2.0], 1.0, "units", 1.0).unwrap();
        let a = trace_stats(&trace).unwrap();
        let b = trace_stats(&permuted).unwrap();
        assert_eq!(a.value_mean, b.value_mean);
        assert_eq!(a.value_median, b.value_median);
        assert_eq!(a.value_max, b.value_max);
        assert_eq!(a.value_min, b.value_min);
        assert_ne!(
            (a.delta_max, a.delta_min, a.delta_mean),
            (b.delta_max, b.delta_min, b.delta_mean)
        );
    }

    #[test]
    fn gap_mask_flags_irregular_steps() {
        let trace = SensorTrace::from_values(&[1.0, 2.0, 3.0, 4.0], 1.0, "units", 60.0)
            .unwrap()
            .with_timestamps(vec![0, 60, 180, 240])
            .unwrap();
        assert_eq!(trace.gap_mask(), vec![false, true, false]);
    }

    #[test]
    fn stats_exclude_gap_deltas() {
        // Without the gap the 100.0 jump would dominate delta_max.
        let trace = SensorTrace::from_values(&[1.0, 2.0, 102.0, 103.0], 1.0, "units", 60.0)
            .unwrap()
            .with_timestamps(vec![0, 60, 7200, 7260])
            .unwrap();
        let stats = trace_stats(&trace).unwrap();
        assert_eq!(stats.delta_max, 1.0);
    }

    #[test]
    fn clock_window_selects_daytime() {
        // Two days of per-minute samples.
        let per_day = 1440;
        let n = 2 * per_day;
        let ts: Vec<i64> = (0..n).map(|i| i as i64 * 60).collect();
        let trace = SensorTrace::from_values(&vec![1.0; n], 1.0, "units", 60.0)
            .unwrap()
            .with_timestamps(ts)
            .unwrap();
        let day = window_by_clock(
            &trace,
            TimeOfDay::parse("08:00").unwrap(),
            TimeOfDay::parse("18:00").unwrap(),
        )
        .unwrap();
        assert_eq!(day.len(), 2 * 600);
        // Exactly one gap at the overnight jump.
        assert_eq!(day.gap_mask().iter().filter(|&&g| g).count(), 1);
    }

    #[test]
    fn clock_window_whole_day_is_identity() {
        let ts: Vec<i64> = (0..100).map(|i| i * 60).collect();
        let trace = SensorTrace::from_values(&vec![2.0; 100], 1.0, "units", 60.0)
            .unwrap()
            .with_timestamps(ts)
            .unwrap();
        let all = window_by_clock(
            &trace,
            TimeOfDay::new(0).unwrap(),
            TimeOfDay::new(86_400).unwrap(),
        )
        .unwrap();
        assert_eq!(all, trace);
    }

    #[test]
    fn clock_window_zero_overlap() {
        let trace = SensorTrace::from_values(&[1.0, 2.0], 1.0, "units", 60.0)
            .unwrap()
            .with_timestamps(vec![0, 60])
            .unwrap();
        let err = window_by_clock(
            &trace,
            TimeOfDay::parse("08:00").unwrap(),
            TimeOfDay::parse("18:00").unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, TraceError::EmptyWindow));
    }

    #[test]
    fn clock_window_requires_timestamps() {
        let trace = SensorTrace::from_values(&[1.0, 2.0], 1.0, "units", 60.0).unwrap();
        let err = window_by_clock(
            &trace,
            TimeOfDay::new(0).unwrap(),
            TimeOfDay::new(3600).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, TraceError::NoTimestamps));
    }
}
