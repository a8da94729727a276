//! The detectors: LSB check, simple mean difference, delta mean difference,
//! and filtered delta mean difference.
//!
//! The delta-family detectors share one skeleton: form the consecutive
//! differences of the observed stream, drop differences whose magnitude
//! exceeds the filtration threshold, split the survivors by the key-bit
//! pair at each position, and compare the mean difference between the
//! rising-key and falling-key classes against a band around `4 * epsilon`.
//! An honest physical distorter shifts those classes by `+2 epsilon` and
//! `-2 epsilon`; anyone without the key cannot.
//!
//! All means are taken over exact integer tick sums and scaled to physical
//! units once, so the degenerate algebraic cases (constant traces) produce
//! exact gauge values rather than float-accumulation noise.

use std::fmt;

use crate::distort::DistortedTrace;
use crate::keystream::{KeyBits, KeyStream};

/// Errors from detector configuration and invocation. Detectors refuse to
/// run on invalid input rather than silently alarming.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectError {
    InvalidConfig(String),
    WindowTooShort { len: usize, min: usize },
    KeyTooShort { key_len: usize, needed: usize },
    CheckLengthExceedsWindow { t: usize, window: usize },
}

impl fmt::Display for DetectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidConfig(msg) => write!(f, "invalid detector config: {msg}"),
            Self::WindowTooShort { len, min } => {
                write!(f, "window of {len} readings, need at least {min}")
            }
            Self::KeyTooShort { key_len, needed } => {
                write!(f, "key has {key_len} bits, window needs {needed}")
            }
            Self::CheckLengthExceedsWindow { t, window } => {
                write!(f, "check length {t} exceeds window of {window} readings")
            }
        }
    }
}

impl std::error::Error for DetectError {}

/// The consecutive-difference sequence of an observed stream, with gap
/// positions masked so no difference spans missing samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSequence {
    tick_deltas: Vec<i64>,
    gaps: Vec<bool>,
    resolution: f64,
}

impl DeltaSequence {
    pub fn len(&self) -> usize {
        self.tick_deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tick_deltas.is_empty()
    }

    pub fn is_gap(&self, i: usize) -> bool {
        self.gaps[i]
    }

    pub fn tick_delta(&self, i: usize) -> i64 {
        self.tick_deltas[i]
    }

    /// Difference at position `i` in physical units.
    pub fn physical(&self, i: usize) -> f64 {
        self.tick_deltas[i] as f64 * self.resolution
    }

    pub fn physical_deltas(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.physical(i)).collect()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }
}

/// Differences of the observed readings: position `i` holds
/// `d'[i+1] - d'[i]`. Requires at least two readings.
pub fn delta_sequence(readings: &DistortedTrace) -> Result<DeltaSequence, DetectError> {
    let trace = readings.readings();
    if trace.len() < 2 {
        return Err(DetectError::WindowTooShort { len: trace.len(), min: 2 });
    }
    let (tick_deltas, gaps) = trace.delta_ticks();
    Ok(DeltaSequence { tick_deltas, gaps, resolution: trace.resolution() })
}

/// Index sets over difference positions, classified by the key-bit pair
/// `(k[i], k[i+1])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub s00: Vec<usize>,
    pub s01: Vec<usize>,
    pub s10: Vec<usize>,
    pub s11: Vec<usize>,
}

/// Difference-position class of the key-bit pair at `i`.
pub fn pair_class(key: &KeyStream, i: usize) -> (u8, u8) {
    (key.bit(i), key.bit(i + 1))
}

/// Assign every difference position `0..n-1` of an `n`-reading window to
/// its key-pair set.
pub fn partition(key: &KeyStream, n: usize) -> Result<Partition, DetectError> {
    if key.len() < n {
        return Err(DetectError::KeyTooShort { key_len: key.len(), needed: n });
    }
    if n < 2 {
        return Err(DetectError::WindowTooShort { len: n, min: 2 });
    }
    let mut p = Partition {
        s00: Vec::new(),
        s01: Vec::new(),
        s10: Vec::new(),
        s11: Vec::new(),
    };
    for i in 0..n - 1 {
        match pair_class(key, i) {
            (0, 0) => p.s00.push(i),
            (0, 1) => p.s01.push(i),
            (1, 0) => p.s10.push(i),
            _ => p.s11.push(i),
        }
    }
    Ok(p)
}

/// Acceptance band for a detector gauge, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Band {
    pub low: f64,
    pub high: f64,
}

impl Band {
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

/// Default minimum post-filtration evidence count over `S01` and `S10`
/// combined, for an `n`-reading window. The expected unfiltered count is
/// `(n-1)/2`; this default tolerates 75% filtration before alarming.
pub fn default_min_evidence(n: usize) -> usize {
    4.max(n.saturating_sub(1).div_ceil(8))
}

/// Detector thresholds. `delta_th` is the filtration cutoff (differences
/// with larger magnitude are discarded); `f64::INFINITY` disables
/// filtration. `band` is the acceptance interval for the gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub epsilon: f64,
    pub delta_th: f64,
    pub min_evidence: usize,
    pub band: Band,
}

impl DetectorConfig {
    /// Defaults for the delta-family detectors on an `n`-reading window:
    /// band `[2 eps, 6 eps]`, no filtration, evidence floor from
    /// [`default_min_evidence`].
    pub fn delta_defaults(epsilon: f64, n: usize) -> Self {
        Self {
            epsilon,
            delta_th: f64::INFINITY,
            min_evidence: default_min_evidence(n),
            band: Band { low: 2.0 * epsilon, high: 6.0 * epsilon },
        }
    }

    /// Defaults for the simple mean difference detector: band
    /// `[eps, 3 eps]` around the expected gauge of `2 eps`.
    pub fn simple_defaults(epsilon: f64) -> Self {
        Self {
            epsilon,
            delta_th: f64::INFINITY,
            min_evidence: 1,
            band: Band { low: epsilon, high: 3.0 * epsilon },
        }
    }

    fn validate_common(&self) -> Result<(), DetectError> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(DetectError::InvalidConfig(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if self.band.low.is_nan() || self.band.high.is_nan() || self.band.low >= self.band.high {
            return Err(DetectError::InvalidConfig(format!(
                "band [{}, {}] is not an interval",
                self.band.low, self.band.high
            )));
        }
        Ok(())
    }

    /// Validate for the delta-family detectors: filtration must not remove
    /// honest `2 eps` shifts and the band must bracket the expected gauge
    /// of `4 eps`.
    pub fn validate_delta(&self) -> Result<(), DetectError> {
        self.validate_common()?;
        if !(self.delta_th > 2.0 * self.epsilon) {
            return Err(DetectError::InvalidConfig(format!(
                "delta threshold {} must exceed 2 * epsilon = {}",
                self.delta_th,
                2.0 * self.epsilon
            )));
        }
        if self.min_evidence == 0 {
            return Err(DetectError::InvalidConfig(
                "minimum evidence count must be at least 1".into(),
            ));
        }
        let center = 4.0 * self.epsilon;
        if !(self.band.low < center && center < self.band.high) {
            return Err(DetectError::InvalidConfig(format!(
                "band [{}, {}] must bracket 4 * epsilon = {center}",
                self.band.low, self.band.high
            )));
        }
        Ok(())
    }

    /// Validate for the simple mean difference detector: the band must
    /// bracket the expected gauge of `2 eps`.
    pub fn validate_simple(&self) -> Result<(), DetectError> {
        self.validate_common()?;
        let center = 2.0 * self.epsilon;
        if !(self.band.low < center && center < self.band.high) {
            return Err(DetectError::InvalidConfig(format!(
                "band [{}, {}] must bracket 2 * epsilon = {center}",
                self.band.low, self.band.high
            )));
        }
        Ok(())
    }
}

/// Why a verdict alarmed, or `Ok` when it did not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlarmReason {
    Ok,
    BandViolation,
    InsufficientEvidence,
    LsbMismatch,
}

/// Post-filtration evidence counts per key-pair set. The simple detector
/// reports its two single-bit classes in `s01` (key bit 1) and `s10`
/// (key bit 0), matching the gauge roles; the LSB detector has no sets and
/// reports zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct SetCounts {
    pub s00: usize,
    pub s01: usize,
    pub s10: usize,
    pub s11: usize,
}

/// Outcome of one detector pass, with the gauge values that produced it.
/// For the delta family, `mu01`/`mu10` are the mean kept differences of the
/// rising and falling key-pair sets; for the simple detector they are the
/// mean readings of the key-1 and key-0 classes.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DetectionVerdict {
    pub alarm: bool,
    pub reason: AlarmReason,
    pub x: Option<f64>,
    pub mu01: Option<f64>,
    pub mu10: Option<f64>,
    pub counts: SetCounts,
}

impl DetectionVerdict {
    fn ok(x: f64, mu01: f64, mu10: f64, counts: SetCounts) -> Self {
        Self { alarm: false, reason: AlarmReason::Ok, x: Some(x), mu01: Some(mu01), mu10: Some(mu10), counts }
    }

    fn alarm(reason: AlarmReason) -> Self {
        Self { alarm: true, reason, x: None, mu01: None, mu10: None, counts: SetCounts::default() }
    }
}

struct ClassSums {
    sum: i128,
    count: usize,
}

impl ClassSums {
    fn new() -> Self {
        Self { sum: 0, count: 0 }
    }

    fn push(&mut self, v: i64) {
        self.sum += i128::from(v);
        self.count += 1;
    }

    fn tick_mean(&self) -> f64 {
        self.sum as f64 / self.count as f64
    }
}

fn delta_family(
    readings: &DistortedTrace,
    key: &KeyStream,
    config: &DetectorConfig,
    delta_th: f64,
) -> Result<DetectionVerdict, DetectError> {
    let effective = DetectorConfig { delta_th, ..config.clone() };
    effective.validate_delta()?;

    let trace = readings.readings();
    let n = trace.len();
    if n < 3 {
        return Err(DetectError::WindowTooShort { len: n, min: 3 });
    }
    if key.len() < n {
        return Err(DetectError::KeyTooShort { key_len: key.len(), needed: n });
    }

    let res = trace.resolution();
    let gaps = trace.gap_mask();
    let ticks = trace.ticks();
    let mut rising = ClassSums::new(); // (0,1): expected shift +2 eps
    let mut falling = ClassSums::new(); // (1,0): expected shift -2 eps
    let mut counts = SetCounts::default();
    for i in 0..n - 1 {
        if gaps[i] {
            continue;
        }
        let d = ticks[i + 1] - ticks[i];
        // Strict removal: keep differences exactly at the threshold.
        if (d.abs() as f64) * res > delta_th {
            continue;
        }
        match pair_class(key, i) {
            (0, 0) => counts.s00 += 1,
            (1, 1) => counts.s11 += 1,
            (0, 1) => {
                counts.s01 += 1;
                rising.push(d);
            }
            _ => {
                counts.s10 += 1;
                falling.push(d);
            }
        }
    }

    if rising.count + falling.count < effective.min_evidence
        || rising.count == 0
        || falling.count == 0
    {
        let mut verdict = DetectionVerdict::alarm(AlarmReason::InsufficientEvidence);
        verdict.counts = counts;
        return Ok(verdict);
    }

    let mu01 = rising.tick_mean() * res;
    let mu10 = falling.tick_mean() * res;
    let x = (rising.tick_mean() - falling.tick_mean()) * res;
    if effective.band.contains(x) {
        Ok(DetectionVerdict::ok(x, mu01, mu10, counts))
    } else {
        Ok(DetectionVerdict {
            alarm: true,
            reason: AlarmReason::BandViolation,
            x: Some(x),
            mu01: Some(mu01),
            mu10: Some(mu10),
            counts,
        })
    }
}

/// Filtered delta mean difference: drop differences with magnitude above
/// `config.delta_th`, require at least `config.min_evidence` survivors in
/// the rising and falling sets combined (and at least one in each), then
/// alarm unless the gauge `mu01 - mu10` falls inside the band.
pub fn detect_filtered_delta(
    readings: &DistortedTrace,
    key: &KeyStream,
    config: &DetectorConfig,
) -> Result<DetectionVerdict, DetectError> {
    delta_family(readings, key, config, config.delta_th)
}

/// Delta mean difference without the filtration step: identical to
/// [`detect_filtered_delta`] with an infinite threshold. The evidence-count
/// check is retained.
pub fn detect_delta(
    readings: &DistortedTrace,
    key: &KeyStream,
    config: &DetectorConfig,
) -> Result<DetectionVerdict, DetectError> {
    delta_family(readings, key, config, f64::INFINITY)
}

/// Simple mean difference over the raw readings: gauge is the mean of the
/// key-1 class minus the mean of the key-0 class, expected near `2 eps`
/// under honest distortion and near zero under attack.
pub fn detect_simple_mean(
    readings: &DistortedTrace,
    key: &KeyStream,
    config: &DetectorConfig,
) -> Result<DetectionVerdict, DetectError> {
    config.validate_simple()?;

    let trace = readings.readings();
    let n = trace.len();
    if n < 2 {
        return Err(DetectError::WindowTooShort { len: n, min: 2 });
    }
    if key.len() < n {
        return Err(DetectError::KeyTooShort { key_len: key.len(), needed: n });
    }

    let mut ones = ClassSums::new();
    let mut zeros = ClassSums::new();
    for (i, &t) in trace.ticks().iter().enumerate() {
        if key.bit(i) == 1 {
            ones.push(t);
        } else {
            zeros.push(t);
        }
    }
    let counts = SetCounts { s01: ones.count, s10: zeros.count, ..SetCounts::default() };
    if ones.count == 0 || zeros.count == 0 {
        let mut verdict = DetectionVerdict::alarm(AlarmReason::InsufficientEvidence);
        verdict.counts = counts;
        return Ok(verdict);
    }

    let res = trace.resolution();
    let mu1 = ones.tick_mean() * res;
    let mu0 = zeros.tick_mean() * res;
    let x = (ones.tick_mean() - zeros.tick_mean()) * res;
    if config.band.contains(x) {
        Ok(DetectionVerdict::ok(x, mu1, mu0, counts))
    } else {
        Ok(DetectionVerdict {
            alarm: true,
            reason: AlarmReason::BandViolation,
            x: Some(x),
            mu01: Some(mu1),
            mu10: Some(mu0),
            counts,
        })
    }
}

/// LSB check: alarm if any of the first `t` readings' tick LSBs differs
/// from the (effective) key bit for that slot.
pub fn detect_lsb<K: KeyBits>(
    readings: &DistortedTrace,
    key: &K,
    t: usize,
) -> Result<DetectionVerdict, DetectError> {
    let trace = readings.readings();
    if t > trace.len() {
        return Err(DetectError::CheckLengthExceedsWindow { t, window: trace.len() });
    }
    if key.len() < t {
        return Err(DetectError::KeyTooShort { key_len: key.len(), needed: t });
    }
    for (i, &tick) in trace.ticks().iter().take(t).enumerate() {
        if (tick & 1) as u8 != key.key_bit(i) {
            return Ok(DetectionVerdict::alarm(AlarmReason::LsbMismatch));
        }
    }
    Ok(DetectionVerdict {
        alarm: false,
        reason: AlarmReason::Ok,
        x: None,
        mu01: None,
        mu10: None,
        counts: SetCounts::default(),
    })
}

/// False-negative probability of the LSB check when the attacker guesses
/// each slot's bit correctly with probability `p_guess`: `p_guess^t`.
pub fn fn_bound_lsb(p_guess: f64, t: u32) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p_guess));
    p_guess.powi(t as i32)
}
