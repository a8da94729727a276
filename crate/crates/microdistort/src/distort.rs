//! Keyed micro-distortion of a trace: physical (add or subtract epsilon per
//! the key bit) or digital (rewrite the tick's least significant bit).

use std::fmt;

use crate::keystream::{KeyBits, KeyStream, TwoLayerKey};
use crate::trace::SensorTrace;

/// Errors from applying a distortion.
#[derive(Debug, Clone, PartialEq)]
pub enum DistortError {
    /// Epsilon must be a positive whole number of resolution ticks.
    EpsilonOffGrid { epsilon: f64, resolution: f64 },
    /// The keystream has fewer bits than the trace has slots.
    KeyExhausted { key_len: usize, trace_len: usize },
}

impl fmt::Display for DistortError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EpsilonOffGrid { epsilon, resolution } => write!(
                f,
                "epsilon {epsilon} is not a positive multiple of resolution {resolution}"
            ),
            Self::KeyExhausted { key_len, trace_len } => {
                write!(f, "keystream has {key_len} bits for {trace_len} readings")
            }
        }
    }
}

impl std::error::Error for DistortError {}

/// How an observed stream was produced. Detectors never branch on this; it
/// records provenance for reports and debugging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistortScheme {
    Physical,
    DigitalLsb,
    DigitalTwoLayer,
    ForgedEda,
    ForgedRda,
    ForgedLsbGuess,
    /// Readings loaded from outside the pipeline, e.g. a CSV handed to the
    /// detect subcommand.
    External,
}

/// An observed reading stream: possibly distorted, possibly forged.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortedTrace {
    readings: SensorTrace,
    epsilon: f64,
    scheme: DistortScheme,
}

impl DistortedTrace {
    pub(crate) fn new(readings: SensorTrace, epsilon: f64, scheme: DistortScheme) -> Self {
        Self { readings, epsilon, scheme }
    }

    /// Wrap externally sourced readings so they can be fed to a detector.
    pub fn from_external(readings: SensorTrace) -> Self {
        Self::new(readings, 0.0, DistortScheme::External)
    }

    /// Swap in replacement readings, keeping epsilon and scheme provenance.
    /// Used by the harness to overlay channel noise on an observed stream.
    pub(crate) fn with_readings(mut self, readings: SensorTrace) -> Self {
        self.readings = readings;
        self
    }

    pub fn readings(&self) -> &SensorTrace {
        &self.readings
    }

    pub fn into_readings(self) -> SensorTrace {
        self.readings
    }

    /// Micro-distortion magnitude in physical units, canonicalized onto the
    /// resolution grid. Zero for digital and forged-without-epsilon streams.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn scheme(&self) -> DistortScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }
}

/// Check that epsilon sits on the resolution grid and return it in ticks.
/// A small relative tolerance absorbs decimal values (4.08 mm at 0.001 mm
/// resolution) that are not exactly representable in binary floating point.
pub fn epsilon_ticks(epsilon: f64, resolution: f64) -> Result<i64, DistortError> {
    let off_grid = DistortError::EpsilonOffGrid { epsilon, resolution };
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(off_grid);
    }
    let ticks = (epsilon / resolution).round();
    if ticks < 1.0 || ticks >= 9.0e15 || (ticks * resolution - epsilon).abs() > 1e-6 * epsilon.max(resolution) {
        return Err(off_grid);
    }
    Ok(ticks as i64)
}

fn check_key_len(key_len: usize, trace_len: usize) -> Result<(), DistortError> {
    if key_len < trace_len {
        return Err(DistortError::KeyExhausted { key_len, trace_len });
    }
    Ok(())
}

/// Physically distort a trace: slot `i` becomes `d_i + epsilon` when the key
/// bit is 1 and `d_i - epsilon` when it is 0. Readings may go negative (a
/// zero reading minus epsilon stays negative); clamping would bias the
/// detector's gauge, so range edges are left to the caller to avoid.
pub fn distort_physical(
    trace: &SensorTrace,
    key: &KeyStream,
    epsilon: f64,
) -> Result<DistortedTrace, DistortError> {
    check_key_len(key.len(), trace.len())?;
    let eps_ticks = epsilon_ticks(epsilon, trace.resolution())?;
    let ticks: Vec<i64> = trace
        .ticks()
        .iter()
        .enumerate()
        .map(|(i, &t)| if key.bit(i) == 1 { t + eps_ticks } else { t - eps_ticks })
        .collect();
    let readings = rebuild(trace, ticks);
    let canonical_eps = eps_ticks as f64 * trace.resolution();
    Ok(DistortedTrace::new(readings, canonical_eps, DistortScheme::Physical))
}

/// Rewrite each reading's tick LSB to the key bit. Higher bits never change.
pub fn distort_digital_lsb(
    trace: &SensorTrace,
    key: &KeyStream,
) -> Result<DistortedTrace, DistortError> {
    check_key_len(key.len(), trace.len())?;
    let readings = rebuild(trace, lsb_rewrite(trace.ticks(), |i| key.bit(i)));
    Ok(DistortedTrace::new(readings, 0.0, DistortScheme::DigitalLsb))
}

/// Rewrite each reading's tick LSB to the two-layer effective bit: sk1
/// selects per slot whether sk2 or sk3 supplies the bit.
pub fn distort_digital_two_layer(
    trace: &SensorTrace,
    key: &TwoLayerKey,
) -> Result<DistortedTrace, DistortError> {
    check_key_len(key.len(), trace.len())?;
    let readings = rebuild(trace, lsb_rewrite(trace.ticks(), |i| key.key_bit(i)));
    Ok(DistortedTrace::new(readings, 0.0, DistortScheme::DigitalTwoLayer))
}

fn lsb_rewrite(ticks: &[i64], bit: impl Fn(usize) -> u8) -> Vec<i64> {
    ticks
        .iter()
        .enumerate()
        .map(|(i, &t)| (t & !1) | i64::from(bit(i)))
        .collect()
}

pub(crate) fn rebuild(source: &SensorTrace, ticks: Vec<i64>) -> SensorTrace {
    let trace = SensorTrace::from_ticks(
        ticks,
        source.resolution(),
        source.unit(),
        source.sample_interval(),
    )
    .expect("source trace invariants carry over");
    match source.timestamps() {
        Some(ts) => trace.with_timestamps(ts.to_vec()).expect("lengths match"),
        None => trace,
    }
}

/// Invert a physical distortion given the key: `d_i = d'_i - (2k_i - 1) eps`.
pub fn undistort_physical(
    distorted: &DistortedTrace,
    key: &KeyStream,
) -> Result<SensorTrace, DistortError> {
    check_key_len(key.len(), distorted.len())?;
    let readings = distorted.readings();
    let eps_ticks = epsilon_ticks(distorted.epsilon(), readings.resolution())?;
    let ticks = readings
        .ticks()
        .iter()
        .enumerate()
        .map(|(i, &t)| if key.bit(i) == 1 { t - eps_ticks } else { t + eps_ticks })
        .collect();
    Ok(rebuild(readings, ticks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{synth_constant, SensorTrace};

    fn trace_of(values: &[f64], resolution: f64) -> SensorTrace {
        SensorTrace::from_values(values, resolution, "units", 1.0).unwrap()
    }

    #[test]
    fn physical_shifts_by_epsilon() {
        let trace = trace_of(&[100.0], 1.0);
        let up = distort_physical(&trace, &KeyStream::from_bits(0, vec![1]).unwrap(), 40.0).unwrap();
        assert_eq!(up.readings().value(0), 140.0);
        let down = distort_physical(&trace, &KeyStream::from_bits(0, vec![0]).unwrap(), 40.0).unwrap();
        assert_eq!(down.readings().value(0), 60.0);
    }

    #[test]
    fn physical_pattern_on_constant_trace() {
        let trace = trace_of(&[5.0, 5.0, 5.0, 5.0], 1.0);
        let key = KeyStream::from_bits(0, vec![1, 0, 0, 1]).unwrap();
        let d = distort_physical(&trace, &key, 1.0).unwrap();
        let values: Vec<f64> = d.readings().values().collect();
        assert_eq!(values, vec![6.0, 4.0, 4.0, 6.0]);
    }

    #[test]
    fn epsilon_must_sit_on_grid() {
        let trace = trace_of(&[1.0], 0.5);
        let key = KeyStream::from_bits(0, vec![1]).unwrap();
        assert!(matches!(
            distort_physical(&trace, &key, 0.3),
            Err(DistortError::EpsilonOffGrid { .. })
        ));
        // Decimal epsilon on a decimal grid is accepted despite binary float
        // representation error.
        let trace = trace_of(&[500.0], 0.001);
        let key = KeyStream::from_bits(0, vec![1]).unwrap();
        let d = distort_physical(&trace, &key, 4.08).unwrap();
        assert_eq!(d.readings().ticks()[0], 504_080);
    }

    #[test]
    fn short_key_is_rejected() {
        let trace = trace_of(&[1.0, 2.0], 1.0);
        let key = KeyStream::from_bits(0, vec![1]).unwrap();
        assert!(matches!(
            distort_physical(&trace, &key, 1.0),
            Err(DistortError::KeyExhausted { key_len: 1, trace_len: 2 })
        ));
    }

    #[test]
    fn lsb_rewrites_only_lowest_bit() {
        let trace = SensorTrace::from_ticks(vec![0b1010, 0b1011], 1.0, "units", 1.0).unwrap();
        let key = KeyStream::from_bits(0, vec![1, 1]).unwrap();
        let d = distort_digital_lsb(&trace, &key).unwrap();
        assert_eq!(d.readings().ticks(), &[0b1011, 0b1011]);
    }

    #[test]
    fn lsb_pattern() {
        let trace = SensorTrace::from_ticks(vec![4, 5, 6], 1.0, "units", 1.0).unwrap();
        let key = KeyStream::from_bits(0, vec![0, 0, 1]).unwrap();
        let d = distort_digital_lsb(&trace, &key).unwrap();
        assert_eq!(d.readings().ticks(), &[4, 4, 7]);
    }

    #[test]
    fn lsb_handles_negative_ticks() {
        let trace = SensorTrace::from_ticks(vec![-3, -4], 1.0, "units", 1.0).unwrap();
        let key = KeyStream::from_bits(0, vec![0, 1]).unwrap();
        let d = distort_digital_lsb(&trace, &key).unwrap();
        assert_eq!(d.readings().ticks(), &[-4, -3]);
        for (a, b) in trace.ticks().iter().zip(d.readings().ticks()) {
            assert!(matches!(a ^ b, 0 | 1));
        }
    }

    #[test]
    fn two_layer_follows_selector() {
        let trace = SensorTrace::from_ticks(vec![0b111], 1.0, "units", 1.0).unwrap();
        let key = TwoLayerKey::from_streams(
            KeyStream::from_bits(1, vec![1]).unwrap(),
            KeyStream::from_bits(2, vec![0]).unwrap(),
            KeyStream::from_bits(3, vec![1]).unwrap(),
        )
        .unwrap();
        let d = distort_digital_two_layer(&trace, &key).unwrap();
        assert_eq!(d.readings().ticks(), &[0b110]);
    }

    #[test]
    fn two_layer_degenerate_cases_match_single_layer() {
        let n = 48;
        let trace = synth_constant(9.0, n).unwrap();
        let sk2 = KeyStream::generate(2, n).unwrap();
        let sk3 = KeyStream::generate(3, n).unwrap();

        let equal_layers =
            TwoLayerKey::from_streams(KeyStream::generate(1, n).unwrap(), sk2.clone(), sk2.clone())
                .unwrap();
        assert_eq!(
            distort_digital_two_layer(&trace, &equal_layers).unwrap().readings(),
            distort_digital_lsb(&trace, &sk2).unwrap().readings()
        );

        let zero_selector = TwoLayerKey::from_streams(
            KeyStream::from_bits(1, vec![0; n]).unwrap(),
            sk2,
            sk3.clone(),
        )
        .unwrap();
        assert_eq!(
            distort_digital_two_layer(&trace, &zero_selector).unwrap().readings(),
            distort_digital_lsb(&trace, &sk3).unwrap().readings()
        );
    }

    #[test]
    fn physical_round_trips_through_key() {
        let trace = trace_of(&[3.5, -1.0, 0.0, 107.25], 0.25);
        let key = KeyStream::generate(17, 4).unwrap();
        let d = distort_physical(&trace, &key, 0.75).unwrap();
        let back = undistort_physical(&d, &key).unwrap();
        assert_eq!(back.ticks(), trace.ticks());
    }

    #[test]
    fn zero_mean_at_exact_combinatorial_level() {
        let trace = trace_of(&[10.0, 20.0, 30.0, 40.0, 50.0, 60.0], 1.0);
        // Balanced key: distorted mean equals source mean exactly.
        let key = KeyStream::from_bits(0, vec![1, 0, 1, 0, 0, 1]).unwrap();
        let d = distort_physical(&trace, &key, 3.0).unwrap();
        let sum: i64 = trace.ticks().iter().sum();
        let dsum: i64 = d.readings().ticks().iter().sum();
        assert_eq!(sum, dsum);

        // Unbalanced key: the shift is exactly eps * (#1 - #0) / n.
        let key = KeyStream::from_bits(0, vec![1, 1, 1, 0, 1, 1]).unwrap();
        let d = distort_physical(&trace, &key, 3.0).unwrap();
        let dsum: i64 = d.readings().ticks().iter().sum();
        assert_eq!(dsum - sum, 3 * (5 - 1));
    }

    #[test]
    fn negative_results_are_not_clamped() {
        let trace = trace_of(&[0.0], 1.0);
        let key = KeyStream::from_bits(0, vec![0]).unwrap();
        let d = distort_physical(&trace, &key, 7.0).unwrap();
        assert_eq!(d.readings().value(0), -7.0);
    }
}
