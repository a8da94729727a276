//! Keyed micro-distortion of sensor streams and statistical detection of
//! hidden false-data-injection attackers.
//!
//! A defender continuously perturbs a protected sensor's readings by a tiny
//! keyed amount, either digitally (rewriting the least significant bit of
//! each reading from a secret bit stream) or physically (adding or
//! subtracting a small epsilon per a secret bit). A matching detector checks
//! for the perturbation pattern; an impersonator who crashed the sensor and
//! replays plausible readings cannot reproduce it without the key. The crate
//! provides the keystreams, the distorters, the attacker models, four
//! detectors, and a Monte-Carlo harness that measures their false positive
//! and false negative rates on real or synthetic traces.
//!
//! # Quick start
//!
//! ```
//! use microdistort::{
//!     detect_filtered_delta, distort_physical, synth_constant, DetectorConfig, KeyStream,
//! };
//!
//! let trace = synth_constant(50.0, 64).unwrap();
//! let key = KeyStream::generate(7, trace.len()).unwrap();
//! let honest = distort_physical(&trace, &key, 0.5).unwrap();
//!
//! let config = DetectorConfig::delta_defaults(honest.epsilon(), trace.len());
//! let verdict = detect_filtered_delta(&honest, &key, &config).unwrap();
//! assert!(!verdict.alarm);
//! assert_eq!(verdict.x, Some(4.0 * honest.epsilon()));
//! ```
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example keystream_tour
//! cargo run --example digital_lsb
//! cargo run --example physical_distortion
//! cargo run --example detect_attacks
//! cargo run --example filtration_benefit
//! cargo run --example evaluate_synthetic
//! cargo run --example daytime_windowing
//! cargo run --example dataset_tables -- data/house1_mains.csv
//! ```
//!
//! The `microdistort` binary wraps the same operations as subcommands
//! (`synth`, `stats`, `distort`, `attack`, `detect`, `evaluate`); see the
//! README for the flag reference.

pub mod attack;
pub mod detect;
pub mod distort;
pub mod eval;
pub mod keystream;
pub mod report;
pub mod trace;

pub use attack::{attack_eda, attack_lsb_guess, attack_rda, AttackKind};
pub use detect::{
    default_min_evidence, delta_sequence, detect_delta, detect_filtered_delta, detect_lsb,
    detect_simple_mean, fn_bound_lsb, partition, AlarmReason, Band, DeltaSequence, DetectError,
    DetectionVerdict, DetectorConfig, Partition, SetCounts,
};
pub use distort::{
    distort_digital_lsb, distort_digital_two_layer, distort_physical, undistort_physical,
    DistortError, DistortScheme, DistortedTrace,
};
pub use eval::{
    add_gaussian_noise, run_trials, sweep, DetectorKind, EvalError, TrialConfig, WindowSampling,
};
pub use keystream::{derive_seed, KeyBits, KeyError, KeyStream, TwoLayerKey};
pub use report::{emit_report, ConfigEcho, FpFnReport, RateEstimate, ReportFormat};
pub use trace::{
    load_trace_csv, synth_constant, synth_ramp, synth_uniform, trace_stats, window_by_clock,
    write_trace_csv, CsvFormat, SensorTrace, TimeOfDay, TraceError, TraceStats,
};

/// The distortion magnitudes and filtration thresholds used for the
/// datasets this project is commonly run against. Epsilon sits near 0.25%
/// to 0.5% of each sensor's operating range; thresholds suit each trace's
/// typical step sizes.
pub mod presets {
    /// RAE house 1 'mains' power (1 Hz, watts, resolution 1 W).
    pub mod house {
        pub const EPSILON: f64 = 40.0;
        pub const DELTA_TH: f64 = 200.0;
        pub const RESOLUTION: f64 = 1.0;
    }

    /// Aggregate solar plant output (per-minute, kilowatts, resolution
    /// 0.01 kW). Daytime windows only; cap windows at 600 samples.
    pub mod solar {
        pub const EPSILON: f64 = 7.5;
        pub const DELTA_TH: f64 = 30.0;
        pub const RESOLUTION: f64 = 0.01;
        pub const MAX_WINDOW: usize = 600;
        pub const DAY_START: &str = "08:00";
        pub const DAY_END: &str = "18:00";
    }

    /// SWaT LIT101 raw water tank level (1 Hz, millimeters, resolution
    /// 0.001 mm).
    pub mod swat {
        pub const EPSILON: f64 = 4.08;
        pub const DELTA_TH: f64 = 25.0;
        pub const RESOLUTION: f64 = 0.001;
    }

    /// Synthetic uniform worst-case traces (unitless, resolution 0.01).
    pub mod synthetic {
        pub const EPSILON: f64 = 0.5;
        pub const RESOLUTION: f64 = crate::trace::SYNTH_RESOLUTION;
    }
}
