//! Monte-Carlo evaluation: sample windows from a trace, run the
//! distorter/attacker/detector pipeline per trial, and aggregate false
//! positive and false negative rates.
//!
//! Every trial derives its own key seed, attacker seed, window start, and
//! noise seed from the master seed by labeled hashing, so results are
//! independent of worker count and scheduling: the same master seed gives
//! a byte-identical report whether the pool has one thread or many.

use std::fmt;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::attack::{attack_eda, attack_lsb_guess, attack_rda, AttackKind};
use crate::detect::{
    detect_delta, detect_filtered_delta, detect_lsb, detect_simple_mean, Band, DetectError,
    DetectorConfig,
};
use crate::distort::{
    distort_digital_lsb, distort_physical, epsilon_ticks, DistortError, DistortedTrace,
};
use crate::keystream::{derive_seed, KeyStream};
use crate::report::{ConfigEcho, FpFnReport, RateEstimate};
use crate::trace::{quantize, SensorTrace, TraceError};

/// Errors from harness configuration and execution.
#[derive(Debug)]
pub enum EvalError {
    TraceTooShort { len: usize, window: usize },
    InvalidConfig(String),
    Distort(DistortError),
    Detect(DetectError),
    Trace(TraceError),
    Emit(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TraceTooShort { len, window } => {
                write!(f, "trace has {len} samples, window needs {window}")
            }
            Self::InvalidConfig(msg) => write!(f, "invalid trial config: {msg}"),
            Self::Distort(e) => write!(f, "{e}"),
            Self::Detect(e) => write!(f, "{e}"),
            Self::Trace(e) => write!(f, "{e}"),
            Self::Emit(msg) => write!(f, "cannot emit report: {msg}"),
        }
    }
}

impl std::error::Error for EvalError {}

impl From<DistortError> for EvalError {
    fn from(e: DistortError) -> Self {
        Self::Distort(e)
    }
}

impl From<DetectError> for EvalError {
    fn from(e: DetectError) -> Self {
        Self::Detect(e)
    }
}

impl From<TraceError> for EvalError {
    fn from(e: TraceError) -> Self {
        Self::Trace(e)
    }
}

/// Which detector the harness drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    Simple,
    Delta,
    Filtered,
    Lsb,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simple => "simple",
            Self::Delta => "delta",
            Self::Filtered => "filtered",
            Self::Lsb => "lsb",
        }
    }
}

/// How window start offsets are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowSampling {
    /// Uniformly random starts, with replacement.
    Random,
    /// Cycle through back-to-back disjoint windows.
    Disjoint,
}

/// Full configuration of one Monte-Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub detector: DetectorKind,
    /// Readings per window (n).
    pub window_len: usize,
    /// Trials (T).
    pub trials: usize,
    pub epsilon: f64,
    /// Filtration threshold; infinite disables filtration. Only the
    /// filtered detector applies it.
    pub delta_th: f64,
    /// Evidence floor; `None` resolves to
    /// [`default_min_evidence`](crate::detect::default_min_evidence).
    pub min_evidence: Option<usize>,
    /// Gauge acceptance band; `None` resolves to the detector default.
    pub band: Option<Band>,
    /// Attacks to measure false negatives for. FP is always measured.
    pub attacks: Vec<AttackKind>,
    pub master_seed: u64,
    pub sampling: WindowSampling,
    /// Optional additive Gaussian noise (standard deviation, physical
    /// units) applied to every observed stream before detection.
    pub noise_std: Option<f64>,
    /// When true (the default), the FP and FN streams of a trial share one
    /// window and key for variance reduction.
    pub paired: bool,
    /// LSB detector check length; `None` checks the whole window.
    pub lsb_check_len: Option<usize>,
}

impl TrialConfig {
    pub fn new(detector: DetectorKind, window_len: usize, trials: usize, epsilon: f64, master_seed: u64) -> Self {
        Self {
            detector,
            window_len,
            trials,
            epsilon,
            delta_th: f64::INFINITY,
            min_evidence: None,
            band: None,
            attacks: vec![AttackKind::Eda, AttackKind::Rda],
            master_seed,
            sampling: WindowSampling::Random,
            noise_std: None,
            paired: true,
            lsb_check_len: None,
        }
    }

    fn detector_config(&self) -> DetectorConfig {
        let mut config = match self.detector {
            DetectorKind::Simple => DetectorConfig::simple_defaults(self.epsilon),
            _ => DetectorConfig::delta_defaults(self.epsilon, self.window_len),
        };
        config.delta_th = self.delta_th;
        if let Some(m) = self.min_evidence {
            config.min_evidence = m;
        }
        if let Some(band) = self.band {
            config.band = band;
        }
        config
    }
}

/// Add zero-mean Gaussian noise of standard deviation `std` (physical
/// units) to every reading, quantized back onto the tick grid. Box-Muller
/// over a ChaCha20 stream, deterministic in `seed`.
pub fn add_gaussian_noise(trace: &SensorTrace, std: f64, seed: u64) -> SensorTrace {
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&derive_seed(seed, "gauss", i as u64).to_le_bytes());
    }
    let mut rng = ChaCha20Rng::from_seed(bytes);
    let mut draw = move || {
        let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let res = trace.resolution();
    let ticks = trace
        .ticks()
        .iter()
        .map(|&t| t + quantize(std * draw(), res).expect("noise fits the grid"))
        .collect();
    crate::distort::rebuild(trace, ticks)
}

struct Counts {
    fp_alarms: u64,
    fn_misses: Vec<u64>,
}

impl Counts {
    fn zero(attacks: usize) -> Self {
        Self { fp_alarms: 0, fn_misses: vec![0; attacks] }
    }

    fn add(mut self, other: Self) -> Self {
        self.fp_alarms += other.fp_alarms;
        for (a, b) in self.fn_misses.iter_mut().zip(other.fn_misses) {
            *a += b;
        }
        self
    }
}

fn validate(trace: &SensorTrace, config: &TrialConfig) -> Result<(), EvalError> {
    if config.trials == 0 {
        return Err(EvalError::InvalidConfig("at least one trial required".into()));
    }
    if config.window_len < 3 {
        return Err(EvalError::InvalidConfig(format!(
            "window length {} below minimum of 3",
            config.window_len
        )));
    }
    if trace.len() < config.window_len {
        return Err(EvalError::TraceTooShort { len: trace.len(), window: config.window_len });
    }
    let needs_epsilon = !matches!(config.detector, DetectorKind::Lsb)
        || config.attacks.contains(&AttackKind::Rda);
    if needs_epsilon {
        epsilon_ticks(config.epsilon, trace.resolution())?;
    }
    match config.detector {
        DetectorKind::Simple => config.detector_config().validate_simple()?,
        DetectorKind::Delta | DetectorKind::Filtered => config.detector_config().validate_delta()?,
        DetectorKind::Lsb => {
            let t = config.lsb_check_len.unwrap_or(config.window_len);
            if t > config.window_len {
                return Err(EvalError::InvalidConfig(format!(
                    "lsb check length {t} exceeds window {}",
                    config.window_len
                )));
            }
        }
    }
    if let Some(std) = config.noise_std {
        if !(std >= 0.0) || !std.is_finite() {
            return Err(EvalError::InvalidConfig(format!("noise std {std} must be >= 0")));
        }
    }
    if config.attacks.contains(&AttackKind::None) {
        return Err(EvalError::InvalidConfig(
            "'none' is the implicit FP arm, not an attack to measure FN for".into(),
        ));
    }
    Ok(())
}

/// Multiply-shift map of a 64-bit word onto `0..count`.
fn bounded(word: u64, count: usize) -> usize {
    ((u128::from(word) * count as u128) >> 64) as usize
}

fn window_start(trace_len: usize, config: &TrialConfig, trial: u64, label: &str) -> usize {
    let span = trace_len - config.window_len + 1;
    match config.sampling {
        WindowSampling::Random => {
            bounded(derive_seed(config.master_seed, label, trial), span)
        }
        WindowSampling::Disjoint => {
            let slots = trace_len / config.window_len;
            (trial as usize % slots) * config.window_len
        }
    }
}

fn observe(stream: DistortedTrace, noise: Option<(f64, u64)>) -> DistortedTrace {
    match noise {
        None => stream,
        Some((std, seed)) => {
            let noisy = add_gaussian_noise(stream.readings(), std, seed);
            stream.with_readings(noisy)
        }
    }
}

fn run_detector(
    config: &TrialConfig,
    detector_config: &DetectorConfig,
    observed: &DistortedTrace,
    key: &KeyStream,
) -> bool {
    let verdict = match config.detector {
        DetectorKind::Simple => detect_simple_mean(observed, key, detector_config),
        DetectorKind::Delta => detect_delta(observed, key, detector_config),
        DetectorKind::Filtered => detect_filtered_delta(observed, key, detector_config),
        DetectorKind::Lsb => {
            let t = config.lsb_check_len.unwrap_or(config.window_len);
            detect_lsb(observed, key, t)
        }
    };
    verdict.expect("trial config validated upfront").alarm
}

fn run_one_trial(trace: &SensorTrace, config: &TrialConfig, detector_config: &DetectorConfig, trial: u64) -> Counts {
    let mut counts = Counts::zero(config.attacks.len());
    let noise_for = |stream: &str| {
        config
            .noise_std
            .map(|std| (std, derive_seed(config.master_seed, &format!("noise-{stream}"), trial)))
    };

    // Honest arm: fresh key, honest distortion, FP measurement.
    let start = window_start(trace.len(), config, trial, "window");
    let window = trace.window(start, config.window_len).expect("validated");
    let key = KeyStream::generate(derive_seed(config.master_seed, "key", trial), config.window_len)
        .expect("window length >= 3");
    let honest = match config.detector {
        DetectorKind::Lsb => distort_digital_lsb(&window, &key),
        _ => distort_physical(&window, &key, config.epsilon),
    }
    .expect("validated");
    let honest = observe(honest, noise_for("fp"));
    if run_detector(config, detector_config, &honest, &key) {
        counts.fp_alarms = 1;
    }

    // Attack arms: forged stream per attack, FN measurement.
    for (slot, &attack) in config.attacks.iter().enumerate() {
        let (window, key) = if config.paired {
            (window.clone(), key.clone())
        } else {
            let label = format!("window-{}", attack.name());
            let start = window_start(trace.len(), config, trial, &label);
            let window = trace.window(start, config.window_len).expect("validated");
            let key_label = format!("key-{}", attack.name());
            let key = KeyStream::generate(
                derive_seed(config.master_seed, &key_label, trial),
                config.window_len,
            )
            .expect("window length >= 3");
            (window, key)
        };
        let forged = match attack {
            AttackKind::Eda => attack_eda(&window),
            AttackKind::Rda => {
                let seed = derive_seed(config.master_seed, "attacker-rda", trial);
                attack_rda(&window, config.epsilon, seed).expect("validated")
            }
            AttackKind::LsbGuess => {
                let seed = derive_seed(config.master_seed, "attacker-lsb", trial);
                attack_lsb_guess(&window, seed)
            }
            AttackKind::None => unreachable!("rejected in validation"),
        };
        let forged = observe(forged, noise_for(attack.name()));
        if !run_detector(config, detector_config, &forged, &key) {
            counts.fn_misses[slot] = 1;
        }
    }
    counts
}

/// Wilson 95% score interval half-width, in percentage points.
fn wilson95_half_pp(successes: u64, trials: u64) -> f64 {
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / (1.0 + z * z / n);
    100.0 * half
}

fn estimate(successes: u64, trials: usize) -> RateEstimate {
    RateEstimate {
        pct: 100.0 * successes as f64 / trials as f64,
        wilson95_half_pp: wilson95_half_pp(successes, trials as u64),
    }
}

/// Run one Monte-Carlo cell: `config.trials` windows through the honest
/// pipeline (false positives) and through each configured attack (false
/// negatives). Fully deterministic in `config.master_seed`.
pub fn run_trials(trace: &SensorTrace, config: &TrialConfig) -> Result<FpFnReport, EvalError> {
    validate(trace, config)?;
    let detector_config = config.detector_config();

    let counts = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| run_one_trial(trace, config, &detector_config, trial))
        .reduce(|| Counts::zero(config.attacks.len()), Counts::add);

    let mut fn_eda = None;
    let mut fn_rda = None;
    let mut fn_lsb_guess = None;
    for (slot, &attack) in config.attacks.iter().enumerate() {
        let rate = Some(estimate(counts.fn_misses[slot], config.trials));
        match attack {
            AttackKind::Eda => fn_eda = rate,
            AttackKind::Rda => fn_rda = rate,
            AttackKind::LsbGuess => fn_lsb_guess = rate,
            AttackKind::None => unreachable!(),
        }
    }

    Ok(FpFnReport {
        detector: config.detector,
        n: config.window_len,
        trials: config.trials,
        fp: estimate(counts.fp_alarms, config.trials),
        fn_eda,
        fn_rda,
        fn_lsb_guess,
        config: ConfigEcho::from_trial_config(config, &detector_config),
    })
}

/// Run [`run_trials`] once per window length, in the given order.
pub fn sweep(
    trace: &SensorTrace,
    base: &TrialConfig,
    n_values: &[usize],
) -> Result<Vec<FpFnReport>, EvalError> {
    n_values
        .iter()
        .map(|&n| {
            let mut config = base.clone();
            config.window_len = n;
            run_trials(trace, &config)
        })
        .collect()
}

impl ConfigEcho {
    fn from_trial_config(config: &TrialConfig, detector_config: &DetectorConfig) -> Self {
        let delta_family = matches!(config.detector, DetectorKind::Delta | DetectorKind::Filtered);
        let delta_th = (matches!(config.detector, DetectorKind::Filtered)
            && detector_config.delta_th.is_finite())
        .then_some(detector_config.delta_th);
        Self {
            epsilon: config.epsilon,
            delta_th,
            min_evidence: delta_family.then_some(detector_config.min_evidence),
            band: (!matches!(config.detector, DetectorKind::Lsb)).then_some(detector_config.band),
            attacks: config.attacks.clone(),
            master_seed: config.master_seed,
            sampling: config.sampling,
            paired: config.paired,
            noise_std: config.noise_std,
            lsb_check_len: matches!(config.detector, DetectorKind::Lsb)
                .then_some(config.lsb_check_len.unwrap_or(config.window_len)),
        }
    }
}
