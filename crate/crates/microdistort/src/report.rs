//! False-positive / false-negative reports and their serializers.
//!
//! One [`FpFnReport`] is one table cell-row: a (detector, n) pair with its
//! FP rate and per-attack FN rates. The markdown emitter pivots a list of
//! reports into the table layout used throughout this project's docs: one
//! row per window length, one column group per detector.

use serde::{Deserialize, Serialize};

use crate::attack::AttackKind;
use crate::detect::Band;
use crate::eval::{DetectorKind, EvalError, WindowSampling};

/// A Monte-Carlo rate with its Wilson 95% confidence half-width, both in
/// percentage points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub pct: f64,
    pub wilson95_half_pp: f64,
}

/// The configuration that produced a report, embedded for provenance.
/// Execution details that cannot change the numbers (worker count) are
/// deliberately absent so reports stay byte-identical across pool sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub epsilon: f64,
    /// Filtration threshold; absent when filtration is off.
    pub delta_th: Option<f64>,
    /// Evidence floor actually used by the delta-family detectors.
    pub min_evidence: Option<usize>,
    /// Gauge acceptance band actually used.
    pub band: Option<Band>,
    pub attacks: Vec<AttackKind>,
    pub master_seed: u64,
    pub sampling: WindowSampling,
    pub paired: bool,
    pub noise_std: Option<f64>,
    pub lsb_check_len: Option<usize>,
}

/// FP/FN rates for one (detector, window length) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpFnReport {
    pub detector: DetectorKind,
    pub n: usize,
    pub trials: usize,
    pub fp: RateEstimate,
    pub fn_eda: Option<RateEstimate>,
    pub fn_rda: Option<RateEstimate>,
    pub fn_lsb_guess: Option<RateEstimate>,
    pub config: ConfigEcho,
}

/// Output encodings for [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn parse(name: &str) -> Result<Self, EvalError> {
        match name {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(EvalError::Emit(format!("unknown format '{other}'"))),
        }
    }
}

/// Serialize reports. JSON round-trips losslessly; CSV uses the fixed
/// header `detector,n,fp_pct,fn_eda_pct,fn_rda_pct,trials`; markdown lays
/// the reports out with one row per n and one column group per detector.
pub fn emit_report(reports: &[FpFnReport], format: ReportFormat) -> Result<Vec<u8>, EvalError> {
    match format {
        ReportFormat::Json => {
            let mut bytes =
                serde_json::to_vec_pretty(reports).map_err(|e| EvalError::Emit(e.to_string()))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        ReportFormat::Csv => Ok(to_csv(reports).into_bytes()),
        ReportFormat::Markdown => Ok(to_markdown(reports).into_bytes()),
    }
}

fn rate_cell(rate: &Option<RateEstimate>) -> String {
    match rate {
        Some(r) => format!("{:.4}", r.pct),
        None => String::new(),
    }
}

fn to_csv(reports: &[FpFnReport]) -> String {
    let mut out = String::from("detector,n,fp_pct,fn_eda_pct,fn_rda_pct,trials\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{:.4},{},{},{}\n",
            r.detector.name(),
            r.n,
            r.fp.pct,
            rate_cell(&r.fn_eda),
            rate_cell(&r.fn_rda),
            r.trials
        ));
    }
    out
}

fn md_cell(rate: &Option<RateEstimate>) -> String {
    match rate {
        Some(r) => format!("{:.2}", r.pct),
        None => "-".to_string(),
    }
}

fn to_markdown(reports: &[FpFnReport]) -> String {
    // Detectors in first-appearance order, window lengths in first-appearance
    // order, mirroring how sweeps are usually asked for.
    let mut detectors: Vec<DetectorKind> = Vec::new();
    let mut ns: Vec<usize> = Vec::new();
    for r in reports {
        if !detectors.contains(&r.detector) {
            detectors.push(r.detector);
        }
        if !ns.contains(&r.n) {
            ns.push(r.n);
        }
    }
    let with_lsb_guess = reports.iter().any(|r| r.fn_lsb_guess.is_some());

    let mut header = String::from("| n |");
    let mut rule = String::from("|---|");
    for d in &detectors {
        header.push_str(&format!(" {} FP (%) | {} FN EDA (%) | {} FN RDA (%) |", d.name(), d.name(), d.name()));
        rule.push_str("---|---|---|");
        if with_lsb_guess {
            header.push_str(&format!(" {} FN LSB-guess (%) |", d.name()));
            rule.push_str("---|");
        }
    }

    let mut out = format!("{header}\n{rule}\n");
    for &n in &ns {
        let mut row = format!("| {n} |");
        for &d in &detectors {
            match reports.iter().find(|r| r.n == n && r.detector == d) {
                Some(r) => {
                    row.push_str(&format!(
                        " {:.2} | {} | {} |",
                        r.fp.pct,
                        md_cell(&r.fn_eda),
                        md_cell(&r.fn_rda)
                    ));
                    if with_lsb_guess {
                        row.push_str(&format!(" {} |", md_cell(&r.fn_lsb_guess)));
                    }
                }
                None => {
                    row.push_str(" - | - | - |");
                    if with_lsb_guess {
                        row.push_str(" - |");
                    }
                }
            }
        }
        out.push_str(&row);
        out.push('\n');
    }
    out
}
