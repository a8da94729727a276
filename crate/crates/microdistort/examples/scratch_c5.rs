use microdistort::eval::{run_trials, DetectorKind, TrialConfig};
use microdistort::trace::synth_uniform;
use std::time::Instant;

fn main() {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let trace = synth_uniform(0.0, 100.0, 200_000, 424242).unwrap();
    for (det, n) in [
        (DetectorKind::Simple, 100_000usize),
        (DetectorKind::Simple, 150_000),
        (DetectorKind::Delta, 150_000),
    ] {
        let start = Instant::now();
        let mut config = TrialConfig::new(det, n, trials, 0.5, 7);
        config.attacks = vec![];
        let report = run_trials(&trace, &config).unwrap();
        println!(
            "{:?} n={} T={} -> FP {:.3}% (±{:.3}pp)  [{:.1}s]",
            det, n, trials, report.fp.pct, report.fp.wilson95_half_pp,
            start.elapsed().as_secs_f64()
        );
    }
}
