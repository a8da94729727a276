// Hypothesis check: a delta gauge restricted to non-overlapping (even-index)
// difference positions has per-set size ~n/8 with no cross-covariance.
use microdistort::distort::distort_physical;
use microdistort::keystream::{derive_seed, KeyStream};
use microdistort::trace::synth_uniform;

fn main() {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let n = 150_000usize;
    let eps = 0.5;
    let trace = synth_uniform(0.0, 100.0, 200_000, 424242).unwrap();
    let mut alarms = 0u64;
    for t in 0..trials as u64 {
        let start = (derive_seed(7, "window", t) % (trace.len() - n + 1) as u64) as usize;
        let window = trace.window(start, n).unwrap();
        let key = KeyStream::generate(derive_seed(7, "key", t), n).unwrap();
        let honest = distort_physical(&window, &key, eps).unwrap();
        let ticks = honest.readings().ticks();
        let res = honest.readings().resolution();
        let (mut s01, mut c01, mut s10, mut c10) = (0i64, 0u64, 0i64, 0u64);
        let mut i = 0;
        while i + 1 < n {
            let d = ticks[i + 1] - ticks[i];
            match (key.bit(i), key.bit(i + 1)) {
                (0, 1) => { s01 += d; c01 += 1; }
                (1, 0) => { s10 += d; c10 += 1; }
                _ => {}
            }
            i += 2; // skip; adjacent deltas never share a reading
        }
        let x = (s01 as f64 / c01 as f64 - s10 as f64 / c10 as f64) * res;
        if !(2.0 * eps..=6.0 * eps).contains(&x) {
            alarms += 1;
        }
    }
    println!("non-overlapping delta gauge: FP {:.3}%", 100.0 * alarms as f64 / trials as f64);
}
