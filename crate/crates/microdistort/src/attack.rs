//! Forged sensor streams an off-path impersonator would send. The attacker
//! is modeled as maximally strong: it predicts the original readings
//! perfectly and only lacks the shared secret.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::distort::{epsilon_ticks, rebuild, DistortError, DistortScheme, DistortedTrace};
use crate::keystream::derive_seed;
use crate::trace::SensorTrace;

/// Attacker model for an evaluation run. `None` routes the honest distorted
/// stream to the detector and is what false-positive cells measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    None,
    Eda,
    Rda,
    LsbGuess,
}

impl AttackKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Eda => "eda",
            Self::Rda => "rda",
            Self::LsbGuess => "lsb-guess",
        }
    }
}

fn attacker_rng(attacker_seed: u64) -> ChaCha20Rng {
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&derive_seed(attacker_seed, "attacker", i as u64).to_le_bytes());
    }
    ChaCha20Rng::from_seed(bytes)
}

/// Exact duplication: the forged stream equals the original undistorted
/// readings. The strongest predictor consistent with an attacker holding
/// full historical data.
pub fn attack_eda(original: &SensorTrace) -> DistortedTrace {
    DistortedTrace::new(original.clone(), 0.0, DistortScheme::ForgedEda)
}

/// Random distortion: the attacker adds or subtracts epsilon per slot with
/// an independent fair coin, hoping to mimic the honest distorter without
/// the key.
pub fn attack_rda(
    original: &SensorTrace,
    epsilon: f64,
    attacker_seed: u64,
) -> Result<DistortedTrace, DistortError> {
    let eps_ticks = epsilon_ticks(epsilon, original.resolution())?;
    let mut rng = attacker_rng(attacker_seed);
    let mut word = 0u64;
    let ticks: Vec<i64> = original
        .ticks()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if i % 64 == 0 {
                word = rng.next_u64();
            }
            let coin = (word >> (i % 64)) & 1;
            if coin == 1 {
                t + eps_ticks
            } else {
                t - eps_ticks
            }
        })
        .collect();
    let readings = rebuild(original, ticks);
    let canonical_eps = eps_ticks as f64 * original.resolution();
    Ok(DistortedTrace::new(readings, canonical_eps, DistortScheme::ForgedRda))
}

/// Against the digital scheme the attacker can only guess each slot's key
/// bit; the forged tick LSBs are independent fair coin flips.
pub fn attack_lsb_guess(original: &SensorTrace, attacker_seed: u64) -> DistortedTrace {
    let mut rng = attacker_rng(attacker_seed);
    let mut word = 0u64;
    let ticks: Vec<i64> = original
        .ticks()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if i % 64 == 0 {
                word = rng.next_u64();
            }
            let guess = ((word >> (i % 64)) & 1) as i64;
            (t & !1) | guess
        })
        .collect();
    DistortedTrace::new(rebuild(original, ticks), 0.0, DistortScheme::ForgedLsbGuess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distort::distort_physical;
    use crate::keystream::KeyStream;
    use crate::trace::synth_constant;

    #[test]
    fn eda_replays_original_values() {
        let trace = crate::trace::SensorTrace::from_values(&[5.0, 6.0, 7.0], 1.0, "units", 1.0)
            .unwrap();
        let forged = attack_eda(&trace);
        assert_eq!(forged.readings().ticks(), trace.ticks());
    }

    #[test]
    fn eda_sits_one_epsilon_off_honest_stream() {
        let trace = synth_constant(50.0, 64).unwrap();
        let key = KeyStream::generate(3, 64).unwrap();
        let honest = distort_physical(&trace, &key, 1.0).unwrap();
        let forged = attack_eda(&trace);
        for (h, f) in honest.readings().ticks().iter().zip(forged.readings().ticks()) {
            assert_eq!((h - f).abs(), 100); // one epsilon in ticks
        }
    }

    #[test]
    fn rda_two_point_support() {
        let trace = synth_constant(5.0, 1000).unwrap();
        let forged = attack_rda(&trace, 1.0, 21).unwrap();
        let base = 500;
        assert!(forged.readings().ticks().iter().all(|&t| t == base - 100 || t == base + 100));
    }

    #[test]
    fn rda_coin_is_fair() {
        let trace = synth_constant(5.0, 100_000).unwrap();
        let forged = attack_rda(&trace, 1.0, 5).unwrap();
        let ups = forged.readings().ticks().iter().filter(|&&t| t > 500).count();
        let frac = ups as f64 / 100_000.0;
        assert!((0.497..=0.503).contains(&frac), "fraction up {frac}");
    }

    #[test]
    fn rda_is_deterministic_in_seed() {
        let trace = synth_constant(5.0, 256).unwrap();
        let a = attack_rda(&trace, 1.0, 9).unwrap();
        let b = attack_rda(&trace, 1.0, 9).unwrap();
        let c = attack_rda(&trace, 1.0, 10).unwrap();
        assert_eq!(a.readings().ticks(), b.readings().ticks());
        assert_ne!(a.readings().ticks(), c.readings().ticks());
    }

    #[test]
    fn lsb_guess_flips_only_lsb() {
        let trace = crate::trace::SensorTrace::from_ticks(vec![10, 11, -6, 7], 1.0, "units", 1.0)
            .unwrap();
        let forged = attack_lsb_guess(&trace, 33);
        for (a, b) in trace.ticks().iter().zip(forged.readings().ticks()) {
            assert!(matches!(a ^ b, 0 | 1));
        }
    }

    #[test]
    fn forged_signs_uncorrelated_with_defender_key() {
        // Defender key fixed; attacker seed varied. Pooled correlation
        // between forged-slot signs and key bits stays near zero.
        let n = 100;
        let trace = synth_constant(10.0, n).unwrap();
        let key = KeyStream::generate(77, n).unwrap();
        let mut sum_xy = 0.0;
        let mut sum_x = 0.0;
        let mut sum_y = 0.0;
        let mut sum_x2 = 0.0;
        let mut sum_y2 = 0.0;
        let mut count = 0usize;
        for attacker_seed in 0..1000u64 {
            let forged = attack_rda(&trace, 1.0, attacker_seed).unwrap();
            for i in 0..n {
                let x = if forged.readings().ticks()[i] > 1000 { 1.0 } else { 0.0 };
                let y = f64::from(key.bit(i));
                sum_xy += x * y;
                sum_x += x;
                sum_y += y;
                sum_x2 += x * x;
                sum_y2 += y * y;
                count += 1;
            }
        }
        let m = count as f64;
        let cov = sum_xy / m - (sum_x / m) * (sum_y / m);
        let var_x = sum_x2 / m - (sum_x / m).powi(2);
        let var_y = sum_y2 / m - (sum_y / m).powi(2);
        let corr = cov / (var_x * var_y).sqrt();
        assert!(corr.abs() <= 0.1, "correlation {corr}");
    }
}
