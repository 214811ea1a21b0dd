/// Golden-ratio increment added once per run index.
pub const RUN_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX2: u64 = 0x94D0_49BB_1331_11EB;

/// Seed of run `run_index` under `master_seed`: the SplitMix64 finalizer applied
/// to `master_seed + run_index * 0x9E3779B97F4A7C15` (wrapping).
///
/// ```text
/// z = master + i * 0x9E3779B97F4A7C15
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB
/// z ^ (z >> 31)
/// ```
pub fn derive_run_seed(master_seed: u64, run_index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(run_index.wrapping_mul(RUN_STRIDE));
    z = (z ^ (z >> 30)).wrapping_mul(MIX1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX2);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn splitmix_reference_values() {
        // first outputs of the reference SplitMix64 generator seeded with 0
        assert_eq!(derive_run_seed(0, 1), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_run_seed(0, 2), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(derive_run_seed(42, 7), derive_run_seed(42, 7));
    }

    #[test]
    fn neighbouring_runs_never_collide() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1_000_000 {
            let s: u64 = rng.random();
            assert_ne!(derive_run_seed(s, 0), derive_run_seed(s, 1));
        }
    }

    #[test]
    fn neighbouring_streams_are_uncorrelated() {
        let mut a = ChaCha8Rng::seed_from_u64(derive_run_seed(123, 4));
        let mut b = ChaCha8Rng::seed_from_u64(derive_run_seed(123, 5));
        let n = 100_000;
        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = f64::from(u8::from(a.random::<f64>() < 0.5));
            let y = f64::from(u8::from(b.random::<f64>() < 0.5));
            sa += x;
            sb += y;
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        let n = n as f64;
        let cov = sab / n - sa * sb / (n * n);
        let r = cov / ((saa / n - (sa / n).powi(2)) * (sbb / n - (sb / n).powi(2))).sqrt();
        assert!(r.abs() < 0.01, "r={r}");
    }
}
