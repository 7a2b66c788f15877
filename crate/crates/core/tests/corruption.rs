use proptest::prelude::*;

use ktrr::corruption::{add_gaussian_snr, add_salt_pepper};
use ktrr::{corrupt, CorruptionSpec, DataMatrix};

fn grid(m: usize, n: usize) -> DataMatrix<f64> {
    DataMatrix::from_column_major(m, n, (0..m * n).map(|i| 0.2 + 0.6 * ((i * 37 % 101) as f64 / 100.0)).collect())
}

#[test]
fn noise_power_follows_snr() {
    let x = grid(200, 600);
    let signal: f64 = x.values().iter().map(|v| v * v).sum();
    for (snr, seed) in [(10.0, 1), (20.0, 2), (30.0, 3)] {
        let c = add_gaussian_snr(&x, &CorruptionSpec::gaussian_snr(snr, seed).with_range(-50.0, 50.0)).unwrap();
        assert_eq!(c.clipped, 0);
        let noise: f64 = x.values().iter().zip(c.data.values()).map(|(a, b)| (a - b).powi(2)).sum();
        let want = 10f64.powf(-snr / 10.0);
        assert!(((noise / signal) / want - 1.0).abs() < 0.05, "snr {snr}: {}", noise / signal);
    }
}

#[test]
fn clipping_is_counted() {
    let x = grid(50, 50);
    let c = corrupt(&x, &CorruptionSpec::gaussian_snr(0.0, 4)).unwrap();
    assert!(c.clipped > 0);
    assert!(c.data.values().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn none_is_identity() {
    let x = grid(5, 7);
    assert_eq!(corrupt(&x, &CorruptionSpec::none()).unwrap().data, x);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn salt_pepper_hits_exact_count(m in 1usize..20, n in 1usize..20, ratio in 0.0f64..=1.0, seed in any::<u64>()) {
        let x = grid(m, n);
        let c = add_salt_pepper(&x, &CorruptionSpec::salt_pepper(ratio, seed));
        let expected = (ratio * (m * n) as f64).floor() as usize;
        prop_assert_eq!(c.selected, expected);
        let extremes = c.data.values().iter().filter(|&&v| v == 0.0 || v == 1.0).count();
        // grid values are strictly inside (0, 1)
        prop_assert_eq!(extremes, expected);
        let changed = x.values().iter().zip(c.data.values()).filter(|(a, b)| a != b).count();
        prop_assert_eq!(changed, expected);
    }

    #[test]
    fn same_seed_same_output(seed in any::<u64>(), snr in 5.0f64..50.0) {
        let x = grid(6, 9);
        let spec = CorruptionSpec::gaussian_snr(snr, seed);
        prop_assert_eq!(corrupt(&x, &spec).unwrap().data, corrupt(&x, &spec).unwrap().data);
        let sp = CorruptionSpec::salt_pepper(0.3, seed);
        prop_assert_eq!(corrupt(&x, &sp).unwrap().data, corrupt(&x, &sp).unwrap().data);
    }

    #[test]
    fn stays_in_range(seed in any::<u64>(), snr in -10.0f64..60.0, lo in -1.0f64..0.2, width in 0.8f64..3.0) {
        let x = grid(8, 8);
        let c = corrupt(&x, &CorruptionSpec::gaussian_snr(snr, seed).with_range(lo, lo + width)).unwrap();
        prop_assert!(c.data.values().iter().all(|v| *v >= lo && *v <= lo + width));
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let x = grid(3, 3);
    assert!(corrupt(&x, &CorruptionSpec::salt_pepper(1.5, 0)).is_err());
    assert!(corrupt(&x, &CorruptionSpec::gaussian_snr(10.0, 0).with_range(1.0, 0.0)).is_err());
    let zero = DataMatrix::from_column_major(2, 2, vec![0.0; 4]);
    assert!(corrupt(&zero, &CorruptionSpec::gaussian_snr(10.0, 0)).is_err());
}
