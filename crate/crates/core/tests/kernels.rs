use nalgebra::DMatrix;
use proptest::prelude::*;

use ktrr::kernels::kernel_eval;
use ktrr::{compute_kernel_matrix, default_bandwidth, DataMatrix, KernelKind, KernelSpec};

fn samples(max_n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0f64..3.0, dim), 2..max_n)
}

fn brute_bandwidth(pts: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0.0;
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            if i < j {
                sum += pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                count += 1.0;
            }
        }
    }
    sum / count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bandwidth_is_mean_pairwise_distance(pts in samples(30, 3)) {
        let x = DataMatrix::from_samples(&pts);
        let got = default_bandwidth(&x).unwrap();
        prop_assert!((got - brute_bandwidth(&pts)).abs() <= 1e-12 * (1.0 + got));
    }

    #[test]
    fn bandwidth_scales_linearly(pts in samples(20, 2), c in 0.1f64..10.0) {
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| v * c).collect()).collect();
        let a = default_bandwidth(&DataMatrix::from_samples(&pts)).unwrap();
        let b = default_bandwidth(&DataMatrix::from_samples(&scaled)).unwrap();
        prop_assert!((b - c * a).abs() <= 1e-10 * (1.0 + b));
    }

    #[test]
    fn psd_kernels_are_psd(pts in samples(25, 3), kind in prop::sample::select(vec![KernelKind::Gaussian, KernelKind::Heat, KernelKind::Exponential, KernelKind::Linear, KernelKind::Poly2, KernelKind::Poly3])) {
        let x = DataMatrix::from_samples(&pts);
        let k = compute_kernel_matrix(&x, &KernelSpec::new(kind)).unwrap();
        prop_assert!(k.values.is_symmetric_exact());
        let n = k.n();
        let m = DMatrix::from_row_slice(n, n, k.values.as_slice());
        let scale = k.values.max_abs().max(1.0);
        let min = m.symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-9 * scale * n as f64, "{:?} min eigenvalue {}", kind, min);
    }

    #[test]
    fn entries_match_pointwise_evaluation(pts in samples(12, 2), kind in prop::sample::select(KernelKind::ALL.to_vec())) {
        let x = DataMatrix::from_samples(&pts);
        let k = compute_kernel_matrix(&x, &KernelSpec::new(kind)).unwrap();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                let want = kernel_eval(&k.spec, &pts[i], &pts[j]).unwrap();
                prop_assert_eq!(k.values[(i, j)], want);
            }
        }
    }
}

#[test]
fn hand_values() {
    let spec = KernelSpec::new(KernelKind::Gaussian).with_sigma(2.0);
    // exp(-25/4)
    let v: f64 = kernel_eval(&spec, &[0.0, 0.0], &[3.0, 4.0]).unwrap();
    assert!((v - (-6.25f64).exp()).abs() < 1e-16);
    let poly3 = KernelSpec::new(KernelKind::Poly3);
    assert_eq!(kernel_eval(&poly3, &[1.0, 2.0], &[3.0, 1.0]).unwrap(), 125.0);
}

#[test]
fn duplicates_are_guarded_for_inverse_distance() {
    let x = DataMatrix::from_samples(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]]);
    let k = compute_kernel_matrix(&x, &KernelSpec::new(KernelKind::InvDist)).unwrap();
    assert!(k.guarded_entries > 0);
    assert!(k.values.is_finite());
}

#[test]
fn unresolved_bandwidth_is_an_error() {
    let spec = KernelSpec::new(KernelKind::Gaussian);
    assert!(kernel_eval(&spec, &[0.0], &[1.0f64]).is_err());
}
