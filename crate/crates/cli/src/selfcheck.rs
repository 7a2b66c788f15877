//! Invariant checks on synthetic data, one line per check.

use std::time::Instant;

use ktrr::experiment::{cluster_pipeline_with, run_experiment, DatasetConfig, ExperimentConfig, PipelineParams};
use ktrr::linalg::{FullPivLu, SymmetricEigen};
use ktrr::metrics::{accuracy, ari, fscore, nmi};
use ktrr::solver::{factor_regularized_kernel, solve_column};
use ktrr::{
    corrupt, factorization_count, fit_ktrr, normalized_laplacian, synthetic, AffinityMatrix, CorruptionSpec,
    DataMatrix, KMeansParams, KernelKind, KernelMatrix, KernelSpec, Matrix, RegressionParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn(&mut ChaCha8Rng) -> Result<String, String>;

pub fn run(seed: u64) -> bool {
    let checks: [(&str, Check); 7] = [
        ("closed form matches bordered system", closed_form),
        ("one factorization per fit", single_factorization),
        ("laplacian null vector and spectrum", laplacian),
        ("metric axioms", metric_axioms),
        ("kernel separates circles", circles),
        ("gaussian noise power", noise_power),
        ("report determinism", determinism),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    for (name, check) in checks {
        let start = Instant::now();
        let result = check(&mut rng);
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name} ({detail}; {secs:.2}s)"),
            Err(detail) => {
                ok = false;
                println!("FAIL {name} ({detail}; {secs:.2}s)");
            }
        }
    }
    ok
}

fn gram(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Matrix<f64> {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    Matrix::from_fn(n, n, |i, j| pts[i].iter().zip(&pts[j]).map(|(a, b)| a * b).sum())
}

fn closed_form(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(4..=12);
        let m = rng.random_range(1..=n);
        let lambda = [0.01, 0.5, 5.0][rng.random_range(0..3)];
        let k = KernelMatrix::from_matrix(gram(rng, n, m)).map_err(|e| e.to_string())?;
        let fact = factor_regularized_kernel(&k, lambda).map_err(|e| e.to_string())?;
        let i = rng.random_range(0..n);
        let c = solve_column(&fact, &k, i).map_err(|e| e.to_string())?;
        // [K+λI  e_i; e_iᵀ 0] [c; μ] = [k_i; 0]
        let bordered = Matrix::from_fn(n + 1, n + 1, |r, s| match (r < n, s < n) {
            (true, true) => k.values[(r, s)] + if r == s { lambda } else { 0.0 },
            (true, false) => f64::from(r == i),
            (false, true) => f64::from(s == i),
            (false, false) => 0.0,
        });
        let mut rhs = k.column(i).to_vec();
        rhs.push(0.0);
        let want = FullPivLu::new(&bordered).map_err(|e| e.to_string())?.solve(&rhs);
        if c[i] != 0.0 {
            return Err(format!("self coefficient {} is not zero", c[i]));
        }
        for r in 0..n {
            worst = worst.max((c[r] - want[r]).abs());
        }
    }
    if worst <= 1e-8 {
        Ok(format!("max error {worst:.1e}"))
    } else {
        Err(format!("max error {worst:.1e} > 1e-8"))
    }
}

fn single_factorization(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let k = KernelMatrix::from_matrix(gram(rng, 60, 5)).map_err(|e| e.to_string())?;
    let before = factorization_count();
    fit_ktrr(&k, &RegressionParams::new(0.1, 5)).map_err(|e| e.to_string())?;
    match factorization_count() - before {
        1 => Ok("n = 60".into()),
        f => Err(format!("{f} factorizations")),
    }
}

fn laplacian(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let n = 25;
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = rng.random_range(0.0..1.0);
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    let lap = normalized_laplacian(&AffinityMatrix::from_matrix(w).map_err(|e| e.to_string())?);
    let root: Vec<f64> = lap.degrees.iter().map(|d| d.sqrt()).collect();
    let residual = lap.values.matvec(&root).iter().map(|v| v * v).sum::<f64>().sqrt();
    let min = SymmetricEigen::new(&lap.values).map_err(|e| e.to_string())?.values[0];
    if residual <= 1e-9 && min >= -1e-8 {
        Ok(format!("residual {residual:.1e}, min eigenvalue {min:.1e}"))
    } else {
        Err(format!("residual {residual:.1e}, min eigenvalue {min:.1e}"))
    }
}

fn metric_axioms(_: &mut ChaCha8Rng) -> Result<String, String> {
    let p = [0, 0, 1, 1, 2, 2];
    let scores = [accuracy(&p, &p), nmi(&p, &p), ari(&p, &p), fscore(&p, &p)];
    if scores.iter().any(|s| !matches!(s, Ok(v) if *v == 1.0)) {
        return Err(format!("identical partitions scored {scores:?}"));
    }
    match ari(&[0, 1, 0, 1], &[0, 0, 1, 1]) {
        Ok(v) if v == -0.5 => Ok("ARI example exact".into()),
        other => Err(format!("ARI example gave {other:?}")),
    }
}

fn circles(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let seed = rng.random();
    let ds = synthetic::concentric_circles::<f64>(&[1.0, 5.0], 100, 0.05, seed).map_err(|e| e.to_string())?;
    let km = KMeansParams::new(2, seed).with_restarts(20);
    let ac = |kind| -> Result<f64, String> {
        let p = PipelineParams::new(KernelSpec::new(kind), 0.1, 5, 2);
        let l = cluster_pipeline_with(&ds.x, &p, &km).map_err(|e| e.to_string())?;
        accuracy(&l.labels, &ds.truth).map_err(|e| e.to_string())
    };
    let (g, l) = (ac(KernelKind::Gaussian)?, ac(KernelKind::Linear)?);
    let detail = format!("gaussian AC {g:.3}, linear AC {l:.3}");
    if g >= 0.95 && l <= 0.8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn noise_power(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let (m, n) = (100, 1000);
    let values: Vec<f64> = (0..m * n).map(|_| rng.random_range(0.3..0.7)).collect();
    let x = DataMatrix::from_column_major(m, n, values);
    let spec = CorruptionSpec::gaussian_snr(10.0, rng.random()).with_range(-100.0, 100.0);
    let c = corrupt(&x, &spec).map_err(|e| e.to_string())?;
    let signal = x.values().iter().map(|v| v * v).sum::<f64>();
    let noise = x.values().iter().zip(c.data.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let ratio = noise / signal;
    if (0.095..=0.105).contains(&ratio) {
        Ok(format!("noise/signal {ratio:.4}"))
    } else {
        Err(format!("noise/signal {ratio:.4} outside [0.095, 0.105]"))
    }
}

fn determinism(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut cfg = ExperimentConfig::new(DatasetConfig::circles(), 2);
    cfg.seed = rng.random();
    cfg.runs = 2;
    cfg.kmeans.restarts = 10;
    let a = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let b = run_experiment(&cfg).map_err(|e| e.to_string())?;
    if a.points == b.points && a.config == b.config {
        Ok("two runs identical".into())
    } else {
        Err("reports differ".into())
    }
}
