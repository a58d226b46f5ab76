mod common;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use robscatter::kernels::chi2_quantile;
use robscatter::lab::*;
use robscatter::linalg::cholesky;
use robscatter::rng::stream;

#[test]
fn lrt_examples() {
    let s0 = ar1_correlation(4, 0.5);
    assert!(lrt_distance(&s0, &s0).unwrap().abs() < 1e-12);
    let (two, one) = (DMatrix::from_element(1, 1, 2.0), DMatrix::from_element(1, 1, 1.0));
    assert_relative_eq!(lrt_distance(&two, &one).unwrap(), 1.0 - 2.0_f64.ln(), epsilon = 1e-12);
    assert_relative_eq!(lrt_distance(&(&s0 * 3.0), &s0).unwrap(), 4.0 * (2.0 - 3.0_f64.ln()), max_relative = 1e-12);
    assert!(lrt_distance(&DMatrix::from_element(2, 2, 1.0), &s0.view((0, 0), (2, 2)).into_owned()).is_err());
    assert!(lrt_distance(&s0, &DMatrix::identity(3, 3)).is_err());
}

#[test]
fn ar1_examples() {
    let r = ar1_correlation(3, 0.9);
    let want = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, 0.81, 0.9, 1.0, 0.9, 0.81, 0.9, 1.0]);
    assert!((r - want).abs().max() < 1e-15);
    assert_eq!(ar1_correlation(6, 0.0), DMatrix::identity(6, 6));
    for rho in [-0.99, 0.5, 0.99] {
        assert!(cholesky(ar1_correlation(100, rho)).is_ok());
    }
}

#[test]
fn random_correlations() {
    let mut max_corr = 0.0;
    let draws = 400;
    for seed in 0..draws {
        let r = gen_correlation(10, CorrelationKind::Random, seed).unwrap();
        let eig = SymmetricEigen::new(r.clone());
        let (hi, lo) = (eig.eigenvalues.max(), eig.eigenvalues.min());
        assert!(lo > 0.0);
        assert!((hi / lo - RANDOM_CORRELATION_CONDITION).abs() <= 1e-6 * RANDOM_CORRELATION_CONDITION);
        for j in 0..10 {
            assert_eq!(r[(j, j)], 1.0);
            for k in 0..10 {
                assert_eq!(r[(j, k)], r[(k, j)]);
            }
        }
        let off = (0..10)
            .flat_map(|j| (0..10).filter(move |&k| k != j).map(move |k| (j, k)))
            .map(|(j, k)| r[(j, k)].abs())
            .fold(0.0, f64::max);
        max_corr += off;
    }
    let avg = max_corr / draws as f64;
    assert!((avg - 0.49).abs() <= 0.1, "{}", avg);
    assert_eq!(
        gen_correlation(10, CorrelationKind::Random, 5).unwrap(),
        gen_correlation(10, CorrelationKind::Random, 5).unwrap()
    );
    assert!(gen_correlation(1, CorrelationKind::Random, 5).is_err());
}

#[test]
fn least_favourable_direction() {
    for seed in 0..10 {
        let s0 = gen_correlation(12, CorrelationKind::Random, seed).unwrap();
        let m = TrueModel::new(s0.clone()).unwrap();
        let q = m.v.dot(&(s0.clone().try_inverse().unwrap() * &m.v));
        assert!((q - 1.0).abs() < 1e-10);
        let lmin = SymmetricEigen::new(s0.clone()).eigenvalues.min();
        assert_relative_eq!(m.v.norm(), lmin.sqrt(), max_relative = 1e-10);
    }
}

#[test]
fn cellwise_contamination() {
    let mut rng = stream(41, &[]);
    let clean = DMatrix::from_fn(100, 10, |i, j| (i * 10 + j) as f64);
    let mut x = clean.clone();
    assert!(contaminate_cellwise(&mut x, 0.0, 3.0, &mut rng).unwrap().is_empty());
    assert_eq!(x, clean);
    let cells = contaminate_cellwise(&mut x, 0.05, 3.0, &mut rng).unwrap();
    assert_eq!(cells.len(), 50);
    for i in 0..100 {
        for j in 0..10 {
            assert_eq!(cells.contains(&(i, j)), x[(i, j)] != clean[(i, j)]);
        }
    }
    let mut big = DMatrix::zeros(1000, 20);
    let cells = contaminate_cellwise(&mut big, 0.5, 7.0, &mut rng).unwrap();
    assert_eq!(cells.len(), 10_000);
    let vals: Vec<f64> = cells.iter().map(|&(i, j)| big[(i, j)]).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt();
    assert!((mean - 7.0).abs() < 0.05 * 0.1, "{}", mean);
    assert!((sd - 0.1).abs() < 0.005, "{}", sd);
    assert!(contaminate_cellwise(&mut big, 1.0, 7.0, &mut rng).is_err());
}

#[test]
fn casewise_contamination() {
    let s0 = gen_correlation(10, CorrelationKind::Random, 42).unwrap();
    let m = TrueModel::new(s0.clone()).unwrap();
    let inv = s0.clone().try_inverse().unwrap();
    let clean = m.sample(100, &mut stream(42, &[1]));
    let mut x = clean.clone();
    let rows = contaminate_casewise(&mut x, &m, 0.1, 4.0, &mut stream(42, &[2])).unwrap();
    assert_eq!(rows.len(), 10);
    for i in 0..100 {
        assert_eq!(rows.contains(&i), x.row(i) != clean.row(i));
    }

    let mut x = m.sample(2000, &mut stream(42, &[3]));
    let rows = contaminate_casewise(&mut x, &m, 0.5, 4.0, &mut stream(42, &[4])).unwrap();
    let c2 = 4.0 * chi2_quantile(0.99, 10).unwrap();
    // E[(c v + e)' S^-1 (c v + e)] = c^2 + 0.01 tr(S^-1) for e ~ N(0, 0.01 I)
    let expected = c2 + 0.01 * inv.trace();
    let mean = rows
        .iter()
        .map(|&i| {
            let r = x.row(i).transpose();
            r.dot(&(&inv * &r))
        })
        .sum::<f64>()
        / rows.len() as f64;
    assert!((mean / expected - 1.0).abs() < 0.02, "{} vs {}", mean, expected);
    let positive = rows.iter().filter(|&&i| x.row(i).dot(&m.v.transpose()) > 0.0).count();
    assert!((positive as f64 / rows.len() as f64 - 0.5).abs() < 0.05);
}

#[test]
fn presets_and_configs() {
    for name in PRESETS {
        let cfg = preset(name).unwrap();
        assert_eq!(cfg.n, 10 * cfg.p);
        cfg.validate().unwrap();
    }
    let cfg = parse_config("preset = \"table1-p10\"\nreplicates = 2\n").unwrap();
    assert_eq!(cfg.cells().len(), 1 + 2 * 10);
    assert!(cfg.k_grid == (1..=10).map(f64::from).collect::<Vec<_>>());
    let cfg = parse_config("preset = \"table2-p20\"\n").unwrap();
    assert_eq!(cfg.k_grid.len(), 20);
    for (text, path) in [
        ("p = 10\neps = [0.1, 1.5]\n", "eps[1]"),
        ("p = 10\ncorrelation = \"ar1\"\nrho = 1.0\n", "rho"),
        ("p = 10\nrho = 0.5\n", "rho"),
        ("p = 10\ncontamination = \"rowwise\"\n", "contamination"),
        ("preset = \"nope\"\n", "preset"),
        ("replicates = 3\n", "p"),
    ] {
        match parse_config(text) {
            Err(robscatter::Error::Config { path: got, .. }) => assert_eq!(got, path, "{}", text),
            other => panic!("{}: {:?}", text, other.map(|c| c.name)),
        }
    }
}

fn small_campaign(contamination: &str, eps: &str, estimators: &str) -> ScenarioConfig {
    parse_config(&format!(
        "p = 4\nn = 60\ncontamination = \"{}\"\neps = {}\nk = [2, 6]\nreplicates = 4\nseed = 3\nestimators = {}\n",
        contamination, eps, estimators
    ))
    .unwrap()
}

#[test]
fn campaigns_are_deterministic() {
    let cfg = small_campaign("cellwise", "[0.0, 0.1]", "[\"mle\", \"uf-gse\", \"ubf-gre-c\", \"emve\"]");
    let a = run_campaign(&cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| run_campaign(&cfg).unwrap());
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.rows.len(), 4 * 3);
    assert_eq!(a.efficiency.len(), 4);
    assert_eq!(a.efficiency[0], ("mle".to_string(), 1.0));
    for m in &a.max_over_k {
        let best = a
            .rows
            .iter()
            .filter(|r| r.estimator == m.estimator && r.eps == m.eps)
            .map(|r| r.mean_lrt)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(m.max_mean_lrt, best);
        if m.eps == 0.0 {
            let clean = a.rows.iter().find(|r| r.estimator == m.estimator && r.eps == 0.0).unwrap();
            assert_eq!(m.max_mean_lrt, clean.mean_lrt);
        }
    }
}

#[test]
fn contamination_hurts_the_mle() {
    let mut cfg = small_campaign("casewise", "[0.0, 0.2]", "[\"mle\", \"gre-c\", \"ubf-gre-c\"]");
    cfg.k_grid = vec![2.0, 6.0, 20.0];
    let r = run_campaign(&cfg).unwrap();
    let max = |e: &str, eps: f64| r.max_over_k.iter().find(|m| m.estimator == e && m.eps == eps).unwrap().max_mean_lrt;
    let at = |e: &str, k: f64| r.rows.iter().find(|row| row.estimator == e && row.k == k).unwrap().mean_lrt;
    assert!(max("mle", 0.2) > 10.0 * max("mle", 0.0));
    assert!(max("gre-c", 0.2) < max("mle", 0.2));
    assert!(at("gre-c", 20.0) < 0.1 * at("mle", 20.0));
    assert!(at("ubf-gre-c", 20.0) < 0.5 * at("mle", 20.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lrt_is_positive_away_from_the_truth(seed in 0u64..1000, scale in 0.01..0.5f64) {
        let s0 = gen_correlation(5, CorrelationKind::Random, seed).unwrap();
        let mut rng = stream(seed, &[5]);
        let e = DMatrix::from_fn(5, 5, |_, _| scale * rand::Rng::random::<f64>(&mut rng));
        let s = &s0 + &e * e.transpose();
        prop_assert!(lrt_distance(&s, &s0).unwrap() > 0.0);
        prop_assert!(lrt_distance(&s0, &s0).unwrap() < 1e-10);
    }
}
