use proptest::prelude::*;
use qport::stats::special::{t_cdf, t_sf};
use qport::stats::{
    average_ranks, load_replay, mann_whitney_u, run_bootstrap_mean, spearman, summarize_replay,
    wilcoxon_signed_rank,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn replay_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/replay/hardware_runs.json")
}

/// Simpson integral of the unnormalized t density over `[a, b]`.
fn t_kernel_integral(df: f64, a: f64, b: f64) -> f64 {
    let f = |x: f64| (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    let steps = 200_000;
    let h = (b - a) / steps as f64;
    let mut s = f(a) + f(b);
    for i in 1..steps {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

#[test]
fn t_distribution_against_numerical_integration() {
    for &df in &[3.0, 6.0, 11.0] {
        // tails beyond +-2000 are below 1e-9 of the mass for df >= 3
        let total = t_kernel_integral(df, -2000.0, 2000.0);
        for &t in &[-2.5, -0.4, 0.0, 1.1, 5.328] {
            let cdf = t_kernel_integral(df, -2000.0, t) / total;
            assert!((t_cdf(t, df) - cdf).abs() < 1e-6, "df {df} t {t}");
        }
    }
    assert!((t_sf(5.3284, 6.0) - 0.000_890).abs() < 5e-6);
}

fn wilcoxon_brute(d: &[f64]) -> (f64, f64) {
    let nz: Vec<f64> = d.iter().copied().filter(|x| *x != 0.0).collect();
    let ranks = average_ranks(&nz.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let w: f64 = nz
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();
    let n = nz.len();
    let mut hits = 0u64;
    for mask in 0u64..1 << n {
        let s: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        if s >= w - 1e-9 {
            hits += 1;
        }
    }
    (w, hits as f64 / (1u64 << n) as f64)
}

fn mann_whitney_brute(a: &[f64], b: &[f64]) -> (f64, f64) {
    let u_of = |x: &[f64], y: &[f64]| {
        let mut u = 0.0f64;
        for p in x {
            for q in y {
                u += if p > q {
                    1.0
                } else if p == q {
                    0.5
                } else {
                    0.0
                };
            }
        }
        u
    };
    let prod = (a.len() * b.len()) as f64;
    let ua = u_of(a, b);
    let u = ua.min(prod - ua);
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u64..1 << n {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = {
            let x = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| pooled[i])
                .collect();
            let y = (0..n)
                .filter(|i| mask >> i & 1 == 0)
                .map(|i| pooled[i])
                .collect();
            (x, y)
        };
        let v = u_of(&x, &y);
        if v.min(prod - v) <= u + 1e-9 {
            hits += 1;
        }
        total += 1;
    }
    (u, hits as f64 / total as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn wilcoxon_matches_sign_enumeration(
        d in prop::collection::vec(prop_oneof![(-5i32..=5).prop_map(f64::from), -5.0f64..5.0], 1..13)
    ) {
        prop_assume!(d.iter().any(|x| *x != 0.0));
        let (w, p) = wilcoxon_signed_rank(&d, 0.0).unwrap();
        let (bw, bp) = wilcoxon_brute(&d);
        prop_assert!((w - bw).abs() < 1e-12);
        prop_assert!((p - bp).abs() < 1e-12);
    }

    #[test]
    fn mann_whitney_matches_label_enumeration(
        a in prop::collection::vec((0i32..6).prop_map(f64::from), 1..6),
        b in prop::collection::vec((0i32..6).prop_map(f64::from), 1..6),
    ) {
        let (u, p) = mann_whitney_u(&a, &b).unwrap();
        let (bu, bp) = mann_whitney_brute(&a, &b);
        prop_assert_eq!(u, bu);
        prop_assert!((p - bp).abs() < 1e-12);
    }

    #[test]
    fn spearman_closed_form_without_ties(perm in Just((0..8).collect::<Vec<usize>>()).prop_shuffle()) {
        let x: Vec<f64> = (0..8).map(|i| i as f64 * 1.5).collect();
        let y: Vec<f64> = perm.iter().map(|&p| p as f64).collect();
        let (rho, p) = spearman(&x, &y).unwrap();
        let d2: f64 = perm.iter().enumerate().map(|(i, &p)| (i as f64 - p as f64).powi(2)).sum();
        let closed = 1.0 - 6.0 * d2 / (8.0 * 63.0);
        prop_assert!((rho - closed).abs() < 1e-12);
        prop_assert!(p > 0.0 && p <= 1.0);
    }
}

#[test]
fn bootstrap_mean_coverage() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut covered = 0;
    for trial in 0..100 {
        // Box-Muller normal sample with mean 10, sd 2
        let xs: Vec<f64> = (0..40)
            .map(|_| {
                let (u1, u2): (f64, f64) = (rng.gen(), rng.gen());
                10.0 + 2.0
                    * (-2.0 * (1.0 - u1).ln()).sqrt()
                    * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let ci = run_bootstrap_mean(&xs, 400, trial).unwrap();
        if ci[0] <= 10.0 && 10.0 <= ci[1] {
            covered += 1;
        }
    }
    assert!((90..=99).contains(&covered), "coverage {covered}/100");
}

#[test]
fn replay_fixture_reproduces_run_statistics() {
    let data = load_replay(&replay_path()).unwrap();
    assert_eq!(data.runs.len(), 7);
    assert_eq!(
        data.runs
            .iter()
            .filter(|r| r.backend == "ibm_torino")
            .count(),
        3
    );
    assert_eq!(
        data.runs.iter().filter(|r| r.backend == "ibm_fez").count(),
        4
    );
    let days: Vec<u32> = data.runs.iter().map(|r| r.day).collect();
    assert_eq!(days, vec![0, 1, 3, 3, 4, 5, 16]);
    let s = summarize_replay(&data.runs, data.baseline.unwrap(), 100, 42).unwrap();
    let c = s.comparison.unwrap();
    assert!((c.t_stat - 5.33).abs() < 0.01);
    assert!((c.cohen_d - 2.01).abs() < 0.01);
    assert_eq!(c.wilcoxon_w, 28.0);
    let mw = s.mann_whitney.unwrap();
    assert_eq!(mw[0], 1.0);
    assert!((mw[1] - 0.114).abs() < 0.01);
    let [rho, p] = s.spearman_day.unwrap();
    assert!((rho - 0.396).abs() < 0.02 && (p - 0.379).abs() < 0.05);
    let fez = s.backends.iter().find(|b| b.backend == "ibm_fez").unwrap();
    assert!((fez.spearman_day.unwrap()[0] + 0.2).abs() < 1e-12);
    assert!((fez.mean_zne - 62.5225).abs() < 1e-9);
    let loo = s.leave_one_out.unwrap();
    assert!(loo.iter().all(|r| r.is_some()));
}
