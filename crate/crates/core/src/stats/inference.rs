use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::special::{normal_cdf, t_quantile, t_sf};
use super::{mean, percentile, sample_sd};
use crate::error::{Error, Result};
use crate::qubo::Portfolio;
use crate::shots::ShotRecord;

/// Largest sample handled by the exact Wilcoxon distribution.
pub const WILCOXON_EXACT_MAX: usize = 20;
/// Largest `n` for the exact Spearman permutation test.
pub const SPEARMAN_EXACT_MAX: usize = 10;
/// Largest number of group assignments enumerated for Mann-Whitney.
const MANN_WHITNEY_EXACT_MAX: u64 = 2_000_000;

/// One-sided paired t-test of `scores` against a fixed `baseline`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedT {
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub t_stat: f64,
    pub df: usize,
    pub p_one_sided: f64,
    pub cohen_d: f64,
    pub ci95: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n: usize,
    pub mean_score: f64,
    pub sd_score: f64,
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub t_stat: f64,
    pub df: usize,
    pub p_one_sided: f64,
    pub cohen_d: f64,
    pub ci95: [f64; 2],
    pub wilcoxon_w: f64,
    pub wilcoxon_p: f64,
}

fn differences(scores: &[f64], baseline: f64) -> Vec<f64> {
    scores.iter().map(|s| s - baseline).collect()
}

pub fn paired_t_one_sided(scores: &[f64], baseline: f64) -> Result<PairedT> {
    let n = scores.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "paired t-test needs at least 2 scores, got {n}"
        )));
    }
    let d = differences(scores, baseline);
    let m = mean(&d);
    let sd = sample_sd(&d);
    // relative guard: differences equal up to rounding count as constant
    if sd <= 1e-12 * m.abs().max(1.0) {
        return Err(Error::ZeroVariance(
            "differences from the baseline have zero variance".into(),
        ));
    }
    let df = n - 1;
    let se = sd / (n as f64).sqrt();
    let t = m / se;
    let half = t_quantile(0.975, df as f64) * se;
    Ok(PairedT {
        mean_diff: m,
        sd_diff: sd,
        t_stat: t,
        df,
        p_one_sided: t_sf(t, df as f64),
        cohen_d: m / sd,
        ci95: [m - half, m + half],
    })
}

/// Paired t-test, effect size and Wilcoxon test of `scores` over `baseline`.
pub fn compare_to_baseline(scores: &[f64], baseline: f64) -> Result<ComparisonReport> {
    let t = paired_t_one_sided(scores, baseline)?;
    let (w, wp) = wilcoxon_signed_rank(scores, baseline)?;
    Ok(ComparisonReport {
        n: scores.len(),
        mean_score: mean(scores),
        sd_score: sample_sd(scores),
        mean_diff: t.mean_diff,
        sd_diff: t.sd_diff,
        t_stat: t.t_stat,
        df: t.df,
        p_one_sided: t.p_one_sided,
        cohen_d: t.cohen_d,
        ci95: t.ci95,
        wilcoxon_w: w,
        wilcoxon_p: wp,
    })
}

/// Average (mid) ranks, 1-based.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Signed-rank statistic `W` (sum of ranks of positive differences) and
/// its one-sided p-value `P(W' >= W)` under the null. Zero differences are
/// dropped. Up to [`WILCOXON_EXACT_MAX`] pairs the null distribution is
/// enumerated exactly (with tied ranks), beyond that a tie-corrected
/// normal approximation is used.
pub fn wilcoxon_signed_rank(scores: &[f64], baseline: f64) -> Result<(f64, f64)> {
    let d: Vec<f64> = differences(scores, baseline)
        .into_iter()
        .filter(|&x| x != 0.0)
        .collect();
    if d.is_empty() {
        return Err(Error::InvalidArgument(
            "all differences from the baseline are zero".into(),
        ));
    }
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let ranks = average_ranks(&abs);
    let w: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();
    let n = d.len();
    if n <= WILCOXON_EXACT_MAX {
        // doubled ranks are integers even with ties
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let total: usize = doubled.iter().sum();
        let mut ways = vec![0f64; total + 1];
        ways[0] = 1.0;
        for &r in &doubled {
            for s in (r..=total).rev() {
                ways[s] += ways[s - r];
            }
        }
        let observed = (2.0 * w).round() as usize;
        let upper: f64 = ways[observed..].iter().sum();
        return Ok((w, upper / 2f64.powi(n as i32)));
    }
    let nf = n as f64;
    let mu = nf * (nf + 1.0) / 4.0;
    let mut var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        var -= (t * t * t - t) / 48.0;
    }
    let z = (w - mu - 0.5) / var.sqrt();
    Ok((w, 1.0 - normal_cdf(z)))
}

fn u_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Mann-Whitney `U = min(U_A, U_B)` and its two-sided p-value. Small
/// samples use the exact permutation distribution of the pooled values
/// (ties included); large ones a normal approximation.
pub fn mann_whitney_u(group_a: &[f64], group_b: &[f64]) -> Result<(f64, f64)> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::InvalidArgument(
            "Mann-Whitney needs two non-empty groups".into(),
        ));
    }
    let (na, nb) = (group_a.len(), group_b.len());
    let prod = (na * nb) as f64;
    let ua = u_statistic(group_a, group_b);
    let u = ua.min(prod - ua);

    let pooled: Vec<f64> = group_a.iter().chain(group_b).copied().collect();
    let total = pooled.len();
    let assignments = crate::data::search_space_size(total as u64, na as u64)?;
    if assignments <= MANN_WHITNEY_EXACT_MAX.into() {
        let mut comb: Vec<usize> = (0..na).collect();
        let mut in_a = vec![false; total];
        let (mut hits, mut count) = (0u64, 0u64);
        let tol = 1e-9;
        loop {
            in_a.iter_mut().for_each(|f| *f = false);
            for &c in &comb {
                in_a[c] = true;
            }
            let (a, b): (Vec<f64>, Vec<f64>) = {
                let mut a = Vec::with_capacity(na);
                let mut b = Vec::with_capacity(nb);
                for (i, &v) in pooled.iter().enumerate() {
                    if in_a[i] {
                        a.push(v)
                    } else {
                        b.push(v)
                    }
                }
                (a, b)
            };
            let perm_ua = u_statistic(&a, &b);
            if perm_ua.min(prod - perm_ua) <= u + tol {
                hits += 1;
            }
            count += 1;
            let mut i = na;
            while i > 0 && comb[i - 1] == total - na + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            comb[i - 1] += 1;
            for j in i..na {
                comb[j] = comb[j - 1] + 1;
            }
        }
        return Ok((u, (hits as f64 / count as f64).min(1.0)));
    }
    let n = total as f64;
    let mut sorted = pooled;
    sorted.sort_by(f64::total_cmp);
    let tie_term: f64 = sorted
        .chunk_by(|a, b| a == b)
        .map(|g| {
            let t = g.len() as f64;
            t * t * t - t
        })
        .sum();
    let var = prod / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let z = ((prod / 2.0 - u).abs() - 0.5).max(0.0) / var.sqrt();
    Ok((u, (2.0 * (1.0 - normal_cdf(z))).min(1.0)))
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Spearman rank correlation (average ranks) and two-sided p-value: exact
/// over all permutations up to [`SPEARMAN_EXACT_MAX`] points, t
/// approximation beyond.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "spearman inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "spearman needs at least 3 pairs, got {n}"
        )));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    if rx.iter().all(|&r| r == rx[0]) || ry.iter().all(|&r| r == ry[0]) {
        return Err(Error::ZeroVariance("a spearman input is constant".into()));
    }
    let rho = pearson(&rx, &ry);
    if n <= SPEARMAN_EXACT_MAX {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut shuffled = vec![0.0; n];
        let (mut hits, mut total) = (0u64, 0u64);
        loop {
            for (slot, &p) in shuffled.iter_mut().zip(&perm) {
                *slot = ry[p];
            }
            if pearson(&rx, &shuffled).abs() >= rho.abs() - 1e-12 {
                hits += 1;
            }
            total += 1;
            if !next_permutation(&mut perm) {
                break;
            }
        }
        return Ok((rho, hits as f64 / total as f64));
    }
    if rho.abs() >= 1.0 {
        return Ok((rho, 0.0));
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    Ok((rho, (2.0 * t_sf(t.abs(), df)).min(1.0)))
}

fn check_same_len(a: &Portfolio, b: &Portfolio) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "portfolios have {} and {} candidates",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

fn intersection(a: &Portfolio, b: &Portfolio) -> usize {
    a.bits()
        .iter()
        .zip(b.bits())
        .filter(|(x, y)| **x && **y)
        .count()
}

/// `|A ∩ B| / |A ∪ B|`; two empty portfolios count as identical.
pub fn jaccard(a: &Portfolio, b: &Portfolio) -> Result<f64> {
    check_same_len(a, b)?;
    let inter = intersection(a, b);
    let union = a.cardinality() + b.cardinality() - inter;
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// `|A ∩ B| / min(|A|, |B|)`, equal to shared members over `k` when both
/// portfolios hold `k`.
pub fn overlap_coefficient(a: &Portfolio, b: &Portfolio) -> Result<f64> {
    check_same_len(a, b)?;
    let smaller = a.cardinality().min(b.cardinality());
    if smaller == 0 {
        return Ok(if a.cardinality() == b.cardinality() {
            1.0
        } else {
            0.0
        });
    }
    Ok(intersection(a, b) as f64 / smaller as f64)
}

/// Percentile-bootstrap 95% interval of the mean. Resample `r` draws
/// from ChaCha stream `r` of `seed`.
pub fn run_bootstrap_mean(scores: &[f64], b: usize, seed: u64) -> Result<[f64; 2]> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument(
            "bootstrap of an empty sample".into(),
        ));
    }
    if b == 0 {
        return Err(Error::InvalidArgument("bootstrap needs b >= 1".into()));
    }
    let n = scores.len();
    let mut means: Vec<f64> = crate::par_map(b, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        (0..n).map(|_| scores[rng.gen_range(0..n)]).sum::<f64>() / n as f64
    });
    means.sort_by(f64::total_cmp);
    Ok([percentile(&means, 2.5), percentile(&means, 97.5)])
}

/// One comparison per left-out run; a run whose removal leaves constant
/// differences yields an error in its slot.
pub fn leave_one_out(scores: &[f64], baseline: f64) -> Result<Vec<Result<ComparisonReport>>> {
    if scores.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "leave-one-out needs at least 3 runs, got {}",
            scores.len()
        )));
    }
    Ok((0..scores.len())
        .map(|skip| {
            let kept: Vec<f64> = scores
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, &s)| s)
                .collect();
            compare_to_baseline(&kept, baseline)
        })
        .collect())
}

fn weight(key: &str) -> usize {
    key.bytes().filter(|&b| b == b'1').count()
}

/// Fraction of shots whose bitstring has Hamming weight `k`.
pub fn feasible_shot_rate(record: &ShotRecord, k: usize) -> Result<f64> {
    if record.shots == 0 {
        return Err(Error::InvalidArgument("empty shot record".into()));
    }
    let feasible: u64 = record
        .counts
        .iter()
        .filter(|(key, _)| weight(key) == k)
        .map(|(_, &c)| c)
        .sum();
    Ok(feasible as f64 / record.shots as f64)
}

/// Most frequent weight-`k` bitstring; equal counts go to the
/// lexicographically smaller string.
pub fn mode_bitstring(record: &ShotRecord, k: usize) -> Result<Portfolio> {
    // BTreeMap iterates in lexicographic order, so a strict comparison
    // keeps the first of equal counts
    let mut best: Option<(&String, u64)> = None;
    for (key, &c) in &record.counts {
        if weight(key) == k && c > 0 && best.map_or(true, |(_, bc)| c > bc) {
            best = Some((key, c));
        }
    }
    let (key, _) = best.ok_or(Error::NoFeasibleShot { k })?;
    Portfolio::from_bitstring(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    const ZNE: [f64; 7] = [58.69, 52.70, 47.84, 69.64, 58.68, 58.72, 63.05];

    #[test]
    fn paired_t_reference() {
        let r = compare_to_baseline(&ZNE, 44.42).unwrap();
        assert!((r.mean_score - 58.474_285_714_285_71).abs() < 1e-9);
        assert!((r.sd_score - 6.978_418_773).abs() < 1e-8);
        assert!((r.t_stat - 5.328_4).abs() < 1e-3);
        assert!((r.p_one_sided - 0.000_890).abs() < 5e-6);
        assert!((r.cohen_d - 2.014_0).abs() < 1e-3);
        assert!((r.ci95[0] - 7.600).abs() < 0.01 && (r.ci95[1] - 20.508).abs() < 0.01);
        assert_eq!(r.df, 6);
        assert_eq!(r.wilcoxon_w, 28.0);
        assert_eq!(r.wilcoxon_p, 0.0078125);
        // closed form t = mean(d) sqrt(n) / sd(d)
        let d: Vec<f64> = ZNE.iter().map(|s| s - 44.42).collect();
        let closed = mean(&d) * 7f64.sqrt() / sample_sd(&d);
        assert!((r.t_stat - closed).abs() < 1e-12);
    }

    #[test]
    fn paired_t_edge_cases() {
        assert!(matches!(
            paired_t_one_sided(&[3.0, 3.0, 3.0], 1.0),
            Err(Error::ZeroVariance(_))
        ));
        let t = paired_t_one_sided(&[11.0, 9.0, 12.0, 8.0], 10.0).unwrap();
        assert!(t.t_stat.abs() < 1e-12);
        assert!((t.p_one_sided - 0.5).abs() < 1e-12);
        assert!(paired_t_one_sided(&[1.0], 0.0).is_err());
    }

    #[test]
    fn wilcoxon_small_cases() {
        assert_eq!(wilcoxon_signed_rank(&[2.0], 1.0).unwrap(), (1.0, 0.5));
        assert_eq!(
            wilcoxon_signed_rank(&[2.0, 3.0, 4.0], 1.0).unwrap(),
            (6.0, 0.125)
        );
        for n in 1..=10 {
            let s: Vec<f64> = (1..=n).map(|i| i as f64 * 0.7).collect();
            let (_, p) = wilcoxon_signed_rank(&s, 0.0).unwrap();
            assert_eq!(p, 2f64.powi(-(n as i32)));
        }
        assert!(wilcoxon_signed_rank(&[1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn wilcoxon_exact_matches_sign_enumeration() {
        // tied magnitudes and a negative difference
        let scores = [1.5, -0.5, 2.0, 0.5, 1.5, -2.5];
        let (w, p) = wilcoxon_signed_rank(&scores, 0.0).unwrap();
        let ranks = average_ranks(&scores.iter().map(|x: &f64| x.abs()).collect::<Vec<_>>());
        let mut at_least = 0;
        for mask in 0..64u32 {
            let s: f64 = (0..6)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| ranks[i])
                .sum();
            if s >= w - 1e-12 {
                at_least += 1;
            }
        }
        assert!((p - at_least as f64 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn mann_whitney_cases() {
        let (u, p) = mann_whitney_u(&ZNE[..3], &ZNE[3..]).unwrap();
        assert_eq!(u, 1.0);
        assert!((p - 4.0 / 35.0).abs() < 1e-12);
        assert_eq!(mann_whitney_u(&[3.0], &[3.0]).unwrap(), (0.5, 1.0));
        let (u, p) = mann_whitney_u(&[1.0, 2.0], &[10.0, 11.0]).unwrap();
        assert_eq!(u, 0.0);
        assert!((p - 2.0 / 6.0).abs() < 1e-12);
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }

    #[test]
    fn spearman_cases() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let (r, _) = spearman(&x, &[2.0, 4.0, 8.0, 16.0, 32.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let (r, _) = spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
        let days = [0.0, 1.0, 3.0, 3.0, 4.0, 5.0, 16.0];
        let (r, p) = spearman(&ZNE, &days).unwrap();
        assert!((r - 0.396_41).abs() < 1e-4);
        assert!((p - 0.3833).abs() < 1e-3);
        let (r, _) = spearman(&ZNE[3..], &days[3..]).unwrap();
        assert!((r + 0.2).abs() < 1e-12);
        assert!(spearman(&x, &x[..4]).is_err());
    }

    #[test]
    fn jaccard_and_overlap() {
        let a = Portfolio::from_bitstring("1100").unwrap();
        let b = Portfolio::from_bitstring("0011").unwrap();
        assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
        assert_eq!(jaccard(&a, &b).unwrap(), 0.0);
        let e = Portfolio::empty(4);
        assert_eq!(jaccard(&e, &e).unwrap(), 1.0);
        let x = Portfolio::from_indices(40, &(0..28).collect::<Vec<_>>()).unwrap();
        let y = Portfolio::from_indices(40, &(2..30).collect::<Vec<_>>()).unwrap();
        assert!((jaccard(&x, &y).unwrap() - 26.0 / 30.0).abs() < 1e-15);
        assert!((overlap_coefficient(&x, &y).unwrap() - 26.0 / 28.0).abs() < 1e-15);
        assert!(jaccard(&a, &Portfolio::empty(3)).is_err());
    }

    #[test]
    fn bootstrap_mean_cases() {
        assert_eq!(run_bootstrap_mean(&[4.0; 5], 100, 42).unwrap(), [4.0, 4.0]);
        let ci = run_bootstrap_mean(&ZNE, 100, 42).unwrap();
        assert_eq!(ci, run_bootstrap_mean(&ZNE, 100, 42).unwrap());
        assert!(ci[0] < 58.47 && ci[1] > 58.47);
        assert!(
            (ci[0] - 53.65).abs() < 1.5 && (ci[1] - 63.16).abs() < 1.5,
            "{ci:?}"
        );
        assert!(run_bootstrap_mean(&[], 10, 1).is_err());
    }

    #[test]
    fn leave_one_out_cases() {
        let loo = leave_one_out(&ZNE, 44.42).unwrap();
        assert_eq!(loo.len(), 7);
        let without_max = loo[3].as_ref().unwrap();
        assert!((without_max.mean_score - 56.613_333).abs() < 1e-5);
        for r in &loo {
            let r = r.as_ref().unwrap();
            assert!(r.p_one_sided > 0.0004 && r.p_one_sided < 0.0035);
        }
        let flat = leave_one_out(&[5.0, 5.0, 5.0], 1.0).unwrap();
        assert!(flat.iter().all(|r| r.is_err()));
        assert!(leave_one_out(&[1.0, 2.0], 0.0).is_err());
    }

    fn record(entries: &[(&str, u64)]) -> ShotRecord {
        let counts: BTreeMap<String, u64> =
            entries.iter().map(|(k, c)| (k.to_string(), *c)).collect();
        ShotRecord {
            shots: counts.values().sum(),
            counts,
            noise_scale: 1.0,
            seed: 0,
        }
    }

    #[test]
    fn shot_metrics() {
        let r = record(&[("0110", 30), ("1010", 30), ("1110", 50), ("0000", 10)]);
        assert!((feasible_shot_rate(&r, 2).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(feasible_shot_rate(&r, 1).unwrap(), 0.0);
        assert_eq!(mode_bitstring(&r, 2).unwrap().to_bitstring(), "0110");
        assert_eq!(mode_bitstring(&r, 3).unwrap().to_bitstring(), "1110");
        assert!(matches!(
            mode_bitstring(&r, 1),
            Err(Error::NoFeasibleShot { k: 1 })
        ));
    }
}
