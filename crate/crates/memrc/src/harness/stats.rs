//! Small statistics helpers for reports and acceptance checks.

/// Mean and sample standard deviation (n-1 denominator; 0 for fewer than two
/// samples).
pub fn mean_stdev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Exact one-sided Wilcoxon signed-rank p-value for the alternative
/// "a tends to be smaller than b" on paired samples. Zero differences are
/// dropped; ties among magnitudes get midranks. Exact for n <= 30 pairs.
pub fn wilcoxon_signed_rank_less(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "wilcoxon needs paired samples");
    let mut diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return 1.0;
    }
    assert!(n <= 30, "exact wilcoxon limited to 30 pairs, got {n}");
    diffs.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    // midranks over magnitude ties
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[j + 1].abs() == diffs[i].abs() {
            j += 1;
        }
        let midrank = (i + j + 2) as f64 / 2.0;
        for r in ranks.iter_mut().take(j + 1).skip(i) {
            *r = midrank;
        }
        i = j + 1;
    }
    // statistic: sum of ranks of positive differences (small supports a < b)
    let w_plus: f64 =
        diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| *r).sum();

    // exact null distribution of W+ over all 2^n sign assignments; work in
    // doubled ranks so midranks stay integral
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max_sum + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max_sum).rev() {
            counts[s] += counts[s - r];
        }
    }
    let total: f64 = 2f64.powi(n as i32);
    let w_doubled = (w_plus * 2.0).round() as usize;
    let p: f64 = counts.iter().take(w_doubled + 1).sum::<f64>() / total;
    p.min(1.0)
}
