use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Both samples at or below this size use exact enumeration.
pub const EXACT_MAX: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PMethod {
    Exact,
    Normal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSum {
    /// Mann–Whitney U of the first sample.
    pub u: f64,
    /// Rank sum of the first sample.
    pub w: f64,
    pub p: f64,
    pub method: PMethod,
}

/// Midranks (1-based) of the pooled sample, and the tie-group sizes.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; n];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("rank-sum samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Degenerate("NaN in rank-sum sample".into()));
    }
    Ok(())
}

fn pooled_ranks(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<usize>, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let w = ranks[..a.len()].iter().sum();
    (ranks, ties, w)
}

/// Normal approximation with tie and continuity correction.
pub fn ranksum_normal(a: &[f64], b: &[f64]) -> Result<RankSum> {
    check(a, b)?;
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let (_, ties, w) = pooled_ranks(a, b);
    let mean = n1 * (n + 1.0) / 2.0;
    let tie_sum: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)).max(1.0));
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let std = Normal::standard();
        (2.0 * (1.0 - std.cdf(z))).min(1.0)
    };
    Ok(RankSum {
        u: w - n1 * (n1 + 1.0) / 2.0,
        w,
        p,
        method: PMethod::Normal,
    })
}

/// Exact two-sided P from the permutation distribution of the rank sum,
/// conditional on the observed (mid)ranks. Ranks are doubled so ties stay
/// integral; counts are built by a subset-sum recursion.
pub fn ranksum_exact(a: &[f64], b: &[f64]) -> Result<RankSum> {
    check(a, b)?;
    let (n1, n) = (a.len(), a.len() + b.len());
    let (ranks, _, w) = pooled_ranks(a, b);
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();

    // counts[k][s]: subsets of size k with doubled rank sum s.
    let mut counts = vec![vec![0f64; max_sum + 1]; n1 + 1];
    counts[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=n1).rev() {
            let (lo, hi) = counts.split_at_mut(k);
            let prev = &lo[k - 1];
            let cur = &mut hi[0];
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let dist = &counts[n1];
    let total: f64 = dist.iter().sum();
    let centre2 = n1 * (n + 1); // twice the null mean, always integral
    let obs = ((2.0 * w).round() as i64 - centre2 as i64).abs();
    let extreme: f64 = dist
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - centre2 as i64).abs() >= obs)
        .map(|(_, c)| c)
        .sum();
    Ok(RankSum {
        u: w - (n1 * (n1 + 1)) as f64 / 2.0,
        w,
        p: (extreme / total).min(1.0),
        method: PMethod::Exact,
    })
}

/// Wilcoxon rank-sum test: exact when both samples have at most
/// [`EXACT_MAX`] values, otherwise the corrected normal approximation.
pub fn wilcoxon_ranksum(a: &[f64], b: &[f64]) -> Result<RankSum> {
    if a.len() <= EXACT_MAX && b.len() <= EXACT_MAX {
        ranksum_exact(a, b)
    } else {
        ranksum_normal(a, b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TScale {
    /// `t = |R|·√(N−1)/√(1−R²)`, the scaling used by the method.
    #[default]
    NMinus1,
    /// The textbook `√(N−2)`.
    NMinus2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PearsonResult {
    pub r: f64,
    pub t: f64,
    pub p: f64,
    pub n: usize,
    pub significant_r: f64,
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} vs {} points", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::Degenerate("zero variance in correlation input".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided P of a Student t statistic with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// t statistic of a correlation `r` over `n` points (infinite at |r| = 1).
pub fn t_statistic(r: f64, n: usize, scale: TScale) -> f64 {
    let k = match scale {
        TScale::NMinus1 => n.saturating_sub(1) as f64,
        TScale::NMinus2 => n.saturating_sub(2) as f64,
    };
    if r.abs() >= 1.0 {
        f64::INFINITY
    } else {
        r.abs() * k.sqrt() / (1.0 - r * r).sqrt()
    }
}

pub fn pearson_significance(x: &[f64], y: &[f64], scale: TScale, alpha: f64) -> Result<PearsonResult> {
    if x.len() < 3 {
        return Err(Error::Degenerate(format!("{} points, need at least 3", x.len())));
    }
    let r = pearson_r(x, y)?;
    let n = x.len();
    let t = t_statistic(r, n, scale);
    let p = t_two_sided_p(t, (n - 2) as f64);
    Ok(PearsonResult {
        r,
        t,
        p,
        n,
        significant_r: if p <= alpha { r } else { 0.0 },
    })
}

/// Sample mean and standard deviation (n − 1).
pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}
