use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::descriptive::{midranks, tie_group_sizes};
use super::{EffectLabel, StatsError, TestResult};

/// Largest pooled sample size for the exact Mann-Whitney distribution.
pub const EXACT_U_MAX_POOLED: usize = 40;
/// Largest number of nonzero differences for the exact signed-rank distribution.
pub const EXACT_SIGNED_RANK_MAX: usize = 20;

fn check_sample(x: &[f64], name: &str) -> Result<(), StatsError> {
    if x.is_empty() {
        return Err(StatsError::Contract(format!("{name} is empty")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::Contract(format!("{name} contains a non-finite value")));
    }
    Ok(())
}

fn upper_normal_tail(z: f64) -> f64 {
    let n = Normal::standard();
    1.0 - n.cdf(z)
}

/// Two-tailed p from integer tail counts of a discrete null distribution.
fn two_tailed(counts: &[u128], observed: usize) -> f64 {
    let total: u128 = counts.iter().sum();
    let le: u128 = counts[..=observed].iter().sum();
    let ge: u128 = counts[observed..].iter().sum();
    (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
}

/// Number of arrangements giving each value of U (0..=n1*n2) when `n1`
/// values are drawn without ties from a pooled sample of `n1 + n2`.
pub fn exact_u_distribution(n1: usize, n2: usize) -> Vec<u128> {
    // dp[c][u]: ways to place c of the first-sample values among the pooled
    // positions seen so far with U (pairs where a first-sample value exceeds
    // a second-sample value) equal to u.
    let max_u = n1 * n2;
    let mut dp = vec![vec![0u128; max_u + 1]; n1 + 1];
    dp[0][0] = 1;
    for pos in 0..(n1 + n2) {
        for c in (0..n1.min(pos + 1)).rev() {
            let below = pos - c;
            if below > n2 {
                continue;
            }
            for u in (0..=max_u - below).rev() {
                let w = dp[c][u];
                if w != 0 {
                    dp[c + 1][u + below] += w;
                }
            }
        }
    }
    dp.swap_remove(n1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MannWhitneyResult {
    pub n1: usize,
    pub n2: usize,
    /// U for the first sample: pairs with x > y plus half the tied pairs.
    pub u_x: f64,
    pub u_y: f64,
    pub u_min: f64,
    pub exact: bool,
    /// `statistic` is `u_x`; `effect_size` is Cliff's delta of x over y.
    pub test: TestResult,
}

/// Two-sided Mann-Whitney U test of `x` against `y`.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<MannWhitneyResult, StatsError> {
    check_sample(x, "first sample")?;
    check_sample(y, "second sample")?;
    let (n1, n2) = (x.len(), y.len());
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    let r1: f64 = ranks[..n1].iter().sum();
    let nn = (n1 * n2) as f64;
    let u_x = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    let u_y = nn - u_x;
    let ties = tie_group_sizes(&pooled);
    let n = n1 + n2;

    let (p, exact, method) = if ties.is_empty() && n <= EXACT_U_MAX_POOLED {
        let counts = exact_u_distribution(n1, n2);
        let observed = u_x.round() as usize;
        (two_tailed(&counts, observed), true, "mann-whitney exact")
    } else {
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>();
        let nf = n as f64;
        let var = nn / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
        let p = if var <= 0.0 {
            1.0
        } else {
            let z = ((u_x - nn / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
            (2.0 * upper_normal_tail(z)).min(1.0)
        };
        (p, false, "mann-whitney normal approximation (tie + continuity corrected)")
    };
    let delta = cliffs_delta_from_u(u_x, n1, n2)?;
    Ok(MannWhitneyResult {
        n1,
        n2,
        u_x,
        u_y,
        u_min: u_x.min(u_y),
        exact,
        test: TestResult::new(u_x, p, delta, method),
    })
}

/// Cliff's delta by direct pair comparison, with its magnitude band.
pub fn cliffs_delta(x: &[f64], y: &[f64]) -> Result<(f64, EffectLabel), StatsError> {
    check_sample(x, "first sample")?;
    check_sample(y, "second sample")?;
    let mut score: i64 = 0;
    for a in x {
        for b in y {
            if a > b {
                score += 1;
            } else if a < b {
                score -= 1;
            }
        }
    }
    let d = score as f64 / (x.len() * y.len()) as f64;
    Ok((d, EffectLabel::from_delta(d)))
}

/// Cliff's delta from a reported U for the first sample: 2U/(n1 n2) - 1.
pub fn cliffs_delta_from_u(u: f64, n1: usize, n2: usize) -> Result<f64, StatsError> {
    if n1 == 0 || n2 == 0 {
        return Err(StatsError::Contract("sample sizes must be positive".into()));
    }
    let nn = (n1 * n2) as f64;
    if !(0.0..=nn).contains(&u) {
        return Err(StatsError::Contract(format!("U = {u} outside [0, {nn}]")));
    }
    Ok(2.0 * u / nn - 1.0)
}

/// Counts of sign assignments giving each positive-rank sum, over ranks given
/// as integers (doubled midranks, so ties stay integral).
pub fn exact_signed_rank_distribution(int_ranks: &[usize]) -> Vec<u128> {
    let total: usize = int_ranks.iter().sum();
    let mut dp = vec![0u128; total + 1];
    dp[0] = 1;
    let mut reach = 0;
    for &r in int_ranks {
        for s in (0..=reach).rev() {
            let w = dp[s];
            if w != 0 {
                dp[s + r] += w;
            }
        }
        reach += r;
    }
    dp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub n_pairs: usize,
    pub n_nonzero: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub exact: bool,
    /// `statistic` is min(W+, W-); `effect_size` is the matched-pairs
    /// rank-biserial correlation (W+ - W-)/(W+ + W-), positive when post > pre.
    pub test: TestResult,
}

/// Two-sided Wilcoxon signed-rank test on `post - pre`, zero differences dropped.
pub fn wilcoxon_signed_rank(pre: &[f64], post: &[f64]) -> Result<WilcoxonResult, StatsError> {
    check_sample(pre, "pre")?;
    check_sample(post, "post")?;
    if pre.len() != post.len() {
        return Err(StatsError::Contract(format!(
            "paired samples differ in length ({} vs {})",
            pre.len(),
            post.len()
        )));
    }
    let diffs: Vec<f64> = pre.iter().zip(post).map(|(a, b)| b - a).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(StatsError::Degenerate("all paired differences are zero".into()));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w_minus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d < 0.0).map(|(_, r)| r).sum();
    let n = diffs.len();

    let (p, exact, method) = if n <= EXACT_SIGNED_RANK_MAX {
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let counts = exact_signed_rank_distribution(&doubled);
        let observed = (2.0 * w_plus).round() as usize;
        (two_tailed(&counts, observed), true, "wilcoxon signed-rank exact")
    } else {
        let nf = n as f64;
        let tie_term: f64 = tie_group_sizes(&abs).iter().map(|&t| (t * t * t - t) as f64).sum();
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let mu = nf * (nf + 1.0) / 4.0;
        let z = ((w_plus - mu).abs() - 0.5).max(0.0) / var.sqrt();
        (
            (2.0 * upper_normal_tail(z)).min(1.0),
            false,
            "wilcoxon signed-rank normal approximation (tie + continuity corrected)",
        )
    };
    let effect = (w_plus - w_minus) / (w_plus + w_minus);
    Ok(WilcoxonResult {
        n_pairs: pre.len(),
        n_nonzero: n,
        w_plus,
        w_minus,
        exact,
        test: TestResult::new(w_plus.min(w_minus), p, effect, method),
    })
}
