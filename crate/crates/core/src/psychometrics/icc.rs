use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::StatsError;

/// Complete ratings: rows are rated targets (turns), columns are raters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingMatrix {
    rows: Vec<Vec<f64>>,
}

impl RatingMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        if rows.len() < 2 {
            return Err(StatsError::Contract("rating matrix needs at least 2 rows".into()));
        }
        let k = rows[0].len();
        if k < 2 {
            return Err(StatsError::Contract("rating matrix needs at least 2 raters".into()));
        }
        if rows.iter().any(|r| r.len() != k) {
            return Err(StatsError::Contract("rating matrix has missing cells".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(StatsError::Contract("rating matrix has a non-finite cell".into()));
        }
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IccResult {
    pub icc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub n: usize,
    pub k: usize,
    pub ms_rows: f64,
    pub ms_cols: f64,
    pub ms_error: f64,
}

/// ICC(2,1): two-way random effects, absolute agreement, single rater.
///
/// Confidence bounds follow McGraw and Wong (1996) with Satterthwaite degrees
/// of freedom. They are NaN when the F quantiles are undefined.
pub fn icc_2_1(m: &RatingMatrix, confidence: f64) -> Result<IccResult, StatsError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::Contract(format!("confidence {confidence} not in (0, 1)")));
    }
    let (n, k) = (m.n(), m.k());
    let (nf, kf) = (n as f64, k as f64);
    let grand = m.rows.iter().flatten().sum::<f64>() / (nf * kf);
    let row_means: Vec<f64> = m.rows.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let col_means: Vec<f64> = (0..k).map(|j| m.rows.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let ss_total: f64 = m.rows.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    if ss_total == 0.0 {
        return Err(StatsError::Degenerate("all ratings are identical".into()));
    }
    // Identical columns: MS_E = MS_C = 0 exactly, whatever the rounding below.
    if m.rows.iter().all(|r| r.iter().all(|v| *v == r[0])) {
        let ss_rows = kf * row_means.iter().map(|v| (v - grand).powi(2)).sum::<f64>();
        return Ok(IccResult {
            icc: 1.0,
            ci_low: 1.0,
            ci_high: 1.0,
            confidence,
            n,
            k,
            ms_rows: ss_rows / (nf - 1.0),
            ms_cols: 0.0,
            ms_error: 0.0,
        });
    }
    let ss_rows = kf * row_means.iter().map(|v| (v - grand).powi(2)).sum::<f64>();
    let ss_cols = nf * col_means.iter().map(|v| (v - grand).powi(2)).sum::<f64>();
    let ss_err: f64 = m
        .rows
        .iter()
        .zip(&row_means)
        .flat_map(|(r, rm)| r.iter().zip(&col_means).map(move |(v, cm)| (v - rm - cm + grand).powi(2)))
        .sum();
    let msr = ss_rows / (nf - 1.0);
    let msc = ss_cols / (kf - 1.0);
    let mse = ss_err / ((nf - 1.0) * (kf - 1.0));

    let icc = (msr - mse) / (msr + (kf - 1.0) * mse + kf * (msc - mse) / nf);
    let (ci_low, ci_high) = confidence_bounds(icc, msr, msc, mse, nf, kf, 1.0 - confidence);
    Ok(IccResult {
        icc,
        ci_low,
        ci_high,
        confidence,
        n,
        k,
        ms_rows: msr,
        ms_cols: msc,
        ms_error: mse,
    })
}

fn f_quantile(p: f64, d1: f64, d2: f64) -> f64 {
    match FisherSnedecor::new(d1, d2) {
        Ok(f) => f.inverse_cdf(p),
        Err(_) => f64::NAN,
    }
}

fn confidence_bounds(icc: f64, msr: f64, msc: f64, mse: f64, n: f64, k: f64, alpha: f64) -> (f64, f64) {
    let a = k * icc / (n * (1.0 - icc));
    let b = 1.0 + k * icc * (n - 1.0) / (n * (1.0 - icc));
    let v = (a * msc + b * mse).powi(2) / ((a * msc).powi(2) / (k - 1.0) + (b * mse).powi(2) / ((n - 1.0) * (k - 1.0)));
    let q = 1.0 - alpha / 2.0;
    let fu = f_quantile(q, n - 1.0, v);
    let fl = f_quantile(q, v, n - 1.0);
    let c = k * msc + (k * n - k - n) * mse;
    let low = n * (msr - fu * mse) / (fu * c + n * msr);
    let high = n * (fl * msr - mse) / (c + n * fl * msr);
    (low, high)
}
