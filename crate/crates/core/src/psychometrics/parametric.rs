use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::descriptive::{mean, sample_variance};
use super::StatsError;

fn finite(x: &[f64], name: &str) -> Result<(), StatsError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::Contract(format!("{name} contains a non-finite value")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-tailed, from t = r sqrt((n-2)/(1-r^2)) with n-2 degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::Contract(format!(
            "samples differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(StatsError::Contract("correlation needs at least 3 pairs".into()));
    }
    finite(x, "x")?;
    finite(y, "y")?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::Degenerate("zero variance in a correlated sample".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (x.len() - 2) as f64;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };
    Ok(Correlation { r, p_value, n: x.len() })
}

/// Standardized mean difference of `x` over `y` with the pooled SD.
pub fn cohens_d(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() < 2 || y.len() < 2 {
        return Err(StatsError::Contract("cohen's d needs at least 2 values per group".into()));
    }
    finite(x, "x")?;
    finite(y, "y")?;
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let pooled = ((n1 - 1.0) * sample_variance(x) + (n2 - 1.0) * sample_variance(y)) / (n1 + n2 - 2.0);
    if pooled == 0.0 {
        return Err(StatsError::Degenerate("zero pooled variance".into()));
    }
    Ok((mean(x) - mean(y)) / pooled.sqrt())
}

/// Cronbach's alpha over rows = respondents, columns = items.
pub fn cronbach_alpha(items: &[Vec<f64>]) -> Result<f64, StatsError> {
    if items.len() < 2 {
        return Err(StatsError::Contract("alpha needs at least 2 respondents".into()));
    }
    let k = items[0].len();
    if k < 2 {
        return Err(StatsError::Contract("alpha needs at least 2 items".into()));
    }
    if items.iter().any(|row| row.len() != k) {
        return Err(StatsError::Contract("ragged item matrix".into()));
    }
    for row in items {
        finite(row, "item matrix")?;
    }
    let item_var: f64 = (0..k)
        .map(|j| sample_variance(&items.iter().map(|row| row[j]).collect::<Vec<_>>()))
        .sum();
    let totals: Vec<f64> = items.iter().map(|row| row.iter().sum()).collect();
    let total_var = sample_variance(&totals);
    if total_var == 0.0 {
        return Err(StatsError::Degenerate("zero variance in total scores".into()));
    }
    let kf = k as f64;
    Ok(kf / (kf - 1.0) * (1.0 - item_var / total_var))
}
