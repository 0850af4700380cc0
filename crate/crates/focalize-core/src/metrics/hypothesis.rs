use serde::{Deserialize, Serialize};

use super::special::{f_upper_tail, student_t_two_tailed};
use super::MetricsError;

/// A test statistic with its p-value. `df2` is set only for F tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df2: Option<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n - 1 denominator).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

// |r| this close to 1 is a perfect linear relation up to rounding.
const PERFECT_R: f64 = 1e-14;

/// Pearson's r with a two-tailed p-value from t = r sqrt((n-2)/(1-r^2)),
/// df = n - 2. Perfect correlations report p = 0.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<TestResult, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(MetricsError::InsufficientData("pearson needs at least 3 pairs"));
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let mut r = (sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    if 1.0 - r.abs() <= PERFECT_R {
        r = r.signum();
        return Ok(TestResult {
            statistic: r,
            p_value: 0.0,
            df,
            df2: None,
        });
    }
    let t = r * libm::sqrt(df / (1.0 - r * r));
    Ok(TestResult {
        statistic: r,
        p_value: student_t_two_tailed(t, df),
        df,
        df2: None,
    })
}

/// The t statistic behind a Pearson r, for reporting.
pub fn pearson_t(r: f64, n: usize) -> f64 {
    r * libm::sqrt((n as f64 - 2.0) / (1.0 - r * r))
}

/// One-way ANOVA: F = MS_between / MS_within with df (k - 1, N - k).
pub fn anova_oneway<G: AsRef<[f64]>>(groups: &[G]) -> Result<TestResult, MetricsError> {
    let k = groups.len();
    if k < 2 || groups.iter().any(|g| g.as_ref().len() < 2) {
        return Err(MetricsError::InsufficientData(
            "anova needs at least 2 groups of at least 2 values",
        ));
    }
    let total: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    let grand = groups.iter().flat_map(|g| g.as_ref()).sum::<f64>() / total as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let g = g.as_ref();
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand) * (m - grand);
        ss_within += g.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    }
    let df1 = (k - 1) as f64;
    let df2 = (total - k) as f64;
    let ms_between = ss_between / df1;
    let ms_within = ss_within / df2;
    let f = if ms_between == 0.0 {
        0.0
    } else if ms_within == 0.0 {
        f64::INFINITY
    } else {
        ms_between / ms_within
    };
    Ok(TestResult {
        statistic: f,
        p_value: f_upper_tail(f, df1, df2),
        df: df1,
        df2: Some(df2),
    })
}

/// Welch's unequal-variance t-test (mean of `a` minus mean of `b`) with
/// Welch-Satterthwaite degrees of freedom and a two-tailed p-value.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TestResult, MetricsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(MetricsError::InsufficientData(
            "welch needs at least 2 values per sample",
        ));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let va = sample_variance(a) / na;
    let vb = sample_variance(b) / nb;
    let se2 = va + vb;
    if se2 == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let t = (mean(a) - mean(b)) / libm::sqrt(se2);
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(TestResult {
        statistic: t,
        p_value: student_t_two_tailed(t, df),
        df,
        df2: None,
    })
}
