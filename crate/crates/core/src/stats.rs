//! Hypothesis tests used for cohort analyses.

use serde::{Deserialize, Serialize};
use statrs::function::beta::checked_beta_reg;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    #[default]
    TwoSided,
    /// H1: statistic below zero.
    Less,
    /// H1: statistic above zero.
    Greater,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Pearson,
    PooledT,
    WelchT,
    Williams,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// r for Pearson, t otherwise.
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    pub tail: Tail,
    pub method: Method,
}

/// Upper tail probability P(T > t) of Student's t with `df` degrees of
/// freedom, via the regularized incomplete beta function.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    if t.is_nan() || !(df > 0.0) {
        return f64::NAN;
    }
    if t == f64::INFINITY {
        return 0.0;
    }
    if t == f64::NEG_INFINITY {
        return 1.0;
    }
    let x = df / (df + t * t);
    let half_tail = 0.5 * checked_beta_reg(df / 2.0, 0.5, x).unwrap_or(f64::NAN);
    if t >= 0.0 {
        half_tail
    } else {
        1.0 - half_tail
    }
}

pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    1.0 - student_t_sf(t, df)
}

fn t_p_value(t: f64, df: f64, tail: Tail) -> f64 {
    let p = match tail {
        Tail::TwoSided => 2.0 * student_t_sf(t.abs(), df),
        Tail::Greater => student_t_sf(t, df),
        Tail::Less => student_t_sf(-t, df),
    };
    p.clamp(0.0, 1.0)
}

/// Equal-length finite sequences with at least three pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairedSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidArgument(format!(
                "paired sample lengths differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 3 {
            return Err(Error::InvalidArgument(format!("need n >= 3, got {}", x.len())));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite value in paired sample".into()));
        }
        Ok(PairedSample { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sum of squared deviations from the mean.
fn sum_sq_dev(v: &[f64], m: f64) -> f64 {
    v.iter().map(|x| (x - m) * (x - m)).sum()
}

/// Pearson's r with a two-sided p-value from `t = r √((n−2)/(1−r²))`.
pub fn pearson(s: &PairedSample) -> Result<TestResult> {
    let n = s.len() as f64;
    let mx = mean(&s.x);
    let my = mean(&s.y);
    let sxx = sum_sq_dev(&s.x, mx);
    let syy = sum_sq_dev(&s.y, my);
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantInput);
    }
    let sxy: f64 = s.x.iter().zip(&s.y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = n - 2.0;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        t_p_value(t, df, Tail::TwoSided)
    };
    Ok(TestResult {
        statistic: r,
        df,
        p_value,
        tail: Tail::TwoSided,
        method: Method::Pearson,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variance {
    #[default]
    Pooled,
    Welch,
}

/// Two-sample t-test of mean(a) − mean(b).
pub fn unpaired_t(a: &[f64], b: &[f64], variance: Variance, tail: Tail) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 values per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in t-test input".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sum_sq_dev(a, ma) / (na - 1.0), sum_sq_dev(b, mb) / (nb - 1.0));
    if va == 0.0 && vb == 0.0 {
        return Err(Error::ConstantInput);
    }
    let (se, df, method) = match variance {
        Variance::Pooled => {
            let df = na + nb - 2.0;
            let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((sp2 * (1.0 / na + 1.0 / nb)).sqrt(), df, Method::PooledT)
        }
        Variance::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
            ((qa + qb).sqrt(), df, Method::WelchT)
        }
    };
    let t = (ma - mb) / se;
    Ok(TestResult {
        statistic: t,
        df,
        p_value: t_p_value(t, df, tail),
        tail,
        method,
    })
}

/// Williams' t for the difference between two dependent correlations
/// `r13` and `r23` that share variable 3, given `r12` between the other two.
pub fn williams_t(r13: f64, r23: f64, r12: f64, n: usize) -> Result<TestResult> {
    for (name, r) in [("r13", r13), ("r23", r23), ("r12", r12)] {
        if !(r > -1.0 && r < 1.0) {
            return Err(Error::InvalidArgument(format!("{name} = {r} outside (-1, 1)")));
        }
    }
    if n < 4 {
        return Err(Error::InvalidArgument(format!("need n >= 4, got {n}")));
    }
    // Grouped so that swapping r13 and r23 gives bit-identical K.
    let k = 1.0 - r12 * r12 - (r13 * r13 + r23 * r23) + 2.0 * r12 * (r13 * r23);
    if !(k > 0.0) {
        return Err(Error::Numeric(format!(
            "impossible correlation triple (determinant {k})"
        )));
    }
    let nf = n as f64;
    let rbar = 0.5 * (r13 + r23);
    let denom = 2.0 * k * (nf - 1.0) / (nf - 3.0) + rbar * rbar * (1.0 - r12).powi(3);
    let t = (r13 - r23) * ((nf - 1.0) * (1.0 + r12) / denom).sqrt();
    let df = nf - 3.0;
    Ok(TestResult {
        statistic: t,
        df,
        p_value: t_p_value(t, df, Tail::TwoSided),
        tail: Tail::TwoSided,
        method: Method::Williams,
    })
}

/// `min(1, p·m)` elementwise.
pub fn bonferroni(p_values: &[f64], m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::InvalidArgument("bonferroni needs m >= 1".into()));
    }
    Ok(p_values.iter().map(|p| (p * m as f64).min(1.0)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub sd: f64,
}

pub fn group_summary(values: &[f64]) -> Result<Summary> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 values, got {}",
            values.len()
        )));
    }
    let m = mean(values);
    Ok(Summary {
        n: values.len(),
        mean: m,
        sd: (sum_sq_dev(values, m) / (values.len() - 1) as f64).sqrt(),
    })
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Ordinary least squares line `y = slope·x + intercept`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("least squares needs >= 2 pairs".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx = sum_sq_dev(x, mx);
    if sxx == 0.0 {
        return Err(Error::ConstantInput);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
