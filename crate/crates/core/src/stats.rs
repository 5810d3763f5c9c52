//! Small statistics toolkit: means with standard errors, jackknife,
//! weighted slope fits, medians and a normal Kolmogorov-Smirnov statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, se: 0.0 }
    }
}

/// Sample mean and its standard error `s / sqrt(n)`.
pub fn mean_se(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate { value: f64::NAN, se: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Estimate { value: mean, se: f64::NAN };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Estimate { value: mean, se: (var / n as f64).sqrt() }
}

/// Jackknife standard error of a statistic given its leave-one-out values.
pub fn jackknife_se(full: f64, leave_one_out: &[f64]) -> Estimate {
    let n = leave_one_out.len() as f64;
    let bar = leave_one_out.iter().sum::<f64>() / n;
    let var = leave_one_out.iter().map(|t| (t - bar).powi(2)).sum::<f64>() * (n - 1.0) / n;
    Estimate { value: full, se: var.sqrt() }
}

/// Mean of `xs` with a jackknife standard error (coincides with `s/sqrt(n)`).
pub fn jackknife_mean(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let total: f64 = xs.iter().sum();
    if n < 2 {
        return Estimate { value: total / n.max(1) as f64, se: f64::NAN };
    }
    let loo: Vec<f64> = xs.iter().map(|x| (total - x) / (n - 1) as f64).collect();
    jackknife_se(total / n as f64, &loo)
}

/// Leave-one-out column means of a replica-by-parameter table.
pub(crate) fn leave_one_out_means(table: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = table.len();
    let width = table.first().map_or(0, Vec::len);
    let mut sums = vec![0.0; width];
    for row in table {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let means = sums.iter().map(|s| s / n as f64).collect();
    let loo = table.iter().map(|row| sums.iter().zip(row).map(|(s, v)| (s - v) / (n - 1) as f64).collect()).collect();
    (means, loo)
}

/// Result of a least-squares slope fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
}

/// Weighted least-squares line through `(x, y, se_y)` points.
///
/// Weights are `1/se^2`. When no point carries a positive standard error the
/// fit is unweighted and the slope error comes from the residual scatter.
pub fn fit_slope(points: &[(f64, f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::Parameter(format!("slope fit needs at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|(x, y, s)| !x.is_finite() || !y.is_finite() || s.is_nan()) {
        return Err(Error::Parameter("slope fit points must be finite".into()));
    }
    let min_se = points.iter().map(|p| p.2).filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min);
    let weighted = min_se.is_finite();
    let w: Vec<f64> = points.iter().map(|p| if weighted { 1.0 / p.2.max(min_se).powi(2) } else { 1.0 }).collect();
    let sw: f64 = w.iter().sum();
    let xbar = points.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let ybar = points.iter().zip(&w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxx: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.0 - xbar).powi(2)).sum();
    let spread = points.iter().map(|p| (p.0 - xbar).abs()).fold(0.0, f64::max);
    if sxx <= 0.0 || spread <= 1e-12 * (1.0 + xbar.abs()) {
        return Err(Error::DegenerateFit);
    }
    let sxy: f64 = points.iter().zip(&w).map(|(p, w)| w * (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let slope_se = if weighted {
        (1.0 / sxx).sqrt()
    } else {
        let ssr: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (ssr / (points.len() - 2) as f64 / sxx).sqrt()
    };
    Ok(SlopeFit { slope, slope_se, intercept })
}

/// Median of a slice (mean of the two central values for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

// Complementary error function, W. J. Cody's rational Chebyshev approximation
// in the Numerical Recipes `erfcc` form (relative error below 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Kolmogorov-Smirnov distance between the sample and N(0,1).
pub fn ks_statistic_normal(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = normal_cdf(*x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Pearson correlation coefficient.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}
