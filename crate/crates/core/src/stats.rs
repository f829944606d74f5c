//! Small statistics toolkit: deterministic reductions, Kolmogorov–Smirnov
//! distances, binomial intervals and the exponential-decay fit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Pairwise summation in a fixed tree order, so that the result only depends on the
/// input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let m = mean(xs);
    if n < 2 {
        return (m, f64::NAN);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Linear-interpolated quantile (type 7), q in [0, 1].
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Standard error of the sample median via the order-statistic interval
/// (a distribution-free approximation).
pub fn median_stderr(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let half = 0.5 * (n as f64).sqrt();
    let lo = ((0.5 * n as f64 - half).floor().max(0.0)) as usize;
    let hi = ((0.5 * n as f64 + half).ceil() as usize).min(n - 1);
    0.5 * (v[hi] - v[lo])
}

/// One-sample Kolmogorov–Smirnov distance against the Exp(1) law.
pub fn ks_exp1(samples: &[f64]) -> f64 {
    ks_one_sample(samples, |t| if t <= 0.0 { 0.0 } else { 1.0 - (-t).exp() })
}

pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(|p, q| p.total_cmp(q));
    y.sort_by(|p, q| p.total_cmp(q));
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / x.len() as f64 - j as f64 / y.len() as f64).abs());
    }
    d
}

/// Asymptotic 1% critical value of the one-sample KS distance.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

pub fn ks_critical_1pct_two_sample(n: usize, m: usize) -> f64 {
    1.6276 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Least-squares fit of log p = log C - D n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub log_c: f64,
    pub d: f64,
    pub d_stderr: f64,
    pub points: usize,
}

impl DecayFit {
    /// Lower end of the two-sided 95% interval for D.
    pub fn d_lower_95(&self) -> f64 {
        self.d - 1.96 * self.d_stderr
    }
}

/// Weighted least squares on (n, log p̂) with weights from the Wilson-centred binomial
/// variance, propagated through the logarithm. Rows with zero exceedances are dropped.
pub fn fit_exponential_decay(rows: &[(f64, usize, usize)]) -> Option<DecayFit> {
    let z = 1.96;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for &(n, hits, trials) in rows {
        if hits == 0 || trials == 0 {
            continue;
        }
        let t = trials as f64;
        let p_hat = hits as f64 / t;
        let center = (p_hat + z * z / (2.0 * t)) / (1.0 + z * z / t);
        let var_log = (1.0 - center) / (t * center);
        xs.push(n);
        ys.push(p_hat.ln());
        ws.push(1.0 / var_log);
    }
    if xs.len() < 2 {
        return None;
    }
    let sw: f64 = ws.iter().sum();
    let sx: f64 = ws.iter().zip(&xs).map(|(w, x)| w * x).sum();
    let sy: f64 = ws.iter().zip(&ys).map(|(w, y)| w * y).sum();
    let sxx: f64 = ws.iter().zip(&xs).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = ws.iter().zip(xs.iter().zip(&ys)).map(|(w, (x, y))| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    if det <= 0.0 {
        return None;
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    let mut var_slope = sw / det;
    if xs.len() > 2 {
        let chi2: f64 = ws
            .iter()
            .zip(xs.iter().zip(&ys))
            .map(|(w, (x, y))| w * (y - intercept - slope * x).powi(2))
            .sum();
        let scale = chi2 / (xs.len() - 2) as f64;
        var_slope *= scale.max(1.0);
    }
    Some(DecayFit { log_c: intercept, d: -slope, d_stderr: var_slope.sqrt(), points: xs.len() })
}
