use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{per_trial, stream_ids, ExperimentConfig, ExperimentKind, ExperimentReport, Runner};
use crate::error::Result;
use crate::gaf::sample_gaf;
use crate::geometry::Point;
use crate::stats::{ks_critical_1pct, ks_exp1, pairwise_sum, pairwise_sum_complex};

/// One probe pair of the covariance check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceProbe {
    pub z: Point,
    pub w: Point,
    pub kernel: Complex64,
    pub empirical: Complex64,
    /// |empirical - kernel| / sqrt(B(z,z) B(w,w) / T).
    pub sigmas: f64,
}

pub(crate) fn probe_pairs(cfg: &ExperimentConfig) -> Vec<(Point, Point)> {
    let probes = cfg.compact.probe_points();
    let m = probes.len();
    (0..10).map(|i| (probes[(3 * i + 1) % m], probes[(7 * i + 4) % m])).collect()
}

/// Empirical E f(z) conj f(w) against B_n(z, w) on ten probe pairs, and the law of
/// |f(z)|² / S_n(z)² against Exp(1).
pub fn covariance_experiment(cfg: &ExperimentConfig, runner: &Runner) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        ExperimentKind::Covariance,
        cfg,
        "empirical covariance within 5 sigma of B_n(z, w) at every probe pair, and the KS distance of \
         |f(z)|² / S_n(z)² against Exp(1) below the 1% critical value at the first probe",
    );
    let pairs = probe_pairs(cfg);
    let mut points: Vec<Point> = Vec::new();
    for (z, w) in &pairs {
        points.push(*z);
        points.push(*w);
    }
    let mut all_ok = true;
    let mut probes_json = serde_json::Map::new();
    for &n in &cfg.n {
        let (basis, info) = runner.basis(cfg, n)?;
        report.provenance.bases.push(info);
        let values: Vec<Vec<Complex64>> = per_trial(cfg.trials, |t| {
            let s = sample_gaf(&basis, cfg.stream(stream_ids::COVARIANCE, n, t));
            Ok(points.iter().map(|p| s.eval(p)).collect())
        })?;
        let t = cfg.trials as f64;
        let mut ev = basis.evaluator();
        let mut probes = Vec::new();
        for (k, (z, w)) in pairs.iter().enumerate() {
            let prods: Vec<Complex64> = values.iter().map(|v| v[2 * k] * v[2 * k + 1].conj()).collect();
            let empirical = pairwise_sum_complex(&prods) / t;
            let kernel = ev.kernel(z, w);
            let scale = (ev.kernel_diag(z) * ev.kernel_diag(w) / t).sqrt();
            probes.push(CovarianceProbe { z: *z, w: *w, kernel, empirical, sigmas: (empirical - kernel).norm() / scale });
        }
        let worst = probes.iter().map(|p| p.sigmas).fold(0.0, f64::max);
        let mut pivot_dev: f64 = 0.0;
        let mut ks_first = f64::NAN;
        for (i, p) in points.iter().enumerate() {
            let s2 = ev.kernel_diag(p);
            let pivots: Vec<Complex64> = values.iter().map(|v| v[i] / s2.sqrt()).collect();
            let mean = pairwise_sum_complex(&pivots) / t;
            let m2 = pairwise_sum(&pivots.iter().map(|x| x.norm_sqr()).collect::<Vec<_>>()) / t;
            pivot_dev = pivot_dev.max(mean.norm()).max((m2 - 1.0).abs());
            if i == 0 {
                ks_first = ks_exp1(&pivots.iter().map(|x| x.norm_sqr()).collect::<Vec<_>>());
            }
        }
        let crit = ks_critical_1pct(cfg.trials);
        let stream = stream_ids::COVARIANCE;
        report.row(n, "max_covariance_sigmas", worst, 0.0, cfg.trials, stream);
        report.row(n, "pivot_ks_distance", ks_first, crit, cfg.trials, stream);
        report.row(n, "max_pivot_moment_deviation", pivot_dev, 4.0 / t.sqrt(), cfg.trials, stream);
        report.check(&format!("n{n}_pivot_moments_within_4_over_sqrt_T"), pivot_dev < 4.0 / t.sqrt());
        let ok = worst < 5.0 && ks_first < crit;
        all_ok &= ok;
        probes_json.insert(n.to_string(), serde_json::to_value(&probes).expect("probes serialize"));
    }
    report.artifacts.insert("probes".into(), serde_json::Value::Object(probes_json));
    report.passed = report.check("covariance_and_pivot_law", all_ok);
    Ok(report)
}

/// Monte Carlo E‖f_n‖²_{L²(K)} against Σ_j ‖σ_j‖²_{L²(K)} by quadrature.
pub fn truncation_tail_experiment(cfg: &ExperimentConfig, runner: &Runner) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        ExperimentKind::TailVariance,
        cfg,
        "Monte Carlo mean of ‖f_n‖² on K within 5% of the sum of ‖σ_j‖² on K at every n",
    );
    let rule = cfg.rule_on_compact()?;
    let mut ok = true;
    for &n in &cfg.n {
        let (basis, info) = runner.basis(cfg, n)?;
        report.provenance.bases.push(info);
        let d = basis.dim();
        // per-node |σ_j|², then ‖σ_j‖² = Σ_x w |σ_j(x)|²
        let sigma_norms: Vec<f64> = {
            let per_node: Vec<Vec<f64>> = rule
                .nodes()
                .par_chunks(256)
                .map(|c| {
                    let mut ev = basis.evaluator();
                    c.iter().flat_map(|x| ev.sigma(x).iter().map(|s| s.norm_sqr()).collect::<Vec<_>>()).collect()
                })
                .collect();
            let flat = per_node.concat();
            (0..d)
                .map(|j| {
                    let terms: Vec<f64> = rule.weights().iter().enumerate().map(|(i, w)| w * flat[i * d + j]).collect();
                    pairwise_sum(&terms)
                })
                .collect()
        };
        let expected = pairwise_sum(&sigma_norms);
        let norms: Vec<f64> = per_trial(cfg.trials, |t| {
            let s = sample_gaf(&basis, cfg.stream(stream_ids::TAIL_VARIANCE, n, t));
            let terms: Vec<f64> = rule.nodes().iter().zip(rule.weights()).map(|(x, w)| w * s.eval(x).norm_sqr()).collect();
            Ok(pairwise_sum(&terms))
        })?;
        let (mean, se) = crate::stats::mean_stderr(&norms);
        let rel = (mean - expected).abs() / expected;
        let stream = stream_ids::TAIL_VARIANCE;
        report.row(n, "mc_mean_l2_norm_sq", mean, se, cfg.trials, stream);
        report.row(n, "sum_sigma_l2_norm_sq", expected, 0.0, 1, stream);
        report.row(n, "relative_difference", rel, se / expected, cfg.trials, stream);
        ok &= rel < 0.05;
    }
    report.passed = report.check("within_5pct", ok);
    Ok(report)
}
