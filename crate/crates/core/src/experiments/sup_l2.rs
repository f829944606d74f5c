use rayon::prelude::*;

use super::{per_trial, stream_ids, ExperimentConfig, ExperimentKind, ExperimentReport, FittedConstant, Runner};
use crate::error::Result;
use crate::gaf::sample_gaf;
use crate::geometry::Point;
use crate::quadrature::QuadratureRule;
use crate::stats::pairwise_sum;

/// sup_K |f| / ‖f‖_{L²(ω)} from values on the maximum-modulus boundary of K and on the
/// quadrature nodes of ω.
pub(crate) fn sup_l2_ratio(boundary: &[Point], rule: &QuadratureRule, f: impl Fn(&Point) -> num_complex::Complex64) -> f64 {
    let sup = boundary.iter().map(|z| f(z).norm()).fold(0.0, f64::max);
    let terms: Vec<f64> = rule.nodes().iter().zip(rule.weights()).map(|(x, w)| w * f(x).norm_sqr()).collect();
    sup / pairwise_sum(&terms).sqrt()
}

/// Ensemble maximum of sup_K |f| / ‖f‖_{L²(ω)} over sampled GAFs and over the basis functions.
pub fn sup_l2_bound_check(cfg: &ExperimentConfig, runner: &Runner) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        ExperimentKind::SupL2,
        cfg,
        "the ensemble maximum ratio over all n and basis functions is finite and changes by less than 10% when the trials double",
    );
    let omega = cfg.omega()?;
    let rule = QuadratureRule::on_compact(&omega, cfg.k_orders.0, cfg.k_orders.1)?;
    let per_circle = if cfg.domain.dim() == 1 { 256 } else { 48 };
    let boundary = cfg.compact.max_modulus_boundary(per_circle);
    let mut finite = true;
    let mut overall_half: f64 = 0.0;
    let mut overall: f64 = 0.0;
    for &n in &cfg.n {
        let (basis, info) = runner.basis(cfg, n)?;
        report.provenance.bases.push(info);
        let ratios: Vec<f64> = per_trial(cfg.trials, |t| {
            let s = sample_gaf(&basis, cfg.stream(stream_ids::SUP_L2, n, t));
            Ok(sup_l2_ratio(&boundary, &rule, |x| s.eval(x)))
        })?;
        let d = basis.dim();
        let basis_max = (0..d)
            .into_par_iter()
            .map(|j| {
                let mut ev = basis.evaluator();
                let mut f = |x: &Point| ev.sigma(x)[j];
                let sup = boundary.iter().map(|z| f(z).norm()).fold(0.0, f64::max);
                let terms: Vec<f64> = rule.nodes().iter().zip(rule.weights()).map(|(x, w)| w * f(x).norm_sqr()).collect();
                sup / pairwise_sum(&terms).sqrt()
            })
            .collect::<Vec<f64>>()
            .into_iter()
            .fold(0.0, f64::max);
        let half = cfg.trials.div_ceil(2);
        let max_half = ratios[..half].iter().cloned().fold(0.0, f64::max);
        let max_all = ratios.iter().cloned().fold(0.0, f64::max);
        let stream = stream_ids::SUP_L2;
        report.row(n, "max_ratio_half_trials", max_half, 0.0, half, stream);
        report.row(n, "max_ratio", max_all, 0.0, cfg.trials, stream);
        report.row(n, "max_ratio_basis_functions", basis_max, 0.0, d, stream);
        finite &= ratios.iter().all(|r| r.is_finite()) && basis_max.is_finite();
        overall_half = overall_half.max(max_half).max(basis_max);
        overall = overall.max(max_all).max(basis_max);
    }
    report.fitted.insert("C2".into(), FittedConstant::plain(overall));
    report.fitted.insert("C2_half_trials".into(), FittedConstant::plain(overall_half));
    let finite = report.check("ratio_finite", finite && overall > 0.0);
    let stable = report.check("constant_stable_when_trials_double", overall - overall_half <= 0.1 * overall_half);
    report.passed = finite && stable;
    Ok(report)
}
