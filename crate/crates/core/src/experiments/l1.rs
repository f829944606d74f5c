use rayon::prelude::*;

use super::{per_trial, stream_ids, ExperimentConfig, ExperimentKind, ExperimentReport, Runner};
use crate::error::Result;
use crate::gaf::{log_modulus, sample_gaf};
use crate::geometry::Point;
use crate::quadrature::QuadratureRule;
use crate::stats::{mean_stderr, pairwise_sum, quantile};

pub(crate) const CLAMP_FRACTION_LIMIT: f64 = 1e-3;

pub(crate) struct TrialL1 {
    pub error: f64,
    pub pivot: f64,
    pub clamped: usize,
}

/// ‖(1/n) log|f| - u‖_{L¹(K)} and ‖(1/n) log(|f| / S_n)‖_{L¹(K)} for one sample.
pub(crate) fn l1_terms(
    rule: &QuadratureRule,
    u: &[f64],
    log_s: &[f64],
    n: u32,
    f: impl Fn(&Point) -> num_complex::Complex64,
) -> TrialL1 {
    let nf = n as f64;
    let mut clamped = 0;
    let mut err = Vec::with_capacity(rule.len());
    let mut piv = Vec::with_capacity(rule.len());
    for (i, (x, w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
        let lm = log_modulus(f(x), n);
        if lm.clamped {
            clamped += 1;
        }
        err.push(w * (lm.value - u[i]).abs());
        piv.push(w * (lm.value - log_s[i] / nf).abs());
    }
    TrialL1 { error: pairwise_sum(&err), pivot: pairwise_sum(&piv), clamped }
}

/// Monte Carlo L¹(K) error of (1/n) log|f_n| against u for every n.
pub fn l1_convergence_experiment(cfg: &ExperimentConfig, runner: &Runner) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        ExperimentKind::L1,
        cfg,
        "mean L1(K) error strictly decreases along the n list and the last mean is below a third of the first",
    );
    let rule = cfg.rule_on_compact()?;
    let u: Vec<f64> = rule.nodes().iter().map(|x| cfg.weight.value(x)).collect();
    let mut means = Vec::new();
    let mut triangle_ok = true;
    let mut clamp_ok = true;
    for &n in &cfg.n {
        let (basis, info) = runner.basis(cfg, n)?;
        report.provenance.bases.push(info);
        let log_s: Vec<f64> = rule
            .nodes()
            .par_chunks(256)
            .map(|c| {
                let mut ev = basis.evaluator();
                c.iter().map(|x| 0.5 * ev.log_kernel_diag(x)).collect::<Vec<f64>>()
            })
            .collect::<Vec<_>>()
            .concat();
        let nf = n as f64;
        let env_terms: Vec<f64> =
            rule.weights().iter().zip(&log_s).zip(&u).map(|((w, ls), ui)| w * (ls / nf - ui).abs()).collect();
        let envelope_error = pairwise_sum(&env_terms);
        let trials: Vec<TrialL1> = per_trial(cfg.trials, |t| {
            let s = sample_gaf(&basis, cfg.stream(stream_ids::L1, n, t));
            Ok(l1_terms(&rule, &u, &log_s, n, |x| s.eval(x)))
        })?;
        let errors: Vec<f64> = trials.iter().map(|t| t.error).collect();
        let pivots: Vec<f64> = trials.iter().map(|t| t.pivot).collect();
        for t in &trials {
            triangle_ok &= envelope_error <= t.error + t.pivot + 1e-12 * (1.0 + envelope_error);
        }
        let clamps: usize = trials.iter().map(|t| t.clamped).sum();
        let clamp_fraction = clamps as f64 / (rule.len() * cfg.trials) as f64;
        if clamp_fraction > CLAMP_FRACTION_LIMIT {
            clamp_ok = false;
            report.notes.push(format!("n = {n}: log-modulus clamp hit on {clamp_fraction:.2e} of node evaluations"));
        }
        let (m, se) = mean_stderr(&errors);
        let (pm, pse) = mean_stderr(&pivots);
        let stream = stream_ids::L1;
        report.row(n, "mean_l1_error", m, se, cfg.trials, stream);
        report.row(n, "q10_l1_error", quantile(&errors, 0.1), 0.0, cfg.trials, stream);
        report.row(n, "median_l1_error", quantile(&errors, 0.5), 0.0, cfg.trials, stream);
        report.row(n, "q90_l1_error", quantile(&errors, 0.9), 0.0, cfg.trials, stream);
        report.row(n, "l1_un_minus_u", envelope_error, 0.0, 1, stream);
        report.row(n, "mean_l1_pivot_term", pm, pse, cfg.trials, stream);
        report.row(n, "clamp_fraction", clamp_fraction, 0.0, cfg.trials, stream);
        means.push(m);
    }
    report.check("triangle_inequality_every_run", triangle_ok);
    report.check("clamp_fraction_below_limit", clamp_ok);
    let decreasing = report.check("mean_strictly_decreasing", means.windows(2).all(|w| w[1] < w[0]));
    let third = report.check("final_below_third_of_first", means.last() < Some(&(means[0] / 3.0)));
    report.passed = decreasing && third;
    Ok(report)
}
