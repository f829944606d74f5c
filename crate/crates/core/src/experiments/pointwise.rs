use super::{per_trial, stream_ids, ExperimentConfig, ExperimentKind, ExperimentReport, Runner};
use crate::error::Result;
use crate::gaf::sample_gaf;
use crate::stats::{median, median_stderr, quantile};

/// Medians over trials of (1/n) log|f_n(z_i)| at the probe points of K, against u(z_i).
pub fn pointwise_convergence_experiment(cfg: &ExperimentConfig, runner: &Runner) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        ExperimentKind::Pointwise,
        cfg,
        "max over probes of |median (1/n) log|f_n(z)| - u(z)| strictly decreases along the n list \
         and is below eps at the largest n",
    );
    let probes = cfg.compact.probe_points();
    let u: Vec<f64> = probes.iter().map(|z| cfg.weight.value(z)).collect();
    let mut worst_series = Vec::new();
    let mut upper_ok = true;
    for (idx, &n) in cfg.n.iter().enumerate() {
        let (basis, info) = runner.basis(cfg, n)?;
        report.provenance.bases.push(info);
        let un: Vec<f64> = {
            let mut ev = basis.evaluator();
            probes.iter().map(|z| ev.demailly_envelope(z)).collect()
        };
        // values[trial][probe]
        let values: Vec<Vec<f64>> = per_trial(cfg.trials, |t| {
            let s = sample_gaf(&basis, cfg.stream(stream_ids::POINTWISE, n, t));
            Ok(probes.iter().map(|z| s.normalized_log_modulus(z).value).collect())
        })?;
        let mut worst: f64 = 0.0;
        let mut worst_se = 0.0;
        let mut p99_excess = f64::NEG_INFINITY;
        for (i, ui) in u.iter().enumerate() {
            let column: Vec<f64> = values.iter().map(|v| v[i]).collect();
            let med = median(&column);
            let dist = (med - ui).abs();
            if dist >= worst {
                worst = dist;
                worst_se = median_stderr(&column);
            }
            let excess: Vec<f64> = column.iter().map(|v| v - un[i]).collect();
            p99_excess = p99_excess.max(quantile(&excess, 0.99));
        }
        report.row(n, "max_median_distance", worst, worst_se, cfg.trials, stream_ids::POINTWISE);
        report.row(n, "max_p99_log_modulus_minus_un", p99_excess, 0.0, cfg.trials, stream_ids::POINTWISE);
        if idx > 0 {
            upper_ok &= p99_excess <= cfg.eps;
        }
        worst_series.push(worst);
    }
    report.check("p99_upper_bound_below_eps", upper_ok);
    let decreasing = report.check("median_distance_decreasing", worst_series.windows(2).all(|w| w[1] < w[0]));
    let small = report.check("final_distance_below_eps", *worst_series.last().expect("n list is not empty") < cfg.eps);
    report.passed = decreasing && small;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CompactSubset, Domain, Weight};

    #[test]
    fn medians_at_origin_follow_explicit_law() {
        let mut cfg = ExperimentConfig::new(Domain::unit_disk(), Weight::Zero).unwrap();
        cfg.compact = CompactSubset::closed_disk(&cfg.domain, 0.3).unwrap();
        cfg.n = vec![5, 10, 20];
        cfg.trials = 400;
        let report = pointwise_convergence_experiment(&cfg, &Runner::new()).unwrap();
        assert!(report.passed, "{:?}", report.checks);
        // at z = 0 the median is (log S_n(0) + (1/2) log log 2) / n
        let expect = |n: f64| ((-0.5 * std::f64::consts::PI.ln()) + 0.5 * 2f64.ln().ln()).abs() / n;
        let d20 = report.value("max_median_distance", 20).unwrap();
        assert!(d20 >= expect(20.0) * 0.5 && d20 < 0.2, "{d20}");
    }
}
