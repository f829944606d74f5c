use num_complex::Complex64;
use rayon::prelude::*;

use super::l1::l1_terms;
use super::{stream_ids, ExperimentConfig, ExperimentKind, ExperimentReport, Runner};
use crate::error::Result;
use crate::gaf::sample_gaf;
use crate::geometry::Point;

/// One sampled f_n per n as an explicit polynomial (monomial exponents and coefficients),
/// with its L¹(K) distance from u after the 1/n log-modulus normalization.
pub fn horcor_demo(cfg: &ExperimentConfig, runner: &Runner) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        ExperimentKind::Horcor,
        cfg,
        "every emitted polynomial re-evaluates to the sample within 1e-8 relative after a JSON round trip",
    );
    let rule = cfg.rule_on_compact()?;
    let u: Vec<f64> = rule.nodes().iter().map(|x| cfg.weight.value(x)).collect();
    let probes = cfg.compact.probe_points();
    let mut roundtrip_ok = true;
    let mut polys = serde_json::Map::new();
    for &n in &cfg.n {
        let (basis, info) = runner.basis(cfg, n)?;
        report.provenance.bases.push(info);
        let s = sample_gaf(&basis, cfg.stream(stream_ids::HORCOR, n, 0));
        let log_s: Vec<f64> = rule
            .nodes()
            .par_chunks(256)
            .map(|c| {
                let mut ev = basis.evaluator();
                c.iter().map(|x| 0.5 * ev.log_kernel_diag(x)).collect::<Vec<f64>>()
            })
            .collect::<Vec<_>>()
            .concat();
        let terms = l1_terms(&rule, &u, &log_s, n, |x| s.eval(x));
        report.row(n, "l1_error", terms.error, 0.0, 1, stream_ids::HORCOR);

        let poly = serde_json::json!({
            "exponents": basis.monomials().exponents(),
            "coefficients": s.monomial_coefficients().iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
        });
        let text = poly.to_string();
        let back: serde_json::Value = serde_json::from_str(&text)?;
        let exps: Vec<[u32; 2]> = serde_json::from_value(back["exponents"].clone())?;
        let coeffs: Vec<[f64; 2]> = serde_json::from_value(back["coefficients"].clone())?;
        let eval = |z: &Point| -> Complex64 {
            exps.iter()
                .zip(&coeffs)
                .map(|(e, c)| {
                    let mut m = Complex64::new(c[0], c[1]);
                    for (k, &p) in e.iter().enumerate().take(z.dim()) {
                        m *= z.coords()[k].powu(p);
                    }
                    m
                })
                .sum()
        };
        let worst = probes
            .iter()
            .map(|z| {
                let f = s.eval(z);
                (eval(z) - f).norm() / f.norm().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        report.row(n, "roundtrip_relative_error", worst, 0.0, 1, stream_ids::HORCOR);
        roundtrip_ok &= worst < 1e-8;
        polys.insert(n.to_string(), poly);
    }
    report.artifacts.insert("polynomials".into(), serde_json::Value::Object(polys));
    report.passed = report.check("polynomial_roundtrip", roundtrip_ok);
    Ok(report)
}
