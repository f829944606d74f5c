//! Acceptance suite: one test per criterion, each printing a single PASS/FAIL line with
//! the measured quantities. Tests hold a shared lock so the runtime limits are measured
//! without contention.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use bergman_gaf::bergman::{BasisRequest, DegreePolicy};
use bergman_gaf::config::defaults_for;
use bergman_gaf::experiments::{ExperimentKind, ExperimentReport, Runner};
use bergman_gaf::gaf::{complex_gaussians, RngStream};
use bergman_gaf::geometry::{CompactSubset, Domain, GridWeight, Point, Weight};
use num_complex::Complex64;
use std::f64::consts::PI;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Written straight to the process stdout so the line shows up without --nocapture.
fn report_line(criterion: u32, pass: bool, elapsed: Duration, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "criterion {criterion:>2}: {} ({:.1} s) {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
}

fn run(kind: ExperimentKind, domain: Domain, weight: Weight, edit: impl FnOnce(&mut bergman_gaf::experiments::ExperimentConfig)) -> ExperimentReport {
    let mut cfg = defaults_for(kind, domain, weight).unwrap();
    edit(&mut cfg);
    Runner::new().run(kind, &cfg).unwrap()
}

fn catalog() -> Vec<(Domain, Weight)> {
    let unit = Domain::unit_disk();
    vec![
        (unit.clone(), Weight::Zero),
        (unit.clone(), Weight::quadratic(1.0).unwrap()),
        (Domain::disk(2.0).unwrap(), Weight::MaxLog),
        (
            unit.clone(),
            Weight::log_abs_poly(vec![Complex64::new(-0.25, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], 0.5)
                .unwrap(),
        ),
        (unit, Weight::Grid(GridWeight::sample(1.0, 65, |z| z.norm_sqr()).unwrap())),
    ]
}

#[test]
fn criterion_01_closed_form_kernel() {
    let _g = serial();
    let t0 = Instant::now();
    let request = BasisRequest {
        domain: Domain::unit_disk(),
        weight: Weight::Zero,
        n: 1,
        policy: DegreePolicy::Fixed { degree: 60 },
        orders: None,
        compact: None,
    };
    let basis = request.build().unwrap().basis;
    let mut ev = basis.evaluator();
    let mut worst: f64 = 0.0;
    for i in 0..=70 {
        let r = 0.7 * i as f64 / 70.0;
        for k in 0..16 {
            let z = Point::one(Complex64::from_polar(r, 2.0 * PI * k as f64 / 16.0));
            let exact = 1.0 / (PI * (1.0 - r * r).powi(2));
            worst = worst.max((ev.kernel_diag(&z) - exact).abs() / exact);
        }
    }
    let elapsed = t0.elapsed();
    let pass = worst < 1e-6 && elapsed < Duration::from_secs(10);
    report_line(1, pass, elapsed, &format!("max relative error {worst:.2e} on |z| <= 0.7 (limit 1e-6, 10 s)"));
    assert!(pass);
}

#[test]
fn criterion_02_orthonormality() {
    let _g = serial();
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut failures = Vec::new();
    let mut matrix = catalog();
    for w in [Weight::Zero, Weight::quadratic(1.0).unwrap(), Weight::MaxLog] {
        let r = if w == Weight::MaxLog { 2.0 } else { 1.0 };
        matrix.push((Domain::polydisc(r, r).unwrap(), w));
    }
    for (domain, weight) in &matrix {
        for n in [1u32, 5, 20] {
            for m in [20usize, 40] {
                let request = BasisRequest {
                    domain: domain.clone(),
                    weight: weight.clone(),
                    n,
                    policy: DegreePolicy::Fixed { degree: m },
                    orders: None,
                    compact: None,
                };
                cases += 1;
                match request.build() {
                    Ok(b) => {
                        let res = b.basis.residual();
                        worst = worst.max(res);
                        if res >= 1e-8 {
                            failures.push(format!("{} N={} n={n} M={m}: {res:.2e}", weight.name(), domain.dim()));
                        }
                    }
                    Err(e) => failures.push(format!("{} N={} n={n} M={m}: {e}", weight.name(), domain.dim())),
                }
            }
        }
    }
    let pass = failures.is_empty();
    report_line(
        2,
        pass,
        t0.elapsed(),
        &format!("{cases} cases, max |T*GT - I| = {worst:.2e} (limit 1e-8) {}", failures.join("; ")),
    );
    assert!(pass);
}

#[test]
fn criterion_03_covariance_law() {
    let _g = serial();
    let t0 = Instant::now();
    let rep = run(ExperimentKind::Covariance, Domain::unit_disk(), Weight::quadratic(1.0).unwrap(), |c| {
        c.trials = 10_000;
    });
    let elapsed = t0.elapsed();
    let n = rep.provenance.config["n"][0].as_u64().unwrap() as u32;
    let sig = rep.value("max_covariance_sigmas", n).unwrap();
    let ks = rep.value("pivot_ks_distance", n).unwrap();
    let crit = rep.series("pivot_ks_distance")[0].stderr;
    let pass = sig < 5.0 && ks < crit && elapsed < Duration::from_secs(60);
    report_line(
        3,
        pass,
        elapsed,
        &format!("n={n}, 10^4 trials: worst pair {sig:.2} sigma (limit 5), KS {ks:.4} vs 1% critical {crit:.4} (limit 60 s)"),
    );
    assert!(pass);
}

#[test]
fn criterion_04_anti_concentration() {
    let _g = serial();
    let t0 = Instant::now();
    let draws = 1_000_000usize;
    let mut lines = Vec::new();
    let mut pass = true;
    for n in [2u32, 3, 4] {
        let a = complex_gaussians(&RngStream::new(0, 12, n, 0), draws);
        let eps = 1.0 / (n as f64 * n as f64);
        let hits = a.iter().filter(|z| z.norm() < eps).count();
        let p_hat = hits as f64 / draws as f64;
        let bound = eps * eps;
        let sigma = (bound * (1.0 - bound) / draws as f64).sqrt();
        let ok = p_hat <= bound + 3.0 * sigma;
        pass &= ok;
        lines.push(format!("n={n}: {p_hat:.3e} <= {bound:.3e} + 3*{sigma:.1e}"));
    }
    report_line(4, pass, t0.elapsed(), &lines.join(", "));
    assert!(pass);
}

#[test]
fn criterion_05_sandwich() {
    let _g = serial();
    let t0 = Instant::now();
    let mut pass = true;
    let mut lines = Vec::new();
    let cases = [
        (Domain::unit_disk(), Weight::Zero),
        (Domain::unit_disk(), Weight::quadratic(1.0).unwrap()),
        (Domain::disk(2.0).unwrap(), Weight::MaxLog),
    ];
    for (domain, weight) in cases {
        let name = weight.name();
        let rep = run(ExperimentKind::Sandwich, domain, weight, |c| c.n = vec![1, 2, 5, 10, 20, 40]);
        let l1 = (rep.value("L1_fit", 20).unwrap(), rep.value("L1_fit", 40).unwrap());
        let l2 = (rep.value("L2_fit", 20).unwrap(), rep.value("L2_fit", 40).unwrap());
        let sup = (rep.value("sup_abs_un_minus_u", 5).unwrap(), rep.value("sup_abs_un_minus_u", 40).unwrap());
        let stable = |(a, b): (f64, f64)| (b - a).abs() <= 0.1 * a.abs();
        let ok = stable(l1) && stable(l2) && sup.1 < sup.0;
        pass &= ok;
        lines.push(format!(
            "{name}: L1 {:.3}->{:.3}, L2 {:.3}->{:.3}, sup|u_n-u| {:.3}->{:.3}",
            l1.0, l1.1, l2.0, l2.1, sup.0, sup.1
        ));
    }
    let elapsed = t0.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    report_line(5, pass, elapsed, &lines.join("; "));
    assert!(pass);
}

#[test]
fn criterion_06_l1_convergence() {
    let _g = serial();
    let t0 = Instant::now();
    let mut pass = true;
    let mut lines = Vec::new();
    for weight in [Weight::Zero, Weight::quadratic(1.0).unwrap()] {
        let name = weight.name();
        let domain = Domain::unit_disk();
        let k = CompactSubset::closed_disk(&domain, 0.6).unwrap();
        let rep = run(ExperimentKind::L1, domain, weight, |c| {
            c.compact = k;
            c.n = vec![5, 10, 20, 40];
            c.trials = 100;
        });
        let means: Vec<f64> = rep.series("mean_l1_error").iter().map(|r| r.value).collect();
        let ok = means.windows(2).all(|w| w[1] < w[0]) && means[3] < means[0] / 3.0;
        pass &= ok;
        lines.push(format!("{name}: {}", means.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(" > ")));
    }
    let elapsed = t0.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    report_line(6, pass, elapsed, &lines.join("; "));
    assert!(pass);
}

#[test]
fn criterion_07_tail_decay() {
    let _g = serial();
    let t0 = Instant::now();
    let rep = run(ExperimentKind::Tails, Domain::unit_disk(), Weight::quadratic(1.0).unwrap(), |c| {
        c.ball_center = Point::origin(1);
        c.ball_r = 0.2;
        c.eps = 0.3;
        c.n = (1..=8).map(|k| 2 * k).collect();
        c.trials = 2000;
    });
    let elapsed = t0.elapsed();
    let d = &rep.fitted["D"];
    let positive = rep.checks["decay_rate_positive_95"];
    let vanishes = rep.checks["exceedance_vanishes_beyond_n0"];
    let pass = rep.passed && elapsed < Duration::from_secs(600);
    report_line(
        7,
        pass,
        elapsed,
        &format!(
            "D = {:.3} (95% CI {}), D > 0 at 95%: {positive}, exceedance vanishes beyond n0: {vanishes}",
            d.value,
            d.ci95.map_or("none".into(), |[lo, hi]| format!("[{lo:.3}, {hi:.3}]"))
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_zero_density() {
    let _g = serial();
    let t0 = Instant::now();
    let rep = run(ExperimentKind::ZeroDensity, Domain::unit_disk(), Weight::quadratic(1.0).unwrap(), |c| {
        c.n = vec![30];
        c.trials = 200;
    });
    let elapsed = t0.elapsed();
    let count = rep.value("normalized_count_in_K", 30).unwrap();
    let outside = rep.value("cells_outside_3sigma", 30).unwrap();
    let agree = rep.fitted["contour_agreement"].value;
    let within = (count - 0.72).abs() <= 0.072;
    let pass = within && outside == 0.0 && agree == 1.0 && elapsed < Duration::from_secs(600);
    report_line(
        8,
        pass,
        elapsed,
        &format!(
            "normalized count in disk(0.6) {count:.4} vs 0.72 (10%), cells outside 3 sigma {outside}, contour agreement {:.1}%",
            100.0 * agree
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_truncation_tail_identity() {
    let _g = serial();
    let t0 = Instant::now();
    let rep = run(ExperimentKind::TailVariance, Domain::unit_disk(), Weight::quadratic(1.0).unwrap(), |c| {
        c.trials = 10_000;
    });
    let n = rep.provenance.config["n"][0].as_u64().unwrap() as u32;
    let mc = rep.value("mc_mean_l2_norm_sq", n).unwrap();
    let q = rep.value("sum_sigma_l2_norm_sq", n).unwrap();
    let rel = (mc - q).abs() / q;
    let pass = rel < 0.05;
    report_line(9, pass, t0.elapsed(), &format!("n={n}: Monte Carlo {mc:.5} vs quadrature {q:.5}, relative {rel:.4} (limit 0.05)"));
    assert!(pass);
}

fn strip_timestamp(json: &str) -> String {
    json.lines().filter(|l| !l.trim_start().starts_with("\"timestamp\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn criterion_10_reproducibility() {
    let _g = serial();
    let t0 = Instant::now();
    let mut differing = Vec::new();
    for kind in ExperimentKind::ALL {
        let (domain, weight) = (Domain::unit_disk(), Weight::quadratic(1.0).unwrap());
        let small = |c: &mut bergman_gaf::experiments::ExperimentConfig| {
            c.seed = 11;
            c.trials = c.trials.min(40);
            c.n = match kind {
                ExperimentKind::Tails => vec![2, 4, 6],
                ExperimentKind::ZeroDensity => vec![10],
                _ => vec![5, 10],
            };
        };
        let a = run(kind, domain.clone(), weight.clone(), small);
        let b = run(kind, domain, weight, small);
        if strip_timestamp(&a.to_json()) != strip_timestamp(&b.to_json()) {
            differing.push(kind.name());
        }
    }
    let pass = differing.is_empty();
    report_line(
        10,
        pass,
        t0.elapsed(),
        &format!("{} experiments rerun with the same config and seed; differing: {:?}", ExperimentKind::ALL.len(), differing),
    );
    assert!(pass);
}
