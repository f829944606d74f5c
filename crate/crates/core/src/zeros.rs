//! Zero sets of one-variable samples: companion-matrix roots, an argument-principle
//! counter used as an independent check, and cell-binned zero densities.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaf::{GafSample, RngStream};
use crate::geometry::{CompactKind, CompactSubset, Point, PolarCells};

/// Leading coefficients below this fraction of max|c| are dropped before root finding.
pub const TRIM_RELATIVE: f64 = 1e-14;
/// Roots closer than this are one root of higher multiplicity.
pub const CLUSTER_RADIUS: f64 = 1e-8;
const MAX_CONTOUR_NODES: usize = 1 << 16;
const CONTOUR_START_NODES: usize = 64;
const CONTOUR_TOLERANCE: f64 = 1e-3;
const RADIUS_PERTURBATIONS: [f64; 6] = [0.0, 1e-3, -1e-3, 2e-3, -2e-3, 3e-3];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroSet {
    /// Distinct roots inside the region.
    pub points: Vec<Complex64>,
    pub multiplicities: Vec<usize>,
    /// |f(root)| / S_n(root) after polishing.
    pub residuals: Vec<f64>,
    pub n: u32,
    pub stream: Option<RngStream>,
    pub region: CompactSubset,
}

impl ZeroSet {
    /// Number of zeros counted with multiplicity.
    pub fn count(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// Count with multiplicity in the closed disk |z - center| <= radius.
    pub fn count_in_disk(&self, center: Complex64, radius: f64) -> usize {
        self.points
            .iter()
            .zip(&self.multiplicities)
            .filter(|(z, _)| (*z - center).norm() <= radius)
            .map(|(_, m)| m)
            .sum()
    }

    /// Rows `re,im,n,trial,residual`.
    pub fn to_csv(&self) -> String {
        let trial = self.stream.map(|s| s.trial.to_string()).unwrap_or_default();
        let mut out = String::from("re,im,n,trial,residual\n");
        for (z, r) in self.points.iter().zip(&self.residuals) {
            let _ = writeln!(out, "{},{},{},{},{:e}", z.re, z.im, self.n, trial, r);
        }
        out
    }
}

/// Roots of Σ c_k z^k, from the companion matrix of the polynomial rescaled by `scale`.
pub fn polynomial_roots(c: &[Complex64], scale: f64) -> Result<Vec<Complex64>> {
    let max = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if !(max >= TRIM_RELATIVE) || !max.is_finite() {
        return Err(Error::DegenerateSample);
    }
    let deg = c.iter().rposition(|x| x.norm() >= TRIM_RELATIVE * max).unwrap_or(0);
    if deg == 0 {
        return Ok(Vec::new());
    }
    let d: Vec<Complex64> = (0..=deg).map(|k| c[k] * scale.powi(k as i32)).collect();
    let lead = d[deg];
    let mut m = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -d[i] / lead;
    }
    let (_, t) = m.schur().unpack();
    Ok(t.diagonal().iter().map(|w| w * scale).collect())
}

fn region_radius(region: &CompactSubset) -> f64 {
    match region.kind() {
        CompactKind::ClosedDisk { rho } => *rho,
        CompactKind::ClosedBall { center, r } => center.norm() + r,
        CompactKind::ClosedPolydisc { rho1, .. } => *rho1,
    }
}

/// Zeros of a one-variable sample inside `region`, each polished by one Newton step.
pub fn find_zeros(sample: &GafSample, region: &CompactSubset) -> Result<ZeroSet> {
    if sample.basis().domain_dim() != 1 || region.dim() != 1 {
        return Err(Error::invalid("zero extraction is implemented for N = 1 only"));
    }
    let c = sample.monomial_coefficients();
    let mut roots = polynomial_roots(c, region_radius(region))?;
    for z in roots.iter_mut() {
        let (f, df) = sample.eval_with_derivative(*z);
        let step = f / df;
        if step.is_finite() {
            *z -= step;
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut points: Vec<Complex64> = Vec::new();
    let mut multiplicities: Vec<usize> = Vec::new();
    for z in roots {
        if let Some(k) = points.iter().position(|p| (p - z).norm() < CLUSTER_RADIUS) {
            multiplicities[k] += 1;
        } else {
            points.push(z);
            multiplicities.push(1);
        }
    }
    let mut kept = ZeroSet {
        points: Vec::new(),
        multiplicities: Vec::new(),
        residuals: Vec::new(),
        n: sample.n(),
        stream: sample.stream(),
        region: region.clone(),
    };
    let mut eval = sample.basis().evaluator();
    for (z, m) in points.into_iter().zip(multiplicities) {
        let p = Point::one(z);
        if !region.contains(&p) {
            continue;
        }
        let s = eval.kernel_diag(&p).sqrt();
        kept.points.push(z);
        kept.multiplicities.push(m);
        kept.residuals.push(sample.eval(&p).norm() / s);
    }
    Ok(kept)
}

/// Result of a contour count: the integer, the radius actually used and the node count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourCount {
    pub count: usize,
    pub radius: f64,
    pub nodes: usize,
}

/// (1/2πi)∮ f'/f dz on |z - center| = radius by the trapezoid rule, doubling the node
/// count until two successive values agree and sit within 1e-3 of an integer. Retries
/// slightly perturbed radii before giving up.
pub fn argument_principle_count(sample: &GafSample, center: Complex64, radius: f64) -> Result<ContourCount> {
    if sample.basis().domain_dim() != 1 {
        return Err(Error::invalid("argument principle is implemented for N = 1 only"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("contour radius must be positive, got {radius}")));
    }
    for delta in RADIUS_PERTURBATIONS {
        let r = radius * (1.0 + delta);
        if let Some((count, nodes)) = contour_integral(sample, center, r) {
            if delta != 0.0 {
                log::debug!("contour at {center} converged after perturbing the radius to {r}");
            }
            return Ok(ContourCount { count, radius: r, nodes });
        }
    }
    Err(Error::ContourFailure { center: center.to_string(), radius })
}

fn contour_integral(sample: &GafSample, center: Complex64, r: f64) -> Option<(usize, usize)> {
    let value = |l: usize| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..l {
            let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / l as f64);
            let (f, df) = sample.eval_with_derivative(center + e * r);
            acc += df * e * r / f;
        }
        (acc / l as f64).re
    };
    let mut nodes = CONTOUR_START_NODES;
    let mut prev = value(nodes);
    while nodes < MAX_CONTOUR_NODES {
        nodes *= 2;
        let cur = value(nodes);
        if !cur.is_finite() {
            return None;
        }
        let nearest = cur.round();
        if (cur - prev).abs() < CONTOUR_TOLERANCE && (cur - nearest).abs() < CONTOUR_TOLERANCE && nearest >= 0.0 {
            return Some((nearest as usize, nodes));
        }
        prev = cur;
    }
    None
}

/// Per-cell zero statistics over an ensemble.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellCounts {
    pub cells: PolarCells,
    /// Total zeros per cell over all trials.
    pub counts: Vec<u64>,
    pub areas: Vec<f64>,
    pub trials: usize,
    pub n: u32,
    /// Mean count per cell divided by n and by the cell area.
    pub density: Vec<f64>,
    /// Monte Carlo standard error of `density`.
    pub stderr: Vec<f64>,
    /// Standard error of the mean count per cell (no 1/n, no area).
    pub count_stderr: Vec<f64>,
}

impl CellCounts {
    pub fn mean_counts(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| if self.trials == 0 { 0.0 } else { c as f64 / self.trials as f64 }).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Rows `cell_center_re,cell_center_im,density,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell_center_re,cell_center_im,density,stderr\n");
        for (i, cell) in self.cells.cells().enumerate() {
            let z = cell.representative();
            let _ = writeln!(out, "{},{},{:e},{:e}", z.re, z.im, self.density[i], self.stderr[i]);
        }
        out
    }
}

/// Bins zero sets sharing n into `cells`; the density estimates (1/n) E Z per unit area.
pub fn empirical_zero_measure(zero_sets: &[ZeroSet], cells: &PolarCells, n: u32) -> Result<CellCounts> {
    if let Some(z) = zero_sets.iter().find(|z| z.n != n) {
        return Err(Error::MismatchedSamples(format!("zero set with n = {} in an ensemble with n = {n}", z.n)));
    }
    if let Some(first) = zero_sets.first() {
        if zero_sets.iter().any(|z| z.region != first.region) {
            return Err(Error::MismatchedSamples("zero sets come from different regions".into()));
        }
    }
    let len = cells.len();
    let trials = zero_sets.len();
    let mut counts = vec![0u64; len];
    let mut sum_sq = vec![0.0f64; len];
    let mut per_trial = vec![0u64; len];
    for zs in zero_sets {
        per_trial.iter_mut().for_each(|c| *c = 0);
        for (z, m) in zs.points.iter().zip(&zs.multiplicities) {
            if let Some(i) = cells.locate(*z) {
                per_trial[i] += *m as u64;
            }
        }
        for i in 0..len {
            counts[i] += per_trial[i];
            sum_sq[i] += (per_trial[i] * per_trial[i]) as f64;
        }
    }
    let areas: Vec<f64> = cells.cells().map(|c| c.area()).collect();
    let mut density = vec![0.0; len];
    let mut stderr = vec![0.0; len];
    let mut count_stderr = vec![0.0; len];
    if trials > 0 {
        let t = trials as f64;
        for i in 0..len {
            let mean = counts[i] as f64 / t;
            let var = if trials > 1 { ((sum_sq[i] - t * mean * mean) / (t - 1.0)).max(0.0) } else { 0.0 };
            count_stderr[i] = (var / t).sqrt();
            let norm = n as f64 * areas[i];
            density[i] = mean / norm;
            stderr[i] = count_stderr[i] / norm;
        }
    }
    Ok(CellCounts { cells: cells.clone(), counts, areas, trials, n, density, stderr, count_stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::{gram_matrix, orthonormalize, OrthonormalBasis};
    use crate::gaf::sample_gaf;
    use crate::geometry::{Domain, Weight};
    use crate::quadrature::rule_for;
    use std::sync::Arc;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn basis(m: usize) -> Arc<OrthonormalBasis> {
        let domain = Domain::unit_disk();
        let rule = rule_for(&domain, &Weight::Zero, m, None).unwrap();
        Arc::new(orthonormalize(&gram_matrix(&domain, &rule, &Weight::Zero, 1, m).unwrap()).unwrap())
    }

    /// A sample whose monomial coefficients are `target` (unweighted disk basis is diagonal).
    fn with_monomials(target: &[Complex64]) -> GafSample {
        let b = basis(target.len() - 1);
        let a = target.iter().enumerate().map(|(k, t)| t / b.coefficients()[(k, k)]).collect();
        GafSample::from_coefficients(b, a).unwrap()
    }

    #[test]
    fn simple_polynomials() {
        let domain = Domain::unit_disk();
        let k = CompactSubset::closed_disk(&domain, 0.9).unwrap();
        let z = find_zeros(&with_monomials(&[c(0.0), c(1.0)]), &k).unwrap();
        assert_eq!(z.count(), 1);
        assert!(z.points[0].norm() < 1e-12);
        let q = with_monomials(&[c(-0.25), c(0.0), c(1.0)]);
        let mut zs = find_zeros(&q, &k).unwrap().points;
        zs.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((zs[0] - c(-0.5)).norm() < 1e-12 && (zs[1] - c(0.5)).norm() < 1e-12);
        assert_eq!(argument_principle_count(&q, c(0.0), 0.6).unwrap().count, 2);
        assert_eq!(argument_principle_count(&q, c(0.0), 0.4).unwrap().count, 0);
        assert_eq!(argument_principle_count(&with_monomials(&[c(0.0), c(1.0)]), c(0.0), 0.5).unwrap().count, 1);
    }

    #[test]
    fn double_root_is_one_cluster() {
        let domain = Domain::unit_disk();
        let k = CompactSubset::closed_disk(&domain, 0.9).unwrap();
        // (z - 0.3)^2
        let z = find_zeros(&with_monomials(&[c(0.09), c(-0.6), c(1.0)]), &k).unwrap();
        assert_eq!(z.count(), 2);
    }

    #[test]
    fn zero_polynomial_is_degenerate() {
        let domain = Domain::unit_disk();
        let k = CompactSubset::closed_disk(&domain, 0.5).unwrap();
        let s = with_monomials(&[c(0.0), c(0.0), c(0.0)]);
        assert!(matches!(find_zeros(&s, &k), Err(Error::DegenerateSample)));
    }

    #[test]
    fn companion_roots_match_contour_counts() {
        let b = basis(40);
        let domain = Domain::unit_disk();
        let k = CompactSubset::closed_disk(&domain, 0.6).unwrap();
        for trial in 0..50 {
            let s = sample_gaf(&b, RngStream::new(21, 9, 1, trial));
            let zs = find_zeros(&s, &k).unwrap();
            let contour = argument_principle_count(&s, c(0.0), 0.6).unwrap();
            assert_eq!(zs.count_in_disk(c(0.0), contour.radius), contour.count, "trial {trial}");
            assert!(zs.max_residual() < 1e-6);
            let recon = s.monomial_coefficients();
            for z in &zs.points {
                let direct = s.eval(&Point::one(*z));
                assert!((direct - crate::geometry::horner(recon, *z)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_measure_bookkeeping() {
        let domain = Domain::unit_disk();
        let k = CompactSubset::closed_disk(&domain, 0.5).unwrap();
        let cells = PolarCells::covering(&k, 2, 4).unwrap();
        let empty = empirical_zero_measure(&[], &cells, 3).unwrap();
        assert!(empty.density.iter().all(|&d| d == 0.0));
        let one = ZeroSet {
            points: vec![Complex64::new(0.1, 0.05)],
            multiplicities: vec![1],
            residuals: vec![0.0],
            n: 1,
            stream: None,
            region: k.clone(),
        };
        let m = empirical_zero_measure(std::slice::from_ref(&one), &cells, 1).unwrap();
        let i = cells.locate(one.points[0]).unwrap();
        for (j, d) in m.density.iter().enumerate() {
            let expect = if j == i { 1.0 / cells.cell(j).area() } else { 0.0 };
            assert!((d - expect).abs() < 1e-12);
        }
        assert!(empirical_zero_measure(&[one], &cells, 2).is_err());
    }

    #[test]
    fn csv_export() {
        let domain = Domain::unit_disk();
        let k = CompactSubset::closed_disk(&domain, 0.9).unwrap();
        let z = find_zeros(&with_monomials(&[c(-0.25), c(0.0), c(1.0)]), &k).unwrap();
        let csv = z.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("re,im,n,trial,residual"));
    }
}
