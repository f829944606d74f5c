//! Tensor-product polar quadrature on disks, bidiscs and balls, and the weighted
//! inner product of H(nu).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CompactKind, CompactSubset, Domain, DomainKind, Point, Weight};
use crate::stats::pairwise_sum_complex;

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub radial_order: usize,
    pub angular_order: usize,
    /// Number of disk factors (1 for the disk, 2 for the bidisc).
    pub factors: usize,
}

/// Radial nodes and weights of a disk rule about the origin; node (i, l) sits at
/// radius `radii[i]` and angle 2πl/`angular`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct PolarLayout {
    pub radii: Vec<f64>,
    pub angular: usize,
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    nodes: Vec<Point>,
    weights: Vec<f64>,
    resolution: Resolution,
    polar: Option<PolarLayout>,
    /// Factor layouts of a bidisc tensor rule; node ((i1, l1), (i2, l2)) is stored at
    /// (i1·L1 + l1)·(R2·L2) + i2·L2 + l2.
    product: Option<(PolarLayout, PolarLayout)>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn resolution(&self) -> &Resolution {
        &self.resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub(crate) fn polar(&self) -> Option<&PolarLayout> {
        self.polar.as_ref()
    }

    pub(crate) fn product(&self) -> Option<&(PolarLayout, PolarLayout)> {
        self.product.as_ref()
    }

    /// A rule on the compact subset itself (used for L¹(K), L²(K) norms and ball averages).
    pub fn on_compact(k: &CompactSubset, radial_order: usize, angular_order: usize) -> Result<Self> {
        check_orders(radial_order, angular_order)?;
        let zero = Complex64::new(0.0, 0.0);
        match k.kind() {
            CompactKind::ClosedDisk { rho } => Ok(disk_rule(zero, *rho, radial_order, angular_order, &[])),
            CompactKind::ClosedPolydisc { rho1, rho2 } => {
                let a = disk_rule(zero, *rho1, radial_order, angular_order, &[]);
                let b = disk_rule(zero, *rho2, radial_order, angular_order, &[]);
                Ok(product_rule(&a, &b))
            }
            CompactKind::ClosedBall { center, r } => match k.dim() {
                1 => {
                    let mut rule = disk_rule(center.z(), *r, radial_order, angular_order, &[]);
                    rule.polar = None;
                    Ok(rule)
                }
                _ => Ok(ball_rule_2d(center, *r, radial_order, angular_order)),
            },
        }
    }
}

fn check_orders(radial_order: usize, angular_order: usize) -> Result<()> {
    if radial_order < 2 || angular_order < 4 {
        return Err(Error::invalid(format!(
            "quadrature needs radial_order >= 2 and angular_order >= 4 (got {radial_order}, {angular_order})"
        )));
    }
    Ok(())
}

/// Gauss–Legendre on each radial segment [b_k, b_{k+1}] (weight r dr), trapezoid in angle.
fn disk_rule(center: Complex64, radius: f64, radial: usize, angular: usize, breaks: &[f64]) -> QuadratureRule {
    let (x, w) = gauss_legendre(radial);
    let mut edges = vec![0.0];
    edges.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < radius));
    edges.push(radius);
    let mut radii = Vec::new();
    let mut radial_weights = Vec::new();
    for seg in edges.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        for (xi, wi) in x.iter().zip(&w) {
            let r = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            radii.push(r);
            radial_weights.push(0.5 * (b - a) * wi * r);
        }
    }
    let dtheta = 2.0 * PI / angular as f64;
    let mut nodes = Vec::with_capacity(radii.len() * angular);
    let mut weights = Vec::with_capacity(radii.len() * angular);
    for (r, wr) in radii.iter().zip(&radial_weights) {
        for l in 0..angular {
            nodes.push(Point::one(center + Complex64::from_polar(*r, dtheta * l as f64)));
            weights.push(wr * dtheta);
        }
    }
    QuadratureRule {
        nodes,
        weights,
        resolution: Resolution { radial_order: radial, angular_order: angular, factors: 1 },
        polar: Some(PolarLayout { radii, angular }),
        product: None,
    }
}

fn product_rule(a: &QuadratureRule, b: &QuadratureRule) -> QuadratureRule {
    let mut nodes = Vec::with_capacity(a.len() * b.len());
    let mut weights = Vec::with_capacity(a.len() * b.len());
    for (pa, wa) in a.nodes.iter().zip(&a.weights) {
        for (pb, wb) in b.nodes.iter().zip(&b.weights) {
            nodes.push(Point::two(pa.z(), pb.z()));
            weights.push(wa * wb);
        }
    }
    QuadratureRule {
        nodes,
        weights,
        resolution: Resolution { factors: 2, ..a.resolution.clone() },
        polar: None,
        product: a.polar.clone().zip(b.polar.clone()),
    }
}

/// Ball of radius r in C^2: |z1| = ρ cos ψ, |z2| = ρ sin ψ, dλ = ρ³ cos ψ sin ψ dρ dψ dθ1 dθ2.
fn ball_rule_2d(center: &Point, r: f64, radial: usize, angular: usize) -> QuadratureRule {
    let (x, w) = gauss_legendre(radial);
    let dtheta = 2.0 * PI / angular as f64;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for (xr, wr) in x.iter().zip(&w) {
        let rho = 0.5 * r * (1.0 + xr);
        let w_rho = 0.5 * r * wr * rho.powi(3);
        for (xp, wp) in x.iter().zip(&w) {
            let psi = 0.25 * PI * (1.0 + xp);
            let w_psi = 0.25 * PI * wp * psi.cos() * psi.sin();
            for l1 in 0..angular {
                for l2 in 0..angular {
                    let d = Point::two(
                        Complex64::from_polar(rho * psi.cos(), dtheta * l1 as f64),
                        Complex64::from_polar(rho * psi.sin(), dtheta * l2 as f64),
                    );
                    nodes.push(center.add(&d));
                    weights.push(w_rho * w_psi * dtheta * dtheta);
                }
            }
        }
    }
    QuadratureRule {
        nodes,
        weights,
        resolution: Resolution { radial_order: radial, angular_order: angular, factors: 2 },
        polar: None,
        product: None,
    }
}

/// Integration rule on the domain: Gauss–Legendre in r times uniform angles on the disk,
/// the tensor of two such rules on the bidisc.
pub fn build_rule(domain: &Domain, radial_order: usize, angular_order: usize) -> Result<QuadratureRule> {
    build_rule_with_breaks(domain, radial_order, angular_order, &[])
}

/// As [`build_rule`], with the radial interval of every factor split at `breaks`
/// (each segment gets the full radial order).
pub fn build_rule_with_breaks(
    domain: &Domain,
    radial_order: usize,
    angular_order: usize,
    breaks: &[f64],
) -> Result<QuadratureRule> {
    check_orders(radial_order, angular_order)?;
    let zero = Complex64::new(0.0, 0.0);
    let r = domain.radii();
    Ok(match domain.kind() {
        DomainKind::Disk => disk_rule(zero, r[0], radial_order, angular_order, breaks),
        DomainKind::Polydisc => {
            let a = disk_rule(zero, r[0], radial_order, angular_order, &[]);
            let b = disk_rule(zero, r[1], radial_order, angular_order, &[]);
            product_rule(&a, &b)
        }
    })
}

/// Default resolution for basis degree M.
pub fn default_orders(domain: &Domain, degree: usize) -> (usize, usize) {
    match domain.kind() {
        DomainKind::Disk => ((2 * degree).max(32), (4 * degree + 4).max(64)),
        DomainKind::Polydisc => ((degree + 2).max(12), (2 * degree + 2).max(24)),
    }
}

/// The rule used for the H(nu) inner product at degree M (weight kinks become radial breaks).
pub fn rule_for(domain: &Domain, weight: &Weight, degree: usize, orders: Option<(usize, usize)>) -> Result<QuadratureRule> {
    let (radial, angular) = orders.unwrap_or_else(|| default_orders(domain, degree));
    build_rule_with_breaks(domain, radial, angular, &weight.radial_breakpoints())
}

/// e^{-2nu(z)}, clamped below at the smallest positive normal number.
pub fn weight_factor(u: &Weight, n: u32, z: &Point) -> f64 {
    (-2.0 * n as f64 * u.value(z)).exp().max(f64::MIN_POSITIVE)
}

/// Σ_k w_k f(x_k) conj(g(x_k)) e^{-2nu(x_k)}.
pub fn weighted_inner_product(
    rule: &QuadratureRule,
    f: impl Fn(&Point) -> Complex64,
    g: impl Fn(&Point) -> Complex64,
    u: &Weight,
    n: u32,
) -> Result<Complex64> {
    let mut terms = Vec::with_capacity(rule.len());
    for (index, (p, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let fv = f(p);
        let gv = g(p);
        let s = w * weight_factor(u, n, p);
        if !(fv.is_finite() && gv.is_finite() && s.is_finite()) {
            return Err(Error::NonFiniteNode { index, point: p.to_string() });
        }
        terms.push((fv * gv.conj()) * s);
    }
    Ok(pairwise_sum_complex(&terms))
}

/// ∫_rule |f|^p (unweighted), p = 1 or 2 typically.
pub fn lp_norm_pow(rule: &QuadratureRule, values: &[f64], p: i32) -> f64 {
    let terms: Vec<f64> = values.iter().zip(&rule.weights).map(|(v, w)| w * v.abs().powi(p)).collect();
    crate::stats::pairwise_sum(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pow(k: i32) -> impl Fn(&Point) -> Complex64 {
        move |p: &Point| p.z().powi(k)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for order in [2, 3, 8, 33, 120] {
            let (x, w) = gauss_legendre(order);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-13);
            for k in 0..(2 * order).min(60) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let expect = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
                assert!((got - expect).abs() < 1e-13, "order {order}, k {k}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn unit_disk_rule_examples() {
        let rule = build_rule(&Domain::unit_disk(), 16, 64).unwrap();
        assert!((rule.total_weight() - PI).abs() < 1e-12);
        let first: Complex64 = rule.nodes().iter().zip(rule.weights()).map(|(p, w)| p.z() * w).sum();
        assert!(first.norm() < 1e-12);
        let second: f64 = rule.nodes().iter().zip(rule.weights()).map(|(p, w)| p.norm_sqr() * w).sum();
        // 2π ∫_0^1 r^3 dr
        assert_relative_eq!(second, PI / 2.0, max_relative = 1e-13);
        assert!(rule.nodes().iter().all(|p| p.norm() < 1.0 && p.norm() > 0.0));
        assert!(rule.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn bidisc_rule_has_exact_volume() {
        let d = Domain::polydisc(1.0, 0.5).unwrap();
        let rule = build_rule(&d, 4, 8).unwrap();
        assert_relative_eq!(rule.total_weight(), PI * PI * 0.25, max_relative = 1e-12);
    }

    #[test]
    fn orders_below_minimum_are_rejected() {
        assert!(build_rule(&Domain::unit_disk(), 1, 64).is_err());
        assert!(build_rule(&Domain::unit_disk(), 8, 3).is_err());
    }

    #[test]
    fn monomial_inner_products_are_exact() {
        let m = 12usize;
        let rule = build_rule(&Domain::unit_disk(), m + 2, 2 * m + 2).unwrap();
        for j in 0..=m as i32 {
            for k in 0..=m as i32 {
                let ip = weighted_inner_product(&rule, pow(j), pow(k), &Weight::Zero, 3).unwrap();
                // 2π ∫_0^1 r^{2k+1} dr on the diagonal
                let expect = if j == k { PI / (k as f64 + 1.0) } else { 0.0 };
                assert!((ip - expect).norm() < 1e-12, "<z^{j}, z^{k}> = {ip}");
            }
        }
    }

    /// Adaptive Simpson on [a, b], independent of the Gauss–Legendre path.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    /// Lower incomplete gamma γ(s, x) by its power series.
    fn lower_gamma(s: f64, x: f64) -> f64 {
        let mut term = x.powf(s) * (-x).exp() / s;
        let mut sum = term;
        for k in 1..500 {
            term *= x / (s + k as f64);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum
    }

    #[test]
    fn quadratic_weight_inner_products_match_incomplete_gamma() {
        let u = Weight::quadratic(1.0).unwrap();
        let rule = build_rule(&Domain::unit_disk(), 32, 64).unwrap();
        for k in 0..8 {
            let ip = weighted_inner_product(&rule, pow(k), pow(k), &u, 1).unwrap();
            let gamma = PI * lower_gamma(k as f64 + 1.0, 2.0) / 2f64.powi(k + 1);
            let simpson = 2.0 * PI * adaptive_simpson(&|r: f64| r.powi(2 * k + 1) * (-2.0 * r * r).exp(), 0.0, 1.0, 1e-14);
            assert_relative_eq!(gamma, simpson, max_relative = 1e-10);
            assert_relative_eq!(ip.re, gamma, max_relative = 1e-12);
            assert!(ip.im.abs() < 1e-14);
        }
    }

    #[test]
    fn inner_product_is_conjugate_symmetric_exactly() {
        let u = Weight::log_abs_poly(vec![Complex64::new(-0.3, 0.1), Complex64::new(1.0, 0.0)], 0.3).unwrap();
        let rule = build_rule(&Domain::unit_disk(), 12, 24).unwrap();
        let f = |p: &Point| p.z() * p.z() + Complex64::new(0.2, -1.0);
        let g = |p: &Point| p.z().exp();
        let a = weighted_inner_product(&rule, f, g, &u, 2).unwrap();
        let b = weighted_inner_product(&rule, g, f, &u, 2).unwrap();
        assert_eq!(a, b.conj());
    }

    #[test]
    fn non_finite_node_is_reported() {
        let rule = build_rule(&Domain::unit_disk(), 4, 8).unwrap();
        let err = weighted_inner_product(&rule, |p: &Point| 1.0 / (p.z() - rule.nodes()[5].z()), pow(0), &Weight::Zero, 1)
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteNode { index: 5, .. }), "{err}");
    }

    #[test]
    fn positivity_and_refinement() {
        let domain = Domain::disk(2.0).unwrap();
        let weights = [
            Weight::Zero,
            Weight::quadratic(1.0).unwrap(),
            Weight::MaxLog,
            Weight::log_abs_poly(vec![Complex64::new(-0.25, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], 0.5)
                .unwrap(),
        ];
        let m = 10;
        for u in &weights {
            for n in [1u32, 5] {
                let (r, a) = default_orders(&domain, m);
                let coarse = rule_for(&domain, u, m, Some((r, a))).unwrap();
                let fine = rule_for(&domain, u, m, Some((2 * r, 2 * a))).unwrap();
                for k in [0, 3, 10] {
                    let f = |p: &Point| p.z().powi(k) + Complex64::new(0.5, 0.5) * p.z();
                    let c = weighted_inner_product(&coarse, f, f, u, n).unwrap();
                    let d = weighted_inner_product(&fine, f, f, u, n).unwrap();
                    assert!(c.re > 0.0 && c.im.abs() < 1e-12 * c.re.max(1.0));
                    assert!(((c - d) / d).norm() < 1e-8, "{} n={n} k={k}: {c} vs {d}", u.name());
                }
            }
        }
    }

    #[test]
    fn grid_weight_refinement_is_second_order_accurate() {
        // bilinear interpolation has kinks on grid lines; refinement is only algebraic
        let u = Weight::Grid(crate::geometry::GridWeight::sample(1.0, 21, |z| z.norm_sqr()).unwrap());
        let domain = Domain::unit_disk();
        let (r, a) = default_orders(&domain, 10);
        let coarse = rule_for(&domain, &u, 10, Some((r, a))).unwrap();
        let fine = rule_for(&domain, &u, 10, Some((2 * r, 2 * a))).unwrap();
        let f = |p: &Point| p.z().powi(2);
        let c = weighted_inner_product(&coarse, f, f, &u, 5).unwrap();
        let d = weighted_inner_product(&fine, f, f, &u, 5).unwrap();
        let rel = ((c - d) / d).norm();
        assert!(rel < 1e-3, "relative change {rel}");
    }

    #[test]
    fn compact_rules_have_exact_measure() {
        let domain = Domain::polydisc(1.0, 1.0).unwrap();
        let ball = CompactSubset::closed_ball(&domain, Point::two(Complex64::new(0.2, 0.0), Complex64::new(0.0, -0.1)), 0.4)
            .unwrap();
        let rule = QuadratureRule::on_compact(&ball, 8, 8).unwrap();
        assert_relative_eq!(rule.total_weight(), ball.measure(), max_relative = 1e-12);
        // ∫_B |z - c|^2 = π² r^6 / 3
        let c = Point::two(Complex64::new(0.2, 0.0), Complex64::new(0.0, -0.1));
        let second: f64 = rule.nodes().iter().zip(rule.weights()).map(|(p, w)| w * p.sub(&c).norm_sqr()).sum();
        assert_relative_eq!(second, PI * PI * 0.4f64.powi(6) / 3.0, max_relative = 1e-12);

        let disk = Domain::unit_disk();
        let b1 = CompactSubset::closed_ball(&disk, Point::re_im(0.3, 0.2), 0.2).unwrap();
        let r1 = QuadratureRule::on_compact(&b1, 8, 16).unwrap();
        assert_relative_eq!(r1.total_weight(), PI * 0.04, max_relative = 1e-12);
        assert!(r1.nodes().iter().all(|p| b1.contains(p)));
    }
}
