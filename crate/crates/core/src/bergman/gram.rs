use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MonomialBasis;
use crate::error::{Error, Result};
use crate::geometry::{Domain, Weight};
use crate::quadrature::{weight_factor, PolarLayout, QuadratureRule, Resolution};

const PSD_FAILURE: f64 = 1e-8;
const CHUNK: usize = 2048;

/// Where a Gram matrix came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramProvenance {
    pub domain: Domain,
    pub weight: Weight,
    pub n: u32,
    pub degree: usize,
    pub resolution: Resolution,
}

/// G[α][β] = <z^α, z^β> in H(nu).
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub(crate) entries: DMatrix<Complex64>,
    pub(crate) monomials: MonomialBasis,
    pub(crate) provenance: GramProvenance,
    pub(crate) min_eigenvalue: f64,
}

impl GramMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn monomials(&self) -> &MonomialBasis {
        &self.monomials
    }

    pub fn provenance(&self) -> &GramProvenance {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|k| self.entries[(k, k)].re).sum()
    }

    /// Smallest eigenvalue found by the PSD check.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Leading block belonging to monomials of degree <= `degree`.
    pub fn truncate(&self, degree: usize) -> GramMatrix {
        let monomials = self.monomials.truncate(degree);
        let d = monomials.len();
        let entries = self.entries.view((0, 0), (d, d)).into_owned();
        let min_eigenvalue = min_hermitian_eigenvalue(&entries);
        let mut provenance = self.provenance.clone();
        provenance.degree = monomials.degree();
        GramMatrix { entries, monomials, provenance, min_eigenvalue }
    }

    /// Wraps an externally supplied Hermitian matrix (tests and the C ABI).
    pub fn from_entries(entries: DMatrix<Complex64>, provenance: GramProvenance) -> Result<Self> {
        let d = entries.nrows();
        if entries.ncols() != d {
            return Err(Error::invalid("Gram matrix must be square"));
        }
        let dim = provenance.domain.dim();
        let monomials = MonomialBasis::new(dim, provenance.degree);
        if monomials.len() != d {
            return Err(Error::invalid(format!("degree {} needs a {}x{} matrix", provenance.degree, monomials.len(), monomials.len())));
        }
        for i in 0..d {
            for j in 0..d {
                if entries[(i, j)] != entries[(j, i)].conj() {
                    return Err(Error::invalid("Gram matrix is not Hermitian"));
                }
            }
        }
        let min_eigenvalue = min_hermitian_eigenvalue(&entries);
        Ok(GramMatrix { entries, monomials, provenance, min_eigenvalue })
    }
}

pub(crate) fn min_hermitian_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    nalgebra::SymmetricEigen::new(m.clone()).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Assembles the Gram matrix of the monomials of degree <= M under the H(nu) inner
/// product discretized by `rule`. Hermitian by construction; fails if it is not
/// positive semidefinite to within 1e-8 trace.
pub fn gram_matrix(domain: &Domain, rule: &QuadratureRule, u: &Weight, n: u32, degree: usize) -> Result<GramMatrix> {
    if n < 1 {
        return Err(Error::invalid("n must be >= 1"));
    }
    u.validate_for(domain)?;
    let monomials = MonomialBasis::new(domain.dim(), degree);
    let scaled: Vec<f64> = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(p, w)| w * weight_factor(u, n, p))
        .collect();
    if let Some(index) = scaled.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteNode { index, point: rule.nodes()[index].to_string() });
    }
    let upper = match rule.polar() {
        Some(layout) if domain.dim() == 1 => polar_upper(&layout.radii, layout.angular, &scaled, degree),
        _ => match rule.product() {
            Some((a, b)) if domain.dim() == 2 => product_upper(a, b, &scaled, &monomials),
            _ => generic_upper(rule, &scaled, &monomials),
        },
    };
    let d = monomials.len();
    let mut entries = DMatrix::<Complex64>::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let v = upper[a * d + b];
            if !v.is_finite() {
                return Err(Error::NonFiniteNode { index: a * d + b, point: format!("Gram entry ({a}, {b})") });
            }
            if a == b {
                entries[(a, a)] = Complex64::new(v.re, 0.0);
            } else {
                entries[(a, b)] = v;
                entries[(b, a)] = v.conj();
            }
        }
    }
    let gram = GramMatrix {
        min_eigenvalue: min_hermitian_eigenvalue(&entries),
        entries,
        monomials,
        provenance: GramProvenance {
            domain: domain.clone(),
            weight: u.clone(),
            n,
            degree,
            resolution: rule.resolution().clone(),
        },
    };
    let trace = gram.trace();
    if gram.min_eigenvalue < -PSD_FAILURE * trace {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue: gram.min_eigenvalue, trace });
    }
    Ok(gram)
}

/// Polar rule on the disk: with s_{il} the scaled node weights and A_i(m) = Σ_l s_{il} e^{imθ_l},
/// G[a][b] = Σ_i r_i^{a+b} conj(A_i(b - a)).
fn polar_upper(radii: &[f64], angular: usize, scaled: &[f64], degree: usize) -> Vec<Complex64> {
    let d = degree + 1;
    let roots = unit_roots(angular);
    let moments: Vec<Vec<Complex64>> = radii
        .par_iter()
        .enumerate()
        .map(|(i, _)| {
            let row = &scaled[i * angular..(i + 1) * angular];
            (0..d)
                .map(|m| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (l, s) in row.iter().enumerate() {
                        acc += roots[(m * l) % angular] * s;
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let powers: Vec<Vec<f64>> = radii
        .iter()
        .map(|&r| {
            let mut p = vec![1.0; 2 * d];
            for k in 1..2 * d {
                p[k] = p[k - 1] * r;
            }
            p
        })
        .collect();
    let mut upper = vec![Complex64::new(0.0, 0.0); d * d];
    upper.par_chunks_mut(d).enumerate().for_each(|(a, row)| {
        for b in a..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for (pw, am) in powers.iter().zip(&moments) {
                acc += am[b - a].conj() * pw[a + b];
            }
            row[b] = acc;
        }
    });
    upper
}

fn unit_roots(angular: usize) -> Vec<Complex64> {
    (0..angular)
        .map(|q| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * q as f64 / angular as f64))
        .collect()
}

fn power_table(radii: &[f64], top: usize) -> Vec<Vec<f64>> {
    // table[p][i] = radii[i]^p
    let mut table = vec![vec![1.0; radii.len()]; top + 1];
    for p in 1..=top {
        for (i, r) in radii.iter().enumerate() {
            table[p][i] = table[p - 1][i] * r;
        }
    }
    table
}

/// Bidisc tensor rule: with F_{i1 i2}(m1, m2) the double angular transform of the scaled
/// weights on the torus of radii (r_{i1}, r_{i2}),
/// G[α][β] = Σ_{i1, i2} r_{i1}^{a1+b1} r_{i2}^{a2+b2} F_{i1 i2}(a1 - b1, a2 - b2).
fn product_upper(a: &PolarLayout, b: &PolarLayout, scaled: &[f64], monomials: &MonomialBasis) -> Vec<Complex64> {
    let m = monomials.degree();
    let w = 2 * m + 1;
    let (l1, l2) = (a.angular, b.angular);
    let (n1, n2) = (a.radii.len(), b.radii.len());
    let (roots1, roots2) = (unit_roots(l1), unit_roots(l2));
    let root = |roots: &[Complex64], k: i64, l: usize| roots[(k * l as i64).rem_euclid(roots.len() as i64) as usize];
    let pow1 = power_table(&a.radii, 2 * m);
    let pow2 = power_table(&b.radii, 2 * m);
    let exps = monomials.exponents();
    let d = exps.len();
    let mut upper = vec![Complex64::new(0.0, 0.0); d * d];
    let mut f = vec![Complex64::new(0.0, 0.0); w * w * n2];
    for i1 in 0..n1 {
        // f[(m1 + M)·W + (m2 + M)][i2]
        let per_i2: Vec<Vec<Complex64>> = (0..n2)
            .into_par_iter()
            .map(|i2| {
                let mut h = vec![Complex64::new(0.0, 0.0); l1 * (m + 1)];
                for q1 in 0..l1 {
                    let base = (i1 * l1 + q1) * (n2 * l2) + i2 * l2;
                    let row = &scaled[base..base + l2];
                    for m2 in 0..=m {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (q2, s) in row.iter().enumerate() {
                            acc += root(&roots2, m2 as i64, q2) * s;
                        }
                        h[q1 * (m + 1) + m2] = acc;
                    }
                }
                let mut out = vec![Complex64::new(0.0, 0.0); w * w];
                for m1 in -(m as i64)..=m as i64 {
                    for m2 in 0..=m {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for q1 in 0..l1 {
                            acc += root(&roots1, m1, q1) * h[q1 * (m + 1) + m2];
                        }
                        let pos = (m1 + m as i64) as usize * w + m2 + m;
                        let neg = (m as i64 - m1) as usize * w + m - m2;
                        out[pos] = acc;
                        out[neg] = acc.conj();
                    }
                }
                out
            })
            .collect();
        for (i2, block) in per_i2.iter().enumerate() {
            for (k, v) in block.iter().enumerate() {
                f[k * n2 + i2] = *v;
            }
        }
        upper.par_chunks_mut(d).enumerate().for_each(|(ia, row)| {
            let [a1, a2] = exps[ia];
            for ib in ia..d {
                let [b1, b2] = exps[ib];
                let k = (a1 as i64 - b1 as i64 + m as i64) as usize * w + (a2 as i64 - b2 as i64 + m as i64) as usize;
                let fk = &f[k * n2..(k + 1) * n2];
                let p2 = &pow2[(a2 + b2) as usize];
                let mut acc = Complex64::new(0.0, 0.0);
                for (fv, pv) in fk.iter().zip(p2) {
                    acc += fv * pv;
                }
                row[ib] += acc * pow1[(a1 + b1) as usize][i1];
            }
        });
    }
    upper
}

/// Node sum Σ_k s_k v(x_k) v(x_k)^*, reduced over fixed-size node chunks in order.
fn generic_upper(rule: &QuadratureRule, scaled: &[f64], monomials: &MonomialBasis) -> Vec<Complex64> {
    let d = monomials.len();
    let partials: Vec<Vec<Complex64>> = rule
        .nodes()
        .par_chunks(CHUNK)
        .zip(scaled.par_chunks(CHUNK))
        .map(|(nodes, weights)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); d * d];
            let mut v = vec![Complex64::new(0.0, 0.0); d];
            for (p, s) in nodes.iter().zip(weights) {
                monomials.eval_into(p, &mut v);
                for a in 0..d {
                    let va = v[a] * s;
                    for b in a..d {
                        acc[a * d + b] += va * v[b].conj();
                    }
                }
            }
            acc
        })
        .collect();
    let mut upper = vec![Complex64::new(0.0, 0.0); d * d];
    for part in partials {
        for (u, p) in upper.iter_mut().zip(part) {
            *u += p;
        }
    }
    upper
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::quadrature::{build_rule, default_orders, rule_for, weighted_inner_product};
    use std::f64::consts::PI;

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
    fn unweighted_disk_gram_is_diagonal() {
        let domain = Domain::unit_disk();
        let m = 20;
        let (r, a) = default_orders(&domain, m);
        let rule = build_rule(&domain, r, a).unwrap();
        for n in [1, 7] {
            let g = gram_matrix(&domain, &rule, &Weight::Zero, n, m).unwrap();
            for j in 0..=m {
                for k in 0..=m {
                    let expect = if j == k { PI / (k as f64 + 1.0) } else { 0.0 };
                    assert!((g.entries[(j, k)] - expect).norm() < 1e-12, "G[{j}][{k}]");
                }
            }
        }
    }

    #[test]
    fn quadratic_gram_matches_incomplete_gamma() {
        let domain = Domain::unit_disk();
        let u = Weight::quadratic(1.0).unwrap();
        let m = 15;
        let rule = rule_for(&domain, &u, m, None).unwrap();
        let g = gram_matrix(&domain, &rule, &u, 1, m).unwrap();
        for j in 0..=m {
            for k in 0..=m {
                if j == k {
                    let expect = PI * lower_gamma(k as f64 + 1.0, 2.0) / 2f64.powi(k as i32 + 1);
                    assert!(((g.entries[(k, k)].re - expect) / expect).abs() < 1e-12);
                } else {
                    assert!(g.entries[(j, k)].norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gram_is_exactly_hermitian_and_matches_node_sums() {
        let domain = Domain::unit_disk();
        let u = Weight::log_abs_poly(vec![Complex64::new(-0.3, 0.2), Complex64::new(1.0, 0.0)], 0.5).unwrap();
        let m = 6;
        let rule = rule_for(&domain, &u, m, None).unwrap();
        let g = gram_matrix(&domain, &rule, &u, 2, m).unwrap();
        assert_eq!(g.entries, g.entries.adjoint());
        for j in 0..=m as i32 {
            for k in 0..=m as i32 {
                let ip = weighted_inner_product(&rule, |p: &Point| p.z().powi(j), |p: &Point| p.z().powi(k), &u, 2).unwrap();
                let scale = (g.entries[(j as usize, j as usize)].re * g.entries[(k as usize, k as usize)].re).sqrt();
                assert!((ip - g.entries[(j as usize, k as usize)]).norm() < 1e-12 * scale);
            }
        }
        assert!(g.min_eigenvalue() >= -1e-10 * g.trace());
    }

    #[test]
    fn bidisc_gram_factorizes() {
        let domain = Domain::polydisc(1.0, 1.0).unwrap();
        let m = 3;
        let (r, a) = default_orders(&domain, m);
        let rule = build_rule(&domain, r, a).unwrap();
        let g = gram_matrix(&domain, &rule, &Weight::Zero, 1, m).unwrap();
        let mono = MonomialBasis::new(2, m);
        for (i, [a1, a2]) in mono.exponents().iter().enumerate() {
            let expect = PI / (*a1 as f64 + 1.0) * PI / (*a2 as f64 + 1.0);
            assert!((g.entries[(i, i)].re - expect).abs() < 1e-12);
        }
        assert_eq!(g.entries, g.entries.adjoint());
    }

    #[test]
    fn bidisc_tensor_assembly_matches_node_sums() {
        let domain = Domain::polydisc(1.0, 0.8).unwrap();
        let u = Weight::MaxLog;
        let m = 4;
        let rule = rule_for(&domain, &u, m, Some((6, 12))).unwrap();
        let mono = MonomialBasis::new(2, m);
        let scaled: Vec<f64> =
            rule.nodes().iter().zip(rule.weights()).map(|(p, w)| w * weight_factor(&u, 3, p)).collect();
        let (a, b) = rule.product().unwrap();
        let fast = product_upper(a, b, &scaled, &mono);
        let slow = generic_upper(&rule, &scaled, &mono);
        let d = mono.len();
        for i in 0..d {
            for j in i..d {
                let (x, y) = (fast[i * d + j], slow[i * d + j]);
                assert!((x - y).norm() < 1e-13 * (1.0 + y.norm()), "({i}, {j}): {x} vs {y}");
            }
        }
    }

    #[test]
    fn truncation_takes_the_leading_block() {
        let domain = Domain::unit_disk();
        let rule = rule_for(&domain, &Weight::Zero, 10, None).unwrap();
        let g = gram_matrix(&domain, &rule, &Weight::Zero, 1, 10).unwrap();
        let t = g.truncate(4);
        assert_eq!(t.dim(), 5);
        assert_eq!(t.entries[(4, 4)], g.entries[(4, 4)]);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut m = DMatrix::<Complex64>::identity(2, 2);
        m[(0, 1)] = Complex64::new(0.1, 0.1);
        let prov = GramProvenance {
            domain: Domain::unit_disk(),
            weight: Weight::Zero,
            n: 1,
            degree: 1,
            resolution: Resolution { radial_order: 2, angular_order: 4, factors: 1 },
        };
        assert!(GramMatrix::from_entries(m, prov).is_err());
    }
}
