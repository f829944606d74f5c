use serde::{Deserialize, Serialize};

use super::basis::{factor, ORTHONORMALITY_LIMIT};
use super::{gram_matrix, MonomialBasis, OrthonormalBasis};
use crate::error::{Error, Result};
use crate::geometry::{CompactSubset, Domain, Weight};
use crate::quadrature::rule_for;

/// Degree step ΔM of the stopping criterion.
pub const DEGREE_STEP: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Chosen degree M.
    pub degree: usize,
    /// False when the tolerance was not met below the cap (the cap is returned).
    pub reached: bool,
    /// Largest degree whose basis passed the orthonormality check.
    pub usable_degree: usize,
    /// max over probes of (S²_M - S²_{M-ΔM}) / S²_M at the chosen degree.
    pub increment: f64,
}

/// Degree-M kernel increments on the probe grid of K for every M of `basis`.
fn increments(basis: &OrthonormalBasis, k: &CompactSubset) -> Vec<f64> {
    let mono = basis.monomials();
    let top = basis.degree();
    let mut worst = vec![0.0f64; top + 1];
    let mut eval = basis.evaluator();
    for p in k.probe_points() {
        let sigma = eval.sigma(&p);
        let mut cum = Vec::with_capacity(sigma.len() + 1);
        cum.push(0.0);
        for s in sigma {
            cum.push(cum.last().unwrap() + s.norm_sqr());
        }
        let s2 = |m: usize| cum[MonomialBasis::count(mono.dim(), m)];
        for m in DEGREE_STEP..=top {
            let inc = (s2(m) - s2(m - DEGREE_STEP)) / s2(m);
            worst[m] = worst[m].max(inc);
        }
    }
    worst
}

/// Smallest M <= the basis degree whose ΔM-increment is below `tol` on K.
pub fn truncation_from_basis(basis: &OrthonormalBasis, k: &CompactSubset, tol: f64) -> Truncation {
    let inc = increments(basis, k);
    let top = basis.degree();
    for m in DEGREE_STEP..=top {
        if inc[m] < tol {
            return Truncation { degree: m, reached: true, usable_degree: top, increment: inc[m] };
        }
    }
    Truncation { degree: top, reached: false, usable_degree: top, increment: inc.get(top).copied().unwrap_or(f64::NAN) }
}

/// Builds the degree-`m_max` basis and cuts it back to the largest degree that
/// orthonormalizes cleanly.
pub fn capped_basis(
    domain: &Domain,
    u: &Weight,
    n: u32,
    m_max: usize,
    orders: Option<(usize, usize)>,
) -> Result<OrthonormalBasis> {
    let rule = rule_for(domain, u, m_max, orders)?;
    let gram = gram_matrix(domain, &rule, u, n, m_max)?;
    let f = factor(&gram);
    let usable_dim = f.t.ncols();
    let dim = domain.dim();
    let mut cap = (0..=m_max).rev().find(|&m| MonomialBasis::count(dim, m) <= usable_dim);
    let Some(mut degree) = cap.take() else {
        return Err(Error::RankDeficient { pivot: 0 });
    };
    let d = MonomialBasis::count(dim, degree);
    let full = OrthonormalBasis::assemble(f.t.view((0, 0), (d, d)).into_owned(), gram.truncate(degree));
    while degree > 0 && full.prefix_residual()[MonomialBasis::count(dim, degree)] > ORTHONORMALITY_LIMIT {
        degree -= 1;
    }
    if full.prefix_residual()[MonomialBasis::count(dim, degree)] > ORTHONORMALITY_LIMIT {
        return Err(Error::OrthonormalityResidual { residual: full.residual(), limit: ORTHONORMALITY_LIMIT });
    }
    if degree < m_max {
        log::warn!("basis for n = {n} capped at degree {degree} < {m_max} by conditioning");
    }
    Ok(if degree == full.degree() { full } else { full.truncate(degree) })
}

/// Truncation degree and the basis at that degree.
pub fn auto_basis(
    domain: &Domain,
    u: &Weight,
    n: u32,
    k: &CompactSubset,
    tol: f64,
    m_max: usize,
    orders: Option<(usize, usize)>,
) -> Result<(OrthonormalBasis, Truncation)> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid(format!("truncation tolerance must lie in (0, 1), got {tol}")));
    }
    let capped = capped_basis(domain, u, n, m_max, orders)?;
    let mut t = truncation_from_basis(&capped, k, tol);
    t.usable_degree = capped.degree();
    if !t.reached {
        log::warn!("truncation tolerance {tol:e} not reached for n = {n} below degree {}", t.degree);
    }
    Ok((capped.truncate(t.degree), t))
}

/// Smallest M <= M_max for which raising the degree by ΔM changes the kernel diagonal
/// on K by less than `tol` relative; M_max with `reached = false` otherwise.
pub fn truncation_degree(
    domain: &Domain,
    u: &Weight,
    n: u32,
    k: &CompactSubset,
    tol: f64,
    m_max: usize,
) -> Result<Truncation> {
    auto_basis(domain, u, n, k, tol, m_max, None).map(|(_, t)| t)
}
