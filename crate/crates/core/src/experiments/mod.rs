//! Monte Carlo experiments: each one builds the bases it needs, runs its trials in
//! parallel with one random stream per (n, trial), and returns an [`ExperimentReport`].

mod checks;
mod horcor;
mod l1;
mod pointwise;
mod report;
mod sandwich;
mod sup_l2;
mod tails;
mod zero_density;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bergman::{BasisCache, BasisRequest, BuiltBasis, DegreePolicy, OrthonormalBasis};
use crate::error::{Error, Result};
use crate::gaf::RngStream;
use crate::geometry::{CompactSubset, Domain, Point, Weight};
use crate::quadrature::QuadratureRule;

pub use checks::{covariance_experiment, truncation_tail_experiment, CovarianceProbe};
pub use horcor::horcor_demo;
pub use l1::l1_convergence_experiment;
pub use pointwise::pointwise_convergence_experiment;
pub use report::{config_hash, write_report, BasisInfo, ExperimentReport, FittedConstant, Provenance, ReportRow, REPORT_SCHEMA_VERSION};
pub use sandwich::demailly_sandwich_experiment;
pub use sup_l2::sup_l2_bound_check;
pub use tails::{exceedance_indicators, tail_probability_experiment};
pub use zero_density::{cell_target_mass, expected_zero_density, zero_density_experiment, StencilDensity};

/// Stream experiment ids: every experiment draws from its own family of streams.
pub mod stream_ids {
    pub const SUP_L2: u32 = 1;
    pub const SANDWICH: u32 = 2;
    pub const POINTWISE: u32 = 3;
    pub const L1: u32 = 4;
    pub const TAILS: u32 = 5;
    pub const ZERO_DENSITY: u32 = 6;
    pub const HORCOR: u32 = 7;
    pub const SAMPLE: u32 = 8;
    pub const ZEROS: u32 = 9;
    pub const COVARIANCE: u32 = 10;
    pub const TAIL_VARIANCE: u32 = 11;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SupL2,
    Sandwich,
    Pointwise,
    L1,
    Tails,
    ZeroDensity,
    Horcor,
    Covariance,
    TailVariance,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::SupL2,
        ExperimentKind::Sandwich,
        ExperimentKind::Pointwise,
        ExperimentKind::L1,
        ExperimentKind::Tails,
        ExperimentKind::ZeroDensity,
        ExperimentKind::Horcor,
        ExperimentKind::Covariance,
        ExperimentKind::TailVariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SupL2 => "sup-l2",
            ExperimentKind::Sandwich => "sandwich",
            ExperimentKind::Pointwise => "pointwise",
            ExperimentKind::L1 => "l1",
            ExperimentKind::Tails => "tails",
            ExperimentKind::ZeroDensity => "zero-density",
            ExperimentKind::Horcor => "horcor",
            ExperimentKind::Covariance => "covariance",
            ExperimentKind::TailVariance => "tail-variance",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown experiment {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// Basis degree policy: a fixed M or the truncation criterion on K.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum DegreeChoice {
    Fixed { degree: usize },
    Auto { tol: f64, m_max: usize },
}

/// Everything an experiment needs; produced by the config parser with defaults filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub domain: Domain,
    pub weight: Weight,
    /// Compact K on which statistics are computed and truncation is controlled.
    pub compact: CompactSubset,
    /// Ball B(z0, r) for ball averages (tails) and the sup radius of the sandwich bound.
    pub ball_center: Point,
    pub ball_r: f64,
    /// Second tail radius (reported, not asserted).
    pub ball_r2: f64,
    pub n: Vec<u32>,
    pub trials: usize,
    pub eps: f64,
    pub seed: u64,
    /// Quadrature orders for the Gram matrices; None derives them from M.
    pub orders: Option<(usize, usize)>,
    pub degree: DegreeChoice,
    /// Quadrature orders of the rule on K (L¹, L² norms and ball averages).
    pub k_orders: (usize, usize),
    /// Polar cells (rings, sectors) for grids and zero counts.
    pub cells: (usize, usize),
    /// ω = K grown by this much (sup-L² check).
    pub omega_inflate: f64,
    /// Five-point stencil spacing for the expected zero density.
    pub stencil_h: f64,
}

impl ExperimentConfig {
    /// Defaults on the given domain: K the closed (poly)disc of 0.6 times the radii,
    /// ball B(0, 0.2 R).
    pub fn new(domain: Domain, weight: Weight) -> Result<Self> {
        weight.validate_for(&domain)?;
        let r = domain.radii().to_vec();
        let compact = match domain.dim() {
            1 => CompactSubset::closed_disk(&domain, 0.6 * r[0])?,
            _ => CompactSubset::closed_polydisc(&domain, 0.6 * r[0], 0.6 * r[1])?,
        };
        let scale = domain.scale();
        let cfg = ExperimentConfig {
            ball_center: Point::origin(domain.dim()),
            ball_r: 0.2 * scale,
            ball_r2: 0.1 * scale,
            domain,
            weight,
            compact,
            n: vec![5, 10, 20, 40],
            trials: 100,
            eps: 0.3,
            seed: 0,
            orders: None,
            degree: DegreeChoice::Auto { tol: 1e-8, m_max: 120 },
            k_orders: (32, 64),
            cells: (3, 8),
            omega_inflate: 0.0,
            stencil_h: 2e-3,
        };
        let inflate = 0.5 * cfg.compact.margin();
        Ok(ExperimentConfig { omega_inflate: inflate, ..cfg })
    }

    pub fn validate(&self) -> Result<()> {
        self.weight.validate_for(&self.domain)?;
        if self.compact.dim() != self.domain.dim() {
            return Err(Error::Config("compact: dimension does not match the domain".into()));
        }
        if self.n.is_empty() {
            return Err(Error::Config("n: list must not be empty".into()));
        }
        if self.n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n list must be increasing".into()));
        }
        if self.n[0] < 1 {
            return Err(Error::Config("n: entries must be >= 1".into()));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials: must be >= 1".into()));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config("eps: must be positive".into()));
        }
        if !(self.ball_r > 0.0) || !(self.ball_r2 > 0.0) {
            return Err(Error::Config("ball.r: radii must be positive".into()));
        }
        if self.ball_center.dim() != self.domain.dim() {
            return Err(Error::Config("ball.center: dimension does not match the domain".into()));
        }
        if !self.ball_inside_compact(self.ball_r.max(self.ball_r2)) {
            return Err(Error::Config("ball.r: the ball B(z0, r) must lie inside K".into()));
        }
        if let DegreeChoice::Auto { tol, .. } = self.degree {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::Config("basis.tol: must lie in (0, 1)".into()));
            }
        }
        if !(self.omega_inflate > 0.0) || self.compact.inflate(&self.domain, self.omega_inflate).is_err() {
            return Err(Error::Config("omega.inflate: ω must be a compact inside the domain".into()));
        }
        if !(self.stencil_h > 0.0) {
            return Err(Error::Config("stencil.h: must be positive".into()));
        }
        if self.cells.0 == 0 || self.cells.1 == 0 {
            return Err(Error::Config("cells: rings and sectors must be >= 1".into()));
        }
        Ok(())
    }

    fn ball_inside_compact(&self, r: f64) -> bool {
        use crate::geometry::CompactKind;
        let c = &self.ball_center;
        match self.compact.kind() {
            CompactKind::ClosedDisk { rho } => c.z().norm() + r <= *rho * (1.0 + 1e-12),
            CompactKind::ClosedPolydisc { rho1, rho2 } => {
                c.coords()[0].norm() + r <= *rho1 * (1.0 + 1e-12) && c.coords()[1].norm() + r <= *rho2 * (1.0 + 1e-12)
            }
            CompactKind::ClosedBall { center, r: rk } => c.sub(center).norm() + r <= rk * (1.0 + 1e-12),
        }
    }

    pub fn ball(&self, r: f64) -> Result<CompactSubset> {
        CompactSubset::closed_ball(&self.domain, self.ball_center, r)
    }

    pub fn omega(&self) -> Result<CompactSubset> {
        self.compact.inflate(&self.domain, self.omega_inflate)
    }

    pub fn basis_request(&self, n: u32) -> BasisRequest {
        BasisRequest {
            domain: self.domain.clone(),
            weight: self.weight.clone(),
            n,
            policy: match self.degree {
                DegreeChoice::Fixed { degree } => DegreePolicy::Fixed { degree },
                DegreeChoice::Auto { tol, m_max } => DegreePolicy::Auto { tol, m_max },
            },
            orders: self.orders,
            compact: Some(self.compact.clone()),
        }
    }

    /// Quadrature rule on K.
    pub fn rule_on_compact(&self) -> Result<QuadratureRule> {
        QuadratureRule::on_compact(&self.compact, self.k_orders.0, self.k_orders.1)
    }

    pub fn stream(&self, experiment: u32, n: u32, trial: u64) -> RngStream {
        RngStream::new(self.seed, experiment, n, trial)
    }
}

/// Builds (or loads) bases and records what was used.
#[derive(Clone, Debug, Default)]
pub struct Runner {
    cache: Option<BasisCache>,
    workers: usize,
}

impl Runner {
    pub fn new() -> Self {
        Runner { cache: None, workers: rayon::current_num_threads() }
    }

    pub fn with_cache(cache: BasisCache) -> Self {
        Runner { cache: Some(cache), workers: rayon::current_num_threads() }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn basis(&self, cfg: &ExperimentConfig, n: u32) -> Result<(Arc<OrthonormalBasis>, BasisInfo)> {
        let request = cfg.basis_request(n);
        let built: BuiltBasis = match &self.cache {
            Some(cache) => cache.get_or_build(&request)?.0,
            None => request.build()?,
        };
        let info = BasisInfo {
            n,
            degree: built.basis.degree(),
            dim: built.basis.dim(),
            truncation_reached: built.truncation.as_ref().map(|t| t.reached),
            orthonormality_residual: built.basis.residual(),
            request_hash: request.hash(),
        };
        Ok((built.basis, info))
    }

    pub fn run(&self, kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
        cfg.validate()?;
        let mut report = match kind {
            ExperimentKind::SupL2 => sup_l2_bound_check(cfg, self),
            ExperimentKind::Sandwich => demailly_sandwich_experiment(cfg, self),
            ExperimentKind::Pointwise => pointwise_convergence_experiment(cfg, self),
            ExperimentKind::L1 => l1_convergence_experiment(cfg, self),
            ExperimentKind::Tails => tail_probability_experiment(cfg, self),
            ExperimentKind::ZeroDensity => zero_density_experiment(cfg, self),
            ExperimentKind::Horcor => horcor_demo(cfg, self),
            ExperimentKind::Covariance => covariance_experiment(cfg, self),
            ExperimentKind::TailVariance => truncation_tail_experiment(cfg, self),
        }?;
        report.provenance.workers = self.workers;
        Ok(report)
    }
}

/// Runs `f` for every trial in parallel and returns the results in trial order.
pub(crate) fn per_trial<T: Send>(trials: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..trials as u64).into_par_iter().map(f).collect()
}
