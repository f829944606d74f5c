//! Model domains, the catalog of continuous psh weights, compact subsets and
//! evaluation grids.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of C^N with N in {1, 2}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: [Complex64; 2],
    dim: usize,
}

impl Point {
    pub fn one(z: Complex64) -> Self {
        Point { coords: [z, Complex64::new(0.0, 0.0)], dim: 1 }
    }

    pub fn two(z1: Complex64, z2: Complex64) -> Self {
        Point { coords: [z1, z2], dim: 2 }
    }

    pub fn re_im(re: f64, im: f64) -> Self {
        Self::one(Complex64::new(re, im))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords[..self.dim]
    }

    /// First coordinate; the whole point when N = 1.
    pub fn z(&self) -> Complex64 {
        self.coords[0]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coords().iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn sub(&self, other: &Point) -> Point {
        let mut out = *self;
        for k in 0..self.dim {
            out.coords[k] -= other.coords[k];
        }
        out
    }

    pub fn add(&self, other: &Point) -> Point {
        let mut out = *self;
        for k in 0..self.dim {
            out.coords[k] += other.coords[k];
        }
        out
    }

    pub fn origin(dim: usize) -> Point {
        match dim {
            1 => Point::one(Complex64::new(0.0, 0.0)),
            _ => Point::two(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        }
    }

    /// `self` with coordinate `k` replaced.
    pub fn with_coord(&self, k: usize, value: Complex64) -> Point {
        let mut out = *self;
        out.coords[k] = value;
        out
    }
}

impl From<Complex64> for Point {
    fn from(z: Complex64) -> Self {
        Point::one(z)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dim {
            1 => write!(f, "{}", self.coords[0]),
            _ => write!(f, "({}, {})", self.coords[0], self.coords[1]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Disk,
    Polydisc,
}

/// A disk of radius R in C or a bidisc in C^2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    kind: DomainKind,
    radii: Vec<f64>,
}

impl Domain {
    pub fn disk(radius: f64) -> Result<Self> {
        check_radius(radius, "disk radius")?;
        Ok(Domain { kind: DomainKind::Disk, radii: vec![radius] })
    }

    pub fn polydisc(r1: f64, r2: f64) -> Result<Self> {
        check_radius(r1, "polydisc radius 1")?;
        check_radius(r2, "polydisc radius 2")?;
        Ok(Domain { kind: DomainKind::Polydisc, radii: vec![r1, r2] })
    }

    pub fn unit_disk() -> Self {
        Domain { kind: DomainKind::Disk, radii: vec![1.0] }
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.radii.len()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Largest radius, used as the length scale R of the domain.
    pub fn scale(&self) -> f64 {
        self.radii.iter().cloned().fold(0.0, f64::max)
    }

    pub fn volume(&self) -> f64 {
        self.radii.iter().map(|r| PI * r * r).product()
    }

    /// True iff `z` lies in the domain shrunk by `margin` (per factor for the polydisc).
    pub fn contains(&self, z: &Point, margin: f64) -> bool {
        z.dim() == self.dim()
            && z.coords().iter().zip(&self.radii).all(|(c, r)| c.norm() < r - margin)
    }

    /// Distance from an interior point to the boundary.
    pub fn boundary_distance(&self, z: &Point) -> f64 {
        z.coords()
            .iter()
            .zip(&self.radii)
            .map(|(c, r)| r - c.norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check(&self, z: &Point) -> Result<()> {
        if self.contains(z, 0.0) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: z.to_string() })
        }
    }
}

fn check_radius(r: f64, what: &str) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be positive and finite, got {r}")))
    }
}

/// Bilinearly interpolated samples of a weight on a Cartesian grid over C.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridWeight {
    /// Lower-left corner (re, im) of the grid.
    pub origin: [f64; 2],
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major: `values[iy * nx + ix]` is the sample at `origin + spacing * (ix, iy)`.
    pub values: Vec<f64>,
}

impl GridWeight {
    pub fn new(origin: [f64; 2], spacing: f64, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 || values.len() != nx * ny {
            return Err(Error::invalid(format!(
                "grid weight needs at least 2x2 samples and nx*ny values (nx={nx}, ny={ny}, got {})",
                values.len()
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid("grid spacing must be positive"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("grid value {i} is not finite")));
        }
        Ok(GridWeight { origin, spacing, nx, ny, values })
    }

    /// Samples `f` on the square [-half, half]^2 with `per_side` points per side.
    pub fn sample(half: f64, per_side: usize, f: impl Fn(Complex64) -> f64) -> Result<Self> {
        let spacing = 2.0 * half / (per_side - 1) as f64;
        let mut values = Vec::with_capacity(per_side * per_side);
        for iy in 0..per_side {
            for ix in 0..per_side {
                let z = Complex64::new(-half + spacing * ix as f64, -half + spacing * iy as f64);
                values.push(f(z));
            }
        }
        Self::new([-half, -half], spacing, per_side, per_side, values)
    }

    /// Parses a whitespace- or comma-separated matrix (one row per line, rows ordered by
    /// increasing imaginary part).
    pub fn parse(text: &str, origin: [f64; 2], spacing: f64) -> Result<Self> {
        let mut values = Vec::new();
        let mut nx = 0;
        let mut ny = 0;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let row: Vec<f64> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| Error::invalid(format!("grid value `{s}`: {e}"))))
                .collect::<Result<_>>()?;
            if ny == 0 {
                nx = row.len();
            } else if row.len() != nx {
                return Err(Error::invalid(format!("grid row {ny} has {} values, expected {nx}", row.len())));
            }
            values.extend(row);
            ny += 1;
        }
        Self::new(origin, spacing, nx, ny, values)
    }

    fn value(&self, z: Complex64) -> f64 {
        let fx = ((z.re - self.origin[0]) / self.spacing).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((z.im - self.origin[1]) / self.spacing).clamp(0.0, (self.ny - 1) as f64);
        let ix = (fx.floor() as usize).min(self.nx - 2);
        let iy = (fy.floor() as usize).min(self.ny - 2);
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;
        let v = |i: usize, j: usize| self.values[j * self.nx + i];
        (1.0 - ty) * ((1.0 - tx) * v(ix, iy) + tx * v(ix + 1, iy))
            + ty * ((1.0 - tx) * v(ix, iy + 1) + tx * v(ix + 1, iy + 1))
    }
}

/// The catalog of continuous psh weights u.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Weight {
    Zero,
    /// c |z|^2
    Quadratic { c: f64 },
    /// max(log |z|, 0)
    MaxLog,
    /// (1/2) log(|p(z)|^2 + eps^2), p given by ascending coefficients. N = 1 only.
    LogAbsPoly { coeffs: Vec<Complex64>, eps: f64 },
    /// N = 1 only.
    Grid(GridWeight),
}

impl Weight {
    pub fn quadratic(c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("quadratic weight needs c >= 0, got {c}")));
        }
        Ok(Weight::Quadratic { c })
    }

    pub fn log_abs_poly(coeffs: Vec<Complex64>, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("log-abs-poly needs eps > 0, got {eps}")));
        }
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("log-abs-poly needs finite coefficients"));
        }
        Ok(Weight::LogAbsPoly { coeffs, eps })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Weight::Zero => "zero",
            Weight::Quadratic { .. } => "quadratic",
            Weight::MaxLog => "max-log",
            Weight::LogAbsPoly { .. } => "log-abs-poly",
            Weight::Grid(_) => "grid",
        }
    }

    /// Raw evaluation without the domain check.
    pub fn value(&self, z: &Point) -> f64 {
        match self {
            Weight::Zero => 0.0,
            Weight::Quadratic { c } => c * z.norm_sqr(),
            Weight::MaxLog => z.norm().ln().max(0.0),
            Weight::LogAbsPoly { coeffs, eps } => {
                let p = horner(coeffs, z.z());
                0.5 * (p.norm_sqr() + eps * eps).ln()
            }
            Weight::Grid(g) => g.value(z.z()),
        }
    }

    /// Whether the weight depends on |z| only.
    pub fn is_radial(&self) -> bool {
        matches!(self, Weight::Zero | Weight::Quadratic { .. } | Weight::MaxLog)
    }

    /// Radii at which the radial profile has a kink; radial quadrature splits there.
    pub fn radial_breakpoints(&self) -> Vec<f64> {
        match self {
            Weight::MaxLog => vec![1.0],
            _ => Vec::new(),
        }
    }

    pub fn supports_dim(&self, dim: usize) -> bool {
        match self {
            Weight::LogAbsPoly { .. } | Weight::Grid(_) => dim == 1,
            _ => true,
        }
    }

    pub fn validate_for(&self, domain: &Domain) -> Result<()> {
        if self.supports_dim(domain.dim()) {
            Ok(())
        } else {
            Err(Error::invalid(format!("weight `{}` is only defined for N = 1", self.name())))
        }
    }

    /// sup of u over the ball B(z, r). psh weights attain it on the boundary sphere.
    pub fn sup_on_ball(&self, z: &Point, r: f64) -> f64 {
        match self {
            Weight::Zero => 0.0,
            Weight::Quadratic { c } => c * (z.norm() + r).powi(2),
            Weight::MaxLog => (z.norm() + r).ln().max(0.0),
            _ => {
                let mut best = f64::NEG_INFINITY;
                for p in sphere_samples(z, r, 256) {
                    best = best.max(self.value(&p));
                }
                best.max(self.value(z))
            }
        }
    }

    /// Average of u over the circle z + r e^{it} e_k in each coordinate direction;
    /// the minimum over directions is returned.
    pub fn circle_average(&self, z: &Point, r: f64, nodes: usize) -> f64 {
        let mut worst = f64::INFINITY;
        for k in 0..z.dim() {
            let mut acc = 0.0;
            for j in 0..nodes {
                let t = 2.0 * PI * j as f64 / nodes as f64;
                let p = z.with_coord(k, z.coords()[k] + Complex64::from_polar(r, t));
                acc += self.value(&p);
            }
            worst = worst.min(acc / nodes as f64);
        }
        worst
    }

    /// Density of (1/2π)Δu against Lebesgue measure, for weights where it is absolutely
    /// continuous and known in closed form (N = 1).
    pub fn laplacian_density(&self, z: Complex64) -> Option<f64> {
        match self {
            Weight::Zero => Some(0.0),
            Weight::Quadratic { c } => Some(2.0 * c / PI),
            Weight::LogAbsPoly { coeffs, eps } => {
                let p = horner(coeffs, z);
                let dp = horner_derivative(coeffs, z);
                let e2 = eps * eps;
                Some(dp.norm_sqr() * e2 / (PI * (p.norm_sqr() + e2).powi(2)))
            }
            Weight::MaxLog | Weight::Grid(_) => None,
        }
    }
}

/// Evaluates u at z after checking that z lies in the domain.
pub fn eval_weight(u: &Weight, domain: &Domain, z: &Point) -> Result<f64> {
    domain.check(z)?;
    let v = u.value(z);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(format!("weight is not finite at {z}")))
    }
}

pub fn contains(domain: &Domain, z: &Point, margin: f64) -> bool {
    domain.contains(z, margin)
}

pub(crate) fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

pub(crate) fn horner_derivative(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * z + c * k as f64;
    }
    acc
}

/// Deterministic samples of the sphere |p - z| = r (a circle when N = 1).
fn sphere_samples(z: &Point, r: f64, count: usize) -> Vec<Point> {
    match z.dim() {
        1 => (0..count)
            .map(|j| Point::one(z.z() + Complex64::from_polar(r, 2.0 * PI * j as f64 / count as f64)))
            .collect(),
        _ => {
            let side = (count as f64).cbrt().ceil() as usize + 1;
            let mut out = Vec::with_capacity(side * side * side);
            for a in 0..=side {
                let psi = 0.5 * PI * a as f64 / side as f64;
                for b in 0..side {
                    let t1 = 2.0 * PI * b as f64 / side as f64;
                    for c in 0..side {
                        let t2 = 2.0 * PI * c as f64 / side as f64;
                        let d = Point::two(
                            Complex64::from_polar(r * psi.cos(), t1),
                            Complex64::from_polar(r * psi.sin(), t2),
                        );
                        out.push(z.add(&d));
                    }
                }
            }
            out
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CompactKind {
    ClosedDisk { rho: f64 },
    ClosedPolydisc { rho1: f64, rho2: f64 },
    ClosedBall { center: Point, r: f64 },
}

/// A compact subset K of the domain together with its distance to the boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactSubset {
    kind: CompactKind,
    margin: f64,
    dim: usize,
}

impl CompactSubset {
    pub fn closed_disk(domain: &Domain, rho: f64) -> Result<Self> {
        if domain.dim() != 1 {
            return Err(Error::invalid("closed-disk compact requires N = 1"));
        }
        Self::finish(CompactKind::ClosedDisk { rho }, domain.radii()[0] - rho, 1, rho)
    }

    pub fn closed_polydisc(domain: &Domain, rho1: f64, rho2: f64) -> Result<Self> {
        if domain.dim() != 2 {
            return Err(Error::invalid("closed-polydisc compact requires N = 2"));
        }
        let r = domain.radii();
        Self::finish(CompactKind::ClosedPolydisc { rho1, rho2 }, (r[0] - rho1).min(r[1] - rho2), 2, rho1.min(rho2))
    }

    pub fn closed_ball(domain: &Domain, center: Point, r: f64) -> Result<Self> {
        if center.dim() != domain.dim() {
            return Err(Error::invalid("ball center has the wrong dimension"));
        }
        let margin = domain.boundary_distance(&center) - r;
        Self::finish(CompactKind::ClosedBall { center, r }, margin, domain.dim(), r)
    }

    fn finish(kind: CompactKind, margin: f64, dim: usize, size: f64) -> Result<Self> {
        if !(size > 0.0 && size.is_finite()) {
            return Err(Error::invalid(format!("compact subset size must be positive, got {size}")));
        }
        if !(margin > 0.0) {
            return Err(Error::invalid(format!("compact subset is not strictly inside the domain (margin {margin})")));
        }
        Ok(CompactSubset { kind, margin, dim })
    }

    pub fn kind(&self) -> &CompactKind {
        &self.kind
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, z: &Point) -> bool {
        const SLACK: f64 = 1e-12;
        match &self.kind {
            CompactKind::ClosedDisk { rho } => z.z().norm() <= rho * (1.0 + SLACK),
            CompactKind::ClosedPolydisc { rho1, rho2 } => {
                z.coords()[0].norm() <= rho1 * (1.0 + SLACK) && z.coords()[1].norm() <= rho2 * (1.0 + SLACK)
            }
            CompactKind::ClosedBall { center, r } => z.sub(center).norm() <= r * (1.0 + SLACK),
        }
    }

    /// Lebesgue measure of K.
    pub fn measure(&self) -> f64 {
        match &self.kind {
            CompactKind::ClosedDisk { rho } => PI * rho * rho,
            CompactKind::ClosedPolydisc { rho1, rho2 } => PI * rho1 * rho1 * PI * rho2 * rho2,
            CompactKind::ClosedBall { r, .. } => match self.dim {
                1 => PI * r * r,
                _ => 0.5 * PI * PI * r.powi(4),
            },
        }
    }

    /// The compact grown by `by` in every direction (the neighbourhood ω of K).
    pub fn inflate(&self, domain: &Domain, by: f64) -> Result<Self> {
        match &self.kind {
            CompactKind::ClosedDisk { rho } => Self::closed_disk(domain, rho + by),
            CompactKind::ClosedPolydisc { rho1, rho2 } => Self::closed_polydisc(domain, rho1 + by, rho2 + by),
            CompactKind::ClosedBall { center, r } => Self::closed_ball(domain, *center, r + by),
        }
    }

    /// Points on the part of ∂K where holomorphic functions attain their maximum modulus
    /// (the circle, the distinguished torus, or the sphere).
    pub fn max_modulus_boundary(&self, per_circle: usize) -> Vec<Point> {
        let circle = |c: Complex64, r: f64| -> Vec<Complex64> {
            (0..per_circle)
                .map(|j| c + Complex64::from_polar(r, 2.0 * PI * j as f64 / per_circle as f64))
                .collect()
        };
        match &self.kind {
            CompactKind::ClosedDisk { rho } => circle(Complex64::new(0.0, 0.0), *rho).into_iter().map(Point::one).collect(),
            CompactKind::ClosedPolydisc { rho1, rho2 } => {
                let a = circle(Complex64::new(0.0, 0.0), *rho1);
                let b = circle(Complex64::new(0.0, 0.0), *rho2);
                a.iter().flat_map(|&x| b.iter().map(move |&y| Point::two(x, y))).collect()
            }
            CompactKind::ClosedBall { center, r } => match self.dim {
                1 => circle(center.z(), *r).into_iter().map(Point::one).collect(),
                _ => sphere_samples(center, *r, per_circle * per_circle),
            },
        }
    }

    /// A small probe set covering K (center, interior rings and the boundary).
    pub fn probe_points(&self) -> Vec<Point> {
        let fractions = [0.0, 0.35, 0.7, 1.0];
        let angles = 8;
        let mut out = Vec::new();
        match &self.kind {
            CompactKind::ClosedDisk { rho } => {
                polar_probe(Complex64::new(0.0, 0.0), *rho, &fractions, angles, &mut out);
            }
            CompactKind::ClosedBall { center, r } if self.dim == 1 => {
                polar_probe(center.z(), *r, &fractions, angles, &mut out);
            }
            CompactKind::ClosedPolydisc { rho1, rho2 } => {
                for &f1 in &fractions {
                    for &f2 in &fractions {
                        for j in 0..4 {
                            let t = 2.0 * PI * j as f64 / 4.0;
                            out.push(Point::two(
                                Complex64::from_polar(rho1 * f1, t),
                                Complex64::from_polar(rho2 * f2, 0.5 * t),
                            ));
                        }
                    }
                }
            }
            CompactKind::ClosedBall { center, r } => {
                out.push(*center);
                for &f in &fractions[1..] {
                    out.extend(sphere_samples(center, r * f, 27));
                }
            }
        }
        out
    }
}

fn polar_probe(c: Complex64, rho: f64, fractions: &[f64], angles: usize, out: &mut Vec<Point>) {
    for &f in fractions {
        if f == 0.0 {
            out.push(Point::one(c));
            continue;
        }
        for j in 0..angles {
            let t = 2.0 * PI * (j as f64 + 0.5 * f) / angles as f64;
            out.push(Point::one(c + Complex64::from_polar(rho * f, t)));
        }
    }
}

/// A partition of a closed disk into annular sectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarCells {
    pub center: Complex64,
    pub radius: f64,
    pub rings: usize,
    pub sectors: usize,
}

/// One annular sector {r0 <= |z - c| < r1, t0 <= arg < t1}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub center: Complex64,
    pub r0: f64,
    pub r1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl Cell {
    pub fn area(&self) -> f64 {
        0.5 * (self.t1 - self.t0) * (self.r1 * self.r1 - self.r0 * self.r0)
    }

    /// Representative point: mid radius (in area) and mid angle.
    pub fn representative(&self) -> Complex64 {
        let r = (0.5 * (self.r0 * self.r0 + self.r1 * self.r1)).sqrt();
        self.center + Complex64::from_polar(r, 0.5 * (self.t0 + self.t1))
    }
}

impl PolarCells {
    pub fn new(center: Complex64, radius: f64, rings: usize, sectors: usize) -> Result<Self> {
        if rings == 0 || sectors == 0 || !(radius > 0.0) {
            return Err(Error::invalid("polar cells need rings, sectors >= 1 and a positive radius"));
        }
        Ok(PolarCells { center, radius, rings, sectors })
    }

    /// Cells covering a closed disk or a one-dimensional closed ball.
    pub fn covering(k: &CompactSubset, rings: usize, sectors: usize) -> Result<Self> {
        match k.kind() {
            CompactKind::ClosedDisk { rho } => Self::new(Complex64::new(0.0, 0.0), *rho, rings, sectors),
            CompactKind::ClosedBall { center, r } if k.dim() == 1 => Self::new(center.z(), *r, rings, sectors),
            _ => Err(Error::invalid("polar cells require a one-dimensional disk")),
        }
    }

    pub fn len(&self) -> usize {
        self.rings * self.sectors
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self, index: usize) -> Cell {
        let ring = index / self.sectors;
        let sector = index % self.sectors;
        let dr = self.radius / self.rings as f64;
        let dt = 2.0 * PI / self.sectors as f64;
        Cell {
            center: self.center,
            r0: dr * ring as f64,
            r1: dr * (ring + 1) as f64,
            t0: dt * sector as f64,
            t1: dt * (sector + 1) as f64,
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(move |i| self.cell(i))
    }

    pub fn ring_of(&self, index: usize) -> usize {
        index / self.sectors
    }

    /// Index of the cell containing `z`, or None outside the closed disk.
    pub fn locate(&self, z: Complex64) -> Option<usize> {
        let d = z - self.center;
        let r = d.norm();
        if r > self.radius {
            return None;
        }
        let ring = ((r / self.radius * self.rings as f64) as usize).min(self.rings - 1);
        let mut t = d.im.atan2(d.re);
        if t < 0.0 {
            t += 2.0 * PI;
        }
        let sector = ((t / (2.0 * PI) * self.sectors as f64) as usize).min(self.sectors - 1);
        Some(ring * self.sectors + sector)
    }
}

/// Points of a compact subset with the areas (or volumes) of the cells they represent.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalGrid {
    pub points: Vec<Point>,
    pub cell_areas: Vec<f64>,
}

impl EvalGrid {
    /// Cell representatives of a polar partition of K (product partition for the polydisc).
    pub fn polar(k: &CompactSubset, rings: usize, sectors: usize) -> Result<Self> {
        let grid = match k.kind() {
            CompactKind::ClosedPolydisc { rho1, rho2 } => {
                let a = PolarCells::new(Complex64::new(0.0, 0.0), *rho1, rings, sectors)?;
                let b = PolarCells::new(Complex64::new(0.0, 0.0), *rho2, rings, sectors)?;
                let mut points = Vec::new();
                let mut cell_areas = Vec::new();
                for ca in a.cells() {
                    for cb in b.cells() {
                        points.push(Point::two(ca.representative(), cb.representative()));
                        cell_areas.push(ca.area() * cb.area());
                    }
                }
                EvalGrid { points, cell_areas }
            }
            CompactKind::ClosedBall { .. } if k.dim() == 2 => {
                let rule = crate::quadrature::QuadratureRule::on_compact(k, rings.max(2), sectors.max(4))?;
                EvalGrid { points: rule.nodes().to_vec(), cell_areas: rule.weights().to_vec() }
            }
            _ => {
                let cells = PolarCells::covering(k, rings, sectors)?;
                EvalGrid {
                    points: cells.cells().map(|c| Point::one(c.representative())).collect(),
                    cell_areas: cells.cells().map(|c| c.area()).collect(),
                }
            }
        };
        debug_assert!(grid.points.iter().all(|p| k.contains(p)));
        Ok(grid)
    }

    pub fn total_area(&self) -> f64 {
        self.cell_areas.iter().sum()
    }
}
