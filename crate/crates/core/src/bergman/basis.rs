use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{GramMatrix, MonomialBasis};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Accepted bases satisfy max|T*GT - I| <= this.
pub const ORTHONORMALITY_LIMIT: f64 = 1e-8;
/// Diagonal jitter, relative to trace/D of the equilibrated Gram matrix.
pub const CHOLESKY_JITTER: f64 = 1e-12;

/// Truncated orthonormal basis (σ_j) of H(nu): column j of `t` holds the monomial
/// coefficients of σ_j, and only monomials of index <= j appear in it.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    t: DMatrix<Complex64>,
    gram: GramMatrix,
    /// max|T*GT - I| over the leading k x k block, for k = 0..=D.
    prefix_residual: Vec<f64>,
    /// Condition number of the diagonally equilibrated Gram matrix.
    condition: f64,
    /// T is upper triangular (false after a rotation).
    triangular: bool,
}

pub(crate) struct Factorization {
    pub t: DMatrix<Complex64>,
    /// Dimension at which Cholesky broke down, if it did; `t` then covers only the leading block.
    pub breakdown: Option<usize>,
}

/// Cholesky factor of the equilibrated, jittered Gram matrix and T = S L^{-*}, followed by
/// one refinement pass: E = T*GT is factored again without jitter and T <- T E_L^{-*}.
/// Both factors are upper triangular, so every leading block stays exact.
pub(crate) fn factor(gram: &GramMatrix) -> Factorization {
    let g = &gram.entries;
    let d = g.nrows();
    let mut usable = d;
    let mut scale = vec![0.0; d];
    for k in 0..d {
        let gkk = g[(k, k)].re;
        if !(gkk > 0.0 && gkk.is_finite()) {
            usable = k;
            break;
        }
        scale[k] = 1.0 / gkk.sqrt();
    }
    let gs = DMatrix::from_fn(usable, usable, |i, j| g[(i, j)] * (scale[i] * scale[j]));
    let (ts, first) = inverse_cholesky_adjoint(&gs, CHOLESKY_JITTER);
    let m = ts.ncols();
    let gsm = gs.view((0, 0), (m, m));
    let e = ts.adjoint() * (gsm * &ts);
    let e = DMatrix::from_fn(m, m, |i, j| if i == j { Complex64::new(e[(i, i)].re, 0.0) } else { 0.5 * (e[(i, j)] + e[(j, i)].conj()) });
    let (r, second) = inverse_cholesky_adjoint(&e, 0.0);
    let k = r.ncols();
    let mut t = ts.view((0, 0), (k, k)) * r;
    for row in 0..k {
        for col in 0..k {
            t[(row, col)] *= scale[row];
        }
    }
    let breakdown = second.or(first).or(if usable < d { Some(usable) } else { None });
    Factorization { t, breakdown }
}

/// L^{-*} for the Cholesky factor L of `a + jitter·(trace/D)·I`, truncated to the leading block
/// before the first non-positive pivot (reported).
fn inverse_cholesky_adjoint(a: &DMatrix<Complex64>, jitter: f64) -> (DMatrix<Complex64>, Option<usize>) {
    let d = a.nrows();
    let shift = if d == 0 { 0.0 } else { jitter * (0..d).map(|k| a[(k, k)].re).sum::<f64>() / d as f64 };
    let mut usable = d;
    let mut breakdown = None;
    let mut l = DMatrix::<Complex64>::zeros(d, d);
    for j in 0..d {
        let mut diag = a[(j, j)].re + shift;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !(diag > 0.0 && diag.is_finite()) {
            breakdown = Some(j);
            usable = j;
            break;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..d {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / ljj;
        }
    }
    // U = L^{-1} by forward substitution.
    let mut inv = DMatrix::<Complex64>::zeros(usable, usable);
    for c in 0..usable {
        inv[(c, c)] = Complex64::new(1.0, 0.0) / l[(c, c)];
        for i in c + 1..usable {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in c..i {
                acc += l[(i, k)] * inv[(k, c)];
            }
            inv[(i, c)] = -acc / l[(i, i)];
        }
    }
    (inv.adjoint(), breakdown)
}

/// max|T*GT - I| over every leading block.
pub(crate) fn prefix_residuals(t: &DMatrix<Complex64>, g: &DMatrix<Complex64>) -> Vec<f64> {
    let d = t.ncols();
    let gv = g.view((0, 0), (d, d));
    let gt = gv * t;
    let r = t.adjoint() * gt;
    let mut out = vec![0.0; d + 1];
    let mut running: f64 = 0.0;
    for k in 0..d {
        for i in 0..=k {
            let e = |a: usize, b: usize| {
                let id = if a == b { 1.0 } else { 0.0 };
                (r[(a, b)] - id).norm()
            };
            running = running.max(e(i, k)).max(e(k, i));
        }
        out[k + 1] = running;
    }
    out
}

fn equilibrated_condition(g: &DMatrix<Complex64>) -> f64 {
    let d = g.nrows();
    if d == 0 {
        return 1.0;
    }
    let s: Vec<f64> = (0..d).map(|k| 1.0 / g[(k, k)].re.sqrt()).collect();
    let gs = DMatrix::from_fn(d, d, |i, j| g[(i, j)] * (s[i] * s[j]));
    let ev = nalgebra::SymmetricEigen::new(gs).eigenvalues;
    let max = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Cholesky-orthonormalizes the monomials: G = L L* after equilibration and jitter,
/// T = L^{-*}. Fails on breakdown (reporting the pivot) or if the re-verified
/// orthonormality residual exceeds 1e-8.
pub fn orthonormalize(gram: &GramMatrix) -> Result<OrthonormalBasis> {
    let f = factor(gram);
    if let Some(pivot) = f.breakdown {
        return Err(Error::RankDeficient { pivot });
    }
    let basis = OrthonormalBasis::assemble(f.t, gram.clone());
    if basis.residual() > ORTHONORMALITY_LIMIT {
        return Err(Error::OrthonormalityResidual { residual: basis.residual(), limit: ORTHONORMALITY_LIMIT });
    }
    Ok(basis)
}

impl OrthonormalBasis {
    pub(crate) fn assemble(t: DMatrix<Complex64>, gram: GramMatrix) -> Self {
        let prefix_residual = prefix_residuals(&t, &gram.entries);
        let condition = equilibrated_condition(&gram.entries);
        let triangular = (0..t.ncols()).all(|j| (j + 1..t.nrows()).all(|i| t[(i, j)] == Complex64::new(0.0, 0.0)));
        OrthonormalBasis { t, gram, prefix_residual, condition, triangular }
    }

    /// Rebuilds a basis from stored coefficients (cache loads); the residual is recomputed.
    pub fn from_parts(t: DMatrix<Complex64>, gram: GramMatrix) -> Result<Self> {
        if t.nrows() != gram.dim() || t.ncols() != gram.dim() {
            return Err(Error::invalid("coefficient matrix does not match the Gram matrix"));
        }
        Ok(Self::assemble(t, gram))
    }

    pub fn coefficients(&self) -> &DMatrix<Complex64> {
        &self.t
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn monomials(&self) -> &MonomialBasis {
        &self.gram.monomials
    }

    pub fn n(&self) -> u32 {
        self.gram.provenance.n
    }

    pub fn degree(&self) -> usize {
        self.gram.monomials.degree()
    }

    pub fn dim(&self) -> usize {
        self.t.ncols()
    }

    pub fn domain_dim(&self) -> usize {
        self.gram.monomials.dim()
    }

    /// max|T*GT - I|.
    pub fn residual(&self) -> f64 {
        *self.prefix_residual.last().unwrap_or(&0.0)
    }

    pub(crate) fn prefix_residual(&self) -> &[f64] {
        &self.prefix_residual
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// The basis of the monomials of degree <= `degree` (leading block; exact by
    /// the triangular structure).
    pub fn truncate(&self, degree: usize) -> OrthonormalBasis {
        let gram = self.gram.truncate(degree);
        let d = gram.dim();
        let t = self.t.view((0, 0), (d, d)).into_owned();
        let prefix_residual = self.prefix_residual[..=d].to_vec();
        let condition = equilibrated_condition(&gram.entries);
        OrthonormalBasis { t, gram, prefix_residual, condition, triangular: self.triangular }
    }

    /// Applies a unitary change of basis σ' = σ U (columns mixed, Gram untouched).
    pub fn rotated(&self, unitary: &DMatrix<Complex64>) -> OrthonormalBasis {
        let t = &self.t * unitary;
        OrthonormalBasis::assemble(t, self.gram.clone())
    }

    pub fn evaluator(&self) -> KernelEvaluator<'_> {
        KernelEvaluator::new(self)
    }

    /// σ_j(z) for every j.
    pub fn sigma(&self, z: &Point) -> Vec<Complex64> {
        self.evaluator().sigma(z).to_vec()
    }

    /// S_n(z)^2 = Σ_j |σ_j(z)|^2.
    pub fn kernel_diag(&self, z: &Point) -> f64 {
        self.evaluator().kernel_diag(z)
    }

    pub fn log_kernel_diag(&self, z: &Point) -> f64 {
        self.evaluator().log_kernel_diag(z)
    }

    /// B_n(z, w) = Σ_j σ_j(z) conj(σ_j(w)).
    pub fn kernel(&self, z: &Point, w: &Point) -> Complex64 {
        self.evaluator().kernel(z, w)
    }

    /// u_n(z) = (1/2n) log Σ_j |σ_j(z)|^2.
    pub fn demailly_envelope(&self, z: &Point) -> f64 {
        self.evaluator().demailly_envelope(z)
    }
}

/// Reusable workspace for evaluating σ_j, the kernel and the envelope.
pub struct KernelEvaluator<'a> {
    basis: &'a OrthonormalBasis,
    monomials: Vec<Complex64>,
    sigma: Vec<Complex64>,
    sigma_w: Vec<Complex64>,
}

impl<'a> KernelEvaluator<'a> {
    pub fn new(basis: &'a OrthonormalBasis) -> Self {
        let d = basis.dim();
        let zero = Complex64::new(0.0, 0.0);
        KernelEvaluator { basis, monomials: vec![zero; d], sigma: vec![zero; d], sigma_w: vec![zero; d] }
    }

    fn fill(basis: &OrthonormalBasis, z: &Point, monomials: &mut [Complex64], out: &mut [Complex64]) {
        basis.monomials().eval_into(z, monomials);
        let t = &basis.t;
        let rows = t.nrows();
        for (j, slot) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            let last = if basis.triangular { j } else { rows - 1 };
            for k in 0..=last {
                acc += t[(k, j)] * monomials[k];
            }
            *slot = acc;
        }
    }

    pub fn sigma(&mut self, z: &Point) -> &[Complex64] {
        Self::fill(self.basis, z, &mut self.monomials, &mut self.sigma);
        &self.sigma
    }

    pub fn kernel_diag(&mut self, z: &Point) -> f64 {
        self.sigma(z).iter().map(|s| s.norm_sqr()).sum()
    }

    /// log Σ_j |σ_j|^2, accumulated with the largest |σ_j| factored out.
    pub fn log_kernel_diag(&mut self, z: &Point) -> f64 {
        let sigma = self.sigma(z);
        log_sum_squares(sigma)
    }

    pub fn kernel(&mut self, z: &Point, w: &Point) -> Complex64 {
        Self::fill(self.basis, z, &mut self.monomials, &mut self.sigma);
        Self::fill(self.basis, w, &mut self.monomials, &mut self.sigma_w);
        self.sigma.iter().zip(&self.sigma_w).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn demailly_envelope(&mut self, z: &Point) -> f64 {
        let n = self.basis.n() as f64;
        self.log_kernel_diag(z) / (2.0 * n)
    }
}

pub(crate) fn log_sum_squares(values: &[Complex64]) -> f64 {
    let max = values.iter().map(|s| s.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|s| (s.norm() / max).powi(2)).sum();
    2.0 * max.ln() + sum.ln()
}
