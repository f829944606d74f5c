//! Gaussian analytic functions f_n = Σ a_j σ_j with i.i.d. standard complex Gaussian
//! coefficients, drawn from counter-based random streams.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bergman::OrthonormalBasis;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::stats::{ks_critical_1pct, ks_exp1};

/// Lower clamp for (1/n) log|f|.
pub const LOG_MODULUS_FLOOR: f64 = -1e3;

/// Identifies one independent random stream: the generator is keyed by a hash of all
/// four ids, so distinct ids give unrelated streams and equal ids identical draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub experiment: u32,
    pub n: u32,
    pub trial: u64,
}

impl RngStream {
    pub fn new(seed: u64, experiment: u32, n: u32, trial: u64) -> Self {
        RngStream { seed, experiment, n, trial }
    }

    pub fn with_trial(self, trial: u64) -> Self {
        RngStream { trial, ..self }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut h = Sha256::new();
        h.update(b"bergman-gaf/stream/v1");
        h.update(self.seed.to_le_bytes());
        h.update(self.experiment.to_le_bytes());
        h.update(self.n.to_le_bytes());
        h.update(self.trial.to_le_bytes());
        let key: [u8; 32] = h.finalize().into();
        ChaCha20Rng::from_seed(key)
    }
}

/// N_C(0, 1): independent real and imaginary parts of variance 1/2.
pub fn standard_complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `count` draws from the stream, in order.
pub fn complex_gaussians(stream: &RngStream, count: usize) -> Vec<Complex64> {
    let mut rng = stream.rng();
    (0..count).map(|_| standard_complex_gaussian(&mut rng)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KsCheck {
    pub distance: f64,
    pub critical_1pct: f64,
    pub trials: usize,
}

impl KsCheck {
    pub fn passed(&self) -> bool {
        self.distance < self.critical_1pct
    }
}

/// Draws |Σ c_j a_j|² / Σ|c_j|² `trials` times.
pub fn normalized_combination_moduli(c: &[Complex64], trials: usize, stream: &RngStream) -> Result<Vec<f64>> {
    let norm2: f64 = c.iter().map(|x| x.norm_sqr()).sum();
    if !(norm2 > 0.0 && norm2.is_finite()) {
        return Err(Error::invalid("coefficient vector must be finite and not identically zero"));
    }
    let mut rng = stream.rng();
    Ok((0..trials)
        .map(|_| {
            let s: Complex64 = c.iter().map(|cj| cj * standard_complex_gaussian(&mut rng)).sum();
            s.norm_sqr() / norm2
        })
        .collect())
}

/// KS distance of |Σ c_j a_j|² / Σ|c_j|² against Exp(1).
pub fn gaussian_linear_combination_check(c: &[Complex64], trials: usize, stream: &RngStream) -> Result<KsCheck> {
    let samples = normalized_combination_moduli(c, trials, stream)?;
    Ok(KsCheck { distance: ks_exp1(&samples), critical_1pct: ks_critical_1pct(trials), trials })
}

/// One realization f_n = Σ_j a_j σ_j of the degree-M truncation.
#[derive(Clone, Debug)]
pub struct GafSample {
    n: u32,
    coeffs: Vec<Complex64>,
    monomial: Vec<Complex64>,
    basis: Arc<OrthonormalBasis>,
    stream: Option<RngStream>,
}

impl GafSample {
    /// A sample with given coefficients in the basis (σ_j).
    pub fn from_coefficients(basis: Arc<OrthonormalBasis>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(Error::invalid(format!(
                "expected {} coefficients, got {}",
                basis.dim(),
                coeffs.len()
            )));
        }
        if let Some(j) = coeffs.iter().position(|a| !a.is_finite()) {
            return Err(Error::invalid(format!("coefficient {j} is not finite")));
        }
        let t = basis.coefficients();
        let d = coeffs.len();
        let monomial = (0..d)
            .map(|k| (0..d).map(|j| t[(k, j)] * coeffs[j]).sum::<Complex64>())
            .collect();
        Ok(GafSample { n: basis.n(), coeffs, monomial, basis, stream: None })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// c = T a, so that f(z) = Σ_k c_k z^k over the monomial ordering of the basis.
    pub fn monomial_coefficients(&self) -> &[Complex64] {
        &self.monomial
    }

    pub fn basis(&self) -> &Arc<OrthonormalBasis> {
        &self.basis
    }

    pub fn stream(&self) -> Option<RngStream> {
        self.stream
    }

    pub fn eval(&self, z: &Point) -> Complex64 {
        if z.dim() == 1 {
            return crate::geometry::horner(&self.monomial, z.z());
        }
        let mut m = vec![Complex64::new(0.0, 0.0); self.monomial.len()];
        self.basis.monomials().eval_into(z, &mut m);
        m.iter().zip(&self.monomial).map(|(a, b)| a * b).sum()
    }

    /// f and f' for N = 1.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        (crate::geometry::horner(&self.monomial, z), crate::geometry::horner_derivative(&self.monomial, z))
    }

    pub fn normalized_log_modulus(&self, z: &Point) -> LogModulus {
        log_modulus(self.eval(z), self.n)
    }
}

/// (1/n) log|f| with the clamp flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogModulus {
    pub value: f64,
    pub clamped: bool,
}

pub(crate) fn log_modulus(f: Complex64, n: u32) -> LogModulus {
    let v = f.norm().ln() / n as f64;
    if v.is_finite() && v >= LOG_MODULUS_FLOOR {
        LogModulus { value: v, clamped: false }
    } else {
        LogModulus { value: LOG_MODULUS_FLOOR, clamped: true }
    }
}

/// Draws a_j ~ N_C(0, 1) i.i.d. from `stream`.
pub fn sample_gaf(basis: &Arc<OrthonormalBasis>, stream: RngStream) -> GafSample {
    let coeffs = complex_gaussians(&stream, basis.dim());
    let mut s = GafSample::from_coefficients(basis.clone(), coeffs).expect("Gaussian draws are finite");
    s.stream = Some(stream);
    s
}

pub fn eval_gaf(sample: &GafSample, z: &Point) -> Complex64 {
    sample.eval(z)
}

pub fn normalized_log_modulus(sample: &GafSample, z: &Point) -> LogModulus {
    sample.normalized_log_modulus(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::{gram_matrix, orthonormalize};
    use crate::geometry::{Domain, Weight};
    use crate::quadrature::rule_for;
    use crate::stats::{ks_critical_1pct_two_sample, ks_two_sample};
    use std::f64::consts::PI;

    fn basis(u: &Weight, n: u32, m: usize) -> Arc<OrthonormalBasis> {
        let domain = Domain::unit_disk();
        let rule = rule_for(&domain, u, m, None).unwrap();
        Arc::new(orthonormalize(&gram_matrix(&domain, &rule, u, n, m).unwrap()).unwrap())
    }

    #[test]
    fn gaussian_moments() {
        let draws = complex_gaussians(&RngStream::new(1, 0, 0, 0), 100_000);
        let mean: Complex64 = draws.iter().sum::<Complex64>() / draws.len() as f64;
        assert!(mean.norm() < 4.0 / (1e5f64).sqrt());
        let m2 = draws.iter().map(|a| a.norm_sqr()).sum::<f64>() / draws.len() as f64;
        assert!((0.97..=1.03).contains(&m2));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = RngStream::new(7, 3, 10, 4);
        assert_eq!(complex_gaussians(&s, 8), complex_gaussians(&s, 8));
        let other = complex_gaussians(&s.with_trial(5), 8);
        assert!(complex_gaussians(&s, 8).iter().zip(&other).all(|(a, b)| a != b));
        assert_ne!(complex_gaussians(&RngStream::new(8, 3, 10, 4), 4), complex_gaussians(&s, 4));
    }

    #[test]
    fn linear_combinations_are_standard_gaussian() {
        let stream = RngStream::new(2, 0, 0, 0);
        let single = gaussian_linear_combination_check(&[Complex64::new(1.0, 0.0)], 10_000, &stream).unwrap();
        assert!(single.passed(), "{single:?}");
        // c = (1) is the single draw itself
        let direct: Vec<f64> = complex_gaussians(&stream, 5).iter().map(|a| a.norm_sqr()).collect();
        let via = normalized_combination_moduli(&[Complex64::new(1.0, 0.0)], 5, &stream).unwrap();
        for (a, b) in direct.iter().zip(&via) {
            assert!((a - b).abs() < 1e-15);
        }
        let pair = [Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)];
        let a = normalized_combination_moduli(&pair, 10_000, &RngStream::new(3, 0, 0, 0)).unwrap();
        let b = normalized_combination_moduli(&[Complex64::new(1.0, 0.0)], 10_000, &RngStream::new(4, 0, 0, 0)).unwrap();
        assert!(ks_two_sample(&a, &b) < ks_critical_1pct_two_sample(a.len(), b.len()));
        let mut rng = RngStream::new(5, 0, 0, 0).rng();
        let long: Vec<Complex64> =
            (0..1000).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        assert!(gaussian_linear_combination_check(&long, 10_000, &RngStream::new(6, 0, 0, 0)).unwrap().passed());
        assert!(gaussian_linear_combination_check(&[Complex64::new(0.0, 0.0); 3], 10, &stream).is_err());
    }

    #[test]
    fn evaluation_extracts_basis_functions() {
        let b = basis(&Weight::quadratic(1.0).unwrap(), 3, 10);
        let z = Point::re_im(0.3, -0.2);
        let sigma = b.sigma(&z);
        for j in [0, 4, 10] {
            let mut a = vec![Complex64::new(0.0, 0.0); b.dim()];
            a[j] = Complex64::new(1.0, 0.0);
            let s = GafSample::from_coefficients(b.clone(), a).unwrap();
            assert!((s.eval(&z) - sigma[j]).norm() < 1e-12 * (1.0 + sigma[j].norm()));
        }
        let zero = GafSample::from_coefficients(b.clone(), vec![Complex64::new(0.0, 0.0); b.dim()]).unwrap();
        assert_eq!(zero.eval(&z), Complex64::new(0.0, 0.0));
        assert!(zero.normalized_log_modulus(&z).clamped);
    }

    #[test]
    fn unweighted_monomial_coefficients() {
        let b = basis(&Weight::Zero, 1, 6);
        let mut a = vec![Complex64::new(0.0, 0.0); b.dim()];
        a[0] = Complex64::new(1.0, 0.0);
        let s0 = GafSample::from_coefficients(b.clone(), a.clone()).unwrap();
        assert!((s0.monomial_coefficients()[0].re - 1.0 / PI.sqrt()).abs() < 1e-12);
        let lm = s0.normalized_log_modulus(&Point::re_im(0.2, 0.1));
        assert!((lm.value - (1.0 / PI.sqrt()).ln()).abs() < 1e-12);
        a[0] = Complex64::new(0.0, 0.0);
        a[1] = Complex64::new(1.0, 0.0);
        let s1 = GafSample::from_coefficients(b.clone(), a).unwrap();
        assert!((s1.monomial_coefficients()[1].re - (2.0 / PI).sqrt()).abs() < 1e-12);
        assert!(s1.monomial_coefficients()[0].norm() < 1e-15);
    }

    #[test]
    fn sample_variance_matches_kernel_diag() {
        let b = basis(&Weight::Zero, 1, 40);
        let z = Point::re_im(0.4, 0.0);
        let trials = 10_000;
        let v: f64 = (0..trials)
            .map(|t| sample_gaf(&b, RngStream::new(9, 0, 1, t)).eval(&z).norm_sqr())
            .sum::<f64>()
            / trials as f64;
        let k = b.kernel_diag(&z);
        assert!(((v - k) / k).abs() < 0.05, "{v} vs {k}");
    }

    #[test]
    fn coefficient_means_vanish() {
        let b = basis(&Weight::Zero, 1, 4);
        let trials = 10_000u64;
        let mut sum = vec![Complex64::new(0.0, 0.0); b.dim()];
        for t in 0..trials {
            let s = sample_gaf(&b, RngStream::new(11, 0, 1, t));
            for (acc, a) in sum.iter_mut().zip(s.coefficients()) {
                *acc += a;
            }
        }
        for acc in sum {
            assert!((acc / trials as f64).norm() < 4.0 / (trials as f64).sqrt());
        }
    }

    #[test]
    fn pivot_is_standard_gaussian() {
        let b = basis(&Weight::quadratic(1.0).unwrap(), 5, 30);
        let z = Point::re_im(0.2, 0.3);
        let s2 = b.kernel_diag(&z);
        let samples: Vec<f64> = (0..10_000)
            .map(|t| sample_gaf(&b, RngStream::new(12, 0, 5, t)).eval(&z).norm_sqr() / s2)
            .collect();
        assert!(ks_exp1(&samples) < ks_critical_1pct(samples.len()));
    }

    #[test]
    fn coefficient_count_is_checked() {
        let b = basis(&Weight::Zero, 1, 3);
        assert!(GafSample::from_coefficients(b.clone(), vec![Complex64::new(1.0, 0.0); 2]).is_err());
        assert!(GafSample::from_coefficients(b, vec![Complex64::new(f64::NAN, 0.0); 4]).is_err());
    }
}
