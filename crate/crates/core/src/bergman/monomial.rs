use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// Monomials z^α with |α| <= M, graded lexicographically: degree by degree, and within
/// degree d for N = 2 the order (d,0), (d-1,1), ..., (0,d). Index 0 is the constant 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialBasis {
    dim: usize,
    degree: usize,
    exponents: Vec<[u32; 2]>,
}

impl MonomialBasis {
    pub fn new(dim: usize, degree: usize) -> Self {
        let mut exponents = Vec::with_capacity(Self::count(dim, degree));
        for d in 0..=degree as u32 {
            if dim == 1 {
                exponents.push([d, 0]);
            } else {
                for a in (0..=d).rev() {
                    exponents.push([a, d - a]);
                }
            }
        }
        MonomialBasis { dim, degree, exponents }
    }

    /// D = M + 1 for N = 1 and (M + 1)(M + 2)/2 for N = 2.
    pub fn count(dim: usize, degree: usize) -> usize {
        match dim {
            1 => degree + 1,
            _ => (degree + 1) * (degree + 2) / 2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[[u32; 2]] {
        &self.exponents
    }

    pub fn total_degree(&self, index: usize) -> usize {
        let [a, b] = self.exponents[index];
        (a + b) as usize
    }

    /// Writes z^α for every multi-index into `out`.
    pub fn eval_into(&self, z: &Point, out: &mut [Complex64]) {
        let one = Complex64::new(1.0, 0.0);
        match self.dim {
            1 => {
                let w = z.z();
                let mut acc = one;
                for slot in out.iter_mut().take(self.len()) {
                    *slot = acc;
                    acc *= w;
                }
            }
            _ => {
                let (z1, z2) = (z.coords()[0], z.coords()[1]);
                let mut p1 = vec![one; self.degree + 1];
                let mut p2 = vec![one; self.degree + 1];
                for k in 1..=self.degree {
                    p1[k] = p1[k - 1] * z1;
                    p2[k] = p2[k - 1] * z2;
                }
                for (slot, [a, b]) in out.iter_mut().zip(&self.exponents) {
                    *slot = p1[*a as usize] * p2[*b as usize];
                }
            }
        }
    }

    pub fn eval(&self, z: &Point) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        self.eval_into(z, &mut out);
        out
    }

    /// The first `count(dim, degree)` monomials.
    pub fn truncate(&self, degree: usize) -> Self {
        let degree = degree.min(self.degree);
        let len = Self::count(self.dim, degree);
        MonomialBasis { dim: self.dim, degree, exponents: self.exponents[..len].to_vec() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_ordering() {
        let m = MonomialBasis::new(2, 3);
        assert_eq!(m.len(), 10);
        assert_eq!(m.exponents()[0], [0, 0]);
        assert_eq!(&m.exponents()[1..3], &[[1, 0], [0, 1]]);
        for i in 1..m.len() {
            assert!(m.total_degree(i) >= m.total_degree(i - 1));
        }
        assert_eq!(MonomialBasis::new(1, 7).len(), 8);
    }

    #[test]
    fn evaluation() {
        let z = Point::two(Complex64::new(0.5, 0.0), Complex64::new(0.0, 2.0));
        let v = MonomialBasis::new(2, 2).eval(&z);
        // 1, z1, z2, z1^2, z1 z2, z2^2
        let expect = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(0.25, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-4.0, 0.0),
        ];
        for (a, b) in v.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(MonomialBasis::new(2, 4).truncate(2), MonomialBasis::new(2, 2));
    }
}
