//! Gram matrices of monomials in H(nu), their Cholesky orthonormalization, the
//! truncated Bergman kernel B_n and the envelope u_n = (1/2n) log B_n(z, z).

mod basis;
pub mod cache;
mod gram;
mod monomial;
mod truncation;

pub use basis::{orthonormalize, KernelEvaluator, OrthonormalBasis, CHOLESKY_JITTER, ORTHONORMALITY_LIMIT};
pub use cache::{BasisCache, BasisRecord, BasisRequest, BuiltBasis, CacheOutcome, DegreePolicy};
pub use gram::{gram_matrix, GramMatrix, GramProvenance};
pub use monomial::MonomialBasis;
pub use truncation::{auto_basis, capped_basis, truncation_degree, truncation_from_basis, Truncation, DEGREE_STEP};

