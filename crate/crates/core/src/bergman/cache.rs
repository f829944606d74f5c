//! Content-addressed on-disk cache of orthonormal bases.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{auto_basis, gram_matrix, orthonormalize, GramMatrix, GramProvenance, OrthonormalBasis, Truncation};
use crate::error::{Error, Result};
use crate::geometry::{CompactSubset, Domain, Weight};
use crate::quadrature::rule_for;

pub const SCHEMA_VERSION: u32 = 1;
pub const CACHE_ENV: &str = "GAF_CACHE_DIR";

pub(crate) fn content_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum DegreePolicy {
    Fixed { degree: usize },
    Auto { tol: f64, m_max: usize },
}

/// Everything that determines a basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisRequest {
    pub domain: Domain,
    pub weight: Weight,
    pub n: u32,
    pub policy: DegreePolicy,
    pub orders: Option<(usize, usize)>,
    /// Compact subset on which the truncation criterion is measured (auto policy).
    pub compact: Option<CompactSubset>,
}

#[derive(Clone, Debug)]
pub struct BuiltBasis {
    pub basis: Arc<OrthonormalBasis>,
    pub truncation: Option<Truncation>,
}

impl BasisRequest {
    pub fn hash(&self) -> String {
        content_hash(serde_json::to_string(self).expect("basis request serializes").as_bytes())
    }

    pub fn build(&self) -> Result<BuiltBasis> {
        match &self.policy {
            DegreePolicy::Fixed { degree } => {
                let rule = rule_for(&self.domain, &self.weight, *degree, self.orders)?;
                let gram = gram_matrix(&self.domain, &rule, &self.weight, self.n, *degree)?;
                Ok(BuiltBasis { basis: Arc::new(orthonormalize(&gram)?), truncation: None })
            }
            DegreePolicy::Auto { tol, m_max } => {
                let k = self
                    .compact
                    .as_ref()
                    .ok_or_else(|| Error::invalid("automatic truncation needs a compact subset"))?;
                let (basis, t) = auto_basis(&self.domain, &self.weight, self.n, k, *tol, *m_max, self.orders)?;
                Ok(BuiltBasis { basis: Arc::new(basis), truncation: Some(t) })
            }
        }
    }
}

/// On-disk record: coefficients and Gram matrix as row-major (re, im) pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisRecord {
    pub schema_version: u32,
    pub config_hash: String,
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub n: u32,
    #[serde(rename = "T")]
    pub t: Vec<[f64; 2]>,
    #[serde(rename = "G")]
    pub g: Vec<[f64; 2]>,
    pub orthonormality_residual: f64,
    pub provenance: GramProvenance,
    pub truncation: Option<Truncation>,
}

fn to_pairs(m: &DMatrix<Complex64>) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

fn from_pairs(d: usize, pairs: &[[f64; 2]]) -> Result<DMatrix<Complex64>> {
    if pairs.len() != d * d {
        return Err(Error::Cache(format!("expected {} entries, found {}", d * d, pairs.len())));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| Complex64::new(pairs[i * d + j][0], pairs[i * d + j][1])))
}

impl BasisRecord {
    pub fn new(hash: String, built: &BuiltBasis) -> Self {
        let b = &built.basis;
        BasisRecord {
            schema_version: SCHEMA_VERSION,
            config_hash: hash,
            d: b.dim(),
            m: b.degree(),
            n: b.n(),
            t: to_pairs(b.coefficients()),
            g: to_pairs(b.gram().entries()),
            orthonormality_residual: b.residual(),
            provenance: b.gram().provenance().clone(),
            truncation: built.truncation.clone(),
        }
    }

    /// Rebuilds the basis, refusing records with another schema or hash.
    pub fn into_basis(self, expected_hash: &str) -> Result<BuiltBasis> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Cache(format!("schema version {} != {SCHEMA_VERSION}", self.schema_version)));
        }
        if self.config_hash != expected_hash {
            return Err(Error::Cache("config hash mismatch".into()));
        }
        let t = from_pairs(self.d, &self.t)?;
        let g = from_pairs(self.d, &self.g)?;
        let gram = GramMatrix::from_entries(g, self.provenance)?;
        let basis = OrthonormalBasis::from_parts(t, gram)?;
        Ok(BuiltBasis { basis: Arc::new(basis), truncation: self.truncation })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Built,
    Rebuilt,
}

#[derive(Clone, Debug)]
pub struct BasisCache {
    dir: PathBuf,
}

impl BasisCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        BasisCache { dir: dir.into() }
    }

    /// `GAF_CACHE_DIR` if set, otherwise `fallback`.
    pub fn from_env_or(fallback: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) => Self::new(dir),
            None => Self::new(fallback),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("basis-{hash}.json"))
    }

    pub fn load(&self, request: &BasisRequest) -> Result<Option<BuiltBasis>> {
        let hash = request.hash();
        let path = self.path_for(&hash);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        let record: BasisRecord = serde_json::from_str(&text).map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
        record.into_basis(&hash).map(Some)
    }

    pub fn store(&self, request: &BasisRequest, built: &BuiltBasis) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let hash = request.hash();
        let path = self.path_for(&hash);
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec(&BasisRecord::new(hash, built))?)?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Loads the basis, or builds and stores it. Unreadable records are rebuilt with a warning.
    pub fn get_or_build(&self, request: &BasisRequest) -> Result<(BuiltBasis, CacheOutcome)> {
        let outcome = match self.load(request) {
            Ok(Some(b)) => return Ok((b, CacheOutcome::Hit)),
            Ok(None) => CacheOutcome::Built,
            Err(e) => {
                log::warn!("discarding cached basis: {e}");
                CacheOutcome::Rebuilt
            }
        };
        let built = request.build()?;
        self.store(request, &built)?;
        Ok((built, outcome))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request() -> BasisRequest {
        let domain = Domain::unit_disk();
        BasisRequest {
            compact: Some(CompactSubset::closed_disk(&domain, 0.5).unwrap()),
            domain,
            weight: Weight::quadratic(1.0).unwrap(),
            n: 3,
            policy: DegreePolicy::Auto { tol: 1e-8, m_max: 40 },
            orders: None,
        }
    }

    #[test]
    fn cache_hit_equals_cold_build() {
        let dir = tempfile::tempdir().unwrap();
        let cache = BasisCache::new(dir.path());
        let req = request();
        let (cold, first) = cache.get_or_build(&req).unwrap();
        assert_eq!(first, CacheOutcome::Built);
        let (hit, second) = cache.get_or_build(&req).unwrap();
        assert_eq!(second, CacheOutcome::Hit);
        let diff = (cold.basis.coefficients() - hit.basis.coefficients()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
        assert_eq!(cold.truncation, hit.truncation);
    }

    #[test]
    fn corrupted_or_mismatched_records_are_rebuilt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = BasisCache::new(dir.path());
        let req = request();
        let path = cache.path_for(&req.hash());
        fs::write(&path, "{ not json").unwrap();
        let (_, outcome) = cache.get_or_build(&req).unwrap();
        assert_eq!(outcome, CacheOutcome::Rebuilt);

        let mut record: BasisRecord = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        record.schema_version += 1;
        fs::write(&path, serde_json::to_string(&record).unwrap()).unwrap();
        assert!(matches!(cache.load(&req), Err(Error::Cache(_))));

        record.schema_version = SCHEMA_VERSION;
        record.config_hash = "0".repeat(64);
        assert!(matches!(record.into_basis(&req.hash()), Err(Error::Cache(_))));
    }

    #[test]
    fn hash_depends_on_content() {
        let a = request();
        let mut b = request();
        b.n = 4;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), request().hash());
    }
}
