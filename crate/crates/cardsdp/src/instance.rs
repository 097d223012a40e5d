//! Problem data model: validation, canonical JSON serialization, and a
//! seeded synthetic-instance generator.
//!
//! The canonical on-disk format is
//! `{"n": int, "aleph": int, "rho": float, "mu": [float×n], "u": [float×n],
//! "Q": [[float×n]×n]}` with the full row-major covariance written out;
//! the loader checks the two triangles against each other.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{sym_eigvals, SymMatrix};

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-8;

#[derive(Error, Debug)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instance JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ValidationError {
    #[error("n must be positive")]
    ZeroDimension,
    #[error("{field} has length {found}, expected {expected}")]
    BadLength {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("Q is not symmetric: |Q[{i}][{j}] - Q[{j}][{i}]| = {diff:e} exceeds tolerance")]
    AsymmetricQ { i: usize, j: usize, diff: f64 },
    #[error("Q is not positive semidefinite: lambda_min = {lambda_min:e}")]
    NotPsd { lambda_min: f64 },
    #[error("upper bound u[{i}] = {value} is negative")]
    NegativeUpperBound { i: usize, value: f64 },
    #[error("aleph = {aleph} outside 0..={n}")]
    AlephOutOfRange { aleph: usize, n: usize },
    #[error("non-finite value in {field}")]
    NonFinite { field: &'static str },
}

/// Validated problem data. Immutable after construction, so it can be
/// shared freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    aleph: usize,
    rho: f64,
    mu: Vec<f64>,
    u: Vec<f64>,
    q: SymMatrix,
}

/// Serde-facing mirror of the canonical JSON schema.
#[derive(Serialize, Deserialize)]
struct RawInstance {
    n: usize,
    aleph: usize,
    rho: f64,
    mu: Vec<f64>,
    u: Vec<f64>,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
}

impl Instance {
    /// Validate and build an instance from raw rows of Q. The lower
    /// triangle is authoritative after the symmetry check passes.
    pub fn new(
        aleph: usize,
        rho: f64,
        mu: Vec<f64>,
        u: Vec<f64>,
        q_rows: &[Vec<f64>],
    ) -> Result<Instance, ValidationError> {
        let n = mu.len();
        if n == 0 {
            return Err(ValidationError::ZeroDimension);
        }
        if u.len() != n {
            return Err(ValidationError::BadLength {
                field: "u",
                expected: n,
                found: u.len(),
            });
        }
        if q_rows.len() != n {
            return Err(ValidationError::BadLength {
                field: "Q",
                expected: n,
                found: q_rows.len(),
            });
        }
        for row in q_rows {
            if row.len() != n {
                return Err(ValidationError::BadLength {
                    field: "Q row",
                    expected: n,
                    found: row.len(),
                });
            }
        }
        if !rho.is_finite() {
            return Err(ValidationError::NonFinite { field: "rho" });
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(ValidationError::NonFinite { field: "mu" });
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(ValidationError::NonFinite { field: "u" });
        }
        if q_rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ValidationError::NonFinite { field: "Q" });
        }
        if aleph > n {
            return Err(ValidationError::AlephOutOfRange { aleph, n });
        }
        for (i, &ui) in u.iter().enumerate() {
            if ui < 0.0 {
                return Err(ValidationError::NegativeUpperBound { i, value: ui });
            }
        }

        let q_max = q_rows.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        let sym_tol = SYMMETRY_TOL * (1.0 + q_max);
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = (q_rows[i][j] - q_rows[j][i]).abs();
                if diff > sym_tol {
                    return Err(ValidationError::AsymmetricQ { i, j, diff });
                }
            }
        }
        let q = SymMatrix::from_fn_lower(n, |i, j| q_rows[i][j]);

        let eigs = sym_eigvals(&q).map_err(|_| ValidationError::NotPsd {
            lambda_min: f64::NEG_INFINITY,
        })?;
        let lambda_min = eigs[0];
        let lambda_max = eigs[n - 1];
        if lambda_min < -PSD_TOL * (1.0 + lambda_max.max(0.0)) {
            return Err(ValidationError::NotPsd { lambda_min });
        }

        Ok(Instance {
            n,
            aleph,
            rho,
            mu,
            u,
            q,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn aleph(&self) -> usize {
        self.aleph
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.u
    }

    pub fn covariance(&self) -> &SymMatrix {
        &self.q
    }

    /// Same data under a different cardinality cap. The published instance
    /// files carry one cap, but the experiment protocol reuses each data
    /// set under several caps.
    pub fn with_aleph(&self, aleph: usize) -> Result<Instance, ValidationError> {
        if aleph > self.n {
            return Err(ValidationError::AlephOutOfRange { aleph, n: self.n });
        }
        let mut inst = self.clone();
        inst.aleph = aleph;
        Ok(inst)
    }

    /// Portfolio risk xᵀQx.
    pub fn risk(&self, x: &[f64]) -> f64 {
        self.q.quad_form(x)
    }

    /// Expected return μᵀx.
    pub fn expected_return(&self, x: &[f64]) -> f64 {
        crate::linalg::dot(&self.mu, x)
    }

    /// Largest expected return attainable by a single asset under its box
    /// and the unit budget. Any return floor below this is feasible for
    /// every cardinality cap ≥ 1.
    pub fn max_single_asset_return(&self) -> f64 {
        (0..self.n)
            .map(|i| self.mu[i] * self.u[i].min(1.0))
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    }

    fn to_raw(&self) -> RawInstance {
        RawInstance {
            n: self.n,
            aleph: self.aleph,
            rho: self.rho,
            mu: self.mu.clone(),
            u: self.u.clone(),
            q: (0..self.n).map(|i| self.q.row(i).to_vec()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("instance serialization")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        let path = path.as_ref();
        let mut file = fs::File::create(path).map_err(|source| InstanceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let body = self.to_json();
        file.write_all(body.as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .map_err(|source| InstanceError::Io {
                path: path.display().to_string(),
                source,
            })
    }
}

/// Load and validate an instance from the canonical JSON format.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance(&text)
}

/// Parse the canonical JSON format from a string.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let raw: RawInstance = serde_json::from_str(text)?;
    if raw.n != raw.mu.len() {
        return Err(ValidationError::BadLength {
            field: "mu",
            expected: raw.n,
            found: raw.mu.len(),
        }
        .into());
    }
    Ok(Instance::new(raw.aleph, raw.rho, raw.mu, raw.u, &raw.q)?)
}

/// Parameters for the synthetic generator. The covariance comes from a
/// factor model Q = F Fᵀ + D with D diagonal positive, so it is positive
/// definite by construction; the return floor is placed at a quantile of
/// the single-asset return range, which keeps every cap ≥ 1 feasible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub seed: u64,
    pub factor_count: usize,
    /// In (0,1): rho = quantile · (best single-asset return).
    pub target_rho_quantile: f64,
    pub aleph: usize,
}

impl GenSpec {
    pub fn new(n: usize, seed: u64) -> GenSpec {
        GenSpec {
            n,
            seed,
            factor_count: 4.min(n.max(1)),
            target_rho_quantile: 0.5,
            aleph: n.min(3),
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.n == 0 {
            return Err(ValidationError::ZeroDimension);
        }
        if self.factor_count == 0 {
            return Err(ValidationError::BadLength {
                field: "factor_count",
                expected: 1,
                found: 0,
            });
        }
        if !(self.target_rho_quantile > 0.0 && self.target_rho_quantile < 1.0) {
            return Err(ValidationError::NonFinite {
                field: "target_rho_quantile",
            });
        }
        if self.aleph > self.n {
            return Err(ValidationError::AlephOutOfRange {
                aleph: self.aleph,
                n: self.n,
            });
        }
        Ok(())
    }
}

/// Deterministic in the seed: the same `GenSpec` always produces the same
/// bytes on disk.
pub fn generate_instance(spec: &GenSpec) -> Result<Instance, ValidationError> {
    spec.validate()?;
    let n = spec.n;
    let k = spec.factor_count;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // factor loadings, then idiosyncratic variances, then returns, then
    // caps; idiosyncratic risk dominates the common factors, as in daily
    // equity covariances
    let f: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..k).map(|_| rng.random_range(-0.08..0.08)).collect())
        .collect();
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..0.08)).collect();
    let mu: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..0.18)).collect();
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..1.0)).collect();

    let q_rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut v: f64 = (0..k).map(|t| f[i][t] * f[j][t]).sum();
                    if i == j {
                        v += d[i];
                    }
                    v
                })
                .collect()
        })
        .collect();

    let best_single = mu
        .iter()
        .zip(&u)
        .map(|(m, ui)| m * ui.min(1.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let rho = spec.target_rho_quantile * best_single;

    Instance::new(spec.aleph, rho, mu, u, &q_rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_json() -> String {
        r#"{
            "n": 3, "aleph": 1, "rho": 0.5,
            "mu": [1.0, 1.0, 1.0],
            "u": [1.0, 1.0, 1.0],
            "Q": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        }"#
        .to_string()
    }

    #[test]
    fn identity_covariance_round_trip() {
        let inst = parse_instance(&identity_json()).unwrap();
        assert_eq!(inst.n(), 3);
        assert_eq!(inst.aleph(), 1);
        assert_eq!(inst.rho(), 0.5);
        assert_eq!(inst.mu(), &[1.0, 1.0, 1.0]);
        assert_eq!(inst.upper_bounds(), &[1.0, 1.0, 1.0]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(inst.covariance().get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn asymmetric_q_rejected() {
        let text = r#"{
            "n": 2, "aleph": 1, "rho": 0.0,
            "mu": [0.1, 0.1], "u": [1.0, 1.0],
            "Q": [[1.0, 1.0], [2.0, 1.0]]
        }"#;
        match parse_instance(text) {
            Err(InstanceError::Validation(ValidationError::AsymmetricQ { i: 0, j: 1, .. })) => {}
            other => panic!("expected AsymmetricQ, got {other:?}"),
        }
    }

    #[test]
    fn indefinite_q_rejected() {
        let text = r#"{
            "n": 2, "aleph": 1, "rho": 0.0,
            "mu": [0.1, 0.1], "u": [1.0, 1.0],
            "Q": [[1.0, 2.0], [2.0, 1.0]]
        }"#;
        match parse_instance(text) {
            Err(InstanceError::Validation(ValidationError::NotPsd { lambda_min })) => {
                assert!((lambda_min + 1.0).abs() < 1e-9);
            }
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn negative_upper_bound_rejected() {
        let text = r#"{
            "n": 1, "aleph": 1, "rho": 0.0,
            "mu": [0.1], "u": [-0.5], "Q": [[1.0]]
        }"#;
        match parse_instance(text) {
            Err(InstanceError::Validation(ValidationError::NegativeUpperBound {
                i: 0, ..
            })) => {}
            other => panic!("expected NegativeUpperBound, got {other:?}"),
        }
    }

    #[test]
    fn aleph_out_of_range_rejected() {
        let text = r#"{
            "n": 1, "aleph": 2, "rho": 0.0,
            "mu": [0.1], "u": [1.0], "Q": [[1.0]]
        }"#;
        match parse_instance(text) {
            Err(InstanceError::Validation(ValidationError::AlephOutOfRange { aleph: 2, n: 1 })) => {
            }
            other => panic!("expected AlephOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_parse_error() {
        match parse_instance("{\"n\": 3") {
            Err(InstanceError::Parse(_)) => {}
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn save_load_round_trip() {
        let inst = generate_instance(&GenSpec::new(7, 42)).unwrap();
        let dir = std::env::temp_dir().join(format!("cardsdp-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.json");
        inst.save(&path).unwrap();
        let back = load_instance(&path).unwrap();
        assert_eq!(inst, back);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_instance(&GenSpec::new(10, 7)).unwrap();
        let b = generate_instance(&GenSpec::new(10, 7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn generator_is_seed_sensitive() {
        let a = generate_instance(&GenSpec::new(10, 7)).unwrap();
        let b = generate_instance(&GenSpec::new(10, 8)).unwrap();
        assert_ne!(a.covariance(), b.covariance());
    }

    #[test]
    fn generated_covariance_is_psd() {
        // eigendecomposition check on the generated matrix
        for seed in 0..5 {
            let inst = generate_instance(&GenSpec::new(12, seed)).unwrap();
            let eigs = sym_eigvals(inst.covariance()).unwrap();
            assert!(eigs[0] >= -1e-10, "seed {seed}: lambda_min = {}", eigs[0]);
        }
    }

    #[test]
    fn generated_rho_is_single_asset_feasible() {
        for seed in 0..5 {
            let inst = generate_instance(&GenSpec::new(9, seed)).unwrap();
            assert!(inst.rho() < inst.max_single_asset_return());
        }
    }
}
