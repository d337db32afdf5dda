//! Run configuration: defaults, JSON loading, flag merging, and the
//! content hash stamped into every output file.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tridisc::Domain;

use crate::CliError;

/// Symmetry domain selector, shared between the config file and the
/// `--domain` flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DomainChoice {
    /// Binary alphabet of the symmetry-reduced dynamics.
    Fundamental,
    /// Disc labels {0,1,2} without symmetry reduction.
    Full,
}

impl DomainChoice {
    pub fn to_domain(self) -> Domain {
        match self {
            DomainChoice::Fundamental => Domain::Fundamental,
            DomainChoice::Full => Domain::Full,
        }
    }
}

impl fmt::Display for DomainChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_domain())
    }
}

/// One run's complete parameter set. Serializes to a flat JSON object;
/// unknown keys are rejected so typos fail loudly instead of silently
/// falling back to defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Disc-centre spacing in units of the disc radius.
    pub d_over_r: f64,
    /// Longest cycle length entering tables and expansions.
    pub n_max: usize,
    /// Number of determinant bands carried by zeta assemblies and scans.
    pub k_max: usize,
    /// Symbolic domain of the cycle enumeration.
    pub domain: DomainChoice,
    /// Resonance search rectangle `[re_min, re_max, im_min, im_max]`.
    pub rect: [f64; 4],
    /// Initial cell size of the resonance scan.
    pub cell: f64,
    /// Smoothing widths for distribution grids (one output set each).
    pub sigma: Vec<f64>,
    /// Distribution grid shape `[n_q, n_p]`.
    pub grid: [usize; 2],
    /// Output directory; created if missing.
    pub out: String,
    /// Worker threads; `0` keeps the library default.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d_over_r: 6.0,
            n_max: 8,
            k_max: 2,
            domain: DomainChoice::Fundamental,
            rect: [-1.0, 0.5, 0.0, 20.0],
            cell: 0.5,
            sigma: vec![0.1, 0.001],
            grid: [400, 200],
            out: "out".into(),
            workers: 0,
        }
    }
}

impl RunConfig {
    /// Loads a config file, rejecting unreadable files and unknown keys.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Front-end range checks. Geometry, scan and grid limits are
    /// enforced again by the library; this catches what only the front
    /// end knows about (list shapes, thread counts).
    pub fn validate(&self) -> Result<(), CliError> {
        if !self.d_over_r.is_finite() {
            return Err(CliError::Config("d_over_r must be finite".into()));
        }
        if self.n_max == 0 {
            return Err(CliError::Config("n_max must be at least 1".into()));
        }
        if self.k_max == 0 {
            return Err(CliError::Config("k_max must be at least 1".into()));
        }
        if self.rect.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config("rect entries must be finite".into()));
        }
        if !(self.cell.is_finite() && self.cell > 0.0) {
            return Err(CliError::Config("cell must be positive".into()));
        }
        if self.sigma.is_empty() {
            return Err(CliError::Config("sigma list must not be empty".into()));
        }
        if self.sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(CliError::Config("sigma values must be positive".into()));
        }
        if self.workers > 1024 {
            return Err(CliError::Config("workers must be at most 1024".into()));
        }
        Ok(())
    }

    /// Canonical JSON used for hashing and round-trips: field order is
    /// the struct order, numbers print in serde_json's shortest
    /// round-trip form, so equal configs hash equally.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialization cannot fail")
    }

    /// SHA-256 over the scientific content of the config. The output
    /// directory and the worker count are normalized away: they change
    /// where results go and how fast they arrive, never what they are,
    /// and results computed with different worker counts must remain
    /// byte-identical, provenance line included.
    pub fn content_hash(&self) -> String {
        let mut canon = self.clone();
        canon.out = String::new();
        canon.workers = 0;
        let mut hasher = Sha256::new();
        hasher.update(canon.canonical_json().as_bytes());
        hex::encode(hasher.finalize())
    }
}
