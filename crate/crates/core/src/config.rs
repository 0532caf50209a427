//! JSON run configuration shared by the CLI commands.
//!
//! Every key is optional; missing keys take the defaults below and unknown
//! keys are rejected. Example:
//!
//! ```json
//! {
//!   "encoding": { "height": 14, "width": 14, "model_dim": 192, "projection_seed": 0,
//!                 "lattice": { "max_m": 12, "max_n": 12 } },
//!   "periods": "exact",
//!   "verify": { "samples": 200, "seed": 0 },
//!   "decay": { "bins": 80, "noise_seed": null },
//!   "bench": { "k_list": [8, 24, 48, 100, 168, 624], "points": 50, "seed": 0, "oracle_truncation": 48 },
//!   "hybrid": { "lambda_raw": 0.0 }
//! }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::elliptic::{lemniscatic_half_periods, LatticeConfig};
use crate::encoding::EncodingConfig;
use crate::{Error, Result};

/// Which half-periods a command evaluates with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Periods {
    /// The encoder's reference constants (`ω1 = 2.62205755429212`, square).
    Reference,
    /// The square lattice whose invariants are exactly `(g2, 0)`.
    Exact,
    /// `omega1` and `omega3` exactly as given in the lattice section.
    Custom,
}

impl Periods {
    /// Replaces the half-periods of `lattice` according to `self`.
    pub fn apply(self, lattice: &LatticeConfig) -> Result<LatticeConfig> {
        let mut out = lattice.clone();
        match self {
            Periods::Custom => {}
            Periods::Reference => {
                let p = lemniscatic_half_periods(1.0, 0.0, lattice.eps)?;
                out.omega1 = p.omega1;
                out.omega3 = p.omega3;
            }
            Periods::Exact => {
                let exact = LatticeConfig::lemniscatic(lattice.g2)?;
                out.omega1 = exact.omega1;
                out.omega3 = exact.omega3;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayOptions {
    pub bins: usize,
    /// When set, content noise from this seed is fused into the grid first.
    pub noise_seed: Option<u64>,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self {
            bins: crate::analysis::DEFAULT_BINS,
            noise_seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchOptions {
    pub k_list: Vec<usize>,
    pub points: usize,
    pub seed: u64,
    pub oracle_truncation: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            k_list: vec![8, 24, 48, 100, 168, 624],
            points: 50,
            seed: 0,
            oracle_truncation: 48,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridOptions {
    pub lambda_raw: f64,
}

impl Default for HybridOptions {
    fn default() -> Self {
        Self { lambda_raw: 0.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub encoding: EncodingConfig,
    /// `None` lets each command choose: `exact` for `verify` and `bench`,
    /// `custom` (the lattice section as written) elsewhere.
    pub periods: Option<Periods>,
    pub verify: VerifyOptions,
    pub decay: DecayOptions,
    pub bench: BenchOptions,
    pub hybrid: HybridOptions,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; `None` yields the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => Self::from_json(&fs::read_to_string(p)?),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The lattice after applying `periods`, or `fallback` when unset.
    pub fn resolved_lattice(&self, fallback: Periods) -> Result<LatticeConfig> {
        self.periods
            .unwrap_or(fallback)
            .apply(&self.encoding.lattice)
    }

    /// The encoding config with its lattice resolved (`custom` when unset).
    pub fn resolved_encoding(&self) -> Result<EncodingConfig> {
        let mut enc = self.encoding.clone();
        enc.lattice = self.resolved_lattice(Periods::Custom)?;
        enc.validate()?;
        Ok(enc)
    }
}
