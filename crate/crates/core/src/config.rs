//! Scenario configuration, read from TOML.
//!
//! A scenario file holds scalar parameters at the top level and three
//! tables: `[geometry]`, `[fading]` and `[capture]`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{CaptureMatrix, FadingModel, Geometry};
use crate::error::{Error, Result};
use crate::protocol::SchemeKind;

/// Default co-SF capture threshold (about 6 dB).
pub const DEFAULT_CO_SF: f64 = 4.0;
/// Default inter-SF capture threshold (about -16 dB).
pub const DEFAULT_INTER_SF: f64 = 0.025_118_864_315_095_8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Number of EDs.
    pub n: usize,
    /// Source messages per ED.
    pub beta: usize,
    /// Redundancy budget.
    pub epsilon: usize,
    /// Slots in the hovering window.
    pub n_s: usize,
    /// Slot length in seconds; bookkeeping only.
    #[serde(default = "default_slot_len")]
    pub slot_len_s: f64,
    /// Orthogonal frequency bands.
    pub n_f: usize,
    pub sf_set: Vec<u8>,
    /// Wake-up call reception probability.
    pub p_b: f64,
    #[serde(default)]
    pub scheme: SchemeKind,
    #[serde(default = "default_q")]
    pub q: u32,
    #[serde(default = "default_payload")]
    pub payload_bytes: usize,
    /// Per-visit frame cap from the energy budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default)]
    pub fading: FadingModel,
    #[serde(default)]
    pub capture: CaptureSpec,
}

fn default_slot_len() -> f64 {
    1.0
}
fn default_q() -> u32 {
    256
}
fn default_payload() -> usize {
    50
}
fn default_runs() -> usize {
    10_000
}

/// Capture thresholds as linear power ratios: one co-SF value, one inter-SF
/// value, and optional per-pair overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CaptureSpec {
    pub co_sf: f64,
    pub inter_sf: f64,
    #[serde(rename = "pair", skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<CapturePair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapturePair {
    pub desired: u8,
    pub interferer: u8,
    pub threshold: f64,
}

impl Default for CaptureSpec {
    fn default() -> Self {
        Self {
            co_sf: DEFAULT_CO_SF,
            inter_sf: DEFAULT_INTER_SF,
            pairs: Vec::new(),
        }
    }
}

impl CaptureSpec {
    pub fn build(&self, sf_set: &[u8]) -> Result<CaptureMatrix> {
        let mut m = CaptureMatrix::uniform(sf_set, self.co_sf, self.inter_sf)?;
        for p in &self.pairs {
            let (Some(d), Some(i)) = (m.index_of(p.desired), m.index_of(p.interferer)) else {
                return Err(Error::InvalidParameter(format!(
                    "capture pair ({}, {}) is outside sf_set {:?}",
                    p.desired, p.interferer, sf_set
                )));
            };
            if !(p.threshold.is_finite() && p.threshold > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "capture pair ({}, {}) threshold must be positive",
                    p.desired, p.interferer
                )));
            }
            m.set(d, i, p.threshold);
        }
        Ok(m)
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.beta == 0 {
            return bad("beta must be at least 1".into());
        }
        if self.n_s == 0 {
            return bad("n_s must be at least 1".into());
        }
        if self.n_f == 0 {
            return bad("n_f must be at least 1".into());
        }
        if self.sf_set.is_empty() {
            return bad("sf_set must not be empty".into());
        }
        let mut sorted = self.sf_set.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.sf_set.len() {
            return bad(format!("sf_set {:?} has duplicates", self.sf_set));
        }
        if let Some(sf) = self.sf_set.iter().find(|&&s| !(7..=12).contains(&s)) {
            return bad(format!("spreading factor {sf} outside 7..=12"));
        }
        if !(0.0..=1.0).contains(&self.p_b) {
            return bad(format!("p_b must lie in [0, 1], got {}", self.p_b));
        }
        if self.q != 256 {
            return bad(format!("only q = 256 is supported, got {}", self.q));
        }
        if self.payload_bytes == 0 {
            return bad("payload_bytes must be at least 1".into());
        }
        if let Some(n_max) = self.n_max {
            if self.beta + self.epsilon > n_max {
                return bad(format!(
                    "beta + epsilon = {} exceeds n_max = {n_max}",
                    self.beta + self.epsilon
                ));
            }
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        self.geometry.validate()?;
        self.fading.validate()?;
        self.capture.build(&self.sf_set)?;
        Ok(())
    }

    pub fn capture_matrix(&self) -> Result<CaptureMatrix> {
        self.capture.build(&self.sf_set)
    }

    /// Redundancy after applying the frame cap: `min(epsilon, n_max - beta)`.
    pub fn effective_epsilon(&self) -> usize {
        match self.n_max {
            Some(cap) => self.epsilon.min(cap.saturating_sub(self.beta)),
            None => self.epsilon,
        }
    }

    pub fn with_scheme(&self, scheme: SchemeKind) -> Self {
        Self { scheme, ..self.clone() }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serialises")
    }

    /// Short content hash of the canonical TOML form.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
