//! Experiment manifests: every parameter that affects an output, plus a
//! content hash that output files carry.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::{RNG_NAME, RNG_STREAM_VERSION};

pub const FORMAT_VERSION: u32 = 1;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub format_version: u32,
    pub command: String,
    /// Parameters by name; sorted, so serialization is canonical.
    pub params: BTreeMap<String, Value>,
    pub library_version: String,
    pub rng: String,
    pub rng_stream_version: u32,
    /// Hex SHA-256 of the manifest serialized with an empty `hash`.
    pub hash: String,
}

impl ExperimentManifest {
    pub fn new(command: &str) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            command: command.to_string(),
            params: BTreeMap::new(),
            library_version: LIBRARY_VERSION.to_string(),
            rng: RNG_NAME.to_string(),
            rng_stream_version: RNG_STREAM_VERSION,
            hash: String::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Result<Self> {
        self.params.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(self)
    }

    pub fn compute_hash(&self) -> Result<String> {
        let mut unhashed = self.clone();
        unhashed.hash.clear();
        let bytes = serde_json::to_vec(&unhashed)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    /// Fills in `hash`.
    pub fn seal(mut self) -> Result<Self> {
        self.hash = self.compute_hash()?;
        Ok(self)
    }

    pub fn verify(&self) -> Result<()> {
        let expected = self.compute_hash()?;
        if expected == self.hash {
            Ok(())
        } else {
            Err(Error::Serialization(format!(
                "manifest hash {} does not match its content ({expected})",
                self.hash
            )))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::Serialization(format!("unsupported format_version {}", m.format_version)));
        }
        m.verify()?;
        Ok(m)
    }
}
