//! Versioned JSON envelope written around every persisted artifact.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Where an artifact came from: the hash of the experiment config and the
/// (reproducible) creation timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub created_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub format_version: u32,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Artifact<T> {
    pub fn new(body: T, provenance: Option<Provenance>) -> Self {
        Artifact {
            format_version: FORMAT_VERSION,
            provenance,
            body,
        }
    }
}

impl<T: Serialize> Artifact<T> {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::json("serialize artifact", e))?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

impl<T: DeserializeOwned> Artifact<T> {
    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let artifact: Artifact<T> = serde_json::from_str(text).map_err(|e| Error::json(context, e))?;
        if artifact.format_version != FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "{context}: unsupported format_version {}",
                artifact.format_version
            )));
        }
        Ok(artifact)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}
