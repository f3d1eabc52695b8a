//! On-disk dataset layout and manifest.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Label, WatermarkSpec};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recipe {
    #[serde(rename = "alpha1-s")]
    Alpha1S,
    #[serde(rename = "alpha1-l")]
    Alpha1L,
    #[serde(rename = "clwd")]
    Clwd,
    #[serde(rename = "disorient")]
    Disorient,
}

impl Recipe {
    pub const ALL: [Recipe; 4] = [Recipe::Alpha1S, Recipe::Alpha1L, Recipe::Clwd, Recipe::Disorient];

    pub fn as_str(self) -> &'static str {
        match self {
            Recipe::Alpha1S => "alpha1-s",
            Recipe::Alpha1L => "alpha1-l",
            Recipe::Clwd => "clwd",
            Recipe::Disorient => "disorient",
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown recipe {s:?}; expected alpha1-s, alpha1-l, clwd or disorient"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Paths relative to the dataset root.
    pub watermarked: String,
    pub mask: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub watermark: Option<WatermarkSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub recipe: Recipe,
    pub seed: u64,
    pub count: usize,
    #[serde(default)]
    pub params: serde_json::Value,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// `<root>/watermarked/NNNNN.png`, `<root>/mask/NNNNN.png`, `labels.csv`, `manifest.json`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetLayout {
    pub root: PathBuf,
}

impl DatasetLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn name(index: usize) -> String {
        format!("{index:05}")
    }

    pub fn watermarked_dir(&self) -> PathBuf {
        self.root.join("watermarked")
    }

    pub fn mask_dir(&self) -> PathBuf {
        self.root.join("mask")
    }

    pub fn watermarked_path(&self, index: usize) -> PathBuf {
        self.watermarked_dir().join(format!("{}.png", Self::name(index)))
    }

    pub fn mask_path(&self, index: usize) -> PathBuf {
        self.mask_dir().join(format!("{}.png", Self::name(index)))
    }

    pub fn labels_path(&self) -> PathBuf {
        self.root.join("labels.csv")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn create_dirs(&self) -> Result<()> {
        for d in [self.watermarked_dir(), self.mask_dir()] {
            std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        }
        Ok(())
    }
}
