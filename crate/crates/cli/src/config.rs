//! Flag/config-file merging. Precedence: command line, then the TOML file, then defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::Args;
use morphomod::pipeline::PipelineConfig;
use morphomod::{FillStrategy, KernelShape};
use serde::Deserialize;

use crate::usage;

/// Optional settings read from `--config`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
    pub mask_source: Option<String>,
    pub mask_dir: Option<PathBuf>,
    pub mask_erode: Option<usize>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    /// Dilation radii for `sweep`.
    pub sweep: Option<Vec<usize>>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }
}

/// Pipeline flags shared by `remove`, `sweep` and `disorient`.
#[derive(Clone, Debug, Default, Args)]
pub struct PipelineArgs {
    #[arg(long, value_name = "NAME", help = "square or disk")]
    pub kernel: Option<KernelShape>,
    #[arg(long, value_name = "ID", help = "harmonic or remote:<url>")]
    pub backend: Option<String>,
    #[arg(long, help = "Prompt text or catalogue id (P1..P10)")]
    pub prompt: Option<String>,
    #[arg(long, value_name = "STRATEGY", help = "none, white, black, gray or avg-bg")]
    pub fill: Option<FillStrategy>,
    #[arg(long, help = "Mask binarization threshold")]
    pub threshold: Option<f64>,
    #[arg(long, help = "Harmonic solver tolerance")]
    pub tolerance: Option<f64>,
    #[arg(long, help = "Denoising steps for remote backends")]
    pub steps: Option<u32>,
}

impl PipelineArgs {
    pub fn merge(&self, file: &FileConfig, d: Option<usize>) -> anyhow::Result<PipelineConfig> {
        let mut cfg = file.pipeline.clone();
        if let Some(d) = d {
            cfg.dilation = d;
        }
        if let Some(k) = self.kernel {
            cfg.kernel = k;
        }
        if let Some(b) = &self.backend {
            cfg.backend = b.clone();
        }
        if let Some(p) = &self.prompt {
            cfg.prompt = p.clone();
        }
        cfg.prompt = morphomod::inpaint::resolve_prompt(&cfg.prompt).to_string();
        if let Some(f) = self.fill {
            cfg.inpaint.fill = f;
        }
        if let Some(t) = self.threshold {
            cfg.threshold = t;
        }
        if let Some(t) = self.tolerance {
            cfg.inpaint.tolerance = t;
        }
        if let Some(s) = self.steps {
            cfg.inpaint.steps = s;
        }
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        morphomod::inpaint::select_backend(&cfg.backend).map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

/// Where `remove` takes its source masks from.
#[derive(Clone, Debug, PartialEq)]
pub enum MaskSource {
    /// The dataset's own `mask/` folder.
    File,
    Chroma { target: [f64; 3], tolerance: f64 },
    /// A folder of masks named like the images.
    Dir(Option<PathBuf>),
}

fn parse_hex(s: &str) -> Option<[f64; 3]> {
    let s = s.trim_start_matches('#');
    if s.len() != 6 {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, v) in out.iter_mut().enumerate() {
        *v = u8::from_str_radix(&s[2 * c..2 * c + 2], 16).ok()? as f64 / 255.0;
    }
    Some(out)
}

impl FromStr for MaskSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "file" => return Ok(MaskSource::File),
            "dir" => return Ok(MaskSource::Dir(None)),
            _ => {}
        }
        if let Some(path) = s.strip_prefix("dir:") {
            return Ok(MaskSource::Dir(Some(PathBuf::from(path))));
        }
        if let Some(rest) = s.strip_prefix("chroma:") {
            let (hex, tol) = rest.split_once(':').unwrap_or((rest, "0.1"));
            let target = parse_hex(hex).ok_or_else(|| format!("bad colour {hex:?}, expected rrggbb"))?;
            let tolerance: f64 = tol.parse().map_err(|_| format!("bad tolerance {tol:?}"))?;
            if !(0.0..=1.0).contains(&tolerance) {
                return Err(format!("tolerance {tolerance} outside [0, 1]"));
            }
            return Ok(MaskSource::Chroma { target, tolerance });
        }
        Err(format!(
            "unknown mask source {s:?}; expected file, chroma:<rrggbb>:<tol>, dir or dir:<path>"
        ))
    }
}

impl MaskSource {
    /// Resolves `dir` against `--mask-dir`.
    pub fn resolve(self, mask_dir: Option<&Path>) -> anyhow::Result<MaskSource> {
        match self {
            MaskSource::Dir(None) => match mask_dir {
                Some(d) => Ok(MaskSource::Dir(Some(d.to_path_buf()))),
                None => Err(usage("--mask-source dir needs --mask-dir")),
            },
            other => Ok(other),
        }
    }
}
