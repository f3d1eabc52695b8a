use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::Args;
use morphomod::datagen::DatasetLayout;
use morphomod::morphology::{binarize, erode};
use morphomod::pipeline::{dump_stages, Pipeline, PipelineConfig, SegmentSource};
use morphomod::raster::{load_binary_mask, load_image, load_prob_mask, save_png, ProbMask};
use morphomod::{KernelShape, StructuringElement};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{FileConfig, MaskSource, PipelineArgs};
use crate::report::{cells_json, mean, score, write_csv, write_json, Cell, Row, COLUMNS};
use crate::{usage, Outcome};

#[derive(Clone, Debug, Default, Args)]
pub struct MaskArgs {
    #[arg(long, value_name = "SRC", help = "file, chroma:<rrggbb>:<tol>, dir or dir:<path>")]
    pub mask_source: Option<MaskSource>,
    #[arg(long, value_name = "DIR", help = "Mask folder for --mask-source dir")]
    pub mask_dir: Option<PathBuf>,
    #[arg(long, value_name = "N", help = "Erode source masks by a square of radius N first")]
    pub mask_erode: Option<usize>,
}

impl MaskArgs {
    fn resolve(&self, file: &FileConfig) -> anyhow::Result<(MaskSource, usize)> {
        let source = match (&self.mask_source, &file.mask_source) {
            (Some(s), _) => s.clone(),
            (None, Some(s)) => s.parse().map_err(usage)?,
            (None, None) => MaskSource::File,
        };
        let dir = self.mask_dir.as_deref().or(file.mask_dir.as_deref());
        let erode = self.mask_erode.or(file.mask_erode).unwrap_or(0);
        Ok((source.resolve(dir)?, erode))
    }
}

#[derive(Clone, Debug, Args)]
pub struct RemoveArgs {
    #[arg(long, help = "Dataset root (watermarked/ and mask/)")]
    pub dataset: PathBuf,
    #[arg(long, help = "Output folder")]
    pub out: PathBuf,
    #[arg(long = "d", value_name = "D", help = "Dilation radius")]
    pub d: Option<usize>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub masks: MaskArgs,
    #[arg(long, help = "Also write mask, inpainted and restored stages per image")]
    pub dump_stages: bool,
}

#[derive(Clone, Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "d", value_name = "D,..", value_delimiter = ',', help = "Dilation radii [default: 0,1,3,5,10]")]
    pub d: Vec<usize>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub masks: MaskArgs,
}

#[derive(Clone, Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_name = "DIR", help = "Restored images, or a remove output folder")]
    pub restored: PathBuf,
    #[arg(long, value_name = "DIR", help = "Predicted masks for mask-quality columns")]
    pub pred_masks: Option<PathBuf>,
    #[arg(long, help = "Where to write metrics [default: the restored folder]")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

pub const DEFAULT_SWEEP: [usize; 5] = [0, 1, 3, 5, 10];

/// Sorted PNG file names under `watermarked/`.
pub fn list_images(layout: &DatasetLayout) -> anyhow::Result<Vec<String>> {
    let dir = layout.watermarked_dir();
    let entries = std::fs::read_dir(&dir)
        .with_context(|| format!("{} is not a dataset (missing {})", layout.root.display(), dir.display()))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.to_ascii_lowercase().ends_with(".png"))
        .collect();
    names.sort();
    if names.is_empty() {
        bail!("no images under {}", dir.display());
    }
    Ok(names)
}

fn stem(name: &str) -> &str {
    name.rsplit_once('.').map_or(name, |(s, _)| s)
}

pub fn thread_pool(jobs: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

pub struct RemoveJob<'a> {
    pub layout: &'a DatasetLayout,
    pub cfg: PipelineConfig,
    pub source: MaskSource,
    pub erode: usize,
    pub out: PathBuf,
    pub dump_stages: bool,
}

impl RemoveJob<'_> {
    fn source_mask(&self, x: &morphomod::ImageF64, name: &str) -> morphomod::Result<ProbMask<f64>> {
        let m = match &self.source {
            MaskSource::File => load_prob_mask(self.layout.mask_dir().join(name))?,
            MaskSource::Dir(Some(dir)) => load_prob_mask(dir.join(name))?,
            MaskSource::Dir(None) => unreachable!("resolved before the run"),
            MaskSource::Chroma { target, tolerance } => SegmentSource::Chroma {
                target: *target,
                tolerance: *tolerance,
            }
            .initial_mask(x)?,
        };
        if self.erode == 0 {
            return Ok(m);
        }
        let hard = binarize(&m, self.cfg.threshold);
        let k = StructuringElement::new(self.erode, KernelShape::Square);
        Ok(ProbMask::from(&erode(&hard, &k)))
    }

    fn one(&self, pipeline: &Pipeline, name: &str) -> morphomod::Result<Row> {
        let x = load_image::<f64>(self.layout.watermarked_dir().join(name))?;
        let gt = load_binary_mask(self.layout.mask_dir().join(name))?;
        let initial = self.source_mask(&x, name)?;
        let out = pipeline.run(&x, &SegmentSource::Provided(initial.clone()))?;
        save_png(&out.restored, self.out.join("restored").join(name))?;
        if self.dump_stages {
            dump_stages(&out, &self.out.join("stages"), stem(name))?;
        }
        Ok(Row {
            image: name.to_string(),
            cells: score(&x, &out.restored, &gt, Some(&initial), self.cfg.threshold)?,
            warnings: out.warnings.iter().map(|w| w.to_string()).collect(),
            error: None,
        })
    }

    /// Runs every image, writes `restored/`, `metrics.csv` and `metrics.json`.
    pub fn run(&self, names: &[String], pool: &rayon::ThreadPool) -> anyhow::Result<(Vec<Row>, Outcome)> {
        let pipeline = Pipeline::new(self.cfg.clone()).map_err(|e| usage(e.to_string()))?;
        for sub in ["restored"].iter().chain(if self.dump_stages { &["stages"][..] } else { &[] }) {
            let d = self.out.join(sub);
            std::fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
        }
        let rows: Vec<Row> = pool.install(|| {
            names
                .par_iter()
                .map(|name| {
                    self.one(&pipeline, name).unwrap_or_else(|e| {
                        log::warn!("{name}: {e}");
                        Row::failed(name.clone(), e.to_string())
                    })
                })
                .collect()
        });
        let failures = rows.iter().filter(|r| r.error.is_some()).count();
        write_csv(&self.out.join("metrics.csv"), &rows)?;
        write_json(
            &self.out.join("metrics.json"),
            &json!({
                "dataset": self.layout.root,
                "config": self.cfg,
                "mask_source": format!("{:?}", self.source),
                "mask_erode": self.erode,
                "count": rows.len(),
                "failures": failures,
                "mean": cells_json(&mean(&rows)),
                "rows": rows.iter().map(Row::to_json).collect::<Vec<_>>(),
            }),
        )?;
        Ok((rows, Outcome { failures }))
    }
}

pub fn cmd_remove(args: &RemoveArgs, file: &FileConfig, pool: &rayon::ThreadPool) -> anyhow::Result<Outcome> {
    let cfg = args.pipeline.merge(file, args.d)?;
    let (source, erode) = args.masks.resolve(file)?;
    let layout = DatasetLayout::new(&args.dataset);
    let names = list_images(&layout)?;
    let job = RemoveJob {
        layout: &layout,
        cfg,
        source,
        erode,
        out: args.out.clone(),
        dump_stages: args.dump_stages,
    };
    let (rows, outcome) = job.run(&names, pool)?;
    print_mean(&format!("{} images", rows.len()), &mean(&rows));
    Ok(outcome)
}

fn print_mean(label: &str, cells: &[Cell; 8]) {
    let parts: Vec<String> = COLUMNS
        .iter()
        .zip(cells)
        .filter_map(|(k, c)| match c {
            Cell::Value(v) => Some(format!("{k}={v:.5}")),
            Cell::Degenerate => Some(format!("{k}=degenerate")),
            Cell::Missing => None,
        })
        .collect();
    println!("{label}: {}", parts.join(" "));
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct Violation {
    pub column: &'static str,
    pub from_d: usize,
    pub to_d: usize,
    pub from: f64,
    pub to: f64,
}

/// Adjacent pairs where a column that should not decrease with `d` does.
pub fn trend_violations(rows: &[(usize, [Cell; 8])]) -> Vec<Violation> {
    let mut out = Vec::new();
    for column in ["rmse_w", "rmse_t"] {
        let c = COLUMNS.iter().position(|k| *k == column).unwrap();
        for pair in rows.windows(2) {
            if let (Some(a), Some(b)) = (pair[0].1[c].value(), pair[1].1[c].value()) {
                if b < a {
                    out.push(Violation {
                        column,
                        from_d: pair[0].0,
                        to_d: pair[1].0,
                        from: a,
                        to: b,
                    });
                }
            }
        }
    }
    out
}

pub fn cmd_sweep(args: &SweepArgs, file: &FileConfig, pool: &rayon::ThreadPool) -> anyhow::Result<Outcome> {
    let mut ds = if !args.d.is_empty() {
        args.d.clone()
    } else {
        file.sweep.clone().unwrap_or_else(|| DEFAULT_SWEEP.to_vec())
    };
    ds.sort_unstable();
    ds.dedup();
    if ds.len() < 2 {
        return Err(usage("sweep needs at least two distinct --d values"));
    }
    let base = args.pipeline.merge(file, None)?;
    let (source, erode) = args.masks.resolve(file)?;
    let layout = DatasetLayout::new(&args.dataset);
    let names = list_images(&layout)?;

    let mut table = Vec::new();
    let mut times = Vec::new();
    let mut failures = 0;
    for &d in &ds {
        let job = RemoveJob {
            layout: &layout,
            cfg: PipelineConfig {
                dilation: d,
                ..base.clone()
            },
            source: source.clone(),
            erode,
            out: args.out.join(format!("d{d}")),
            dump_stages: false,
        };
        let start = Instant::now();
        let (rows, outcome) = job.run(&names, pool)?;
        times.push(start.elapsed().as_secs_f64());
        failures += outcome.failures;
        let m = mean(&rows);
        print_mean(&format!("d={d}"), &m);
        table.push((d, m));
    }

    write_sweep_csv(&args.out.join("sweep.csv"), &table, &times)?;
    let violations = trend_violations(&table);
    for v in &violations {
        log::warn!(
            "trend: mean {} drops from {:.6} (d={}) to {:.6} (d={})",
            v.column, v.from, v.from_d, v.to, v.to_d
        );
    }
    println!(
        "trend: {}",
        if violations.is_empty() { "rmse_w and rmse_t non-decreasing in d".to_string() } else { format!("{} violation(s)", violations.len()) }
    );
    write_json(
        &args.out.join("sweep.json"),
        &json!({
            "d": ds,
            "rows": table.iter().zip(&times).map(|((d, m), t)| {
                let mut o = cells_json(m);
                o.insert("d".into(), (*d).into());
                o.insert("wall_time_s".into(), (*t).into());
                o
            }).collect::<Vec<_>>(),
            "trend_violations": violations,
        }),
    )?;
    Ok(Outcome { failures })
}

const SWEEP_COLUMNS: [&str; 6] = ["rmse_w", "ssim_w", "rmse_t", "ssim_t", "iou", "f1"];

fn write_sweep_csv(path: &Path, table: &[(usize, [Cell; 8])], times: &[f64]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["d"];
    header.extend(SWEEP_COLUMNS);
    header.push("wall_time_s");
    w.write_record(&header)?;
    for ((d, cells), t) in table.iter().zip(times) {
        let mut rec = vec![d.to_string()];
        for k in SWEEP_COLUMNS {
            let c = cells[COLUMNS.iter().position(|c| *c == k).unwrap()];
            rec.push(match c {
                Cell::Value(v) => v.to_string(),
                Cell::Degenerate => crate::report::DEGENERATE.to_string(),
                Cell::Missing => String::new(),
            });
        }
        rec.push(format!("{t:.3}"));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs, pool: &rayon::ThreadPool) -> anyhow::Result<Outcome> {
    let layout = DatasetLayout::new(&args.dataset);
    let names = list_images(&layout)?;
    let restored_dir = if args.restored.join("restored").is_dir() {
        args.restored.join("restored")
    } else {
        args.restored.clone()
    };
    let out = args.out.clone().unwrap_or_else(|| args.restored.clone());
    std::fs::create_dir_all(&out)?;
    let one = |name: &String| -> morphomod::Result<Row> {
        let x = load_image::<f64>(layout.watermarked_dir().join(name))?;
        let gt = load_binary_mask(layout.mask_dir().join(name))?;
        let y = load_image::<f64>(restored_dir.join(name))?;
        let pred = match &args.pred_masks {
            Some(d) => Some(load_prob_mask::<f64>(d.join(name))?),
            None => None,
        };
        Ok(Row {
            image: name.clone(),
            cells: score(&x, &y, &gt, pred.as_ref(), args.threshold)?,
            warnings: Vec::new(),
            error: None,
        })
    };
    let rows: Vec<Row> = pool.install(|| {
        names
            .par_iter()
            .map(|n| one(n).unwrap_or_else(|e| {
                log::warn!("{n}: {e}");
                Row::failed(n.clone(), e.to_string())
            }))
            .collect()
    });
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    write_csv(&out.join("metrics.csv"), &rows)?;
    write_json(
        &out.join("metrics.json"),
        &json!({
            "dataset": layout.root,
            "restored": restored_dir,
            "count": rows.len(),
            "failures": failures,
            "mean": cells_json(&mean(&rows)),
            "rows": rows.iter().map(Row::to_json).collect::<Vec<_>>(),
        }),
    )?;
    print_mean(&format!("{} images", rows.len()), &mean(&rows));
    Ok(Outcome { failures })
}
