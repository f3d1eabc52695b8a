use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use morphomod::datagen::{
    classify_position, derive_seed, disorient_with, BandGeometry, DatasetLayout, DatasetManifest, Label,
};
use morphomod::pipeline::Pipeline;
use morphomod::raster::{load_image, save_png};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{FileConfig, PipelineArgs};
use crate::report::write_json;
use crate::{usage, Outcome};

#[derive(Clone, Debug, Args)]
pub struct DisorientArgs {
    #[arg(long, help = "Disorient dataset root (with labels.csv)")]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "d", value_name = "D", help = "Dilation radius for box removal")]
    pub d: Option<usize>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleResult {
    pub image: String,
    pub label: Label,
    pub predicted: Option<Label>,
    pub new_label: Option<Label>,
    pub predicted_after: Option<Label>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    pub percent: f64,
}

impl Accuracy {
    fn new(correct: usize, total: usize) -> Self {
        let percent = if total == 0 { 0.0 } else { 100.0 * correct as f64 / total as f64 };
        Self { correct, total, percent }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DisorientReport {
    pub seed: u64,
    pub backend: String,
    pub evaluated: usize,
    pub errors: usize,
    pub original: Accuracy,
    pub disoriented: Accuracy,
}

fn read_labels(layout: &DatasetLayout) -> anyhow::Result<Vec<(String, Label)>> {
    let path = layout.labels_path();
    let mut r = csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let (Some(image), Some(label)) = (rec.get(0), rec.get(1)) else {
            anyhow::bail!("{}: short row {rec:?}", path.display());
        };
        out.push((image.to_string(), label.parse()?));
    }
    Ok(out)
}

/// Band layout recorded by `synth`, or the default one.
fn geometry(layout: &DatasetLayout) -> BandGeometry {
    let Ok(m) = DatasetManifest::load(&layout.manifest_path()) else {
        return BandGeometry::default();
    };
    let get = |k: &str| m.params.get(k).and_then(|v| v.as_u64()).map(|v| v as usize);
    match (get("size"), get("box_size")) {
        (Some(size), Some(box_size)) => BandGeometry { size, box_size },
        _ => BandGeometry::default(),
    }
}

pub fn cmd_disorient(
    args: &DisorientArgs,
    file: &FileConfig,
    seed: u64,
    pool: &rayon::ThreadPool,
) -> anyhow::Result<(DisorientReport, Outcome)> {
    let cfg = args.pipeline.merge(file, args.d)?;
    let pipeline = Pipeline::new(cfg.clone()).map_err(|e| usage(e.to_string()))?;
    let layout = DatasetLayout::new(&args.dataset);
    let labels = read_labels(&layout)?;
    let geom = geometry(&layout);
    let out_dir = args.out.join("disoriented");
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let results: Vec<SampleResult> = pool.install(|| {
        labels
            .par_iter()
            .enumerate()
            .map(|(i, (image, label))| {
                let mut r = SampleResult {
                    image: image.clone(),
                    label: *label,
                    predicted: None,
                    new_label: None,
                    predicted_after: None,
                    error: None,
                };
                let mut run = || -> morphomod::Result<()> {
                    let x = load_image::<f64>(layout.watermarked_dir().join(image))?;
                    r.predicted = Some(classify_position(&x, &geom)?);
                    let d = disorient_with(&x, &pipeline, &geom, derive_seed(seed, i as u64))?;
                    r.new_label = Some(d.new_label);
                    save_png(&d.image, out_dir.join(image))?;
                    r.predicted_after = Some(classify_position(&d.image, &geom)?);
                    Ok(())
                };
                if let Err(e) = run() {
                    log::warn!("{image}: {e}; excluded from accuracy");
                    r.error = Some(e.to_string());
                }
                r
            })
            .collect()
    });

    let valid: Vec<&SampleResult> = results.iter().filter(|r| r.error.is_none()).collect();
    let hits = |f: fn(&SampleResult) -> Option<Label>| valid.iter().filter(|r| f(r) == Some(r.label)).count();
    let report = DisorientReport {
        seed,
        backend: cfg.backend.clone(),
        evaluated: valid.len(),
        errors: results.len() - valid.len(),
        original: Accuracy::new(hits(|r| r.predicted), valid.len()),
        disoriented: Accuracy::new(hits(|r| r.predicted_after), valid.len()),
    };

    let mut w = csv::Writer::from_path(args.out.join("disorient.csv"))?;
    w.write_record(["image", "label", "predicted", "new_label", "predicted_after", "error"])?;
    let show = |l: Option<Label>| l.map(|l| l.to_string()).unwrap_or_default();
    for r in &results {
        w.write_record([
            r.image.clone(),
            r.label.to_string(),
            show(r.predicted),
            show(r.new_label),
            show(r.predicted_after),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    write_json(&args.out.join("report.json"), &report)?;

    println!(
        "original accuracy: {:.1}% ({}/{})",
        report.original.percent, report.original.correct, report.original.total
    );
    println!(
        "disoriented accuracy: {:.1}% ({}/{})",
        report.disoriented.percent, report.disoriented.correct, report.disoriented.total
    );
    if report.errors > 0 {
        println!("{} sample(s) skipped, see disorient.csv", report.errors);
    }
    let failures = report.errors;
    Ok((report, Outcome { failures }))
}
