use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use morphomod::datagen::procedural::{host, logo, LogoKind};
use morphomod::datagen::{
    derive_seed, rng_from_seed, BandGeometry, synth_alpha1, synth_clwd_like, synth_disorient, Alpha1Variant,
    ClwdRecipe, DatasetLayout, DatasetManifest, DisorientOptions, ManifestEntry, Recipe,
    WatermarkedSample,
};
use morphomod::raster::{load_png, save_mask_png, save_png, Decoded, Image, ImageWithAlpha};
use morphomod::{BinaryMask, Error};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::{usage, Outcome};

#[derive(Clone, Debug, Args)]
pub struct SynthArgs {
    #[arg(long, help = "alpha1-s, alpha1-l, clwd or disorient")]
    pub recipe: Recipe,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, help = "Dataset root to create")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 256, help = "Side of procedural hosts and disorient images")]
    pub size: usize,
    #[arg(long, value_name = "DIR", help = "Folder of host PNGs instead of procedural hosts")]
    pub hosts: Option<PathBuf>,
    #[arg(long, value_name = "DIR", help = "Folder of RGBA logo PNGs instead of procedural logos")]
    pub logos: Option<PathBuf>,
    #[arg(long, help = "Value-noise background for disorient samples")]
    pub textured: bool,
}

/// Draws from a logo before giving up on a sample.
const ATTEMPTS: usize = 8;

fn png_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("reading image folder {}", dir.display()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no PNG files in {}", dir.display());
    }
    Ok(files)
}

struct Sources {
    hosts: Vec<Image<f64>>,
    logos: Vec<ImageWithAlpha<f64>>,
}

fn load_sources(args: &SynthArgs) -> anyhow::Result<Sources> {
    let mut s = Sources {
        hosts: Vec::new(),
        logos: Vec::new(),
    };
    if let Some(dir) = &args.hosts {
        for p in png_files(dir)? {
            s.hosts.push(load_png::<f64>(&p)?.into_image());
        }
    }
    if let Some(dir) = &args.logos {
        for p in png_files(dir)? {
            s.logos.push(match load_png::<f64>(&p)? {
                Decoded::Rgba(l) => l,
                Decoded::Rgb(img) => ImageWithAlpha::opaque(img),
            });
        }
    }
    Ok(s)
}

fn watermark_sample(
    recipe: Recipe,
    seed: u64,
    size: usize,
    src: &Sources,
) -> morphomod::Result<WatermarkedSample<f64>> {
    let mut rng = rng_from_seed(seed);
    let host_img = if src.hosts.is_empty() {
        host(&mut rng, size, size)
    } else {
        src.hosts[rng.random_range(0..src.hosts.len())].clone()
    };
    let kinds: &[LogoKind] = match recipe {
        Recipe::Clwd => &[LogoKind::Badge, LogoKind::Plate, LogoKind::Ring],
        _ => &[LogoKind::Badge, LogoKind::Plate],
    };
    let mut last = None;
    for _ in 0..ATTEMPTS {
        let mark = if src.logos.is_empty() {
            let side = host_img.width().min(host_img.height()).max(8);
            let kind = kinds[rng.random_range(0..kinds.len())];
            logo(&mut rng, side, kind)
        } else {
            src.logos[rng.random_range(0..src.logos.len())].clone()
        };
        let s = rng.random::<u64>();
        let r = match recipe {
            Recipe::Alpha1S => synth_alpha1(&host_img, &mark, Alpha1Variant::Small, s),
            Recipe::Alpha1L => synth_alpha1(&host_img, &mark, Alpha1Variant::Large, s),
            _ => synth_clwd_like(&host_img, &mark, s, &ClwdRecipe::default()),
        };
        match r {
            Err(e @ (Error::CoverageUnattainable { .. } | Error::LogoTooLarge(_))) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

enum Sample {
    Mark(WatermarkedSample<f64>),
    Box(morphomod::datagen::DisorientSample<f64>),
}

fn write_sample(layout: &DatasetLayout, i: usize, image: &Image<f64>, mask: &BinaryMask) -> anyhow::Result<()> {
    save_png(image, layout.watermarked_path(i))?;
    save_mask_png(mask, layout.mask_path(i))?;
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs, seed: u64) -> anyhow::Result<(DatasetManifest, Outcome)> {
    if args.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    if args.size < 16 {
        return Err(usage("--size must be at least 16"));
    }
    let src = load_sources(args)?;
    let layout = DatasetLayout::new(&args.out);
    layout.create_dirs()?;
    let opts = DisorientOptions {
        geometry: BandGeometry {
            size: args.size,
            box_size: args.size / 8,
        },
        textured: args.textured,
    };

    let samples: Vec<morphomod::Result<Sample>> = (0..args.count)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i as u64);
            match args.recipe {
                Recipe::Disorient => synth_disorient(s, None, &opts).map(Sample::Box),
                r => watermark_sample(r, s, args.size, &src).map(Sample::Mark),
            }
        })
        .collect();

    let mut entries = Vec::with_capacity(args.count);
    let mut labels = Vec::new();
    for (i, sample) in samples.into_iter().enumerate() {
        let sample = sample.with_context(|| format!("sample {i}"))?;
        let mut entry = ManifestEntry {
            watermarked: format!("watermarked/{}.png", DatasetLayout::name(i)),
            mask: format!("mask/{}.png", DatasetLayout::name(i)),
            label: None,
            watermark: None,
        };
        match sample {
            Sample::Mark(s) => {
                write_sample(&layout, i, &s.image, &s.mask)?;
                entry.watermark = Some(s.spec);
            }
            Sample::Box(s) => {
                write_sample(&layout, i, &s.image, &s.mask)?;
                entry.label = Some(s.label);
                labels.push((DatasetLayout::name(i), s.label));
            }
        }
        entries.push(entry);
    }

    if args.recipe == Recipe::Disorient {
        let mut w = csv::Writer::from_path(layout.labels_path())?;
        w.write_record(["image", "label"])?;
        for (name, label) in &labels {
            w.write_record([format!("{name}.png"), label.to_string()])?;
        }
        w.flush()?;
    }

    let params = match args.recipe {
        Recipe::Disorient => json!({
            "size": opts.geometry.size,
            "box_size": opts.geometry.box_size,
            "textured": opts.textured,
        }),
        Recipe::Clwd => json!({
            "size": args.size,
            "clwd": ClwdRecipe::default(),
            "hosts": args.hosts,
            "logos": args.logos,
        }),
        Recipe::Alpha1S | Recipe::Alpha1L => {
            let v = if args.recipe == Recipe::Alpha1S { Alpha1Variant::Small } else { Alpha1Variant::Large };
            json!({
                "size": args.size,
                "coverage": v.target(),
                "coverage_tolerance": v.tolerance(),
                "hosts": args.hosts,
                "logos": args.logos,
            })
        }
    };
    let manifest = DatasetManifest {
        recipe: args.recipe,
        seed,
        count: args.count,
        params,
        entries,
    };
    manifest.save(&layout.manifest_path())?;
    log::info!("wrote {} {} samples to {}", args.count, args.recipe, args.out.display());
    Ok((manifest, Outcome::default()))
}
