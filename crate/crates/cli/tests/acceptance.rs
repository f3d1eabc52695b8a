//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p morphomod-cli --test acceptance`.

#[path = "../../core/tests/common/stub.rs"]
mod stub;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use morphomod::datagen::procedural::{host, logo, LogoKind};
use morphomod::datagen::{
    derive_seed, rng_from_seed, synth_alpha1, synth_clwd_like, Alpha1Variant, ClwdRecipe,
};
use morphomod::inpaint::{HarmonicInpainter, InpaintOptions, InpaintRequest, RemoteInpainter};
use morphomod::metrics::{dice_bce, f1, iou, preservation_scores, removal_scores, rmse_region, ssim_region};
use morphomod::morphology::{dilate, erode, invert};
use morphomod::pipeline::{restore, Pipeline, PipelineConfig, SegmentSource};
use morphomod::raster::{Image, ProbMask};
use morphomod::{BinaryMask, Error, FillStrategy, KernelShape, StructuringElement};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_mask(rng: &mut impl Rng, h: usize, w: usize) -> BinaryMask {
    let density = rng.random_range(0.05..0.5);
    BinaryMask::from_fn(h, w, |_, _| rng.random_bool(density))
}

fn random_image(rng: &mut impl Rng, h: usize, w: usize) -> Image<f64> {
    Image::from_fn(h, w, |_, _| [rng.random(), rng.random(), rng.random()])
}

fn in_footprint(shape: KernelShape, d: usize, dy: isize, dx: isize) -> bool {
    let d = d as isize;
    match shape {
        KernelShape::Square => dy.abs() <= d && dx.abs() <= d,
        KernelShape::Disk => dy * dy + dx * dx <= d * d,
    }
}

/// Neighbourhood maximum with out-of-bounds pixels read as 0.
fn dilate_oracle(m: &BinaryMask, shape: KernelShape, d: usize) -> BinaryMask {
    let (h, w) = m.dims();
    let r = d as isize;
    BinaryMask::from_fn(h, w, |y, x| {
        (-r..=r).any(|dy| {
            (-r..=r).any(|dx| {
                let (yy, xx) = (y as isize + dy, x as isize + dx);
                in_footprint(shape, d, dy, dx)
                    && yy >= 0
                    && xx >= 0
                    && (yy as usize) < h
                    && (xx as usize) < w
                    && m.get(yy as usize, xx as usize)
            })
        })
    })
}

const SHAPES: [KernelShape; 2] = [KernelShape::Square, KernelShape::Disk];

fn dilation_oracle() -> Check {
    let start = Instant::now();
    let mut rng = rng_from_seed(1);
    let mut compared = 0;
    for _ in 0..1000 {
        let m = random_mask(&mut rng, 16, 16);
        for d in 0..=4 {
            for shape in SHAPES {
                let fast = dilate(&m, &StructuringElement::new(d, shape));
                ensure(fast == dilate_oracle(&m, shape, d), || format!("mismatch at d={d} {shape}"))?;
                compared += 1;
            }
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(5), || format!("took {t:?}"))?;
    Ok(format!("{compared} comparisons, 0 mismatches, {:.2}s", t.as_secs_f64()))
}

fn morphology_laws() -> Check {
    const CASES: usize = 500;
    let mut rng = rng_from_seed(2);
    for i in 0..CASES {
        let (h, w) = (rng.random_range(1..20), rng.random_range(1..20));
        let d = rng.random_range(0..6);
        let shape = SHAPES[i % 2];
        let k = StructuringElement::new(d, shape);
        let m = random_mask(&mut rng, h, w);
        let extra = random_mask(&mut rng, h, w);
        let bigger = BinaryMask::from_fn(h, w, |y, x| m.get(y, x) || extra.get(y, x));

        let dm = dilate(&m, &k);
        ensure(m.is_subset_of(&dm), || format!("extensivity, case {i}"))?;
        ensure(dm.is_subset_of(&dilate(&bigger, &k)), || format!("monotone in mask, case {i}"))?;
        ensure(dm.is_subset_of(&dilate(&m, &StructuringElement::new(d + 1, shape))), || {
            format!("monotone in d, case {i}")
        })?;
        ensure(dilate(&m, &StructuringElement::new(0, shape)) == m, || format!("d=0 identity, case {i}"))?;

        // duality on pixels whose whole footprint is inside the image
        let er = erode(&m, &k);
        let dual = invert(&dilate(&invert(&m), &k.reflect()));
        for y in d..h.saturating_sub(d) {
            for x in d..w.saturating_sub(d) {
                ensure(er.get(y, x) == dual.get(y, x), || format!("duality at ({y},{x}), case {i}"))?;
            }
        }
    }
    Ok(format!("extensivity, monotonicity (mask, d), d=0 identity, duality: {CASES} cases each, 0 violations"))
}

fn restore_correctness() -> Check {
    let mut rng = rng_from_seed(3);
    for i in 0..500 {
        let (h, w) = (rng.random_range(1..24), rng.random_range(1..24));
        let x = random_image(&mut rng, h, w);
        let x_hat = random_image(&mut rng, h, w);
        let m = random_mask(&mut rng, h, w);
        let r = restore(&x, &m, &x_hat).map_err(|e| e.to_string())?;
        for y in 0..h {
            for c in 0..w {
                let want = if m.get(y, c) { x_hat.pixel(y, c) } else { x.pixel(y, c) };
                let got = r.pixel(y, c);
                ensure(got.iter().zip(&want).all(|(a, b)| a.to_bits() == b.to_bits()), || {
                    format!("pixel ({y},{c}) of triple {i}")
                })?;
            }
        }
    }
    for i in 0..100 {
        let (h, w) = (rng.random_range(1..32), rng.random_range(1..32));
        let x = random_image(&mut rng, h, w);
        let cfg = PipelineConfig {
            dilation: rng.random_range(0..6),
            inpaint: InpaintOptions {
                fill: FillStrategy::ALL[i % FillStrategy::ALL.len()],
                ..Default::default()
            },
            ..Default::default()
        };
        let out = Pipeline::new(cfg)
            .and_then(|p| p.run(&x, &SegmentSource::Provided(ProbMask::filled(h, w, 0.0))))
            .map_err(|e| e.to_string())?;
        ensure(out.restored == x, || format!("zero-mask run {i} changed the image"))?;
    }
    Ok("500 random triples bit-exact; 100 zero-mask pipeline runs are the identity".into())
}

fn harmonic(x: &Image<f64>, m: &BinaryMask, fill: FillStrategy) -> Result<Image<f64>, String> {
    let opts = InpaintOptions { fill, ..Default::default() };
    let filled = morphomod::raster::prefill(x, m, fill).map_err(|e| e.to_string())?;
    let req = InpaintRequest::new(&filled, m, "", &opts).map_err(|e| e.to_string())?;
    HarmonicInpainter.solve(&req).map(|o| o.image).map_err(|e| e.to_string())
}

/// 4-connected holes of `m`, each with its known 4-neighbours.
fn holes(m: &BinaryMask) -> Vec<(Vec<(usize, usize)>, Vec<(usize, usize)>)> {
    let (h, w) = m.dims();
    let mut seen = vec![false; h * w];
    let mut out = Vec::new();
    for s in 0..h * w {
        if seen[s] || !m.data()[s] {
            continue;
        }
        seen[s] = true;
        let (mut inside, mut rim, mut stack) = (Vec::new(), Vec::new(), vec![s]);
        while let Some(i) = stack.pop() {
            let (y, x) = (i / w, i % w);
            inside.push((y, x));
            let nb = [
                (y > 0).then(|| (y - 1, x)),
                (y + 1 < h).then(|| (y + 1, x)),
                (x > 0).then(|| (y, x - 1)),
                (x + 1 < w).then(|| (y, x + 1)),
            ];
            for (ny, nx) in nb.into_iter().flatten() {
                let j = ny * w + nx;
                if !m.data()[j] {
                    rim.push((ny, nx));
                } else if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        out.push((inside, rim));
    }
    out
}

fn harmonic_inpainter() -> Check {
    let mut rng = rng_from_seed(4);
    let tol = InpaintOptions::default().tolerance;

    for i in 0..200 {
        let (h, w) = (rng.random_range(3..24), rng.random_range(3..24));
        let x = random_image(&mut rng, h, w);
        let mut m = random_mask(&mut rng, h, w);
        m.set(0, 0, false);
        let out = harmonic(&x, &m, FillStrategy::AverageBackground)?;
        for (inside, rim) in holes(&m) {
            for c in 0..3 {
                let vals = rim.iter().map(|&(y, x_)| x.pixel(y, x_)[c]);
                let lo = vals.clone().fold(f64::INFINITY, f64::min);
                let hi = vals.fold(f64::NEG_INFINITY, f64::max);
                for &(y, x_) in &inside {
                    let v = out.pixel(y, x_)[c];
                    ensure(v >= lo && v <= hi, || format!("max principle, instance {i}: {v} not in [{lo}, {hi}]"))?;
                }
            }
        }
    }

    let mut worst_line: f64 = 0.0;
    for _ in 0..20 {
        let w = rng.random_range(8..64);
        let (a, b) = (rng.random_range(1..w / 2), rng.random_range(w / 2..w - 1));
        let (left, right): ([f64; 3], [f64; 3]) = (rng.random(), rng.random());
        let x = Image::from_fn(1, w, |_, c| if c < a { left } else if c > b { right } else { [0.0; 3] });
        let m = BinaryMask::from_fn(1, w, |_, c| (a..=b).contains(&c));
        let out = harmonic(&x, &m, FillStrategy::Gray)?;
        for c in a..=b {
            let t = (c - a + 1) as f64 / (b - a + 2) as f64;
            for k in 0..3 {
                let want = left[k] + t * (right[k] - left[k]);
                worst_line = worst_line.max((out.pixel(0, c)[k] - want).abs());
            }
        }
    }
    ensure(worst_line <= 1e-4, || format!("1-D hole off linear by {worst_line:e}"))?;

    let mut worst_const: f64 = 0.0;
    for _ in 0..50 {
        let (h, w) = (rng.random_range(3..32), rng.random_range(3..32));
        let v: [f64; 3] = rng.random();
        let x = Image::filled(h, w, v);
        let mut m = random_mask(&mut rng, h, w);
        m.set(h - 1, w - 1, false);
        let out = harmonic(&x, &m, FillStrategy::White)?;
        for (p, q) in out.data().iter().zip(x.data()) {
            worst_const = worst_const.max((p - q).abs());
        }
    }
    ensure(worst_const <= 1e-6, || format!("constant image off by {worst_const:e}"))?;

    let mut worst_fill: f64 = 0.0;
    for _ in 0..50 {
        let (h, w) = (rng.random_range(4..28), rng.random_range(4..28));
        let x = random_image(&mut rng, h, w);
        let mut m = random_mask(&mut rng, h, w);
        m.set(0, 0, false);
        let outs: Vec<Image<f64>> = FillStrategy::ALL.iter().map(|&f| harmonic(&x, &m, f)).collect::<Result<_, _>>()?;
        for o in &outs[1..] {
            for (p, q) in o.data().iter().zip(outs[0].data()) {
                worst_fill = worst_fill.max((p - q).abs());
            }
        }
    }
    ensure(worst_fill <= 10.0 * tol, || format!("fill strategies disagree by {worst_fill:e}"))?;

    Ok(format!(
        "max principle on 200 instances; 1-D error {worst_line:.1e}; constant error {worst_const:.1e}; fill spread {worst_fill:.1e}"
    ))
}

fn metric_identities() -> Check {
    let mut rng = rng_from_seed(5);
    let mut worst_ssim: f64 = 0.0;
    for i in 0..100 {
        let (h, w) = (rng.random_range(11..40), rng.random_range(11..40));
        let a = random_image(&mut rng, h, w);
        let mut r = random_mask(&mut rng, h, w);
        r.set(0, 0, true);
        let e = rmse_region(&a, &a, &r).map_err(|e| e.to_string())?;
        ensure(e == 0.0, || format!("rmse(a,a) = {e} in case {i}"))?;
        let s = ssim_region(&a, &a, &r).map_err(|e| e.to_string())?;
        worst_ssim = worst_ssim.max((s - 1.0).abs());
    }
    ensure(worst_ssim <= 1e-12, || format!("ssim(a,a) off 1 by {worst_ssim:e}"))?;

    let mut worst_f1: f64 = 0.0;
    for _ in 0..500 {
        let (h, w) = (rng.random_range(1..20), rng.random_range(1..20));
        let (p, g) = (random_mask(&mut rng, h, w), random_mask(&mut rng, h, w));
        let (j, f) = (iou(&p, &g).unwrap(), f1(&p, &g).unwrap());
        worst_f1 = worst_f1.max((f - 2.0 * j / (1.0 + j)).abs());
    }
    ensure(worst_f1 <= 1e-12, || format!("F1 vs IoU off by {worst_f1:e}"))?;

    let mut worst_bce: f64 = 0.0;
    for _ in 0..50 {
        let (h, w) = (rng.random_range(1..30), rng.random_range(1..30));
        let g = random_mask(&mut rng, h, w);
        let bce = dice_bce(&ProbMask::filled(h, w, 0.5f64), &g).unwrap().bce_loss;
        worst_bce = worst_bce.max((bce - std::f64::consts::LN_2).abs());
    }
    ensure(worst_bce <= 1e-9, || format!("BCE(0.5) off ln 2 by {worst_bce:e}"))?;

    let mut worst_rmse: f64 = 0.0;
    for _ in 0..200 {
        let (a, b) = (random_image(&mut rng, 8, 8), random_image(&mut rng, 8, 8));
        let mut r = random_mask(&mut rng, 8, 8);
        r.set(3, 3, true);
        let (mut sum, mut n) = (0.0, 0usize);
        for y in 0..8 {
            for x in 0..8 {
                if r.get(y, x) {
                    for c in 0..3 {
                        sum += (a.pixel(y, x)[c] - b.pixel(y, x)[c]).powi(2);
                        n += 1;
                    }
                }
            }
        }
        let oracle = (sum / n as f64).sqrt();
        worst_rmse = worst_rmse.max((rmse_region(&a, &b, &r).unwrap() - oracle).abs());
    }
    ensure(worst_rmse <= 1e-12, || format!("masked RMSE off oracle by {worst_rmse:e}"))?;

    Ok(format!(
        "rmse(a,a)=0; |ssim(a,a)-1| {worst_ssim:.1e}; F1/IoU {worst_f1:.1e}; BCE-ln2 {worst_bce:.1e}; RMSE oracle {worst_rmse:.1e}"
    ))
}

fn alpha1_input(seed: u64, size: usize) -> (Image<f64>, morphomod::ImageWithAlphaF64) {
    let mut rng = rng_from_seed(seed);
    let h = host(&mut rng, size, size);
    let kind = if rng.random_bool(0.5) { LogoKind::Badge } else { LogoKind::Plate };
    (h, logo(&mut rng, size, kind))
}

fn dilation_trend() -> Check {
    const DS: [usize; 5] = [0, 1, 3, 5, 10];
    let start = Instant::now();
    let mut samples = Vec::new();
    for i in 0..50 {
        let seed = derive_seed(404, i);
        let (h, l) = alpha1_input(seed, 256);
        let s = synth_alpha1(&h, &l, Alpha1Variant::Small, seed).map_err(|e| e.to_string())?;
        let source = erode(&s.mask, &StructuringElement::square(1));
        samples.push((s.image, s.mask, source));
    }
    let mut means = Vec::new();
    for d in DS {
        let p = Pipeline::new(PipelineConfig { dilation: d, ..Default::default() }).map_err(|e| e.to_string())?;
        let (mut w, mut t) = (0.0, 0.0);
        for (x, gt, src) in &samples {
            let out = p.run(x, &SegmentSource::Provided(ProbMask::from(src))).map_err(|e| e.to_string())?;
            w += removal_scores(x, &out.restored, gt).map_err(|e| e.to_string())?.0;
            t += preservation_scores(x, &out.restored, gt).map_err(|e| e.to_string())?.0;
        }
        means.push((d, w / 50.0, t / 50.0));
    }
    let elapsed = start.elapsed();
    let table = means
        .iter()
        .map(|(d, w, t)| format!("d={d}: W {w:.5} T {t:.5}"))
        .collect::<Vec<_>>()
        .join(", ");
    let mut problems = Vec::new();
    for pair in means.windows(2) {
        let ((d0, w0, t0), (d1, w1, t1)) = (pair[0], pair[1]);
        if w1 < w0 {
            problems.push(format!("RMSE_W falls {d0}->{d1}"));
        }
        if t1 < t0 {
            problems.push(format!("RMSE_T falls {d0}->{d1}"));
        }
    }
    if means[2].1 <= means[0].1 {
        problems.push("RMSE_W(3) <= RMSE_W(0)".into());
    }
    if elapsed > Duration::from_secs(120) {
        problems.push(format!("took {elapsed:?}"));
    }
    if problems.is_empty() {
        Ok(format!("{table}; {:.1}s", elapsed.as_secs_f64()))
    } else {
        Err(format!("{}; {table}; {:.1}s", problems.join(", "), elapsed.as_secs_f64()))
    }
}

fn dataset_recipes() -> Check {
    let (mut s_lo, mut s_hi, mut l_lo, mut l_hi) = (1.0f64, 0.0f64, 1.0f64, 0.0f64);
    for i in 0..100 {
        for variant in [Alpha1Variant::Small, Alpha1Variant::Large] {
            let seed = derive_seed(505 + variant as u64, i);
            let (h, l) = alpha1_input(seed, 256);
            let s = synth_alpha1(&h, &l, variant, seed).map_err(|e| format!("seed {seed}: {e}"))?;
            let c = s.mask.coverage();
            let (lo, hi, band) = match variant {
                Alpha1Variant::Small => (&mut s_lo, &mut s_hi, 0.05..=0.07),
                Alpha1Variant::Large => (&mut l_lo, &mut l_hi, 0.33..=0.37),
            };
            *lo = lo.min(c);
            *hi = hi.max(c);
            ensure(band.contains(&c), || format!("{variant:?} coverage {c:.4} for seed {seed}"))?;
        }
    }
    let (mut o_lo, mut o_hi) = (1.0f64, 0.0f64);
    for i in 0..100 {
        let seed = derive_seed(606, i);
        let mut rng = rng_from_seed(seed);
        let h: Image<f64> = host(&mut rng, 256, 256);
        let l = logo(&mut rng, 128, LogoKind::Ring);
        let s = synth_clwd_like(&h, &l, seed, &ClwdRecipe::default()).map_err(|e| e.to_string())?;
        o_lo = o_lo.min(s.spec.opacity);
        o_hi = o_hi.max(s.spec.opacity);
    }
    ensure(o_lo >= 0.3 && o_hi <= 0.7, || format!("opacity range [{o_lo}, {o_hi}]"))?;
    Ok(format!(
        "Alpha1-S coverage [{s_lo:.4}, {s_hi:.4}], Alpha1-L [{l_lo:.4}, {l_hi:.4}], CLWD opacity [{o_lo:.3}, {o_hi:.3}]"
    ))
}

fn disorient_table() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ds = tmp.path().join("test");
    let out = tmp.path().join("out");
    let run = |args: &[&str]| morphomod_cli::main_with_args(std::iter::once("morphomod").chain(args.iter().copied()));
    let code = run(&["synth", "--recipe", "disorient", "--count", "200", "--seed", "6", "--out", ds.to_str().unwrap()]);
    ensure(code == 0, || format!("synth exited {code}"))?;
    let code = run(&["disorient", "--dataset", ds.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "6"]);
    ensure(code == 0, || format!("disorient exited {code}"))?;
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let (orig, dis) = (&report["original"], &report["disoriented"]);
    let elapsed = start.elapsed();
    let line = format!(
        "original {}% ({}/{}), disoriented {}% ({}/{}), {:.1}s",
        orig["percent"], orig["correct"], orig["total"], dis["percent"], dis["correct"], dis["total"],
        elapsed.as_secs_f64()
    );
    ensure(
        orig["percent"] == 100.0 && dis["percent"] == 0.0 && orig["total"] == 200 && elapsed < Duration::from_secs(60),
        || line.clone(),
    )?;
    Ok(line)
}

fn remote_contract() -> Check {
    use stub::{dead_endpoint, Behavior, Stub};
    let x = Image::from_fn(20, 24, |y, c| {
        let v = |k: usize| ((y * 37 + c * 11 + k * 90) % 256) as f64 / 255.0;
        [v(0), v(1), v(2)]
    });
    let m = BinaryMask::from_fn(20, 24, |y, c| (5..15).contains(&y) && (4..18).contains(&c));
    let opts = InpaintOptions::default();
    let req = InpaintRequest::new(&x, &m, "Remove.", &opts).unwrap();
    let call = |b: Behavior| RemoteInpainter::new(&Stub::start(b).url).call(&req);

    let echo = call(Behavior::Echo).map_err(|e| format!("echo: {e}"))?;
    ensure(restore(&x, &m, &echo.image).unwrap() == x, || "echo stub is not restore-identity".into())?;
    let gray = call(Behavior::Gray).map_err(|e| format!("gray: {e}"))?;
    ensure(gray.image.data().iter().all(|v| (v - 0.5).abs() <= 0.5 / 255.0), || "gray stub".into())?;

    let expect = |b: Behavior, ok: fn(&Error) -> bool| -> Result<(), String> {
        match call(b) {
            Err(e) if ok(&e) => Ok(()),
            other => Err(format!("{b:?} gave {other:?}")),
        }
    };
    expect(Behavior::Status(500), |e| matches!(e, Error::RemoteStatus { status: 500, .. }))?;
    expect(Behavior::BadJson, |e| matches!(e, Error::InvalidPayload(_)))?;
    expect(Behavior::BadBase64, |e| matches!(e, Error::InvalidPayload(_)))?;
    expect(Behavior::WrongDims, |e| matches!(e, Error::RemoteDimensionMismatch { .. }))?;
    match RemoteInpainter::new(&dead_endpoint()).call(&req) {
        Err(Error::Network { .. }) => {}
        other => return Err(format!("dead endpoint gave {other:?}")),
    }
    Ok("echo restore-identity, gray fill, status/json/base64/size/network errors".into())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("dilation oracle", dilation_oracle),
        ("morphology laws", morphology_laws),
        ("restore correctness", restore_correctness),
        ("harmonic inpainter", harmonic_inpainter),
        ("metric identities", metric_identities),
        ("dilation trend", dilation_trend),
        ("dataset recipes", dataset_recipes),
        ("disorient accuracy", disorient_table),
        ("remote contract", remote_contract),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
