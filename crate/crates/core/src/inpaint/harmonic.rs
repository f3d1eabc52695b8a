//! Harmonic fill: masked pixels solve the discrete Laplace equation (each one
//! equals the mean of its in-bounds 4-neighbours) with Dirichlet data taken
//! from the unmasked pixels.
//!
//! Each 4-connected hole is relaxed with successive over-relaxation in
//! lexicographic order, seeded with the pre-fill output. After convergence the
//! hole is projected onto `[min, max]` of its boundary values, which contains
//! the exact solution by the maximum principle.

use log::debug;

use super::{InpaintBackend, InpaintOutcome, InpaintRequest, InpaintStatus};
use crate::error::{Error, Result};
use crate::raster::{prefill, FillStrategy, Image};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HarmonicInpainter;

struct Hole {
    /// Pixel indices in row-major order.
    pixels: Vec<usize>,
    /// For each pixel, offsets into `neighbors`.
    starts: Vec<usize>,
    neighbors: Vec<usize>,
    boundary: Vec<usize>,
    omega: f64,
}

fn find_holes(mask: &[bool], h: usize, w: usize) -> Vec<Hole> {
    let mut label = vec![usize::MAX; h * w];
    let mut holes = Vec::new();
    let mut stack = Vec::new();
    for seed in 0..h * w {
        if !mask[seed] || label[seed] != usize::MAX {
            continue;
        }
        let id = holes.len();
        let mut pixels = Vec::new();
        let (mut y0, mut y1, mut x0, mut x1) = (usize::MAX, 0, usize::MAX, 0);
        label[seed] = id;
        stack.push(seed);
        while let Some(p) = stack.pop() {
            pixels.push(p);
            let (y, x) = (p / w, p % w);
            y0 = y0.min(y);
            y1 = y1.max(y);
            x0 = x0.min(x);
            x1 = x1.max(x);
            for q in four_neighbors(p, h, w) {
                if mask[q] && label[q] == usize::MAX {
                    label[q] = id;
                    stack.push(q);
                }
            }
        }
        pixels.sort_unstable();
        let mut starts = Vec::with_capacity(pixels.len() + 1);
        let mut neighbors = Vec::with_capacity(pixels.len() * 4);
        let mut boundary = Vec::new();
        for &p in &pixels {
            starts.push(neighbors.len());
            for q in four_neighbors(p, h, w) {
                neighbors.push(q);
                if !mask[q] {
                    boundary.push(q);
                }
            }
        }
        starts.push(neighbors.len());
        boundary.sort_unstable();
        boundary.dedup();
        // optimal SOR factor for an n×n (or 1×n) Dirichlet problem
        let n = (y1 - y0 + 1).max(x1 - x0 + 1) as f64;
        let omega = 2.0 / (1.0 + (std::f64::consts::PI / (n + 1.0)).sin());
        holes.push(Hole {
            pixels,
            starts,
            neighbors,
            boundary,
            omega,
        });
    }
    holes
}

fn four_neighbors(p: usize, h: usize, w: usize) -> impl Iterator<Item = usize> {
    let (y, x) = (p / w, p % w);
    [
        (y > 0).then(|| p - w),
        (x > 0).then(|| p - 1),
        (x + 1 < w).then(|| p + 1),
        (y + 1 < h).then(|| p + w),
    ]
    .into_iter()
    .flatten()
}

/// Relaxes one hole in place; returns `(sweeps, last max update)`.
fn relax<T: Scalar>(u: &mut [T], hole: &Hole, tol: T, cap: usize) -> (usize, T) {
    let omega = T::lit(hole.omega);
    let mut last = T::infinity();
    for sweep in 1..=cap {
        let mut max_update = T::zero();
        for (k, &p) in hole.pixels.iter().enumerate() {
            let nbrs = &hole.neighbors[hole.starts[k]..hole.starts[k + 1]];
            let inv = T::one() / T::from_count(nbrs.len());
            for c in 0..3 {
                let mut acc = T::zero();
                for &q in nbrs {
                    acc = acc + u[q * 3 + c];
                }
                let old = u[p * 3 + c];
                let new = old + omega * (acc * inv - old);
                u[p * 3 + c] = new;
                max_update = max_update.max((new - old).abs());
            }
        }
        last = max_update;
        if max_update < tol {
            return (sweep, last);
        }
    }
    (cap, last)
}

fn project_onto_boundary_range<T: Scalar>(u: &mut [T], hole: &Hole) {
    for c in 0..3 {
        let (lo, hi) = hole.boundary.iter().fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), &q| (lo.min(u[q * 3 + c]), hi.max(u[q * 3 + c])),
        );
        for &p in &hole.pixels {
            u[p * 3 + c] = u[p * 3 + c].max(lo).min(hi);
        }
    }
}

impl HarmonicInpainter {
    pub fn solve<T: Scalar>(&self, req: &InpaintRequest<'_, T>) -> Result<InpaintOutcome<T>> {
        let opts = req.options;
        if !(opts.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "solver tolerance must be > 0, got {}",
                opts.tolerance
            )));
        }
        if !req.prompt.is_empty() {
            debug!("harmonic backend ignores prompt {:?}", req.prompt);
        }
        let (h, w) = req.image.dims();
        if req.mask.is_empty() {
            return Ok(InpaintOutcome {
                image: req.image.clone(),
                status: InpaintStatus::Converged { iterations: 0 },
            });
        }
        if req.mask.is_full() {
            let fill = match opts.fill {
                FillStrategy::AverageBackground => FillStrategy::Gray,
                other => other,
            };
            return Ok(InpaintOutcome {
                image: prefill(req.image, req.mask, fill)?,
                status: InpaintStatus::NoBoundary,
            });
        }

        let seed = prefill(req.image, req.mask, opts.fill)?;
        let mut u = seed.into_data();
        let holes = find_holes(req.mask.data(), h, w);
        let cap = opts.max_iterations.unwrap_or(10 * (h + w)).max(1);
        let tol = T::lit(opts.tolerance);
        let mut worst: Option<(usize, f64)> = None;
        let mut sweeps = 0;
        for hole in &holes {
            let (n, last) = relax(&mut u, hole, tol, cap);
            sweeps = sweeps.max(n);
            if !(last < tol) {
                let last = last.as_f64();
                worst = Some(worst.map_or((n, last), |(i, l)| (i.max(n), l.max(last))));
            }
            project_onto_boundary_range(&mut u, hole);
        }
        let image = Image::new(h, w, u.into_iter().map(Scalar::clamp_unit).collect())?;
        let status = match worst {
            None => InpaintStatus::Converged { iterations: sweeps },
            Some((iterations, last_update)) => {
                log::warn!(
                    "harmonic solver hit its {cap}-sweep cap (last update {last_update:.3e})"
                );
                InpaintStatus::NotConverged {
                    iterations,
                    last_update,
                }
            }
        };
        Ok(InpaintOutcome { image, status })
    }
}

impl<T: Scalar> InpaintBackend<T> for HarmonicInpainter {
    fn id(&self) -> String {
        "harmonic".into()
    }

    fn inpaint(&self, req: &InpaintRequest<'_, T>) -> Result<InpaintOutcome<T>> {
        self.solve(req)
    }
}
