//! Per-image metric rows and their CSV/JSON forms.

use std::path::Path;

use anyhow::Context;
use morphomod::metrics::{dice_bce, iou, f1, preservation_scores, removal_scores};
use morphomod::raster::{Image, ProbMask};
use morphomod::{BinaryMask, Error};
use serde::Serialize;

pub const COLUMNS: [&str; 8] = [
    "rmse_w", "ssim_w", "rmse_t", "ssim_t", "iou", "f1", "dice_loss", "bce_loss",
];

/// Marker written in place of a value whose region was empty.
pub const DEGENERATE: &str = "degenerate";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Value(f64),
    Degenerate,
    /// Not computed, e.g. mask scores without a predicted mask.
    Missing,
}

impl Cell {
    fn from_result(r: morphomod::Result<f64>) -> morphomod::Result<Cell> {
        match r {
            Ok(v) => Ok(Cell::Value(v)),
            Err(Error::EmptyRegion(_) | Error::Degenerate(_)) => Ok(Cell::Degenerate),
            Err(e) => Err(e),
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            _ => None,
        }
    }

    fn to_json(self) -> serde_json::Value {
        match self {
            Cell::Value(v) => v.into(),
            Cell::Degenerate => DEGENERATE.into(),
            Cell::Missing => serde_json::Value::Null,
        }
    }

    fn render(self) -> String {
        match self {
            Cell::Value(v) => v.to_string(),
            Cell::Degenerate => DEGENERATE.to_string(),
            Cell::Missing => String::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Row {
    pub image: String,
    pub cells: [Cell; 8],
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl Row {
    pub fn failed(image: String, error: String) -> Self {
        Self {
            image,
            cells: [Cell::Missing; 8],
            warnings: Vec::new(),
            error: Some(error),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut m = cells_json(&self.cells);
        m.insert("image".into(), self.image.clone().into());
        m.insert("warnings".into(), self.warnings.clone().into());
        m.insert("error".into(), self.error.clone().into());
        serde_json::Value::Object(m)
    }

    pub fn get(&self, column: &str) -> Cell {
        let i = COLUMNS.iter().position(|c| *c == column).expect("known column");
        self.cells[i]
    }
}

/// Scores `out` against the watermarked input and ground-truth mask.
/// `pred` is the source mask before dilation, as probabilities.
pub fn score(
    x_wm: &Image<f64>,
    out: &Image<f64>,
    gt: &BinaryMask,
    pred: Option<&ProbMask<f64>>,
    threshold: f64,
) -> morphomod::Result<[Cell; 8]> {
    let split = |r: morphomod::Result<(f64, f64)>| -> morphomod::Result<(Cell, Cell)> {
        match r {
            Ok((a, b)) => Ok((Cell::Value(a), Cell::Value(b))),
            Err(e) => {
                let c = Cell::from_result(Err(e))?;
                Ok((c, c))
            }
        }
    };
    let (rmse_w, ssim_w) = split(removal_scores(x_wm, out, gt))?;
    let (rmse_t, ssim_t) = split(preservation_scores(x_wm, out, gt))?;
    let mut cells = [rmse_w, ssim_w, rmse_t, ssim_t, Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing];
    if let Some(p) = pred {
        let hard = morphomod::morphology::binarize(p, threshold);
        let db = dice_bce(p, gt)?;
        cells[4] = Cell::from_result(iou(&hard, gt))?;
        cells[5] = Cell::from_result(f1(&hard, gt))?;
        cells[6] = Cell::Value(db.dice_loss);
        cells[7] = Cell::Value(db.bce_loss);
    }
    Ok(cells)
}

pub fn cells_json(cells: &[Cell; 8]) -> serde_json::Map<String, serde_json::Value> {
    COLUMNS
        .iter()
        .zip(cells)
        .map(|(k, c)| (k.to_string(), c.to_json()))
        .collect()
}

/// Column means over rows that produced a value; degenerate and failed
/// rows are skipped.
pub fn mean(rows: &[Row]) -> [Cell; 8] {
    let mut out = [Cell::Missing; 8];
    for (c, slot) in out.iter_mut().enumerate() {
        let cells: Vec<Cell> = rows.iter().filter(|r| r.error.is_none()).map(|r| r.cells[c]).collect();
        let values: Vec<f64> = cells.iter().filter_map(|c| c.value()).collect();
        *slot = if !values.is_empty() {
            Cell::Value(values.iter().sum::<f64>() / values.len() as f64)
        } else if cells.contains(&Cell::Degenerate) {
            Cell::Degenerate
        } else {
            Cell::Missing
        };
    }
    out
}

pub fn write_csv(path: &Path, rows: &[Row]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header = vec!["image"];
    header.extend(COLUMNS);
    header.extend(["warnings", "error"]);
    w.write_record(&header)?;
    let record = |name: &str, cells: &[Cell; 8], warnings: &[String], error: Option<&str>| {
        let mut r = vec![name.to_string()];
        r.extend(cells.iter().map(|c| c.render()));
        r.push(warnings.join(";"));
        r.push(error.unwrap_or("").to_string());
        r
    };
    for row in rows {
        w.write_record(record(&row.image, &row.cells, &row.warnings, row.error.as_deref()))?;
    }
    w.write_record(record("mean", &mean(rows), &[], None))?;
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
