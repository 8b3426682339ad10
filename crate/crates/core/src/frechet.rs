//! Fréchet distance between Gaussian fits of real and synthetic feature sets.
//!
//! Features come either from the built-in 768-dimensional patch-statistics
//! extractor or from an external embedding CSV (one row per image, no header).

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgproc::{reflect, resize_bilinear, Image};
use crate::linalg::{ensure_psd, mean_and_covariance, trace_sqrt_product, Matrix, SymMatrix};

/// Side of the canonical raster the extractor works on.
pub const EXTRACT_SIDE: usize = 128;
/// Cells per axis; each cell is `EXTRACT_SIDE / GRID` pixels square.
const GRID: usize = 16;
const CELL: usize = EXTRACT_SIDE / GRID;
pub const STATS_PER_CELL: usize = 3;
pub const FEATURE_DIM: usize = GRID * GRID * STATS_PER_CELL;

/// Negative distances down to this magnitude are treated as round-off.
const FID_NEGATIVE_SLACK: f64 = 1e-6;

/// `n x d` feature samples, one row per image.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix(Matrix);

impl FeatureMatrix {
    pub fn new(matrix: Matrix) -> Self {
        FeatureMatrix(matrix)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(FeatureMatrix(Matrix::from_rows(rows)?))
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn d(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }
}

/// Sobel gradient magnitude with each derivative scaled by 1/4, so a full
/// 0-to-255 step yields 255 per axis.
fn sobel_magnitude(img: &Image, x: usize, y: usize) -> f64 {
    let (w, h) = (img.width(), img.height());
    let p = |dx: isize, dy: isize| {
        img.get(reflect(x as isize + dx, w), reflect(y as isize + dy, h)) as f64
    };
    let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1) - p(-1, -1) - 2.0 * p(-1, 0) - p(-1, 1)) / 4.0;
    let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1) - p(-1, -1) - 2.0 * p(0, -1) - p(1, -1)) / 4.0;
    (gx * gx + gy * gy).sqrt()
}

/// 768 patch statistics: the image is resized to 128x128 and split into a
/// 16x16 grid of 8x8 cells; each cell contributes its mean, population
/// standard deviation and mean Sobel magnitude, all divided by 255.
///
/// Layout is cell-major (cells row by row), then statistic.
pub fn extract_patchstats(img: &Image) -> Vec<f64> {
    let img = resize_bilinear(img, EXTRACT_SIDE, EXTRACT_SIDE).expect("non-zero target size");
    let mut out = Vec::with_capacity(FEATURE_DIM);
    let area = (CELL * CELL) as f64;
    for cy in 0..GRID {
        for cx in 0..GRID {
            let (mut sum, mut sq, mut grad) = (0.0, 0.0, 0.0);
            for y in cy * CELL..(cy + 1) * CELL {
                for x in cx * CELL..(cx + 1) * CELL {
                    let v = img.get(x, y) as f64;
                    sum += v;
                    sq += v * v;
                    grad += sobel_magnitude(&img, x, y);
                }
            }
            let mean = sum / area;
            let var = (sq / area - mean * mean).max(0.0);
            out.push(mean / 255.0);
            out.push(var.sqrt() / 255.0);
            out.push(grad / area / 255.0);
        }
    }
    out
}

/// Patch statistics for every image, one row each, in input order.
pub fn extract_features(images: &[Image]) -> FeatureMatrix {
    let rows: Vec<Vec<f64>> = images.par_iter().map(extract_patchstats).collect();
    FeatureMatrix(Matrix::from_raw(rows.len(), FEATURE_DIM, rows.concat()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianStats {
    pub mu: Vec<f64>,
    pub sigma: SymMatrix,
}

/// Mean and sample covariance of `f`, with `eps * I` added to the covariance
/// (pass 0 for none).
pub fn gaussian_stats(f: &FeatureMatrix, eps: f64) -> Result<GaussianStats> {
    if !(eps >= 0.0) {
        return Err(Error::invalid(format!("regularization eps must be non-negative, got {eps}")));
    }
    let (mu, sigma) = mean_and_covariance(&f.0)?;
    let sigma = if eps > 0.0 { sigma.add_identity(eps) } else { sigma };
    Ok(GaussianStats { mu, sigma })
}

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct FidScore(pub f64);

/// `|mu_r - mu_s|^2 + Tr(S_r) + Tr(S_s) - 2 Tr((S_r S_s)^(1/2))`.
pub fn fid(r: &GaussianStats, s: &GaussianStats) -> Result<FidScore> {
    if r.mu.len() != s.mu.len() || r.sigma.dim() != s.sigma.dim() || r.mu.len() != r.sigma.dim() {
        return Err(Error::dims(format!(
            "feature dimensions differ: {} vs {}",
            r.mu.len(),
            s.mu.len()
        )));
    }
    ensure_psd(&r.sigma)?;
    let mean_term: f64 = r.mu.iter().zip(&s.mu).map(|(a, b)| (a - b) * (a - b)).sum();
    let cross = trace_sqrt_product(&r.sigma, &s.sigma)?;
    let value = mean_term + r.sigma.trace() + s.sigma.trace() - 2.0 * cross;
    if !value.is_finite() {
        return Err(Error::NonFinite("FID"));
    }
    if value < -FID_NEGATIVE_SLACK {
        return Err(Error::Numeric(format!(
            "FID evaluated to {value:e}; covariances may be ill-conditioned, try eps regularization"
        )));
    }
    Ok(FidScore(value.max(0.0)))
}

/// Parses comma-separated feature rows. Blank lines are ignored.
pub fn import_features(text: &str) -> Result<FeatureMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::format("feature CSV", format!("line {lineno}: bad number '{tok}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::format(
                    "feature CSV",
                    format!("line {lineno}: expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format("feature CSV", "no rows"));
    }
    FeatureMatrix::from_rows(&rows)
}

/// Writes rows with shortest round-trip float formatting.
pub fn export_features(f: &FeatureMatrix) -> String {
    let mut out = String::new();
    for i in 0..f.n() {
        for (j, v) in f.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}
