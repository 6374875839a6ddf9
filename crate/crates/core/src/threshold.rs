//! Automatic threshold selection on a Gaussian-smoothed gray histogram.
//!
//! The histogram is convolved with a sampled Gaussian whose width is derived
//! from a bandwidth-time product `BT`:
//!
//! ```text
//! h(t) = exp(-t^2 / (2 delta^2)) / (sqrt(2 pi) delta),   delta = sqrt(ln 2) / (2 pi BT)
//! ```
//!
//! Taps sit at integer offsets `t in [-T, T]`. The pupil is the darkest mode of
//! an eye image, so the threshold is the deepest valley between the darkest
//! significant peak and the next significant peak above it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{BinaryImage, GrayImage, Histogram};

pub const DEFAULT_BT: f64 = 0.05;
pub const DEFAULT_SIGNIFICANCE: f64 = 0.001;
pub const DEFAULT_FALLBACK_PERCENTILE: f64 = 0.15;

/// Fraction of the untruncated tap mass the kernel support must retain.
const KERNEL_MASS: f64 = 0.999;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    bt: f64,
    delta: f64,
    radius: usize,
    raw: Vec<f64>,
    taps: Vec<f64>,
}

impl GaussianKernel {
    pub fn bt(&self) -> f64 {
        self.bt
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Support radius `T`; the kernel has `2T + 1` taps.
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Normalised tap at integer offset `t`, zero outside the support.
    pub fn tap(&self, t: isize) -> f64 {
        let i = t + self.radius as isize;
        if i < 0 || i as usize >= self.taps.len() {
            0.0
        } else {
            self.taps[i as usize]
        }
    }

    /// Tap values before normalisation, indexed from `-T` to `T`.
    pub fn raw_taps(&self) -> &[f64] {
        &self.raw
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
}

fn gaussian(t: f64, delta: f64) -> f64 {
    (-t * t / (2.0 * delta * delta)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * delta)
}

pub fn build_kernel(bt: f64) -> Result<GaussianKernel> {
    if !(bt > 0.0 && bt.is_finite()) {
        return Err(Error::InvalidParameter(format!("bt must be positive, got {bt}")));
    }
    let delta = 2f64.ln().sqrt() / (2.0 * std::f64::consts::PI * bt);

    // Mass of the untruncated tap sequence; terms beyond 40 delta are below f64 resolution.
    let far = (40.0 * delta).ceil() as usize + 1;
    let mut untruncated = gaussian(0.0, delta);
    for t in 1..=far {
        untruncated += 2.0 * gaussian(t as f64, delta);
    }

    let mut radius = 0usize;
    let mut kept = gaussian(0.0, delta);
    while kept < KERNEL_MASS * untruncated {
        radius += 1;
        kept += 2.0 * gaussian(radius as f64, delta);
    }

    let raw: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|t| gaussian(t as f64, delta))
        .collect();
    let sum: f64 = raw.iter().sum();
    let taps = raw.iter().map(|v| v / sum).collect();
    Ok(GaussianKernel {
        bt,
        delta,
        radius,
        raw,
        taps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedHistogram {
    values: [f64; 256],
    source_total: f64,
    occupied_levels: usize,
}

impl SmoothedHistogram {
    pub fn values(&self) -> &[f64; 256] {
        &self.values
    }

    pub fn source_total(&self) -> f64 {
        self.source_total
    }

    /// Gray levels occupied in the histogram before smoothing.
    pub fn occupied_levels(&self) -> usize {
        self.occupied_levels
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Half-sample symmetric reflection into `0..256`: -1 -> 0, 256 -> 255.
#[inline]
fn reflect(p: isize) -> usize {
    let m = p.rem_euclid(512) as usize;
    if m >= 256 {
        511 - m
    } else {
        m
    }
}

/// Convolves any 256-bin real histogram with the kernel under reflecting
/// boundaries. Each source bin keeps its full mass.
pub fn smooth_values(values: &[f64; 256], k: &GaussianKernel) -> [f64; 256] {
    let r = k.radius as isize;
    let mut out = [0.0; 256];
    for (g, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, &w) in k.taps.iter().enumerate() {
            let t = i as isize - r;
            acc += values[reflect(g as isize - t)] * w;
        }
        *slot = acc;
    }
    out
}

pub fn smooth(h: &Histogram, k: &GaussianKernel) -> SmoothedHistogram {
    let mut src = [0.0; 256];
    for (d, &c) in src.iter_mut().zip(h.bins()) {
        *d = c as f64;
    }
    SmoothedHistogram {
        values: smooth_values(&src, k),
        source_total: h.total() as f64,
        occupied_levels: h.occupied_levels(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMethod {
    Valley,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub threshold: u8,
    /// Darkest significant peak (the pupil mode).
    pub peak_low: u8,
    /// Next significant peak above it; equals `peak_low` on fallback.
    pub peak_high: u8,
    pub method: ThresholdMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    /// Peaks lower than this fraction of the tallest bin are ignored.
    pub significance: f64,
    /// Cumulative mass fraction used when no valley exists.
    pub fallback_percentile: f64,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        Self {
            significance: DEFAULT_SIGNIFICANCE,
            fallback_percentile: DEFAULT_FALLBACK_PERCENTILE,
        }
    }
}

impl ThresholdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.significance > 0.0 && self.significance <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "significance must be in (0, 1], got {}",
                self.significance
            )));
        }
        if !(self.fallback_percentile > 0.0 && self.fallback_percentile < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fallback percentile must be in (0, 1), got {}",
                self.fallback_percentile
            )));
        }
        Ok(())
    }
}

/// Local maxima (plateaus collapse to their first index), compared with a
/// tolerance relative to the tallest bin so that rescaling the histogram does
/// not change which bins tie.
fn local_maxima(v: &[f64; 256], tol: f64) -> Vec<usize> {
    let mut peaks = Vec::new();
    let mut g = 0;
    while g < 256 {
        let mut end = g;
        while end + 1 < 256 && (v[end + 1] - v[g]).abs() <= tol {
            end += 1;
        }
        let rises = g == 0 || v[g] - v[g - 1] > tol;
        let falls = end == 255 || v[g] - v[end + 1] > tol;
        if rises && falls {
            peaks.push(g);
        }
        g = end + 1;
    }
    peaks
}

pub fn select_threshold(sh: &SmoothedHistogram, params: &ThresholdParams) -> Result<ThresholdResult> {
    params.validate()?;
    let v = &sh.values;
    let max = v.iter().copied().fold(f64::MIN, f64::max);
    let min = v.iter().copied().fold(f64::MAX, f64::min);
    if sh.occupied_levels < 2 || max <= 0.0 || max - min <= 1e-12 * max {
        return Err(Error::DegenerateHistogram);
    }
    let tol = 1e-12 * max;

    let significant: Vec<usize> = local_maxima(v, tol)
        .into_iter()
        .filter(|&g| v[g] >= params.significance * max)
        .collect();

    if let [low, high, ..] = significant[..] {
        if high > low + 1 {
            let between = &v[low + 1..high];
            let floor = between.iter().copied().fold(f64::MAX, f64::min);
            let first = between.iter().position(|&x| x - floor <= tol).unwrap();
            let last = between.iter().rposition(|&x| x - floor <= tol).unwrap();
            let threshold = low + 1 + (first + last) / 2;
            return Ok(ThresholdResult {
                threshold: threshold as u8,
                peak_low: low as u8,
                peak_high: high as u8,
                method: ThresholdMethod::Valley,
            });
        }
    }

    let target = params.fallback_percentile * sh.mass();
    let mut acc = 0.0;
    let mut threshold = 255;
    for (g, &x) in v.iter().enumerate() {
        acc += x;
        if acc >= target {
            threshold = g;
            break;
        }
    }
    let peak = significant.first().copied().unwrap_or(threshold);
    Ok(ThresholdResult {
        threshold: threshold as u8,
        peak_low: peak as u8,
        peak_high: peak as u8,
        method: ThresholdMethod::Fallback,
    })
}

/// Foreground is every pixel at or below `threshold`; the pupil is dark.
pub fn binarize(img: &GrayImage, threshold: u8) -> BinaryImage {
    BinaryImage::new(
        img.width(),
        img.height(),
        img.pixels().iter().map(|&p| p <= threshold).collect(),
    )
    .expect("same dimensions as the source image")
}
