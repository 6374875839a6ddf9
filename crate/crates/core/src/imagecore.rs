//! Image containers and the primitives every later stage builds on.
//!
//! Coordinates follow one convention throughout the crate: `x` is the column
//! index, `y` is the row index, and the origin is the top-left pixel. Pixel
//! buffers are row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[usize; 4]", from = "[usize; 4]")]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    /// True when the rectangle is non-empty and lies inside a `width`x`height` image.
    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.w >= 1 && self.h >= 1 && self.right() <= width && self.bottom() <= height
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn intersection_area(&self, other: &Rect) -> usize {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        x1.saturating_sub(x0) * y1.saturating_sub(y0)
    }

    /// Intersection over union; zero for two empty rectangles.
    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Shift by the top-left corner of `origin`, mapping a sub-image rect into
    /// the coordinates of its host.
    pub fn offset_by(&self, origin: &Rect) -> Rect {
        Rect::new(self.x + origin.x, self.y + origin.y, self.w, self.h)
    }

    fn as_array(&self) -> [usize; 4] {
        [self.x, self.y, self.w, self.h]
    }
}

impl From<Rect> for [usize; 4] {
    fn from(r: Rect) -> Self {
        r.as_array()
    }
}

impl From<[usize; 4]> for Rect {
    fn from(a: [usize; 4]) -> Self {
        Rect::new(a[0], a[1], a[2], a[3])
    }
}

/// 8-bit single channel image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        let expected = width * height;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    /// Converts interleaved RGB bytes with fixed luma weights
    /// 0.299 / 0.587 / 0.114, rounded to the nearest integer.
    pub fn from_rgb(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        let expected = width * height * 3;
        if rgb.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: rgb.len(),
            });
        }
        let pixels = rgb.chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect();
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }
}

pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

/// Two-level image; `true` is foreground (white).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    pixels: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, pixels: Vec<bool>) -> Result<Self> {
        let expected = width * height;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.width + x]
    }

    /// Out-of-bounds reads return background.
    #[inline]
    pub fn get_or_false(&self, x: isize, y: isize) -> bool {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            false
        } else {
            self.pixels[y as usize * self.width + x as usize]
        }
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[bool] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    /// True when every foreground pixel of `self` is also foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self
                .pixels
                .iter()
                .zip(&other.pixels)
                .all(|(&a, &b)| !a || b)
    }

    /// Renders foreground as 255 and background as 0.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| if p { 255 } else { 0 }).collect(),
        }
    }
}

/// 256-bin gray-level histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    bins: [u64; 256],
    total: u64,
}

impl Histogram {
    pub fn from_bins(bins: [u64; 256]) -> Self {
        let total = bins.iter().sum();
        Self { bins, total }
    }

    pub fn bins(&self) -> &[u64; 256] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of gray levels with at least one pixel.
    pub fn occupied_levels(&self) -> usize {
        self.bins.iter().filter(|&&c| c > 0).count()
    }
}

pub fn compute_histogram(img: &GrayImage) -> Result<Histogram> {
    if img.is_empty() {
        return Err(Error::EmptyImage);
    }
    let mut bins = [0u64; 256];
    for &p in img.pixels() {
        bins[p as usize] += 1;
    }
    Ok(Histogram {
        bins,
        total: img.pixels().len() as u64,
    })
}

/// Summed-area tables of intensities and squared intensities.
///
/// Both tables are `(width + 1) x (height + 1)` with a zero first row and
/// column, so every rectangle sum is four lookups.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    sums: Vec<u64>,
    squares: Vec<u64>,
}

impl IntegralImage {
    /// Image width (the table itself is one wider).
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Table entry at corner `(x, y)`, `0 <= x <= width`, `0 <= y <= height`.
    pub fn at(&self, x: usize, y: usize) -> u64 {
        self.sums[y * (self.width + 1) + x]
    }

    #[inline]
    fn lookup(table: &[u64], stride: usize, x: usize, y: usize, w: usize, h: usize) -> u64 {
        let a = table[y * stride + x];
        let b = table[y * stride + x + w];
        let c = table[(y + h) * stride + x];
        let d = table[(y + h) * stride + x + w];
        d + a - b - c
    }

    /// Exact pixel sum over the rectangle. Panics if it leaves the image.
    #[inline]
    pub fn rect_sum(&self, x: usize, y: usize, w: usize, h: usize) -> u64 {
        assert!(x + w <= self.width && y + h <= self.height, "rect outside integral image");
        Self::lookup(&self.sums, self.width + 1, x, y, w, h)
    }

    #[inline]
    pub fn rect_square_sum(&self, x: usize, y: usize, w: usize, h: usize) -> u64 {
        assert!(x + w <= self.width && y + h <= self.height, "rect outside integral image");
        Self::lookup(&self.squares, self.width + 1, x, y, w, h)
    }

    pub fn sum(&self, r: &Rect) -> u64 {
        self.rect_sum(r.x, r.y, r.w, r.h)
    }

    /// Mean and population standard deviation of the pixels under `r`.
    pub fn mean_std(&self, r: &Rect) -> (f64, f64) {
        let n = r.area() as f64;
        let s = self.sum(r) as f64;
        let sq = self.rect_square_sum(r.x, r.y, r.w, r.h) as f64;
        let mean = s / n;
        let var = (sq / n - mean * mean).max(0.0);
        (mean, var.sqrt())
    }
}

pub fn compute_integral(img: &GrayImage) -> Result<IntegralImage> {
    if img.is_empty() {
        return Err(Error::EmptyImage);
    }
    let (w, h) = (img.width(), img.height());
    let stride = w + 1;
    let mut sums = vec![0u64; stride * (h + 1)];
    let mut squares = vec![0u64; stride * (h + 1)];
    for y in 0..h {
        let mut row_sum = 0u64;
        let mut row_sq = 0u64;
        for (x, &p) in img.row(y).iter().enumerate() {
            let v = u64::from(p);
            row_sum += v;
            row_sq += v * v;
            let idx = (y + 1) * stride + x + 1;
            sums[idx] = sums[idx - stride] + row_sum;
            squares[idx] = squares[idx - stride] + row_sq;
        }
    }
    Ok(IntegralImage {
        width: w,
        height: h,
        sums,
        squares,
    })
}

pub fn invert(img: &BinaryImage) -> BinaryImage {
    BinaryImage {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&p| !p).collect(),
    }
}

pub fn crop(img: &GrayImage, r: &Rect) -> Result<GrayImage> {
    if !r.fits_in(img.width(), img.height()) {
        return Err(Error::RectOutOfBounds {
            rect: r.as_array(),
            width: img.width(),
            height: img.height(),
        });
    }
    let mut pixels = Vec::with_capacity(r.area());
    for y in r.y..r.bottom() {
        pixels.extend_from_slice(&img.row(y)[r.x..r.right()]);
    }
    Ok(GrayImage {
        width: r.w,
        height: r.h,
        pixels,
    })
}
