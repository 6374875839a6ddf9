//! Flat binary erosion and dilation, and the composite pupil filter
//! `erode^(n2-n1)( dilate^n2( erode^n1( ~f ) ) )`.
//!
//! Pixels outside the image are background for both operations.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{invert, BinaryImage};

/// The 7x7 circular template (radius 3) used for pupil filtering.
pub const PUPIL_SE_ROWS: [&str; 7] = [
    "0001000", "0011100", "0111110", "1111111", "0111110", "0011100", "0001000",
];

/// Square structuring element with its origin at the center cell.
#[derive(Clone, PartialEq, Eq)]
pub struct StructuringElement {
    size: usize,
    mask: Vec<bool>,
}

impl StructuringElement {
    pub fn new(size: usize, mask: Vec<bool>) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return Err(Error::StructuringElement(format!("side length {size} is not odd")));
        }
        if mask.len() != size * size {
            return Err(Error::StructuringElement(format!(
                "{} cells for a {size}x{size} element",
                mask.len()
            )));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::StructuringElement("mask has no set cell".into()));
        }
        Ok(Self { size, mask })
    }

    /// Parses rows of `0`/`1`; whitespace between cells is ignored and blank
    /// lines or lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<bool>> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut row = Vec::new();
            for c in line.chars().filter(|c| !c.is_whitespace()) {
                match c {
                    '0' => row.push(false),
                    '1' => row.push(true),
                    other => {
                        return Err(Error::StructuringElement(format!("unexpected character {other:?}")))
                    }
                }
            }
            rows.push(row);
        }
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::StructuringElement("matrix is not square".into()));
        }
        Self::new(size, rows.into_iter().flatten().collect())
    }

    /// The 7x7 pupil template.
    pub fn pupil_disk() -> Self {
        Self::parse(&PUPIL_SE_ROWS.join("\n")).expect("built-in template is valid")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn origin(&self) -> (usize, usize) {
        (self.size / 2, self.size / 2)
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.mask[row * self.size + col]
    }

    /// Offsets `(dx, dy)` of set cells relative to the origin.
    pub fn offsets(&self) -> impl Iterator<Item = (isize, isize)> + '_ {
        let half = (self.size / 2) as isize;
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(move |(i, _)| {
            let (col, row) = (i % self.size, i / self.size);
            (col as isize - half, row as isize - half)
        })
    }

    /// The element mirrored through its origin.
    pub fn reflected(&self) -> Self {
        let mut mask = self.mask.clone();
        mask.reverse();
        Self {
            size: self.size,
            mask,
        }
    }

    /// Maximal horizontal runs of set cells as `(dy, dx_start, dx_end)`, inclusive.
    fn runs(&self) -> Vec<(isize, isize, isize)> {
        let half = (self.size / 2) as isize;
        let mut runs = Vec::new();
        for row in 0..self.size {
            let mut col = 0;
            while col < self.size {
                if self.get(col, row) {
                    let start = col;
                    while col + 1 < self.size && self.get(col + 1, row) {
                        col += 1;
                    }
                    runs.push((row as isize - half, start as isize - half, col as isize - half));
                }
                col += 1;
            }
        }
        runs
    }
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self::pupil_disk()
    }
}

impl fmt::Debug for StructuringElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "StructuringElement({}x{})", self.size, self.size)?;
        for row in 0..self.size {
            let line: String = (0..self.size)
                .map(|col| if self.get(col, row) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphParams {
    pub n1: usize,
    pub n2: usize,
}

impl MorphParams {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        let p = Self { n1, n2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n2 < self.n1 {
            return Err(Error::InvalidParameter(format!(
                "n2 ({}) must be at least n1 ({})",
                self.n2, self.n1
            )));
        }
        Ok(())
    }
}

impl Default for MorphParams {
    fn default() -> Self {
        Self { n1: 1, n2: 2 }
    }
}

/// Per-row prefix counts of foreground pixels, padded so any column range can
/// be queried, with out-of-bounds columns counting as background.
struct RowCounts {
    width: usize,
    prefix: Vec<u32>,
}

impl RowCounts {
    fn new(f: &BinaryImage) -> Self {
        let width = f.width();
        let mut prefix = vec![0u32; (width + 1) * f.height()];
        for y in 0..f.height() {
            let base = y * (width + 1);
            for (x, &p) in f.row(y).iter().enumerate() {
                prefix[base + x + 1] = prefix[base + x] + u32::from(p);
            }
        }
        Self { width, prefix }
    }

    /// Foreground count in columns `x0..=x1` of row `y`, clipped to the image.
    #[inline]
    fn count(&self, y: usize, x0: isize, x1: isize) -> u32 {
        let lo = x0.clamp(0, self.width as isize) as usize;
        let hi = (x1 + 1).clamp(0, self.width as isize) as usize;
        if hi <= lo {
            return 0;
        }
        let base = y * (self.width + 1);
        self.prefix[base + hi] - self.prefix[base + lo]
    }
}

/// Output pixel is foreground iff every set cell of `se`, centered there,
/// covers a foreground pixel.
pub fn erode(f: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    let (w, h) = (f.width(), f.height());
    let counts = RowCounts::new(f);
    let runs = se.runs();
    BinaryImage::from_fn(w, h, |x, y| {
        runs.iter().all(|&(dy, a, b)| {
            let yy = y as isize + dy;
            if yy < 0 || yy >= h as isize {
                return false;
            }
            let (x0, x1) = (x as isize + a, x as isize + b);
            x0 >= 0 && x1 < w as isize && counts.count(yy as usize, x0, x1) as isize == b - a + 1
        })
    })
}

/// Output pixel is foreground iff the reflected `se`, centered there, hits at
/// least one foreground pixel.
pub fn dilate(f: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    let (w, h) = (f.width(), f.height());
    let counts = RowCounts::new(f);
    let runs = se.runs();
    BinaryImage::from_fn(w, h, |x, y| {
        runs.iter().any(|&(dy, a, b)| {
            let yy = y as isize - dy;
            if yy < 0 || yy >= h as isize {
                return false;
            }
            counts.count(yy as usize, x as isize - b, x as isize - a) > 0
        })
    })
}

pub fn erode_n(f: &BinaryImage, se: &StructuringElement, times: usize) -> BinaryImage {
    (0..times).fold(f.clone(), |acc, _| erode(&acc, se))
}

pub fn dilate_n(f: &BinaryImage, se: &StructuringElement, times: usize) -> BinaryImage {
    (0..times).fold(f.clone(), |acc, _| dilate(&acc, se))
}

pub fn opening(f: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    dilate(&erode(f, se), se)
}

pub fn closing(f: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    erode(&dilate(f, se), se)
}

/// `erode^(n2-n1)( dilate^n2( erode^n1( ~f ) ) )`.
///
/// `f` carries the pupil as background, so after the complement the pupil is
/// the foreground the operators act on.
pub fn pupil_filter(f: &BinaryImage, se: &StructuringElement, p: &MorphParams) -> Result<BinaryImage> {
    p.validate()?;
    let g = invert(f);
    let g = erode_n(&g, se, p.n1);
    let g = dilate_n(&g, se, p.n2);
    Ok(erode_n(&g, se, p.n2 - p.n1))
}
