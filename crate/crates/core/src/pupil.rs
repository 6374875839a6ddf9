//! Pupil center and radius from a filtered binary image, plus the full
//! eye-image to estimate chain.
//!
//! The center is where the longest foreground row meets the longest
//! foreground column; the radius comes from the foreground pixel count as
//! `r = sqrt(num_pix / pi)`.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{compute_histogram, invert, BinaryImage, GrayImage};
use crate::morph::{pupil_filter, MorphParams, StructuringElement};
use crate::threshold::{binarize, build_kernel, select_threshold, smooth, ThresholdParams, ThresholdResult, DEFAULT_BT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PupilEstimate {
    /// Column of the center.
    pub x0: f64,
    /// Row of the center.
    pub y0: f64,
    pub r: f64,
    pub num_pix: usize,
    /// Share of foreground pixels that fall inside the circle `(x0, y0, r)`.
    pub confidence: f64,
}

impl PupilEstimate {
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            x0: self.x0 + dx,
            y0: self.y0 + dy,
            ..*self
        }
    }
}

/// How to pick among rows (or columns) that tie for the largest count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    /// Midpoint of the first and last tied index.
    #[default]
    Center,
    /// Smallest tied index.
    Lowest,
}

fn best_index(counts: &[usize], tie: TieBreak) -> f64 {
    let max = counts.iter().copied().max().unwrap_or(0);
    let first = counts.iter().position(|&c| c == max).unwrap_or(0);
    match tie {
        TieBreak::Lowest => first as f64,
        TieBreak::Center => {
            let last = counts.iter().rposition(|&c| c == max).unwrap_or(0);
            (first + last) as f64 / 2.0
        }
    }
}

pub fn locate_pupil(f: &BinaryImage) -> Result<PupilEstimate> {
    locate_pupil_with(f, TieBreak::default())
}

pub fn locate_pupil_with(f: &BinaryImage, tie: TieBreak) -> Result<PupilEstimate> {
    let (w, h) = (f.width(), f.height());
    let mut rows = vec![0usize; h];
    let mut cols = vec![0usize; w];
    for (y, row_count) in rows.iter_mut().enumerate() {
        for (x, &p) in f.row(y).iter().enumerate() {
            if p {
                *row_count += 1;
                cols[x] += 1;
            }
        }
    }
    let num_pix: usize = rows.iter().sum();
    if num_pix == 0 {
        return Err(Error::NoPupil);
    }
    let y0 = best_index(&rows, tie);
    let x0 = best_index(&cols, tie);
    let r = (num_pix as f64 / std::f64::consts::PI).sqrt();

    let r2 = r * r;
    let mut inside = 0usize;
    for y in 0..h {
        let dy = y as f64 - y0;
        for (x, &p) in f.row(y).iter().enumerate() {
            let dx = x as f64 - x0;
            if p && dx * dx + dy * dy <= r2 {
                inside += 1;
            }
        }
    }
    Ok(PupilEstimate {
        x0,
        y0,
        r,
        num_pix,
        confidence: inside as f64 / num_pix as f64,
    })
}

/// Keeps only the largest 8-connected foreground component; ties go to the
/// component met first in raster order.
pub fn largest_component(f: &BinaryImage) -> BinaryImage {
    let (w, h) = (f.width(), f.height());
    let mut label = vec![0u32; w * h];
    let mut best = (0u32, 0usize);
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !f.pixels()[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        queue.push_back(start);
        let mut size = 0usize;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if f.pixels()[j] && label[j] == 0 {
                        label[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
        if size > best.1 {
            best = (next, size);
        }
    }
    BinaryImage::new(w, h, label.iter().map(|&l| l != 0 && l == best.0).collect())
        .expect("same dimensions as the source")
}

/// Parameters of the eye-image to pupil chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PupilConfig {
    pub bt: f64,
    pub threshold: ThresholdParams,
    pub morph: MorphParams,
    #[serde(skip)]
    pub se: StructuringElement,
    /// Keep only the largest connected blob before estimating.
    pub largest_component: bool,
    pub tie_break: TieBreak,
}

impl Default for PupilConfig {
    fn default() -> Self {
        Self {
            bt: DEFAULT_BT,
            threshold: ThresholdParams::default(),
            morph: MorphParams::default(),
            se: StructuringElement::default(),
            largest_component: false,
            tie_break: TieBreak::default(),
        }
    }
}

impl PupilConfig {
    pub fn validate(&self) -> Result<()> {
        build_kernel(self.bt)?;
        self.threshold.validate()?;
        self.morph.validate()
    }
}

/// Estimate plus the threshold that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PupilDetection {
    pub estimate: PupilEstimate,
    pub threshold: ThresholdResult,
}

pub fn detect_pupil(eye: &GrayImage, cfg: &PupilConfig) -> Result<PupilDetection> {
    let hist = compute_histogram(eye)?;
    let kernel = build_kernel(cfg.bt)?;
    let threshold = select_threshold(&smooth(&hist, &kernel), &cfg.threshold)?;
    let dark = binarize(eye, threshold.threshold);
    // The filter complements its input first, so hand it the pupil as background.
    let mut filtered = pupil_filter(&invert(&dark), &cfg.se, &cfg.morph)?;
    if cfg.largest_component {
        filtered = largest_component(&filtered);
    }
    let estimate = locate_pupil_with(&filtered, cfg.tie_break)?;
    Ok(PupilDetection { estimate, threshold })
}

/// Runs [`detect_pupil`] on every frame; frames that fail become `None` gaps.
pub fn pupil_series(frames: &[GrayImage], cfg: &PupilConfig) -> Result<Vec<Option<PupilDetection>>> {
    if frames.is_empty() {
        return Err(Error::InsufficientSamples("pupil series needs at least one frame".into()));
    }
    Ok(frames.par_iter().map(|f| detect_pupil(f, cfg).ok()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{render_eye, EyeSpec};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn disk(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> BinaryImage {
        BinaryImage::from_fn(w, h, |x, y| (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r)
    }

    #[test]
    fn rasterised_disk() {
        let f = disk(80, 60, 40.0, 30.0, 10.0);
        let e = locate_pupil(&f).unwrap();
        assert!((e.x0 - 40.0).abs() <= 1.0 && (e.y0 - 30.0).abs() <= 1.0);
        assert!((e.r - 10.0).abs() <= 0.3);
        assert_eq!(e.r, (f.count() as f64 / std::f64::consts::PI).sqrt());
        assert!(e.confidence > 0.95);
    }

    #[test]
    fn full_frame_tie_rules() {
        let f = BinaryImage::filled(9, 6, true);
        let lowest = locate_pupil_with(&f, TieBreak::Lowest).unwrap();
        assert_eq!((lowest.x0, lowest.y0), (0.0, 0.0));
        let center = locate_pupil_with(&f, TieBreak::Center).unwrap();
        assert_eq!((center.x0, center.y0), (4.0, 2.5));
        assert_eq!(center.r, (54.0 / std::f64::consts::PI).sqrt());
    }

    #[test]
    fn radius_from_pixel_count() {
        let mut f = BinaryImage::filled(20, 20, false);
        let mut placed = 0;
        'outer: for y in 0..20 {
            for x in 0..20 {
                if placed == 314 {
                    break 'outer;
                }
                f.set(x, y, true);
                placed += 1;
            }
        }
        let e = locate_pupil(&f).unwrap();
        assert_eq!(e.num_pix, 314);
        assert!((e.r - 9.997_465).abs() < 1e-6);
    }

    #[test]
    fn empty_mask_has_no_pupil() {
        assert!(matches!(
            locate_pupil(&BinaryImage::filled(5, 5, false)),
            Err(Error::NoPupil)
        ));
    }

    #[test]
    fn largest_component_keeps_biggest_blob() {
        let mut f = disk(40, 40, 25.0, 25.0, 6.0);
        f.set(2, 2, true);
        f.set(3, 3, true);
        f.set(10, 2, true);
        let kept = largest_component(&f);
        assert_eq!(kept, disk(40, 40, 25.0, 25.0, 6.0));
    }

    #[test]
    fn centroid_agrees_with_row_column_center() {
        for (cx, cy, r) in [(30.0, 28.0, 9.0), (41.3, 22.7, 13.5), (50.5, 40.5, 18.2)] {
            let f = disk(100, 80, cx, cy, r);
            let e = locate_pupil(&f).unwrap();
            let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
            for y in 0..80 {
                for x in 0..100 {
                    if f.get(x, y) {
                        sx += x as f64;
                        sy += y as f64;
                        n += 1.0;
                    }
                }
            }
            assert!((e.x0 - sx / n).abs() <= 1.0 && (e.y0 - sy / n).abs() <= 1.0);
        }
    }

    #[test]
    fn synthetic_eye_end_to_end() {
        let spec = EyeSpec {
            width: 64,
            height: 64,
            pupil_center: (33.0, 29.0),
            pupil_radius: 12.0,
            iris_center: (33.0, 29.0),
            iris_radius: 22.0,
            noise_sigma: 5.0,
            ..EyeSpec::default()
        };
        let img = render_eye(&spec, &mut ChaCha8Rng::seed_from_u64(4));
        let d = detect_pupil(&img, &PupilConfig::default()).unwrap();
        let e = d.estimate;
        assert!(((e.x0 - 33.0).powi(2) + (e.y0 - 29.0).powi(2)).sqrt() <= 1.5, "{e:?}");
        assert!((e.r - 12.0).abs() <= 1.2, "{e:?}");
        assert!(d.threshold.threshold > 30 && d.threshold.threshold < 100);
    }

    #[test]
    fn constant_frame_is_rejected() {
        let img = GrayImage::filled(32, 32, 120);
        assert!(matches!(
            detect_pupil(&img, &PupilConfig::default()),
            Err(Error::DegenerateHistogram)
        ));
    }

    #[test]
    fn series_reports_gaps() {
        let spec = EyeSpec::default();
        let frame = render_eye(&spec, &mut ChaCha8Rng::seed_from_u64(8));
        let mut frames = vec![frame; 10];
        let identical = pupil_series(&frames, &PupilConfig::default()).unwrap();
        assert!(identical.iter().all(|e| e.is_some() && *e == identical[0]));
        frames[5] = GrayImage::filled(spec.width, spec.height, 77);
        let gapped = pupil_series(&frames, &PupilConfig::default()).unwrap();
        for (i, e) in gapped.iter().enumerate() {
            assert_eq!(e.is_none(), i == 5);
        }
        assert!(pupil_series(&[], &PupilConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn radius_identity(bits in proptest::collection::vec(any::<bool>(), 1..400)) {
            let w = 20;
            let h = bits.len().div_ceil(w);
            let mut px = bits.clone();
            px.resize(w * h, false);
            let f = BinaryImage::new(w, h, px).unwrap();
            match locate_pupil(&f) {
                Ok(e) => {
                    prop_assert_eq!(e.num_pix, f.count());
                    prop_assert_eq!(e.r, (f.count() as f64 / std::f64::consts::PI).sqrt());
                    prop_assert!((0.0..=1.0).contains(&e.confidence));
                    prop_assert!(e.x0 >= 0.0 && e.x0 < w as f64 && e.y0 >= 0.0 && e.y0 < h as f64);
                }
                Err(_) => prop_assert_eq!(f.count(), 0),
            }
        }

        #[test]
        fn translation_equivariance(
            bits in proptest::collection::vec(any::<bool>(), 100),
            dx in 0usize..20, dy in 0usize..20,
            tie in prop_oneof![Just(TieBreak::Center), Just(TieBreak::Lowest)],
        ) {
            prop_assume!(bits.iter().any(|&b| b));
            let blob = BinaryImage::new(10, 10, bits).unwrap();
            let place = |ox: usize, oy: usize| {
                BinaryImage::from_fn(40, 40, |x, y| {
                    x >= ox && y >= oy && x < ox + 10 && y < oy + 10 && blob.get(x - ox, y - oy)
                })
            };
            let a = locate_pupil_with(&place(5, 5), tie).unwrap();
            let b = locate_pupil_with(&place(5 + dx, 5 + dy), tie).unwrap();
            prop_assert_eq!(b.x0 - a.x0, dx as f64);
            prop_assert_eq!(b.y0 - a.y0, dy as f64);
            prop_assert_eq!(a.r, b.r);
        }
    }
}
