//! Haar-feature cascades: evaluation, multi-scale scanning and boosting.

mod classifier;
mod feature;
mod model;
mod scan;
mod train;

pub use classifier::{eval_strong, eval_weak, StrongClassifier, WeakClassifier};
pub use feature::{eval_feature, feature_bank, HaarFeature, WeightedRect};
pub use model::MODEL_VERSION;
pub use scan::{
    detect_face_then_eyes, eval_cascade, merge_detections, scan, scan_raw, Cascade, CascadeOutcome, Detection,
    FaceSearch, ScanParams, EYE_BAND,
};
pub use train::{train_cascade, train_stage, CascadeTrainParams, TrainParams, TrainedStage, MIN_SAMPLES_PER_CLASS};

use crate::error::{Error, Result};
use crate::imagecore::{compute_integral, GrayImage, Rect};

/// Default detection window side.
pub const BASE_WINDOW: (usize, usize) = (24, 24);

/// A sample resampled to the base window, with its intensity statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSample {
    pub image: GrayImage,
    pub mean: f64,
    pub std: f64,
}

/// Nearest-neighbour resample of `img` to `size`.
pub fn normalize_sample(img: &GrayImage, size: (usize, usize)) -> Result<NormalizedSample> {
    if img.is_empty() || size.0 == 0 || size.1 == 0 {
        return Err(Error::EmptyImage);
    }
    let (sw, sh) = (img.width(), img.height());
    let image = GrayImage::from_fn(size.0, size.1, |x, y| {
        let sx = ((2 * x + 1) * sw / (2 * size.0)).min(sw - 1);
        let sy = ((2 * y + 1) * sh / (2 * size.1)).min(sh - 1);
        img.get(sx, sy)
    });
    let ii = compute_integral(&image)?;
    let (mean, std) = ii.mean_std(&Rect::new(0, 0, size.0, size.1));
    Ok(NormalizedSample { image, mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_size_is_identity() {
        let img = GrayImage::from_fn(24, 24, |x, y| (x * 10 + y) as u8);
        assert_eq!(normalize_sample(&img, (24, 24)).unwrap().image, img);
    }

    #[test]
    fn constant_stays_constant() {
        let s = normalize_sample(&GrayImage::filled(50, 37, 77), (24, 24)).unwrap();
        assert_eq!(s.image, GrayImage::filled(24, 24, 77));
        assert_eq!(s.mean, 77.0);
        assert_eq!(s.std, 0.0);
    }

    #[test]
    fn double_size_pattern_keeps_feature_values() {
        let small = GrayImage::from_fn(24, 24, |x, y| if y < 12 { 180 + (x % 3) as u8 } else { 60 });
        let big = GrayImage::from_fn(48, 48, |x, y| small.get(x / 2, y / 2));
        let down = normalize_sample(&big, (24, 24)).unwrap().image;
        let w = Rect::new(0, 0, 24, 24);
        let a = compute_integral(&small).unwrap();
        let b = compute_integral(&down).unwrap();
        for f in feature_bank(BASE_WINDOW).iter().step_by(31) {
            let va = eval_feature(&a, f, &w).unwrap();
            let vb = eval_feature(&b, f, &w).unwrap();
            assert!((va - vb).abs() <= 0.1 * va.abs() + 1e-9, "{va} vs {vb}");
        }
    }

    #[test]
    fn empty_source_is_an_error() {
        assert!(normalize_sample(&GrayImage::filled(0, 0, 0), (24, 24)).is_err());
    }
}
