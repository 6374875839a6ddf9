use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{IntegralImage, Rect};

/// Windows flatter than this standard deviation are normalised by 1 instead,
/// so uniform regions score zero rather than dividing by zero.
const MIN_STD: f64 = 1.0;

/// One rectangle of a Haar-like template, in base-window pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightedRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub weight: i32,
}

impl WeightedRect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize, weight: i32) -> Self {
        Self { x, y, w, h, weight }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }
}

/// Signed sum of rectangle intensities defined on a base window.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HaarFeature {
    pub rects: Vec<WeightedRect>,
    /// Base window `(width, height)` the rects are expressed in.
    pub base: (usize, usize),
}

impl HaarFeature {
    pub fn new(rects: Vec<WeightedRect>, base: (usize, usize)) -> Result<Self> {
        let f = Self { rects, base };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rects.is_empty() {
            return Err(Error::InvalidParameter("feature without rectangles".into()));
        }
        for r in &self.rects {
            if r.w == 0 || r.h == 0 || r.x + r.w > self.base.0 || r.y + r.h > self.base.1 {
                return Err(Error::InvalidParameter(format!(
                    "feature rect {r:?} outside base window {:?}",
                    self.base
                )));
            }
        }
        Ok(())
    }

    /// Weighted area sum; zero for templates that cancel on flat input.
    pub fn weighted_area(&self) -> i64 {
        self.rects.iter().map(|r| i64::from(r.weight) * r.area() as i64).sum()
    }

    pub fn is_zero_mean(&self) -> bool {
        self.weighted_area() == 0
    }

    /// Left half bright, right half dark: `+1 | -1`, each half `unit_w` wide.
    pub fn two_horizontal(x: usize, y: usize, unit_w: usize, h: usize, base: (usize, usize)) -> Self {
        Self {
            rects: vec![
                WeightedRect::new(x, y, unit_w, h, 1),
                WeightedRect::new(x + unit_w, y, unit_w, h, -1),
            ],
            base,
        }
    }

    /// Top half against bottom half, each `unit_h` tall.
    pub fn two_vertical(x: usize, y: usize, w: usize, unit_h: usize, base: (usize, usize)) -> Self {
        Self {
            rects: vec![
                WeightedRect::new(x, y, w, unit_h, 1),
                WeightedRect::new(x, y + unit_h, w, unit_h, -1),
            ],
            base,
        }
    }

    /// Outer thirds against the doubled middle third, side by side.
    pub fn three_horizontal(x: usize, y: usize, unit_w: usize, h: usize, base: (usize, usize)) -> Self {
        Self {
            rects: vec![
                WeightedRect::new(x, y, 3 * unit_w, h, 1),
                WeightedRect::new(x + unit_w, y, unit_w, h, -3),
            ],
            base,
        }
    }

    pub fn three_vertical(x: usize, y: usize, w: usize, unit_h: usize, base: (usize, usize)) -> Self {
        Self {
            rects: vec![
                WeightedRect::new(x, y, w, 3 * unit_h, 1),
                WeightedRect::new(x, y + unit_h, w, unit_h, -3),
            ],
            base,
        }
    }

    /// The boundary template `x - 2y`: the whole region `x` with weight +1 and
    /// its dark half `y` with weight -2.
    pub fn boundary(x: usize, y: usize, w: usize, h: usize, base: (usize, usize)) -> Self {
        Self {
            rects: vec![
                WeightedRect::new(x, y, w, h, 1),
                WeightedRect::new(x, y + h / 2, w, h / 2, -2),
            ],
            base,
        }
    }

    /// Rects mapped into `window`, each with the base area it stands for.
    pub fn scaled_rects(&self, window: &Rect) -> Vec<(Rect, i32, usize)> {
        let sx = window.w as f64 / self.base.0 as f64;
        let sy = window.h as f64 / self.base.1 as f64;
        self.rects
            .iter()
            .map(|r| {
                let x = ((r.x as f64 * sx).round() as usize).min(window.w - 1);
                let y = ((r.y as f64 * sy).round() as usize).min(window.h - 1);
                let w = ((r.w as f64 * sx).round() as usize).clamp(1, window.w - x);
                let h = ((r.h as f64 * sy).round() as usize).clamp(1, window.h - y);
                (Rect::new(window.x + x, window.y + y, w, h), r.weight, r.area())
            })
            .collect()
    }
}

/// Variance-normalised feature response on `window`.
///
/// Each rect contributes `weight * mean * base_area`; the total is divided by
/// the base window area and by the window's intensity standard deviation. At
/// scale 1 this is the weighted pixel sum over window area and deviation.
pub fn eval_feature(ii: &IntegralImage, feat: &HaarFeature, window: &Rect) -> Result<f64> {
    if !window.fits_in(ii.width(), ii.height()) {
        return Err(Error::RectOutOfBounds {
            rect: (*window).into(),
            width: ii.width(),
            height: ii.height(),
        });
    }
    Ok(eval_feature_unchecked(ii, feat, window, window_std(ii, window)))
}

pub(crate) fn window_std(ii: &IntegralImage, window: &Rect) -> f64 {
    ii.mean_std(window).1.max(MIN_STD)
}

pub(crate) fn eval_feature_unchecked(ii: &IntegralImage, feat: &HaarFeature, window: &Rect, std: f64) -> f64 {
    let mut acc = 0.0;
    for (r, weight, base_area) in feat.scaled_rects(window) {
        let mean = ii.sum(&r) as f64 / r.area() as f64;
        acc += f64::from(weight) * mean * base_area as f64;
    }
    acc / (feat.base.0 * feat.base.1) as f64 / std
}

/// Axis-aligned bank on a 2-pixel grid: two- and three-rectangle templates in
/// both orientations plus boundary templates over the full window width.
pub fn feature_bank(base: (usize, usize)) -> Vec<HaarFeature> {
    let (bw, bh) = base;
    let mut bank = Vec::new();
    let steps = |limit: usize| (2..=limit).step_by(2);
    for unit in steps(bw / 2) {
        for h in steps(bh) {
            for y in (0..=bh - h).step_by(2) {
                for x in (0..=bw - 2 * unit).step_by(2) {
                    bank.push(HaarFeature::two_horizontal(x, y, unit, h, base));
                }
            }
        }
    }
    for unit in steps(bh / 2) {
        for w in steps(bw) {
            for x in (0..=bw - w).step_by(2) {
                for y in (0..=bh - 2 * unit).step_by(2) {
                    bank.push(HaarFeature::two_vertical(x, y, w, unit, base));
                }
            }
        }
    }
    for unit in steps(bw / 3) {
        for h in steps(bh) {
            for y in (0..=bh - h).step_by(2) {
                for x in (0..=bw - 3 * unit).step_by(2) {
                    bank.push(HaarFeature::three_horizontal(x, y, unit, h, base));
                }
            }
        }
    }
    for unit in steps(bh / 3) {
        for w in steps(bw) {
            for x in (0..=bw - w).step_by(2) {
                for y in (0..=bh - 3 * unit).step_by(2) {
                    bank.push(HaarFeature::three_vertical(x, y, w, unit, base));
                }
            }
        }
    }
    for h in (4..=bh).step_by(4) {
        for y in (0..=bh - h).step_by(2) {
            bank.push(HaarFeature::boundary(0, y, bw, h, base));
        }
    }
    bank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::{compute_integral, GrayImage};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn templates_are_zero_mean_and_inside() {
        let bank = feature_bank((24, 24));
        assert!(bank.len() > 5000);
        for f in &bank {
            assert!(f.is_zero_mean(), "{f:?}");
            f.validate().unwrap();
        }
        assert!(bank.contains(&HaarFeature::boundary(0, 0, 24, 24, (24, 24))));
    }

    #[test]
    fn boundary_template_weights() {
        let f = HaarFeature::boundary(0, 0, 24, 24, (24, 24));
        assert_eq!(f.rects[0].weight, 1);
        assert_eq!(f.rects[1].weight, -2);
        assert_eq!(f.rects[0].area(), 2 * f.rects[1].area());
    }

    #[test]
    fn flat_window_scores_zero() {
        let img = GrayImage::filled(30, 30, 137);
        let ii = compute_integral(&img).unwrap();
        for f in feature_bank((24, 24)).iter().step_by(97) {
            assert_eq!(eval_feature(&ii, f, &Rect::new(3, 2, 24, 24)).unwrap(), 0.0);
        }
    }

    #[test]
    fn bright_top_dark_bottom_is_maximal() {
        let img = GrayImage::from_fn(24, 24, |_, y| if y < 12 { 255 } else { 0 });
        let ii = compute_integral(&img).unwrap();
        let edge = HaarFeature::two_vertical(0, 0, 24, 12, (24, 24));
        let window = Rect::new(0, 0, 24, 24);
        // (255 * 288 - 0) / 576 / 127.5 = 1
        let v = eval_feature(&ii, &edge, &window).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let boundary = HaarFeature::boundary(0, 0, 24, 24, (24, 24));
        assert!((eval_feature(&ii, &boundary, &window).unwrap() - 1.0).abs() < 1e-12);
        // No image can push a unit +1/-1 half split above 1 (Cauchy-Schwarz).
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let noise = GrayImage::from_fn(24, 24, |_, _| rng.gen());
            let ii = compute_integral(&noise).unwrap();
            assert!(eval_feature(&ii, &edge, &window).unwrap().abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn out_of_bounds_window_is_an_error() {
        let ii = compute_integral(&GrayImage::filled(20, 20, 1)).unwrap();
        let f = HaarFeature::two_vertical(0, 0, 24, 12, (24, 24));
        assert!(eval_feature(&ii, &f, &Rect::new(0, 0, 24, 24)).is_err());
    }

    #[test]
    fn scaled_rects_stay_inside_window() {
        let window = Rect::new(5, 7, 37, 37);
        for f in feature_bank((24, 24)).iter().step_by(13) {
            for (r, _, _) in f.scaled_rects(&window) {
                assert!(window.contains_rect(&r), "{r:?}");
            }
        }
    }

    #[test]
    fn rejects_rect_outside_base() {
        assert!(HaarFeature::new(vec![WeightedRect::new(20, 0, 8, 4, 1)], (24, 24)).is_err());
        assert!(HaarFeature::new(vec![], (24, 24)).is_err());
    }
}
