use serde::{Deserialize, Serialize};

use super::classifier::{check_window, StrongClassifier};
use super::feature::window_std;
use crate::error::{Error, Result};
use crate::imagecore::{compute_integral, crop, GrayImage, IntegralImage, Rect};

/// Ordered stages with early rejection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cascade {
    /// Base detection window `(width, height)`.
    pub window: (usize, usize),
    pub stages: Vec<StrongClassifier>,
}

impl Cascade {
    pub fn new(window: (usize, usize), stages: Vec<StrongClassifier>) -> Result<Self> {
        let c = Self { window, stages };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window.0 == 0 || self.window.1 == 0 {
            return Err(Error::InvalidParameter("cascade window must be non-empty".into()));
        }
        if self.stages.is_empty() {
            return Err(Error::InvalidParameter("cascade needs at least one stage".into()));
        }
        for stage in &self.stages {
            stage.validate()?;
            for m in &stage.members {
                if m.feature.base != self.window {
                    return Err(Error::InvalidParameter(format!(
                        "feature base {:?} differs from cascade window {:?}",
                        m.feature.base, self.window
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub rect: Rect,
    /// Window side over base side.
    pub scale: f64,
    pub stages_passed: usize,
    /// Raw windows merged into this detection (1 before merging).
    pub hits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CascadeOutcome {
    Accepted(Detection),
    Rejected { stages_passed: usize },
}

impl CascadeOutcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, CascadeOutcome::Accepted(_))
    }

    pub fn stages_passed(&self) -> usize {
        match self {
            CascadeOutcome::Accepted(d) => d.stages_passed,
            CascadeOutcome::Rejected { stages_passed } => *stages_passed,
        }
    }
}

fn eval_with_std(c: &Cascade, ii: &IntegralImage, window: &Rect, std: f64) -> CascadeOutcome {
    for (passed, stage) in c.stages.iter().enumerate() {
        if !stage.matches_score(stage.score_with_std(ii, window, std)) {
            return CascadeOutcome::Rejected { stages_passed: passed };
        }
    }
    CascadeOutcome::Accepted(Detection {
        rect: *window,
        scale: window.w as f64 / c.window.0 as f64,
        stages_passed: c.stages.len(),
        hits: 1,
    })
}

/// Runs the stages in order and stops at the first non-match.
pub fn eval_cascade(c: &Cascade, ii: &IntegralImage, window: &Rect) -> Result<CascadeOutcome> {
    check_window(ii, window)?;
    Ok(eval_with_std(c, ii, window, window_std(ii, window)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    /// Window growth per scale step, at least 1.05.
    pub scale_factor: f64,
    /// Stride as a fraction of the current window side.
    pub step: f64,
    /// Stop after this many scales; `None` scans while the window fits.
    pub max_scales: Option<usize>,
    pub merge_iou: f64,
    pub min_hits: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            scale_factor: 1.1,
            step: 0.1,
            max_scales: None,
            merge_iou: 0.4,
            min_hits: 2,
        }
    }
}

impl ScanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale_factor >= 1.05 && self.scale_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be >= 1.05, got {}",
                self.scale_factor
            )));
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::InvalidParameter(format!("step must be in (0, 1], got {}", self.step)));
        }
        Ok(())
    }
}

/// Every accepted window, ordered by (scale, y, x), before merging.
pub fn scan_raw(c: &Cascade, img: &GrayImage, params: &ScanParams) -> Result<Vec<Detection>> {
    params.validate()?;
    let (iw, ih) = (img.width(), img.height());
    if iw < c.window.0 || ih < c.window.1 {
        return Ok(Vec::new());
    }
    let ii = compute_integral(img)?;
    let mut found = Vec::new();
    let mut k = 0;
    loop {
        if params.max_scales.is_some_and(|m| k >= m) {
            break;
        }
        let s = params.scale_factor.powi(k as i32);
        let ww = (c.window.0 as f64 * s).round() as usize;
        let wh = (c.window.1 as f64 * s).round() as usize;
        if ww > iw || wh > ih {
            break;
        }
        let sx = ((params.step * ww as f64).round() as usize).max(1);
        let sy = ((params.step * wh as f64).round() as usize).max(1);
        for y in (0..=ih - wh).step_by(sy) {
            for x in (0..=iw - ww).step_by(sx) {
                let window = Rect::new(x, y, ww, wh);
                if let CascadeOutcome::Accepted(d) = eval_with_std(c, &ii, &window, window_std(&ii, &window)) {
                    found.push(d);
                }
            }
        }
        k += 1;
    }
    Ok(found)
}

/// Groups detections whose IoU exceeds `iou` (transitively) and averages each
/// group; groups with fewer than `min_hits` raw windows are dropped.
pub fn merge_detections(raw: &[Detection], iou: f64, min_hits: usize) -> Vec<Detection> {
    let n = raw.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if raw[i].rect.iou(&raw[j].rect) > iou {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        match groups.iter_mut().find(|(g, _)| *g == r) {
            Some((_, members)) => members.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    groups
        .into_iter()
        .filter(|(_, m)| m.len() >= min_hits)
        .map(|(_, m)| {
            let k = m.len() as f64;
            let mean = |f: &dyn Fn(&Detection) -> f64| m.iter().map(|&i| f(&raw[i])).sum::<f64>() / k;
            Detection {
                rect: Rect::new(
                    mean(&|d| d.rect.x as f64).round() as usize,
                    mean(&|d| d.rect.y as f64).round() as usize,
                    mean(&|d| d.rect.w as f64).round() as usize,
                    mean(&|d| d.rect.h as f64).round() as usize,
                ),
                scale: mean(&|d| d.scale),
                stages_passed: m.iter().map(|&i| raw[i].stages_passed).min().unwrap_or(0),
                hits: m.len(),
            }
        })
        .collect()
}

pub fn scan(c: &Cascade, img: &GrayImage, params: &ScanParams) -> Result<Vec<Detection>> {
    let raw = scan_raw(c, img, params)?;
    Ok(merge_detections(&raw, params.merge_iou, params.min_hits))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum FaceSearch {
    NoFace,
    Found { face: Rect, eyes: Vec<Rect> },
}

/// Fraction of the face height, from the top, searched for eyes.
pub const EYE_BAND: f64 = 0.6;

/// Finds the dominant face, then up to two eyes in the upper band of it.
pub fn detect_face_then_eyes(
    img: &GrayImage,
    face_cascade: &Cascade,
    eye_cascade: &Cascade,
    params: &ScanParams,
) -> Result<FaceSearch> {
    let faces = scan(face_cascade, img, params)?;
    let Some(face) = faces
        .iter()
        .max_by(|a, b| {
            (a.stages_passed, a.rect.area(), a.hits)
                .cmp(&(b.stages_passed, b.rect.area(), b.hits))
                .then_with(|| (b.rect.y, b.rect.x).cmp(&(a.rect.y, a.rect.x)))
        })
        .map(|d| d.rect)
    else {
        return Ok(FaceSearch::NoFace);
    };

    let band_h = ((face.h as f64 * EYE_BAND).round() as usize).max(1);
    let band = Rect::new(face.x, face.y, face.w, band_h);
    let region = crop(img, &band)?;
    let mut eyes: Vec<Rect> = scan(eye_cascade, &region, params)?
        .into_iter()
        .map(|d| d.rect.offset_by(&band))
        .collect();
    eyes.sort_by(|a, b| a.center().0.total_cmp(&b.center().0));
    if eyes.len() > 2 {
        eyes = vec![eyes[0], eyes[eyes.len() - 1]];
    }
    Ok(FaceSearch::Found { face, eyes })
}

#[cfg(test)]
mod tests {
    use super::super::classifier::WeakClassifier;
    use super::super::feature::HaarFeature;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stage(threshold: f64, polarity: i8, stage_threshold: f64) -> StrongClassifier {
        StrongClassifier::new(
            vec![WeakClassifier {
                feature: HaarFeature::two_vertical(0, 0, 8, 4, (8, 8)),
                threshold,
                polarity,
            }],
            vec![1.0],
            stage_threshold,
        )
        .unwrap()
    }

    fn always(pass: bool) -> StrongClassifier {
        // Threshold below any feature value: the vote is always +1.
        stage(-10.0, 1, if pass { 0.0 } else { 1.0 })
    }

    #[test]
    fn early_exit_reports_stages_passed() {
        let ii = compute_integral(&GrayImage::filled(8, 8, 9)).unwrap();
        let w = Rect::new(0, 0, 8, 8);
        let c = Cascade::new((8, 8), vec![always(true), always(false), always(true)]).unwrap();
        assert_eq!(eval_cascade(&c, &ii, &w).unwrap(), CascadeOutcome::Rejected { stages_passed: 1 });
        let c = Cascade::new((8, 8), vec![always(true); 3]).unwrap();
        let out = eval_cascade(&c, &ii, &w).unwrap();
        assert!(out.is_accepted());
        assert_eq!(out.stages_passed(), 3);
    }

    #[test]
    fn early_exit_equals_full_conjunction() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let img = GrayImage::from_fn(64, 64, |x, y| ((x * 7 + y * 3) % 256) as u8 ^ rng.gen::<u8>());
        let ii = compute_integral(&img).unwrap();
        let stages: Vec<StrongClassifier> = (0..4)
            .map(|_| stage(rng.gen_range(-0.3..0.3), if rng.gen() { 1 } else { -1 }, 0.0))
            .collect();
        let c = Cascade::new((8, 8), stages).unwrap();
        for _ in 0..200 {
            let s = rng.gen_range(8..30);
            let w = Rect::new(rng.gen_range(0..=64 - s), rng.gen_range(0..=64 - s), s, s);
            let full = c.stages.iter().all(|st| eval_strong_ok(st, &ii, &w));
            assert_eq!(eval_cascade(&c, &ii, &w).unwrap().is_accepted(), full);
        }
    }

    fn eval_strong_ok(s: &StrongClassifier, ii: &IntegralImage, w: &Rect) -> bool {
        super::super::classifier::eval_strong(s, ii, w).unwrap()
    }

    #[test]
    fn reject_all_cascade_finds_nothing() {
        let c = Cascade::new((8, 8), vec![always(false)]).unwrap();
        let img = GrayImage::filled(50, 40, 100);
        assert!(scan(&c, &img, &ScanParams::default()).unwrap().is_empty());
        let tiny = GrayImage::filled(5, 5, 100);
        let accept = Cascade::new((8, 8), vec![always(true)]).unwrap();
        assert!(scan(&accept, &tiny, &ScanParams::default()).unwrap().is_empty());
    }

    #[test]
    fn scale_factor_is_validated() {
        let c = Cascade::new((8, 8), vec![always(true)]).unwrap();
        let img = GrayImage::filled(20, 20, 0);
        let p = ScanParams {
            scale_factor: 1.01,
            ..ScanParams::default()
        };
        assert!(scan(&c, &img, &p).is_err());
    }

    #[test]
    fn single_scale_stride_one_is_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = GrayImage::from_fn(40, 30, |_, _| rng.gen());
        let c = Cascade::new((8, 8), vec![stage(0.05, 1, 0.0), stage(0.3, -1, 0.0)]).unwrap();
        let p = ScanParams {
            step: 0.01,
            max_scales: Some(1),
            ..ScanParams::default()
        };
        let raw: Vec<Rect> = scan_raw(&c, &img, &p).unwrap().iter().map(|d| d.rect).collect();
        let ii = compute_integral(&img).unwrap();
        let mut exhaustive = Vec::new();
        for y in 0..=22 {
            for x in 0..=32 {
                let w = Rect::new(x, y, 8, 8);
                if eval_cascade(&c, &ii, &w).unwrap().is_accepted() {
                    exhaustive.push(w);
                }
            }
        }
        assert!(!exhaustive.is_empty());
        assert_eq!(raw, exhaustive);
    }

    #[test]
    fn merge_groups_overlaps() {
        let d = |x, y, s| Detection {
            rect: Rect::new(x, y, s, s),
            scale: 1.0,
            stages_passed: 2,
            hits: 1,
        };
        let raw = vec![d(10, 10, 20), d(12, 10, 20), d(11, 12, 20), d(80, 80, 20), d(100, 10, 20), d(101, 11, 20)];
        let merged = merge_detections(&raw, 0.4, 2);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].rect, Rect::new(11, 11, 20, 20));
        assert_eq!(merged[0].hits, 3);
        assert_eq!(merged[1].hits, 2);
    }
}
