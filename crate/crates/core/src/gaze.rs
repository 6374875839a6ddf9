//! Gaze direction from eye geometry, the corner-referenced pupil feature,
//! polynomial screen calibration and the pupil-dilation tension score.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pupil::PupilEstimate;

/// One refracting surface of the schematic eye, distances in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EyeSurface {
    pub name: &'static str,
    /// Distance from the corneal apex along the optical axis.
    pub location: f64,
    /// Signed radius of curvature.
    pub radius: f64,
    /// Refractive index behind the surface; the retina has none.
    pub refractive_index: Option<f64>,
}

/// Gullstrand schematic eye: cornea, lens and retina surfaces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GullstrandEyeModel {
    pub surfaces: Vec<EyeSurface>,
}

impl Default for GullstrandEyeModel {
    fn default() -> Self {
        let s = |name, location, radius, n| EyeSurface {
            name,
            location,
            radius,
            refractive_index: n,
        };
        Self {
            surfaces: vec![
                s("cornea anterior", 0.0, 7.7, Some(1.376)),
                s("cornea posterior", 0.5, 6.8, Some(1.336)),
                s("lens cortex anterior", 3.2, 5.33, Some(1.385)),
                s("lens core anterior", 3.8, 2.65, Some(1.406)),
                s("lens core posterior", 6.6, -2.65, Some(1.385)),
                s("lens cortex posterior", 7.2, -5.33, Some(1.336)),
                s("retina", 24.0, -11.5, None),
            ],
        }
    }
}

impl GullstrandEyeModel {
    pub fn validate(&self) -> Result<()> {
        if self.surfaces.windows(2).any(|w| w[1].location <= w[0].location) {
            return Err(Error::InvalidParameter("surface locations must increase".into()));
        }
        match self.surfaces.last() {
            Some(r) if r.location == 24.0 => Ok(()),
            _ => Err(Error::InvalidParameter("last surface must be the retina at 24 mm".into())),
        }
    }

    /// Axial length, apex to retina.
    pub fn axial_length(&self) -> f64 {
        self.surfaces.last().map_or(0.0, |s| s.location)
    }
}

/// Unit line-of-sight vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeVector {
    pub e: [f64; 3],
    /// Distance between pupil and eye center.
    pub r_p: f64,
}

/// `(p - c) / |p - c|` for pupil center `p` and eye center `c`.
pub fn gaze_direction(p: [f64; 3], c: [f64; 3]) -> Result<GazeVector> {
    let d = Vector3::from(p) - Vector3::from(c);
    let r_p = d.norm();
    if !(r_p > 0.0 && r_p.is_finite()) {
        return Err(Error::DegenerateGaze);
    }
    let e = d / r_p;
    Ok(GazeVector { e: [e.x, e.y, e.z], r_p })
}

/// Pupil center minus eye corner, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerFeature {
    pub dx: f64,
    pub dy: f64,
}

pub fn corner_feature(pupil: &PupilEstimate, corner: (f64, f64)) -> CornerFeature {
    CornerFeature {
        dx: pupil.x0 - corner.0,
        dy: pupil.y0 - corner.1,
    }
}

/// One calibration sample: the feature observed while fixating `screen`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub feature: CornerFeature,
    pub screen: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMap {
    pub degree: u8,
    /// Coefficients over the monomials `1, dx, dy` and, for degree 2,
    /// `dx^2, dx*dy, dy^2`.
    pub coeffs_x: Vec<f64>,
    pub coeffs_y: Vec<f64>,
    /// RMS distance between fitted and true screen points on the samples.
    pub residual: f64,
    /// Screen rectangle `(x_min, y_min, x_max, y_max)`; points outside are flagged.
    pub bounds: [f64; 4],
}

pub fn coefficient_count(degree: u8) -> usize {
    let d = usize::from(degree);
    (d + 1) * (d + 2) / 2
}

fn monomials(degree: u8, f: &CornerFeature) -> Vec<f64> {
    let (x, y) = (f.dx, f.dy);
    match degree {
        1 => vec![1.0, x, y],
        _ => vec![1.0, x, y, x * x, x * y, y * y],
    }
}

/// Least-squares polynomial fit per screen axis. Screen bounds default to the
/// bounding box of the sample targets.
pub fn calibrate(samples: &[CalibrationSample], degree: u8) -> Result<CalibrationMap> {
    calibrate_with_bounds(samples, degree, None)
}

pub fn calibrate_with_bounds(
    samples: &[CalibrationSample],
    degree: u8,
    screen: Option<(f64, f64)>,
) -> Result<CalibrationMap> {
    if degree != 1 && degree != 2 {
        return Err(Error::InvalidParameter(format!("degree must be 1 or 2, got {degree}")));
    }
    let k = coefficient_count(degree);
    if samples.len() < k {
        return Err(Error::InsufficientSamples(format!(
            "{} samples for {k} coefficients",
            samples.len()
        )));
    }
    if samples
        .iter()
        .any(|s| !(s.feature.dx.is_finite() && s.feature.dy.is_finite() && s.screen.0.is_finite() && s.screen.1.is_finite()))
    {
        return Err(Error::InvalidParameter("non-finite calibration sample".into()));
    }
    // Center and scale the features so the rank test is unit-independent.
    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.feature.dx).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.feature.dy).sum::<f64>() / n;
    let scale = samples
        .iter()
        .map(|s| (s.feature.dx - mx).abs().max((s.feature.dy - my).abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let norm = |f: &CornerFeature| CornerFeature {
        dx: (f.dx - mx) / scale,
        dy: (f.dy - my) / scale,
    };
    let rows: Vec<f64> = samples.iter().flat_map(|s| monomials(degree, &norm(&s.feature))).collect();
    let a = DMatrix::from_row_slice(samples.len(), k, &rows);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= smax * 1e-9 {
        return Err(Error::DegenerateCalibration);
    }
    let bx = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.screen.0));
    let by = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.screen.1));
    let cx = svd.solve(&bx, 0.0).map_err(|_| Error::DegenerateCalibration)?;
    let cy = svd.solve(&by, 0.0).map_err(|_| Error::DegenerateCalibration)?;

    let coeffs_x = denormalize(degree, cx.as_slice(), mx, my, scale);
    let coeffs_y = denormalize(degree, cy.as_slice(), mx, my, scale);
    let bounds = match screen {
        Some((w, h)) => [0.0, 0.0, w, h],
        None => samples.iter().fold(
            [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
            |b, s| [b[0].min(s.screen.0), b[1].min(s.screen.1), b[2].max(s.screen.0), b[3].max(s.screen.1)],
        ),
    };
    let mut map = CalibrationMap {
        degree,
        coeffs_x,
        coeffs_y,
        residual: 0.0,
        bounds,
    };
    let sq: f64 = samples
        .iter()
        .map(|s| {
            let p = map.evaluate(&s.feature);
            (p.0 - s.screen.0).powi(2) + (p.1 - s.screen.1).powi(2)
        })
        .sum();
    map.residual = (sq / n).sqrt();
    Ok(map)
}

/// Rewrites coefficients fitted on `(u, v) = ((dx - mx) / s, (dy - my) / s)`
/// as coefficients on raw `(dx, dy)`.
fn denormalize(degree: u8, c: &[f64], mx: f64, my: f64, s: f64) -> Vec<f64> {
    // u = a*dx + b with a = 1/s, b = -mx/s; likewise v.
    let a = 1.0 / s;
    let (bu, bv) = (-mx / s, -my / s);
    let mut out = vec![0.0; c.len()];
    out[0] += c[0] + c[1] * bu + c[2] * bv;
    out[1] += c[1] * a;
    out[2] += c[2] * a;
    if degree == 2 {
        // u^2 = a^2 dx^2 + 2ab dx + b^2
        out[3] += c[3] * a * a;
        out[1] += c[3] * 2.0 * a * bu;
        out[0] += c[3] * bu * bu;
        // u v = a^2 dx dy + a bv dx + a bu dy + bu bv
        out[4] += c[4] * a * a;
        out[1] += c[4] * a * bv;
        out[2] += c[4] * a * bu;
        out[0] += c[4] * bu * bv;
        // v^2
        out[5] += c[5] * a * a;
        out[2] += c[5] * 2.0 * a * bv;
        out[0] += c[5] * bv * bv;
    }
    out
}

/// A mapped screen point; off-screen points are returned unclamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenPoint {
    pub x: f64,
    pub y: f64,
    pub off_screen: bool,
}

impl CalibrationMap {
    pub fn validate(&self) -> Result<()> {
        if self.degree != 1 && self.degree != 2 {
            return Err(Error::InvalidParameter(format!("degree must be 1 or 2, got {}", self.degree)));
        }
        let k = coefficient_count(self.degree);
        if self.coeffs_x.len() != k || self.coeffs_y.len() != k {
            return Err(Error::InvalidParameter(format!("degree {} needs {k} coefficients per axis", self.degree)));
        }
        Ok(())
    }

    fn evaluate(&self, f: &CornerFeature) -> (f64, f64) {
        let t = monomials(self.degree, f);
        let dot = |c: &[f64]| c.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>();
        (dot(&self.coeffs_x), dot(&self.coeffs_y))
    }

    /// Identity map over the given screen bounds.
    pub fn identity(bounds: [f64; 4]) -> Self {
        Self {
            degree: 1,
            coeffs_x: vec![0.0, 1.0, 0.0],
            coeffs_y: vec![0.0, 0.0, 1.0],
            residual: 0.0,
            bounds,
        }
    }
}

pub fn map_to_screen(m: &CalibrationMap, f: &CornerFeature) -> ScreenPoint {
    let (x, y) = m.evaluate(f);
    let [x0, y0, x1, y1] = m.bounds;
    ScreenPoint {
        x,
        y,
        off_screen: !(x >= x0 && x <= x1 && y >= y0 && y <= y1),
    }
}

/// Stored calibration: the samples, the fitted map and where the corner was.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSession {
    pub degree: u8,
    pub samples: Vec<CalibrationSample>,
    pub map: CalibrationMap,
    #[serde(default)]
    pub corner: Option<(f64, f64)>,
}

impl CalibrationSession {
    pub fn fit(samples: Vec<CalibrationSample>, degree: u8, screen: Option<(f64, f64)>) -> Result<Self> {
        let map = calibrate_with_bounds(&samples, degree, screen)?;
        Ok(Self {
            degree,
            samples,
            map,
            corner: None,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.map.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Dilation ratio at which the tension score saturates, as a fraction.
pub const DEFAULT_SATURATION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensionReport {
    pub baseline_r: f64,
    pub stimulus_r: f64,
    pub dilation_ratio: f64,
    pub score: f64,
    pub baseline_frames: usize,
    pub stimulus_frames: usize,
}

/// `clamp((ratio - 1) / saturation, 0, 1)`.
pub fn tension_from_ratio(ratio: f64, saturation: f64) -> f64 {
    ((ratio - 1.0) / saturation).clamp(0.0, 1.0)
}

fn window_mean(series: &[Option<PupilEstimate>], w: &Range<usize>, name: &str) -> Result<(f64, usize)> {
    if w.start >= w.end {
        return Err(Error::TensionWindow(format!("{name} window {w:?} is empty")));
    }
    if w.end > series.len() {
        return Err(Error::TensionWindow(format!(
            "{name} window {w:?} exceeds series of {} frames",
            series.len()
        )));
    }
    let radii: Vec<f64> = series[w.clone()].iter().flatten().map(|e| e.r).collect();
    if radii.is_empty() {
        return Err(Error::TensionWindow(format!("{name} window {w:?} has no valid frames")));
    }
    Ok((radii.iter().sum::<f64>() / radii.len() as f64, radii.len()))
}

/// Mean pupil radius over each window, skipping frames without a pupil.
pub fn tension_score(
    series: &[Option<PupilEstimate>],
    baseline: Range<usize>,
    stimulus: Range<usize>,
    saturation: f64,
) -> Result<TensionReport> {
    if !(saturation > 0.0 && saturation.is_finite()) {
        return Err(Error::InvalidParameter(format!("saturation must be positive, got {saturation}")));
    }
    if baseline.start < stimulus.end && stimulus.start < baseline.end {
        return Err(Error::TensionWindow(format!(
            "baseline {baseline:?} and stimulus {stimulus:?} overlap"
        )));
    }
    let (baseline_r, baseline_frames) = window_mean(series, &baseline, "baseline")?;
    let (stimulus_r, stimulus_frames) = window_mean(series, &stimulus, "stimulus")?;
    if baseline_r <= 0.0 {
        return Err(Error::TensionWindow("baseline mean radius is zero".into()));
    }
    // Same as the ratio form, but exact when the radii are round numbers.
    let score = ((stimulus_r - baseline_r) / (saturation * baseline_r)).clamp(0.0, 1.0);
    Ok(TensionReport {
        baseline_r,
        stimulus_r,
        dilation_ratio: stimulus_r / baseline_r,
        score,
        baseline_frames,
        stimulus_frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pupil(x0: f64, y0: f64, r: f64) -> PupilEstimate {
        PupilEstimate {
            x0,
            y0,
            r,
            num_pix: 0,
            confidence: 1.0,
        }
    }

    fn sample(dx: f64, dy: f64, sx: f64, sy: f64) -> CalibrationSample {
        CalibrationSample {
            feature: CornerFeature { dx, dy },
            screen: (sx, sy),
        }
    }

    #[test]
    fn gaze_examples() {
        assert_eq!(gaze_direction([0.0, 0.0, 12.0], [0.0; 3]).unwrap().e, [0.0, 0.0, 1.0]);
        let g = gaze_direction([3.0, 4.0, 0.0], [0.0; 3]).unwrap();
        assert!((g.e[0] - 0.6).abs() < 1e-15 && (g.e[1] - 0.8).abs() < 1e-15 && g.e[2] == 0.0);
        assert_eq!(g.r_p, 5.0);
        assert!(matches!(gaze_direction([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]), Err(Error::DegenerateGaze)));
    }

    #[test]
    fn eye_model_table() {
        let m = GullstrandEyeModel::default();
        m.validate().unwrap();
        assert_eq!(m.surfaces.len(), 7);
        assert_eq!(m.axial_length(), 24.0);
    }

    #[test]
    fn corner_examples() {
        assert_eq!(corner_feature(&pupil(10.0, 35.0, 5.0), (10.0, 35.0)), CornerFeature { dx: 0.0, dy: 0.0 });
        assert_eq!(corner_feature(&pupil(50.0, 40.0, 5.0), (10.0, 35.0)), CornerFeature { dx: 40.0, dy: 5.0 });
    }

    fn affine(f: (f64, f64)) -> (f64, f64) {
        (12.0 + 3.0 * f.0 - 0.5 * f.1, -7.0 + 0.25 * f.0 + 4.0 * f.1)
    }

    #[test]
    fn exact_affine_fit() {
        let samples: Vec<_> = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (5.0, 7.0), (-3.0, 2.0)]
            .iter()
            .map(|&f| {
                let s = affine(f);
                sample(f.0, f.1, s.0, s.1)
            })
            .collect();
        let m = calibrate(&samples, 1).unwrap();
        assert!(m.residual <= 1e-6);
        for f in [(100.0, -40.0), (2.5, 3.5)] {
            let p = map_to_screen(&m, &CornerFeature { dx: f.0, dy: f.1 });
            let s = affine(f);
            assert!((p.x - s.0).abs() < 1e-6 && (p.y - s.1).abs() < 1e-6);
        }
        let m2 = calibrate(
            &[(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (5.0, 7.0), (-3.0, 2.0), (8.0, -6.0), (1.0, 1.0)]
                .iter()
                .map(|&f| {
                    let s = affine(f);
                    sample(f.0, f.1, s.0, s.1)
                })
                .collect::<Vec<_>>(),
            2,
        )
        .unwrap();
        for (a, b) in m2.coeffs_x.iter().zip(m.coeffs_x.iter().chain(&[0.0, 0.0, 0.0])) {
            assert!((a - b).abs() < 1e-6, "{:?} vs {:?}", m2.coeffs_x, m.coeffs_x);
        }
    }

    #[test]
    fn collinear_samples_are_degenerate() {
        let s = vec![sample(0.0, 0.0, 0.0, 0.0), sample(1.0, 1.0, 5.0, 5.0), sample(2.0, 2.0, 10.0, 10.0)];
        assert!(matches!(calibrate(&s, 1), Err(Error::DegenerateCalibration)));
        assert!(matches!(calibrate(&s[..2], 1), Err(Error::InsufficientSamples(_))));
        assert!(calibrate(&s, 3).is_err());
    }

    #[test]
    fn identity_and_off_screen_flag() {
        let samples: Vec<_> = [(0.0, 0.0), (100.0, 0.0), (0.0, 100.0), (100.0, 100.0)]
            .iter()
            .map(|&(x, y)| sample(x, y, x, y))
            .collect();
        let m = calibrate(&samples, 1).unwrap();
        let p = map_to_screen(&m, &CornerFeature { dx: 30.0, dy: 60.0 });
        assert!((p.x - 30.0).abs() < 1e-9 && (p.y - 60.0).abs() < 1e-9 && !p.off_screen);
        assert!(map_to_screen(&m, &CornerFeature { dx: 500.0, dy: 50.0 }).off_screen);
    }

    #[test]
    fn tension_examples() {
        let s = |r: &[f64]| r.iter().map(|&r| Some(pupil(0.0, 0.0, r))).collect::<Vec<_>>();
        let t = tension_score(&s(&[10.0; 6]), 0..3, 3..6, DEFAULT_SATURATION).unwrap();
        assert_eq!((t.dilation_ratio, t.score), (1.0, 0.0));
        let t = tension_score(&s(&[10.0, 10.0, 12.0, 12.0]), 0..2, 2..4, 0.2).unwrap();
        assert!((t.dilation_ratio - 1.2).abs() < 1e-12 && t.score == 1.0);
        let t = tension_score(&s(&[10.0, 10.0, 11.0, 11.0]), 0..2, 2..4, 0.2).unwrap();
        assert!((t.score - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tension_window_errors() {
        let mut series: Vec<_> = (0..6).map(|_| Some(pupil(0.0, 0.0, 10.0))).collect();
        assert!(tension_score(&series, 0..3, 2..5, 0.2).is_err());
        assert!(tension_score(&series, 0..0, 2..5, 0.2).is_err());
        assert!(tension_score(&series, 0..3, 3..9, 0.2).is_err());
        series[0] = None;
        series[1] = None;
        let t = tension_score(&series, 0..3, 3..6, 0.2).unwrap();
        assert_eq!(t.baseline_frames, 1);
        series[2] = None;
        assert!(matches!(tension_score(&series, 0..3, 3..6, 0.2), Err(Error::TensionWindow(_))));
    }

    proptest! {
        #[test]
        fn gaze_is_unit_and_scale_invariant(
            p in proptest::array::uniform3(-50.0f64..50.0),
            c in proptest::array::uniform3(-50.0f64..50.0),
            k in 0.01f64..100.0,
        ) {
            let d = Vector3::from(p) - Vector3::from(c);
            prop_assume!(d.norm() > 1e-6);
            let g = gaze_direction(p, c).unwrap();
            prop_assert!((Vector3::from(g.e).norm() - 1.0).abs() <= 1e-9);
            let q = Vector3::from(c) + d * k;
            let h = gaze_direction([q.x, q.y, q.z], c).unwrap();
            for i in 0..3 {
                prop_assert!((g.e[i] - h.e[i]).abs() <= 1e-9);
            }
        }

        #[test]
        fn tension_monotone_until_clamp(r0 in 5.0f64..20.0, a in 0.0f64..0.4, b in 0.0f64..0.4) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let series = |d: f64| vec![Some(pupil(0.0, 0.0, r0)), Some(pupil(0.0, 0.0, r0 * (1.0 + d)))];
            let s_lo = tension_score(&series(lo), 0..1, 1..2, 0.2).unwrap().score;
            let s_hi = tension_score(&series(hi), 0..1, 1..2, 0.2).unwrap().score;
            prop_assert!(s_hi >= s_lo);
            if hi < 0.199 && hi - lo > 1e-9 {
                prop_assert!(s_hi > s_lo);
            }
            if lo > 0.2 + 1e-9 {
                prop_assert_eq!(s_lo, 1.0);
            }
        }
    }
}
