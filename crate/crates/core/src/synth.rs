//! Seeded generators for eye images, face scenes, training patches and
//! calibration sessions with known ground truth.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::imagecore::{GrayImage, Rect};

pub const PUPIL_LEVEL: u8 = 30;
pub const IRIS_LEVEL: u8 = 100;
pub const SCLERA_LEVEL: u8 = 200;

/// Thin dark line drawn above the iris.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LashStroke {
    pub origin: (f64, f64),
    /// Radians from vertical; the stroke runs upward.
    pub angle: f64,
    pub length: f64,
    pub level: u8,
}

/// Small bright disk, the corneal reflection of a light source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Glint {
    pub center: (f64, f64),
    pub radius: f64,
    pub level: u8,
}

/// One eye image: sclera background, iris disk, pupil disk, optional lashes
/// and glint, additive Gaussian noise. Centers are `(x, y)` pixel indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeSpec {
    pub width: usize,
    pub height: usize,
    pub pupil_center: (f64, f64),
    pub pupil_radius: f64,
    pub iris_center: (f64, f64),
    pub iris_radius: f64,
    pub pupil_level: u8,
    pub iris_level: u8,
    pub sclera_level: u8,
    pub noise_sigma: f64,
    pub lashes: Vec<LashStroke>,
    pub glint: Option<Glint>,
}

impl Default for EyeSpec {
    fn default() -> Self {
        Self {
            width: 80,
            height: 60,
            pupil_center: (40.0, 30.0),
            pupil_radius: 10.0,
            iris_center: (40.0, 30.0),
            iris_radius: 22.0,
            pupil_level: PUPIL_LEVEL,
            iris_level: IRIS_LEVEL,
            sclera_level: SCLERA_LEVEL,
            noise_sigma: 3.0,
            lashes: Vec::new(),
            glint: None,
        }
    }
}

fn in_disk(x: usize, y: usize, c: (f64, f64), r: f64) -> bool {
    let (dx, dy) = (x as f64 - c.0, y as f64 - c.1);
    dx * dx + dy * dy <= r * r
}

fn add_noise<R: Rng + ?Sized>(img: &mut [f64], sigma: f64, rng: &mut R) {
    if sigma > 0.0 {
        let n = Normal::new(0.0, sigma).expect("sigma is positive and finite");
        for v in img.iter_mut() {
            *v += n.sample(rng);
        }
    }
}

fn quantize(width: usize, height: usize, v: &[f64]) -> GrayImage {
    GrayImage::from_fn(width, height, |x, y| v[y * width + x].round().clamp(0.0, 255.0) as u8)
}

pub fn render_eye<R: Rng + ?Sized>(spec: &EyeSpec, rng: &mut R) -> GrayImage {
    let (w, h) = (spec.width, spec.height);
    let mut v = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            v[y * w + x] = f64::from(if in_disk(x, y, spec.pupil_center, spec.pupil_radius) {
                spec.pupil_level
            } else if in_disk(x, y, spec.iris_center, spec.iris_radius) {
                spec.iris_level
            } else {
                spec.sclera_level
            });
        }
    }
    for lash in &spec.lashes {
        let steps = (lash.length * 3.0).ceil() as usize;
        for i in 0..=steps {
            let t = lash.length * i as f64 / steps.max(1) as f64;
            let x = (lash.origin.0 + lash.angle.sin() * t).round();
            let y = (lash.origin.1 - lash.angle.cos() * t).round();
            if x >= 0.0 && y >= 0.0 && (x as usize) < w && (y as usize) < h {
                v[y as usize * w + x as usize] = f64::from(lash.level);
            }
        }
    }
    if let Some(g) = spec.glint {
        for y in 0..h {
            for x in 0..w {
                if in_disk(x, y, g.center, g.radius) {
                    v[y * w + x] = f64::from(g.level);
                }
            }
        }
    }
    add_noise(&mut v, spec.noise_sigma, rng);
    quantize(w, h, &v)
}

/// Eye with pupil radius 8-20 px, iris 2.0-2.8 times larger, the pupil
/// slightly off the iris center, up to eight lashes and noise sigma up to 8.
pub fn random_eye_spec<R: Rng + ?Sized>(width: usize, height: usize, rng: &mut R) -> EyeSpec {
    let r = rng.gen_range(8.0..20.0);
    let big_r: f64 = r * rng.gen_range(2.0..2.8);
    let margin = big_r + 5.0;
    let cx = rng.gen_range(margin..(width as f64 - margin).max(margin + 1.0));
    let cy = rng.gen_range(margin..(height as f64 - margin).max(margin + 1.0));
    let px = cx + rng.gen_range(-0.2..0.2) * (big_r - r);
    let py = cy + rng.gen_range(-0.2..0.2) * (big_r - r);
    let lashes = (0..rng.gen_range(0..=8))
        .map(|_| LashStroke {
            origin: (cx + rng.gen_range(-big_r..big_r), cy - big_r - rng.gen_range(2.0..14.0)),
            angle: rng.gen_range(-0.6..0.6),
            length: rng.gen_range(8.0..22.0),
            level: rng.gen_range(35..=60),
        })
        .collect();
    EyeSpec {
        width,
        height,
        pupil_center: (px, py),
        pupil_radius: r,
        iris_center: (cx, cy),
        iris_radius: big_r,
        noise_sigma: rng.gen_range(0.0..8.0),
        lashes,
        ..EyeSpec::default()
    }
}

/// Specs for a frame sequence whose pupil radius stays at `base_radius` for
/// `baseline` frames and then grows linearly by `dilation` (a fraction) over
/// the remaining frames.
pub fn dilation_ramp(template: &EyeSpec, baseline: usize, total: usize, dilation: f64) -> Vec<EyeSpec> {
    let ramp = total.saturating_sub(baseline).max(1);
    (0..total)
        .map(|i| {
            let k = if i < baseline {
                0.0
            } else {
                (i - baseline + 1) as f64 / ramp as f64
            };
            EyeSpec {
                pupil_radius: template.pupil_radius * (1.0 + dilation * k),
                ..template.clone()
            }
        })
        .collect()
}

/// Distribution of the two-class edge patches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgePatternSpec {
    /// Brightness step across the edge, drawn uniformly.
    pub contrast: (f64, f64),
    /// Noise sigma, drawn uniformly per patch.
    pub noise: (f64, f64),
    /// Chance of a stray blob of random polarity.
    pub blob_probability: f64,
}

impl Default for EdgePatternSpec {
    fn default() -> Self {
        Self {
            contrast: (15.0, 50.0),
            noise: (10.0, 40.0),
            blob_probability: 0.5,
        }
    }
}

impl EdgePatternSpec {
    /// Lower contrast: no single template separates the classes.
    pub fn hard() -> Self {
        Self {
            contrast: (8.0, 40.0),
            ..Self::default()
        }
    }
}

/// A patch bright above a roughly horizontal edge (or below it when
/// `bright_top` is false), at a random level, with noise.
pub fn edge_pattern<R: Rng + ?Sized>(size: usize, bright_top: bool, rng: &mut R) -> GrayImage {
    edge_pattern_with(size, bright_top, &EdgePatternSpec::default(), rng)
}

pub fn edge_pattern_with<R: Rng + ?Sized>(size: usize, bright_top: bool, spec: &EdgePatternSpec, rng: &mut R) -> GrayImage {
    let edge = rng.gen_range(size as f64 * 0.35..size as f64 * 0.65);
    let contrast = rng.gen_range(spec.contrast.0..spec.contrast.1);
    let offset = rng.gen_range(60.0..190.0);
    let tilt = rng.gen_range(-0.25..0.25);
    let mut v = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            let boundary = edge + tilt * (x as f64 - size as f64 / 2.0);
            let bright = ((y as f64) < boundary) == bright_top;
            v[y * size + x] = offset + if bright { contrast / 2.0 } else { -contrast / 2.0 };
        }
    }
    if rng.gen_bool(spec.blob_probability) {
        let c = (rng.gen_range(0.0..size as f64), rng.gen_range(0.0..size as f64));
        let r = rng.gen_range(2.0..(size as f64 / 4.0).max(2.5));
        let d = rng.gen_range(-50.0..50.0);
        for y in 0..size {
            for x in 0..size {
                if in_disk(x, y, c, r) {
                    v[y * size + x] += d;
                }
            }
        }
    }
    let sigma = rng.gen_range(spec.noise.0..spec.noise.1);
    add_noise(&mut v, sigma, rng);
    quantize(size, size, &v)
}

fn paint_eye(v: &mut [f64], width: usize, rect: &Rect, skin: f64, rng: &mut impl Rng) {
    let (cx, cy) = rect.center();
    let (cx, cy) = (cx - 0.5, cy - 0.5);
    let s = rect.w as f64;
    let iris = s * rng.gen_range(0.2..0.26);
    let white_rx = s * 0.45;
    let white_ry = s * 0.24;
    let brow_y = cy - s * 0.38;
    for y in rect.y..rect.bottom() {
        for x in rect.x..rect.right() {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let i = y * width + x;
            if (dx / white_rx).powi(2) + (dy / white_ry).powi(2) <= 1.0 {
                v[i] = 215.0;
            }
            if dx * dx + dy * dy <= iris * iris {
                v[i] = 45.0;
            }
            if (y as f64 - brow_y).abs() <= s * 0.06 && dx.abs() <= s * 0.42 {
                v[i] = skin - 90.0;
            }
        }
    }
}

/// A single eye patch: skin, eye white, dark iris and brow, filling `size`.
pub fn eye_patch<R: Rng + ?Sized>(size: usize, rng: &mut R) -> GrayImage {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng.gen());
    let skin = rng.gen_range(130.0..175.0);
    let mut v = vec![skin; size * size];
    let jitter = (size / 12).max(1);
    let rect = Rect::new(
        rng.gen_range(0..=jitter),
        rng.gen_range(0..=jitter),
        size - jitter,
        size - jitter,
    );
    paint_eye(&mut v, size, &rect, skin, &mut rng);
    let sigma = rng.gen_range(2.0..10.0);
    add_noise(&mut v, sigma, &mut rng);
    quantize(size, size, &v)
}

/// Where the parts of a synthetic face sit, relative to its rect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceLayout {
    pub face: Rect,
    pub eyes: [Rect; 2],
    pub mouth: Rect,
}

impl FaceLayout {
    pub fn new(face: Rect) -> Self {
        let s = face.w as f64;
        let eye = (s * 0.3).round() as usize;
        let ey = face.y + (s * 0.22).round() as usize;
        let left = face.x + (s * 0.13).round() as usize;
        let right = face.x + face.w - (s * 0.13).round() as usize - eye;
        let mouth_w = (s * 0.4).round() as usize;
        Self {
            face,
            eyes: [Rect::new(left, ey, eye, eye), Rect::new(right, ey, eye, eye)],
            mouth: Rect::new(face.x + (face.w - mouth_w) / 2, face.y + (s * 0.72).round() as usize, mouth_w, (s * 0.08).round().max(1.0) as usize),
        }
    }
}

fn paint_face(v: &mut [f64], width: usize, layout: &FaceLayout, with_eyes: bool, rng: &mut impl Rng) {
    let f = layout.face;
    let skin = rng.gen_range(140.0..180.0);
    let (cx, cy) = (f.x as f64 + f.w as f64 / 2.0 - 0.5, f.y as f64 + f.h as f64 / 2.0 - 0.5);
    let (rx, ry) = (f.w as f64 / 2.0, f.h as f64 / 2.0);
    for y in f.y..f.bottom() {
        for x in f.x..f.right() {
            let (dx, dy) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
            if dx * dx + dy * dy <= 1.0 {
                v[y * width + x] = skin;
            }
        }
    }
    if with_eyes {
        for eye in &layout.eyes {
            paint_eye(v, width, eye, skin, rng);
        }
    }
    let m = layout.mouth;
    for y in m.y..m.bottom() {
        for x in m.x..m.right() {
            v[y * width + x] = skin - 80.0;
        }
    }
}

/// A face patch filling a `size` square, with small placement jitter.
pub fn face_patch<R: Rng + ?Sized>(size: usize, rng: &mut R) -> GrayImage {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng.gen());
    let bg = rng.gen_range(40.0..110.0);
    let mut v = vec![bg; size * size];
    let jitter = (size / 12).max(1);
    let face = Rect::new(rng.gen_range(0..=jitter), rng.gen_range(0..=jitter), size - jitter, size - jitter);
    paint_face(&mut v, size, &FaceLayout::new(face), true, &mut rng);
    let sigma = rng.gen_range(2.0..10.0);
    add_noise(&mut v, sigma, &mut rng);
    quantize(size, size, &v)
}

/// Smooth random background: a few overlapping gradient blobs.
fn background(width: usize, height: usize, rng: &mut impl Rng) -> Vec<f64> {
    let base = rng.gen_range(50.0..110.0);
    let mut v = vec![base; width * height];
    for _ in 0..6 {
        let c = (rng.gen_range(0.0..width as f64), rng.gen_range(0.0..height as f64));
        let r = rng.gen_range(10.0..(width.min(height) as f64 / 2.0).max(11.0));
        let d = rng.gen_range(-30.0..30.0);
        for y in 0..height {
            for x in 0..width {
                let (dx, dy) = (x as f64 - c.0, y as f64 - c.1);
                v[y * width + x] += d * (-(dx * dx + dy * dy) / (2.0 * r * r)).exp();
            }
        }
    }
    v
}

/// Texture-only patch for negative training samples.
pub fn clutter_patch<R: Rng + ?Sized>(size: usize, rng: &mut R) -> GrayImage {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng.gen());
    let mut v = background(size, size, &mut rng);
    for _ in 0..rng.gen_range(0..4) {
        let r = Rect::new(
            rng.gen_range(0..size / 2),
            rng.gen_range(0..size / 2),
            rng.gen_range(2..size / 2),
            rng.gen_range(2..size / 2),
        );
        let level = rng.gen_range(20.0..230.0);
        for y in r.y..r.bottom() {
            for x in r.x..r.right() {
                v[y * size + x] = level;
            }
        }
    }
    let sigma = rng.gen_range(2.0..20.0);
    add_noise(&mut v, sigma, &mut rng);
    quantize(size, size, &v)
}

/// A scene with at most one face. Returns the image and the face layout.
pub fn face_scene<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    face: Option<Rect>,
    with_eyes: bool,
    rng: &mut R,
) -> (GrayImage, Option<FaceLayout>) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng.gen());
    let mut v = background(width, height, &mut rng);
    let layout = face.map(FaceLayout::new);
    if let Some(l) = &layout {
        paint_face(&mut v, width, l, with_eyes, &mut rng);
    }
    add_noise(&mut v, 4.0, &mut rng);
    (quantize(width, height, &v), layout)
}


/// Quadratic map from corner features to screen pixels, the ground truth of
/// a synthetic calibration session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticMap {
    /// Coefficients over `[1, dx, dy, dx^2, dx*dy, dy^2]`.
    pub x: [f64; 6],
    pub y: [f64; 6],
}

impl QuadraticMap {
    pub fn apply(&self, f: (f64, f64)) -> (f64, f64) {
        let t = [1.0, f.0, f.1, f.0 * f.0, f.0 * f.1, f.1 * f.1];
        let dot = |c: &[f64; 6]| c.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>();
        (dot(&self.x), dot(&self.y))
    }

    fn jacobian(&self, f: (f64, f64)) -> [[f64; 2]; 2] {
        let d = |c: &[f64; 6]| [c[1] + 2.0 * c[3] * f.0 + c[4] * f.1, c[2] + c[4] * f.0 + 2.0 * c[5] * f.1];
        [d(&self.x), d(&self.y)]
    }

    /// Newton solve for the feature that lands on `screen`.
    pub fn invert(&self, screen: (f64, f64), start: (f64, f64)) -> Option<(f64, f64)> {
        let mut f = start;
        for _ in 0..50 {
            let s = self.apply(f);
            let (ex, ey) = (s.0 - screen.0, s.1 - screen.1);
            if ex.abs() < 1e-10 && ey.abs() < 1e-10 {
                return Some(f);
            }
            let j = self.jacobian(f);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() < 1e-12 {
                return None;
            }
            f.0 -= (j[1][1] * ex - j[0][1] * ey) / det;
            f.1 -= (-j[1][0] * ex + j[0][0] * ey) / det;
        }
        let s = self.apply(f);
        ((s.0 - screen.0).abs() < 1e-6 && (s.1 - screen.1).abs() < 1e-6).then_some(f)
    }
}

/// Fixation samples for one screen target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTarget {
    pub screen: (f64, f64),
    /// Noise-free feature that maps exactly to `screen`.
    pub true_feature: (f64, f64),
    /// Noisy features recorded while the subject fixated the target.
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSession {
    pub screen: (f64, f64),
    pub map: QuadraticMap,
    pub targets: Vec<CalibrationTarget>,
    pub held_out: Vec<CalibrationTarget>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProtocol {
    pub screen: (f64, f64),
    /// Grid positions as fractions of the screen side.
    pub grid: [f64; 3],
    pub samples_per_target: usize,
    pub feature_sigma: f64,
    pub held_out: usize,
}

impl Default for CalibrationProtocol {
    fn default() -> Self {
        Self {
            screen: (1920.0, 1080.0),
            grid: [0.1, 0.5, 0.9],
            samples_per_target: 20,
            feature_sigma: 2.0,
            held_out: 50,
        }
    }
}

/// A mildly nonlinear map sending features of roughly +-100 by +-55 px onto
/// the screen, so one feature pixel moves the gaze by about 8-10 screen px.
pub fn random_quadratic_map<R: Rng + ?Sized>(screen: (f64, f64), rng: &mut R) -> QuadraticMap {
    let gx = screen.0 / 240.0 * rng.gen_range(0.9..1.1);
    let gy = screen.1 / 130.0 * rng.gen_range(0.9..1.1);
    QuadraticMap {
        x: [
            screen.0 / 2.0,
            gx,
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.01..0.01),
            rng.gen_range(-0.01..0.01),
            rng.gen_range(-0.01..0.01),
        ],
        y: [
            screen.1 / 2.0,
            rng.gen_range(-0.5..0.5),
            gy,
            rng.gen_range(-0.01..0.01),
            rng.gen_range(-0.01..0.01),
            rng.gen_range(-0.02..0.02),
        ],
    }
}

/// Nine-point grid session with noisy fixations and random held-out targets
/// inside the grid hull.
pub fn calibration_session<R: Rng + ?Sized>(protocol: &CalibrationProtocol, rng: &mut R) -> CalibrationSession {
    let map = random_quadratic_map(protocol.screen, rng);
    let noise = Normal::new(0.0, protocol.feature_sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let (sw, sh) = protocol.screen;
    let target = |screen: (f64, f64), rng: &mut R, samples: usize| {
        let start = ((screen.0 - sw / 2.0) / map.x[1], (screen.1 - sh / 2.0) / map.y[2]);
        let true_feature = map.invert(screen, start).expect("map is invertible on screen");
        let samples = (0..samples)
            .map(|_| {
                if protocol.feature_sigma > 0.0 {
                    (true_feature.0 + noise.sample(rng), true_feature.1 + noise.sample(rng))
                } else {
                    true_feature
                }
            })
            .collect();
        CalibrationTarget {
            screen,
            true_feature,
            samples,
        }
    };
    let mut targets = Vec::new();
    for &fy in &protocol.grid {
        for &fx in &protocol.grid {
            targets.push(target((fx * sw, fy * sh), rng, protocol.samples_per_target));
        }
    }
    let (lo, hi) = (protocol.grid[0], protocol.grid[2]);
    let held_out = (0..protocol.held_out)
        .map(|_| {
            let s = (rng.gen_range(lo..hi) * sw, rng.gen_range(lo..hi) * sh);
            target(s, rng, 0)
        })
        .collect();
    CalibrationSession {
        screen: protocol.screen,
        map,
        targets,
        held_out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_eye_has_three_levels() {
        let spec = EyeSpec {
            noise_sigma: 0.0,
            ..EyeSpec::default()
        };
        let img = render_eye(&spec, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(img.get(40, 30), PUPIL_LEVEL);
        assert_eq!(img.get(40, 30 + 15), IRIS_LEVEL);
        assert_eq!(img.get(0, 0), SCLERA_LEVEL);
        let pupil = img.pixels().iter().filter(|&&p| p == PUPIL_LEVEL).count();
        let area = std::f64::consts::PI * 100.0;
        assert!((pupil as f64 - area).abs() < 0.05 * area);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = random_eye_spec(320, 240, &mut ChaCha8Rng::seed_from_u64(9));
        let b = random_eye_spec(320, 240, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert!((8.0..20.0).contains(&a.pupil_radius));
        let ia = render_eye(&a, &mut ChaCha8Rng::seed_from_u64(1));
        let ib = render_eye(&b, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(ia, ib);
    }

    #[test]
    fn ramp_holds_then_grows() {
        let specs = dilation_ramp(&EyeSpec::default(), 5, 10, 0.2);
        assert_eq!(specs.len(), 10);
        assert!(specs[..5].iter().all(|s| s.pupil_radius == 10.0));
        assert!((specs[9].pupil_radius - 12.0).abs() < 1e-12);
        assert!(specs.windows(2).all(|w| w[1].pupil_radius >= w[0].pupil_radius));
    }

    #[test]
    fn quadratic_map_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_quadratic_map((1920.0, 1080.0), &mut rng);
        let f = m.invert((300.0, 900.0), (0.0, 0.0)).unwrap();
        let s = m.apply(f);
        assert!((s.0 - 300.0).abs() < 1e-6 && (s.1 - 900.0).abs() < 1e-6);
    }

    #[test]
    fn session_has_nine_targets() {
        let s = calibration_session(&CalibrationProtocol::default(), &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(s.targets.len(), 9);
        assert!(s.targets.iter().all(|t| t.samples.len() == 20));
        let spread = s.targets.iter().map(|t| t.true_feature.0).fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(spread > 60.0 && spread < 140.0, "{spread}");
    }

    #[test]
    fn face_layout_puts_eyes_in_upper_band() {
        let l = FaceLayout::new(Rect::new(10, 20, 120, 120));
        for e in &l.eyes {
            assert!(l.face.contains_rect(e));
            assert!(e.bottom() as f64 <= l.face.y as f64 + 0.6 * l.face.h as f64);
        }
        assert!(l.eyes[0].x < l.eyes[1].x);
    }
}
