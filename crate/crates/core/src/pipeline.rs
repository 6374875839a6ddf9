//! Frame-sequence runner: cascades or a fixed eye region, the pupil chain,
//! optional calibration, JSON-lines reports and gray overlays. Also the
//! tension and synthetic-data entry points used by the command line.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{detect_face_then_eyes, normalize_sample, scan, Cascade, FaceSearch, ScanParams};
use crate::error::{Error, Result};
use crate::gaze::{corner_feature, map_to_screen, tension_score, CalibrationSession, ScreenPoint, TensionReport, DEFAULT_SATURATION};
use crate::imagecore::{crop, GrayImage, Rect};
use crate::io::{load_image, save_image};
use crate::morph::MorphParams;
use crate::pupil::{detect_pupil, PupilConfig, PupilEstimate};
use crate::synth;
use crate::threshold::{ThresholdMethod, ThresholdParams, DEFAULT_BT};

pub const REPORT_VERSION: u32 = 1;

/// Every tunable of a run. Omitted fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub bt: f64,
    pub significance: f64,
    pub fallback_percentile: f64,
    pub n1: usize,
    pub n2: usize,
    pub largest_component: bool,
    pub scale_factor: f64,
    pub stride: f64,
    pub merge_iou: f64,
    pub min_hits: usize,
    pub tension_saturation: f64,
    pub calibration: Option<PathBuf>,
    pub face_cascade: Option<PathBuf>,
    pub eye_cascade: Option<PathBuf>,
    /// Eye corner in frame pixels, used for the gaze feature.
    pub corner: Option<(f64, f64)>,
    /// Fixed eye rectangle; skips the cascades entirely.
    pub eye_region: Option<Rect>,
    pub overlay_dir: Option<PathBuf>,
    pub overlay_format: OverlayFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlayFormat {
    #[default]
    Pgm,
    Png,
}

impl OverlayFormat {
    fn extension(self) -> &'static str {
        match self {
            OverlayFormat::Pgm => "pgm",
            OverlayFormat::Png => "png",
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = ThresholdParams::default();
        let m = MorphParams::default();
        let s = ScanParams::default();
        Self {
            bt: DEFAULT_BT,
            significance: t.significance,
            fallback_percentile: t.fallback_percentile,
            n1: m.n1,
            n2: m.n2,
            largest_component: false,
            scale_factor: s.scale_factor,
            stride: s.step,
            merge_iou: s.merge_iou,
            min_hits: s.min_hits,
            tension_saturation: DEFAULT_SATURATION,
            calibration: None,
            face_cascade: None,
            eye_cascade: None,
            corner: None,
            eye_region: None,
            overlay_dir: None,
            overlay_format: OverlayFormat::default(),
        }
    }
}

impl RunConfig {
    pub fn pupil_config(&self) -> PupilConfig {
        PupilConfig {
            bt: self.bt,
            threshold: ThresholdParams {
                significance: self.significance,
                fallback_percentile: self.fallback_percentile,
            },
            morph: MorphParams { n1: self.n1, n2: self.n2 },
            largest_component: self.largest_component,
            ..PupilConfig::default()
        }
    }

    pub fn scan_params(&self) -> ScanParams {
        ScanParams {
            scale_factor: self.scale_factor,
            step: self.stride,
            max_scales: None,
            merge_iou: self.merge_iou,
            min_hits: self.min_hits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pupil_config().validate()?;
        self.scan_params().validate()?;
        if !(self.tension_saturation > 0.0 && self.tension_saturation.is_finite()) {
            return Err(Error::InvalidParameter("tension saturation must be positive".into()));
        }
        if let Some(r) = self.eye_region {
            if r.w == 0 || r.h == 0 {
                return Err(Error::InvalidParameter("eye region must be non-empty".into()));
            }
        }
        if self.face_cascade.is_some() && self.eye_cascade.is_none() && self.eye_region.is_none() {
            return Err(Error::InvalidParameter("a face cascade needs an eye cascade".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub threshold: u8,
    pub method: ThresholdMethod,
    pub num_pix: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeReport {
    pub rect: Rect,
    /// Pupil in frame coordinates.
    pub pupil: Option<PupilEstimate>,
    pub diagnostics: Option<Diagnostics>,
    pub error: Option<String>,
}

/// One line of a report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ReportLine {
    Header {
        version: u32,
        frames: usize,
        config: RunConfig,
    },
    Frame {
        frame_index: usize,
        source: String,
        face: Option<Rect>,
        eyes: Vec<EyeReport>,
        gaze: Option<ScreenPoint>,
    },
    Error {
        frame_index: usize,
        source: String,
        message: String,
    },
}

impl ReportLine {
    /// First eye's pupil for frame lines.
    pub fn pupil(&self) -> Option<PupilEstimate> {
        match self {
            ReportLine::Frame { eyes, .. } => eyes.iter().find_map(|e| e.pupil),
            _ => None,
        }
    }
}

/// Everything loaded before the first frame is touched.
struct Prepared {
    pupil: PupilConfig,
    scan: ScanParams,
    face: Option<Cascade>,
    eye: Option<Cascade>,
    calibration: Option<CalibrationSession>,
    corner: Option<(f64, f64)>,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let load = |p: &Option<PathBuf>| p.as_ref().map(Cascade::load).transpose();
    let (face, eye) = if cfg.eye_region.is_some() {
        (None, None)
    } else {
        (load(&cfg.face_cascade)?, load(&cfg.eye_cascade)?)
    };
    let calibration = cfg
        .calibration
        .as_ref()
        .map(|p| CalibrationSession::from_json(&fs::read_to_string(p)?))
        .transpose()?;
    let corner = cfg.corner.or(calibration.as_ref().and_then(|c| c.corner));
    if calibration.is_some() && corner.is_none() {
        return Err(Error::InvalidParameter("calibration needs an eye corner".into()));
    }
    if let Some(dir) = &cfg.overlay_dir {
        fs::create_dir_all(dir)?;
    }
    Ok(Prepared {
        pupil: cfg.pupil_config(),
        scan: cfg.scan_params(),
        face,
        eye,
        calibration,
        corner,
    })
}

fn eye_report(img: &GrayImage, rect: Rect, cfg: &PupilConfig) -> EyeReport {
    let result = crop(img, &rect).and_then(|eye| detect_pupil(&eye, cfg));
    match result {
        Ok(d) => EyeReport {
            rect,
            pupil: Some(d.estimate.translated(rect.x as f64, rect.y as f64)),
            diagnostics: Some(Diagnostics {
                threshold: d.threshold.threshold,
                method: d.threshold.method,
                num_pix: d.estimate.num_pix,
                confidence: d.estimate.confidence,
            }),
            error: None,
        },
        Err(e) => EyeReport {
            rect,
            pupil: None,
            diagnostics: None,
            error: Some(e.to_string()),
        },
    }
}

fn locate_eyes(img: &GrayImage, cfg: &RunConfig, prep: &Prepared) -> Result<(Option<Rect>, Vec<Rect>)> {
    if let Some(r) = cfg.eye_region {
        return Ok((None, vec![r]));
    }
    match (&prep.face, &prep.eye) {
        (Some(face), Some(eye)) => Ok(match detect_face_then_eyes(img, face, eye, &prep.scan)? {
            FaceSearch::NoFace => (None, Vec::new()),
            FaceSearch::Found { face, eyes } => (Some(face), eyes),
        }),
        (None, Some(eye)) => {
            let mut eyes: Vec<Rect> = scan(eye, img, &prep.scan)?.into_iter().map(|d| d.rect).collect();
            eyes.sort_by_key(|r| (r.x, r.y));
            Ok((None, eyes))
        }
        _ => Ok((None, vec![img.bounds()])),
    }
}

fn draw_rect(img: &mut GrayImage, r: &Rect, level: u8) {
    if r.w == 0 || r.h == 0 {
        return;
    }
    let (x1, y1) = ((r.right() - 1).min(img.width() - 1), (r.bottom() - 1).min(img.height() - 1));
    for x in r.x..=x1 {
        img.set(x, r.y, level);
        img.set(x, y1, level);
    }
    for y in r.y..=y1 {
        img.set(r.x, y, level);
        img.set(x1, y, level);
    }
}

fn plot(img: &mut GrayImage, x: f64, y: f64, level: u8) {
    let (x, y) = (x.round(), y.round());
    if x >= 0.0 && y >= 0.0 && (x as usize) < img.width() && (y as usize) < img.height() {
        img.set(x as usize, y as usize, level);
    }
}

/// Face rect in white, eye rects in mid gray, pupil circle in black with a
/// white center cross.
pub fn draw_overlay(img: &GrayImage, face: Option<Rect>, eyes: &[EyeReport]) -> GrayImage {
    let mut out = img.clone();
    if let Some(f) = face {
        draw_rect(&mut out, &f, 255);
    }
    for e in eyes {
        draw_rect(&mut out, &e.rect, 128);
        if let Some(p) = e.pupil {
            let steps = ((2.0 * std::f64::consts::PI * p.r).ceil() as usize).max(8) * 2;
            for i in 0..steps {
                let a = i as f64 / steps as f64 * std::f64::consts::TAU;
                plot(&mut out, p.x0 + p.r * a.cos(), p.y0 + p.r * a.sin(), 0);
            }
            for d in -2..=2 {
                plot(&mut out, p.x0 + f64::from(d), p.y0, 255);
                plot(&mut out, p.x0, p.y0 + f64::from(d), 255);
            }
        }
    }
    out
}

fn process_frame(index: usize, path: &Path, cfg: &RunConfig, prep: &Prepared) -> Result<ReportLine> {
    let img = load_image(path)?;
    let (face, rects) = locate_eyes(&img, cfg, prep)?;
    let eyes: Vec<EyeReport> = rects.into_iter().map(|r| eye_report(&img, r, &prep.pupil)).collect();
    let gaze = match (&prep.calibration, prep.corner, eyes.iter().find_map(|e| e.pupil)) {
        (Some(c), Some(corner), Some(p)) => Some(map_to_screen(&c.map, &corner_feature(&p, corner))),
        _ => None,
    };
    if let Some(dir) = &cfg.overlay_dir {
        let name = format!("overlay_{index:05}.{}", cfg.overlay_format.extension());
        save_image(&draw_overlay(&img, face, &eyes), dir.join(name))?;
    }
    Ok(ReportLine::Frame {
        frame_index: index,
        source: path.display().to_string(),
        face,
        eyes,
        gaze,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub lines: Vec<ReportLine>,
    pub failed_frames: usize,
}

impl RunOutput {
    /// The report as JSON lines, header first, frames in input order.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&serde_json::to_string(line)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Processes every input; a frame that cannot be read or scanned becomes an
/// error line and the run continues. Configuration problems abort up front.
pub fn run_pipeline(inputs: &[PathBuf], cfg: &RunConfig) -> Result<RunOutput> {
    if inputs.is_empty() {
        return Err(Error::InvalidParameter("no input frames".into()));
    }
    let prep = prepare(cfg)?;
    let frames: Vec<ReportLine> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, path)| {
            process_frame(i, path, cfg, &prep).unwrap_or_else(|e| ReportLine::Error {
                frame_index: i,
                source: path.display().to_string(),
                message: e.to_string(),
            })
        })
        .collect();
    let failed_frames = frames.iter().filter(|l| matches!(l, ReportLine::Error { .. })).count();
    let mut lines = Vec::with_capacity(frames.len() + 1);
    lines.push(ReportLine::Header {
        version: REPORT_VERSION,
        frames: inputs.len(),
        config: cfg.clone(),
    });
    lines.extend(frames);
    Ok(RunOutput { lines, failed_frames })
}

pub fn parse_report(text: &str) -> Result<Vec<ReportLine>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Report(format!("line {}: {e}", i + 1))))
        .collect()
}

/// Pupil series indexed by frame; error lines and missing pupils are gaps.
pub fn pupil_series_from_report(lines: &[ReportLine]) -> Result<Vec<Option<PupilEstimate>>> {
    let frames = match lines.first() {
        Some(ReportLine::Header { frames, .. }) => *frames,
        _ => return Err(Error::Report("first line is not a header".into())),
    };
    let mut series = vec![None; frames];
    for line in &lines[1..] {
        let idx = match line {
            ReportLine::Frame { frame_index, .. } | ReportLine::Error { frame_index, .. } => *frame_index,
            ReportLine::Header { .. } => return Err(Error::Report("second header line".into())),
        };
        if idx >= frames {
            return Err(Error::Report(format!("frame index {idx} beyond {frames} frames")));
        }
        series[idx] = line.pupil();
    }
    Ok(series)
}

/// Tension score over a report document. The saturation comes from the
/// caller, falling back to the one recorded in the report header.
pub fn run_tension(
    report: &str,
    baseline: Range<usize>,
    stimulus: Range<usize>,
    saturation: Option<f64>,
) -> Result<TensionReport> {
    let lines = parse_report(report)?;
    let recorded = match lines.first() {
        Some(ReportLine::Header { config, .. }) => config.tension_saturation,
        _ => DEFAULT_SATURATION,
    };
    let series = pupil_series_from_report(&lines)?;
    tension_score(&series, baseline, stimulus, saturation.unwrap_or(recorded))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    /// Independent random eyes.
    #[default]
    Eyes,
    /// One eye whose pupil holds, then dilates.
    Dilation,
    /// Face scenes with two eyes each.
    Faces,
    /// A nine-point calibration session (samples file, no images).
    Calibration,
}

/// What to generate. Unset eye fields are drawn at random per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub count: usize,
    pub width: usize,
    pub height: usize,
    pub pupil_center: Option<(f64, f64)>,
    pub pupil_radius: Option<f64>,
    pub noise_sigma: Option<f64>,
    /// Frames before dilation starts.
    pub baseline: usize,
    /// Final dilation as a fraction of the starting radius.
    pub dilation: f64,
    pub format: OverlayFormat,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            kind: SynthKind::Eyes,
            count: 10,
            width: 320,
            height: 240,
            pupil_center: None,
            pupil_radius: None,
            noise_sigma: None,
            baseline: 5,
            dilation: 0.2,
            format: OverlayFormat::Pgm,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParameter("count must be at least 1".into()));
        }
        if self.width < 16 || self.height < 16 {
            return Err(Error::InvalidParameter("synthetic frames must be at least 16x16".into()));
        }
        if let Some(r) = self.pupil_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("pupil radius must be positive, got {r}")));
            }
        }
        if self.kind == SynthKind::Dilation && self.baseline >= self.count {
            return Err(Error::InvalidParameter("dilation baseline must leave room for a ramp".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub file: String,
    pub pupil_center: Option<(f64, f64)>,
    pub pupil_radius: Option<f64>,
    pub iris_center: Option<(f64, f64)>,
    pub iris_radius: Option<f64>,
    pub face: Option<Rect>,
    pub eyes: Vec<Rect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub spec: SynthSpec,
    pub frames: Vec<FrameTruth>,
    pub calibration: Option<synth::CalibrationSession>,
}

fn eye_truth(file: String, s: &synth::EyeSpec) -> FrameTruth {
    FrameTruth {
        file,
        pupil_center: Some(s.pupil_center),
        pupil_radius: Some(s.pupil_radius),
        iris_center: Some(s.iris_center),
        iris_radius: Some(s.iris_radius),
        face: None,
        eyes: Vec::new(),
    }
}

fn apply_overrides(mut s: synth::EyeSpec, spec: &SynthSpec) -> synth::EyeSpec {
    if let Some(c) = spec.pupil_center {
        s.pupil_center = c;
        s.iris_center = c;
    }
    if let Some(r) = spec.pupil_radius {
        s.pupil_radius = r;
        s.iris_radius = s.iris_radius.max(r * 1.8);
    }
    if let Some(n) = spec.noise_sigma {
        s.noise_sigma = n;
    }
    s
}

/// Writes the frames and `manifest.json` into `out_dir`; the same seed always
/// produces identical files.
pub fn generate_synthetic(spec: &SynthSpec, seed: u64, out_dir: &Path) -> Result<Manifest> {
    spec.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ext = spec.format.extension();
    let name = |i: usize| format!("frame_{i:05}.{ext}");
    let mut frames = Vec::new();
    let mut calibration = None;
    match spec.kind {
        SynthKind::Eyes => {
            for i in 0..spec.count {
                let s = apply_overrides(synth::random_eye_spec(spec.width, spec.height, &mut rng), spec);
                save_image(&synth::render_eye(&s, &mut rng), out_dir.join(name(i)))?;
                frames.push(eye_truth(name(i), &s));
            }
        }
        SynthKind::Dilation => {
            let template = apply_overrides(
                synth::EyeSpec {
                    width: spec.width,
                    height: spec.height,
                    pupil_center: (spec.width as f64 / 2.0, spec.height as f64 / 2.0),
                    iris_center: (spec.width as f64 / 2.0, spec.height as f64 / 2.0),
                    pupil_radius: 10.0,
                    iris_radius: (spec.width.min(spec.height) as f64 * 0.4).min(30.0),
                    ..synth::EyeSpec::default()
                },
                spec,
            );
            for (i, s) in synth::dilation_ramp(&template, spec.baseline, spec.count, spec.dilation)
                .iter()
                .enumerate()
            {
                save_image(&synth::render_eye(s, &mut rng), out_dir.join(name(i)))?;
                frames.push(eye_truth(name(i), s));
            }
        }
        SynthKind::Faces => {
            for i in 0..spec.count {
                let side = (spec.width.min(spec.height) as f64 * 0.6) as usize;
                let face = Rect::new(
                    rand::Rng::gen_range(&mut rng, 0..=spec.width - side),
                    rand::Rng::gen_range(&mut rng, 0..=spec.height - side),
                    side,
                    side,
                );
                let (img, layout) = synth::face_scene(spec.width, spec.height, Some(face), true, &mut rng);
                save_image(&img, out_dir.join(name(i)))?;
                let layout = layout.expect("a face was requested");
                frames.push(FrameTruth {
                    file: name(i),
                    pupil_center: None,
                    pupil_radius: None,
                    iris_center: None,
                    iris_radius: None,
                    face: Some(layout.face),
                    eyes: layout.eyes.to_vec(),
                });
            }
        }
        SynthKind::Calibration => {
            let session = synth::calibration_session(&synth::CalibrationProtocol::default(), &mut rng);
            let samples: Vec<crate::gaze::CalibrationSample> = session
                .targets
                .iter()
                .flat_map(|t| {
                    t.samples.iter().map(|&(dx, dy)| crate::gaze::CalibrationSample {
                        feature: crate::gaze::CornerFeature { dx, dy },
                        screen: t.screen,
                    })
                })
                .collect();
            fs::write(out_dir.join("samples.json"), serde_json::to_string_pretty(&samples)? + "\n")?;
            calibration = Some(session);
        }
    }
    let manifest = Manifest {
        seed,
        spec: spec.clone(),
        frames,
        calibration,
    };
    fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

/// Loads every PGM or PNG in `dir` (sorted by name) resampled to `size`.
pub fn load_sample_dir(dir: &Path, size: (usize, usize)) -> Result<Vec<GrayImage>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("png"))
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| Ok(normalize_sample(&load_image(p)?, size)?.image))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
        let bad = RunConfig {
            n1: 3,
            n2: 1,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RunConfig {
            scale_factor: 1.0,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn header_echoes_every_tunable() {
        let out = RunOutput {
            lines: vec![ReportLine::Header {
                version: REPORT_VERSION,
                frames: 0,
                config: RunConfig::default(),
            }],
            failed_frames: 0,
        };
        let v: serde_json::Value = serde_json::from_str(out.to_jsonl().unwrap().trim()).unwrap();
        let keys = [
            "bt", "n1", "n2", "scale_factor", "stride", "tension_saturation", "calibration",
            "face_cascade", "eye_cascade", "corner", "eye_region",
        ];
        for k in keys {
            assert!(v["config"].get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn overlay_uses_three_levels() {
        let img = GrayImage::filled(40, 40, 90);
        let eye = EyeReport {
            rect: Rect::new(5, 5, 30, 30),
            pupil: Some(PupilEstimate {
                x0: 20.0,
                y0: 20.0,
                r: 6.0,
                num_pix: 113,
                confidence: 1.0,
            }),
            diagnostics: None,
            error: None,
        };
        let o = draw_overlay(&img, Some(Rect::new(0, 0, 40, 40)), &[eye]);
        assert_eq!(o.get(0, 0), 255);
        assert_eq!(o.get(5, 10), 128);
        assert_eq!(o.get(26, 20), 0);
        assert_eq!(o.get(20, 20), 255);
        assert!(o.pixels().iter().all(|&p| [0, 90, 128, 255].contains(&p)));
    }
}
