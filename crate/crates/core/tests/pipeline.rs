use std::fs;
use std::path::{Path, PathBuf};

use pupilscope::pipeline::{
    generate_synthetic, parse_report, pupil_series_from_report, run_pipeline, run_tension, Manifest, ReportLine,
    RunConfig, SynthKind, SynthSpec,
};
use pupilscope::Rect;
use tempfile::TempDir;

fn frames(dir: &Path, n: usize) -> Vec<PathBuf> {
    (0..n).map(|i| dir.join(format!("frame_{i:05}.pgm"))).collect()
}

fn eyes(dir: &Path, count: usize, seed: u64) -> Manifest {
    let spec = SynthSpec {
        count,
        ..SynthSpec::default()
    };
    generate_synthetic(&spec, seed, dir).unwrap()
}

#[test]
fn every_frame_gets_a_pupil_near_the_truth() {
    let dir = TempDir::new().unwrap();
    let manifest = eyes(dir.path(), 5, 21);
    let out = run_pipeline(&frames(dir.path(), 5), &RunConfig::default()).unwrap();
    assert_eq!(out.failed_frames, 0);
    assert_eq!(out.lines.len(), 6);
    assert!(matches!(out.lines[0], ReportLine::Header { frames: 5, .. }));
    for (line, truth) in out.lines[1..].iter().zip(&manifest.frames) {
        let p = line.pupil().expect("pupil found");
        let (tx, ty) = truth.pupil_center.unwrap();
        assert!((p.x0 - tx).hypot(p.y0 - ty) < 1.5, "{p:?} vs {truth:?}");
        assert!((p.r / truth.pupil_radius.unwrap() - 1.0).abs() < 0.1);
    }
}

#[test]
fn eye_region_reports_frame_coordinates() {
    let dir = TempDir::new().unwrap();
    let spec = SynthSpec {
        count: 2,
        pupil_center: Some((200.0, 120.0)),
        pupil_radius: Some(12.0),
        ..SynthSpec::default()
    };
    generate_synthetic(&spec, 3, dir.path()).unwrap();
    let cfg = RunConfig {
        eye_region: Some(Rect::new(140, 60, 120, 120)),
        ..RunConfig::default()
    };
    let out = run_pipeline(&frames(dir.path(), 2), &cfg).unwrap();
    for line in &out.lines[1..] {
        let ReportLine::Frame { eyes, face, .. } = line else {
            panic!("expected a frame line, got {line:?}");
        };
        assert_eq!(*face, None);
        assert_eq!(eyes.len(), 1);
        assert_eq!(eyes[0].rect, Rect::new(140, 60, 120, 120));
        let p = eyes[0].pupil.unwrap();
        assert!((p.x0 - 200.0).abs() < 1.5 && (p.y0 - 120.0).abs() < 1.5, "{p:?}");
    }
}

#[test]
fn corrupt_frame_is_reported_and_the_rest_continue() {
    let dir = TempDir::new().unwrap();
    eyes(dir.path(), 5, 4);
    let paths = frames(dir.path(), 5);
    fs::write(&paths[2], b"P5\n320 240\n255\nnot enough pixels").unwrap();
    let out = run_pipeline(&paths, &RunConfig::default()).unwrap();
    assert_eq!(out.failed_frames, 1);
    let kinds: Vec<&str> = out
        .lines
        .iter()
        .map(|l| match l {
            ReportLine::Header { .. } => "header",
            ReportLine::Frame { .. } => "frame",
            ReportLine::Error { .. } => "error",
        })
        .collect();
    assert_eq!(kinds, ["header", "frame", "frame", "error", "frame", "frame"]);
    let ReportLine::Error { frame_index, source, .. } = &out.lines[3] else { unreachable!() };
    assert_eq!(*frame_index, 2);
    assert!(source.ends_with("frame_00002.pgm"));
}

#[test]
fn missing_frame_counts_as_a_failed_frame() {
    let dir = TempDir::new().unwrap();
    eyes(dir.path(), 2, 4);
    let mut paths = frames(dir.path(), 2);
    paths.push(dir.path().join("absent.pgm"));
    let out = run_pipeline(&paths, &RunConfig::default()).unwrap();
    assert_eq!(out.failed_frames, 1);
}

#[test]
fn invalid_config_fails_before_any_frame() {
    let cfg = RunConfig {
        scale_factor: 1.0,
        ..RunConfig::default()
    };
    assert!(run_pipeline(&[PathBuf::from("never-read.pgm")], &cfg).is_err());
    let cfg = RunConfig {
        face_cascade: Some(PathBuf::from("/nonexistent/face.json")),
        ..RunConfig::default()
    };
    assert!(run_pipeline(&[PathBuf::from("never-read.pgm")], &cfg).is_err());
}

#[test]
fn same_seed_same_bytes() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    eyes(a.path(), 3, 77);
    eyes(b.path(), 3, 77);
    for name in ["frame_00000.pgm", "frame_00001.pgm", "frame_00002.pgm", "manifest.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let c = TempDir::new().unwrap();
    eyes(c.path(), 3, 78);
    assert_ne!(
        fs::read(a.path().join("frame_00000.pgm")).unwrap(),
        fs::read(c.path().join("frame_00000.pgm")).unwrap()
    );
}

#[test]
fn manifest_echoes_fixed_pupil() {
    let dir = TempDir::new().unwrap();
    let spec = SynthSpec {
        count: 3,
        width: 80,
        height: 60,
        pupil_center: Some((33.0, 29.0)),
        pupil_radius: Some(12.0),
        ..SynthSpec::default()
    };
    generate_synthetic(&spec, 5, dir.path()).unwrap();
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.seed, 5);
    for f in &manifest.frames {
        assert_eq!(f.pupil_center, Some((33.0, 29.0)));
        assert_eq!(f.pupil_radius, Some(12.0));
    }
}

#[test]
fn png_frames_round_trip_through_the_pipeline() {
    let dir = TempDir::new().unwrap();
    let spec = SynthSpec {
        count: 2,
        format: pupilscope::pipeline::OverlayFormat::Png,
        ..SynthSpec::default()
    };
    generate_synthetic(&spec, 9, dir.path()).unwrap();
    let paths: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("frame_{i:05}.png"))).collect();
    let out = run_pipeline(&paths, &RunConfig::default()).unwrap();
    assert_eq!(out.failed_frames, 0);
    assert!(out.lines[1..].iter().all(|l| l.pupil().is_some()));
}

#[test]
fn dilation_report_scores_the_ramp() {
    let dir = TempDir::new().unwrap();
    let spec = SynthSpec {
        kind: SynthKind::Dilation,
        count: 10,
        width: 120,
        height: 100,
        baseline: 5,
        dilation: 0.3,
        ..SynthSpec::default()
    };
    generate_synthetic(&spec, 12, dir.path()).unwrap();
    let text = run_pipeline(&frames(dir.path(), 10), &RunConfig::default())
        .unwrap()
        .to_jsonl()
        .unwrap();
    let lines = parse_report(&text).unwrap();
    let series = pupil_series_from_report(&lines).unwrap();
    assert_eq!(series.len(), 10);
    let t = run_tension(&text, 0..5, 5..10, None).unwrap();
    assert!(t.dilation_ratio > 1.1, "{t:?}");
    assert!(t.score > 0.5 && t.score <= 1.0, "{t:?}");
    let loose = run_tension(&text, 0..5, 5..10, Some(1.0)).unwrap();
    assert!(loose.score < t.score);
    assert!(run_tension(&text, 0..6, 5..10, None).is_err());
}

#[test]
fn calibration_kind_writes_fittable_samples() {
    let dir = TempDir::new().unwrap();
    let spec = SynthSpec {
        kind: SynthKind::Calibration,
        ..SynthSpec::default()
    };
    let manifest = generate_synthetic(&spec, 2, dir.path()).unwrap();
    assert!(manifest.calibration.is_some());
    let samples: Vec<pupilscope::gaze::CalibrationSample> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("samples.json")).unwrap()).unwrap();
    assert_eq!(samples.len(), 9 * 20);
    let session = pupilscope::gaze::CalibrationSession::fit(samples, 2, Some((1920.0, 1080.0))).unwrap();
    assert!(session.map.residual < 30.0, "{}", session.map.residual);
}
