use std::fs;
use std::ops::Range;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pupilscope::cascade::{feature_bank, train_cascade, CascadeTrainParams, TrainParams, BASE_WINDOW};
use pupilscope::gaze::{CalibrationSample, CalibrationSession};
use pupilscope::pipeline::{
    generate_synthetic, load_sample_dir, run_pipeline, run_tension, OverlayFormat, RunConfig, SynthKind, SynthSpec,
};
use pupilscope::{Rect, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "pupilscope", version, about = "Pupil, gaze and dilation measurements from gray eye images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the detection pipeline over image files and write a JSON-lines report.
    Detect(DetectArgs),
    /// Score pupil dilation between two frame windows of a report.
    Tension(TensionArgs),
    /// Fit a screen calibration from a samples file.
    Calibrate(CalibrateArgs),
    /// Train a cascade from directories of positive and negative samples.
    Train(TrainArgs),
    /// Generate synthetic frames with a ground-truth manifest.
    Synth(SynthArgs),
}

#[derive(Args)]
struct DetectArgs {
    /// Frames, processed in the order given.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report destination; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    bt: Option<f64>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    scale_factor: Option<f64>,
    #[arg(long)]
    stride: Option<f64>,
    #[arg(long)]
    tension_saturation: Option<f64>,
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long)]
    face_cascade: Option<PathBuf>,
    #[arg(long)]
    eye_cascade: Option<PathBuf>,
    /// Eye corner as `x,y`.
    #[arg(long, value_parser = parse_point)]
    corner: Option<(f64, f64)>,
    /// Fixed eye rectangle `x,y,w,h`; no cascades are used.
    #[arg(long, value_parser = parse_rect)]
    eye_region: Option<Rect>,
    #[arg(long)]
    overlay_dir: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    overlay_format: Option<OverlayFormat>,
}

#[derive(Args)]
struct TensionArgs {
    #[arg(long)]
    report: PathBuf,
    /// Frame range `start..end` (end exclusive).
    #[arg(long, value_parser = parse_range)]
    baseline: Range<usize>,
    #[arg(long, value_parser = parse_range)]
    stimulus: Range<usize>,
    /// Overrides the saturation recorded in the report.
    #[arg(long)]
    saturation: Option<f64>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// JSON array of `{feature: {dx, dy}, screen: [x, y]}` samples.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, default_value_t = 2)]
    degree: u8,
    /// Screen size `WxH`; defaults to the bounding box of the targets.
    #[arg(long, value_parser = parse_size)]
    screen: Option<(f64, f64)>,
    /// Eye corner stored with the session, `x,y`.
    #[arg(long, value_parser = parse_point)]
    corner: Option<(f64, f64)>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    positives: PathBuf,
    #[arg(long)]
    negatives: PathBuf,
    #[arg(long, default_value_t = 10)]
    rounds: usize,
    #[arg(long, default_value_t = 3)]
    stages: usize,
    /// Use at most this many negatives, drawn with `--seed`.
    #[arg(long)]
    max_negatives: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_parser = parse_kind, default_value = "eyes")]
    kind: SynthKind,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 320)]
    width: usize,
    #[arg(long, default_value_t = 240)]
    height: usize,
    /// Pupil center `x,y`; random when omitted.
    #[arg(long, value_parser = parse_point)]
    center: Option<(f64, f64)>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 5)]
    baseline: usize,
    #[arg(long, default_value_t = 0.2)]
    dilation: f64,
    #[arg(long, value_parser = parse_format, default_value = "pgm")]
    format: OverlayFormat,
    #[arg(long, short)]
    out: PathBuf,
}

fn numbers(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() == n {
        Ok(v)
    } else {
        Err(format!("expected {n} comma-separated numbers"))
    }
}

fn parse_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let v = numbers(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_rect(s: &str) -> std::result::Result<Rect, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, w, h] => Ok(Rect::new(x, y, w, h)),
        _ => Err("expected x,y,w,h".into()),
    }
}

fn parse_size(s: &str) -> std::result::Result<(f64, f64), String> {
    let (w, h) = s.split_once('x').ok_or("expected WxH")?;
    Ok((w.parse().map_err(|e| format!("{e}"))?, h.parse().map_err(|e| format!("{e}"))?))
}

fn parse_range(s: &str) -> std::result::Result<Range<usize>, String> {
    let (a, b) = s.split_once("..").ok_or("expected start..end")?;
    Ok(a.parse().map_err(|e| format!("{e}"))?..b.parse().map_err(|e| format!("{e}"))?)
}

fn parse_format(s: &str) -> std::result::Result<OverlayFormat, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase())).map_err(|_| "expected pgm or png".into())
}

fn parse_kind(s: &str) -> std::result::Result<SynthKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase()))
        .map_err(|_| "expected eyes, dilation, faces or calibration".into())
}

fn run_config(a: &DetectArgs) -> Result<RunConfig> {
    let mut cfg: RunConfig = match &a.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = a.$field.clone() {
                cfg.$field = v;
            }
        )*};
    }
    set!(bt, n1, n2, scale_factor, stride, tension_saturation, overlay_format);
    macro_rules! set_opt {
        ($($field:ident),*) => {$(
            if a.$field.is_some() {
                cfg.$field = a.$field.clone();
            }
        )*};
    }
    set_opt!(calibration, face_cascade, eye_cascade, corner, eye_region, overlay_dir);
    Ok(cfg)
}

enum Outcome {
    Done,
    Partial(usize),
}

fn detect(a: &DetectArgs) -> Result<Outcome> {
    let cfg = run_config(a)?;
    let out = run_pipeline(&a.inputs, &cfg)?;
    let text = out.to_jsonl()?;
    match &a.out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(if out.failed_frames > 0 {
        Outcome::Partial(out.failed_frames)
    } else {
        Outcome::Done
    })
}

fn tension(a: &TensionArgs) -> Result<Outcome> {
    let report = run_tension(&fs::read_to_string(&a.report)?, a.baseline.clone(), a.stimulus.clone(), a.saturation)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(Outcome::Done)
}

fn calibrate(a: &CalibrateArgs) -> Result<Outcome> {
    let samples: Vec<CalibrationSample> = serde_json::from_str(&fs::read_to_string(&a.samples)?)?;
    let mut session = CalibrationSession::fit(samples, a.degree, a.screen)?;
    session.corner = a.corner;
    fs::write(&a.out, session.to_json()? + "\n")?;
    println!("degree {} fit, residual {:.3}", session.degree, session.map.residual);
    Ok(Outcome::Done)
}

fn train(a: &TrainArgs) -> Result<Outcome> {
    let pos = load_sample_dir(&a.positives, BASE_WINDOW)?;
    let mut neg = load_sample_dir(&a.negatives, BASE_WINDOW)?;
    if let Some(max) = a.max_negatives {
        neg.shuffle(&mut ChaCha8Rng::seed_from_u64(a.seed));
        neg.truncate(max);
    }
    let params = CascadeTrainParams {
        stages: a.stages,
        stage: TrainParams {
            rounds: a.rounds,
            ..TrainParams::default()
        },
    };
    let (cascade, history) = train_cascade(&pos, &neg, &feature_bank(BASE_WINDOW), &params)?;
    cascade.save(&a.out)?;
    for (i, h) in history.iter().enumerate() {
        println!(
            "stage {}: {} weak classifiers, final training error {:.4}",
            i + 1,
            h.classifier.members.len(),
            h.training_errors.last().copied().unwrap_or(0.0)
        );
    }
    Ok(Outcome::Done)
}

fn synth(a: &SynthArgs) -> Result<Outcome> {
    let spec = SynthSpec {
        kind: a.kind,
        count: a.count,
        width: a.width,
        height: a.height,
        pupil_center: a.center,
        pupil_radius: a.radius,
        noise_sigma: a.noise,
        baseline: a.baseline,
        dilation: a.dilation,
        format: a.format,
    };
    let manifest = generate_synthetic(&spec, a.seed, &a.out)?;
    println!("wrote {} frames to {}", manifest.frames.len(), a.out.display());
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    // Usage errors are configuration errors too, so they exit with 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Detect(a) => detect(a),
        Command::Tension(a) => tension(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Train(a) => train(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial(n)) => {
            eprintln!("{n} frame(s) failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
