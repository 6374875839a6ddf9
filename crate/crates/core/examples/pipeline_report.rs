//! Generate a short synthetic session on disk, run the full pipeline with
//! overlays, and read the JSON-lines report back.

use pupilscope::pipeline::{
    generate_synthetic, parse_report, run_pipeline, run_tension, ReportLine, RunConfig, SynthKind, SynthSpec,
};

fn main() -> pupilscope::Result<()> {
    let dir = std::env::temp_dir().join("pupilscope-pipeline-report");
    let spec = SynthSpec {
        kind: SynthKind::Dilation,
        count: 8,
        width: 160,
        height: 120,
        baseline: 4,
        dilation: 0.25,
        ..SynthSpec::default()
    };
    let manifest = generate_synthetic(&spec, 5, &dir)?;
    let inputs: Vec<_> = manifest.frames.iter().map(|f| dir.join(&f.file)).collect();

    let cfg = RunConfig {
        overlay_dir: Some(dir.join("overlays")),
        ..RunConfig::default()
    };
    let out = run_pipeline(&inputs, &cfg)?;
    let text = out.to_jsonl()?;
    println!("{} failed frames; first report lines:", out.failed_frames);
    for line in text.lines().take(3) {
        println!("  {line}");
    }

    for line in parse_report(&text)? {
        if let ReportLine::Frame { frame_index, .. } = &line {
            let p = line.pupil().expect("pupil found");
            let truth = manifest.frames[*frame_index].pupil_radius.unwrap_or(f64::NAN);
            println!("frame {frame_index}: r {:.2} (rendered {truth:.2})", p.r);
        }
    }

    let t = run_tension(&text, 0..4, 4..8, None)?;
    println!("dilation ratio {:.3}, score {:.3}", t.dilation_ratio, t.score);
    println!("frames and overlays in {}", dir.display());
    Ok(())
}
