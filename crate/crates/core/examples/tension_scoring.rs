//! Score dilation over a baseline window and a stimulus window, with a few
//! dropped frames that the score simply skips.

use pupilscope::gaze::{tension_from_ratio, tension_score, DEFAULT_SATURATION};
use pupilscope::pupil::{detect_pupil, PupilConfig};
use pupilscope::synth::{dilation_ramp, render_eye, EyeSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pupilscope::Result<()> {
    println!("ratio -> score at saturation {DEFAULT_SATURATION}:");
    for ratio in [0.9, 1.0, 1.05, 1.1, 1.2, 1.4] {
        println!("  {ratio:.2} -> {:.3}", tension_from_ratio(ratio, DEFAULT_SATURATION));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let specs = dilation_ramp(&EyeSpec::default(), 8, 16, 0.15);
    let cfg = PupilConfig::default();
    let series: Vec<_> = specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            // Frames 3 and 11 stand in for blinks.
            if i == 3 || i == 11 {
                None
            } else {
                detect_pupil(&render_eye(s, &mut rng), &cfg).ok().map(|d| d.estimate)
            }
        })
        .collect();
    for (i, (s, e)) in specs.iter().zip(&series).enumerate() {
        match e {
            Some(e) => println!("frame {i:>2}: rendered r {:5.2}, measured r {:5.2}", s.pupil_radius, e.r),
            None => println!("frame {i:>2}: rendered r {:5.2}, no measurement", s.pupil_radius),
        }
    }

    let report = tension_score(&series, 0..8, 8..16, DEFAULT_SATURATION)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
