//! Smooth the gray-level histogram of a synthetic eye and pick the valley
//! between the pupil and iris modes.

use pupilscope::imagecore::compute_histogram;
use pupilscope::synth::{render_eye, EyeSpec};
use pupilscope::threshold::{binarize, build_kernel, select_threshold, smooth, ThresholdParams, DEFAULT_BT};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pupilscope::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let eye = render_eye(&EyeSpec::default(), &mut rng);

    let kernel = build_kernel(DEFAULT_BT)?;
    println!(
        "kernel: BT {} gives delta {:.4} and {} taps each side",
        kernel.bt(),
        kernel.delta(),
        kernel.radius()
    );

    let hist = compute_histogram(&eye)?;
    let smoothed = smooth(&hist, &kernel);
    let result = select_threshold(&smoothed, &ThresholdParams::default())?;
    println!(
        "peaks at {} and {}, threshold {} ({:?})",
        result.peak_low, result.peak_high, result.threshold, result.method
    );

    // Coarse text plot of the smoothed histogram, one row per 16 levels.
    let values = smoothed.values();
    let top = values.iter().copied().fold(0.0, f64::max);
    for band in 0..16 {
        let peak = values[band * 16..band * 16 + 16].iter().copied().fold(0.0, f64::max);
        let bar = "#".repeat((peak / top * 50.0).round() as usize);
        let mark = if (band * 16..band * 16 + 16).contains(&(result.threshold as usize)) { " <- threshold" } else { "" };
        println!("{:>3}-{:>3} {bar}{mark}", band * 16, band * 16 + 15);
    }

    let dark = binarize(&eye, result.threshold);
    println!("{} of {} pixels at or below the threshold", dark.count(), eye.pixels().len());
    Ok(())
}
