//! Boost one stage on bright-top versus bright-bottom patches and report
//! held-out detection and false-positive rates.

use std::time::Instant;

use pupilscope::cascade::{eval_strong, feature_bank, train_stage, TrainParams, BASE_WINDOW};
use pupilscope::imagecore::{compute_integral, Rect};
use pupilscope::synth::edge_pattern;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pupilscope::Result<()> {
    let per_class = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pos: Vec<_> = (0..per_class).map(|_| edge_pattern(24, true, &mut rng)).collect();
    let neg: Vec<_> = (0..per_class).map(|_| edge_pattern(24, false, &mut rng)).collect();
    let split = per_class * 7 / 10;

    let start = Instant::now();
    let bank = feature_bank(BASE_WINDOW);
    let stage = train_stage(&pos[..split], &neg[..split], &bank, &TrainParams::default())?;
    println!("{} features, {} rounds in {:.2?}", bank.len(), stage.classifier.members.len(), start.elapsed());
    for (i, (e, t)) in stage.weak_errors.iter().zip(&stage.training_errors).enumerate() {
        println!("round {:2}: weak error {e:.4}, training error {t:.4}", i + 1);
    }

    let window = Rect::new(0, 0, 24, 24);
    let rate = |set: &[pupilscope::GrayImage]| -> pupilscope::Result<f64> {
        let mut hits = 0;
        for img in set {
            if eval_strong(&stage.classifier, &compute_integral(img)?, &window)? {
                hits += 1;
            }
        }
        Ok(hits as f64 / set.len() as f64)
    };
    println!("held-out detection {:.3}", rate(&pos[split..])?);
    println!("held-out false positives {:.3}", rate(&neg[split..])?);
    Ok(())
}
