//! Train small face and eye cascades on synthetic patches, then find a face
//! and its eyes in a fresh scene.

use std::time::Instant;

use pupilscope::cascade::{
    detect_face_then_eyes, feature_bank, normalize_sample, train_cascade, CascadeTrainParams, FaceSearch, ScanParams,
    TrainParams, BASE_WINDOW,
};
use pupilscope::imagecore::crop;
use pupilscope::synth::{clutter_patch, eye_patch, face_patch, face_scene};
use pupilscope::{GrayImage, Rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random crops of `img` that barely touch any of `avoid`.
fn negative_crops(img: &GrayImage, avoid: &[Rect], n: usize, rng: &mut ChaCha8Rng) -> Vec<GrayImage> {
    let mut out = Vec::new();
    let mut tries = 0;
    while out.len() < n && tries < n * 50 {
        tries += 1;
        let side = rng.gen_range(20..=img.width().min(img.height()) / 2);
        let r = Rect::new(rng.gen_range(0..=img.width() - side), rng.gen_range(0..=img.height() - side), side, side);
        if avoid.iter().all(|a| r.iou(a) < 0.2) {
            out.push(normalize_sample(&crop(img, &r).unwrap(), BASE_WINDOW).unwrap().image);
        }
    }
    out
}

fn main() -> pupilscope::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bank = feature_bank(BASE_WINDOW);
    let params = CascadeTrainParams {
        stages: 3,
        stage: TrainParams {
            rounds: 12,
            ..TrainParams::default()
        },
    };

    let start = Instant::now();
    let faces: Vec<_> = (0..300).map(|_| face_patch(24, &mut rng)).collect();
    let mut non_faces: Vec<_> = (0..300).map(|_| clutter_patch(24, &mut rng)).collect();
    let eyes: Vec<_> = (0..300).map(|_| eye_patch(24, &mut rng)).collect();
    let mut non_eyes: Vec<_> = (0..150).map(|_| clutter_patch(24, &mut rng)).collect();
    for _ in 0..30 {
        let side = rng.gen_range(80..140);
        let face = Rect::new(rng.gen_range(0..=200 - side), rng.gen_range(0..=160 - side), side, side);
        let (img, layout) = face_scene(200, 160, Some(face), true, &mut rng);
        let layout = layout.expect("face requested");
        non_faces.extend(negative_crops(&img, &[layout.face], 10, &mut rng));
        non_eyes.extend(negative_crops(&img, &layout.eyes, 10, &mut rng));
    }
    let (face_cascade, _) = train_cascade(&faces, &non_faces, &bank, &params)?;
    let (eye_cascade, _) = train_cascade(&eyes, &non_eyes, &bank, &params)?;
    println!(
        "trained {} face and {} eye stages in {:.2?}",
        face_cascade.stages.len(),
        eye_cascade.stages.len(),
        start.elapsed()
    );

    let scan = ScanParams::default();
    for trial in 0..5 {
        let truth = Rect::new(30 + trial * 8, 15 + trial * 3, 110, 110);
        let (scene, layout) = face_scene(220, 170, Some(truth), true, &mut rng);
        let layout = layout.expect("face requested");
        match detect_face_then_eyes(&scene, &face_cascade, &eye_cascade, &scan)? {
            FaceSearch::NoFace => println!("scene {trial}: no face"),
            FaceSearch::Found { face, eyes } => {
                let ious: Vec<String> = eyes
                    .iter()
                    .map(|e| format!("{:.2}", layout.eyes.iter().map(|t| e.iou(t)).fold(0.0, f64::max)))
                    .collect();
                println!("scene {trial}: face IoU {:.2}, eyes {:?} IoU {ious:?}", face.iou(&layout.face), eyes);
            }
        }
    }
    let (blank, _) = face_scene(220, 170, None, false, &mut rng);
    println!("blank scene: {:?}", detect_face_then_eyes(&blank, &face_cascade, &eye_cascade, &scan)?);
    Ok(())
}
