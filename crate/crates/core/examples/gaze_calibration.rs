//! Fit a second-order map from pupil-to-corner offsets to screen pixels on a
//! nine-point grid, then check it on targets it never saw.

use pupilscope::gaze::{
    calibrate_with_bounds, gaze_direction, map_to_screen, CalibrationSample, CornerFeature, GullstrandEyeModel,
};
use pupilscope::synth::{calibration_session, CalibrationProtocol};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pupilscope::Result<()> {
    let model = GullstrandEyeModel::default();
    println!("schematic eye, axial length {:.1} mm:", model.axial_length());
    for s in &model.surfaces {
        println!("  {:<28} at {:>5.2} mm, radius {:>6.2} mm, n {:?}", s.name, s.location, s.radius, s.refractive_index);
    }

    // Pupil center 10 mm in front of the eyeball center, slightly up and left.
    let g = gaze_direction([-1.0, 1.5, 10.0], [0.0, 0.0, 0.0])?;
    println!("gaze direction {:?}, |p - c| = {:.3} mm", g.e, g.r_p);

    let protocol = CalibrationProtocol::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let session = calibration_session(&protocol, &mut rng);
    let samples: Vec<CalibrationSample> = session
        .targets
        .iter()
        .flat_map(|t| {
            t.samples.iter().map(|&(dx, dy)| CalibrationSample {
                feature: CornerFeature { dx, dy },
                screen: t.screen,
            })
        })
        .collect();
    println!("{} samples over {} targets", samples.len(), session.targets.len());

    for degree in [1, 2] {
        let map = calibrate_with_bounds(&samples, degree, Some(protocol.screen))?;
        let sq: f64 = session
            .held_out
            .iter()
            .map(|t| {
                let p = map_to_screen(&map, &CornerFeature { dx: t.true_feature.0, dy: t.true_feature.1 });
                (p.x - t.screen.0).powi(2) + (p.y - t.screen.1).powi(2)
            })
            .sum();
        println!(
            "degree {degree}: fit residual {:.2} px, held-out RMS {:.2} px over {} targets",
            map.residual,
            (sq / session.held_out.len() as f64).sqrt(),
            session.held_out.len()
        );
    }
    Ok(())
}
