//! Detect pupils in a batch of random synthetic eyes and compare each
//! estimate with the rendered truth.

use pupilscope::pupil::{detect_pupil, PupilConfig};
use pupilscope::synth::{random_eye_spec, render_eye};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pupilscope::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = PupilConfig::default();
    println!(" #   true center     r   | found center    r     | err px  err r");
    for i in 0..12 {
        let spec = random_eye_spec(320, 240, &mut rng);
        let eye = render_eye(&spec, &mut rng);
        match detect_pupil(&eye, &cfg) {
            Ok(d) => {
                let e = d.estimate;
                let (tx, ty) = spec.pupil_center;
                println!(
                    "{i:>2}  ({tx:6.1},{ty:6.1}) {:5.1} | ({:6.1},{:6.1}) {:5.1} | {:6.2} {:5.1}%",
                    spec.pupil_radius,
                    e.x0,
                    e.y0,
                    e.r,
                    (e.x0 - tx).hypot(e.y0 - ty),
                    (e.r / spec.pupil_radius - 1.0) * 100.0
                );
            }
            Err(err) => println!("{i:>2}  no pupil: {err}"),
        }
    }
    Ok(())
}
