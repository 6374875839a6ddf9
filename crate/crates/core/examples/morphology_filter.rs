//! Clean a noisy dark-region mask with the diamond element: speckle goes,
//! eyelash strokes are cut off, and the pupil disk keeps its size.

use pupilscope::imagecore::{invert, BinaryImage};
use pupilscope::morph::{dilate, erode, pupil_filter, MorphParams, StructuringElement};
use pupilscope::pupil::locate_pupil;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn show(title: &str, img: &BinaryImage) {
    println!("{title} ({} set)", img.count());
    for y in (0..img.height()).step_by(2) {
        let row: String = (0..img.width()).map(|x| if img.get(x, y) { '#' } else { '.' }).collect();
        println!("  {row}");
    }
}

fn main() -> pupilscope::Result<()> {
    let se = StructuringElement::pupil_disk();
    println!("structuring element, origin {:?}:", se.origin());
    for r in 0..se.size() {
        let row: String = (0..se.size()).map(|c| if se.get(c, r) { '#' } else { '.' }).collect();
        println!("  {row}");
    }

    // Dark pixels: a disk of radius 9, a thin lash, and salt noise.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dark = BinaryImage::from_fn(48, 36, |x, y| {
        let disk = (x as f64 - 22.0).hypot(y as f64 - 18.0) <= 9.0;
        let lash = x == 36 && (4..30).contains(&y);
        disk || lash || rng.gen_bool(0.04)
    });
    show("dark mask", &dark);

    // The filter expects the pupil as background and complements first.
    let cleaned = pupil_filter(&invert(&dark), &se, &MorphParams::default())?;
    show("filtered", &cleaned);

    let before = locate_pupil(&dark)?;
    let after = locate_pupil(&cleaned)?;
    println!("raw estimate      ({:.2}, {:.2}) r={:.2}", before.x0, before.y0, before.r);
    println!("filtered estimate ({:.2}, {:.2}) r={:.2}", after.x0, after.y0, after.r);

    // Erosion and dilation are duals through the complement and reflection.
    let lhs = dilate(&dark, &se);
    let rhs = invert(&erode(&invert(&dark), &se.reflected()));
    let interior_agrees = (3..33).all(|y| (3..45).all(|x| lhs.get(x, y) == rhs.get(x, y)));
    println!("duality holds away from the border: {interior_agrees}");
    Ok(())
}
