//! Image rotation about the 28x28 center.

const SIDE: usize = 28;
const CENTER: f64 = 13.5;

/// Rotates a 28x28 image about its center by `degrees` (a quarter turn sends
/// the top-left corner to the top-right).
///
/// Multiples of 90 degrees are exact pixel permutations; other angles use
/// bilinear interpolation with zero outside the frame.
pub fn rotate(image: &[f64], degrees: u32) -> Vec<f64> {
    assert_eq!(image.len(), SIDE * SIDE);
    match degrees % 360 {
        0 => image.to_vec(),
        90 => permute(image, |r, c| (SIDE - 1 - c, r)),
        180 => permute(image, |r, c| (SIDE - 1 - r, SIDE - 1 - c)),
        270 => permute(image, |r, c| (c, SIDE - 1 - r)),
        deg => bilinear(image, f64::from(deg).to_radians()),
    }
}

fn permute(image: &[f64], src: impl Fn(usize, usize) -> (usize, usize)) -> Vec<f64> {
    let mut out = vec![0.0; SIDE * SIDE];
    for r in 0..SIDE {
        for c in 0..SIDE {
            let (sr, sc) = src(r, c);
            out[r * SIDE + c] = image[sr * SIDE + sc];
        }
    }
    out
}

fn bilinear(image: &[f64], theta: f64) -> Vec<f64> {
    let (sin, cos) = theta.sin_cos();
    let mut out = vec![0.0; SIDE * SIDE];
    for r in 0..SIDE {
        for c in 0..SIDE {
            // Inverse rotation of the destination offset gives the source.
            let dx = c as f64 - CENTER;
            let dy = r as f64 - CENTER;
            let sx = CENTER + cos * dx + sin * dy;
            let sy = CENTER - sin * dx + cos * dy;
            out[r * SIDE + c] = sample(image, sy, sx);
        }
    }
    out
}

fn sample(image: &[f64], y: f64, x: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let mut acc = 0.0;
    for (dy, wy) in [(0.0, 1.0 - fy), (1.0, fy)] {
        for (dx, wx) in [(0.0, 1.0 - fx), (1.0, fx)] {
            let yy = y0 + dy;
            let xx = x0 + dx;
            if (0.0..SIDE as f64).contains(&yy) && (0.0..SIDE as f64).contains(&xx) {
                acc += wy * wx * image[yy as usize * SIDE + xx as usize];
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse(r: usize, c: usize) -> Vec<f64> {
        let mut img = vec![0.0; 784];
        img[r * SIDE + c] = 1.0;
        img
    }

    #[test]
    fn zero_degrees_is_bit_identical() {
        let img: Vec<f64> = (0..784).map(|i| i as f64 / 784.0).collect();
        let out = rotate(&img, 0);
        for (a, b) in out.iter().zip(&img) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn half_turn_twice_is_identity() {
        let img: Vec<f64> = (0..784).map(|i| (i as f64).sin().abs()).collect();
        let out = rotate(&rotate(&img, 180), 180);
        assert_eq!(out, img);
    }

    #[test]
    fn quarter_turn_moves_impulse_exactly() {
        // dst(r, c) reads src(27-c, r), so the source pixel (sr, sc) lands at
        // (r, c) = (sc, 27-sr). For (3, 20) that is (20, 24).
        let img = impulse(3, 20);
        let out = rotate(&img, 90);
        assert_eq!(out[20 * SIDE + 24], 1.0);
        let mass: f64 = out.iter().sum();
        assert!((mass - 1.0).abs() < 0.02);
    }

    #[test]
    fn oblique_angles_preserve_interior_mass() {
        // A centered blob keeps its mass under 45-degree rotation.
        let mut img = vec![0.0; 784];
        for r in 10..18 {
            for c in 10..18 {
                img[r * SIDE + c] = 0.5;
            }
        }
        let before: f64 = img.iter().sum();
        for deg in [45, 135] {
            let after: f64 = rotate(&img, deg).iter().sum();
            assert!(
                (after - before).abs() / before < 0.02,
                "mass {before} -> {after} at {deg}"
            );
        }
    }

    #[test]
    fn rotations_compose_on_right_angles() {
        let img = impulse(5, 9);
        let twice = rotate(&rotate(&img, 90), 90);
        assert_eq!(twice, rotate(&img, 180));
    }
}
