use std::f64::consts::PI;
use std::sync::Arc;

use kgelab_core::{Grid, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Band-limited random field: cosine modes up to `kmax` per axis with
/// seeded amplitudes and phases. Smooth, generic, Nyquist-free.
#[allow(dead_code)]
pub fn smooth_noise(grid: &Arc<Grid>, kmax: isize, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dim();
    let mut modes: Vec<(Vec<isize>, f64, f64)> = Vec::new();
    let mut idx = vec![-kmax; dim];
    'outer: loop {
        modes.push((
            idx.clone(),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..2.0 * PI),
        ));
        for a in 0..dim {
            idx[a] += 1;
            if idx[a] <= kmax {
                continue 'outer;
            }
            idx[a] = -kmax;
        }
        break;
    }
    ScalarField::from_fn(grid, |x| {
        modes
            .iter()
            .map(|(m, amp, phase)| {
                let arg: f64 = m
                    .iter()
                    .zip(x)
                    .zip(grid.lengths())
                    .map(|((&mi, &xi), &li)| 2.0 * PI * mi as f64 * xi / li)
                    .sum();
                amp * (arg + phase).cos()
            })
            .sum()
    })
    .expect("noise field is finite")
}

/// Gaussian bump centered in the box.
#[allow(dead_code)]
pub fn centered_bump(grid: &Arc<Grid>, amplitude: f64, width: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        let r2: f64 = x
            .iter()
            .zip(grid.lengths())
            .map(|(&xi, &l)| (xi - 0.5 * l) * (xi - 0.5 * l))
            .sum();
        amplitude * (-r2 / (width * width)).exp()
    })
    .expect("bump is finite")
}
