//! Initial data of the scenario presets.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::grid::signed_mode;
use crate::field::{Grid, ScalarField, VectorField};

/// `v = 0`, `phi = 1`: a pure phase at rest.
pub fn equilibrium(grid: &Grid<f64>) -> (VectorField<f64>, ScalarField<f64>) {
    (VectorField::zeros(grid), ScalarField::constant(grid, 1.0))
}

/// Seeded noise about `mean`: nodal draws uniform in `[-amplitude, amplitude]`,
/// band-limited to `|m|, |n| <= max_mode` with the mean mode removed, then
/// rescaled so the largest deviation is `amplitude` again.
pub fn spinodal_noise(
    grid: &Grid<f64>,
    seed: u64,
    amplitude: f64,
    max_mode: usize,
    mean: f64,
) -> ScalarField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..grid.len())
        .map(|_| rng.gen_range(-amplitude..=amplitude))
        .collect();
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut hat = grid.forward(&raw);
    for (n, c) in hat.iter_mut().enumerate() {
        let m = signed_mode(n % nx, nx).unsigned_abs() as usize;
        let k = signed_mode(n / nx, ny).unsigned_abs() as usize;
        if m > max_mode || k > max_mode || (m == 0 && k == 0) {
            *c = Complex::new(0.0, 0.0);
        }
    }
    let noise = ScalarField::from_vec_unchecked(grid, grid.inverse(hat));
    let peak = noise.max_abs();
    let scale = if peak > 0.0 { amplitude / peak } else { 0.0 };
    noise.map(|s| mean + scale * s)
}

pub fn spinodal(
    grid: &Grid<f64>,
    seed: u64,
    amplitude: f64,
    max_mode: usize,
    mean: f64,
) -> (VectorField<f64>, ScalarField<f64>) {
    (
        VectorField::zeros(grid),
        spinodal_noise(grid, seed, amplitude, max_mode, mean),
    )
}

/// Drop of phase `-1` and radius `radius` centred in the box, with the
/// equilibrium profile `tanh(d / (sqrt(2) eps))` across the interface.
pub fn drop(grid: &Grid<f64>, radius: f64, epsilon: f64) -> (VectorField<f64>, ScalarField<f64>) {
    let (cx, cy) = (0.5 * grid.lx(), 0.5 * grid.ly());
    let width = std::f64::consts::SQRT_2 * epsilon;
    let phi = ScalarField::from_fn(grid, |x, y| {
        let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
        ((r - radius) / width).tanh()
    });
    (VectorField::zeros(grid), phi)
}
