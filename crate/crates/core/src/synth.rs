//! Synthetic scalar fields used by tests, benchmarks and examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::ScalarField;

fn noise(seed: u64, n: usize, amplitude: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0.0..amplitude)).collect()
}

fn add_noise(mut f: ScalarField, seed: u64, amplitude: f64) -> ScalarField {
    if amplitude > 0.0 {
        let n = noise(seed, f.len(), amplitude);
        for (v, e) in n.into_iter().enumerate() {
            let x = f.value(v) + e;
            f.set(v, x).expect("finite");
        }
    }
    f
}

/// Depths of the three pits of [`terrain`].
pub const TERRAIN_PIT_DEPTHS: [f64; 3] = [0.6, 0.5, 0.45];

/// 64x64 terrain: a gentle ramp along x with three deep Gaussian pits and
/// uniform noise in `[0, noise_amplitude)`.
///
/// Besides the global minimum, the two shallower pits and the basin along the
/// low edge of the ramp are persistent minima.
pub fn terrain(seed: u64, noise_amplitude: f64) -> ScalarField {
    let centers = [(44.0, 11.0), (44.0, 32.0), (44.0, 53.0)];
    let sigma2 = 2.0 * 4.0f64 * 4.0;
    let f = ScalarField::from_fn(&[64, 64], |c| {
        let (x, y) = (c[0] as f64, c[1] as f64);
        let pits: f64 = centers
            .iter()
            .zip(TERRAIN_PIT_DEPTHS)
            .map(|(&(cx, cy), depth)| depth * (-((x - cx).powi(2) + (y - cy).powi(2)) / sigma2).exp())
            .sum();
        0.2 * x / 63.0 - pits
    })
    .expect("finite terrain");
    add_noise(f, seed, noise_amplitude)
}

/// Signed distance to a torus in the xy-plane centred in an `n`^3 grid.
pub fn torus_sdf(n: usize, major: f64, minor: f64) -> ScalarField {
    let c = (n as f64 - 1.0) / 2.0;
    ScalarField::from_fn(&[n, n, n], |p| {
        torus_distance([p[0] as f64 - c, p[1] as f64 - c, p[2] as f64 - c], major, minor)
    })
    .expect("finite sdf")
}

fn torus_distance(p: [f64; 3], major: f64, minor: f64) -> f64 {
    let ring = p[0].hypot(p[1]) - major;
    ring.hypot(p[2]) - minor
}

/// Smooth 3D field of a few sine modes plus uniform noise.
pub fn noisy_volume(n: usize, seed: u64, noise_amplitude: f64) -> ScalarField {
    let k = std::f64::consts::TAU / (n as f64 - 1.0);
    let f = ScalarField::from_fn(&[n, n, n], |p| {
        let (x, y, z) = (p[0] as f64 * k, p[1] as f64 * k, p[2] as f64 * k);
        0.5 + 0.2 * (x.sin() * (1.5 * y).cos()) + 0.15 * (z + 0.5 * x).sin() + 0.1 * (2.0 * y - z).cos()
    })
    .expect("finite volume");
    add_noise(f, seed, noise_amplitude)
}

/// Union of several solid tori (minimum of their signed distances) with
/// uniform noise, giving a field with several persistent handles and many
/// noisy saddle pairs.
pub fn multi_handle(n: usize, seed: u64, noise_amplitude: f64) -> ScalarField {
    let s = n as f64 / 32.0;
    let tori = [
        ([9.0, 9.0, 10.0], 5.0, 1.8),
        ([22.0, 10.0, 20.0], 5.5, 2.0),
        ([12.0, 22.0, 22.0], 4.5, 1.6),
        ([22.0, 22.0, 9.0], 5.0, 1.8),
    ];
    let f = ScalarField::from_fn(&[n, n, n], |p| {
        tori.iter()
            .map(|&(c, major, minor)| {
                let q = [
                    p[0] as f64 - c[0] * s,
                    p[1] as f64 - c[1] * s,
                    p[2] as f64 - c[2] * s,
                ];
                torus_distance(q, major * s, minor * s)
            })
            .fold(f64::INFINITY, f64::min)
    })
    .expect("finite sdf");
    add_noise(f, seed, noise_amplitude)
}
