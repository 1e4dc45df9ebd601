//! Seeded random test sections.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::{SpacetimeFunction, TimeGrid};
use crate::geometry::Spacetime1D;
use crate::grid::GridFunction;
use crate::spectral;

/// Random band-limited section: Fourier coefficients with uniform random
/// phase and magnitude `(1 + |k|)^-decay`, modes up to `max_mode`.
pub fn random_band_limited(n: usize, m: usize, period: f64, max_mode: usize, decay: f64, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GridFunction::zeros(n, m, period);
    for c in 0..m {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (i, z) in coeffs.iter_mut().enumerate() {
            let k = spectral::mode_index(i, n).unsigned_abs() as usize;
            if k > max_mode || spectral::is_nyquist(i, n) {
                continue;
            }
            let mag = (1.0 + k as f64).powf(-decay) * rng.random_range(0.5..1.0);
            *z = Complex64::from_polar(mag, rng.random_range(0.0..std::f64::consts::TAU));
        }
        spectral::inverse(&mut coeffs);
        out.set_column(c, &coeffs);
    }
    out
}

#[derive(Debug, Clone)]
struct Bump {
    t: f64,
    x: f64,
    width: f64,
    amp: Vec<Complex64>,
}

/// Finite sum of space-time Gaussians with complex vector amplitudes.
#[derive(Debug, Clone)]
pub struct BumpField {
    m: usize,
    bumps: Vec<Bump>,
}

impl BumpField {
    /// `count` bumps with centres uniform in the given box and widths in
    /// `widths`.
    pub fn random(m: usize, count: usize, t_box: (f64, f64), x_box: (f64, f64), widths: (f64, f64), seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps = (0..count)
            .map(|_| Bump {
                t: rng.random_range(t_box.0..t_box.1),
                x: rng.random_range(x_box.0..x_box.1),
                width: rng.random_range(widths.0..widths.1),
                amp: (0..m)
                    .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect(),
            })
            .collect();
        Self { m, bumps }
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn eval(&self, t: f64, x: f64, out: &mut [Complex64]) {
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for b in &self.bumps {
            let r2 = ((t - b.t).powi(2) + (x - b.x).powi(2)) / (b.width * b.width);
            if r2 > 80.0 {
                continue;
            }
            let g = (-0.5 * r2).exp();
            for (o, a) in out.iter_mut().zip(&b.amp) {
                *o += a * g;
            }
        }
    }

    pub fn sample(&self, st: &Spacetime1D, grid: TimeGrid) -> Result<SpacetimeFunction> {
        SpacetimeFunction::sample(st, grid, self.m, |t, x, out| self.eval(t, x, out))
    }
}
