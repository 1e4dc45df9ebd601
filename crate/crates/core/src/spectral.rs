//! FFT plumbing for periodic grids: wavenumbers, spectral derivatives,
//! Fourier multipliers and trigonometric interpolation.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Signed mode index for FFT bin `i` of an `n`-point transform. The Nyquist
/// bin of an even transform is reported as `+n/2`.
pub fn mode_index(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Angular wavenumber 2πk/L of bin `i`.
pub fn wavenumber(i: usize, n: usize, period: f64) -> f64 {
    2.0 * PI * mode_index(i, n) as f64 / period
}

pub fn is_nyquist(i: usize, n: usize) -> bool {
    n.is_multiple_of(2) && i == n / 2
}

/// Unnormalised forward DFT in place.
pub fn forward(data: &mut [Complex64]) {
    if data.len() > 1 {
        plans(data.len()).0.process(data);
    }
}

/// Inverse DFT in place, normalised by 1/n.
pub fn inverse(data: &mut [Complex64]) {
    let n = data.len();
    if n > 1 {
        plans(n).1.process(data);
    }
    let scale = 1.0 / n as f64;
    for z in data.iter_mut() {
        *z *= scale;
    }
}

/// Applies a real multiplier m(ξ) to every mode.
pub fn apply_multiplier(data: &mut [Complex64], period: f64, multiplier: impl Fn(f64) -> f64) {
    let n = data.len();
    forward(data);
    for (i, z) in data.iter_mut().enumerate() {
        *z *= multiplier(wavenumber(i, n, period));
    }
    inverse(data);
}

/// First spectral derivative; the Nyquist mode is dropped.
pub fn derivative(data: &mut [Complex64], period: f64) {
    let n = data.len();
    forward(data);
    for (i, z) in data.iter_mut().enumerate() {
        if is_nyquist(i, n) {
            *z = Complex64::new(0.0, 0.0);
        } else {
            *z *= Complex64::new(0.0, wavenumber(i, n, period));
        }
    }
    inverse(data);
}

/// Fourier coefficients of a sampled periodic function, prepared for
/// evaluation of the trigonometric interpolant at arbitrary points.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    coeffs: Vec<Complex64>,
    origin: f64,
    period: f64,
}

impl TrigInterpolant {
    pub fn new(samples: &[Complex64], origin: f64, period: f64) -> Self {
        let mut coeffs = samples.to_vec();
        forward(&mut coeffs);
        let n = coeffs.len() as f64;
        for c in coeffs.iter_mut() {
            *c /= n;
        }
        Self {
            coeffs,
            origin,
            period,
        }
    }

    /// Value (`order == 0`) or x-derivative (`order == 1`) of the interpolant.
    /// The Nyquist term is the symmetric cosine, so its derivative vanishes on
    /// the grid nodes, matching [`derivative`].
    pub fn eval(&self, x: f64, order: u32) -> Complex64 {
        let n = self.coeffs.len();
        let y = x - self.origin;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = wavenumber(i, n, self.period);
            if is_nyquist(i, n) {
                let term = match order {
                    0 => (k * y).cos(),
                    _ => -k * (k * y).sin(),
                };
                acc += c * term;
            } else {
                let phase = Complex64::from_polar(1.0, k * y);
                let factor = match order {
                    0 => Complex64::new(1.0, 0.0),
                    _ => Complex64::new(0.0, k),
                };
                acc += c * phase * factor;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(n: usize, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).collect()
    }

    #[test]
    fn derivative_of_single_modes_is_exact() {
        let n = 32;
        let mut u = samples(n, |x| Complex64::new((3.0 * x).sin(), 0.0));
        derivative(&mut u, 2.0 * PI);
        let expected = samples(n, |x| Complex64::new(3.0 * (3.0 * x).cos(), 0.0));
        for (a, b) in u.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn nyquist_mode_has_zero_derivative() {
        let n = 16;
        let mut u = samples(n, |x| Complex64::new((8.0 * x).cos(), 0.0));
        derivative(&mut u, 2.0 * PI);
        assert!(u.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn interpolant_reproduces_band_limited_functions() {
        let n = 16;
        let f = |x: f64| Complex64::new(1.0 + (2.0 * x).cos(), (5.0 * x).sin());
        let df = |x: f64| Complex64::new(-2.0 * (2.0 * x).sin(), 5.0 * (5.0 * x).cos());
        let interp = TrigInterpolant::new(&samples(n, f), 0.0, 2.0 * PI);
        for x in [0.1, 1.7, 4.2, -0.3] {
            assert!((interp.eval(x, 0) - f(x)).norm() < 1e-12);
            assert!((interp.eval(x, 1) - df(x)).norm() < 1e-11);
        }
    }
}
