//! Sobolev norms on periodic slices. `D̄^k = (1 - ∂_x²)^{k/2}` acts as the
//! Fourier multiplier `(1 + ξ²)^{k/2}` with wavenumbers taken from the flat
//! reference circumference of the grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Spacetime1D;
use crate::grid::GridFunction;
use crate::spectral;

/// `(1 + ξ²)^{k/2}` applied mode by mode.
pub fn apply_dk(u: &GridFunction, k: f64) -> GridFunction {
    if k == 0.0 {
        return u.clone();
    }
    let period = u.period();
    u.map_columns(|col| spectral::apply_multiplier(col, period, |xi| (1.0 + xi * xi).powf(0.5 * k)))
}

/// Squared `H^k` norm, `‖D̄^k u‖²_{L²}` with the trapezoid rule on the flat
/// slice (evaluated through Parseval).
pub fn sobolev_norm_sq(u: &GridFunction, k: f64) -> f64 {
    let n = u.n();
    let period = u.period();
    let mut total = 0.0;
    for c in 0..u.rank() {
        let mut col = u.column(c);
        spectral::forward(&mut col);
        for (i, z) in col.iter().enumerate() {
            let xi = spectral::wavenumber(i, n, period);
            total += (1.0 + xi * xi).powf(k) * z.norm_sqr();
        }
    }
    total * period / (n as f64 * n as f64)
}

pub fn sobolev_norm(u: &GridFunction, k: f64) -> f64 {
    sobolev_norm_sq(u, k).sqrt()
}

/// Trapezoid L² norm computed directly in physical space.
pub fn l2_norm(u: &GridFunction) -> f64 {
    weighted_l2_norm(u, &vec![1.0; u.n()])
}

/// L² norm with nodal weight `w`, e.g. the induced length element `a(s, x)`.
pub fn weighted_l2_norm(u: &GridFunction, w: &[f64]) -> f64 {
    let m = u.rank();
    let sum: f64 = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, z)| w[i / m] * z.norm_sqr())
        .sum();
    (sum * u.spacing()).sqrt()
}

/// Heat-semigroup mollifier `e^{-ε D̄²}`: multiplier `e^{-ε(1+ξ²)}`.
pub fn mollify(u: &GridFunction, eps: f64) -> Result<GridFunction> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "mollifier parameter must be positive, got {eps}"
        )));
    }
    let period = u.period();
    Ok(u.map_columns(|col| {
        spectral::apply_multiplier(col, period, |xi| (-eps * (1.0 + xi * xi)).exp())
    }))
}

/// The k-energy of a solution on one slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceEnergy {
    pub k: f64,
    pub value: f64,
    /// `(‖u‖²_{H^k}, ‖β^{-1/2} v‖²_{H^{k-1}})`
    pub parts: (f64, f64),
}

/// `E_k = ‖u‖²_{H^k} + ‖β^{-1/2} ∂_t u‖²_{H^{k-1}}` on the slice `t = s`.
pub fn energy_k(
    u: &GridFunction,
    v: &GridFunction,
    st: &Spacetime1D,
    s: f64,
    k: f64,
) -> Result<SliceEnergy> {
    if !u.same_shape(v) || u.n() != st.n() {
        return Err(Error::ShapeMismatch("energy arguments live on different grids".into()));
    }
    let slice = st.slice(s)?;
    let inv_root: Vec<f64> = slice.beta.iter().map(|b| 1.0 / b.sqrt()).collect();
    let position = sobolev_norm_sq(u, k);
    let velocity = sobolev_norm_sq(&v.weighted(&inv_root), k - 1.0);
    Ok(SliceEnergy {
        k,
        value: position + velocity,
        parts: (position, velocity),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_spacetime, Metric, SpacetimeConfig, Topology};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn circle_fn(n: usize, f: impl Fn(f64) -> Complex64) -> GridFunction {
        GridFunction::from_fn(n, 1, 2.0 * PI, |j, _| f(2.0 * PI * j as f64 / n as f64))
    }

    fn minkowski(n: usize) -> Spacetime1D {
        make_spacetime(&SpacetimeConfig {
            topology: Topology::Circle {
                circumference: 2.0 * PI,
            },
            t_range: [0.0, 1.0],
            metric: Metric::Minkowski,
            n,
        })
        .unwrap()
    }

    #[test]
    fn constants_are_fixed_by_every_power() {
        let u = circle_fn(32, |_| Complex64::new(2.5, -1.0));
        for k in [-1.5, 0.0, 0.7, 3.0] {
            let d = apply_dk(&u, k);
            for (a, b) in d.values().iter().zip(u.values()) {
                assert!((a - b).norm() < 1e-13);
            }
            let expected = u.get(0, 0).norm() * (2.0 * PI).sqrt();
            assert!((sobolev_norm(&u, k) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_multiplier() {
        let u = circle_fn(32, |x| Complex64::from_polar(1.0, 3.0 * x));
        let d = apply_dk(&u, 2.0);
        for (a, b) in d.values().iter().zip(u.values()) {
            assert!((a - b * 10.0).norm() < 1e-12);
        }
        let e = circle_fn(32, |x| Complex64::from_polar(1.0, x));
        assert!((sobolev_norm(&e, 1.0) - (2.0 * PI).sqrt() * 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mollifier_on_single_mode() {
        let e = circle_fn(32, |x| Complex64::from_polar(1.0, x));
        let m = mollify(&e, 1.0).unwrap();
        for (a, b) in m.values().iter().zip(e.values()) {
            assert!((a - b * (-2.0_f64).exp()).norm() < 1e-14);
        }
        assert!(mollify(&e, 0.0).is_err());
    }

    #[test]
    fn mollifier_damps_quarter_band_mode_by_its_multiplier() {
        let n = 64;
        let mode = (n / 4) as f64;
        let u = circle_fn(n, |x| Complex64::new((mode * x).cos(), 0.0));
        let eps = 0.01;
        let m = mollify(&u, eps).unwrap();
        let factor = (-eps * (1.0 + mode * mode)).exp();
        for (a, b) in m.values().iter().zip(u.values()) {
            assert!((a - b * factor).norm() < 1e-14);
        }
    }

    #[test]
    fn energy_examples() {
        let st = minkowski(32);
        let zero = st.grid_zeros(1);
        assert_eq!(energy_k(&zero, &zero, &st, 0.0, 1.0).unwrap().value, 0.0);
        let one = circle_fn(32, |_| Complex64::new(1.0, 0.0));
        let e = energy_k(&zero, &one, &st, 0.0, 1.0).unwrap();
        assert!((e.value - 2.0 * PI).abs() < 1e-12);
        let cos = circle_fn(32, |x| Complex64::new(x.cos(), 0.0));
        let e = energy_k(&cos, &zero, &st, 0.0, 1.0).unwrap();
        assert!((e.value - 2.0 * PI).abs() < 1e-12);
        assert_eq!(e.value, e.parts.0 + e.parts.1);
    }
}
