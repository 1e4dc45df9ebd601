use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Spacetime1D;
use crate::grid::GridFunction;
use crate::spectral::TrigInterpolant;
use crate::stencil;

/// Uniform time grid `t_i = t0 + i dt`, `i = 0..nt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
}

impl TimeGrid {
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.nt - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nt).map(|i| self.time(i))
    }

    /// Index of the sample closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        (((t - self.t0) / self.dt).round().max(0.0) as usize).min(self.nt - 1)
    }

    pub fn contains(&self, t: f64) -> bool {
        let slack = 1e-9 * self.dt;
        t >= self.t0 - slack && t <= self.end() + slack
    }
}

/// Samples of a rank-`m` section on a uniform space-time grid, one
/// [`GridFunction`] per time level. Interpolation is cubic in `t` and
/// trigonometric in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeFunction {
    grid: TimeGrid,
    origin: f64,
    slices: Vec<GridFunction>,
}

impl SpacetimeFunction {
    pub fn new(grid: TimeGrid, origin: f64, slices: Vec<GridFunction>) -> Result<Self> {
        if slices.len() != grid.nt || slices.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "time grid has {} levels but {} slices were given",
                grid.nt,
                slices.len()
            )));
        }
        if !(grid.dt > 0.0) && grid.nt > 1 {
            return Err(Error::InvalidInput(format!("time step must be positive, got {}", grid.dt)));
        }
        let first = &slices[0];
        if slices.iter().any(|s| !s.same_shape(first)) {
            return Err(Error::ShapeMismatch("slices differ in shape".into()));
        }
        if let Some(i) = slices.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteState { t: grid.time(i) });
        }
        Ok(Self {
            grid,
            origin,
            slices,
        })
    }

    /// Samples `f(t, x, out)` at every space-time node of `st`.
    pub fn sample(
        st: &Spacetime1D,
        grid: TimeGrid,
        m: usize,
        f: impl Fn(f64, f64, &mut [Complex64]) + Sync,
    ) -> Result<Self> {
        use rayon::prelude::*;
        let nodes = st.nodes();
        let slices: Vec<GridFunction> = (0..grid.nt)
            .into_par_iter()
            .map(|i| {
                let t = grid.time(i);
                let mut values = vec![Complex64::new(0.0, 0.0); nodes.len() * m];
                for (j, &x) in nodes.iter().enumerate() {
                    f(t, x, &mut values[j * m..(j + 1) * m]);
                }
                GridFunction::new(nodes.len(), m, st.period(), values)
            })
            .collect::<Result<_>>()?;
        Self::new(grid, st.origin(), slices)
    }

    pub fn zeros(st: &Spacetime1D, grid: TimeGrid, m: usize) -> Self {
        Self {
            grid,
            origin: st.origin(),
            slices: vec![st.grid_zeros(m); grid.nt],
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.slices[0].n()
    }

    pub fn rank(&self) -> usize {
        self.slices[0].rank()
    }

    pub fn period(&self) -> f64 {
        self.slices[0].period()
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn slices(&self) -> &[GridFunction] {
        &self.slices
    }

    pub fn slice(&self, i: usize) -> &GridFunction {
        &self.slices[i]
    }

    pub fn into_slices(self) -> Vec<GridFunction> {
        self.slices
    }

    pub fn max_abs(&self) -> f64 {
        self.slices.iter().map(GridFunction::max_abs).fold(0.0, f64::max)
    }

    /// Node-wise linear combination `self + s * other` (same grids).
    pub fn axpy(&self, s: f64, other: &SpacetimeFunction) -> Result<SpacetimeFunction> {
        self.check_compatible(other)?;
        let slices = self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| a.axpy(s, b))
            .collect();
        Ok(Self {
            grid: self.grid,
            origin: self.origin,
            slices,
        })
    }

    pub fn scale(&self, s: f64) -> SpacetimeFunction {
        Self {
            grid: self.grid,
            origin: self.origin,
            slices: self.slices.iter().map(|g| g.scale(s)).collect(),
        }
    }

    pub fn check_compatible(&self, other: &SpacetimeFunction) -> Result<()> {
        if self.grid != other.grid || !self.slices[0].same_shape(&other.slices[0]) {
            return Err(Error::ShapeMismatch("space-time functions live on different grids".into()));
        }
        Ok(())
    }

    /// Cubic Lagrange weights in time at `t`.
    fn time_weights(&self, t: f64, order: usize) -> Result<(usize, Vec<f64>)> {
        if !self.grid.contains(t) {
            return Err(Error::InvalidInput(format!(
                "time {t} outside the sampled range [{}, {}]",
                self.grid.t0,
                self.grid.end()
            )));
        }
        let nt = self.grid.nt;
        if nt < 4 {
            let i = self.grid.nearest(t);
            return Ok((i, vec![if order == 0 { 1.0 } else { 0.0 }]));
        }
        let pos = (t - self.grid.t0) / self.grid.dt;
        let (start, w) = stencil::cubic_weights(pos, nt, order, self.grid.dt);
        Ok((start, w.to_vec()))
    }

    /// The slice at an arbitrary time (cubic interpolation in `t`).
    pub fn slice_at(&self, t: f64) -> Result<GridFunction> {
        self.slice_derivative_at(t, 0)
    }

    /// `∂_t^order` of the cubic time interpolant, `order ≤ 1`.
    pub fn slice_derivative_at(&self, t: f64, order: usize) -> Result<GridFunction> {
        let (start, w) = self.time_weights(t, order)?;
        let mut out = self.slices[start].scale(w[0]);
        for (k, wk) in w.iter().enumerate().skip(1) {
            out = out.axpy(*wk, &self.slices[start + k]);
        }
        Ok(out)
    }

    /// Value at spatial node `j` and time `t`.
    pub fn at_node(&self, t: f64, j: usize) -> Result<Vec<Complex64>> {
        let (start, w) = self.time_weights(t, 0)?;
        let m = self.rank();
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        for (k, wk) in w.iter().enumerate() {
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.slices[start + k].get(j, c) * wk;
            }
        }
        Ok(out)
    }

    /// Value (`x_order = 0`) or x-derivative (`x_order = 1`) at an arbitrary
    /// event.
    pub fn eval(&self, t: f64, x: f64, x_order: u32) -> Result<Vec<Complex64>> {
        let slice = self.slice_at(t)?;
        Ok((0..self.rank())
            .map(|c| TrigInterpolant::new(&slice.column(c), self.origin, self.period()).eval(x, x_order))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_spacetime, Metric, SpacetimeConfig, Topology};
    use std::f64::consts::PI;

    fn circle(n: usize) -> Spacetime1D {
        make_spacetime(&SpacetimeConfig {
            topology: Topology::Circle {
                circumference: 2.0 * PI,
            },
            t_range: [0.0, 2.0],
            metric: Metric::Minkowski,
            n,
        })
        .unwrap()
    }

    #[test]
    fn interpolates_smooth_functions() {
        let st = circle(32);
        let grid = TimeGrid {
            t0: 0.0,
            dt: 0.01,
            nt: 201,
        };
        let f = SpacetimeFunction::sample(&st, grid, 1, |t, x, out| {
            out[0] = Complex64::new(t.cos() * (2.0 * x).sin(), t);
        })
        .unwrap();
        let (t, x) = (0.7331, 1.234);
        let got = f.eval(t, x, 0).unwrap()[0];
        assert!((got - Complex64::new(t.cos() * (2.0 * x).sin(), t)).norm() < 1e-9);
        let dx = f.eval(t, x, 1).unwrap()[0];
        assert!((dx.re - 2.0 * t.cos() * (2.0 * x).cos()).abs() < 1e-9);
        let dt = f.slice_derivative_at(t, 1).unwrap();
        let x3 = st.nodes()[3];
        assert!((dt.get(3, 0).re + t.sin() * (2.0 * x3).sin()).abs() < 1e-6);
        assert!(f.eval(2.5, 0.0, 0).is_err());
    }

    #[test]
    fn rejects_mismatched_slices() {
        let st = circle(8);
        let grid = TimeGrid {
            t0: 0.0,
            dt: 0.1,
            nt: 3,
        };
        assert!(SpacetimeFunction::new(grid, 0.0, vec![st.grid_zeros(1); 2]).is_err());
        let mut slices = vec![st.grid_zeros(1); 3];
        slices[1] = st.grid_zeros(2);
        assert!(SpacetimeFunction::new(grid, 0.0, slices).is_err());
    }
}
