use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral;

/// Samples of a rank-`m` section on the `n` uniform nodes of one slice,
/// stored node-major (`values[j * m + c]`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    n: usize,
    m: usize,
    period: f64,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(n: usize, m: usize, period: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != n * m {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for {n} nodes of rank {m}, got {}",
                n * m,
                values.len()
            )));
        }
        if let Some(j) = values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite grid value at node {}",
                j / m.max(1)
            )));
        }
        Ok(Self {
            n,
            m,
            period,
            values,
        })
    }

    pub fn zeros(n: usize, m: usize, period: f64) -> Self {
        Self {
            n,
            m,
            period,
            values: vec![Complex64::new(0.0, 0.0); n * m],
        }
    }

    /// Samples `f(node_index, component)`.
    pub fn from_fn(n: usize, m: usize, period: f64, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(n * m);
        for j in 0..n {
            for c in 0..m {
                values.push(f(j, c));
            }
        }
        Self {
            n,
            m,
            period,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    /// Reference circumference used for the Fourier wavenumbers.
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, node: usize, comp: usize) -> Complex64 {
        self.values[node * self.m + comp]
    }

    pub fn set(&mut self, node: usize, comp: usize, value: Complex64) {
        self.values[node * self.m + comp] = value;
    }

    pub fn column(&self, comp: usize) -> Vec<Complex64> {
        (0..self.n).map(|j| self.get(j, comp)).collect()
    }

    pub fn set_column(&mut self, comp: usize, col: &[Complex64]) {
        for (j, z) in col.iter().enumerate() {
            self.set(j, comp, *z);
        }
    }

    pub fn same_shape(&self, other: &GridFunction) -> bool {
        self.n == other.n && self.m == other.m
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Applies `op` to every component column.
    pub fn map_columns(&self, mut op: impl FnMut(&mut [Complex64])) -> GridFunction {
        let mut out = self.clone();
        let mut col = vec![Complex64::new(0.0, 0.0); self.n];
        for c in 0..self.m {
            for j in 0..self.n {
                col[j] = self.get(j, c);
            }
            op(&mut col);
            out.set_column(c, &col);
        }
        debug_assert!(out.is_finite());
        out
    }

    /// Spectral x-derivative.
    pub fn dx(&self) -> GridFunction {
        let period = self.period;
        self.map_columns(|col| spectral::derivative(col, period))
    }

    pub fn scale(&self, s: f64) -> GridFunction {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z *= s);
        out
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &GridFunction) -> GridFunction {
        debug_assert!(self.same_shape(other));
        let mut out = self.clone();
        for (z, w) in out.values.iter_mut().zip(&other.values) {
            *z += w * s;
        }
        out
    }

    /// Multiplies node `j` by the real weight `w[j]` (all components).
    pub fn weighted(&self, w: &[f64]) -> GridFunction {
        let mut out = self.clone();
        for j in 0..self.n {
            for c in 0..self.m {
                out.values[j * self.m + c] *= w[j];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Mirror image about node 0: node `j` maps to `(n - j) mod n`.
    pub fn mirrored(&self) -> GridFunction {
        GridFunction::from_fn(self.n, self.m, self.period, |j, c| {
            self.get((self.n - j) % self.n, c)
        })
    }
}
