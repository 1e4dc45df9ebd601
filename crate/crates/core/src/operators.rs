//! Wave operators `P = □ + Z⁰∂_t + Z¹∂_x + C` acting on `ℂ^m`-valued
//! sections, where `□` is the d'Alembertian of `-β dt² + a² dx²`:
//!
//! `□w = β⁻¹ w_tt + γ w_t - (√β a)⁻¹ ∂_x((√β/a) w_x)`,
//! `γ = (√β a)⁻¹ ∂_t(a/√β)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::field::SpacetimeFunction;
use crate::geometry::{SliceGeometry, Spacetime1D};
use crate::grid::GridFunction;
use crate::stencil;

/// A complex coefficient `re + i im` given by two real expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexExpr {
    pub re: Expr,
    pub im: Expr,
}

impl ComplexExpr {
    pub fn real(re: Expr) -> Self {
        Self {
            re,
            im: Expr::constant(0.0),
        }
    }

    fn zero() -> Self {
        Self::real(Expr::constant(0.0))
    }

    fn is_zero(&self) -> bool {
        self.re.as_constant() == Some(0.0) && self.im.as_constant() == Some(0.0)
    }

    fn eval(&self, field: &str, t: f64, x: f64) -> Result<Complex64> {
        let ev = |e: &Expr, part: &str| {
            e.eval(t, x).map_err(|source| Error::Evaluation {
                field: format!("{field}.{part}"),
                source,
            })
        };
        Ok(Complex64::new(ev(&self.re, "re")?, ev(&self.im, "im")?))
    }

    fn map(&self, f: impl Fn(Expr) -> Expr) -> Self {
        Self {
            re: f(self.re.clone()),
            im: f(self.im.clone()),
        }
    }

    fn sub(&self, other: &ComplexExpr) -> Self {
        Self {
            re: self.re.clone() - other.re.clone(),
            im: self.im.clone() - other.im.clone(),
        }
    }
}

/// `m × m` matrix of coefficient fields, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    m: usize,
    entries: Vec<ComplexExpr>,
}

impl CoefficientMatrix {
    pub fn zero(m: usize) -> Self {
        Self {
            m,
            entries: vec![ComplexExpr::zero(); m * m],
        }
    }

    pub fn scalar_identity(m: usize, value: f64) -> Self {
        let mut out = Self::zero(m);
        for i in 0..m {
            out.entries[i * m + i] = ComplexExpr::real(Expr::constant(value));
        }
        out
    }

    pub fn from_entries(m: usize, entries: Vec<ComplexExpr>) -> Result<Self> {
        if entries.len() != m * m {
            return Err(Error::ShapeMismatch(format!(
                "coefficient matrix needs {} entries, got {}",
                m * m,
                entries.len()
            )));
        }
        Ok(Self { m, entries })
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> &ComplexExpr {
        &self.entries[row * self.m + col]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(ComplexExpr::is_zero)
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.entries
            .iter()
            .any(|e| e.re.depends_on(v) || e.im.depends_on(v))
    }

    pub fn transpose(&self) -> Self {
        let m = self.m;
        let entries = (0..m * m)
            .map(|k| self.entries[(k % m) * m + k / m].clone())
            .collect();
        Self { m, entries }
    }

    fn map(&self, f: impl Fn(Expr) -> Expr) -> Self {
        Self {
            m: self.m,
            entries: self.entries.iter().map(|e| e.map(&f)).collect(),
        }
    }

    fn sub(&self, other: &CoefficientMatrix) -> Self {
        Self {
            m: self.m,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    /// Row-major values at one event.
    pub fn eval(&self, field: &str, t: f64, x: f64) -> Result<Vec<Complex64>> {
        let m = self.m;
        self.entries
            .iter()
            .enumerate()
            .map(|(k, e)| e.eval(&format!("{field}[{}][{}]", k / m, k % m), t, x))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset {
    Dalembert,
    KleinGordon { mass: f64 },
    Custom,
}

/// Lower-order data of a wave operator. The principal part is always the
/// metric d'Alembertian.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveOperatorSpec {
    m: usize,
    z0: CoefficientMatrix,
    z1: CoefficientMatrix,
    c: CoefficientMatrix,
    preset: Preset,
}

impl WaveOperatorSpec {
    pub fn dalembert(m: usize) -> Self {
        Self {
            m,
            z0: CoefficientMatrix::zero(m),
            z1: CoefficientMatrix::zero(m),
            c: CoefficientMatrix::zero(m),
            preset: Preset::Dalembert,
        }
    }

    /// `□ + μ²`.
    pub fn klein_gordon(m: usize, mass: f64) -> Self {
        Self {
            c: CoefficientMatrix::scalar_identity(m, mass * mass),
            preset: Preset::KleinGordon { mass },
            ..Self::dalembert(m)
        }
    }

    pub fn custom(
        z0: CoefficientMatrix,
        z1: CoefficientMatrix,
        c: CoefficientMatrix,
    ) -> Result<Self> {
        let m = z0.rank();
        if z1.rank() != m || c.rank() != m {
            return Err(Error::ShapeMismatch("coefficient matrices differ in rank".into()));
        }
        Ok(Self {
            m,
            z0,
            z1,
            c,
            preset: Preset::Custom,
        })
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn preset(&self) -> &Preset {
        &self.preset
    }

    pub fn z0(&self) -> &CoefficientMatrix {
        &self.z0
    }

    pub fn z1(&self) -> &CoefficientMatrix {
        &self.z1
    }

    pub fn c(&self) -> &CoefficientMatrix {
        &self.c
    }

    fn time_independent(&self) -> bool {
        !self.z0.depends_on(Var::T) && !self.z1.depends_on(Var::T) && !self.c.depends_on(Var::T)
    }

    /// Checks that every coefficient evaluates finitely on the space-time
    /// grid of `st` (time spacing comparable to the node spacing).
    pub fn check_on(&self, st: &Spacetime1D) -> Result<()> {
        let [t0, t1] = st.t_range();
        let steps = ((t1 - t0) / st.spacing()).ceil().max(1.0) as usize;
        for i in 0..=steps {
            let t = t0 + (t1 - t0) * i as f64 / steps as f64;
            CoefficientSlice::new(self, st, t)?;
        }
        Ok(())
    }

    /// Coefficients sampled at one event, row-major.
    pub fn coefficients_at(&self, t: f64, x: f64) -> Result<[Vec<Complex64>; 3]> {
        Ok([
            self.z0.eval("Z0", t, x)?,
            self.z1.eval("Z1", t, x)?,
            self.c.eval("C", t, x)?,
        ])
    }
}

/// Coefficient values on one slice (`None` for identically zero matrices).
#[derive(Debug, Clone)]
pub(crate) struct CoefficientSlice {
    m: usize,
    z0: Option<Vec<Complex64>>,
    z1: Option<Vec<Complex64>>,
    c: Option<Vec<Complex64>>,
}

impl CoefficientSlice {
    pub(crate) fn new(op: &WaveOperatorSpec, st: &Spacetime1D, t: f64) -> Result<Self> {
        let sample = |mat: &CoefficientMatrix, name: &str| -> Result<Option<Vec<Complex64>>> {
            if mat.is_zero() {
                return Ok(None);
            }
            let mut out = Vec::with_capacity(st.n() * op.m * op.m);
            for &x in st.nodes() {
                out.extend(mat.eval(name, t, x)?);
            }
            Ok(Some(out))
        };
        Ok(Self {
            m: op.m,
            z0: sample(&op.z0, "Z0")?,
            z1: sample(&op.z1, "Z1")?,
            c: sample(&op.c, "C")?,
        })
    }

    fn add_product(&self, mat: &Option<Vec<Complex64>>, w: &GridFunction, out: &mut GridFunction) {
        let Some(mat) = mat else { return };
        let m = self.m;
        let values = out.values_mut();
        for j in 0..w.n() {
            let block = &mat[j * m * m..(j + 1) * m * m];
            for r in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..m {
                    acc += block[r * m + c] * w.get(j, c);
                }
                values[j * m + r] += acc;
            }
        }
    }
}

/// `(√β a)⁻¹ ∂_x((√β/a) ∂_x u)`, the spatial part of `-□`.
fn spatial_part(geom: &SliceGeometry, u_x: &GridFunction) -> GridFunction {
    let inv_vol: Vec<f64> = geom.vol.iter().map(|v| 1.0 / v).collect();
    u_x.weighted(&geom.speed).dx().weighted(&inv_vol)
}

/// Pw on one slice from the time derivatives `w_t`, `w_tt` and `w`.
fn apply_on_slice(
    geom: &SliceGeometry,
    coeffs: &CoefficientSlice,
    w: &GridFunction,
    w_t: &GridFunction,
    w_tt: &GridFunction,
) -> GridFunction {
    let w_x = w.dx();
    let inv_beta: Vec<f64> = geom.beta.iter().map(|b| 1.0 / b).collect();
    let mut out = w_tt.weighted(&inv_beta);
    out = out.axpy(1.0, &w_t.weighted(&geom.gamma));
    out = out.axpy(-1.0, &spatial_part(geom, &w_x));
    coeffs.add_product(&coeffs.z0, w_t, &mut out);
    coeffs.add_product(&coeffs.z1, &w_x, &mut out);
    coeffs.add_product(&coeffs.c, w, &mut out);
    out
}

/// Minimum number of time levels for the fourth-order time differences.
pub const MIN_TIME_LEVELS: usize = 5;

/// `Pw` on the space-time grid of `w`: spectral in `x`, fourth-order finite
/// differences in `t` (one-sided at the ends of the time grid).
pub fn apply_p(
    op: &WaveOperatorSpec,
    st: &Spacetime1D,
    w: &SpacetimeFunction,
) -> Result<SpacetimeFunction> {
    let grid = w.grid();
    if grid.nt < MIN_TIME_LEVELS {
        return Err(Error::GridTooCoarseInTime {
            nt: grid.nt,
            required: MIN_TIME_LEVELS,
        });
    }
    if w.n() != st.n() || w.rank() != op.m {
        return Err(Error::ShapeMismatch(format!(
            "operator of rank {} on {} nodes applied to a section of rank {} on {} nodes",
            op.m,
            st.n(),
            w.rank(),
            w.n()
        )));
    }
    let slices = w.slices();
    let out: Vec<GridFunction> = (0..grid.nt)
        .into_par_iter()
        .map(|i| {
            let t = grid.time(i);
            let geom = st.slice(t)?;
            let coeffs = CoefficientSlice::new(op, st, t)?;
            let (s1, d1) = stencil::derivative_stencil(i, grid.nt, 1, grid.dt);
            let (s2, d2) = stencil::derivative_stencil(i, grid.nt, 2, grid.dt);
            let combine = |start: usize, weights: &[f64]| {
                let mut acc = slices[start].scale(weights[0]);
                for (k, wk) in weights.iter().enumerate().skip(1) {
                    acc = acc.axpy(*wk, &slices[start + k]);
                }
                acc
            };
            let w_t = combine(s1, &d1);
            let w_tt = combine(s2, &d2);
            Ok(apply_on_slice(&geom, &coeffs, &slices[i], &w_t, &w_tt))
        })
        .collect::<Result<_>>()?;
    SpacetimeFunction::new(grid, w.origin(), out)
}

/// Pointwise derivatives of a section at one event.
#[derive(Debug, Clone)]
pub struct Jet {
    pub w: Vec<Complex64>,
    pub w_t: Vec<Complex64>,
    pub w_tt: Vec<Complex64>,
    pub w_x: Vec<Complex64>,
    pub w_xx: Vec<Complex64>,
}

/// `Pw(t, x)` from an exact jet, using the symbolic metric derivatives.
pub fn apply_p_at(op: &WaveOperatorSpec, st: &Spacetime1D, t: f64, x: f64, jet: &Jet) -> Result<Vec<Complex64>> {
    let p = st.point(t, x)?;
    let [z0, z1, c] = op.coefficients_at(t, x)?;
    let m = op.m;
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for r in 0..m {
        let mut acc = jet.w_tt[r] / p.beta + jet.w_t[r] * p.gamma
            - (jet.w_x[r] * p.speed_dx + jet.w_xx[r] * p.speed) / p.vol;
        for k in 0..m {
            acc += z0[r * m + k] * jet.w_t[k] + z1[r * m + k] * jet.w_x[k] + c[r * m + k] * jet.w[k];
        }
        out[r] = acc;
    }
    Ok(out)
}

/// The formal dual with respect to `∫ ψᵀ(Pu) dV`, `dV = √β a dt dx`:
/// `Z⁰† = -Z⁰ᵀ`, `Z¹† = -Z¹ᵀ`,
/// `C† = Cᵀ - (√β a)⁻¹ [∂_t(√β a Z⁰ᵀ) + ∂_x(√β a Z¹ᵀ)]`.
pub fn dual_operator(op: &WaveOperatorSpec, st: &Spacetime1D) -> WaveOperatorSpec {
    let vol = st.vol_expr().clone();
    let z0t = op.z0.transpose();
    let z1t = op.z1.transpose();
    let flux_t = z0t.map(|e| (vol.clone() * e).derivative(Var::T));
    let flux_x = z1t.map(|e| (vol.clone() * e).derivative(Var::X));
    let correction = CoefficientMatrix {
        m: op.m,
        entries: flux_t
            .entries
            .iter()
            .zip(&flux_x.entries)
            .map(|(a, b)| ComplexExpr {
                re: (a.re.clone() + b.re.clone()) / vol.clone(),
                im: (a.im.clone() + b.im.clone()) / vol.clone(),
            })
            .collect(),
    };
    WaveOperatorSpec {
        m: op.m,
        z0: z0t.map(|e| -e),
        z1: z1t.map(|e| -e),
        c: op.c.transpose().sub(&correction),
        preset: op.preset.clone(),
    }
}

/// `(∫ ψᵀ(Pu) dV, ∫ (P†ψ)ᵀ u dV)` by the trapezoid rule in `t` and `x`.
pub fn duality_pairing(
    op: &WaveOperatorSpec,
    st: &Spacetime1D,
    u: &SpacetimeFunction,
    psi: &SpacetimeFunction,
) -> Result<(Complex64, Complex64)> {
    u.check_compatible(psi)?;
    let pu = apply_p(op, st, u)?;
    let dual_psi = apply_p(&dual_operator(op, st), st, psi)?;
    let grid = u.grid();
    let m = op.m;
    let mut lhs = Complex64::new(0.0, 0.0);
    let mut rhs = Complex64::new(0.0, 0.0);
    for i in 0..grid.nt {
        let t = grid.time(i);
        let weight = if i == 0 || i + 1 == grid.nt { 0.5 } else { 1.0 };
        let vol = st.slice(t)?.vol;
        for (j, dv) in vol.iter().enumerate() {
            for c in 0..m {
                lhs += psi.slice(i).get(j, c) * pu.slice(i).get(j, c) * (weight * dv);
                rhs += dual_psi.slice(i).get(j, c) * u.slice(i).get(j, c) * (weight * dv);
            }
        }
    }
    let cell = grid.dt * st.spacing();
    Ok((lhs * cell, rhs * cell))
}

/// Observed behaviour of `λ⁻² P(e^{iλφ} u₀)` for a linear phase
/// `φ = ωt + ξx`.
#[derive(Debug, Clone, Serialize)]
pub struct PrincipalSymbolReport {
    pub covector: (f64, f64),
    pub event: (f64, f64),
    pub lambdas: Vec<f64>,
    /// `|λ⁻² e^{-iλφ} P(e^{iλφ}u₀) - expected|` per λ.
    pub errors: Vec<f64>,
    /// Richardson extrapolation in `1/λ` over the finest three λ.
    pub limit: Vec<(f64, f64)>,
    /// `(-ω²/β + ξ²/a²) u₀`.
    pub expected: Vec<(f64, f64)>,
    pub limit_error: f64,
}

pub const SYMBOL_LAMBDAS: [f64; 4] = [8.0, 16.0, 32.0, 64.0];

pub fn principal_symbol_check(
    op: &WaveOperatorSpec,
    st: &Spacetime1D,
    covector: (f64, f64),
    event: (f64, f64),
    u0: &[Complex64],
) -> Result<PrincipalSymbolReport> {
    let (omega, xi) = covector;
    if omega == 0.0 && xi == 0.0 {
        return Err(Error::InvalidInput("phase covector must be nonzero".into()));
    }
    if u0.len() != op.m {
        return Err(Error::ShapeMismatch(format!("u0 has {} components, operator rank is {}", u0.len(), op.m)));
    }
    let (t, x) = event;
    let p = st.point(t, x)?;
    let symbol = -omega * omega / p.beta + xi * xi / (p.a * p.a);
    let expected: Vec<Complex64> = u0.iter().map(|z| z * symbol).collect();
    let i = Complex64::new(0.0, 1.0);
    let mut scaled = Vec::new();
    for lambda in SYMBOL_LAMBDAS {
        // The common phase factor e^{iλφ} cancels; the jet is that of the
        // amplitude times the phase derivatives.
        let jet = Jet {
            w: u0.to_vec(),
            w_t: u0.iter().map(|z| z * i * (lambda * omega)).collect(),
            w_tt: u0.iter().map(|z| z * -(lambda * omega).powi(2)).collect(),
            w_x: u0.iter().map(|z| z * i * (lambda * xi)).collect(),
            w_xx: u0.iter().map(|z| z * -(lambda * xi).powi(2)).collect(),
        };
        let pw = apply_p_at(op, st, t, x, &jet)?;
        scaled.push(pw.into_iter().map(|z| z / (lambda * lambda)).collect::<Vec<_>>());
    }
    let dist = |a: &[Complex64], b: &[Complex64]| {
        a.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt()
    };
    let errors = scaled.iter().map(|s| dist(s, &expected)).collect();
    // The scaled value is exactly quadratic in 1/λ, so two Richardson
    // levels over the finest three λ recover the limit.
    let k = scaled.len();
    let level1 = |fine: &[Complex64], coarse: &[Complex64]| -> Vec<Complex64> {
        fine.iter().zip(coarse).map(|(f, c)| f * 2.0 - c).collect()
    };
    let r_fine = level1(&scaled[k - 1], &scaled[k - 2]);
    let r_coarse = level1(&scaled[k - 2], &scaled[k - 3]);
    let limit: Vec<Complex64> = r_fine
        .iter()
        .zip(&r_coarse)
        .map(|(f, c)| (f * 4.0 - c) / 3.0)
        .collect();
    let pairs = |v: &[Complex64]| v.iter().map(|z| (z.re, z.im)).collect();
    Ok(PrincipalSymbolReport {
        covector,
        event,
        lambdas: SYMBOL_LAMBDAS.to_vec(),
        errors,
        limit_error: dist(&limit, &expected),
        limit: pairs(&limit),
        expected: pairs(&expected),
    })
}

/// Evaluates the first-order form of `Pu = f` on slices, caching the
/// geometry when nothing depends on `t`.
pub(crate) struct RhsEvaluator<'a> {
    op: &'a WaveOperatorSpec,
    st: &'a Spacetime1D,
    cached: Option<(SliceGeometry, CoefficientSlice)>,
}

impl<'a> RhsEvaluator<'a> {
    pub(crate) fn new(op: &'a WaveOperatorSpec, st: &'a Spacetime1D) -> Result<Self> {
        let static_metric = !st.beta_expr().depends_on(Var::T) && !st.a_expr().depends_on(Var::T);
        let cached = if static_metric && op.time_independent() {
            let t = st.t_range()[0];
            Some((st.slice(t)?, CoefficientSlice::new(op, st, t)?))
        } else {
            None
        };
        Ok(Self { op, st, cached })
    }

    pub(crate) fn eval(
        &self,
        s: f64,
        u: &GridFunction,
        v: &GridFunction,
        f: Option<&GridFunction>,
    ) -> Result<(GridFunction, GridFunction)> {
        let fresh;
        let (geom, coeffs) = match &self.cached {
            Some((g, c)) => (g, c),
            None => {
                fresh = (self.st.slice(s)?, CoefficientSlice::new(self.op, self.st, s)?);
                (&fresh.0, &fresh.1)
            }
        };
        let u_x = u.dx();
        let mut acc = spatial_part(geom, &u_x);
        if let Some(f) = f {
            acc = acc.axpy(1.0, f);
        }
        acc = acc.axpy(-1.0, &v.weighted(&geom.gamma));
        let mut lower = GridFunction::zeros(u.n(), u.rank(), u.period());
        coeffs.add_product(&coeffs.z0, v, &mut lower);
        coeffs.add_product(&coeffs.z1, &u_x, &mut lower);
        coeffs.add_product(&coeffs.c, u, &mut lower);
        let dv = acc.axpy(-1.0, &lower).weighted(&geom.beta);
        Ok((v.clone(), dv))
    }
}

/// `(∂_t u, ∂_t v)` for the first-order system equivalent to `Pu = f`:
/// `du = v`, `dv = β[f - γv - Z⁰v - Z¹u_x - Cu + (√β a)⁻¹ ∂_x((√β/a) u_x)]`.
pub fn first_order_rhs(
    op: &WaveOperatorSpec,
    st: &Spacetime1D,
    s: f64,
    u: &GridFunction,
    v: &GridFunction,
    f_s: &GridFunction,
) -> Result<(GridFunction, GridFunction)> {
    if !u.same_shape(v) || !u.same_shape(f_s) || u.n() != st.n() || u.rank() != op.m {
        return Err(Error::ShapeMismatch("first-order system arguments differ in shape".into()));
    }
    RhsEvaluator {
        op,
        st,
        cached: None,
    }
    .eval(s, u, v, Some(f_s))
}

/// Entry of a coefficient matrix in a configuration file: a number, a real
/// expression, or a `[re, im]` pair of expressions.
#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum EntrySource {
    Number(f64),
    Real(String),
    Complex([String; 2]),
}

fn default_rank() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    Dalembert {
        #[serde(default = "default_rank")]
        rank: usize,
    },
    KleinGordon {
        mass: f64,
        #[serde(default = "default_rank")]
        rank: usize,
    },
    Custom {
        rank: usize,
        #[serde(default)]
        z0: Option<Vec<Vec<EntrySource>>>,
        #[serde(default)]
        z1: Option<Vec<Vec<EntrySource>>>,
        #[serde(default)]
        c: Option<Vec<Vec<EntrySource>>>,
    },
}

fn parse_field(src: &str, field: String) -> Result<Expr> {
    Expr::parse(src).map_err(|source| Error::ExpressionParse { field, source })
}

fn matrix_from_config(
    rows: &Option<Vec<Vec<EntrySource>>>,
    m: usize,
    name: &str,
) -> Result<CoefficientMatrix> {
    let Some(rows) = rows else {
        return Ok(CoefficientMatrix::zero(m));
    };
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(Error::ShapeMismatch(format!("operator.{name} must be a {m}x{m} matrix")));
    }
    let mut entries = Vec::with_capacity(m * m);
    for (r, row) in rows.iter().enumerate() {
        for (c, entry) in row.iter().enumerate() {
            let path = format!("operator.{name}[{r}][{c}]");
            entries.push(match entry {
                EntrySource::Number(v) => ComplexExpr::real(Expr::constant(*v)),
                EntrySource::Real(src) => ComplexExpr::real(parse_field(src, path)?),
                EntrySource::Complex([re, im]) => ComplexExpr {
                    re: parse_field(re, format!("{path}[0]"))?,
                    im: parse_field(im, format!("{path}[1]"))?,
                },
            });
        }
    }
    CoefficientMatrix::from_entries(m, entries)
}

impl OperatorConfig {
    pub fn build(&self) -> Result<WaveOperatorSpec> {
        let check_rank = |rank: usize| {
            if rank == 0 {
                Err(Error::InvalidInput("operator rank must be positive".into()))
            } else {
                Ok(())
            }
        };
        match self {
            OperatorConfig::Dalembert { rank } => {
                check_rank(*rank)?;
                Ok(WaveOperatorSpec::dalembert(*rank))
            }
            OperatorConfig::KleinGordon { mass, rank } => {
                check_rank(*rank)?;
                Ok(WaveOperatorSpec::klein_gordon(*rank, *mass))
            }
            OperatorConfig::Custom { rank, z0, z1, c } => {
                check_rank(*rank)?;
                WaveOperatorSpec::custom(
                    matrix_from_config(z0, *rank, "z0")?,
                    matrix_from_config(z1, *rank, "z1")?,
                    matrix_from_config(c, *rank, "c")?,
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TimeGrid;
    use crate::geometry::{make_spacetime, Metric, SpacetimeConfig, Topology};
    use std::f64::consts::PI;

    fn circle(beta: &str, a: &str, n: usize) -> Spacetime1D {
        make_spacetime(&SpacetimeConfig {
            topology: Topology::Circle {
                circumference: 2.0 * PI,
            },
            t_range: [0.0, 1.0],
            metric: Metric::Custom {
                beta: beta.into(),
                a: a.into(),
            },
            n,
        })
        .unwrap()
    }

    fn grid(nt: usize, dt: f64) -> TimeGrid {
        TimeGrid { t0: 0.0, dt, nt }
    }

    #[test]
    fn standing_wave_is_annihilated() {
        let st = circle("1", "1", 32);
        let w = SpacetimeFunction::sample(&st, grid(41, 0.025), 1, |t, x, o| {
            o[0] = Complex64::new(t.cos() * x.cos(), 0.0)
        })
        .unwrap();
        let pw = apply_p(&WaveOperatorSpec::dalembert(1), &st, &w).unwrap();
        assert!(pw.max_abs() < 1e-5);
        let interior = (2..39).map(|i| pw.slice(i).max_abs()).fold(0.0, f64::max);
        assert!(interior < 2e-7, "{interior}");
    }

    #[test]
    fn klein_gordon_plane_wave_and_constant() {
        let st = circle("1", "1", 32);
        let mu: f64 = 0.8;
        let omega = (1.0 + mu * mu).sqrt();
        let op = WaveOperatorSpec::klein_gordon(1, mu);
        let w = SpacetimeFunction::sample(&st, grid(41, 0.01), 1, |t, x, o| {
            o[0] = Complex64::from_polar(1.0, omega * t + x)
        })
        .unwrap();
        let pw = apply_p(&op, &st, &w).unwrap();
        let interior = (2..39)
            .map(|i| pw.slice(i).max_abs())
            .fold(0.0, f64::max);
        assert!(interior < 1e-7, "{interior}");
        let one = SpacetimeFunction::sample(&st, grid(6, 0.1), 1, |_, _, o| o[0] = Complex64::new(1.0, 0.0))
            .unwrap();
        let p1 = apply_p(&op, &st, &one).unwrap();
        for s in p1.slices() {
            for z in s.values() {
                assert!((z - mu * mu).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn too_few_time_levels() {
        let st = circle("1", "1", 8);
        let w = SpacetimeFunction::zeros(&st, grid(4, 0.1), 1);
        assert!(matches!(
            apply_p(&WaveOperatorSpec::dalembert(1), &st, &w),
            Err(Error::GridTooCoarseInTime { nt: 4, required: 5 })
        ));
    }

    #[test]
    fn presets_are_self_dual() {
        let st = circle("1 + 0.3*sin(x)", "1 + 0.1*cos(t)", 16);
        for op in [WaveOperatorSpec::dalembert(2), WaveOperatorSpec::klein_gordon(1, 1.5)] {
            assert_eq!(dual_operator(&op, &st), op);
        }
    }

    #[test]
    fn dual_is_an_involution() {
        let st = circle("1 + 0.3*sin(x)", "1 + 0.1*cos(t)", 16);
        let parse = |s: &str| ComplexExpr::real(Expr::parse(s).unwrap());
        let z0 = CoefficientMatrix::from_entries(
            2,
            vec![parse("0.3*t"), parse("sin(x)"), parse("1"), ComplexExpr {
                re: Expr::parse("x").unwrap(),
                im: Expr::parse("t*x").unwrap(),
            }],
        )
        .unwrap();
        let z1 = CoefficientMatrix::from_entries(2, vec![parse("cos(t+x)"), parse("0"), parse("t"), parse("2")]).unwrap();
        let c = CoefficientMatrix::scalar_identity(2, 0.5);
        let op = WaveOperatorSpec::custom(z0, z1, c).unwrap();
        let twice = dual_operator(&dual_operator(&op, &st), &st);
        for (t, x) in [(0.1, 0.2), (0.7, 4.0), (0.95, 6.0)] {
            let a = op.coefficients_at(t, x).unwrap();
            let b = twice.coefficients_at(t, x).unwrap();
            for (ma, mb) in a.iter().zip(&b) {
                for (p, q) in ma.iter().zip(mb) {
                    assert!((p - q).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn principal_symbol_examples() {
        let u0 = [Complex64::new(1.0, 0.0)];
        let flat = circle("1", "1", 8);
        let op = WaveOperatorSpec::klein_gordon(1, 2.0);
        let null = principal_symbol_check(&op, &flat, (1.0, 1.0), (0.3, 0.4), &u0).unwrap();
        assert!(null.limit_error < 1e-12);
        let time = principal_symbol_check(&op, &flat, (1.0, 0.0), (0.3, 0.4), &u0).unwrap();
        assert!((time.expected[0].0 + 1.0).abs() < 1e-15);
        let fast = circle("4", "1", 8);
        let r = principal_symbol_check(&WaveOperatorSpec::dalembert(1), &fast, (1.0, 1.0), (0.3, 0.4), &u0).unwrap();
        assert!((r.expected[0].0 - 0.75).abs() < 1e-15);
        assert!(r.limit_error < 1e-12);
    }

    #[test]
    fn first_order_rhs_examples() {
        let st = circle("1", "1", 16);
        let op = WaveOperatorSpec::dalembert(1);
        let cos = GridFunction::from_fn(16, 1, 2.0 * PI, |j, _| Complex64::new(st.nodes()[j].cos(), 0.0));
        let zero = st.grid_zeros(1);
        let (du, dv) = first_order_rhs(&op, &st, 0.0, &cos, &zero, &zero).unwrap();
        assert_eq!(du, zero);
        for (a, b) in dv.values().iter().zip(cos.values()) {
            assert!((a + b).norm() < 1e-13);
        }
        let fast = circle("2 + sin(x)", "1", 16);
        let (_, dv) = first_order_rhs(&op, &fast, 0.0, &zero, &zero, &cos).unwrap();
        for (j, z) in dv.values().iter().enumerate() {
            let x = fast.nodes()[j];
            assert!((z.re - (2.0 + x.sin()) * x.cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn custom_config_reports_field_paths() {
        let cfg: OperatorConfig = serde_json::from_str(
            r#"{"preset": "custom", "rank": 1, "c": [["sin("]]}"#,
        )
        .unwrap();
        match cfg.build() {
            Err(Error::ExpressionParse { field, .. }) => assert_eq!(field, "operator.c[0][0]"),
            other => panic!("unexpected {other:?}"),
        }
        let cfg: OperatorConfig = serde_json::from_str(
            r#"{"preset": "custom", "rank": 2, "z0": [[0.5, "t"], [["1", "x"], "0"]]}"#,
        )
        .unwrap();
        let op = cfg.build().unwrap();
        let [z0, _, _] = op.coefficients_at(2.0, 3.0).unwrap();
        assert_eq!(z0, vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 3.0),
            Complex64::new(0.0, 0.0)
        ]);
    }
}
