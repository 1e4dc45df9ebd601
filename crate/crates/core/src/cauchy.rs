//! Method-of-lines Cauchy solver (Fourier in space, classical RK4 in time)
//! and the checks built on it: convergence, finite propagation speed,
//! continuous dependence on data and independence of the time function.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy;
use crate::error::{Error, Result};
use crate::field::{SpacetimeFunction, TimeGrid};
use crate::geometry::{make_spacetime, SpacetimeConfig, Spacetime1D};
use crate::grid::GridFunction;
use crate::operators::{Preset, RhsEvaluator, WaveOperatorSpec};
use crate::sobolev;

/// Time-step selection. `Cfl(c)` uses `dt = c Δx / max(√β/a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtControl {
    Cfl(f64),
    Fixed(f64),
}

impl Default for DtControl {
    fn default() -> Self {
        DtControl::Cfl(0.5)
    }
}

/// Largest admissible fixed step, `Δx / max(√β/a)`.
pub fn cfl_bound(st: &Spacetime1D) -> f64 {
    st.spacing() / st.max_speed()
}

/// The uniform time grid through `tau` used by [`solve_cauchy`], and the
/// index of `tau` in it. The longer side of `t_range` is tiled exactly; the
/// shorter side stops less than one step before its end.
pub fn time_grid(st: &Spacetime1D, tau: f64, control: DtControl) -> Result<(TimeGrid, usize)> {
    let [t0, t1] = st.t_range();
    let slack = 1e-12 * (t1 - t0).abs().max(1.0);
    if !(tau >= t0 - slack && tau <= t1 + slack) {
        return Err(Error::InvalidInput(format!(
            "initial time {tau} outside the time range [{t0}, {t1}]"
        )));
    }
    let bound = cfl_bound(st);
    let target = match control {
        DtControl::Cfl(c) => {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::InvalidInput(format!("cfl must lie in (0, 1], got {c}")));
            }
            c * bound
        }
        DtControl::Fixed(dt) => {
            if !(dt > 0.0) {
                return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
            }
            if dt > bound * (1.0 + 1e-12) {
                return Err(Error::CflViolation { dt, bound });
            }
            dt
        }
    };
    let ahead = (t1 - tau).max(0.0);
    let behind = (tau - t0).max(0.0);
    let longer = ahead.max(behind);
    let dt = if longer > 0.0 {
        longer / (longer / target - 1e-9).ceil().max(1.0)
    } else {
        target
    };
    let forward = (ahead / dt + 1e-9).floor() as usize;
    let backward = (behind / dt + 1e-9).floor() as usize;
    Ok((
        TimeGrid {
            t0: tau - backward as f64 * dt,
            dt,
            nt: backward + forward + 1,
        },
        backward,
    ))
}

/// Data on the slice `t = tau`: position `u0` and unit normal derivative
/// `u1 = β^{-1/2} ∂_t u`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub tau: f64,
    pub u0: GridFunction,
    pub u1: GridFunction,
}

impl CauchyData {
    /// Builds the data from `∂_t u` instead of the normal derivative.
    pub fn from_velocity(st: &Spacetime1D, tau: f64, u0: GridFunction, v0: &GridFunction) -> Result<Self> {
        let inv: Vec<f64> = st.slice(tau)?.beta.iter().map(|b| 1.0 / b.sqrt()).collect();
        Ok(Self {
            tau,
            u1: v0.weighted(&inv),
            u0,
        })
    }

    /// `∂_t u = √β u1` on the initial slice.
    pub fn velocity(&self, st: &Spacetime1D) -> Result<GridFunction> {
        let root: Vec<f64> = st.slice(self.tau)?.beta.iter().map(|b| b.sqrt()).collect();
        Ok(self.u1.weighted(&root))
    }

    pub fn zeros(st: &Spacetime1D, tau: f64, m: usize) -> Self {
        Self {
            tau,
            u0: st.grid_zeros(m),
            u1: st.grid_zeros(m),
        }
    }
}

/// Dense record of `(u, ∂_t u)` on the solver's time grid.
#[derive(Debug, Clone)]
pub struct SpacetimeSolution {
    st: Spacetime1D,
    op: WaveOperatorSpec,
    u: SpacetimeFunction,
    v: SpacetimeFunction,
    source: Option<SpacetimeFunction>,
    tau: f64,
    tau_index: usize,
}

impl SpacetimeSolution {
    pub fn spacetime(&self) -> &Spacetime1D {
        &self.st
    }

    pub fn operator(&self) -> &WaveOperatorSpec {
        &self.op
    }

    pub fn u(&self) -> &SpacetimeFunction {
        &self.u
    }

    pub fn v(&self) -> &SpacetimeFunction {
        &self.v
    }

    pub fn source(&self) -> Option<&SpacetimeFunction> {
        self.source.as_ref()
    }

    pub fn grid(&self) -> TimeGrid {
        self.u.grid()
    }

    pub fn dt(&self) -> f64 {
        self.u.grid().dt
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tau_index(&self) -> usize {
        self.tau_index
    }

    pub fn integrator(&self) -> &'static str {
        "rk4"
    }

    /// `(u, ∂_t u)` on the slice `t` (cubic interpolation between steps).
    pub fn snapshot(&self, t: f64) -> Result<(GridFunction, GridFunction)> {
        Ok((self.u.slice_at(t)?, self.v.slice_at(t)?))
    }
}

fn check_data(op: &WaveOperatorSpec, st: &Spacetime1D, data: &CauchyData) -> Result<()> {
    for (g, name) in [(&data.u0, "u0"), (&data.u1, "u1")] {
        if g.n() != st.n() || g.rank() != op.rank() {
            return Err(Error::ShapeMismatch(format!(
                "{name} has {} nodes of rank {}, expected {} of rank {}",
                g.n(),
                g.rank(),
                st.n(),
                op.rank()
            )));
        }
        st.check_support(g, name)?;
    }
    Ok(())
}

fn check_source(op: &WaveOperatorSpec, st: &Spacetime1D, f: &SpacetimeFunction, grid: TimeGrid) -> Result<()> {
    if f.n() != st.n() || f.rank() != op.rank() {
        return Err(Error::ShapeMismatch("source does not match the operator and grid".into()));
    }
    if !f.grid().contains(grid.t0) || !f.grid().contains(grid.end()) {
        return Err(Error::InvalidInput(format!(
            "source sampled on [{}, {}] does not cover the solve on [{}, {}]",
            f.grid().t0,
            f.grid().end(),
            grid.t0,
            grid.end()
        )));
    }
    let scale = f.max_abs();
    for s in f.slices() {
        st.check_support_scaled(s, scale, "source")?;
    }
    Ok(())
}

/// One classical RK4 step of size `h` (negative for backward evolution).
fn rk4_step(
    rhs: &RhsEvaluator,
    f: Option<&SpacetimeFunction>,
    t: f64,
    h: f64,
    u: &GridFunction,
    v: &GridFunction,
) -> Result<(GridFunction, GridFunction)> {
    let src = |s: f64| f.map(|f| f.slice_at(s)).transpose();
    let (f0, fm, f1) = (src(t)?, src(t + 0.5 * h)?, src(t + h)?);
    let (k1u, k1v) = rhs.eval(t, u, v, f0.as_ref())?;
    let (k2u, k2v) = rhs.eval(t + 0.5 * h, &u.axpy(0.5 * h, &k1u), &v.axpy(0.5 * h, &k1v), fm.as_ref())?;
    let (k3u, k3v) = rhs.eval(t + 0.5 * h, &u.axpy(0.5 * h, &k2u), &v.axpy(0.5 * h, &k2v), fm.as_ref())?;
    let (k4u, k4v) = rhs.eval(t + h, &u.axpy(h, &k3u), &v.axpy(h, &k3v), f1.as_ref())?;
    let combine = |y: &GridFunction, k1: &GridFunction, k2: &GridFunction, k3: &GridFunction, k4: &GridFunction| {
        y.axpy(h / 6.0, k1)
            .axpy(h / 3.0, k2)
            .axpy(h / 3.0, k3)
            .axpy(h / 6.0, k4)
    };
    let u_next = combine(u, &k1u, &k2u, &k3u, &k4u);
    let v_next = combine(v, &k1v, &k2v, &k3v, &k4v);
    if !u_next.is_finite() || !v_next.is_finite() {
        return Err(Error::NonFiniteState { t: t + h });
    }
    Ok((u_next, v_next))
}

/// Solves `Pu = f` with Cauchy data on `t = data.tau`, forward and backward
/// over the whole time range of `st`. `f = None` means no source.
pub fn solve_cauchy(
    op: &WaveOperatorSpec,
    st: &Spacetime1D,
    data: &CauchyData,
    f: Option<&SpacetimeFunction>,
    control: DtControl,
) -> Result<SpacetimeSolution> {
    let (grid, k0) = time_grid(st, data.tau, control)?;
    solve_cauchy_on_grid(op, st, data, f, grid, k0)
}

/// As [`solve_cauchy`] on a caller-supplied uniform grid whose level `k0`
/// is the initial time `data.tau`.
pub fn solve_cauchy_on_grid(
    op: &WaveOperatorSpec,
    st: &Spacetime1D,
    data: &CauchyData,
    f: Option<&SpacetimeFunction>,
    grid: TimeGrid,
    k0: usize,
) -> Result<SpacetimeSolution> {
    check_data(op, st, data)?;
    let [t0, t1] = st.t_range();
    let slack = 1e-9 * grid.dt;
    if k0 >= grid.nt || (grid.time(k0) - data.tau).abs() > slack {
        return Err(Error::InvalidInput(format!("initial time {} is not level {k0} of the grid", data.tau)));
    }
    if grid.t0 < t0 - slack || grid.end() > t1 + slack {
        return Err(Error::InvalidInput(format!(
            "time grid [{}, {}] leaves the time range [{t0}, {t1}]",
            grid.t0,
            grid.end()
        )));
    }
    let bound = cfl_bound(st);
    if grid.dt > bound * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt: grid.dt, bound });
    }
    if let Some(f) = f {
        check_source(op, st, f, grid)?;
    }
    let rhs = RhsEvaluator::new(op, st)?;
    let mut us: Vec<Option<GridFunction>> = vec![None; grid.nt];
    let mut vs: Vec<Option<GridFunction>> = vec![None; grid.nt];
    us[k0] = Some(data.u0.clone());
    vs[k0] = Some(data.velocity(st)?);
    for i in k0..grid.nt - 1 {
        let (u, v) = (us[i].as_ref().unwrap(), vs[i].as_ref().unwrap());
        let (u1, v1) = rk4_step(&rhs, f, grid.time(i), grid.dt, u, v)?;
        us[i + 1] = Some(u1);
        vs[i + 1] = Some(v1);
    }
    for i in (1..=k0).rev() {
        let (u, v) = (us[i].as_ref().unwrap(), vs[i].as_ref().unwrap());
        let (u1, v1) = rk4_step(&rhs, f, grid.time(i), -grid.dt, u, v)?;
        us[i - 1] = Some(u1);
        vs[i - 1] = Some(v1);
    }
    let collect = |xs: Vec<Option<GridFunction>>| -> Result<SpacetimeFunction> {
        SpacetimeFunction::new(grid, st.origin(), xs.into_iter().map(Option::unwrap).collect())
    };
    Ok(SpacetimeSolution {
        st: st.clone(),
        op: op.clone(),
        u: collect(us)?,
        v: collect(vs)?,
        source: f.cloned(),
        tau: data.tau,
        tau_index: k0,
    })
}

/// Closed-form solution used as a convergence reference: fills `u` and
/// `∂_t u` at `(t, x)`.
pub type ExactSolution = dyn Fn(f64, f64, &mut [Complex64], &mut [Complex64]) + Sync;

fn sample_exact(st: &Spacetime1D, m: usize, t: f64, exact: &ExactSolution) -> (GridFunction, GridFunction) {
    let mut u = st.grid_zeros(m);
    let mut v = st.grid_zeros(m);
    let mut bu = vec![Complex64::new(0.0, 0.0); m];
    let mut bv = vec![Complex64::new(0.0, 0.0); m];
    for (j, &x) in st.nodes().iter().enumerate() {
        exact(t, x, &mut bu, &mut bv);
        for c in 0..m {
            u.set(j, c, bu[c]);
            v.set(j, c, bv[c]);
        }
    }
    (u, v)
}

/// A problem with known solution, solved from `t_range[0]` to `t_range[1]`.
#[derive(Debug, Clone)]
pub struct ConvergenceSetup {
    pub spacetime: SpacetimeConfig,
    pub op: WaveOperatorSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelError {
    pub n: usize,
    pub dt: f64,
    /// Max-norm error of `u` on the final slice.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub spatial: Vec<LevelError>,
    /// `error(N) / error(2N)`; NaN when both errors vanish.
    pub spatial_ratios: Vec<f64>,
    pub temporal: Vec<LevelError>,
    /// `log(error(dt) / error(dt')) / log(dt / dt')` against the exact solution.
    pub temporal_orders: Vec<f64>,
    /// Observed order from successive differences of the first three time
    /// steps, without reference to the exact solution.
    pub richardson_order: f64,
}

fn final_slice(
    setup: &ConvergenceSetup,
    exact: &ExactSolution,
    n: usize,
    dt: f64,
) -> Result<(GridFunction, GridFunction, TimeGrid)> {
    let st = make_spacetime(&SpacetimeConfig {
        n,
        ..setup.spacetime.clone()
    })?;
    let m = setup.op.rank();
    let tau = st.t_range()[0];
    let (u0, v0) = sample_exact(&st, m, tau, exact);
    let data = CauchyData::from_velocity(&st, tau, u0, &v0)?;
    let sol = solve_cauchy(&setup.op, &st, &data, None, DtControl::Fixed(dt))?;
    let grid = sol.grid();
    let last = sol.u().slice(grid.nt - 1).clone();
    let (reference, _) = sample_exact(&st, m, grid.end(), exact);
    Ok((last, reference, grid))
}

/// Spatial study at fixed tiny `spatial_dt` over `resolutions`, and temporal
/// study at `temporal_n` nodes over the steps `dts` (each half the previous).
pub fn convergence_study(
    setup: &ConvergenceSetup,
    exact: &ExactSolution,
    resolutions: &[usize],
    spatial_dt: f64,
    temporal_n: usize,
    dts: &[f64],
) -> Result<ConvergenceReport> {
    if resolutions.len() < 3 || dts.len() < 3 {
        return Err(Error::InvalidInput(
            "convergence studies need at least three resolutions and three time steps".into(),
        ));
    }
    let error = |(u, reference): (&GridFunction, &GridFunction)| u.axpy(-1.0, reference).max_abs();
    let spatial: Vec<LevelError> = resolutions
        .par_iter()
        .map(|&n| {
            let (u, reference, grid) = final_slice(setup, exact, n, spatial_dt)?;
            Ok(LevelError {
                n,
                dt: grid.dt,
                error: error((&u, &reference)),
            })
        })
        .collect::<Result<_>>()?;
    let runs: Vec<(GridFunction, GridFunction, TimeGrid)> = dts
        .par_iter()
        .map(|&dt| final_slice(setup, exact, temporal_n, dt))
        .collect::<Result<_>>()?;
    let temporal: Vec<LevelError> = runs
        .iter()
        .map(|(u, reference, grid)| LevelError {
            n: temporal_n,
            dt: grid.dt,
            error: error((u, reference)),
        })
        .collect();
    let spatial_ratios = spatial.windows(2).map(|w| w[0].error / w[1].error).collect();
    let temporal_orders = temporal
        .windows(2)
        .map(|w| (w[0].error / w[1].error).ln() / (w[0].dt / w[1].dt).ln())
        .collect();
    let d1 = runs[0].0.axpy(-1.0, &runs[1].0).max_abs();
    let d2 = runs[1].0.axpy(-1.0, &runs[2].0).max_abs();
    let richardson_order = (d1 / d2).ln() / (runs[0].2.dt / runs[1].2.dt).ln();
    Ok(ConvergenceReport {
        spatial,
        spatial_ratios,
        temporal,
        temporal_orders,
        richardson_order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagationReport {
    /// Largest |u| found outside the expanded interval.
    pub max_leakage: f64,
    /// `max_leakage` divided by the data scale.
    pub relative_leakage: f64,
    pub worst_time: f64,
    /// max of sup|u|, sup|∂_t u| on the initial slice and sup|f|.
    pub data_scale: f64,
    pub threshold: f64,
    pub holds: bool,
}

/// Checks that `u(t)` vanishes (relative to the data scale, below
/// `threshold`) outside `K` expanded by `|∫_τ^t max(√β/a) ds| + Δx`.
pub fn finite_propagation_check(
    sol: &SpacetimeSolution,
    k: (f64, f64),
    threshold: f64,
) -> Result<PropagationReport> {
    let st = sol.spacetime();
    let grid = sol.grid();
    let k0 = sol.tau_index();
    let max_speed: Vec<f64> = grid
        .times()
        .map(|t| Ok(st.slice(t)?.speed.iter().cloned().fold(0.0, f64::max)))
        .collect::<Result<_>>()?;
    let mut reach = vec![0.0; grid.nt];
    for i in k0 + 1..grid.nt {
        reach[i] = reach[i - 1] + 0.5 * grid.dt * (max_speed[i] + max_speed[i - 1]);
    }
    for i in (0..k0).rev() {
        reach[i] = reach[i + 1] + 0.5 * grid.dt * (max_speed[i] + max_speed[i + 1]);
    }
    let data_scale = sol
        .u()
        .slice(k0)
        .max_abs()
        .max(sol.v().slice(k0).max_abs())
        .max(sol.source().map_or(0.0, SpacetimeFunction::max_abs));
    let mut max_leakage = 0.0_f64;
    let mut worst_time = grid.time(k0);
    for i in 0..grid.nt {
        let r = reach[i] + st.spacing();
        let slice = sol.u().slice(i);
        for (j, &x) in st.nodes().iter().enumerate() {
            if x >= k.0 - r && x <= k.1 + r {
                continue;
            }
            for c in 0..slice.rank() {
                let value = slice.get(j, c).norm();
                if value > max_leakage {
                    max_leakage = value;
                    worst_time = grid.time(i);
                }
            }
        }
    }
    let relative_leakage = if data_scale > 0.0 { max_leakage / data_scale } else { max_leakage };
    Ok(PropagationReport {
        max_leakage,
        relative_leakage,
        worst_time,
        data_scale,
        threshold,
        holds: relative_leakage <= threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    /// Two solves with identical inputs (and with a zero perturbation)
    /// produced bitwise-equal records.
    pub identical: bool,
    pub k: f64,
    pub deltas: Vec<f64>,
    /// `sup_t √E_k(u_δ - u)(t)` per δ.
    pub differences: Vec<f64>,
    /// Least-squares slope of log(difference) against log(δ).
    pub slope: f64,
    /// For the largest δ: `sup_t √(E_k(diff, t) / E_k(diff, τ))`.
    pub growth: f64,
    /// Grönwall constant fitted to the difference trace of the largest δ.
    pub fitted_c: f64,
    /// `e^{C T / 2}` with `T` the length of the solve.
    pub bound: f64,
}

fn difference(a: &SpacetimeSolution, b: &SpacetimeSolution) -> Result<(SpacetimeFunction, SpacetimeFunction)> {
    Ok((a.u().axpy(-1.0, b.u())?, a.v().axpy(-1.0, b.v())?))
}

/// Solves twice with identical data and once per `δ` with `u0 + δ p`, and
/// measures how the `k`-energy of the difference scales with `δ`.
#[allow(clippy::too_many_arguments)]
pub fn uniqueness_probe(
    op: &WaveOperatorSpec,
    st: &Spacetime1D,
    data: &CauchyData,
    f: Option<&SpacetimeFunction>,
    perturbation: &GridFunction,
    deltas: &[f64],
    k: f64,
    control: DtControl,
) -> Result<UniquenessReport> {
    if deltas.iter().any(|d| !(*d > 0.0)) || deltas.len() < 2 {
        return Err(Error::InvalidInput("need at least two positive perturbation sizes".into()));
    }
    let base = solve_cauchy(op, st, data, f, control)?;
    let again = solve_cauchy(op, st, data, f, control)?;
    let zero = CauchyData {
        u0: data.u0.axpy(0.0, perturbation),
        ..data.clone()
    };
    let zero = solve_cauchy(op, st, &zero, f, control)?;
    let identical = base.u() == again.u()
        && base.v() == again.v()
        && base.u() == zero.u()
        && base.v() == zero.v();
    let runs: Vec<(f64, energy::EnergyTrace)> = deltas
        .par_iter()
        .map(|&delta| {
            let perturbed = CauchyData {
                u0: data.u0.axpy(delta, perturbation),
                ..data.clone()
            };
            let sol = solve_cauchy(op, st, &perturbed, f, control)?;
            let (du, dv) = difference(&sol, &base)?;
            let trace = energy::energy_trace_of(st, &du, &dv, None, k)?;
            let sup = trace.samples.iter().map(|s| s.energy).fold(0.0, f64::max).sqrt();
            Ok((sup, trace))
        })
        .collect::<Result<_>>()?;
    let differences: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = differences.iter().map(|d| d.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let largest = deltas
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let trace = &runs[largest].1;
    let initial = trace.samples[base.tau_index()].energy;
    let growth = trace
        .samples
        .iter()
        .map(|s| (s.energy / initial).sqrt())
        .fold(0.0, f64::max);
    let fitted_c = energy::fit_groenwall_constant(trace)?.c;
    let span = base.grid().end() - base.grid().t0;
    Ok(UniquenessReport {
        identical,
        k,
        deltas: deltas.to_vec(),
        differences,
        slope,
        growth,
        fitted_c,
        bound: (0.5 * fitted_c * span).exp(),
    })
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Largest boost velocity accepted by [`boost_reslice_check`].
pub const MAX_BOOST: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoostReport {
    pub w: f64,
    pub gamma: f64,
    /// Max |ũ(t̃, x̃) - u(t, x)| over compared events.
    pub max_discrepancy: f64,
    /// Same, divided by sup|u| of the original solution.
    pub relative_discrepancy: f64,
    /// `√E_1` of the difference on the middle boosted slice.
    pub energy_discrepancy: f64,
    pub compared_events: usize,
}

/// Value, time and space derivative of the original solution at an event,
/// or zeros beyond the box (where the emulated line solution vanishes).
fn evaluate_original(sol: &SpacetimeSolution, half_width: f64, t: f64, x: f64) -> Result<[Vec<Complex64>; 3]> {
    let m = sol.u().rank();
    if x.abs() > half_width {
        let zero = vec![Complex64::new(0.0, 0.0); m];
        return Ok([zero.clone(), zero.clone(), zero]);
    }
    Ok([sol.u().eval(t, x, 0)?, sol.v().eval(t, x, 0)?, sol.u().eval(t, x, 1)?])
}

/// Reslices a flat-space solution along `t = w x` (the boosted slice
/// `t̃ = 0` of `t = γ(t̃ + w x̃)`, `x = γ(x̃ + w t̃)`), re-solves in the
/// boosted frame on `boosted` and compares both solutions at common events.
pub fn boost_reslice_check(
    sol: &SpacetimeSolution,
    w: f64,
    boosted: &Spacetime1D,
    control: DtControl,
) -> Result<BoostReport> {
    if !(w.abs() <= MAX_BOOST) {
        return Err(Error::SliceNotSpacelike { w });
    }
    let st = sol.spacetime();
    let op = sol.operator();
    let flat = |s: &Spacetime1D| {
        s.beta_expr().as_constant() == Some(1.0) && s.a_expr().as_constant() == Some(1.0) && s.is_line()
    };
    if !flat(st) || !flat(boosted) {
        return Err(Error::InvalidInput("boost checks need flat Minkowski line boxes".into()));
    }
    if !matches!(op.preset(), Preset::Dalembert | Preset::KleinGordon { .. }) {
        return Err(Error::InvalidInput("boost checks need a boost-invariant operator".into()));
    }
    if sol.source().is_some() {
        return Err(Error::InvalidInput("boost checks need a source-free solution".into()));
    }
    let half_width = st.period() / 2.0;
    let gamma = 1.0 / (1.0 - w * w).sqrt();
    let m = op.rank();
    let map = |tb: f64, xb: f64| (gamma * (tb + w * xb), gamma * (xb + w * tb));

    // Data on the boosted slice: ũ = u, ∂_t̃ ũ = γ(u_t + w u_x).
    let mut u0 = boosted.grid_zeros(m);
    let mut v0 = boosted.grid_zeros(m);
    for (j, &xb) in boosted.nodes().iter().enumerate() {
        let (t, x) = map(0.0, xb);
        let [u, ut, ux] = evaluate_original(sol, half_width, t, x)?;
        for c in 0..m {
            u0.set(j, c, u[c]);
            v0.set(j, c, (ut[c] + ux[c] * w) * gamma);
        }
    }
    let scale = u0.max_abs().max(v0.max_abs());
    for (g, name) in [(&u0, "boosted position"), (&v0, "boosted velocity")] {
        boosted
            .check_support_scaled(g, scale, name)
            .map_err(|e| Error::SupportEscapesBox(e.to_string()))?;
    }
    let data = CauchyData::from_velocity(boosted, 0.0, u0, &v0)?;
    let resolved = solve_cauchy(op, boosted, &data, None, control)?;

    let original_grid = sol.grid();
    let rgrid = resolved.grid();
    let mid = rgrid.nearest(0.5 * rgrid.end());
    let mut max_discrepancy = 0.0_f64;
    let mut compared = 0;
    let mut mid_diff = boosted.grid_zeros(m);
    let mut mid_diff_v = boosted.grid_zeros(m);
    for i in 0..rgrid.nt {
        let tb = rgrid.time(i);
        let rows: Vec<Option<([Vec<Complex64>; 3], usize)>> = boosted
            .nodes()
            .par_iter()
            .enumerate()
            .map(|(j, &xb)| {
                let (t, x) = map(tb, xb);
                if !original_grid.contains(t) {
                    return Ok(None);
                }
                Ok(Some((evaluate_original(sol, half_width, t, x)?, j)))
            })
            .collect::<Result<_>>()?;
        for (values, j) in rows.into_iter().flatten() {
            let [u, ut, ux] = values;
            compared += 1;
            for c in 0..m {
                let d = resolved.u().slice(i).get(j, c) - u[c];
                max_discrepancy = max_discrepancy.max(d.norm());
                if i == mid {
                    mid_diff.set(j, c, d);
                    let vb = (ut[c] + ux[c] * w) * gamma;
                    mid_diff_v.set(j, c, resolved.v().slice(i).get(j, c) - vb);
                }
            }
        }
    }
    let energy_discrepancy = sobolev::energy_k(&mid_diff, &mid_diff_v, boosted, rgrid.time(mid), 1.0)?
        .value
        .sqrt();
    let sup = sol.u().max_abs();
    Ok(BoostReport {
        w,
        gamma,
        max_discrepancy,
        relative_discrepancy: if sup > 0.0 { max_discrepancy / sup } else { max_discrepancy },
        energy_discrepancy,
        compared_events: compared,
    })
}
