//! Characteristic (Goursat) initial value problems: data prescribed on a
//! lightlike graph `Σ = {t = σ(x)}`, solution sought on `J⁺(Σ)`.
//!
//! The solver follows the constructive existence argument. Lift the trace
//! off Σ with a plateau bump, `w = χ((t - σ̃(x))/δ) u₀(x)`, then solve
//! `Pv = s_ε (f - Pw)` with zero Cauchy data on a spacelike slice below Σ,
//! where `s_ε` is a smoothed indicator of `J⁺(Σ)`. On `J⁺(Σ)` the answer is
//! `u = w + v`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cauchy::{solve_cauchy_on_grid, time_grid, CauchyData, DtControl, SpacetimeSolution};
use crate::error::{Error, Result};
use crate::field::{SpacetimeFunction, TimeGrid};
use crate::geometry::{is_past_compact, lightlike_graph, CharacteristicSurface, Spacetime1D, SurfaceShape};
use crate::grid::GridFunction;
use crate::operators::{apply_p, apply_p_at, Jet, WaveOperatorSpec};

fn psi(y: f64) -> f64 {
    if y > 0.0 {
        (-1.0 / y).exp()
    } else {
        0.0
    }
}

/// Smooth monotone step: 0 for `y ≤ 0`, 1 for `y ≥ 1`.
pub fn smooth_step(y: f64) -> f64 {
    let (a, b) = (psi(y), psi(1.0 - y));
    a / (a + b)
}

/// Plateau bump: 1 on `|τ| ≤ 1/2`, 0 on `|τ| ≥ 1`, smooth in between.
pub fn plateau(tau: f64) -> f64 {
    1.0 - smooth_step(2.0 * tau.abs() - 1.0)
}

fn psi_derivatives(y: f64) -> [f64; 3] {
    if y > 0.0 {
        let p = (-1.0 / y).exp();
        let y2 = y * y;
        [p, p / y2, p * (1.0 / (y2 * y2) - 2.0 / (y2 * y))]
    } else {
        [0.0; 3]
    }
}

/// `χ, χ', χ''` for [`plateau`].
pub fn plateau_jet(tau: f64) -> [f64; 3] {
    let y = 2.0 * tau.abs() - 1.0;
    if y <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    if y >= 1.0 {
        return [0.0; 3];
    }
    let [a, a1, a2] = psi_derivatives(y);
    let [b, b1, b2] = psi_derivatives(1.0 - y);
    let (b1, d) = (-b1, a + b);
    let num = a1 * b - a * b1;
    let s1 = num / (d * d);
    let s2 = ((a2 * b - a * b2) * d - 2.0 * num * (a1 + b1)) / (d * d * d);
    let sign = tau.signum();
    [1.0 - a / d, -2.0 * sign * s1, -4.0 * s2]
}

/// Smoothed indicator of `τ ≥ 0`: 0 below -1, 1 above 1, 1/2 at 0.
pub fn mollified_indicator(tau: f64) -> f64 {
    smooth_step(0.5 * (tau + 1.0))
}

/// Standard bump supported in `[1, 2]` with maximum 1 at 3/2.
pub fn unit_bump(y: f64) -> f64 {
    let z = 2.0 * y - 3.0;
    if z.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - z * z)).exp()
    }
}

/// Values `u₀` of a section at the nodes of a characteristic surface.
#[derive(Debug, Clone)]
pub struct CharacteristicTrace {
    pub surface: CharacteristicSurface,
    pub values: GridFunction,
}

impl CharacteristicTrace {
    pub fn new(st: &Spacetime1D, surface: CharacteristicSurface, values: GridFunction) -> Result<Self> {
        if values.n() != st.n() || surface.sigma().len() != st.n() {
            return Err(Error::ShapeMismatch("trace does not match the spatial grid".into()));
        }
        st.check_support(&values, "trace")?;
        Ok(Self { surface, values })
    }

    /// Samples `f(t, x, out)` at the surface events `(σ(x_j), x_j)`.
    pub fn sample(
        st: &Spacetime1D,
        surface: CharacteristicSurface,
        m: usize,
        f: impl Fn(f64, f64, &mut [Complex64]),
    ) -> Result<Self> {
        let mut values = st.grid_zeros(m);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (j, (&x, &s)) in surface.nodes().iter().zip(surface.sigma()).enumerate() {
            f(s, x, &mut buf);
            for (c, z) in buf.iter().enumerate() {
                values.set(j, c, *z);
            }
        }
        Self::new(st, surface, values)
    }
}

/// Restriction of sampled `u` to Σ (cubic interpolation in `t` at each
/// node). Guard nodes whose σ leaves the sampled range contribute zero.
pub fn trace_of(st: &Spacetime1D, u: &SpacetimeFunction, surf: &CharacteristicSurface) -> Result<GridFunction> {
    let grid = u.grid();
    let mut out = st.grid_zeros(u.rank());
    for (j, (&x, &s)) in surf.nodes().iter().zip(surf.sigma()).enumerate() {
        if !grid.contains(s) {
            if st.in_guard(x) {
                continue;
            }
            return Err(Error::SurfaceOutsideSolution { t: s, x });
        }
        for (c, z) in u.at_node(s, j)?.into_iter().enumerate() {
            out.set(j, c, z);
        }
    }
    Ok(out)
}

pub fn trace_on_surface(sol: &SpacetimeSolution, surf: &CharacteristicSurface) -> Result<CharacteristicTrace> {
    let values = trace_of(sol.spacetime(), sol.u(), surf)?;
    Ok(CharacteristicTrace {
        surface: surf.clone(),
        values,
    })
}

fn default_delta0() -> f64 {
    0.25
}

/// Internal parameters of the construction. Unset widths take their
/// defaults: `δ_lift = δ₀/2`, `ε_moll = 4Δx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoursatParams {
    /// Distance from min σ down to the auxiliary slice Σ₀.
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    #[serde(default)]
    pub delta_lift: Option<f64>,
    #[serde(default)]
    pub eps_moll: Option<f64>,
    #[serde(default)]
    pub control: DtControl,
}

impl Default for GoursatParams {
    fn default() -> Self {
        Self {
            delta0: default_delta0(),
            delta_lift: None,
            eps_moll: None,
            control: DtControl::default(),
        }
    }
}

/// Parameters as actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedParams {
    pub delta0: f64,
    pub delta_lift: f64,
    pub eps_moll: f64,
    /// Time of the auxiliary slice (snapped down to the time grid).
    pub sigma0: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct GoursatReport {
    /// `u = w + v` on the whole time grid; meaningful on `J⁺(Σ)`.
    pub solution: SpacetimeFunction,
    pub surface: CharacteristicSurface,
    pub parameters: ResolvedParams,
    /// `‖trace(u) - u₀‖_{L²}`
    pub replay_error: f64,
    /// `replay_error / ‖u₀‖_{L²}` (0 when u₀ = 0).
    pub replay_relative: f64,
}

impl GoursatReport {
    /// Whether space-time node `(i, j)` lies in `J⁺(Σ)` above the collar
    /// `t ≥ σ + collar`.
    pub fn in_region(&self, i: usize, j: usize, collar: f64) -> bool {
        self.solution.grid().time(i) >= self.surface.sigma()[j] + collar
    }

    /// Relative space-time L² distance to `reference` on `J⁺(Σ)` above
    /// the mollification collar.
    pub fn relative_error(&self, reference: &SpacetimeFunction) -> Result<f64> {
        self.solution.check_compatible(reference)?;
        Ok(masked_relative(&self.solution, reference, |i, j| {
            self.in_region(i, j, self.parameters.eps_moll)
        }))
    }
}

fn masked_relative(a: &SpacetimeFunction, reference: &SpacetimeFunction, mask: impl Fn(usize, usize) -> bool) -> f64 {
    let (mut diff, mut norm) = (0.0, 0.0);
    for i in 0..a.grid().nt {
        let (sa, sr) = (a.slice(i), reference.slice(i));
        for j in 0..a.n() {
            if !mask(i, j) {
                continue;
            }
            for c in 0..a.rank() {
                diff += (sa.get(j, c) - sr.get(j, c)).norm_sqr();
                norm += sr.get(j, c).norm_sqr();
            }
        }
    }
    if norm > 0.0 {
        (diff / norm).sqrt()
    } else {
        diff.sqrt()
    }
}

fn l2(g: &GridFunction) -> f64 {
    (g.values().iter().map(|z| z.norm_sqr()).sum::<f64>() * g.spacing()).sqrt()
}

/// Gaussian smoothing of σ with `|σ̃ - σ| < deviation` on the interior. A
/// kinked σ would put a kink into the lift that RK4 cannot follow at grid
/// frequencies.
fn smoothed_sigma(st: &Spacetime1D, surf: &CharacteristicSurface, deviation: f64) -> Vec<f64> {
    let sigma = surf.sigma();
    let n = sigma.len();
    let steepest = (0..n)
        .filter(|&j| !st.in_guard(surf.nodes()[j]))
        .map(|j| surf.slope_left(j).abs().max(surf.slope_right(j).abs()))
        .fold(0.0, f64::max);
    if steepest == 0.0 || surf.kinks().is_empty() {
        return sigma.to_vec();
    }
    // Mean |X| of a unit Gaussian is 0.8, so the worst kink moves by 0.8 η L.
    let eta = deviation / steepest;
    let h = st.spacing();
    let reach = (6.0 * eta / h).ceil() as usize;
    (0..n)
        .map(|j| {
            let lo = j.saturating_sub(reach);
            let hi = (j + reach).min(n - 1);
            let (mut num, mut den) = (0.0, 0.0);
            for k in lo..=hi {
                let d = (k as f64 - j as f64) * h / eta;
                let g = (-0.5 * d * d).exp();
                num += g * sigma[k];
                den += g;
            }
            num / den
        })
        .collect()
}

fn resolve(st: &Spacetime1D, surf: &CharacteristicSurface, params: &GoursatParams) -> Result<(ResolvedParams, TimeGrid, usize)> {
    let delta0 = params.delta0;
    if !(delta0 > 0.0) {
        return Err(Error::InvalidInput(format!("delta0 must be positive, got {delta0}")));
    }
    let delta_lift = params.delta_lift.unwrap_or(0.5 * delta0);
    if !(delta_lift > 0.0) {
        return Err(Error::InvalidInput(format!("delta_lift must be positive, got {delta_lift}")));
    }
    if delta_lift >= delta0 {
        return Err(Error::LiftTooWide {
            delta_lift,
            offset: delta0,
        });
    }
    let eps_moll = params.eps_moll.unwrap_or(4.0 * st.spacing());
    if !(eps_moll > 0.0) {
        return Err(Error::InvalidInput(format!("eps_moll must be positive, got {eps_moll}")));
    }
    if eps_moll >= 0.5 * delta_lift {
        return Err(Error::InvalidInput(format!(
            "mollification width {eps_moll} must stay below half the lift width {delta_lift}"
        )));
    }
    let min_sigma = surf
        .nodes()
        .iter()
        .zip(surf.sigma())
        .filter(|(x, _)| !st.in_guard(**x))
        .map(|(_, s)| *s)
        .fold(f64::INFINITY, f64::min);
    let [t0, _] = st.t_range();
    let target = min_sigma - delta0;
    if target < t0 {
        return Err(Error::InvalidInput(format!(
            "auxiliary slice at t = {target} lies below the time range"
        )));
    }
    let (grid, _) = time_grid(st, t0, params.control)?;
    let k0 = ((target - t0) / grid.dt + 1e-9).floor() as usize;
    Ok((
        ResolvedParams {
            delta0,
            delta_lift,
            eps_moll,
            sigma0: grid.time(k0),
            dt: grid.dt,
        },
        grid,
        k0,
    ))
}

/// `Pw` for the lift, with exact time derivatives of the plateau factor and
/// spectral x-derivatives of each slice.
fn lift_residual(
    op: &WaveOperatorSpec,
    st: &Spacetime1D,
    w: &SpacetimeFunction,
    u0: &GridFunction,
    lift_sigma: &[f64],
    delta: f64,
) -> Result<SpacetimeFunction> {
    use rayon::prelude::*;
    let grid = w.grid();
    let (n, m) = (w.n(), w.rank());
    let slices = (0..grid.nt)
        .into_par_iter()
        .map(|i| {
            let t = grid.time(i);
            let wi = w.slice(i);
            if wi.max_abs() == 0.0 {
                return Ok(wi.clone());
            }
            let wx = wi.dx();
            let wxx = wx.dx();
            let mut out = wi.clone();
            for (j, &x) in st.nodes().iter().enumerate() {
                let [chi, chi1, chi2] = plateau_jet((t - lift_sigma[j]) / delta);
                if chi == 0.0 && chi1 == 0.0 && chi2 == 0.0 && wxx.get(j, 0) == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let col = |g: &GridFunction| (0..m).map(|c| g.get(j, c)).collect::<Vec<_>>();
                let base = col(u0);
                let jet = Jet {
                    w: col(wi),
                    w_t: base.iter().map(|z| z * (chi1 / delta)).collect(),
                    w_tt: base.iter().map(|z| z * (chi2 / (delta * delta))).collect(),
                    w_x: col(&wx),
                    w_xx: col(&wxx),
                };
                for (c, z) in apply_p_at(op, st, t, x, &jet)?.into_iter().enumerate() {
                    out.set(j, c, z);
                }
            }
            debug_assert_eq!(out.n(), n);
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    SpacetimeFunction::new(grid, st.origin(), slices)
}

/// Relative level up to which guard content of the constructed source is
/// treated as spectral ringing of the lift and cleared.
pub const SOURCE_RINGING_TOLERANCE: f64 = 1e-6;

/// The exact source vanishes with `u₀` and `f` on the guard. Spectral
/// derivatives of the lift leave ringing there (~1e-9 relative for well
/// resolved traces); anything above [`SOURCE_RINGING_TOLERANCE`] means the
/// trace is under-resolved.
fn clear_guard(st: &Spacetime1D, mut slices: Vec<GridFunction>) -> Result<Vec<GridFunction>> {
    let scale = slices.iter().map(GridFunction::max_abs).fold(0.0, f64::max);
    let m = slices.first().map_or(1, GridFunction::rank);
    for s in &mut slices {
        for (j, &x) in st.nodes().iter().enumerate() {
            if !st.in_guard(x) {
                continue;
            }
            for c in 0..m {
                if s.get(j, c).norm() > SOURCE_RINGING_TOLERANCE * scale {
                    return Err(Error::BadGuardRegion(format!(
                        "Goursat source rings at x = {x} (relative {:.1e}); refine the grid or smooth the trace",
                        s.get(j, c).norm() / scale
                    )));
                }
                s.set(j, c, Complex64::new(0.0, 0.0));
            }
        }
    }
    Ok(slices)
}

/// Solves `Pu = f` on `J⁺(Σ)` with `u|_Σ = u₀` (line topology only).
pub fn solve_goursat(
    op: &WaveOperatorSpec,
    st: &Spacetime1D,
    trace: &CharacteristicTrace,
    f: Option<&SpacetimeFunction>,
    params: &GoursatParams,
) -> Result<GoursatReport> {
    if !st.is_line() {
        return Err(Error::InvalidInput("Goursat problems are posed on line topology".into()));
    }
    let m = op.rank();
    if trace.values.rank() != m || trace.values.n() != st.n() {
        return Err(Error::ShapeMismatch("trace does not match the operator and grid".into()));
    }
    let surf = &trace.surface;
    let (resolved, grid, k0) = resolve(st, surf, params)?;
    // Keep the lift on its plateau throughout the mollification collar.
    let lift_sigma = smoothed_sigma(st, surf, 0.5 * resolved.delta_lift - resolved.eps_moll);
    let n = st.n();
    let period = st.period();
    let u0 = &trace.values;

    let lift: Vec<GridFunction> = (0..grid.nt)
        .map(|i| {
            let t = grid.time(i);
            GridFunction::from_fn(n, m, period, |j, c| {
                u0.get(j, c) * plateau((t - lift_sigma[j]) / resolved.delta_lift)
            })
        })
        .collect();
    let w = SpacetimeFunction::new(grid, st.origin(), lift)?;
    let pw = lift_residual(op, st, &w, u0, &lift_sigma, resolved.delta_lift)?;
    let sigma = surf.sigma();
    let source: Vec<GridFunction> = (0..grid.nt)
        .map(|i| {
            let t = grid.time(i);
            let fi = f.map(|f| f.slice_at(t)).transpose()?;
            let pwi = pw.slice(i);
            Ok(GridFunction::from_fn(n, m, period, |j, c| {
                let fv = fi.as_ref().map_or(Complex64::new(0.0, 0.0), |g| g.get(j, c));
                (fv - pwi.get(j, c)) * mollified_indicator((t - sigma[j]) / resolved.eps_moll)
            }))
        })
        .collect::<Result<_>>()?;
    let source = clear_guard(st, source)?;
    let source = SpacetimeFunction::new(grid, st.origin(), source)?;
    let data = CauchyData::zeros(st, resolved.sigma0, m);
    let sol = solve_cauchy_on_grid(op, st, &data, Some(&source), grid, k0)?;
    let u = w.axpy(1.0, sol.u())?;
    let replay = trace_of(st, &u, surf)?.axpy(-1.0, u0);
    let replay_error = l2(&replay);
    let scale = l2(u0);
    Ok(GoursatReport {
        solution: u,
        surface: surf.clone(),
        parameters: resolved,
        replay_error,
        replay_relative: if scale > 0.0 { replay_error / scale } else { replay_error },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoursatUniquenessReport {
    /// Relative space-time L² discrepancy between the two runs on `J⁺(Σ)`
    /// above the wider collar.
    pub discrepancy: f64,
    pub identical: bool,
    pub past_compact: bool,
    pub parameters: (ResolvedParams, ResolvedParams),
    pub replay_errors: (f64, f64),
}

/// Runs [`solve_goursat`] with two parameter sets (same time control) and
/// compares the results where both claim to solve the problem.
pub fn goursat_uniqueness_probe(
    op: &WaveOperatorSpec,
    st: &Spacetime1D,
    trace: &CharacteristicTrace,
    f: Option<&SpacetimeFunction>,
    a: &GoursatParams,
    b: &GoursatParams,
) -> Result<GoursatUniquenessReport> {
    if a.control != b.control {
        return Err(Error::InvalidInput("parameter sets must share the time control".into()));
    }
    let (ra, rb) = rayon::join(
        || solve_goursat(op, st, trace, f, a),
        || solve_goursat(op, st, trace, f, b),
    );
    let (ra, rb) = (ra?, rb?);
    let collar = ra.parameters.eps_moll.max(rb.parameters.eps_moll);
    let discrepancy = masked_relative(&rb.solution, &ra.solution, |i, j| ra.in_region(i, j, collar));
    Ok(GoursatUniquenessReport {
        discrepancy,
        identical: ra.solution == rb.solution,
        past_compact: is_past_compact(st, &trace.surface)?,
        parameters: (ra.parameters, rb.parameters),
        replay_errors: (ra.replay_error, rb.replay_error),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    /// sup |u| on Σ = {t = x}.
    pub null_line_trace_sup: f64,
    /// sup |u| over sampled events of `J⁺(Σ)`.
    pub future_sup: f64,
    pub max_v: f64,
    /// u and 0 share the trace on Σ; their sup distance on `J⁺(Σ)`.
    pub uniqueness_gap: f64,
    /// sup |□u| over the sampled grid.
    pub residual_sup: f64,
    /// `residual_sup / sup |∂ₓ²u|`
    pub residual_relative: f64,
    /// sup |u| on the future cone ∂J⁺(0, 0), which meets the support.
    pub cone_trace_sup: f64,
    pub past_compact_null_line: bool,
    pub past_compact_future_cone: bool,
    pub past_compact_past_cone: bool,
    #[serde(skip)]
    pub solution: SpacetimeFunction,
}

/// The right-travelling wave `u(t, x) = v(t - x)` with `supp v = [1, 2]`:
/// a nonzero solution of `□u = 0` whose trace on the null line `t = x`
/// vanishes, so uniqueness fails when `J⁺(Σ)` is not past compact.
pub fn traveling_wave_counterexample(st: &Spacetime1D) -> Result<CounterexampleReport> {
    let flat = st.beta_expr().as_constant() == Some(1.0) && st.a_expr().as_constant() == Some(1.0);
    if !flat || !st.is_line() {
        return Err(Error::InvalidInput("the counterexample lives on a flat line box".into()));
    }
    let [t0, t1] = st.t_range();
    let half = 0.5 * st.period();
    // Anchor the time grid so that t - x hits the peak 3/2 at some nodes.
    let dt = 0.125 * st.spacing();
    let anchor = -half + 1.5;
    let start = anchor + ((t0 - anchor) / dt).ceil() * dt;
    let nt = ((t1 - start) / dt + 1e-9).floor() as usize + 1;
    let grid = TimeGrid { t0: start, dt, nt };
    let u = SpacetimeFunction::sample(st, grid, 1, |t, x, out| out[0] = Complex64::new(unit_bump(t - x), 0.0))?;
    let residual = apply_p(&WaveOperatorSpec::dalembert(1), st, &u)?;

    let line = lightlike_graph(st, (0.0, 0.0), SurfaceShape::Line { slope_sign: 1 })?;
    let future_cone = lightlike_graph(st, (0.0, 0.0), SurfaceShape::FutureCone)?;
    let past_cone = lightlike_graph(st, (0.0, 0.0), SurfaceShape::PastCone)?;
    let mut future_sup = 0.0_f64;
    for i in 0..grid.nt {
        let t = grid.time(i);
        for (j, &x) in st.nodes().iter().enumerate() {
            if t >= x {
                future_sup = future_sup.max(u.slice(i).get(j, 0).norm());
            }
        }
    }
    let null_line_trace_sup = trace_of(st, &u, &line)?.max_abs();
    let curvature = u.slices().iter().map(|g| g.dx().dx().max_abs()).fold(0.0, f64::max);
    let residual_sup = residual.max_abs();
    Ok(CounterexampleReport {
        null_line_trace_sup,
        future_sup,
        max_v: unit_bump(1.5),
        uniqueness_gap: future_sup,
        residual_sup,
        residual_relative: residual_sup / curvature,
        cone_trace_sup: trace_of(st, &u, &future_cone)?.max_abs(),
        past_compact_null_line: is_past_compact(st, &line)?,
        past_compact_future_cone: is_past_compact(st, &future_cone)?,
        past_compact_past_cone: is_past_compact(st, &past_cone)?,
        solution: u,
    })
}
