//! Energy traces along solutions, the Grönwall-type energy inequality
//! `E(t₁) ≤ E(t₀) e^{C(t₁-t₀)} + ∫_{t₀}^{t₁} e^{C(t₁-s)} ‖Pu(s)‖²_{H^{k-1}} ds`
//! with a fitted constant, and the slab Sobolev estimate.

use serde::Serialize;

use crate::cauchy::SpacetimeSolution;
use crate::error::{Error, Result};
use crate::field::SpacetimeFunction;
use crate::geometry::Spacetime1D;
use crate::grid::GridFunction;
use crate::operators::{apply_p, WaveOperatorSpec};
use crate::sobolev;
use crate::stencil;

/// Tolerance (relative to the trace scale) on the inequality margin.
pub const MARGIN_TOLERANCE: f64 = 1e-10;

/// Upper end of the bisection for the Grönwall constant.
pub const C_MAX: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    pub s: f64,
    pub energy: f64,
    /// `‖Pu(s)‖²_{H^{k-1}}`
    pub source_norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTrace {
    pub k: f64,
    pub samples: Vec<EnergySample>,
}

impl EnergyTrace {
    /// Scale used to normalise margins: the largest energy plus the total
    /// source integral.
    pub fn scale(&self) -> f64 {
        let energy = self.samples.iter().map(|s| s.energy).fold(0.0, f64::max);
        let source: f64 = self
            .samples
            .windows(2)
            .map(|w| 0.5 * (w[1].s - w[0].s) * (w[0].source_norm_sq + w[1].source_norm_sq))
            .sum();
        energy + source
    }

    pub fn scaled(&self, alpha: f64) -> EnergyTrace {
        let a2 = alpha * alpha;
        EnergyTrace {
            k: self.k,
            samples: self
                .samples
                .iter()
                .map(|s| EnergySample {
                    s: s.s,
                    energy: s.energy * a2,
                    source_norm_sq: s.source_norm_sq * a2,
                })
                .collect(),
        }
    }
}

/// Trace of `E_k` for sampled `u`, `v = ∂_t u` and an optional source.
pub fn energy_trace_of(
    st: &Spacetime1D,
    u: &SpacetimeFunction,
    v: &SpacetimeFunction,
    source: Option<&SpacetimeFunction>,
    k: f64,
) -> Result<EnergyTrace> {
    u.check_compatible(v)?;
    let grid = u.grid();
    let samples = (0..grid.nt)
        .map(|i| {
            let s = grid.time(i);
            let e = sobolev::energy_k(u.slice(i), v.slice(i), st, s, k)?;
            let source_norm_sq = match source {
                Some(f) => sobolev::sobolev_norm_sq(&f.slice_at(s)?, k - 1.0),
                None => 0.0,
            };
            Ok(EnergySample {
                s,
                energy: e.value,
                source_norm_sq,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EnergyTrace { k, samples })
}

/// `E_k` at every integrator step, with the solver's own source.
pub fn energy_trace(sol: &SpacetimeSolution, k: f64) -> Result<EnergyTrace> {
    energy_trace_of(sol.spacetime(), sol.u(), sol.v(), sol.source(), k)
}

/// As [`energy_trace_of`], with the source recomputed as `Pu`.
pub fn energy_trace_from_fields(
    op: &WaveOperatorSpec,
    st: &Spacetime1D,
    u: &SpacetimeFunction,
    v: &SpacetimeFunction,
    k: f64,
) -> Result<EnergyTrace> {
    let pu = apply_p(op, st, u)?;
    energy_trace_of(st, u, v, Some(&pu), k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyCheck {
    pub c: f64,
    pub holds: bool,
    /// The pair `(t₀, t₁)` with the smallest margin.
    pub worst_pair: (f64, f64),
    /// `min (RHS - LHS) / scale` over all pairs; 0 for a zero trace.
    pub margin: f64,
}

/// Checks the energy inequality at constant `c` for every sampled pair
/// `t₀ < t₁` (source integral by the trapezoid rule on the trace grid).
pub fn verify_energy_estimate(trace: &EnergyTrace, c: f64) -> Result<EnergyCheck> {
    if !(c >= 0.0) {
        return Err(Error::InvalidInput(format!("Gronwall constant must be nonnegative, got {c}")));
    }
    let samples = &trace.samples;
    let scale = trace.scale();
    let mut worst = f64::INFINITY;
    let mut worst_pair = (0.0, 0.0);
    for (j, end) in samples.iter().enumerate() {
        // Backward recurrence for ∫_{t_i}^{t_j} e^{C(t_j - s)} S(s) ds.
        let mut integral = 0.0;
        for i in (0..j).rev() {
            let (a, b) = (&samples[i], &samples[i + 1]);
            integral += 0.5
                * (b.s - a.s)
                * ((c * (end.s - a.s)).exp() * a.source_norm_sq + (c * (end.s - b.s)).exp() * b.source_norm_sq);
            let rhs = a.energy * (c * (end.s - a.s)).exp() + integral;
            let gap = rhs - end.energy;
            if gap < worst {
                worst = gap;
                worst_pair = (a.s, end.s);
            }
        }
    }
    let margin = if samples.len() < 2 {
        0.0
    } else if scale > 0.0 {
        worst / scale
    } else {
        0.0
    };
    Ok(EnergyCheck {
        c,
        holds: margin >= -MARGIN_TOLERANCE,
        worst_pair,
        margin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroenwallFit {
    pub c: f64,
    pub check: EnergyCheck,
    /// Predicate monotonicity in C, sampled across `[0, C_MAX]`.
    pub monotone: bool,
}

/// Smallest `C ∈ [0, C_MAX]` (to relative precision 1e-9) for which the
/// energy inequality holds.
pub fn fit_groenwall_constant(trace: &EnergyTrace) -> Result<GroenwallFit> {
    let holds = |c: f64| verify_energy_estimate(trace, c).map(|r| r.holds);
    let c = if holds(0.0)? {
        0.0
    } else {
        if !holds(C_MAX)? {
            return Err(Error::NoConstantFound { c_max: C_MAX });
        }
        let (mut lo, mut hi) = (0.0, C_MAX);
        while hi - lo > 1e-9 * hi.max(1e-6) {
            let mid = 0.5 * (lo + hi);
            if holds(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let mut monotone = true;
    let mut seen_true = false;
    for probe in [0.0, 0.5 * c, c, 1.5 * c, c + 1.0, 10.0 * c + 1.0, C_MAX] {
        let h = holds(probe)?;
        if seen_true && !h {
            monotone = false;
        }
        seen_true |= h;
    }
    Ok(GroenwallFit {
        c,
        check: verify_energy_estimate(trace, c)?,
        monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlabReport {
    pub k: usize,
    pub interval: (f64, f64),
    /// `Σ_{i+j≤k} ∫∫ |∂_t^i ∂_x^j u|² dx ds`
    pub slab_norm_sq: f64,
    /// `‖u(t₀)‖²_{H^k} + ‖∂_t u(t₀)‖²_{H^{k-1}} + ∫ ‖Pu(s)‖²_{H^{k-1}} ds`
    pub rhs: f64,
    /// `slab_norm_sq / rhs`; 0 when both sides vanish.
    pub ratio: f64,
    pub degenerate: bool,
}

fn integrate(values: &[f64], h: f64) -> f64 {
    stencil::gregory(values, h)
}

/// `∂_t^order` of sampled slices at level `i` by fourth-order differences.
fn time_derivative(f: &SpacetimeFunction, i: usize, order: usize) -> GridFunction {
    if order == 0 {
        return f.slice(i).clone();
    }
    let grid = f.grid();
    let (start, w) = stencil::derivative_stencil(i, grid.nt, order, grid.dt);
    let mut out = f.slice(start).scale(w[0]);
    for (k, wk) in w.iter().enumerate().skip(1) {
        out = out.axpy(*wk, f.slice(start + k));
    }
    out
}

/// Empirical constant of the slab estimate on `[t₀, t₁]` (snapped to the
/// solver grid). Time derivatives use `∂_t^i u = ∂_t^{i-1} v`.
pub fn verify_slab_estimate(sol: &SpacetimeSolution, k: usize, interval: (f64, f64)) -> Result<SlabReport> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidInput(format!("slab estimates need k in 1..=3, got {k}")));
    }
    let grid = sol.grid();
    if !(interval.0 < interval.1) || !grid.contains(interval.0) || !grid.contains(interval.1) {
        return Err(Error::InvalidInput(format!(
            "slab [{}, {}] not inside the solved range [{}, {}]",
            interval.0,
            interval.1,
            grid.t0,
            grid.end()
        )));
    }
    let (i0, i1) = (grid.nearest(interval.0), grid.nearest(interval.1));
    if i1 <= i0 {
        return Err(Error::InvalidInput("slab is thinner than one time step".into()));
    }
    let st = sol.spacetime();
    let dx = st.spacing();
    let mut per_level = vec![0.0; i1 - i0 + 1];
    for (slot, i) in (i0..=i1).enumerate() {
        for ti in 0..=k {
            let base = if ti == 0 {
                sol.u().slice(i).clone()
            } else {
                time_derivative(sol.v(), i, ti - 1)
            };
            let mut d = base;
            for _ in 0..=(k - ti) {
                let sum: f64 = d.values().iter().map(|z| z.norm_sqr()).sum();
                per_level[slot] += sum * dx;
                d = d.dx();
            }
        }
    }
    let slab_norm_sq = integrate(&per_level, grid.dt);
    let kf = k as f64;
    let initial = sobolev::sobolev_norm_sq(sol.u().slice(i0), kf) + sobolev::sobolev_norm_sq(sol.v().slice(i0), kf - 1.0);
    let source = match sol.source() {
        Some(f) => {
            let norms: Vec<f64> = (i0..=i1)
                .map(|i| Ok(sobolev::sobolev_norm_sq(&f.slice_at(grid.time(i))?, kf - 1.0)))
                .collect::<Result<_>>()?;
            integrate(&norms, grid.dt)
        }
        None => 0.0,
    };
    let rhs = initial + source;
    let degenerate = rhs == 0.0 && slab_norm_sq == 0.0;
    Ok(SlabReport {
        k,
        interval: (grid.time(i0), grid.time(i1)),
        slab_norm_sq,
        rhs,
        ratio: if degenerate { 0.0 } else { slab_norm_sq / rhs },
        degenerate,
    })
}
