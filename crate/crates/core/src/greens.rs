//! Green's formula on a characteristic boundary:
//!
//! `∫_{J⁺(Σ)} (ψᵀPu - (P†ψ)ᵀu) dV = ∫_Σ ((D_Lψ)ᵀu - ψᵀD_L u - ψᵀ(βL^t Z⁰ - a²L^x Z¹)u) A_L`
//!
//! with `L` a future-directed null tangent of Σ, `Ľ` the transverse null
//! vector normalised by `g(L, Ľ) = -1` and `A_L = Ľ ⌟ vol` pulled back along
//! `x ↦ (σ(x), x)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::SpacetimeFunction;
use crate::geometry::{CharacteristicSurface, Spacetime1D};
use crate::grid::GridFunction;
use crate::operators::{apply_p, dual_operator, WaveOperatorSpec};
use crate::stencil;

/// Frame at one node (one side of a kink).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameVectors {
    pub l: [f64; 2],
    pub lcheck: [f64; 2],
    /// Density of `A_L` with respect to `dx`.
    pub a_l: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NullFrame {
    /// Frame built from the slope on the piece ending at each node.
    pub left: Vec<FrameVectors>,
    /// Frame built from the slope on the piece starting at each node.
    pub right: Vec<FrameVectors>,
    /// Kink nodes, where `left` and `right` differ.
    pub kinks: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameIdentities {
    pub max_g_ll: f64,
    pub max_g_cc: f64,
    /// max |g(L, Ľ) + 1|
    pub max_g_lc: f64,
    pub future_directed: bool,
}

fn frame_at(beta: f64, a: f64, slope: f64) -> FrameVectors {
    let sign = slope.signum();
    // |σ'| = a/√β on a null graph; use the exact value.
    let lt = a / beta.sqrt();
    let l = [lt, sign];
    let lcheck = [lt / (2.0 * a * a), -sign / (2.0 * a * a)];
    let vol = beta.sqrt() * a;
    FrameVectors {
        l,
        lcheck,
        a_l: vol * (lcheck[0] - lcheck[1] * sign * lt),
    }
}

/// The null frame along Σ. Kinks carry two one-sided frames.
pub fn null_frame(st: &Spacetime1D, surf: &CharacteristicSurface) -> Result<NullFrame> {
    let mut left = Vec::with_capacity(surf.nodes().len());
    let mut right = Vec::with_capacity(surf.nodes().len());
    for (j, (&x, &s)) in surf.nodes().iter().zip(surf.sigma()).enumerate() {
        let p = st.point(s, x)?;
        left.push(frame_at(p.beta, p.a, surf.slope_left(j)));
        right.push(frame_at(p.beta, p.a, surf.slope_right(j)));
    }
    Ok(NullFrame {
        left,
        right,
        kinks: surf.kinks().to_vec(),
    })
}

impl NullFrame {
    /// Rescales `L → αL`, which forces `Ľ → Ľ/α` and `A_L → A_L/α`.
    pub fn scaled(&self, alpha: f64) -> Result<NullFrame> {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("frame scale must be finite and nonzero, got {alpha}")));
        }
        let map = |f: &FrameVectors| FrameVectors {
            l: [alpha * f.l[0], alpha * f.l[1]],
            lcheck: [f.lcheck[0] / alpha, f.lcheck[1] / alpha],
            a_l: f.a_l / alpha,
        };
        Ok(NullFrame {
            left: self.left.iter().map(map).collect(),
            right: self.right.iter().map(map).collect(),
            kinks: self.kinks.clone(),
        })
    }

    pub fn identities(&self, st: &Spacetime1D, surf: &CharacteristicSurface) -> Result<FrameIdentities> {
        let mut out = FrameIdentities {
            max_g_ll: 0.0,
            max_g_cc: 0.0,
            max_g_lc: 0.0,
            future_directed: true,
        };
        for (j, (&x, &s)) in surf.nodes().iter().zip(surf.sigma()).enumerate() {
            let p = st.point(s, x)?;
            let g = |u: [f64; 2], v: [f64; 2]| -p.beta * u[0] * v[0] + p.a * p.a * u[1] * v[1];
            for f in [&self.left[j], &self.right[j]] {
                out.max_g_ll = out.max_g_ll.max(g(f.l, f.l).abs());
                out.max_g_cc = out.max_g_cc.max(g(f.lcheck, f.lcheck).abs());
                out.max_g_lc = out.max_g_lc.max((g(f.l, f.lcheck) + 1.0).abs());
                out.future_directed &= f.l[0] > 0.0;
            }
        }
        Ok(out)
    }
}

/// Value, `∂_t` and `∂_x` of a sampled field at the surface events.
struct SurfaceJet {
    value: Vec<Complex64>,
    dt: Vec<Complex64>,
    dx: Vec<Complex64>,
    /// False where σ leaves the sampled range (guard nodes only).
    inside: Vec<bool>,
}

fn surface_jet(st: &Spacetime1D, u: &SpacetimeFunction, surf: &CharacteristicSurface) -> Result<SurfaceJet> {
    let grid = u.grid();
    if grid.nt < 4 {
        return Err(Error::GridTooCoarseInTime { nt: grid.nt, required: 4 });
    }
    let m = u.rank();
    let n = u.n();
    let dx_slices: Vec<GridFunction> = u.slices().iter().map(GridFunction::dx).collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut jet = SurfaceJet {
        value: vec![zero; n * m],
        dt: vec![zero; n * m],
        dx: vec![zero; n * m],
        inside: vec![false; n],
    };
    for (j, (&x, &s)) in surf.nodes().iter().zip(surf.sigma()).enumerate() {
        if !grid.contains(s) {
            if st.in_guard(x) {
                continue;
            }
            return Err(Error::SurfaceOutsideSolution { t: s, x });
        }
        jet.inside[j] = true;
        let pos = (s - grid.t0) / grid.dt;
        let (start, w0) = stencil::cubic_weights(pos, grid.nt, 0, grid.dt);
        let (_, w1) = stencil::cubic_weights(pos, grid.nt, 1, grid.dt);
        for k in 0..4 {
            let (slice, dslice) = (u.slice(start + k), &dx_slices[start + k]);
            for c in 0..m {
                jet.value[j * m + c] += slice.get(j, c) * w0[k];
                jet.dt[j * m + c] += slice.get(j, c) * w1[k];
                jet.dx[j * m + c] += dslice.get(j, c) * w0[k];
            }
        }
    }
    Ok(jet)
}

/// Integrates per-node samples over x with Gregory corrections on each
/// smooth piece between kinks. `value(j, side)` gives the sample at node
/// `j` seen from the piece on its `side` (false = left, true = right).
fn integrate_pieces(n: usize, h: f64, kinks: &[usize], value: impl Fn(usize, bool) -> Complex64) -> Complex64 {
    let mut breaks = vec![0];
    breaks.extend(kinks.iter().copied().filter(|&k| k > 0 && k < n - 1));
    breaks.push(n - 1);
    let mut total = Complex64::new(0.0, 0.0);
    for piece in breaks.windows(2) {
        let (lo, hi) = (piece[0], piece[1]);
        let samples: Vec<Complex64> = (lo..=hi).map(|j| value(j, j != hi || hi == n - 1)).collect();
        let re: Vec<f64> = samples.iter().map(|z| z.re).collect();
        let im: Vec<f64> = samples.iter().map(|z| z.im).collect();
        total += Complex64::new(stencil::gregory(&re, h), stencil::gregory(&im, h));
    }
    total
}

/// `∫_Σ ((D_Lψ)ᵀu - ψᵀD_L u - ψᵀ(βL^t Z⁰ - a²L^x Z¹)u) A_L`. `D_L` is the
/// derivative along the (tangent) null direction `L`.
pub fn boundary_integral(
    op: &WaveOperatorSpec,
    st: &Spacetime1D,
    frame: &NullFrame,
    surf: &CharacteristicSurface,
    u: &SpacetimeFunction,
    psi: &SpacetimeFunction,
) -> Result<Complex64> {
    u.check_compatible(psi)?;
    let m = op.rank();
    if u.rank() != m {
        return Err(Error::ShapeMismatch("section rank differs from the operator rank".into()));
    }
    let ju = surface_jet(st, u, surf)?;
    let jp = surface_jet(st, psi, surf)?;
    let n = st.n();
    let mut coeffs = Vec::with_capacity(n);
    for (&x, &s) in surf.nodes().iter().zip(surf.sigma()) {
        let p = st.point(s, x)?;
        let [z0, z1, _] = op.coefficients_at(s, x)?;
        coeffs.push((p.beta, p.a, z0, z1));
    }
    let integrand = |j: usize, right: bool| {
        if !ju.inside[j] {
            return Complex64::new(0.0, 0.0);
        }
        let f = if right { &frame.right[j] } else { &frame.left[j] };
        let (beta, a, z0, z1) = &coeffs[j];
        let (lt, lx) = (f.l[0], f.l[1]);
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..m {
            let idx = j * m + r;
            let dl_psi = jp.dt[idx] * lt + jp.dx[idx] * lx;
            let dl_u = ju.dt[idx] * lt + ju.dx[idx] * lx;
            acc += dl_psi * ju.value[idx] - jp.value[idx] * dl_u;
            for k in 0..m {
                let conn = z0[r * m + k] * (beta * lt) - z1[r * m + k] * (a * a * lx);
                acc -= jp.value[idx] * conn * ju.value[j * m + k];
            }
        }
        acc * f.a_l
    };
    Ok(integrate_pieces(n, st.spacing(), &frame.kinks, integrand))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenReport {
    pub lhs: (f64, f64),
    pub rhs: (f64, f64),
    pub residual: (f64, f64),
    /// `|lhs - rhs| / max(|lhs|, |rhs|)` (absolute when both vanish).
    pub relative: f64,
}

impl GreenReport {
    fn new(lhs: Complex64, rhs: Complex64) -> Self {
        let res = lhs - rhs;
        let scale = lhs.norm().max(rhs.norm());
        GreenReport {
            lhs: (lhs.re, lhs.im),
            rhs: (rhs.re, rhs.im),
            residual: (res.re, res.im),
            relative: if scale > 0.0 { res.norm() / scale } else { res.norm() },
        }
    }
}

/// Both sides of Green's formula for sampled `u`, `ψ`. The bulk integral
/// over `{t ≥ σ(x)}` integrates the cubic time interpolant exactly from
/// σ(x_j) in each column, then applies Gregory's rule in x on each piece
/// between kinks.
pub fn green_residual(
    op: &WaveOperatorSpec,
    st: &Spacetime1D,
    surf: &CharacteristicSurface,
    u: &SpacetimeFunction,
    psi: &SpacetimeFunction,
) -> Result<GreenReport> {
    use rayon::prelude::*;
    u.check_compatible(psi)?;
    let pu = apply_p(op, st, u)?;
    let dual_psi = apply_p(&dual_operator(op, st), st, psi)?;
    let grid = u.grid();
    let (n, m) = (u.n(), u.rank());
    let vols: Vec<Vec<f64>> = grid.times().map(|t| st.slice(t).map(|g| g.vol)).collect::<Result<_>>()?;
    let columns: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let (mut re, mut im) = (Vec::with_capacity(grid.nt), Vec::with_capacity(grid.nt));
            for i in 0..grid.nt {
                let mut z = Complex64::new(0.0, 0.0);
                for c in 0..m {
                    z += psi.slice(i).get(j, c) * pu.slice(i).get(j, c) - dual_psi.slice(i).get(j, c) * u.slice(i).get(j, c);
                }
                z *= vols[i][j];
                re.push(z.re);
                im.push(z.im);
            }
            let lo = surf.sigma()[j];
            let hi = grid.end();
            Complex64::new(
                stencil::integrate_cubic(&re, grid.t0, grid.dt, lo, hi),
                stencil::integrate_cubic(&im, grid.t0, grid.dt, lo, hi),
            )
        })
        .collect();
    let lhs = integrate_pieces(n, st.spacing(), surf.kinks(), |j, _| columns[j]);
    let frame = null_frame(st, surf)?;
    let rhs = boundary_integral(op, st, &frame, surf, u, psi)?;
    Ok(GreenReport::new(lhs, rhs))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenRefinement {
    pub resolutions: Vec<usize>,
    pub reports: Vec<GreenReport>,
    /// `log2` of successive ratios of the relative residual.
    pub orders: Vec<f64>,
}

/// Runs `scenario(n)` over doubling resolutions and reports observed orders.
pub fn green_refinement(resolutions: &[usize], scenario: impl Fn(usize) -> Result<GreenReport> + Sync) -> Result<GreenRefinement> {
    use rayon::prelude::*;
    let reports: Vec<GreenReport> = resolutions.par_iter().map(|&n| scenario(n)).collect::<Result<_>>()?;
    let orders = reports
        .windows(2)
        .zip(resolutions.windows(2))
        .map(|(r, n)| (r[0].relative / r[1].relative).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect();
    Ok(GreenRefinement {
        resolutions: resolutions.to_vec(),
        reports,
        orders,
    })
}
