//! 1+1 spacetimes in temporal-splitting form `g = -β dt² + a² dx²` and
//! their lightlike graph hypersurfaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::grid::GridFunction;

/// Relative size below which sampled data counts as vanishing in a guard region.
pub const GUARD_TOLERANCE: f64 = 1e-10;

/// Null residual tolerance for characteristic surfaces.
pub const TOL_NULL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    Circle { circumference: f64 },
    /// Periodic box `[-half_width, half_width)` emulating the real line; data
    /// must vanish on the outer `guard` strip at both ends.
    Line { half_width: f64, guard: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Metric {
    Minkowski,
    /// β = 1, a = 1 + ε sin t cos x.
    Breathing { epsilon: f64 },
    Custom { beta: String, a: String },
}

impl Metric {
    pub fn expressions(&self) -> (String, String) {
        match self {
            Metric::Minkowski => ("1".into(), "1".into()),
            Metric::Breathing { epsilon } => ("1".into(), format!("1 + {epsilon:?}*sin(t)*cos(x)")),
            Metric::Custom { beta, a } => (beta.clone(), a.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeConfig {
    pub topology: Topology,
    pub t_range: [f64; 2],
    pub metric: Metric,
    pub n: usize,
}

/// Coefficients of the metric sampled on one time slice.
#[derive(Debug, Clone)]
pub struct SliceGeometry {
    pub time: f64,
    pub beta: Vec<f64>,
    pub a: Vec<f64>,
    /// Coordinate light speed √β/a, also the flux coefficient of the spatial
    /// part of the d'Alembertian.
    pub speed: Vec<f64>,
    /// Volume density √β·a.
    pub vol: Vec<f64>,
    /// (1/(√β a)) ∂_t(a/√β), the first-order time coefficient of □.
    pub gamma: Vec<f64>,
}

/// Metric coefficients and the derivatives needed pointwise.
#[derive(Debug, Clone, Copy)]
pub struct PointGeometry {
    pub beta: f64,
    pub a: f64,
    pub speed: f64,
    pub vol: f64,
    pub gamma: f64,
    /// ∂_x(√β/a)
    pub speed_dx: f64,
}

#[derive(Debug, Clone)]
struct Fields {
    beta: Expr,
    a: Expr,
    speed: Expr,
    speed_dx: Expr,
    vol: Expr,
    gamma: Expr,
}

impl Fields {
    fn build(beta: Expr, a: Expr) -> Fields {
        let root = beta.clone().sqrt();
        let speed = root.clone() / a.clone();
        let vol = root.clone() * a.clone();
        let gamma = (a.clone() / root).derivative(Var::T) / vol.clone();
        Fields {
            speed_dx: speed.derivative(Var::X),
            beta,
            a,
            speed,
            vol,
            gamma,
        }
    }
}

fn eval(e: &Expr, field: &str, t: f64, x: f64) -> Result<f64> {
    e.eval(t, x).map_err(|source| Error::Evaluation {
        field: field.to_string(),
        source,
    })
}

/// A globally hyperbolic 1+1 spacetime `I × Σ` with zero shift.
#[derive(Debug, Clone)]
pub struct Spacetime1D {
    topology: Topology,
    t_range: [f64; 2],
    n: usize,
    nodes: Vec<f64>,
    fields: Fields,
    beta_min: f64,
    a_min: f64,
    max_speed: f64,
}

impl Spacetime1D {
    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn t_range(&self) -> [f64; 2] {
        self.t_range
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Circumference of the periodic spatial grid.
    pub fn period(&self) -> f64 {
        match self.topology {
            Topology::Circle { circumference } => circumference,
            Topology::Line { half_width, .. } => 2.0 * half_width,
        }
    }

    pub fn origin(&self) -> f64 {
        self.nodes[0]
    }

    pub fn spacing(&self) -> f64 {
        self.period() / self.n as f64
    }

    pub fn beta_min(&self) -> f64 {
        self.beta_min
    }

    pub fn a_min(&self) -> f64 {
        self.a_min
    }

    /// Largest coordinate light speed √β/a over the validation grid.
    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    pub fn is_line(&self) -> bool {
        matches!(self.topology, Topology::Line { .. })
    }

    pub fn beta_expr(&self) -> &Expr {
        &self.fields.beta
    }

    pub fn a_expr(&self) -> &Expr {
        &self.fields.a
    }

    /// √β·a as an expression, for building dual-operator coefficients.
    pub fn vol_expr(&self) -> &Expr {
        &self.fields.vol
    }

    /// Half-width of the data-carrying interior `[-X+G, X-G]` of a line box.
    pub fn interior_half_width(&self) -> Option<f64> {
        match self.topology {
            Topology::Line { half_width, guard } => Some(half_width - guard),
            Topology::Circle { .. } => None,
        }
    }

    pub fn in_guard(&self, x: f64) -> bool {
        match self.interior_half_width() {
            Some(inner) => x.abs() > inner,
            None => false,
        }
    }

    pub fn grid_zeros(&self, m: usize) -> GridFunction {
        GridFunction::zeros(self.n, m, self.period())
    }

    pub fn point(&self, t: f64, x: f64) -> Result<PointGeometry> {
        let f = &self.fields;
        Ok(PointGeometry {
            beta: eval(&f.beta, "beta", t, x)?,
            a: eval(&f.a, "a", t, x)?,
            speed: eval(&f.speed, "sqrt(beta)/a", t, x)?,
            vol: eval(&f.vol, "sqrt(beta)*a", t, x)?,
            gamma: eval(&f.gamma, "gamma", t, x)?,
            speed_dx: eval(&f.speed_dx, "d/dx sqrt(beta)/a", t, x)?,
        })
    }

    pub fn slice(&self, time: f64) -> Result<SliceGeometry> {
        let f = &self.fields;
        let n = self.n;
        let mut out = SliceGeometry {
            time,
            beta: Vec::with_capacity(n),
            a: Vec::with_capacity(n),
            speed: Vec::with_capacity(n),
            vol: Vec::with_capacity(n),
            gamma: Vec::with_capacity(n),
        };
        for &x in &self.nodes {
            out.beta.push(eval(&f.beta, "beta", time, x)?);
            out.a.push(eval(&f.a, "a", time, x)?);
            out.speed.push(eval(&f.speed, "sqrt(beta)/a", time, x)?);
            out.vol.push(eval(&f.vol, "sqrt(beta)*a", time, x)?);
            out.gamma.push(eval(&f.gamma, "gamma", time, x)?);
        }
        Ok(out)
    }

    /// Checks that `data` vanishes on the guard strips of a line box.
    pub fn check_support(&self, data: &GridFunction, what: &str) -> Result<()> {
        self.check_support_scaled(data, data.max_abs(), what)
    }

    /// As [`Self::check_support`], relative to an externally chosen scale.
    pub fn check_support_scaled(&self, data: &GridFunction, scale: f64, what: &str) -> Result<()> {
        if !self.is_line() {
            return Ok(());
        }
        let scale = scale.max(f64::MIN_POSITIVE);
        for (j, &x) in self.nodes.iter().enumerate() {
            if !self.in_guard(x) {
                continue;
            }
            for c in 0..data.rank() {
                if data.get(j, c).norm() > GUARD_TOLERANCE * scale {
                    return Err(Error::BadGuardRegion(format!(
                        "{what} is nonzero in the guard region at x = {x}"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn make_spacetime(config: &SpacetimeConfig) -> Result<Spacetime1D> {
    let (beta_src, a_src) = config.metric.expressions();
    let parse = |src: &str, field: &str| {
        Expr::parse(src).map_err(|source| Error::ExpressionParse {
            field: field.to_string(),
            source,
        })
    };
    let beta = parse(&beta_src, "beta")?;
    let a = parse(&a_src, "a")?;

    let n = config.n;
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "node count must be an even integer >= 4, got {n}"
        )));
    }
    let [t0, t1] = config.t_range;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(Error::InvalidInput(format!("bad time range [{t0}, {t1}]")));
    }
    let (origin, period) = match config.topology {
        Topology::Circle { circumference } => {
            if !(circumference > 0.0) {
                return Err(Error::InvalidInput("circumference must be positive".into()));
            }
            (0.0, circumference)
        }
        Topology::Line { half_width, guard } => {
            if !(half_width > 0.0) || !(guard > 0.0) || guard >= half_width {
                return Err(Error::BadGuardRegion(format!(
                    "guard {guard} must lie in (0, half_width = {half_width})"
                )));
            }
            (-half_width, 2.0 * half_width)
        }
    };
    let dx = period / n as f64;
    let nodes: Vec<f64> = (0..n).map(|j| origin + j as f64 * dx).collect();

    let fields = Fields::build(beta, a);
    let steps = (((t1 - t0) / dx).ceil() as usize).max(1);
    let mut beta_min = f64::INFINITY;
    let mut a_min = f64::INFINITY;
    let mut max_speed = 0.0_f64;
    for i in 0..=steps {
        let t = t0 + (t1 - t0) * i as f64 / steps as f64;
        for &x in &nodes {
            let b = eval(&fields.beta, "beta", t, x)?;
            if !(b > 0.0) {
                return Err(Error::NonPositiveLapse { t, x, value: b });
            }
            let av = eval(&fields.a, "a", t, x)?;
            if !(av > 0.0) {
                return Err(Error::NonPositiveScale { t, x, value: av });
            }
            beta_min = beta_min.min(b);
            a_min = a_min.min(av);
            max_speed = max_speed.max(b.sqrt() / av);
        }
    }

    if let Topology::Line { guard, .. } = config.topology {
        let travel = max_speed * (t1 - t0);
        if guard <= travel {
            return Err(Error::BadGuardRegion(format!(
                "guard width {guard} does not exceed the travel distance {travel}"
            )));
        }
    }

    Ok(Spacetime1D {
        topology: config.topology,
        t_range: config.t_range,
        n,
        nodes,
        fields,
        beta_min,
        a_min,
        max_speed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceShape {
    FutureCone,
    PastCone,
    /// Null line with σ' = sign · a/√β.
    Line { slope_sign: i8 },
}

/// A lightlike graph `t = σ(x)` over the spatial nodes.
#[derive(Debug, Clone)]
pub struct CharacteristicSurface {
    nodes: Vec<f64>,
    sigma: Vec<f64>,
    slope_left: Vec<f64>,
    slope_right: Vec<f64>,
    kinks: Vec<usize>,
    past_boundary: bool,
}

impl CharacteristicSurface {
    /// Builds a surface from graph values, differentiating σ by fourth-order
    /// differences that never straddle a kink.
    pub fn from_values(st: &Spacetime1D, sigma: Vec<f64>, kinks: Vec<usize>) -> Result<Self> {
        let n = st.n();
        if sigma.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "surface has {} values for {n} nodes",
                sigma.len()
            )));
        }
        let mut kinks = kinks;
        kinks.sort_unstable();
        kinks.dedup();
        let h = st.spacing();
        // Smooth pieces are [breaks[i], breaks[i+1]].
        let mut breaks = vec![0];
        breaks.extend(kinks.iter().copied().filter(|&k| k > 0 && k < n - 1));
        breaks.push(n - 1);
        let mut slope_left = vec![0.0; n];
        let mut slope_right = vec![0.0; n];
        for piece in breaks.windows(2) {
            let (lo, hi) = (piece[0], piece[1]);
            for j in lo..=hi {
                let d = fd_first_derivative(&sigma[lo..=hi], j - lo, h);
                if j > lo || lo == 0 {
                    slope_left[j] = d;
                }
                if j < hi || hi == n - 1 {
                    slope_right[j] = d;
                }
            }
        }
        Ok(Self {
            nodes: st.nodes().to_vec(),
            sigma,
            slope_left,
            slope_right,
            kinks,
            past_boundary: true,
        })
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn kinks(&self) -> &[usize] {
        &self.kinks
    }

    pub fn is_kink(&self, j: usize) -> bool {
        self.kinks.binary_search(&j).is_ok()
    }

    /// Whether Σ is the past boundary of its own future (always true for graphs).
    pub fn past_boundary(&self) -> bool {
        self.past_boundary
    }

    /// One-sided slope from the left (`dσ/dx` on the piece ending at `j`).
    pub fn slope_left(&self, j: usize) -> f64 {
        self.slope_left[j]
    }

    pub fn slope_right(&self, j: usize) -> f64 {
        self.slope_right[j]
    }

    /// Slope at a non-kink node (the average of the one-sided slopes at a kink).
    pub fn slope(&self, j: usize) -> f64 {
        0.5 * (self.slope_left[j] + self.slope_right[j])
    }

    pub fn min_sigma(&self) -> f64 {
        self.sigma.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_sigma(&self) -> f64 {
        self.sigma.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Shifts the whole surface in time.
    pub fn shifted(&self, dt: f64) -> CharacteristicSurface {
        let mut out = self.clone();
        out.sigma.iter_mut().for_each(|s| *s += dt);
        out
    }

    /// σ(x) by linear interpolation between nodes (linear extrapolation past
    /// the last node).
    pub fn sigma_at(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        let h = self.nodes[1] - self.nodes[0];
        let pos = (x - self.nodes[0]) / h;
        let i = (pos.floor().max(0.0) as usize).min(n - 2);
        let frac = pos - i as f64;
        self.sigma[i] + frac * (self.sigma[i + 1] - self.sigma[i])
    }

    /// Largest null residual |−β σ'² + a²| over all nodes and one-sided slopes.
    pub fn null_residual(&self, st: &Spacetime1D) -> Result<f64> {
        let mut worst = 0.0_f64;
        for (j, (&x, &s)) in self.nodes.iter().zip(&self.sigma).enumerate() {
            let p = st.point(s, x)?;
            for slope in [self.slope_left[j], self.slope_right[j]] {
                worst = worst.max((-p.beta * slope * slope + p.a * p.a).abs());
            }
        }
        Ok(worst)
    }
}

/// Fourth-order first derivative of equally spaced samples at index `i`,
/// using the five nearest samples (fewer if the piece is short).
fn fd_first_derivative(values: &[f64], i: usize, h: f64) -> f64 {
    let len = values.len();
    if len < 2 {
        return 0.0;
    }
    let width = len.min(5);
    let start = i.saturating_sub(width / 2).min(len - width);
    let offsets: Vec<f64> = (start..start + width).map(|k| k as f64 - i as f64).collect();
    let weights = crate::stencil::fornberg_weights(0.0, &offsets, 1);
    let sum: f64 = weights[1]
        .iter()
        .zip(&values[start..start + width])
        .map(|(w, v)| w * v)
        .sum();
    sum / h
}

/// Integrates σ' = ±a/√β outward from the apex with classical RK4, one step
/// per node spacing. The apex is snapped to the nearest node.
pub fn lightlike_graph(
    st: &Spacetime1D,
    apex: (f64, f64),
    shape: SurfaceShape,
) -> Result<CharacteristicSurface> {
    let Some(inner) = st.interior_half_width() else {
        return Err(Error::InvalidInput(
            "lightlike graphs are built on line topology".into(),
        ));
    };
    let (t0, x0) = apex;
    let [tmin, tmax] = st.t_range();
    if !(t0 > tmin && t0 < tmax) || x0.abs() > inner {
        return Err(Error::InvalidInput(format!(
            "apex ({t0}, {x0}) is not interior to the domain"
        )));
    }
    let n = st.n();
    let h = st.spacing();
    let nodes = st.nodes();
    let j0 = (((x0 - nodes[0]) / h).round() as usize).min(n - 1);

    // dσ/dx for rightward (+1) and leftward (-1) integration.
    let sign_of = |direction: f64| -> f64 {
        match shape {
            SurfaceShape::FutureCone => direction,
            SurfaceShape::PastCone => -direction,
            SurfaceShape::Line { slope_sign } => f64::from(slope_sign.signum()),
        }
    };
    let rhs = |sign: f64, sigma: f64, x: f64| -> Result<f64> {
        let p = st.point(sigma, x)?;
        Ok(sign * p.a / p.beta.sqrt())
    };

    let mut sigma = vec![0.0; n];
    let mut slope_left = vec![0.0; n];
    let mut slope_right = vec![0.0; n];
    sigma[j0] = t0;
    for direction in [1.0_f64, -1.0] {
        let sign = sign_of(direction);
        let step = direction * h;
        let mut s = t0;
        let mut j = j0;
        let slope0 = rhs(sign, s, nodes[j0])?;
        if direction > 0.0 {
            slope_right[j0] = slope0;
        } else {
            slope_left[j0] = slope0;
        }
        loop {
            let next = if direction > 0.0 {
                if j + 1 >= n {
                    break;
                }
                j + 1
            } else {
                if j == 0 {
                    break;
                }
                j - 1
            };
            let x = nodes[j];
            let k1 = rhs(sign, s, x)?;
            let k2 = rhs(sign, s + 0.5 * step * k1, x + 0.5 * step)?;
            let k3 = rhs(sign, s + 0.5 * step * k2, x + 0.5 * step)?;
            let k4 = rhs(sign, s + step * k3, x + step)?;
            s += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            j = next;
            sigma[j] = s;
            let slope = rhs(sign, s, nodes[j])?;
            slope_left[j] = slope;
            slope_right[j] = slope;
            if nodes[j].abs() <= inner && !(s > tmin && s < tmax) {
                return Err(Error::SurfaceLeavesDomain { x: nodes[j], sigma: s });
            }
        }
    }
    let kinks = match shape {
        SurfaceShape::Line { .. } => {
            let s = rhs(sign_of(1.0), t0, nodes[j0])?;
            slope_left[j0] = s;
            slope_right[j0] = s;
            vec![]
        }
        _ => vec![j0],
    };
    if j0 == 0 {
        slope_left[0] = slope_right[0];
    }
    if j0 == n - 1 {
        slope_right[j0] = slope_left[j0];
    }
    Ok(CharacteristicSurface {
        nodes: nodes.to_vec(),
        sigma,
        slope_left,
        slope_right,
        kinks,
        past_boundary: true,
    })
}

/// Whether the event lies in the causal future of the surface, `t ≥ σ(x)`.
pub fn in_causal_future(surf: &CharacteristicSurface, event: (f64, f64)) -> bool {
    event.0 >= surf.sigma_at(event.1)
}

/// V-shape criterion: the surface descends along the null direction on the
/// left end and ascends on the right end.
pub fn is_past_compact(st: &Spacetime1D, surf: &CharacteristicSurface) -> Result<bool> {
    let n = surf.sigma.len();
    let null_slope = |j: usize| -> Result<f64> {
        let p = st.point(surf.sigma[j], surf.nodes[j])?;
        Ok(p.a / p.beta.sqrt())
    };
    let left = surf.slope_right[0];
    let right = surf.slope_left[n - 1];
    let tol = 1e-6;
    let (nl, nr) = (null_slope(0)?, null_slope(n - 1)?);
    Ok((left + nl).abs() <= tol * nl && (right - nr).abs() <= tol * nr)
}

/// A spacelike graph `t = τ + h(x)`.
#[derive(Debug, Clone)]
pub struct TiltedSlice {
    pub tau: f64,
    pub h: Vec<f64>,
}

impl TiltedSlice {
    /// Accepts the slice if |h'| < a/√β − margin at every node.
    pub fn new(st: &Spacetime1D, tau: f64, h: Vec<f64>, margin: f64) -> Result<Self> {
        if h.len() != st.n() {
            return Err(Error::ShapeMismatch("slice graph length".into()));
        }
        let dx = st.spacing();
        for j in 0..h.len() {
            let slope = fd_first_derivative(&h, j, dx);
            let p = st.point(tau + h[j], st.nodes()[j])?;
            if slope.abs() >= p.a / p.beta.sqrt() - margin {
                return Err(Error::SliceNotSpacelike { w: slope });
            }
        }
        Ok(Self { tau, h })
    }
}
