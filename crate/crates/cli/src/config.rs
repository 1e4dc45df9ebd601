//! Scenario files: one JSON document per run.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use lorwave::cauchy::DtControl;
use lorwave::geometry::{Metric, SurfaceShape, Topology};
use lorwave::goursat::GoursatParams;
use lorwave::operators::{EntrySource, OperatorConfig};
use lorwave::{Expr, SpacetimeConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub spacetime: SpacetimeBlock,
    pub operator: OperatorConfig,
    pub discretization: Discretization,
    pub problem: Problem,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default)]
    pub output: OutputBlock,
    /// Seed of the random test sections.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpacetimeBlock {
    pub topology: Topology,
    pub t_range: [f64; 2],
    pub metric: Metric,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub n: usize,
    #[serde(default)]
    pub cfl: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
}

impl Discretization {
    pub fn control(&self) -> Result<DtControl> {
        match (self.cfl, self.dt) {
            (Some(c), None) => Ok(DtControl::Cfl(c)),
            (None, Some(dt)) => Ok(DtControl::Fixed(dt)),
            (None, None) => Ok(DtControl::default()),
            (Some(_), Some(_)) => Err(CliError::invalid("discretization", "give either cfl or dt, not both")),
        }
    }
}

/// A component list of expressions in `t` and `x`.
pub type Components = Vec<EntrySource>;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    /// `(t, x)` of the apex (or of any point on a null line).
    pub apex: [f64; 2],
    pub shape: SurfaceShape,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExactBlock {
    pub u: Components,
    #[serde(default = "default_exact_tolerance")]
    pub tolerance: f64,
}

fn default_exact_tolerance() -> f64 {
    1e-6
}

fn default_replay_tolerance() -> f64 {
    5e-2
}

fn default_discrepancy_tolerance() -> f64 {
    5e-3
}

fn default_min_spatial_ratio() -> f64 {
    8.0
}

fn default_order_band() -> [f64; 2] {
    [3.7, 4.3]
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Problem {
    Cauchy {
        tau: f64,
        u0: Components,
        /// `∂_t u` on the initial slice.
        v0: Components,
        #[serde(default)]
        source: Option<Components>,
        #[serde(default)]
        exact: Option<ExactBlock>,
    },
    Goursat {
        surface: SurfaceSpec,
        trace: Components,
        #[serde(default)]
        source: Option<Components>,
        #[serde(default)]
        params: GoursatParams,
        /// Second parameter set for the uniqueness probe.
        #[serde(default)]
        compare: Option<GoursatParams>,
        #[serde(default)]
        exact: Option<ExactBlock>,
        #[serde(default = "default_replay_tolerance")]
        replay_tolerance: f64,
        #[serde(default = "default_discrepancy_tolerance")]
        discrepancy_tolerance: f64,
    },
    Convergence {
        u: Components,
        /// `∂_t u` of the exact solution.
        v: Components,
        resolutions: Vec<usize>,
        spatial_dt: f64,
        temporal_n: usize,
        dts: Vec<f64>,
        #[serde(default = "default_min_spatial_ratio")]
        min_spatial_ratio: f64,
        #[serde(default = "default_order_band")]
        order_band: [f64; 2],
    },
    Counterexample {},
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Problem::Cauchy { .. } => "cauchy",
            Problem::Goursat { .. } => "goursat",
            Problem::Convergence { .. } => "convergence",
            Problem::Counterexample {} => "counterexample",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    #[serde(default)]
    pub energy: Option<EnergyBlock>,
    #[serde(default)]
    pub slab: Option<SlabBlock>,
    #[serde(default)]
    pub green: Option<GreenBlock>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyBlock {
    pub k: Vec<f64>,
    /// Largest accepted relative change of C between N and 2N.
    #[serde(default = "default_stability")]
    pub stability: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SlabBlock {
    pub k: Vec<usize>,
    pub interval: [f64; 2],
    #[serde(default = "default_stability")]
    pub stability: f64,
}

fn default_stability() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GreenBlock {
    pub surface: SurfaceSpec,
    pub bumps: usize,
    pub t_box: [f64; 2],
    pub x_box: [f64; 2],
    pub widths: [f64; 2],
    /// Extra resolutions for the refinement sweep (empty: single run).
    #[serde(default)]
    pub resolutions: Vec<usize>,
    #[serde(default = "default_green_tolerance")]
    pub tolerance: f64,
}

fn default_green_tolerance() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

/// Parses a scenario, reporting schema errors with their field path.
pub fn parse(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

impl Scenario {
    pub fn spacetime_config(&self) -> SpacetimeConfig {
        self.spacetime_config_at(self.discretization.n)
    }

    pub fn spacetime_config_at(&self, n: usize) -> SpacetimeConfig {
        SpacetimeConfig {
            topology: self.spacetime.topology,
            t_range: self.spacetime.t_range,
            metric: self.spacetime.metric.clone(),
            n,
        }
    }

    /// Referential checks that need no compute.
    pub fn validate(&self, command: &str) -> Result<()> {
        let [t0, t1] = self.spacetime.t_range;
        if !(t0 < t1) {
            return Err(CliError::invalid("spacetime.t_range", "must be increasing"));
        }
        if self.discretization.n < 4 {
            return Err(CliError::invalid("discretization.n", "need at least 4 nodes"));
        }
        self.discretization.control()?;
        let rank = self.rank();
        let check_components = |path: &str, c: &Components| {
            if c.len() != rank {
                return Err(CliError::invalid(path, &format!("expected {rank} components, got {}", c.len())));
            }
            compile(c, path).map(|_| ())
        };
        let check_surface = |path: &str, s: &SurfaceSpec| {
            let [t, x] = s.apex;
            let inner = match self.spacetime.topology {
                Topology::Line { half_width, guard } => half_width - guard,
                Topology::Circle { .. } => {
                    return Err(CliError::invalid(path, "characteristic surfaces need line topology"))
                }
            };
            if !(x.abs() < inner && t >= t0 && t <= t1) {
                return Err(CliError::invalid(&format!("{path}.apex"), "apex lies outside the domain"));
            }
            Ok(())
        };
        match &self.problem {
            Problem::Cauchy { tau, u0, v0, source, exact } => {
                if !(*tau >= t0 && *tau <= t1) {
                    return Err(CliError::invalid("problem.tau", "outside the time range"));
                }
                check_components("problem.u0", u0)?;
                check_components("problem.v0", v0)?;
                if let Some(s) = source {
                    check_components("problem.source", s)?;
                }
                if let Some(e) = exact {
                    check_components("problem.exact.u", &e.u)?;
                }
            }
            Problem::Goursat { surface, trace, source, exact, .. } => {
                check_surface("problem.surface", surface)?;
                check_components("problem.trace", trace)?;
                if let Some(s) = source {
                    check_components("problem.source", s)?;
                }
                if let Some(e) = exact {
                    check_components("problem.exact.u", &e.u)?;
                }
            }
            Problem::Convergence { u, v, resolutions, dts, .. } => {
                check_components("problem.u", u)?;
                check_components("problem.v", v)?;
                if resolutions.len() < 3 {
                    return Err(CliError::invalid("problem.resolutions", "need at least three resolutions"));
                }
                if dts.len() < 3 {
                    return Err(CliError::invalid("problem.dts", "need at least three time steps"));
                }
            }
            Problem::Counterexample {} => {}
        }
        let needs = |kind: &str| -> Result<()> {
            if self.problem.kind() != kind {
                return Err(CliError::invalid(
                    "problem.kind",
                    &format!("{command} needs a {kind} problem, got {}", self.problem.kind()),
                ));
            }
            Ok(())
        };
        match command {
            "solve-cauchy" => needs("cauchy")?,
            "solve-goursat" => needs("goursat")?,
            "convergence" => needs("convergence")?,
            "counterexample" => needs("counterexample")?,
            "verify-energy" => {
                needs("cauchy")?;
                let e = self.verify.energy.as_ref().ok_or_else(|| CliError::invalid("verify.energy", "missing"))?;
                if e.k.is_empty() {
                    return Err(CliError::invalid("verify.energy.k", "k-list is empty"));
                }
            }
            "verify-slab" => {
                needs("cauchy")?;
                let s = self.verify.slab.as_ref().ok_or_else(|| CliError::invalid("verify.slab", "missing"))?;
                if s.k.is_empty() {
                    return Err(CliError::invalid("verify.slab.k", "k-list is empty"));
                }
                if !(s.interval[0] < s.interval[1] && s.interval[0] >= t0 && s.interval[1] <= t1) {
                    return Err(CliError::invalid("verify.slab.interval", "must be an increasing sub-interval of t_range"));
                }
            }
            "verify-green" => {
                let g = self.verify.green.as_ref().ok_or_else(|| CliError::invalid("verify.green", "missing"))?;
                check_surface("verify.green.surface", &g.surface)?;
                if g.bumps == 0 {
                    return Err(CliError::invalid("verify.green.bumps", "need at least one bump"));
                }
                for (path, r) in [("t_box", g.t_box), ("x_box", g.x_box), ("widths", g.widths)] {
                    if !(r[0] < r[1]) {
                        return Err(CliError::invalid(&format!("verify.green.{path}"), "must be an increasing pair"));
                    }
                }
            }
            other => return Err(CliError::Usage(format!("unknown subcommand {other}"))),
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        match &self.operator {
            OperatorConfig::Dalembert { rank } | OperatorConfig::KleinGordon { rank, .. } => *rank,
            OperatorConfig::Custom { rank, .. } => *rank,
        }
    }
}

/// Compiled component expressions.
#[derive(Debug, Clone)]
pub struct Field {
    parts: Vec<(Expr, Expr)>,
}

impl Field {
    pub fn eval(&self, t: f64, x: f64, out: &mut [Complex64]) -> std::result::Result<(), lorwave::expr::EvalError> {
        for (o, (re, im)) in out.iter_mut().zip(&self.parts) {
            *o = Complex64::new(re.eval(t, x)?, im.eval(t, x)?);
        }
        Ok(())
    }
}

pub fn compile(c: &Components, path: &str) -> Result<Field> {
    let parse = |src: &str, p: String| {
        Expr::parse(src).map_err(|e| CliError::Config {
            path: p,
            message: e.to_string(),
        })
    };
    let parts = c
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let p = format!("{path}[{i}]");
            Ok(match e {
                EntrySource::Number(v) => (Expr::constant(*v), Expr::constant(0.0)),
                EntrySource::Real(s) => (parse(s, p)?, Expr::constant(0.0)),
                EntrySource::Complex([re, im]) => (parse(re, format!("{p}[0]"))?, parse(im, format!("{p}[1]"))?),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Field { parts })
}
