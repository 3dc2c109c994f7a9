//! Problem files: JSON with expressions as strings.
//!
//! ```json
//! {
//!   "kind": "higher",
//!   "algebroid": { "constructor": "tangent", "dim": 3 },
//!   "lagrangian": { "order": 2, "expr": "(y1_1^2 + y2_1^2 + y3_1^2 - y1_2^2 - y2_2^2 - y3_2^2)/2" },
//!   "numeric": { "T": 1.0, "dt": 0.001 }
//! }
//! ```
//!
//! Parsing a file is only half the job; [`ProblemConfig::validate`] turns it
//! into a [`Problem`] whose expressions, dimensions and step sizes have all
//! been checked, so commands never start writing output for a bad config.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::algebroid::{abelian, so3, tangent_algebroid, AlgebroidError, AlgebroidSpec};
use crate::expr::{parse, CompiledExpr, Expr, ParseError};
use crate::higher::{HigherError, LagrangianSpec};
use crate::strings::{BivectorLagrangian, GraphSurface, StringsError, SurfaceGrid};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Syntax {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{field}: {source}")]
    Expression {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("{field}: {source}")]
    Surface {
        field: String,
        #[source]
        source: StringsError,
    },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_field(field: &str, source: &str) -> Result<Expr, ConfigError> {
    parse(source).map_err(|source| ConfigError::Expression {
        field: field.to_string(),
        source,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    FirstOrder,
    Higher,
    LieAlgebra,
    G2,
    StringResidual,
    Plateau,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::FirstOrder => "first_order",
            ProblemKind::Higher => "higher",
            ProblemKind::LieAlgebra => "lie_algebra",
            ProblemKind::G2 => "g2",
            ProblemKind::StringResidual => "string_residual",
            ProblemKind::Plateau => "plateau",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constructor {
    Tangent,
    So3,
    Abelian,
}

/// Either a named constructor or explicit anchor/structure expressions in
/// the base coordinates.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebroidBlock {
    pub constructor: Option<Constructor>,
    pub dim: Option<usize>,
    pub base: Option<Vec<String>>,
    /// `anchor[A][a]`.
    pub anchor: Option<Vec<Vec<String>>>,
    /// `structure[c][a][b]`.
    pub structure: Option<Vec<Vec<Vec<String>>>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianBlock {
    pub order: Option<usize>,
    pub expr: Option<String>,
    /// Target dimension of a string Lagrangian.
    pub dim: Option<usize>,
    /// Degree to test with `check`.
    pub homogeneity: Option<i32>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericBlock {
    #[serde(rename = "T", alias = "t_final")]
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    /// Axiom tolerance for `check`, Newton tolerance for `plateau`, residual
    /// bound for `residual`.
    pub tol: Option<f64>,
    pub drift_tol: Option<f64>,
    pub error_tol: Option<f64>,
    pub initial: Option<Vec<f64>>,
    pub grid: Option<[usize; 2]>,
    pub x_range: Option<[f64; 2]>,
    pub y_range: Option<[f64; 2]>,
    pub max_iter: Option<usize>,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryBlock {
    /// `z(x, y)` on the boundary of the rectangle.
    pub expr: String,
    /// Exact solution to compare the interior against.
    pub analytic: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoBlock {
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    /// Surface file (`.csv` or `.json`) for `string_residual`, relative to
    /// the config file.
    pub input: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub algebroid: Option<AlgebroidBlock>,
    pub lagrangian: Option<LagrangianBlock>,
    #[serde(default)]
    pub numeric: NumericBlock,
    pub boundary: Option<BoundaryBlock>,
    #[serde(default)]
    pub io: IoBlock,
}

pub const DEFAULT_AXIOM_TOL: f64 = 1e-10;
pub const DEFAULT_DRIFT_TOL: f64 = 1e-8;
pub const DEFAULT_PLATEAU_ERROR_TOL: f64 = 1e-3;
pub const DEFAULT_GRID: usize = 65;
pub const DEFAULT_STRING_DIM: usize = 3;

/// A mechanical problem on an algebroid (or a Lie algebra for `g2`).
#[derive(Clone, Debug)]
pub struct Mechanics {
    pub spec: LagrangianSpec,
    /// The raw Lagrangian; for `g2` it lives in `(x, z)`, not in `spec`.
    pub lagrangian: Expr,
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub t_final: f64,
    pub dt: f64,
    pub initial: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PlateauProblem {
    pub boundary: GraphSurface,
    pub analytic: Option<CompiledExpr>,
    pub tol: f64,
    pub max_iter: usize,
    pub error_tol: f64,
}

#[derive(Clone, Debug)]
pub enum Surface {
    Graph(GraphSurface),
    Grid(SurfaceGrid),
}

impl Surface {
    pub fn grid(&self) -> SurfaceGrid {
        match self {
            Surface::Graph(g) => SurfaceGrid::from_graph(g),
            Surface::Grid(g) => g.clone(),
        }
    }
}

/// A validated problem.
#[derive(Clone, Debug)]
pub struct Problem {
    pub kind: ProblemKind,
    pub algebroid: Option<AlgebroidSpec>,
    pub mechanics: Option<Mechanics>,
    /// String Lagrangian and the degree to test it at.
    pub string_lagrangian: Option<BivectorLagrangian>,
    pub homogeneity: Option<i32>,
    pub simulation: Option<Simulation>,
    pub plateau: Option<PlateauProblem>,
    pub surface: Option<Surface>,
    pub tol: Option<f64>,
    pub drift_tol: f64,
    pub samples: usize,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ProblemConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<ProblemConfig, ConfigError> {
        serde_json::from_str(text).map_err(|source| ConfigError::Syntax {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<ProblemConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, path)
    }

    /// Checks everything a command will need. `base_dir` resolves relative
    /// input paths.
    pub fn validate(&self, base_dir: &Path) -> Result<Problem, ConfigError> {
        let n = &self.numeric;
        for (field, v) in [
            ("numeric.T", n.t_final),
            ("numeric.dt", n.dt),
            ("numeric.tol", n.tol),
            ("numeric.drift_tol", n.drift_tol),
            ("numeric.error_tol", n.error_tol),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(invalid(field, format!("must be positive and finite, got {v}")));
                }
            }
        }
        if n.samples == Some(0) {
            return Err(invalid("numeric.samples", "must be at least 1"));
        }
        let algebroid = self.algebroid.as_ref().map(build_algebroid).transpose()?;
        let mut problem = Problem {
            kind: self.kind,
            algebroid: algebroid.clone(),
            mechanics: None,
            string_lagrangian: None,
            homogeneity: self.lagrangian.as_ref().and_then(|l| l.homogeneity),
            simulation: None,
            plateau: None,
            surface: None,
            tol: n.tol,
            drift_tol: n.drift_tol.unwrap_or(DEFAULT_DRIFT_TOL),
            samples: n.samples.unwrap_or(200),
            out_dir: self.io.out_dir.clone(),
            format: self.io.format,
        };
        match self.kind {
            ProblemKind::FirstOrder | ProblemKind::Higher | ProblemKind::LieAlgebra | ProblemKind::G2 => {
                let alg = algebroid.ok_or_else(|| invalid("algebroid", "required for this kind"))?;
                problem.mechanics = Some(self.mechanics(alg)?);
                if n.t_final.is_some() || n.dt.is_some() || n.initial.is_some() {
                    problem.simulation = Some(self.simulation(problem.mechanics.as_ref().unwrap())?);
                }
            }
            ProblemKind::StringResidual => {
                let input = self.io.input.as_ref().ok_or_else(|| invalid("io.input", "surface file required"))?;
                let surface = read_surface(&base_dir.join(input))?;
                let m = surface.grid().dim();
                problem.string_lagrangian = Some(self.string_lagrangian(Some(m))?);
                problem.surface = Some(surface);
            }
            ProblemKind::Plateau => {
                problem.plateau = Some(self.plateau()?);
            }
        }
        if problem.homogeneity.is_some() && problem.mechanics.is_none() && problem.string_lagrangian.is_none() {
            problem.string_lagrangian = Some(self.string_lagrangian(None)?);
        }
        Ok(problem)
    }

    fn lagrangian_expr(&self) -> Result<Expr, ConfigError> {
        let src = self
            .lagrangian
            .as_ref()
            .and_then(|l| l.expr.as_deref())
            .ok_or_else(|| invalid("lagrangian.expr", "required for this kind"))?;
        parse_field("lagrangian.expr", src)
    }

    fn mechanics(&self, alg: AlgebroidSpec) -> Result<Mechanics, ConfigError> {
        let lagrangian = self.lagrangian_expr()?;
        let order = self.lagrangian.as_ref().and_then(|l| l.order);
        let order = match self.kind {
            ProblemKind::FirstOrder => match order {
                None | Some(1) => 1,
                Some(k) => return Err(invalid("lagrangian.order", format!("first_order problems have order 1, got {k}"))),
            },
            ProblemKind::G2 => match order {
                None | Some(2) => 2,
                Some(k) => return Err(invalid("lagrangian.order", format!("g2 problems have order 2, got {k}"))),
            },
            _ => order.ok_or_else(|| invalid("lagrangian.order", "required"))?,
        };
        if order == 0 {
            return Err(invalid("lagrangian.order", "must be at least 1"));
        }
        if matches!(self.kind, ProblemKind::LieAlgebra | ProblemKind::G2) && alg.base_dim() != 0 {
            return Err(invalid("algebroid", "this kind needs a Lie algebra (no base coordinates)"));
        }
        if self.kind == ProblemKind::G2 {
            if alg.structure_constants().is_none() {
                return Err(invalid("algebroid.structure", "g2 needs constant structure"));
            }
            // Names are checked when the pipeline is built; do it here so a
            // bad variable is a config error.
            crate::higher::g2_pipeline(&lagrangian, &alg, crate::higher::AdStarConvention::Left)
                .map_err(|e| invalid("lagrangian.expr", e.to_string()))?;
            let spec = LagrangianSpec::new(alg, 2, Expr::zero()).map_err(|e| higher_invalid("algebroid", e))?;
            return Ok(Mechanics { spec, lagrangian });
        }
        let spec = LagrangianSpec::new(alg, order, lagrangian.clone()).map_err(|e| higher_invalid("lagrangian.expr", e))?;
        Ok(Mechanics { spec, lagrangian })
    }

    fn simulation(&self, mech: &Mechanics) -> Result<Simulation, ConfigError> {
        if self.kind == ProblemKind::G2 {
            return Err(invalid("numeric", "g2 problems cannot be simulated"));
        }
        let n = &self.numeric;
        let t_final = n.t_final.ok_or_else(|| invalid("numeric.T", "required for simulation"))?;
        let dt = n.dt.ok_or_else(|| invalid("numeric.dt", "required for simulation"))?;
        if dt > t_final {
            return Err(invalid("numeric.dt", format!("step {dt} exceeds horizon {t_final}")));
        }
        let steps = t_final / dt;
        if steps > 1e8 {
            return Err(invalid("numeric.dt", format!("{steps:.0} steps requested; at most 1e8 allowed")));
        }
        let spec = &mech.spec;
        let k = spec.order();
        let expected = spec.base_dim() + spec.rank() * (2 * k - 1);
        let initial = n.initial.clone().ok_or_else(|| invalid("numeric.initial", "required for simulation"))?;
        if initial.len() != expected {
            return Err(invalid(
                "numeric.initial",
                format!(
                    "expected {expected} values (x, y_1..y_{}, pi^1..pi^{k}), got {}",
                    k - 1,
                    initial.len()
                ),
            ));
        }
        if let Some(i) = initial.iter().position(|v| !v.is_finite()) {
            return Err(invalid("numeric.initial", format!("entry {i} is not finite")));
        }
        Ok(Simulation { t_final, dt, initial })
    }

    fn string_lagrangian(&self, surface_dim: Option<usize>) -> Result<BivectorLagrangian, ConfigError> {
        let block = self.lagrangian.clone().unwrap_or_default();
        let m = match (block.dim, surface_dim) {
            (Some(d), Some(s)) if d != s => {
                return Err(invalid("lagrangian.dim", format!("{d} does not match the surface dimension {s}")))
            }
            (d, s) => d.or(s).unwrap_or(DEFAULT_STRING_DIM),
        };
        if block.order.is_some_and(|k| k != 1) {
            return Err(invalid("lagrangian.order", "string Lagrangians are first order"));
        }
        let lag = match block.expr.as_deref() {
            Some(src) => BivectorLagrangian::new(m, parse_field("lagrangian.expr", src)?),
            None => BivectorLagrangian::area(m),
        };
        lag.map_err(|e| invalid("lagrangian.expr", e.to_string()))
    }

    fn plateau(&self) -> Result<PlateauProblem, ConfigError> {
        let n = &self.numeric;
        let b = self.boundary.as_ref().ok_or_else(|| invalid("boundary", "required for plateau problems"))?;
        let slots = ["x".to_string(), "y".to_string()];
        let compile = |field: &str, src: &str| -> Result<CompiledExpr, ConfigError> {
            let e = parse_field(field, src)?;
            CompiledExpr::new(&e, &slots).map_err(|e| invalid(field, format!("{e} (only x and y may appear)")))
        };
        let boundary = compile("boundary.expr", &b.expr)?;
        let analytic = b.analytic.as_deref().map(|s| compile("boundary.analytic", s)).transpose()?;
        let [nx, ny] = n.grid.unwrap_or([DEFAULT_GRID; 2]);
        let range = |field: &str, r: Option<[f64; 2]>| -> Result<(f64, f64), ConfigError> {
            let [a, b] = r.unwrap_or([-1.0, 1.0]);
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(invalid(field, format!("need a finite interval with lo < hi, got [{a}, {b}]")));
            }
            Ok((a, b))
        };
        let xr = range("numeric.x_range", n.x_range)?;
        let yr = range("numeric.y_range", n.y_range)?;
        let failure = std::cell::RefCell::new(None);
        let surface = GraphSurface::boundary_from_fn(xr, yr, nx, ny, |x, y| match boundary.eval(&[x, y]) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert_with(|| format!("at ({x}, {y}): {e}"));
                f64::NAN
            }
        });
        if let Some(msg) = failure.into_inner() {
            return Err(invalid("boundary.expr", msg));
        }
        let surface = surface.map_err(|source| ConfigError::Surface {
            field: "numeric.grid".into(),
            source,
        })?;
        let max_iter = n.max_iter.unwrap_or(50);
        if max_iter == 0 {
            return Err(invalid("numeric.max_iter", "must be at least 1"));
        }
        Ok(PlateauProblem {
            boundary: surface,
            analytic,
            tol: n.tol.unwrap_or(1e-10),
            max_iter,
            error_tol: n.error_tol.unwrap_or(DEFAULT_PLATEAU_ERROR_TOL),
        })
    }
}

fn higher_invalid(field: &str, e: HigherError) -> ConfigError {
    match e {
        HigherError::Parse(source) => ConfigError::Expression {
            field: field.into(),
            source,
        },
        other => invalid(field, other.to_string()),
    }
}

fn alg_invalid(field: &str, e: AlgebroidError) -> ConfigError {
    invalid(field, e.to_string())
}

fn build_algebroid(b: &AlgebroidBlock) -> Result<AlgebroidSpec, ConfigError> {
    if let Some(c) = b.constructor {
        if b.base.is_some() || b.anchor.is_some() || b.structure.is_some() {
            return Err(invalid("algebroid", "give either a constructor or base/anchor/structure, not both"));
        }
        let dim = |default: Option<usize>| -> Result<usize, ConfigError> {
            match b.dim.or(default) {
                Some(0) => Err(invalid("algebroid.dim", "must be at least 1")),
                Some(d) => Ok(d),
                None => Err(invalid("algebroid.dim", "required for this constructor")),
            }
        };
        return match c {
            Constructor::Tangent => Ok(tangent_algebroid(dim(None)?)),
            Constructor::Abelian => Ok(abelian(dim(None)?)),
            Constructor::So3 => match b.dim {
                None | Some(3) => Ok(so3()),
                Some(d) => Err(invalid("algebroid.dim", format!("so3 has dimension 3, got {d}"))),
            },
        };
    }
    let structure = b
        .structure
        .as_ref()
        .ok_or_else(|| invalid("algebroid", "need a constructor or explicit structure"))?;
    let base = b.base.clone().unwrap_or_default();
    let rank = structure.len();
    let anchor_src = match &b.anchor {
        Some(a) => a.clone(),
        None if base.is_empty() => Vec::new(),
        None => return Err(invalid("algebroid.anchor", "required when base coordinates are given")),
    };
    let anchor = anchor_src
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, s)| parse_field(&format!("algebroid.anchor[{i}][{j}]"), s))
                .collect()
        })
        .collect::<Result<Vec<Vec<Expr>>, _>>()?;
    let structure = structure
        .iter()
        .enumerate()
        .map(|(c, s)| {
            s.iter()
                .enumerate()
                .map(|(a, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(bb, src)| parse_field(&format!("algebroid.structure[{c}][{a}][{bb}]"), src))
                        .collect()
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<Vec<Expr>>>, _>>()?;
    if rank == 0 {
        return Err(invalid("algebroid.structure", "rank must be at least 1"));
    }
    AlgebroidSpec::from_parts(base, anchor, structure).map_err(|e| alg_invalid("algebroid", e))
}

fn read_surface(path: &Path) -> Result<Surface, ConfigError> {
    let field = "io.input".to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let surface_err = |source| ConfigError::Surface {
        field: field.clone(),
        source,
    };
    let is_json = path.extension().is_some_and(|e| e == "json");
    if is_json {
        return match GraphSurface::from_json(&text) {
            Ok(g) => Ok(Surface::Graph(g)),
            Err(_) => SurfaceGrid::from_json(&text).map(Surface::Grid).map_err(surface_err),
        };
    }
    if text.trim_start().starts_with("x,y,z") {
        GraphSurface::read_csv(text.as_bytes()).map(Surface::Graph).map_err(surface_err)
    } else {
        SurfaceGrid::read_csv(text.as_bytes()).map(Surface::Grid).map_err(surface_err)
    }
}
