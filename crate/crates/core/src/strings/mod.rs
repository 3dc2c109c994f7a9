//! Parameterized surfaces `(t, s) -> x(t, s)`, bivector Lagrangians on
//! `Λ²TM`, their Euler–Lagrange residuals, and a Plateau solver for graphs.
//!
//! Grids are row-major with the first parameter (`t`, or `x` for graphs)
//! as the slow index: node `(i, j)` lives at `i * ns + j`.

mod io;
mod plateau;
mod residual;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, Chart, ChartError, EvalError, Expr, JetVar, ParseError, Prolongation};
use crate::numerics::NumericsError;

pub use io::write_log_csv;
pub use plateau::{solve_plateau, InitialGuess, NewtonStep, PlateauOptions, PlateauSolution};
pub use residual::{
    area_gradient, consistency_check, consistency_field, discrete_area, el_residual, minimal_surface_residual, prolong, Bivectors, ResidualField,
};

/// Smallest number of nodes per parameter direction.
pub const MIN_NODES: usize = 5;

/// Relative tolerance on uniform spacing of imported grids.
pub const SPACING_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum StringsError {
    #[error("grid needs at least {MIN_NODES} nodes per direction, got {nt} x {ns}")]
    GridTooSmall { nt: usize, ns: usize },
    #[error("grid spacing must be positive and finite")]
    BadSpacing,
    #[error("non-uniform spacing in {axis} at node {index}")]
    NonUniform { axis: &'static str, index: usize },
    #[error("non-finite value in component {component} at node ({i}, {j})")]
    NonFinite { component: usize, i: usize, j: usize },
    #[error("expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("{0}")]
    Lagrangian(String),
    #[error("evaluation failed at node ({i}, {j}): {source}")]
    Eval {
        i: usize,
        j: usize,
        #[source]
        source: EvalError,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("Newton iteration did not converge after {iterations} steps (max |residual| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian: {0}")]
    SingularJacobian(NumericsError),
    #[error(transparent)]
    Numerics(NumericsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<NumericsError> for StringsError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::Singular { .. } => StringsError::SingularJacobian(e),
            other => StringsError::Numerics(other),
        }
    }
}

fn check_nodes(nt: usize, ns: usize) -> Result<(), StringsError> {
    if nt < MIN_NODES || ns < MIN_NODES {
        Err(StringsError::GridTooSmall { nt, ns })
    } else {
        Ok(())
    }
}

fn check_step(h: f64) -> Result<(), StringsError> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(StringsError::BadSpacing)
    }
}

/// A surface `x^sigma(t_i, s_j)` on a uniform parameter grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    pub s0: f64,
    pub ds: f64,
    pub ns: usize,
    /// `values[sigma][i * ns + j]`.
    pub values: Vec<Vec<f64>>,
}

impl SurfaceGrid {
    pub fn new(t0: f64, dt: f64, nt: usize, s0: f64, ds: f64, ns: usize, values: Vec<Vec<f64>>) -> Result<Self, StringsError> {
        let g = SurfaceGrid {
            t0,
            dt,
            nt,
            s0,
            ds,
            ns,
            values,
        };
        g.validate()?;
        Ok(g)
    }

    /// Samples `f(t, s)` (returning all `m` components) on
    /// `[t_range] x [s_range]` with `nt x ns` nodes.
    pub fn from_fn(
        t_range: (f64, f64),
        nt: usize,
        s_range: (f64, f64),
        ns: usize,
        m: usize,
        f: impl Fn(f64, f64) -> Vec<f64>,
    ) -> Result<Self, StringsError> {
        check_nodes(nt, ns)?;
        let dt = (t_range.1 - t_range.0) / (nt - 1) as f64;
        let ds = (s_range.1 - s_range.0) / (ns - 1) as f64;
        let mut values = vec![Vec::with_capacity(nt * ns); m];
        for i in 0..nt {
            for j in 0..ns {
                let x = f(t_range.0 + i as f64 * dt, s_range.0 + j as f64 * ds);
                if x.len() != m {
                    return Err(StringsError::Shape { expected: m, got: x.len() });
                }
                for (c, v) in x.into_iter().enumerate() {
                    values[c].push(v);
                }
            }
        }
        Self::new(t_range.0, dt, nt, s_range.0, ds, ns, values)
    }

    /// Embeds a graph as `x = (t, s, z(t, s))`.
    pub fn from_graph(g: &GraphSurface) -> SurfaceGrid {
        let mut xs = Vec::with_capacity(g.nx * g.ny);
        let mut ys = Vec::with_capacity(g.nx * g.ny);
        for i in 0..g.nx {
            for j in 0..g.ny {
                xs.push(g.x(i));
                ys.push(g.y(j));
            }
        }
        SurfaceGrid {
            t0: g.x_range.0,
            dt: g.hx(),
            nt: g.nx,
            s0: g.y_range.0,
            ds: g.hy(),
            ns: g.ny,
            values: vec![xs, ys, g.z.clone()],
        }
    }

    pub fn validate(&self) -> Result<(), StringsError> {
        check_nodes(self.nt, self.ns)?;
        check_step(self.dt)?;
        check_step(self.ds)?;
        for (c, comp) in self.values.iter().enumerate() {
            if comp.len() != self.nt * self.ns {
                return Err(StringsError::Shape {
                    expected: self.nt * self.ns,
                    got: comp.len(),
                });
            }
            if let Some(k) = comp.iter().position(|v| !v.is_finite()) {
                return Err(StringsError::NonFinite {
                    component: c,
                    i: k / self.ns,
                    j: k % self.ns,
                });
            }
        }
        if self.values.is_empty() {
            return Err(StringsError::Shape { expected: 1, got: 0 });
        }
        Ok(())
    }

    /// Target dimension `m`.
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn s(&self, j: usize) -> f64 {
        self.s0 + j as f64 * self.ds
    }

    /// The same surface with the parameters swapped, `x'(s, t) = x(t, s)`.
    pub fn swapped(&self) -> SurfaceGrid {
        let values = self
            .values
            .iter()
            .map(|comp| {
                let mut out = vec![0.0; comp.len()];
                for i in 0..self.nt {
                    for j in 0..self.ns {
                        out[j * self.nt + i] = comp[i * self.ns + j];
                    }
                }
                out
            })
            .collect();
        SurfaceGrid {
            t0: self.s0,
            dt: self.ds,
            nt: self.ns,
            s0: self.t0,
            ds: self.dt,
            ns: self.nt,
            values,
        }
    }
}

/// A graph `z(x, y)` over a rectangle, sampled on `nx x ny` nodes. The
/// outermost rows and columns are Dirichlet data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSurface {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    /// `z[i * ny + j]` at `(x_i, y_j)`.
    pub z: Vec<f64>,
}

impl GraphSurface {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize, z: Vec<f64>) -> Result<Self, StringsError> {
        let g = GraphSurface {
            x_range,
            y_range,
            nx,
            ny,
            z,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn from_fn(
        x_range: (f64, f64),
        y_range: (f64, f64),
        nx: usize,
        ny: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, StringsError> {
        check_nodes(nx, ny)?;
        let mut g = GraphSurface {
            x_range,
            y_range,
            nx,
            ny,
            z: vec![0.0; nx * ny],
        };
        for i in 0..nx {
            for j in 0..ny {
                g.z[i * ny + j] = f(g.x(i), g.y(j));
            }
        }
        g.validate()?;
        Ok(g)
    }

    /// Boundary values from `f`, interior zero.
    pub fn boundary_from_fn(
        x_range: (f64, f64),
        y_range: (f64, f64),
        nx: usize,
        ny: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, StringsError> {
        let mut g = Self::from_fn(x_range, y_range, nx, ny, f)?;
        for i in 1..nx - 1 {
            for j in 1..ny - 1 {
                g.z[i * ny + j] = 0.0;
            }
        }
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), StringsError> {
        check_nodes(self.nx, self.ny)?;
        check_step(self.hx())?;
        check_step(self.hy())?;
        if self.z.len() != self.nx * self.ny {
            return Err(StringsError::Shape {
                expected: self.nx * self.ny,
                got: self.z.len(),
            });
        }
        if let Some(k) = self.z.iter().position(|v| !v.is_finite()) {
            return Err(StringsError::NonFinite {
                component: 0,
                i: k / self.ny,
                j: k % self.ny,
            });
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_range.1 - self.y_range.0) / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_range.0 + i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_range.0 + j as f64 * self.hy()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.z[i * self.ny + j]
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// Largest `|z - f(x, y)|` over interior nodes.
    pub fn interior_error(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 1..self.nx - 1 {
            for j in 1..self.ny - 1 {
                worst = worst.max((self.at(i, j) - f(self.x(i), self.y(j))).abs());
            }
        }
        worst
    }
}

/// A Lagrangian on `Λ²TM` in coordinates `x1..xm` and `xdot{mu}{nu}` for
/// `mu < nu` (plain `x` is not used: even `m = 1` names its coordinate `x1`).
/// The components with `mu > nu` are never variables; antisymmetry is
/// built into the coordinate choice.
#[derive(Clone, Debug)]
pub struct BivectorLagrangian {
    m: usize,
    lagrangian: Expr,
}

/// Largest target dimension: bivector names `xdot{mu}{nu}` use one digit
/// per index.
pub const MAX_DIM: usize = 9;

/// Name of `x^mu` (zero-based).
pub fn base_name(mu: usize) -> String {
    format!("x{}", mu + 1)
}

/// Name of `xdot^{mu nu}` (zero-based, `mu < nu`).
pub fn bivector_name(mu: usize, nu: usize) -> String {
    format!("xdot{}{}", mu + 1, nu + 1)
}

/// Index pairs `mu < nu` in lexicographic order.
pub fn bivector_pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|mu| (mu + 1..m).map(move |nu| (mu, nu))).collect()
}

impl BivectorLagrangian {
    pub fn new(m: usize, lagrangian: Expr) -> Result<Self, StringsError> {
        if !(2..=MAX_DIM).contains(&m) {
            return Err(StringsError::Lagrangian(format!("target dimension must be in 2..={MAX_DIM}, got {m}")));
        }
        let l = BivectorLagrangian { m, lagrangian };
        let allowed = l.variable_names();
        for v in l.lagrangian.free_vars() {
            if allowed.contains(&v) {
                continue;
            }
            if let Some((mu, nu)) = parse_pair(&v) {
                if mu >= nu && nu < m && mu < m {
                    return Err(StringsError::Lagrangian(format!(
                        "{v}: only components xdot{{mu}}{{nu}} with mu < nu are coordinates (use -xdot{}{})",
                        nu + 1,
                        mu + 1
                    )));
                }
            }
            return Err(ChartError::UnknownVariable(v).into());
        }
        Ok(l)
    }

    pub fn parse(m: usize, source: &str) -> Result<Self, StringsError> {
        Self::new(m, parse(source)?)
    }

    /// `sqrt(sum_{mu<nu} (xdot^{mu nu})^2)`, the Euclidean area density.
    pub fn area(m: usize) -> Result<Self, StringsError> {
        let sum = Expr::sum(bivector_pairs(m).into_iter().map(|(a, b)| Expr::var(&bivector_name(a, b)).pow(2.0)));
        Self::new(m, sum.sqrt())
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn expr(&self) -> &Expr {
        &self.lagrangian
    }

    /// `x1..xm` followed by the bivector components.
    pub fn variable_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.m).map(base_name).collect();
        names.extend(bivector_pairs(self.m).into_iter().map(|(a, b)| bivector_name(a, b)));
        names
    }

    /// Chart with `x` of weight 0 and bivectors of weight 1, for
    /// homogeneity checks.
    pub fn chart(&self) -> Result<Chart, ChartError> {
        let mut vars: Vec<JetVar> = (0..self.m).map(|mu| JetVar::new(base_name(mu), "x", mu, 0, 0)).collect();
        for (k, (a, b)) in bivector_pairs(self.m).into_iter().enumerate() {
            vars.push(JetVar::new(bivector_name(a, b), "xdot", k, 1, 1));
        }
        Chart::new(vars, Prolongation::QJet)
    }
}

fn parse_pair(name: &str) -> Option<(usize, usize)> {
    let digits = name.strip_prefix("xdot")?.as_bytes();
    if digits.len() != 2 || !digits.iter().all(u8::is_ascii_digit) {
        return None;
    }
    let d = |b: u8| (b - b'0') as usize;
    if d(digits[0]) == 0 || d(digits[1]) == 0 {
        return None;
    }
    Some((d(digits[0]) - 1, d(digits[1]) - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::check_homogeneity;

    #[test]
    fn bivector_names_and_validation() {
        assert_eq!(bivector_pairs(3), [(0, 1), (0, 2), (1, 2)]);
        let l = BivectorLagrangian::area(3).unwrap();
        assert_eq!(l.variable_names(), ["x1", "x2", "x3", "xdot12", "xdot13", "xdot23"]);
        let err = BivectorLagrangian::parse(3, "xdot21^2").unwrap_err();
        assert!(err.to_string().contains("-xdot12"), "{err}");
        assert!(BivectorLagrangian::parse(3, "xdot14").is_err());
        assert!(BivectorLagrangian::parse(3, "x1 * xdot23").is_ok());
    }

    #[test]
    fn homogeneity_degrees() {
        let area = BivectorLagrangian::area(3).unwrap();
        assert!(check_homogeneity(area.expr(), &area.chart().unwrap(), 1));
        let quad = BivectorLagrangian::parse(3, "(xdot12^2 + xdot13^2 + xdot23^2)/2").unwrap();
        assert!(check_homogeneity(quad.expr(), &quad.chart().unwrap(), 2));
        let mixed = BivectorLagrangian::parse(3, "xdot12 + xdot13^2").unwrap();
        let chart = mixed.chart().unwrap();
        assert!(!check_homogeneity(mixed.expr(), &chart, 1));
        assert!(!check_homogeneity(mixed.expr(), &chart, 2));
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(
            SurfaceGrid::from_fn((0.0, 1.0), 4, (0.0, 1.0), 6, 1, |t, _| vec![t]),
            Err(StringsError::GridTooSmall { .. })
        ));
        let err = GraphSurface::from_fn((0.0, 1.0), (0.0, 1.0), 5, 5, |x, _| 1.0 / (x - 0.5)).unwrap_err();
        assert!(matches!(err, StringsError::NonFinite { i: 2, .. }), "{err}");
        let g = GraphSurface::boundary_from_fn((0.0, 1.0), (0.0, 2.0), 5, 6, |x, y| x + y).unwrap();
        assert_eq!(g.at(2, 3), 0.0);
        assert_eq!(g.at(4, 5), 3.0);
        assert!(g.is_boundary(0, 3) && !g.is_boundary(1, 1));
    }

    #[test]
    fn swap_transposes() {
        let g = SurfaceGrid::from_fn((0.0, 1.0), 5, (0.0, 2.0), 6, 2, |t, s| vec![t, s * s]).unwrap();
        let w = g.swapped();
        assert_eq!((w.nt, w.ns, w.dt), (6, 5, g.ds));
        assert_eq!(w.values[1][3 * 5 + 2], g.values[1][2 * 6 + 3]);
        assert_eq!(w.swapped(), g);
    }
}
