//! `k`-th order Lagrangian mechanics on Lie algebroids.
//!
//! Fibre coordinates are graded: `y^a_i` has weight `i` and, along an
//! admissible curve, `d/dt y_i = (i+1) y_{i+1}` — so on `T^k M` they are
//! Taylor coefficients, `y_i = q^(i) / i!`. Classical jets (`d/dt q_i =
//! q_{i+1}`) are handled by the same machinery with unit scales.
//!
//! Residuals are written as `rho^A_a dL/dx^A - d/dt p_{1,a} + y_1^b C^c_{ba}
//! p_{1,c}`, where `p_1` is the first Ostrogradski momentum (the top
//! Jacobi–Ostrogradski momentum `pi^k`). On `T^k M` this is exactly the
//! alternating sum `sum_i (-1)^i d^i/dt^i dL/dq^(i)`.

mod el;
mod g2;
mod momenta;
mod oracle;
mod simulate;

use std::collections::HashMap;

use thiserror::Error;

use crate::algebroid::AlgebroidSpec;
use crate::expr::{parse, Chart, ChartError, EvalError, Expr, JetVar, ParseError, Prolongation};
use crate::numerics::NumericsError;

pub use el::{classical_el, classical_residuals, el_equations, el_residuals, Constraint, ElReport, ElSystem, ExplicitForm};
pub use g2::{g2_consistency, g2_pipeline, higher_euler_rhs, AdStarConvention};
pub use momenta::{momenta, MomentaSet};
pub use oracle::{
    action_residual_gap, base_equation, fit_base_coefficient, reduce_check, reduce_check_seeded, BaseEquation, SmoothCurve,
};
pub use simulate::{simulate, ENERGY, MOMENTUM_NORM_SQ, REGULARITY_RECHECK_STEPS};

/// Largest admissible condition number of the top Hessian `d2L/dy_k dy_k`.
pub const REGULARITY_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HigherError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("singular Legendre map: top Hessian condition number {condition:e} (limit {limit:e})")]
    SingularLegendre { condition: f64, limit: f64 },
    #[error("Legendre inversion did not converge (last correction {last_step:e})")]
    LegendreInversion { last_step: f64 },
    #[error("{0}")]
    Invalid(String),
}

/// A Lagrangian of order `k` on a Lie algebroid, with its prolonged chart
/// `(x^A; y^a_1, ..., y^a_{2k})`.
#[derive(Clone, Debug)]
pub struct LagrangianSpec {
    algebroid: AlgebroidSpec,
    order: usize,
    stem: String,
    rule: Prolongation,
    chart: Chart,
    lagrangian: Expr,
}

/// Name of fibre coordinate `y^a_i` (zero-based `a`) in a rank-`n` chart:
/// `y_i` when `n = 1`, otherwise `y{a+1}_i`.
pub fn fibre_name(stem: &str, a: usize, i: usize, n: usize) -> String {
    if n == 1 {
        format!("{stem}_{i}")
    } else {
        format!("{stem}{}_{i}", a + 1)
    }
}

impl LagrangianSpec {
    /// Graded Lagrangian over `algebroid`. `L` may use the base coordinates
    /// and `y^a_i` for `i <= order`.
    pub fn new(algebroid: AlgebroidSpec, order: usize, lagrangian: Expr) -> Result<LagrangianSpec, HigherError> {
        Self::build(algebroid, order, "y", Prolongation::YGraded, lagrangian)
    }

    pub fn parse(algebroid: AlgebroidSpec, order: usize, source: &str) -> Result<LagrangianSpec, HigherError> {
        Self::new(algebroid, order, parse(source)?)
    }

    /// Classical Lagrangian on `T^k R^m` in jet coordinates `q_0 .. q_k`
    /// (`q{c}_i` when `m > 1`).
    pub fn classical(m: usize, order: usize, lagrangian: Expr) -> Result<LagrangianSpec, HigherError> {
        if m == 0 {
            return Err(HigherError::Invalid("classical Lagrangian needs m >= 1".into()));
        }
        let base = (0..m).map(|c| fibre_name("q", c, 0, m)).collect();
        let anchor = (0..m)
            .map(|i| (0..m).map(|j| Expr::constant(if i == j { 1.0 } else { 0.0 })).collect())
            .collect();
        let structure = vec![vec![vec![Expr::zero(); m]; m]; m];
        let algebroid = AlgebroidSpec::from_parts(base, anchor, structure).map_err(|e| HigherError::Invalid(e.to_string()))?;
        Self::build(algebroid, order, "q", Prolongation::QJet, lagrangian)
    }

    fn build(
        algebroid: AlgebroidSpec,
        order: usize,
        stem: &str,
        rule: Prolongation,
        lagrangian: Expr,
    ) -> Result<LagrangianSpec, HigherError> {
        if order == 0 {
            return Err(HigherError::Invalid("order must be at least 1".into()));
        }
        let m = algebroid.base_dim();
        let n = algebroid.rank();
        if n == 0 {
            return Err(HigherError::Invalid("algebroid rank must be at least 1".into()));
        }
        let mut vars: Vec<JetVar> = (0..m)
            .map(|big_a| JetVar::new(algebroid.base_names()[big_a].clone(), "base", big_a, 0, 0))
            .collect();
        for i in 1..=2 * order {
            for a in 0..n {
                vars.push(JetVar::new(fibre_name(stem, a, i, n), stem, a, i, i as u32));
            }
        }
        let mut chart = Chart::new(vars, rule)?;
        for big_a in 0..m {
            let rate = Expr::sum((0..n).map(|a| algebroid.anchor(big_a, a) * Expr::var(&fibre_name(stem, a, 1, n))));
            chart = chart.with_rate(&algebroid.base_names()[big_a].clone(), rate)?;
        }
        let spec = LagrangianSpec {
            algebroid,
            order,
            stem: stem.to_string(),
            rule,
            chart,
            lagrangian,
        };
        let allowed = spec.configuration_names();
        if let Some(v) = spec.lagrangian.free_vars().into_iter().find(|v| !allowed.contains(v)) {
            return Err(ChartError::UnknownVariable(v).into());
        }
        Ok(spec)
    }

    pub fn algebroid(&self) -> &AlgebroidSpec {
        &self.algebroid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rule(&self) -> Prolongation {
        self.rule
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    pub fn rank(&self) -> usize {
        self.algebroid.rank()
    }

    pub fn base_dim(&self) -> usize {
        self.algebroid.base_dim()
    }

    /// Name of `y^a_i`.
    pub fn y(&self, a: usize, i: usize) -> String {
        fibre_name(&self.stem, a, i, self.rank())
    }

    /// `q^(i) = s_i y_i`: `i!` for graded charts, `1` for classical jets.
    pub fn scale(&self, i: usize) -> f64 {
        match self.rule {
            Prolongation::YGraded => factorial(i),
            Prolongation::QJet => 1.0,
        }
    }

    /// Base coordinates followed by `y_1 .. y_k` — the variables `L` may use.
    pub fn configuration_names(&self) -> Vec<String> {
        let mut names = self.algebroid.base_names().to_vec();
        for i in 1..=self.order {
            for a in 0..self.rank() {
                names.push(self.y(a, i));
            }
        }
        names
    }

    /// Base coordinates followed by `y_1 .. y_{2k}`.
    pub fn jet_names(&self) -> Vec<String> {
        self.chart.names()
    }

    /// Replaces `L` and keeps everything else.
    pub fn with_lagrangian(&self, lagrangian: Expr) -> Result<LagrangianSpec, HigherError> {
        Self::build(self.algebroid.clone(), self.order, &self.stem.clone(), self.rule, lagrangian)
    }

    /// Substitution turning graded coordinates into classical jets:
    /// `x^A -> q^A_0`, `y^a_i -> q^a_i / i!` (tangent algebroids only).
    pub(crate) fn graded_to_classical(&self) -> HashMap<String, Expr> {
        let m = self.base_dim();
        let mut map = HashMap::new();
        for (big_a, name) in self.algebroid.base_names().iter().enumerate() {
            map.insert(name.clone(), Expr::var(&fibre_name("q", big_a, 0, m)));
        }
        for i in 1..=2 * self.order {
            for a in 0..self.rank() {
                map.insert(self.y(a, i), Expr::var(&fibre_name("q", a, i, m)) / factorial(i));
            }
        }
        map
    }
}

pub(crate) fn factorial(i: usize) -> f64 {
    (1..=i).map(|v| v as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::{so3, tangent_algebroid};

    #[test]
    fn chart_layout_and_rates() {
        let spec = LagrangianSpec::parse(tangent_algebroid(2), 2, "(y1_1^2 + y2_1^2 - y1_2^2)/2").unwrap();
        assert_eq!(
            spec.jet_names(),
            ["x1", "x2", "y1_1", "y2_1", "y1_2", "y2_2", "y1_3", "y2_3", "y1_4", "y2_4"]
        );
        assert_eq!(spec.chart().rate("x2").unwrap().to_string(), "y2_1");
        assert_eq!(spec.chart().rate("y1_2").unwrap().to_string(), "3 * y1_3");
        assert_eq!(spec.chart().get("y2_3").unwrap().weight, 3);
        assert!(LagrangianSpec::parse(tangent_algebroid(2), 2, "y1_3").is_err());
    }

    #[test]
    fn lie_algebra_chart_has_no_base() {
        let spec = LagrangianSpec::parse(so3(), 1, "y1_1^2").unwrap();
        assert_eq!(spec.configuration_names(), ["y1_1", "y2_1", "y3_1"]);
    }

    #[test]
    fn classical_chart() {
        let spec = LagrangianSpec::classical(1, 2, parse("q_2^2").unwrap()).unwrap();
        assert_eq!(spec.jet_names(), ["q_0", "q_1", "q_2", "q_3", "q_4"]);
        assert_eq!(spec.chart().rate("q_0").unwrap().to_string(), "q_1");
        assert_eq!(spec.chart().rate("q_3").unwrap().to_string(), "q_4");
        assert_eq!(spec.scale(3), 1.0);
    }
}
