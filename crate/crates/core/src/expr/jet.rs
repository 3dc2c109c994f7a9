//! Jet coordinates and the total time derivative.

use std::collections::HashMap;

use thiserror::Error;

use super::{EvalError, Expr};
use crate::sampling::{seeded_rng, uniform_point, DEFAULT_SEED};

/// How `d/dt` acts on a jet variable of order `i` in a given family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prolongation {
    /// Classical jets: `d/dt q_i = q_{i+1}`.
    QJet,
    /// Graded (Taylor-coefficient) jets: `d/dt y_i = (i+1) y_{i+1}`, i.e.
    /// `y_i = q^(i) / i!`.
    YGraded,
}

impl Prolongation {
    pub fn factor(self, order: usize) -> f64 {
        match self {
            Prolongation::QJet => 1.0,
            Prolongation::YGraded => (order + 1) as f64,
        }
    }
}

/// One coordinate of a jet chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetVar {
    pub name: String,
    /// Symbol family, e.g. `"y"`; jets of one family differ only in `order`.
    pub family: String,
    pub component: usize,
    pub order: usize,
    pub weight: u32,
}

impl JetVar {
    pub fn new(name: impl Into<String>, family: impl Into<String>, component: usize, order: usize, weight: u32) -> Self {
        JetVar {
            name: name.into(),
            family: family.into(),
            component,
            order,
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("duplicate variable `{0}` in chart")]
    Duplicate(String),
    #[error("variable `{0}` is not part of the chart")]
    UnknownVariable(String),
    #[error("chart too shallow: no successor jet for `{0}`")]
    TooShallow(String),
}

/// An ordered set of jet variables plus the rule for `d/dt`.
///
/// Variables with an explicit rate (for example base coordinates of an
/// algebroid, `d/dt x^A = rho^A_a y^a_1`) use that expression instead of the
/// prolongation rule.
#[derive(Clone, Debug)]
pub struct Chart {
    vars: Vec<JetVar>,
    index: HashMap<String, usize>,
    by_jet: HashMap<(String, usize, usize), usize>,
    rule: Prolongation,
    rates: HashMap<String, Expr>,
}

impl Chart {
    pub fn new(vars: Vec<JetVar>, rule: Prolongation) -> Result<Chart, ChartError> {
        let mut index = HashMap::new();
        let mut by_jet = HashMap::new();
        for (i, v) in vars.iter().enumerate() {
            if index.insert(v.name.clone(), i).is_some() {
                return Err(ChartError::Duplicate(v.name.clone()));
            }
            by_jet.insert((v.family.clone(), v.component, v.order), i);
        }
        Ok(Chart {
            vars,
            index,
            by_jet,
            rule,
            rates: HashMap::new(),
        })
    }

    /// Overrides `d/dt name` with an explicit expression.
    pub fn with_rate(mut self, name: &str, rate: Expr) -> Result<Chart, ChartError> {
        if !self.index.contains_key(name) {
            return Err(ChartError::UnknownVariable(name.to_string()));
        }
        self.rates.insert(name.to_string(), rate);
        Ok(self)
    }

    pub fn rule(&self) -> Prolongation {
        self.rule
    }

    pub fn vars(&self) -> &[JetVar] {
        &self.vars
    }

    pub fn names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&JetVar> {
        self.index.get(name).map(|&i| &self.vars[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn jet(&self, family: &str, component: usize, order: usize) -> Option<&JetVar> {
        self.by_jet
            .get(&(family.to_string(), component, order))
            .map(|&i| &self.vars[i])
    }

    /// `d/dt` of a single chart variable.
    pub fn rate(&self, name: &str) -> Result<Expr, ChartError> {
        if let Some(r) = self.rates.get(name) {
            return Ok(r.clone());
        }
        let v = self
            .get(name)
            .ok_or_else(|| ChartError::UnknownVariable(name.to_string()))?;
        let next = self
            .jet(&v.family, v.component, v.order + 1)
            .ok_or_else(|| ChartError::TooShallow(name.to_string()))?;
        Ok(self.rule.factor(v.order) * Expr::var(&next.name))
    }

    /// Checks that every free variable of `e` belongs to the chart.
    pub fn check_expr(&self, e: &Expr) -> Result<(), ChartError> {
        match e.free_vars().into_iter().find(|v| !self.contains(v)) {
            Some(v) => Err(ChartError::UnknownVariable(v)),
            None => Ok(()),
        }
    }
}

/// Applies `d/dt` `order` times using the chain rule and the chart's rule.
pub fn total_derivative(e: &Expr, chart: &Chart, order: usize) -> Result<Expr, ChartError> {
    let mut cur = e.clone();
    for _ in 0..order {
        let mut terms = Vec::new();
        for v in cur.free_vars() {
            let partial = cur.diff(&v);
            if partial.is_zero() {
                continue;
            }
            terms.push(partial * chart.rate(&v)?);
        }
        cur = Expr::sum(terms);
    }
    Ok(cur)
}

/// Tests `e(h_t p) = t^degree e(p)` for `t` in {0.5, 2, 3} at 100 seeded
/// random points of `[-2, 2]^n`, where `h_t` scales each variable by
/// `t^weight`. Points where `e` is undefined are skipped; if no point can be
/// evaluated the check fails.
pub fn check_homogeneity(e: &Expr, chart: &Chart, degree: i32) -> bool {
    let names: Vec<String> = e.free_vars().into_iter().collect();
    let mut weights = Vec::with_capacity(names.len());
    for n in &names {
        match chart.get(n) {
            Some(v) => weights.push(v.weight as i32),
            None => return false,
        }
    }
    let mut rng = seeded_rng(DEFAULT_SEED);
    let mut evaluated = 0;
    let eval_at = |pt: &[f64]| -> Result<f64, EvalError> {
        let bind: Vec<(&str, f64)> = names.iter().map(String::as_str).zip(pt.iter().copied()).collect();
        e.eval(&bind[..])
    };
    for _ in 0..100 {
        let pt = uniform_point(&mut rng, names.len(), -2.0, 2.0);
        let Ok(base) = eval_at(&pt) else { continue };
        for t in [0.5f64, 2.0, 3.0] {
            let scaled: Vec<f64> = pt.iter().zip(&weights).map(|(x, w)| x * t.powi(*w)).collect();
            let Ok(lhs) = eval_at(&scaled) else { return false };
            let rhs = t.powi(degree) * base;
            let scale = lhs.abs().max(rhs.abs()).max(1e-12);
            if (lhs - rhs).abs() > 1e-9 * scale {
                return false;
            }
        }
        evaluated += 1;
    }
    evaluated > 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn qjet(depth: usize) -> Chart {
        let vars = (0..=depth)
            .map(|i| JetVar::new(format!("q_{i}"), "q", 1, i, i as u32))
            .collect();
        Chart::new(vars, Prolongation::QJet).unwrap()
    }

    fn ygraded(depth: usize) -> Chart {
        let vars = (1..=depth)
            .map(|i| JetVar::new(format!("y_{i}"), "y", 1, i, i as u32))
            .collect();
        Chart::new(vars, Prolongation::YGraded).unwrap()
    }

    fn numerically_equal(a: &Expr, b: &Expr, vars: &[&str]) -> bool {
        let mut rng = seeded_rng(3);
        (0..20).all(|_| {
            let pt = uniform_point(&mut rng, vars.len(), -2.0, 2.0);
            let bind: Vec<(&str, f64)> = vars.iter().copied().zip(pt).collect();
            (a.eval(&bind[..]).unwrap() - b.eval(&bind[..]).unwrap()).abs() < 1e-12
        })
    }

    #[test]
    fn total_derivative_examples() {
        let c = qjet(3);
        assert_eq!(total_derivative(&parse("q_1").unwrap(), &c, 1).unwrap().to_string(), "q_2");
        let d = total_derivative(&parse("q_0^2").unwrap(), &c, 1).unwrap();
        assert!(numerically_equal(&d, &parse("2*q_0*q_1").unwrap(), &["q_0", "q_1"]));
        let g = ygraded(3);
        let d = total_derivative(&parse("y_1").unwrap(), &g, 1).unwrap();
        assert_eq!(d.to_string(), "2 * y_2");
    }

    #[test]
    fn too_shallow_chart_errors() {
        let c = qjet(2);
        assert_eq!(
            total_derivative(&parse("q_1^2").unwrap(), &c, 2),
            Err(ChartError::TooShallow("q_2".into()))
        );
        assert!(matches!(
            total_derivative(&parse("w").unwrap(), &c, 1),
            Err(ChartError::UnknownVariable(_))
        ));
    }

    #[test]
    fn explicit_rates_override_rule() {
        let vars = vec![JetVar::new("x", "x", 1, 0, 0), JetVar::new("y_1", "y", 1, 1, 1)];
        let c = Chart::new(vars, Prolongation::YGraded)
            .unwrap()
            .with_rate("x", parse("2*y_1").unwrap())
            .unwrap();
        let d = total_derivative(&parse("x^2").unwrap(), &c, 1).unwrap();
        assert_eq!(d.eval(&[("x", 3.0), ("y_1", 0.5)][..]).unwrap(), 6.0);
    }

    #[test]
    fn duplicates_rejected() {
        let vars = vec![JetVar::new("a", "a", 1, 0, 0), JetVar::new("a", "b", 1, 0, 0)];
        assert!(Chart::new(vars, Prolongation::QJet).is_err());
    }

    #[test]
    fn homogeneity_examples() {
        let ones = |names: &[&str]| {
            let vars = names.iter().map(|n| JetVar::new(*n, *n, 1, 1, 1)).collect();
            Chart::new(vars, Prolongation::QJet).unwrap()
        };
        let c = ones(&["xdot12", "xdot13", "xdot23"]);
        let quad = parse("xdot12^2 + xdot13^2 + xdot23^2").unwrap();
        assert!(check_homogeneity(&quad, &c, 2));
        assert!(check_homogeneity(&quad.sqrt(), &c, 1));
        assert!(!check_homogeneity(&quad.sqrt(), &c, 2));

        let mixed = Chart::new(
            vec![JetVar::new("y_1", "y", 1, 1, 1), JetVar::new("y_2", "y", 1, 2, 2)],
            Prolongation::YGraded,
        )
        .unwrap();
        assert!(check_homogeneity(&parse("y_1^2 + y_2").unwrap(), &mixed, 2));
        assert!(!check_homogeneity(&parse("y_1^2 + y_1").unwrap(), &mixed, 2));
    }
}
