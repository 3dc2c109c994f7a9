//! Independent checks of derived equations: reduction to classical jets and
//! the discrete-action gradient.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use super::el::{classical_residuals, el_residuals};
use super::{factorial, fibre_name, HigherError, LagrangianSpec};
use crate::expr::{Expr, Prolongation};
use crate::numerics::{dense_solve, ActionDiscretization, ActionError, Matrix};
use crate::sampling::{seeded_rng, uniform_point, DEFAULT_SEED};

impl From<ActionError> for HigherError {
    fn from(e: ActionError) -> Self {
        match e {
            ActionError::Eval(e) => HigherError::Eval(e),
            ActionError::Numerics(e) => HigherError::Numerics(e),
        }
    }
}

/// Largest difference between the algebroid residuals of `spec` and the
/// classical higher Euler–Lagrange residuals of the same Lagrangian written
/// in jets (`y_i = q^(i)/i!`), over 200 seeded prolonged states.
pub fn reduce_check(spec: &LagrangianSpec) -> Result<f64, HigherError> {
    reduce_check_seeded(spec, 200, DEFAULT_SEED)
}

pub fn reduce_check_seeded(spec: &LagrangianSpec, samples: usize, seed: u64) -> Result<f64, HigherError> {
    if !spec.algebroid().is_tangent() || spec.rule() != Prolongation::YGraded {
        return Err(HigherError::Invalid("reduce_check needs a graded Lagrangian on a tangent algebroid".into()));
    }
    let (m, k) = (spec.base_dim(), spec.order());
    let graded = el_residuals(spec)?;
    let classical_l = spec.lagrangian().substitute(&spec.graded_to_classical());
    let classical = classical_residuals(k, m, &classical_l)?;
    let orders: Vec<usize> = graded.chart.vars().iter().map(|v| v.order).collect();
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let y = uniform_point(&mut rng, orders.len(), -1.0, 1.0);
        let q: Vec<f64> = y.iter().zip(&orders).map(|(v, &i)| v * factorial(i)).collect();
        let a = graded.eval_residuals(&y)?;
        let b = classical.eval_residuals(&q)?;
        for (u, v) in a.iter().zip(&b) {
            worst = worst.max((u - v).abs());
        }
    }
    Ok(worst)
}

/// A base equation `d^2x/dt^2 = c d^4x/dt^4` read off a second-order
/// residual on a tangent algebroid.
#[derive(Clone, Debug, Serialize)]
pub struct BaseEquation {
    pub coefficient: f64,
    /// Coefficient of `d^2x/dt^2` in the residual.
    pub second: f64,
    /// Coefficient of `d^4x/dt^4` in the residual.
    pub fourth: f64,
    pub text: String,
    pub latex: String,
}

/// Renders `v` as a small fraction when it is one.
pub(crate) fn fraction(v: f64) -> String {
    for d in 1..=64u32 {
        let num = v * d as f64;
        if (num - num.round()).abs() < 1e-12 {
            let num = num.round() as i64;
            return if d == 1 { format!("{num}") } else { format!("{num}/{d}") };
        }
    }
    format!("{v}")
}

/// Extracts `c` such that every component residual, written in classical
/// jets, is `alpha (x'' - c x'''')` with constant `alpha`.
pub fn base_equation(spec: &LagrangianSpec) -> Result<BaseEquation, HigherError> {
    if !spec.algebroid().is_tangent() || spec.order() != 2 {
        return Err(HigherError::Invalid("base equation needs a second-order Lagrangian on a tangent algebroid".into()));
    }
    let m = spec.base_dim();
    let sys = el_residuals(spec)?;
    let to_q = spec.graded_to_classical();
    let names: Vec<String> = (0..=4).flat_map(|i| (0..m).map(move |c| fibre_name("q", c, i, m))).collect();
    let mut rng = seeded_rng(DEFAULT_SEED);
    let points: Vec<HashMap<String, f64>> = (0..20)
        .map(|_| names.iter().cloned().zip(uniform_point(&mut rng, names.len(), -1.0, 1.0)).collect())
        .collect();
    let mut found: Option<(f64, f64)> = None;
    for (a, r) in sys.residuals.iter().enumerate() {
        let rq = r.substitute(&to_q);
        let (q2, q4) = (fibre_name("q", a, 2, m), fibre_name("q", a, 4, m));
        let alpha_e = rq.diff(&q2);
        let beta_e = rq.diff(&q4);
        let alpha = alpha_e.eval(&points[0])?;
        let beta = beta_e.eval(&points[0])?;
        for p in &points {
            let rem = rq.eval(p)? - alpha * p[&q2] - beta * p[&q4];
            let drift = (alpha_e.eval(p)? - alpha).abs() + (beta_e.eval(p)? - beta).abs();
            if rem.abs() > 1e-12 || drift > 1e-12 {
                return Err(HigherError::Invalid(format!(
                    "residual {a} is not of the form alpha x'' + beta x''''"
                )));
            }
        }
        if alpha == 0.0 {
            return Err(HigherError::Invalid(format!("residual {a} has no x'' term")));
        }
        match found {
            None => found = Some((alpha, beta)),
            Some((a0, b0)) if (a0 - alpha).abs() < 1e-12 && (b0 - beta).abs() < 1e-12 => {}
            Some(_) => return Err(HigherError::Invalid("components have different coefficients".into())),
        }
    }
    let (second, fourth) = found.ok_or_else(|| HigherError::Invalid("no residuals".into()))?;
    let coefficient = -fourth / second;
    let c = fraction(coefficient);
    Ok(BaseEquation {
        coefficient,
        second,
        fourth,
        text: format!("d^2x/dt^2 = {c} d^4x/dt^4"),
        latex: format!("\\frac{{d^2 x}}{{dt^2}} = {c} \\, \\frac{{d^4 x}}{{dt^4}}"),
    })
}

/// A seeded random trigonometric curve with exact derivatives of every
/// order.
#[derive(Clone, Debug)]
pub struct SmoothCurve {
    /// `terms[c]` = list of `(amplitude, frequency, phase)`.
    terms: Vec<Vec<(f64, f64, f64)>>,
}

impl SmoothCurve {
    pub fn random(seed: u64, components: usize, terms: usize) -> SmoothCurve {
        Self::random_in_band(seed, components, terms, (0.5, 3.0))
    }

    /// Like [`SmoothCurve::random`] with angular frequencies drawn from
    /// `band`. Fourth-difference oracles (`k = 2`) need frequencies high
    /// enough that the `O(dt^2)` truncation error stays above the
    /// `~16 eps / dt^4` rounding floor at the smallest step.
    pub fn random_in_band(seed: u64, components: usize, terms: usize, band: (f64, f64)) -> SmoothCurve {
        let mut rng = seeded_rng(seed);
        let terms = (0..components)
            .map(|_| {
                (0..terms)
                    .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(band.0..band.1), rng.gen_range(0.0..2.0 * PI)))
                    .collect()
            })
            .collect();
        SmoothCurve { terms }
    }

    pub fn components(&self) -> usize {
        self.terms.len()
    }

    /// `d^order q_c / dt^order` at `t`.
    pub fn derivative(&self, c: usize, order: usize, t: f64) -> f64 {
        self.terms[c]
            .iter()
            .map(|&(a, w, p)| a * w.powi(order as i32) * (w * t + p + order as f64 * PI / 2.0).sin())
            .sum()
    }

    /// Classical jet `(q_0, q_1, .., q_depth)` at `t`, orders outermost.
    pub fn jet(&self, t: f64, depth: usize) -> Vec<f64> {
        (0..=depth)
            .flat_map(|i| (0..self.components()).map(move |c| (i, c)))
            .map(|(i, c)| self.derivative(c, i, t))
            .collect()
    }
}

fn discretize(order: usize, m: usize, lagrangian: &Expr, dt: f64) -> Result<ActionDiscretization, HigherError> {
    let names: Vec<Vec<String>> = (0..m)
        .map(|c| (0..=order).map(|i| fibre_name("q", c, i, m)).collect())
        .collect();
    Ok(ActionDiscretization::new(lagrangian, &names, dt)?)
}

/// Samples on `[0, 1]` and the nodes in the window `[0.2, 0.8]` that are
/// interior for the action stencils.
fn sample_curve(a: &ActionDiscretization, curve: &SmoothCurve, dt: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let count = (1.0 / dt).round() as usize + 1;
    let samples: Vec<Vec<f64>> = (0..count)
        .map(|n| (0..curve.components()).map(|c| curve.derivative(c, 0, n as f64 * dt)).collect())
        .collect();
    let nodes = a
        .interior(count)
        .filter(|&n| {
            let t = n as f64 * dt;
            (0.2..=0.8).contains(&t)
        })
        .collect();
    (samples, nodes)
}

/// Largest gap between the scaled discrete-action gradient `grad / dt` and
/// the classical residual evaluated on the exact jets of `curve`, over the
/// window `[0.2, 0.8]` of a sampling of `[0, 1]` with step `dt`.
///
/// `lagrangian` uses the classical names `q_i` / `q{c}_i`.
pub fn action_residual_gap(order: usize, lagrangian: &Expr, curve: &SmoothCurve, dt: f64) -> Result<f64, HigherError> {
    let m = curve.components();
    let a = discretize(order, m, lagrangian, dt)?;
    let sys = classical_residuals(order, m, lagrangian)?;
    let (samples, nodes) = sample_curve(&a, curve, dt);
    let grad = a.gradient(&samples)?;
    let mut worst: f64 = 0.0;
    for n in nodes {
        let r = sys.eval_residuals(&curve.jet(n as f64 * dt, 2 * order))?;
        for c in 0..m {
            worst = worst.max((grad[n][c] / dt - r[c]).abs());
        }
    }
    Ok(worst)
}

/// Least-squares fit of the scaled action gradient of component 0 as
/// `alpha q'' + beta q''''` along `curve`; returns `-beta / alpha`, the
/// coefficient `c` of `q'' = c q''''` implied by the action alone.
pub fn fit_base_coefficient(lagrangian: &Expr, curve: &SmoothCurve, dt: f64) -> Result<f64, HigherError> {
    let m = curve.components();
    let a = discretize(2, m, lagrangian, dt)?;
    let (samples, nodes) = sample_curve(&a, curve, dt);
    let grad = a.gradient(&samples)?;
    let mut normal = Matrix::zeros(2, 2);
    let mut rhs = vec![0.0; 2];
    for n in nodes {
        let t = n as f64 * dt;
        let basis = [curve.derivative(0, 2, t), curve.derivative(0, 4, t)];
        let g = grad[n][0] / dt;
        for i in 0..2 {
            rhs[i] += basis[i] * g;
            for j in 0..2 {
                normal[(i, j)] += basis[i] * basis[j];
            }
        }
    }
    let coef = dense_solve(&normal, &rhs)?;
    Ok(-coef[1] / coef[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::{so3, tangent_algebroid};
    use crate::expr::parse;
    use crate::numerics::convergence_slope;

    #[test]
    fn reduce_check_examples() {
        let free = LagrangianSpec::parse(tangent_algebroid(1), 1, "y_1^2/2").unwrap();
        assert_eq!(reduce_check(&free).unwrap(), 0.0);
        let sq = LagrangianSpec::parse(tangent_algebroid(1), 2, "y_2^2").unwrap();
        assert!(reduce_check(&sq).unwrap() < 1e-9);
        let mixed = LagrangianSpec::parse(tangent_algebroid(2), 3, "y1_3*y2_3 + y1_2^2*x2 - sin(x1)*y2_1 + y2_3^2").unwrap();
        assert!(reduce_check(&mixed).unwrap() < 1e-9);
        assert!(reduce_check(&LagrangianSpec::parse(so3(), 1, "y1_1^2").unwrap()).is_err());
    }

    #[test]
    fn quarter_coefficient_for_graded_javelin() {
        let spec = LagrangianSpec::parse(tangent_algebroid(1), 2, "(y_1^2 - y_2^2)/2").unwrap();
        let b = base_equation(&spec).unwrap();
        assert_eq!(b.coefficient, -0.25);
        assert_eq!(b.text, "d^2x/dt^2 = -1/4 d^4x/dt^4");
    }

    #[test]
    fn non_linear_residual_has_no_base_equation() {
        let spec = LagrangianSpec::parse(tangent_algebroid(1), 2, "y_2^2 + x^3").unwrap();
        assert!(base_equation(&spec).is_err());
    }

    #[test]
    fn action_gradient_converges_to_residual() {
        let l = parse("q_1^2/2 - q_0^2/2 + q_0^2*q_1/3").unwrap();
        let curve = SmoothCurve::random(2, 1, 3);
        let dts = [1e-2, 5e-3, 2.5e-3];
        let gaps: Vec<f64> = dts.iter().map(|&dt| action_residual_gap(1, &l, &curve, dt).unwrap()).collect();
        assert!(convergence_slope(&dts, &gaps) >= 1.9, "{gaps:?}");
    }

    #[test]
    fn second_order_action_gradient_converges() {
        let l = parse("q_2^2/2 - q_1^2/2 + q_0^2*q_2/4").unwrap();
        let curve = SmoothCurve::random_in_band(9, 1, 3, (3.0, 6.0));
        let dts = [1e-2, 5e-3, 2.5e-3];
        let gaps: Vec<f64> = dts.iter().map(|&dt| action_residual_gap(2, &l, &curve, dt).unwrap()).collect();
        assert!(convergence_slope(&dts, &gaps) >= 1.9, "{gaps:?}");
    }

    #[test]
    fn fitted_coefficient_from_action() {
        let l = parse("q_1^2/2 - q_2^2/8").unwrap();
        let c = fit_base_coefficient(&l, &SmoothCurve::random(5, 1, 4), 2.5e-3).unwrap();
        assert!((c + 0.25).abs() < 1e-3, "{c}");
    }

    #[test]
    fn fractions() {
        assert_eq!(fraction(-0.25), "-1/4");
        assert_eq!(fraction(3.0), "3");
        assert_eq!(fraction(0.5), "1/2");
    }
}
