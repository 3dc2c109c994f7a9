//! Discrete action `S = dt Σ_n w_n L(q_n, D¹q_n, …, Dᵏq_n)` with trapezoid
//! weights and central-difference jets, and its exact gradient.

use super::fd::central_weights;
use super::NumericsError;
use crate::expr::{CompiledExpr, EvalError, Expr};

/// Trapezoid-discretized action of a `k`-th order Lagrangian on a uniform
/// time grid.
pub struct ActionDiscretization {
    dt: f64,
    order: usize,
    components: usize,
    lagrangian: CompiledExpr,
    /// `partials[i][c]` is `∂L/∂q^(i)_c`.
    partials: Vec<Vec<CompiledExpr>>,
    /// `stencils[i]` are unit-spacing weights for `d^i/dt^i`, offsets `-h..=h`.
    stencils: Vec<Vec<f64>>,
    half_width: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ActionError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl ActionDiscretization {
    /// `jet_names[c][i]` names the `i`-th derivative of component `c`,
    /// for `i = 0..=order`.
    pub fn new(lagrangian: &Expr, jet_names: &[Vec<String>], dt: f64) -> Result<Self, ActionError> {
        let components = jet_names.len();
        let order = jet_names.first().map_or(0, |v| v.len().saturating_sub(1));
        if jet_names.iter().any(|v| v.len() != order + 1) || order == 0 {
            return Err(NumericsError::Dimension("every component needs jets 0..=order".into()).into());
        }
        if !(dt > 0.0) {
            return Err(NumericsError::InvalidStep(format!("dt must be positive, got {dt}")).into());
        }
        let slots: Vec<String> = (0..=order)
            .flat_map(|i| jet_names.iter().map(move |c| c[i].clone()))
            .collect();
        let compiled = CompiledExpr::new(lagrangian, &slots)?;
        let partials = (0..=order)
            .map(|i| {
                jet_names
                    .iter()
                    .map(|c| CompiledExpr::new(&lagrangian.diff(&c[i]), &slots))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut stencils = vec![vec![1.0]];
        stencils.extend((1..=order).map(central_weights));
        Ok(ActionDiscretization {
            dt,
            order,
            components,
            lagrangian: compiled,
            partials,
            stencils,
            half_width: order.div_ceil(2),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Nodes at which the quadrature sum has terms.
    fn quadrature_nodes(&self, n: usize) -> std::ops::RangeInclusive<usize> {
        self.half_width..=n - 1 - self.half_width
    }

    /// Samples whose gradient entry involves only full-weight quadrature
    /// nodes; there the scaled gradient is a consistent E–L discretization.
    pub fn interior(&self, n: usize) -> std::ops::RangeInclusive<usize> {
        2 * self.half_width + 1..=n - 2 - 2 * self.half_width
    }

    fn check_samples(&self, samples: &[Vec<f64>]) -> Result<(), ActionError> {
        let need = 2 * self.order + 1;
        if samples.len() < need.max(4 * self.half_width + 3) {
            return Err(NumericsError::Dimension(format!("need at least {need} samples, got {}", samples.len())).into());
        }
        if samples.iter().any(|s| s.len() != self.components) {
            return Err(NumericsError::Dimension("sample width differs from component count".into()).into());
        }
        Ok(())
    }

    fn jet_at(&self, samples: &[Vec<f64>], n: usize, slots: &mut [f64]) {
        let m = self.components;
        for (i, w) in self.stencils.iter().enumerate() {
            let h = (w.len() / 2) as isize;
            let scale = self.dt.powi(i as i32);
            for c in 0..m {
                let mut acc = 0.0;
                for (k, wk) in w.iter().enumerate() {
                    let idx = (n as isize + k as isize - h) as usize;
                    acc += wk * samples[idx][c];
                }
                slots[i * m + c] = acc / scale;
            }
        }
    }

    fn weight(&self, n: usize, total: usize) -> f64 {
        let nodes = self.quadrature_nodes(total);
        if n == *nodes.start() || n == *nodes.end() {
            0.5
        } else {
            1.0
        }
    }

    /// Value of the discrete action; `samples[n][c]`.
    pub fn action(&self, samples: &[Vec<f64>]) -> Result<f64, ActionError> {
        self.check_samples(samples)?;
        let mut slots = vec![0.0; (self.order + 1) * self.components];
        let mut s = 0.0;
        for n in self.quadrature_nodes(samples.len()) {
            self.jet_at(samples, n, &mut slots);
            s += self.weight(n, samples.len()) * self.lagrangian.eval(&slots)?;
        }
        Ok(s * self.dt)
    }

    /// Exact gradient `∂S/∂q_n^c` of the discrete action, by the chain rule
    /// through the difference stencils.
    pub fn gradient(&self, samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ActionError> {
        self.check_samples(samples)?;
        let m = self.components;
        let mut grad = vec![vec![0.0; m]; samples.len()];
        let mut slots = vec![0.0; (self.order + 1) * m];
        for n in self.quadrature_nodes(samples.len()) {
            self.jet_at(samples, n, &mut slots);
            let w = self.weight(n, samples.len()) * self.dt;
            for (i, stencil) in self.stencils.iter().enumerate() {
                let h = (stencil.len() / 2) as isize;
                let scale = self.dt.powi(i as i32);
                for c in 0..m {
                    let p = self.partials[i][c].eval(&slots)?;
                    if p == 0.0 {
                        continue;
                    }
                    for (k, wk) in stencil.iter().enumerate() {
                        let idx = (n as isize + k as isize - h) as usize;
                        grad[idx][c] += w * p * wk / scale;
                    }
                }
            }
        }
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn names(order: usize) -> Vec<Vec<String>> {
        vec![(0..=order).map(|i| format!("q_{i}")).collect()]
    }

    fn curve(n: usize, dt: f64, f: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![f(i as f64 * dt)]).collect()
    }

    #[test]
    fn straight_line_is_discrete_extremal() {
        let dt = 0.05;
        let a = ActionDiscretization::new(&parse("q_1^2/2").unwrap(), &names(1), dt).unwrap();
        let s = curve(41, dt, |t| 0.3 + 2.0 * t);
        let g = a.gradient(&s).unwrap();
        for n in a.interior(s.len()) {
            assert!(g[n][0].abs() < 1e-12, "{}", g[n][0]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences_of_action() {
        let dt = 0.05;
        let l = parse("q_2^2/2 - q_1^2/2 + sin(q_0)*q_1").unwrap();
        let a = ActionDiscretization::new(&l, &names(2), dt).unwrap();
        let s = curve(30, dt, |t| (1.3 * t).sin() + 0.2 * t * t);
        let g = a.gradient(&s).unwrap();
        let eps = 1e-6;
        for n in [3, 10, 17, 26] {
            let mut plus = s.clone();
            let mut minus = s.clone();
            plus[n][0] += eps;
            minus[n][0] -= eps;
            let fd = (a.action(&plus).unwrap() - a.action(&minus).unwrap()) / (2.0 * eps);
            let scale = g[n][0].abs().max(fd.abs()).max(1e-3);
            assert!((g[n][0] - fd).abs() <= 1e-6 * scale, "n={n}: {} vs {fd}", g[n][0]);
        }
    }

    #[test]
    fn too_few_samples() {
        let a = ActionDiscretization::new(&parse("q_2^2").unwrap(), &names(2), 0.1).unwrap();
        assert!(a.gradient(&curve(4, 0.1, |t| t)).is_err());
    }
}
