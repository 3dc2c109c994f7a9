use std::collections::HashMap;

use serde::Serialize;

use super::momenta::{momenta, MomentaSet, MomentumEntry};
use super::{factorial, HigherError, LagrangianSpec, REGULARITY_LIMIT};
use crate::expr::{total_derivative, Chart, CompiledExpr, Expr};
use crate::numerics::{condition_number, dense_solve, Matrix};
use crate::sampling::{seeded_rng, uniform_point, DEFAULT_SEED};

/// A prolongation constraint `d/dt variable = rate`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub variable: String,
    pub rate: Expr,
}

/// Derived Euler–Lagrange system: implicit residuals over a jet chart, the
/// prolongation constraints, and (for regular Lagrangians) an explicit
/// first-order vector field.
#[derive(Clone, Debug)]
pub struct ElSystem {
    pub label: String,
    pub chart: Chart,
    pub residuals: Vec<Expr>,
    pub constraints: Vec<Constraint>,
    pub momenta: Option<MomentaSet>,
    pub explicit: Option<ExplicitForm>,
    pub regular: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquationEntry {
    pub text: String,
    pub latex: String,
}

/// Serializable view of an [`ElSystem`].
#[derive(Clone, Debug, Serialize)]
pub struct ElReport {
    pub label: String,
    pub variables: Vec<String>,
    pub residuals: Vec<EquationEntry>,
    pub constraints: Vec<EquationEntry>,
    pub momenta: Vec<MomentumEntry>,
    pub state: Vec<String>,
    pub regular: bool,
}

impl ElSystem {
    /// Residuals evaluated at a point of the chart (values in chart order).
    pub fn eval_residuals(&self, jet: &[f64]) -> Result<Vec<f64>, HigherError> {
        let names = self.chart.names();
        let bind: HashMap<String, f64> = names.into_iter().zip(jet.iter().copied()).collect();
        self.residuals.iter().map(|r| r.eval(&bind).map_err(Into::into)).collect()
    }

    pub fn report(&self) -> ElReport {
        let entry = |e: &Expr| EquationEntry {
            text: format!("0 = {e}"),
            latex: format!("0 = {}", e.to_latex()),
        };
        ElReport {
            label: self.label.clone(),
            variables: self.chart.names(),
            residuals: self.residuals.iter().map(entry).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| EquationEntry {
                    text: format!("d/dt {} = {}", c.variable, c.rate),
                    latex: format!(
                        "\\frac{{d}}{{dt}} {} = {}",
                        crate::expr::Expr::var(&c.variable).to_latex(),
                        c.rate.to_latex()
                    ),
                })
                .collect(),
            momenta: self.momenta.as_ref().map(MomentaSet::entries).unwrap_or_default(),
            state: self.explicit.as_ref().map(|x| x.state_names.clone()).unwrap_or_default(),
            regular: self.regular,
        }
    }

    /// Checks the explicit form against the implicit residuals: at random
    /// jets `(x, y_1..y_{2k-1})` the top jet `y_{2k}` is solved from the
    /// residuals, and the exact time derivative of the state is compared
    /// with the explicit vector field. Returns the largest deviation.
    pub fn explicit_consistency(&self, samples: usize, seed: u64) -> Result<f64, HigherError> {
        let ex = self
            .explicit
            .as_ref()
            .ok_or_else(|| HigherError::Invalid("system has no explicit form".into()))?;
        let names = self.chart.names();
        let (m, n, k) = (ex.m, ex.n, ex.k);
        let top: Vec<String> = names[m + n * (2 * k - 1)..].to_vec();
        let residual_top: Vec<Vec<Expr>> = self
            .residuals
            .iter()
            .map(|r| top.iter().map(|v| r.diff(v)).collect())
            .collect();
        let mo = self.momenta.as_ref().expect("explicit systems carry momenta");
        let mut state_exprs: Vec<Expr> = Vec::new();
        for v in &names[..m + n * (k - 1)] {
            state_exprs.push(Expr::var(v));
        }
        for j in 1..=k {
            state_exprs.extend(mo.pi[j - 1].iter().cloned());
        }
        let state_rates: Vec<Expr> = state_exprs
            .iter()
            .map(|e| total_derivative(e, &self.chart, 1))
            .collect::<Result<_, _>>()?;

        let mut rng = seeded_rng(seed);
        let mut worst: f64 = 0.0;
        let mut cache = vec![0.0; n];
        for _ in 0..samples {
            let mut jet = uniform_point(&mut rng, names.len(), -1.0, 1.0);
            for v in &mut jet[m + n * (2 * k - 1)..] {
                *v = 0.0;
            }
            let bind = |jet: &[f64]| -> HashMap<String, f64> { names.iter().cloned().zip(jet.iter().copied()).collect() };
            let b0 = bind(&jet);
            let r0: Vec<f64> = self.residuals.iter().map(|r| r.eval(&b0)).collect::<Result<_, _>>()?;
            let mut jac = Matrix::zeros(n, n);
            for a in 0..n {
                for c in 0..n {
                    jac[(a, c)] = residual_top[a][c].eval(&b0)?;
                }
            }
            let rhs: Vec<f64> = r0.iter().map(|v| -v).collect();
            let sol = dense_solve(&jac, &rhs)?;
            jet[m + n * (2 * k - 1)..].copy_from_slice(&sol);
            let b1 = bind(&jet);
            let state: Vec<f64> = state_exprs.iter().map(|e| e.eval(&b1)).collect::<Result<_, _>>()?;
            let exact: Vec<f64> = state_rates.iter().map(|e| e.eval(&b1)).collect::<Result<_, _>>()?;
            cache.copy_from_slice(&jet[m + n * (k - 1)..m + n * k]);
            let mut field = vec![0.0; state.len()];
            ex.rhs(&state, &mut field, &mut cache)?;
            for (p, q) in field.iter().zip(&exact) {
                worst = worst.max((p - q).abs() / (1.0 + q.abs()));
            }
        }
        Ok(worst)
    }
}

/// Explicit first-order form with the Jacobi–Ostrogradski momenta as
/// auxiliary state: `(x^A, y_1, .., y_{k-1}, pi^1, .., pi^k)`. The top jet
/// `y_k` is recovered from `pi^1` by Newton's method on the Legendre map.
#[derive(Clone, Debug)]
pub struct ExplicitForm {
    pub state_names: Vec<String>,
    m: usize,
    n: usize,
    k: usize,
    /// `s_i`, `q^(i) = s_i y_i`.
    scales: Vec<f64>,
    /// Prolongation factors `f_i` in `d/dt y_i = f_i y_{i+1}`.
    factors: Vec<f64>,
    lagrangian: CompiledExpr,
    d_base: Vec<CompiledExpr>,
    /// `d_fibre[i-1][a] = dL/dy^a_i`.
    d_fibre: Vec<Vec<CompiledExpr>>,
    hessian: Vec<Vec<CompiledExpr>>,
    anchor: Vec<Vec<CompiledExpr>>,
    /// `structure[c][b][a] = C^c_{ba}`.
    structure: Vec<Vec<Vec<CompiledExpr>>>,
    /// Momenta over the full jet chart, for building states from jets.
    jet_momenta: Vec<Vec<CompiledExpr>>,
    jet_names: Vec<String>,
}

impl ExplicitForm {
    fn new(spec: &LagrangianSpec, mo: &MomentaSet) -> Result<ExplicitForm, HigherError> {
        let (m, n, k) = (spec.base_dim(), spec.rank(), spec.order());
        let slots = spec.configuration_names();
        let l = spec.lagrangian();
        let compile = |e: &Expr| CompiledExpr::new(e, &slots);
        let d_base = spec
            .algebroid()
            .base_names()
            .iter()
            .map(|v| compile(&l.diff(v)))
            .collect::<Result<_, _>>()?;
        let d_fibre = (1..=k)
            .map(|i| (0..n).map(|a| compile(&l.diff(&spec.y(a, i)))).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        let hessian = (0..n)
            .map(|a| {
                let da = l.diff(&spec.y(a, k));
                (0..n).map(|b| compile(&da.diff(&spec.y(b, k)))).collect::<Result<_, _>>()
            })
            .collect::<Result<_, _>>()?;
        let alg = spec.algebroid();
        let anchor = (0..m)
            .map(|big_a| (0..n).map(|a| compile(alg.anchor(big_a, a))).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        let structure = (0..n)
            .map(|c| {
                (0..n)
                    .map(|b| (0..n).map(|a| compile(alg.structure(c, b, a))).collect::<Result<_, _>>())
                    .collect::<Result<_, _>>()
            })
            .collect::<Result<_, _>>()?;
        let jet_names = spec.jet_names();
        let jet_momenta = mo
            .pi
            .iter()
            .map(|row| row.iter().map(|e| CompiledExpr::new(e, &jet_names)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        let mut state_names: Vec<String> = alg.base_names().to_vec();
        for i in 1..k {
            for a in 0..n {
                state_names.push(spec.y(a, i));
            }
        }
        for j in 1..=k {
            for b in 0..n {
                state_names.push(mo.name(j, b));
            }
        }
        Ok(ExplicitForm {
            state_names,
            m,
            n,
            k,
            scales: (0..=k).map(|i| spec.scale(i)).collect(),
            factors: (0..=k).map(|i| spec.rule().factor(i)).collect(),
            lagrangian: compile(l)?,
            d_base,
            d_fibre,
            hessian,
            anchor,
            structure,
            jet_momenta,
            jet_names,
        })
    }

    pub fn dim(&self) -> usize {
        self.state_names.len()
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    /// Names of the jet variables [`ExplicitForm::state_from_jet`] expects.
    pub fn jet_names(&self) -> &[String] {
        &self.jet_names
    }

    /// State built from a jet `(x, y_1, .., y_{2k})` (chart order; entries
    /// above `y_{2k-1}` are ignored).
    pub fn state_from_jet(&self, jet: &[f64]) -> Result<Vec<f64>, HigherError> {
        let (m, n, k) = (self.m, self.n, self.k);
        if jet.len() != self.jet_names.len() {
            return Err(HigherError::Invalid(format!("jet has {} entries, chart has {}", jet.len(), self.jet_names.len())));
        }
        let mut s = jet[..m + n * (k - 1)].to_vec();
        for row in &self.jet_momenta {
            for e in row {
                s.push(e.eval(jet)?);
            }
        }
        Ok(s)
    }

    fn pi_block(&self, _state: &[f64], j: usize) -> std::ops::Range<usize> {
        let start = self.m + self.n * (self.k - 1) + self.n * (j - 1);
        start..start + self.n
    }

    /// Configuration `(x, y_1..y_k)` with `y_k` solved from `pi^1`;
    /// `guess` holds the previous `y_k` and is updated.
    pub fn configuration(&self, state: &[f64], guess: &mut [f64]) -> Result<Vec<f64>, HigherError> {
        let (m, n, k) = (self.m, self.n, self.k);
        let mut conf = Vec::with_capacity(m + n * k);
        conf.extend_from_slice(&state[..m + n * (k - 1)]);
        conf.extend_from_slice(guess);
        // dL/dy_k = s_k p_k = s_k pi^1 / (k-1)!
        let factor = self.scales[k] / factorial(k - 1);
        let target: Vec<f64> = state[self.pi_block(state, 1)].iter().map(|p| factor * p).collect();
        let top = m + n * (k - 1);
        let mut last_step = f64::INFINITY;
        for _ in 0..60 {
            let g: Vec<f64> = (0..n)
                .map(|a| Ok(self.d_fibre[k - 1][a].eval(&conf)? - target[a]))
                .collect::<Result<_, HigherError>>()?;
            let gnorm = g.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let scale = target.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            if gnorm <= 1e-14 * scale {
                guess.copy_from_slice(&conf[top..]);
                return Ok(conf);
            }
            let h = self.hessian_at(&conf)?;
            let step = dense_solve(&h, &g)?;
            last_step = step.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            for a in 0..n {
                conf[top + a] -= step[a];
            }
            let ynorm = conf[top..].iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            if last_step <= 1e-15 * ynorm {
                guess.copy_from_slice(&conf[top..]);
                return Ok(conf);
            }
        }
        Err(HigherError::LegendreInversion { last_step })
    }

    fn hessian_at(&self, conf: &[f64]) -> Result<Matrix, HigherError> {
        let n = self.n;
        let mut h = Matrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                h[(a, b)] = self.hessian[a][b].eval(conf)?;
            }
        }
        Ok(h)
    }

    /// Condition number of the top Hessian at a configuration.
    pub fn hessian_condition(&self, conf: &[f64]) -> Result<f64, HigherError> {
        Ok(condition_number(&self.hessian_at(conf)?))
    }

    /// Fails with `SingularLegendre` unless the top Hessian is well
    /// conditioned at `conf`.
    pub fn check_regular(&self, conf: &[f64]) -> Result<(), HigherError> {
        let condition = self.hessian_condition(conf)?;
        if condition < REGULARITY_LIMIT {
            Ok(())
        } else {
            Err(HigherError::SingularLegendre {
                condition,
                limit: REGULARITY_LIMIT,
            })
        }
    }

    /// Vector field at `state`; `guess` is the warm start for `y_k`.
    pub fn rhs(&self, state: &[f64], out: &mut [f64], guess: &mut [f64]) -> Result<(), HigherError> {
        let (m, n, k) = (self.m, self.n, self.k);
        let conf = self.configuration(state, guess)?;
        let y = |i: usize, a: usize| conf[m + n * (i - 1) + a];
        let p = |i: usize, a: usize| state[self.pi_block(state, self.k - i + 1).start + a] / factorial(i - 1);
        let rho: Vec<Vec<f64>> = self
            .anchor
            .iter()
            .map(|r| r.iter().map(|e| e.eval(&conf)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        for big_a in 0..m {
            out[big_a] = (0..n).map(|a| rho[big_a][a] * y(1, a)).sum();
        }
        for i in 1..k {
            for a in 0..n {
                out[m + n * (i - 1) + a] = self.factors[i] * y(i + 1, a);
            }
        }
        // d/dt pi^{k-i} = i! (dL/dy_i / s_i - p_i), i = 1..k-1
        for i in 1..k {
            let block = self.pi_block(state, k - i);
            for a in 0..n {
                let dl = self.d_fibre[i - 1][a].eval(&conf)?;
                out[block.start + a] = factorial(i) * (dl / self.scales[i] - p(i, a));
            }
        }
        // d/dt pi^k_a = rho^A_a dL/dx^A + y_1^b C^c_{ba} pi^k_c
        let block = self.pi_block(state, k);
        let d_base: Vec<f64> = self.d_base.iter().map(|e| e.eval(&conf)).collect::<Result<_, _>>()?;
        for a in 0..n {
            let mut v: f64 = (0..m).map(|big_a| rho[big_a][a] * d_base[big_a]).sum();
            for b in 0..n {
                let yb = y(1, b);
                if yb == 0.0 {
                    continue;
                }
                for c in 0..n {
                    v += yb * self.structure[c][b][a].eval(&conf)? * p(1, c);
                }
            }
            out[block.start + a] = v;
        }
        Ok(())
    }

    /// Energy `sum_i p_i q^(i) - L` and `sum_a (pi^k_a)^2` at `state`.
    pub fn invariants(&self, state: &[f64], guess: &mut [f64]) -> Result<(f64, f64), HigherError> {
        let (m, n, k) = (self.m, self.n, self.k);
        let conf = self.configuration(state, guess)?;
        let mut energy = -self.lagrangian.eval(&conf)?;
        for i in 1..=k {
            let block = self.pi_block(state, k - i + 1);
            for a in 0..n {
                let p = state[block.start + a] / factorial(i - 1);
                energy += p * self.scales[i] * conf[m + n * (i - 1) + a];
            }
        }
        let top = self.pi_block(state, k);
        let norm = state[top].iter().map(|v| v * v).sum();
        Ok((energy, norm))
    }
}

fn prolongation_constraints(chart: &Chart, depth: usize) -> Result<Vec<Constraint>, HigherError> {
    chart
        .vars()
        .iter()
        .filter(|v| v.order < depth)
        .map(|v| {
            Ok(Constraint {
                variable: v.name.clone(),
                rate: chart.rate(&v.name)?,
            })
        })
        .collect()
}

/// Implicit Euler–Lagrange residuals of `spec`, without any regularity
/// requirement.
pub fn el_residuals(spec: &LagrangianSpec) -> Result<ElSystem, HigherError> {
    let mo = momenta(spec)?;
    let (m, n) = (spec.base_dim(), spec.rank());
    let alg = spec.algebroid();
    let chart = spec.chart();
    let l = spec.lagrangian();
    let d_base: Vec<Expr> = alg.base_names().iter().map(|v| l.diff(v)).collect();
    let mut residuals = Vec::with_capacity(n);
    for a in 0..n {
        let mut terms = Vec::new();
        for big_a in 0..m {
            terms.push(alg.anchor(big_a, a) * &d_base[big_a]);
        }
        terms.push(-total_derivative(&mo.p[0][a], chart, 1)?);
        for b in 0..n {
            for c in 0..n {
                let coeff = alg.structure(c, b, a);
                if coeff.is_zero() {
                    continue;
                }
                terms.push(Expr::var(&spec.y(b, 1)) * coeff * &mo.p[0][c]);
            }
        }
        residuals.push(Expr::sum(terms));
    }
    let label = match spec.rule() {
        crate::expr::Prolongation::QJet => "classical",
        crate::expr::Prolongation::YGraded => "algebroid",
    };
    Ok(ElSystem {
        label: label.to_string(),
        chart: chart.clone(),
        residuals,
        constraints: prolongation_constraints(chart, 2 * spec.order())?,
        momenta: Some(mo),
        explicit: None,
        regular: false,
    })
}

/// Number of random configurations probed for regularity besides the origin.
const REGULARITY_PROBES: usize = 20;

/// Euler–Lagrange equations of `spec` together with the explicit
/// first-order form.
///
/// The top Hessian is probed at the origin and at seeded random
/// configurations; if it is singular at all of them the Lagrangian is
/// degenerate and `SingularLegendre` is returned.
pub fn el_equations(spec: &LagrangianSpec) -> Result<ElSystem, HigherError> {
    let mut sys = el_residuals(spec)?;
    let explicit = ExplicitForm::new(spec, sys.momenta.as_ref().expect("residuals carry momenta"))?;
    let dim = spec.configuration_names().len();
    let mut rng = seeded_rng(DEFAULT_SEED);
    let mut best = f64::INFINITY;
    let probes = std::iter::once(vec![0.0; dim]).chain((0..REGULARITY_PROBES).map(|_| uniform_point(&mut rng, dim, -1.0, 1.0)));
    for conf in probes {
        if let Ok(c) = explicit.hessian_condition(&conf) {
            best = best.min(c);
        }
        if best < REGULARITY_LIMIT {
            break;
        }
    }
    if !(best < REGULARITY_LIMIT) {
        return Err(HigherError::SingularLegendre {
            condition: best,
            limit: REGULARITY_LIMIT,
        });
    }
    sys.explicit = Some(explicit);
    sys.regular = true;
    Ok(sys)
}

/// Classical higher Euler–Lagrange residual `sum_i (-1)^i d^i/dt^i
/// dL/dq^(i)` on `T^k R^m` in jet coordinates `q_i` (`q{c}_i` for `m > 1`),
/// with the explicit Ostrogradski form.
pub fn classical_el(order: usize, m: usize, lagrangian: &Expr) -> Result<ElSystem, HigherError> {
    el_equations(&LagrangianSpec::classical(m, order, lagrangian.clone())?)
}

/// [`classical_el`] without the regularity requirement.
pub fn classical_residuals(order: usize, m: usize, lagrangian: &Expr) -> Result<ElSystem, HigherError> {
    el_residuals(&LagrangianSpec::classical(m, order, lagrangian.clone())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::{abelian, so3, tangent_algebroid};
    use crate::expr::parse;

    fn agree(sys: &ElSystem, expected: &[&str]) {
        let names = sys.chart.names();
        let mut rng = seeded_rng(4);
        for _ in 0..50 {
            let pt = uniform_point(&mut rng, names.len(), -1.0, 1.0);
            let got = sys.eval_residuals(&pt).unwrap();
            let bind: HashMap<String, f64> = names.iter().cloned().zip(pt.iter().copied()).collect();
            for (g, e) in got.iter().zip(expected) {
                let want = parse(e).unwrap().eval(&bind).unwrap();
                assert!((g - want).abs() < 1e-12, "{g} vs {want} ({e})");
            }
        }
    }

    #[test]
    fn classical_examples() {
        agree(&classical_el(1, 1, &parse("q_1^2/2 - q_0^2/2").unwrap()).unwrap(), &["-q_0 - q_2"]);
        agree(&classical_el(2, 1, &parse("-q_2^2/2 + q_1^2/2").unwrap()).unwrap(), &["-q_2 - q_4"]);
        let free = classical_el(3, 1, &parse("q_3^2 + q_1*q_2").unwrap()).unwrap();
        assert!(!free.residuals[0].contains_var("q_0"));
    }

    #[test]
    fn geodesic_on_tangent_bundle() {
        let spec = LagrangianSpec::parse(tangent_algebroid(2), 1, "(y1_1^2 + y2_1^2)/2").unwrap();
        agree(&el_equations(&spec).unwrap(), &["-2*y1_2", "-2*y2_2"]);
    }

    #[test]
    fn abelian_residuals_do_not_see_base() {
        let spec = LagrangianSpec::parse(abelian(2), 2, "y1_2^2 + y1_1*y2_2 + y2_2^2").unwrap();
        let sys = el_equations(&spec).unwrap();
        for r in &sys.residuals {
            assert!(r.free_vars().iter().all(|v| v.starts_with('y')));
        }
    }

    #[test]
    fn degenerate_lagrangian_is_rejected() {
        let spec = LagrangianSpec::parse(tangent_algebroid(1), 2, "y_2 + y_1^2").unwrap();
        assert!(matches!(el_equations(&spec), Err(HigherError::SingularLegendre { .. })));
        assert!(el_residuals(&spec).is_ok());
    }

    #[test]
    fn explicit_form_solves_the_residuals() {
        let cases = [
            (tangent_algebroid(1), 1, "y_1^2/2 - x^2/2 + y_1^4/12"),
            (tangent_algebroid(2), 2, "(y1_1^2 + y2_1^2 - y1_2^2 - y2_2^2)/2 + x1*y2_2*y1_1/5"),
            (so3(), 2, "(y1_2^2 + 2*y2_2^2 + 3*y3_2^2)/2 + y1_1*y2_1"),
            (tangent_algebroid(1), 3, "y_3^2 + y_2^2*y_1 - x^2/2"),
        ];
        for (alg, k, l) in cases {
            let sys = el_equations(&LagrangianSpec::parse(alg, k, l).unwrap()).unwrap();
            let dev = sys.explicit_consistency(100, 11).unwrap();
            assert!(dev < 1e-8, "{l}: {dev}");
        }
    }

    #[test]
    fn first_order_state_is_position_and_momentum() {
        let sys = el_equations(&LagrangianSpec::parse(tangent_algebroid(1), 1, "y_1^2/2 - x^2/2").unwrap()).unwrap();
        let ex = sys.explicit.as_ref().unwrap();
        assert_eq!(ex.state_names, ["x", "pi1"]);
        let mut out = [0.0; 2];
        ex.rhs(&[0.5, 2.0], &mut out, &mut [0.0]).unwrap();
        assert!((out[0] - 2.0).abs() < 1e-14 && (out[1] + 0.5).abs() < 1e-14);
    }
}
