use serde::Serialize;

use super::{factorial, HigherError, LagrangianSpec};
use crate::expr::{total_derivative, Expr};

/// Jacobi–Ostrogradski momenta `pi^j_b`, `j = 1..k`, together with the
/// Ostrogradski momenta `p_i` they rescale: `pi^j = (k-j)! p_{k-j+1}`.
#[derive(Clone, Debug)]
pub struct MomentaSet {
    pub order: usize,
    pub rank: usize,
    /// `pi[j-1][b]`.
    pub pi: Vec<Vec<Expr>>,
    /// `p[i-1][b] = sum_{l>=i} (-d/dt)^{l-i} (1/s_l) dL/dy_l`.
    pub p: Vec<Vec<Expr>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentumEntry {
    pub name: String,
    pub text: String,
    pub latex: String,
}

impl MomentaSet {
    /// `pi^j_b`, one-based `j`.
    pub fn pi(&self, j: usize, b: usize) -> &Expr {
        &self.pi[j - 1][b]
    }

    pub fn name(&self, j: usize, b: usize) -> String {
        if self.rank == 1 {
            format!("pi{j}")
        } else {
            format!("pi{j}_{}", b + 1)
        }
    }

    pub fn entries(&self) -> Vec<MomentumEntry> {
        let mut out = Vec::new();
        for j in 1..=self.order {
            for b in 0..self.rank {
                let e = self.pi(j, b);
                out.push(MomentumEntry {
                    name: self.name(j, b),
                    text: e.to_string(),
                    latex: e.to_latex(),
                });
            }
        }
        out
    }
}

/// Builds the momenta of `spec` with total derivatives in its chart.
///
/// `pi^k = dL/dy_1 - (1/2!) d/dt dL/dy_2 + ... ± (1/k!) d^{k-1}/dt^{k-1}
/// dL/dy_k` and in general `(k-j+1) pi^j` collects the terms starting at
/// `dL/dy_{k-j+1}`.
pub fn momenta(spec: &LagrangianSpec) -> Result<MomentaSet, HigherError> {
    let k = spec.order();
    let n = spec.rank();
    let chart = spec.chart();
    let l = spec.lagrangian();
    let mut p = vec![Vec::with_capacity(n); k];
    for (i0, p_i) in p.iter_mut().enumerate() {
        let i = i0 + 1;
        for b in 0..n {
            let mut terms = Vec::with_capacity(k - i + 1);
            for lvl in i..=k {
                let partial = l.diff(&spec.y(b, lvl)) / spec.scale(lvl);
                let d = total_derivative(&partial, chart, lvl - i)?;
                terms.push(if (lvl - i) % 2 == 0 { d } else { -d });
            }
            p_i.push(Expr::sum(terms));
        }
    }
    let pi = (1..=k)
        .map(|j| p[k - j].iter().map(|e| factorial(k - j) * e.clone()).collect())
        .collect();
    Ok(MomentaSet { order: k, rank: n, pi, p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::tangent_algebroid;
    use crate::expr::parse;
    use crate::sampling::{seeded_rng, uniform_point};
    use std::collections::HashMap;

    fn same(a: &Expr, b: &Expr, names: &[String]) -> bool {
        let mut rng = seeded_rng(17);
        (0..50).all(|_| {
            let pt = uniform_point(&mut rng, names.len(), -1.0, 1.0);
            let bind: HashMap<String, f64> = names.iter().cloned().zip(pt).collect();
            (a.eval(&bind).unwrap() - b.eval(&bind).unwrap()).abs() < 1e-12
        })
    }

    #[test]
    fn second_order_example() {
        let spec = LagrangianSpec::parse(tangent_algebroid(1), 2, "(y_1^2 - y_2^2)/2").unwrap();
        let mo = momenta(&spec).unwrap();
        let names = spec.jet_names();
        assert!(same(mo.pi(1, 0), &parse("-y_2/2").unwrap(), &names));
        // y_1 + 1/2 d/dt(y_2) with d/dt y_2 = 3 y_3.
        assert!(same(mo.pi(2, 0), &parse("y_1 + 3*y_3/2").unwrap(), &names));
    }

    #[test]
    fn first_order_is_legendre_map() {
        let spec = LagrangianSpec::parse(tangent_algebroid(2), 1, "y1_1^2*x2 + sin(x1)*y2_1").unwrap();
        let mo = momenta(&spec).unwrap();
        let names = spec.jet_names();
        assert!(same(mo.pi(1, 0), &parse("2*y1_1*x2").unwrap(), &names));
        assert!(same(mo.pi(1, 1), &parse("sin(x1)").unwrap(), &names));
    }

    #[test]
    fn third_order_top_momentum() {
        let spec = LagrangianSpec::parse(tangent_algebroid(1), 3, "y_3^2/2").unwrap();
        let mo = momenta(&spec).unwrap();
        assert!(same(&(3.0 * mo.pi(1, 0).clone()), &parse("y_3").unwrap(), &spec.jet_names()));
    }

    #[test]
    fn jet_depth_of_each_momentum() {
        let spec = LagrangianSpec::parse(tangent_algebroid(1), 3, "y_3^2/2 + y_2^2*y_1 + x*y_1").unwrap();
        let mo = momenta(&spec).unwrap();
        for j in 1..=3 {
            let depth = mo
                .pi(j, 0)
                .free_vars()
                .iter()
                .filter_map(|v| spec.chart().get(v).map(|jv| jv.order))
                .max()
                .unwrap_or(0);
            assert!(depth <= 3 + j - 1, "pi^{j} has depth {depth}");
        }
    }
}
