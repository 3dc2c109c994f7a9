//! Second-order Lagrangians on a Lie algebra written in velocity–
//! acceleration coordinates `(x, z)` with `dx/dt = z`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::el::{el_residuals, Constraint, ElSystem};
use super::{HigherError, LagrangianSpec};
use crate::algebroid::{indexed_name, AlgebroidSpec};
use crate::expr::{total_derivative, Chart, Expr, JetVar, Prolongation};
use crate::sampling::{seeded_rng, uniform_point};

/// Index placement in `(ad*_x mu)_a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdStarConvention {
    /// `(ad*_x mu)_a = C^c_{ba} x^b mu_c`.
    Left,
    /// `(ad*_x mu)_a = C^c_{ab} x^b mu_c`.
    Right,
}

impl AdStarConvention {
    fn coefficient<'a>(self, alg: &'a AlgebroidSpec, c: usize, a: usize, b: usize) -> &'a Expr {
        match self {
            AdStarConvention::Left => alg.structure(c, b, a),
            AdStarConvention::Right => alg.structure(c, a, b),
        }
    }
}

fn g2_names(n: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let x = (0..n).map(|a| indexed_name("x", a, n)).collect();
    let z = (0..3)
        .map(|i| {
            (0..n)
                .map(|a| {
                    let base = indexed_name("z", a, n);
                    if i == 0 {
                        base
                    } else {
                        format!("{base}_{i}")
                    }
                })
                .collect()
        })
        .collect();
    (x, z)
}

fn g2_chart(n: usize) -> Result<Chart, HigherError> {
    let (x, z) = g2_names(n);
    let mut vars: Vec<JetVar> = x.iter().enumerate().map(|(a, v)| JetVar::new(v.clone(), "x", a, 0, 1)).collect();
    for (i, row) in z.iter().enumerate() {
        for (a, v) in row.iter().enumerate() {
            vars.push(JetVar::new(v.clone(), "z", a, i, 2 + i as u32));
        }
    }
    let mut chart = Chart::new(vars, Prolongation::QJet)?;
    for a in 0..n {
        chart = chart.with_rate(&x[a], Expr::var(&z[0][a]))?;
    }
    Ok(chart)
}

/// Euler–Lagrange equations on `g_2` for `L(x, z)`:
/// `d/dt mu = ad*_x mu`, `mu = dL/dx - d/dt dL/dz`, with `dx/dt = z`.
///
/// Variables are `x_a`, `z_a` and the jets `z_a_1`, `z_a_2` (plain `x`, `z`,
/// `z_1`, `z_2` for a one-dimensional algebra). Residuals are
/// `d/dt mu_a - (ad*_x mu)_a`.
pub fn g2_pipeline(lagrangian: &Expr, algebra: &AlgebroidSpec, convention: AdStarConvention) -> Result<ElSystem, HigherError> {
    if algebra.base_dim() != 0 {
        return Err(HigherError::Invalid("g2 pipeline needs a Lie algebra (no base)".into()));
    }
    let n = algebra.rank();
    let chart = g2_chart(n)?;
    let (x, z) = g2_names(n);
    let allowed: Vec<&String> = x.iter().chain(&z[0]).collect();
    if let Some(v) = lagrangian.free_vars().into_iter().find(|v| !allowed.contains(&v)) {
        return Err(crate::expr::ChartError::UnknownVariable(v).into());
    }
    let mu: Vec<Expr> = (0..n)
        .map(|a| Ok(lagrangian.diff(&x[a]) - total_derivative(&lagrangian.diff(&z[0][a]), &chart, 1)?))
        .collect::<Result<_, HigherError>>()?;
    let mut residuals = Vec::with_capacity(n);
    for a in 0..n {
        let mut terms = vec![total_derivative(&mu[a], &chart, 1)?];
        for b in 0..n {
            for c in 0..n {
                let coeff = convention.coefficient(algebra, c, a, b);
                if !coeff.is_zero() {
                    terms.push(-(coeff * Expr::var(&x[b]) * &mu[c]));
                }
            }
        }
        residuals.push(Expr::sum(terms));
    }
    let constraints = (0..n)
        .map(|a| Constraint {
            variable: x[a].clone(),
            rate: Expr::var(&z[0][a]),
        })
        .collect();
    Ok(ElSystem {
        label: "g2".to_string(),
        chart,
        residuals,
        constraints,
        momenta: None,
        explicit: None,
        regular: false,
    })
}

/// Compares [`g2_pipeline`] with the graded algebroid equations for the same
/// Lagrangian. In graded coordinates `z = 2 y_2`, so the algebroid system is
/// built from `L(y_1, 2 y_2)` and evaluated at the matching state
/// `(x, z, z_1, z_2) = (y_1, 2 y_2, 6 y_3, 24 y_4)`. The two residuals are
/// negatives of each other; returns `max |r_g2 + r_algebroid|`.
pub fn g2_consistency(
    lagrangian: &Expr,
    algebra: &AlgebroidSpec,
    convention: AdStarConvention,
    samples: usize,
    seed: u64,
) -> Result<f64, HigherError> {
    let g2 = g2_pipeline(lagrangian, algebra, convention)?;
    let n = algebra.rank();
    let (x, z) = g2_names(n);
    let probe = LagrangianSpec::new(algebra.clone(), 2, Expr::zero())?;
    let mut to_graded: HashMap<String, Expr> = HashMap::new();
    for a in 0..n {
        to_graded.insert(x[a].clone(), Expr::var(&probe.y(a, 1)));
        to_graded.insert(z[0][a].clone(), 2.0 * Expr::var(&probe.y(a, 2)));
    }
    let spec = probe.with_lagrangian(lagrangian.substitute(&to_graded))?;
    let graded = el_residuals(&spec)?;
    let scales = [1.0, 2.0, 6.0, 24.0];
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let y = uniform_point(&mut rng, 4 * n, -1.0, 1.0);
        // Graded chart order is y_1 (n), y_2 (n), ...; g2 chart order is
        // x (n), z (n), z_1 (n), z_2 (n): same blocks, rescaled.
        let g: Vec<f64> = y.iter().enumerate().map(|(i, v)| v * scales[i / n]).collect();
        let a = graded.eval_residuals(&y)?;
        let b = g2.eval_residuals(&g)?;
        for (u, v) in a.iter().zip(&b) {
            worst = worst.max((u + v).abs());
        }
    }
    Ok(worst)
}

/// The higher Euler equations written out directly:
/// `I_j x'''^j - sum_{i,k} c^k_{ij} I_k x^i x''^k` for each `j`, evaluated
/// from `x`, `x''` and `x'''`.
pub fn higher_euler_rhs(constants: &[Vec<Vec<f64>>], inertia: &[f64], x: &[f64], x2: &[f64], x3: &[f64]) -> Vec<f64> {
    let n = inertia.len();
    (0..n)
        .map(|j| {
            let mut s = inertia[j] * x3[j];
            for i in 0..n {
                for k in 0..n {
                    s -= constants[k][i][j] * inertia[k] * x[i] * x2[k];
                }
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::{abelian, so3, so3_constants, tangent_algebroid};
    use crate::expr::parse;

    #[test]
    fn abelian_is_third_order_linear() {
        let sys = g2_pipeline(&parse("(z1^2 + z2^2)/2 + x1*z2").unwrap(), &abelian(2), AdStarConvention::Left).unwrap();
        let names = sys.chart.names();
        assert_eq!(names, ["x1", "x2", "z1", "z2", "z1_1", "z2_1", "z1_2", "z2_2"]);
        // mu = (dL/dx) - d/dt dL/dz; d/dt mu_1 = d/dt(z2) - z1_2 ... linear.
        let pt = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
        let r = sys.eval_residuals(&pt).unwrap();
        assert!((r[0] - (0.6 - 0.7)).abs() < 1e-14);
        assert!((r[1] - (-0.5 - 0.8)).abs() < 1e-14);
    }

    #[test]
    fn left_convention_matches_algebroid_equations() {
        let l = parse("(z1^2 + 2*z2^2 + 3*z3^2)/2 + x1*z2 - x3^2*z1").unwrap();
        let left = g2_consistency(&l, &so3(), AdStarConvention::Left, 200, 1).unwrap();
        let right = g2_consistency(&l, &so3(), AdStarConvention::Right, 200, 1).unwrap();
        assert!(left < 1e-8, "{left}");
        assert!(right > 1e-3, "{right}");
    }

    #[test]
    fn higher_euler_equations() {
        let inertia = [1.0, 2.0, 3.0];
        let sys = g2_pipeline(&parse("(z1^2 + 2*z2^2 + 3*z3^2)/2").unwrap(), &so3(), AdStarConvention::Left).unwrap();
        let mut rng = seeded_rng(8);
        for _ in 0..50 {
            let pt = uniform_point(&mut rng, 12, -1.0, 1.0);
            let r = sys.eval_residuals(&pt).unwrap();
            let direct = higher_euler_rhs(&so3_constants(), &inertia, &pt[0..3], &pt[6..9], &pt[9..12]);
            for (u, v) in r.iter().zip(&direct) {
                assert!((u + v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_algebroids_with_base() {
        assert!(g2_pipeline(&parse("z^2").unwrap(), &tangent_algebroid(1), AdStarConvention::Left).is_err());
    }
}
