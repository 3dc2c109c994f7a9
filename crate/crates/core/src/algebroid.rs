//! Lie algebroids in a local frame: anchor `rho^A_a(x)` and structure
//! functions `C^c_{ab}(x)`, with numerical axiom checks.
//!
//! The bracket is `[e_a, e_b] = C^c_{ab} e_c` and the anchor sends `e_a` to
//! `rho^A_a d/dx^A`.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::sampling::{seeded_rng, uniform_point, DEFAULT_SEED};

/// Default number of sampled base points for [`check_axioms`].
pub const DEFAULT_AXIOM_SAMPLES: usize = 50;

/// Tolerance used by [`lie_algebra`] when validating antisymmetry.
pub const ANTISYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebroidError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("structure constants not antisymmetric: C^{c}_{{{a}{b}}} + C^{c}_{{{b}{a}}} = {excess:e}")]
    NotAntisymmetric {
        c: usize,
        a: usize,
        b: usize,
        excess: f64,
    },
    #[error("`{0}` is not a base coordinate")]
    UnknownVariable(String),
}

/// Coordinate description of a Lie algebroid of rank `n` over an
/// `m`-dimensional base.
///
/// Indices are zero-based in code; names of base coordinates are `x1..xm`
/// (just `x` when `m = 1`).
#[derive(Clone, Debug)]
pub struct AlgebroidSpec {
    base: Vec<String>,
    rank: usize,
    /// `anchor[A][a] = rho^A_a`.
    anchor: Vec<Vec<Expr>>,
    /// `structure[c][a][b] = C^c_{ab}`.
    structure: Vec<Vec<Vec<Expr>>>,
}

/// Conventional name of the `i`-th (zero-based) of `count` indexed symbols.
pub fn indexed_name(stem: &str, i: usize, count: usize) -> String {
    if count == 1 {
        stem.to_string()
    } else {
        format!("{stem}{}", i + 1)
    }
}

impl AlgebroidSpec {
    /// Builds a spec from raw parts, checking only shapes and that every
    /// expression lives on the base. Axioms are *not* checked; use
    /// [`check_axioms`] for that.
    pub fn from_parts(
        base: Vec<String>,
        anchor: Vec<Vec<Expr>>,
        structure: Vec<Vec<Vec<Expr>>>,
    ) -> Result<AlgebroidSpec, AlgebroidError> {
        let m = base.len();
        let n = structure.len();
        if anchor.len() != m || anchor.iter().any(|r| r.len() != n) {
            return Err(AlgebroidError::Shape(format!("anchor must be {m}x{n}")));
        }
        if structure.iter().any(|s| s.len() != n || s.iter().any(|r| r.len() != n)) {
            return Err(AlgebroidError::Shape(format!("structure must be {n}x{n}x{n}")));
        }
        let exprs = anchor.iter().flatten().chain(structure.iter().flatten().flatten());
        for e in exprs {
            if let Some(v) = e.free_vars().into_iter().find(|v| !base.contains(v)) {
                return Err(AlgebroidError::UnknownVariable(v));
            }
        }
        Ok(AlgebroidSpec {
            base,
            rank: n,
            anchor,
            structure,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn base_names(&self) -> &[String] {
        &self.base
    }

    /// `rho^A_a`.
    pub fn anchor(&self, big_a: usize, a: usize) -> &Expr {
        &self.anchor[big_a][a]
    }

    /// `C^c_{ab}`.
    pub fn structure(&self, c: usize, a: usize, b: usize) -> &Expr {
        &self.structure[c][a][b]
    }

    /// Structure constants `[c][a][b]`, if every structure function is a
    /// constant.
    pub fn structure_constants(&self) -> Option<Vec<Vec<Vec<f64>>>> {
        self.structure
            .iter()
            .map(|s| s.iter().map(|r| r.iter().map(Expr::as_const).collect()).collect())
            .collect()
    }

    /// True for `TM` in its standard frame: identity anchor, zero bracket.
    pub fn is_tangent(&self) -> bool {
        let m = self.base_dim();
        m == self.rank
            && (0..m).all(|i| (0..m).all(|j| self.anchor[i][j].as_const() == Some(if i == j { 1.0 } else { 0.0 })))
            && self.structure.iter().flatten().flatten().all(Expr::is_zero)
    }
}

/// `TM` for `M = R^m`: identity anchor and vanishing structure functions.
pub fn tangent_algebroid(m: usize) -> AlgebroidSpec {
    assert!(m >= 1, "tangent algebroid needs a base of dimension >= 1");
    let base = (0..m).map(|i| indexed_name("x", i, m)).collect();
    let anchor = (0..m)
        .map(|i| (0..m).map(|j| Expr::constant(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let structure = vec![vec![vec![Expr::zero(); m]; m]; m];
    AlgebroidSpec {
        base,
        rank: m,
        anchor,
        structure,
    }
}

/// A Lie algebra as an algebroid over a point, from constants `c[k][i][j]
/// = c^k_{ij}`.
pub fn lie_algebra(constants: &[Vec<Vec<f64>>]) -> Result<AlgebroidSpec, AlgebroidError> {
    let n = constants.len();
    for (c, s) in constants.iter().enumerate() {
        if s.len() != n || s.iter().any(|r| r.len() != n) {
            return Err(AlgebroidError::Shape(format!("structure constants must be {n}x{n}x{n}")));
        }
        for a in 0..n {
            for b in a..n {
                let excess = (s[a][b] + s[b][a]).abs();
                if excess > ANTISYMMETRY_TOL {
                    return Err(AlgebroidError::NotAntisymmetric { c, a, b, excess });
                }
            }
        }
    }
    Ok(lie_algebra_unchecked(constants))
}

/// Like [`lie_algebra`] but without the antisymmetry check, for building
/// deliberately broken specs.
pub fn lie_algebra_unchecked(constants: &[Vec<Vec<f64>>]) -> AlgebroidSpec {
    let n = constants.len();
    let structure = constants
        .iter()
        .map(|s| s.iter().map(|r| r.iter().map(|&v| Expr::constant(v)).collect()).collect())
        .collect();
    AlgebroidSpec {
        base: Vec::new(),
        rank: n,
        anchor: Vec::new(),
        structure,
    }
}

/// Levi-Civita constants `c^k_{ij} = eps_{ijk}`.
pub fn so3_constants() -> Vec<Vec<Vec<f64>>> {
    let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        c[k][i][j] = 1.0;
        c[k][j][i] = -1.0;
    }
    c
}

pub fn so3() -> AlgebroidSpec {
    lie_algebra_unchecked(&so3_constants())
}

/// Abelian Lie algebra of dimension `n`.
pub fn abelian(n: usize) -> AlgebroidSpec {
    lie_algebra_unchecked(&vec![vec![vec![0.0; n]; n]; n])
}

/// Largest axiom violations over the sampled base points.
#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub antisymmetry_max_violation: f64,
    pub jacobi_max_violation: f64,
    pub anchor_compat_max_violation: f64,
    pub sample_points: Vec<Vec<f64>>,
}

impl AxiomReport {
    pub fn max_violation(&self) -> f64 {
        self.antisymmetry_max_violation
            .max(self.jacobi_max_violation)
            .max(self.anchor_compat_max_violation)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation() < tol
    }
}

/// Checks antisymmetry, the Jacobi identity
/// `sum_cyc (C^e_{ad} C^d_{bc} + rho^A_a d_A C^e_{bc}) = 0`
/// and anchor compatibility
/// `rho^B_c d_B rho^A_d - rho^B_d d_B rho^A_c = rho^A_e C^e_{cd}`
/// at `samples` seeded points of `[-1, 1]^m`. A Lie algebra (`m = 0`) is
/// checked once, at the empty point.
pub fn check_axioms(spec: &AlgebroidSpec, samples: usize) -> Result<AxiomReport, EvalError> {
    check_axioms_seeded(spec, samples, DEFAULT_SEED)
}

pub fn check_axioms_seeded(spec: &AlgebroidSpec, samples: usize, seed: u64) -> Result<AxiomReport, EvalError> {
    let m = spec.base_dim();
    let n = spec.rank();
    let mut rng = seeded_rng(seed);
    let points: Vec<Vec<f64>> = if m == 0 {
        vec![Vec::new()]
    } else {
        (0..samples.max(1)).map(|_| uniform_point(&mut rng, m, -1.0, 1.0)).collect()
    };
    // d_B C^e_{bc} and d_B rho^A_d, differentiated once up front.
    let d_structure: Vec<Vec<Vec<Vec<Expr>>>> = (0..m)
        .map(|bb| {
            spec.structure
                .iter()
                .map(|s| s.iter().map(|r| r.iter().map(|e| e.diff(&spec.base[bb])).collect()).collect())
                .collect()
        })
        .collect();
    let d_anchor: Vec<Vec<Vec<Expr>>> = (0..m)
        .map(|bb| {
            spec.anchor
                .iter()
                .map(|r| r.iter().map(|e| e.diff(&spec.base[bb])).collect())
                .collect()
        })
        .collect();

    let mut report = AxiomReport {
        antisymmetry_max_violation: 0.0,
        jacobi_max_violation: 0.0,
        anchor_compat_max_violation: 0.0,
        sample_points: points.clone(),
    };
    for p in &points {
        let bind: HashMap<String, f64> = spec.base.iter().cloned().zip(p.iter().copied()).collect();
        let ev = |e: &Expr| e.eval(&bind);
        let c: Vec<Vec<Vec<f64>>> = spec
            .structure
            .iter()
            .map(|s| s.iter().map(|r| r.iter().map(ev).collect()).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        let rho: Vec<Vec<f64>> = spec
            .anchor
            .iter()
            .map(|r| r.iter().map(ev).collect())
            .collect::<Result<_, _>>()?;
        let dc: Vec<Vec<Vec<Vec<f64>>>> = d_structure
            .iter()
            .map(|t| {
                t.iter()
                    .map(|s| s.iter().map(|r| r.iter().map(ev).collect()).collect::<Result<_, _>>())
                    .collect::<Result<_, _>>()
            })
            .collect::<Result<_, _>>()?;
        let drho: Vec<Vec<Vec<f64>>> = d_anchor
            .iter()
            .map(|t| t.iter().map(|r| r.iter().map(ev).collect()).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;

        for e in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let v = (c[e][a][b] + c[e][b][a]).abs();
                    report.antisymmetry_max_violation = report.antisymmetry_max_violation.max(v);
                }
            }
        }

        // [e_a, [e_b, e_c]] component along e_e.
        let term = |e: usize, a: usize, b: usize, cc: usize| -> f64 {
            let algebraic: f64 = (0..n).map(|d| c[e][a][d] * c[d][b][cc]).sum();
            let transport: f64 = (0..m).map(|bb| rho[bb][a] * dc[bb][e][b][cc]).sum();
            algebraic + transport
        };
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for e in 0..n {
                        let v = term(e, a, b, cc) + term(e, b, cc, a) + term(e, cc, a, b);
                        report.jacobi_max_violation = report.jacobi_max_violation.max(v.abs());
                    }
                }
            }
        }

        for cc in 0..n {
            for d in 0..n {
                for big_a in 0..m {
                    let lhs: f64 = (0..m)
                        .map(|bb| rho[bb][cc] * drho[bb][big_a][d] - rho[bb][d] * drho[bb][big_a][cc])
                        .sum();
                    let rhs: f64 = (0..n).map(|e| rho[big_a][e] * c[e][cc][d]).sum();
                    report.anchor_compat_max_violation = report.anchor_compat_max_violation.max((lhs - rhs).abs());
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn tangent_is_identity_anchor() {
        let t = tangent_algebroid(3);
        assert_eq!(t.base_names(), ["x1", "x2", "x3"]);
        assert!(t.anchor(1, 1).is_one() && t.anchor(0, 2).is_zero());
        assert!(t.is_tangent());
        let r = check_axioms(&t, 10).unwrap();
        assert_eq!(r.max_violation(), 0.0);
        let t1 = tangent_algebroid(1);
        assert_eq!(t1.base_names(), ["x"]);
        assert!(t1.anchor(0, 0).is_one());
    }

    #[test]
    fn lie_algebra_roundtrip_and_rejection() {
        let c = so3_constants();
        assert_eq!(lie_algebra(&c).unwrap().structure_constants().unwrap(), c);
        let mut bad = c.clone();
        bad[0][0][1] = 0.5;
        assert!(matches!(lie_algebra(&bad), Err(AlgebroidError::NotAntisymmetric { .. })));
        assert!(lie_algebra(&vec![vec![vec![0.0; 2]; 2]; 2]).is_ok());
    }

    #[test]
    fn so3_passes_and_perturbation_fails() {
        let r = check_axioms(&so3(), DEFAULT_AXIOM_SAMPLES).unwrap();
        assert!(r.passes(1e-12));
        let mut c = so3_constants();
        c[2][0][1] = 1.1;
        let r = check_axioms(&lie_algebra_unchecked(&c), DEFAULT_AXIOM_SAMPLES).unwrap();
        assert!(r.jacobi_max_violation > 0.01, "{r:?}");
    }

    /// The action algebroid of `so(3)` on `R^3`: `rho_a = x × e_a`, i.e.
    /// `rho^A_a = eps_{BaA} x^B`, bracket `eps`. Exercises the
    /// base-derivative terms of both identities.
    fn rotation_action() -> AlgebroidSpec {
        let base: Vec<String> = (1..=3).map(|i| format!("x{i}")).collect();
        let eps = |a: usize, b: usize, c: usize| -> f64 {
            match (a, b, c) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
                _ => 0.0,
            }
        };
        let anchor = (0..3)
            .map(|big_a| {
                (0..3)
                    .map(|a| Expr::sum((0..3).map(|b| eps(b, a, big_a) * Expr::var(&base[b]))))
                    .collect()
            })
            .collect();
        let structure = (0..3)
            .map(|c| (0..3).map(|a| (0..3).map(|b| Expr::constant(eps(a, b, c))).collect()).collect())
            .collect();
        AlgebroidSpec::from_parts(base, anchor, structure).unwrap()
    }

    #[test]
    fn action_algebroid_checks_base_terms() {
        let spec = rotation_action();
        let r = check_axioms(&spec, 20).unwrap();
        assert!(r.passes(1e-12), "{r:?}");
        // Flipping the bracket sign breaks anchor compatibility.
        let flipped: Vec<Vec<Vec<Expr>>> = spec
            .structure
            .iter()
            .map(|s| s.iter().map(|row| row.iter().map(|e| -e).collect()).collect())
            .collect();
        let bad = AlgebroidSpec::from_parts(spec.base.clone(), spec.anchor.clone(), flipped).unwrap();
        assert!(check_axioms(&bad, 20).unwrap().anchor_compat_max_violation > 0.1);
    }

    #[test]
    fn from_parts_validates() {
        let err = AlgebroidSpec::from_parts(vec!["x".into()], vec![vec![parse("y").unwrap()]], vec![vec![vec![Expr::zero()]]]);
        assert_eq!(err.unwrap_err(), AlgebroidError::UnknownVariable("y".into()));
        assert!(AlgebroidSpec::from_parts(vec!["x".into()], vec![], vec![]).is_err());
    }
}
