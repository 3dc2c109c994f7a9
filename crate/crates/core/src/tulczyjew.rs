//! First-order mechanics on `T*M` via the Tulczyjew maps, in standard
//! coordinates `(x, p)` on `T*M` and `(x, p, xdot, pdot)` on `TT*M`.
//!
//! Lagrangian dynamics is kept implicit: residuals `p - dL/dxdot` and
//! `pdot - dL/dx` over `TT*M`. An explicit vector field exists only when the
//! Legendre map is regular, and is then taken from the first-order
//! Euler–Lagrange machinery in [`crate::higher`].

use std::collections::HashMap;

use thiserror::Error;

use crate::algebroid::indexed_name;
use crate::expr::{Chart, ChartError, CompiledExpr, EvalError, Expr, JetVar, Prolongation};
use crate::higher::{el_equations, simulate, Constraint, ElSystem, HigherError, LagrangianSpec, ENERGY};
use crate::numerics::{dense_solve, rk4, ConservedLog, Matrix, NumericsError, OdeProblem, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TulczyjewError {
    #[error("expected {expected} components, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Higher(#[from] HigherError),
    #[error("Legendre map inversion did not converge at x = {x:?}, p = {p:?}")]
    LegendreInversion { x: Vec<f64>, p: Vec<f64> },
}

fn check_len(v: &[f64], m: usize) -> Result<(), TulczyjewError> {
    if v.len() == m {
        Ok(())
    } else {
        Err(TulczyjewError::Dimension { expected: m, got: v.len() })
    }
}

/// A point `(x, p)` of `T*M`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Result<PhasePoint, TulczyjewError> {
        check_len(&p, x.len())?;
        Ok(PhasePoint { x, p })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `(x, p)` concatenated.
    pub fn to_vec(&self) -> Vec<f64> {
        [self.x.as_slice(), &self.p].concat()
    }
}

/// A point `(x, p, xdot, pdot)` of `TT*M`.
#[derive(Clone, Debug, PartialEq)]
pub struct DoublePoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub xdot: Vec<f64>,
    pub pdot: Vec<f64>,
}

impl DoublePoint {
    pub fn new(x: Vec<f64>, p: Vec<f64>, xdot: Vec<f64>, pdot: Vec<f64>) -> Result<DoublePoint, TulczyjewError> {
        let m = x.len();
        check_len(&p, m)?;
        check_len(&xdot, m)?;
        check_len(&pdot, m)?;
        Ok(DoublePoint { x, p, xdot, pdot })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `(x, p, xdot, pdot)` concatenated.
    pub fn to_vec(&self) -> Vec<f64> {
        [self.x.as_slice(), &self.p, &self.xdot, &self.pdot].concat()
    }
}

/// A point `(x, xdot, pdot, p)` of `T*TM`: base `(x, xdot)`, fibre
/// `(pdot, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPoint {
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
    pub pdot: Vec<f64>,
    pub p: Vec<f64>,
}

impl DualPoint {
    pub fn to_vec(&self) -> Vec<f64> {
        [self.x.as_slice(), &self.xdot, &self.pdot, &self.p].concat()
    }
}

/// `alpha: TT*M -> T*TM`, `(x, p, xdot, pdot) -> (x, xdot, pdot, p)`.
pub fn alpha(d: &DoublePoint) -> DualPoint {
    DualPoint {
        x: d.x.clone(),
        xdot: d.xdot.clone(),
        pdot: d.pdot.clone(),
        p: d.p.clone(),
    }
}

pub fn alpha_inverse(d: &DualPoint) -> DoublePoint {
    DoublePoint {
        x: d.x.clone(),
        p: d.p.clone(),
        xdot: d.xdot.clone(),
        pdot: d.pdot.clone(),
    }
}

/// Matrix of `alpha` acting on `(x, p, xdot, pdot)` stacked as a `4m` vector.
pub fn alpha_matrix(m: usize) -> Matrix {
    // output block -> input block
    let source = [0, 2, 3, 1];
    let mut a = Matrix::zeros(4 * m, 4 * m);
    for (out, &inp) in source.iter().enumerate() {
        for i in 0..m {
            a[(out * m + i, inp * m + i)] = 1.0;
        }
    }
    a
}

/// Coordinate names on `TT*M`: `x`, `xdot`, `p`, `pdot` (suffixed `1..m`
/// when `m > 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseNames {
    pub x: Vec<String>,
    pub xdot: Vec<String>,
    pub p: Vec<String>,
    pub pdot: Vec<String>,
}

impl PhaseNames {
    pub fn new(m: usize) -> PhaseNames {
        let family = |stem: &str| (0..m).map(|i| indexed_name(stem, i, m)).collect();
        PhaseNames {
            x: family("x"),
            xdot: family("xdot"),
            p: family("p"),
            pdot: family("pdot"),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    fn check(&self, e: &Expr, allowed: &[&[String]]) -> Result<(), TulczyjewError> {
        match e.free_vars().into_iter().find(|v| !allowed.iter().any(|set| set.contains(v))) {
            Some(v) => Err(ChartError::UnknownVariable(v).into()),
            None => Ok(()),
        }
    }

    fn chart(&self) -> Result<Chart, ChartError> {
        let mut vars = Vec::with_capacity(4 * self.dim());
        for (i, (x, v)) in self.x.iter().zip(&self.xdot).enumerate() {
            vars.push(JetVar::new(x.clone(), "x", i, 0, 0));
            vars.push(JetVar::new(v.clone(), "x", i, 1, 1));
        }
        for (i, (p, f)) in self.p.iter().zip(&self.pdot).enumerate() {
            vars.push(JetVar::new(p.clone(), "p", i, 0, 0));
            vars.push(JetVar::new(f.clone(), "p", i, 1, 1));
        }
        Chart::new(vars, Prolongation::QJet)
    }
}

/// Implicit Lagrangian dynamics `D` in `TT*M` with its Legendre map.
#[derive(Clone, Debug)]
pub struct LagrangianDynamics {
    pub names: PhaseNames,
    pub lagrangian: Expr,
    /// Residuals `p - dL/dxdot` then `pdot - dL/dx`, over the chart
    /// `(x1, xdot1, .., p1, pdot1, ..)`.
    pub system: ElSystem,
    /// `dL/dxdot`, the fibre part of the Legendre map.
    pub legendre: Vec<Expr>,
    /// First-order Euler–Lagrange system in classical jets, present when
    /// the Legendre map is regular; its state is `(x, p)`.
    pub explicit: Option<ElSystem>,
}

pub fn lagrangian_dynamics(lagrangian: &Expr, m: usize) -> Result<LagrangianDynamics, TulczyjewError> {
    let names = PhaseNames::new(m);
    names.check(lagrangian, &[&names.x, &names.xdot])?;
    let legendre: Vec<Expr> = names.xdot.iter().map(|v| lagrangian.diff(v)).collect();
    let mut residuals = Vec::with_capacity(2 * m);
    for i in 0..m {
        residuals.push(Expr::var(&names.p[i]) - &legendre[i]);
    }
    for i in 0..m {
        residuals.push(Expr::var(&names.pdot[i]) - lagrangian.diff(&names.x[i]));
    }
    let constraints = names
        .x
        .iter()
        .zip(&names.xdot)
        .chain(names.p.iter().zip(&names.pdot))
        .map(|(v, r)| Constraint {
            variable: v.clone(),
            rate: Expr::var(r),
        })
        .collect();
    let system = ElSystem {
        label: "tulczyjew".to_string(),
        chart: names.chart()?,
        residuals,
        constraints,
        momenta: None,
        explicit: None,
        regular: false,
    };

    let mut to_jet = HashMap::new();
    for i in 0..m {
        let q = |order| if m == 1 { format!("q_{order}") } else { format!("q{}_{order}", i + 1) };
        to_jet.insert(names.x[i].clone(), Expr::var(&q(0)));
        to_jet.insert(names.xdot[i].clone(), Expr::var(&q(1)));
    }
    let explicit = match el_equations(&LagrangianSpec::classical(m, 1, lagrangian.substitute(&to_jet))?) {
        Ok(sys) => Some(sys),
        Err(HigherError::SingularLegendre { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let regular = explicit.is_some();
    Ok(LagrangianDynamics {
        names,
        lagrangian: lagrangian.clone(),
        system: ElSystem { regular, ..system },
        legendre,
        explicit,
    })
}

impl LagrangianDynamics {
    pub fn dim(&self) -> usize {
        self.names.dim()
    }

    /// `D` residuals at a point of `TT*M`.
    pub fn residuals(&self, d: &DoublePoint) -> Result<Vec<f64>, TulczyjewError> {
        let m = self.dim();
        check_len(&d.x, m)?;
        let mut bind: HashMap<String, f64> = HashMap::new();
        for i in 0..m {
            bind.insert(self.names.x[i].clone(), d.x[i]);
            bind.insert(self.names.xdot[i].clone(), d.xdot[i]);
            bind.insert(self.names.p[i].clone(), d.p[i]);
            bind.insert(self.names.pdot[i].clone(), d.pdot[i]);
        }
        self.system.residuals.iter().map(|r| r.eval(&bind).map_err(Into::into)).collect()
    }

    /// `lambda_L(x, xdot) = (x, dL/dxdot)`.
    pub fn legendre_map(&self, x: &[f64], xdot: &[f64]) -> Result<PhasePoint, TulczyjewError> {
        let m = self.dim();
        check_len(x, m)?;
        check_len(xdot, m)?;
        let bind: HashMap<String, f64> = self
            .names
            .x
            .iter()
            .cloned()
            .zip(x.iter().copied())
            .chain(self.names.xdot.iter().cloned().zip(xdot.iter().copied()))
            .collect();
        let p = self.legendre.iter().map(|e| e.eval(&bind)).collect::<Result<_, _>>()?;
        Ok(PhasePoint { x: x.to_vec(), p })
    }

    /// Integrates the explicit form (RK4) from `(x, p)`; states are `(x, p)`.
    pub fn flow(&self, initial: &PhasePoint, t_final: f64, dt: f64) -> Result<Trajectory, TulczyjewError> {
        let sys = self.explicit.as_ref().ok_or(HigherError::SingularLegendre {
            condition: f64::INFINITY,
            limit: crate::higher::REGULARITY_LIMIT,
        })?;
        check_len(&initial.x, self.dim())?;
        let mut tr = simulate(sys, &initial.to_vec(), t_final, dt)?;
        tr.state_names = self.names.x.iter().chain(&self.names.p).cloned().collect();
        Ok(tr)
    }
}

/// Hamiltonian vector field `xdot = dH/dp`, `pdot = -dH/dx`.
#[derive(Clone, Debug)]
pub struct HamiltonianDynamics {
    pub names: PhaseNames,
    pub hamiltonian: Expr,
    /// `dH/dp` then `-dH/dx`.
    pub field: Vec<Expr>,
    compiled: Vec<CompiledExpr>,
    energy: CompiledExpr,
}

pub fn hamiltonian_dynamics(hamiltonian: &Expr, m: usize) -> Result<HamiltonianDynamics, TulczyjewError> {
    let names = PhaseNames::new(m);
    names.check(hamiltonian, &[&names.x, &names.p])?;
    let mut field: Vec<Expr> = names.p.iter().map(|p| hamiltonian.diff(p)).collect();
    field.extend(names.x.iter().map(|x| -hamiltonian.diff(x)));
    let slots: Vec<String> = names.x.iter().chain(&names.p).cloned().collect();
    let compiled = field.iter().map(|e| CompiledExpr::new(e, &slots)).collect::<Result<_, _>>()?;
    let energy = CompiledExpr::new(hamiltonian, &slots)?;
    Ok(HamiltonianDynamics {
        names,
        hamiltonian: hamiltonian.clone(),
        field,
        compiled,
        energy,
    })
}

impl HamiltonianDynamics {
    pub fn dim(&self) -> usize {
        self.names.dim()
    }

    /// Vector field at `state = (x, p)`.
    pub fn rhs(&self, state: &[f64], out: &mut [f64]) -> Result<(), TulczyjewError> {
        for (o, e) in out.iter_mut().zip(&self.compiled) {
            *o = e.eval(state)?;
        }
        Ok(())
    }

    pub fn energy(&self, state: &[f64]) -> Result<f64, TulczyjewError> {
        Ok(self.energy.eval(state)?)
    }

    /// RK4 from `(x, p)`, logging `H` as [`ENERGY`].
    pub fn flow(&self, initial: &PhasePoint, t_final: f64, dt: f64) -> Result<Trajectory, TulczyjewError> {
        check_len(&initial.x, self.dim())?;
        integrate(
            |x, dx| self.rhs(x, dx),
            |x| self.energy(x),
            initial,
            t_final,
            dt,
            &self.names,
        )
    }
}

fn integrate<F, E>(
    rhs: F,
    energy: E,
    initial: &PhasePoint,
    t_final: f64,
    dt: f64,
    names: &PhaseNames,
) -> Result<Trajectory, TulczyjewError>
where
    F: Fn(&[f64], &mut [f64]) -> Result<(), TulczyjewError>,
    E: Fn(&[f64]) -> Result<f64, TulczyjewError>,
{
    let mut log = Vec::new();
    let problem = OdeProblem {
        rhs: |_t: f64, x: &[f64], dx: &mut [f64]| rhs(x, dx),
        initial: initial.to_vec(),
        t0: 0.0,
        t_final,
        dt,
    };
    let mut tr = rk4(problem, |_, _, x: &[f64]| {
        log.push(energy(x)?);
        Ok::<(), TulczyjewError>(())
    })?;
    tr.state_names = names.x.iter().chain(&names.p).cloned().collect();
    tr.conserved = vec![ConservedLog {
        name: ENERGY.to_string(),
        values: log,
    }];
    Ok(tr)
}

/// Step of the finite-difference Hamiltonian vector field.
pub const FD_STEP: f64 = 1e-3;

/// Pointwise numerical Legendre transform `H(x, p) = p.v - L(x, v)` with
/// `p = dL/dxdot (x, v)` solved by Newton's method. The vector field is
/// taken by fourth-order central differences of `H`, so it shares nothing
/// with the symbolic Euler–Lagrange derivation.
#[derive(Clone, Debug)]
pub struct LegendreTransform {
    names: PhaseNames,
    lagrangian: CompiledExpr,
    momentum: Vec<CompiledExpr>,
    hessian: Vec<Vec<CompiledExpr>>,
}

impl LegendreTransform {
    pub fn new(lagrangian: &Expr, m: usize) -> Result<LegendreTransform, TulczyjewError> {
        let names = PhaseNames::new(m);
        names.check(lagrangian, &[&names.x, &names.xdot])?;
        let slots: Vec<String> = names.x.iter().chain(&names.xdot).cloned().collect();
        let momentum: Vec<Expr> = names.xdot.iter().map(|v| lagrangian.diff(v)).collect();
        let hessian = momentum
            .iter()
            .map(|p| names.xdot.iter().map(|v| CompiledExpr::new(&p.diff(v), &slots)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        Ok(LegendreTransform {
            lagrangian: CompiledExpr::new(lagrangian, &slots)?,
            momentum: momentum.iter().map(|e| CompiledExpr::new(e, &slots)).collect::<Result<_, _>>()?,
            hessian,
            names,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.dim()
    }

    /// Velocity `v` with `dL/dxdot (x, v) = p`.
    pub fn velocity(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>, TulczyjewError> {
        let m = self.dim();
        let mut slots: Vec<f64> = [x, p].concat();
        let scale = p.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for _ in 0..60 {
            let g: Vec<f64> = (0..m)
                .map(|i| Ok(self.momentum[i].eval(&slots)? - p[i]))
                .collect::<Result<_, TulczyjewError>>()?;
            if g.iter().all(|v| v.abs() <= 1e-15 * scale) {
                return Ok(slots[m..].to_vec());
            }
            let mut h = Matrix::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    h[(i, j)] = self.hessian[i][j].eval(&slots)?;
                }
            }
            let step = dense_solve(&h, &g)?;
            for i in 0..m {
                slots[m + i] -= step[i];
            }
            if step.iter().all(|s| s.abs() <= 1e-16 * scale) {
                return Ok(slots[m..].to_vec());
            }
        }
        Err(TulczyjewError::LegendreInversion { x: x.to_vec(), p: p.to_vec() })
    }

    /// `H(x, p)` at `state = (x, p)`.
    pub fn hamiltonian(&self, state: &[f64]) -> Result<f64, TulczyjewError> {
        let m = self.dim();
        check_len(state, 2 * m)?;
        let (x, p) = state.split_at(m);
        let v = self.velocity(x, p)?;
        let l = self.lagrangian.eval(&[x, &v].concat())?;
        Ok(p.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() - l)
    }

    /// `(dH/dp, -dH/dx)` by central differences of [`Self::hamiltonian`].
    pub fn rhs(&self, state: &[f64], out: &mut [f64]) -> Result<(), TulczyjewError> {
        let m = self.dim();
        let offsets = [-2.0, -1.0, 1.0, 2.0];
        let weights = [1.0 / 12.0, -2.0 / 3.0, 2.0 / 3.0, -1.0 / 12.0];
        let mut probe = state.to_vec();
        for k in 0..2 * m {
            let mut d = 0.0;
            for (o, w) in offsets.iter().zip(&weights) {
                probe[k] = state[k] + o * FD_STEP;
                d += w * self.hamiltonian(&probe)?;
            }
            probe[k] = state[k];
            d /= FD_STEP;
            // k < m: dH/dx -> pdot; k >= m: dH/dp -> xdot
            if k < m {
                out[m + k] = -d;
            } else {
                out[k - m] = d;
            }
        }
        Ok(())
    }

    pub fn flow(&self, initial: &PhasePoint, t_final: f64, dt: f64) -> Result<Trajectory, TulczyjewError> {
        check_len(&initial.x, self.dim())?;
        integrate(
            |x, dx| self.rhs(x, dx),
            |x| self.hamiltonian(x),
            initial,
            t_final,
            dt,
            &self.names,
        )
    }
}

/// Largest state difference between the Lagrangian flow and the flow of the
/// numerically Legendre-transformed Hamiltonian from the same `(x, p)`.
pub fn legendre_equivalence(
    lagrangian: &Expr,
    m: usize,
    initial: &PhasePoint,
    t_final: f64,
    dt: f64,
) -> Result<f64, TulczyjewError> {
    let lag = lagrangian_dynamics(lagrangian, m)?.flow(initial, t_final, dt)?;
    let ham = LegendreTransform::new(lagrangian, m)?.flow(initial, t_final, dt)?;
    let mut worst: f64 = 0.0;
    for (a, b) in lag.states.iter().zip(&ham.states) {
        for (u, v) in a.iter().zip(b) {
            worst = worst.max((u - v).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::numerics::{determinant, ActionDiscretization};
    use crate::sampling::{seeded_rng, uniform_point};

    #[test]
    fn alpha_shuffles_coordinates() {
        let d = DoublePoint::new(vec![1.0], vec![2.0], vec![3.0], vec![4.0]).unwrap();
        assert_eq!(alpha(&d).to_vec(), [1.0, 3.0, 4.0, 2.0]);
        let z = DoublePoint::new(vec![0.0; 2], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert!(alpha(&z).to_vec().iter().all(|v| *v == 0.0));
        let mut rng = seeded_rng(3);
        for _ in 0..20 {
            let v = uniform_point(&mut rng, 12, -5.0, 5.0);
            let d = DoublePoint::new(v[0..3].to_vec(), v[3..6].to_vec(), v[6..9].to_vec(), v[9..12].to_vec()).unwrap();
            assert_eq!(alpha_inverse(&alpha(&d)), d);
            assert_eq!(alpha_matrix(3).mul_vec(&d.to_vec()), alpha(&d).to_vec());
        }
        for m in 1..=4 {
            assert_eq!(determinant(&alpha_matrix(m)).unwrap().abs(), 1.0);
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            DoublePoint::new(vec![1.0], vec![2.0, 3.0], vec![0.0], vec![0.0]),
            Err(TulczyjewError::Dimension { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn free_particle_and_oscillator() {
        let free = lagrangian_dynamics(&parse("(xdot1^2 + xdot2^2)/2").unwrap(), 2).unwrap();
        assert_eq!(free.system.residuals[0].to_string(), "p1 - xdot1");
        assert_eq!(free.system.residuals[2].to_string(), "pdot1");
        let osc = lagrangian_dynamics(&parse("xdot^2/2 - x^2/2").unwrap(), 1).unwrap();
        assert!(osc.system.regular);
        for n in 0..100 {
            let t = n as f64 * 0.1;
            let d = DoublePoint::new(vec![t.cos()], vec![-t.sin()], vec![-t.sin()], vec![-t.cos()]).unwrap();
            assert!(osc.residuals(&d).unwrap().iter().all(|r| r.abs() < 1e-9));
        }
        let lm = osc.legendre_map(&[0.5], &[2.0]).unwrap();
        assert_eq!(lm.p, [2.0]);
    }

    #[test]
    fn rejects_foreign_variables() {
        assert!(lagrangian_dynamics(&parse("p^2").unwrap(), 1).is_err());
        assert!(hamiltonian_dynamics(&parse("xdot^2").unwrap(), 1).is_err());
    }

    #[test]
    fn hamilton_equations() {
        let h = hamiltonian_dynamics(&parse("p^2/2 + x^2/2").unwrap(), 1).unwrap();
        let mut out = [0.0; 2];
        h.rhs(&[0.3, 0.7], &mut out).unwrap();
        assert_eq!(out, [0.7, -0.3]);
        let tr = h.flow(&PhasePoint::new(vec![1.0], vec![0.0]).unwrap(), 10.0, 1e-3).unwrap();
        assert!(tr.conserved(ENERGY).unwrap().drift() < 1e-8);
        let free = hamiltonian_dynamics(&parse("(p1^2 + p2^2)/2").unwrap(), 2).unwrap();
        free.rhs(&[0.0, 0.0, 1.0, -2.0], &mut [0.0; 4]).unwrap();
    }

    #[test]
    fn stencil_matches_generator() {
        let w = crate::numerics::fornberg_weights(0.0, &[-2.0, -1.0, 1.0, 2.0], 1);
        let expected = [1.0 / 12.0, -2.0 / 3.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn numeric_hamiltonian_matches_lagrangian_flow() {
        // Hyperregular but not quadratic in the velocity.
        let l = parse("(exp(xdot1) + exp(-xdot1))/2 + xdot2^2/2 + x1*xdot2 - x1^2/2 - x2^4/4").unwrap();
        let start = PhasePoint::new(vec![0.3, -0.5], vec![0.4, 0.2]).unwrap();
        let gap = legendre_equivalence(&l, 2, &start, 1.0, 1e-4).unwrap();
        assert!(gap < 1e-6, "{gap}");
    }

    #[test]
    fn flow_has_vanishing_action_gradient() {
        let l = parse("xdot^2/2 - x^2/2 - x^4/4").unwrap();
        let dyn_ = lagrangian_dynamics(&l, 1).unwrap();
        let dt = 1e-3;
        let tr = dyn_.flow(&PhasePoint::new(vec![0.8], vec![0.1]).unwrap(), 2.0, dt).unwrap();
        let q = parse("q_1^2/2 - q_0^2/2 - q_0^4/4").unwrap();
        let a = ActionDiscretization::new(&q, &[vec!["q_0".into(), "q_1".into()]], dt).unwrap();
        let samples: Vec<Vec<f64>> = tr.states.iter().map(|s| vec![s[0]]).collect();
        let g = a.gradient(&samples).unwrap();
        let worst = a.interior(samples.len()).map(|n| (g[n][0] / dt).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-5, "{worst}");
    }
}
