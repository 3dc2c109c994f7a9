use serde::Serialize;

use super::NumericsError;

/// Initial-value problem `x' = f(t, x)` on `[t0, t_final]` with fixed step.
pub struct OdeProblem<F> {
    pub rhs: F,
    pub initial: Vec<f64>,
    pub t0: f64,
    pub t_final: f64,
    pub dt: f64,
}

/// Values of one monitored quantity at every stored time.
#[derive(Clone, Debug, Serialize)]
pub struct ConservedLog {
    pub name: String,
    pub values: Vec<f64>,
}

impl ConservedLog {
    /// Largest deviation from the initial value.
    pub fn drift(&self) -> f64 {
        let Some(&v0) = self.values.first() else { return 0.0 };
        self.values.iter().map(|v| (v - v0).abs()).fold(0.0, f64::max)
    }
}

/// Sampled solution of an ODE.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub state_names: Vec<String>,
    pub integrator: String,
    pub dt: f64,
    pub conserved: Vec<ConservedLog>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    pub fn conserved(&self, name: &str) -> Option<&ConservedLog> {
        self.conserved.iter().find(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.state_names.iter().position(|n| n == name)?;
        Some(self.states.iter().map(|s| s[k]).collect())
    }
}

/// Classical fourth-order Runge–Kutta with a fixed step.
///
/// `hook` runs after every accepted step (and once for the initial state)
/// with the step index, time and state; an error from it aborts the run.
pub fn rk4<F, H, E>(problem: OdeProblem<F>, mut hook: H) -> Result<Trajectory, E>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    H: FnMut(usize, f64, &[f64]) -> Result<(), E>,
    E: From<NumericsError>,
{
    let OdeProblem {
        mut rhs,
        initial,
        t0,
        t_final,
        dt,
    } = problem;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(NumericsError::InvalidStep(format!("dt must be positive, got {dt}")).into());
    }
    if !(t_final > t0) {
        return Err(NumericsError::InvalidStep(format!("empty time span [{t0}, {t_final}]")).into());
    }
    let steps = ((t_final - t0) / dt).round().max(1.0) as usize;
    let dim = initial.len();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = initial;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    hook(0, t0, &x)?;
    times.push(t0);
    states.push(x.clone());
    for n in 0..steps {
        let t = t0 + n as f64 * dt;
        rhs(t, &x, &mut k1)?;
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        rhs(t + 0.5 * dt, &tmp, &mut k2)?;
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        rhs(t + 0.5 * dt, &tmp, &mut k3)?;
        for i in 0..dim {
            tmp[i] = x[i] + dt * k3[i];
        }
        rhs(t + dt, &tmp, &mut k4)?;
        for i in 0..dim {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = t0 + (n + 1) as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite { t: t_next }.into());
        }
        hook(n + 1, t_next, &x)?;
        times.push(t_next);
        states.push(x.clone());
    }
    Ok(Trajectory {
        times,
        states,
        state_names: (0..dim).map(|i| format!("s{i}")).collect(),
        integrator: "rk4".to_string(),
        dt,
        conserved: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::convergence_slope;

    fn run(rhs: impl FnMut(f64, &[f64], &mut [f64]) -> Result<(), NumericsError>, x0: Vec<f64>, t: f64, dt: f64) -> Trajectory {
        rk4(
            OdeProblem {
                rhs,
                initial: x0,
                t0: 0.0,
                t_final: t,
                dt,
            },
            |_, _, _| Ok::<(), NumericsError>(()),
        )
        .unwrap()
    }

    #[test]
    fn constant_solution_is_exact() {
        let tr = run(|_, _, d| {
            d[0] = 0.0;
            Ok(())
        }, vec![1.0], 1.0, 0.1);
        assert!(tr.states.iter().all(|s| s[0] == 1.0));
    }

    #[test]
    fn exponential_growth() {
        let tr = run(|_, x, d| {
            d[0] = x[0];
            Ok(())
        }, vec![1.0], 1.0, 1e-3);
        assert!((tr.last().unwrap()[0] - std::f64::consts::E).abs() < 1e-8);
        assert!((tr.times.last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fourth_order_convergence() {
        let dts = [0.1, 0.05, 0.025];
        let errs: Vec<f64> = dts
            .iter()
            .map(|&dt| {
                let tr = run(|_, x, d| {
                    d[0] = x[0];
                    Ok(())
                }, vec![1.0], 1.0, dt);
                (tr.last().unwrap()[0] - std::f64::consts::E).abs()
            })
            .collect();
        assert!(convergence_slope(&dts, &errs) >= 3.9);
    }

    #[test]
    fn oscillator_energy_drift() {
        let tr = run(|_, x, d| {
            d[0] = x[1];
            d[1] = -x[0];
            Ok(())
        }, vec![1.0, 0.0], 10.0, 1e-3);
        let drift = tr
            .states
            .iter()
            .map(|s| (0.5 * (s[0] * s[0] + s[1] * s[1]) - 0.5).abs())
            .fold(0.0, f64::max);
        assert!(drift < 1e-8, "{drift}");
    }

    #[test]
    fn non_finite_and_bad_step() {
        let err = rk4(
            OdeProblem {
                rhs: |_, x: &[f64], d: &mut [f64]| {
                    d[0] = x[0] * x[0];
                    Ok::<(), NumericsError>(())
                },
                initial: vec![1.0],
                t0: 0.0,
                t_final: 5.0,
                dt: 0.01,
            },
            |_, _, _| Ok(()),
        )
        .unwrap_err();
        assert!(matches!(err, NumericsError::NonFinite { .. }));
        let err = rk4(
            OdeProblem {
                rhs: |_, _: &[f64], _: &mut [f64]| Ok::<(), NumericsError>(()),
                initial: vec![1.0],
                t0: 0.0,
                t_final: 1.0,
                dt: 0.0,
            },
            |_, _, _| Ok(()),
        )
        .unwrap_err();
        assert!(matches!(err, NumericsError::InvalidStep(_)));
    }
}
