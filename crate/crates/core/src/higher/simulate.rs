use super::{ElSystem, HigherError};
use crate::numerics::{rk4, ConservedLog, OdeProblem, Trajectory};

/// Conserved-quantity log names.
pub const ENERGY: &str = "energy";
pub const MOMENTUM_NORM_SQ: &str = "momentum_norm_sq";

/// Regularity of the Legendre map is re-checked this often (in steps).
pub const REGULARITY_RECHECK_STEPS: usize = 100;

/// Integrates the explicit form of `sys` with RK4 from `initial` (an
/// explicit-form state) over `[0, t_final]`.
///
/// Logs the energy `sum_i p_i q^(i) - L` and `sum_a (pi^k_a)^2` at every
/// step.
pub fn simulate(sys: &ElSystem, initial: &[f64], t_final: f64, dt: f64) -> Result<Trajectory, HigherError> {
    let ex = sys.explicit.as_ref().ok_or_else(|| HigherError::SingularLegendre {
        condition: f64::INFINITY,
        limit: super::REGULARITY_LIMIT,
    })?;
    if initial.len() != ex.dim() {
        return Err(HigherError::Invalid(format!(
            "initial state has {} entries, expected {} ({})",
            initial.len(),
            ex.dim(),
            ex.state_names.join(", ")
        )));
    }
    let n = ex.rank();
    let mut guess = vec![0.0; n];
    let conf = ex.configuration(initial, &mut guess)?;
    ex.check_regular(&conf)?;

    let rhs_guess = std::cell::RefCell::new(guess.clone());
    let mut hook_guess = guess;
    let mut energy = Vec::new();
    let mut norm = Vec::new();
    let problem = OdeProblem {
        rhs: |_t: f64, x: &[f64], dx: &mut [f64]| ex.rhs(x, dx, &mut rhs_guess.borrow_mut()),
        initial: initial.to_vec(),
        t0: 0.0,
        t_final,
        dt,
    };
    let mut traj = rk4(problem, |step, _t, x: &[f64]| {
        if step > 0 && step % REGULARITY_RECHECK_STEPS == 0 {
            let conf = ex.configuration(x, &mut hook_guess)?;
            ex.check_regular(&conf)?;
        }
        let (e, p) = ex.invariants(x, &mut hook_guess)?;
        energy.push(e);
        norm.push(p);
        Ok::<(), HigherError>(())
    })?;
    traj.state_names = ex.state_names.clone();
    traj.conserved = vec![
        ConservedLog {
            name: ENERGY.to_string(),
            values: energy,
        },
        ConservedLog {
            name: MOMENTUM_NORM_SQ.to_string(),
            values: norm,
        },
    ];
    Ok(traj)
}
