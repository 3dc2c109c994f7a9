use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::{Format, Mechanics, Problem, ProblemKind, Surface, DEFAULT_AXIOM_TOL};
use super::report::{DriftRow, RunReport};
use super::Settings;
use crate::algebroid::{check_axioms_seeded, DEFAULT_AXIOM_SAMPLES};
use crate::expr::check_homogeneity;
use crate::higher::{
    base_equation, el_equations, fit_base_coefficient, g2_consistency, g2_pipeline, reduce_check_seeded,
    AdStarConvention, SmoothCurve, MOMENTUM_NORM_SQ,
};
use crate::numerics::{format_float, Trajectory};
use crate::strings::{
    consistency_check, el_residual, minimal_surface_residual, solve_plateau, write_log_csv, BivectorLagrangian,
    InitialGuess, PlateauOptions, ResidualField, StringsError, SurfaceGrid,
};

/// Tolerance on `reduce_check` and the g2 cross-check.
pub const REDUCTION_TOL: f64 = 1e-9;
/// Tolerance on the explicit vector field against the implicit residuals.
pub const EXPLICIT_TOL: f64 = 1e-8;
/// Step of the discrete-action fit of a base coefficient, and how close the
/// fit has to land.
pub const ACTION_FIT_DT: f64 = 2.5e-3;
pub const ACTION_FIT_TOL: f64 = 1e-3;

#[derive(Debug)]
pub(crate) enum CommandError {
    Usage(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        CommandError::Io(e)
    }
}

impl From<StringsError> for CommandError {
    fn from(e: StringsError) -> Self {
        match e {
            StringsError::Io(e) => CommandError::Io(e),
            other => CommandError::Io(std::io::Error::other(other.to_string())),
        }
    }
}

pub(crate) struct CommandOutput {
    pub report: RunReport,
    pub stdout: String,
}

/// Files collected during a command and written together at the end.
struct Outputs<'a> {
    settings: &'a Settings,
    files: Vec<(String, Vec<u8>)>,
}

impl<'a> Outputs<'a> {
    fn new(settings: &'a Settings) -> Self {
        Outputs {
            settings,
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn finish(mut self, mut report: RunReport) -> Result<CommandOutput, CommandError> {
        report.settle();
        if let Some(dir) = &self.settings.out_dir {
            report.files = self.files.iter().map(|(n, _)| n.clone()).collect();
            report.files.push("report.json".into());
            let json = report.to_json() + "\n";
            self.files.push(("report.json".into(), json.into_bytes()));
            write_all(dir, &self.files)?;
        }
        let stdout = if self.settings.latex {
            report.latex()
        } else {
            report.to_json() + "\n"
        };
        Ok(CommandOutput { report, stdout })
    }
}

fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

fn wrong_kind(command: &str, kind: ProblemKind, allowed: &str) -> CommandError {
    CommandError::Usage(format!("{command} does not apply to kind `{}` (expected {allowed})", kind.name()))
}

pub(crate) fn check(p: &Problem, s: &Settings) -> Result<CommandOutput, CommandError> {
    let mut r = RunReport::new("check", p.kind.name());
    if p.algebroid.is_none() && p.homogeneity.is_none() {
        return Err(CommandError::Usage(
            "nothing to check: give an algebroid block or lagrangian.homogeneity".into(),
        ));
    }
    if p.homogeneity.is_some() && p.kind == ProblemKind::G2 {
        return Err(CommandError::Usage("homogeneity checks are not available for g2 problems".into()));
    }
    let tol = p.tol.unwrap_or(DEFAULT_AXIOM_TOL);
    if let Some(alg) = &p.algebroid {
        match check_axioms_seeded(alg, DEFAULT_AXIOM_SAMPLES, s.seed) {
            Ok(a) => {
                r.deviation("antisymmetry", a.antisymmetry_max_violation, tol);
                r.deviation("jacobi", a.jacobi_max_violation, tol);
                r.deviation("anchor_compatibility", a.anchor_compat_max_violation, tol);
            }
            Err(e) => r.fail(format!("evaluating structure functions: {e}")),
        }
    }
    if let Some(degree) = p.homogeneity {
        let name = format!("homogeneous_degree_{degree}");
        if let Some(m) = &p.mechanics {
            r.check(name, check_homogeneity(m.spec.lagrangian(), m.spec.chart(), degree));
        } else if let Some(l) = &p.string_lagrangian {
            match l.chart() {
                Ok(chart) => {
                    r.check(name, check_homogeneity(l.expr(), &chart, degree));
                }
                Err(e) => r.fail(e.to_string()),
            }
        }
    }
    // check always prints JSON, never LaTeX.
    let settings = Settings {
        latex: false,
        ..s.clone()
    };
    Outputs::new(&settings).finish(r)
}

pub(crate) fn derive(p: &Problem, s: &Settings) -> Result<CommandOutput, CommandError> {
    let mech = match (p.kind, &p.mechanics) {
        (ProblemKind::FirstOrder | ProblemKind::Higher | ProblemKind::LieAlgebra | ProblemKind::G2, Some(m)) => m,
        _ => return Err(wrong_kind("derive", p.kind, "first_order, higher, lie_algebra or g2")),
    };
    let mut r = RunReport::new("derive", p.kind.name());
    if p.kind == ProblemKind::G2 {
        derive_g2(mech, p, s, &mut r);
    } else {
        derive_algebroid(mech, p, s, &mut r);
    }
    let mut out = Outputs::new(s);
    out.add("equations.txt", r.text().into_bytes());
    out.add("equations.tex", r.latex().into_bytes());
    out.finish(r)
}

fn derive_algebroid(mech: &Mechanics, p: &Problem, s: &Settings, r: &mut RunReport) {
    let spec = &mech.spec;
    let sys = match el_equations(spec) {
        Ok(sys) => sys,
        Err(e) => return r.fail(e.to_string()),
    };
    let view = sys.report();
    for m in &view.momenta {
        r.equation(&m.name, format!("{} = {}", m.name, m.text), format!("{} = {}", pi_latex(&m.name), m.latex));
    }
    for (a, e) in view.residuals.iter().enumerate() {
        r.equation(format!("el_{}", a + 1), &e.text, &e.latex);
    }
    r.notes.push(format!("explicit state: ({})", view.state.join(", ")));
    match sys.explicit_consistency(p.samples.min(50), s.seed) {
        Ok(d) => {
            r.deviation("explicit_form", d, EXPLICIT_TOL);
        }
        Err(e) => r.fail(e.to_string()),
    }
    if !spec.algebroid().is_tangent() {
        return;
    }
    match reduce_check_seeded(spec, p.samples, s.seed) {
        Ok(d) => {
            r.deviation("reduce_check", d, REDUCTION_TOL);
        }
        Err(e) => return r.fail(e.to_string()),
    }
    if spec.order() != 2 {
        return;
    }
    // Only Lagrangians whose equations are linear with equal coefficients
    // in every component have a base equation; others are skipped.
    let Ok(base) = base_equation(spec) else { return };
    r.equation("base", &base.text, &base.latex);
    r.measure("base_coefficient", base.coefficient);
    let classical = spec.lagrangian().substitute(&spec.graded_to_classical());
    let curve = SmoothCurve::random(s.seed, spec.base_dim(), 4);
    match fit_base_coefficient(&classical, &curve, ACTION_FIT_DT) {
        Ok(fit) => {
            r.measure("action_fit_coefficient", fit);
            r.check("base_sign_matches_action_fit", fit.signum() == base.coefficient.signum());
            r.deviation("base_coefficient_vs_action_fit", (fit - base.coefficient).abs(), ACTION_FIT_TOL);
            r.notes.push(format!(
                "base equation {}; the discrete action alone gives c = {fit:.4}",
                base.text
            ));
        }
        Err(e) => r.fail(e.to_string()),
    }
}

fn pi_latex(name: &str) -> String {
    // `pi2` or `pi2_3`.
    let rest = name.trim_start_matches("pi");
    match rest.split_once('_') {
        Some((j, b)) => format!("\\pi^{{{j}}}_{{{b}}}"),
        None => format!("\\pi^{{{rest}}}"),
    }
}

fn derive_g2(mech: &Mechanics, p: &Problem, s: &Settings, r: &mut RunReport) {
    let alg = mech.spec.algebroid();
    let sys = match g2_pipeline(&mech.lagrangian, alg, AdStarConvention::Left) {
        Ok(sys) => sys,
        Err(e) => return r.fail(e.to_string()),
    };
    for (a, e) in sys.report().residuals.iter().enumerate() {
        r.equation(format!("el_{}", a + 1), &e.text, &e.latex);
    }
    r.notes.push("(ad*_x mu)_a = C^c_{ba} x^b mu_c".into());
    match g2_consistency(&mech.lagrangian, alg, AdStarConvention::Left, p.samples, s.seed) {
        Ok(d) => {
            r.deviation("g2_vs_algebroid", d, REDUCTION_TOL);
        }
        Err(e) => r.fail(e.to_string()),
    }
}

pub(crate) fn simulate(p: &Problem, s: &Settings) -> Result<CommandOutput, CommandError> {
    let (mech, sim) = match (p.kind, &p.mechanics, &p.simulation) {
        (ProblemKind::FirstOrder | ProblemKind::Higher | ProblemKind::LieAlgebra, Some(m), Some(sim)) => (m, sim),
        (ProblemKind::FirstOrder | ProblemKind::Higher | ProblemKind::LieAlgebra, _, None) => {
            return Err(CommandError::Usage("simulate needs numeric.T, numeric.dt and numeric.initial".into()))
        }
        _ => return Err(wrong_kind("simulate", p.kind, "first_order, higher or lie_algebra")),
    };
    let mut r = RunReport::new("simulate", p.kind.name());
    let mut out = Outputs::new(s);
    let traj = el_equations(&mech.spec).and_then(|sys| crate::higher::simulate(&sys, &sim.initial, sim.t_final, sim.dt));
    match traj {
        Ok(traj) => {
            let casimir = mech.spec.base_dim() == 0;
            for log in &traj.conserved {
                let conserved = log.name != MOMENTUM_NORM_SQ || casimir;
                let tolerance = conserved.then_some(p.drift_tol);
                let drift = log.drift();
                r.drift.push(DriftRow {
                    quantity: log.name.clone(),
                    initial: log.values.first().copied().unwrap_or(f64::NAN),
                    max_abs_drift: drift,
                    tolerance,
                    passed: tolerance.is_none_or(|t| drift <= t),
                });
            }
            if casimir {
                r.notes.push(format!("{MOMENTUM_NORM_SQ} is the Casimir sum_a (pi^k_a)^2"));
            }
            r.measure("steps", (traj.times.len() - 1) as f64);
            match s.format {
                Format::Csv => out.add("trajectory.csv", trajectory_csv(&traj)?),
                Format::Json => out.add("trajectory.json", serde_json::to_vec_pretty(&traj).map_err(std::io::Error::other)?),
            }
        }
        Err(e) => r.fail(e.to_string()),
    }
    out.finish(r)
}

fn trajectory_csv(traj: &Trajectory) -> Result<Vec<u8>, CommandError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = std::iter::once("t")
        .chain(traj.state_names.iter().map(String::as_str))
        .chain(traj.conserved.iter().map(|c| c.name.as_str()))
        .collect();
    w.write_record(&header).map_err(csv_err)?;
    for (i, t) in traj.times.iter().enumerate() {
        let row = std::iter::once(*t)
            .chain(traj.states[i].iter().copied())
            .chain(traj.conserved.iter().map(|c| c.values[i]))
            .map(format_float);
        w.write_record(row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CommandError::Io(e.into_error()))
}

fn csv_err(e: csv::Error) -> CommandError {
    CommandError::Io(std::io::Error::other(e))
}

pub(crate) fn plateau(p: &Problem, s: &Settings) -> Result<CommandOutput, CommandError> {
    let Some(pp) = (p.kind == ProblemKind::Plateau).then_some(p.plateau.as_ref()).flatten() else {
        return Err(wrong_kind("plateau", p.kind, "plateau"));
    };
    let mut r = RunReport::new("plateau", p.kind.name());
    let mut out = Outputs::new(s);
    let options = PlateauOptions {
        tol: pp.tol,
        max_iter: pp.max_iter,
        initial: InitialGuess::Harmonic,
    };
    match solve_plateau(&pp.boundary, &options) {
        Ok(sol) => {
            r.measure("iterations", sol.iterations as f64);
            r.deviation("final_residual", sol.residual, pp.tol);
            if let Some(exact) = &pp.analytic {
                let err = sol.surface.interior_error(|x, y| exact.eval(&[x, y]).unwrap_or(f64::NAN));
                r.deviation("interior_error_vs_analytic", err, pp.error_tol);
            }
            match s.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    sol.surface.write_csv(&mut buf)?;
                    out.add("surface.csv", buf);
                    let mut log = Vec::new();
                    write_log_csv(&sol.log, &mut log)?;
                    out.add("convergence.csv", log);
                }
                Format::Json => {
                    out.add("surface.json", sol.surface.to_json()?.into_bytes());
                    out.add("convergence.json", serde_json::to_vec_pretty(&sol.log).map_err(std::io::Error::other)?);
                }
            }
        }
        Err(StringsError::NoConvergence { iterations, residual }) => {
            r.measure("iterations", iterations as f64);
            r.deviation("final_residual", residual, pp.tol);
            r.fail(format!("Newton iteration did not converge after {iterations} steps"));
        }
        Err(e) => r.fail(e.to_string()),
    }
    out.finish(r)
}

#[derive(Serialize)]
struct ResidualFile<'a> {
    t: Vec<f64>,
    s: Vec<f64>,
    field: &'a ResidualField,
}

pub(crate) fn residual(p: &Problem, s: &Settings) -> Result<CommandOutput, CommandError> {
    let (lag, surface) = match (p.kind, &p.string_lagrangian, &p.surface) {
        (ProblemKind::StringResidual, Some(l), Some(surf)) => (l, surf),
        _ => return Err(wrong_kind("residual", p.kind, "string_residual")),
    };
    let mut r = RunReport::new("residual", p.kind.name());
    let mut out = Outputs::new(s);
    let grid = surface.grid();
    match el_residual(lag, &grid) {
        Ok(field) => {
            let max = field.max_abs();
            match p.tol {
                Some(tol) => {
                    r.deviation("el_residual_max", max, tol);
                }
                None => r.measure("el_residual_max", max),
            }
            if let (Surface::Graph(g), true) = (surface, is_area(lag)) {
                match (minimal_surface_residual(g), consistency_check(g)) {
                    (Ok(m), Ok(c)) => {
                        r.measure("minimal_surface_residual_max", m.max_abs());
                        r.measure("consistency_deviation", c);
                    }
                    (Err(e), _) | (_, Err(e)) => r.fail(e.to_string()),
                }
            }
            match s.format {
                Format::Csv => out.add("residual.csv", residual_csv(&grid, &field)?),
                Format::Json => {
                    let file = ResidualFile {
                        t: (1..grid.nt - 1).map(|i| grid.t(i)).collect(),
                        s: (1..grid.ns - 1).map(|j| grid.s(j)).collect(),
                        field: &field,
                    };
                    out.add("residual.json", serde_json::to_vec_pretty(&file).map_err(std::io::Error::other)?);
                }
            }
        }
        Err(e) => r.fail(e.to_string()),
    }
    out.finish(r)
}

fn is_area(lag: &BivectorLagrangian) -> bool {
    BivectorLagrangian::area(lag.dim()).is_ok_and(|a| a.expr() == lag.expr())
}

fn residual_csv(grid: &SurfaceGrid, field: &ResidualField) -> Result<Vec<u8>, CommandError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string(), "s".to_string()];
    header.extend((1..=field.values.len()).map(|c| format!("r{c}")));
    w.write_record(&header).map_err(csv_err)?;
    for i in 1..grid.nt - 1 {
        for j in 1..grid.ns - 1 {
            let row = [grid.t(i), grid.s(j)]
                .into_iter()
                .chain((0..field.values.len()).map(|c| field.get(c, i, j)))
                .map(format_float);
            w.write_record(row).map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| CommandError::Io(e.into_error()))
}
