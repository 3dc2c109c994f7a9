//! Dirichlet problem for the minimal-surface equation on a rectangle:
//! damped Newton on the five-plus-four-point discretization, with a banded
//! Jacobian and a discrete-harmonic starting guess.

use serde::{Deserialize, Serialize};

use super::{GraphSurface, StringsError};
use crate::numerics::BandedMatrix;

/// Step halvings tried before a non-decreasing Newton step is accepted.
pub const MAX_HALVINGS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialGuess {
    /// Discrete Laplace interpolation of the boundary values.
    Harmonic,
    /// The interior values of the surface passed in.
    Given,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauOptions {
    /// Stop once `max |residual| < tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub initial: InitialGuess,
}

impl Default for PlateauOptions {
    fn default() -> Self {
        PlateauOptions {
            tol: 1e-10,
            max_iter: 50,
            initial: InitialGuess::Harmonic,
        }
    }
}

/// One line of the convergence log. Iteration 0 is the initial guess.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonStep {
    pub iteration: usize,
    pub residual: f64,
    /// Step length used (`1`, `1/2`, ...); `0` for the initial guess.
    pub damping: f64,
}

#[derive(Clone, Debug)]
pub struct PlateauSolution {
    pub surface: GraphSurface,
    pub initial_guess: GraphSurface,
    /// Newton steps taken.
    pub iterations: usize,
    /// Final `max |residual|`.
    pub residual: f64,
    pub log: Vec<NewtonStep>,
}

struct Layout {
    nx: usize,
    ny: usize,
    nj: usize,
    hx: f64,
    hy: f64,
}

impl Layout {
    fn new(g: &GraphSurface) -> Layout {
        Layout {
            nx: g.nx,
            ny: g.ny,
            nj: g.ny - 2,
            hx: g.hx(),
            hy: g.hy(),
        }
    }

    fn unknowns(&self) -> usize {
        (self.nx - 2) * self.nj
    }

    fn band(&self) -> usize {
        self.nj + 1
    }

    fn unknown(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.nj + (j - 1)
    }

    fn node(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    fn interior(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.nx - 1).flat_map(move |i| (1..self.ny - 1).map(move |j| (i, j)))
    }

    fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// Adds `coef * z(i, j)` to row `row`: into the matrix for unknowns,
    /// into `rhs` (moved across) for boundary values.
    fn couple(&self, a: &mut BandedMatrix, rhs: &mut [f64], z: &[f64], row: usize, (i, j): (usize, usize), coef: f64) {
        if self.is_boundary(i, j) {
            rhs[row] -= coef * z[self.node(i, j)];
        } else {
            a.add(row, self.unknown(i, j), coef);
        }
    }
}

struct Local {
    zx: f64,
    zy: f64,
    zxx: f64,
    zyy: f64,
    zxy: f64,
}

fn local(l: &Layout, z: &[f64], i: usize, j: usize) -> Local {
    let at = |a: usize, b: usize| z[l.node(a, b)];
    let (hx, hy) = (l.hx, l.hy);
    Local {
        zx: (at(i + 1, j) - at(i - 1, j)) / (2.0 * hx),
        zy: (at(i, j + 1) - at(i, j - 1)) / (2.0 * hy),
        zxx: (at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j)) / (hx * hx),
        zyy: (at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1)) / (hy * hy),
        zxy: (at(i + 1, j + 1) - at(i - 1, j + 1) - at(i + 1, j - 1) + at(i - 1, j - 1)) / (4.0 * hx * hy),
    }
}

fn residual(l: &Layout, z: &[f64]) -> Vec<f64> {
    l.interior()
        .map(|(i, j)| {
            let d = local(l, z, i, j);
            (1.0 + d.zx * d.zx) * d.zyy - 2.0 * d.zx * d.zy * d.zxy + (1.0 + d.zy * d.zy) * d.zxx
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn jacobian(l: &Layout, z: &[f64]) -> BandedMatrix {
    let (hx, hy) = (l.hx, l.hy);
    let mut a = BandedMatrix::zeros(l.unknowns(), l.band(), l.band());
    let mut sink = vec![0.0; l.unknowns()];
    for (i, j) in l.interior() {
        let row = l.unknown(i, j);
        let d = local(l, z, i, j);
        let a_x = 2.0 * d.zx * d.zyy - 2.0 * d.zy * d.zxy;
        let a_y = 2.0 * d.zy * d.zxx - 2.0 * d.zx * d.zxy;
        let a_xx = 1.0 + d.zy * d.zy;
        let a_yy = 1.0 + d.zx * d.zx;
        let a_xy = -2.0 * d.zx * d.zy;
        let mut put = |p: (usize, usize), c: f64| {
            // Boundary columns carry no unknowns; their terms are dropped.
            l.couple(&mut a, &mut sink, z, row, p, c)
        };
        put((i, j), -2.0 * a_xx / (hx * hx) - 2.0 * a_yy / (hy * hy));
        put((i + 1, j), a_x / (2.0 * hx) + a_xx / (hx * hx));
        put((i - 1, j), -a_x / (2.0 * hx) + a_xx / (hx * hx));
        put((i, j + 1), a_y / (2.0 * hy) + a_yy / (hy * hy));
        put((i, j - 1), -a_y / (2.0 * hy) + a_yy / (hy * hy));
        let c = a_xy / (4.0 * hx * hy);
        put((i + 1, j + 1), c);
        put((i - 1, j - 1), c);
        put((i + 1, j - 1), -c);
        put((i - 1, j + 1), -c);
    }
    a
}

/// Discrete-harmonic interior for the boundary values of `g`.
pub(crate) fn harmonic_guess(g: &GraphSurface) -> Result<GraphSurface, StringsError> {
    let l = Layout::new(g);
    let (cx, cy) = (1.0 / (l.hx * l.hx), 1.0 / (l.hy * l.hy));
    let mut a = BandedMatrix::zeros(l.unknowns(), l.band(), l.band());
    let mut rhs = vec![0.0; l.unknowns()];
    for (i, j) in l.interior() {
        let row = l.unknown(i, j);
        l.couple(&mut a, &mut rhs, &g.z, row, (i, j), -2.0 * (cx + cy));
        l.couple(&mut a, &mut rhs, &g.z, row, (i + 1, j), cx);
        l.couple(&mut a, &mut rhs, &g.z, row, (i - 1, j), cx);
        l.couple(&mut a, &mut rhs, &g.z, row, (i, j + 1), cy);
        l.couple(&mut a, &mut rhs, &g.z, row, (i, j - 1), cy);
    }
    let u = a.solve(&rhs)?;
    let mut out = g.clone();
    for (i, j) in l.interior() {
        out.z[l.node(i, j)] = u[l.unknown(i, j)];
    }
    Ok(out)
}

/// Solves the minimal-surface equation with the boundary rows and columns
/// of `boundary` as Dirichlet data. Boundary values are never modified.
pub fn solve_plateau(boundary: &GraphSurface, options: &PlateauOptions) -> Result<PlateauSolution, StringsError> {
    boundary.validate()?;
    let start = match options.initial {
        InitialGuess::Harmonic => harmonic_guess(boundary)?,
        InitialGuess::Given => boundary.clone(),
    };
    let l = Layout::new(boundary);
    let mut z = start.z.clone();
    let mut r = residual(&l, &z);
    let mut log = vec![NewtonStep {
        iteration: 0,
        residual: max_abs(&r),
        damping: 0.0,
    }];
    let mut iterations = 0;
    while max_abs(&r) >= options.tol {
        if iterations == options.max_iter {
            return Err(StringsError::NoConvergence {
                iterations,
                residual: max_abs(&r),
            });
        }
        let minus_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = jacobian(&l, &z).solve(&minus_r)?;
        let current = norm2(&r);
        let mut lambda = 1.0;
        let mut halvings = 0;
        let (trial_z, trial_r) = loop {
            let mut t = z.clone();
            for (i, j) in l.interior() {
                t[l.node(i, j)] += lambda * step[l.unknown(i, j)];
            }
            let tr = residual(&l, &t);
            if norm2(&tr) < current || halvings == MAX_HALVINGS {
                break (t, tr);
            }
            lambda *= 0.5;
            halvings += 1;
        };
        z = trial_z;
        r = trial_r;
        iterations += 1;
        log.push(NewtonStep {
            iteration: iterations,
            residual: max_abs(&r),
            damping: lambda,
        });
    }
    Ok(PlateauSolution {
        surface: GraphSurface { z, ..boundary.clone() },
        initial_guess: start,
        iterations,
        residual: max_abs(&r),
        log,
    })
}
