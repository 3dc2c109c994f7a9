use serde::Serialize;

use super::{bivector_pairs, BivectorLagrangian, GraphSurface, StringsError, SurfaceGrid};
use crate::expr::CompiledExpr;
use crate::numerics::fd::d1_axis;
use crate::numerics::fd_partials;

/// A field on the interior nodes of an `nt x ns` grid, one vector per
/// component: entry `(i - 1) * (ns - 2) + (j - 1)` belongs to node `(i, j)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualField {
    pub nt: usize,
    pub ns: usize,
    pub values: Vec<Vec<f64>>,
}

impl ResidualField {
    fn zeros(nt: usize, ns: usize, m: usize) -> ResidualField {
        ResidualField {
            nt,
            ns,
            values: vec![vec![0.0; (nt - 2) * (ns - 2)]; m],
        }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        (i - 1) * (self.ns - 2) + (j - 1)
    }

    /// Value of component `c` at interior node `(i, j)`.
    pub fn get(&self, c: usize, i: usize, j: usize) -> f64 {
        self.values[c][self.slot(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Largest magnitude over interior nodes whose indices are both
    /// multiples of `stride`. Refinement studies compare a grid with
    /// `stride = 1` against its doubling with `stride = 2`, so both maxima
    /// are taken at the same points.
    pub fn max_abs_strided(&self, stride: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.values {
            for i in (stride..self.nt - 1).step_by(stride) {
                for j in (stride..self.ns - 1).step_by(stride) {
                    worst = worst.max(c[self.slot(i, j)].abs());
                }
            }
        }
        worst
    }
}

/// Bivector components `xdot^{mu nu} = x^mu_t x^nu_s - x^mu_s x^nu_t`
/// (`mu < nu`) at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct Bivectors {
    pub pairs: Vec<(usize, usize)>,
    pub nt: usize,
    pub ns: usize,
    /// `values[k][node]` for `pairs[k]`.
    pub values: Vec<Vec<f64>>,
}

struct Tangents {
    xt: Vec<Vec<f64>>,
    xs: Vec<Vec<f64>>,
}

fn tangents(s: &SurfaceGrid) -> Tangents {
    Tangents {
        xt: s.values.iter().map(|c| d1_axis(c, s.nt, s.ns, s.dt, 0)).collect(),
        xs: s.values.iter().map(|c| d1_axis(c, s.nt, s.ns, s.ds, 1)).collect(),
    }
}

fn wedge(tg: &Tangents, pairs: &[(usize, usize)], len: usize) -> Vec<Vec<f64>> {
    pairs
        .iter()
        .map(|&(a, b)| (0..len).map(|k| tg.xt[a][k] * tg.xs[b][k] - tg.xs[a][k] * tg.xt[b][k]).collect())
        .collect()
}

/// Prolongation of a surface to `Λ²TM`: central differences inside,
/// second-order one-sided differences on the edges.
pub fn prolong(s: &SurfaceGrid) -> Result<Bivectors, StringsError> {
    s.validate()?;
    let pairs = bivector_pairs(s.dim());
    let values = wedge(&tangents(s), &pairs, s.nt * s.ns);
    Ok(Bivectors {
        pairs,
        nt: s.nt,
        ns: s.ns,
        values,
    })
}

/// Euler–Lagrange residual of a bivector Lagrangian along a surface,
///
/// `r_sigma = dL/dx^sigma - sum_mu (x^mu_s d/dt P_{sigma mu} - x^mu_t d/ds P_{sigma mu})`,
///
/// with `P_{sigma mu} = dL/dxdot^{sigma mu}` extended antisymmetrically.
/// Evaluated at interior nodes.
pub fn el_residual(lagrangian: &BivectorLagrangian, s: &SurfaceGrid) -> Result<ResidualField, StringsError> {
    s.validate()?;
    let m = lagrangian.dim();
    if s.dim() != m {
        return Err(StringsError::Shape { expected: m, got: s.dim() });
    }
    let (nt, ns) = (s.nt, s.ns);
    let len = nt * ns;
    let pairs = bivector_pairs(m);
    let names = lagrangian.variable_names();
    let l = lagrangian.expr();
    let d_base: Vec<CompiledExpr> = names[..m]
        .iter()
        .map(|v| CompiledExpr::new(&l.diff(v), &names))
        .collect::<Result<_, _>>()
        .map_err(|e| StringsError::Eval { i: 0, j: 0, source: e })?;
    let d_biv: Vec<CompiledExpr> = names[m..]
        .iter()
        .map(|v| CompiledExpr::new(&l.diff(v), &names))
        .collect::<Result<_, _>>()
        .map_err(|e| StringsError::Eval { i: 0, j: 0, source: e })?;

    // Everything below lives on the interior block (ni x nj). Momenta are
    // differenced only across interior nodes, one-sided on its outer ring:
    // a boundary value would carry a one-sided tangent whose error, once
    // differenced again, drops to first order.
    let (ni, nj) = (nt - 2, ns - 2);
    let inner = |k: usize| (k / nj + 1) * ns + k % nj + 1;
    let tg = tangents(s);
    let biv = wedge(&tg, &pairs, len);
    let mut dl_dx = vec![vec![0.0; ni * nj]; m];
    let mut momenta = vec![vec![0.0; ni * nj]; pairs.len()];
    let mut slots = vec![0.0; names.len()];
    for k in 0..ni * nj {
        let node = inner(k);
        for c in 0..m {
            slots[c] = s.values[c][node];
        }
        for (p, b) in biv.iter().enumerate() {
            slots[m + p] = b[node];
        }
        let at = |source| StringsError::Eval {
            i: node / ns,
            j: node % ns,
            source,
        };
        for c in 0..m {
            dl_dx[c][k] = d_base[c].eval(&slots).map_err(at)?;
        }
        for p in 0..pairs.len() {
            momenta[p][k] = d_biv[p].eval(&slots).map_err(at)?;
        }
    }
    let dt_p: Vec<Vec<f64>> = momenta.iter().map(|p| d1_axis(p, ni, nj, s.dt, 0)).collect();
    let ds_p: Vec<Vec<f64>> = momenta.iter().map(|p| d1_axis(p, ni, nj, s.ds, 1)).collect();
    // P_{sigma mu} = sign * momenta[index]
    let mut pair_index = vec![vec![None; m]; m];
    for (k, &(a, b)) in pairs.iter().enumerate() {
        pair_index[a][b] = Some((k, 1.0));
        pair_index[b][a] = Some((k, -1.0));
    }

    let mut out = ResidualField::zeros(nt, ns, m);
    for k in 0..ni * nj {
        let node = inner(k);
        for sigma in 0..m {
            let mut r = dl_dx[sigma][k];
            for mu in 0..m {
                if let Some((p, sign)) = pair_index[sigma][mu] {
                    r -= sign * (tg.xs[mu][node] * dt_p[p][k] - tg.xt[mu][node] * ds_p[p][k]);
                }
            }
            // interior block order matches the field's slot order
            out.values[sigma][k] = r;
        }
    }
    Ok(out)
}

/// `(1 + z_x^2) z_yy - 2 z_x z_y z_xy + (1 + z_y^2) z_xx` with second-order
/// central differences, at interior nodes.
pub fn minimal_surface_residual(g: &GraphSurface) -> Result<ResidualField, StringsError> {
    g.validate()?;
    let p = fd_partials(&g.z, g.nx, g.ny, g.hx(), g.hy());
    let mut out = ResidualField::zeros(g.nx, g.ny, 1);
    for i in 1..g.nx - 1 {
        for j in 1..g.ny - 1 {
            let k = i * g.ny + j;
            let (zx, zy) = (p.dx[k], p.dy[k]);
            let slot = out.slot(i, j);
            out.values[0][slot] = (1.0 + zx * zx) * p.dyy[k] - 2.0 * zx * zy * p.dxy[k] + (1.0 + zy * zy) * p.dxx[k];
        }
    }
    Ok(out)
}

/// Compares the bivector Euler–Lagrange residual of the area Lagrangian on
/// the embedded graph `(x, y, z(x, y))` with the minimal-surface operator.
///
/// In the continuum `r_z = -M / W^3` with `W = sqrt(1 + z_x^2 + z_y^2)`;
/// the field holds `r_z + M / W^3` at interior nodes.
pub fn consistency_field(g: &GraphSurface) -> Result<ResidualField, StringsError> {
    let r = el_residual(&BivectorLagrangian::area(3)?, &SurfaceGrid::from_graph(g))?;
    let msr = minimal_surface_residual(g)?;
    let p = fd_partials(&g.z, g.nx, g.ny, g.hx(), g.hy());
    let mut out = ResidualField::zeros(g.nx, g.ny, 1);
    for i in 1..g.nx - 1 {
        for j in 1..g.ny - 1 {
            let k = i * g.ny + j;
            let w = (1.0 + p.dx[k] * p.dx[k] + p.dy[k] * p.dy[k]).sqrt();
            let slot = out.slot(i, j);
            out.values[0][slot] = r.get(2, i, j) + msr.get(0, i, j) / w.powi(3);
        }
    }
    Ok(out)
}

/// `max |r_z + M / W^3|` over interior nodes; see [`consistency_field`].
pub fn consistency_check(g: &GraphSurface) -> Result<f64, StringsError> {
    Ok(consistency_field(g)?.max_abs())
}

/// Cell slopes of the bilinear interpolant at cell centres.
fn cell_slopes(g: &GraphSurface, i: usize, j: usize) -> (f64, f64) {
    let (a, b, c, d) = (g.at(i, j), g.at(i + 1, j), g.at(i, j + 1), g.at(i + 1, j + 1));
    ((b + d - a - c) / (2.0 * g.hx()), (c + d - a - b) / (2.0 * g.hy()))
}

/// Discrete area `sum_cells sqrt(1 + z_x^2 + z_y^2) hx hy`, slopes taken at
/// cell centres.
pub fn discrete_area(g: &GraphSurface) -> f64 {
    let mut area = 0.0;
    for i in 0..g.nx - 1 {
        for j in 0..g.ny - 1 {
            let (zx, zy) = cell_slopes(g, i, j);
            area += (1.0 + zx * zx + zy * zy).sqrt();
        }
    }
    area * g.hx() * g.hy()
}

/// Exact gradient of [`discrete_area`] with respect to the interior values,
/// divided by the cell area `hx hy`. In the continuum this is `-M / W^3`.
pub fn area_gradient(g: &GraphSurface) -> Result<ResidualField, StringsError> {
    g.validate()?;
    let (hx, hy) = (g.hx(), g.hy());
    let mut full = vec![0.0; g.nx * g.ny];
    for i in 0..g.nx - 1 {
        for j in 0..g.ny - 1 {
            let (zx, zy) = cell_slopes(g, i, j);
            let w = (1.0 + zx * zx + zy * zy).sqrt();
            let (gx, gy) = (zx / w / (2.0 * hx), zy / w / (2.0 * hy));
            // corners: (i, j) -, -; (i+1, j) +, -; (i, j+1) -, +; (i+1, j+1) +, +
            full[i * g.ny + j] += -gx - gy;
            full[(i + 1) * g.ny + j] += gx - gy;
            full[i * g.ny + j + 1] += -gx + gy;
            full[(i + 1) * g.ny + j + 1] += gx + gy;
        }
    }
    let mut out = ResidualField::zeros(g.nx, g.ny, 1);
    for i in 1..g.nx - 1 {
        for j in 1..g.ny - 1 {
            let slot = out.slot(i, j);
            out.values[0][slot] = full[i * g.ny + j];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::convergence_slope;

    fn scherk(x: f64, y: f64) -> f64 {
        (x.cos() / y.cos()).ln()
    }

    fn bump(x: f64, y: f64) -> f64 {
        0.1 * (-x * x - y * y).exp()
    }

    fn square(n: usize, f: impl Fn(f64, f64) -> f64) -> GraphSurface {
        GraphSurface::from_fn((-1.0, 1.0), (-1.0, 1.0), n, n, f).unwrap()
    }

    #[test]
    fn plane_prolongation_and_swap() {
        let s = SurfaceGrid::from_fn((0.0, 1.0), 6, (0.0, 2.0), 7, 3, |t, s| vec![t, s, 0.0]).unwrap();
        let b = prolong(&s).unwrap();
        assert!(b.values[0].iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(b.values[1].iter().chain(&b.values[2]).all(|v| v.abs() < 1e-14));

        let curved = SurfaceGrid::from_fn((0.0, 1.0), 9, (-1.0, 1.0), 8, 3, |t, s| vec![t.sin(), s * t, (t + s).exp()]).unwrap();
        let a = prolong(&curved).unwrap();
        let w = prolong(&curved.swapped()).unwrap();
        for k in 0..3 {
            for i in 0..curved.nt {
                for j in 0..curved.ns {
                    assert_eq!(w.values[k][j * curved.nt + i], -a.values[k][i * curved.ns + j]);
                }
            }
        }
    }

    #[test]
    fn saddle_bivectors_are_second_order() {
        // x = (t, s, t s): x_t = (1, 0, s), x_s = (0, 1, t)
        // xdot12 = 1, xdot13 = t, xdot23 = -s
        let err = |n: usize| {
            let s = SurfaceGrid::from_fn((0.0, 1.0), n, (0.0, 1.0), n, 3, |t, s| vec![t, s, t * s]).unwrap();
            let b = prolong(&s).unwrap();
            let mut worst: f64 = 0.0;
            for i in 1..n - 1 {
                for j in 1..n - 1 {
                    let k = i * n + j;
                    worst = worst.max((b.values[1][k] - s.t(i)).abs()).max((b.values[2][k] + s.s(j)).abs());
                }
            }
            worst
        };
        // Bilinear surface: central differences are exact.
        assert!(err(9) < 1e-13);
        let err = |n: usize| {
            let s = SurfaceGrid::from_fn((0.0, 1.0), n, (0.0, 1.0), n, 3, |t, s| vec![t, s, (t * s).sin()]).unwrap();
            let b = prolong(&s).unwrap();
            let mut worst: f64 = 0.0;
            for i in 1..n - 1 {
                for j in 1..n - 1 {
                    let (t, u) = (s.t(i), s.s(j));
                    let k = i * n + j;
                    worst = worst.max((b.values[1][k] - t * (t * u).cos()).abs());
                }
            }
            worst
        };
        let hs = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let errs: Vec<f64> = [33, 65, 129].iter().map(|&n| err(n)).collect();
        assert!(convergence_slope(&hs, &errs) >= 1.9, "{errs:?}");
    }

    #[test]
    fn planes_are_minimal() {
        let g = square(21, |x, y| 0.3 * x + 0.7 * y - 1.0);
        let r = el_residual(&BivectorLagrangian::area(3).unwrap(), &SurfaceGrid::from_graph(&g)).unwrap();
        assert!(r.max_abs() < 1e-8, "{}", r.max_abs());
        assert!(minimal_surface_residual(&g).unwrap().max_abs() < 1e-12);
        assert!(consistency_check(&g).unwrap() < 1e-10);
    }

    #[test]
    fn null_lagrangian_residual_vanishes() {
        let l = BivectorLagrangian::parse(3, "xdot12").unwrap();
        let s = SurfaceGrid::from_fn((0.0, 1.0), 12, (0.0, 1.0), 10, 3, |t, s| vec![t * t + s, (s * t).cos(), t - s * s]).unwrap();
        assert_eq!(el_residual(&l, &s).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn evaluation_errors_carry_location() {
        let l = BivectorLagrangian::parse(2, "log(x1) * xdot12").unwrap();
        let s = SurfaceGrid::from_fn((-1.0, 1.0), 5, (0.0, 1.0), 5, 2, |t, s| vec![t, s]).unwrap();
        assert!(matches!(el_residual(&l, &s), Err(StringsError::Eval { i: 1, j: 1, .. })));
    }

    #[test]
    fn quadratic_residual_is_two() {
        let g = square(9, |x, _| x * x);
        let r = minimal_surface_residual(&g).unwrap();
        assert!(r.values[0].iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn scherk_residuals_are_second_order() {
        let levels = [33, 65, 129];
        let hs = [2.0 / 32.0, 2.0 / 64.0, 2.0 / 128.0];
        let ms: Vec<f64> = levels
            .iter()
            .zip([1, 2, 4])
            .map(|(&n, stride)| minimal_surface_residual(&square(n, scherk)).unwrap().max_abs_strided(stride))
            .collect();
        assert!(minimal_surface_residual(&square(65, scherk)).unwrap().max_abs() < 5e-3);
        assert!(ms[1] / ms[2] >= 3.8, "{ms:?}");
        let area = BivectorLagrangian::area(3).unwrap();
        let el: Vec<f64> = levels
            .iter()
            .zip([1, 2, 4])
            .map(|(&n, stride)| el_residual(&area, &SurfaceGrid::from_graph(&square(n, scherk))).unwrap().max_abs_strided(stride))
            .collect();
        assert!(convergence_slope(&hs, &el) >= 1.9, "{el:?}");
    }

    #[test]
    fn consistency_is_second_order() {
        let hs = [2.0 / 32.0, 2.0 / 64.0, 2.0 / 128.0];
        for f in [scherk as fn(f64, f64) -> f64, bump] {
            let dev: Vec<f64> = [33, 65, 129]
                .iter()
                .zip([1, 2, 4])
                .map(|(&n, stride)| consistency_field(&square(n, f)).unwrap().max_abs_strided(stride))
                .collect();
            assert!(convergence_slope(&hs, &dev) >= 1.9, "{dev:?}");
        }
        assert!(consistency_check(&square(65, scherk)).unwrap() < 5e-3);
        let g = square(65, bump);
        assert!(minimal_surface_residual(&g).unwrap().max_abs() > 0.1);
    }

    #[test]
    fn area_gradient_is_exact_and_consistent() {
        let g = square(9, bump);
        let grad = area_gradient(&g).unwrap();
        let eps = 1e-6;
        for (i, j) in [(1, 1), (4, 4), (3, 6)] {
            let mut up = g.clone();
            up.z[i * g.ny + j] += eps;
            let mut dn = g.clone();
            dn.z[i * g.ny + j] -= eps;
            let fd = (discrete_area(&up) - discrete_area(&dn)) / (2.0 * eps) / (g.hx() * g.hy());
            let exact = grad.get(0, i, j);
            assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3), "{fd} {exact}");
        }
        let dev = |n: usize| {
            let g = square(n, bump);
            let grad = area_gradient(&g).unwrap();
            let msr = minimal_surface_residual(&g).unwrap();
            let p = fd_partials(&g.z, n, n, g.hx(), g.hy());
            let mut worst: f64 = 0.0;
            for i in 1..n - 1 {
                for j in 1..n - 1 {
                    let k = i * n + j;
                    let w = (1.0 + p.dx[k] * p.dx[k] + p.dy[k] * p.dy[k]).sqrt();
                    worst = worst.max((w.powi(3) * grad.get(0, i, j) + msr.get(0, i, j)).abs());
                }
            }
            worst
        };
        let hs = [2.0 / 16.0, 2.0 / 32.0, 2.0 / 64.0];
        let errs: Vec<f64> = [17, 33, 65].iter().map(|&n| dev(n)).collect();
        assert!(convergence_slope(&hs, &errs) >= 1.9, "{errs:?}");
    }

    #[test]
    fn reparametrized_solution_stays_small() {
        let area = BivectorLagrangian::area(3).unwrap();
        let n = 65;
        let base = el_residual(&area, &SurfaceGrid::from_graph(&square(n, scherk))).unwrap().max_abs();
        let warped = SurfaceGrid::from_fn((-1.0, 1.0), n, (-1.0, 1.0), n, 3, |t, s| {
            let u = t + 0.05 * t * (1.0 - t * t);
            let v = s + 0.05 * s * (1.0 - s * s) + 0.02 * (1.0 - s * s) * t;
            vec![u, v, scherk(u, v)]
        })
        .unwrap();
        let moved = el_residual(&area, &warped).unwrap().max_abs();
        assert!(moved < 2.0 * base, "{moved} vs {base}");
    }
}
