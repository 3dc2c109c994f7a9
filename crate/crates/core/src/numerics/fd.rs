//! Finite-difference stencils.

/// Fornberg weights for the `deriv`-th derivative at `x0` on the nodes `xs`.
pub fn fornberg_weights(x0: f64, xs: &[f64], deriv: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > deriv, "need more than {deriv} nodes");
    let mut c = vec![vec![0.0; deriv + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[deriv]).collect()
}

/// Second-order central stencil for the `deriv`-th derivative on unit
/// spacing: offsets `-h..=h` with `h = (deriv + 1) / 2`.
pub fn central_weights(deriv: usize) -> Vec<f64> {
    let h = deriv.div_ceil(2) as i64;
    let xs: Vec<f64> = (-h..=h).map(|o| o as f64).collect();
    fornberg_weights(0.0, &xs, deriv)
}

/// First and second partial derivatives of a field sampled on a uniform
/// `nx × ny` grid (row-major, `i * ny + j`, `i` along the first axis).
#[derive(Clone, Debug)]
pub struct Partials {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dxx: Vec<f64>,
    pub dyy: Vec<f64>,
    pub dxy: Vec<f64>,
}

/// First derivative along a strided line: central inside, second-order
/// one-sided at both ends.
fn d1_line(f: impl Fn(usize) -> f64, n: usize, h: f64, out: &mut impl FnMut(usize, f64)) {
    for k in 0..n {
        let v = if k == 0 {
            (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
        } else if k == n - 1 {
            (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h)
        } else {
            (f(k + 1) - f(k - 1)) / (2.0 * h)
        };
        out(k, v);
    }
}

fn d2_line(f: impl Fn(usize) -> f64, n: usize, h: f64, out: &mut impl FnMut(usize, f64)) {
    let h2 = h * h;
    for k in 0..n {
        let v = if k == 0 {
            (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / h2
        } else if k == n - 1 {
            (2.0 * f(n - 1) - 5.0 * f(n - 2) + 4.0 * f(n - 3) - f(n - 4)) / h2
        } else {
            (f(k + 1) - 2.0 * f(k) + f(k - 1)) / h2
        };
        out(k, v);
    }
}

/// First derivative along axis 0 (`axis = 0`) or axis 1 of a grid field.
pub(crate) fn d1_axis(values: &[f64], nx: usize, ny: usize, h: f64, axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; nx * ny];
    if axis == 0 {
        for j in 0..ny {
            d1_line(|i| values[i * ny + j], nx, h, &mut |i, v| out[i * ny + j] = v);
        }
    } else {
        for i in 0..nx {
            d1_line(|j| values[i * ny + j], ny, h, &mut |j, v| out[i * ny + j] = v);
        }
    }
    out
}

/// Second-order partials of a grid field; needs at least 4 nodes per axis.
/// Exact on polynomials of degree ≤ 2.
pub fn fd_partials(values: &[f64], nx: usize, ny: usize, hx: f64, hy: f64) -> Partials {
    assert!(nx >= 4 && ny >= 4, "grid must have at least 4 nodes per axis");
    assert_eq!(values.len(), nx * ny);
    let dx = d1_axis(values, nx, ny, hx, 0);
    let dy = d1_axis(values, nx, ny, hy, 1);
    let mut dxx = vec![0.0; nx * ny];
    let mut dyy = vec![0.0; nx * ny];
    for j in 0..ny {
        d2_line(|i| values[i * ny + j], nx, hx, &mut |i, v| dxx[i * ny + j] = v);
    }
    for i in 0..nx {
        d2_line(|j| values[i * ny + j], ny, hy, &mut |j, v| dyy[i * ny + j] = v);
    }
    let dxy = d1_axis(&dx, nx, ny, hy, 1);
    Partials { dx, dy, dxx, dyy, dxy }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::convergence_slope;

    fn sample(nx: usize, ny: usize, h: f64, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                v.push(f(i as f64 * h, j as f64 * h));
            }
        }
        v
    }

    #[test]
    fn central_weights_are_textbook() {
        assert_eq!(central_weights(1), vec![-0.5, 0.0, 0.5]);
        assert_eq!(central_weights(2), vec![1.0, -2.0, 1.0]);
        let w4 = central_weights(4);
        for (a, b) in w4.iter().zip([1.0, -4.0, 6.0, -4.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratics_are_exact() {
        let (nx, ny, h) = (7, 6, 0.25);
        let p = fd_partials(&sample(nx, ny, h, |x, _| x * x), nx, ny, h, h);
        assert!(p.dxx.iter().all(|v| (v - 2.0).abs() < 1e-12));
        let p = fd_partials(&sample(nx, ny, h, |x, y| x * y), nx, ny, h, h);
        assert!(p.dxy.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let p = fd_partials(&sample(nx, ny, h, |x, y| 1.0 + 2.0 * x - y + 0.5 * x * x + 3.0 * y * y - x * y), nx, ny, h, h);
        for i in 0..nx {
            for j in 0..ny {
                let (x, y) = (i as f64 * h, j as f64 * h);
                let k = i * ny + j;
                assert!((p.dx[k] - (2.0 + x - y)).abs() < 1e-11);
                assert!((p.dy[k] - (-1.0 + 6.0 * y - x)).abs() < 1e-11);
                assert!((p.dyy[k] - 6.0).abs() < 1e-10);
                assert!((p.dxy[k] + 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sine_first_derivative_is_second_order() {
        let hs = [0.1f64, 0.05, 0.025];
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| {
                let n = (1.0 / h).round() as usize + 1;
                let p = fd_partials(&sample(n, 4, h, |x, _| x.sin()), n, 4, h, h);
                (0..n).map(|i| (p.dx[i * 4] - (i as f64 * h).cos()).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(convergence_slope(&hs, &errs) >= 1.9);
    }
}
