//! Partial-pivot LU, dense and banded.

use super::NumericsError;

/// Relative pivot threshold: a pivot below `PIVOT_TOL * max_row_norm` is singular.
const PIVOT_TOL: f64 = 1e-13;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    fn max_row_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

fn lu_factor(a: &Matrix) -> Result<Lu, NumericsError> {
    if a.rows != a.cols {
        return Err(NumericsError::Dimension(format!("{}x{} matrix is not square", a.rows, a.cols)));
    }
    let n = a.rows;
    let threshold = PIVOT_TOL * a.max_row_norm();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&r, &s| lu[(r, k)].abs().total_cmp(&lu[(s, k)].abs()))
            .unwrap_or(k);
        let pivot = lu[(p, k)];
        if !(pivot.abs() >= threshold) || pivot == 0.0 {
            return Err(NumericsError::Singular {
                column: k,
                pivot: pivot.abs(),
                threshold,
            });
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            perm.swap(k, p);
        }
        for r in k + 1..n {
            let f = lu[(r, k)] / pivot;
            lu[(r, k)] = f;
            if f != 0.0 {
                for j in k + 1..n {
                    lu[(r, j)] -= f * lu[(k, j)];
                }
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn dense_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if b.len() != a.rows {
        return Err(NumericsError::Dimension(format!("rhs length {} vs {} rows", b.len(), a.rows)));
    }
    Ok(lu_factor(a)?.solve(b))
}

/// Determinant via LU; `0` when the matrix is numerically singular.
pub fn determinant(a: &Matrix) -> Result<f64, NumericsError> {
    let lu = match lu_factor(a) {
        Ok(lu) => lu,
        Err(NumericsError::Singular { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let mut seen = vec![false; lu.perm.len()];
    let mut sign = 1.0;
    for start in 0..lu.perm.len() {
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = lu.perm[i];
            len += 1;
        }
        if len > 0 && len % 2 == 0 {
            sign = -sign;
        }
    }
    Ok((0..a.rows).fold(sign, |d, i| d * lu.lu[(i, i)]))
}

/// 1-norm condition number `‖A‖₁ ‖A⁻¹‖₁`; infinite when `A` is singular.
pub fn condition_number(a: &Matrix) -> f64 {
    let Ok(lu) = lu_factor(a) else { return f64::INFINITY };
    let n = a.rows;
    let mut inv_norm: f64 = 0.0;
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = lu.solve(&e);
        inv_norm = inv_norm.max(col.iter().map(|v| v.abs()).sum());
    }
    a.norm_1() * inv_norm
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Storage reserves `kl` extra super-diagonals for pivoting fill-in.
#[derive(Clone, Debug)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> BandedMatrix {
        let width = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku, "({i},{j}) outside band");
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Adds `v` to entry `(i, j)`, which must lie within the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i},{j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Solves `A x = b` by banded LU with partial pivoting, consuming `A`.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
        let n = self.n;
        if b.len() != n {
            return Err(NumericsError::Dimension(format!("rhs length {} vs {n}", b.len())));
        }
        let max_row = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(n - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max);
        let threshold = PIVOT_TOL * max_row;
        let reach = self.kl + self.ku;
        let mut x = b.to_vec();
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let p = (k..=last)
                .max_by(|&r, &s| self.data[self.slot(r, k)].abs().total_cmp(&self.data[self.slot(s, k)].abs()))
                .unwrap_or(k);
            let pivot = self.data[self.slot(p, k)];
            if !(pivot.abs() >= threshold) || pivot == 0.0 {
                return Err(NumericsError::Singular {
                    column: k,
                    pivot: pivot.abs(),
                    threshold,
                });
            }
            let cmax = (k + reach).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    let (sp, sk) = (self.slot(p, c), self.slot(k, c));
                    self.data.swap(sp, sk);
                }
                x.swap(p, k);
            }
            for r in k + 1..=last {
                let sr = self.slot(r, k);
                let f = self.data[sr] / pivot;
                if f == 0.0 {
                    continue;
                }
                self.data[sr] = 0.0;
                for c in k + 1..=cmax {
                    let (src, dst) = (self.slot(k, c), self.slot(r, c));
                    self.data[dst] -= f * self.data[src];
                }
                x[r] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            let cmax = (k + reach).min(n - 1);
            let mut acc = x[k];
            for c in k + 1..=cmax {
                acc -= self.data[self.slot(k, c)] * x[c];
            }
            x[k] = acc / self.data[self.slot(k, k)];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{seeded_rng, uniform_point};

    #[test]
    fn determinants() {
        let swap = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(determinant(&swap).unwrap(), -1.0);
        let a = Matrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![0.0, 0.0, 3.0], vec![1.0, 4.0, 1.0]]);
        // 2(0 - 12) - 1(0 - 3) = -21
        assert!((determinant(&a).unwrap() + 21.0).abs() < 1e-12);
        assert_eq!(determinant(&Matrix::zeros(2, 2)).unwrap(), 0.0);
    }

    #[test]
    fn identity_and_diagonal() {
        let b = vec![1.0, -2.0, 3.0];
        assert_eq!(dense_solve(&Matrix::identity(3), &b).unwrap(), b);
        let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        assert_eq!(dense_solve(&a, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn random_well_conditioned_backward_error() {
        let n = 50;
        let mut rng = seeded_rng(5);
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            let row = uniform_point(&mut rng, n, -1.0, 1.0);
            for j in 0..n {
                a[(i, j)] = row[j];
            }
            a[(i, i)] += n as f64;
        }
        let b = uniform_point(&mut rng, n, -1.0, 1.0);
        let x = dense_solve(&a, &b).unwrap();
        let r: f64 = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let bnorm = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(r < 1e-12 * bnorm.max(1.0), "{r}");
    }

    #[test]
    fn singular_is_reported() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(dense_solve(&a, &[1.0, 1.0]), Err(NumericsError::Singular { .. })));
        assert!(condition_number(&a).is_infinite());
        assert!((condition_number(&Matrix::identity(4)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn banded_matches_dense_with_pivoting() {
        let n = 30;
        let (kl, ku) = (3, 2);
        let mut rng = seeded_rng(9);
        let mut band = BandedMatrix::zeros(n, kl, ku);
        let mut dense = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let v = uniform_point(&mut rng, 1, -1.0, 1.0)[0];
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let b = uniform_point(&mut rng, n, -1.0, 1.0);
        let xd = dense_solve(&dense, &b).unwrap();
        let xb = band.clone().solve(&b).unwrap();
        for (p, q) in xd.iter().zip(&xb) {
            assert!((p - q).abs() < 1e-9 * (1.0 + p.abs()), "{p} vs {q}");
        }
        let r = band.mul_vec(&xb);
        assert!(r.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-9));
    }
}
