//! Small dense linear algebra used by the geometry and embedding code.
//!
//! Everything here operates on matrices with at most a few dozen rows,
//! so plain Jacobi iterations are both simple and accurate.

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Two mutable row views; `i != j`.
    fn rows_pair_mut(&mut self, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
        assert!(i != j);
        let c = self.cols;
        if i < j {
            let (a, b) = self.data.split_at_mut(j * c);
            (&mut a[i * c..(i + 1) * c], &mut b[..c])
        } else {
            let (a, b) = self.data.split_at_mut(i * c);
            (&mut b[..c], &mut a[j * c..(j + 1) * c])
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigendecomposition for symmetric matrices.
pub fn jacobi_eigen(input: &Matrix) -> Eigen {
    assert_eq!(input.rows(), input.cols(), "matrix must be square");
    let n = input.rows();
    let mut a = input.clone();
    let mut v = Matrix::identity(n);
    let scale = input.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new)] = v[(k, old)];
        }
    }
    Eigen { values, vectors }
}

/// Thin singular value decomposition `A = U S V^T`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `m x m`; column `k` is the left singular vector for `sigma[k]`.
    pub u: Matrix,
    pub sigma: Vec<f64>,
    /// `m x n`; row `k` is the right singular vector for `sigma[k]`
    /// (zero row when `sigma[k]` vanishes).
    pub vt: Matrix,
}

/// One-sided Jacobi SVD that orthogonalizes the rows of `a`.
///
/// Intended for short-and-wide matrices (few rows, many columns), which is
/// the shape of a word-by-document matrix over a small vocabulary.
pub fn jacobi_svd(a: &Matrix) -> Svd {
    let m = a.rows();
    let n = a.cols();
    let mut w = a.clone();
    // Accumulates the row rotations: w = r * a at every step.
    let mut r = Matrix::identity(m);

    for _sweep in 0..80 {
        let mut norms: Vec<f64> = (0..m).map(|i| dot(w.row(i), w.row(i))).collect();
        let mut rotated = false;
        for i in 0..m {
            for j in (i + 1)..m {
                let gamma = dot(w.row(i), w.row(j));
                let bound = 1e-15 * (norms[i] * norms[j]).sqrt();
                if gamma.abs() <= bound || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (norms[j] - norms[i]) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (zeta * zeta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = c * t;
                {
                    let (wi, wj) = w.rows_pair_mut(i, j);
                    rotate_rows(wi, wj, c, s);
                }
                {
                    let (ri, rj) = r.rows_pair_mut(i, j);
                    rotate_rows(ri, rj, c, s);
                }
                let (a0, b0) = (norms[i], norms[j]);
                norms[i] = c * c * a0 - 2.0 * c * s * gamma + s * s * b0;
                norms[j] = s * s * a0 + 2.0 * c * s * gamma + c * c * b0;
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..m).map(|i| norm(w.row(i))).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());

    let mut u = Matrix::zeros(m, m);
    let mut vt = Matrix::zeros(m, n);
    let sigma_max = order.first().map_or(0.0, |&i| sigma[i]);
    for (new, &old) in order.iter().enumerate() {
        // u = r^T, so column `new` of u is row `old` of r.
        for k in 0..m {
            u[(k, new)] = r[(old, k)];
        }
        let s = sigma[old];
        if s > 1e-300 && s > 1e-15 * sigma_max {
            let row = w.row(old);
            for k in 0..n {
                vt[(new, k)] = row[k] / s;
            }
        } else {
            sigma[old] = 0.0;
        }
    }
    let sigma = order.iter().map(|&i| sigma[i]).collect();
    Svd { u, sigma, vt }
}

fn rotate_rows(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (x0, y0) = (*x, *y);
        *x = c * x0 - s * y0;
        *y = s * x0 + c * y0;
    }
}

/// Minimum-norm least-squares solution of `g x = b` for symmetric
/// positive semi-definite `g`, via eigen pseudo-inverse.
pub fn solve_spd_pinv(g: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = g.rows();
    assert_eq!(b.len(), n);
    let eig = jacobi_eigen(g);
    let lambda_max = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = lambda_max * 1e-12;
    let mut x = vec![0.0; n];
    for k in 0..n {
        let lambda = eig.values[k];
        if lambda <= cutoff || lambda <= 0.0 {
            continue;
        }
        let vk: Vec<f64> = (0..n).map(|i| eig.vectors[(i, k)]).collect();
        let coef = dot(&vk, b) / lambda;
        for i in 0..n {
            x[i] += coef * vk[i];
        }
    }
    x
}
