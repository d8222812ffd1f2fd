//! Fixed-size 3×3 kernels: products, pivoted solves, symmetric eigen
//! decomposition and a one-sided Jacobi SVD for tall matrices.

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

pub fn zeros<T: Real>() -> Mat3<T> {
    [[T::zero(); 3]; 3]
}

pub fn identity<T: Real>() -> Mat3<T> {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn mat_vec<T: Real>(m: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    let mut out = [T::zero(); 3];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

pub fn mat_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = zeros();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).fold(T::zero(), |acc, k| acc + a[i][k] * b[k][j]);
        }
    }
    out
}

pub fn transpose<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    let mut out = zeros();
    for i in 0..3 {
        for j in 0..3 {
            out[j][i] = m[i][j];
        }
    }
    out
}

pub fn scale<T: Real>(m: &Mat3<T>, s: T) -> Mat3<T> {
    m.map(|row| row.map(|x| x * s))
}

pub fn det<T: Real>(m: &Mat3<T>) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn max_abs<T: Real>(m: &Mat3<T>) -> T {
    m.iter()
        .flatten()
        .fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// Solves `m · X = rhs` column-wise by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot falls below `tol · max|m|`.
pub fn solve<T: Real>(m: &Mat3<T>, rhs: &Mat3<T>, tol: T) -> Option<Mat3<T>> {
    let mut a = *m;
    let mut b = *rhs;
    let limit = tol * max_abs(m);
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() <= limit || a[pivot][col] == T::zero() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] = a[row][k] - f * a[col][k];
            }
            for k in 0..3 {
                b[row][k] = b[row][k] - f * b[col][k];
            }
        }
    }
    let mut x = zeros();
    for row in (0..3).rev() {
        for k in 0..3 {
            let tail = (row + 1..3).fold(T::zero(), |acc, j| acc + a[row][j] * x[j][k]);
            x[row][k] = (b[row][k] - tail) / a[row][row];
        }
    }
    Some(x)
}

pub fn solve_vec<T: Real>(m: &Mat3<T>, rhs: &Vec3<T>, tol: T) -> Option<Vec3<T>> {
    let mut b = zeros();
    for i in 0..3 {
        b[i][0] = rhs[i];
    }
    solve(m, &b, tol).map(|x| [x[0][0], x[1][0], x[2][0]])
}

pub fn inverse<T: Real>(m: &Mat3<T>, tol: T) -> Option<Mat3<T>> {
    solve(m, &identity(), tol)
}

/// Eigen decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted descending and the matching unit eigenvectors
/// as the columns of the second matrix.
pub fn symmetric_eigen<T: Real>(m: &Mat3<T>) -> (Vec3<T>, Mat3<T>) {
    let mut a = *m;
    let mut v = identity::<T>();
    for _sweep in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        let diag = a[0][0].abs() + a[1][1].abs() + a[2][2].abs();
        if off <= T::epsilon() * diag || off == T::zero() {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == T::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vkp = row[p];
                let vkq = row[q];
                row[p] = c * vkp - s * vkq;
                row[q] = s * vkp + c * vkq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let values = order.map(|i| a[i][i]);
    let mut vectors = zeros();
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..3 {
            vectors[k][dst] = v[k][src];
        }
    }
    (values, vectors)
}

/// Thin SVD of an `n × 3` matrix given as rows, by one-sided Jacobi.
pub struct TallSvd<T> {
    /// Left singular vectors, `n × 3`, stored row-major.
    pub u: Vec<Vec3<T>>,
    /// Singular values, sorted descending.
    pub sigma: Vec3<T>,
    /// Right singular vectors as columns.
    pub v: Mat3<T>,
}

pub fn tall_svd<T: Real>(rows: &[Vec3<T>]) -> TallSvd<T> {
    let mut a: Vec<Vec3<T>> = rows.to_vec();
    let mut v = identity::<T>();
    let tol = T::epsilon() * T::lit(4.0);
    for _sweep in 0..64 {
        let mut rotated = false;
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
            for r in &a {
                alpha += r[p] * r[p];
                beta += r[q] * r[q];
                gamma += r[p] * r[q];
            }
            if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
            let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
            let c = T::one() / (T::one() + t * t).sqrt();
            let s = c * t;
            for r in a.iter_mut() {
                let (x, y) = (r[p], r[q]);
                r[p] = c * x - s * y;
                r[q] = s * x + c * y;
            }
            for row in v.iter_mut() {
                let (x, y) = (row[p], row[q]);
                row[p] = c * x - s * y;
                row[q] = s * x + c * y;
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec3<T> = [0, 1, 2].map(|j| a.iter().fold(T::zero(), |s, r| s + r[j] * r[j]).sqrt());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let sigma = order.map(|j| norms[j]);
    let u = a
        .iter()
        .map(|r| {
            order.map(|j| {
                if norms[j] > T::zero() {
                    r[j] / norms[j]
                } else {
                    T::zero()
                }
            })
        })
        .collect();
    let mut vs = zeros();
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..3 {
            vs[k][dst] = v[k][src];
        }
    }
    TallSvd { u, sigma, v: vs }
}
