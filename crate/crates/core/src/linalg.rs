//! Dense complex matrices and the few numerical routines the toolkit needs.
//!
//! Dimensions here are tiny (at most 27x27), so the implementations favor
//! clarity and robustness over performance: cyclic Jacobi for Hermitian
//! eigenvalues, normal equations with partial pivoting for least squares, and
//! Lawson-Hanson for the non-negative least-squares step of readout
//! mitigation.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        CMat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Adds `scale * v v^dagger` to the matrix.
    pub fn add_scaled_outer(&mut self, v: &[Complex64], scale: f64) {
        assert_eq!(self.rows, v.len());
        assert_eq!(self.cols, v.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                self[(i, j)] += v[i] * v[j].conj() * scale;
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl core::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi, sorted descending.
///
/// Off-diagonal mass contracts quadratically once sweeps lock in; 50 sweeps
/// is far beyond what a 27x27 matrix needs.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    assert_eq!(m.rows, m.cols, "eigenvalues of a non-square matrix");
    let n = m.rows;
    let mut a = m.clone();
    let scale = a.frobenius_norm().max(1e-300);

    for _sweep in 0..50 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b <= 1e-18 * scale {
                    continue;
                }
                let phase = Complex64::new(0.0, apq.arg()).exp();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = 0.5 * f64::atan2(2.0 * b, app - aqq);
                let c = theta.cos();
                let s = theta.sin();
                // A <- A J
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c + akq * phase.conj() * s;
                    a[(k, q)] = -akp * phase * s + akq * c;
                }
                // A <- J^dagger A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c + aqk * phase * s;
                    a[(q, k)] = -apk * phase.conj() * s + aqk * c;
                }
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eig
}

/// Solves the dense linear system `a x = b` by Gaussian elimination with
/// partial pivoting. Returns `None` when a pivot collapses below `1e-13`
/// relative to the matrix scale.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    assert!(a.iter().all(|row| row.len() == n));
    assert_eq!(b.len(), n);
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1e-300);

    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[pivot_row][col].abs() < 1e-13 * scale {
            return None;
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in (row + 1)..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Unconstrained linear least squares `min ||A x - b||` via normal equations.
///
/// `a` is given as `m` rows of `n` columns. Fine for the well-conditioned,
/// tiny systems used here (sinusoid fits, mitigation subproblems).
pub fn least_squares(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = a.len();
    assert_eq!(b.len(), m);
    let n = if m == 0 { return None } else { a[0].len() };
    let mut ata = vec![vec![0.0; n]; n];
    let mut atb = vec![0.0; n];
    for row in 0..m {
        for i in 0..n {
            atb[i] += a[row][i] * b[row];
            for j in i..n {
                ata[i][j] += a[row][i] * a[row][j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            ata[i][j] = ata[j][i];
        }
    }
    solve_dense(&ata, &atb)
}

/// Non-negative least squares by Lawson-Hanson: `min ||A x - b||` s.t. `x >= 0`.
///
/// The sum of `x` is left free, so probability vectors recovered from readout
/// mitigation are allowed to have a total different from one.
pub fn nnls(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = a.len();
    let n = if m == 0 { return None } else { a[0].len() };
    assert_eq!(b.len(), m);

    let tol = 1e-12
        * a.iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(1.0);

    let mut x = vec![0.0f64; n];
    let mut passive = vec![false; n];

    for _outer in 0..(6 * n) {
        // w = A^T (b - A x)
        let mut resid = b.to_vec();
        for (row, r) in resid.iter_mut().enumerate() {
            for j in 0..n {
                *r -= a[row][j] * x[j];
            }
        }
        let mut w = vec![0.0f64; n];
        for (j, wj) in w.iter_mut().enumerate() {
            for row in 0..m {
                *wj += a[row][j] * resid[row];
            }
        }

        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
        let t = match candidate {
            Some(t) if w[t] > tol => t,
            _ => return Some(x),
        };
        passive[t] = true;

        // Inner loop: solve on the passive set, push negatives back onto
        // the boundary.
        for _inner in 0..(6 * n) {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub: Vec<Vec<f64>> =
                (0..m).map(|row| idx.iter().map(|&j| a[row][j]).collect()).collect();
            let z = least_squares(&sub, b)?;

            if z.iter().all(|&v| v > 0.0) {
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z[k];
                }
                break;
            }

            let mut alpha = f64::infinity();
            for (k, &j) in idx.iter().enumerate() {
                if z[k] <= 0.0 {
                    let step = x[j] / (x[j] - z[k]);
                    alpha = alpha.min(step);
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z[k] - x[j]);
                if x[j] <= tol {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    Some(x)
}
