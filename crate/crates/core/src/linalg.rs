//! Small dense matrices and a cyclic Jacobi eigensolver for the symmetric case.

use crate::error::{Error, Result};

/// Symmetry tolerance accepted by [`spectral_radius`], relative to max |entry| (floor 1).
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Jacobi sweeps stop once the off-diagonal Frobenius norm falls below this
/// fraction of the full norm.
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Matrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension { expected: n, got: row.len() });
            }
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest |m[i][j] - m[j][i]| and its position.
    pub fn asymmetry(&self) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let gap = (self[(i, j)] - self[(j, i)]).abs();
                if gap > worst.0 {
                    worst = (gap, i, j);
                }
            }
        }
        worst
    }

    /// `yᵀ M y`.
    pub fn quadratic_form(&self, y: &[f64]) -> f64 {
        let n = self.n;
        (0..n)
            .map(|i| y[i] * (0..n).map(|j| self[(i, j)] * y[j]).sum::<f64>())
            .sum()
    }

    fn off_diagonal_sq(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self[(i, j)] * self[(i, j)];
                }
            }
        }
        s
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

fn check_symmetric(m: &Matrix) -> Result<()> {
    let (gap, row, col) = m.asymmetry();
    if gap > SYMMETRY_TOLERANCE * m.max_abs().max(1.0) {
        return Err(Error::Asymmetry { row, col, gap });
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, unsorted.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let n = m.dim();
    let mut a = m.clone();
    // symmetrise exactly so rotations act on a symmetric matrix
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let threshold = (OFF_DIAGONAL_TOLERANCE * a.frobenius()).powi(2);
    for _ in 0..MAX_SWEEPS {
        if a.off_diagonal_sq() <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
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
            }
        }
    }
    Ok((0..n).map(|i| a[(i, i)]).collect())
}

/// Largest |eigenvalue| of a symmetric matrix.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    Ok(symmetric_eigenvalues(m)?
        .into_iter()
        .fold(0.0, |acc, v| acc.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn trivial_cases() {
        assert_eq!(spectral_radius(&Matrix::zeros(3)).unwrap(), 0.0);
        assert_eq!(spectral_radius(&Matrix::diag(&[3.0, -5.0])).unwrap(), 5.0);
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let mut ev = symmetric_eigenvalues(&m).unwrap();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(spectral_radius(&m), Err(Error::Asymmetry { .. })));
    }

    #[test]
    fn plus_minus_pair_is_resolved() {
        // eigenvalues ±1, where power iteration oscillates
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((spectral_radius(&m).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rayleigh_quotients_never_exceed_radius() {
        let mut rng = seeded(42);
        for _ in 0..50 {
            let n = rng.random_range(2..8);
            let mut m = Matrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            let rho = spectral_radius(&m).unwrap();
            let mut best: f64 = 0.0;
            for _ in 0..1000 {
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm_sq: f64 = y.iter().map(|v| v * v).sum();
                best = best.max((m.quadratic_form(&y) / norm_sq).abs());
            }
            assert!(best <= rho * (1.0 + 1e-12));
            // trace is preserved by similarity
            let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
            let sum: f64 = symmetric_eigenvalues(&m).unwrap().iter().sum();
            assert!((trace - sum).abs() < 1e-12);
        }
    }
}
