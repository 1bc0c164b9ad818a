//! Dense symmetric positive-definite solves for the small Newton systems
//! (dimension at most `2(p+1)`).

use crate::scalar::Scalar;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    pub dim: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] += v;
    }

    /// Solves `self · x = b` by Cholesky. Returns `None` if the matrix is not
    /// numerically positive definite (pivot below `1e-12` of the largest
    /// diagonal entry).
    pub fn cholesky_solve(&self, b: &[T]) -> Option<Vec<T>> {
        let n = self.dim;
        let max_diag = (0..n).map(|i| self.get(i, i).abs()).fold(T::zero(), T::max);
        if !(max_diag > T::zero()) {
            return None;
        }
        let floor = max_diag * T::lit(1e-12);
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) {
                return None;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let v = l[i * n + k] * y[k];
                y[i] -= v;
            }
            y[i] /= l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let v = l[k * n + i] * y[k];
                y[i] -= v;
            }
            y[i] /= l[i * n + i];
        }
        Some(y)
    }
}

/// Euclidean norm.
pub fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let m = SymMatrix {
            dim: 3,
            data: vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0],
        };
        let x = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3).map(|i| (0..3).map(|j| m.get(i, j) * x[j]).sum()).collect();
        let sol = m.cholesky_solve(&b).unwrap();
        for (s, e) in sol.iter().zip(x) {
            assert!((s - e).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_singular() {
        let m = SymMatrix {
            dim: 2,
            data: vec![1.0, 1.0, 1.0, 1.0],
        };
        assert!(m.cholesky_solve(&[1.0, 1.0]).is_none());
        assert!(SymMatrix::<f64>::zeros(2).cholesky_solve(&[0.0, 0.0]).is_none());
    }
}
