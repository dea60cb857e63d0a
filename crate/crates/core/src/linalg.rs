//! Dense LU factorization with partial pivoting for the small systems solved
//! here (power-flow Jacobians, augmented network admittance matrices).

use std::ops::{Div, Mul, Sub};

use num_complex::Complex64;

pub trait LuScalar: Copy + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl LuScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl LuScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    a: Vec<T>,
    perm: Vec<usize>,
}

/// Factorization failed: no usable pivot in the given (original) column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularPivot(pub usize);

impl<T: LuScalar> Lu<T> {
    /// Factor a row-major `n × n` matrix.
    pub fn factor(n: usize, mut a: Vec<T>) -> Result<Self, SingularPivot> {
        assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().map(|v| v.magnitude()).fold(0.0, f64::max).max(1.0);
        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|r| (r, a[r * n + k].magnitude()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmag > 1e-14 * scale) {
                return Err(SingularPivot(k));
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let piv = a[k * n + k];
            for r in (k + 1)..n {
                let f = a[r * n + k] / piv;
                if f.magnitude() == 0.0 {
                    continue;
                }
                a[r * n + k] = f;
                for c in (k + 1)..n {
                    let v = a[k * n + c];
                    a[r * n + c] = a[r * n + c] - f * v;
                }
            }
        }
        Ok(Lu { n, a, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s = s - self.a[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in (r + 1)..n {
                s = s - self.a[r * n + c] * x[c];
            }
            x[r] = s / self.a[r * n + r];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_pivoting_system() {
        let lu = Lu::factor(3, vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]).unwrap();
        let x = lu.solve(&[5.0, 3.0, 4.0]);
        let expect = [1.0, 2.0, 1.0];
        for (a, b) in x.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_singular_column() {
        let err = Lu::factor(2, vec![1.0, 2.0, 2.0, 4.0]).unwrap_err();
        assert_eq!(err, SingularPivot(1));
    }
}
