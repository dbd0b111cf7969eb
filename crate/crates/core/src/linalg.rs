//! Small dense helpers.

use num_complex::Complex;

use crate::scalar::Real;

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// `a` is row-major `n × n`. Returns `None` on a zero pivot.
pub fn solve_dense<T: Real>(
    n: usize,
    mut a: Vec<Complex<T>>,
    mut b: Vec<Complex<T>>,
) -> Option<Vec<Complex<T>>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| {
                a[i * n + k]
                    .norm()
                    .partial_cmp(&a[j * n + k].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot * n + k].norm() == T::zero() {
            return None;
        }
        if pivot != k {
            for j in 0..n {
                a.swap(k * n + j, pivot * n + j);
            }
            b.swap(k, pivot);
        }
        let d = a[k * n + k];
        for i in (k + 1)..n {
            let f = a[i * n + k] / d;
            if f == Complex::default() {
                continue;
            }
            for j in k..n {
                let v = a[k * n + j];
                a[i * n + j] -= f * v;
            }
            let bk = b[k];
            b[i] -= f * bk;
        }
    }
    let mut x = vec![Complex::default(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= a[i * n + j] * x[j];
        }
        x[i] = s / a[i * n + i];
    }
    x.iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
        .then_some(x)
}
