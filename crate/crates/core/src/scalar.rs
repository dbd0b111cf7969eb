//! Scalar abstraction.
//!
//! All physics in this crate is written against [`Real`], which is
//! implemented for `f32` and `f64`. The two heavy linear-algebra kernels
//! (sparse LU and dense Hermitian eigenvalues) are routed through the trait
//! so that each concrete float type can dispatch to the backend directly.

use std::fmt::{Debug, Display, LowerExp};

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;
use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type usable throughout the simulation.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Every value used as a literal here is
    /// representable in `f32`, so this never fails.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in target float")
    }

    /// Converts a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in target float")
    }

    /// Solves `A x = rhs` for a square sparse `A` given as coordinate
    /// entries (duplicates are summed). Returns `None` when the
    /// factorization fails or the solution is not finite.
    fn sparse_solve(
        n: usize,
        entries: &[(usize, usize, Complex<Self>)],
        rhs: &[Complex<Self>],
    ) -> Option<Vec<Complex<Self>>>;

    /// Eigenvalues, in nondecreasing order, of the Hermitian matrix stored
    /// column-major in `data`. Only the lower triangle is read.
    fn hermitian_eigenvalues(dim: usize, data: &[Complex<Self>]) -> Option<Vec<Self>>;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn sparse_solve(
                n: usize,
                entries: &[(usize, usize, Complex<Self>)],
                rhs: &[Complex<Self>],
            ) -> Option<Vec<Complex<Self>>> {
                if rhs.len() != n {
                    return None;
                }
                let triplets: Vec<_> = entries
                    .iter()
                    .map(|&(r, c, v)| Triplet::new(r, c, v))
                    .collect();
                let mat =
                    SparseColMat::<usize, Complex<$t>>::try_new_from_triplets(n, n, &triplets)
                        .ok()?;
                let lu = mat.sp_lu().ok()?;
                let b = Mat::<Complex<$t>>::from_fn(n, 1, |i, _| rhs[i]);
                let x = lu.solve(&b);
                let out: Vec<_> = (0..n).map(|i| x[(i, 0)]).collect();
                out.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(out)
            }

            fn hermitian_eigenvalues(dim: usize, data: &[Complex<Self>]) -> Option<Vec<Self>> {
                if data.len() != dim * dim {
                    return None;
                }
                let mat = Mat::<Complex<$t>>::from_fn(dim, dim, |i, j| data[i + dim * j]);
                mat.self_adjoint_eigenvalues(Side::Lower).ok()
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Principal complex square root: nonnegative real part, and a
/// nonnegative imaginary part when the real part vanishes.
pub fn principal_sqrt<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = z.sqrt();
    if r.re < T::zero() || (r.re == T::zero() && r.im < T::zero()) {
        -r
    } else {
        r
    }
}

/// Argument of `z` reduced to `[0, 2π)`.
pub fn arg_positive<T: Real>(z: Complex<T>) -> T {
    wrap_phase(z.arg())
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_phase<T: Real>(theta: T) -> T {
    let tau = T::TAU();
    let r = theta % tau;
    let r = if r < T::zero() { r + tau } else { r };
    // `r + tau` can round up to exactly tau for tiny negative inputs.
    if r >= tau {
        T::zero()
    } else {
        r
    }
}

/// `e^{iθ}` for a real angle.
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}
