//! Exact-within-truncation treatment of the photon amplitude equations
//!
//! ```text
//! i dCₙ/dt = −n Mₙ Cₙ / 2 + E(√n Cₙ₋₁ + √(n+1) Cₙ₊₁)
//!            + G[√(n(n−1)) e^{iθ} Cₙ₋₂ + √((n+1)(n+2)) e^{−iθ} Cₙ₊₂]
//! ```
//!
//! for the reduced (mechanics-free) cavity under non-Hermitian evolution.
//! These give an independent check on the closed forms in
//! [`crate::analytic`] and on the effective Hamiltonian built in
//! [`crate::fock`].

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::analytic::{m_n, pump};
use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::params::{SystemParams, Truncation};
use crate::scalar::Real;

/// Default integration step, in units of 1/κ.
pub const DEFAULT_AMPLITUDE_STEP: f64 = 1e-3;

/// Photon amplitudes `C₀..C_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AmplitudeVector<T> {
    pub values: Vec<Complex<T>>,
}

impl<T: Real> AmplitudeVector<T> {
    pub fn new(values: Vec<Complex<T>>) -> Self {
        Self { values }
    }

    /// Number state `|n⟩` in a space of `len` amplitudes.
    pub fn fock(len: usize, n: usize) -> Self {
        let mut values = vec![Complex::default(); len];
        values[n] = Complex::from(T::one());
        Self { values }
    }

    pub fn vacuum(len: usize) -> Self {
        Self::fock(len, 0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |s, c| s + c.norm_sqr())
            .sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            values: self.values.iter().map(|c| c / n).collect(),
        }
    }

    /// Photon-number distribution of the normalized state.
    pub fn probabilities(&self) -> Vec<T> {
        let total = self.norm().powi(2);
        self.values.iter().map(|c| c.norm_sqr() / total).collect()
    }

    fn axpy(&self, s: T, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b * s)
                .collect(),
        }
    }
}

/// Right-hand side of the amplitude equations: returns `dC/dt`.
/// Couplings to indices outside the truncation are dropped.
pub fn amplitude_rhs<T: Real>(
    params: &SystemParams<T>,
    state: &AmplitudeVector<T>,
) -> Result<AmplitudeVector<T>> {
    let len = state.len();
    if len < 4 {
        return Err(Error::LengthTooSmall(len));
    }
    let c = &state.values;
    let e = params.drive;
    let z = pump(params);
    let half = T::lit(0.5);
    let minus_i = Complex::new(T::zero(), -T::one());
    let values = (0..len)
        .map(|n| {
            let nf = T::from_count(n);
            let mut acc = -m_n(params, n) * c[n] * nf * half;
            if n >= 1 {
                acc += c[n - 1] * e * nf.sqrt();
            }
            if n + 1 < len {
                acc += c[n + 1] * e * (nf + T::one()).sqrt();
            }
            if n >= 2 {
                acc += z * c[n - 2] * (nf * (nf - T::one())).sqrt();
            }
            if n + 2 < len {
                acc += z.conj() * c[n + 2] * ((nf + T::one()) * (nf + T::lit(2.0))).sqrt();
            }
            acc * minus_i
        })
        .collect();
    Ok(AmplitudeVector { values })
}

/// Driven steady state with `C₀` pinned to 1: the stationarity conditions
/// for `n = 1..=N` are solved for `C₁..C_N` and the `n = 0` equation is
/// dropped. The result is not normalized; use
/// [`AmplitudeVector::probabilities`] for readouts.
pub fn steady_amplitudes<T: Real>(
    params: &SystemParams<T>,
    trunc: &Truncation,
) -> Result<AmplitudeVector<T>> {
    let len = trunc.photon_dim();
    let n_unknown = len - 1;
    let e = Complex::from(params.drive);
    let z = pump(params);
    let half = T::lit(0.5);

    // Row r (0-based) holds the equation for photon number n = r + 1;
    // column k holds the coefficient of C_{k+1}.
    let mut a = vec![Complex::default(); n_unknown * n_unknown];
    let mut b = vec![Complex::default(); n_unknown];
    let mut set = |n: usize, m: usize, v: Complex<T>| {
        if m == 0 {
            b[n - 1] -= v;
        } else if m < len {
            a[(n - 1) * n_unknown + (m - 1)] += v;
        }
    };
    for n in 1..len {
        let nf = T::from_count(n);
        set(n, n, -m_n(params, n) * nf * half);
        set(n, n - 1, e * nf.sqrt());
        set(n, n + 1, e * (nf + T::one()).sqrt());
        if n >= 2 {
            set(n, n - 2, z * (nf * (nf - T::one())).sqrt());
        }
        set(n, n + 2, z.conj() * ((nf + T::one()) * (nf + T::lit(2.0))).sqrt());
    }
    let x = solve_dense(n_unknown, a, b).ok_or(Error::SingularSystem)?;
    let mut values = Vec::with_capacity(len);
    values.push(Complex::from(T::one()));
    values.extend(x);
    Ok(AmplitudeVector { values })
}

/// How the vacuum amplitude is treated during time evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VacuumAnchor {
    /// All amplitudes evolve, including `C₀`.
    Free,
    /// `C₀` is held fixed, matching the convention of [`steady_amplitudes`].
    Pinned,
}

/// Fixed-step classical RK4 integration of the amplitude equations.
/// The interval is split into `ceil(t_final/dt)` equal steps.
pub fn evolve_amplitudes<T: Real>(
    params: &SystemParams<T>,
    initial: &AmplitudeVector<T>,
    t_final: T,
    dt: T,
    anchor: VacuumAnchor,
) -> Result<AmplitudeVector<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::StepInvalid(format!("dt must be positive, got {dt}")));
    }
    if !(t_final >= T::zero()) || !t_final.is_finite() {
        return Err(Error::StepInvalid(format!(
            "t_final must be nonnegative, got {t_final}"
        )));
    }
    if initial.len() < 4 {
        return Err(Error::LengthTooSmall(initial.len()));
    }
    let steps = (t_final / dt).ceil().to_usize().unwrap_or(0);
    if steps == 0 {
        return Ok(initial.clone());
    }
    let h = t_final / T::from_count(steps);
    let rhs = |s: &AmplitudeVector<T>| -> Result<AmplitudeVector<T>> {
        let mut d = amplitude_rhs(params, s)?;
        if anchor == VacuumAnchor::Pinned {
            d.values[0] = Complex::default();
        }
        Ok(d)
    };
    let half = h / T::lit(2.0);
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    let mut y = initial.clone();
    for _ in 0..steps {
        let k1 = rhs(&y)?;
        let k2 = rhs(&y.axpy(half, &k1))?;
        let k3 = rhs(&y.axpy(half, &k2))?;
        let k4 = rhs(&y.axpy(h, &k3))?;
        for i in 0..y.len() {
            y.values[i] +=
                (k1.values[i] + k2.values[i] * two + k3.values[i] * two + k4.values[i]) * sixth;
        }
    }
    Ok(y)
}
