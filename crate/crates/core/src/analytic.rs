//! Closed-form weak-drive results for the reduced optical model.
//!
//! With the mechanics adiabatically eliminated the cavity sees a Kerr-like
//! shift g²/ωm per photon pair. Truncating the photon ladder at three
//! excitations and solving the amplitude equations to leading order in the
//! drive gives the amplitudes C₀..C₃ below; everything else in this module
//! (correlations, optimal pumps) is built from them.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::scalar::{arg_positive, cis, principal_sqrt, Real};

/// Complex detuning-decay factor `Mₙ = 2n g²/ωm − 2Δc + iκ`.
pub fn m_n<T: Real>(params: &SystemParams<T>, n: usize) -> Complex<T> {
    let two = T::lit(2.0);
    Complex::new(
        two * T::from_count(n) * params.kerr() - two * params.delta_c,
        params.kappa,
    )
}

/// Bare level `n Δc − n² g²/ωm` of the reduced cavity Hamiltonian.
pub fn spectrum_level<T: Real>(params: &SystemParams<T>, n: usize) -> T {
    let n = T::from_count(n);
    n * params.delta_c - n * n * params.kerr()
}

/// Leading-order steady-state amplitudes with the vacuum amplitude pinned to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PerturbativeAmplitudes<T> {
    pub c0: Complex<T>,
    pub c1: Complex<T>,
    pub c2: Complex<T>,
    pub c3: Complex<T>,
}

impl<T: Real> PerturbativeAmplitudes<T> {
    pub fn to_array(&self) -> [Complex<T>; 4] {
        [self.c0, self.c1, self.c2, self.c3]
    }

    /// Photon-number probabilities `|Cₙ|² / Σ|Cₘ|²`.
    pub fn distribution(&self) -> Vec<T> {
        let w: Vec<T> = self.to_array().iter().map(|c| c.norm_sqr()).collect();
        let total = w.iter().fold(T::zero(), |a, &b| a + b);
        w.into_iter().map(|x| x / total).collect()
    }
}

/// Parametric pump `G e^{iθ}` as a complex number.
pub fn pump<T: Real>(params: &SystemParams<T>) -> Complex<T> {
    cis(params.theta) * params.gain
}

pub fn amplitudes<T: Real>(params: &SystemParams<T>) -> PerturbativeAmplitudes<T> {
    let e = Complex::from(params.drive);
    let z = pump(params);
    let two = T::lit(2.0);
    let sqrt2 = two.sqrt();
    let sqrt3 = T::lit(3.0).sqrt();
    let (m1, m2, m3) = (m_n(params, 1), m_n(params, 2), m_n(params, 3));
    let e2 = e * e;

    let c1 = e * two / m1;
    let c2 = (e2 * two + z * m1) * sqrt2 / (m1 * m2);
    let inner = z * (z * T::lit(4.0) - Complex::from(two * params.kerr()) + m2 * T::lit(3.0));
    let c3 = e * (e2 * two + inner) * (two * sqrt2) / (m1 * m2 * m3 * sqrt3);
    PerturbativeAmplitudes {
        c0: Complex::from(T::one()),
        c1,
        c2,
        c3,
    }
}

fn require_drive<T: Real>(params: &SystemParams<T>) -> Result<()> {
    if params.drive == T::zero() {
        Err(Error::ZeroDrive)
    } else {
        Ok(())
    }
}

/// Equal-time second-order correlation from the truncated amplitudes,
/// `(2|C₂|² + 6|C₃|²) / |C₁|⁴`. The three-photon term is kept on purpose:
/// it is what reveals incomplete suppression of higher excitations.
pub fn g2_analytic<T: Real>(params: &SystemParams<T>) -> Result<T> {
    require_drive(params)?;
    let c = amplitudes(params);
    let n1 = c.c1.norm_sqr();
    Ok((T::lit(2.0) * c.c2.norm_sqr() + T::lit(6.0) * c.c3.norm_sqr()) / (n1 * n1))
}

/// Equal-time third-order correlation `6|C₃|² / |C₁|⁶`.
pub fn g3_analytic<T: Real>(params: &SystemParams<T>) -> Result<T> {
    require_drive(params)?;
    let c = amplitudes(params);
    let n1 = c.c1.norm_sqr();
    Ok(T::lit(6.0) * c.c3.norm_sqr() / (n1 * n1 * n1))
}

/// Which optimum an [`OptimalPump`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpBranch {
    OnePhoton,
    TwoPhotonPlus,
    TwoPhotonMinus,
}

/// Optimal parametric pump in polar form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OptimalPump<T> {
    pub gain: T,
    /// In `[0, 2π)`.
    pub theta: T,
    pub branch: PumpBranch,
}

impl<T: Real> OptimalPump<T> {
    fn from_complex(z: Complex<T>, branch: PumpBranch) -> Self {
        Self {
            gain: z.norm(),
            theta: arg_positive(z),
            branch,
        }
    }

    /// `gain · e^{iθ}`.
    pub fn complex(&self) -> Complex<T> {
        cis(self.theta) * self.gain
    }

    /// Copy of `params` with this pump installed.
    pub fn apply(&self, params: &SystemParams<T>) -> SystemParams<T> {
        params.with_pump(self.gain, self.theta)
    }
}

/// Pump that cancels the two-photon amplitude: `G e^{iθ} = −2E²/M₁`.
pub fn optimal_1pb<T: Real>(params: &SystemParams<T>) -> Result<OptimalPump<T>> {
    require_drive(params)?;
    let e2 = params.drive * params.drive;
    let z = -Complex::from(T::lit(2.0) * e2) / m_n(params, 1);
    Ok(OptimalPump::from_complex(z, PumpBranch::OnePhoton))
}

/// `K = g²/(4ωm) − 3M₂/8`.
pub fn k_factor<T: Real>(params: &SystemParams<T>) -> Complex<T> {
    Complex::from(params.kerr() / T::lit(4.0)) - m_n(params, 2) * T::lit(3.0 / 8.0)
}

/// Detuning separating the two branches of the two-photon optimum, 5g²/(3ωm).
pub fn two_photon_threshold<T: Real>(params: &SystemParams<T>) -> T {
    T::lit(5.0) * params.kerr() / T::lit(3.0)
}

/// Both roots `K ± √(K² − E²/2)` of the quadratic `z² − 2Kz + E²/2 = 0`
/// whose solutions null C₃. Returned as `(plus, minus)`.
pub fn two_photon_roots<T: Real>(params: &SystemParams<T>) -> (Complex<T>, Complex<T>) {
    let k = k_factor(params);
    let e2 = params.drive * params.drive;
    let s = principal_sqrt(k * k - Complex::from(e2 / T::lit(2.0)));
    (k + s, k - s)
}

/// `z² − 2Kz + E²/2`; zero for every pump that nulls C₃.
pub fn two_photon_residual<T: Real>(params: &SystemParams<T>, z: Complex<T>) -> Complex<T> {
    let e2 = params.drive * params.drive;
    z * z - k_factor(params) * z * T::lit(2.0) + Complex::from(e2 / T::lit(2.0))
}

/// Pump that nulls the three-photon amplitude. The `+` root is used up to
/// and including the threshold detuning 5g²/(3ωm), the `−` root above it.
pub fn optimal_2pb<T: Real>(params: &SystemParams<T>) -> Result<OptimalPump<T>> {
    require_drive(params)?;
    let (plus, minus) = two_photon_roots(params);
    if params.delta_c <= two_photon_threshold(params) {
        Ok(OptimalPump::from_complex(plus, PumpBranch::TwoPhotonPlus))
    } else {
        Ok(OptimalPump::from_complex(minus, PumpBranch::TwoPhotonMinus))
    }
}

/// Relative deviation `(Pₙ − 𝒫ₙ)/𝒫ₙ` of a photon distribution from the
/// Poisson distribution `𝒫ₙ = e^{−n̄} n̄ⁿ/n!` with the given mean.
pub fn poisson_deviation<T: Real>(distribution: &[T], mean: T) -> Result<Vec<T>> {
    if mean <= T::zero() {
        return Err(Error::ZeroMean);
    }
    let mut poisson = (-mean).exp();
    let mut out = Vec::with_capacity(distribution.len());
    for (n, &p) in distribution.iter().enumerate() {
        if n > 0 {
            poisson = poisson * mean / T::from_count(n);
        }
        out.push((p - poisson) / poisson);
    }
    Ok(out)
}
