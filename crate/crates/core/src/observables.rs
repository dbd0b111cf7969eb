//! Photon statistics from any of the three solution paths.

use serde::{Deserialize, Serialize};

use crate::amplitude::steady_amplitudes;
use crate::analytic::{amplitudes, g2_analytic, g3_analytic, poisson_deviation};
use crate::error::{Error, Result};
use crate::fock::{ModeOperators, SparseOperator};
use crate::liouvillian::{build_liouvillian, steady_state, DensityMatrix, ZERO_MEAN_PHOTON};
use crate::params::{SystemParams, Truncation};
use crate::scalar::Real;

/// Which solution path produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Closed-form perturbative amplitudes C₀..C₃.
    Analytic,
    /// Exact steady state of the truncated amplitude equations.
    #[serde(rename = "amplitude")]
    AmplitudeExact,
    /// Steady state of the full master equation.
    Lindblad,
}

impl Source {
    pub fn name(&self) -> &'static str {
        match self {
            Source::Analytic => "analytic",
            Source::AmplitudeExact => "amplitude",
            Source::Lindblad => "lindblad",
        }
    }
}

impl std::str::FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Source::Analytic),
            "amplitude" => Ok(Source::AmplitudeExact),
            "lindblad" => Ok(Source::Lindblad),
            other => Err(Error::InvalidSweep(format!("unknown source `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ObservableReport<T> {
    pub g2_zero: T,
    pub g3_zero: T,
    pub mean_photon: T,
    /// Probabilities for photon numbers `0..=N`.
    pub photon_distribution: Vec<T>,
    pub p1: T,
    /// `(Pₙ − 𝒫ₙ)/𝒫ₙ` against the Poisson law of the same mean.
    pub poisson_deviations: Vec<T>,
    /// `P₁ κ`, in the rate units of the parameters.
    pub single_photon_rate: T,
    /// Mean phonon number; only the master-equation path has one.
    pub mean_phonon: Option<T>,
    pub source: Source,
}

impl<T: Real> ObservableReport<T> {
    /// `g²(0) < 1`.
    pub fn single_photon_blockade(&self) -> bool {
        self.g2_zero < T::one()
    }

    /// `g²(0) ≥ 1` and `g³(0) < 1`.
    pub fn two_photon_blockade(&self) -> bool {
        self.g2_zero >= T::one() && self.g3_zero < T::one()
    }
}

fn number_power<T: Real>(a: &SparseOperator<T>, k: usize) -> SparseOperator<T> {
    let ad = a.adjoint();
    let mut left = SparseOperator::identity(a.dim());
    let mut right = SparseOperator::identity(a.dim());
    for _ in 0..k {
        left = left.matmul(&ad);
        right = right.matmul(a);
    }
    left.matmul(&right)
}

fn correlation_numeric<T: Real>(rho: &DensityMatrix<T>, trunc: &Truncation, order: usize) -> Result<T> {
    if rho.dim() != trunc.dim() {
        return Err(Error::DimensionMismatch {
            expected: trunc.dim(),
            got: rho.dim(),
        });
    }
    let a = ModeOperators::new(trunc).a;
    let mean = rho.expectation(&number_power(&a, 1)).re;
    if !(mean >= T::lit(ZERO_MEAN_PHOTON)) {
        return Err(Error::ZeroMeanPhoton(mean.to_f64().unwrap_or(0.0)));
    }
    Ok(rho.expectation(&number_power(&a, order)).re / mean.powi(order as i32))
}

/// `Tr[a†a†aa ρ] / Tr[a†a ρ]²` with the cavity operators embedded in the
/// bipartite space.
pub fn g2_numeric<T: Real>(rho: &DensityMatrix<T>, trunc: &Truncation) -> Result<T> {
    correlation_numeric(rho, trunc, 2)
}

/// `Tr[a†³a³ ρ] / Tr[a†a ρ]³`.
pub fn g3_numeric<T: Real>(rho: &DensityMatrix<T>, trunc: &Truncation) -> Result<T> {
    correlation_numeric(rho, trunc, 3)
}

pub fn photon_distribution<T: Real>(rho: &DensityMatrix<T>, trunc: &Truncation) -> Vec<T> {
    rho.photon_distribution(trunc)
}

/// `Tr[a†a ρ]`.
pub fn mean_photon<T: Real>(rho: &DensityMatrix<T>, trunc: &Truncation) -> T {
    rho.expectation(&number_power(&ModeOperators::new(trunc).a, 1)).re
}

/// `Tr[b†b ρ]`, a truncation diagnostic.
pub fn mean_phonon<T: Real>(rho: &DensityMatrix<T>, trunc: &Truncation) -> T {
    rho.expectation(&number_power(&ModeOperators::new(trunc).b, 1)).re
}

pub fn mean_of<T: Real>(distribution: &[T]) -> T {
    distribution
        .iter()
        .enumerate()
        .fold(T::zero(), |s, (n, &p)| s + T::from_count(n) * p)
}

/// Normalized factorial moment `Σ n(n−1)…(n−k+1) Pₙ / n̄ᵏ` of a photon
/// distribution.
pub fn correlation_from_distribution<T: Real>(distribution: &[T], order: usize) -> Result<T> {
    let mean = mean_of(distribution);
    if !(mean >= T::lit(ZERO_MEAN_PHOTON)) {
        return Err(Error::ZeroMeanPhoton(mean.to_f64().unwrap_or(0.0)));
    }
    let moment = distribution.iter().enumerate().fold(T::zero(), |s, (n, &p)| {
        let falling = (0..order).fold(T::one(), |f, j| {
            f * (T::from_count(n) - T::from_count(j))
        });
        s + falling * p
    });
    Ok(moment / mean.powi(order as i32))
}

fn assemble<T: Real>(
    params: &SystemParams<T>,
    g2_zero: T,
    g3_zero: T,
    mean_photon: T,
    photon_distribution: Vec<T>,
    mean_phonon: Option<T>,
    source: Source,
) -> Result<ObservableReport<T>> {
    let poisson_deviations = poisson_deviation(&photon_distribution, mean_photon)?;
    let p1 = photon_distribution[1];
    Ok(ObservableReport {
        g2_zero,
        g3_zero,
        mean_photon,
        p1,
        single_photon_rate: p1 * params.kappa,
        photon_distribution,
        poisson_deviations,
        mean_phonon,
        source,
    })
}

/// Report for an already computed master-equation steady state.
pub fn report_from_state<T: Real>(
    params: &SystemParams<T>,
    trunc: &Truncation,
    rho: &DensityMatrix<T>,
) -> Result<ObservableReport<T>> {
    let g2 = g2_numeric(rho, trunc)?;
    let g3 = g3_numeric(rho, trunc)?;
    let mean = mean_photon(rho, trunc);
    let phonon = mean_phonon(rho, trunc);
    assemble(
        params,
        g2,
        g3,
        mean,
        photon_distribution(rho, trunc),
        Some(phonon),
        Source::Lindblad,
    )
}

/// Runs the selected solution path and collects every observable. For the
/// analytic path the distribution covers photon numbers 0..=3 only.
pub fn report<T: Real>(
    params: &SystemParams<T>,
    trunc: &Truncation,
    source: Source,
) -> Result<ObservableReport<T>> {
    match source {
        Source::Analytic => {
            let g2 = g2_analytic(params)?;
            let g3 = g3_analytic(params)?;
            let dist = amplitudes(params).distribution();
            let mean = mean_of(&dist);
            assemble(params, g2, g3, mean, dist, None, source)
        }
        Source::AmplitudeExact => {
            if params.drive == T::zero() && params.gain == T::zero() {
                return Err(Error::ZeroDrive);
            }
            let dist = steady_amplitudes(params, trunc)?.probabilities();
            let g2 = correlation_from_distribution(&dist, 2)?;
            let g3 = correlation_from_distribution(&dist, 3)?;
            let mean = mean_of(&dist);
            assemble(params, g2, g3, mean, dist, None, source)
        }
        Source::Lindblad => {
            let rho = steady_state(&build_liouvillian(params, trunc))?;
            report_from_state(params, trunc, &rho)
        }
    }
}
