//! Physical parameters and Fock-space truncation.
//!
//! Every rate-valued quantity is expressed in units of the cavity decay
//! rate κ. [`SystemParams::normalized`] rescales an arbitrary parameter set
//! into that canonical form (κ = 1). The drive amplitude `drive` (E) and the
//! parametric gain `gain` (G) are nonnegative magnitudes; the only phase
//! kept is the relative phase `theta` between the two pumps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{wrap_phase, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct SystemParams<T> {
    /// Cavity detuning Δc = ωc − ωl.
    pub delta_c: T,
    /// Mechanical frequency ωm.
    pub omega_m: T,
    /// Single-photon optomechanical coupling g.
    pub g: T,
    /// Parametric gain G ≥ 0.
    pub gain: T,
    /// Relative pump phase θ in `[0, 2π)`.
    pub theta: T,
    /// Laser drive amplitude E ≥ 0.
    pub drive: T,
    /// Cavity decay κ > 0.
    pub kappa: T,
    /// Mechanical damping γm ≥ 0.
    pub gamma_m: T,
}

impl<T: Real> SystemParams<T> {
    /// Parameter set used throughout the single-photon blockade study:
    /// g/ωm = 0.05, ωm/κ = 100, γm/ωm = 1e-6, E/κ = 0.05. Detuning and pump
    /// are left at zero.
    pub fn default_1pb() -> Self {
        Self {
            delta_c: T::zero(),
            omega_m: T::lit(100.0),
            g: T::lit(5.0),
            gain: T::zero(),
            theta: T::zero(),
            drive: T::lit(0.05),
            kappa: T::one(),
            gamma_m: T::lit(1e-4),
        }
    }

    /// As [`Self::default_1pb`] with g/ωm = 0.1, so g²/ωm = κ.
    pub fn default_2pb() -> Self {
        Self {
            g: T::lit(10.0),
            ..Self::default_1pb()
        }
    }

    /// Kerr-like frequency shift g²/ωm.
    pub fn kerr(&self) -> T {
        self.g * self.g / self.omega_m
    }

    /// Returns a copy with the parametric pump set, phase wrapped into `[0, 2π)`.
    pub fn with_pump(mut self, gain: T, theta: T) -> Self {
        self.gain = gain;
        self.theta = wrap_phase(theta);
        self
    }

    pub fn with_detuning(mut self, delta_c: T) -> Self {
        self.delta_c = delta_c;
        self
    }

    /// Canonical form: all rates divided by κ (so κ = 1) and θ wrapped.
    /// Idempotent. Requires κ > 0 to be meaningful; call [`validate`] first.
    pub fn normalized(&self) -> Self {
        let k = self.kappa;
        Self {
            delta_c: self.delta_c / k,
            omega_m: self.omega_m / k,
            g: self.g / k,
            gain: self.gain / k,
            theta: wrap_phase(self.theta),
            drive: self.drive / k,
            kappa: T::one(),
            gamma_m: self.gamma_m / k,
        }
    }

    fn fields(&self) -> [(&'static str, T); 8] {
        [
            ("delta_c", self.delta_c),
            ("omega_m", self.omega_m),
            ("g", self.g),
            ("gain", self.gain),
            ("theta", self.theta),
            ("drive", self.drive),
            ("kappa", self.kappa),
            ("gamma_m", self.gamma_m),
        ]
    }
}

/// Soft diagnostic: the perturbative formulas lose accuracy outside the
/// weak-drive, weak-coupling regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeWarning {
    /// E/κ above 0.1.
    StrongDrive,
    /// G/κ above 0.1.
    StrongGain,
    /// g/ωm above 0.2.
    StrongCoupling,
}

pub const WEAK_DRIVE_LIMIT: f64 = 0.1;
pub const WEAK_COUPLING_LIMIT: f64 = 0.2;

/// Output of [`validate`]: the untouched parameters plus any regime warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated<T> {
    pub params: SystemParams<T>,
    pub warnings: Vec<RegimeWarning>,
}

/// Checks hard constraints and collects regime warnings. Numeric values
/// are passed through unchanged.
pub fn validate<T: Real>(params: SystemParams<T>) -> Result<Validated<T>> {
    for (name, v) in params.fields() {
        if !v.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
    if params.kappa <= T::zero() {
        return Err(Error::NonPositiveKappa(f(params.kappa)));
    }
    let nonneg = [
        ("gain", params.gain),
        ("drive", params.drive),
        ("gamma_m", params.gamma_m),
    ];
    for (name, v) in nonneg {
        if v < T::zero() {
            return Err(Error::OutOfRange {
                name,
                requirement: "nonnegative",
                value: f(v),
            });
        }
    }
    if params.omega_m <= T::zero() {
        return Err(Error::OutOfRange {
            name: "omega_m",
            requirement: "positive",
            value: f(params.omega_m),
        });
    }

    let mut warnings = Vec::new();
    let drive_limit = T::lit(WEAK_DRIVE_LIMIT);
    if params.drive / params.kappa > drive_limit {
        warnings.push(RegimeWarning::StrongDrive);
    }
    if params.gain / params.kappa > drive_limit {
        warnings.push(RegimeWarning::StrongGain);
    }
    if params.g / params.omega_m > T::lit(WEAK_COUPLING_LIMIT) {
        warnings.push(RegimeWarning::StrongCoupling);
    }
    Ok(Validated { params, warnings })
}

/// Fock-space cutoffs. Photon numbers run over `0..=n_photon_max`,
/// phonon numbers over `0..=n_phonon_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TruncationRepr", into = "TruncationRepr")]
pub struct Truncation {
    n_photon_max: usize,
    n_phonon_max: usize,
}

impl Truncation {
    pub fn new(n_photon_max: usize, n_phonon_max: usize) -> Result<Self> {
        if n_photon_max < 3 {
            return Err(Error::InvalidTruncation(format!(
                "n_photon_max must be at least 3, got {n_photon_max}"
            )));
        }
        Ok(Self {
            n_photon_max,
            n_phonon_max,
        })
    }

    pub fn n_photon_max(&self) -> usize {
        self.n_photon_max
    }

    pub fn n_phonon_max(&self) -> usize {
        self.n_phonon_max
    }

    pub fn photon_dim(&self) -> usize {
        self.n_photon_max + 1
    }

    pub fn phonon_dim(&self) -> usize {
        self.n_phonon_max + 1
    }

    /// Bipartite dimension (cavity ⊗ mechanics).
    pub fn dim(&self) -> usize {
        self.photon_dim() * self.phonon_dim()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruncationRepr {
    n_photon_max: usize,
    n_phonon_max: usize,
}

impl TryFrom<TruncationRepr> for Truncation {
    type Error = Error;

    fn try_from(r: TruncationRepr) -> Result<Self> {
        Self::new(r.n_photon_max, r.n_phonon_max)
    }
}

impl From<Truncation> for TruncationRepr {
    fn from(t: Truncation) -> Self {
        Self {
            n_photon_max: t.n_photon_max,
            n_phonon_max: t.n_phonon_max,
        }
    }
}

impl Default for Truncation {
    /// Nₐ = 8, N_b = 6.
    fn default() -> Self {
        Self {
            n_photon_max: 8,
            n_phonon_max: 6,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = SystemParams<f64>;

    #[test]
    fn default_1pb_matches_reported_ratios() {
        let p = P::default_1pb();
        assert_eq!(p.kappa, 1.0);
        assert!((p.g / p.omega_m - 0.05).abs() < 1e-15);
        assert!((p.drive / p.kappa - 0.05).abs() < 1e-15);
        assert!((p.omega_m / p.kappa - 100.0).abs() < 1e-12);
        // γm = 1e-6 · ωm = 1e-4 κ
        assert!((p.gamma_m - 1e-4).abs() < 1e-18);
        assert_eq!((p.delta_c, p.gain, p.theta), (0.0, 0.0, 0.0));
    }

    #[test]
    fn default_2pb_has_unit_kerr_shift() {
        let p = P::default_2pb();
        assert!((p.kerr() - 1.0).abs() < 1e-15);
        assert_eq!(p.drive, 0.05);
        assert_eq!(p.kappa, 1.0);
    }

    #[test]
    fn validate_defaults_without_warnings() {
        let v = validate(P::default_1pb()).unwrap();
        assert!(v.warnings.is_empty());
        assert_eq!(v.params, P::default_1pb());
    }

    #[test]
    fn validate_flags_strong_drive() {
        let p = P {
            drive: 0.5,
            ..P::default_1pb()
        };
        let v = validate(p).unwrap();
        assert_eq!(v.warnings, vec![RegimeWarning::StrongDrive]);
        assert_eq!(v.params, p);
    }

    #[test]
    fn validate_flags_gain_and_coupling() {
        let p = P {
            gain: 0.2,
            g: 30.0,
            ..P::default_1pb()
        };
        let v = validate(p).unwrap();
        assert_eq!(
            v.warnings,
            vec![RegimeWarning::StrongGain, RegimeWarning::StrongCoupling]
        );
    }

    #[test]
    fn validate_rejects_zero_kappa() {
        let p = P {
            kappa: 0.0,
            ..P::default_1pb()
        };
        assert!(matches!(validate(p), Err(Error::NonPositiveKappa(_))));
    }

    #[test]
    fn validate_rejects_non_finite() {
        let p = P {
            g: f64::NAN,
            ..P::default_1pb()
        };
        assert!(matches!(validate(p), Err(Error::NonFinite("g"))));
    }

    #[test]
    fn normalize_scales_rates() {
        let p = P {
            kappa: 2.0,
            delta_c: 1.0,
            theta: 7.0,
            ..P::default_1pb()
        };
        let n = p.normalized();
        assert_eq!(n.kappa, 1.0);
        assert_eq!(n.delta_c, 0.5);
        assert_eq!(n.omega_m, 50.0);
        assert!((n.theta - (7.0 - std::f64::consts::TAU)).abs() < 1e-15);
        assert_eq!(n.normalized(), n);
    }

    #[test]
    fn json_roundtrip_and_unknown_keys() {
        let p = P::default_2pb().with_pump(0.01, 1.0);
        let s = serde_json::to_string(&p).unwrap();
        let back: P = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let bad = s.replacen('{', "{\"phi\":1.0,", 1);
        assert!(serde_json::from_str::<P>(&bad).is_err());
    }

    #[test]
    fn truncation_limits() {
        assert!(Truncation::new(2, 0).is_err());
        let t = Truncation::new(3, 0).unwrap();
        assert_eq!(t.dim(), 4);
        assert_eq!(Truncation::default().dim(), 63);
        assert!(serde_json::from_str::<Truncation>(r#"{"n_photon_max":2,"n_phonon_max":1}"#).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let p = SystemParams::<f32>::default_2pb();
        assert!((p.kerr() - 1.0).abs() < 1e-6);
    }
}
