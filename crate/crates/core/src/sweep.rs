//! Parameter sweeps, figure presets and truncation convergence studies.
//!
//! This layer works in `f64` throughout; the numerical core underneath is
//! generic.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitude::steady_amplitudes;
use crate::analytic::{amplitudes, g2_analytic, g3_analytic, optimal_1pb, optimal_2pb, poisson_deviation};
use crate::error::{Error, Result};
use crate::liouvillian::{build_liouvillian, g2_of_tau, steady_state, DensityMatrix, Liouvillian};
use crate::observables::{
    correlation_from_distribution, g2_numeric, g3_numeric, mean_of, mean_phonon, mean_photon,
    photon_distribution, Source,
};
use crate::params::{validate, RegimeWarning, SystemParams, Truncation};

type Params = SystemParams<f64>;

/// Relative change below which a convergence ladder counts as settled.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-3;

/// Values below this are treated as zero when forming relative deltas.
pub const NUMERICAL_ZERO: f64 = 1e-14;

/// Names accepted on a sweep axis or in a series override.
pub const PARAMETER_NAMES: [&str; 9] = [
    "delta_c", "omega_m", "g", "gain", "theta", "drive", "kappa", "gamma_m", "tau",
];

fn set_parameter(p: &mut Params, name: &str, value: f64) -> Result<()> {
    match name {
        "delta_c" => p.delta_c = value,
        "omega_m" => p.omega_m = value,
        "g" => p.g = value,
        "gain" => p.gain = value,
        "theta" => *p = p.with_pump(p.gain, value),
        "drive" => p.drive = value,
        "kappa" => p.kappa = value,
        "gamma_m" => p.gamma_m = value,
        other => return Err(Error::UnknownParameter(other.to_string())),
    }
    Ok(())
}

fn default_true() -> bool {
    true
}

/// A uniform grid over one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub parameter: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    /// Whether `max` itself is on the grid. Periodic axes such as `theta`
    /// leave it off.
    #[serde(default = "default_true")]
    pub endpoint: bool,
}

impl Axis {
    pub fn new(parameter: &str, min: f64, max: f64, points: usize) -> Self {
        Self {
            parameter: parameter.to_string(),
            min,
            max,
            points,
            endpoint: true,
        }
    }

    pub fn periodic(parameter: &str, min: f64, max: f64, points: usize) -> Self {
        Self {
            endpoint: false,
            ..Self::new(parameter, min, max, points)
        }
    }

    fn check(&self) -> Result<()> {
        if !PARAMETER_NAMES.contains(&self.parameter.as_str()) {
            return Err(Error::UnknownParameter(self.parameter.clone()));
        }
        if self.points == 0 {
            return Err(Error::InvalidSweep(format!(
                "axis `{}` has no points",
                self.parameter
            )));
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::InvalidSweep(format!(
                "axis `{}` has a non-finite bound",
                self.parameter
            )));
        }
        if self.points > 1 && self.max <= self.min {
            return Err(Error::InvalidSweep(format!(
                "axis `{}` needs max > min",
                self.parameter
            )));
        }
        if self.parameter == "tau" && self.min < 0.0 {
            return Err(Error::InvalidSweep("tau must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let intervals = if self.endpoint {
            self.points - 1
        } else {
            self.points
        };
        let step = (self.max - self.min) / intervals as f64;
        (0..self.points)
            .map(|i| {
                if self.endpoint && i == self.points - 1 {
                    self.max
                } else {
                    self.min + step * i as f64
                }
            })
            .collect()
    }
}

impl FromStr for Axis {
    type Err = Error;

    /// Parses `name:min:max:points`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidSweep(format!("axis `{s}` is not name:min:max:points"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let min = parts[1].parse().map_err(|_| bad())?;
        let max = parts[2].parse().map_err(|_| bad())?;
        let points = parts[3].parse().map_err(|_| bad())?;
        let axis = if parts[0] == "theta" {
            Axis::periodic(parts[0], min, max, points)
        } else {
            Axis::new(parts[0], min, max, points)
        };
        axis.check()?;
        Ok(axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpMode {
    /// Use `gain` and `theta` as given.
    #[default]
    Fixed,
    /// Replace the pump by the single-photon blockade optimum.
    #[serde(rename = "optimal_1pb")]
    Optimal1Pb,
    /// Replace the pump by the two-photon blockade optimum.
    #[serde(rename = "optimal_2pb")]
    Optimal2Pb,
}

impl FromStr for PumpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(PumpMode::Fixed),
            "optimal_1pb" | "optimal1pb" => Ok(PumpMode::Optimal1Pb),
            "optimal_2pb" | "optimal2pb" => Ok(PumpMode::Optimal2Pb),
            other => Err(Error::InvalidSweep(format!("unknown pump mode `{other}`"))),
        }
    }
}

/// A scalar column a sweep can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    G2,
    G3,
    MeanPhoton,
    MeanPhonon,
    /// Probability of `n` photons.
    P(usize),
    PoissonDev(usize),
    /// Delayed correlation; needs a `tau` axis and the master equation.
    G2Tau,
    /// Pump actually applied at the point.
    Gain,
    Theta,
    /// Analytic optima at the point, regardless of the pump in use.
    Opt1Gain,
    Opt1Theta,
    Opt2Gain,
    Opt2Theta,
    /// 1 when `g²(0) < 1`, else 0.
    Blockade1,
    /// 1 when `g²(0) ≥ 1` and `g³(0) < 1`, else 0.
    Blockade2,
    /// `P₁ κ`.
    EmissionRate,
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fixed = match s {
            "g2" => Some(Observable::G2),
            "g3" => Some(Observable::G3),
            "mean_photon" => Some(Observable::MeanPhoton),
            "mean_phonon" => Some(Observable::MeanPhonon),
            "g2_tau" => Some(Observable::G2Tau),
            "gain" => Some(Observable::Gain),
            "theta" => Some(Observable::Theta),
            "opt1_gain" => Some(Observable::Opt1Gain),
            "opt1_theta" => Some(Observable::Opt1Theta),
            "opt2_gain" => Some(Observable::Opt2Gain),
            "opt2_theta" => Some(Observable::Opt2Theta),
            "blockade1" => Some(Observable::Blockade1),
            "blockade2" => Some(Observable::Blockade2),
            "emission_rate" => Some(Observable::EmissionRate),
            _ => None,
        };
        if let Some(o) = fixed {
            return Ok(o);
        }
        let index = |rest: &str| {
            (!rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) && (rest == "0" || !rest.starts_with('0')))
                .then(|| rest.parse().ok())
                .flatten()
        };
        if let Some(n) = s.strip_prefix("poisson_dev_").and_then(index) {
            return Ok(Observable::PoissonDev(n));
        }
        if let Some(n) = s.strip_prefix('p').and_then(index) {
            return Ok(Observable::P(n));
        }
        Err(Error::UnknownObservable(s.to_string()))
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::G2 => f.write_str("g2"),
            Observable::G3 => f.write_str("g3"),
            Observable::MeanPhoton => f.write_str("mean_photon"),
            Observable::MeanPhonon => f.write_str("mean_phonon"),
            Observable::P(n) => write!(f, "p{n}"),
            Observable::PoissonDev(n) => write!(f, "poisson_dev_{n}"),
            Observable::G2Tau => f.write_str("g2_tau"),
            Observable::Gain => f.write_str("gain"),
            Observable::Theta => f.write_str("theta"),
            Observable::Opt1Gain => f.write_str("opt1_gain"),
            Observable::Opt1Theta => f.write_str("opt1_theta"),
            Observable::Opt2Gain => f.write_str("opt2_gain"),
            Observable::Opt2Theta => f.write_str("opt2_theta"),
            Observable::Blockade1 => f.write_str("blockade1"),
            Observable::Blockade2 => f.write_str("blockade2"),
            Observable::EmissionRate => f.write_str("emission_rate"),
        }
    }
}

impl Observable {
    fn needs_state(&self) -> bool {
        !matches!(
            self,
            Observable::Gain
                | Observable::Theta
                | Observable::Opt1Gain
                | Observable::Opt1Theta
                | Observable::Opt2Gain
                | Observable::Opt2Theta
        )
    }
}

/// One curve of a sweep. Every field left out falls back to the spec.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Series {
    pub label: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_mode: Option<PumpMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_anchor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
}

impl Series {
    pub fn labelled(label: &str) -> Self {
        Self {
            label: label.to_string(),
            ..Self::default()
        }
    }

    pub fn set(mut self, name: &str, value: f64) -> Self {
        self.overrides.insert(name.to_string(), value);
        self
    }

    pub fn pump(mut self, mode: PumpMode) -> Self {
        self.pump_mode = Some(mode);
        self
    }

    pub fn anchor(mut self, delta_c: f64) -> Self {
        self.pump_anchor = Some(delta_c);
        self
    }

    pub fn source(mut self, source: Source) -> Self {
        self.source = Some(source);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    pub axis1: Axis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis2: Option<Axis>,
    #[serde(default)]
    pub pump_mode: PumpMode,
    /// Detuning at which an optimal pump is computed. Without it each grid
    /// point gets the optimum for its own detuning.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_anchor: Option<f64>,
    pub outputs: Vec<String>,
    pub source: Source,
    pub truncation: Truncation,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SweepSpec {
    pub fn new(name: &str, axis1: Axis, outputs: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            axis1,
            axis2: None,
            pump_mode: PumpMode::Fixed,
            pump_anchor: None,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            source: Source::Lindblad,
            truncation: Truncation::default(),
            series: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn axes(&self) -> Vec<&Axis> {
        std::iter::once(&self.axis1).chain(self.axis2.as_ref()).collect()
    }

    fn effective_series(&self) -> Vec<Series> {
        if self.series.is_empty() {
            vec![Series::default()]
        } else {
            self.series.clone()
        }
    }

    pub fn observables(&self) -> Result<Vec<Observable>> {
        self.outputs.iter().map(|s| s.parse()).collect()
    }

    /// Structural checks that do not need any solve.
    pub fn check(&self) -> Result<()> {
        if self.outputs.is_empty() {
            return Err(Error::InvalidSweep("no outputs requested".into()));
        }
        let observables = self.observables()?;
        let axes = self.axes();
        for axis in &axes {
            axis.check()?;
        }
        if axes.len() == 2 && axes[0].parameter == axes[1].parameter {
            return Err(Error::InvalidSweep("both axes sweep the same parameter".into()));
        }
        let has_tau = axes.iter().any(|a| a.parameter == "tau");
        for series in self.effective_series() {
            for name in series.overrides.keys() {
                if name == "tau" || !PARAMETER_NAMES.contains(&name.as_str()) {
                    return Err(Error::UnknownParameter(name.clone()));
                }
            }
            let mode = series.pump_mode.unwrap_or(self.pump_mode);
            if mode != PumpMode::Fixed {
                let pinned = axes
                    .iter()
                    .map(|a| a.parameter.as_str())
                    .chain(series.overrides.keys().map(String::as_str))
                    .find(|n| *n == "gain" || *n == "theta");
                if let Some(n) = pinned {
                    return Err(Error::InvalidSweep(format!(
                        "`{n}` is set by the optimal pump and cannot also be swept"
                    )));
                }
            }
            let source = series.source.unwrap_or(self.source);
            for o in &observables {
                if *o == Observable::G2Tau && (!has_tau || source != Source::Lindblad) {
                    return Err(Error::Unsupported {
                        observable: o.to_string(),
                        source_name: if has_tau { source.name() } else { "tau-free" },
                    });
                }
                if *o == Observable::MeanPhonon && source != Source::Lindblad {
                    return Err(Error::Unsupported {
                        observable: o.to_string(),
                        source_name: source.name(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Applies the pump mode to `params`. An anchor fixes the detuning at which
/// the optimum is evaluated.
pub fn apply_pump(params: &Params, mode: PumpMode, anchor: Option<f64>) -> Result<Params> {
    let probe = anchor.map_or(*params, |d| params.with_detuning(d));
    Ok(match mode {
        PumpMode::Fixed => *params,
        PumpMode::Optimal1Pb => optimal_1pb(&probe)?.apply(params),
        PumpMode::Optimal2Pb => optimal_2pb(&probe)?.apply(params),
    })
}

enum State {
    Analytic,
    Amplitude(Vec<f64>),
    Lindblad {
        liouvillian: Liouvillian<f64>,
        rho: DensityMatrix<f64>,
    },
}

/// A solved grid point with everything needed to read off observables.
struct Point {
    params: Params,
    trunc: Truncation,
    source: Source,
    state: Option<State>,
    distribution: Vec<f64>,
}

impl Point {
    fn solve(params: Params, trunc: Truncation, source: Source, need_state: bool) -> Result<Self> {
        let (state, distribution) = if !need_state {
            (None, Vec::new())
        } else {
            match source {
                Source::Analytic => (Some(State::Analytic), amplitudes(&params).distribution()),
                Source::AmplitudeExact => {
                    let d = steady_amplitudes(&params, &trunc)?.probabilities();
                    (Some(State::Amplitude(d.clone())), d)
                }
                Source::Lindblad => {
                    let liouvillian = build_liouvillian(&params, &trunc);
                    let rho = steady_state(&liouvillian)?;
                    let d = photon_distribution(&rho, &trunc);
                    (Some(State::Lindblad { liouvillian, rho }), d)
                }
            }
        };
        Ok(Self {
            params,
            trunc,
            source,
            state,
            distribution,
        })
    }

    fn correlation(&self, order: usize) -> Result<f64> {
        match self.state.as_ref().expect("state solved") {
            State::Analytic if order == 2 => g2_analytic(&self.params),
            State::Analytic => g3_analytic(&self.params),
            State::Amplitude(d) => correlation_from_distribution(d, order),
            State::Lindblad { rho, .. } if order == 2 => g2_numeric(rho, &self.trunc),
            State::Lindblad { rho, .. } => g3_numeric(rho, &self.trunc),
        }
    }

    fn mean_photon(&self) -> f64 {
        match self.state.as_ref().expect("state solved") {
            State::Lindblad { rho, .. } => mean_photon(rho, &self.trunc),
            _ => mean_of(&self.distribution),
        }
    }

    fn probability(&self, n: usize) -> f64 {
        self.distribution.get(n).copied().unwrap_or(0.0)
    }

    fn value(&self, o: Observable) -> Result<f64> {
        Ok(match o {
            Observable::G2 => self.correlation(2)?,
            Observable::G3 => self.correlation(3)?,
            Observable::MeanPhoton => self.mean_photon(),
            Observable::MeanPhonon => match self.state.as_ref().expect("state solved") {
                State::Lindblad { rho, .. } => mean_phonon(rho, &self.trunc),
                _ => {
                    return Err(Error::Unsupported {
                        observable: o.to_string(),
                        source_name: self.source.name(),
                    })
                }
            },
            Observable::P(n) => self.probability(n),
            Observable::PoissonDev(n) => {
                let devs = poisson_deviation(&self.distribution, self.mean_photon())?;
                devs.get(n).copied().unwrap_or(-1.0)
            }
            Observable::Gain => self.params.gain,
            Observable::Theta => self.params.theta,
            Observable::Opt1Gain => optimal_1pb(&self.params)?.gain,
            Observable::Opt1Theta => optimal_1pb(&self.params)?.theta,
            Observable::Opt2Gain => optimal_2pb(&self.params)?.gain,
            Observable::Opt2Theta => optimal_2pb(&self.params)?.theta,
            Observable::Blockade1 => flag(self.correlation(2)? < 1.0),
            Observable::Blockade2 => {
                flag(self.correlation(2)? >= 1.0 && self.correlation(3)? < 1.0)
            }
            Observable::EmissionRate => self.probability(1) * self.params.kappa,
            Observable::G2Tau => unreachable!("handled per tau grid"),
        })
    }

    /// Occupation of the highest photon and phonon levels kept.
    fn edge_populations(&self) -> (Option<f64>, Option<f64>) {
        match &self.state {
            Some(State::Lindblad { rho, .. }) => (
                Some(self.probability(self.trunc.n_photon_max())),
                rho.phonon_distribution(&self.trunc).last().copied(),
            ),
            Some(State::Amplitude(_)) => (Some(self.probability(self.trunc.n_photon_max())), None),
            _ => (None, None),
        }
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvergenceMeta {
    pub truncation: Option<Truncation>,
    /// Largest population found on the top photon level over the grid.
    pub max_edge_photon_population: Option<f64>,
    /// Largest population on the top phonon level; master equation only.
    pub max_edge_phonon_population: Option<f64>,
}

fn fold_max(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub series: Option<String>,
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub header: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let has_series = self.rows.first().is_some_and(|r| r.series.is_some());
        let pos = self.header.iter().position(|h| h == name)?;
        let pos = pos - usize::from(has_series);
        let ncoords = self.rows.first().map_or(0, |r| r.coords.len());
        Some(
            self.rows
                .iter()
                .map(|r| {
                    if pos < ncoords {
                        r.coords[pos]
                    } else {
                        r.values[pos - ncoords]
                    }
                })
                .collect(),
        )
    }

    /// Rows belonging to one series label.
    pub fn series(&self, label: &str) -> SweepTable {
        SweepTable {
            header: self.header.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| r.series.as_deref() == Some(label))
                .cloned()
                .collect(),
        }
    }

    /// Comma separated, `\n` line endings, shortest round-trip float
    /// formatting, so identical data gives identical bytes.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut fields: Vec<String> = Vec::new();
            if let Some(s) = &row.series {
                fields.push(s.clone());
            }
            fields.extend(row.coords.iter().chain(&row.values).map(|v| format!("{v:?}")));
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Everything needed to rerun a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub timestamp_unix: u64,
    pub params: Params,
    pub spec: SweepSpec,
    pub convergence: ConvergenceMeta,
    #[serde(default)]
    pub warnings: Vec<RegimeWarning>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub table: SweepTable,
    pub manifest: RunManifest,
}

struct Unit {
    series: usize,
    coords: Vec<f64>,
    tau_axis: Option<usize>,
    /// `(row index, tau)` pairs, or a single row when there is no tau axis.
    rows: Vec<(usize, f64)>,
}

fn build_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidSweep(format!("worker pool: {e}")))
}

/// Evaluates every grid point. Rows come out ordered by series, then
/// axis 1, then axis 2, whatever the completion order of the workers.
/// `jobs == 0` lets the pool pick its size.
pub fn run_sweep(spec: &SweepSpec, params: &Params, jobs: usize) -> Result<SweepOutput> {
    spec.check()?;
    let base = validate(*params)?;
    let observables = spec.observables()?;
    let axes = spec.axes();
    let grids: Vec<Vec<f64>> = axes.iter().map(|a| a.values()).collect();
    let tau_axis = axes.iter().position(|a| a.parameter == "tau");
    let series = spec.effective_series();

    // Grid points sharing everything but tau share one steady state.
    let mut units: Vec<Unit> = Vec::new();
    let mut index: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
    let mut row_coords = Vec::new();
    let inner = grids.get(1).map_or(1, Vec::len);
    for s in 0..series.len() {
        for i in 0..grids[0].len() {
            for j in 0..inner {
                let idx = [i, j];
                let coords: Vec<f64> = (0..grids.len()).map(|k| grids[k][idx[k]]).collect();
                let key: Vec<usize> = (0..grids.len())
                    .map(|k| if Some(k) == tau_axis { 0 } else { idx[k] })
                    .collect();
                let row = row_coords.len();
                let tau = tau_axis.map_or(0.0, |k| coords[k]);
                let u = *index.entry((s, key)).or_insert_with(|| {
                    units.push(Unit {
                        series: s,
                        coords: coords.clone(),
                        tau_axis,
                        rows: Vec::new(),
                    });
                    units.len() - 1
                });
                units[u].rows.push((row, tau));
                row_coords.push((s, coords));
            }
        }
    }

    let evaluate = |unit: &Unit| -> Result<(Vec<(usize, Vec<f64>)>, Vec<RegimeWarning>, ConvergenceMeta)> {
        let ser = &series[unit.series];
        let mut p = base.params;
        for (name, &v) in &ser.overrides {
            set_parameter(&mut p, name, v)?;
        }
        for (k, axis) in axes.iter().enumerate() {
            if Some(k) != unit.tau_axis {
                set_parameter(&mut p, &axis.parameter, unit.coords[k])?;
            }
        }
        let mode = ser.pump_mode.unwrap_or(spec.pump_mode);
        let anchor = ser.pump_anchor.or(spec.pump_anchor);
        let p = apply_pump(&p, mode, anchor)?;
        let checked = validate(p)?;
        let source = ser.source.unwrap_or(spec.source);
        let need_state = observables.iter().any(Observable::needs_state);
        let point = Point::solve(checked.params, spec.truncation, source, need_state)?;
        let mut fixed = Vec::with_capacity(observables.len());
        for &o in &observables {
            fixed.push(if o == Observable::G2Tau { f64::NAN } else { point.value(o)? });
        }
        let taus: Option<Vec<f64>> = match (&point.state, observables.contains(&Observable::G2Tau)) {
            (Some(State::Lindblad { liouvillian, rho }), true) => {
                let grid: Vec<f64> = unit.rows.iter().map(|r| r.1).collect();
                Some(g2_of_tau(liouvillian, rho, &grid)?)
            }
            _ => None,
        };
        let rows = unit
            .rows
            .iter()
            .enumerate()
            .map(|(k, &(row, _))| {
                let values = observables
                    .iter()
                    .zip(&fixed)
                    .map(|(o, &v)| match (o, &taus) {
                        (Observable::G2Tau, Some(t)) => t[k],
                        _ => v,
                    })
                    .collect();
                (row, values)
            })
            .collect();
        let (photon, phonon) = point.edge_populations();
        let meta = ConvergenceMeta {
            truncation: None,
            max_edge_photon_population: photon,
            max_edge_phonon_population: phonon,
        };
        Ok((rows, checked.warnings, meta))
    };

    let results: Vec<_> = build_pool(jobs)?.install(|| units.par_iter().map(evaluate).collect());

    let mut values: Vec<Option<Vec<f64>>> = vec![None; row_coords.len()];
    let mut warnings = base.warnings.clone();
    let mut convergence = ConvergenceMeta {
        truncation: Some(spec.truncation),
        ..ConvergenceMeta::default()
    };
    for r in results {
        let (rows, w, meta) = r?;
        for (row, v) in rows {
            values[row] = Some(v);
        }
        for x in w {
            if !warnings.contains(&x) {
                warnings.push(x);
            }
        }
        convergence.max_edge_photon_population =
            fold_max(convergence.max_edge_photon_population, meta.max_edge_photon_population);
        convergence.max_edge_phonon_population =
            fold_max(convergence.max_edge_phonon_population, meta.max_edge_phonon_population);
    }

    let labelled = !spec.series.is_empty();
    let mut header = Vec::new();
    if labelled {
        header.push("series".to_string());
    }
    header.extend(axes.iter().map(|a| a.parameter.clone()));
    header.extend(observables.iter().map(|o| o.to_string()));
    let rows = row_coords
        .into_iter()
        .zip(values)
        .map(|((s, coords), v)| SweepRow {
            series: labelled.then(|| series[s].label.clone()),
            coords,
            values: v.expect("every row evaluated"),
        })
        .collect();

    let timestamp_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    Ok(SweepOutput {
        table: SweepTable { header, rows },
        manifest: RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix,
            params: *params,
            spec: spec.clone(),
            convergence,
            warnings,
            notes: spec.notes.clone(),
        },
    })
}

/// Reruns a sweep from its manifest.
pub fn rerun(manifest: &RunManifest, jobs: usize) -> Result<SweepOutput> {
    run_sweep(&manifest.spec, &manifest.params, jobs)
}

pub const PRESET_NAMES: [&str; 9] = [
    "fig2a", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b", "fig4ab", "fig4cd", "fig4e",
];

/// Canned sweep for each figure of the blockade study, with the parameter
/// set it runs on. Rates are in units of κ.
pub fn figure_preset(name: &str) -> Result<(SweepSpec, Params)> {
    let one = Params::default_1pb();
    let two = Params::default_2pb();
    let preset = match name {
        // g²(0) against coupling, optimal pump versus no parametric gain.
        "fig2a" => {
            let mut s = SweepSpec::new(name, Axis::new("g", 1.0, 15.0, 15), &["g2", "gain", "theta"]);
            s.series = vec![
                Series::labelled("optimal").pump(PumpMode::Optimal1Pb),
                Series::labelled("no_opa").set("gain", 0.0),
            ];
            (s, one)
        }
        // Delayed correlation at three couplings, each at its optimum.
        "fig2b" => {
            let mut s = SweepSpec::new(name, Axis::new("tau", 0.0, 20.0, 200), &["g2_tau"]);
            s.pump_mode = PumpMode::Optimal1Pb;
            s.series = [5.0, 10.0, 15.0]
                .iter()
                .map(|&g| Series::labelled(&format!("g={g}")).set("g", g))
                .collect();
            s.notes.push("tau in units of 1/kappa".into());
            (s, one)
        }
        "fig2c" => {
            let mut s = SweepSpec::new(
                name,
                Axis::new("delta_c", -3.0, 3.0, 31),
                &["g2", "opt1_gain"],
            );
            s.axis2 = Some(Axis::new("gain", 0.0, 0.02, 21));
            let theta = optimal_1pb(&one)?.theta;
            s.notes.push(format!(
                "axis ranges are defaults read off a figure; theta fixed at the delta_c = 0 optimum {theta:?}"
            ));
            (s, one.with_pump(0.0, theta))
        }
        "fig2d" => {
            let mut s = SweepSpec::new(
                name,
                Axis::new("delta_c", -3.0, 3.0, 31),
                &["g2", "opt1_theta"],
            );
            s.axis2 = Some(Axis::periodic("theta", 0.0, std::f64::consts::TAU, 24));
            let gain = optimal_1pb(&one)?.gain;
            s.notes.push(format!(
                "axis ranges are defaults read off a figure; gain fixed at the delta_c = 0 optimum {gain:?}"
            ));
            (s, one.with_pump(gain, 0.0))
        }
        // Pumps tuned for perfect blockade at three detunings, analytic
        // curve against the master equation.
        "fig3a" => {
            let mut s = SweepSpec::new(name, Axis::new("delta_c", -3.0, 3.0, 61), &["g2"]);
            s.pump_mode = PumpMode::Optimal1Pb;
            for anchor in [-2.0, 0.0, 1.5] {
                for source in [Source::Analytic, Source::Lindblad] {
                    s.series.push(
                        Series::labelled(&format!("{}@{anchor}", source.name()))
                            .anchor(anchor)
                            .source(source),
                    );
                }
            }
            (s, one)
        }
        "fig3b" => {
            let mut s = SweepSpec::new(name, Axis::new("delta_c", -1.0, 4.0, 51), &["p1"]);
            s.pump_mode = PumpMode::Optimal1Pb;
            s.series = [5.0, 10.0, 15.0]
                .iter()
                .map(|&g| Series::labelled(&format!("g={g}")).set("g", g))
                .collect();
            (s, one)
        }
        "fig4ab" => {
            let mut s = SweepSpec::new(
                name,
                Axis::new("delta_c", 0.0, 4.0, 41),
                &["g2", "g3", "blockade2"],
            );
            s.series = vec![
                Series::labelled("no_opa").set("gain", 0.0),
                Series::labelled("optimal").pump(PumpMode::Optimal2Pb),
            ];
            (s, two)
        }
        "fig4cd" => {
            let mut s = SweepSpec::new(
                name,
                Axis::new("delta_c", 0.0, 4.0, 401),
                &["opt2_theta", "opt2_gain"],
            );
            s.source = Source::Analytic;
            (s, two)
        }
        "fig4e" => {
            let outputs = ["p0", "p1", "p2", "p3", "p4"]
                .into_iter()
                .chain(["poisson_dev_0", "poisson_dev_1", "poisson_dev_2", "poisson_dev_3", "poisson_dev_4"])
                .collect::<Vec<_>>();
            let mut s = SweepSpec::new(name, Axis::new("delta_c", 2.0, 2.0, 1), &outputs);
            s.pump_mode = PumpMode::Optimal2Pb;
            s.series = vec![
                Series::labelled("analytic").source(Source::Analytic),
                Series::labelled("lindblad").source(Source::Lindblad),
            ];
            (s, two)
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(preset)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub n_photon_max: usize,
    pub n_phonon_max: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub observable: String,
    pub source: Source,
    pub params: Params,
    pub tolerance: f64,
    pub entries: Vec<ConvergenceEntry>,
    /// `|vₖ − vₖ₋₁| / max(|vₖ|, |vₖ₋₁|, 1e-14)`.
    pub deltas: Vec<f64>,
    pub converged: bool,
    /// Smallest truncation whose successor moves the value by less than
    /// the tolerance.
    pub converged_at: Option<Truncation>,
}

/// Evaluates a scalar observable over a ladder of growing truncations.
pub fn convergence_study(
    params: &Params,
    observable: &str,
    ladder: &[Truncation],
    source: Source,
    jobs: usize,
) -> Result<ConvergenceReport> {
    let o: Observable = observable.parse()?;
    if o == Observable::G2Tau {
        return Err(Error::Unsupported {
            observable: o.to_string(),
            source_name: "convergence",
        });
    }
    if ladder.len() < 2 {
        return Err(Error::InvalidSweep("ladder needs at least two truncations".into()));
    }
    let increasing = ladder.windows(2).all(|w| {
        w[1].n_photon_max() >= w[0].n_photon_max()
            && w[1].n_phonon_max() >= w[0].n_phonon_max()
            && w[1] != w[0]
    });
    if !increasing {
        return Err(Error::InvalidSweep("ladder must be strictly increasing".into()));
    }
    let p = validate(*params)?.params;
    let values: Vec<f64> = build_pool(jobs)?.install(|| {
        ladder
            .par_iter()
            .map(|t| Point::solve(p, *t, source, o.needs_state())?.value(o))
            .collect::<Result<_>>()
    })?;
    let deltas: Vec<f64> = values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / w[0].abs().max(w[1].abs()).max(NUMERICAL_ZERO))
        .collect();
    let converged_at = deltas
        .iter()
        .position(|&d| d < CONVERGENCE_TOLERANCE)
        .map(|k| ladder[k]);
    Ok(ConvergenceReport {
        observable: o.to_string(),
        source,
        params: p,
        tolerance: CONVERGENCE_TOLERANCE,
        entries: ladder
            .iter()
            .zip(&values)
            .map(|(t, &value)| ConvergenceEntry {
                n_photon_max: t.n_photon_max(),
                n_phonon_max: t.n_phonon_max(),
                value,
            })
            .collect(),
        converged: deltas.last().is_some_and(|&d| d < CONVERGENCE_TOLERANCE),
        deltas,
        converged_at,
    })
}
