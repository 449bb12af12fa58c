//! Electro-optic sampling observables.
//!
//! Spectral densities are even in `w` and tied to the delay domain by
//!
//! ```text
//! G(tau) = (1/2pi) \int G(w) e^{-i w tau} dw = (1/pi) \int_0^inf G(w) cos(w tau) dw
//! ```
//!
//! which makes the paraxial mode sum over `k > 0` (density `L / 2pi`)
//! integrate exactly to the closed-form continuum spectra. The conversion
//! constant `C` cancels analytically between the operator amplitude and the
//! `1/(2C)` prefactor, so it never enters a computation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dielectric::{DielectricModel, Interval};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::polariton::Dispersion;
use crate::quadrature::{integrate, smoothstep_map, Tolerance};
use crate::units::{PhysicalConstants, UnitsMode};

/// Points with `eps < BAND_EDGE_FLOOR * eps_r` inside a band are band edges.
pub const BAND_EDGE_FLOOR: f64 = 1e-9;

/// Required `|R(omega_max)|^2` for truncating delay-domain integrals.
pub const TRUNCATION_POWER: f64 = 1e-12;

const QUADRATURE_TARGET: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    /// Probe transverse area S (m^2).
    pub area: f64,
    /// Paraxial quantization length L (m).
    pub length: f64,
    /// Electro-optic conversion constant C.
    pub conversion: f64,
}

impl GeometryConfig {
    pub fn volume(&self) -> f64 {
        self.length * self.area
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("area", self.area),
            ("length", self.length),
            ("conversion", self.conversion),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            area: 1.0,
            length: 1.0,
            conversion: 1.0,
        }
    }
}

/// Low-pass response `R(w)` of the detection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterModel {
    Identity,
    /// `R(w) = exp(-w^2 t_p^2 / 4)`.
    GaussianAutocorrelation {
        t_p: f64,
    },
    RectLowpass {
        omega_c: f64,
    },
}

impl Default for FilterModel {
    fn default() -> Self {
        FilterModel::GaussianAutocorrelation { t_p: 1.0 }
    }
}

impl FilterModel {
    pub fn response(&self, omega: f64) -> f64 {
        match *self {
            FilterModel::Identity => 1.0,
            FilterModel::GaussianAutocorrelation { t_p } => (-omega * omega * t_p * t_p / 4.0).exp(),
            FilterModel::RectLowpass { omega_c } => {
                if omega.abs() <= omega_c {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn power(&self, omega: f64) -> f64 {
        self.response(omega).powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FilterModel::Identity => Ok(()),
            FilterModel::GaussianAutocorrelation { t_p } if t_p.is_finite() && t_p > 0.0 => Ok(()),
            FilterModel::RectLowpass { omega_c } if omega_c.is_finite() && omega_c > 0.0 => Ok(()),
            other => Err(Error::InvalidParameter(format!("invalid filter {other:?}"))),
        }
    }

    /// Smallest frequency beyond which `|R|^2 < TRUNCATION_POWER`, or `None`
    /// for a filter that does not decay.
    pub fn default_truncation(&self) -> Option<f64> {
        match *self {
            FilterModel::Identity => None,
            FilterModel::GaussianAutocorrelation { t_p } => {
                // |R|^2 = exp(-w^2 t_p^2 / 2); one percent margin
                Some(1.01 * (-2.0 * TRUNCATION_POWER.ln()).sqrt() / t_p)
            }
            FilterModel::RectLowpass { omega_c } => Some(omega_c),
        }
    }
}

pub fn filter_response(filter: &FilterModel, omega: f64) -> f64 {
    filter.response(omega)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    VacuumG,
    PolaritonG,
    Ratio,
    TimeCorrelation,
}

/// Geometry as exported: the conversion constant is left out because no
/// observable depends on it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryMeta {
    pub area: f64,
    pub length: f64,
}

impl From<&GeometryConfig> for GeometryMeta {
    fn from(g: &GeometryConfig) -> Self {
        Self {
            area: g.area,
            length: g.length,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub quantity: Quantity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<DielectricModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryMeta>,
    pub units: UnitsMode,
}

/// Values on a frequency grid; `None` marks band-edge points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTrace {
    pub omega: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub meta: TraceMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    pub tau: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: TraceMeta,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid("grid has non-finite points".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    Ok(())
}

fn spectral_prefactor(constants: &PhysicalConstants, geometry: &GeometryConfig) -> f64 {
    constants.hbar / (4.0 * constants.eps0 * constants.c * geometry.area)
}

/// Free-space correlation spectrum `hbar |w| |R|^2 / (4 eps0 sqrt(eps_r) c S)`.
pub fn vacuum_spectrum(
    constants: &PhysicalConstants,
    geometry: &GeometryConfig,
    eps_r: f64,
    filter: &FilterModel,
    omega: f64,
) -> f64 {
    spectral_prefactor(constants, geometry) * vacuum_shape(eps_r, filter, omega)
}

fn vacuum_shape(eps_r: f64, filter: &FilterModel, omega: f64) -> f64 {
    omega.abs() * filter.power(omega) / eps_r.sqrt()
}

/// `|w| |R|^2 I(w) / sqrt(eps(w))`; zero in gaps and on poles.
fn polariton_shape(model: &DielectricModel, filter: &FilterModel, omega: f64) -> Result<f64> {
    let w = omega.abs();
    let eps = model.epsilon_unchecked(w);
    if !eps.is_finite() {
        return Ok(0.0);
    }
    if eps <= 0.0 {
        return Ok(0.0);
    }
    if eps < BAND_EDGE_FLOOR * model.eps_r() {
        return Err(Error::BandEdge(omega));
    }
    Ok(w * filter.power(w) / eps.sqrt())
}

/// Correlation spectrum in the coupled ground state,
/// `hbar |w| |R|^2 I(w) / (4 eps0 sqrt(eps(w)) c S)`.
pub fn polariton_spectrum(
    model: &DielectricModel,
    constants: &PhysicalConstants,
    geometry: &GeometryConfig,
    filter: &FilterModel,
    omega: f64,
) -> Result<f64> {
    if !omega.is_finite() {
        return Err(Error::InvalidFrequency(omega));
    }
    Ok(spectral_prefactor(constants, geometry) * polariton_shape(model, filter, omega)?)
}

/// `None` for band-edge points, error for anything else.
fn missing_at_edge(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::BandEdge(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn vacuum_spectrum_trace(
    constants: &PhysicalConstants,
    geometry: &GeometryConfig,
    eps_r: f64,
    filter: &FilterModel,
    omega_grid: &[f64],
    exec: Execution,
) -> Result<SpectrumTrace> {
    check_grid(omega_grid)?;
    let values = exec::map(exec, omega_grid, |&w| {
        Some(vacuum_spectrum(constants, geometry, eps_r, filter, w))
    });
    Ok(SpectrumTrace {
        omega: omega_grid.to_vec(),
        values,
        meta: TraceMeta {
            quantity: Quantity::VacuumG,
            model: Some(DielectricModel::Constant { eps_r }),
            filter: Some(*filter),
            geometry: Some(geometry.into()),
            units: constants.mode,
        },
    })
}

pub fn polariton_spectrum_trace(
    model: &DielectricModel,
    constants: &PhysicalConstants,
    geometry: &GeometryConfig,
    filter: &FilterModel,
    omega_grid: &[f64],
    exec: Execution,
) -> Result<SpectrumTrace> {
    model.validate()?;
    check_grid(omega_grid)?;
    let values = exec::try_map(exec, omega_grid, |&w| {
        missing_at_edge(polariton_spectrum(model, constants, geometry, filter, w))
    })?;
    Ok(SpectrumTrace {
        omega: omega_grid.to_vec(),
        values,
        meta: TraceMeta {
            quantity: Quantity::PolaritonG,
            model: Some(model.clone()),
            filter: Some(*filter),
            geometry: Some(geometry.into()),
            units: constants.mode,
        },
    })
}

/// One delta line of the finite-volume spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub k: f64,
    pub branch: usize,
    pub omega: f64,
    /// Coefficient of `delta(w - w_{k,mu})` (and of its mirror at `-w`).
    pub weight: f64,
}

/// Delta-line weights `pi hbar Omega_k v_g |R|^2 / (2 eps0 eps c V)` of the
/// polariton modes at the given wavevectors.
pub fn discrete_spectrum_weights(
    model: &DielectricModel,
    constants: &PhysicalConstants,
    geometry: &GeometryConfig,
    filter: &FilterModel,
    k_list: &[f64],
) -> Result<Vec<SpectralLine>> {
    geometry.validate()?;
    let disp = Dispersion::new(model, constants)?;
    let scale = PI * constants.hbar / (2.0 * constants.eps0 * constants.c * geometry.volume());
    let mut lines = Vec::new();
    for &k in k_list {
        for m in disp.mode_solutions(k)? {
            lines.push(SpectralLine {
                k,
                branch: m.branch,
                omega: m.omega,
                weight: scale * m.bare_frequency * m.group_velocity * filter.power(m.omega) / m.epsilon,
            });
        }
    }
    Ok(lines)
}

/// Finite mode sum `sum_lines (weight / pi) cos(w tau)`.
pub fn discrete_time_correlation(lines: &[SpectralLine], tau: f64) -> f64 {
    lines.iter().map(|l| l.weight / PI * (l.omega * tau).cos()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Source<'a> {
    Vacuum { eps_r: f64 },
    Polariton(&'a DielectricModel),
}

impl Source<'_> {
    fn model(&self) -> DielectricModel {
        match self {
            Source::Vacuum { eps_r } => DielectricModel::Constant { eps_r: *eps_r },
            Source::Polariton(m) => (*m).clone(),
        }
    }

    fn quantity(&self) -> Quantity {
        Quantity::TimeCorrelation
    }
}

/// Parts of the transparency bands below `omega_max`.
fn bands_below(model: &DielectricModel, omega_max: f64) -> Vec<Interval> {
    model
        .band_edges()
        .into_iter()
        .filter(|e| e.lo < omega_max)
        .map(|e| Interval {
            lo: e.lo,
            hi: e.hi.unwrap_or(omega_max).min(omega_max),
        })
        .collect()
}

fn check_truncation(filter: &FilterModel, omega_max: f64) -> Result<()> {
    if filter.default_truncation().is_none() {
        return Err(Error::DivergentIntegral(
            "the identity filter does not decay; the delay-domain integral diverges".into(),
        ));
    }
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "omega_max must be positive, got {omega_max}"
        )));
    }
    if filter.power(omega_max) >= TRUNCATION_POWER && !matches!(filter, FilterModel::RectLowpass { .. }) {
        return Err(Error::InvalidParameter(format!(
            "|R(omega_max)|^2 = {:e} is not below {TRUNCATION_POWER:e}",
            filter.power(omega_max)
        )));
    }
    Ok(())
}

fn time_meta(
    source: &Source<'_>,
    constants: &PhysicalConstants,
    geometry: &GeometryConfig,
    filter: &FilterModel,
) -> TraceMeta {
    TraceMeta {
        quantity: source.quantity(),
        model: Some(source.model()),
        filter: Some(*filter),
        geometry: Some(geometry.into()),
        units: constants.mode,
    }
}

/// Delay-domain correlation `G(tau)` from the closed-form spectral density,
/// integrated band by band over `(0, omega_max)` with the gaps excised.
pub fn time_correlation(
    source: Source<'_>,
    constants: &PhysicalConstants,
    geometry: &GeometryConfig,
    filter: &FilterModel,
    tau_grid: &[f64],
    omega_max: f64,
    exec: Execution,
) -> Result<TimeTrace> {
    constants.validate()?;
    geometry.validate()?;
    filter.validate()?;
    check_grid(tau_grid)?;
    check_truncation(filter, omega_max)?;
    let model = source.model();
    model.validate()?;

    let bands = bands_below(&model, omega_max);
    // a zero of eps at the lower end gives a 1/sqrt singularity; the
    // smoothstep map absorbs it
    let shape = |w: f64| -> f64 {
        match source {
            Source::Vacuum { eps_r } => vacuum_shape(eps_r, filter, w),
            Source::Polariton(m) => {
                let eps = m.epsilon_unchecked(w);
                if eps.is_finite() && eps > 0.0 {
                    w * filter.power(w) / eps.sqrt()
                } else {
                    0.0
                }
            }
        }
    };
    let band_integral = |band: &Interval, tau: f64, tol: Tolerance| -> Result<f64> {
        let est = integrate(
            |t| {
                let (w, dw) = smoothstep_map(band.lo, band.hi, t);
                shape(w) * (w * tau).cos() * dw
            },
            0.0,
            1.0,
            tol,
        )?;
        Ok(est.value)
    };

    let probe = Tolerance {
        abs: 0.0,
        rel: QUADRATURE_TARGET,
        ..Tolerance::default()
    };
    let scale: f64 = bands
        .iter()
        .map(|b| band_integral(b, 0.0, probe))
        .sum::<Result<f64>>()?;
    let tol = Tolerance {
        abs: QUADRATURE_TARGET * scale.abs(),
        rel: QUADRATURE_TARGET,
        ..Tolerance::default()
    };
    let prefactor = spectral_prefactor(constants, geometry) / PI;
    let values = exec::try_map(exec, tau_grid, |&tau| {
        let tau = tau.abs();
        let total: f64 = bands.iter().map(|b| band_integral(b, tau, tol)).sum::<Result<f64>>()?;
        Ok(prefactor * total)
    })?;
    Ok(TimeTrace {
        tau: tau_grid.to_vec(),
        values,
        meta: time_meta(&source, constants, geometry, filter),
    })
}

/// Delay-domain correlation from the continuum limit of the polariton mode
/// sum, integrated over `k` branch by branch:
///
/// ```text
/// G(tau) = sum_mu (1/2pi) \int dk hbar Omega_k v_g |R(w)|^2 cos(w tau) / (2 eps0 eps(w) c S)
/// ```
///
/// Independent of [`time_correlation`]: frequencies come from the
/// dispersion solver and group velocities from the Hopfield route.
pub fn time_correlation_mode_sum(
    source: Source<'_>,
    constants: &PhysicalConstants,
    geometry: &GeometryConfig,
    filter: &FilterModel,
    tau_grid: &[f64],
    omega_max: f64,
    exec: Execution,
) -> Result<TimeTrace> {
    constants.validate()?;
    geometry.validate()?;
    filter.validate()?;
    check_grid(tau_grid)?;
    check_truncation(filter, omega_max)?;
    let model = source.model();
    let disp = Dispersion::new(&model, constants)?;
    let c = constants.c;
    let sqrt_eps_r = model.eps_r().sqrt();

    struct Segment {
        branch: usize,
        /// `Some(k_max)` for a finite range, `None` for `(0, inf)`.
        k_max: Option<f64>,
        k_scale: f64,
    }
    let segments: Vec<Segment> = model
        .band_edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.lo < omega_max)
        .map(|(branch, e)| match e.hi {
            Some(pole) if pole <= omega_max => Ok(Segment {
                branch,
                k_max: None,
                k_scale: pole * sqrt_eps_r / c,
            }),
            _ => Ok(Segment {
                branch,
                k_max: Some(disp.wavevector_of(omega_max)?),
                k_scale: 1.0,
            }),
        })
        .collect::<Result<_>>()?;

    // Omega_k v_g |R|^2 / eps at wavevector k, with its frequency
    let weight = |branch: usize, k: f64| -> Result<(f64, f64)> {
        if !(k.is_finite() && k > 0.0) {
            return Ok((0.0, 0.0));
        }
        let omega = match disp.branch_frequency(branch, k) {
            Ok(w) => w,
            // beyond the pole exclusion radius the integrand is ~k^-4
            Err(Error::PoleProximity { .. }) => return Ok((0.0, 0.0)),
            Err(e) => return Err(e),
        };
        let eps = (c * k / omega).powi(2);
        let vg = 2.0 * c * c * k / (2.0 * omega * eps + omega * omega * model.derivative_unchecked(omega));
        let bare = c * k / sqrt_eps_r;
        Ok((omega, bare * vg * filter.power(omega) / eps))
    };
    let segment_integral = |s: &Segment, tau: f64, tol: Tolerance| -> Result<f64> {
        let integrand = |t: f64| -> f64 {
            let (k, dk) = match s.k_max {
                Some(k_max) => (t * k_max, k_max),
                None => (s.k_scale * t / (1.0 - t), s.k_scale / ((1.0 - t) * (1.0 - t))),
            };
            match weight(s.branch, k) {
                Ok((w, v)) => v * (w * tau).cos() * dk,
                Err(_) => f64::NAN,
            }
        };
        let est = integrate(integrand, 0.0, 1.0, tol)?;
        if est.value.is_finite() {
            Ok(est.value)
        } else {
            Err(Error::QuadratureFailure { estimate: est.error })
        }
    };

    let probe = Tolerance {
        abs: 0.0,
        rel: QUADRATURE_TARGET,
        ..Tolerance::default()
    };
    let scale: f64 = segments
        .iter()
        .map(|s| segment_integral(s, 0.0, probe))
        .sum::<Result<f64>>()?;
    let tol = Tolerance {
        abs: QUADRATURE_TARGET * scale.abs(),
        rel: QUADRATURE_TARGET,
        ..Tolerance::default()
    };
    let prefactor = constants.hbar / (2.0 * constants.eps0 * c * geometry.area) / (2.0 * PI);
    let values = exec::try_map(exec, tau_grid, |&tau| {
        let tau = tau.abs();
        let total: f64 = segments
            .iter()
            .map(|s| segment_integral(s, tau, tol))
            .sum::<Result<f64>>()?;
        Ok(prefactor * total)
    })?;
    Ok(TimeTrace {
        tau: tau_grid.to_vec(),
        values,
        meta: time_meta(&source, constants, geometry, filter),
    })
}

/// Normalized spectrum `sqrt(eps_r / eps(w)) I(w)` at one frequency.
/// Tends to zero on a pole and diverges at a zero of eps (reported as
/// [`Error::BandEdge`]).
pub fn ratio_value(model: &DielectricModel, omega: f64) -> Result<f64> {
    if !omega.is_finite() {
        return Err(Error::InvalidFrequency(omega));
    }
    let eps = model.epsilon_unchecked(omega);
    if !eps.is_finite() || eps <= 0.0 {
        return Ok(0.0);
    }
    if eps < BAND_EDGE_FLOOR * model.eps_r() {
        return Err(Error::BandEdge(omega));
    }
    Ok((model.eps_r() / eps).sqrt())
}

/// Ratio of the polariton to the vacuum correlation spectrum on a grid;
/// band-edge points are `None`.
pub fn ratio_spectrum(model: &DielectricModel, omega_grid: &[f64], exec: Execution) -> Result<SpectrumTrace> {
    model.validate()?;
    check_grid(omega_grid)?;
    let values = exec::try_map(exec, omega_grid, |&w| missing_at_edge(ratio_value(model, w)))?;
    Ok(SpectrumTrace {
        omega: omega_grid.to_vec(),
        values,
        meta: TraceMeta {
            quantity: Quantity::Ratio,
            model: Some(model.clone()),
            filter: None,
            geometry: None,
            units: UnitsMode::Reduced,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> DielectricModel {
        DielectricModel::lorentz(1.0, 1.0, 0.5).unwrap()
    }

    fn reduced() -> PhysicalConstants {
        PhysicalConstants::reduced()
    }

    const GAUSS_1: FilterModel = FilterModel::GaussianAutocorrelation { t_p: 1.0 };

    #[test]
    fn filter_values() {
        assert_eq!(filter_response(&FilterModel::Identity, 123.0), 1.0);
        assert_eq!(filter_response(&GAUSS_1, 0.0), 1.0);
        let r = filter_response(&FilterModel::GaussianAutocorrelation { t_p: 2.0 }, 1.0);
        assert!((r - (-1f64).exp()).abs() < 1e-16);
        let rect = FilterModel::RectLowpass { omega_c: 2.0 };
        assert_eq!((rect.response(-2.0), rect.response(2.5)), (1.0, 0.0));
        assert_eq!(GAUSS_1.response(3.3), GAUSS_1.response(-3.3));
    }

    #[test]
    fn vacuum_spectrum_values() {
        let geo = GeometryConfig::default();
        let k = reduced();
        let id = FilterModel::Identity;
        assert_eq!(vacuum_spectrum(&k, &geo, 1.0, &id, 1.0), 0.25);
        assert_eq!(vacuum_spectrum(&k, &geo, 1.0, &id, 0.0), 0.0);
        assert_eq!(
            vacuum_spectrum(&k, &geo, 1.0, &id, -3.0),
            vacuum_spectrum(&k, &geo, 1.0, &id, 3.0)
        );
        let wide = GeometryConfig { area: 2.0, ..geo };
        assert_eq!(vacuum_spectrum(&k, &wide, 1.0, &id, 1.0), 0.125);
    }

    #[test]
    fn polariton_spectrum_values() {
        let geo = GeometryConfig::default();
        let k = reduced();
        let id = FilterModel::Identity;
        let v = polariton_spectrum(&fig2(), &k, &geo, &id, 0.5).unwrap();
        assert!((v - 0.125 / (7.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((v - 0.081831).abs() < 1e-6);
        assert_eq!(polariton_spectrum(&fig2(), &k, &geo, &id, 1.2).unwrap(), 0.0);
        // upper gap edge
        let z = 2f64.sqrt() * (1.0 + 1e-13);
        assert!(matches!(
            polariton_spectrum(&fig2(), &k, &geo, &id, z),
            Err(Error::BandEdge(_))
        ));
    }

    #[test]
    fn uncoupled_polariton_equals_vacuum() {
        let geo = GeometryConfig::default();
        let k = reduced();
        let m = DielectricModel::lorentz(2.5, 1.0, 0.0).unwrap();
        for w in [0.1, 0.9, 1.0, 1.7, 6.0] {
            let p = polariton_spectrum(&m, &k, &geo, &GAUSS_1, w).unwrap();
            let v = vacuum_spectrum(&k, &geo, 2.5, &GAUSS_1, w);
            assert!((p - v).abs() <= 1e-15 * v);
        }
    }

    #[test]
    fn discrete_weights() {
        let geo = GeometryConfig::default();
        let k = reduced();
        let lines = discrete_spectrum_weights(&fig2(), &k, &geo, &FilterModel::Identity, &[1.0]).unwrap();
        assert_eq!(lines.len(), 2);
        let ratio = lines[1].weight / lines[0].weight;
        let phi2 = (3.0 + 5f64.sqrt()) / 2.0;
        // eps_lower / eps_upper = phi^2 / phi^-2
        assert!((ratio - phi2 * phi2).abs() < 1e-10);
        assert!((ratio - 6.854).abs() < 1e-3);

        let c = DielectricModel::constant(2.0).unwrap();
        let line = discrete_spectrum_weights(&c, &k, &geo, &FilterModel::Identity, &[3.0]).unwrap()[0];
        // pi hbar Omega (c/sqrt(eps_r)) / (2 eps0 eps_r c V)
        let omega = 3.0 / 2f64.sqrt();
        let expect = PI * omega / (2.0 * 2f64.powf(1.5));
        assert!((line.weight - expect).abs() < 1e-14);
    }

    #[test]
    fn mode_sum_approaches_continuum() {
        // k = 2 pi n / L with large L reproduces the continuum correlation
        let geo = GeometryConfig {
            length: 4000.0,
            ..GeometryConfig::default()
        };
        let k = reduced();
        let m = fig2();
        let ks: Vec<f64> = (1..=60_000)
            .map(|n| 2.0 * PI * n as f64 / geo.length)
            .take_while(|&k| k < 60.0)
            .collect();
        let lines = discrete_spectrum_weights(&m, &k, &geo, &GAUSS_1, &ks).unwrap();
        let cont = time_correlation(
            Source::Polariton(&m),
            &k,
            &geo,
            &GAUSS_1,
            &[0.5],
            8.0,
            Execution::Sequential,
        )
        .unwrap();
        let sum = discrete_time_correlation(&lines, 0.5);
        assert!(
            (sum - cont.values[0]).abs() < 1e-3 * cont.values[0].abs(),
            "{sum} {}",
            cont.values[0]
        );
    }

    // Reference values from an arbitrary-precision quadrature (40 digits).
    #[test]
    fn vacuum_time_correlation_matches_reference() {
        let taus = [0.0, 0.5, 1.0, 2.5];
        let expect = [
            0.079_577_471_545_947_667_88,
            0.061_260_954_520_201_793_62,
            0.021_901_434_347_196_252_87,
            -0.020_268_026_284_323_079_81,
        ];
        let tr = time_correlation(
            Source::Vacuum { eps_r: 1.0 },
            &reduced(),
            &GeometryConfig::default(),
            &GAUSS_1,
            &taus,
            GAUSS_1.default_truncation().unwrap(),
            Execution::Sequential,
        )
        .unwrap();
        for (v, e) in tr.values.iter().zip(expect) {
            assert!((v - e).abs() < 1e-10, "{v} vs {e}");
        }
        // analytic: 1 / (4 pi t_p^2 sqrt(eps_r))
        assert!((tr.values[0] - 1.0 / (4.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn polariton_time_correlation_matches_reference() {
        let taus = [0.0, 0.5, 1.0, 2.5];
        let expect = [
            0.067_009_281_676_582_552_26,
            0.046_791_499_499_101_977_54,
            0.004_525_447_299_707_801_93,
            -0.012_831_883_706_443_824_17,
        ];
        let m = fig2();
        let tr = time_correlation(
            Source::Polariton(&m),
            &reduced(),
            &GeometryConfig::default(),
            &GAUSS_1,
            &taus,
            8.0,
            Execution::Sequential,
        )
        .unwrap();
        for (v, e) in tr.values.iter().zip(expect) {
            assert!((v - e).abs() < 1e-10, "{v} vs {e}");
        }

        let m2 = DielectricModel::lorentz(2.0, 1.0, 0.3).unwrap();
        let tr = time_correlation(
            Source::Polariton(&m2),
            &reduced(),
            &GeometryConfig::default(),
            &GAUSS_1,
            &[0.7],
            8.0,
            Execution::Sequential,
        )
        .unwrap();
        assert!((tr.values[0] - 0.028_983_850_168_703_511).abs() < 1e-10);
    }

    #[test]
    fn mode_sum_route_agrees_for_unit_background() {
        let m = fig2();
        let taus: Vec<f64> = (0..16).map(|i| i as f64 * 0.4).collect();
        let args = (&reduced(), &GeometryConfig::default(), &GAUSS_1);
        let a = time_correlation(
            Source::Polariton(&m),
            args.0,
            args.1,
            args.2,
            &taus,
            8.0,
            Execution::Parallel,
        )
        .unwrap();
        let b = time_correlation_mode_sum(
            Source::Polariton(&m),
            args.0,
            args.1,
            args.2,
            &taus,
            8.0,
            Execution::Parallel,
        )
        .unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn time_correlation_is_even_and_rejects_identity() {
        let m = fig2();
        let k = reduced();
        let geo = GeometryConfig::default();
        let tr = time_correlation(
            Source::Polariton(&m),
            &k,
            &geo,
            &GAUSS_1,
            &[-1.3, 1.3],
            8.0,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(tr.values[0], tr.values[1]);
        assert!(matches!(
            time_correlation(
                Source::Polariton(&m),
                &k,
                &geo,
                &FilterModel::Identity,
                &[0.0],
                8.0,
                Execution::Sequential
            ),
            Err(Error::DivergentIntegral(_))
        ));
        assert!(time_correlation(
            Source::Polariton(&m),
            &k,
            &geo,
            &GAUSS_1,
            &[0.0],
            3.0,
            Execution::Sequential
        )
        .is_err());
    }

    #[test]
    fn ratio_examples() {
        let m = fig2();
        let tr = ratio_spectrum(&m, &[1e-6, 1.2, 2.0, 50.0], Execution::Sequential).unwrap();
        let v: Vec<f64> = tr.values.iter().map(|v| v.unwrap()).collect();
        assert!((v[0] - 0.5f64.sqrt()).abs() < 1e-6);
        assert_eq!(v[1], 0.0);
        assert!((v[2] - 1.5f64.sqrt()).abs() < 1e-12);
        assert!((v[3] - 1.0).abs() < 1e-3);
        let edge = ratio_spectrum(&m, &[2f64.sqrt() * (1.0 + 1e-14)], Execution::Sequential).unwrap();
        assert_eq!(edge.values, vec![None]);
        let free = DielectricModel::lorentz(3.0, 1.0, 0.0).unwrap();
        let tr = ratio_spectrum(&free, &[0.5, 1.0, 2.0], Execution::Sequential).unwrap();
        assert!(tr.values.iter().all(|v| *v == Some(1.0)));
    }

    #[test]
    fn ratio_diverges_towards_upper_edge() {
        let m = fig2();
        let z = 2f64.sqrt();
        let mut previous = 0.0;
        for d in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let r = ratio_value(&m, z + d).unwrap();
            assert!(r > previous);
            previous = r;
        }
    }

    #[test]
    fn grids_are_validated() {
        assert!(ratio_spectrum(&fig2(), &[], Execution::Sequential).is_err());
        assert!(ratio_spectrum(&fig2(), &[1.0, 0.5], Execution::Sequential).is_err());
    }
}
