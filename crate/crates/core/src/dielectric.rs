//! Lossless, real and even dielectric functions.
//!
//! A model is a background permittivity `eps_r` dressed by a finite sum of
//! Lorentz oscillators,
//!
//! ```text
//! eps(w) = eps_r * (1 - sum_j 4 g_j^2 / (w^2 - w_j^2))
//! ```
//!
//! Oscillators with `g_j = 0` are decoupled and contribute neither a term
//! nor a pole. Between consecutive poles `eps` increases monotonically from
//! `-inf` to `+inf`, so every pole is followed by exactly one zero and the
//! propagative bands are `(0, p_1)`, `(z_1, p_2)`, ..., `(z_n, inf)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::bisect_by_sign;

/// Default pole-exclusion radius, relative to the pole frequency.
pub const DEFAULT_POLE_EXCLUSION: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Oscillator {
    /// Resonance frequency (rad/s).
    pub omega: f64,
    /// Vacuum Rabi frequency (rad/s).
    pub g: f64,
}

impl Oscillator {
    pub fn new(omega: f64, g: f64) -> Self {
        Self { omega, g }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DielectricModel {
    Constant { eps_r: f64 },
    Lorentz { eps_r: f64, omega_x: f64, g: f64 },
    MultiLorentz { eps_r: f64, oscillators: Vec<Oscillator> },
}

/// Iterator over the oscillators of a model, whatever its variant.
pub enum Oscillators<'a> {
    One(Option<Oscillator>),
    Many(std::slice::Iter<'a, Oscillator>),
}

impl Iterator for Oscillators<'_> {
    type Item = Oscillator;

    fn next(&mut self) -> Option<Oscillator> {
        match self {
            Oscillators::One(o) => o.take(),
            Oscillators::Many(it) => it.next().copied(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Propagative bands (eps > 0) and gaps (eps < 0) on `(0, omega_max)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub bands: Vec<Interval>,
    pub gaps: Vec<Interval>,
    pub omega_max: f64,
}

impl BandStructure {
    pub fn band_containing(&self, omega: f64) -> Option<usize> {
        self.bands.iter().position(|b| b.contains(omega))
    }

    pub fn in_gap(&self, omega: f64) -> bool {
        self.gaps.iter().any(|g| g.contains(omega))
    }
}

/// A transparency band with its analytic end points: `lo` is zero or a zero
/// of eps, `hi` is a pole or `None` for the unbounded last band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandEdges {
    pub lo: f64,
    pub hi: Option<f64>,
}

impl DielectricModel {
    pub fn constant(eps_r: f64) -> Result<Self> {
        let m = DielectricModel::Constant { eps_r };
        m.validate()?;
        Ok(m)
    }

    pub fn lorentz(eps_r: f64, omega_x: f64, g: f64) -> Result<Self> {
        let m = DielectricModel::Lorentz { eps_r, omega_x, g };
        m.validate()?;
        Ok(m)
    }

    pub fn multi_lorentz(eps_r: f64, oscillators: Vec<Oscillator>) -> Result<Self> {
        let m = DielectricModel::MultiLorentz { eps_r, oscillators };
        m.validate()?;
        Ok(m)
    }

    pub fn eps_r(&self) -> f64 {
        match *self {
            DielectricModel::Constant { eps_r }
            | DielectricModel::Lorentz { eps_r, .. }
            | DielectricModel::MultiLorentz { eps_r, .. } => eps_r,
        }
    }

    pub fn oscillators(&self) -> Oscillators<'_> {
        match self {
            DielectricModel::Constant { .. } => Oscillators::One(None),
            DielectricModel::Lorentz { omega_x, g, .. } => Oscillators::One(Some(Oscillator::new(*omega_x, *g))),
            DielectricModel::MultiLorentz { oscillators, .. } => Oscillators::Many(oscillators.iter()),
        }
    }

    /// Same model with every coupling set to zero.
    pub fn uncoupled(&self) -> Self {
        match self {
            DielectricModel::Constant { eps_r } => DielectricModel::Constant { eps_r: *eps_r },
            DielectricModel::Lorentz { eps_r, omega_x, .. } => DielectricModel::Lorentz {
                eps_r: *eps_r,
                omega_x: *omega_x,
                g: 0.0,
            },
            DielectricModel::MultiLorentz { eps_r, oscillators } => DielectricModel::MultiLorentz {
                eps_r: *eps_r,
                oscillators: oscillators.iter().map(|o| Oscillator::new(o.omega, 0.0)).collect(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eps_r = self.eps_r();
        if !(eps_r.is_finite() && eps_r > 0.0) {
            return Err(Error::InvalidModel(format!("eps_r must be positive, got {eps_r}")));
        }
        let mut previous = 0.0;
        for o in self.oscillators() {
            if !(o.omega.is_finite() && o.omega > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "oscillator frequency must be positive, got {}",
                    o.omega
                )));
            }
            if o.omega <= previous {
                return Err(Error::InvalidModel(
                    "oscillator frequencies must be strictly increasing".into(),
                ));
            }
            if !(o.g.is_finite() && o.g >= 0.0) {
                return Err(Error::InvalidModel(format!("coupling must be >= 0, got {}", o.g)));
            }
            previous = o.omega;
        }
        Ok(())
    }

    /// Poles of eps on the positive axis (oscillators with nonzero coupling).
    pub fn poles(&self) -> Vec<f64> {
        self.oscillators().filter(|o| o.g > 0.0).map(|o| o.omega).collect()
    }

    /// `sum_j 4 g_j^2 / (w^2 - w_j^2)`; no pole check.
    fn susceptibility_sum(&self, omega: f64) -> f64 {
        let w = omega.abs();
        self.oscillators()
            .filter(|o| o.g > 0.0)
            .map(|o| 4.0 * o.g * o.g / ((w - o.omega) * (w + o.omega)))
            .sum()
    }

    fn check_poles(&self, omega: f64, radius: f64) -> Result<()> {
        let w = omega.abs();
        for p in self.poles() {
            if (w - p).abs() < radius * p {
                return Err(Error::PoleProximity { omega, pole: p });
            }
        }
        Ok(())
    }

    /// eps(omega) without the pole-proximity check; infinite or NaN exactly
    /// on a pole.
    pub fn epsilon_unchecked(&self, omega: f64) -> f64 {
        self.eps_r() * (1.0 - self.susceptibility_sum(omega))
    }

    pub fn epsilon(&self, omega: f64) -> Result<f64> {
        self.epsilon_with(omega, DEFAULT_POLE_EXCLUSION)
    }

    /// eps(omega), rejecting frequencies within `radius * pole` of a pole.
    pub fn epsilon_with(&self, omega: f64, radius: f64) -> Result<f64> {
        if !omega.is_finite() {
            return Err(Error::InvalidFrequency(omega));
        }
        self.check_poles(omega, radius)?;
        Ok(self.epsilon_unchecked(omega))
    }

    pub fn derivative_unchecked(&self, omega: f64) -> f64 {
        let w = omega.abs();
        let d: f64 = self
            .oscillators()
            .filter(|o| o.g > 0.0)
            .map(|o| {
                let den = (w - o.omega) * (w + o.omega);
                8.0 * o.g * o.g * w / (den * den)
            })
            .sum();
        self.eps_r() * d * omega.signum()
    }

    pub fn derivative(&self, omega: f64) -> Result<f64> {
        self.derivative_with(omega, DEFAULT_POLE_EXCLUSION)
    }

    /// d eps / d omega, analytic; odd in omega.
    pub fn derivative_with(&self, omega: f64, radius: f64) -> Result<f64> {
        if !omega.is_finite() {
            return Err(Error::InvalidFrequency(omega));
        }
        self.check_poles(omega, radius)?;
        if omega == 0.0 {
            return Ok(0.0);
        }
        Ok(self.derivative_unchecked(omega))
    }

    /// True when eps(omega) > 0. Exactly on a pole the answer is `false`.
    pub fn is_propagative(&self, omega: f64) -> bool {
        let e = self.epsilon_unchecked(omega);
        e.is_finite() && e > 0.0
    }

    /// Zeros of eps on the positive axis, one just above each pole.
    pub fn zeros(&self) -> Vec<f64> {
        let poles = self.poles();
        let total_g2: f64 = self.oscillators().map(|o| 4.0 * o.g * o.g).sum();
        let reduced = |w: f64| 1.0 - self.susceptibility_sum(w);
        poles
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let hi = match poles.get(j + 1) {
                    Some(&next) => next,
                    // at w^2 = p_n^2 + sum 4 g^2 every term is <= its share of 1
                    None => (p * p + total_g2).sqrt(),
                };
                bisect_by_sign(reduced, p, hi)
            })
            .collect()
    }

    /// Analytic band edges, unclipped.
    pub fn band_edges(&self) -> Vec<BandEdges> {
        let poles = self.poles();
        let zeros = self.zeros();
        let mut edges = Vec::with_capacity(poles.len() + 1);
        let mut lo = 0.0;
        for (p, z) in poles.iter().zip(&zeros) {
            edges.push(BandEdges { lo, hi: Some(*p) });
            lo = *z;
        }
        edges.push(BandEdges { lo, hi: None });
        edges
    }

    /// Maximal intervals of `(0, omega_max)` where eps > 0, and the gaps
    /// between them.
    pub fn propagative_bands(&self, omega_max: f64) -> Result<BandStructure> {
        self.validate()?;
        let poles = self.poles();
        let highest = poles.last().copied().unwrap_or(0.0);
        if !(omega_max.is_finite() && omega_max > highest) {
            return Err(Error::InvalidParameter(format!(
                "omega_max = {omega_max} must exceed the highest pole {highest}"
            )));
        }
        let zeros = self.zeros();
        let mut bands = Vec::new();
        for e in self.band_edges() {
            let hi = e.hi.unwrap_or(omega_max).min(omega_max);
            if e.lo < hi {
                bands.push(Interval { lo: e.lo, hi });
            }
        }
        let gaps = poles
            .iter()
            .zip(&zeros)
            .filter(|(p, _)| **p < omega_max)
            .map(|(p, z)| Interval {
                lo: *p,
                hi: z.min(omega_max),
            })
            .collect();
        Ok(BandStructure { bands, gaps, omega_max })
    }
}
