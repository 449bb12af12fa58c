//! Polariton dispersion `c^2 k^2 = w^2 eps(w)`, Hopfield coefficients and
//! group velocities.
//!
//! `w^2 eps(w)` rises monotonically from 0 to `+inf` across every
//! transparency band, so each band carries exactly one branch at any `k > 0`.
//! Coefficients are real (eps is real) with the phase fixed by `X > 0`:
//!
//! ```text
//! (X + Z)^2 = v_g / (c eps(w))        X - Z = (Omega_k / w) (X + Z)
//! ```
//!
//! On a branch `eps(w) = c^2 k^2 / w^2` exactly; that form is used instead of
//! re-evaluating `eps`, which loses digits close to a zero of eps.

use serde::{Deserialize, Serialize};

use crate::dielectric::{BandEdges, DielectricModel, DEFAULT_POLE_EXCLUSION};
use crate::error::{Error, Result};
use crate::roots::{bracketed_root, DEFAULT_RTOL};
use crate::units::PhysicalConstants;

/// Relative dispersion residual above which `(k, w)` is not on a branch.
pub const BRANCH_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    pub k: f64,
    /// Branch index, ascending with frequency.
    pub branch: usize,
    pub omega: f64,
    pub x: f64,
    pub z: f64,
    pub group_velocity: f64,
    /// Bare photon frequency `c k / sqrt(eps_r)`.
    pub bare_frequency: f64,
    /// eps at the branch frequency.
    pub epsilon: f64,
}

impl ModeSolution {
    /// `|Omega_k (X + Z) - w (X - Z)| / (w |X + Z|)`.
    pub fn gauge_residual(&self) -> f64 {
        let s = self.x + self.z;
        (self.bare_frequency * s - self.omega * (self.x - self.z)).abs() / (self.omega * s.abs())
    }

    pub fn bosonic_norm(&self) -> f64 {
        self.x * self.x - self.z * self.z
    }
}

/// Dispersion solver for one model and speed of light. Band edges are
/// computed once at construction.
#[derive(Clone, Debug)]
pub struct Dispersion<'m> {
    model: &'m DielectricModel,
    c: f64,
    pole_exclusion: f64,
    edges: Vec<BandEdges>,
}

impl<'m> Dispersion<'m> {
    pub fn new(model: &'m DielectricModel, constants: &PhysicalConstants) -> Result<Self> {
        model.validate()?;
        constants.validate()?;
        Ok(Self {
            model,
            c: constants.c,
            pole_exclusion: DEFAULT_POLE_EXCLUSION,
            edges: model.band_edges(),
        })
    }

    pub fn with_pole_exclusion(mut self, radius: f64) -> Self {
        self.pole_exclusion = radius;
        self
    }

    pub fn model(&self) -> &DielectricModel {
        self.model
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn branch_count(&self) -> usize {
        self.edges.len()
    }

    pub fn bare_frequency(&self, k: f64) -> f64 {
        self.c * k / self.model.eps_r().sqrt()
    }

    fn check_k(k: f64) -> Result<()> {
        if k.is_finite() && k > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidWavevector(k))
        }
    }

    /// Frequency of branch `index` at wavevector `k`.
    pub fn branch_frequency(&self, index: usize, k: f64) -> Result<f64> {
        Self::check_k(k)?;
        let edges = self
            .edges
            .get(index)
            .ok_or_else(|| Error::InvalidParameter(format!("branch index {index} out of range")))?;
        let target = (self.c * k).powi(2);
        let f = |w: f64| w * w * self.model.epsilon_unchecked(w) - target;

        let lo = edges.lo;
        let f_lo = -target;
        let (hi, f_hi) = match edges.hi {
            Some(pole) => {
                let hi = pole * (1.0 - self.pole_exclusion);
                let f_hi = f(hi);
                if f_hi <= 0.0 {
                    // branch frequency lies inside the exclusion radius
                    return Err(Error::PoleProximity { omega: hi, pole });
                }
                (hi, f_hi)
            }
            None => {
                let mut hi = (2.0 * lo).max(2.0 * self.bare_frequency(k));
                let mut f_hi = f(hi);
                while f_hi <= 0.0 {
                    hi *= 2.0;
                    f_hi = f(hi);
                }
                (hi, f_hi)
            }
        };
        self.check_monotone(lo, hi)?;
        bracketed_root(f, lo, hi, f_lo, f_hi, DEFAULT_RTOL)
    }

    fn check_monotone(&self, lo: f64, hi: f64) -> Result<()> {
        // d/dw (w^2 eps) = 2 w eps + w^2 eps'; eps' > 0 for Lorentz sums
        for t in [0.25, 0.5, 0.75] {
            let w = lo + t * (hi - lo);
            let slope = 2.0 * w * self.model.epsilon_unchecked(w) + w * w * self.model.derivative_unchecked(w);
            if self.model.is_propagative(w) && !(slope > 0.0) {
                return Err(Error::NonMonotone { lo, hi });
            }
        }
        Ok(())
    }

    /// All branch frequencies at `k`, ascending.
    pub fn branch_frequencies(&self, k: f64) -> Result<Vec<f64>> {
        (0..self.edges.len()).map(|i| self.branch_frequency(i, k)).collect()
    }

    /// Inverse dispersion `k = w sqrt(eps(w)) / c`.
    pub fn wavevector_of(&self, omega: f64) -> Result<f64> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidFrequency(omega));
        }
        let eps = self.model.epsilon_with(omega, self.pole_exclusion)?;
        if eps <= 0.0 {
            return Err(Error::GappedFrequency(omega));
        }
        Ok(omega * eps.sqrt() / self.c)
    }

    /// `dw/dk = 2 c^2 k / (2 w eps + w^2 eps')` from implicit differentiation.
    pub fn group_velocity(&self, omega: f64) -> Result<f64> {
        let k = self.wavevector_of(omega)?;
        let eps = self.model.epsilon_unchecked(omega);
        let deps = self.model.derivative_with(omega, self.pole_exclusion)?;
        Ok(2.0 * self.c * self.c * k / (2.0 * omega * eps + omega * omega * deps))
    }

    fn branch_group_velocity(&self, k: f64, omega: f64, eps_branch: f64) -> Result<f64> {
        let deps = self.model.derivative_with(omega, self.pole_exclusion)?;
        Ok(2.0 * self.c * self.c * k / (2.0 * omega * eps_branch + omega * omega * deps))
    }

    /// Hopfield coefficients `(X, Z)` of the branch through `(k, omega)`.
    pub fn hopfield_coefficients(&self, k: f64, omega: f64) -> Result<(f64, f64)> {
        let (x, z, _, _) = self.hopfield_parts(k, omega)?;
        Ok((x, z))
    }

    fn hopfield_parts(&self, k: f64, omega: f64) -> Result<(f64, f64, f64, f64)> {
        if k == 0.0 {
            return Err(Error::DegeneratePoint);
        }
        Self::check_k(k)?;
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidFrequency(omega));
        }
        let ck2 = (self.c * k).powi(2);
        let eps = self.model.epsilon_with(omega, self.pole_exclusion)?;
        let residual = (omega * omega * eps - ck2).abs() / ck2;
        if !(residual <= BRANCH_TOLERANCE) {
            return Err(Error::NotOnBranch { k, omega, residual });
        }
        let eps_branch = ck2 / (omega * omega);
        let vg = self.branch_group_velocity(k, omega, eps_branch)?;
        let sum = (vg / (self.c * eps_branch)).sqrt();
        let diff = self.bare_frequency(k) / omega * sum;
        Ok((0.5 * (sum + diff), 0.5 * (sum - diff), vg, eps_branch))
    }

    /// Every branch at `k` with its coefficients and group velocity.
    pub fn mode_solutions(&self, k: f64) -> Result<Vec<ModeSolution>> {
        Self::check_k(k)?;
        let bare = self.bare_frequency(k);
        (0..self.edges.len())
            .map(|branch| {
                let omega = self.branch_frequency(branch, k)?;
                let (x, z, group_velocity, epsilon) = self.hopfield_parts(k, omega)?;
                Ok(ModeSolution {
                    k,
                    branch,
                    omega,
                    x,
                    z,
                    group_velocity,
                    bare_frequency: bare,
                    epsilon,
                })
            })
            .collect()
    }

    /// `I(w)`: 1 on propagative bands, 0 in gaps.
    pub fn indicator(&self, omega: f64) -> u8 {
        indicator(self.model, omega)
    }
}

/// `I(w)`: 1 when eps(w) > 0, else 0.
pub fn indicator(model: &DielectricModel, omega: f64) -> u8 {
    u8::from(model.is_propagative(omega))
}
