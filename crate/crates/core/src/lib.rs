//! Electro-optic sampling of vacuum fluctuations in lossless dispersive
//! dielectrics.
//!
//! The crate solves polariton dispersions for Lorentz-type dielectric
//! functions, builds Hopfield coefficients and group velocities, evaluates
//! vacuum and polariton correlation spectra of the electro-optic signal,
//! and inverts the normalized spectrum (a vacuum ellipsometry measurement)
//! back to the dielectric function.
//!
//! ```
//! use eosvac::{eos, DielectricModel, Dispersion, PhysicalConstants};
//!
//! let model = DielectricModel::lorentz(1.0, 1.0, 0.5)?;
//! let disp = Dispersion::new(&model, &PhysicalConstants::reduced())?;
//! let branches = disp.branch_frequencies(1.0)?;
//! assert!((branches[0] - 0.618034).abs() < 1e-6);
//! assert!((eos::ratio_value(&model, 2.0)? - 1.224745).abs() < 1e-6);
//! # Ok::<(), eosvac::Error>(())
//! ```

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::too_many_arguments
)]

pub mod cli;
pub mod dielectric;
pub mod eos;
pub mod error;
pub mod exec;
pub mod inversion;
pub mod io;
pub mod polariton;
pub mod quadrature;
pub mod roots;
pub mod units;
pub mod vacuum;

pub use dielectric::{BandStructure, DielectricModel, Interval, Oscillator};
pub use error::{Error, Result};
pub use exec::Execution;
pub use polariton::{Dispersion, ModeSolution};
pub use units::{PhysicalConstants, UnitsMode};
