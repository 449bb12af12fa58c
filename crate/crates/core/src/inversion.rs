//! Vacuum ellipsometry: recover eps(w) and Lorentz parameters from
//! normalized correlation spectra.
//!
//! The forward model is the ratio `sqrt(eps_r / eps(w)) I(w)`. It depends on
//! the oscillators only through `eps / eps_r`, so the background `eps_r`
//! must be supplied with the trace and is not fitted.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dielectric::{DielectricModel, Oscillator};
use crate::eos::{ratio_value, BAND_EDGE_FLOOR};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Relative rounding noise of the least-squares cost.
const COST_NOISE: f64 = 1e-12;

/// Samples with a ratio below this value are treated as gapped.
pub const GAP_THRESHOLD: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredTrace {
    pub omega: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Per-point standard deviation of `ratio`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    /// Background permittivity of the sample.
    pub eps_r: f64,
}

impl MeasuredTrace {
    pub fn validate(&self) -> Result<()> {
        if self.omega.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if self.ratio.len() != self.omega.len() {
            return Err(Error::InvalidTrace("ratio and omega lengths differ".into()));
        }
        if self.omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidTrace("frequency grid must be increasing".into()));
        }
        if self.ratio.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidTrace("ratio samples must be finite and >= 0".into()));
        }
        if let Some(s) = &self.sigma {
            if s.len() != self.omega.len() {
                return Err(Error::InvalidTrace("sigma and omega lengths differ".into()));
            }
            if s.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidTrace("sigma must be finite and >= 0".into()));
            }
        }
        if !(self.eps_r.is_finite() && self.eps_r > 0.0) {
            return Err(Error::InvalidTrace(format!(
                "eps_r must be positive, got {}",
                self.eps_r
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvertedPoint {
    pub omega: f64,
    /// `None` inside a detected gap.
    pub epsilon: Option<f64>,
}

/// A run of gapped samples. Edges are placed halfway between the last
/// propagative and the first gapped sample; a run touching the end of the
/// trace is open on that side and its edge is the outermost sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub points: Vec<InvertedPoint>,
    pub gaps: Vec<GapEstimate>,
}

pub fn invert_ratio(trace: &MeasuredTrace) -> Result<Inversion> {
    invert_ratio_with(trace, GAP_THRESHOLD)
}

/// `eps(w) = eps_r / ratio(w)^2` on propagative samples plus the gap runs.
pub fn invert_ratio_with(trace: &MeasuredTrace, threshold: f64) -> Result<Inversion> {
    trace.validate()?;
    let gapped: Vec<bool> = trace.ratio.iter().map(|&r| r < threshold).collect();
    if gapped.iter().all(|&g| g) {
        return Err(Error::AllGapped);
    }
    let points = trace
        .omega
        .iter()
        .zip(&trace.ratio)
        .zip(&gapped)
        .map(|((&omega, &r), &g)| InvertedPoint {
            omega,
            epsilon: (!g).then(|| trace.eps_r / (r * r)),
        })
        .collect();
    Ok(Inversion {
        points,
        gaps: gap_runs(&trace.omega, &gapped),
    })
}

fn gap_runs(omega: &[f64], gapped: &[bool]) -> Vec<GapEstimate> {
    let n = omega.len();
    let mut gaps = Vec::new();
    let mut i = 0;
    while i < n {
        if !gapped[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && gapped[i] {
            i += 1;
        }
        let end = i - 1;
        let lo_open = start == 0;
        let hi_open = end == n - 1;
        gaps.push(GapEstimate {
            lo: if lo_open {
                omega[0]
            } else {
                0.5 * (omega[start - 1] + omega[start])
            },
            hi: if hi_open {
                omega[n - 1]
            } else {
                0.5 * (omega[end] + omega[end + 1])
            },
            lo_open,
            hi_open,
        });
    }
    gaps
}

/// Noisy synthetic measurement: `ratio * (1 + sigma * n)`, `n ~ N(0, 1)`,
/// clipped at zero. Band-edge grid points (where the ratio diverges) are
/// left out of the trace. One normal draw is consumed per grid point.
pub fn synthesize_measurement(
    model: &DielectricModel,
    omega_grid: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<MeasuredTrace> {
    model.validate()?;
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be >= 0, got {noise_sigma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut omega = Vec::with_capacity(omega_grid.len());
    let mut ratio = Vec::with_capacity(omega_grid.len());
    let mut sigma = Vec::with_capacity(omega_grid.len());
    for &w in omega_grid {
        let n: f64 = StandardNormal.sample(&mut rng);
        let truth = match ratio_value(model, w) {
            Ok(r) => r,
            Err(Error::BandEdge(_)) => continue,
            Err(e) => return Err(e),
        };
        omega.push(w);
        ratio.push((truth * (1.0 + noise_sigma * n)).max(0.0));
        sigma.push(noise_sigma * truth);
    }
    let trace = MeasuredTrace {
        omega,
        ratio,
        sigma: (noise_sigma > 0.0).then_some(sigma),
        eps_r: model.eps_r(),
    };
    trace.validate()?;
    Ok(trace)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorBounds {
    pub omega: (f64, f64),
    pub g: (f64, f64),
}

impl Default for OscillatorBounds {
    fn default() -> Self {
        Self {
            omega: (f64::MIN_POSITIVE, f64::INFINITY),
            g: (0.0, f64::INFINITY),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the scaled gradient.
    pub gradient_tolerance: f64,
    pub gap_threshold: f64,
    /// Points closer than this many grid steps to a detected gap edge are
    /// down-weighted in proportion to their distance.
    pub edge_window: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-10,
            gap_threshold: GAP_THRESHOLD,
            edge_window: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub eps_r: f64,
    pub oscillators: Vec<Oscillator>,
    /// One-sigma errors from the local quadratic model, per parameter.
    pub std_errors: Vec<Oscillator>,
    /// Weighted residual sum of squares.
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub usable_points: usize,
    /// Cost `rss / 2` after each accepted step, starting with the guess.
    /// Non-increasing up to a relative rounding noise of 1e-12.
    pub cost_history: Vec<f64>,
}

impl FitResult {
    pub fn model(&self) -> DielectricModel {
        match self.oscillators.as_slice() {
            [o] => DielectricModel::Lorentz {
                eps_r: self.eps_r,
                omega_x: o.omega,
                g: o.g,
            },
            many => DielectricModel::MultiLorentz {
                eps_r: self.eps_r,
                oscillators: many.to_vec(),
            },
        }
    }
}

struct Problem {
    omega: Vec<f64>,
    data: Vec<f64>,
    /// `weight / scale` per point.
    factor: Vec<f64>,
}

impl Problem {
    fn new(trace: &MeasuredTrace, options: &FitOptions) -> Result<Self> {
        let inversion = invert_ratio_with(trace, options.gap_threshold)?;
        let edges: Vec<f64> = inversion
            .gaps
            .iter()
            .flat_map(|g| {
                let lo = (!g.lo_open).then_some(g.lo);
                let hi = (!g.hi_open).then_some(g.hi);
                lo.into_iter().chain(hi)
            })
            .collect();
        let n = trace.omega.len();
        let step = if n > 1 {
            (trace.omega[n - 1] - trace.omega[0]) / (n - 1) as f64
        } else {
            1.0
        };
        let window = options.edge_window * step;

        let mut p = Problem {
            omega: Vec::new(),
            data: Vec::new(),
            factor: Vec::new(),
        };
        for i in 0..n {
            let y = trace.ratio[i];
            if y < options.gap_threshold {
                continue;
            }
            let scale = match &trace.sigma {
                Some(s) if s[i] > 0.0 => s[i],
                _ => y,
            };
            let distance = edges
                .iter()
                .map(|e| (trace.omega[i] - e).abs())
                .fold(f64::INFINITY, f64::min);
            let weight = if window > 0.0 {
                (distance / window).min(1.0)
            } else {
                1.0
            };
            p.omega.push(trace.omega[i]);
            p.data.push(y);
            p.factor.push(weight / scale);
        }
        Ok(p)
    }

    /// Weighted residuals and their Jacobian at `params = [w_1, g_1, ...]`.
    fn evaluate(&self, params: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.omega.len();
        let np = params.len();
        let mut r = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, np);
        for i in 0..n {
            let w = self.omega[i];
            let mut u = 1.0;
            for pair in params.chunks_exact(2) {
                let (wj, gj) = (pair[0], pair[1]);
                u -= 4.0 * gj * gj / ((w - wj) * (w + wj));
            }
            let model = if u.is_finite() && u > BAND_EDGE_FLOOR {
                u.powf(-0.5)
            } else {
                0.0
            };
            r[i] = self.factor[i] * (model - self.data[i]);
            if model > 0.0 {
                // d model / d theta = -1/2 u^{-3/2} du/dtheta
                let lead = -0.5 * model * model * model * self.factor[i];
                for (j, pair) in params.chunks_exact(2).enumerate() {
                    let (wj, gj) = (pair[0], pair[1]);
                    let den = (w - wj) * (w + wj);
                    jac[(i, 2 * j)] = lead * (-8.0 * gj * gj * wj / (den * den));
                    jac[(i, 2 * j + 1)] = lead * (-8.0 * gj / den);
                }
            }
        }
        (r, jac)
    }
}

fn scaled_gradient(jac: &DMatrix<f64>, r: &DVector<f64>) -> f64 {
    let grad = jac.transpose() * r;
    let rnorm = r.norm().max(1.0);
    (0..jac.ncols())
        .map(|j| {
            let col = jac.column(j).norm();
            if col > 0.0 {
                grad[j].abs() / (col * rnorm)
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Weighted nonlinear least squares of the ratio model against a measured
/// trace (damped Gauss-Newton with Marquardt scaling and analytic
/// Jacobian). Accepted steps never raise the cost beyond rounding noise.
pub fn fit_lorentz(
    trace: &MeasuredTrace,
    initial: &[Oscillator],
    bounds: &[OscillatorBounds],
    options: &FitOptions,
) -> Result<FitResult> {
    trace.validate()?;
    if initial.is_empty() {
        return Err(Error::InvalidInitialGuess("no oscillators in the initial guess".into()));
    }
    if bounds.len() != initial.len() {
        return Err(Error::InvalidInitialGuess(format!(
            "{} bounds for {} oscillators",
            bounds.len(),
            initial.len()
        )));
    }
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut params = Vec::new();
    for (o, b) in initial.iter().zip(bounds) {
        for (v, (lo, hi), name) in [(o.omega, b.omega, "omega"), (o.g, b.g, "g")] {
            if !(lo <= hi) || !(v >= lo && v <= hi) || !v.is_finite() {
                return Err(Error::InvalidInitialGuess(format!(
                    "{name} = {v} is outside [{lo}, {hi}]"
                )));
            }
            lower.push(lo);
            upper.push(hi);
            params.push(v);
        }
    }
    if initial.iter().any(|o| o.omega <= 0.0) {
        return Err(Error::InvalidInitialGuess(
            "oscillator frequencies must be positive".into(),
        ));
    }

    let problem = Problem::new(trace, options)?;
    let needed = 3.max(params.len() + 1);
    if problem.omega.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            found: problem.omega.len(),
        });
    }

    let project = |p: &mut [f64]| {
        for (j, v) in p.iter_mut().enumerate() {
            *v = v.clamp(lower[j], upper[j]);
        }
    };

    let (mut r, mut jac) = problem.evaluate(&params);
    let mut cost = 0.5 * r.norm_squared();
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut gradient = scaled_gradient(&jac, &r);
    let mut converged = gradient < options.gradient_tolerance;

    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &r;
        let diag = jtj.diagonal();
        if diag.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::SingularJacobian);
        }

        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj.clone();
            for j in 0..params.len() {
                damped[(j, j)] += lambda * diag[j];
            }
            let Some(step) = damped.cholesky().map(|ch| ch.solve(&(-&g))) else {
                lambda *= 4.0;
                continue;
            };
            let mut trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            project(&mut trial);
            let (r_new, jac_new) = problem.evaluate(&trial);
            let cost_new = 0.5 * r_new.norm_squared();
            // Close to the optimum the predicted decrease drops below the
            // rounding noise of the cost; steps there are judged by the
            // gradient instead.
            let noise = COST_NOISE * cost;
            let predicted = -(g.dot(&step)) - 0.5 * (&jac * &step).norm_squared();
            let polish = predicted < noise && cost_new <= cost + noise && scaled_gradient(&jac_new, &r_new) < gradient;
            if cost_new < cost || polish {
                params = trial;
                r = r_new;
                jac = jac_new;
                cost = cost_new;
                history.push(cost);
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        gradient = scaled_gradient(&jac, &r);
        converged = gradient < options.gradient_tolerance;
        if !accepted {
            // no descent left at working precision
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations, gradient });
    }

    let jtj = jac.transpose() * &jac;
    let dof = problem.omega.len().saturating_sub(params.len()).max(1) as f64;
    let variance = 2.0 * cost / dof;
    let errors: Vec<f64> = match jtj.try_inverse() {
        Some(inv) => (0..params.len())
            .map(|j| (inv[(j, j)] * variance).max(0.0).sqrt())
            .collect(),
        None => return Err(Error::SingularJacobian),
    };

    Ok(FitResult {
        eps_r: trace.eps_r,
        oscillators: params.chunks_exact(2).map(|p| Oscillator::new(p[0], p[1])).collect(),
        std_errors: errors.chunks_exact(2).map(|e| Oscillator::new(e[0], e[1])).collect(),
        rss: 2.0 * cost,
        iterations,
        converged,
        gradient_norm: gradient,
        usable_points: problem.omega.len(),
        cost_history: history,
    })
}

/// Fit independent traces, in parallel when enabled. Results keep the
/// order of `traces`.
pub fn fit_many(
    traces: &[MeasuredTrace],
    initial: &[Oscillator],
    bounds: &[OscillatorBounds],
    options: &FitOptions,
    exec: Execution,
) -> Vec<Result<FitResult>> {
    exec::map(exec, traces, |t| fit_lorentz(t, initial, bounds, options))
}

/// Synthesize one noisy trace per seed and fit each.
pub fn monte_carlo_fits(
    model: &DielectricModel,
    omega_grid: &[f64],
    noise_sigma: f64,
    seeds: &[u64],
    initial: &[Oscillator],
    bounds: &[OscillatorBounds],
    options: &FitOptions,
    exec: Execution,
) -> Vec<Result<FitResult>> {
    exec::map(exec, seeds, |&seed| {
        let trace = synthesize_measurement(model, omega_grid, noise_sigma, seed)?;
        fit_lorentz(&trace, initial, bounds, options)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> DielectricModel {
        DielectricModel::lorentz(1.0, 1.0, 0.5).unwrap()
    }

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    fn one_bounds() -> Vec<OscillatorBounds> {
        vec![OscillatorBounds {
            omega: (0.1, 10.0),
            g: (0.0, 5.0),
        }]
    }

    #[test]
    fn identity_inversion() {
        let t = MeasuredTrace {
            omega: grid(0.1, 3.0, 20),
            ratio: vec![1.0; 20],
            sigma: None,
            eps_r: 2.5,
        };
        let inv = invert_ratio(&t).unwrap();
        assert!(inv.gaps.is_empty());
        assert!(inv.points.iter().all(|p| p.epsilon == Some(2.5)));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn static_limit_inversion() {
        let t = MeasuredTrace {
            omega: vec![1e-6],
            ratio: vec![0.707107],
            sigma: None,
            eps_r: 1.0,
        };
        let eps = invert_ratio(&t).unwrap().points[0].epsilon.unwrap();
        assert!((eps - 2.0).abs() < 1e-5);
    }

    #[test]
    fn noiseless_round_trip() {
        let m = fig2();
        let g = grid(0.01, 5.0, 1000);
        let t = synthesize_measurement(&m, &g, 0.0, 1).unwrap();
        assert!(t.sigma.is_none());
        let inv = invert_ratio(&t).unwrap();
        for p in &inv.points {
            if let Some(eps) = p.epsilon {
                let truth = m.epsilon(p.omega).unwrap();
                assert!((eps - truth).abs() <= 1e-10 * truth.abs());
            }
        }
        assert_eq!(inv.gaps.len(), 1);
        let step = g[1] - g[0];
        assert!((inv.gaps[0].lo - 1.0).abs() < step);
        assert!((inv.gaps[0].hi - 2f64.sqrt()).abs() < step);
    }

    #[test]
    fn gap_edges_converge_with_grid() {
        let m = fig2();
        let mut errors = Vec::new();
        for n in [100, 1000, 10_000] {
            let t = synthesize_measurement(&m, &grid(0.01, 5.0, n), 0.0, 0).unwrap();
            let gap = invert_ratio(&t).unwrap().gaps[0];
            errors.push((gap.lo - 1.0).abs().max((gap.hi - 2f64.sqrt()).abs()));
        }
        assert!(errors[1] < errors[0] && errors[2] < errors[1]);
        assert!(errors[2] < 5.0 / 10_000.0);
    }

    #[test]
    fn inversion_errors() {
        let empty = MeasuredTrace {
            omega: vec![],
            ratio: vec![],
            sigma: None,
            eps_r: 1.0,
        };
        assert_eq!(invert_ratio(&empty), Err(Error::EmptyTrace));
        let gapped = MeasuredTrace {
            omega: vec![1.0, 2.0],
            ratio: vec![0.0, 0.01],
            sigma: None,
            eps_r: 1.0,
        };
        assert_eq!(invert_ratio(&gapped), Err(Error::AllGapped));
    }

    #[test]
    fn synthesis_is_reproducible() {
        let g = grid(0.05, 3.0, 50);
        let a = synthesize_measurement(&fig2(), &g, 0.01, 42).unwrap();
        let b = synthesize_measurement(&fig2(), &g, 0.01, 42).unwrap();
        let c = synthesize_measurement(&fig2(), &g, 0.01, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let exact = synthesize_measurement(&fig2(), &g, 0.0, 42).unwrap();
        for (w, r) in exact.omega.iter().zip(&exact.ratio) {
            assert_eq!(*r, ratio_value(&fig2(), *w).unwrap());
        }
    }

    #[test]
    fn sample_mean_converges() {
        let sigma = 0.05;
        let truth = ratio_value(&fig2(), 2.0).unwrap();
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|seed| synthesize_measurement(&fig2(), &[2.0], sigma, seed).unwrap().ratio[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - truth).abs() < 3.0 * sigma * truth / 100.0);
    }

    #[test]
    fn noiseless_fit_recovers_parameters() {
        let t = synthesize_measurement(&fig2(), &grid(0.05, 3.0, 400), 0.0, 0).unwrap();
        let fit = fit_lorentz(&t, &[Oscillator::new(1.2, 0.4)], &one_bounds(), &FitOptions::default()).unwrap();
        assert!(fit.converged);
        let o = fit.oscillators[0];
        assert!((o.omega - 1.0).abs() < 1e-6, "{o:?}");
        assert!((o.g - 0.5).abs() < 0.5e-6, "{o:?}");
        assert!(fit.cost_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn noisy_fit_is_close_and_deterministic() {
        let t = synthesize_measurement(&fig2(), &grid(0.05, 3.0, 400), 0.01, 7).unwrap();
        let a = fit_lorentz(&t, &[Oscillator::new(1.2, 0.4)], &one_bounds(), &FitOptions::default()).unwrap();
        let b = fit_lorentz(&t, &[Oscillator::new(1.2, 0.4)], &one_bounds(), &FitOptions::default()).unwrap();
        assert_eq!(a, b);
        let o = a.oscillators[0];
        assert!((o.omega - 1.0).abs() < 0.02 && (o.g - 0.5).abs() < 0.01);
        assert!(a.std_errors[0].omega > 0.0 && a.std_errors[0].g > 0.0);
        assert!(a.cost_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn multi_oscillator_fit() {
        let m =
            DielectricModel::multi_lorentz(1.5, vec![Oscillator::new(1.0, 0.2), Oscillator::new(2.0, 0.3)]).unwrap();
        let t = synthesize_measurement(&m, &grid(0.05, 4.0, 600), 0.0, 0).unwrap();
        let bounds = vec![OscillatorBounds::default(); 2];
        let fit = fit_lorentz(
            &t,
            &[Oscillator::new(1.05, 0.18), Oscillator::new(1.95, 0.33)],
            &bounds,
            &FitOptions::default(),
        )
        .unwrap();
        assert!((fit.oscillators[0].omega - 1.0).abs() < 1e-6);
        assert!((fit.oscillators[1].g - 0.3).abs() < 1e-6);
        assert_eq!(
            fit.model(),
            DielectricModel::MultiLorentz {
                eps_r: 1.5,
                oscillators: fit.oscillators.clone(),
            }
        );
    }

    #[test]
    fn guess_outside_bounds_is_rejected() {
        let t = synthesize_measurement(&fig2(), &grid(0.05, 3.0, 100), 0.0, 0).unwrap();
        let r = fit_lorentz(&t, &[Oscillator::new(20.0, 0.4)], &one_bounds(), &FitOptions::default());
        assert!(matches!(r, Err(Error::InvalidInitialGuess(_))));
    }

    #[test]
    fn too_few_points() {
        let t = MeasuredTrace {
            omega: vec![0.5, 2.0],
            ratio: vec![0.8, 1.2],
            sigma: None,
            eps_r: 1.0,
        };
        let r = fit_lorentz(&t, &[Oscillator::new(1.0, 0.5)], &one_bounds(), &FitOptions::default());
        assert!(matches!(r, Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn zero_coupling_guess_is_singular() {
        let t = synthesize_measurement(&fig2(), &grid(0.05, 3.0, 100), 0.0, 0).unwrap();
        let r = fit_lorentz(&t, &[Oscillator::new(1.0, 0.0)], &one_bounds(), &FitOptions::default());
        assert_eq!(r, Err(Error::SingularJacobian));
    }
}
