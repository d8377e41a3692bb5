//! Normalized recursions for the filter `π_n`, the Zakai norm `|ρ_n|` and
//! the 2-form `Q_n = ρ_n ∧ ρ̄_n`.
//!
//! Every recursion renormalizes at each step and carries the logarithm of
//! the discarded norm, so horizons of 10⁸ steps never underflow. All norms
//! are L1: `|x| = Σ|x_i|` for vectors and the entrywise sum over all d²
//! entries for matrices.

use crate::error::{Error, Result};
use crate::model::{SimplexVector, TransitionMatrix};
use crate::noise::{Likelihoods, NoiseModel};

/// Relative slack allowed in [`sandwich_holds`].
pub const SANDWICH_RTOL: f64 = 1e-9;

/// One-step prediction `Λ* π`.
pub fn predict(lambda: &TransitionMatrix, pi: &SimplexVector) -> SimplexVector {
    let mut out = vec![0.0; pi.dim()];
    lambda.apply_transpose(pi.as_slice(), &mut out);
    let sum: f64 = out.iter().sum();
    SimplexVector::from_normalized(out.into_iter().map(|v| v / sum).collect())
}

/// Normalized filter `π_n = ρ_n / |ρ_n|` with `log |ρ_n|` accumulated.
#[derive(Debug, Clone)]
pub struct FilterState {
    pi: SimplexVector,
    log_norm: f64,
    predicted: Vec<f64>,
    steps: u64,
}

impl FilterState {
    /// Filter started at `π_0 = ν`; `log |ρ_0| = log |ν| = 0`.
    pub fn new(nu: SimplexVector) -> Self {
        let d = nu.dim();
        Self { pi: nu, log_norm: 0.0, predicted: vec![0.0; d], steps: 0 }
    }

    pub fn pi(&self) -> &SimplexVector {
        &self.pi
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// `Λ* π_{n-1}` from the most recent step.
    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }

    /// Advances one observation and returns the increment
    /// `log |G(y) Λ* π_{n-1}|`.
    #[inline]
    pub fn advance(&mut self, lambda: &TransitionMatrix, lik: &Likelihoods) -> Result<f64> {
        self.steps += 1;
        lambda.apply_transpose(self.pi.as_slice(), &mut self.predicted);
        let pi = self.pi.as_mut_slice();
        let mut norm = 0.0;
        for ((p, &q), &g) in pi.iter_mut().zip(&self.predicted).zip(&lik.values) {
            *p = g * q;
            norm += *p;
        }
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::ZeroLikelihood { step: self.steps });
        }
        pi.iter_mut().for_each(|p| *p /= norm);
        let increment = norm.ln() + lik.log_scale;
        self.log_norm += increment;
        Ok(increment)
    }
}

/// Functional form of [`FilterState::advance`].
pub fn filter_step(lambda: &TransitionMatrix, noise: &NoiseModel, state: &FilterState, y: f64) -> Result<FilterState> {
    let mut lik = Likelihoods::new(noise.dim());
    noise.likelihoods(y, &mut lik)?;
    let mut next = state.clone();
    next.advance(lambda, &lik)?;
    Ok(next)
}

/// Normalized antisymmetric `Π_n = Q_n / |Q_n|` with `log |Q_n|` accumulated.
#[derive(Debug, Clone)]
pub struct WedgeState {
    dim: usize,
    pi: Vec<f64>,
    log_norm: f64,
    scratch: Vec<f64>,
    steps: u64,
}

/// `Q_0 = ν ∧ ν̄ = ½ (ν ν̄* - ν̄ ν*)`, normalized.
pub fn wedge_init(nu: &SimplexVector, nu_bar: &SimplexVector) -> Result<WedgeState> {
    let d = nu.dim();
    if nu_bar.dim() != d {
        return Err(Error::DimensionMismatch(format!("initial laws of dimension {d} and {}", nu_bar.dim())));
    }
    let mut pi = vec![0.0; d * d];
    let mut norm = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (nu[i] * nu_bar[j] - nu_bar[i] * nu[j]);
            pi[i * d + j] = v;
            pi[j * d + i] = -v;
            norm += 2.0 * v.abs();
        }
    }
    if norm == 0.0 {
        return Err(Error::DegenerateWedge);
    }
    pi.iter_mut().for_each(|v| *v /= norm);
    Ok(WedgeState { dim: d, pi, log_norm: norm.ln(), scratch: vec![0.0; d * d], steps: 0 })
}

impl WedgeState {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major `Π_n`.
    pub fn matrix(&self) -> &[f64] {
        &self.pi
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pi[i * self.dim + j]
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// Advances `Q ↦ G(y) Λ* Q Λ G(y)` and returns `log` of the
    /// pre-normalization norm.
    ///
    /// Only the upper triangle is computed; the lower one is its negation,
    /// so antisymmetry holds exactly.
    #[inline]
    pub fn advance(&mut self, lambda: &TransitionMatrix, lik: &Likelihoods) -> Result<f64> {
        self.steps += 1;
        let d = self.dim;
        // scratch = Π Λ
        for k in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for l in 0..d {
                    acc += self.pi[k * d + l] * lambda.get(l, j);
                }
                self.scratch[k * d + j] = acc;
            }
        }
        let g = &lik.values;
        let mut norm = 0.0;
        for i in 0..d {
            self.pi[i * d + i] = 0.0;
            for j in (i + 1)..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += lambda.get(k, i) * self.scratch[k * d + j];
                }
                let v = g[i] * acc * g[j];
                self.pi[i * d + j] = v;
                norm += 2.0 * v.abs();
            }
        }
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::ZeroLikelihood { step: self.steps });
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let v = self.pi[i * d + j] / norm;
                self.pi[i * d + j] = v;
                self.pi[j * d + i] = -v;
            }
        }
        let increment = norm.ln() + 2.0 * lik.log_scale;
        self.log_norm += increment;
        Ok(increment)
    }
}

/// Functional form of [`WedgeState::advance`].
pub fn wedge_step(lambda: &TransitionMatrix, noise: &NoiseModel, state: &WedgeState, y: f64) -> Result<WedgeState> {
    let mut lik = Likelihoods::new(noise.dim());
    noise.likelihoods(y, &mut lik)?;
    let mut next = state.clone();
    next.advance(lambda, &lik)?;
    Ok(next)
}

/// `r ≤ d ≤ 2r` up to [`SANDWICH_RTOL`], where `d = |π - π̄|` and
/// `r = |ρ ∧ ρ̄| / (|ρ| |ρ̄|)`.
pub fn sandwich_holds(distance: f64, wedge_ratio: f64) -> bool {
    let slack = 1.0 + SANDWICH_RTOL;
    wedge_ratio <= distance * slack && distance <= 2.0 * wedge_ratio * slack
}

/// [`sandwich_holds`] with the distance taken directly from two filters.
pub fn sandwich_check(pi: &SimplexVector, pi_bar: &SimplexVector, wedge_ratio: f64) -> bool {
    sandwich_holds(pi.l1_distance(pi_bar), wedge_ratio)
}

/// `|ρ ∧ ρ̄| / (|ρ| |ρ̄|)` from synchronized log-norms.
pub fn wedge_ratio(wedge: &WedgeState, rho_log_norm: f64, rho_bar_log_norm: f64) -> f64 {
    (wedge.log_norm - rho_log_norm - rho_bar_log_norm).exp()
}

/// Two filters driven by the same observations, stored as `π̄` plus the
/// difference `δ = π - π̄`.
///
/// The difference is propagated through its own update so that `|π - π̄|`
/// keeps full relative precision far below the rounding level of `π`
/// itself: with `u = G Λ* π`, `ū = G Λ* π̄`, `c = |u|`, `c̄ = |ū|`,
/// `δ' = (u - ū)/c - ū (c - c̄)/(c c̄)`, and `u - ū = G Λ* δ` is formed
/// without cancellation.
#[derive(Debug, Clone)]
pub struct FilterPair {
    bar: FilterState,
    delta: Vec<f64>,
    log_norm: f64,
    predicted_delta: Vec<f64>,
}

impl FilterPair {
    pub fn new(nu: &SimplexVector, nu_bar: &SimplexVector) -> Result<Self> {
        if nu.dim() != nu_bar.dim() {
            return Err(Error::DimensionMismatch("initial laws differ in dimension".into()));
        }
        let delta = nu.as_slice().iter().zip(nu_bar.as_slice()).map(|(a, b)| a - b).collect();
        Ok(Self {
            bar: FilterState::new(nu_bar.clone()),
            delta,
            log_norm: 0.0,
            predicted_delta: vec![0.0; nu.dim()],
        })
    }

    /// `|π_n - π̄_n|`.
    pub fn distance(&self) -> f64 {
        self.delta.iter().map(|v| v.abs()).sum()
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn pi_bar(&self) -> &SimplexVector {
        self.bar.pi()
    }

    /// `π_n = π̄_n + δ_n`.
    pub fn pi(&self) -> Vec<f64> {
        self.bar.pi().as_slice().iter().zip(&self.delta).map(|(a, b)| a + b).collect()
    }

    /// `log |ρ_n|`.
    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// `log |ρ̄_n|`.
    pub fn log_norm_bar(&self) -> f64 {
        self.bar.log_norm()
    }

    /// Advances both filters; returns the `(ρ, ρ̄)` log-norm increments.
    pub fn advance(&mut self, lambda: &TransitionMatrix, lik: &Likelihoods) -> Result<(f64, f64)> {
        let inc_bar = self.bar.advance(lambda, lik)?;
        let c_bar = (inc_bar - lik.log_scale).exp();
        lambda.apply_transpose(&self.delta, &mut self.predicted_delta);
        let mut dc = 0.0;
        for (du, &g) in self.predicted_delta.iter_mut().zip(&lik.values) {
            *du *= g;
            dc += *du;
        }
        let c = c_bar + dc;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::ZeroLikelihood { step: self.bar.steps() });
        }
        // ū/c̄ is the updated π̄.
        let pi_bar = self.bar.pi().as_slice();
        for ((d, &du), &pb) in self.delta.iter_mut().zip(&self.predicted_delta).zip(pi_bar) {
            *d = (du - pb * dc) / c;
        }
        let inc = c.ln() + lik.log_scale;
        self.log_norm += inc;
        Ok((inc, inc_bar))
    }
}
