//! Observation noise families `g_i(u)` with respect to a reference measure
//! `φ`: counting measure on a finite alphabet, Lebesgue measure for the
//! Gaussian family, or explicit grid weights for tabulated densities.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Tabulated per-state masses must sum to 1 within this tolerance.
pub const TABULATED_MASS_TOLERANCE: f64 = 1e-8;

/// Finite alphabet `b_1..b_{d'}` with row-stochastic emission probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteEmission {
    alphabet: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    states: usize,
}

impl DiscreteEmission {
    pub fn new(alphabet: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let k = alphabet.len();
        if k == 0 {
            return Err(Error::InvalidNoise("empty alphabet".into()));
        }
        for (a, &b) in alphabet.iter().enumerate() {
            if !b.is_finite() || alphabet[..a].contains(&b) {
                return Err(Error::InvalidNoise(format!("alphabet symbol {b} repeated or not finite")));
            }
        }
        let mut probs = Vec::with_capacity(rows.len() * k);
        let mut cumulative = Vec::with_capacity(rows.len() * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch(format!("emission row {i} has {} entries, alphabet has {k}", row.len())));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::NegativeEntry { row: i, col: j, value: row[j] });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > crate::model::SUM_TOLERANCE {
                return Err(Error::RowSumViolation { row: i, deviation: sum - 1.0 });
            }
            let mut acc = 0.0;
            for &v in row {
                probs.push(v / sum);
                acc += v / sum;
                cumulative.push(acc);
            }
        }
        Ok(Self { alphabet, probs, cumulative, states: rows.len() })
    }

    pub fn alphabet(&self) -> &[f64] {
        &self.alphabet
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet.len()
    }

    /// `p_ik = g_i(b_k)`.
    #[inline]
    pub fn prob(&self, state: usize, symbol: usize) -> f64 {
        self.probs[state * self.alphabet.len() + symbol]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        let k = self.alphabet.len();
        &self.probs[state * k..(state + 1) * k]
    }

    #[inline]
    pub fn symbol_index(&self, y: f64) -> Option<usize> {
        self.alphabet.iter().position(|&b| b == y)
    }
}

/// `Y = h(X) + σ η` with standard normal `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNoise {
    means: Vec<f64>,
    sigma: f64,
}

impl GaussianNoise {
    pub fn new(means: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidNoise(format!("sigma must be positive, got {sigma}")));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidNoise("means must be finite".into()));
        }
        Ok(Self { means, sigma })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    fn log_density(&self, i: usize, y: f64) -> f64 {
        let z = (y - self.means[i]) / self.sigma;
        -0.5 * z * z - (self.sigma * (2.0 * PI).sqrt()).ln()
    }
}

/// Densities tabulated on a common grid; `weights` are the φ-masses of
/// the grid cells, so `Σ_k w_k g_i(u_k)` approximates `∫ g_i dφ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedNoise {
    grid: Vec<f64>,
    weights: Vec<f64>,
    densities: Vec<f64>,
    cumulative: Vec<f64>,
    states: usize,
}

impl TabulatedNoise {
    pub fn new(grid: Vec<f64>, weights: Vec<f64>, densities: Vec<Vec<f64>>) -> Result<Self> {
        let m = grid.len();
        if m == 0 || weights.len() != m {
            return Err(Error::InvalidNoise("grid and weights must be non-empty with equal length".into()));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidNoise("grid must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidNoise("grid weights must be nonnegative".into()));
        }
        let mut flat = Vec::with_capacity(densities.len() * m);
        let mut cumulative = Vec::with_capacity(densities.len() * m);
        for (i, row) in densities.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch(format!("density row {i} has {} values, grid has {m}", row.len())));
            }
            if let Some(k) = row.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidNoise(format!("density of state {i} at node {k} is negative or unbounded")));
            }
            let mut acc = 0.0;
            for (g, w) in row.iter().zip(&weights) {
                acc += g * w;
                cumulative.push(acc);
            }
            if (acc - 1.0).abs() > TABULATED_MASS_TOLERANCE {
                return Err(Error::InvalidNoise(format!("state {i} grid mass is {acc}, not 1")));
            }
            flat.extend_from_slice(row);
        }
        Ok(Self { grid, weights, densities: flat, cumulative, states: densities.len() })
    }

    /// Tabulates `density(i, u)` on `grid` for states `0..states`.
    pub fn from_fn(grid: Vec<f64>, weights: Vec<f64>, states: usize, density: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let rows = (0..states).map(|i| grid.iter().map(|&u| density(i, u)).collect()).collect();
        Self::new(grid, weights, rows)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    fn node(&self, state: usize, k: usize) -> f64 {
        self.densities[state * self.grid.len() + k]
    }

    /// Exact value at grid nodes, linear interpolation between them, zero
    /// outside the grid.
    fn density(&self, state: usize, y: f64) -> f64 {
        let m = self.grid.len();
        if !(y >= self.grid[0] && y <= self.grid[m - 1]) {
            return 0.0;
        }
        let k = self.grid.partition_point(|&u| u < y);
        if self.grid[k] == y {
            return self.node(state, k);
        }
        let (u0, u1) = (self.grid[k - 1], self.grid[k]);
        let t = (y - u0) / (u1 - u0);
        (1.0 - t) * self.node(state, k - 1) + t * self.node(state, k)
    }
}

/// Tagged family of observation densities.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    Discrete(DiscreteEmission),
    Gaussian(GaussianNoise),
    Tabulated(TabulatedNoise),
}

/// Likelihood vector `g(y)` for one observation, stored as
/// `g_i(y) = values[i] * exp(log_scale)` so Gaussian tails cannot underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct Likelihoods {
    pub values: Vec<f64>,
    pub log_scale: f64,
}

impl Likelihoods {
    pub fn new(dim: usize) -> Self {
        Self { values: vec![0.0; dim], log_scale: 0.0 }
    }
}

/// Outcome of checking the admissibility conditions on the noise family.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// Every density is bounded.
    pub a1_bounded: bool,
    /// All densities share one support.
    pub a2_common_support: bool,
    /// Every `∫ g_i log g_j dφ` is finite.
    pub a3_finite_cross_entropies: bool,
    /// Ordered state pairs `(i, j)` violating a2 or a3.
    pub witnesses: Vec<(usize, usize)>,
}

impl AssumptionReport {
    pub fn admissible(&self) -> bool {
        self.a1_bounded && self.a2_common_support && self.a3_finite_cross_entropies
    }
}

impl NoiseModel {
    pub fn discrete(alphabet: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        DiscreteEmission::new(alphabet, rows).map(Self::Discrete)
    }

    pub fn gaussian(means: Vec<f64>, sigma: f64) -> Result<Self> {
        GaussianNoise::new(means, sigma).map(Self::Gaussian)
    }

    /// Bit-flip channel on {0, 1}: `g_i(y) = 1 - p` if `y = i`, else `p`.
    pub fn binary_symmetric(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::POutOfRange(p));
        }
        Self::discrete(vec![0.0, 1.0], &[vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Discrete(e) => e.states,
            Self::Gaussian(g) => g.means.len(),
            Self::Tabulated(t) => t.states,
        }
    }

    fn check_state(&self, i: usize) -> Result<()> {
        if i >= self.dim() {
            return Err(Error::DimensionMismatch(format!("state {i} out of range for d = {}", self.dim())));
        }
        Ok(())
    }

    /// `g_i(y)`.
    pub fn density(&self, i: usize, y: f64) -> Result<f64> {
        self.check_state(i)?;
        Ok(match self {
            Self::Discrete(e) => e.prob(i, e.symbol_index(y).ok_or(Error::UnknownSymbol(y))?),
            Self::Gaussian(g) => g.log_density(i, y).exp(),
            Self::Tabulated(t) => t.density(i, y),
        })
    }

    /// Fills `out` with the (scaled) likelihood vector of `y`.
    pub fn likelihoods(&self, y: f64, out: &mut Likelihoods) -> Result<()> {
        match self {
            Self::Discrete(e) => {
                let k = e.symbol_index(y).ok_or(Error::UnknownSymbol(y))?;
                for (i, v) in out.values.iter_mut().enumerate() {
                    *v = e.prob(i, k);
                }
                out.log_scale = 0.0;
            }
            Self::Gaussian(g) => {
                let mut max = f64::NEG_INFINITY;
                for (i, v) in out.values.iter_mut().enumerate() {
                    *v = g.log_density(i, y);
                    max = max.max(*v);
                }
                for v in out.values.iter_mut() {
                    *v = (*v - max).exp();
                }
                out.log_scale = max;
            }
            Self::Tabulated(t) => {
                for (i, v) in out.values.iter_mut().enumerate() {
                    *v = t.density(i, y);
                }
                out.log_scale = 0.0;
            }
        }
        Ok(())
    }

    /// Draws an observation from `g_i`.
    pub fn sample<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> f64 {
        match self {
            Self::Discrete(e) => {
                let k = e.alphabet.len();
                let cum = &e.cumulative[i * k..(i + 1) * k];
                let u: f64 = rng.random();
                let idx = cum.partition_point(|&c| c <= u).min(k - 1);
                e.alphabet[idx]
            }
            Self::Gaussian(g) => {
                let z: f64 = StandardNormal.sample(rng);
                g.means[i] + g.sigma * z
            }
            Self::Tabulated(t) => {
                let m = t.grid.len();
                let cum = &t.cumulative[i * m..(i + 1) * m];
                let u: f64 = rng.random::<f64>() * cum[m - 1];
                let idx = cum.partition_point(|&c| c <= u).min(m - 1);
                t.grid[idx]
            }
        }
    }

    /// `∫ g_i log g_j dφ`; [`Error::Divergent`] when the integral is `-∞`.
    pub fn cross_entropy_integral(&self, i: usize, j: usize) -> Result<f64> {
        self.check_state(i)?;
        self.check_state(j)?;
        match self {
            Self::Discrete(e) => {
                let mut acc = 0.0;
                for (&p, &q) in e.row(i).iter().zip(e.row(j)) {
                    if p > 0.0 {
                        if q == 0.0 {
                            return Err(Error::Divergent { i, j });
                        }
                        acc += p * q.ln();
                    }
                }
                Ok(acc)
            }
            Self::Gaussian(g) => {
                let s2 = g.sigma * g.sigma;
                let gap = g.means[i] - g.means[j];
                Ok(-0.5 * (2.0 * PI * s2).ln() - (s2 + gap * gap) / (2.0 * s2))
            }
            Self::Tabulated(t) => {
                let mut acc = 0.0;
                for (k, &w) in t.weights.iter().enumerate() {
                    let (p, q) = (t.node(i, k), t.node(j, k));
                    if p > 0.0 && w > 0.0 {
                        if q == 0.0 {
                            return Err(Error::Divergent { i, j });
                        }
                        acc += w * p * q.ln();
                    }
                }
                Ok(acc)
            }
        }
    }

    /// `𝒟(g_i ‖ g_j)`.
    pub fn kl_divergence(&self, i: usize, j: usize) -> Result<f64> {
        self.check_state(i)?;
        self.check_state(j)?;
        let relative = |p: &mut dyn Iterator<Item = (f64, f64, f64)>| -> Result<f64> {
            let mut acc = 0.0;
            for (w, p, q) in p {
                if p > 0.0 && w > 0.0 {
                    if q == 0.0 {
                        return Err(Error::Divergent { i, j });
                    }
                    acc += w * p * (p / q).ln();
                }
            }
            Ok(acc.max(0.0))
        };
        match self {
            Self::Discrete(e) => relative(&mut e.row(i).iter().zip(e.row(j)).map(|(&p, &q)| (1.0, p, q))),
            Self::Gaussian(g) => {
                let gap = g.means[i] - g.means[j];
                Ok(gap * gap / (2.0 * g.sigma * g.sigma))
            }
            Self::Tabulated(t) => {
                relative(&mut (0..t.grid.len()).map(|k| (t.weights[k], t.node(i, k), t.node(j, k))))
            }
        }
    }

    /// Checks boundedness, common support and finiteness of the
    /// cross-entropy integrals.
    pub fn validate_assumptions(&self) -> AssumptionReport {
        let d = self.dim();
        let mut witnesses = Vec::new();
        let mut a2 = true;
        let mut a3 = true;
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                let same_support = match self {
                    Self::Discrete(e) => e.row(i).iter().zip(e.row(j)).all(|(p, q)| (*p > 0.0) == (*q > 0.0)),
                    Self::Gaussian(_) => true,
                    Self::Tabulated(t) => (0..t.grid.len()).all(|k| (t.node(i, k) > 0.0) == (t.node(j, k) > 0.0)),
                };
                let finite = self.cross_entropy_integral(i, j).is_ok();
                a2 &= same_support;
                a3 &= finite;
                if !same_support || !finite {
                    witnesses.push((i, j));
                }
            }
        }
        // Every variant stores finite values only, and σ > 0 bounds the Gaussian.
        AssumptionReport { a1_bounded: true, a2_common_support: a2, a3_finite_cross_entropies: a3, witnesses }
    }

    /// Tabulated copy of this model, used as a quadrature oracle.
    ///
    /// Discrete models tabulate on their alphabet with unit weights; Gaussian
    /// models on `points` nodes spanning ±10σ around the means, with
    /// trapezoidal weights.
    pub fn to_tabulated(&self, points: usize) -> Result<TabulatedNoise> {
        match self {
            Self::Discrete(e) => {
                let mut order: Vec<usize> = (0..e.alphabet.len()).collect();
                order.sort_by(|&a, &b| e.alphabet[a].total_cmp(&e.alphabet[b]));
                let grid = order.iter().map(|&k| e.alphabet[k]).collect();
                let rows = (0..e.states).map(|i| order.iter().map(|&k| e.prob(i, k)).collect()).collect();
                TabulatedNoise::new(grid, vec![1.0; e.alphabet.len()], rows)
            }
            Self::Gaussian(g) => {
                if points < 2 {
                    return Err(Error::InvalidNoise("need at least 2 grid points".into()));
                }
                let lo = g.means.iter().cloned().fold(f64::INFINITY, f64::min) - 10.0 * g.sigma;
                let hi = g.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 10.0 * g.sigma;
                let h = (hi - lo) / (points - 1) as f64;
                let grid: Vec<f64> = (0..points).map(|k| lo + h * k as f64).collect();
                let weights = (0..points).map(|k| if k == 0 || k == points - 1 { h / 2.0 } else { h }).collect();
                TabulatedNoise::from_fn(grid, weights, g.means.len(), |i, u| g.log_density(i, u).exp())
            }
            Self::Tabulated(t) => Ok(t.clone()),
        }
    }
}
