//! Long-horizon Monte Carlo estimators of exponential rates along one
//! simulated trajectory, with batch-means standard errors.
//!
//! Every estimator is a pure function of `(spec, cfg)`: the trajectory is
//! drawn from the streams selected by `cfg.seed` and `cfg.replica`, with
//! `X_0` drawn from the stationary law.

use crate::error::{Error, Result};
use crate::filter::{wedge_init, FilterPair, FilterState, WedgeState};
use crate::model::{HmmSpec, SimplexVector};
use crate::noise::{Likelihoods, NoiseModel};
use crate::sim::{InitialState, Step, TrajectorySampler};

pub const MIN_BATCHES: usize = 20;
pub const DEFAULT_BATCHES: usize = 50;
/// Direct distance tracking stops once `|π - π̄|` drops below this.
pub const DEFAULT_UNDERFLOW_FLOOR: f64 = 1e-250;
/// Fewest usable steps per replica for [`estimate_gamma_direct`].
pub const MIN_DIRECT_STEPS: usize = 100;

/// Which estimator produced a [`RateEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Lambda1,
    WedgeRate,
    WedgeDecomposition,
    Direct,
    EntropyRate,
    Misclassification,
    Concentration,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Lambda1 => "lambda1",
            Method::WedgeRate => "wedge-rate",
            Method::WedgeDecomposition => "wedge-decomposition",
            Method::Direct => "direct",
            Method::EntropyRate => "entropy-rate",
            Method::Misclassification => "misclassification",
            Method::Concentration => "concentration",
        }
    }
}

/// Time average of per-step increments with its batch-means error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Total steps simulated, including burn-in.
    pub n: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub method: Method,
}

impl RateEstimate {
    /// `|self - other| / sqrt(se² + se'²)`, or infinity when both are exact
    /// and differ.
    pub fn z_score(&self, other: f64, other_stderr: f64) -> f64 {
        let se = self.stderr.hypot(other_stderr);
        let diff = (self.value - other).abs();
        if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Horizon, burn-in, batching, seed and initial laws for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Total simulated steps, burn-in included.
    pub n: u64,
    pub burn_in: u64,
    pub batches: usize,
    pub seed: u64,
    /// Replica index selecting independent streams under the same seed.
    pub replica: u64,
    pub nu: SimplexVector,
    pub nu_bar: SimplexVector,
}

impl EstimatorConfig {
    pub fn new(n: u64, burn_in: u64, batches: usize, seed: u64, nu: SimplexVector, nu_bar: SimplexVector) -> Result<Self> {
        let cfg = Self { n, burn_in, batches, seed, replica: 0, nu, nu_bar };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults for a slow chain at `eps`: burn-in `max(10⁴, 10⌈1/ε⌉)`,
    /// horizon `max(10⁶, 100/ε)` rounded up to fill the batches, and
    /// point-mass priors on the first and last states.
    pub fn for_eps(dim: usize, eps: f64, seed: u64) -> Self {
        let burn_in = default_burn_in(eps);
        let n = default_horizon(eps).max(burn_in + 1);
        Self {
            n,
            burn_in,
            batches: DEFAULT_BATCHES,
            seed,
            replica: 0,
            nu: SimplexVector::point_mass(dim, 0),
            nu_bar: SimplexVector::point_mass(dim, dim - 1),
        }
        .fitted()
    }

    /// Total horizon `n`, rounded up so the recorded part fills the batches.
    pub fn with_horizon(mut self, n: u64) -> Self {
        self.n = n.max(self.burn_in + 1);
        self.fitted()
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self.n = self.n.max(burn_in + 1);
        self.fitted()
    }

    pub fn with_batches(mut self, batches: usize) -> Self {
        self.batches = batches;
        self.fitted()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replica(mut self, replica: u64) -> Self {
        self.replica = replica;
        self
    }

    pub fn with_priors(mut self, nu: SimplexVector, nu_bar: SimplexVector) -> Self {
        self.nu = nu;
        self.nu_bar = nu_bar;
        self
    }

    fn fitted(mut self) -> Self {
        let b = self.batches.max(1) as u64;
        let recorded = self.n - self.burn_in.min(self.n);
        self.n = self.burn_in + recorded.div_ceil(b).max(1) * b;
        self
    }

    pub fn recorded(&self) -> u64 {
        self.n.saturating_sub(self.burn_in)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n <= self.burn_in {
            return Err(Error::InvalidConfig(format!("horizon {} must exceed burn-in {}", self.n, self.burn_in)));
        }
        let recorded = self.recorded();
        if self.batches < MIN_BATCHES || !recorded.is_multiple_of(self.batches as u64) {
            return Err(Error::BadPartition { len: recorded as usize, batches: self.batches });
        }
        if self.nu.dim() != self.nu_bar.dim() {
            return Err(Error::DimensionMismatch("nu and nu_bar differ in dimension".into()));
        }
        Ok(())
    }
}

pub fn default_burn_in(eps: f64) -> u64 {
    let mixing = if eps > 0.0 { 10 * (1.0 / eps).ceil() as u64 } else { 0 };
    mixing.max(10_000)
}

pub fn default_horizon(eps: f64) -> u64 {
    let jumps = if eps > 0.0 { (100.0 / eps).ceil() as u64 } else { 0 };
    jumps.max(1_000_000)
}

/// Streaming batch means over a known number of samples.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    batch_size: u64,
    batches: usize,
    sum: CompensatedSum,
    count: u64,
    means: Vec<f64>,
}

/// Neumaier summation: a batch of `m` identical increments averages back to
/// that increment instead of drifting by `m` roundings.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl BatchMeans {
    pub fn new(total: u64, batches: usize) -> Result<Self> {
        if batches < MIN_BATCHES || total == 0 || !total.is_multiple_of(batches as u64) {
            return Err(Error::BadPartition { len: total as usize, batches });
        }
        Ok(Self {
            batch_size: total / batches as u64,
            batches,
            sum: CompensatedSum::default(),
            count: 0,
            means: Vec::with_capacity(batches),
        })
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.sum.add(x);
        self.count += 1;
        if self.count == self.batch_size {
            self.means.push(self.sum.value() / self.batch_size as f64);
            self.sum = CompensatedSum::default();
            self.count = 0;
        }
    }

    /// `(mean, stderr)`, with stderr the sample deviation of the batch means
    /// over `sqrt(batches)`.
    pub fn finish(&self) -> Result<(f64, f64)> {
        if self.means.len() != self.batches || self.count != 0 {
            return Err(Error::BadPartition { len: (self.means.len() as u64 * self.batch_size + self.count) as usize, batches: self.batches });
        }
        Ok(mean_and_stderr(&self.means))
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let b = values.len() as f64;
    let mut total = CompensatedSum::default();
    values.iter().for_each(|&v| total.add(v));
    let mean = total.value() / b;
    let var = values.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

/// Batch-means `(mean, stderr)` of a materialized sequence.
pub fn batch_means(increments: &[f64], batches: usize) -> Result<(f64, f64)> {
    let mut acc = BatchMeans::new(increments.len() as u64, batches)?;
    increments.iter().for_each(|&x| acc.push(x));
    acc.finish()
}

fn require_slow(spec: &HmmSpec) -> Result<()> {
    if spec.eps() > 0.0 {
        Ok(())
    } else {
        Err(Error::EpsOutOfRange { eps: spec.eps(), max: spec.base().max_slow_eps() })
    }
}

fn check_priors(spec: &HmmSpec, cfg: &EstimatorConfig) -> Result<()> {
    if cfg.nu.dim() != spec.dim() {
        return Err(Error::DimensionMismatch(format!("priors have {} entries, d = {}", cfg.nu.dim(), spec.dim())));
    }
    Ok(())
}

/// Drives `visit` over steps `1..=n` of the trajectory with the
/// observation likelihoods precomputed. `visit` receives whether the step
/// falls after burn-in.
fn drive<F>(spec: &HmmSpec, cfg: &EstimatorConfig, mut visit: F) -> Result<()>
where
    F: FnMut(bool, Step, &Likelihoods) -> Result<()>,
{
    cfg.validate()?;
    check_priors(spec, cfg)?;
    let noise = spec.noise();
    let mut sampler = TrajectorySampler::new(spec, &InitialState::Stationary, cfg.seed, cfg.replica, false)?;
    let mut lik = Likelihoods::new(spec.dim());
    for k in 1..=cfg.n {
        let step = sampler.next_step();
        noise.likelihoods(step.observation, &mut lik)?;
        visit(k > cfg.burn_in, step, &lik)?;
    }
    Ok(())
}

fn estimate(cfg: &EstimatorConfig, acc: &BatchMeans, method: Method) -> Result<RateEstimate> {
    let (value, stderr) = acc.finish()?;
    Ok(RateEstimate { value, stderr, n: cfg.n, burn_in: cfg.burn_in, seed: cfg.seed, method })
}

/// Top Lyapunov exponent `λ₁(ε)` as the time average of
/// `log |G(Y_m) Λ^{ε*} π_{m-1}|`.
pub fn estimate_lambda1(spec: &HmmSpec, cfg: &EstimatorConfig) -> Result<RateEstimate> {
    require_slow(spec)?;
    let mut filter = FilterState::new(cfg.nu.clone());
    let mut acc = BatchMeans::new(cfg.recorded(), cfg.batches)?;
    let lambda = spec.transitions();
    drive(spec, cfg, |record, _, lik| {
        let inc = filter.advance(lambda, lik)?;
        if record {
            acc.push(inc);
        }
        Ok(())
    })?;
    estimate(cfg, &acc, Method::Lambda1)
}

/// Growth rate of `|ρ_n ∧ ρ̄_n|`.
pub fn estimate_wedge_rate(spec: &HmmSpec, cfg: &EstimatorConfig) -> Result<RateEstimate> {
    require_slow(spec)?;
    check_priors(spec, cfg)?;
    let mut wedge = wedge_init(&cfg.nu, &cfg.nu_bar)?;
    let mut acc = BatchMeans::new(cfg.recorded(), cfg.batches)?;
    let lambda = spec.transitions();
    drive(spec, cfg, |record, _, lik| {
        let inc = wedge.advance(lambda, lik)?;
        if record {
            acc.push(inc);
        }
        Ok(())
    })?;
    estimate(cfg, &acc, Method::WedgeRate)
}

/// The three rates behind `γ = rate|ρ ∧ ρ̄| - rate|ρ| - rate|ρ̄|`, all
/// measured on one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaDecomposition {
    pub gamma: RateEstimate,
    pub wedge: RateEstimate,
    pub rho: RateEstimate,
    pub rho_bar: RateEstimate,
}

/// Per-step increments of the decomposition for one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionIncrement {
    pub wedge: f64,
    pub rho: f64,
    pub rho_bar: f64,
}

impl DecompositionIncrement {
    #[inline]
    pub fn combined(&self) -> f64 {
        self.wedge - self.rho - self.rho_bar
    }
}

/// The wedge recursion and the two filters from `ν` and `ν̄`, stepped
/// together.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub wedge: WedgeState,
    pub rho: FilterState,
    pub rho_bar: FilterState,
}

impl Decomposition {
    pub fn new(nu: &SimplexVector, nu_bar: &SimplexVector) -> Result<Self> {
        Ok(Self {
            wedge: wedge_init(nu, nu_bar)?,
            rho: FilterState::new(nu.clone()),
            rho_bar: FilterState::new(nu_bar.clone()),
        })
    }

    #[inline]
    pub fn advance(&mut self, lambda: &crate::model::TransitionMatrix, lik: &Likelihoods) -> Result<DecompositionIncrement> {
        Ok(DecompositionIncrement {
            wedge: self.wedge.advance(lambda, lik)?,
            rho: self.rho.advance(lambda, lik)?,
            rho_bar: self.rho_bar.advance(lambda, lik)?,
        })
    }
}

/// `γ(ε)` through the wedge decomposition; see [`GammaDecomposition`].
pub fn estimate_gamma_decomposition(spec: &HmmSpec, cfg: &EstimatorConfig) -> Result<GammaDecomposition> {
    require_slow(spec)?;
    check_priors(spec, cfg)?;
    let mut state = Decomposition::new(&cfg.nu, &cfg.nu_bar)?;
    let total = cfg.recorded();
    let acc = BatchMeans::new(total, cfg.batches)?;
    let mut accs = [acc.clone(), acc.clone(), acc.clone(), acc];
    let lambda = spec.transitions();
    drive(spec, cfg, |record, _, lik| {
        let inc = state.advance(lambda, lik)?;
        if record {
            accs[0].push(inc.combined());
            accs[1].push(inc.wedge);
            accs[2].push(inc.rho);
            accs[3].push(inc.rho_bar);
        }
        Ok(())
    })?;
    Ok(GammaDecomposition {
        gamma: estimate(cfg, &accs[0], Method::WedgeDecomposition)?,
        wedge: estimate(cfg, &accs[1], Method::WedgeRate)?,
        rho: estimate(cfg, &accs[2], Method::Lambda1)?,
        rho_bar: estimate(cfg, &accs[3], Method::Lambda1)?,
    })
}

/// Stability index `γ(ε)`, the merging rate of filters started at `ν`, `ν̄`.
pub fn estimate_gamma(spec: &HmmSpec, cfg: &EstimatorConfig) -> Result<RateEstimate> {
    estimate_gamma_decomposition(spec, cfg).map(|d| d.gamma)
}

/// Short-horizon cross-check of `γ`: least-squares slope of
/// `log |π_n - π̄_n|` against `n`, on `cfg.batches` independent replicas.
///
/// Each replica runs until the distance falls below `underflow_floor` or
/// `cfg.n` steps elapse; burn-in is not used, since the chain starts
/// stationary and the distance starts at its largest. The frozen chain
/// `ε = 0` is accepted here.
pub fn estimate_gamma_direct(spec: &HmmSpec, cfg: &EstimatorConfig, underflow_floor: f64) -> Result<RateEstimate> {
    check_priors(spec, cfg)?;
    if cfg.nu == cfg.nu_bar {
        return Err(Error::DegenerateWedge);
    }
    if cfg.batches < MIN_BATCHES {
        return Err(Error::BadPartition { len: cfg.n as usize, batches: cfg.batches });
    }
    let noise = spec.noise();
    let lambda = spec.transitions();
    let mut slopes = Vec::with_capacity(cfg.batches);
    let mut total_steps = 0u64;
    let mut lik = Likelihoods::new(spec.dim());
    for r in 0..cfg.batches as u64 {
        let replica = (cfg.replica << 24) + 1 + r;
        let mut sampler = TrajectorySampler::new(spec, &InitialState::Stationary, cfg.seed, replica, true)?;
        let mut pair = FilterPair::new(&cfg.nu, &cfg.nu_bar)?;
        let mut fit = SlopeFit::default();
        fit.push(0.0, pair.distance().ln());
        for k in 1..=cfg.n {
            let step = sampler.next_step();
            noise.likelihoods(step.observation, &mut lik)?;
            pair.advance(lambda, &lik)?;
            let dist = pair.distance();
            if !(dist >= underflow_floor) {
                break;
            }
            fit.push(k as f64, dist.ln());
        }
        let usable = fit.count as usize - 1;
        if usable < MIN_DIRECT_STEPS {
            return Err(Error::HorizonTooShort { usable, required: MIN_DIRECT_STEPS });
        }
        total_steps += usable as u64;
        slopes.push(fit.slope());
    }
    let (value, stderr) = mean_and_stderr(&slopes);
    Ok(RateEstimate { value, stderr, n: total_steps, burn_in: 0, seed: cfg.seed, method: Method::Direct })
}

#[derive(Debug, Default)]
struct SlopeFit {
    count: u64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
}

impl SlopeFit {
    fn push(&mut self, x: f64, y: f64) {
        self.count += 1;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.sxy += x * y;
    }

    fn slope(&self) -> f64 {
        let n = self.count as f64;
        (n * self.sxy - self.sx * self.sy) / (n * self.sxx - self.sx * self.sx)
    }
}

/// Entropy rate of the observations, `-(1/n) Σ log P(Y_k | Y_{1:k-1})`,
/// for discrete emissions.
pub fn estimate_entropy_rate(spec: &HmmSpec, cfg: &EstimatorConfig) -> Result<RateEstimate> {
    require_slow(spec)?;
    let NoiseModel::Discrete(emission) = spec.noise() else {
        return Err(Error::NotDiscrete);
    };
    let mut filter = FilterState::new(cfg.nu.clone());
    let mut acc = BatchMeans::new(cfg.recorded(), cfg.batches)?;
    let lambda = spec.transitions();
    drive(spec, cfg, |record, step, lik| {
        filter.advance(lambda, lik)?;
        if record {
            let symbol = emission.symbol_index(step.observation).ok_or(Error::UnknownSymbol(step.observation))?;
            let mut predictive = 0.0;
            for (i, &q) in filter.predicted().iter().enumerate() {
                predictive += emission.prob(i, symbol) * q;
            }
            acc.push(-predictive.ln());
        }
        Ok(())
    })?;
    estimate(cfg, &acc, Method::EntropyRate)
}

/// Two readings of the stationary misclassification probability of the
/// MAP state for `d = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisclassificationEstimate {
    /// Time average of `min(π_k(1), π_k(2))`.
    pub posterior: RateEstimate,
    /// Frequency of `X_k ≠ argmax_i π_k(i)`.
    pub empirical: RateEstimate,
    /// Paired batch means of `empirical - posterior` per step.
    pub difference: RateEstimate,
}

/// Misclassification probability of the optimal filter; ties in the
/// argmax go to the lower state index.
pub fn estimate_misclassification(spec: &HmmSpec, cfg: &EstimatorConfig) -> Result<MisclassificationEstimate> {
    if spec.dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, got: spec.dim() });
    }
    require_slow(spec)?;
    let mut filter = FilterState::new(cfg.nu.clone());
    let total = cfg.recorded();
    let mut posterior = BatchMeans::new(total, cfg.batches)?;
    let mut empirical = BatchMeans::new(total, cfg.batches)?;
    let mut difference = BatchMeans::new(total, cfg.batches)?;
    let lambda = spec.transitions();
    drive(spec, cfg, |record, step, lik| {
        filter.advance(lambda, lik)?;
        if record {
            let pi = filter.pi();
            let map = usize::from(pi[1] > pi[0]);
            let p = pi[0].min(pi[1]);
            let e = f64::from(u8::from(step.state != map));
            posterior.push(p);
            empirical.push(e);
            difference.push(e - p);
        }
        Ok(())
    })?;
    Ok(MisclassificationEstimate {
        posterior: estimate(cfg, &posterior, Method::Misclassification)?,
        empirical: estimate(cfg, &empirical, Method::Misclassification)?,
        difference: estimate(cfg, &difference, Method::Misclassification)?,
    })
}

/// Classes `𝒥_j = {ℓ : 𝒟(g_j ‖ g_ℓ) = 0}` of states with a.e. equal
/// densities, each listed once in increasing order of its first member.
pub fn zero_kl_classes(noise: &NoiseModel) -> Result<Vec<Vec<usize>>> {
    let d = noise.dim();
    let mut assigned = vec![false; d];
    let mut classes = Vec::new();
    for j in 0..d {
        if assigned[j] {
            continue;
        }
        let mut class = Vec::new();
        for l in j..d {
            if !assigned[l] && matches!(noise.kl_divergence(j, l), Ok(v) if v == 0.0) {
                assigned[l] = true;
                class.push(l);
            }
        }
        classes.push(class);
    }
    Ok(classes)
}

fn check_partition(d: usize, sets: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; d];
    for set in sets {
        if set.is_empty() {
            return Err(Error::InvalidPartition("empty set".into()));
        }
        for &s in set {
            if s >= d {
                return Err(Error::InvalidPartition(format!("state {s} out of range for d = {d}")));
            }
            if std::mem::replace(&mut seen[s], true) {
                return Err(Error::InvalidPartition(format!("state {s} appears twice")));
            }
        }
    }
    if let Some(s) = seen.iter().position(|&b| !b) {
        return Err(Error::InvalidPartition(format!("state {s} not covered")));
    }
    Ok(())
}

/// Per-set stationary mean square `(1{X_k ∈ 𝒥} - Σ_{ℓ∈𝒥} π_k(ℓ))²`.
pub fn estimate_concentration(spec: &HmmSpec, cfg: &EstimatorConfig, sets: &[Vec<usize>]) -> Result<Vec<RateEstimate>> {
    require_slow(spec)?;
    check_partition(spec.dim(), sets)?;
    let mut filter = FilterState::new(cfg.nu.clone());
    let mut accs = sets
        .iter()
        .map(|_| BatchMeans::new(cfg.recorded(), cfg.batches))
        .collect::<Result<Vec<_>>>()?;
    let lambda = spec.transitions();
    drive(spec, cfg, |record, step, lik| {
        filter.advance(lambda, lik)?;
        if record {
            let pi = filter.pi();
            for (set, acc) in sets.iter().zip(accs.iter_mut()) {
                let mass: f64 = set.iter().map(|&l| pi[l]).sum();
                let inside = if set.contains(&step.state) { 1.0 } else { 0.0 };
                acc.push((inside - mass).powi(2));
            }
        }
        Ok(())
    })?;
    accs.iter().map(|acc| estimate(cfg, acc, Method::Concentration)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn batch_means_examples() {
        let (m, se) = batch_means(&vec![0.3; 1000], 20).unwrap();
        assert_eq!((m, se), (0.3, 0.0));
        let alt: Vec<f64> = (0..1000).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(batch_means(&alt, 50).unwrap(), (0.0, 0.0));
        assert!(matches!(batch_means(&[1.0; 30], 20), Err(Error::BadPartition { .. })));
        assert!(matches!(batch_means(&[1.0; 100], 10), Err(Error::BadPartition { .. })));
    }

    #[test]
    fn batch_means_normal_stderr() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..1_000_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (_, se) = batch_means(&xs, 100).unwrap();
        assert!((se / 1e-3 - 1.0).abs() < 0.2, "{se}");
    }

    #[test]
    fn config_defaults() {
        let cfg = EstimatorConfig::for_eps(2, 1e-3, 1);
        assert_eq!(cfg.burn_in, 10_000);
        assert_eq!(cfg.recorded() % cfg.batches as u64, 0);
        assert!(cfg.n >= 1_000_000);
        let cfg = EstimatorConfig::for_eps(2, 1e-5, 1);
        assert_eq!(cfg.burn_in, 1_000_000);
        assert!(cfg.n >= 10_000_000);
        cfg.validate().unwrap();
        let bad = EstimatorConfig::new(1001, 0, 20, 1, SimplexVector::uniform(2), SimplexVector::point_mass(2, 0));
        assert!(matches!(bad, Err(Error::BadPartition { .. })));
    }

    #[test]
    fn zero_kl_classes_group_duplicates() {
        let noise = NoiseModel::discrete(vec![0.0, 1.0], &[vec![0.7, 0.3], vec![0.2, 0.8], vec![0.7, 0.3]]).unwrap();
        assert_eq!(zero_kl_classes(&noise).unwrap(), vec![vec![0, 2], vec![1]]);
    }

    #[test]
    fn partition_is_validated() {
        assert!(check_partition(3, &[vec![0, 1], vec![2]]).is_ok());
        assert!(check_partition(3, &[vec![0, 1]]).is_err());
        assert!(check_partition(3, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(check_partition(3, &[vec![0, 1, 2], vec![]]).is_err());
    }

    #[test]
    fn slope_fit_recovers_line() {
        let mut fit = SlopeFit::default();
        for k in 0..50 {
            fit.push(k as f64, 3.0 - 0.7 * k as f64);
        }
        assert_abs_diff_eq!(fit.slope(), -0.7, epsilon = 1e-12);
    }

    #[test]
    fn estimators_reject_frozen_chain() {
        let spec = HmmSpec::bsc(0.2, 0.5, 0.0).unwrap();
        let cfg = EstimatorConfig::for_eps(2, 0.1, 1).with_horizon(20_000);
        assert!(matches!(estimate_lambda1(&spec, &cfg), Err(Error::EpsOutOfRange { .. })));
        assert!(matches!(estimate_gamma(&spec, &cfg), Err(Error::EpsOutOfRange { .. })));
    }
}
