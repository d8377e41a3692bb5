//! Seeded generation of `(X^ε, Y^ε)` trajectories.
//!
//! All randomness comes from ChaCha8 streams. A base seed plus a
//! `(replica, purpose)` pair selects the stream, so replicas running on
//! different threads draw the same numbers regardless of scheduling.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{HmmSpec, SimplexVector};

/// Generator version recorded in run manifests.
pub const RNG_ALGORITHM: &str = "chacha8/rand_chacha-0.9";

/// What each random stream of a replica is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Initial = 0,
    Chain = 1,
    Noise = 2,
}

/// Deterministic stream for `(seed, replica, purpose)`.
pub fn stream(seed: u64, replica: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replica << 8) | purpose as u64);
    rng
}

/// How `X_0` is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Draw from the stationary law of the base chain.
    Stationary,
    Distribution(SimplexVector),
    Fixed(usize),
}

/// One simulated step: hidden state index and observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: usize,
    pub observation: f64,
}

/// Streaming source of `(X_k, Y_k)`, `k = 1, 2, ...`.
pub struct TrajectorySampler<'a> {
    spec: &'a HmmSpec,
    cumulative: Vec<f64>,
    chain_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    x0: usize,
    state: usize,
}

impl<'a> TrajectorySampler<'a> {
    /// Sampler over `spec`. Rejects the frozen chain `ε = 0` unless
    /// `allow_frozen` is set.
    pub fn new(spec: &'a HmmSpec, init: &InitialState, seed: u64, replica: u64, allow_frozen: bool) -> Result<Self> {
        if spec.eps() == 0.0 && !allow_frozen {
            return Err(Error::EpsOutOfRange { eps: 0.0, max: spec.base().max_slow_eps() });
        }
        let d = spec.dim();
        let mut init_rng = stream(seed, replica, StreamPurpose::Initial);
        let x0 = match init {
            InitialState::Fixed(i) if *i < d => *i,
            InitialState::Fixed(i) => {
                return Err(Error::DimensionMismatch(format!("initial state {i} out of range for d = {d}")));
            }
            InitialState::Distribution(nu) => {
                if nu.dim() != d {
                    return Err(Error::DimensionMismatch(format!("initial law has {} entries, d = {d}", nu.dim())));
                }
                draw(nu.as_slice(), &mut init_rng)
            }
            InitialState::Stationary => draw(spec.stationary()?.as_slice(), &mut init_rng),
        };
        let lambda = spec.transitions();
        let mut cumulative = Vec::with_capacity(d * d);
        for i in 0..d {
            let mut acc = 0.0;
            for &v in lambda.row(i) {
                acc += v;
                cumulative.push(acc);
            }
        }
        Ok(Self {
            spec,
            cumulative,
            chain_rng: stream(seed, replica, StreamPurpose::Chain),
            noise_rng: stream(seed, replica, StreamPurpose::Noise),
            x0,
            state: x0,
        })
    }

    pub fn x0(&self) -> usize {
        self.x0
    }

    #[inline]
    pub fn next_step(&mut self) -> Step {
        let d = self.spec.dim();
        let row = &self.cumulative[self.state * d..(self.state + 1) * d];
        let u: f64 = self.chain_rng.random();
        let next = row.partition_point(|&c| c <= u);
        // u beyond a last cumulative entry that rounded below 1.
        self.state = if next < d { next } else { self.spec.transitions().row(self.state).iter().rposition(|&v| v > 0.0).unwrap_or(d - 1) };
        let observation = self.spec.noise().sample(self.state, &mut self.noise_rng);
        Step { state: self.state, observation }
    }
}

impl Iterator for TrajectorySampler<'_> {
    type Item = Step;
    fn next(&mut self) -> Option<Step> {
        Some(self.next_step())
    }
}

fn draw(p: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &v) in p.iter().enumerate() {
        acc += v;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|&v| v > 0.0).unwrap_or(0)
}

/// A materialized trajectory `X_0, (X_1, Y_1), ..., (X_n, Y_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x0: usize,
    pub states: Vec<usize>,
    pub observations: Vec<f64>,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// CSV dump with columns `k,x_k,y_k`; row `k = 0` carries `X_0` only.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,x_k,y_k")?;
        writeln!(out, "0,{},", self.x0)?;
        for (k, (x, y)) in self.states.iter().zip(&self.observations).enumerate() {
            writeln!(out, "{},{x},{y:?}", k + 1)?;
        }
        Ok(())
    }
}

/// Simulates `n` steps. Equal arguments give bit-identical trajectories.
pub fn simulate(spec: &HmmSpec, n: usize, init: &InitialState, seed: u64) -> Result<Trajectory> {
    simulate_with(spec, n, init, seed, false)
}

/// As [`simulate`], optionally permitting the frozen chain `ε = 0`.
pub fn simulate_with(spec: &HmmSpec, n: usize, init: &InitialState, seed: u64, allow_frozen: bool) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    let mut sampler = TrajectorySampler::new(spec, init, seed, 0, allow_frozen)?;
    let mut states = Vec::with_capacity(n);
    let mut observations = Vec::with_capacity(n);
    for step in sampler.by_ref().take(n) {
        states.push(step.state);
        observations.push(step.observation);
    }
    Ok(Trajectory { x0: sampler.x0(), states, observations, seed })
}
