//! Finite-state Markov chains: validated transition matrices, points of the
//! probability simplex, stationary distributions and the slow-chain
//! transformation `Λ ↦ Λ^ε`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::noise::NoiseModel;

/// Row sums and simplex sums must be within this distance of 1.
pub const SUM_TOLERANCE: f64 = 1e-12;

const POWER_ITERATION_TOL: f64 = 1e-13;
const POWER_ITERATION_CAP: usize = 1_000_000;

/// A row-stochastic `d x d` matrix, `λ_ij = P(X_n = a_j | X_{n-1} = a_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    /// Validates `rows` and returns the matrix. Rows that sum to 1 within
    /// [`SUM_TOLERANCE`] are renormalized; anything further off is rejected.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim < 2 {
            return Err(Error::NotSquare { rows: dim, cols: rows.first().map_or(0, Vec::len) });
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::NotSquare { rows: dim, cols: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry { row: i, col: j, value: v });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::RowSumViolation { row: i, deviation: sum - 1.0 });
            }
            entries.extend(row.iter().map(|v| v / sum));
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, entries }
    }

    /// Symmetric two-state chain that jumps with probability `lambda`.
    pub fn symmetric_two_state(lambda: f64) -> Result<Self> {
        Self::new(&[vec![1.0 - lambda, lambda], vec![lambda, 1.0 - lambda]])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    /// Total exit probability `Σ_{ℓ≠i} λ_iℓ` of state `i`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        self.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).sum()
    }

    /// Largest eps accepted by [`slow_chain`]; infinite for the identity.
    pub fn max_slow_eps(&self) -> f64 {
        let rate = (0..self.dim).map(|i| self.exit_rate(i)).fold(0.0, f64::max);
        if rate > 0.0 {
            1.0 / rate
        } else {
            f64::INFINITY
        }
    }

    /// `out = Λ* x`, i.e. `out_j = Σ_i λ_ij x_i`.
    #[inline]
    pub fn apply_transpose(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.entries[i * d..(i + 1) * d];
            for (o, &l) in out.iter_mut().zip(row) {
                *o += l * xi;
            }
        }
    }

    pub fn determinant(&self) -> f64 {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries).determinant()
    }
}

/// Free-function form of [`TransitionMatrix::new`].
pub fn validate_transition_matrix(rows: &[Vec<f64>]) -> Result<TransitionMatrix> {
    TransitionMatrix::new(rows)
}

/// A probability vector on the `d` states.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::NotSimplex("empty vector".into()));
        }
        if let Some(v) = entries.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::NotSimplex(format!("entry {v} is negative or not finite")));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotSimplex(format!("entries sum to {sum}")));
        }
        Ok(Self(entries.into_iter().map(|v| v / sum).collect()))
    }

    pub fn uniform(dim: usize) -> Self {
        Self(vec![1.0 / dim as f64; dim])
    }

    pub fn point_mass(dim: usize, state: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[state] = 1.0;
        Self(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `|self - other|` in the L1 norm.
    pub fn l1_distance(&self, other: &SimplexVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Crate-internal constructor for vectors already known to be normalized.
    pub(crate) fn from_normalized(v: Vec<f64>) -> Self {
        Self(v)
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl std::ops::Index<usize> for SimplexVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// True iff `Λ^q` is entrywise positive for some `q <= q_max`.
///
/// Works on the zero pattern only, so it is exact and unaffected by
/// underflow of tiny powers.
pub fn is_ergodic(lambda: &TransitionMatrix, q_max: usize) -> bool {
    let d = lambda.dim();
    let base: Vec<bool> = lambda.entries.iter().map(|&v| v > 0.0).collect();
    let mut power = base.clone();
    for _ in 0..q_max {
        if power.iter().all(|&b| b) {
            return true;
        }
        let mut next = vec![false; d * d];
        for i in 0..d {
            for k in 0..d {
                if power[i * d + k] {
                    for j in 0..d {
                        next[i * d + j] |= base[k * d + j];
                    }
                }
            }
        }
        power = next;
    }
    false
}

/// Wielandt's bound `d² - 2d + 2`: a primitive matrix has a positive power
/// no later than this.
pub fn default_ergodicity_horizon(dim: usize) -> usize {
    dim * dim - 2 * dim + 2
}

/// Stationary distribution of `Λ`.
///
/// Uses Grassmann-Taksar-Heyman elimination, which reads only the
/// off-diagonal entries and never subtracts, so `μ(Λ^ε)` is as accurate as
/// `μ(Λ)` however small `ε` is. Falls back to a dense solve with the
/// normalization row appended, then to power iteration on the lazy chain.
pub fn stationary_distribution(lambda: &TransitionMatrix) -> Result<SimplexVector> {
    let d = lambda.dim();
    if !has_single_closed_class(lambda) {
        return Err(Error::NotErgodic("more than one closed communicating class".into()));
    }
    if let Some(mu) = gth(lambda) {
        return Ok(SimplexVector(mu));
    }

    // (Λ^T - I) μ = 0 with the last equation replaced by Σ μ_i = 1.
    let mut a = DMatrix::from_fn(d, d, |i, j| lambda.get(j, i) - if i == j { 1.0 } else { 0.0 });
    for j in 0..d {
        a[(d - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(d);
    b[d - 1] = 1.0;

    if let Some(sol) = a.lu().solve(&b) {
        let mu: Vec<f64> = sol.iter().map(|&v| v.max(0.0)).collect();
        let sum: f64 = mu.iter().sum();
        if sum > 0.0 {
            let mu: Vec<f64> = mu.into_iter().map(|v| v / sum).collect();
            if stationarity_residual(lambda, &mu) <= SUM_TOLERANCE {
                return Ok(SimplexVector(mu));
            }
        }
    }
    power_iteration(lambda)
}

/// GTH elimination; `None` if a censored state has no way down.
fn gth(lambda: &TransitionMatrix) -> Option<Vec<f64>> {
    let d = lambda.dim();
    let mut p = lambda.entries.clone();
    for k in (1..d).rev() {
        let s: f64 = (0..k).map(|j| p[k * d + j]).sum();
        if !(s > 0.0) {
            return None;
        }
        for i in 0..k {
            p[i * d + k] /= s;
        }
        for i in 0..k {
            let pik = p[i * d + k];
            if pik != 0.0 {
                for j in 0..k {
                    if j != i {
                        p[i * d + j] += pik * p[k * d + j];
                    }
                }
            }
        }
    }
    let mut x = vec![0.0; d];
    x[0] = 1.0;
    for k in 1..d {
        x[k] = (0..k).map(|i| x[i] * p[i * d + k]).sum();
    }
    let sum: f64 = x.iter().sum();
    Some(x.into_iter().map(|v| v / sum).collect())
}

fn stationarity_residual(lambda: &TransitionMatrix, mu: &[f64]) -> f64 {
    let mut out = vec![0.0; mu.len()];
    lambda.apply_transpose(mu, &mut out);
    out.iter().zip(mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn power_iteration(lambda: &TransitionMatrix) -> Result<SimplexVector> {
    let d = lambda.dim();
    let mut mu = vec![1.0 / d as f64; d];
    let mut next = vec![0.0; d];
    for _ in 0..POWER_ITERATION_CAP {
        // Lazy chain (I + Λ)/2 has the same stationary law and is aperiodic.
        lambda.apply_transpose(&mu, &mut next);
        for (n, m) in next.iter_mut().zip(&mu) {
            *n = 0.5 * (*n + m);
        }
        let delta: f64 = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut mu, &mut next);
        if delta < POWER_ITERATION_TOL {
            let sum: f64 = mu.iter().sum();
            return Ok(SimplexVector(mu.into_iter().map(|v| v / sum).collect()));
        }
    }
    Err(Error::NotErgodic("power iteration did not converge".into()))
}

/// Closed classes share a state reachable from everywhere iff there is
/// exactly one of them.
fn has_single_closed_class(lambda: &TransitionMatrix) -> bool {
    let d = lambda.dim();
    let mut reach: Vec<bool> = (0..d * d).map(|k| k / d == k % d || lambda.entries[k] > 0.0).collect();
    for k in 0..d {
        for i in 0..d {
            if reach[i * d + k] {
                for j in 0..d {
                    if reach[k * d + j] {
                        reach[i * d + j] = true;
                    }
                }
            }
        }
    }
    (0..d).any(|j| (0..d).all(|i| reach[i * d + j]))
}

/// The slow chain: off-diagonal `ε λ_ij`, diagonal `1 - ε Σ_{ℓ≠i} λ_iℓ`.
pub fn slow_chain(lambda: &TransitionMatrix, eps: f64) -> Result<TransitionMatrix> {
    let max = lambda.max_slow_eps();
    if !eps.is_finite() || eps < 0.0 || eps > max * (1.0 + 1e-15) {
        return Err(Error::EpsOutOfRange { eps, max });
    }
    let d = lambda.dim();
    let mut entries = vec![0.0; d * d];
    for i in 0..d {
        let mut exit = 0.0;
        for j in 0..d {
            if i != j {
                let v = eps * lambda.get(i, j);
                entries[i * d + j] = v;
                exit += v;
            }
        }
        entries[i * d + i] = (1.0 - exit).max(0.0);
    }
    Ok(TransitionMatrix { dim: d, entries })
}

/// Parameters recognized as the binary symmetric channel example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BscParams {
    pub p: f64,
    pub lambda: f64,
}

/// A hidden Markov model: state labels, base chain `Λ`, observation noise
/// and the slow-chain parameter `ε` (1 means `Λ` itself).
#[derive(Debug, Clone)]
pub struct HmmSpec {
    states: Vec<f64>,
    base: TransitionMatrix,
    noise: NoiseModel,
    eps: f64,
    slow: TransitionMatrix,
}

impl HmmSpec {
    pub fn new(states: Vec<f64>, base: TransitionMatrix, noise: NoiseModel, eps: f64) -> Result<Self> {
        let d = base.dim();
        if states.len() != d {
            return Err(Error::DimensionMismatch(format!("{} state labels for a {d}-state chain", states.len())));
        }
        if noise.dim() != d {
            return Err(Error::DimensionMismatch(format!("noise has {} states, chain has {d}", noise.dim())));
        }
        let slow = slow_chain(&base, eps)?;
        Ok(Self { states, base, noise, eps, slow })
    }

    /// The binary symmetric channel: states {0, 1}, symmetric jumps with
    /// probability `lambda`, observations flipped with probability `p`.
    pub fn bsc(p: f64, lambda: f64, eps: f64) -> Result<Self> {
        let base = TransitionMatrix::symmetric_two_state(lambda)?;
        let noise = NoiseModel::binary_symmetric(p)?;
        Self::new(vec![0.0, 1.0], base, noise, eps)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.states.clone(), self.base.clone(), self.noise.clone(), eps)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn base(&self) -> &TransitionMatrix {
        &self.base
    }

    /// `Λ^ε`.
    pub fn transitions(&self) -> &TransitionMatrix {
        &self.slow
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Stationary law `μ` of the base chain (shared by every `Λ^ε`, ε > 0).
    pub fn stationary(&self) -> Result<SimplexVector> {
        stationary_distribution(&self.base)
    }

    /// Symmetric two-state chain (λ₁₂ = λ₂₁) with its jump probability.
    pub fn symmetric_d2_lambda(&self) -> Option<f64> {
        if self.dim() != 2 {
            return None;
        }
        let (a, b) = (self.base.get(0, 1), self.base.get(1, 0));
        ((a - b).abs() <= 1e-12).then_some(a)
    }

    /// Detects the binary symmetric channel: symmetric two-state chain and a
    /// two-symbol emission matrix `[[1-p, p], [p, 1-p]]` with `p` in (0, 1/2).
    pub fn as_bsc(&self) -> Option<BscParams> {
        let lambda = self.symmetric_d2_lambda()?;
        let NoiseModel::Discrete(em) = &self.noise else {
            return None;
        };
        if em.alphabet_len() != 2 {
            return None;
        }
        let p = em.prob(0, 1);
        let symmetric = (em.prob(1, 0) - p).abs() <= 1e-12;
        (symmetric && p > 0.0 && p < 0.5).then_some(BscParams { p, lambda })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tm(rows: &[&[f64]]) -> TransitionMatrix {
        TransitionMatrix::new(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn validates_examples() {
        assert!(TransitionMatrix::new(&[vec![1.0, 0.0], vec![0.0, 1.0]]).is_ok());
        assert!(TransitionMatrix::new(&[vec![0.9, 0.1], vec![0.3, 0.7]]).is_ok());
        match TransitionMatrix::new(&[vec![0.9, 0.2], vec![0.3, 0.7]]) {
            Err(Error::RowSumViolation { row: 0, deviation }) => assert_abs_diff_eq!(deviation, 0.1, epsilon = 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            TransitionMatrix::new(&[vec![1.1, -0.1], vec![0.3, 0.7]]),
            Err(Error::NegativeEntry { row: 0, col: 1, .. })
        ));
        assert!(matches!(TransitionMatrix::new(&[vec![1.0]]), Err(Error::NotSquare { .. })));
        assert!(matches!(
            TransitionMatrix::new(&[vec![0.5, 0.5], vec![1.0]]),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn stationary_examples() {
        let mu = stationary_distribution(&TransitionMatrix::symmetric_two_state(0.3).unwrap()).unwrap();
        assert_abs_diff_eq!(mu[0], 0.5, epsilon = 1e-14);
        let mu = stationary_distribution(&tm(&[&[0.9, 0.1], &[0.3, 0.7]])).unwrap();
        assert_abs_diff_eq!(mu[0], 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(mu[1], 0.25, epsilon = 1e-14);
    }

    #[test]
    fn stationary_rejects_reducible() {
        assert!(matches!(
            stationary_distribution(&TransitionMatrix::identity(3)),
            Err(Error::NotErgodic(_))
        ));
    }

    #[test]
    fn periodic_chain_has_unique_stationary_law() {
        let mu = stationary_distribution(&tm(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert_abs_diff_eq!(mu[0], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn power_iteration_matches_linear_solve() {
        let lambda = tm(&[&[0.2, 0.5, 0.3], &[0.1, 0.1, 0.8], &[0.6, 0.3, 0.1]]);
        let direct = stationary_distribution(&lambda).unwrap();
        let power = power_iteration(&lambda).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(direct[i], power[i], epsilon = 1e-11);
        }
    }

    #[test]
    fn ergodicity_examples() {
        assert!(!is_ergodic(&tm(&[&[0.0, 1.0], &[1.0, 0.0]]), 10));
        assert!(is_ergodic(&tm(&[&[0.9, 0.1], &[0.3, 0.7]]), 1));
        assert!(!is_ergodic(&TransitionMatrix::identity(2), 10));
        // Primitive only at the second power.
        let lambda = tm(&[&[0.0, 1.0], &[0.5, 0.5]]);
        assert!(!is_ergodic(&lambda, 1));
        assert!(is_ergodic(&lambda, 2));
        assert!(is_ergodic(&lambda, default_ergodicity_horizon(2)));
    }

    #[test]
    fn slow_chain_examples() {
        let lambda = tm(&[&[0.9, 0.1], &[0.3, 0.7]]);
        let slow = slow_chain(&lambda, 0.1).unwrap();
        let want = [[0.99, 0.01], [0.03, 0.97]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(slow.get(i, j), want[i][j], epsilon = 1e-15);
            }
        }
        assert_eq!(slow_chain(&lambda, 0.0).unwrap(), TransitionMatrix::identity(2));
        let flip = tm(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(slow_chain(&flip, 1.0).unwrap(), flip);
        assert!(matches!(slow_chain(&flip, 1.5), Err(Error::EpsOutOfRange { .. })));
        assert!(matches!(slow_chain(&flip, -0.1), Err(Error::EpsOutOfRange { .. })));
    }

    #[test]
    fn simplex_validation() {
        assert!(SimplexVector::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexVector::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexVector::new(vec![1.5, -0.5]).is_err());
        assert_abs_diff_eq!(
            SimplexVector::point_mass(2, 0).l1_distance(&SimplexVector::point_mass(2, 1)),
            2.0
        );
    }

    #[test]
    fn detects_bsc() {
        let spec = HmmSpec::bsc(0.2, 0.5, 0.1).unwrap();
        let bsc = spec.as_bsc().unwrap();
        assert_abs_diff_eq!(bsc.p, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(bsc.lambda, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.transitions().get(0, 1), 0.05, epsilon = 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn stochastic(d: usize) -> impl Strategy<Value = TransitionMatrix> {
            proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, d), d).prop_map(|rows| {
                let rows: Vec<Vec<f64>> = rows
                    .into_iter()
                    .map(|r| {
                        let s: f64 = r.iter().sum();
                        r.into_iter().map(|v| v / s).collect()
                    })
                    .collect();
                TransitionMatrix::new(&rows).unwrap()
            })
        }

        proptest! {
            #[test]
            fn slow_chain_rows_stochastic(lambda in (2usize..6).prop_flat_map(stochastic), t in 0.0f64..1.0) {
                let eps = t * lambda.max_slow_eps().min(1e6);
                let slow = slow_chain(&lambda, eps).unwrap();
                for i in 0..slow.dim() {
                    let s: f64 = slow.row(i).iter().sum();
                    prop_assert!((s - 1.0).abs() <= 1e-14);
                }
            }

            #[test]
            fn slow_chain_keeps_stationary_law(lambda in (2usize..6).prop_flat_map(stochastic), t in 0.001f64..1.0) {
                let eps = t * lambda.max_slow_eps();
                let mu = stationary_distribution(&lambda).unwrap();
                let mu_eps = stationary_distribution(&slow_chain(&lambda, eps).unwrap()).unwrap();
                for i in 0..mu.dim() {
                    prop_assert!((mu[i] - mu_eps[i]).abs() <= 1e-10);
                }
            }

            #[test]
            fn ergodicity_monotone_in_horizon(lambda in (2usize..5).prop_flat_map(stochastic), mask in proptest::collection::vec(any::<bool>(), 16)) {
                // Zero out a random pattern (keeping the diagonal) to get non-trivial cases.
                let d = lambda.dim();
                let rows: Vec<Vec<f64>> = (0..d).map(|i| {
                    let r: Vec<f64> = (0..d).map(|j| if i == j || mask[(i * d + j) % 16] { lambda.get(i, j) } else { 0.0 }).collect();
                    let s: f64 = r.iter().sum();
                    r.into_iter().map(|v| v / s).collect()
                }).collect();
                let m = TransitionMatrix::new(&rows).unwrap();
                let mut seen = false;
                for q in 1..12 {
                    let e = is_ergodic(&m, q);
                    prop_assert!(!seen || e);
                    seen |= e;
                }
            }
        }
    }
}
