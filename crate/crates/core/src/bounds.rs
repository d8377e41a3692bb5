//! Closed-form bounds and limits for the stability index, and the
//! binary symmetric channel toolkit.
//!
//! Asymptotic `o(1)` corrections are always dropped: each function returns
//! the leading expression only. All logarithms are natural.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::HmmSpec;
use crate::noise::NoiseModel;

/// All analytic reference values for one model at its `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// `-Σ μ_i min_{j≠i} 𝒟(g_i ‖ g_j)`.
    pub theorem1_bound: f64,
    /// `-μ₁𝒟(g₁‖g₂) - μ₂𝒟(g₂‖g₁)`, `d = 2` only.
    pub d2_exact_limit: Option<f64>,
    /// `Σ μ_i max_{k<m} ∫ g_i log(g_k g_m)`.
    pub lemma2_bound: f64,
    /// Exact wedge rate for `d = 2` at the model's `ε`.
    pub lemma2_exact_d2: Option<f64>,
    /// `Σ μ_i ∫ g_i log g_i`.
    pub lambda1_limit: f64,
    /// `log(1 - 2ελ)` for the symmetric two-state chain with `2ελ < 1`.
    pub coarse_d2_bound: Option<f64>,
}

fn require_d2(spec: &HmmSpec) -> Result<()> {
    if spec.dim() == 2 {
        Ok(())
    } else {
        Err(Error::WrongDimension { expected: 2, got: spec.dim() })
    }
}

/// `𝒟(g_i ‖ g_j)`, with mismatched supports read as `+∞`.
fn kl_or_infinite(noise: &NoiseModel, i: usize, j: usize) -> Result<f64> {
    match noise.kl_divergence(i, j) {
        Err(Error::Divergent { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

fn cross_entropy(noise: &NoiseModel, i: usize, j: usize) -> Result<f64> {
    noise.cross_entropy_integral(i, j).map_err(|e| match e {
        Error::Divergent { .. } => Error::DivergentEntropy { state: i },
        other => other,
    })
}

/// `-Σ_i μ_i min_{j≠i} 𝒟(g_i ‖ g_j)`, `μ` stationary for the base chain.
pub fn theorem1_upper_bound(spec: &HmmSpec) -> Result<f64> {
    let d = spec.dim();
    if d < 2 {
        return Err(Error::WrongDimension { expected: 2, got: d });
    }
    let mu = spec.stationary()?;
    let noise = spec.noise();
    let mut sum = 0.0;
    for i in 0..d {
        let mut min = f64::INFINITY;
        for j in (0..d).filter(|&j| j != i) {
            min = min.min(kl_or_infinite(noise, i, j)?);
        }
        if !min.is_finite() {
            return Err(Error::DivergentEntropy { state: i });
        }
        sum += mu[i] * min;
    }
    Ok(-sum)
}

/// `-μ₁𝒟(g₁‖g₂) - μ₂𝒟(g₂‖g₁)`, the ε → 0 limit of `γ` for `d = 2`.
pub fn theorem1_exact_d2(spec: &HmmSpec) -> Result<f64> {
    require_d2(spec)?;
    let mu = spec.stationary()?;
    let noise = spec.noise();
    let d12 = kl_or_infinite(noise, 0, 1)?;
    let d21 = kl_or_infinite(noise, 1, 0)?;
    for (state, v) in [(0, d12), (1, d21)] {
        if !v.is_finite() {
            return Err(Error::DivergentEntropy { state });
        }
    }
    Ok(-(mu[0] * d12 + mu[1] * d21))
}

/// `Σ_i μ_i max_{k<m} (∫ g_i log g_k + ∫ g_i log g_m)`, the leading term
/// of the wedge-rate bound.
pub fn lemma2_upper_bound(spec: &HmmSpec) -> Result<f64> {
    let d = spec.dim();
    if d < 2 {
        return Err(Error::WrongDimension { expected: 2, got: d });
    }
    let mu = spec.stationary()?;
    let noise = spec.noise();
    let mut sum = 0.0;
    for i in 0..d {
        let ce = (0..d).map(|j| cross_entropy(noise, i, j)).collect::<Result<Vec<_>>>()?;
        let mut best = f64::NEG_INFINITY;
        for k in 0..d {
            for m in k + 1..d {
                best = best.max(ce[k] + ce[m]);
            }
        }
        sum += mu[i] * best;
    }
    Ok(sum)
}

/// Exact wedge rate for `d = 2`:
/// `log|1 - ελ₁₂ - ελ₂₁| + Σ_i μ_i ∫ g_i log(g₁g₂)`.
///
/// The first term is `log|det Λ^ε|`; the absolute value matters only for
/// fast chains where the determinant is negative.
pub fn lemma2_exact_d2(spec: &HmmSpec, eps: f64) -> Result<f64> {
    require_d2(spec)?;
    let base = spec.base();
    let max = base.max_slow_eps();
    if !(0.0..=max).contains(&eps) {
        return Err(Error::EpsOutOfRange { eps, max });
    }
    let det = 1.0 - eps * base.get(0, 1) - eps * base.get(1, 0);
    if det == 0.0 {
        return Err(Error::DegenerateWedge);
    }
    let mu = spec.stationary()?;
    let noise = spec.noise();
    let mut entropy = 0.0;
    for i in 0..2 {
        entropy += mu[i] * (cross_entropy(noise, i, 0)? + cross_entropy(noise, i, 1)?);
    }
    Ok(det.abs().ln() + entropy)
}

/// `Σ_i μ_i ∫ g_i log g_i`, the ε → 0 limit of `λ₁`.
pub fn lambda1_limit(spec: &HmmSpec) -> Result<f64> {
    let mu = spec.stationary()?;
    let noise = spec.noise();
    let mut sum = 0.0;
    for i in 0..spec.dim() {
        sum += mu[i] * cross_entropy(noise, i, i)?;
    }
    Ok(sum)
}

/// High-SNR constant `-½ Σ_i μ_i min_{j≠i} (h_i - h_j)²` bounding
/// `limsup σ²γ` for Gaussian noise.
pub fn az_gaussian_bound(spec: &HmmSpec) -> Result<f64> {
    let NoiseModel::Gaussian(g) = spec.noise() else {
        return Err(Error::NotGaussian);
    };
    let mu = spec.stationary()?;
    let h = g.means();
    let mut sum = 0.0;
    for (i, &hi) in h.iter().enumerate() {
        let min = h
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &hj)| (hi - hj).powi(2))
            .fold(f64::INFINITY, f64::min);
        sum += mu[i] * min;
    }
    Ok(-0.5 * sum)
}

/// `log(1 - 2ελ)` for the symmetric two-state chain.
pub fn coarse_upper_bound_d2(eps: f64, lambda: f64) -> Result<f64> {
    let x = 2.0 * eps * lambda;
    if !(eps >= 0.0 && lambda >= 0.0 && x < 1.0) {
        return Err(Error::EpsOutOfRange { eps, max: if lambda > 0.0 { 0.5 / lambda } else { f64::INFINITY } });
    }
    Ok((1.0 - x).ln())
}

/// Divergence `D_p` and entropy `h(p)` of the binary symmetric channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BscQuantities {
    pub d_p: f64,
    pub h_p: f64,
}

fn open_half(p: f64) -> Result<()> {
    if p > 0.0 && p < 0.5 {
        Ok(())
    } else {
        Err(Error::POutOfRange(p))
    }
}

/// `D_p = p log(p/(1-p)) + (1-p) log((1-p)/p)` and `h(p)`, for `0 < p < ½`.
pub fn bsc_quantities(p: f64) -> Result<BscQuantities> {
    open_half(p)?;
    Ok(BscQuantities { d_p: bsc_divergence(p), h_p: binary_entropy(p) })
}

fn bsc_divergence(p: f64) -> f64 {
    p * (p / (1.0 - p)).ln() + (1.0 - p) * ((1.0 - p) / p).ln()
}

/// `h(x) = -x log x - (1-x) log(1-x)` with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    let term = |t: f64| if t > 0.0 { -t * t.ln() } else { 0.0 };
    term(x) + term(1.0 - x)
}

/// `H(p, q) = h((1-p)q + p(1-q))`, the entropy of the next observation
/// when the predictor puts mass `q` on state 1.
pub fn bsc_h(p: f64, q: f64) -> f64 {
    binary_entropy((1.0 - p) * q + p * (1.0 - q))
}

/// Piecewise-linear minorant `h(p) + 2(log 2 - h(p)) min(q, 1-q)` of
/// [`bsc_h`].
pub fn bsc_entropy_lower_bound(p: f64, q: f64) -> f64 {
    let h = binary_entropy(p);
    h + 2.0 * (LN_2 - h) * q.min(1.0 - q)
}

fn check_unit_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::EpsOutOfRange { eps, max: 1.0 })
    }
}

/// Leading two terms of the lower expansion
/// `γ(ε) ≥ -D_p + (4λ(log 2 - h(p))/D_p) ε log(1/ε)`.
pub fn bsc_lower_bound_curve(p: f64, lambda: f64, eps: f64) -> Result<f64> {
    let q = bsc_quantities(p)?;
    check_unit_eps(eps)?;
    Ok(-q.d_p + 4.0 * lambda * (LN_2 - q.h_p) / q.d_p * eps * (1.0 / eps).ln())
}

/// Leading asymptotic `(λ/D_p) ε log(1/ε)` of the stationary
/// misclassification probability.
pub fn kz_asymptotic(p: f64, lambda: f64, eps: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) || p == 0.5 {
        return Err(Error::POutOfRange(p));
    }
    check_unit_eps(eps)?;
    Ok(lambda / bsc_divergence(p) * eps * (1.0 / eps).ln())
}

/// Every bound applicable to `spec` at its own `ε`.
pub fn bound_report(spec: &HmmSpec) -> Result<BoundReport> {
    let d2 = spec.dim() == 2;
    Ok(BoundReport {
        theorem1_bound: theorem1_upper_bound(spec)?,
        d2_exact_limit: if d2 { Some(theorem1_exact_d2(spec)?) } else { None },
        lemma2_bound: lemma2_upper_bound(spec)?,
        lemma2_exact_d2: if d2 { lemma2_exact_d2(spec, spec.eps()).ok() } else { None },
        lambda1_limit: lambda1_limit(spec)?,
        coarse_d2_bound: spec.symmetric_d2_lambda().and_then(|l| coarse_upper_bound_d2(spec.eps(), l).ok()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TransitionMatrix;
    use approx::assert_abs_diff_eq;

    const D_02: f64 = 0.831_776_616_671_934_4;
    const H_02: f64 = 0.500_402_423_538_187_9;

    fn bsc(eps: f64) -> HmmSpec {
        HmmSpec::bsc(0.2, 0.5, eps).unwrap()
    }

    #[test]
    fn theorem1_examples() {
        assert_abs_diff_eq!(theorem1_upper_bound(&bsc(0.01)).unwrap(), -D_02, epsilon = 1e-12);
        assert_eq!(theorem1_exact_d2(&bsc(0.01)).unwrap(), theorem1_upper_bound(&bsc(0.01)).unwrap());

        let base = TransitionMatrix::new(&[vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]]).unwrap();
        let noise = NoiseModel::gaussian(vec![0.0, 1.0, 3.0], 1.0).unwrap();
        let spec = HmmSpec::new(vec![0.0, 1.0, 2.0], base.clone(), noise, 0.1).unwrap();
        assert_abs_diff_eq!(theorem1_upper_bound(&spec).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(az_gaussian_bound(&spec).unwrap(), theorem1_upper_bound(&spec).unwrap(), epsilon = 1e-15);

        let dup = NoiseModel::discrete(vec![0.0, 1.0], &[vec![0.7, 0.3], vec![0.7, 0.3], vec![0.1, 0.9]]).unwrap();
        let spec = HmmSpec::new(vec![0.0, 1.0, 2.0], base, dup.clone(), 0.1).unwrap();
        let d31 = dup.kl_divergence(2, 0).unwrap();
        assert_abs_diff_eq!(theorem1_upper_bound(&spec).unwrap(), -d31 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn theorem1_exact_weighted_sum() {
        // μ = (0.75, 0.25); the KL values are read back from the noise model.
        let base = TransitionMatrix::new(&[vec![0.8, 0.2], vec![0.6, 0.4]]).unwrap();
        let noise = NoiseModel::discrete(vec![0.0, 1.0], &[vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap();
        let spec = HmmSpec::new(vec![0.0, 1.0], base, noise.clone(), 0.01).unwrap();
        let want = -(0.75 * noise.kl_divergence(0, 1).unwrap() + 0.25 * noise.kl_divergence(1, 0).unwrap());
        assert_abs_diff_eq!(theorem1_exact_d2(&spec).unwrap(), want, epsilon = 1e-12);

        let same = NoiseModel::binary_symmetric(0.5).unwrap();
        let spec = HmmSpec::new(vec![0.0, 1.0], TransitionMatrix::symmetric_two_state(0.5).unwrap(), same, 0.1).unwrap();
        assert_eq!(theorem1_exact_d2(&spec).unwrap(), 0.0);
        assert_abs_diff_eq!(lemma2_upper_bound(&spec).unwrap(), 0.25f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(lambda1_limit(&spec).unwrap(), -LN_2, epsilon = 1e-15);
    }

    #[test]
    fn lemma2_examples() {
        let spec = bsc(0.05);
        assert_abs_diff_eq!(lemma2_upper_bound(&spec).unwrap(), 0.16f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(lemma2_exact_d2(&spec, 0.05).unwrap(), -1.883_874_758_135_860_6, epsilon = 1e-12);
        assert_abs_diff_eq!(lemma2_exact_d2(&spec, 0.0).unwrap(), lemma2_upper_bound(&spec).unwrap(), epsilon = 1e-15);
        assert!(matches!(lemma2_exact_d2(&spec, 2.5), Err(Error::EpsOutOfRange { .. })));
    }

    #[test]
    fn lemma2_d2_identity() {
        let base = TransitionMatrix::new(&[vec![0.8, 0.2], vec![0.6, 0.4]]).unwrap();
        let noise = NoiseModel::gaussian(vec![0.0, 1.5], 0.8).unwrap();
        let spec = HmmSpec::new(vec![0.0, 1.0], base, noise, 0.01).unwrap();
        for eps in [0.0, 1e-3, 0.1, 0.5, 1.0] {
            let diff = lemma2_exact_d2(&spec, eps).unwrap() - lemma2_upper_bound(&spec).unwrap();
            assert_abs_diff_eq!(diff, (1.0 - 0.8 * eps).ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn lambda1_examples() {
        assert_abs_diff_eq!(lambda1_limit(&bsc(0.1)).unwrap(), -H_02, epsilon = 1e-12);
        let base = TransitionMatrix::new(&[vec![0.5, 0.3, 0.2], vec![0.1, 0.6, 0.3], vec![0.4, 0.4, 0.2]]).unwrap();
        let noise = NoiseModel::gaussian(vec![-2.0, 0.3, 5.0], 1.0).unwrap();
        let spec = HmmSpec::new(vec![0.0, 1.0, 2.0], base, noise, 0.1).unwrap();
        assert_abs_diff_eq!(lambda1_limit(&spec).unwrap(), -1.418_938_533_204_672_7, epsilon = 1e-12);
    }

    #[test]
    fn az_examples() {
        let mk = |means: Vec<f64>| {
            let noise = NoiseModel::gaussian(means, 2.0).unwrap();
            HmmSpec::new(vec![0.0, 1.0], TransitionMatrix::symmetric_two_state(0.5).unwrap(), noise, 0.1).unwrap()
        };
        assert_abs_diff_eq!(az_gaussian_bound(&mk(vec![0.0, 1.0])).unwrap(), -0.5, epsilon = 1e-15);
        assert_eq!(az_gaussian_bound(&mk(vec![0.4, 0.4])).unwrap(), 0.0);
        let spec = mk(vec![0.0, 1.7]);
        assert_abs_diff_eq!(theorem1_upper_bound(&spec).unwrap(), az_gaussian_bound(&spec).unwrap() / 4.0, epsilon = 1e-15);
        assert!(matches!(az_gaussian_bound(&bsc(0.1)), Err(Error::NotGaussian)));
    }

    #[test]
    fn coarse_examples() {
        assert_eq!(coarse_upper_bound_d2(0.0, 0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(coarse_upper_bound_d2(0.9, 0.5).unwrap(), 0.1f64.ln(), epsilon = 1e-14);
        assert!(matches!(coarse_upper_bound_d2(1.0, 0.5), Err(Error::EpsOutOfRange { .. })));
    }

    #[test]
    fn bsc_examples() {
        let q = bsc_quantities(0.2).unwrap();
        assert_abs_diff_eq!(q.d_p, D_02, epsilon = 1e-14);
        assert_abs_diff_eq!(q.h_p, H_02, epsilon = 1e-14);
        let near = bsc_quantities(0.5 - 1e-9).unwrap();
        assert!(near.d_p < 1e-15 && (near.h_p - LN_2).abs() < 1e-15);
        assert!(bsc_quantities(0.5).is_err() && bsc_quantities(0.0).is_err());
        for k in 1..500 {
            let p = k as f64 / 1000.0;
            let q = bsc_quantities(p).unwrap();
            assert_abs_diff_eq!(q.d_p, (1.0 - 2.0 * p) * ((1.0 - p) / p).ln(), epsilon = 1e-12);
            // Wedge-minus-twice-filter limit collapses to -D_p.
            assert_abs_diff_eq!((p * (1.0 - p)).ln() + 2.0 * q.h_p, -q.d_p, epsilon = 1e-12);
        }
    }

    #[test]
    fn bsc_h_examples() {
        for p in [0.0, 0.1, 0.3, 0.5] {
            assert_abs_diff_eq!(bsc_h(p, 0.5), LN_2, epsilon = 1e-15);
            assert_abs_diff_eq!(bsc_h(p, 0.0), binary_entropy(p), epsilon = 1e-15);
            assert_abs_diff_eq!(bsc_h(p, 1.0), binary_entropy(p), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(bsc_h(0.2, 0.3), binary_entropy(0.38), epsilon = 1e-15);
        assert_abs_diff_eq!(bsc_h(0.2, 0.3), 0.664_064_126_564_108_1, epsilon = 1e-14);
    }

    #[test]
    fn bsc_h_concave_and_above_minorant() {
        let n = 100;
        for a in 1..n {
            let p = a as f64 / (2 * n) as f64;
            for b in 0..=n {
                let q = b as f64 / n as f64;
                let slack = bsc_h(p, q) - bsc_entropy_lower_bound(p, q);
                assert!(slack >= -1e-15, "p={p} q={q} slack={slack}");
                for c in 0..=n {
                    let r = c as f64 / n as f64;
                    let mid = bsc_h(p, 0.5 * (q + r));
                    assert!(mid >= 0.5 * (bsc_h(p, q) + bsc_h(p, r)) - 1e-15);
                }
            }
        }
    }

    #[test]
    fn bsc_curves() {
        let eps = 1e-3;
        let want = -D_02 + 4.0 * 0.5 * (LN_2 - H_02) / D_02 * eps * (1.0 / eps).ln();
        assert_abs_diff_eq!(bsc_lower_bound_curve(0.2, 0.5, eps).unwrap(), want, epsilon = 1e-15);
        assert_abs_diff_eq!(bsc_lower_bound_curve(0.2, 0.5, eps).unwrap(), -0.82858, epsilon = 1e-5);
        assert_abs_diff_eq!(bsc_lower_bound_curve(0.2, 0.5, 1e-300).unwrap(), -D_02, epsilon = 1e-12);
        for p in [0.01, 0.2, 0.49] {
            assert!(bsc_lower_bound_curve(p, 0.5, 0.01).unwrap() > -bsc_quantities(p).unwrap().d_p);
        }
        assert_abs_diff_eq!(kz_asymptotic(0.2, 0.5, eps).unwrap(), 0.5 / D_02 * eps * 1000f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(kz_asymptotic(0.2, 0.5, eps).unwrap(), 0.004152, epsilon = 1e-6);
        let mut prev = 0.0;
        for k in 1..100 {
            let e = k as f64 / 100.0 * (-1.0f64).exp();
            let v = kz_asymptotic(0.2, 0.5, e).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(kz_asymptotic(0.5, 0.5, eps).is_err());
        assert!(kz_asymptotic(0.2, 0.5, 1e-300).unwrap() < 1e-296);
    }

    #[test]
    fn report_for_bsc() {
        let r = bound_report(&bsc(0.05)).unwrap();
        assert_eq!(r.d2_exact_limit, Some(r.theorem1_bound));
        assert!(r.theorem1_bound <= 0.0);
        assert_abs_diff_eq!(r.coarse_d2_bound.unwrap(), 0.95f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.lemma2_exact_d2.unwrap(), r.lemma2_bound + 0.95f64.ln(), epsilon = 1e-14);
    }
}
