//! Observables extracted from evolved states: normalized site occupation,
//! similarity between distributions, variance, and power-law spreading fits.

use crate::error::{Error, Result};
use crate::walk::WalkState;

/// Survival weights below this are treated as total absorption; it guards
/// the normalization against floating-point underflow.
pub const EXTINCTION_THRESHOLD: f64 = 1e-300;

/// Normalized site occupation probabilities plus the pre-normalization
/// survival weight of the walker.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityDistribution {
    m_min: i64,
    probs: Vec<f64>,
    survival: f64,
}

impl ProbabilityDistribution {
    /// Build from raw probabilities. Values must be nonnegative and sum to
    /// one within 1e-9; the stored values are rescaled to sum exactly.
    pub fn from_probs(m_min: i64, probs: Vec<f64>, survival: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty probability window".into()));
        }
        if !(survival > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "survival weight {survival} is not positive"
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("negative probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let probs = probs.iter().map(|p| p / total).collect();
        Ok(ProbabilityDistribution { m_min, probs, survival })
    }

    pub fn m_min(&self) -> i64 {
        self.m_min
    }

    pub fn m_max(&self) -> i64 {
        self.m_min + self.probs.len() as i64 - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn survival(&self) -> f64 {
        self.survival
    }

    /// Probability at site `m`, implicitly zero outside the window.
    pub fn prob(&self, m: i64) -> f64 {
        let idx = m - self.m_min;
        if idx < 0 || idx >= self.probs.len() as i64 {
            0.0
        } else {
            self.probs[idx as usize]
        }
    }

    /// Iterate over (site, probability).
    pub fn sites(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(i, p)| (self.m_min + i as i64, *p))
    }
}

/// Normalized site occupation P_m = (|a_mL|^2 + |a_mR|^2) / sum, with the
/// pre-normalization sum kept as the survival weight.
pub fn distribution(state: &WalkState) -> Result<ProbabilityDistribution> {
    let weights: Vec<f64> = state
        .amplitudes()
        .iter()
        .map(|a| a[0].norm_sqr() + a[1].norm_sqr())
        .collect();
    let survival: f64 = weights.iter().sum();
    if survival < EXTINCTION_THRESHOLD {
        return Err(Error::ExtinctWalker(survival));
    }
    let probs = weights.iter().map(|w| w / survival).collect();
    Ok(ProbabilityDistribution { m_min: state.m_min(), probs, survival })
}

/// Similarity estimator (sum_m sqrt(P_m Q_m))^2 in [0, 1]. Windows are
/// aligned by absolute site index; missing sites read as zero.
pub fn similarity(p: &ProbabilityDistribution, q: &ProbabilityDistribution) -> f64 {
    let lo = p.m_min().min(q.m_min());
    let hi = p.m_max().max(q.m_max());
    let mut acc = 0.0;
    for m in lo..=hi {
        acc += (p.prob(m) * q.prob(m)).sqrt();
    }
    (acc * acc).min(1.0)
}

/// Variance sum_m m^2 P_m - (sum_m m P_m)^2 of the site index.
pub fn variance(p: &ProbabilityDistribution) -> f64 {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (m, pm) in p.sites() {
        let m = m as f64;
        mean += m * pm;
        second += m * m * pm;
    }
    second - mean * mean
}

/// Least-squares slope of log v against log t: the alpha in v ~ t^alpha.
/// Needs at least three points with t >= 1 and v > 0.
pub fn spreading_exponent(points: &[(usize, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::FitRefused(format!(
            "{} points given, need at least 3",
            points.len()
        )));
    }
    for &(t, v) in points {
        if t < 1 {
            return Err(Error::FitRefused(format!("step {t} is below 1")));
        }
        if !(v > 0.0) {
            return Err(Error::FitRefused(format!("variance {v} at step {t} is not positive")));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(t, _)| (t as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, v)| v.ln()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if sxx == 0.0 {
        return Err(Error::FitRefused("all steps are identical".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::Protocol;
    use num_complex::Complex64 as C64;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn horizontal() -> WalkState {
        WalkState::localized([c(1.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn localized_distribution() {
        let d = distribution(&horizontal()).unwrap();
        assert_eq!(d.m_min(), 0);
        assert_eq!(d.probs(), &[1.0]);
        assert!((d.survival() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_step_distribution_is_two_point() {
        let s = WalkState::localized([c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let proto = Protocol::uniform_walk(PI, 0.0, 1).unwrap();
        let out = s.evolve(&proto).unwrap().pop().unwrap();
        let d = distribution(&out).unwrap();
        assert!((d.prob(-1) - 0.5).abs() < 1e-14);
        assert!((d.prob(1) - 0.5).abs() < 1e-14);
        assert!(d.prob(0) < 1e-14);
    }

    #[test]
    fn extinct_walker_is_an_error() {
        let s = WalkState::new_unchecked(0, vec![[c(0.0, 0.0), c(0.0, 0.0)]]);
        assert!(matches!(distribution(&s), Err(Error::ExtinctWalker(_))));
    }

    #[test]
    fn from_probs_validates() {
        assert!(ProbabilityDistribution::from_probs(0, vec![0.5, 0.5], 1.0).is_ok());
        assert!(ProbabilityDistribution::from_probs(0, vec![0.5, 0.4], 1.0).is_err());
        assert!(ProbabilityDistribution::from_probs(0, vec![1.5, -0.5], 1.0).is_err());
        assert!(ProbabilityDistribution::from_probs(0, vec![], 1.0).is_err());
        assert!(ProbabilityDistribution::from_probs(0, vec![1.0], 0.0).is_err());
    }

    #[test]
    fn similarity_examples() {
        let p = ProbabilityDistribution::from_probs(-1, vec![0.5, 0.0, 0.5], 1.0).unwrap();
        assert!((similarity(&p, &p) - 1.0).abs() < 1e-14);

        let q = ProbabilityDistribution::from_probs(5, vec![1.0], 1.0).unwrap();
        assert_eq!(similarity(&p, &q), 0.0);

        let two = ProbabilityDistribution::from_probs(0, vec![0.5, 0.5], 1.0).unwrap();
        let one = ProbabilityDistribution::from_probs(0, vec![1.0, 0.0], 1.0).unwrap();
        assert!((similarity(&two, &one) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn similarity_is_symmetric() {
        let p = ProbabilityDistribution::from_probs(-2, vec![0.1, 0.2, 0.3, 0.4], 0.8).unwrap();
        let q = ProbabilityDistribution::from_probs(0, vec![0.25, 0.75], 0.5).unwrap();
        assert!((similarity(&p, &q) - similarity(&q, &p)).abs() < 1e-14);
    }

    #[test]
    fn variance_examples() {
        let point = ProbabilityDistribution::from_probs(0, vec![1.0], 1.0).unwrap();
        assert_eq!(variance(&point), 0.0);

        let two = ProbabilityDistribution::from_probs(-1, vec![0.5, 0.0, 0.5], 1.0).unwrap();
        assert!((variance(&two) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn variance_is_translation_invariant() {
        let p = ProbabilityDistribution::from_probs(-2, vec![0.1, 0.2, 0.3, 0.4], 1.0).unwrap();
        let shifted =
            ProbabilityDistribution::from_probs(98, vec![0.1, 0.2, 0.3, 0.4], 1.0).unwrap();
        assert!((variance(&p) - variance(&shifted)).abs() < 1e-12);
    }

    #[test]
    fn unitary_variance_grows_monotonically() {
        let proto = Protocol::uniform_walk(PI, 0.0, 5).unwrap();
        let snaps = horizontal().evolve(&proto).unwrap();
        let vs: Vec<f64> = snaps[1..]
            .iter()
            .map(|s| variance(&distribution(s).unwrap()))
            .collect();
        for w in vs.windows(2) {
            assert!(w[0] < w[1], "{vs:?}");
        }
        // exact dyadic values of this walk
        let want = [1.0, 2.0, 3.0, 5.0, 8.0];
        for (got, want) in vs.iter().zip(want) {
            assert!((got - want).abs() < 1e-12, "{vs:?}");
        }
    }

    #[test]
    fn exponent_recovers_exact_power_laws() {
        let quad: Vec<(usize, f64)> = (1..=8).map(|t| (t, (t * t) as f64)).collect();
        assert!((spreading_exponent(&quad).unwrap() - 2.0).abs() < 1e-12);
        let lin: Vec<(usize, f64)> = (1..=8).map(|t| (t, t as f64)).collect();
        assert!((spreading_exponent(&lin).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponent_refuses_bad_input() {
        assert!(spreading_exponent(&[(1, 1.0), (2, 4.0)]).is_err());
        assert!(spreading_exponent(&[(1, 1.0), (2, 4.0), (3, -9.0)]).is_err());
        assert!(spreading_exponent(&[(0, 1.0), (2, 4.0), (3, 9.0)]).is_err());
        assert!(spreading_exponent(&[(2, 4.0), (2, 4.0), (2, 4.0)]).is_err());
    }

    #[test]
    fn distribution_is_gauge_invariant_under_rescaling() {
        let s = WalkState::from_amplitudes(
            -1,
            vec![[c(0.3, -0.2), c(0.1, 0.7)], [c(-0.4, 0.9), c(0.2, 0.0)]],
        )
        .unwrap();
        let scaled = WalkState::from_amplitudes(
            -1,
            s.amplitudes().iter().map(|a| [a[0] * c(0.02, -0.3), a[1] * c(0.02, -0.3)]).collect(),
        )
        .unwrap();
        let d1 = distribution(&s).unwrap();
        let d2 = distribution(&scaled).unwrap();
        for (p1, p2) in d1.probs().iter().zip(d2.probs()) {
            assert!((p1 - p2).abs() < 1e-12);
        }
    }
}
