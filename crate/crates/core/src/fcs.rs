//! Full counting statistics of the defect-pair number.
//!
//! Every mode is an independent Bernoulli variable, so the pair number is
//! Poisson-binomial and its cumulants are per-mode sums.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cumulants::CumulantTriple;
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::spectral::ExcitationProfile;

/// Allowed deviation of a distribution's total mass from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

const FLUSH_BELOW: f64 = 1e-300;

const SHOTS_PER_TASK: u64 = 4096;

pub fn cumulants_from_probabilities(probs: &[f64]) -> CumulantTriple {
    let (mut k1, mut k2, mut k3) = (0.0, 0.0, 0.0);
    for &p in probs {
        let v = p * (1.0 - p);
        k1 += p;
        k2 += v;
        k3 += v * (1.0 - 2.0 * p);
    }
    CumulantTriple::pairs(k1, k2, k3)
}

pub fn cumulants_from_profile(profile: &ExcitationProfile) -> CumulantTriple {
    cumulants_from_probabilities(profile.probabilities())
}

pub fn to_kinks(pairs: &CumulantTriple) -> Result<CumulantTriple> {
    pairs.to_kinks()
}

/// Pair ratios `(k2/k1, k3/k1)`, or `(2 k2/k1, 4 k3/k1)` for kink cumulants.
pub fn cumulant_ratios(triple: &CumulantTriple) -> Result<(f64, f64)> {
    triple.ratios()
}

/// Exact probabilities `P(n)` of finding `n` excited pairs, `n = 0..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectDistribution {
    probabilities: Vec<f64>,
}

impl DefectDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::invalid("distribution needs at least one entry"));
        }
        if let Some(p) = probabilities.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::invalid(format!("invalid probability {p}")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {total}")));
        }
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Largest representable pair number.
    pub fn max_count(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// First three cumulants from the moments of the distribution itself.
    pub fn cumulants(&self) -> CumulantTriple {
        let mu = self.mean();
        let (mut c2, mut c3) = (0.0, 0.0);
        for (n, p) in self.probabilities.iter().enumerate() {
            let d = n as f64 - mu;
            c2 += p * d * d;
            c3 += p * d * d * d;
        }
        CumulantTriple::pairs(mu, c2, c3)
    }
}

/// Poisson-binomial distribution by iterative convolution with Bernoulli
/// factors, largest probabilities first.
pub fn distribution_from_probabilities(probs: &[f64]) -> Result<DefectDistribution> {
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    let mut order = probs.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));

    let mut dist = Vec::with_capacity(probs.len() + 1);
    dist.push(1.0);
    for p in order {
        dist.push(0.0);
        for n in (1..dist.len()).rev() {
            let v = dist[n] * (1.0 - p) + dist[n - 1] * p;
            dist[n] = if v < FLUSH_BELOW { 0.0 } else { v };
        }
        dist[0] *= 1.0 - p;
        if dist[0] < FLUSH_BELOW {
            dist[0] = 0.0;
        }
    }
    DefectDistribution::new(dist)
}

pub fn distribution_from_profile(profile: &ExcitationProfile) -> Result<DefectDistribution> {
    distribution_from_probabilities(profile.probabilities())
}

/// Sampled pair numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    counts: Vec<u64>,
    shots: u64,
    seed: u64,
}

impl Histogram {
    /// `counts[n]` is the number of shots with `n` pairs.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let s = self.shots as f64;
        self.counts.iter().map(|&c| c as f64 / s).collect()
    }

    pub fn empirical_distribution(&self) -> Result<DefectDistribution> {
        DefectDistribution::new(self.frequencies())
    }
}

/// Pair count of one shot. The stream is keyed by `(seed, shot)` and mode `j`
/// consumes the `j`-th draw, so every outcome is independent of scheduling.
fn sample_shot(probs: &[f64], seed: u64, shot: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    probs.iter().filter(|&&p| rng.random::<f64>() < p).count()
}

pub fn sample_histogram(profile: &ExcitationProfile, shots: u64, seed: u64) -> Result<Histogram> {
    sample_histogram_with(profile, shots, seed, Execution::default())
}

pub fn sample_histogram_with(
    profile: &ExcitationProfile,
    shots: u64,
    seed: u64,
    execution: Execution,
) -> Result<Histogram> {
    if shots == 0 {
        return Err(Error::invalid("shots must be positive"));
    }
    let probs = profile.probabilities();
    let bins = probs.len() + 1;
    let tasks = shots.div_ceil(SHOTS_PER_TASK);
    let partial = par::map_indexed(execution, tasks as usize, |t| {
        let start = t as u64 * SHOTS_PER_TASK;
        let end = (start + SHOTS_PER_TASK).min(shots);
        let mut counts = vec![0u64; bins];
        for shot in start..end {
            counts[sample_shot(probs, seed, shot)] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; bins];
    for c in partial {
        for (acc, v) in counts.iter_mut().zip(c) {
            *acc += v;
        }
    }
    Ok(Histogram { counts, shots, seed })
}

/// Normal density with mean `kappa1` and variance `kappa2` at `n = 0..=max_count`,
/// renormalized over that support.
pub fn gaussian_reference(kappa1: f64, kappa2: f64, max_count: usize) -> Result<DefectDistribution> {
    if !(kappa2 > 0.0 && kappa2.is_finite()) {
        return Err(Error::invalid(format!("variance must be positive, got {kappa2}")));
    }
    if !kappa1.is_finite() {
        return Err(Error::invalid(format!("mean must be finite, got {kappa1}")));
    }
    let mut w: Vec<f64> = (0..=max_count)
        .map(|n| (-(n as f64 - kappa1).powi(2) / (2.0 * kappa2)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid(format!(
            "gaussian with mean {kappa1} has no mass on 0..={max_count}"
        )));
    }
    w.iter_mut().for_each(|v| *v /= total);
    DefectDistribution::new(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub total_variation: f64,
    /// Largest gap between the cumulative distributions.
    pub kolmogorov: f64,
}

/// Distances between two distributions on `0..`, the shorter one padded with zeros.
pub fn distribution_distance(p: &[f64], q: &[f64]) -> DistanceReport {
    let len = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let (mut tv, mut ks, mut cp, mut cq) = (0.0, 0.0_f64, 0.0, 0.0);
    for i in 0..len {
        let (a, b) = (at(p, i), at(q, i));
        tv += (a - b).abs();
        cp += a;
        cq += b;
        ks = ks.max((cp - cq).abs());
    }
    DistanceReport {
        total_variation: 0.5 * tv,
        kolmogorov: ks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MomentumGrid;
    use crate::spectral::{profile_sudden, ProfileSource};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Distribution by summing over all `2^M` outcomes.
    fn enumerate(probs: &[f64]) -> Vec<f64> {
        let m = probs.len();
        let mut out = vec![0.0; m + 1];
        for mask in 0u32..(1 << m) {
            let mut w = 1.0;
            for (j, p) in probs.iter().enumerate() {
                w *= if mask >> j & 1 == 1 { *p } else { 1.0 - p };
            }
            out[mask.count_ones() as usize] += w;
        }
        out
    }

    fn profile(probs: Vec<f64>) -> ExcitationProfile {
        let grid = MomentumGrid::new(2 * probs.len()).unwrap();
        ExcitationProfile::new(grid, probs, ProfileSource::Dynamic).unwrap()
    }

    #[test]
    fn two_mode_cumulants() {
        let c = cumulants_from_probabilities(&[0.2, 0.3]);
        assert_abs_diff_eq!(c.kappa1, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.kappa2, 0.37, epsilon = 1e-15);
        assert_abs_diff_eq!(c.kappa3, 0.18, epsilon = 1e-15);
        // same numbers from the enumerated distribution
        let d = DefectDistribution::new(enumerate(&[0.2, 0.3])).unwrap().cumulants();
        assert_abs_diff_eq!(d.kappa2, 0.37, epsilon = 1e-15);
        assert_abs_diff_eq!(d.kappa3, 0.18, epsilon = 1e-15);
    }

    #[test]
    fn trivial_cumulants() {
        assert_eq!(cumulants_from_probabilities(&[0.0; 5]).as_array(), [0.0; 3]);
        assert_eq!(cumulants_from_probabilities(&[0.5]).as_array(), [0.5, 0.25, 0.0]);
    }

    #[test]
    fn kink_conversion_and_ratios() {
        let k = to_kinks(&CumulantTriple::pairs(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(k.as_array(), [2.0, 4.0, 8.0]);
        assert_eq!(to_kinks(&k), Err(Error::AlreadyKinks));
        assert_eq!(
            to_kinks(&CumulantTriple::pairs(0.0, 0.0, 0.0)).unwrap().as_array(),
            [0.0; 3]
        );
        assert!(matches!(
            cumulant_ratios(&CumulantTriple::pairs(0.0, 0.0, 0.0)),
            Err(Error::UndefinedRatio(_))
        ));

        let pairs = CumulantTriple::pairs(2.0, 1.2, 0.5);
        let (r2, _) = cumulant_ratios(&to_kinks(&pairs).unwrap()).unwrap();
        assert_abs_diff_eq!(r2, 2.0 * 1.2 / 2.0);
        assert!(r2 > 1.0);
    }

    #[test]
    fn poissonian_limit_of_ratios() {
        let c = cumulants_from_probabilities(&[1e-7; 50]);
        let (r2, r3) = cumulant_ratios(&c).unwrap();
        assert_abs_diff_eq!(r2, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r3, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn small_distributions() {
        assert_eq!(
            distribution_from_probabilities(&[0.5]).unwrap().probabilities(),
            &[0.5, 0.5]
        );
        assert_eq!(
            distribution_from_probabilities(&[0.5, 0.5]).unwrap().probabilities(),
            &[0.25, 0.5, 0.25]
        );
        assert_eq!(distribution_from_probabilities(&[]).unwrap().probabilities(), &[1.0]);
        assert!(distribution_from_probabilities(&[1.2]).is_err());
    }

    #[test]
    fn eight_modes_match_enumeration() {
        let probs = [0.03, 0.91, 0.5, 0.27, 0.66, 0.001, 0.99, 0.4];
        let exact = distribution_from_probabilities(&probs).unwrap();
        for (a, b) in exact.probabilities().iter().zip(enumerate(&probs)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn distribution_moments_match_mode_sums_for_large_chain() {
        let grid = MomentumGrid::new(200).unwrap();
        let prof = profile_sudden(&grid, -1.0, 0.0).unwrap();
        let d = distribution_from_profile(&prof).unwrap();
        let direct = cumulants_from_profile(&prof);
        for (a, b) in d.cumulants().as_array().iter().zip(direct.as_array()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-8);
        }
        assert_eq!(d.max_count(), 100);
    }

    #[test]
    fn sampling_concentrates_and_is_reproducible() {
        let prof = profile(vec![0.5]);
        let h = sample_histogram(&prof, 1_000_000, 7).unwrap();
        assert_eq!(h.counts().iter().sum::<u64>(), 1_000_000);
        assert!((h.frequencies()[1] - 0.5).abs() < 0.002);
        assert_eq!(h, sample_histogram(&prof, 1_000_000, 7).unwrap());
        assert_ne!(h, sample_histogram(&prof, 1_000_000, 8).unwrap());
        assert!(sample_histogram(&prof, 0, 1).is_err());
    }

    #[test]
    fn sampling_independent_of_execution() {
        let prof = profile(vec![0.1, 0.7, 0.35, 0.9, 0.02]);
        let a = sample_histogram_with(&prof, 20_000, 3, Execution::Sequential).unwrap();
        let b = sample_histogram_with(&prof, 20_000, 3, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampled_mean_within_standard_error() {
        let grid = MomentumGrid::new(100).unwrap();
        let prof = profile_sudden(&grid, -1.0, 0.0).unwrap();
        let exact = cumulants_from_profile(&prof);
        let shots = 100_000;
        let h = sample_histogram(&prof, shots, 2024).unwrap();
        let mean = h.empirical_distribution().unwrap().mean();
        let se = (exact.kappa2 / shots as f64).sqrt();
        assert!((mean - exact.kappa1).abs() < 3.0 * se);
    }

    #[test]
    fn monte_carlo_distance_shrinks_with_shots() {
        let grid = MomentumGrid::new(40).unwrap();
        let prof = profile_sudden(&grid, -1.0, 0.0).unwrap();
        let exact = distribution_from_profile(&prof).unwrap();
        // average over seeds to tame the noise of a single run
        let tv = |shots: u64| {
            (0..8)
                .map(|s| {
                    let h = sample_histogram(&prof, shots, s).unwrap();
                    distribution_distance(&h.frequencies(), exact.probabilities()).total_variation
                })
                .sum::<f64>()
                / 8.0
        };
        let ratio = tv(1_000) / tv(100_000);
        assert!(ratio > 10.0 / 3.0 && ratio < 30.0, "ratio = {ratio}");
    }

    #[test]
    fn gaussian_reference_shape() {
        let g = gaussian_reference(4.5, 2.0, 12).unwrap();
        let p = g.probabilities();
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        for d in 0..4 {
            assert_abs_diff_eq!(p[4 - d], p[5 + d], epsilon = 1e-14);
        }
        let g = gaussian_reference(6.2, 3.0, 20).unwrap();
        let peak = (0..=20).max_by(|&a, &b| g.probabilities()[a].total_cmp(&g.probabilities()[b]));
        assert_eq!(peak, Some(6));
        assert!(gaussian_reference(1.0, 0.0, 5).is_err());
        assert!(gaussian_reference(1.0, -1.0, 5).is_err());
    }

    #[test]
    fn gaussian_close_to_exact_after_fast_ramp() {
        use crate::dynamics::{profile_dynamic, EvolutionSettings};
        use crate::model::QuenchProtocol;
        let grid = MomentumGrid::new(100).unwrap();
        let proto = QuenchProtocol::new(-1.01, 0.0, 0.01).unwrap();
        let prof = profile_dynamic(&grid, &proto, &EvolutionSettings::default()).unwrap();
        let exact = distribution_from_profile(&prof).unwrap();
        let c = exact.cumulants();
        let gauss = gaussian_reference(c.kappa1, c.kappa2, exact.max_count()).unwrap();
        let d = distribution_distance(exact.probabilities(), gauss.probabilities());
        assert!(d.total_variation < 0.05, "{d:?}");
    }

    #[test]
    fn distances() {
        let p = [0.25, 0.5, 0.25];
        let z = distribution_distance(&p, &p);
        assert_eq!(z.total_variation, 0.0);
        assert_eq!(z.kolmogorov, 0.0);
        let d = distribution_distance(&[1.0], &[0.0, 0.0, 1.0]);
        assert_eq!(d.total_variation, 1.0);
        assert_eq!(d.kolmogorov, 1.0);
        let d = distribution_distance(&p, &[0.5, 0.5]);
        assert_abs_diff_eq!(d.total_variation, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(d.kolmogorov, 0.25, epsilon = 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn matches_enumeration(probs in prop::collection::vec(0.0f64..=1.0, 0..=12)) {
            let exact = distribution_from_probabilities(&probs).unwrap();
            for (a, b) in exact.probabilities().iter().zip(enumerate(&probs)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn moments_match_mode_sums(probs in prop::collection::vec(0.0f64..=1.0, 1..=60)) {
            let d = distribution_from_probabilities(&probs).unwrap().cumulants();
            let s = cumulants_from_probabilities(&probs);
            for (a, b) in d.as_array().iter().zip(s.as_array()) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }

        #[test]
        fn pairs_are_sub_poissonian(probs in prop::collection::vec(0.0f64..=1.0, 1..=40)) {
            let c = cumulants_from_probabilities(&probs);
            prop_assume!(probs.iter().any(|&p| p > 0.0));
            prop_assert!(c.kappa2 < c.kappa1);
        }
    }
}
