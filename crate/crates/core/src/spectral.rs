//! Closed-form eigenstates and sudden-quench excitation probabilities.
//!
//! All eigenvectors of the real symmetric mode matrix are real. Unnormalized
//! components are `(g - cos k -+ sqrt(1 + g^2 - 2 g cos k), sin k)` for the
//! ground and excited state; the difference of nearly equal terms is rewritten
//! as `sin^2 k / (...)` wherever it would cancel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{half_gap, ModeHamiltonian, MomentumGrid};

/// Agreement required between the rational formula and the eigenvector overlap.
pub const DUAL_PATH_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor {
    pub up: f64,
    pub down: f64,
}

impl Spinor {
    fn normalized(up: f64, down: f64) -> Self {
        let n = up.hypot(down);
        Self {
            up: up / n,
            down: down / n,
        }
    }

    pub fn dot(&self, other: &Spinor) -> f64 {
        self.up * other.up + self.down * other.down
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up * self.up + self.down * self.down
    }
}

fn check_momentum(k: f64) -> Result<()> {
    if k > 0.0 && k < PI {
        Ok(())
    } else {
        Err(Error::invalid(format!("momentum must lie in (0, pi), got {k}")))
    }
}

/// Upper component `g - cos k - sqrt(...)` of the unnormalized ground state.
fn ground_upper(k: f64, g: f64) -> f64 {
    let a = g - k.cos();
    let e = half_gap(k, g);
    if a > 0.0 {
        let s = k.sin();
        -s * s / (a + e)
    } else {
        a - e
    }
}

/// Upper component `g - cos k + sqrt(...)` of the unnormalized excited state.
fn excited_upper(k: f64, g: f64) -> f64 {
    let a = g - k.cos();
    let e = half_gap(k, g);
    if a < 0.0 {
        let s = k.sin();
        s * s / (e - a)
    } else {
        a + e
    }
}

pub fn ground_state(k: f64, g: f64) -> Result<Spinor> {
    check_momentum(k)?;
    Ok(Spinor::normalized(ground_upper(k, g), k.sin()))
}

pub fn excited_state(k: f64, g: f64) -> Result<Spinor> {
    check_momentum(k)?;
    Ok(Spinor::normalized(excited_upper(k, g), k.sin()))
}

/// `eps_k(g) = 2 sqrt(1 + g^2 - 2 g cos k)`.
pub fn dispersion(k: f64, g: f64) -> f64 {
    ModeHamiltonian::new(k).level(g)
}

/// Explicit rational expression for `|<ES_k(g_f)|GS_k(g_i)>|^2`.
///
/// Unclamped; may leave `[0, 1]` by rounding.
pub fn sudden_pk_rational(k: f64, g_i: f64, g_f: f64) -> f64 {
    let s2 = k.sin().powi(2);
    let u = ground_upper(k, g_i);
    let v = excited_upper(k, g_f);
    let numerator = s2 * s2 + 2.0 * s2 * u * v + u * u * v * v;
    numerator / ((s2 + v * v) * (s2 + u * u))
}

/// Same probability through the inner product of normalized eigenvectors.
pub fn sudden_pk_overlap(k: f64, g_i: f64, g_f: f64) -> Result<f64> {
    let gs = ground_state(k, g_i)?;
    let es = excited_state(k, g_f)?;
    Ok(gs.dot(&es).powi(2))
}

/// Sudden-quench excitation probability of mode `k` for `g_i -> g_f`.
///
/// Both evaluation routes are computed; a disagreement beyond
/// [`DUAL_PATH_TOLERANCE`] is reported as an error before any clamping.
pub fn sudden_pk(k: f64, g_i: f64, g_f: f64) -> Result<f64> {
    let overlap = sudden_pk_overlap(k, g_i, g_f)?;
    let rational = sudden_pk_rational(k, g_i, g_f);
    if !((rational - overlap).abs() <= DUAL_PATH_TOLERANCE) {
        return Err(Error::Consistency(format!(
            "overlap {overlap} vs rational {rational} at k = {k}, g_i = {g_i}, g_f = {g_f}"
        )));
    }
    Ok(rational.clamp(0.0, 1.0))
}

/// Closed form for quenches starting exactly at the critical field `g_i = -1`,
/// where the ground state is `(-cos(k/4), sin(k/4))`.
pub fn sudden_pk_critical(k: f64, g_f: f64) -> f64 {
    let (s4, c4) = (k / 4.0).sin_cos();
    let sk = k.sin();
    let f = excited_upper(k, g_f);
    let numerator = sk * sk * s4 * s4 + c4 * c4 * f * f - sk * (k / 2.0).sin() * f;
    numerator / (sk * sk + f * f)
}

/// Taylor coefficients of `p_k(g_i, g_f)` around `g_f = 0`:
/// `p ~ zeroth + first * g_f + second * g_f^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionTerms {
    pub zeroth: f64,
    pub first: f64,
    pub second: f64,
}

impl ExpansionTerms {
    pub fn evaluate(&self, g_f: f64) -> f64 {
        self.zeroth + g_f * (self.first + g_f * self.second)
    }
}

/// Intermediate quantities of the expansion.
///
/// With `u` the ground-state upper component at `g_i`, `F(g_f)` the
/// excited-state upper component and `E(g_f)` the half gap, the probability is
/// `(sin^2 k + u F)^2 / ((u^2 + sin^2 k) * 2 E F)`. At `g_f = 0` we have
/// `F = 1 - cos k`, `F' = 1 - cos k`, `F'' = sin^2 k`, `E = 1`, `E' = -cos k`,
/// `E'' = sin^2 k`.
struct ExpansionParts {
    /// `u^2 + sin^2 k`
    ground_norm: f64,
    /// value, first and second derivative of the numerator `(sin^2 k + u F)^2`
    num: [f64; 3],
    /// value, first and second derivative of `2 E F`
    den: [f64; 3],
}

fn expansion_parts(k: f64, g_i: f64) -> Result<ExpansionParts> {
    check_momentum(k)?;
    let (sk, ck) = k.sin_cos();
    let s2 = sk * sk;
    let u = ground_upper(k, g_i);

    let f0 = 1.0 - ck;
    let f1 = 1.0 - ck;
    let f2 = s2;
    let (e0, e1, e2) = (1.0, -ck, s2);

    let n0 = s2 + u * f0;
    let n1 = u * f1;
    let n2 = u * f2;

    Ok(ExpansionParts {
        ground_norm: u * u + s2,
        num: [n0 * n0, 2.0 * n0 * n1, 2.0 * (n1 * n1 + n0 * n2)],
        den: [
            2.0 * e0 * f0,
            2.0 * (e1 * f0 + e0 * f1),
            2.0 * (e2 * f0 + 2.0 * e1 * f1 + e0 * f2),
        ],
    })
}

/// Zeroth-order block: the exact overlap at `g_f = 0`.
pub fn expansion_zeroth(k: f64, g_i: f64) -> Result<f64> {
    let p = expansion_parts(k, g_i)?;
    Ok(p.num[0] / p.den[0] / p.ground_norm)
}

/// First-order block, `dp/dg_f` at `g_f = 0`.
pub fn expansion_first(k: f64, g_i: f64) -> Result<f64> {
    let p = expansion_parts(k, g_i)?;
    let r0 = p.num[0] / p.den[0];
    Ok((p.num[1] - r0 * p.den[1]) / p.den[0] / p.ground_norm)
}

/// Second-order block, `(1/2) d^2p/dg_f^2` at `g_f = 0`.
pub fn expansion_second(k: f64, g_i: f64) -> Result<f64> {
    let p = expansion_parts(k, g_i)?;
    let r0 = p.num[0] / p.den[0];
    let r1 = (p.num[1] - r0 * p.den[1]) / p.den[0];
    let r2 = (p.num[2] - 2.0 * r1 * p.den[1] - r0 * p.den[2]) / p.den[0];
    Ok(0.5 * r2 / p.ground_norm)
}

pub fn expansion_terms(k: f64, g_i: f64) -> Result<ExpansionTerms> {
    Ok(ExpansionTerms {
        zeroth: expansion_zeroth(k, g_i)?,
        first: expansion_first(k, g_i)?,
        second: expansion_second(k, g_i)?,
    })
}

/// Second-order expansion in `g_f`. Accurate for `|g_f| <~ 0.3`, degrading
/// towards the critical point; no error is raised outside that window.
pub fn sudden_pk_second_order(k: f64, g_i: f64, g_f: f64) -> Result<f64> {
    Ok(expansion_terms(k, g_i)?.evaluate(g_f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileSource {
    AnalyticSudden,
    AnalyticCritical,
    SecondOrderExpansion,
    Dynamic,
}

/// Per-mode excitation probabilities aligned with a momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationProfile {
    grid: MomentumGrid,
    probabilities: Vec<f64>,
    source: ProfileSource,
}

impl ExcitationProfile {
    pub fn new(grid: MomentumGrid, probabilities: Vec<f64>, source: ProfileSource) -> Result<Self> {
        if probabilities.len() != grid.len() {
            return Err(Error::invalid(format!(
                "profile has {} probabilities for {} modes",
                probabilities.len(),
                grid.len()
            )));
        }
        if let Some((i, p)) = probabilities
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::invalid(format!("probability {p} of mode {i} outside [0, 1]")));
        }
        Ok(Self {
            grid,
            probabilities,
            source,
        })
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn source(&self) -> ProfileSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

pub fn profile_sudden(grid: &MomentumGrid, g_i: f64, g_f: f64) -> Result<ExcitationProfile> {
    let probs = grid
        .iter()
        .map(|k| sudden_pk(k, g_i, g_f))
        .collect::<Result<Vec<_>>>()?;
    ExcitationProfile::new(grid.clone(), probs, ProfileSource::AnalyticSudden)
}

pub fn profile_critical(grid: &MomentumGrid, g_f: f64) -> Result<ExcitationProfile> {
    let probs = grid
        .iter()
        .map(|k| sudden_pk_critical(k, g_f).clamp(0.0, 1.0))
        .collect();
    ExcitationProfile::new(grid.clone(), probs, ProfileSource::AnalyticCritical)
}

/// Expansion values are clamped into `[0, 1]` so the result is a valid profile.
pub fn profile_second_order(grid: &MomentumGrid, g_i: f64, g_f: f64) -> Result<ExcitationProfile> {
    let probs = grid
        .iter()
        .map(|k| sudden_pk_second_order(k, g_i, g_f).map(|p| p.clamp(0.0, 1.0)))
        .collect::<Result<Vec<_>>>()?;
    ExcitationProfile::new(grid.clone(), probs, ProfileSource::SecondOrderExpansion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn eigen_residual(k: f64, g: f64, v: &Spinor, lower: bool) -> f64 {
        let (z, x) = ModeHamiltonian::new(k).scaled_coefficients(g);
        let lambda = if lower { -dispersion(k, g) } else { dispersion(k, g) };
        let r0 = z * v.up + x * v.down - lambda * v.up;
        let r1 = x * v.up - z * v.down - lambda * v.down;
        r0.hypot(r1)
    }

    #[test]
    fn ground_state_at_avoided_crossing() {
        let k = 0.8_f64;
        let gs = ground_state(k, k.cos()).unwrap();
        assert_abs_diff_eq!(gs.up, -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(gs.down, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
    }

    #[test]
    fn ground_state_hand_evaluated() {
        // (k = pi/2, g = -1): (-1 - sqrt 2, 1) / sqrt(4 + 2 sqrt 2)
        let gs = ground_state(PI / 2.0, -1.0).unwrap();
        let norm = (4.0 + 2.0 * 2f64.sqrt()).sqrt();
        assert_abs_diff_eq!(gs.up, (-1.0 - 2f64.sqrt()) / norm, epsilon = 1e-14);
        assert_abs_diff_eq!(gs.down, 1.0 / norm, epsilon = 1e-14);
    }

    #[test]
    fn excited_state_hand_evaluated() {
        let es = excited_state(PI / 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(es.up, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(es.down, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_momenta_rejected() {
        for k in [0.0, PI, -0.1, 4.0] {
            assert!(ground_state(k, -1.0).is_err());
            assert!(excited_state(k, 0.3).is_err());
        }
    }

    #[test]
    fn dispersion_values() {
        assert_abs_diff_eq!(dispersion(PI / 2.0, 0.0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dispersion(PI, -1.0), 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(dispersion(PI / 3.0, 1.0), 2.0, epsilon = 1e-14);
        // closes only at k = pi for g = -1
        assert!(dispersion(1e-3, -1.0) > 3.99);
    }

    #[test]
    fn no_quench_no_excitation() {
        for &k in &[0.1, 1.0, 3.0] {
            for &g in &[-1.01, -0.5, 0.0, 0.9] {
                assert!(sudden_pk(k, g, g).unwrap() < 1e-15);
            }
        }
    }

    #[test]
    fn critical_form_limits() {
        // k -> pi at g_f = 0 gives 1/2
        assert_abs_diff_eq!(sudden_pk_critical(PI - 1e-7, 0.0), 0.5, epsilon = 1e-7);
        // k -> 0 at g_f = 0 behaves like k^2 / 16
        for &k in &[1e-2, 1e-3] {
            assert_abs_diff_eq!(sudden_pk_critical(k, 0.0) / (k * k / 16.0), 1.0, epsilon = 1e-4);
        }
        for &k in &[0.2, 1.5, 3.0] {
            assert!(sudden_pk_critical(k, -1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn critical_form_at_zero_field_is_sin_squared_quarter() {
        for &k in &[0.3, 1.7, 2.9] {
            assert_abs_diff_eq!(sudden_pk_critical(k, 0.0), (k / 4.0).sin().powi(2), epsilon = 1e-14);
        }
    }

    #[test]
    fn critical_form_matches_general_overlap() {
        let grid = MomentumGrid::new(200).unwrap();
        for k in grid.iter() {
            for &gf in &[-0.95, -0.5, -0.1, 0.0] {
                let general = sudden_pk(k, -1.0, gf).unwrap();
                assert_abs_diff_eq!(sudden_pk_critical(k, gf), general, epsilon = 1e-12);
            }
        }
        let (k, gf) = (PI / 2.0, 0.0);
        assert_abs_diff_eq!(
            sudden_pk_critical(k, gf),
            sudden_pk(k, -1.0, gf).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn depth_monotone_from_criticality() {
        let grid = MomentumGrid::new(100).unwrap();
        for k in grid.iter() {
            let mut prev = -1.0;
            for i in 0..=50 {
                let gf = -1.0 + i as f64 / 50.0;
                let p = sudden_pk_critical(k, gf);
                assert!(p >= prev - 1e-15, "k = {k}, g_f = {gf}");
                prev = p;
            }
        }
    }

    #[test]
    fn expansion_base_point_is_exact() {
        for &k in &[0.05, 0.7, 1.9, 3.1] {
            for &gi in &[-1.01, -1.0, -0.4] {
                let exact = sudden_pk(k, gi, 0.0).unwrap();
                assert_abs_diff_eq!(sudden_pk_second_order(k, gi, 0.0).unwrap(), exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn expansion_blocks_match_finite_differences() {
        let h = 1e-4;
        for &k in &[0.3, 1.0, 2.0, 2.9] {
            for &gi in &[-1.01, -0.5] {
                let p = |gf: f64| sudden_pk_rational(k, gi, gf);
                let d1 = (p(h) - p(-h)) / (2.0 * h);
                let d2 = (p(h) - 2.0 * p(0.0) + p(-h)) / (2.0 * h * h);
                let terms = expansion_terms(k, gi).unwrap();
                assert_abs_diff_eq!(terms.first, d1, epsilon = 1e-6);
                assert_abs_diff_eq!(terms.second, d2, epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn expansion_accuracy_window() {
        let ks: Vec<f64> = (1..2000).map(|i| i as f64 * PI / 2000.0).collect();
        let max_dev = |gf: f64| {
            ks.iter()
                .map(|&k| (sudden_pk_second_order(k, -1.01, gf).unwrap() - sudden_pk(k, -1.01, gf).unwrap()).abs())
                .fold(0.0, f64::max)
        };
        assert!(max_dev(-0.3) < 0.01);
        assert!(max_dev(0.3) < 0.01);
        // near the critical point the expansion visibly fails
        assert!(max_dev(-0.9) > max_dev(-0.3));
    }

    #[test]
    fn profiles() {
        let grid = MomentumGrid::new(4).unwrap();
        let p = profile_sudden(&grid, -0.5, -0.5).unwrap();
        assert!(p.probabilities().iter().all(|&x| x == 0.0));
        assert_eq!(p.source(), ProfileSource::AnalyticSudden);

        let grid = MomentumGrid::new(100).unwrap();
        let p = profile_sudden(&grid, -1.0, 0.0).unwrap();
        assert_eq!(p.len(), 50);
        assert!(p.probabilities().iter().all(|x| (0.0..=1.0).contains(x)));
        // the per-mode sum is the mean pair number, L (pi - 2) / (4 pi) up to O(1/L^2)
        let sum: f64 = p.probabilities().iter().sum();
        assert_abs_diff_eq!(sum, 100.0 * (PI - 2.0) / (4.0 * PI), epsilon = 2e-3);

        assert!(ExcitationProfile::new(grid.clone(), vec![0.1; 3], ProfileSource::Dynamic).is_err());
        assert!(ExcitationProfile::new(grid, vec![1.5; 50], ProfileSource::Dynamic).is_err());
    }

    proptest! {
        #[test]
        fn dual_path_identity(k in 1e-3..PI - 1e-3, gi in -3.0..3.0f64, gf in -3.0..3.0f64) {
            let a = sudden_pk_rational(k, gi, gf);
            let b = sudden_pk_overlap(k, gi, gf).unwrap();
            prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            let p = sudden_pk(k, gi, gf).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
        }

        #[test]
        fn eigenvectors(k in 1e-3..PI - 1e-3, g in -3.0..3.0f64) {
            let gs = ground_state(k, g).unwrap();
            let es = excited_state(k, g).unwrap();
            prop_assert!((gs.norm_sqr() - 1.0).abs() < 1e-12);
            prop_assert!((es.norm_sqr() - 1.0).abs() < 1e-12);
            prop_assert!(gs.dot(&es).abs() < 1e-12);
            prop_assert!(eigen_residual(k, g, &gs, true) < 1e-10);
            prop_assert!(eigen_residual(k, g, &es, false) < 1e-10);
        }
    }
}
