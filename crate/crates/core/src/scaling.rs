//! Depth and rate sweeps, log-space fits and crossover detection.

use serde::{Deserialize, Serialize};

use crate::cumulants::CumulantTriple;
use crate::dynamics::{profile_dynamic, EvolutionSettings};
use crate::error::{Error, Result};
use crate::fcs::cumulants_from_profile;
use crate::model::{MomentumGrid, QuenchProtocol, G_CRITICAL};
use crate::par;
use crate::spectral::profile_sudden;

/// Default power-law window in `tau_q`.
pub const DEFAULT_POWER_LAW_WINDOW: FitWindow = FitWindow { lo: 5.0, hi: 100.0 };

/// Default probability band for the exponential fit.
pub const DEFAULT_PROBABILITY_WINDOW: FitWindow = FitWindow { lo: 5e-4, hi: 0.5 };

/// Rows within this relative distance of the fastest row count as plateau.
pub const PLATEAU_TOLERANCE: f64 = 0.01;

const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    EpsilonF,
    TauQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub g_final: f64,
    pub tau_q: f64,
    pub pairs: CumulantTriple,
    pub kinks: CumulantTriple,
    /// `(k2/k1, k3/k1)` of the pairs; `None` when `k1 = 0`.
    pub pair_ratios: Option<(f64, f64)>,
    /// `(2 k2/k1, 4 k3/k1)`; `None` when `k1 = 0`.
    pub kink_ratios: Option<(f64, f64)>,
}

impl SweepRow {
    fn new(axis_value: f64, g_final: f64, tau_q: f64, pairs: CumulantTriple) -> Result<Self> {
        let kinks = pairs.to_kinks()?;
        Ok(Self {
            axis_value,
            g_final,
            tau_q,
            pairs,
            kinks,
            pair_ratios: pairs.ratios().ok(),
            kink_ratios: kinks.ratios().ok(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub n_sites: usize,
    pub g_initial: f64,
    /// Fixed final field of a rate sweep.
    pub g_final: Option<f64>,
    /// Fixed quench time of a depth sweep.
    pub tau_q: Option<f64>,
    pub settings: EvolutionSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub metadata: SweepMetadata,
}

impl SweepTable {
    pub fn axis_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.axis_value).collect()
    }

    /// Column of pair cumulant `q` (1, 2 or 3).
    pub fn pair_column(&self, q: usize) -> Result<Vec<f64>> {
        if !(1..=3).contains(&q) {
            return Err(Error::invalid(format!("cumulant order must be 1..=3, got {q}")));
        }
        Ok(self.rows.iter().map(|r| r.pairs.as_array()[q - 1]).collect())
    }
}

fn check_increasing(name: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::invalid(format!("{name} list is empty")));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("{name} values must be finite")));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(format!("{name} values must be strictly increasing")));
    }
    Ok(())
}

fn row_cumulants(
    grid: &MomentumGrid,
    protocol: &QuenchProtocol,
    settings: &EvolutionSettings,
) -> Result<CumulantTriple> {
    let profile = if protocol.is_sudden() {
        profile_sudden(grid, protocol.g_initial(), protocol.g_final())?
    } else {
        profile_dynamic(grid, protocol, settings)?
    };
    Ok(cumulants_from_profile(&profile))
}

/// One row per depth `eps_f`, ending at `g_f = eps_f + g_c`. `tau_q = 0` uses
/// the analytic sudden profile.
pub fn depth_sweep(
    grid: &MomentumGrid,
    g_initial: f64,
    eps_list: &[f64],
    tau_q: f64,
    settings: &EvolutionSettings,
) -> Result<SweepTable> {
    check_increasing("epsilon_f", eps_list)?;
    if let Some(e) = eps_list.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::invalid(format!("epsilon_f must lie in [0, 1], got {e}")));
    }
    settings.validate()?;
    let rows = par::try_map_indexed(settings.execution, eps_list.len(), |i| {
        let eps = eps_list[i];
        let g_f = eps + G_CRITICAL;
        let protocol = QuenchProtocol::new(g_initial, g_f, tau_q)?;
        SweepRow::new(eps, g_f, tau_q, row_cumulants(grid, &protocol, settings)?)
    })?;
    Ok(SweepTable {
        axis: SweepAxis::EpsilonF,
        rows,
        metadata: SweepMetadata {
            n_sites: grid.n_sites(),
            g_initial,
            g_final: None,
            tau_q: Some(tau_q),
            settings: *settings,
        },
    })
}

/// One row per quench time at fixed `g_final`.
pub fn rate_sweep(
    grid: &MomentumGrid,
    g_initial: f64,
    g_final: f64,
    tau_list: &[f64],
    settings: &EvolutionSettings,
) -> Result<SweepTable> {
    check_increasing("tau_q", tau_list)?;
    if let Some(t) = tau_list.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::invalid(format!("tau_q values must be positive, got {t}")));
    }
    settings.validate()?;
    let rows = par::try_map_indexed(settings.execution, tau_list.len(), |i| {
        let tau = tau_list[i];
        let protocol = QuenchProtocol::new(g_initial, g_final, tau)?;
        SweepRow::new(tau, g_final, tau, row_cumulants(grid, &protocol, settings)?)
    })?;
    Ok(SweepTable {
        axis: SweepAxis::TauQ,
        rows,
        metadata: SweepMetadata {
            n_sites: grid.n_sites(),
            g_initial,
            g_final: Some(g_final),
            tau_q: None,
            settings: *settings,
        },
    })
}

/// Closed interval `[lo, hi]` on the fitted axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
}

impl FitWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("fit window [{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    PowerLaw,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: FitModel,
    /// Exponent `b` of `A x^b`, or decay constant `c > 0` of `A exp(-c x)`.
    pub rate: f64,
    pub prefactor: f64,
    /// RMS of the residuals of `ln y`.
    pub residual_rms: f64,
    /// Smallest and largest abscissa actually used.
    pub window: FitWindow,
    pub points: usize,
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, rms)`.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    (a, b, (ss / n).sqrt())
}

fn used_range(xs: &[f64]) -> FitWindow {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    FitWindow { lo, hi }
}

/// Fits `y = A x^b` over the points with `x` in `window`.
pub fn fit_power_law(xs: &[f64], ys: &[f64], window: FitWindow) -> Result<FitReport> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("xs and ys differ in length"));
    }
    let (mut lx, mut ly, mut used) = (Vec::new(), Vec::new(), Vec::new());
    for (&x, &y) in xs.iter().zip(ys) {
        if !window.contains(x) {
            continue;
        }
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(Error::invalid(format!(
                "power-law fit needs positive data, got ({x}, {y})"
            )));
        }
        lx.push(x.ln());
        ly.push(y.ln());
        used.push(x);
    }
    if used.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} points in [{}, {}], need {MIN_FIT_POINTS}",
            used.len(),
            window.lo,
            window.hi
        )));
    }
    let (a, b, rms) = least_squares(&lx, &ly);
    Ok(FitReport {
        model: FitModel::PowerLaw,
        rate: b,
        prefactor: a.exp(),
        residual_rms: rms,
        window: used_range(&used),
        points: used.len(),
    })
}

/// Fits `p = A exp(-c x)` over the points whose `p` lies in `band`.
pub fn fit_exponential_decay(xs: &[f64], ps: &[f64], band: FitWindow) -> Result<FitReport> {
    if xs.len() != ps.len() {
        return Err(Error::invalid("xs and ps differ in length"));
    }
    if !(band.lo > 0.0) {
        return Err(Error::invalid(format!(
            "probability floor must be positive, got {}",
            band.lo
        )));
    }
    let (mut used, mut lp) = (Vec::new(), Vec::new());
    for (&x, &p) in xs.iter().zip(ps) {
        if band.contains(p) && x.is_finite() {
            used.push(x);
            lp.push(p.ln());
        }
    }
    if used.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} points with p in [{}, {}], need {MIN_FIT_POINTS}",
            used.len(),
            band.lo,
            band.hi
        )));
    }
    let (a, b, rms) = least_squares(&used, &lp);
    Ok(FitReport {
        model: FitModel::Exponential,
        rate: -b,
        prefactor: a.exp(),
        residual_rms: rms,
        window: used_range(&used),
        points: used.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub tau_star: f64,
    pub plateau: f64,
    pub plateau_points: usize,
    pub power_law: FitReport,
}

/// Crossover between the fast-quench plateau and the power-law decay of
/// `kappa1` along a rate sweep.
///
/// The plateau is the mean of the leading rows that stay within
/// [`PLATEAU_TOLERANCE`] of the fastest row; the power law is fitted inside
/// `window`. `tau*` is where the two meet.
pub fn detect_crossover(table: &SweepTable, window: FitWindow) -> Result<Crossover> {
    if table.axis != SweepAxis::TauQ {
        return Err(Error::invalid("crossover needs a rate sweep"));
    }
    let taus = table.axis_values();
    let k1 = table.pair_column(1)?;
    let first = *k1
        .first()
        .ok_or_else(|| Error::InsufficientData("empty sweep table".into()))?;
    let plateau_points = k1
        .iter()
        .zip(&taus)
        .take_while(|(v, t)| (*v - first).abs() <= PLATEAU_TOLERANCE * first.abs() && **t < window.lo)
        .count();
    if plateau_points == 0 || taus[0] >= window.lo {
        return Err(Error::InsufficientData(
            "no fast-quench rows below the fit window".into(),
        ));
    }
    if k1[plateau_points..].is_empty() {
        return Err(Error::InsufficientData("sweep never leaves the plateau".into()));
    }
    let plateau = k1[..plateau_points].iter().sum::<f64>() / plateau_points as f64;
    let power_law = fit_power_law(&taus, &k1, window)?;
    if !(power_law.rate < 0.0) {
        return Err(Error::InsufficientData(format!(
            "no decay inside the fit window (exponent {})",
            power_law.rate
        )));
    }
    let tau_star = (plateau / power_law.prefactor).powf(1.0 / power_law.rate);
    Ok(Crossover {
        tau_star,
        plateau,
        plateau_points,
        power_law,
    })
}

/// `n` points spaced evenly in `ln x` from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Error::invalid(format!("bad log grid: {lo}..{hi} with {n} points")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    v[0] = lo;
    v[n - 1] = hi;
    Ok(v)
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(hi > lo && n >= 2) {
        return Err(Error::invalid(format!("bad grid: {lo}..{hi} with {n} points")));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}
