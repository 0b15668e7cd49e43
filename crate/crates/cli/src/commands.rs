use serde_json::{json, Value};

use quench_core::cumulants::{exact_triple, kappa_slow_approx};
use quench_core::dynamics::profile_dynamic;
use quench_core::fcs::{distribution_distance, distribution_from_profile, gaussian_reference, sample_histogram_with};
use quench_core::scaling::{self, FitReport, SweepRow};
use quench_core::spectral::{profile_sudden, ExcitationProfile};
use quench_core::verify::{self, VerifyConfig};
use quench_core::{MomentumGrid, QuenchProtocol, G_CRITICAL};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{finite, Cell, Table, Writer};

const CUMULANT_COLUMNS: [&str; 6] = [
    "kappa1_pairs",
    "kappa2_pairs",
    "kappa3_pairs",
    "kappa1_kinks",
    "kappa2_kinks",
    "kappa3_kinks",
];

fn cumulant_cells(row: &SweepRow) -> Vec<Cell> {
    row.pairs
        .as_array()
        .into_iter()
        .chain(row.kinks.as_array())
        .map(Some)
        .collect()
}

fn fit_json(name: &str, fit: quench_core::Result<FitReport>) -> Result<Value, CliError> {
    match fit {
        Ok(f) => {
            for (what, x) in [
                ("rate", f.rate),
                ("prefactor", f.prefactor),
                ("residual", f.residual_rms),
            ] {
                finite(&format!("{name} {what}"), x)?;
            }
            Ok(json!({ "fit": f, "reason": null }))
        }
        Err(e) => Ok(json!({ "fit": null, "reason": e.to_string() })),
    }
}

pub fn sweep_depth(cfg: &RunConfig) -> Result<Vec<std::path::PathBuf>, CliError> {
    let grid = MomentumGrid::new(cfg.sites)?;
    let tau = if cfg.analytic_only { 0.0 } else { cfg.tau() };
    let table = scaling::depth_sweep(&grid, cfg.gi, &cfg.eps, tau, &cfg.settings)?;

    let mut columns = vec!["epsilon_f"];
    columns.extend(CUMULANT_COLUMNS);
    columns.extend([
        "ratio_2k2_k1",
        "ratio_4k3_k1",
        "kappa1_exact",
        "kappa2_exact",
        "kappa3_exact",
    ]);
    let mut out = Table::new(columns);
    let l = grid.length();
    for row in &table.rows {
        let mut cells = vec![Some(row.axis_value)];
        cells.extend(cumulant_cells(row));
        let (r2, r3) = row.kink_ratios.unzip();
        cells.extend([r2, r3]);
        match exact_triple(l, row.g_final) {
            Ok(t) => cells.extend(t.as_array().map(Some)),
            Err(e) => {
                log::debug!("no closed form at g_f = {}: {e}", row.g_final);
                cells.extend([None; 3]);
            }
        }
        out.push(cells);
    }

    let mut w = Writer::create(cfg)?;
    let data = w.table("sweep_depth", &out)?;
    let results = json!({
        "tau_q_used": tau,
        "rows": table.rows.len(),
        "exact_reference": "closed forms for a sudden quench from the critical point",
    });
    w.sidecar("sweep_depth.meta.json", cfg, &[data], results)?;
    Ok(w.written().to_vec())
}

pub fn sweep_rate(cfg: &RunConfig) -> Result<Vec<std::path::PathBuf>, CliError> {
    let grid = MomentumGrid::new(cfg.sites)?;
    let table = scaling::rate_sweep(&grid, cfg.gi, cfg.gf, &cfg.tauq, &cfg.settings)?;

    let mut columns = vec!["tau_q"];
    columns.extend(CUMULANT_COLUMNS);
    columns.extend([
        "ratio_k2_k1",
        "ratio_k3_k1",
        "ratio_2k2_k1",
        "ratio_4k3_k1",
        "kappa1_slow",
        "kappa2_slow",
        "kappa3_slow",
    ]);
    let mut out = Table::new(columns);
    let l = grid.length();
    for row in &table.rows {
        let mut cells = vec![Some(row.axis_value)];
        cells.extend(cumulant_cells(row));
        let (p2, p3) = row.pair_ratios.unzip();
        let (k2, k3) = row.kink_ratios.unzip();
        cells.extend([p2, p3, k2, k3]);
        for q in 1..=3 {
            cells.push(Some(kappa_slow_approx(l, row.tau_q, q)?));
        }
        out.push(cells);
    }

    let taus = table.axis_values();
    let mut fits = serde_json::Map::new();
    for q in 1..=3 {
        let name = format!("kappa{q}");
        let ys = table.pair_column(q)?;
        fits.insert(
            name.clone(),
            fit_json(&name, scaling::fit_power_law(&taus, &ys, cfg.fit_window))?,
        );
    }
    let crossover = match scaling::detect_crossover(&table, cfg.fit_window) {
        Ok(c) => {
            finite("tau_star", c.tau_star)?;
            finite("plateau", c.plateau)?;
            json!({ "crossover": c, "reason": null })
        }
        Err(e) => json!({ "crossover": null, "reason": e.to_string() }),
    };

    let mut w = Writer::create(cfg)?;
    let data = w.table("sweep_rate", &out)?;
    let results = json!({
        "fit_window": cfg.fit_window,
        "power_law": fits,
        "crossover": crossover,
    });
    w.sidecar("sweep_rate.meta.json", cfg, &[data], results)?;
    Ok(w.written().to_vec())
}

struct FcsPoint {
    label: String,
    g_final: f64,
    tau_q: f64,
}

fn fcs_points(cfg: &RunConfig) -> Vec<FcsPoint> {
    if cfg.fcs_by_depth {
        let tau = if cfg.analytic_only { 0.0 } else { cfg.tau() };
        cfg.eps
            .iter()
            .map(|&e| FcsPoint {
                label: format!("eps_{e}"),
                g_final: G_CRITICAL + e,
                tau_q: tau,
            })
            .collect()
    } else {
        cfg.tauq
            .iter()
            .map(|&t| FcsPoint {
                label: format!("tau_{t}"),
                g_final: cfg.gf,
                tau_q: t,
            })
            .collect()
    }
}

fn point_profile(grid: &MomentumGrid, cfg: &RunConfig, pt: &FcsPoint) -> Result<ExcitationProfile, CliError> {
    if pt.tau_q == 0.0 {
        return Ok(profile_sudden(grid, cfg.gi, pt.g_final)?);
    }
    let protocol = QuenchProtocol::new(cfg.gi, pt.g_final, pt.tau_q)?;
    Ok(profile_dynamic(grid, &protocol, &cfg.settings)?)
}

pub fn fcs(cfg: &RunConfig) -> Result<Vec<std::path::PathBuf>, CliError> {
    let grid = MomentumGrid::new(cfg.sites)?;
    let mut w = Writer::create(cfg)?;
    let mut tables = Vec::new();
    let mut summaries = Vec::new();

    for pt in fcs_points(cfg) {
        let profile = point_profile(&grid, cfg, &pt)?;
        let exact = distribution_from_profile(&profile)?;
        let moments = exact.cumulants();
        let gauss = gaussian_reference(moments.kappa1, moments.kappa2, exact.max_count())?;
        let histogram = if cfg.shots > 0 {
            Some(sample_histogram_with(
                &profile,
                cfg.shots,
                cfg.seed,
                cfg.settings.execution,
            )?)
        } else {
            None
        };
        let sampled = histogram.as_ref().map(|h| h.frequencies());

        let mut columns = vec!["n", "p_exact", "p_gaussian"];
        if histogram.is_some() {
            columns.extend(["count", "p_sampled"]);
        }
        let mut table = Table::new(columns);
        for n in 0..=exact.max_count() {
            let mut cells = vec![
                Some(n as f64),
                Some(exact.probabilities()[n]),
                Some(gauss.probabilities()[n]),
            ];
            if let (Some(h), Some(f)) = (&histogram, &sampled) {
                cells.push(Some(h.counts()[n] as f64));
                cells.push(Some(f[n]));
            }
            table.push(cells);
        }
        tables.push(w.table(&format!("fcs_{}", pt.label), &table)?);

        let to_gauss = distribution_distance(exact.probabilities(), gauss.probabilities());
        let to_sampled = sampled
            .as_ref()
            .map(|f| distribution_distance(exact.probabilities(), f));
        summaries.push(json!({
            "label": pt.label,
            "epsilon_f": finite("epsilon_f", pt.g_final - G_CRITICAL)?,
            "g_final": pt.g_final,
            "tau_q": pt.tau_q,
            "cumulants": {
                "kappa1": finite("kappa1", moments.kappa1)?,
                "kappa2": finite("kappa2", moments.kappa2)?,
                "kappa3": finite("kappa3", moments.kappa3)?,
            },
            "gaussian_distance": {
                "total_variation": finite("tv", to_gauss.total_variation)?,
                "kolmogorov": finite("ks", to_gauss.kolmogorov)?,
            },
            "sampled_distance": to_sampled,
            "shots": cfg.shots,
        }));
    }

    w.sidecar("fcs.meta.json", cfg, &tables, json!({ "points": summaries }))?;
    Ok(w.written().to_vec())
}

/// Runs the check suite and prints a table. Failed checks are reported by
/// name and turn into [`CliError::ChecksFailed`] after the report is written.
pub fn verify(cfg: &RunConfig) -> Result<Vec<std::path::PathBuf>, CliError> {
    let vcfg = VerifyConfig {
        n_sites: cfg.sites,
        g_initial: cfg.gi,
        settings: cfg.settings,
        analytic_only: cfg.analytic_only,
    };
    let outcomes = verify::run_checks(&vcfg)?;

    println!("{:<28} {:>12} {:>12}  result  detail", "check", "measured", "tolerance");
    for c in &outcomes {
        println!(
            "{:<28} {:>12.3e} {:>12.3e}  {:<6}  {}",
            c.name,
            c.measured,
            c.threshold,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
    }

    let mut w = Writer::create(cfg)?;
    let failed: Vec<&str> = outcomes.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let results = json!({ "all_passed": failed.is_empty(), "checks": outcomes });
    w.sidecar("verify.json", cfg, &[], results)?;
    if failed.is_empty() {
        Ok(w.written().to_vec())
    } else {
        eprintln!("failed checks: {}", failed.join(", "));
        Err(CliError::ChecksFailed(failed.len()))
    }
}
