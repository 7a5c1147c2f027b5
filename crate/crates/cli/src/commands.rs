use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use flocstat::catalog;
use flocstat::equilibrium::distinct::{find_equilibria_distinct_removal, gamma_curve, EquilibriumScan, ScanOptions};
use flocstat::equilibrium::equal::{solve_coexistence_equal_removal, washout_equal_removal};
use flocstat::equilibrium::{Equilibrium, EquilibriumRecord};
use flocstat::integrator::{ordered_map, uniform_grid};
use flocstat::output::{table_csv, trajectory_csv};
use flocstat::slowfast::{compare_slow_fast, ComparisonOptions};
use flocstat::{Chemostat, FullState, IntegratorConfig, ModelConfig, ReducedModel, ReducedState, Trajectory, XPState};

use crate::{usage, ModelKind, Outputs};

/// Fan trajectories run long enough to settle near their attractor.
pub const FAN_T_END: f64 = 400.0;
/// Terminal states within this distance of a stable equilibrium are
/// attributed to it.
pub const ATTRACTOR_RADIUS: f64 = 1e-4;

fn check_grid(t_end: f64, points: usize) -> anyhow::Result<()> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(usage(format!("--t-end must be positive, got {t_end}")));
    }
    if points < 2 {
        return Err(usage(format!("--points must be at least 2, got {points}")));
    }
    Ok(())
}

fn initial_state(y0: Option<&[f64]>, default: Vec<f64>) -> anyhow::Result<Vec<f64>> {
    match y0 {
        None => Ok(default),
        Some(v) if v.len() == default.len() => Ok(v.to_vec()),
        Some(v) => Err(usage(format!("--y0 needs {} values, got {}", default.len(), v.len()))),
    }
}

fn split_out(out: &Path) -> anyhow::Result<(std::path::PathBuf, String, String)> {
    let name = out
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| usage(format!("--out must name a file, got {}", out.display())))?
        .to_string();
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or(&name).to_string();
    let dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    Ok((dir, name, format!("{stem}.manifest.json")))
}

pub fn simulate(
    config_path: &Path,
    model: ModelKind,
    t_end: f64,
    y0: Option<&[f64]>,
    out: &Path,
    points: usize,
) -> anyhow::Result<()> {
    let started = Instant::now();
    let cfg = ModelConfig::from_path(config_path)?;
    check_grid(t_end, points)?;
    let grid = uniform_grid(0.0, t_end, points);
    let integ = IntegratorConfig::default();
    let s_in = cfg.s_in;
    let (tr, y0): (Trajectory, Vec<f64>) = if cfg.is_multispecies() {
        let m = cfg.multispecies()?;
        if model != ModelKind::Reduced {
            return Err(usage("multi-species configurations only support --model reduced"));
        }
        let mut default = vec![0.1; m.n() + 1];
        default[0] = s_in;
        let y0 = initial_state(y0, default)?;
        (m.simulate(&y0, t_end, &integ, Some(&grid))?, y0)
    } else {
        let c = cfg.chemostat()?;
        match model {
            ModelKind::Full => {
                let y0 = initial_state(y0, vec![s_in, 0.05, 0.05])?;
                (
                    c.simulate_full(FullState::from_slice(&y0), t_end, &integ, Some(&grid))?,
                    y0,
                )
            }
            ModelKind::Xp => {
                let y0 = initial_state(y0, vec![s_in, 0.1, 0.5])?;
                (
                    c.simulate_xp(XPState::new(y0[0], y0[1], y0[2]), t_end, &integ, Some(&grid))?,
                    y0,
                )
            }
            ModelKind::Reduced => {
                let y0 = initial_state(y0, vec![s_in, 0.1])?;
                let r = ReducedModel::new(&c);
                (
                    r.simulate(ReducedState::new(y0[0], y0[1]), t_end, &integ, Some(&grid))?,
                    y0,
                )
            }
        }
    };
    let (dir, name, manifest) = split_out(out)?;
    let mut outputs = Outputs::new(&dir)?;
    outputs.write(&name, &trajectory_csv(&tr))?;
    let settings = json!({
        "model": tr.model_tag,
        "t_end": t_end,
        "points": points,
        "y0": y0,
        "rel_tol": integ.rel_tol,
        "abs_tol": integ.abs_tol,
        "steps_accepted": tr.n_accepted,
        "steps_rejected": tr.n_rejected,
    });
    outputs.finish(
        &manifest,
        "simulate",
        serde_json::to_value(cfg.resolved())?,
        settings,
        started,
    )?;
    Ok(())
}

/// Equal removal rates route to the closed-form path, distinct rates to the
/// reduced scan.
pub fn equilibrium_report(c: &Chemostat) -> anyhow::Result<(Vec<Equilibrium>, serde_json::Value)> {
    if c.params.has_equal_removal() {
        let mut list = vec![washout_equal_removal(c)?];
        list.extend(solve_coexistence_equal_removal(c)?);
        Ok((list, json!({ "method": "equal_removal" })))
    } else {
        let scan = find_equilibria_distinct_removal(&ReducedModel::new(c), &ScanOptions::default())?;
        let meta = scan_settings(&scan);
        Ok((scan.equilibria, meta))
    }
}

fn scan_settings(scan: &EquilibriumScan) -> serde_json::Value {
    json!({
        "method": "balance_gap_scan",
        "x_max": scan.x_max,
        "n_scan": scan.n_scan,
        "warnings": scan.warnings,
    })
}

fn records(list: &[Equilibrium]) -> Vec<EquilibriumRecord> {
    list.iter().map(Equilibrium::record).collect()
}

pub fn equilibria(config_path: &Path, out: &Path) -> anyhow::Result<()> {
    let started = Instant::now();
    let cfg = ModelConfig::from_path(config_path)?;
    if cfg.is_multispecies() {
        return Err(usage("equilibria is only available for single-species configurations"));
    }
    let c = cfg.chemostat()?;
    let (list, settings) = equilibrium_report(&c)?;
    let (dir, name, manifest) = split_out(out)?;
    let mut outputs = Outputs::new(&dir)?;
    outputs.write_json(&name, &records(&list))?;
    outputs.finish(
        &manifest,
        "equilibria",
        serde_json::to_value(cfg.resolved())?,
        settings,
        started,
    )?;
    Ok(())
}

pub fn reproduce_fig4(out_dir: &Path, points: usize, jobs: usize) -> anyhow::Result<()> {
    let started = Instant::now();
    check_grid(catalog::FIG4_T_END, points)?;
    let cfg = catalog::fig4(None);
    let c = cfg.chemostat()?;
    let options = ComparisonOptions {
        grid_points: points,
        jobs: jobs.max(1),
        ..ComparisonOptions::default()
    };
    let y0 = catalog::fig4_initial_state();
    let cmp = compare_slow_fast(&c, &catalog::FIG4_EPSILONS, y0, catalog::FIG4_T_END, &options)?;
    let mut outputs = Outputs::new(out_dir)?;
    outputs.write_json("config.json", &cfg.resolved())?;
    for (eps, tr) in catalog::FIG4_EPSILONS.iter().zip(&cmp.full) {
        outputs.write(&format!("full_eps{eps}.csv"), &trajectory_csv(tr))?;
    }
    outputs.write("reduced.csv", &trajectory_csv(&cmp.reduced))?;
    outputs.write_json("comparison.json", &cmp.report)?;
    let settings = json!({
        "epsilons": catalog::FIG4_EPSILONS,
        "t_end": catalog::FIG4_T_END,
        "points": points,
        "initial_state": y0.to_array(),
        "initial_state_source": "convention (S_in, 0.05, 0.05)",
        "window_rule": cmp.report.window_rule,
    });
    outputs.finish(
        "manifest.json",
        "reproduce fig4",
        serde_json::to_value(cfg.resolved())?,
        settings,
        started,
    )?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct FanRun {
    pub index: usize,
    pub initial: [f64; 2],
    pub terminal: [f64; 2],
    /// Index into the equilibrium report, when the run settled on a
    /// stable equilibrium.
    pub attractor: Option<usize>,
}

pub fn reproduce_fig6(out_dir: &Path, points: usize, jobs: usize) -> anyhow::Result<()> {
    let started = Instant::now();
    check_grid(FAN_T_END, points)?;
    let cfg = catalog::fig6();
    let c = cfg.chemostat()?;
    let model = ReducedModel::new(&c);
    let scan = find_equilibria_distinct_removal(&model, &ScanOptions::default())?;
    let curve = gamma_curve(&model, scan.x_max, points - 1)?;

    let fan = catalog::fig6_fan();
    let grid = uniform_grid(0.0, FAN_T_END, points);
    let integ = IntegratorConfig::default();
    let runs: Vec<flocstat::Result<Trajectory>> = ordered_map(&fan, jobs.max(1), |&[s, x]| {
        model.simulate(ReducedState::new(s, x), FAN_T_END, &integ, Some(&grid))
    });
    let runs: Vec<Trajectory> = runs.into_iter().collect::<flocstat::Result<_>>()?;

    let mut outputs = Outputs::new(out_dir)?;
    outputs.write_json("config.json", &cfg.resolved())?;
    outputs.write_json("equilibria.json", &records(&scan.equilibria))?;
    outputs.write(
        "gamma.csv",
        &table_csv(
            &["x", "mass_balance_s", "growth_balance_s", "gap"],
            curve
                .iter()
                .map(|g| vec![g.x, g.mass_balance_s, g.growth_balance_s.unwrap_or(f64::NAN), g.gap]),
        ),
    )?;
    let mut summary = Vec::with_capacity(fan.len());
    for (k, (init, tr)) in fan.iter().zip(&runs).enumerate() {
        outputs.write(&format!("fan_{k:02}.csv"), &trajectory_csv(tr))?;
        let y = tr.last_state();
        let attractor = scan.equilibria.iter().position(|e| {
            e.classification().is_stable()
                && (e.state.substrate() - y[0]).abs() < ATTRACTOR_RADIUS
                && (e.state.total_biomass() - y[1]).abs() < ATTRACTOR_RADIUS
        });
        summary.push(FanRun {
            index: k,
            initial: *init,
            terminal: [y[0], y[1]],
            attractor,
        });
    }
    outputs.write_json("fan.json", &summary)?;
    let mut settings = scan_settings(&scan);
    settings["fan"] = json!({
        "points": catalog::FAN_POINTS,
        "rectangle": {"s": [0.0, cfg.s_in], "x": [catalog::FAN_X_MIN, catalog::FAN_X_MAX]},
        "placement": "evenly spaced by arc length, half-spacing offset from (0, x_min), counter-clockwise",
        "t_end": FAN_T_END,
        "attractor_radius": ATTRACTOR_RADIUS,
    });
    settings["attachment_convention"] = json!("a = 4, b = 1 (only a/b = 4 is fixed by the figure)");
    outputs.finish(
        "manifest.json",
        "reproduce fig6",
        serde_json::to_value(cfg.resolved())?,
        settings,
        started,
    )?;
    Ok(())
}
