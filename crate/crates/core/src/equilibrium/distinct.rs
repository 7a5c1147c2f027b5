//! Equilibria of the reduced model with distinct removal rates.
//!
//! A positive equilibrium `(s*, x*)` satisfies both
//!
//! * the mass balance `s* = S_in - x* d(x*) / D`, and
//! * the growth balance `mu(s*, x*) = d(x*)`, whose unique solution in `s`
//!   lies between the two break-even concentrations.
//!
//! Roots of the gap between the two substrate levels are located by a
//! uniform scan followed by bisection.

use serde::Serialize;

use super::{break_even, classify_planar, BreakEven, Equilibrium, EquilibriumKind, EquilibriumState, Stability};
use crate::error::{Error, Result};
use crate::model::{GrowthLaw, ReducedState};
use crate::roots::bisect;
use crate::slowfast::ReducedModel;

/// Substrate level demanded by the mass balance at total biomass `x`.
pub fn mass_balance_substrate(model: &ReducedModel, x: f64) -> f64 {
    let prm = &model.chemostat.params;
    prm.s_in - x * model.removal(x) / prm.dilution
}

fn upper_growth_bound(growth: &GrowthLaw) -> f64 {
    growth.supremum().unwrap_or(f64::INFINITY)
}

/// Substrate level at which density-dependent growth matches removal at
/// total biomass `x`.
pub fn growth_balance_substrate(model: &ReducedModel, x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::domain(
            "growth_balance_substrate",
            format!("need x >= 0, got {x}"),
        ));
    }
    let c = &model.chemostat;
    let p = model.manifold.fraction(x);
    let d = model.removal(x);
    let gap = |s: f64| c.mu_bar_unchecked(s, p) - d;
    let ceiling = p * upper_growth_bound(&c.growth_u) + (1.0 - p) * upper_growth_bound(&c.growth_v);
    if ceiling <= d {
        return Err(Error::Bracket {
            context: "growth_balance_substrate",
            lo: 0.0,
            hi: f64::INFINITY,
            f_lo: gap(0.0),
            f_hi: ceiling - d,
        });
    }
    let lu = break_even(&c.growth_u, c.params.d_u)?;
    let lv = break_even(&c.growth_v, c.params.d_v)?;
    let (lo, mut hi) = match (lu, lv) {
        (BreakEven::At(a), BreakEven::At(b)) => (a.min(b), a.max(b)),
        (BreakEven::At(a), BreakEven::Never) | (BreakEven::Never, BreakEven::At(a)) => (a, a.max(c.params.s_in)),
        (BreakEven::Never, BreakEven::Never) => (0.0, c.params.s_in),
    };
    // At a break-even the gap vanishes up to rounding.
    if lo == hi || gap(lo) >= 0.0 {
        return Ok(lo);
    }
    while gap(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Bracket {
                context: "growth_balance_substrate",
                lo,
                hi,
                f_lo: gap(lo),
                f_hi: gap(hi),
            });
        }
    }
    bisect("growth_balance_substrate", gap, lo, hi, 0.0)
}

/// Mass-balance substrate minus growth-balance substrate; `-inf` where
/// growth cannot match removal at any substrate level.
pub fn balance_gap(model: &ReducedModel, x: f64) -> Result<f64> {
    match growth_balance_substrate(model, x) {
        Ok(s) => Ok(mass_balance_substrate(model, x) - s),
        Err(Error::Bracket { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// Central-difference slope of [`balance_gap`].
pub fn balance_gap_slope(model: &ReducedModel, x: f64) -> Result<f64> {
    let h = 1e-5 * x.abs().max(1.0);
    let lo = (x - h).max(0.0);
    let hi = x + h;
    Ok((balance_gap(model, hi)? - balance_gap(model, lo)?) / (hi - lo))
}

/// Determinant of the reduced Jacobian predicted from the slope of the
/// balance gap at an equilibrium: `-D x (d mu / ds) Gamma'(x)`.
///
/// Since `d mu / ds > 0`, equilibria where the gap increases are saddles.
pub fn determinant_from_gap_slope(model: &ReducedModel, s: f64, x: f64) -> Result<f64> {
    let (dmu_ds, _) = model.growth_partials(s, x);
    Ok(-model.chemostat.params.dilution * x * dmu_ds * balance_gap_slope(model, x)?)
}

/// `D x (d'(x) - d mu / dx) + x (d mu / ds) (x d(x))'`, the determinant
/// expanded from the Jacobian entries.
pub fn determinant_expanded(model: &ReducedModel, s: f64, x: f64) -> f64 {
    let (dmu_ds, dmu_dx) = model.growth_partials(s, x);
    let dd = model.removal_derivative(x);
    let d_xd = model.removal(x) + x * dd;
    model.chemostat.params.dilution * x * (dd - dmu_dx) + x * dmu_ds * d_xd
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaSample {
    pub x: f64,
    pub mass_balance_s: f64,
    pub growth_balance_s: Option<f64>,
    pub gap: f64,
}

/// Samples the balance curves at `n + 1` uniform points of `[0, x_max]`.
pub fn gamma_curve(model: &ReducedModel, x_max: f64, n: usize) -> Result<Vec<GammaSample>> {
    (0..=n)
        .map(|k| {
            let x = x_max * k as f64 / n as f64;
            let gamma = mass_balance_substrate(model, x);
            let phi = match growth_balance_substrate(model, x) {
                Ok(s) => Some(s),
                Err(Error::Bracket { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(GammaSample {
                x,
                mass_balance_s: gamma,
                growth_balance_s: phi,
                gap: phi.map_or(f64::NEG_INFINITY, |p| gamma - p),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Right end of the scan window; `None` means `D S_in / D_v`.
    pub x_max: Option<f64>,
    pub n_scan: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            x_max: None,
            n_scan: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumScan {
    /// Washout first, then positive equilibria by increasing `x`.
    pub equilibria: Vec<Equilibrium>,
    pub x_max: f64,
    pub n_scan: usize,
    pub warnings: Vec<String>,
}

impl EquilibriumScan {
    pub fn positive(&self) -> impl Iterator<Item = &Equilibrium> {
        self.equilibria
            .iter()
            .filter(|e| e.kind == EquilibriumKind::Coexistence)
    }
}

fn reduced_residual(model: &ReducedModel, s: f64, x: f64) -> f64 {
    let f = model.field(&[s, x]);
    f[0].abs().max(f[1].abs())
}

/// Washout `(S_in, 0)` of the reduced model; its Jacobian is upper
/// triangular with eigenvalues `-D` and `mu_u(S_in) - D_u`.
pub fn washout_reduced(model: &ReducedModel) -> Equilibrium {
    let prm = &model.chemostat.params;
    let mu0 = model.growth(prm.s_in, 0.0);
    let jac = [
        [-prm.dilution, -mu0],
        [0.0, model.chemostat.growth_u.rate(prm.s_in) - prm.d_u],
    ];
    Equilibrium {
        state: EquilibriumState::Reduced(ReducedState::new(prm.s_in, 0.0)),
        kind: EquilibriumKind::Washout,
        stability: Stability::from_jacobian(jac),
        residual: reduced_residual(model, prm.s_in, 0.0),
        gamma_prime_sign: None,
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// All equilibria of the reduced model: washout plus every root of the
/// balance gap found on `(0, x_max]`.
pub fn find_equilibria_distinct_removal(model: &ReducedModel, options: &ScanOptions) -> Result<EquilibriumScan> {
    let prm = &model.chemostat.params;
    let x_max = options.x_max.unwrap_or(prm.dilution * prm.s_in / prm.d_v);
    if !(x_max.is_finite() && x_max > 0.0) {
        return Err(Error::config("x_max", format!("must be positive, got {x_max}")));
    }
    if options.n_scan < 100 {
        return Err(Error::config(
            "n_scan",
            format!("must be at least 100, got {}", options.n_scan),
        ));
    }
    let n = options.n_scan;
    let xs: Vec<f64> = (0..=n).map(|k| x_max * k as f64 / n as f64).collect();
    let gaps: Vec<f64> = xs.iter().map(|&x| balance_gap(model, x)).collect::<Result<_>>()?;

    let mut roots = Vec::new();
    for k in 0..n {
        let (g0, g1) = (gaps[k], gaps[k + 1]);
        if g1 == 0.0 {
            roots.push(xs[k + 1]);
        } else if g0 != 0.0 && g0.signum() != g1.signum() {
            let gap = |x: f64| balance_gap(model, x).unwrap_or(f64::NAN);
            roots.push(bisect("balance_gap", gap, xs[k], xs[k + 1], 1e-12)?);
        }
    }

    let mut warnings = Vec::new();
    if gaps[n] > 0.0 {
        warnings.push(format!(
            "balance gap is still positive at x_max = {x_max}; roots beyond the scan window may be missed"
        ));
    }

    let mut equilibria = vec![washout_reduced(model)];
    for x in roots {
        let s = mass_balance_substrate(model, x);
        let stability = classify_planar(|y| model.field(y), [s, x]);
        let slope = balance_gap_slope(model, x)?;
        let slope_sign = sign(slope);
        let det_sign = sign(stability.determinant);
        if slope.abs() > 1e-8 && stability.determinant.abs() > 1e-10 && slope_sign != -det_sign {
            return Err(Error::Inconsistent(format!(
                "at x* = {x}: det J = {} but balance-gap slope = {slope}",
                stability.determinant
            )));
        }
        equilibria.push(Equilibrium {
            state: EquilibriumState::Reduced(ReducedState::new(s, x)),
            kind: EquilibriumKind::Coexistence,
            stability,
            residual: reduced_residual(model, s, x),
            gamma_prime_sign: Some(slope_sign),
        });
    }
    Ok(EquilibriumScan {
        equilibria,
        x_max,
        n_scan: n,
        warnings,
    })
}
