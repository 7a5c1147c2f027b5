//! Equal removal rates `D = D_u = D_v`.
//!
//! The total `z = s + u + v` relaxes to `S_in`, so steady states live in the
//! plane `s = S_in - u - v`. Writing `phi_u = mu_u - D` and
//! `phi_v = mu_v - D`, a coexistence state satisfies `u = U(s)`, `v = V(s)`
//! and `D (S_in - s) = H(s)` with
//!
//! ```text
//! U(s) = phi_u (phi_v - b) / (a (phi_v - phi_u))
//! V(s) = -(phi_u / phi_v) U(s)
//! H(s) = D phi_u (phi_v - b) / (a phi_v)
//! ```
//!
//! on `I = (lambda_u, lambda_v)`, where `H` increases from `0` to `+inf`.
//! Attachment and detachment constants are divided by `epsilon` when the
//! time-scale ratio is set.

use super::{
    break_even, classify_planar, net_growth, BreakEven, Equilibrium, EquilibriumKind, EquilibriumState, Stability,
};
use crate::error::{Error, Result};
use crate::model::{Chemostat, FullState};
use crate::roots::bisect;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualRemovalCurves {
    /// Planktonic biomass `U(s)`.
    pub planktonic: f64,
    /// Attached biomass `V(s)`.
    pub attached: f64,
    /// Consumption `H(s)`, to be balanced against `D (S_in - s)`.
    pub consumption: f64,
}

fn require_equal_removal(chemostat: &Chemostat, operation: &'static str) -> Result<(f64, f64)> {
    if !chemostat.params.has_equal_removal() {
        return Err(Error::domain(operation, "requires D = D_u = D_v"));
    }
    effective_rates(chemostat, operation)
}

/// `(a, b) / epsilon` for linear/constant laws.
fn effective_rates(chemostat: &Chemostat, operation: &'static str) -> Result<(f64, f64)> {
    let (a, b) = chemostat
        .laws
        .linear_coefficients()
        .ok_or_else(|| Error::domain(operation, "requires linear attachment and constant detachment"))?;
    let eps = chemostat.params.epsilon_or_one();
    Ok((a / eps, b / eps))
}

fn curves_unchecked(chemostat: &Chemostat, a: f64, b: f64, s: f64) -> EqualRemovalCurves {
    let d = chemostat.params.dilution;
    let pu = net_growth(&chemostat.growth_u, d, s);
    let pv = net_growth(&chemostat.growth_v, d, s);
    let planktonic = pu * (pv - b) / (a * (pv - pu));
    EqualRemovalCurves {
        planktonic,
        attached: -pu / pv * planktonic,
        consumption: d * pu * (pv - b) / (a * pv),
    }
}

/// `(lambda_u, lambda_v)` for the common removal rate.
pub fn break_even_interval(chemostat: &Chemostat) -> Result<(BreakEven, BreakEven)> {
    let d = chemostat.params.dilution;
    Ok((break_even(&chemostat.growth_u, d)?, break_even(&chemostat.growth_v, d)?))
}

/// `U(s)`, `V(s)` and `H(s)` for `s` strictly inside `(lambda_u, lambda_v)`.
pub fn equal_removal_curves(chemostat: &Chemostat, s: f64) -> Result<EqualRemovalCurves> {
    let (a, b) = require_equal_removal(chemostat, "equal_removal_curves")?;
    let (lu, lv) = break_even_interval(chemostat)?;
    let lo = lu
        .value()
        .ok_or_else(|| Error::domain("equal_removal_curves", "planktonic growth never reaches D"))?;
    let hi = lv.or_infinity();
    if !(s > lo && s < hi) {
        return Err(Error::domain(
            "equal_removal_curves",
            format!("s = {s} lies outside ({lo}, {hi})"),
        ));
    }
    Ok(curves_unchecked(chemostat, a, b, s))
}

/// Planar field on `s + u + v = S_in`, in `(u, v)`.
pub fn plane_field(chemostat: &Chemostat, y: &[f64; 2]) -> [f64; 2] {
    let [u, v] = *y;
    let f = chemostat.full_field(&[chemostat.params.s_in - u - v, u, v]);
    [f[1], f[2]]
}

fn residual(chemostat: &Chemostat, state: &FullState) -> f64 {
    chemostat
        .full_field(&state.to_array())
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Washout `(S_in, 0, 0)`, classified on the invariant plane.
pub fn washout_equal_removal(chemostat: &Chemostat) -> Result<Equilibrium> {
    require_equal_removal(chemostat, "washout_equal_removal")?;
    let state = FullState::new(chemostat.params.s_in, 0.0, 0.0);
    Ok(Equilibrium {
        state: EquilibriumState::Full(state),
        kind: EquilibriumKind::Washout,
        stability: classify_planar(|y| plane_field(chemostat, y), [0.0, 0.0]),
        residual: residual(chemostat, &state),
        gamma_prime_sign: None,
    })
}

/// The unique coexistence steady state, present iff `D < mu_u(S_in)`.
pub fn solve_coexistence_equal_removal(chemostat: &Chemostat) -> Result<Option<Equilibrium>> {
    let (a, b) = require_equal_removal(chemostat, "solve_coexistence_equal_removal")?;
    let prm = &chemostat.params;
    let d = prm.dilution;
    if d >= chemostat.growth_u.rate(prm.s_in) {
        return Ok(None);
    }
    let (lu, lv) = break_even_interval(chemostat)?;
    let lambda_u = lu
        .value()
        .ok_or_else(|| Error::Inconsistent("planktonic break-even missing although D < mu_u(S_in)".into()))?;
    let lambda_v = lv.or_infinity();
    // H vanishes at lambda_u and blows up at lambda_v; the balance line
    // D (S_in - s) is negative beyond S_in.
    let (upper, at_pole) = if lambda_v <= prm.s_in {
        (lambda_v, true)
    } else {
        (prm.s_in, false)
    };
    let delta = 1e-9 * (upper - lambda_u);
    let lo = lambda_u + delta;
    let hi = if at_pole { upper - delta } else { upper };
    let gap = |s: f64| d * (prm.s_in - s) - curves_unchecked(chemostat, a, b, s).consumption;
    let s_star = bisect("solve_coexistence_equal_removal", gap, lo, hi, 0.0)?;
    if !(s_star < prm.s_in) {
        return Err(Error::Inconsistent(format!(
            "coexistence substrate {s_star} is not below S_in"
        )));
    }
    let c = curves_unchecked(chemostat, a, b, s_star);
    let state = FullState::new(s_star, c.planktonic, c.attached);
    if !(state.u > 0.0 && state.v > 0.0) {
        return Err(Error::Inconsistent(format!(
            "coexistence state has non-positive biomass: u = {}, v = {}",
            state.u, state.v
        )));
    }
    Ok(Some(Equilibrium {
        state: EquilibriumState::Full(state),
        kind: EquilibriumKind::Coexistence,
        stability: classify_planar(|y| plane_field(chemostat, y), [state.u, state.v]),
        residual: residual(chemostat, &state),
        gamma_prime_sign: None,
    }))
}

/// Closed-form Jacobian of the planar field at a coexistence state.
pub fn closed_form_jacobian(chemostat: &Chemostat, state: &FullState) -> Result<[[f64; 2]; 2]> {
    let (a, b) = require_equal_removal(chemostat, "closed_form_jacobian")?;
    let d = chemostat.params.dilution;
    let FullState { s, u, v } = *state;
    let (pu, pv) = (
        net_growth(&chemostat.growth_u, d, s),
        net_growth(&chemostat.growth_v, d, s),
    );
    let (dpu, dpv) = (chemostat.growth_u.derivative(s), chemostat.growth_v.derivative(s));
    Ok([
        [-u * dpu + pu - a * (2.0 * u + v), -u * dpu - a * u + b],
        [-v * dpv + a * (2.0 * u + v), -v * dpv + pv + a * u - b],
    ])
}

/// Closed-form trace and determinant at a coexistence state, in the
/// `A u phi_u' + B v phi_v' + C` arrangement.
pub fn closed_form_trace_det(chemostat: &Chemostat, state: &FullState) -> Result<(f64, f64)> {
    let (a, b) = require_equal_removal(chemostat, "closed_form_trace_det")?;
    let d = chemostat.params.dilution;
    let FullState { s, u, v } = *state;
    let x = u + v;
    let (pu, pv) = (
        net_growth(&chemostat.growth_u, d, s),
        net_growth(&chemostat.growth_v, d, s),
    );
    let (dpu, dpv) = (chemostat.growth_u.derivative(s), chemostat.growth_v.derivative(s));
    let trace = -u * dpu - v * dpv + pu - a * x + pv - b;
    let big_a = a * x + b - pv;
    let big_b = a * x + b - pu;
    let big_c = pu * pv + pu * (a * u - b) - pv * a * (2.0 * u + v);
    Ok((trace, big_a * u * dpu + big_b * v * dpv + big_c))
}

/// Stability of the planar field from the closed-form Jacobian.
pub fn closed_form_stability(chemostat: &Chemostat, state: &FullState) -> Result<Stability> {
    Ok(Stability::from_jacobian(closed_form_jacobian(chemostat, state)?))
}
