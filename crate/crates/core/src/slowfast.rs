//! Fast attachment/detachment: the slow manifold `p̄(x)`, the density-dependent
//! reduced model and the empirical comparison between full and reduced
//! dynamics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{integrate, ordered_map, uniform_grid, IntegratorConfig, Trajectory};
use crate::model::{AttachmentLaws, Chemostat, FullState, ReducedState};

/// `g(x, p) = -alpha(p x, (1 - p) x) p + beta((1 - p) x) (1 - p)`.
pub fn fast_drift(x: f64, p: f64, laws: &AttachmentLaws) -> f64 {
    let u = p * x;
    let v = (1.0 - p) * x;
    -laws.alpha(u, v) * p + laws.beta(v) * (1.0 - p)
}

/// `(dg/dx, dg/dp)` from the partial derivatives of the attachment laws.
pub fn fast_drift_partials(x: f64, p: f64, laws: &AttachmentLaws) -> (f64, f64) {
    let u = p * x;
    let v = (1.0 - p) * x;
    let (da_du, da_dv) = laws.alpha_partials(u, v);
    let db = laws.beta_derivative(v);
    let beta = laws.beta(v);
    let dg_dx = -((da_du * p + da_dv * (1.0 - p)) * p - db * (1.0 - p) * (1.0 - p));
    // d/dp [beta((1-p)x)(1-p)] = -(beta'(v) v + beta(v))
    let dg_dp = -((da_du - da_dv) * u + laws.alpha(u, v) + db * v + beta);
    (dg_dx, dg_dp)
}

/// Root of `g(x, ·)` on `(0, 1)` by bisection; `1` at `x = 0`.
///
/// Runs until the bracket cannot be split, so the error is below `1e-14`
/// and stays relative for fractions close to zero.
pub fn solve_pbar_bisection(x: f64, laws: &AttachmentLaws) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    // g(x, 0) = beta(x) > 0 and g(x, 1) = -alpha(x, 0) < 0 by assumption.
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = fast_drift(x, mid, laws);
        if g == 0.0 {
            return mid;
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldProvenance {
    /// `p̄(x) = 1 / (1 + (a / b) x)`.
    ClosedForm,
    Bisection,
}

/// Equilibrium planktonic fraction `p̄(x)` of the fast dynamics.
#[derive(Debug, Clone)]
pub struct SlowManifold {
    laws: AttachmentLaws,
    provenance: ManifoldProvenance,
}

impl SlowManifold {
    /// Uses the closed form for linear/constant laws, bisection otherwise.
    pub fn new(laws: &AttachmentLaws) -> Self {
        let provenance = if laws.linear_coefficients().is_some() {
            ManifoldProvenance::ClosedForm
        } else {
            ManifoldProvenance::Bisection
        };
        SlowManifold {
            laws: laws.clone(),
            provenance,
        }
    }

    /// Forces the bisection path even when a closed form exists.
    pub fn by_bisection(laws: &AttachmentLaws) -> Self {
        SlowManifold {
            laws: laws.clone(),
            provenance: ManifoldProvenance::Bisection,
        }
    }

    pub fn provenance(&self) -> ManifoldProvenance {
        self.provenance
    }

    pub fn laws(&self) -> &AttachmentLaws {
        &self.laws
    }

    pub fn fraction(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match (self.provenance, self.laws.linear_coefficients()) {
            (ManifoldProvenance::ClosedForm, Some((a, b))) => 1.0 / (1.0 + a / b * x),
            _ => solve_pbar_bisection(x, &self.laws),
        }
    }

    /// `p̄'(x)`; exact for the closed form, implicit-function formula otherwise.
    pub fn derivative(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match (self.provenance, self.laws.linear_coefficients()) {
            (ManifoldProvenance::ClosedForm, Some((a, b))) => {
                let r = a / b;
                let den = 1.0 + r * x;
                -r / (den * den)
            }
            _ => self.implicit_derivative(x),
        }
    }

    /// `-(dg/dx) / (dg/dp)` evaluated on the manifold.
    pub fn implicit_derivative(&self, x: f64) -> f64 {
        let p = self.fraction(x);
        let (dg_dx, dg_dp) = fast_drift_partials(x, p, &self.laws);
        -dg_dx / dg_dp
    }
}

/// `p̄(x)` through the manifold selected for `laws`.
pub fn solve_pbar(x: f64, laws: &AttachmentLaws) -> f64 {
    SlowManifold::new(laws).fraction(x)
}

/// The slow model on `(s, x)`:
///
/// ```text
/// s' = D (S_in - s) - mu(s, x) x
/// x' = (mu(s, x) - d(x)) x
/// ```
///
/// with `mu(s, x) = p̄ mu_u(s) + (1 - p̄) mu_v(s)` and
/// `d(x) = p̄ D_u + (1 - p̄) D_v`, both through the same `p̄ = p̄(x)`.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub chemostat: Chemostat,
    pub manifold: SlowManifold,
}

impl ReducedModel {
    pub fn new(chemostat: &Chemostat) -> Self {
        ReducedModel {
            manifold: SlowManifold::new(&chemostat.laws),
            chemostat: chemostat.clone(),
        }
    }

    pub fn with_manifold(chemostat: &Chemostat, manifold: SlowManifold) -> Self {
        ReducedModel {
            chemostat: chemostat.clone(),
            manifold,
        }
    }

    #[inline]
    pub(crate) fn growth(&self, s: f64, x: f64) -> f64 {
        self.chemostat.mu_bar_unchecked(s, self.manifold.fraction(x))
    }

    /// Density-dependent growth `mu(s, x)`.
    pub fn mu_density(&self, s: f64, x: f64) -> Result<f64> {
        if !(s >= 0.0 && x >= 0.0 && s.is_finite() && x.is_finite()) {
            return Err(Error::domain("mu_density", format!("need s, x >= 0, got ({s}, {x})")));
        }
        Ok(self.growth(s, x))
    }

    /// `(d mu / ds, d mu / dx)`.
    pub fn growth_partials(&self, s: f64, x: f64) -> (f64, f64) {
        let c = &self.chemostat;
        let p = self.manifold.fraction(x);
        let d_ds = p * c.growth_u.derivative(s) + (1.0 - p) * c.growth_v.derivative(s);
        let d_dx = (c.growth_u.rate(s) - c.growth_v.rate(s)) * self.manifold.derivative(x);
        (d_ds, d_dx)
    }

    /// Effective removal rate `d(x)`.
    pub fn removal(&self, x: f64) -> f64 {
        let p = self.manifold.fraction(x);
        let prm = &self.chemostat.params;
        p * prm.d_u + (1.0 - p) * prm.d_v
    }

    pub fn removal_derivative(&self, x: f64) -> f64 {
        let prm = &self.chemostat.params;
        self.manifold.derivative(x) * (prm.d_u - prm.d_v)
    }

    #[inline]
    pub fn field(&self, y: &[f64; 2]) -> [f64; 2] {
        let [s, x] = *y;
        let prm = &self.chemostat.params;
        let p = self.manifold.fraction(x);
        let mu = self.chemostat.mu_bar_unchecked(s, p);
        let d = p * prm.d_u + (1.0 - p) * prm.d_v;
        [prm.dilution * (prm.s_in - s) - mu * x, (mu - d) * x]
    }

    pub fn rhs(&self, state: &ReducedState) -> Result<[f64; 2]> {
        state.validate()?;
        Ok(self.field(&[state.s, state.x]))
    }

    pub fn simulate(
        &self,
        y0: ReducedState,
        t_end: f64,
        config: &IntegratorConfig,
        grid: Option<&[f64]>,
    ) -> Result<Trajectory> {
        y0.validate()?;
        let tr = integrate(
            |_t, y, dy| {
                let d = self.field(&[y[0], y[1]]);
                dy.copy_from_slice(&d);
            },
            &[y0.s, y0.x],
            (0.0, t_end),
            &config.nonnegative(),
            grid,
        )?;
        Ok(tr.with_tag("reduced").with_labels(&["s", "x"]))
    }
}

impl Chemostat {
    /// Integrates the full model in `(s, u, v)` coordinates.
    pub fn simulate_full(
        &self,
        y0: FullState,
        t_end: f64,
        config: &IntegratorConfig,
        grid: Option<&[f64]>,
    ) -> Result<Trajectory> {
        y0.validate()?;
        let cfg = config.nonnegative().for_timescale(self.params.epsilon);
        let tr = integrate(
            |_t, y, dy| {
                let d = self.full_field(&[y[0], y[1], y[2]]);
                dy.copy_from_slice(&d);
            },
            &y0.to_array(),
            (0.0, t_end),
            &cfg,
            grid,
        )?;
        Ok(tr.with_tag("full").with_labels(&["s", "u", "v"]))
    }

    /// Integrates the full model in `(s, x, p)` coordinates.
    pub fn simulate_xp(
        &self,
        y0: crate::model::XPState,
        t_end: f64,
        config: &IntegratorConfig,
        grid: Option<&[f64]>,
    ) -> Result<Trajectory> {
        if !(y0.x > 0.0) {
            return Err(Error::domain("simulate_xp", "total biomass must be positive"));
        }
        y0.validate()?;
        let cfg = config.nonnegative().for_timescale(self.params.epsilon);
        let tr = integrate(
            |_t, y, dy| {
                let d = self.xp_field(&[y[0], y[1], y[2]]);
                dy.copy_from_slice(&d);
            },
            &[y0.s, y0.x, y0.p],
            (0.0, t_end),
            &cfg,
            grid,
        )?;
        Ok(tr.with_tag("xp").with_labels(&["s", "x", "p"]))
    }
}

/// Deviations between one full run and the reduced run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonDeviation {
    pub epsilon: f64,
    /// Comparison window starts at `5 epsilon`.
    pub window_start: f64,
    pub sup_dev_s: f64,
    pub sup_dev_x: f64,
    pub terminal_dev_s: f64,
    pub terminal_dev_x: f64,
    /// `sup |p(t) - p̄(x(t))|` over the window, the measured size of the
    /// term dropped by the reduction.
    pub sup_manifold_offset: f64,
    pub terminal_full: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub epsilons: Vec<f64>,
    pub t_end: f64,
    pub grid_points: usize,
    pub initial_state: [f64; 3],
    pub reduced_initial_state: [f64; 2],
    pub window_rule: String,
    pub terminal_reduced: [f64; 2],
    pub deviations: Vec<EpsilonDeviation>,
}

#[derive(Debug, Clone)]
pub struct SlowFastComparison {
    pub report: ComparisonReport,
    /// One full trajectory per epsilon, in input order, columns `s, u, v`.
    pub full: Vec<Trajectory>,
    pub reduced: Trajectory,
}

#[derive(Debug, Clone, Copy)]
pub struct ComparisonOptions {
    pub grid_points: usize,
    pub config: IntegratorConfig,
    /// Worker threads for the per-epsilon runs; `1` runs sequentially.
    pub jobs: usize,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        ComparisonOptions {
            grid_points: 500,
            config: IntegratorConfig::default(),
            jobs: 1,
        }
    }
}

/// Integrates the full model for each `epsilon` and the reduced model once,
/// from `y0` and `(s0, u0 + v0)` respectively, and measures their sup-norm
/// distance on a common uniform grid (ignoring `t < 5 epsilon`).
pub fn compare_slow_fast(
    chemostat: &Chemostat,
    eps_list: &[f64],
    y0: FullState,
    t_end: f64,
    options: &ComparisonOptions,
) -> Result<SlowFastComparison> {
    if eps_list.is_empty() {
        return Err(Error::domain("compare_slow_fast", "epsilon list is empty"));
    }
    if let Some(bad) = eps_list.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::config("epsilon", format!("must be positive, got {bad}")));
    }
    y0.validate()?;
    if !(y0.u + y0.v > 0.0) {
        return Err(Error::domain(
            "compare_slow_fast",
            "initial biomass u + v must be positive",
        ));
    }
    let grid = uniform_grid(0.0, t_end, options.grid_points);
    let reduced_model = ReducedModel::new(chemostat);
    let x0 = y0.u + y0.v;
    let reduced = reduced_model.simulate(ReducedState::new(y0.s, x0), t_end, &options.config, Some(&grid))?;

    let runs: Vec<Result<Trajectory>> = ordered_map(eps_list, options.jobs, |&eps| {
        let model = Chemostat {
            params: chemostat.params.with_epsilon(eps),
            ..chemostat.clone()
        };
        model
            .simulate_full(y0, t_end, &options.config, Some(&grid))
            .map(|t| t.with_tag(format!("full eps={eps}")))
            .map_err(|e| match e {
                Error::Integration(source) => Error::IntegrationAt { epsilon: eps, source },
                other => other,
            })
    });
    let full: Vec<Trajectory> = runs.into_iter().collect::<Result<_>>()?;

    let manifold = &reduced_model.manifold;
    let deviations = eps_list
        .iter()
        .zip(&full)
        .map(|(&eps, tr)| {
            let window_start = 5.0 * eps;
            let (mut dev_s, mut dev_x, mut offset) = (0.0f64, 0.0f64, 0.0f64);
            for ((t, yf), yr) in tr.times.iter().zip(&tr.states).zip(&reduced.states) {
                if *t < window_start {
                    continue;
                }
                let x = yf[1] + yf[2];
                dev_s = dev_s.max((yf[0] - yr[0]).abs());
                dev_x = dev_x.max((x - yr[1]).abs());
                if x > 0.0 {
                    offset = offset.max((yf[1] / x - manifold.fraction(x)).abs());
                }
            }
            let last_f = tr.last_state();
            let last_r = reduced.last_state();
            EpsilonDeviation {
                epsilon: eps,
                window_start,
                sup_dev_s: dev_s,
                sup_dev_x: dev_x,
                terminal_dev_s: (last_f[0] - last_r[0]).abs(),
                terminal_dev_x: (last_f[1] + last_f[2] - last_r[1]).abs(),
                sup_manifold_offset: offset,
                terminal_full: [last_f[0], last_f[1], last_f[2]],
            }
        })
        .collect();

    let last_r = reduced.last_state();
    let report = ComparisonReport {
        epsilons: eps_list.to_vec(),
        t_end,
        grid_points: options.grid_points,
        initial_state: y0.to_array(),
        reduced_initial_state: [y0.s, x0],
        window_rule: "t >= 5 * epsilon".into(),
        terminal_reduced: [last_r[0], last_r[1]],
        deviations,
    };
    Ok(SlowFastComparison { report, full, reduced })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChemostatParams, GrowthLaw};
    use approx::assert_relative_eq;

    fn fig4() -> Chemostat {
        Chemostat::new(
            ChemostatParams::new(0.5, 2.0),
            GrowthLaw::monod(1.0, 1.0),
            GrowthLaw::monod(0.7, 1.0),
            AttachmentLaws::linear(1.0, 0.5),
        )
        .unwrap()
    }

    fn fig6() -> Chemostat {
        Chemostat::new(
            ChemostatParams::new(1.0, 0.9).with_removal(1.0, 0.5),
            GrowthLaw::monod(2.0, 1.0),
            GrowthLaw::monod(1.5, 0.8),
            AttachmentLaws::linear(4.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn fast_drift_endpoints_and_zero() {
        let laws = AttachmentLaws::linear(1.0, 0.5);
        assert_eq!(fast_drift(2.0, 0.0, &laws), 0.5);
        assert_eq!(fast_drift(2.0, 1.0, &laws), -2.0);
        assert!(fast_drift(1.0, 1.0 / 3.0, &laws).abs() < 1e-15);
    }

    #[test]
    fn pbar_values() {
        let laws = AttachmentLaws::linear(1.0, 0.5);
        assert_eq!(solve_pbar(0.0, &laws), 1.0);
        assert_relative_eq!(solve_pbar(1.0, &laws), 1.0 / 3.0, epsilon = 1e-15);
        assert!((solve_pbar_bisection(1.0, &laws) - 1.0 / 3.0).abs() < 1e-13);
        assert_relative_eq!(solve_pbar(1.0, &AttachmentLaws::linear(4.0, 1.0)), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn manifold_provenance() {
        let lin = AttachmentLaws::linear(1.0, 0.5);
        assert_eq!(SlowManifold::new(&lin).provenance(), ManifoldProvenance::ClosedForm);
        assert_eq!(
            SlowManifold::by_bisection(&lin).provenance(),
            ManifoldProvenance::Bisection
        );
        let custom = AttachmentLaws::custom(|u, v| u + 0.5 * v, |v| 1.0 / (1.0 + 0.1 * v));
        let m = SlowManifold::new(&custom);
        assert_eq!(m.provenance(), ManifoldProvenance::Bisection);
        for x in [0.1, 1.0, 10.0] {
            assert!(fast_drift(x, m.fraction(x), &custom).abs() < 1e-12);
        }
    }

    #[test]
    fn partials_match_finite_differences_for_custom_laws() {
        let laws = AttachmentLaws::custom(|u, v| u * u + u + 0.3 * v, |v| 2.0 / (1.0 + 0.2 * v));
        for &(x, p) in &[(0.5, 0.3), (2.0, 0.8), (5.0, 0.1)] {
            let (gx, gp) = fast_drift_partials(x, p, &laws);
            let h = 1e-6;
            let fx = (fast_drift(x + h, p, &laws) - fast_drift(x - h, p, &laws)) / (2.0 * h);
            let fp = (fast_drift(x, p + h, &laws) - fast_drift(x, p - h, &laws)) / (2.0 * h);
            assert_relative_eq!(gx, fx, max_relative = 1e-5);
            assert_relative_eq!(gp, fp, max_relative = 1e-5);
            assert!(gp < 0.0);
        }
    }

    #[test]
    fn mu_density_limits_and_value() {
        let r = ReducedModel::new(&fig4());
        assert_eq!(r.mu_density(1.3, 0.0).unwrap(), r.chemostat.growth_u.rate(1.3));
        assert!((r.mu_density(1.3, 1e6).unwrap() - r.chemostat.growth_v.rate(1.3)).abs() < 1e-5);
        assert_relative_eq!(r.mu_density(1.0, 1.0).unwrap(), 0.4, epsilon = 1e-15);
        assert!(r.mu_density(-1.0, 1.0).is_err());
    }

    #[test]
    fn reduced_rhs_washout_and_removal() {
        let r = ReducedModel::new(&fig4());
        assert_eq!(r.rhs(&ReducedState::new(2.0, 0.0)).unwrap(), [0.0, 0.0]);
        for x in [0.0, 0.3, 7.0] {
            assert_relative_eq!(r.removal(x), 0.5, epsilon = 1e-15);
        }
        let r6 = ReducedModel::new(&fig6());
        assert_relative_eq!(r6.removal(1.0), 0.6, epsilon = 1e-15);
    }

    #[test]
    fn comparison_rejects_bad_inputs() {
        let m = fig4();
        let opts = ComparisonOptions::default();
        assert!(compare_slow_fast(&m, &[], FullState::new(2.0, 0.05, 0.05), 10.0, &opts).is_err());
        assert!(compare_slow_fast(&m, &[0.5], FullState::new(2.0, 0.0, 0.0), 10.0, &opts).is_err());
        assert!(compare_slow_fast(&m, &[-1.0], FullState::new(2.0, 0.1, 0.0), 10.0, &opts).is_err());
    }
}
