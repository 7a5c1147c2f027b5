//! Adaptive Dormand-Prince 5(4) integration with dense output.
//!
//! Error control follows the usual mixed tolerance
//! `sc_i = abs_tol + rel_tol * max(|y_i|, |y_new_i|)` in the RMS norm, and
//! states on a requested output grid come from the pair's fourth-order
//! continuous extension.

use rayon::prelude::*;

use crate::error::IntegrationError;

/// Projection threshold of the nonnegativity guard.
pub const NONNEGATIVE_TOL: f64 = 1e-9;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step; `None` means `(t1 - t0) / 100`.
    pub max_step: Option<f64>,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
    /// Project components in `[-NONNEGATIVE_TOL, 0)` to zero after each
    /// accepted step and abort on anything more negative.
    pub nonnegative: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: None,
            max_steps: 10_000_000,
            initial_step: None,
            nonnegative: false,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = Some(max_step);
        self
    }

    pub fn nonnegative(mut self) -> Self {
        self.nonnegative = true;
        self
    }

    /// Caps the step at `epsilon / 2` when the attachment time scale is
    /// shorter than `0.1`.
    pub fn for_timescale(mut self, epsilon: Option<f64>) -> Self {
        if let Some(eps) = epsilon.filter(|&e| e < 0.1) {
            let cap = 0.5 * eps;
            self.max_step = Some(self.max_step.map_or(cap, |m| m.min(cap)));
        }
        self
    }

    fn validate(&self) -> Result<(), IntegrationError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(IntegrationError::InvalidRequest(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        if let Some(h) = self.max_step {
            positive("max_step", h)?;
        }
        if let Some(h) = self.initial_step {
            positive("initial_step", h)?;
        }
        if self.max_steps == 0 {
            return Err(IntegrationError::InvalidRequest("max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Time-stamped states produced by an integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub n_accepted: usize,
    pub n_rejected: usize,
    /// Which vector field produced the trajectory.
    pub model_tag: String,
    /// Column names of the state components.
    pub labels: Vec<String>,
}

impl Trajectory {
    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.model_tag = tag.into();
        self
    }

    pub fn with_labels<S: AsRef<str>>(mut self, labels: &[S]) -> Self {
        self.labels = labels.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// Values of one component along the trajectory.
    pub fn component(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|y| y[index]).collect()
    }
}

/// `n` uniformly spaced times from `t0` to `t1` inclusive.
pub fn uniform_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t1],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            err: vec![0.0; n],
        }
    }
}

fn check_finite(values: &[f64], t: f64) -> Result<(), IntegrationError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(IntegrationError::NonFinite { t })
    }
}

/// One Dormand-Prince step from `(t, y)` with `k[0] = f(t, y)` already set.
/// Fills `y_new`, the stage derivatives (with `k[6] = f(t + h, y_new)`) and
/// the local error estimate.
fn dp_step<F>(rhs: &F, t: f64, y: &[f64], h: f64, st: &mut Stages) -> Result<(), IntegrationError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let Stages { k, tmp, y_new, err } = st;
    let [k1, k2, k3, k4, k5, k6, k7] = k;
    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k1[i];
    }
    rhs(t + C2 * h, tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    rhs(t + C3 * h, tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    rhs(t + C4 * h, tmp, k4);
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    rhs(t + C5 * h, tmp, k5);
    for i in 0..n {
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    rhs(t + h, tmp, k6);
    for i in 0..n {
        y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
    }
    rhs(t + h, y_new, k7);
    for i in 0..n {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    check_finite(y_new, t + h)?;
    check_finite(k7, t + h)
}

/// Dense-output coefficients of the last accepted step.
struct Dense {
    t: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl Dense {
    fn new(n: usize) -> Self {
        Dense {
            t: 0.0,
            h: 0.0,
            r: std::array::from_fn(|_| vec![0.0; n]),
        }
    }

    fn prepare(&mut self, t: f64, h: f64, y: &[f64], st: &Stages) {
        self.t = t;
        self.h = h;
        let k = &st.k;
        for i in 0..y.len() {
            let dy = st.y_new[i] - y[i];
            let bspl = h * k[0][i] - dy;
            self.r[0][i] = y[i];
            self.r[1][i] = dy;
            self.r[2][i] = bspl;
            self.r[3][i] = dy - h * k[6][i] - bspl;
            self.r[4][i] =
                h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
        }
    }

    fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t) / self.h;
        let theta1 = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.r[0][i]
                + theta * (self.r[1][i] + theta1 * (self.r[2][i] + theta * (self.r[3][i] + theta1 * self.r[4][i])));
        }
    }
}

fn rms_error(y: &[f64], st: &Stages, cfg: &IntegratorConfig) -> f64 {
    let n = y.len();
    let sum: f64 = (0..n)
        .map(|i| {
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(st.y_new[i].abs());
            let e = st.err[i] / sc;
            e * e
        })
        .sum();
    (sum / n as f64).sqrt()
}

fn initial_step<F>(rhs: &F, t0: f64, y0: &[f64], f0: &[f64], h_max: f64, cfg: &IntegratorConfig) -> f64
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let sc: Vec<f64> = y0.iter().map(|y| cfg.abs_tol + cfg.rel_tol * y.abs()).collect();
    let norm = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = norm(y0);
    let d1 = norm(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(h_max);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; n];
    rhs(t0 + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(h_max)
}

/// Integrates `dy/dt = rhs(t, y)` over `t_span`.
///
/// Without an output grid every accepted step is recorded; with one, the
/// trajectory holds exactly the grid times.
pub fn integrate<F>(
    rhs: F,
    y0: &[f64],
    t_span: (f64, f64),
    config: &IntegratorConfig,
    output_grid: Option<&[f64]>,
) -> Result<Trajectory, IntegrationError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    config.validate()?;
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(IntegrationError::InvalidRequest(format!(
            "need t1 > t0, got [{t0}, {t1}]"
        )));
    }
    if y0.is_empty() {
        return Err(IntegrationError::InvalidRequest("empty initial state".into()));
    }
    if !y0.iter().all(|v| v.is_finite()) {
        return Err(IntegrationError::InvalidRequest("initial state is not finite".into()));
    }
    if let Some(grid) = output_grid {
        if grid.iter().any(|&g| !(t0..=t1).contains(&g)) {
            return Err(IntegrationError::InvalidRequest("output grid leaves [t0, t1]".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(IntegrationError::InvalidRequest(
                "output grid must be strictly increasing".into(),
            ));
        }
    }

    let n = y0.len();
    let span = t1 - t0;
    let h_max = config.max_step.unwrap_or(span / 100.0).min(span);
    // The budget cannot cover the span even at the largest allowed step.
    if span / h_max > config.max_steps as f64 {
        return Err(IntegrationError::StepLimit {
            t: t0,
            max_steps: config.max_steps,
        });
    }
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        n_accepted: 0,
        n_rejected: 0,
        model_tag: String::new(),
        labels: (0..n).map(|i| format!("y{i}")).collect(),
    };

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut st = Stages::new(n);
    let mut dense = Dense::new(n);
    let mut out = vec![0.0; n];
    rhs(t, &y, &mut st.k[0]);
    check_finite(&st.k[0], t)?;

    let mut grid_idx = 0;
    let grid = output_grid.unwrap_or(&[]);
    let emit_grid = output_grid.is_some();
    if emit_grid {
        while grid_idx < grid.len() && grid[grid_idx] <= t0 {
            traj.times.push(grid[grid_idx]);
            traj.states.push(y.clone());
            grid_idx += 1;
        }
    } else {
        traj.times.push(t0);
        traj.states.push(y.clone());
    }

    let mut h = match config.initial_step {
        Some(h) => h.min(h_max),
        None => initial_step(&rhs, t0, &y, &st.k[0], h_max, config),
    };
    let mut last_rejected = false;
    let mut steps = 0usize;

    while t < t1 {
        if steps >= config.max_steps {
            return Err(IntegrationError::StepLimit {
                t,
                max_steps: config.max_steps,
            });
        }
        steps += 1;
        let h_min = 16.0 * f64::EPSILON * t.abs().max(span);
        if h < h_min {
            return Err(IntegrationError::StepUnderflow { t, h });
        }
        let last = t + h >= t1 || t1 - (t + h) < h_min;
        if last {
            h = t1 - t;
        }

        dp_step(&rhs, t, &y, h, &mut st)?;
        let err = rms_error(&y, &st, config);
        if !err.is_finite() {
            return Err(IntegrationError::NonFinite { t });
        }

        if err <= 1.0 {
            dense.prepare(t, h, &y, &st);
            let t_new = if last { t1 } else { t + h };
            if config.nonnegative {
                let mut projected = false;
                for (i, v) in st.y_new.iter_mut().enumerate() {
                    if *v < 0.0 {
                        if *v < -NONNEGATIVE_TOL {
                            return Err(IntegrationError::Negativity {
                                t: t_new,
                                component: i,
                                value: *v,
                            });
                        }
                        *v = 0.0;
                        projected = true;
                    }
                }
                if projected {
                    rhs(t_new, &st.y_new, &mut st.k[6]);
                    check_finite(&st.k[6], t_new)?;
                }
            }
            while grid_idx < grid.len() && grid[grid_idx] <= t_new {
                let g = grid[grid_idx];
                if g == t_new {
                    out.copy_from_slice(&st.y_new);
                } else {
                    dense.eval(g, &mut out);
                    if config.nonnegative {
                        for v in out.iter_mut().filter(|v| (-NONNEGATIVE_TOL..0.0).contains(*v)) {
                            *v = 0.0;
                        }
                    }
                }
                traj.times.push(g);
                traj.states.push(out.clone());
                grid_idx += 1;
            }
            t = t_new;
            y.copy_from_slice(&st.y_new);
            let (k0, rest) = st.k.split_at_mut(1);
            k0[0].copy_from_slice(&rest[5]);
            traj.n_accepted += 1;
            if !emit_grid {
                traj.times.push(t);
                traj.states.push(y.clone());
            }
            let mut fac = if err == 0.0 { 10.0 } else { 0.9 * err.powf(-0.2) };
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(h_max);
            last_rejected = false;
        } else {
            traj.n_rejected += 1;
            last_rejected = true;
            h *= (0.9 * err.powf(-0.2)).max(0.2);
        }
    }
    Ok(traj)
}

/// Fixed-step integration with the fifth-order Dormand-Prince formula,
/// recording every step.
pub fn integrate_fixed<F>(
    rhs: F,
    y0: &[f64],
    t_span: (f64, f64),
    n_steps: usize,
) -> Result<Trajectory, IntegrationError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let (t0, t1) = t_span;
    if !(t1 > t0) || n_steps == 0 {
        return Err(IntegrationError::InvalidRequest("need t1 > t0 and n_steps >= 1".into()));
    }
    let n = y0.len();
    let h = (t1 - t0) / n_steps as f64;
    let mut st = Stages::new(n);
    let mut y = y0.to_vec();
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![y.clone()],
        n_accepted: 0,
        n_rejected: 0,
        model_tag: String::new(),
        labels: (0..n).map(|i| format!("y{i}")).collect(),
    };
    rhs(t0, &y, &mut st.k[0]);
    for step in 0..n_steps {
        let t = t0 + h * step as f64;
        dp_step(&rhs, t, &y, h, &mut st)?;
        y.copy_from_slice(&st.y_new);
        let (k0, rest) = st.k.split_at_mut(1);
        k0[0].copy_from_slice(&rest[5]);
        traj.n_accepted += 1;
        traj.times.push(if step + 1 == n_steps { t1 } else { t + h });
        traj.states.push(y.clone());
    }
    Ok(traj)
}

/// Runs `f` over `items` on `jobs` threads, keeping input order. Used to
/// spread independent integrations.
pub fn ordered_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}
