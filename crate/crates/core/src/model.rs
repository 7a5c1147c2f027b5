//! Kinetic laws, operating conditions and the right-hand sides of the
//! chemostat with planktonic (`u`) and attached (`v`) biomass.
//!
//! The full model, with unit yields, reads
//!
//! ```text
//! s' = D (S_in - s) - mu_u(s) u - mu_v(s) v
//! u' = (mu_u(s) - D_u) u - [alpha(u, v) u - beta(v) v] / eps
//! v' = (mu_v(s) - D_v) v + [alpha(u, v) u - beta(v) v] / eps
//! ```
//!
//! where `eps` is the optional attachment time-scale ratio (absent means 1).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Scalar kinetic function of one concentration.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Scalar kinetic function of the two biomass concentrations `(u, v)`.
pub type PairFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Number of points of the log-spaced grid used to check user-supplied laws.
pub const VALIDATION_POINTS: usize = 200;
const VALIDATION_LOW: f64 = 1e-6;

/// Log-spaced validation grid over `[1e-6, 10 * s_in]`.
pub fn validation_grid(s_in: f64, n: usize) -> Vec<f64> {
    let hi = 10.0 * s_in;
    let (l0, l1) = (VALIDATION_LOW.ln(), hi.ln());
    (0..n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Central difference with step `max(1e-6, 1e-6 |s|)`, switching to a
/// second-order forward stencil when the central stencil would leave `s >= 0`.
pub(crate) fn finite_difference(f: &dyn Fn(f64) -> f64, s: f64) -> f64 {
    let h = (1e-6 * s.abs()).max(1e-6);
    if s - h < 0.0 {
        (-3.0 * f(s) + 4.0 * f(s + h) - f(s + 2.0 * h)) / (2.0 * h)
    } else {
        (f(s + h) - f(s - h)) / (2.0 * h)
    }
}

#[derive(Clone)]
pub struct CustomGrowth {
    pub name: String,
    rate: ScalarFn,
    derivative: Option<ScalarFn>,
}

/// Specific growth rate `mu(s)`: increasing, null at zero.
#[derive(Clone)]
pub enum GrowthLaw {
    /// `mu_max * s / (half_saturation + s)`.
    Monod {
        mu_max: f64,
        half_saturation: f64,
    },
    Custom(CustomGrowth),
}

impl fmt::Debug for GrowthLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthLaw::Monod {
                mu_max,
                half_saturation,
            } => f
                .debug_struct("Monod")
                .field("mu_max", mu_max)
                .field("half_saturation", half_saturation)
                .finish(),
            GrowthLaw::Custom(c) => f
                .debug_struct("Custom")
                .field("name", &c.name)
                .field("analytic_derivative", &c.derivative.is_some())
                .finish(),
        }
    }
}

impl GrowthLaw {
    pub fn monod(mu_max: f64, half_saturation: f64) -> Self {
        GrowthLaw::Monod {
            mu_max,
            half_saturation,
        }
    }

    /// A user-supplied law. Its derivative falls back to finite differences
    /// unless [`GrowthLaw::with_derivative`] provides one.
    pub fn custom(name: impl Into<String>, rate: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        GrowthLaw::Custom(CustomGrowth {
            name: name.into(),
            rate: Arc::new(rate),
            derivative: None,
        })
    }

    pub fn with_derivative(self, derivative: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        match self {
            GrowthLaw::Custom(mut c) => {
                c.derivative = Some(Arc::new(derivative));
                GrowthLaw::Custom(c)
            }
            monod => monod,
        }
    }

    #[inline]
    pub fn rate(&self, s: f64) -> f64 {
        match self {
            GrowthLaw::Monod {
                mu_max,
                half_saturation,
            } => mu_max * s / (half_saturation + s),
            GrowthLaw::Custom(c) => (c.rate)(s),
        }
    }

    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            GrowthLaw::Monod {
                mu_max,
                half_saturation,
            } => {
                let den = half_saturation + s;
                mu_max * half_saturation / (den * den)
            }
            GrowthLaw::Custom(c) => match &c.derivative {
                Some(d) => d(s),
                None => finite_difference(&|z| (c.rate)(z), s),
            },
        }
    }

    /// Least upper bound of `mu` on `[0, inf)` when known in closed form.
    pub fn supremum(&self) -> Option<f64> {
        match self {
            GrowthLaw::Monod { mu_max, .. } => Some(*mu_max),
            GrowthLaw::Custom(_) => None,
        }
    }

    /// Checks positivity of the Monod constants, or `mu(0) = 0` and strict
    /// monotonicity on the validation grid for custom laws.
    pub fn validate(&self, field: &str, s_in: f64) -> Result<()> {
        match self {
            GrowthLaw::Monod {
                mu_max,
                half_saturation,
            } => {
                if !(mu_max.is_finite() && *mu_max > 0.0) {
                    return Err(Error::config(
                        format!("{field}.mu_max"),
                        format!("must be positive and finite, got {mu_max}"),
                    ));
                }
                if !(half_saturation.is_finite() && *half_saturation > 0.0) {
                    return Err(Error::config(
                        format!("{field}.K"),
                        format!("must be positive and finite, got {half_saturation}"),
                    ));
                }
                Ok(())
            }
            GrowthLaw::Custom(_) => {
                let at_zero = self.rate(0.0);
                if at_zero != 0.0 {
                    return Err(Error::config(
                        field,
                        format!("growth must vanish at s = 0, got {at_zero}"),
                    ));
                }
                let mut prev = 0.0;
                for s in validation_grid(s_in, VALIDATION_POINTS) {
                    let mu = self.rate(s);
                    let dmu = self.derivative(s);
                    if !mu.is_finite() || !dmu.is_finite() {
                        return Err(Error::config(field, format!("non-finite value at s = {s}")));
                    }
                    if mu <= prev || dmu <= 0.0 {
                        return Err(Error::config(
                            field,
                            format!("growth must be strictly increasing; fails at s = {s}"),
                        ));
                    }
                    prev = mu;
                }
                Ok(())
            }
        }
    }
}

/// Specific attachment rate `alpha(u, v)` of planktonic biomass.
#[derive(Clone)]
pub enum AttachmentRate {
    /// `alpha(u, v) = a (u + v)`.
    LinearTotal {
        a: f64,
    },
    Custom {
        name: String,
        rate: PairFn,
    },
}

/// Specific detachment rate `beta(v)` of attached biomass.
#[derive(Clone)]
pub enum DetachmentRate {
    /// `beta(v) = b`.
    Constant {
        b: f64,
    },
    Custom {
        name: String,
        rate: ScalarFn,
    },
}

impl fmt::Debug for AttachmentRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttachmentRate::LinearTotal { a } => f.debug_struct("LinearTotal").field("a", a).finish(),
            AttachmentRate::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish(),
        }
    }
}

impl fmt::Debug for DetachmentRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetachmentRate::Constant { b } => f.debug_struct("Constant").field("b", b).finish(),
            DetachmentRate::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttachmentLaws {
    pub attachment: AttachmentRate,
    pub detachment: DetachmentRate,
}

impl AttachmentLaws {
    /// `alpha(u, v) = a (u + v)` and `beta(v) = b`.
    pub fn linear(a: f64, b: f64) -> Self {
        AttachmentLaws {
            attachment: AttachmentRate::LinearTotal { a },
            detachment: DetachmentRate::Constant { b },
        }
    }

    pub fn custom(
        attachment: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        detachment: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        AttachmentLaws {
            attachment: AttachmentRate::Custom {
                name: "custom".into(),
                rate: Arc::new(attachment),
            },
            detachment: DetachmentRate::Custom {
                name: "custom".into(),
                rate: Arc::new(detachment),
            },
        }
    }

    /// `(a, b)` when both laws are of the built-in linear/constant kind.
    pub fn linear_coefficients(&self) -> Option<(f64, f64)> {
        match (&self.attachment, &self.detachment) {
            (AttachmentRate::LinearTotal { a }, DetachmentRate::Constant { b }) => Some((*a, *b)),
            _ => None,
        }
    }

    #[inline]
    pub fn alpha(&self, u: f64, v: f64) -> f64 {
        match &self.attachment {
            AttachmentRate::LinearTotal { a } => a * (u + v),
            AttachmentRate::Custom { rate, .. } => rate(u, v),
        }
    }

    /// `(d alpha / du, d alpha / dv)`.
    pub fn alpha_partials(&self, u: f64, v: f64) -> (f64, f64) {
        match &self.attachment {
            AttachmentRate::LinearTotal { a } => (*a, *a),
            AttachmentRate::Custom { rate, .. } => (
                finite_difference(&|z| rate(z, v), u),
                finite_difference(&|z| rate(u, z), v),
            ),
        }
    }

    #[inline]
    pub fn beta(&self, v: f64) -> f64 {
        match &self.detachment {
            DetachmentRate::Constant { b } => *b,
            DetachmentRate::Custom { rate, .. } => rate(v),
        }
    }

    pub fn beta_derivative(&self, v: f64) -> f64 {
        match &self.detachment {
            DetachmentRate::Constant { .. } => 0.0,
            DetachmentRate::Custom { rate, .. } => finite_difference(&|z| rate(z), v),
        }
    }

    /// Net attachment flux `alpha(u, v) u - beta(v) v` (planktonic to attached).
    #[inline]
    pub fn net_flux(&self, u: f64, v: f64) -> f64 {
        self.alpha(u, v) * u - self.beta(v) * v
    }

    pub fn validate(&self, s_in: f64) -> Result<()> {
        match &self.attachment {
            AttachmentRate::LinearTotal { a } if !(a.is_finite() && *a > 0.0) => {
                return Err(Error::config(
                    "attachment.linear_total.a",
                    format!("must be positive, got {a}"),
                ))
            }
            _ => {}
        }
        match &self.detachment {
            DetachmentRate::Constant { b } if !(b.is_finite() && *b > 0.0) => {
                return Err(Error::config(
                    "detachment.constant.b",
                    format!("must be positive, got {b}"),
                ))
            }
            _ => {}
        }
        if self.linear_coefficients().is_some() {
            return Ok(());
        }
        // Grid checks for user-supplied laws; slack absorbs finite-difference noise.
        let grid = validation_grid(s_in, 40);
        let slack = 1e-7;
        for &w in &grid {
            if self.alpha(w, 0.0) <= 0.0 {
                return Err(Error::config(
                    "attachment",
                    format!("alpha(u, 0) must be positive at u = {w}"),
                ));
            }
            if self.beta(w) <= 0.0 {
                return Err(Error::config(
                    "detachment",
                    format!("beta(v) must be positive at v = {w}"),
                ));
            }
            for &z in &grid {
                let (du, dv) = self.alpha_partials(w, z);
                let scale = du.abs().max(dv.abs()).max(1.0);
                if du < dv - slack * scale || dv < -slack * scale {
                    return Err(Error::config(
                        "attachment",
                        format!("requires d alpha/du >= d alpha/dv >= 0; fails at (u, v) = ({w}, {z})"),
                    ));
                }
            }
        }
        for pair in grid.windows(2) {
            let (v0, v1) = (pair[0], pair[1]);
            let (b0, b1) = (self.beta(v0), self.beta(v1));
            if b1 > b0 * (1.0 + slack) {
                return Err(Error::config(
                    "detachment",
                    format!("beta must be nonincreasing; fails at v = {v1}"),
                ));
            }
            if b1 * v1 < b0 * v0 * (1.0 - slack) {
                return Err(Error::config(
                    "detachment",
                    format!("v * beta(v) must be nondecreasing; fails at v = {v1}"),
                ));
            }
        }
        Ok(())
    }
}

/// Operating conditions of the reactor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChemostatParams {
    /// Dilution rate `D` acting on the substrate.
    pub dilution: f64,
    /// Input substrate concentration `S_in`.
    pub s_in: f64,
    /// Removal rate of planktonic biomass `D_u`.
    pub d_u: f64,
    /// Removal rate of attached biomass `D_v`.
    pub d_v: f64,
    /// Ratio between attachment/detachment and growth time scales.
    pub epsilon: Option<f64>,
    /// Skip the `D >= D_u >= D_v` ordering check (exploration only).
    pub relax_removal_order: bool,
}

impl ChemostatParams {
    /// Equal removal rates `D = D_u = D_v`.
    pub fn new(dilution: f64, s_in: f64) -> Self {
        ChemostatParams {
            dilution,
            s_in,
            d_u: dilution,
            d_v: dilution,
            epsilon: None,
            relax_removal_order: false,
        }
    }

    pub fn with_removal(mut self, d_u: f64, d_v: f64) -> Self {
        self.d_u = d_u;
        self.d_v = d_v;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn without_epsilon(mut self) -> Self {
        self.epsilon = None;
        self
    }

    #[inline]
    pub fn epsilon_or_one(&self) -> f64 {
        self.epsilon.unwrap_or(1.0)
    }

    pub fn has_equal_removal(&self) -> bool {
        self.dilution == self.d_u && self.d_u == self.d_v
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::config(
                    field,
                    format!("must be positive and finite, got {value}"),
                ))
            }
        };
        positive("S_in", self.s_in)?;
        positive("D", self.dilution)?;
        positive("D_u", self.d_u)?;
        positive("D_v", self.d_v)?;
        if let Some(eps) = self.epsilon {
            positive("epsilon", eps)?;
        }
        if !self.relax_removal_order {
            if self.d_u > self.dilution {
                return Err(Error::config(
                    "D_u",
                    format!(
                        "requires D >= D_u >= D_v, got D = {}, D_u = {}",
                        self.dilution, self.d_u
                    ),
                ));
            }
            if self.d_v > self.d_u {
                return Err(Error::config(
                    "D_v",
                    format!("requires D >= D_u >= D_v, got D_u = {}, D_v = {}", self.d_u, self.d_v),
                ));
            }
        }
        Ok(())
    }
}

/// State of the full model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullState {
    pub s: f64,
    pub u: f64,
    pub v: f64,
}

/// State in total-biomass / planktonic-fraction coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XPState {
    pub s: f64,
    pub x: f64,
    pub p: f64,
}

/// State of the reduced (slow) model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub s: f64,
    pub x: f64,
}

fn check_nonnegative(operation: &'static str, names: &[&str], values: &[f64]) -> Result<()> {
    for (name, value) in names.iter().zip(values) {
        if !(value.is_finite() && *value >= 0.0) {
            return Err(Error::domain(
                operation,
                format!("{name} must be finite and >= 0, got {value}"),
            ));
        }
    }
    Ok(())
}

impl FullState {
    pub fn new(s: f64, u: f64, v: f64) -> Self {
        FullState { s, u, v }
    }

    pub fn validate(&self) -> Result<()> {
        check_nonnegative("FullState", &["s", "u", "v"], &[self.s, self.u, self.v])
    }

    pub fn total_biomass(&self) -> f64 {
        self.u + self.v
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.s, self.u, self.v]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        FullState {
            s: y[0],
            u: y[1],
            v: y[2],
        }
    }

    /// Change of coordinates `(u, v) -> (x, p)`; undefined for `x = 0`.
    pub fn to_xp(self) -> Result<XPState> {
        let x = self.u + self.v;
        if x <= 0.0 {
            return Err(Error::domain(
                "FullState::to_xp",
                "planktonic fraction undefined at x = 0",
            ));
        }
        Ok(XPState {
            s: self.s,
            x,
            p: self.u / x,
        })
    }
}

impl XPState {
    pub fn new(s: f64, x: f64, p: f64) -> Self {
        XPState { s, x, p }
    }

    pub fn validate(&self) -> Result<()> {
        check_nonnegative("XPState", &["s", "x", "p"], &[self.s, self.x, self.p])?;
        if self.p > 1.0 {
            return Err(Error::domain(
                "XPState",
                format!("p must lie in [0, 1], got {}", self.p),
            ));
        }
        Ok(())
    }

    pub fn to_full(self) -> FullState {
        FullState {
            s: self.s,
            u: self.p * self.x,
            v: (1.0 - self.p) * self.x,
        }
    }
}

impl ReducedState {
    pub fn new(s: f64, x: f64) -> Self {
        ReducedState { s, x }
    }

    pub fn validate(&self) -> Result<()> {
        check_nonnegative("ReducedState", &["s", "x"], &[self.s, self.x])
    }
}

/// A validated single-species chemostat: operating conditions plus kinetics.
#[derive(Debug, Clone)]
pub struct Chemostat {
    pub params: ChemostatParams,
    pub growth_u: GrowthLaw,
    pub growth_v: GrowthLaw,
    pub laws: AttachmentLaws,
}

impl Chemostat {
    pub fn new(
        params: ChemostatParams,
        growth_u: GrowthLaw,
        growth_v: GrowthLaw,
        laws: AttachmentLaws,
    ) -> Result<Self> {
        params.validate()?;
        growth_u.validate("growth_u", params.s_in)?;
        growth_v.validate("growth_v", params.s_in)?;
        laws.validate(params.s_in)?;
        for s in validation_grid(params.s_in, VALIDATION_POINTS) {
            if growth_u.rate(s) <= growth_v.rate(s) {
                return Err(Error::config(
                    "growth_v",
                    format!("attached growth must stay below planktonic growth; fails at s = {s}"),
                ));
            }
        }
        Ok(Chemostat {
            params,
            growth_u,
            growth_v,
            laws,
        })
    }

    /// Same kinetics under different operating conditions.
    pub fn with_params(&self, params: ChemostatParams) -> Result<Self> {
        params.validate()?;
        Ok(Chemostat { params, ..self.clone() })
    }

    /// Full vector field evaluated without domain checks.
    #[inline]
    pub fn full_field(&self, y: &[f64; 3]) -> [f64; 3] {
        let [s, u, v] = *y;
        let p = &self.params;
        let mu_u = self.growth_u.rate(s);
        let mu_v = self.growth_v.rate(s);
        let flux = self.laws.net_flux(u, v) / p.epsilon_or_one();
        [
            p.dilution * (p.s_in - s) - mu_u * u - mu_v * v,
            (mu_u - p.d_u) * u - flux,
            (mu_v - p.d_v) * v + flux,
        ]
    }

    /// Time derivative `(ds/dt, du/dt, dv/dt)` of the full model.
    pub fn full_rhs(&self, state: &FullState) -> Result<[f64; 3]> {
        state.validate()?;
        Ok(self.full_field(&state.to_array()))
    }

    /// Convex combination `p mu_u(s) + (1 - p) mu_v(s)`.
    pub fn mu_bar(&self, s: f64, p: f64) -> Result<f64> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::domain("mu_bar", format!("s must be >= 0, got {s}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain("mu_bar", format!("p must lie in [0, 1], got {p}")));
        }
        Ok(self.mu_bar_unchecked(s, p))
    }

    #[inline]
    pub(crate) fn mu_bar_unchecked(&self, s: f64, p: f64) -> f64 {
        p * self.growth_u.rate(s) + (1.0 - p) * self.growth_v.rate(s)
    }

    /// Full vector field in `(s, x, p)` coordinates, evaluated without checks.
    ///
    /// With distinct removal rates the slow part of `dp/dt` carries the
    /// removal difference: `f_p = (mu_u - mu_v - D_u + D_v) p (1 - p)`.
    pub fn xp_field(&self, y: &[f64; 3]) -> [f64; 3] {
        let [s, x, p] = *y;
        let prm = &self.params;
        let mu_u = self.growth_u.rate(s);
        let mu_v = self.growth_v.rate(s);
        let mu_bar = p * mu_u + (1.0 - p) * mu_v;
        let removal = p * prm.d_u + (1.0 - p) * prm.d_v;
        let slow_p = (mu_u - mu_v - prm.d_u + prm.d_v) * p * (1.0 - p);
        let fast_p = self.fast_drift(x, p);
        [
            prm.dilution * (prm.s_in - s) - mu_bar * x,
            (mu_bar - removal) * x,
            slow_p + fast_p / prm.epsilon_or_one(),
        ]
    }

    /// `g(x, p) = -alpha(p x, (1 - p) x) p + beta((1 - p) x) (1 - p)`, the
    /// fast drift of the planktonic fraction.
    #[inline]
    pub fn fast_drift(&self, x: f64, p: f64) -> f64 {
        let u = p * x;
        let v = (1.0 - p) * x;
        -self.laws.alpha(u, v) * p + self.laws.beta(v) * (1.0 - p)
    }

    pub fn xp_rhs(&self, state: &XPState) -> Result<[f64; 3]> {
        if !(state.x > 0.0) {
            return Err(Error::domain(
                "xp_rhs",
                format!("total biomass must be positive, got x = {}", state.x),
            ));
        }
        state.validate()?;
        Ok(self.xp_field(&[state.s, state.x, state.p]))
    }
}
