//! Competition of `n` species on one substrate, each split into planktonic
//! and attached forms, reduced on the slow manifold of fast attachment.
//!
//! With `alpha_i = sum_j a_ij x_j` and constant detachment `b_i`, the
//! planktonic fraction of species `i` relaxes to
//!
//! ```text
//! q̄_i(x) = 1 / (1 + (1 / b_i) sum_j a_ij x_j)
//! ```
//!
//! and the reduced model reads `s' = D (S_in - s) - sum_j mu_j(s, x) x_j`,
//! `x_i' = (mu_i(s, x) - D) x_i` with
//! `mu_i = q̄_i mu_{u_i}(s) + (1 - q̄_i) mu_{v_i}(s)`.
//!
//! All compartments share the removal rate `D`.

use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorConfig, Trajectory};
use crate::model::{validation_grid, ChemostatParams, GrowthLaw, VALIDATION_POINTS};

/// Growth laws of one species.
#[derive(Debug, Clone)]
pub struct SpeciesKinetics {
    pub growth_u: GrowthLaw,
    pub growth_v: GrowthLaw,
}

impl SpeciesKinetics {
    pub fn new(growth_u: GrowthLaw, growth_v: GrowthLaw) -> Self {
        SpeciesKinetics { growth_u, growth_v }
    }
}

/// Attachment matrix `A = (a_ij)` and detachment rates `b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesAttachment {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl SpeciesAttachment {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Self {
        SpeciesAttachment { a, b }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.a.len() != n {
            return Err(Error::config("A", format!("expected {n} rows, got {}", self.a.len())));
        }
        if self.b.len() != n {
            return Err(Error::config(
                "b",
                format!("expected {n} entries, got {}", self.b.len()),
            ));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::config(
                    format!("A[{i}]"),
                    format!("expected {n} entries, got {}", row.len()),
                ));
            }
            for (j, a) in row.iter().enumerate() {
                if !(a.is_finite() && *a >= 0.0) {
                    return Err(Error::config(
                        format!("A[{i}][{j}]"),
                        format!("must be >= 0 and finite, got {a}"),
                    ));
                }
            }
            if row.iter().all(|a| *a == 0.0) {
                return Err(Error::config(format!("A[{i}]"), "row must not vanish identically"));
            }
        }
        for (i, b) in self.b.iter().enumerate() {
            if !(b.is_finite() && *b > 0.0) {
                return Err(Error::config(
                    format!("b[{i}]"),
                    format!("must be positive and finite, got {b}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MultiSpeciesModel {
    pub params: ChemostatParams,
    pub species: Vec<SpeciesKinetics>,
    /// `None` for the purely planktonic model (`q̄ = 1`).
    pub attachment: Option<SpeciesAttachment>,
}

impl MultiSpeciesModel {
    pub fn new(params: ChemostatParams, species: Vec<SpeciesKinetics>, attachment: SpeciesAttachment) -> Result<Self> {
        Self::build(params, species, Some(attachment))
    }

    /// The same species without attachment: classical chemostat competition.
    pub fn planktonic(params: ChemostatParams, species: Vec<SpeciesKinetics>) -> Result<Self> {
        Self::build(params, species, None)
    }

    fn build(
        params: ChemostatParams,
        species: Vec<SpeciesKinetics>,
        attachment: Option<SpeciesAttachment>,
    ) -> Result<Self> {
        params.validate()?;
        if params.d_u != params.dilution {
            return Err(Error::config("D_u", "multi-species model requires D_u = D"));
        }
        if params.d_v != params.dilution {
            return Err(Error::config("D_v", "multi-species model requires D_v = D"));
        }
        if species.is_empty() {
            return Err(Error::config("species", "at least one species is required"));
        }
        let grid = validation_grid(params.s_in, VALIDATION_POINTS);
        for (i, sp) in species.iter().enumerate() {
            sp.growth_u.validate(&format!("species[{i}].growth_u"), params.s_in)?;
            sp.growth_v.validate(&format!("species[{i}].growth_v"), params.s_in)?;
            if let Some(s) = grid.iter().find(|&&s| sp.growth_u.rate(s) <= sp.growth_v.rate(s)) {
                return Err(Error::config(
                    format!("species[{i}].growth_v"),
                    format!("attached growth must stay below planktonic growth; fails at s = {s}"),
                ));
            }
        }
        if let Some(att) = &attachment {
            att.validate(species.len())?;
        }
        Ok(MultiSpeciesModel {
            params,
            species,
            attachment,
        })
    }

    pub fn n(&self) -> usize {
        self.species.len()
    }

    /// `sum_j a_ij x_j`.
    #[inline]
    fn alpha(&self, i: usize, x: &[f64]) -> f64 {
        match &self.attachment {
            Some(att) => att.a[i].iter().zip(x).map(|(a, x)| a * x).sum(),
            None => 0.0,
        }
    }

    #[inline]
    fn q_bar_at(&self, i: usize, x: &[f64]) -> f64 {
        match &self.attachment {
            Some(att) => 1.0 / (1.0 + self.alpha(i, x) / att.b[i]),
            None => 1.0,
        }
    }

    fn check_biomass(operation: &'static str, x: &[f64], n: usize) -> Result<()> {
        if x.len() != n {
            return Err(Error::domain(
                operation,
                format!("expected {n} biomass values, got {}", x.len()),
            ));
        }
        if let Some(v) = x.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::domain(operation, format!("biomass must be >= 0, got {v}")));
        }
        Ok(())
    }

    /// Planktonic fractions on the slow manifold.
    pub fn q_bar(&self, x: &[f64]) -> Result<Vec<f64>> {
        Self::check_biomass("q_bar", x, self.n())?;
        Ok((0..self.n()).map(|i| self.q_bar_at(i, x)).collect())
    }

    /// Density-dependent growth rates `mu_i(s, x)`.
    pub fn growth_rates(&self, s: f64, x: &[f64]) -> Result<Vec<f64>> {
        Self::check_biomass("growth_rates", x, self.n())?;
        Ok((0..self.n()).map(|i| self.growth_at(i, s, x)).collect())
    }

    #[inline]
    fn growth_at(&self, i: usize, s: f64, x: &[f64]) -> f64 {
        let q = self.q_bar_at(i, x);
        let sp = &self.species[i];
        q * sp.growth_u.rate(s) + (1.0 - q) * sp.growth_v.rate(s)
    }

    /// Reduced vector field on `y = (s, x_1, ..., x_n)`, without checks.
    pub fn field(&self, y: &[f64], dy: &mut [f64]) {
        let s = y[0];
        let x = &y[1..];
        let prm = &self.params;
        let mut uptake = 0.0;
        for i in 0..self.n() {
            let mu = self.growth_at(i, s, x);
            uptake += mu * x[i];
            dy[i + 1] = (mu - prm.dilution) * x[i];
        }
        dy[0] = prm.dilution * (prm.s_in - s) - uptake;
    }

    pub fn reduced_rhs(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n() + 1 {
            return Err(Error::domain(
                "reduced_rhs",
                format!("expected state of length {}, got {}", self.n() + 1, y.len()),
            ));
        }
        if !(y[0].is_finite() && y[0] >= 0.0) {
            return Err(Error::domain("reduced_rhs", format!("s must be >= 0, got {}", y[0])));
        }
        Self::check_biomass("reduced_rhs", &y[1..], self.n())?;
        let mut dy = vec![0.0; y.len()];
        self.field(y, &mut dy);
        Ok(dy)
    }

    /// Fast drift `dq_i/dtau = -alpha_i(x) q_i + b_i (1 - q_i)` at frozen `x`.
    pub fn fast_q_rhs(&self, q: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        Self::check_biomass("fast_q_rhs", x, self.n())?;
        if q.len() != self.n() {
            return Err(Error::domain(
                "fast_q_rhs",
                format!("expected {} fractions, got {}", self.n(), q.len()),
            ));
        }
        if let Some(v) = q.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain(
                "fast_q_rhs",
                format!("fractions must lie in [0, 1], got {v}"),
            ));
        }
        let att = self.require_attachment("fast_q_rhs")?;
        Ok(q.iter()
            .enumerate()
            .map(|(i, &qi)| -self.alpha(i, x) * qi + att.b[i] * (1.0 - qi))
            .collect())
    }

    /// Slopes `-(alpha_i(x) + b_i)` of the decoupled fast flows.
    pub fn fast_q_slopes(&self, x: &[f64]) -> Result<Vec<f64>> {
        Self::check_biomass("fast_q_slopes", x, self.n())?;
        let att = self.require_attachment("fast_q_slopes")?;
        Ok((0..self.n()).map(|i| -(self.alpha(i, x) + att.b[i])).collect())
    }

    fn require_attachment(&self, operation: &'static str) -> Result<&SpeciesAttachment> {
        self.attachment
            .as_ref()
            .ok_or_else(|| Error::domain(operation, "model has no attachment"))
    }

    /// Column labels `s, x1, ..., xn`.
    pub fn labels(&self) -> Vec<String> {
        std::iter::once("s".to_string())
            .chain((1..=self.n()).map(|i| format!("x{i}")))
            .collect()
    }

    pub fn simulate(
        &self,
        y0: &[f64],
        t_end: f64,
        config: &IntegratorConfig,
        grid: Option<&[f64]>,
    ) -> Result<Trajectory> {
        self.reduced_rhs(y0)?;
        let tr = integrate(
            |_t, y, dy| self.field(y, dy),
            y0,
            (0.0, t_end),
            &config.nonnegative(),
            grid,
        )?;
        Ok(tr.with_tag("multispecies reduced").with_labels(&self.labels()))
    }

    /// Integrates the fast fractions in `tau` at frozen biomass `x`.
    pub fn simulate_fast_q(
        &self,
        q0: &[f64],
        x: &[f64],
        tau_end: f64,
        config: &IntegratorConfig,
    ) -> Result<Trajectory> {
        self.fast_q_rhs(q0, x)?;
        let att = self.require_attachment("simulate_fast_q")?;
        let alpha: Vec<f64> = (0..self.n()).map(|i| self.alpha(i, x)).collect();
        let tr = integrate(
            |_t, q, dq| {
                for i in 0..q.len() {
                    dq[i] = -alpha[i] * q[i] + att.b[i] * (1.0 - q[i]);
                }
            },
            q0,
            (0.0, tau_end),
            config,
            None,
        )?;
        let labels: Vec<String> = (1..=self.n()).map(|i| format!("q{i}")).collect();
        Ok(tr.with_tag("multispecies fast").with_labels(&labels))
    }
}
