//! JSON model configuration.
//!
//! ```json
//! {
//!   "growth_u": {"monod": {"mu_max": 1.0, "K": 1.0}},
//!   "growth_v": {"monod": {"mu_max": 0.7, "K": 1.0}},
//!   "attachment": {"linear_total": {"a": 1.0}},
//!   "detachment": {"constant": {"b": 0.5}},
//!   "D": 0.5, "S_in": 2.0, "epsilon": 0.5
//! }
//! ```
//!
//! `D_u` and `D_v` default to `D`. A multi-species model replaces the four
//! kinetic entries by `"species": [{"growth_u": .., "growth_v": ..}, ..]`,
//! `"A"` and `"b"`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AttachmentLaws, Chemostat, ChemostatParams, GrowthLaw};
use crate::multispecies::{MultiSpeciesModel, SpeciesAttachment, SpeciesKinetics};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GrowthSpec {
    Monod {
        mu_max: f64,
        #[serde(rename = "K")]
        k: f64,
    },
}

impl GrowthSpec {
    pub fn law(&self) -> GrowthLaw {
        match *self {
            GrowthSpec::Monod { mu_max, k } => GrowthLaw::monod(mu_max, k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AttachmentSpec {
    LinearTotal { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DetachmentSpec {
    Constant { b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSpec {
    pub growth_u: GrowthSpec,
    pub growth_v: GrowthSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_u: Option<GrowthSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_v: Option<GrowthSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attachment: Option<AttachmentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detachment: Option<DetachmentSpec>,
    #[serde(rename = "D")]
    pub dilution: f64,
    #[serde(rename = "S_in")]
    pub s_in: f64,
    #[serde(rename = "D_u", default)]
    pub d_u: Option<f64>,
    #[serde(rename = "D_v", default)]
    pub d_v: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub relax_removal_order: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species: Option<Vec<SpeciesSpec>>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
}

impl ModelConfig {
    /// Parses a configuration; errors name the offending field path.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<root>".to_string() } else { path };
            Error::config(field, e.into_inner().to_string())
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Same configuration with every default written out.
    pub fn resolved(&self) -> Self {
        ModelConfig {
            d_u: Some(self.d_u.unwrap_or(self.dilution)),
            d_v: Some(self.d_v.unwrap_or(self.dilution)),
            ..self.clone()
        }
    }

    pub fn is_multispecies(&self) -> bool {
        self.species.is_some()
    }

    pub fn params(&self) -> Result<ChemostatParams> {
        let params = ChemostatParams {
            dilution: self.dilution,
            s_in: self.s_in,
            d_u: self.d_u.unwrap_or(self.dilution),
            d_v: self.d_v.unwrap_or(self.dilution),
            epsilon: self.epsilon,
            relax_removal_order: self.relax_removal_order,
        };
        params.validate()?;
        Ok(params)
    }

    /// The single-species model.
    pub fn chemostat(&self) -> Result<Chemostat> {
        if self.is_multispecies() {
            return Err(Error::config(
                "species",
                "multi-species configuration has no single-species model",
            ));
        }
        let growth_u = require(self.growth_u, "growth_u")?;
        let growth_v = require(self.growth_v, "growth_v")?;
        let AttachmentSpec::LinearTotal { a } = require(self.attachment, "attachment")?;
        let DetachmentSpec::Constant { b } = require(self.detachment, "detachment")?;
        Chemostat::new(
            self.params()?,
            growth_u.law(),
            growth_v.law(),
            AttachmentLaws::linear(a, b),
        )
    }

    pub fn multispecies(&self) -> Result<MultiSpeciesModel> {
        let species = self
            .species
            .as_ref()
            .ok_or_else(|| Error::config("species", "missing"))?
            .iter()
            .map(|sp| SpeciesKinetics::new(sp.growth_u.law(), sp.growth_v.law()))
            .collect();
        let a = self.a.clone().ok_or_else(|| Error::config("A", "missing"))?;
        let b = self.b.clone().ok_or_else(|| Error::config("b", "missing"))?;
        MultiSpeciesModel::new(self.params()?, species, SpeciesAttachment::new(a, b))
    }
}

fn require<T: Copy>(value: Option<T>, field: &str) -> Result<T> {
    value.ok_or_else(|| Error::config(field, "missing"))
}
