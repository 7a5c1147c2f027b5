//! Chemostat models with planktonic and attached (floc) biomass.

pub mod catalog;
pub mod config;
pub mod equilibrium;
pub mod error;
pub mod integrator;
pub mod model;
pub mod multispecies;
pub mod output;
pub mod roots;
pub mod slowfast;

pub use config::ModelConfig;
pub use error::{Error, IntegrationError, Result};
pub use integrator::{integrate, IntegratorConfig, Trajectory};
pub use model::{AttachmentLaws, Chemostat, ChemostatParams, FullState, GrowthLaw, ReducedState, XPState};
pub use multispecies::{MultiSpeciesModel, SpeciesAttachment, SpeciesKinetics};
pub use slowfast::{ReducedModel, SlowManifold};
