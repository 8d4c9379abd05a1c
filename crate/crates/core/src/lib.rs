//! Improved equivariant estimators for order-restricted location and scale
//! parameters of bivariate models.

pub mod error;
pub mod estimators;
pub mod families;
pub mod loss;
pub mod paired;
pub mod plot;
pub mod presets;
pub mod quad;
pub mod risksim;
pub mod solver;
pub mod validate;

pub use error::{Error, Result};
pub use families::{BivariateModel, CustomDensity, EnvelopePoint, Mode, ModelConfig, ModelName, Support, Target, Theta};
pub use loss::{LossKind, LossName, LossSpec};
