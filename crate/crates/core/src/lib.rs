//! Principal-stratum causal mediation for semi-competing risks.
//!
//! Subjects fall into one of three latent strata defined by whether the
//! intermediate (non-terminal) event can occur under each treatment arm.
//! Within each stratum, event times follow proportional hazards models with
//! nonparametric baseline hazards; the whole mixture is fit by EM. Fitted
//! models yield stratum-specific natural direct and indirect effects of
//! treatment on survival, with bootstrap inference.
//!
//! The numeric core is generic over [`Scalar`] (`f64` or `f32`). The aliases
//! below fix the scalar to `f64`, which is what the command-line tool uses.

// `!(x > 0)` style checks are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod effects;
pub mod em;
pub mod error;
pub mod inference;
pub mod io;
pub mod likelihood;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod simulate;
pub mod study;

pub use effects::{EffectCurve, EffectName};
pub use em::{fit, fit_from, EmConfig, StartValues};
pub use error::{Error, Result};
pub use inference::{bootstrap, label_swap_sensitivity, wald_tests, BootstrapConfig, BootstrapResult};
pub use model::{
    BaselineHazard, Dataset, FittedModel, HazardScale, Hazards, ParameterSet, PosteriorMatrix, Stratum, SubjectRecord,
};
pub use scalar::Scalar;
pub use simulate::{generate, GenerativeSpec};

pub type Record = SubjectRecord<f64>;
pub type Data = Dataset<f64>;
pub type Params = ParameterSet<f64>;
pub type Fit = FittedModel<f64>;
pub type Curve = EffectCurve<f64>;
pub type Boot = BootstrapResult<f64>;

pub type Record32 = SubjectRecord<f32>;
pub type Data32 = Dataset<f32>;
pub type Fit32 = FittedModel<f32>;
