//! Function approximators and action distributions for the learners.

pub mod checkpoint;
pub mod dist;
pub mod mlp;
pub mod policy;

pub use dist::{sigmoid, Action, Categorical, Dist, Gaussian, SIGMA_FLOOR};
pub use mlp::{Dense, Mlp, MlpGrad, MlpTrace};
pub use policy::{ActionSample, Head, PolicyGrad, PolicyParams, DEFAULT_HIDDEN};
