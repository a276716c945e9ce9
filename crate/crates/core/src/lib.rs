//! Locally differentially private frequency estimation with the optimized
//! Count-Mean Sketch, its baselines, and the analytic predictors behind them.

pub mod analysis;
pub mod baselines;
pub mod cms;
pub mod datasets;
pub mod error;
pub mod experiment;
pub mod field;
pub mod hashing;
pub mod ldp;

pub use analysis::{EmpiricalLosses, LossSummary, TrialMetrics};
pub use cms::{EstimatorParams, Estimates, RangeMode, Report};
pub use datasets::Dataset;
pub use error::{Error, Result};
pub use experiment::Algorithm;
pub use field::{FieldElement, FieldSpec};
pub use hashing::HashFn;
pub use ldp::{MechanismKind, MechanismSpec, RandomizedResponse};
