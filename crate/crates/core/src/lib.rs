//! Probability-scale residuals for censored and interval-censored
//! time-to-event data.
//!
//! A residual is `F(l) + F(u) - 1` for an outcome known to lie in `(l, u]`
//! under the fitted distribution `F`; exact times give `2F(t) - 1`. Under a
//! correct model exact-time residuals are `U(-1, 1)` and every residual has
//! conditional mean zero given the covariates.

pub mod data;
pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod fitting;
pub mod grid;
pub mod moments;
pub mod quadrature;
pub mod residuals;
pub mod rng;
pub mod scheme;
pub mod simulation;
pub mod synthetic;

pub use data::{parse_dataset, read_dataset, ColumnSchema, Dataset, Observation, Outcome, OutcomeClass};
pub use distributions::{AftSpec, ErrorLaw, EventCdf, Family, FamilyKind, LifetimeDist};
pub use error::{PsrError, Result};
pub use fitting::{fit, fit_design, fitted_cdf_per_subject, log_likelihood, residuals_for_dataset, FitOptions, FittedModel};
pub use residuals::{
    adjusted_cox_snell, lagakos_residual, psr_exact, psr_interval, psr_normal_transform, psr_unified, ResidualOptions,
    ResidualRecord,
};
pub use scheme::{InspectionScheme, Preset};
