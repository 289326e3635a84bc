//! Constants, control sequence, threshold and the bound audit of the
//! quantitative convergence argument.

mod audit;
mod constants;
mod schedule;
mod threshold;

pub use audit::{audit_run, AuditReport, AuditRow, RowKind, AUDIT_SCHEMA_VERSION};
pub use constants::{compute_constants, ConstantInputs, ConstantSet, D_MAX};
pub use schedule::{
    check_step_condition, initial_state, schedule, ClaimCheck, schedule_unchecked, step_quantity, ParamState, Schedule,
    ScheduleKind, Violation, LOOKAHEAD,
};
pub use threshold::{eps_tilde, gamma_inf_norm, threshold_eps, Threshold};

use thiserror::Error;

use crate::normalizer::NormalizerError;
use crate::series::SeriesError;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("inadmissible schedule at {0}")]
    Inadmissible(Violation),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Normalizer(#[from] NormalizerError),
}
