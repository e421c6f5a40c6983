//! Error functionals, rate fits and Monte-Carlo studies built on the solver.

mod errors;
mod manufactured;
mod rates;
mod study;
mod tail;

pub use errors::{compute_errors, field_errors, ErrorReport};
pub use manufactured::{ManufacturedCase, ScalarField, VectorField};
pub use rates::{compensated_sum, estimate_rates, linear_fit, mean_std, Rate, RateEstimate};
pub use study::{
    run_case, run_convergence, ConvergenceRow, ConvergenceTable, Domain, PreparedCase, SiteCount, StudyConfig,
    TableRates,
};
pub use tail::{tail_study, TailFit, TailPoint, TailReport};
