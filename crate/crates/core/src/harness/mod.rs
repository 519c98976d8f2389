//! Experiment drivers: error norms, convergence tables, Poincare constants and CSV output.

pub mod convergence;
pub mod csv;
pub mod norms;
pub mod poincare;
pub mod studies;

pub use convergence::{mollify_rate, quasi_interp_rate, quasi_interp_rate_on, ConvergenceRow, ConvergenceTable, QuasiInterpRow, QuasiInterpStudy};
pub use csv::{fmt_float, CsvTable};
pub use norms::{lp_error, lp_error_on_rule, lp_norm, Operand};
pub use poincare::{poincare_constant, poincare_constant_dense, poincare_study, CurlPencil, PoincareConfig, PoincareReport, PoincareRow};
pub use studies::{commute_check, project_check, sample_points, trace_check, TraceBattery, CommuteRow, Diagram, TraceRow};
