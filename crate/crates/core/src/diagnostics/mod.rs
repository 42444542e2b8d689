//! Pinching monitors, the null-condition audit and evolution checks.

mod audit;
mod pinch;
mod verify;

pub use audit::{audit_batch, audit_null_condition, draw_sample, AuditRecord, AuditSpec, AuditSummary, CChoice, NullAuditSample, QParts};
pub use pinch::{diagnose_state, lp_norm, pinch_report, speed_bound, DiagnosticsRecord, FSigmaNorm, PinchParams, PinchReport, SpeedReport};
pub use verify::{verify_evolution, Identity, VerifyReport, VerifyRow};
