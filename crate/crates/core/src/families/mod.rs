//! One-parameter families `t ↦ A_t`, their winding, and scans of `L₁(A_t)`.

mod family;
mod scan;
mod winding;

pub use family::{craig_simon, linspace, rotation_family, FamilyKind, FamilySpec};
pub use scan::{scan, ScanCurve, ScanMethod, ScanParams, ScanRow};
pub use winding::{iterated_winding, verify_winding, winding_speed, winding_speed_fd, IteratedWinding, WindingReport, FD_STEP, WINDING_TOL};
