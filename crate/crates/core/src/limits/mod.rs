//! Large deviation and central limit experiments, and the asymptotic
//! variance.

mod clt;
mod ldt;
mod paths;
mod variance;

pub use clt::{clt_experiment, CltParams, CltReport, SigmaSource, Summary, SIGMA_MIN};
pub use ldt::{ldt_experiment, LdtFit, LdtParams, LdtReport, LdtRow};
pub use paths::{log_growth, StartDirection};
pub use variance::{variance_empirical, variance_gl, EmpiricalVariance, GlOptions, GlReport, SensitivityRow};

use crate::error::{CocycleError, Result};
use crate::stationary::Observable;

/// `max(φ, −n)`.
pub fn truncate_observable(phi: &Observable, n: f64) -> Result<Observable> {
    if n > 0.0 {
        Ok(phi.truncated(n))
    } else {
        Err(CocycleError::Domain(format!("truncation level must be positive, got {n}")))
    }
}
