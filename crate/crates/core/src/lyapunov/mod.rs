//! The top Lyapunov exponent `L₁` by a renewal series, the Furstenberg
//! integral, and path simulation.

pub mod estimate;
pub mod furstenberg;
pub mod montecarlo;
pub mod prodnorm;
pub mod series;

pub use estimate::{concordance, L1Estimate, Method};
pub use furstenberg::l1_furstenberg;
pub use montecarlo::{l1_induced, l1_monte_carlo};
pub use prodnorm::{direct_log_norm, step_log_norms, telescoped_log_norm};
pub use series::l1_series;
