//! Robust gain-scheduled fault-tolerant attitude control for dual-system
//! VTOL transition flight: plant models, uncertainty weights, structured
//! mixed-sensitivity tuning, mu-analysis, gain scheduling, control
//! allocation, a nonlinear 6-DOF simulator and tracking evaluation.

pub mod allocator;
pub mod error;
pub mod evaluation;
pub mod linsys;
pub mod models;
pub mod pipeline;
pub mod robustness;
pub mod scheduler;
pub mod simulator;
pub mod synthesis;
pub mod uncertainty;

pub use error::{FtcError, Result};
