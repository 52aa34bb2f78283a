//! Rational transfer-function algebra, frequency response, stability and
//! H-infinity norm for SISO continuous-time systems.

mod freq;
mod hinf;
pub mod eig;
pub mod poly;
mod tf;

pub use freq::{
    freq_response, golden_max, refined_peak, FrequencyGrid, FrequencyResponse, DEFAULT_GRID_MAX, DEFAULT_GRID_MIN,
    DEFAULT_GRID_POINTS,
};
pub use hinf::{hinf_norm, HINF_REL_TOL};
pub use poly::C64;
pub use tf::{feedback_unity, is_stable, poles, series, RationalTF, CANCEL_TOL, STABILITY_EPS};
