//! Time integration of the flow and extinction estimates.

mod engine;
mod extinction;

pub use engine::{run, stable_dt, step_gauss, step_radial_axisym, velocity, Controls, Termination, Trajectory, Velocity};
pub use extinction::{estimate_extinction, Extinction, MIN_RECORDS};
