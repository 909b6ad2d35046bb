//! # bearing-game
//!
//! Guidance library and encounter simulator for bearing-only collision
//! avoidance posed as a zero-sum differential game between an aircraft that
//! maximises the miss-distance and an agile hazard that minimises it.
//!
//! All dynamics are in normalised units: the aircraft flies at unit speed
//! with unit maximum turn rate, so its minimum turn radius is one length
//! unit. SI quantities only appear in [`scenarios`] and [`cli`].
//!
//! Module map:
//! - [`geometry3d`]: 3D angle definitions and the reduction to the conflict plane.
//! - [`kinematics`]: planar relative and inertial equations of motion, RK4 stepping.
//! - [`strategies`]: aircraft and hazard control laws.
//! - [`game_solver`]: closed-form retrograde solutions, trajectory fields, barriers, value function.
//! - [`engine`]: closed-loop simulation and miss-distance/event detection.
//! - [`scenarios`]: the eight encounter test cases, unit conversion, scenario files.
//! - [`cli`]: command-line front end and CSV/SVG artifact writers.
//!
//! ```
//! use bearing_game::kinematics::PlanarState;
//! use bearing_game::game_solver::value_function;
//!
//! // Hazard at 45 degrees on the right, three turn radii away, half the aircraft's speed.
//! let s = PlanarState::from_polar(3.0, std::f64::consts::FRAC_PI_4);
//! let miss = value_function(&s, 0.5).unwrap();
//! assert!(miss > 0.0 && miss < 3.0);
//! ```

pub mod cli;
pub mod engine;
pub mod game_solver;
pub mod geometry3d;
pub mod kinematics;
pub mod scenarios;
pub mod strategies;

pub use engine::{simulate, SimResult};
pub use game_solver::{barrier, trajectory_field, value_function, BarrierCurve, TerminalCondition};
pub use kinematics::{GameConfig, PlanarState, WorldState};
pub use strategies::{AircraftStrategy, HazardBehavior};
