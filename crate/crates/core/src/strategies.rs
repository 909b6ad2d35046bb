//! Aircraft and hazard control laws.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game_solver::{self, intercept_heading, locate, Location};
use crate::kinematics::{wrap_angle, KinematicsError, PlanarState, WorldState};

pub const DEFAULT_HYSTERESIS_BAND: f64 = 0.02;
pub const MAX_HYSTERESIS_BAND: f64 = 0.1;
pub const DEFAULT_PURSUIT_GAIN: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("hazard speed {0} exceeds the aircraft speed; no line of minimum range exists")]
    UndefinedTerminationLine(f64),
    #[error("hysteresis band must be in [0, {MAX_HYSTERESIS_BAND}], got {0}")]
    InvalidHysteresisBand(f64),
    #[error("finite-turn hazard needs a positive turn rate, got {0}")]
    InvalidTurnRate(f64),
    #[error("pursuit gain must be positive, got {0}")]
    InvalidGain(f64),
}

/// Turn taken when the hazard is dead ahead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    #[default]
    Left,
    Right,
}

impl TieBreak {
    pub fn command(self) -> f64 {
        match self {
            TieBreak::Left => -1.0,
            TieBreak::Right => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AircraftStrategyKind {
    /// Turns away until the line of minimum range, then holds.
    OptimalKnownSpeed { hazard_speed: f64 },
    /// Turns away until the hazard is directly behind.
    BearingOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AircraftStrategy {
    pub kind: AircraftStrategyKind,
    pub tie_break: TieBreak,
    /// Width of the straight-flight arm around `theta = +-pi`, radians.
    pub hysteresis_band: f64,
}

impl AircraftStrategy {
    pub fn bearing_only() -> Self {
        Self {
            kind: AircraftStrategyKind::BearingOnly,
            tie_break: TieBreak::Left,
            hysteresis_band: DEFAULT_HYSTERESIS_BAND,
        }
    }

    pub fn optimal(hazard_speed: f64) -> Self {
        Self {
            kind: AircraftStrategyKind::OptimalKnownSpeed { hazard_speed },
            ..Self::bearing_only()
        }
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    pub fn with_hysteresis_band(mut self, band: f64) -> Self {
        self.hysteresis_band = band;
        self
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        if !(0.0..=MAX_HYSTERESIS_BAND).contains(&self.hysteresis_band) {
            return Err(StrategyError::InvalidHysteresisBand(self.hysteresis_band));
        }
        Ok(())
    }

    /// Turn command for bearing `theta`. Falls back to bearing-only when the
    /// known hazard speed has no line of minimum range.
    pub fn command(&self, theta: f64) -> f64 {
        match self.kind {
            AircraftStrategyKind::BearingOnly => bearing_only_command(theta, self),
            AircraftStrategyKind::OptimalKnownSpeed { hazard_speed } => {
                match optimal_aircraft_command(theta, hazard_speed, self) {
                    Ok(c) => c.u_a,
                    Err(_) => bearing_only_command(theta, self),
                }
            }
        }
    }
}

/// Turn away from the hazard; fly straight once it is within the band
/// around directly behind.
pub fn bearing_only_command(theta: f64, strat: &AircraftStrategy) -> f64 {
    let theta = wrap_angle(theta);
    if theta.abs() >= PI - strat.hysteresis_band {
        0.0
    } else if theta == 0.0 {
        strat.tie_break.command()
    } else {
        -theta.signum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalCommand {
    pub u_a: f64,
    /// The bearing has reached the line of minimum range.
    pub terminated: bool,
}

/// Optimal aircraft turn against a hazard of known speed.
pub fn optimal_aircraft_command(theta: f64, hazard_speed: f64, strat: &AircraftStrategy) -> Result<OptimalCommand, StrategyError> {
    if hazard_speed > 1.0 {
        return Err(StrategyError::UndefinedTerminationLine(hazard_speed));
    }
    let theta = wrap_angle(theta);
    let line = (-hazard_speed.max(0.0)).acos();
    if theta.abs() >= line {
        return Ok(OptimalCommand {
            u_a: 0.0,
            terminated: true,
        });
    }
    let u_a = if theta == 0.0 {
        strat.tie_break.command()
    } else {
        -theta.signum()
    };
    Ok(OptimalCommand {
        u_a,
        terminated: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HazardBehavior {
    /// Unbounded turn rate, plays the optimal feedback strategy.
    OptimalAgile,
    /// Straight line; `heading` overrides the initial heading when given.
    NonResponsive { heading: Option<f64> },
    /// Bounded turn rate with saturating proportional pursuit.
    FiniteTurn { turn_rate: f64, gain: f64 },
    /// Does not move.
    Stationary,
}

impl HazardBehavior {
    pub fn finite_turn(turn_rate: f64) -> Self {
        HazardBehavior::FiniteTurn {
            turn_rate,
            gain: DEFAULT_PURSUIT_GAIN,
        }
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        if let HazardBehavior::FiniteTurn { turn_rate, gain } = *self {
            if !(turn_rate > 0.0 && turn_rate.is_finite()) {
                return Err(StrategyError::InvalidTurnRate(turn_rate));
            }
            if !(gain > 0.0 && gain.is_finite()) {
                return Err(StrategyError::InvalidGain(gain));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            HazardBehavior::OptimalAgile => "optimal-agile",
            HazardBehavior::NonResponsive { .. } => "non-responsive",
            HazardBehavior::FiniteTurn { .. } => "finite-turn",
            HazardBehavior::Stationary => "stationary",
        }
    }
}

/// How the agile hazard's heading is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgileMode {
    /// Closed-loop feedback from the current state.
    Live,
    /// Along a known optimal trajectory, `tau` before termination at bearing
    /// `terminal_theta`.
    Retro { terminal_theta: f64, tau: f64 },
}

/// Optimal relative heading `u_h` of an agile hazard.
///
/// In live mode the state is located in the optimal trajectory field and the
/// hazard takes the heading of the trajectory through it. Past the line of
/// minimum range it points at the aircraft; where it can reach the aircraft
/// it steers for the intercept.
pub fn optimal_agile_hazard_heading(s: &PlanarState, hazard_speed: f64, u_a: f64, mode: AgileMode) -> f64 {
    match mode {
        AgileMode::Retro { terminal_theta, tau } => wrap_angle(terminal_theta + PI + tau * u_a),
        AgileMode::Live => AgileHazardPlanner::default().heading(s, hazard_speed, u_a),
    }
}

/// Live agile-hazard controller. Keeps the last retro time as a starting
/// point for the next root search.
#[derive(Debug, Clone, Default)]
pub struct AgileHazardPlanner {
    last_tau: Option<f64>,
}

impl AgileHazardPlanner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Forgets the warm start, e.g. after an externally imposed manoeuvre.
    pub fn reset(&mut self) {
        self.last_tau = None;
    }

    pub fn heading(&mut self, s: &PlanarState, hazard_speed: f64, u_a: f64) -> f64 {
        let pursuit = wrap_angle(s.theta() + PI);
        if s.x == 0.0 && s.y > 0.0 {
            self.last_tau = None;
            return PI;
        }
        match locate(s, hazard_speed, self.last_tau) {
            Ok(Location::Field { side, tau, .. }) => {
                self.last_tau = Some(tau);
                let theta_t = side.sign() * (-hazard_speed).acos();
                wrap_angle(theta_t + PI - side.sign() * tau)
            }
            Ok(Location::Terminal) => {
                self.last_tau = None;
                pursuit
            }
            Ok(Location::Capture { .. }) | Ok(Location::Faster) => {
                self.last_tau = None;
                intercept_heading(s, hazard_speed, u_a).unwrap_or(pursuit)
            }
            Err(game_solver::SolverError::OutsideFieldCoverage { .. }) | Err(_) => {
                self.last_tau = None;
                pursuit
            }
        }
    }
}

/// Saturating proportional pursuit for a finite-turn hazard.
pub fn finite_turn_pursuit_command(w: &WorldState, gain: f64) -> Result<f64, KinematicsError> {
    let dx = w.aircraft.x - w.hazard.x;
    let dy = w.aircraft.y - w.hazard.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(KinematicsError::ZeroRange);
    }
    let bearing = dx.atan2(dy);
    Ok((gain * wrap_angle(bearing - w.hazard.heading)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{range_acceleration, GameConfig, HazardTurnRate, Pose};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn bearing_only_branches() {
        let s = AircraftStrategy::bearing_only();
        assert_eq!(bearing_only_command(FRAC_PI_4, &s), -1.0);
        assert_eq!(bearing_only_command(-0.1, &s), 1.0);
        assert_eq!(bearing_only_command(PI, &s), 0.0);
        assert_eq!(bearing_only_command(-PI + 0.01, &s), 0.0);
        assert_eq!(bearing_only_command(0.0, &s), -1.0);
        assert_eq!(bearing_only_command(0.0, &s.with_tie_break(TieBreak::Right)), 1.0);
        assert_eq!(bearing_only_command(PI - 0.01, &s.with_hysteresis_band(0.0)), -1.0);
    }

    #[test]
    fn band_is_validated() {
        assert!(AircraftStrategy::bearing_only().with_hysteresis_band(0.2).validate().is_err());
        assert!(AircraftStrategy::bearing_only().with_hysteresis_band(-0.01).validate().is_err());
        assert!(AircraftStrategy::bearing_only().with_hysteresis_band(0.1).validate().is_ok());
    }

    #[test]
    fn optimal_command_examples() {
        let s = AircraftStrategy::optimal(0.5);
        assert_relative_eq!((-0.5f64).acos(), 2.0944, epsilon = 1e-4);
        assert_eq!(optimal_aircraft_command(1.9, 0.5, &s).unwrap(), OptimalCommand { u_a: -1.0, terminated: false });
        assert!(optimal_aircraft_command(2.2, 0.5, &s).unwrap().terminated);
        assert!(optimal_aircraft_command(-2.2, 0.5, &s).unwrap().terminated);
        let at_pi = optimal_aircraft_command(PI, 1.0, &s).unwrap();
        assert!(at_pi.terminated);
        assert_eq!(at_pi.u_a, bearing_only_command(PI, &s));
        assert!(!optimal_aircraft_command(PI - 1e-6, 1.0, &s).unwrap().terminated);
        assert_eq!(optimal_aircraft_command(0.3, 1.2, &s), Err(StrategyError::UndefinedTerminationLine(1.2)));
        assert_eq!(AircraftStrategy::optimal(1.2).command(0.3), -1.0);
    }

    proptest! {
        #[test]
        fn bearing_only_is_odd(theta in -PI..PI, band in 0.0f64..0.1) {
            prop_assume!(theta != 0.0 && theta.abs() != PI);
            let s = AircraftStrategy::bearing_only().with_hysteresis_band(band);
            prop_assert_eq!(bearing_only_command(-theta, &s), -bearing_only_command(theta, &s));
        }

        #[test]
        fn optimal_agrees_with_bearing_only_inside_the_lines(v_h in 0.0f64..=1.0, frac in -1.0f64..1.0) {
            let line = (-v_h).acos();
            let theta = frac * line;
            prop_assume!(theta != 0.0 && theta.abs() < line);
            let s = AircraftStrategy::optimal(v_h).with_hysteresis_band(0.0);
            let c = optimal_aircraft_command(theta, v_h, &s).unwrap();
            prop_assert!(!c.terminated);
            prop_assert_eq!(c.u_a, bearing_only_command(theta, &s));
        }

        #[test]
        fn bearing_only_maximises_range_acceleration(
            psi in -PI..PI, bearing in -PI..PI, r in 0.1f64..20.0, heading in -PI..PI,
            v_h in 0.0f64..2.0, omega_idx in 0usize..3, uh_idx in 0usize..3,
        ) {
            let omega = [0.5, 1.0, 2.0][omega_idx];
            let u_h = [-1.0, 0.0, 1.0][uh_idx];
            let cfg = GameConfig::new(v_h).with_turn_rate(HazardTurnRate::Finite(omega));
            let w = WorldState::new(
                Pose::new(0.0, 0.0, psi),
                Pose::new(r * (psi + bearing).sin(), r * (psi + bearing).cos(), heading),
            );
            let strat = AircraftStrategy::bearing_only().with_hysteresis_band(0.0);
            let theta = crate::kinematics::relative_state(&w).unwrap().theta();
            let chosen = range_acceleration(&w, bearing_only_command(theta, &strat), u_h, &cfg).unwrap();
            let best = (0..41)
                .map(|i| range_acceleration(&w, -1.0 + 0.05 * i as f64, u_h, &cfg).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(best - chosen <= 1e-9, "gap {}", best - chosen);
        }
    }

    #[test]
    fn agile_heading_on_the_line() {
        for v_h in [0.25f64, 0.5, 0.75] {
            let line = (-v_h).acos();
            for theta in [line, -line] {
                let s = PlanarState::from_polar(1.3, theta);
                let u_h = optimal_agile_hazard_heading(&s, v_h, 0.0, AgileMode::Live);
                assert_relative_eq!(u_h, wrap_angle(theta + PI), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn agile_heading_on_singular_arc() {
        let s = PlanarState::new(0.0, 4.0);
        assert_eq!(optimal_agile_hazard_heading(&s, 0.5, -1.0, AgileMode::Live), PI);
    }

    #[test]
    fn agile_heading_is_linear_in_retro_time() {
        let theta_t = (-0.5f64).acos();
        for u_a in [-1.0, 1.0] {
            let at = |tau| optimal_agile_hazard_heading(&PlanarState::new(1.0, 1.0), 0.5, u_a, AgileMode::Retro { terminal_theta: theta_t, tau });
            for tau in [0.1, 0.5, 1.2] {
                assert_relative_eq!(wrap_angle(at(tau) - at(0.0)), tau * u_a, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn live_heading_matches_retro_heading_along_a_trajectory() {
        use crate::game_solver::{retro_state, Side, TerminalCondition};
        let tc = TerminalCondition::new(0.8, 0.5, Side::Left).unwrap();
        for tau in [0.05, 0.3, 0.7] {
            let s = retro_state(&tc, tau).unwrap();
            let live = optimal_agile_hazard_heading(&s, 0.5, tc.u_a, AgileMode::Live);
            let retro = optimal_agile_hazard_heading(&s, 0.5, tc.u_a, AgileMode::Retro { terminal_theta: tc.theta_t, tau });
            assert!(wrap_angle(live - retro).abs() < 1e-9);
        }
    }

    #[test]
    fn pursuit_examples() {
        let w = WorldState::new(Pose::new(0.0, 0.0, 0.0), Pose::new(0.0, 5.0, PI));
        assert_eq!(finite_turn_pursuit_command(&w, 5.0).unwrap(), 0.0);
        // Hazard heading south; the aircraft due west is on its right.
        let w = WorldState::new(Pose::new(0.0, 0.0, 0.0), Pose::new(5.0, 0.0, PI));
        assert_eq!(finite_turn_pursuit_command(&w, 5.0).unwrap(), 1.0);
        let w = WorldState::new(Pose::new(0.0, 0.0, 0.0), Pose::new(0.0, 5.0, 0.0));
        assert_eq!(finite_turn_pursuit_command(&w, 5.0).unwrap().abs(), 1.0);
        let w = WorldState::new(Pose::new(-5.0, 0.0, 0.0), Pose::new(0.0, 0.0, -PI / 2.0));
        assert_eq!(finite_turn_pursuit_command(&w, 5.0).unwrap(), 0.0);
        let delta = 0.05;
        let w = WorldState::new(Pose::new(-5.0, 0.0, 0.0), Pose::new(0.0, 0.0, -PI / 2.0 - delta));
        assert_relative_eq!(finite_turn_pursuit_command(&w, 5.0).unwrap(), 5.0 * delta, epsilon = 1e-12);
        let w = WorldState::new(Pose::new(-5.0, 0.0, 0.0), Pose::new(-5.0, 0.0, 0.0));
        assert!(finite_turn_pursuit_command(&w, 5.0).is_err());
    }

    #[test]
    fn pursuit_saturates_left() {
        // Hazard heading north at the origin; aircraft due west is 90 degrees to its left.
        let w = WorldState::new(Pose::new(-3.0, 0.0, 0.0), Pose::new(0.0, 0.0, 0.0));
        assert_eq!(finite_turn_pursuit_command(&w, 5.0).unwrap(), -1.0);
    }
}
