//! Encounter test cases, SI unit conversion and scenario files.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{wrap_angle, GameConfig, HazardTurnRate, Pose, WorldState, DEFAULT_DT};
use crate::strategies::{AircraftStrategy, HazardBehavior, TieBreak, DEFAULT_HYSTERESIS_BAND, DEFAULT_PURSUIT_GAIN};

pub const GRAVITY: f64 = 9.81;
pub const BANK_ANGLE_DEG: f64 = 60.0;
pub const KNOT: f64 = 1852.0 / 3600.0;
/// 500 ft.
pub const NMAC_RADIUS_M: f64 = 152.4;
pub const SUITE_RANGES_M: [f64; 3] = [1000.0, 1500.0, 2000.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("no collision course: aircraft and hazard velocities are equal")]
    NoCollisionGeometry,
    #[error("unknown case id {0:?}")]
    UnknownCase(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("scenario parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseId {
    H1,
    H2,
    C1,
    C6,
    C11,
    C16,
    O1,
    O2,
}

impl CaseId {
    pub const ALL: [CaseId; 8] = [CaseId::H1, CaseId::H2, CaseId::C1, CaseId::C6, CaseId::C11, CaseId::C16, CaseId::O1, CaseId::O2];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::H1 => "H1",
            CaseId::H2 => "H2",
            CaseId::C1 => "C1",
            CaseId::C6 => "C6",
            CaseId::C11 => "C11",
            CaseId::C16 => "C16",
            CaseId::O1 => "O1",
            CaseId::O2 => "O2",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ScenarioError::UnknownCase(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseKind {
    HeadOn,
    Converging,
    Overtaking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: CaseId,
    pub kind: CaseKind,
    pub aircraft_speed_kt: f64,
    /// Hazard speed over aircraft speed.
    pub speed_ratio: f64,
    /// Angle between the hazard and aircraft paths at the collision point.
    pub intersect_angle_deg: f64,
    pub description: String,
}

/// The eight encounter cases.
pub fn catalog() -> Vec<TestCase> {
    use CaseId::*;
    use CaseKind::*;
    let rows: [(CaseId, CaseKind, f64, f64, f64, &str); 8] = [
        (H1, HeadOn, 50.0, 3.0, 180.0, "High speed encounter."),
        (H2, HeadOn, 42.0, 3.75, 180.0, "Low speed encounter."),
        (C1, Converging, 50.0, 1.33, 5.0, "Hazard on right."),
        (C6, Converging, 60.0, 1.0, -60.0, "Hazard on left."),
        (C11, Converging, 60.0, 0.66, 120.0, "Hazard on right."),
        (C16, Converging, 60.0, 0.75, -175.0, "Hazard on left."),
        (O1, Overtaking, 42.0, 3.80, 0.0, "Hazard overtaking."),
        (O2, Overtaking, 60.0, 0.66, 0.0, "Aircraft overtaking."),
    ];
    rows.iter()
        .map(|&(id, kind, kt, ratio, angle, desc)| TestCase {
            id,
            kind,
            aircraft_speed_kt: kt,
            speed_ratio: ratio,
            intersect_angle_deg: angle,
            description: desc.to_string(),
        })
        .collect()
}

pub fn case(id: CaseId) -> TestCase {
    catalog().into_iter().find(|c| c.id == id).expect("catalog holds every case id")
}

/// Conversion between normalised and SI units for one aircraft.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    /// m/s.
    pub aircraft_speed: f64,
    /// rad/s, from a level turn at the configured bank angle.
    pub aircraft_turn_rate: f64,
    /// Minimum turn radius, metres.
    pub length_scale: f64,
}

impl UnitSystem {
    pub fn from_speed(aircraft_speed: f64, bank_deg: f64) -> Self {
        let turn_rate = GRAVITY * bank_deg.to_radians().tan() / aircraft_speed;
        Self {
            aircraft_speed,
            aircraft_turn_rate: turn_rate,
            length_scale: aircraft_speed / turn_rate,
        }
    }

    pub fn from_knots(knots: f64) -> Self {
        Self::from_speed(knots * KNOT, BANK_ANGLE_DEG)
    }

    /// Seconds per unit of normalised time.
    pub fn time_scale(&self) -> f64 {
        1.0 / self.aircraft_turn_rate
    }

    pub fn to_normalized_length(&self, metres: f64) -> f64 {
        metres / self.length_scale
    }

    pub fn to_si_length(&self, length: f64) -> f64 {
        length * self.length_scale
    }

    pub fn to_si_time(&self, t: f64) -> f64 {
        t * self.time_scale()
    }

    pub fn to_si(&self, w: &WorldState) -> WorldState {
        let l = self.length_scale;
        WorldState::new(
            Pose::new(w.aircraft.x * l, w.aircraft.y * l, w.aircraft.heading),
            Pose::new(w.hazard.x * l, w.hazard.y * l, w.hazard.heading),
        )
    }

    pub fn to_normalized(&self, w: &WorldState) -> WorldState {
        let l = self.length_scale;
        WorldState::new(
            Pose::new(w.aircraft.x / l, w.aircraft.y / l, w.aircraft.heading),
            Pose::new(w.hazard.x / l, w.hazard.y / l, w.hazard.heading),
        )
    }
}

/// Encounter geometry in physical terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub aircraft_speed_kt: f64,
    pub speed_ratio: f64,
    pub intersect_angle_deg: f64,
}

impl From<&TestCase> for Geometry {
    fn from(tc: &TestCase) -> Self {
        Self {
            aircraft_speed_kt: tc.aircraft_speed_kt,
            speed_ratio: tc.speed_ratio,
            intersect_angle_deg: tc.intersect_angle_deg,
        }
    }
}

/// Normalised collision course: aircraft at the origin heading `+Y`, hazard
/// placed so that both flying straight meet after `r0 / |V_a - V_h|`.
///
/// A positive intersect angle puts the hazard's path counter-clockwise of the
/// aircraft's path.
pub fn build_collision_course(speed_ratio: f64, intersect_angle_deg: f64, r0: f64) -> Result<WorldState, ScenarioError> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(ScenarioError::Invalid(format!("initial range must be positive, got {r0}")));
    }
    if !(speed_ratio >= 0.0 && speed_ratio.is_finite()) {
        return Err(ScenarioError::Invalid(format!("speed ratio must be >= 0, got {speed_ratio}")));
    }
    let heading = wrap_angle(-intersect_angle_deg.to_radians());
    let vh = (speed_ratio * heading.sin(), speed_ratio * heading.cos());
    let rel = (-vh.0, 1.0 - vh.1);
    let closure = rel.0.hypot(rel.1);
    if closure < 1e-9 {
        return Err(ScenarioError::NoCollisionGeometry);
    }
    let t_c = r0 / closure;
    Ok(WorldState::new(
        Pose::new(0.0, 0.0, 0.0),
        Pose::new(rel.0 * t_c, rel.1 * t_c, heading),
    ))
}

/// Initial conditions for a catalogue case at `r0_m` metres, normalised.
pub fn build_initial_conditions(tc: &TestCase, r0_m: f64, units: &UnitSystem) -> Result<WorldState, ScenarioError> {
    build_collision_course(tc.speed_ratio, tc.intersect_angle_deg, units.to_normalized_length(r0_m))
}

/// Normalised time until collision if neither side manoeuvres.
pub fn nominal_time_to_collision(w: &WorldState, speed_ratio: f64) -> f64 {
    let vh = (speed_ratio * w.hazard.heading.sin(), speed_ratio * w.hazard.heading.cos());
    let va = (w.aircraft.heading.sin(), w.aircraft.heading.cos());
    let closure = (va.0 - vh.0).hypot(va.1 - vh.1);
    w.range() / closure
}

/// Horizon long enough to pass the miss and show the separation regain.
pub fn suggested_max_time(w: &WorldState, speed_ratio: f64) -> f64 {
    3.0 * nominal_time_to_collision(w, speed_ratio) + 20.0
}

/// Game configuration for a case: normalised hazard speed, NMAC radius and horizon.
pub fn game_config(tc: &TestCase, initial: &WorldState, units: &UnitSystem) -> GameConfig {
    GameConfig::new(tc.speed_ratio)
        .with_nmac_radius(units.to_normalized_length(NMAC_RADIUS_M))
        .with_max_time(suggested_max_time(initial, tc.speed_ratio))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    #[default]
    BearingOnly,
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HazardName {
    #[default]
    NonResponsive,
    OptimalAgile,
    FiniteTurn,
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// Export in SI units instead of normalised ones.
    pub si: Option<bool>,
    /// Keep one trajectory row in `stride`.
    pub stride: Option<usize>,
}

/// Contents of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub case_id: Option<String>,
    pub geometry: Option<Geometry>,
    pub r0_m: f64,
    #[serde(default)]
    pub strategy: StrategyName,
    #[serde(default)]
    pub hazard_behavior: HazardName,
    /// Finite-turn hazard turn rate over the aircraft's.
    pub hazard_turn_rate: Option<f64>,
    pub pursuit_gain: Option<f64>,
    pub tie_break: Option<TieBreak>,
    pub hysteresis_band: Option<f64>,
    /// Normalised step.
    pub dt: Option<f64>,
    /// Normalised horizon.
    pub max_time: Option<f64>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Everything needed to run one encounter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub geometry: Geometry,
    pub r0_m: f64,
    pub units: UnitSystem,
    pub initial: WorldState,
    pub config: GameConfig,
    pub strategy: AircraftStrategy,
    pub hazard: HazardBehavior,
    pub output: OutputSpec,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn resolve(&self) -> Result<Scenario, ScenarioError> {
        let (name, geometry) = match (&self.case_id, &self.geometry) {
            (Some(_), Some(_)) => {
                return Err(ScenarioError::Invalid("give either case_id or [geometry], not both".into()))
            }
            (None, None) => return Err(ScenarioError::Invalid("missing case_id or [geometry]".into())),
            (Some(id), None) => {
                let id: CaseId = id.parse()?;
                (id.to_string(), Geometry::from(&case(id)))
            }
            (None, Some(g)) => ("custom".to_string(), *g),
        };
        if !(geometry.aircraft_speed_kt > 0.0 && geometry.aircraft_speed_kt.is_finite()) {
            return Err(ScenarioError::Invalid(format!(
                "geometry.aircraft_speed_kt must be positive, got {}",
                geometry.aircraft_speed_kt
            )));
        }
        if !(self.r0_m > 0.0 && self.r0_m.is_finite()) {
            return Err(ScenarioError::Invalid(format!("r0_m must be positive, got {}", self.r0_m)));
        }
        let units = UnitSystem::from_knots(geometry.aircraft_speed_kt);
        let initial = build_collision_course(geometry.speed_ratio, geometry.intersect_angle_deg, units.to_normalized_length(self.r0_m))?;
        let mut config = GameConfig::new(geometry.speed_ratio)
            .with_nmac_radius(units.to_normalized_length(NMAC_RADIUS_M))
            .with_max_time(self.max_time.unwrap_or_else(|| suggested_max_time(&initial, geometry.speed_ratio)))
            .with_dt(self.dt.unwrap_or(DEFAULT_DT));
        let hazard = match self.hazard_behavior {
            HazardName::NonResponsive => HazardBehavior::NonResponsive { heading: None },
            HazardName::OptimalAgile => HazardBehavior::OptimalAgile,
            HazardName::Stationary => HazardBehavior::Stationary,
            HazardName::FiniteTurn => {
                let rate = self
                    .hazard_turn_rate
                    .ok_or_else(|| ScenarioError::Invalid("hazard_turn_rate is required for finite-turn".into()))?;
                config = config.with_turn_rate(HazardTurnRate::Finite(rate));
                HazardBehavior::FiniteTurn {
                    turn_rate: rate,
                    gain: self.pursuit_gain.unwrap_or(DEFAULT_PURSUIT_GAIN),
                }
            }
        };
        hazard.validate().map_err(|e| ScenarioError::Invalid(format!("hazard_turn_rate/pursuit_gain: {e}")))?;
        let strategy = match self.strategy {
            StrategyName::BearingOnly => AircraftStrategy::bearing_only(),
            StrategyName::Optimal => AircraftStrategy::optimal(geometry.speed_ratio),
        }
        .with_tie_break(self.tie_break.unwrap_or_default())
        .with_hysteresis_band(self.hysteresis_band.unwrap_or(DEFAULT_HYSTERESIS_BAND));
        strategy.validate().map_err(|e| ScenarioError::Invalid(format!("hysteresis_band: {e}")))?;
        config.validate().map_err(|e| ScenarioError::Invalid(format!("dt/max_time: {e}")))?;
        Ok(Scenario {
            name,
            geometry,
            r0_m: self.r0_m,
            units,
            initial,
            config,
            strategy,
            hazard,
            output: self.output.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{range_rate, relative_state, step_rk4, Controls, HazardControl};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn catalog_values() {
        let c = catalog();
        assert_eq!(c.len(), 8);
        let get = |id| c.iter().find(|t| t.id == id).unwrap();
        assert_eq!(get(CaseId::H2).speed_ratio, 3.75);
        assert_eq!(get(CaseId::C11).intersect_angle_deg, 120.0);
        let expected = [(50.0, 3.0, 180.0), (42.0, 3.75, 180.0), (50.0, 1.33, 5.0), (60.0, 1.0, -60.0), (60.0, 0.66, 120.0), (60.0, 0.75, -175.0), (42.0, 3.80, 0.0), (60.0, 0.66, 0.0)];
        for (t, e) in c.iter().zip(expected) {
            assert_eq!((t.aircraft_speed_kt, t.speed_ratio, t.intersect_angle_deg), e);
        }
    }

    #[test]
    fn case_ids_round_trip() {
        for id in CaseId::ALL {
            assert_eq!(id.to_string().parse::<CaseId>().unwrap(), id);
        }
        assert_eq!("c16".parse::<CaseId>().unwrap(), CaseId::C16);
        assert!("X9".parse::<CaseId>().is_err());
    }

    #[test]
    fn head_on_geometry() {
        let tc = case(CaseId::H1);
        let units = UnitSystem::from_knots(tc.aircraft_speed_kt);
        let w = build_initial_conditions(&tc, 2000.0, &units).unwrap();
        let s = relative_state(&w).unwrap();
        assert!(s.theta().abs() < 1e-12);
        assert_relative_eq!(w.hazard.heading.abs(), PI, epsilon = 1e-12);
        assert_relative_eq!(units.to_si_length(s.r()), 2000.0, max_relative = 1e-12);
        let t_si = units.to_si_time(nominal_time_to_collision(&w, 3.0));
        assert_relative_eq!(t_si, 2000.0 / (4.0 * units.aircraft_speed), max_relative = 1e-12);
    }

    #[test]
    fn tail_chase_geometry() {
        let tc = case(CaseId::O2);
        let units = UnitSystem::from_knots(tc.aircraft_speed_kt);
        let w = build_initial_conditions(&tc, 2000.0, &units).unwrap();
        assert!(relative_state(&w).unwrap().theta().abs() < 1e-12);
        assert_eq!(w.hazard.heading, 0.0);
        assert_relative_eq!(range_rate(&w, 0.66), -(1.0 - 0.66), epsilon = 1e-12);
    }

    #[test]
    fn descriptors_match_sides() {
        for tc in catalog() {
            let units = UnitSystem::from_knots(tc.aircraft_speed_kt);
            let w = build_initial_conditions(&tc, 1500.0, &units).unwrap();
            let x = relative_state(&w).unwrap().x;
            let r = w.range();
            match tc.description.as_str() {
                "Hazard on right." => assert!(x > 1e-6 * r, "{}", tc.id),
                "Hazard on left." => assert!(x < -1e-6 * r, "{}", tc.id),
                _ => assert!(x.abs() < 1e-9 * r, "{}", tc.id),
            }
        }
    }

    #[test]
    fn every_case_is_a_collision_course() {
        for tc in catalog() {
            let units = UnitSystem::from_knots(tc.aircraft_speed_kt);
            for r0 in SUITE_RANGES_M {
                let mut w = build_initial_conditions(&tc, r0, &units).unwrap();
                assert!(range_rate(&w, tc.speed_ratio) < 0.0);
                let r_norm = w.range();
                let t_c = nominal_time_to_collision(&w, tc.speed_ratio);
                let n = 2000;
                let cfg = GameConfig::new(tc.speed_ratio).with_dt(t_c / n as f64);
                let mut best = f64::INFINITY;
                for _ in 0..n {
                    w = step_rk4(&w, &Controls::new(0.0, HazardControl::Hold), &cfg);
                    best = best.min(w.range());
                }
                assert!(best < 1e-6 * r_norm, "{} at {r0}: {best}", tc.id);
            }
        }
    }

    #[test]
    fn unit_round_trip() {
        let units = UnitSystem::from_knots(60.0);
        assert_relative_eq!(units.aircraft_turn_rate, 9.81 * 3f64.sqrt() / (60.0 * KNOT), max_relative = 1e-12);
        let w = WorldState::new(Pose::new(12.5, -3.0, 0.2), Pose::new(-40.0, 77.7, -1.0));
        let back = units.to_si(&units.to_normalized(&w));
        for (a, b) in [(back.aircraft.x, w.aircraft.x), (back.aircraft.y, w.aircraft.y), (back.hazard.x, w.hazard.x), (back.hazard.y, w.hazard.y)] {
            assert!((a - b).abs() <= 1e-9 * b.abs());
        }
    }

    #[test]
    fn equal_velocities_have_no_collision_course() {
        assert_eq!(build_collision_course(1.0, 0.0, 10.0), Err(ScenarioError::NoCollisionGeometry));
    }

    #[test]
    fn scenario_file_case() {
        let s = ScenarioFile::parse("case_id = \"C6\"\nr0_m = 1500.0\nstrategy = \"optimal\"\nhazard_behavior = \"finite-turn\"\nhazard_turn_rate = 0.5\n")
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(s.name, "C6");
        assert_eq!(s.hazard, HazardBehavior::FiniteTurn { turn_rate: 0.5, gain: 5.0 });
        assert_eq!(s.config.hazard_turn_rate, HazardTurnRate::Finite(0.5));
        assert_relative_eq!(s.units.to_si_length(s.initial.range()), 1500.0, max_relative = 1e-12);
    }

    #[test]
    fn scenario_file_custom_geometry() {
        let text = "r0_m = 800.0\ndt = 0.002\n[geometry]\naircraft_speed_kt = 80.0\nspeed_ratio = 0.5\nintersect_angle_deg = 90.0\n[output]\nsi = true\n";
        let s = ScenarioFile::parse(text).unwrap().resolve().unwrap();
        assert_eq!(s.name, "custom");
        assert_eq!(s.config.dt, 0.002);
        assert_eq!(s.output.si, Some(true));
    }

    #[test]
    fn scenario_file_errors() {
        let e = ScenarioFile::parse("case_id = \"H1\"\n").unwrap_err();
        assert!(e.to_string().contains("r0_m"), "{e}");
        let e = ScenarioFile::parse("case_id = \"H1\"\nr0_m = 1.0\nbogus = 3\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = ScenarioFile::parse("case_id = \"Z1\"\nr0_m = 1.0\n").unwrap().resolve().unwrap_err();
        assert!(matches!(e, ScenarioError::UnknownCase(_)));
        let e = ScenarioFile::parse("r0_m = 1.0\n").unwrap().resolve().unwrap_err();
        assert!(e.to_string().contains("case_id"));
        let e = ScenarioFile::parse("case_id = \"H1\"\nr0_m = -1.0\n").unwrap().resolve().unwrap_err();
        assert!(e.to_string().contains("r0_m"));
        let e = ScenarioFile::parse("case_id = \"H1\"\nr0_m = 10.0\nhazard_behavior = \"finite-turn\"\n").unwrap().resolve().unwrap_err();
        assert!(e.to_string().contains("hazard_turn_rate"));
    }
}
