//! Closed-loop encounter simulation and event detection.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{
    range_rate, relative_heading, relative_position, step_rk4, wrap_angle, Controls, GameConfig, HazardControl,
    HazardTurnRate, KinematicsError, PlanarState, WorldState,
};
use crate::strategies::{finite_turn_pursuit_command, AgileHazardPlanner, AircraftStrategy, HazardBehavior, StrategyError};

/// Ranges below this count as a collision (normalised units).
pub const COLLISION_EPS: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid initial state: {0}")]
    InvalidInitialState(String),
    #[error(transparent)]
    Config(#[from] KinematicsError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    MinRange,
    Nmac,
    CaptureCross,
    Timeout,
    Collision,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::MinRange => "min-range",
            EventKind::Nmac => "nmac",
            EventKind::CaptureCross => "capture-cross",
            EventKind::Timeout => "timeout",
            EventKind::Collision => "collision",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub time: f64,
    pub range: f64,
    pub state: PlanarState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub world: WorldState,
    pub relative: PlanarState,
    pub u_a: f64,
    /// Relative heading for agile and straight hazards, turn command for
    /// finite-turn hazards.
    pub u_h: f64,
    pub r: f64,
    pub r_dot: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<Sample>,
}

/// Length and time scales for exporting in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    pub length: f64,
    pub time: f64,
}

impl Scale {
    pub const NORMALIZED: Scale = Scale { length: 1.0, time: 1.0 };
}

pub const TRAJECTORY_COLUMNS: [&str; 12] =
    ["t", "x_a", "y_a", "psi_a", "x_h", "y_h", "theta_h", "r", "r_dot", "theta", "u_a", "u_h"];

impl Trajectory {
    /// CSV with one row every `stride` samples (the final sample is always kept).
    pub fn to_csv(&self, scale: Scale, stride: usize) -> String {
        let stride = stride.max(1);
        let mut out = TRAJECTORY_COLUMNS.join(",");
        out.push('\n');
        let n = self.samples.len();
        for (i, s) in self.samples.iter().enumerate() {
            if i % stride != 0 && i + 1 != n {
                continue;
            }
            let l = scale.length;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                s.t * scale.time,
                s.world.aircraft.x * l,
                s.world.aircraft.y * l,
                s.world.aircraft.heading,
                s.world.hazard.x * l,
                s.world.hazard.y * l,
                s.world.hazard.heading,
                s.r * l,
                s.r_dot * l / scale.time,
                s.relative.theta(),
                s.u_a,
                s.u_h
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub trajectory: Trajectory,
    /// Minimum range at the first range minimum, normalised.
    pub miss_distance: f64,
    pub miss_time: f64,
    /// Sorted by time.
    pub events: Vec<Event>,
    /// Bearing at the miss.
    pub terminal_theta: f64,
    /// Hazard relative heading in effect at the miss.
    pub terminal_hazard_heading: f64,
    /// Range rate interpolated at the miss.
    pub terminal_range_rate: f64,
    /// False when the range was not decreasing at `t = 0`.
    pub initially_closing: bool,
}

impl SimResult {
    pub fn has_event(&self, kind: EventKind) -> bool {
        self.events.iter().any(|e| e.kind == kind)
    }

    pub fn event(&self, kind: EventKind) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind)
    }
}

/// Control imposed on one player over a time window, replacing its strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviationControl {
    /// Aircraft turn command.
    Aircraft(f64),
    /// Hazard relative heading (agile) or turn command (finite turn).
    Hazard(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub start: f64,
    pub duration: f64,
    pub control: DeviationControl,
}

impl Deviation {
    fn active(&self, t: f64) -> bool {
        t >= self.start - 1e-12 && t < self.start + self.duration - 1e-12
    }
}

/// Runs one encounter to `cfg.max_time` (or to the miss with `stop_at_miss`).
pub fn simulate(initial: &WorldState, strat: &AircraftStrategy, hazard: &HazardBehavior, cfg: &GameConfig) -> Result<SimResult, EngineError> {
    simulate_with_deviation(initial, strat, hazard, cfg, None)
}

/// [`simulate`] with one player's control overridden over a time window.
pub fn simulate_with_deviation(
    initial: &WorldState,
    strat: &AircraftStrategy,
    hazard: &HazardBehavior,
    cfg: &GameConfig,
    deviation: Option<Deviation>,
) -> Result<SimResult, EngineError> {
    cfg.validate()?;
    strat.validate()?;
    hazard.validate()?;
    let mut cfg = cfg.clone();
    match *hazard {
        HazardBehavior::Stationary => cfg.hazard_speed = 0.0,
        HazardBehavior::FiniteTurn { turn_rate, .. } => cfg.hazard_turn_rate = HazardTurnRate::Finite(turn_rate),
        _ => {}
    }
    let mut w = *initial;
    if let HazardBehavior::NonResponsive { heading: Some(h) } = *hazard {
        w.hazard.heading = wrap_angle(h);
    }
    let r0 = w.range();
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(EngineError::InvalidInitialState(format!("initial range must be positive, got {r0}")));
    }

    let v_h = cfg.hazard_speed;
    let steps = (cfg.max_time / cfg.dt).round() as usize;
    let mut planner = AgileHazardPlanner::new();
    let mut samples: Vec<Sample> = Vec::with_capacity(steps + 1);
    let mut events = Vec::new();
    let mut sign_change: Option<usize> = None;
    let mut collided = false;
    let mut was_deviating = false;

    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let s = relative_position(&w);
        let r = s.r();
        if r < COLLISION_EPS {
            samples.push(Sample {
                t,
                world: w,
                relative: s,
                u_a: 0.0,
                u_h: relative_heading(&w),
                r,
                r_dot: range_rate(&w, v_h),
            });
            collided = true;
            break;
        }
        let theta = s.theta();
        let dev = deviation.filter(|d| d.active(t));
        if was_deviating && dev.is_none() {
            planner.reset();
        }
        was_deviating = dev.is_some();
        let u_a = match dev {
            Some(Deviation { control: DeviationControl::Aircraft(u), .. }) => u,
            _ => strat.command(theta),
        };
        let hazard_dev = match dev {
            Some(Deviation { control: DeviationControl::Hazard(u), .. }) => Some(u),
            _ => None,
        };
        let (control, u_h) = match *hazard {
            HazardBehavior::OptimalAgile => {
                let u_h = hazard_dev.unwrap_or_else(|| planner.heading(&s, v_h, u_a));
                (HazardControl::Heading(wrap_angle(w.aircraft.heading + u_h)), wrap_angle(u_h))
            }
            HazardBehavior::FiniteTurn { turn_rate, gain } => {
                let cmd = match hazard_dev {
                    Some(c) => c,
                    None => finite_turn_pursuit_command(&w, gain)?,
                };
                (HazardControl::Turn { command: cmd, rate: turn_rate }, cmd)
            }
            HazardBehavior::NonResponsive { .. } | HazardBehavior::Stationary => (HazardControl::Hold, relative_heading(&w)),
        };
        let mut applied = w;
        if let HazardControl::Heading(h) = control {
            applied.hazard.heading = h;
        }
        let r_dot = range_rate(&applied, v_h);
        samples.push(Sample {
            t,
            world: applied,
            relative: s,
            u_a,
            u_h,
            r,
            r_dot,
        });

        if k > 0 && sign_change.is_none() && samples[k - 1].r_dot < 0.0 && r_dot >= 0.0 {
            sign_change = Some(k);
        }
        if let Some(kc) = sign_change {
            if cfg.stop_at_miss && k > kc {
                break;
            }
        }
        if k == steps {
            break;
        }
        w = step_rk4(&w, &Controls::new(u_a, control), &cfg);
    }

    let initially_closing = samples[0].r_dot < 0.0;
    let (miss_time, miss_distance, at) = if !initially_closing {
        (0.0, samples[0].r, 0usize)
    } else if let Some(kc) = sign_change {
        refine_minimum(&samples, kc, cfg.dt)
    } else {
        // No turning point: the minimum is at the last sample (collision or timeout).
        let (i, s) = samples
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.r.total_cmp(&b.1.r))
            .expect("at least one sample");
        (s.t, s.r, i)
    };
    let state_at = interpolate_state(&samples, miss_time, cfg.dt);
    events.push(Event {
        kind: EventKind::MinRange,
        time: miss_time,
        range: miss_distance,
        state: state_at,
    });

    if let Some(nmac) = cfg.nmac_radius {
        if let Some(e) = first_crossing(&samples, nmac, EventKind::Nmac, cfg.dt) {
            events.push(e);
        }
    }
    if cfg.capture_radius > 0.0 {
        if let Some(e) = first_crossing(&samples, cfg.capture_radius, EventKind::CaptureCross, cfg.dt) {
            events.push(e);
        }
    }
    let last = samples.last().expect("at least one sample");
    if collided {
        events.push(Event {
            kind: EventKind::Collision,
            time: last.t,
            range: last.r,
            state: last.relative,
        });
    } else if miss_distance < COLLISION_EPS {
        events.push(Event {
            kind: EventKind::Collision,
            time: miss_time,
            range: miss_distance,
            state: state_at,
        });
    }
    if !collided && !(cfg.stop_at_miss && sign_change.is_some()) {
        events.push(Event {
            kind: EventKind::Timeout,
            time: last.t,
            range: last.r,
            state: last.relative,
        });
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));

    let at = at.min(samples.len() - 1);
    let terminal_range_rate = interpolate(&samples, miss_time, cfg.dt, |s| s.r_dot);
    Ok(SimResult {
        miss_distance,
        miss_time,
        terminal_theta: state_at.theta(),
        terminal_hazard_heading: samples[at].u_h,
        terminal_range_rate,
        initially_closing,
        events,
        trajectory: Trajectory { dt: cfg.dt, samples },
    })
}

/// Miss at the range-rate sign change between samples `kc - 1` and `kc`.
/// `T` is the linear zero crossing of the range rate; `r(T)` is the vertex of
/// the quadratic through the three samples around the discrete minimum.
/// Returns `(T, r(T), index)` where `index` is the last sample at or before `T`.
fn refine_minimum(samples: &[Sample], kc: usize, dt: f64) -> (f64, f64, usize) {
    let (a, b) = (&samples[kc - 1], &samples[kc]);
    let t = if b.r_dot > a.r_dot { a.t + dt * (-a.r_dot / (b.r_dot - a.r_dot)).clamp(0.0, 1.0) } else { b.t };
    let m = if b.r < a.r { kc } else { kc - 1 };
    let n = samples.len();
    if m == 0 || m + 1 >= n {
        return (t, samples[m].r, kc - 1);
    }
    let (r0, r1, r2) = (samples[m - 1].r, samples[m].r, samples[m + 1].r);
    let denom = r0 - 2.0 * r1 + r2;
    let r = if denom > 0.0 { (r1 - (r0 - r2).powi(2) / (8.0 * denom)).clamp(0.0, r1) } else { r1 };
    (t, r, kc - 1)
}

fn interpolate<F: Fn(&Sample) -> f64>(samples: &[Sample], t: f64, dt: f64, f: F) -> f64 {
    let i = ((t / dt).floor().max(0.0) as usize).min(samples.len() - 1);
    if i + 1 >= samples.len() {
        return f(&samples[i]);
    }
    let a = (t - samples[i].t) / dt;
    f(&samples[i]) * (1.0 - a) + f(&samples[i + 1]) * a
}

fn interpolate_state(samples: &[Sample], t: f64, dt: f64) -> PlanarState {
    PlanarState::new(
        interpolate(samples, t, dt, |s| s.relative.x),
        interpolate(samples, t, dt, |s| s.relative.y),
    )
}

fn first_crossing(samples: &[Sample], radius: f64, kind: EventKind, dt: f64) -> Option<Event> {
    if samples[0].r < radius {
        return Some(Event {
            kind,
            time: 0.0,
            range: samples[0].r,
            state: samples[0].relative,
        });
    }
    let k = samples.windows(2).position(|w| w[0].r >= radius && w[1].r < radius)?;
    let (a, b) = (&samples[k], &samples[k + 1]);
    let frac = (a.r - radius) / (a.r - b.r);
    let time = a.t + frac * dt;
    Some(Event {
        kind,
        time,
        range: radius,
        state: interpolate_state(samples, time, dt),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub r0: f64,
    pub result: SimResult,
}

/// Runs one simulation per initial range in parallel; output follows input order.
pub fn sweep<F>(
    initial_ranges: &[f64],
    build: F,
    strat: &AircraftStrategy,
    hazard: &HazardBehavior,
) -> Result<Vec<SweepPoint>, EngineError>
where
    F: Fn(f64) -> Result<(WorldState, GameConfig), EngineError> + Sync,
{
    if initial_ranges.is_empty() {
        return Err(EngineError::InvalidInitialState("sweep needs at least one initial range".into()));
    }
    initial_ranges
        .par_iter()
        .map(|&r0| {
            let (w, cfg) = build(r0)?;
            Ok(SweepPoint {
                r0,
                result: simulate(&w, strat, hazard, &cfg)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Pose;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn head_on(r0: f64) -> WorldState {
        WorldState::new(Pose::new(0.0, 0.0, 0.0), Pose::new(0.0, r0, PI))
    }

    #[test]
    fn head_on_collision_time() {
        let cfg = GameConfig::new(1.0).with_max_time(3.0);
        // Hold the aircraft straight for the whole run.
        let dev = Deviation {
            start: 0.0,
            duration: 10.0,
            control: DeviationControl::Aircraft(0.0),
        };
        let res = simulate_with_deviation(&head_on(2.0), &AircraftStrategy::bearing_only(), &HazardBehavior::NonResponsive { heading: None }, &cfg, Some(dev)).unwrap();
        let c = res.event(EventKind::Collision).unwrap();
        assert!((c.time - 1.0).abs() <= cfg.dt, "{}", c.time);
        assert!(res.miss_distance < COLLISION_EPS);
        assert!(!res.has_event(EventKind::Timeout));
    }

    #[test]
    fn events_are_sorted_and_uniform_time() {
        let cfg = GameConfig::new(0.5).with_max_time(8.0).with_capture_radius(0.5).with_nmac_radius(1.0);
        let w = WorldState::new(Pose::new(0.0, 0.0, 0.0), Pose::new(0.5, 3.0, PI));
        let res = simulate(&w, &AircraftStrategy::bearing_only(), &HazardBehavior::NonResponsive { heading: None }, &cfg).unwrap();
        assert!(res.events.windows(2).all(|e| e[0].time <= e[1].time));
        let s = &res.trajectory.samples;
        assert!(s.windows(2).all(|p| ((p[1].t - p[0].t) - cfg.dt).abs() < 1e-12));
        assert!(res.has_event(EventKind::Timeout));
        assert!(res.terminal_range_rate.abs() < 1e-4);
    }

    #[test]
    fn deterministic_results() {
        let cfg = GameConfig::new(0.5).with_max_time(6.0);
        let w = WorldState::new(Pose::new(0.0, 0.0, 0.0), Pose::new(1.0, 3.0, 2.5));
        let a = simulate(&w, &AircraftStrategy::optimal(0.5), &HazardBehavior::OptimalAgile, &cfg).unwrap();
        let b = simulate(&w, &AircraftStrategy::optimal(0.5), &HazardBehavior::OptimalAgile, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn not_closing_is_tagged() {
        let cfg = GameConfig::new(0.5).with_max_time(2.0);
        let w = WorldState::new(Pose::new(0.0, 0.0, 0.0), Pose::new(0.0, -3.0, PI));
        let res = simulate(&w, &AircraftStrategy::bearing_only(), &HazardBehavior::NonResponsive { heading: None }, &cfg).unwrap();
        assert!(!res.initially_closing);
        assert_relative_eq!(res.miss_distance, 3.0);
        assert_eq!(res.miss_time, 0.0);
    }

    #[test]
    fn coincident_start_rejected() {
        let w = WorldState::new(Pose::new(1.0, 1.0, 0.0), Pose::new(1.0, 1.0, 0.0));
        let r = simulate(&w, &AircraftStrategy::bearing_only(), &HazardBehavior::Stationary, &GameConfig::new(0.5));
        assert!(matches!(r, Err(EngineError::InvalidInitialState(_))));
    }

    #[test]
    fn stop_at_miss_truncates() {
        let cfg = GameConfig::new(0.5).with_max_time(20.0).with_stop_at_miss(true);
        let w = WorldState::new(Pose::new(0.0, 0.0, 0.0), Pose::new(1.0, 3.0, PI));
        let res = simulate(&w, &AircraftStrategy::bearing_only(), &HazardBehavior::NonResponsive { heading: None }, &cfg).unwrap();
        let last = res.trajectory.samples.last().unwrap().t;
        assert!(last < res.miss_time + 3.0 * cfg.dt);
        assert!(!res.has_event(EventKind::Timeout));
    }

    #[test]
    fn sweep_keeps_input_order() {
        let ranges = [6.0, 2.0, 4.0];
        let build = |r0: f64| Ok((WorldState::new(Pose::new(0.0, 0.0, 0.0), Pose::new(0.3 * r0, r0, PI)), GameConfig::new(0.5).with_max_time(10.0)));
        let out = sweep(&ranges, build, &AircraftStrategy::bearing_only(), &HazardBehavior::NonResponsive { heading: None }).unwrap();
        assert_eq!(out.iter().map(|p| p.r0).collect::<Vec<_>>(), ranges);
        for p in &out {
            let single = simulate(&build(p.r0).unwrap().0, &AircraftStrategy::bearing_only(), &HazardBehavior::NonResponsive { heading: None }, &build(p.r0).unwrap().1).unwrap();
            assert_eq!(single, p.result);
        }
        assert!(sweep(&[], build, &AircraftStrategy::bearing_only(), &HazardBehavior::Stationary).is_err());
    }

    #[test]
    fn csv_has_expected_columns() {
        let cfg = GameConfig::new(0.5).with_max_time(1.0);
        let res = simulate(&head_on(5.0), &AircraftStrategy::bearing_only(), &HazardBehavior::Stationary, &cfg).unwrap();
        let csv = res.trajectory.to_csv(Scale::NORMALIZED, 100);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), TRAJECTORY_COLUMNS.join(","));
        assert_eq!(lines.count(), 11);
    }
}
