//! Planar equations of motion.
//!
//! Two views of the same encounter are used throughout:
//!
//! * the *relative* view ([`PlanarState`]): hazard position in a frame fixed to
//!   the aircraft, `+y` along the aircraft velocity, `+x` to its right, bearing
//!   `theta` measured clockwise from `+y`;
//! * the *inertial* view ([`WorldState`]): both agents as unicycles with
//!   headings measured clockwise from the inertial `+Y` axis.
//!
//! Units are normalised so the aircraft has unit speed and unit turn rate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the kinematic model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("range is zero; bearing is undefined")]
    ZeroRange,
    #[error("hazard turn rate is unbounded (agile); range acceleration needs a finite turn rate")]
    UnboundedTurnRate,
    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let w = angle.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Hazard position relative to the aircraft, in the aircraft-fixed frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarState {
    pub x: f64,
    pub y: f64,
}

impl PlanarState {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Builds a state from range and clockwise bearing.
    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self {
            x: r * theta.sin(),
            y: r * theta.cos(),
        }
    }

    pub fn r(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Bearing in `(-pi, pi]`, clockwise-positive from the aircraft velocity.
    pub fn theta(&self) -> f64 {
        let t = self.x.atan2(self.y);
        // atan2(-0.0, y<0) gives -pi; keep the half-open convention.
        if t == -PI {
            PI
        } else {
            t
        }
    }

    /// Reflection through the aircraft's velocity axis.
    pub fn mirrored(&self) -> Self {
        Self {
            x: -self.x,
            y: self.y,
        }
    }
}

/// Time derivatives of the relative state, in both polar and Cartesian form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarDerivatives {
    pub r_dot: f64,
    pub theta_dot: f64,
    pub x_dot: f64,
    pub y_dot: f64,
}

/// Relative equations of motion for an aircraft turn command `u_a` and a
/// hazard relative heading `u_h` (clockwise from the aircraft heading).
pub fn planar_derivatives(
    s: &PlanarState,
    u_a: f64,
    u_h: f64,
    hazard_speed: f64,
) -> Result<PlanarDerivatives, KinematicsError> {
    let r = s.r();
    if r <= 0.0 {
        return Err(KinematicsError::ZeroRange);
    }
    let theta = s.theta();
    let rel = u_h - theta;
    Ok(PlanarDerivatives {
        r_dot: -theta.cos() + hazard_speed * rel.cos(),
        theta_dot: -u_a + (theta.sin() + hazard_speed * rel.sin()) / r,
        x_dot: -u_a * s.y + hazard_speed * u_h.sin(),
        y_dot: -1.0 + u_a * s.x + hazard_speed * u_h.cos(),
    })
}

/// Position and heading of one agent in the inertial plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Clockwise from inertial `+Y`, in `(-pi, pi]`.
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    /// Unit vector along the heading.
    pub fn direction(&self) -> [f64; 2] {
        [self.heading.sin(), self.heading.cos()]
    }
}

/// Inertial state of both agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub aircraft: Pose,
    pub hazard: Pose,
}

impl WorldState {
    pub fn new(aircraft: Pose, hazard: Pose) -> Self {
        Self { aircraft, hazard }
    }

    /// Places the aircraft at the origin heading `+Y` and the hazard at the
    /// given relative state with relative heading `u_h`.
    pub fn from_relative(s: &PlanarState, u_h: f64) -> Self {
        Self {
            aircraft: Pose::new(0.0, 0.0, 0.0),
            hazard: Pose::new(s.x, s.y, wrap_angle(u_h)),
        }
    }

    pub fn range(&self) -> f64 {
        (self.hazard.x - self.aircraft.x).hypot(self.hazard.y - self.aircraft.y)
    }
}

/// Hazard turn capability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HazardTurnRate {
    /// Heading can change instantaneously.
    Agile,
    /// Maximum turn rate in units of the aircraft's maximum turn rate.
    Finite(f64),
}

/// Normalised game parameters and integration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// Hazard speed in units of the aircraft speed.
    pub hazard_speed: f64,
    pub hazard_turn_rate: HazardTurnRate,
    /// Capture radius; zero disables capture-crossing events.
    pub capture_radius: f64,
    /// Integration step (normalised time).
    pub dt: f64,
    /// Simulation horizon (normalised time).
    pub max_time: f64,
    /// Near mid-air collision radius, normalised.
    pub nmac_radius: Option<f64>,
    /// Stop integrating once the first range minimum has been bracketed.
    pub stop_at_miss: bool,
}

pub const DEFAULT_DT: f64 = 1e-3;

impl GameConfig {
    pub fn new(hazard_speed: f64) -> Self {
        Self {
            hazard_speed,
            hazard_turn_rate: HazardTurnRate::Agile,
            capture_radius: 0.0,
            dt: DEFAULT_DT,
            max_time: 50.0,
            nmac_radius: None,
            stop_at_miss: false,
        }
    }

    pub fn with_turn_rate(mut self, rate: HazardTurnRate) -> Self {
        self.hazard_turn_rate = rate;
        self
    }

    pub fn with_capture_radius(mut self, rho: f64) -> Self {
        self.capture_radius = rho;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_max_time(mut self, max_time: f64) -> Self {
        self.max_time = max_time;
        self
    }

    pub fn with_nmac_radius(mut self, radius: f64) -> Self {
        self.nmac_radius = Some(radius);
        self
    }

    pub fn with_stop_at_miss(mut self, stop: bool) -> Self {
        self.stop_at_miss = stop;
        self
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let bad = |msg: String| Err(KinematicsError::InvalidConfig(msg));
        if !(self.hazard_speed >= 0.0 && self.hazard_speed.is_finite()) {
            return bad(format!("hazard_speed must be >= 0, got {}", self.hazard_speed));
        }
        if let HazardTurnRate::Finite(w) = self.hazard_turn_rate {
            if !(w > 0.0 && w.is_finite()) {
                return bad(format!("hazard_turn_rate must be > 0, got {w}"));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.max_time > self.dt && self.max_time.is_finite()) {
            return bad(format!("max_time must exceed dt, got {}", self.max_time));
        }
        if !(self.capture_radius >= 0.0 && self.capture_radius.is_finite()) {
            return bad(format!("capture_radius must be >= 0, got {}", self.capture_radius));
        }
        if let Some(n) = self.nmac_radius {
            if !(n >= 0.0 && n.is_finite()) {
                return bad(format!("nmac_radius must be >= 0, got {n}"));
            }
        }
        Ok(())
    }
}

/// Hazard input for one integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HazardControl {
    /// Keep the current heading.
    Hold,
    /// Agile hazard: set the inertial heading at the start of the step.
    Heading(f64),
    /// Finite-turn hazard: `theta_h' = rate * command`, `command` in `[-1, 1]`.
    Turn { command: f64, rate: f64 },
}

/// Zero-order-hold controls for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    /// Aircraft turn command in `[-1, 1]`; positive turns right.
    pub aircraft_turn: f64,
    pub hazard: HazardControl,
}

impl Controls {
    pub fn new(aircraft_turn: f64, hazard: HazardControl) -> Self {
        Self {
            aircraft_turn,
            hazard,
        }
    }
}

/// Transforms the inertial state into the aircraft-fixed frame.
pub fn relative_state(w: &WorldState) -> Result<PlanarState, KinematicsError> {
    let s = relative_position(w);
    if s.r() == 0.0 {
        return Err(KinematicsError::ZeroRange);
    }
    Ok(s)
}

/// Same as [`relative_state`] without the coincidence check.
pub(crate) fn relative_position(w: &WorldState) -> PlanarState {
    let dx = w.hazard.x - w.aircraft.x;
    let dy = w.hazard.y - w.aircraft.y;
    let (s, c) = w.aircraft.heading.sin_cos();
    PlanarState {
        x: dx * c - dy * s,
        y: dx * s + dy * c,
    }
}

/// Hazard heading relative to the aircraft heading (`u_h`), wrapped.
pub fn relative_heading(w: &WorldState) -> f64 {
    wrap_angle(w.hazard.heading - w.aircraft.heading)
}

/// Range rate for the current headings.
pub fn range_rate(w: &WorldState, hazard_speed: f64) -> f64 {
    let d = [w.hazard.x - w.aircraft.x, w.hazard.y - w.aircraft.y];
    let r = d[0].hypot(d[1]);
    if r == 0.0 {
        return 0.0;
    }
    let va = w.aircraft.direction();
    let vh = w.hazard.direction();
    let rel = [hazard_speed * vh[0] - va[0], hazard_speed * vh[1] - va[1]];
    (d[0] * rel[0] + d[1] * rel[1]) / r
}

/// Second derivative of range for a finite-turn (or stationary) hazard.
///
/// `hazard_turn` is the normalised hazard turn command in `[-1, 1]`; the
/// hazard turn rate comes from `cfg`. With `hazard_speed == 0` the turn rate
/// is irrelevant and an agile configuration is accepted.
pub fn range_acceleration(
    w: &WorldState,
    aircraft_turn: f64,
    hazard_turn: f64,
    cfg: &GameConfig,
) -> Result<f64, KinematicsError> {
    let v_h = cfg.hazard_speed;
    let omega_h = match cfg.hazard_turn_rate {
        HazardTurnRate::Finite(w) => w,
        HazardTurnRate::Agile if v_h == 0.0 => 0.0,
        HazardTurnRate::Agile => return Err(KinematicsError::UnboundedTurnRate),
    };
    let d = [w.hazard.x - w.aircraft.x, w.hazard.y - w.aircraft.y];
    let r = d[0].hypot(d[1]);
    if r == 0.0 {
        return Err(KinematicsError::ZeroRange);
    }
    let (sa, ca) = w.aircraft.heading.sin_cos();
    let (sh, ch) = w.hazard.heading.sin_cos();
    let rel_v = [v_h * sh - sa, v_h * ch - ca];
    // d/dt of (sin psi, cos psi) is psi_dot * (cos psi, -sin psi).
    let hazard_acc = v_h * omega_h * hazard_turn;
    let rel_a = [hazard_acc * ch - aircraft_turn * ca, -hazard_acc * sh + aircraft_turn * sa];
    let r_dot = (d[0] * rel_v[0] + d[1] * rel_v[1]) / r;
    let v2 = rel_v[0] * rel_v[0] + rel_v[1] * rel_v[1];
    Ok((v2 + d[0] * rel_a[0] + d[1] * rel_a[1] - r_dot * r_dot) / r)
}

/// Classic fourth-order Runge-Kutta step for an autonomous system.
pub fn rk4_step<const N: usize, F>(y: &[f64; N], h: f64, f: F) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let axpy = |a: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] {
        let mut out = *a;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += s * ki;
        }
        out
    };
    let k1 = f(y);
    let k2 = f(&axpy(y, &k1, h / 2.0));
    let k3 = f(&axpy(y, &k2, h / 2.0));
    let k4 = f(&axpy(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Advances the inertial state by one step of `cfg.dt`.
///
/// Controls are held constant over the step. Headings are wrapped to `(-pi, pi]`.
pub fn step_rk4(w: &WorldState, controls: &Controls, cfg: &GameConfig) -> WorldState {
    let mut hazard_heading = w.hazard.heading;
    let mut hazard_rate = 0.0;
    match controls.hazard {
        HazardControl::Hold => {}
        HazardControl::Heading(h) => hazard_heading = h,
        HazardControl::Turn { command, rate } => hazard_rate = rate * command.clamp(-1.0, 1.0),
    }
    let u_a = controls.aircraft_turn;
    let v_h = cfg.hazard_speed;
    let y0 = [
        w.aircraft.x,
        w.aircraft.y,
        w.aircraft.heading,
        w.hazard.x,
        w.hazard.y,
        hazard_heading,
    ];
    let y1 = rk4_step(&y0, cfg.dt, |s| {
        let (sa, ca) = s[2].sin_cos();
        let (sh, ch) = s[5].sin_cos();
        [sa, ca, u_a, v_h * sh, v_h * ch, hazard_rate]
    });
    WorldState {
        aircraft: Pose::new(y1[0], y1[1], wrap_angle(y1[2])),
        hazard: Pose::new(y1[3], y1[4], wrap_angle(y1[5])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -FRAC_PI_2, epsilon = 1e-15);
        assert_relative_eq!(wrap_angle(-7.0), -7.0 + 2.0 * PI, epsilon = 1e-15);
    }

    #[test]
    fn polar_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let r = rng.random_range(1e-3..1e3);
            let th = rng.random_range(-PI..PI);
            let s = PlanarState::from_polar(r, th);
            assert_relative_eq!(s.r(), r, max_relative = 1e-12);
            assert_relative_eq!(s.theta(), th, epsilon = 1e-12);
        }
        assert_eq!(PlanarState::new(-0.0, -1.0).theta(), PI);
    }

    #[test]
    fn head_on_closing_rate() {
        let s = PlanarState::from_polar(2.0, 0.0);
        let d = planar_derivatives(&s, 0.0, PI, 0.5).unwrap();
        assert_relative_eq!(d.r_dot, -1.5, epsilon = 1e-15);
    }

    #[test]
    fn tail_chase_equal_speeds() {
        let s = PlanarState::from_polar(2.0, 0.0);
        let d = planar_derivatives(&s, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(d.r_dot, 0.0);
    }

    #[test]
    fn zero_range_is_rejected() {
        let s = PlanarState::new(0.0, 0.0);
        assert_eq!(planar_derivatives(&s, 0.0, 0.0, 0.5), Err(KinematicsError::ZeroRange));
    }

    #[test]
    fn polar_and_cartesian_rates_agree() {
        // Oracle: numeric chain rule on r(x, y) and theta(x, y).
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let s = PlanarState::from_polar(rng.random_range(0.1..20.0), rng.random_range(-3.1..3.1));
            let u_a = rng.random_range(-1.0..1.0);
            let u_h = rng.random_range(-PI..PI);
            let v_h = rng.random_range(0.0..2.0);
            let d = planar_derivatives(&s, u_a, u_h, v_h).unwrap();
            let h = 1e-6;
            let fwd = PlanarState::new(s.x + h * d.x_dot, s.y + h * d.y_dot);
            let bwd = PlanarState::new(s.x - h * d.x_dot, s.y - h * d.y_dot);
            let r_dot = (fwd.r() - bwd.r()) / (2.0 * h);
            let th_dot = wrap_angle(fwd.theta() - bwd.theta()) / (2.0 * h);
            let scale = 1.0 + d.r_dot.abs();
            assert!((r_dot - d.r_dot).abs() < 1e-7 * scale, "{r_dot} vs {}", d.r_dot);
            let scale = 1.0 + d.theta_dot.abs();
            assert!((th_dot - d.theta_dot).abs() < 1e-6 * scale, "{th_dot} vs {}", d.theta_dot);
        }
    }

    #[test]
    fn speed_bound_on_range_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let s = PlanarState::from_polar(rng.random_range(0.01..50.0), rng.random_range(-PI..PI));
            let v_h = rng.random_range(0.0..4.0);
            let d = planar_derivatives(&s, rng.random_range(-1.0..1.0), rng.random_range(-PI..PI), v_h)
                .unwrap();
            assert!(d.r_dot >= -1.0 - v_h && d.r_dot <= 1.0 + v_h);
        }
    }

    #[test]
    fn relative_state_conventions() {
        let w = WorldState::new(Pose::new(1.0, 1.0, 0.0), Pose::new(1.0, 4.0, PI));
        let s = relative_state(&w).unwrap();
        assert_relative_eq!(s.theta(), 0.0);
        assert_relative_eq!(s.r(), 3.0);

        // Aircraft heading east; hazard to the south is on its right.
        let w = WorldState::new(Pose::new(0.0, 0.0, FRAC_PI_2), Pose::new(0.0, -2.0, 0.0));
        let s = relative_state(&w).unwrap();
        assert_relative_eq!(s.theta(), FRAC_PI_2, epsilon = 1e-15);

        let w = WorldState::new(Pose::new(0.0, 0.0, 0.3), Pose::new(0.0, 0.0, 0.0));
        assert_eq!(relative_state(&w), Err(KinematicsError::ZeroRange));
    }

    #[test]
    fn relative_state_inverts() {
        // Oracle: inverse rigid transform (rotate back by the heading, translate).
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let a = Pose::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(-PI..PI));
            let h = Pose::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), 0.0);
            let s = relative_state(&WorldState::new(a, h)).unwrap();
            let fwd = [a.heading.sin(), a.heading.cos()];
            let right = [a.heading.cos(), -a.heading.sin()];
            let hx = a.x + s.x * right[0] + s.y * fwd[0];
            let hy = a.y + s.x * right[1] + s.y * fwd[1];
            assert!((hx - h.x).abs() < 1e-10 && (hy - h.y).abs() < 1e-10);
        }
    }

    #[test]
    fn straight_line_step() {
        let cfg = GameConfig::new(0.7).with_dt(0.25);
        let w = WorldState::new(Pose::new(0.0, 0.0, 0.4), Pose::new(5.0, 5.0, -1.1));
        let n = step_rk4(&w, &Controls::new(0.0, HazardControl::Turn { command: 0.0, rate: 1.0 }), &cfg);
        assert_relative_eq!(n.aircraft.x, 0.25 * 0.4f64.sin(), epsilon = 1e-15);
        assert_relative_eq!(n.aircraft.y, 0.25 * 0.4f64.cos(), epsilon = 1e-15);
        assert_relative_eq!(n.hazard.x, 5.0 + 0.25 * 0.7 * (-1.1f64).sin(), epsilon = 1e-14);
        assert_relative_eq!(n.hazard.y, 5.0 + 0.25 * 0.7 * (-1.1f64).cos(), epsilon = 1e-14);
    }

    #[test]
    fn full_turn_returns_heading() {
        let cfg = GameConfig::new(0.5).with_dt(1e-3);
        let mut w = WorldState::new(Pose::new(0.0, 0.0, 0.2), Pose::new(10.0, 0.0, 0.0));
        let n = (2.0 * PI / cfg.dt).round() as usize;
        let cfg = cfg.with_dt(2.0 * PI / n as f64);
        for _ in 0..n {
            w = step_rk4(&w, &Controls::new(1.0, HazardControl::Hold), &cfg);
        }
        assert!((wrap_angle(w.aircraft.heading - 0.2)).abs() < 1e-6);
        assert!(w.aircraft.x.abs() < 1e-9 && w.aircraft.y.abs() < 1e-9);
    }

    #[test]
    fn rk4_convergence_order() {
        // Oracle: Richardson study against a dt/8 reference.
        let run = |dt: f64| {
            let cfg = GameConfig::new(0.8).with_dt(dt);
            let mut w = WorldState::new(Pose::new(0.0, 0.0, 0.0), Pose::new(3.0, 2.0, 2.0));
            let n = (2.0 / dt).round() as usize;
            for _ in 0..n {
                w = step_rk4(&w, &Controls::new(0.7, HazardControl::Turn { command: -0.6, rate: 1.5 }), &cfg);
            }
            w
        };
        let dt = 0.1;
        let reference = run(dt / 8.0);
        let err = |w: WorldState| {
            (w.aircraft.x - reference.aircraft.x).hypot(w.aircraft.y - reference.aircraft.y)
                + (w.hazard.x - reference.hazard.x).hypot(w.hazard.y - reference.hazard.y)
        };
        let e1 = err(run(dt));
        let e2 = err(run(dt / 2.0));
        let order = (e1 / e2).log2();
        assert!(order >= 3.8, "observed order {order}");
    }

    #[test]
    fn range_rate_matches_finite_differences_of_rk4() {
        let cfg = GameConfig::new(0.6).with_dt(1e-3);
        let mut w = WorldState::new(Pose::new(0.0, 0.0, 0.3), Pose::new(1.5, 4.0, 2.5));
        let controls = Controls::new(-1.0, HazardControl::Turn { command: 0.5, rate: 1.0 });
        for _ in 0..200 {
            let prev = step_rk4(&w, &controls, &GameConfig { dt: -cfg.dt, ..cfg.clone() });
            let next = step_rk4(&w, &controls, &cfg);
            let fd = (next.range() - prev.range()) / (2.0 * cfg.dt);
            assert!((fd - range_rate(&w, cfg.hazard_speed)).abs() < 1e-5);
            w = next;
        }
    }

    #[test]
    fn range_acceleration_pure_closure() {
        let cfg = GameConfig::new(0.0);
        // Aircraft heading straight at a stationary hazard.
        let w = WorldState::new(Pose::new(0.0, 0.0, 0.7), Pose::new(3.0 * 0.7f64.sin(), 3.0 * 0.7f64.cos(), 0.0));
        assert!(range_acceleration(&w, 0.0, 0.0, &cfg).unwrap().abs() < 1e-15);
    }

    #[test]
    fn range_acceleration_needs_finite_turn_rate() {
        let w = WorldState::new(Pose::new(0.0, 0.0, 0.0), Pose::new(1.0, 1.0, 0.0));
        assert_eq!(
            range_acceleration(&w, 0.0, 0.0, &GameConfig::new(0.5)),
            Err(KinematicsError::UnboundedTurnRate)
        );
    }

    #[test]
    fn range_acceleration_matches_central_differences() {
        // Oracle: central second difference of the simulated range at h = 1e-4.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let omega = rng.random_range(0.2..3.0);
            let cfg = GameConfig::new(rng.random_range(0.1..2.0)).with_turn_rate(HazardTurnRate::Finite(omega)).with_dt(1e-4);
            let w = WorldState::new(
                Pose::new(0.0, 0.0, rng.random_range(-PI..PI)),
                Pose::new(rng.random_range(-5.0..5.0), rng.random_range(1.0..6.0), rng.random_range(-PI..PI)),
            );
            let u_a = rng.random_range(-1.0..1.0);
            let u_h = rng.random_range(-1.0..1.0);
            let fwd = step_rk4(&w, &Controls::new(u_a, HazardControl::Turn { command: u_h, rate: omega }), &cfg);
            let back_cfg = GameConfig { dt: -cfg.dt, ..cfg.clone() };
            let bwd = step_rk4(&w, &Controls::new(u_a, HazardControl::Turn { command: u_h, rate: omega }), &back_cfg);
            let fd = (fwd.range() - 2.0 * w.range() + bwd.range()) / (cfg.dt * cfg.dt);
            let an = range_acceleration(&w, u_a, u_h, &cfg).unwrap();
            assert!((fd - an).abs() < 1e-4, "fd {fd} analytic {an}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(GameConfig::new(0.5).validate().is_ok());
        assert!(GameConfig::new(-0.1).validate().is_err());
        assert!(GameConfig::new(0.5).with_dt(0.0).validate().is_err());
        assert!(GameConfig::new(0.5).with_max_time(1e-4).validate().is_err());
        assert!(GameConfig::new(0.5).with_capture_radius(-1.0).validate().is_err());
        assert!(GameConfig::new(0.5).with_turn_rate(HazardTurnRate::Finite(0.0)).validate().is_err());
    }
}
