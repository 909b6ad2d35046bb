//! Closed-form retrograde solutions of the planar game.
//!
//! Optimal trajectories are generated backwards in retro time `tau = T - t`
//! from terminal states on the lines of minimum range `cos(theta) = -v_h`.
//! Within a regular region the aircraft holds a hard turn, the hazard heading
//! rotates linearly in `tau`, and both state and adjoint have closed forms.
//!
//! The right family (`x > 0`) ends at `theta_T = +acos(-v_h)` with the
//! aircraft turning left (`u_a = -1`); the left family is its mirror image.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{wrap_angle, PlanarState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("hazard speed {0} exceeds the aircraft speed; no line of minimum range exists")]
    UndefinedTerminationLine(f64),
    #[error("retro time {tau} is past the regular-region horizon {limit}")]
    OutsideRegularRegion { tau: f64, limit: f64 },
    #[error("state ({x}, {y}) is not covered by the optimal trajectory field")]
    OutsideFieldCoverage { x: f64, y: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Which line of minimum range a trajectory terminates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `x > 0`, hazard on the aircraft's right.
    Right,
    /// `x < 0`, hazard on the aircraft's left.
    Left,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Right => 1.0,
            Side::Left => -1.0,
        }
    }

    pub fn of(x: f64) -> Self {
        if x < 0.0 {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Right => "right",
            Side::Left => "left",
        }
    }
}

/// Angle of the line of minimum range on the right side, `acos(-v_h)`.
pub fn termination_angle(v_h: f64) -> Result<f64, SolverError> {
    if !(0.0..=1.0).contains(&v_h) {
        if v_h > 1.0 {
            return Err(SolverError::UndefinedTerminationLine(v_h));
        }
        return Err(SolverError::InvalidParameter(format!("hazard speed must be >= 0, got {v_h}")));
    }
    Ok((-v_h).acos())
}

/// Terminal state and value gradient at the end of an optimal trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalCondition {
    pub r_t: f64,
    pub hazard_speed: f64,
    pub side: Side,
    pub theta_t: f64,
    /// Aircraft command along the trajectory, `-sign(theta_t)`.
    pub u_a: f64,
    /// Hazard relative heading at termination, `theta_t + pi`.
    pub u_h: f64,
    pub vx: f64,
    pub vy: f64,
}

impl TerminalCondition {
    pub fn new(r_t: f64, hazard_speed: f64, side: Side) -> Result<Self, SolverError> {
        if !(r_t >= 0.0 && r_t.is_finite()) {
            return Err(SolverError::InvalidParameter(format!("terminal range must be >= 0, got {r_t}")));
        }
        let theta_t = side.sign() * termination_angle(hazard_speed)?;
        Ok(Self {
            r_t,
            hazard_speed,
            side,
            theta_t,
            u_a: -side.sign(),
            u_h: theta_t + PI,
            vx: theta_t.sin(),
            vy: theta_t.cos(),
        })
    }

    /// Terminal point in Cartesian form.
    pub fn point(&self) -> PlanarState {
        PlanarState::from_polar(self.r_t, self.theta_t)
    }

    /// Retro time at which the switching function first changes sign.
    pub fn regular_horizon(&self) -> f64 {
        2.0 * self.theta_t.abs()
    }
}

/// Hazard relative heading `tau` before termination (unwrapped).
pub fn retro_control(tc: &TerminalCondition, tau: f64) -> f64 {
    tc.u_h + tau * tc.u_a
}

/// Value gradient `(Vx, Vy)` at retro time `tau`.
pub fn retro_adjoint(tc: &TerminalCondition, tau: f64) -> (f64, f64) {
    let (s, c) = retro_control(tc, tau).sin_cos();
    (-s, -c)
}

fn closed_form(tc: &TerminalCondition, tau: f64) -> (f64, f64) {
    let u = tc.u_a;
    let p = tc.point();
    let (st, ct) = tau.sin_cos();
    let (sp, cp) = retro_control(tc, tau).sin_cos();
    let v = tc.hazard_speed;
    (
        u * (1.0 - ct) + p.x * ct + u * p.y * st - v * tau * sp,
        (1.0 - u * p.x) * st + p.y * ct - v * tau * cp,
    )
}

/// Hazard position `tau` before termination.
pub fn retro_state(tc: &TerminalCondition, tau: f64) -> Result<PlanarState, SolverError> {
    if tau < 0.0 {
        return Err(SolverError::InvalidParameter(format!("retro time must be >= 0, got {tau}")));
    }
    let limit = tc.regular_horizon();
    if tau >= limit {
        return Err(SolverError::OutsideRegularRegion { tau, limit });
    }
    let (x, y) = closed_form(tc, tau);
    Ok(PlanarState::new(x, y))
}

/// `sigma = Vy x - Vx y`; its sign selects the aircraft turn.
pub fn switching_function(s: &PlanarState, vx: f64, vy: f64) -> f64 {
    vy * s.x - vx * s.y
}

/// One point on a retrograde trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetroSample {
    pub tau: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    /// Hazard relative heading, wrapped.
    pub u_h: f64,
    pub u_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetroTrajectory {
    pub terminal: TerminalCondition,
    pub samples: Vec<RetroSample>,
}

impl RetroTrajectory {
    fn sample(tc: &TerminalCondition, tau: f64) -> RetroSample {
        let (x, y) = closed_form(tc, tau);
        let (vx, vy) = retro_adjoint(tc, tau);
        RetroSample {
            tau,
            x,
            y,
            vx,
            vy,
            u_h: wrap_angle(retro_control(tc, tau)),
            u_a: tc.u_a,
        }
    }

    /// Samples every `dtau` until `tau_max`, the switching horizon, or the
    /// crossing of the `y` axis. A crossing is located by bisection and
    /// emitted as the final sample.
    pub fn generate(tc: TerminalCondition, tau_max: f64, dtau: f64) -> Result<Self, SolverError> {
        if !(dtau > 0.0 && tau_max >= 0.0) {
            return Err(SolverError::InvalidParameter(format!(
                "need dtau > 0 and tau_max >= 0, got {dtau}, {tau_max}"
            )));
        }
        let sign = tc.side.sign();
        let end = tau_max.min(tc.regular_horizon());
        let mut samples = vec![Self::sample(&tc, 0.0)];
        let mut k = 1usize;
        loop {
            let tau = k as f64 * dtau;
            if tau >= end {
                break;
            }
            let s = Self::sample(&tc, tau);
            if sign * s.x <= 0.0 {
                let prev = samples.last().map(|p| p.tau).unwrap_or(0.0);
                let cross = bisect(|t| sign * closed_form(&tc, t).0, prev, tau);
                samples.push(Self::sample(&tc, cross));
                break;
            }
            samples.push(s);
            k += 1;
        }
        Ok(Self { terminal: tc, samples })
    }

    pub fn last(&self) -> &RetroSample {
        self.samples.last().expect("trajectory has at least its terminal sample")
    }

    /// True when the final sample lies on the `y` axis.
    pub fn reaches_axis(&self) -> bool {
        self.samples.len() > 1 && self.last().x.abs() < 1e-12
    }
}

/// Root of `f` on `[lo, hi]` given `f(lo) > 0 >= f(hi)` or the reverse.
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Illinois-modified regula falsi on a sign-changing bracket.
fn illinois<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    let mut side = 0i8;
    for _ in 0..100 {
        let c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) || (b - a).abs() < 1e-15 {
            break;
        }
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

/// `n` terminal ranges spaced geometrically over `[lo, hi]`.
pub fn geometric_ranges(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
            (0..n).map(|i| lo * ratio.powi(i as i32)).collect()
        }
    }
}

/// Optimal trajectories for both families from every terminal range.
///
/// The right family comes first, then the left, each in the order of `r_ts`.
pub fn trajectory_field(v_h: f64, r_ts: &[f64], tau_max: f64, dtau: f64) -> Result<Vec<RetroTrajectory>, SolverError> {
    if !(v_h > 0.0 && v_h <= 1.0) {
        return match termination_angle(v_h) {
            Err(e) => Err(e),
            Ok(_) => Err(SolverError::InvalidParameter(format!("hazard speed must be in (0, 1], got {v_h}"))),
        };
    }
    let jobs: Vec<(Side, f64)> = [Side::Right, Side::Left]
        .iter()
        .flat_map(|&side| r_ts.iter().map(move |&r| (side, r)))
        .collect();
    jobs.par_iter()
        .map(|&(side, r)| RetroTrajectory::generate(TerminalCondition::new(r, v_h, side)?, tau_max, dtau))
        .collect()
}

/// Boundary between states whose optimal miss-distance is below `rho` and
/// those above it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierCurve {
    pub hazard_speed: f64,
    pub rho: f64,
    /// From the terminal point to the `y` axis, `x <= 0`.
    pub left: Vec<(f64, f64)>,
    /// From the terminal point to the `y` axis, `x >= 0`.
    pub right: Vec<(f64, f64)>,
}

impl BarrierCurve {
    /// Closed boundary of the `r(T) < rho` region: right branch, left branch
    /// reversed, then the arc of radius `rho` through the tail.
    pub fn boundary(&self) -> Vec<(f64, f64)> {
        let mut poly = self.right.clone();
        poly.extend(self.left.iter().rev().skip(1));
        let theta_t = (-self.hazard_speed).acos();
        let n = 64;
        let sweep = 2.0 * (PI - theta_t);
        for i in 1..n {
            let a = -theta_t - sweep * i as f64 / n as f64;
            poly.push((self.rho * a.sin(), self.rho * a.cos()));
        }
        poly
    }

    /// Point-in-polygon test against [`BarrierCurve::boundary`].
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let poly = self.boundary();
        let mut inside = false;
        let mut j = poly.len() - 1;
        for i in 0..poly.len() {
            let (xi, yi) = poly[i];
            let (xj, yj) = poly[j];
            if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    /// Euclidean distance to the closed boundary.
    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        let poly = self.boundary();
        let mut best = f64::INFINITY;
        for i in 0..poly.len() {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            best = best.min(segment_distance((x, y), a, b));
        }
        best
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// Barrier for capture radius `rho`, sampled every `dtau` in retro time.
pub fn barrier(v_h: f64, rho: f64, dtau: f64) -> Result<BarrierCurve, SolverError> {
    if !(v_h > 0.0 && v_h < 1.0) {
        return match termination_angle(v_h) {
            Err(e) => Err(e),
            Ok(_) => Err(SolverError::InvalidParameter(format!("barrier needs hazard speed in (0, 1), got {v_h}"))),
        };
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(SolverError::InvalidParameter(format!("capture radius must be > 0, got {rho}")));
    }
    let tc = TerminalCondition::new(rho, v_h, Side::Right)?;
    let traj = RetroTrajectory::generate(tc, f64::INFINITY, dtau)?;
    let right: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.x, s.y)).collect();
    let left = right.iter().map(|&(x, y)| (-x, y)).collect();
    Ok(BarrierCurve {
        hazard_speed: v_h,
        rho,
        left,
        right,
    })
}

/// Where a state sits relative to the optimal trajectory field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    /// Past the line of minimum range: the game is already over.
    Terminal,
    /// On the optimal trajectory ending at `r_t` after `tau`.
    Field { side: Side, tau: f64, r_t: f64 },
    /// Inside the zero-miss trajectory: the hazard can reach the aircraft.
    Capture { side: Side },
    /// Hazard faster than the aircraft.
    Faster,
}

const SCAN_STEP: f64 = 0.01;

/// Inverts the closed-form state map for the right family at `(x >= 0, y)`.
struct Inverse {
    sin_t: f64,
    cos_t: f64,
    theta_t: f64,
    v_h: f64,
    x: f64,
    y: f64,
}

impl Inverse {
    fn new(x: f64, y: f64, v_h: f64, theta_t: f64) -> Self {
        Self {
            sin_t: theta_t.sin(),
            cos_t: theta_t.cos(),
            theta_t,
            v_h,
            x,
            y,
        }
    }

    /// Direction of the terminal point rotated to `tau` and the offset of the
    /// zero-range trajectory: `p(tau) = r_t a(tau) + b(tau)`.
    fn parts(&self, tau: f64) -> ((f64, f64), (f64, f64)) {
        let (st, ct) = tau.sin_cos();
        let (sp, cp) = (self.theta_t + PI - tau).sin_cos();
        let a = (self.sin_t * ct - self.cos_t * st, self.sin_t * st + self.cos_t * ct);
        let b = (-(1.0 - ct) - self.v_h * tau * sp, st - self.v_h * tau * cp);
        (a, b)
    }

    fn g(&self, tau: f64) -> f64 {
        let (a, b) = self.parts(tau);
        a.0 * (self.y - b.1) - a.1 * (self.x - b.0)
    }

    fn r_t(&self, tau: f64) -> f64 {
        let (a, b) = self.parts(tau);
        a.0 * (self.x - b.0) + a.1 * (self.y - b.1)
    }

    fn limit(&self) -> f64 {
        2.0 * self.theta_t
    }

    fn cold(&self) -> Option<f64> {
        let limit = self.limit();
        let mut lo = 0.0;
        let mut glo = self.g(lo);
        if glo == 0.0 {
            return Some(0.0);
        }
        let n = (limit / SCAN_STEP).ceil() as usize;
        for i in 1..=n {
            let hi = (i as f64 * SCAN_STEP).min(limit);
            let ghi = self.g(hi);
            if ghi == 0.0 {
                return Some(hi);
            }
            if (ghi > 0.0) != (glo > 0.0) {
                return Some(illinois(|t| self.g(t), lo, hi, glo, ghi));
            }
            lo = hi;
            glo = ghi;
        }
        None
    }

    fn warm(&self, hint: f64) -> Option<f64> {
        let limit = self.limit();
        let mut delta = 4.0 * SCAN_STEP;
        for _ in 0..3 {
            let lo = (hint - delta).max(0.0);
            let hi = (hint + delta).min(limit);
            let (glo, ghi) = (self.g(lo), self.g(hi));
            if (glo > 0.0) != (ghi > 0.0) {
                return Some(illinois(|t| self.g(t), lo, hi, glo, ghi));
            }
            delta *= 2.0;
        }
        None
    }

    /// True when the right-family trajectory through `(r_t, tau)` stays at
    /// `x > 0` over `(0, tau)`.
    fn valid(&self, tau: f64, r_t: f64) -> bool {
        let n = 16;
        (1..n).all(|i| {
            let t = tau * i as f64 / n as f64;
            let (a, b) = self.parts(t);
            r_t * a.0 + b.0 > 0.0
        })
    }
}

/// Locates a state in the optimal trajectory field.
///
/// `hint` is a retro time close to the expected answer, typically the result
/// for a nearby state; it is only used to speed up the root search.
pub fn locate(s: &PlanarState, v_h: f64, hint: Option<f64>) -> Result<Location, SolverError> {
    if v_h > 1.0 {
        return Ok(Location::Faster);
    }
    let theta_t = termination_angle(v_h)?;
    let side = Side::of(s.x);
    let r = s.r();
    if r == 0.0 {
        return Ok(Location::Capture { side });
    }
    if s.theta().cos() <= -v_h {
        return Ok(Location::Terminal);
    }
    let inv = Inverse::new(s.x.abs(), s.y, v_h, theta_t);
    let tau = hint
        .and_then(|h| inv.warm(h))
        .or_else(|| inv.cold())
        .ok_or(SolverError::OutsideFieldCoverage { x: s.x, y: s.y })?;
    let r_t = inv.r_t(tau);
    if r_t < 0.0 {
        return Ok(Location::Capture { side });
    }
    if hint.is_none() && !inv.valid(tau, r_t) {
        return Err(SolverError::OutsideFieldCoverage { x: s.x, y: s.y });
    }
    Ok(Location::Field { side, tau, r_t })
}

/// Miss-distance under mutual optimal play from `s`.
pub fn value_function(s: &PlanarState, v_h: f64) -> Result<f64, SolverError> {
    Ok(match locate(s, v_h, None)? {
        Location::Terminal => s.r(),
        Location::Field { r_t, .. } => r_t,
        Location::Capture { .. } | Location::Faster => 0.0,
    })
}

/// Relative heading that intercepts an aircraft holding turn `u_a`.
///
/// Solves `|A(t) - p| = v_h t` for the first `t`, where `A(t)` is the
/// aircraft's predicted position in the current aircraft frame. Returns
/// `None` when no intercept exists within two full turns.
pub fn intercept_heading(s: &PlanarState, v_h: f64, u_a: f64) -> Option<f64> {
    if v_h <= 0.0 {
        return None;
    }
    let aircraft = |t: f64| {
        if u_a == 0.0 {
            (0.0, t)
        } else {
            let (st, ct) = (u_a.abs() * t).sin_cos();
            (u_a.signum() * (1.0 - ct) / u_a.abs(), st / u_a.abs())
        }
    };
    let f = |t: f64| {
        let a = aircraft(t);
        (a.0 - s.x).hypot(a.1 - s.y) - v_h * t
    };
    let step = 0.02;
    let n = (4.0 * PI / step) as usize;
    let mut lo = 0.0;
    let mut flo = f(lo);
    for i in 1..=n {
        let hi = i as f64 * step;
        let fhi = f(hi);
        if fhi <= 0.0 {
            let t = if flo > 0.0 { illinois(f, lo, hi, flo, fhi) } else { lo };
            let a = aircraft(t);
            return Some((a.0 - s.x).atan2(a.1 - s.y));
        }
        lo = hi;
        flo = fhi;
    }
    None
}
