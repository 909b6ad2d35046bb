//! Python bindings for `bearing_game`.
//!
//! Angles are radians, lengths and times are normalised by the aircraft turn
//! radius and turn rate unless a name says otherwise.

use std::collections::HashMap;

use bearing_game::engine::{self, EventKind};
use bearing_game::game_solver::{self, Location, Side};
use bearing_game::geometry3d::{self, RelativeGeometry3D};
use bearing_game::kinematics::{GameConfig, HazardTurnRate, PlanarState, WorldState};
use bearing_game::scenarios::{self, CaseId, UnitSystem};
use bearing_game::strategies::{self, AircraftStrategy, HazardBehavior, TieBreak};
use nalgebra::Vector3;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_side(side: &str) -> PyResult<Side> {
    match side {
        "right" => Ok(Side::Right),
        "left" => Ok(Side::Left),
        _ => Err(PyValueError::new_err(format!("side must be 'right' or 'left', got {side:?}"))),
    }
}

fn parse_strategy(name: &str, hazard_speed: f64, tie_break: &str, band: f64) -> PyResult<AircraftStrategy> {
    let base = match name {
        "bearing-only" => AircraftStrategy::bearing_only(),
        "optimal" => AircraftStrategy::optimal(hazard_speed),
        _ => return Err(PyValueError::new_err(format!("unknown strategy {name:?}"))),
    };
    let tb = match tie_break {
        "left" => TieBreak::Left,
        "right" => TieBreak::Right,
        _ => return Err(PyValueError::new_err(format!("tie_break must be 'left' or 'right', got {tie_break:?}"))),
    };
    let s = base.with_tie_break(tb).with_hysteresis_band(band);
    s.validate().map_err(value_err)?;
    Ok(s)
}

fn parse_hazard(name: &str, turn_rate: Option<f64>, gain: f64) -> PyResult<HazardBehavior> {
    Ok(match name {
        "non-responsive" => HazardBehavior::NonResponsive { heading: None },
        "optimal-agile" => HazardBehavior::OptimalAgile,
        "stationary" => HazardBehavior::Stationary,
        "finite-turn" => HazardBehavior::FiniteTurn {
            turn_rate: turn_rate.ok_or_else(|| PyValueError::new_err("finite-turn hazard needs turn_rate"))?,
            gain,
        },
        _ => return Err(PyValueError::new_err(format!("unknown hazard behaviour {name:?}"))),
    })
}

/// Terminal state on a line of minimum range.
#[pyclass(frozen, get_all, skip_from_py_object, module = "pybearing")]
#[derive(Clone)]
struct TerminalCondition {
    r_t: f64,
    hazard_speed: f64,
    side: String,
    theta_t: f64,
    u_a: f64,
    u_h: f64,
    vx: f64,
    vy: f64,
}

impl TerminalCondition {
    fn inner(&self) -> game_solver::TerminalCondition {
        game_solver::TerminalCondition::new(self.r_t, self.hazard_speed, parse_side(&self.side).expect("validated side"))
            .expect("validated terminal condition")
    }
}

#[pymethods]
impl TerminalCondition {
    #[new]
    fn new(r_t: f64, hazard_speed: f64, side: &str) -> PyResult<Self> {
        let tc = game_solver::TerminalCondition::new(r_t, hazard_speed, parse_side(side)?).map_err(value_err)?;
        Ok(Self {
            r_t: tc.r_t,
            hazard_speed: tc.hazard_speed,
            side: tc.side.name().to_string(),
            theta_t: tc.theta_t,
            u_a: tc.u_a,
            u_h: tc.u_h,
            vx: tc.vx,
            vy: tc.vy,
        })
    }

    /// Hazard position `(x, y)` a retro time `tau` before termination.
    fn retro_state(&self, tau: f64) -> PyResult<(f64, f64)> {
        let s = game_solver::retro_state(&self.inner(), tau).map_err(value_err)?;
        Ok((s.x, s.y))
    }

    /// Value gradient `(Vx, Vy)` at retro time `tau`.
    fn retro_adjoint(&self, tau: f64) -> (f64, f64) {
        game_solver::retro_adjoint(&self.inner(), tau)
    }

    fn regular_horizon(&self) -> f64 {
        self.inner().regular_horizon()
    }

    fn __repr__(&self) -> String {
        format!("TerminalCondition(r_t={}, hazard_speed={}, side='{}')", self.r_t, self.hazard_speed, self.side)
    }
}

/// Boundary between states ending below and above the capture radius.
#[pyclass(frozen, module = "pybearing")]
struct BarrierCurve {
    inner: game_solver::BarrierCurve,
}

#[pymethods]
impl BarrierCurve {
    #[getter]
    fn hazard_speed(&self) -> f64 {
        self.inner.hazard_speed
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }

    #[getter]
    fn right(&self) -> Vec<(f64, f64)> {
        self.inner.right.clone()
    }

    #[getter]
    fn left(&self) -> Vec<(f64, f64)> {
        self.inner.left.clone()
    }

    /// Closed polygon: right branch, left branch and the capture arc.
    fn boundary(&self) -> Vec<(f64, f64)> {
        self.inner.boundary()
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        self.inner.contains(x, y)
    }

    fn distance_to(&self, x: f64, y: f64) -> f64 {
        self.inner.distance_to(x, y)
    }
}

/// Outcome of one simulated encounter.
#[pyclass(frozen, module = "pybearing")]
struct SimResult {
    inner: engine::SimResult,
}

#[pymethods]
impl SimResult {
    #[getter]
    fn miss_distance(&self) -> f64 {
        self.inner.miss_distance
    }

    #[getter]
    fn miss_time(&self) -> f64 {
        self.inner.miss_time
    }

    #[getter]
    fn terminal_theta(&self) -> f64 {
        self.inner.terminal_theta
    }

    #[getter]
    fn initially_closing(&self) -> bool {
        self.inner.initially_closing
    }

    /// `(kind, time, range)` for every event, sorted by time.
    #[getter]
    fn events(&self) -> Vec<(&'static str, f64, f64)> {
        self.inner.events.iter().map(|e| (e.kind.name(), e.time, e.range)).collect()
    }

    fn has_event(&self, kind: &str) -> bool {
        self.inner.events.iter().any(|e| e.kind.name() == kind)
    }

    /// Trajectory columns as lists, keyed by column name.
    fn trajectory(&self) -> HashMap<&'static str, Vec<f64>> {
        let s = &self.inner.trajectory.samples;
        let col = |f: &dyn Fn(&engine::Sample) -> f64| s.iter().map(f).collect::<Vec<f64>>();
        HashMap::from([
            ("t", col(&|p| p.t)),
            ("x_a", col(&|p| p.world.aircraft.x)),
            ("y_a", col(&|p| p.world.aircraft.y)),
            ("psi_a", col(&|p| p.world.aircraft.heading)),
            ("x_h", col(&|p| p.world.hazard.x)),
            ("y_h", col(&|p| p.world.hazard.y)),
            ("theta_h", col(&|p| p.world.hazard.heading)),
            ("r", col(&|p| p.r)),
            ("r_dot", col(&|p| p.r_dot)),
            ("theta", col(&|p| p.relative.theta())),
            ("u_a", col(&|p| p.u_a)),
            ("u_h", col(&|p| p.u_h)),
        ])
    }

    /// Trajectory CSV in normalised units.
    #[pyo3(signature = (stride = 1))]
    fn to_csv(&self, stride: usize) -> String {
        self.inner.trajectory.to_csv(engine::Scale::NORMALIZED, stride)
    }

    fn __repr__(&self) -> String {
        format!("SimResult(miss_distance={}, miss_time={})", self.inner.miss_distance, self.inner.miss_time)
    }
}

/// One row of the test-case table.
#[pyclass(frozen, get_all, module = "pybearing")]
struct TestCase {
    id: String,
    kind: String,
    aircraft_speed_kt: f64,
    speed_ratio: f64,
    intersect_angle_deg: f64,
    description: String,
}

impl From<scenarios::TestCase> for TestCase {
    fn from(t: scenarios::TestCase) -> Self {
        Self {
            id: t.id.to_string(),
            kind: format!("{:?}", t.kind),
            aircraft_speed_kt: t.aircraft_speed_kt,
            speed_ratio: t.speed_ratio,
            intersect_angle_deg: t.intersect_angle_deg,
            description: t.description,
        }
    }
}

/// Simulates an encounter from a relative hazard position and heading.
///
/// The aircraft starts at the origin heading along +y; `hazard_heading` is
/// measured clockwise from +y.
#[pyfunction]
#[pyo3(signature = (
    x, y, hazard_heading, hazard_speed,
    strategy = "bearing-only", hazard = "non-responsive",
    turn_rate = None, gain = strategies::DEFAULT_PURSUIT_GAIN,
    tie_break = "left", hysteresis_band = strategies::DEFAULT_HYSTERESIS_BAND,
    dt = 1e-3, max_time = 50.0, stop_at_miss = false, nmac_radius = None,
))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    x: f64,
    y: f64,
    hazard_heading: f64,
    hazard_speed: f64,
    strategy: &str,
    hazard: &str,
    turn_rate: Option<f64>,
    gain: f64,
    tie_break: &str,
    hysteresis_band: f64,
    dt: f64,
    max_time: f64,
    stop_at_miss: bool,
    nmac_radius: Option<f64>,
) -> PyResult<SimResult> {
    let strat = parse_strategy(strategy, hazard_speed, tie_break, hysteresis_band)?;
    let hz = parse_hazard(hazard, turn_rate, gain)?;
    let mut cfg = GameConfig::new(hazard_speed).with_dt(dt).with_max_time(max_time).with_stop_at_miss(stop_at_miss);
    if let Some(n) = nmac_radius {
        cfg = cfg.with_nmac_radius(n);
    }
    if let Some(rate) = turn_rate {
        cfg = cfg.with_turn_rate(HazardTurnRate::Finite(rate));
    }
    let w = WorldState::from_relative(&PlanarState::new(x, y), hazard_heading);
    let res = py
        .detach(|| engine::simulate(&w, &strat, &hz, &cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(SimResult { inner: res })
}

/// Simulates a catalogued test case at an initial range in metres against a
/// non-responsive hazard. Returns the result and the metres per unit length.
#[pyfunction]
#[pyo3(signature = (case_id, r0_m, strategy = "bearing-only", dt = None))]
fn simulate_case(py: Python<'_>, case_id: &str, r0_m: f64, strategy: &str, dt: Option<f64>) -> PyResult<(SimResult, f64)> {
    let id: CaseId = case_id.parse().map_err(value_err)?;
    let tc = scenarios::case(id);
    let units = UnitSystem::from_knots(tc.aircraft_speed_kt);
    let w = scenarios::build_initial_conditions(&tc, r0_m, &units).map_err(value_err)?;
    let mut cfg = scenarios::game_config(&tc, &w, &units);
    if let Some(dt) = dt {
        cfg = cfg.with_dt(dt);
    }
    let strat = parse_strategy(strategy, tc.speed_ratio, "left", strategies::DEFAULT_HYSTERESIS_BAND)?;
    let res = py
        .detach(|| engine::simulate(&w, &strat, &HazardBehavior::NonResponsive { heading: None }, &cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((SimResult { inner: res }, units.length_scale))
}

/// Miss-distance under optimal play from the relative hazard position.
#[pyfunction]
fn value_function(x: f64, y: f64, hazard_speed: f64) -> PyResult<f64> {
    game_solver::value_function(&PlanarState::new(x, y), hazard_speed).map_err(value_err)
}

/// Where a state lies in the optimal trajectory field:
/// `(kind, side, tau, r_t)` with `kind` one of `terminal`, `field`,
/// `capture`, `faster` and the other entries `None` where they do not apply.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn locate(x: f64, y: f64, hazard_speed: f64) -> PyResult<(&'static str, Option<&'static str>, Option<f64>, Option<f64>)> {
    let loc = game_solver::locate(&PlanarState::new(x, y), hazard_speed, None).map_err(value_err)?;
    Ok(match loc {
        Location::Terminal => ("terminal", None, None, None),
        Location::Field { side, tau, r_t } => ("field", Some(side.name()), Some(tau), Some(r_t)),
        Location::Capture { side } => ("capture", Some(side.name()), None, None),
        Location::Faster => ("faster", None, None, None),
    })
}

/// Bearing of the line of minimum range, `acos(-v_h)`.
#[pyfunction]
fn termination_angle(hazard_speed: f64) -> PyResult<f64> {
    game_solver::termination_angle(hazard_speed).map_err(value_err)
}

/// Optimal trajectories as `(family, r_t, samples)` with samples
/// `(tau, x, y, Vx, Vy, u_h)`.
#[pyfunction]
#[pyo3(signature = (hazard_speed, terminal_ranges, tau_max = f64::INFINITY, dtau = 0.01))]
#[allow(clippy::type_complexity)]
fn trajectory_field(
    py: Python<'_>,
    hazard_speed: f64,
    terminal_ranges: Vec<f64>,
    tau_max: f64,
    dtau: f64,
) -> PyResult<Vec<(&'static str, f64, Vec<(f64, f64, f64, f64, f64, f64)>)>> {
    let field = py
        .detach(|| game_solver::trajectory_field(hazard_speed, &terminal_ranges, tau_max, dtau))
        .map_err(value_err)?;
    Ok(field
        .into_iter()
        .map(|tr| {
            let samples = tr.samples.iter().map(|s| (s.tau, s.x, s.y, s.vx, s.vy, s.u_h)).collect();
            (tr.terminal.side.name(), tr.terminal.r_t, samples)
        })
        .collect())
}

#[pyfunction]
#[pyo3(signature = (hazard_speed, rho, dtau = 1e-3))]
fn barrier(py: Python<'_>, hazard_speed: f64, rho: f64, dtau: f64) -> PyResult<BarrierCurve> {
    let inner = py.detach(|| game_solver::barrier(hazard_speed, rho, dtau)).map_err(value_err)?;
    Ok(BarrierCurve { inner })
}

#[pyfunction]
fn catalog() -> Vec<TestCase> {
    scenarios::catalog().into_iter().map(TestCase::from).collect()
}

/// Initial aircraft and hazard poses `((x, y, heading), (x, y, heading))` in
/// metres for a test case.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn build_initial_conditions(case_id: &str, r0_m: f64) -> PyResult<((f64, f64, f64), (f64, f64, f64))> {
    let id: CaseId = case_id.parse().map_err(value_err)?;
    let tc = scenarios::case(id);
    let units = UnitSystem::from_knots(tc.aircraft_speed_kt);
    let w = units.to_si(&scenarios::build_initial_conditions(&tc, r0_m, &units).map_err(value_err)?);
    Ok(((w.aircraft.x, w.aircraft.y, w.aircraft.heading), (w.hazard.x, w.hazard.y, w.hazard.heading)))
}

#[pyfunction]
#[pyo3(signature = (theta, tie_break = "left", hysteresis_band = strategies::DEFAULT_HYSTERESIS_BAND))]
fn bearing_only_command(theta: f64, tie_break: &str, hysteresis_band: f64) -> PyResult<f64> {
    let s = parse_strategy("bearing-only", 0.0, tie_break, hysteresis_band)?;
    Ok(strategies::bearing_only_command(theta, &s))
}

/// Known-speed optimal command; returns `(u_a, terminated)`.
#[pyfunction]
#[pyo3(signature = (theta, hazard_speed, tie_break = "left"))]
fn optimal_aircraft_command(theta: f64, hazard_speed: f64, tie_break: &str) -> PyResult<(f64, bool)> {
    let s = parse_strategy("optimal", hazard_speed, tie_break, strategies::DEFAULT_HYSTERESIS_BAND)?;
    let c = strategies::optimal_aircraft_command(theta, hazard_speed, &s).map_err(value_err)?;
    Ok((c.u_a, c.terminated))
}

/// Bearing, hazard aspect and path angle `(theta, phi, psi)` from 3D vectors.
#[pyfunction]
fn angles_from_vectors(los: [f64; 3], aircraft_velocity: [f64; 3], hazard_velocity: [f64; 3]) -> PyResult<(f64, f64, f64)> {
    let g = RelativeGeometry3D::new(Vector3::from(los), Vector3::from(aircraft_velocity), Vector3::from(hazard_velocity));
    let a = geometry3d::angles_from_vectors(&g).map_err(value_err)?;
    Ok((a.theta, a.phi, a.psi))
}

/// Orthonormal conflict-plane basis `(e1, e2)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn conflict_plane_basis(los: [f64; 3], aircraft_velocity: [f64; 3]) -> PyResult<([f64; 3], [f64; 3])> {
    let g = RelativeGeometry3D::new(Vector3::from(los), Vector3::from(aircraft_velocity), Vector3::zeros());
    let p = geometry3d::conflict_plane_basis(&g).map_err(value_err)?;
    Ok((p.e1.into(), p.e2.into()))
}

/// Event kind names used in `SimResult.events`.
#[pyfunction]
fn event_kinds() -> Vec<&'static str> {
    [EventKind::MinRange, EventKind::Nmac, EventKind::CaptureCross, EventKind::Timeout, EventKind::Collision]
        .into_iter()
        .map(EventKind::name)
        .collect()
}

#[pymodule]
fn pybearing(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TerminalCondition>()?;
    m.add_class::<BarrierCurve>()?;
    m.add_class::<SimResult>()?;
    m.add_class::<TestCase>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_case, m)?)?;
    m.add_function(wrap_pyfunction!(value_function, m)?)?;
    m.add_function(wrap_pyfunction!(locate, m)?)?;
    m.add_function(wrap_pyfunction!(termination_angle, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory_field, m)?)?;
    m.add_function(wrap_pyfunction!(barrier, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(build_initial_conditions, m)?)?;
    m.add_function(wrap_pyfunction!(bearing_only_command, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_aircraft_command, m)?)?;
    m.add_function(wrap_pyfunction!(angles_from_vectors, m)?)?;
    m.add_function(wrap_pyfunction!(conflict_plane_basis, m)?)?;
    m.add_function(wrap_pyfunction!(event_kinds, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
