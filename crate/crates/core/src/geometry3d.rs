//! Three-dimensional encounter geometry and its reduction to the conflict plane.
//!
//! The conflict plane is spanned by the aircraft velocity and the line of
//! sight. Everything past this module works in that plane.

use std::f64::consts::PI;

use nalgebra::Vector3;
use thiserror::Error;

/// Magnitudes below this are treated as zero.
pub const DEGENERATE_EPS: f64 = 1e-12;
/// `sin(theta)` below this selects the collinear fallback.
pub const COLLINEAR_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate {0} vector (magnitude below {DEGENERATE_EPS})")]
    DegenerateVector(&'static str),
}

/// Line of sight and velocities of one encounter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeGeometry3D {
    /// Aircraft to hazard.
    pub los: Vector3<f64>,
    pub aircraft_velocity: Vector3<f64>,
    pub hazard_velocity: Vector3<f64>,
}

/// Bearing of the hazard from the aircraft velocity (`theta`), hazard
/// velocity against the line of sight (`phi`) and the angle between the two
/// velocities (`psi`). All in `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleTriple {
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
}

impl AngleTriple {
    /// Spherical triangle inequality on the three directions, with slack `tol`.
    pub fn satisfies_bounds(&self, tol: f64) -> bool {
        let lo = (self.theta - self.phi).abs();
        let hi = (self.theta + self.phi).min(2.0 * PI - self.theta - self.phi);
        self.psi >= lo - tol && self.psi <= hi + tol
    }
}

/// Orthonormal basis of the conflict plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictPlane {
    /// Along the aircraft velocity.
    pub e1: Vector3<f64>,
    /// In the plane, on the hazard's side.
    pub e2: Vector3<f64>,
}

impl ConflictPlane {
    /// In-plane coordinates `(x, y)` of a vector, `x` along `e2`, `y` along `e1`.
    pub fn project(&self, v: &Vector3<f64>) -> (f64, f64) {
        (v.dot(&self.e2), v.dot(&self.e1))
    }

    /// Unit normal `e1 x e2`.
    pub fn normal(&self) -> Vector3<f64> {
        self.e1.cross(&self.e2)
    }
}

fn unit(v: &Vector3<f64>, name: &'static str) -> Result<Vector3<f64>, GeometryError> {
    let n = v.norm();
    if n < DEGENERATE_EPS {
        return Err(GeometryError::DegenerateVector(name));
    }
    Ok(v / n)
}

fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos()
}

impl RelativeGeometry3D {
    pub fn new(los: Vector3<f64>, aircraft_velocity: Vector3<f64>, hazard_velocity: Vector3<f64>) -> Self {
        Self {
            los,
            aircraft_velocity,
            hazard_velocity,
        }
    }

    pub fn range(&self) -> f64 {
        self.los.norm()
    }

    fn units(&self) -> Result<[Vector3<f64>; 3], GeometryError> {
        Ok([
            unit(&self.aircraft_velocity, "aircraft velocity")?,
            unit(&self.los, "line-of-sight")?,
            unit(&self.hazard_velocity, "hazard velocity")?,
        ])
    }
}

/// Computes the three encounter angles from normalised inner products.
pub fn angles_from_vectors(g: &RelativeGeometry3D) -> Result<AngleTriple, GeometryError> {
    let [ea, er, eh] = g.units()?;
    Ok(AngleTriple {
        theta: angle_between(&ea, &er),
        phi: angle_between(&eh, &er),
        psi: angle_between(&ea, &eh),
    })
}

/// Basis of the plane containing the aircraft velocity and the line of sight.
///
/// When the two are collinear, `e2` is the rejection of global `+x` (or `+y`
/// if that is collinear too) from the aircraft velocity.
pub fn conflict_plane_basis(g: &RelativeGeometry3D) -> Result<ConflictPlane, GeometryError> {
    let e1 = unit(&g.aircraft_velocity, "aircraft velocity")?;
    let er = unit(&g.los, "line-of-sight")?;
    let reject = |v: &Vector3<f64>| v - e1 * e1.dot(v);
    let rej = reject(&er);
    let e2 = if rej.norm() >= COLLINEAR_EPS {
        rej.normalize()
    } else {
        let fallback = reject(&Vector3::x());
        if fallback.norm() >= COLLINEAR_EPS {
            fallback.normalize()
        } else {
            reject(&Vector3::y()).normalize()
        }
    };
    Ok(ConflictPlane { e1, e2 })
}

/// Rotation-rate vector for an aircraft turn command in the conflict plane.
///
/// `u_a = +1` turns the velocity toward `e2` (toward the hazard's side),
/// `u_a = -1` away from it. The induced acceleration is `W x V_a`.
pub fn lift_planar_control(u_a: f64, g: &RelativeGeometry3D, max_accel: f64) -> Result<Vector3<f64>, GeometryError> {
    let plane = conflict_plane_basis(g)?;
    Ok(plane.normal() * (u_a * max_accel))
}

/// Inertial 3D state: both positions and velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics3D {
    pub aircraft_position: Vector3<f64>,
    pub aircraft_velocity: Vector3<f64>,
    pub hazard_position: Vector3<f64>,
    pub hazard_velocity: Vector3<f64>,
}

impl Kinematics3D {
    pub fn geometry(&self) -> RelativeGeometry3D {
        RelativeGeometry3D::new(
            self.hazard_position - self.aircraft_position,
            self.aircraft_velocity,
            self.hazard_velocity,
        )
    }

    /// One RK4 step of `R' = V_h - V_a`, `V' = W x V` with rotation rates held.
    pub fn step_rk4(&self, w_aircraft: &Vector3<f64>, w_hazard: &Vector3<f64>, dt: f64) -> Self {
        let f = |s: &[f64; 12]| -> [f64; 12] {
            let va = Vector3::new(s[3], s[4], s[5]);
            let vh = Vector3::new(s[9], s[10], s[11]);
            let aa = w_aircraft.cross(&va);
            let ah = w_hazard.cross(&vh);
            [va.x, va.y, va.z, aa.x, aa.y, aa.z, vh.x, vh.y, vh.z, ah.x, ah.y, ah.z]
        };
        let mut y = [0.0; 12];
        y[0..3].copy_from_slice(self.aircraft_position.as_slice());
        y[3..6].copy_from_slice(self.aircraft_velocity.as_slice());
        y[6..9].copy_from_slice(self.hazard_position.as_slice());
        y[9..12].copy_from_slice(self.hazard_velocity.as_slice());
        let y = crate::kinematics::rk4_step(&y, dt, f);
        Self {
            aircraft_position: Vector3::new(y[0], y[1], y[2]),
            aircraft_velocity: Vector3::new(y[3], y[4], y[5]),
            hazard_position: Vector3::new(y[6], y[7], y[8]),
            hazard_velocity: Vector3::new(y[9], y[10], y[11]),
        }
    }
}
