//! Earth model, coordinate conversions and rotation-matrix utilities.
//!
//! Everything downstream (gimbal chain, kinematics, strapdown verifier) is built
//! on the primitives in this module: the WGS-84 ellipsoid and its curvature
//! radii, the local NED/ECEF rotations, a frame-labelled direction cosine
//! matrix type, and the extraction of an average rotation rate from a pair of
//! direction cosine matrices one time step apart.
//!
//! All functions here are pure; values are immutable after construction and
//! safe to share between threads.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// WGS-84 semi-major axis, meters.
pub const SEMI_MAJOR_AXIS: f64 = 6378137.0;
/// WGS-84 first eccentricity squared.
pub const ECCENTRICITY_SQ: f64 = 6.69437999014e-3;
/// Earth rotation rate about the polar axis, rad/s.
pub const EARTH_RATE: f64 = 7.292115e-5;
/// WGS-84 geocentric gravitational constant, m^3/s^2.
pub const GM: f64 = 3.986004418e14;
/// WGS-84 second zonal harmonic (dynamic form factor).
pub const J2: f64 = 1.082627e-3;

/// Positions closer to the geocenter than this are rejected (m).
pub const MIN_GEOCENTRIC_RADIUS: f64 = 6.0e6;
/// Below this rotation angle the sc/sin(sc) compensation factor is taken as 1.
pub const EPS_ANGLE: f64 = 1e-8;
/// Altitude sanity bounds for airborne scenarios, meters.
pub const ALT_RANGE: (f64, f64) = (-5000.0, 100_000.0);

const ACOS_CLAMP: f64 = 1e-9;
const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesyError {
    #[error("latitude {0} rad outside [-pi/2, pi/2]")]
    LatitudeOutOfRange(f64),
    #[error("altitude {0} m outside sane airborne bounds [-5000, 100000]")]
    AltitudeOutOfRange(f64),
    #[error("position Jacobian singular: latitude {0} rad is within 1e-6 of a pole")]
    SingularJacobian(f64),
    #[error("position with radius {0} m is too close to the geocenter")]
    NearGeocenter(f64),
    #[error("matrix is not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),
    #[error("acos argument {0} outside [-1, 1] by more than 1e-9; DCM is corrupted")]
    AcosDomain(f64),
    #[error("frame mismatch: outer transform {outer_from}->{outer_to} cannot follow one producing {inner}")]
    FrameMismatch {
        outer_from: Frame,
        outer_to: Frame,
        inner: Frame,
    },
    #[error("non-finite component in input")]
    NonFinite,
}

/// Coordinate frames used throughout the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    /// Local North-East-Down navigation frame.
    Ned,
    /// Earth-centered Earth-fixed frame.
    Ecef,
    /// Earth-centered inertial frame.
    Inertial,
    /// Airborne platform body frame (b_c).
    PlatformBody,
    /// Gimbal pan frame (g_P), rigidly mounted to the platform body.
    GimbalPan,
    /// Gimbal tilt frame (g_T).
    GimbalTilt,
    /// Gimbal roll frame (g_R).
    GimbalRoll,
    /// IMU body frame (b_1) on the gimbal inner plate.
    ImuBody,
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Frame::Ned => "ned",
            Frame::Ecef => "ecef",
            Frame::Inertial => "inertial",
            Frame::PlatformBody => "platform-body",
            Frame::GimbalPan => "gimbal-pan",
            Frame::GimbalTilt => "gimbal-tilt",
            Frame::GimbalRoll => "gimbal-roll",
            Frame::ImuBody => "imu-body",
        };
        f.write_str(s)
    }
}

/// Geodetic position: latitude/longitude in radians, height above the
/// ellipsoid in meters (up positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodeticPosition {
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
}

impl GeodeticPosition {
    /// Validates ranges and normalizes longitude to (-pi, pi].
    pub fn new(lat: f64, lon: f64, alt: f64) -> Result<Self, GeodesyError> {
        if !(lat.is_finite() && lon.is_finite() && alt.is_finite()) {
            return Err(GeodesyError::NonFinite);
        }
        if lat.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(GeodesyError::LatitudeOutOfRange(lat));
        }
        if alt < ALT_RANGE.0 || alt > ALT_RANGE.1 {
            return Err(GeodesyError::AltitudeOutOfRange(alt));
        }
        Ok(Self {
            lat,
            lon: normalize_lon(lon),
            alt,
        })
    }
}

/// Wraps an angle to (-pi, pi].
pub fn normalize_lon(lon: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut x = lon % two_pi;
    if x <= -std::f64::consts::PI {
        x += two_pi;
    } else if x > std::f64::consts::PI {
        x -= two_pi;
    }
    x
}

/// Euler attitude (roll, pitch, yaw), radians, body to NED, ZYX convention.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }
}

/// A direction cosine matrix labelled with its source and target frames.
///
/// `Dcm { from: A, to: B }` maps vectors resolved in frame A into frame B.
/// Construction through [`Dcm::new`] enforces the orthonormality invariant;
/// every composition checks that frame labels chain correctly.
#[derive(Debug, Clone, PartialEq)]
pub struct Dcm {
    m: Matrix3<f64>,
    from: Frame,
    to: Frame,
}

impl Dcm {
    /// Builds a labelled DCM, rejecting matrices that are not orthonormal to 1e-9.
    pub fn new(from: Frame, to: Frame, m: Matrix3<f64>) -> Result<Self, GeodesyError> {
        let dev = orthonormality_deviation(&m);
        if dev > ORTHONORMAL_TOL {
            return Err(GeodesyError::NotOrthonormal(dev));
        }
        Ok(Self { m, from, to })
    }

    /// Identity transform between two (possibly distinct) frames.
    pub fn identity(from: Frame, to: Frame) -> Self {
        Self {
            m: Matrix3::identity(),
            from,
            to,
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn from_frame(&self) -> Frame {
        self.from
    }

    pub fn to_frame(&self) -> Frame {
        self.to
    }

    /// Inverse transform; for an orthonormal matrix this is the transpose.
    pub fn transpose(&self) -> Dcm {
        Dcm {
            m: self.m.transpose(),
            from: self.to,
            to: self.from,
        }
    }

    /// Chains `self` (B->C) after `inner` (A->B), producing A->C.
    /// Fails when the inner target does not match the outer source.
    pub fn compose(&self, inner: &Dcm) -> Result<Dcm, GeodesyError> {
        if inner.to != self.from {
            return Err(GeodesyError::FrameMismatch {
                outer_from: self.from,
                outer_to: self.to,
                inner: inner.to,
            });
        }
        Ok(Dcm {
            m: self.m * inner.m,
            from: inner.from,
            to: self.to,
        })
    }

    /// Resolves a vector from the source frame into the target frame.
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.m * v
    }

    /// Re-orthonormalizes in place (symmetric correction).
    pub fn renormalize(&mut self) {
        self.m = reorthonormalize(&self.m);
    }
}

/// Max-norm deviation of C*C^T from the identity, plus determinant error.
/// Non-finite entries rate as infinitely far from orthonormal.
pub fn orthonormality_deviation(m: &Matrix3<f64>) -> f64 {
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let r = m * m.transpose() - Matrix3::identity();
    let mut dev: f64 = 0.0;
    for v in r.iter() {
        dev = dev.max(v.abs());
    }
    dev.max((m.determinant() - 1.0).abs())
}

/// Symmetric re-orthonormalization: Newton steps of C <- C(3I - C^T C)/2,
/// which square the deviation each iteration for matrices within the basin
/// (deviation well below 1). Three steps take a 1e-2 deviation to machine
/// precision.
pub fn reorthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let mut c = *m;
    for _ in 0..3 {
        c = c * (Matrix3::identity() * 3.0 - c.transpose() * c) * 0.5;
    }
    c
}

/// Skew-symmetric cross-product matrix of a 3-vector (Eq.-(16) layout).
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// A small rotation over one time step: the rotation vector and its skew matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationVector {
    alpha: Vector3<f64>,
}

impl RotationVector {
    pub fn new(alpha: Vector3<f64>) -> Self {
        Self { alpha }
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.alpha
    }

    pub fn angle(&self) -> f64 {
        self.alpha.norm()
    }

    /// Skew-symmetric matrix of the rotation vector.
    pub fn skew(&self) -> Matrix3<f64> {
        skew(&self.alpha)
    }
}

/// Meridian and transverse radii of curvature at a latitude.
pub fn radii_of_curvature(lat: f64) -> Result<(f64, f64), GeodesyError> {
    if !lat.is_finite() || lat.abs() > std::f64::consts::FRAC_PI_2 {
        return Err(GeodesyError::LatitudeOutOfRange(lat));
    }
    let s2 = lat.sin() * lat.sin();
    let den = 1.0 - ECCENTRICITY_SQ * s2;
    let r_n = SEMI_MAJOR_AXIS * (1.0 - ECCENTRICITY_SQ) / den.powf(1.5);
    let r_e = SEMI_MAJOR_AXIS / den.sqrt();
    Ok((r_n, r_e))
}

/// Jacobian of the local NED-to-geodetic coordinate map:
/// diag(1/(R_N+h), 1/((R_E+h) cos L), -1).
///
/// Within 1e-4 rad of a pole the east column degenerates (cos L -> 0) and the
/// map is rejected as singular rather than silently amplified.
pub fn pos_transform_jacobian(lat: f64, alt: f64) -> Result<Matrix3<f64>, GeodesyError> {
    let (r_n, r_e) = radii_of_curvature(lat)?;
    if std::f64::consts::FRAC_PI_2 - lat.abs() < 1e-4 {
        return Err(GeodesyError::SingularJacobian(lat));
    }
    Ok(Matrix3::from_diagonal(&Vector3::new(
        1.0 / (r_n + alt),
        1.0 / ((r_e + alt) * lat.cos()),
        -1.0,
    )))
}

fn euler_matrix(att: &EulerAngles) -> Matrix3<f64> {
    let (sr, cr) = att.roll.sin_cos();
    let (sp, cp) = att.pitch.sin_cos();
    let (sy, cy) = att.yaw.sin_cos();
    // Rz(yaw) * Ry(pitch) * Rx(roll)
    Matrix3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    )
}

/// Body-to-NED attitude matrix from ZYX (yaw, pitch, roll) Euler angles.
pub fn euler_to_dcm(att: &EulerAngles, body: Frame) -> Dcm {
    Dcm {
        m: euler_matrix(att),
        from: body,
        to: Frame::Ned,
    }
}

/// Inverse of [`euler_to_dcm`] up to angle wrapping.
pub fn dcm_to_euler(c: &Dcm) -> EulerAngles {
    let m = &c.m;
    EulerAngles {
        roll: m[(2, 1)].atan2(m[(2, 2)]),
        pitch: -m[(2, 0)].clamp(-1.0, 1.0).asin(),
        yaw: m[(1, 0)].atan2(m[(0, 0)]),
    }
}

/// NED-to-ECEF rotation at a latitude/longitude.
pub fn dcm_n_to_e(lat: f64, lon: f64) -> Dcm {
    let (sl, cl) = lat.sin_cos();
    let (so, co) = lon.sin_cos();
    Dcm {
        m: Matrix3::new(
            -sl * co,
            -so,
            -cl * co,
            -sl * so,
            co,
            -cl * so,
            cl,
            0.0,
            -sl,
        ),
        from: Frame::Ned,
        to: Frame::Ecef,
    }
}

/// Closed-form geodetic-to-ECEF conversion.
pub fn lla_to_ecef(p: &GeodeticPosition) -> Vector3<f64> {
    let (sl, cl) = p.lat.sin_cos();
    let (so, co) = p.lon.sin_cos();
    let r_e = SEMI_MAJOR_AXIS / (1.0 - ECCENTRICITY_SQ * sl * sl).sqrt();
    Vector3::new(
        (r_e + p.alt) * cl * co,
        (r_e + p.alt) * cl * so,
        (r_e * (1.0 - ECCENTRICITY_SQ) + p.alt) * sl,
    )
}

/// Iterative ECEF-to-geodetic conversion, converging to |dlat| < 1e-13 rad.
pub fn ecef_to_lla(p: &Vector3<f64>) -> Result<GeodeticPosition, GeodesyError> {
    let r = p.norm();
    if !r.is_finite() || r < MIN_GEOCENTRIC_RADIUS {
        return Err(GeodesyError::NearGeocenter(r));
    }
    let rho = (p.x * p.x + p.y * p.y).sqrt();
    let lon = p.y.atan2(p.x);
    if rho < 1.0 {
        // On the polar axis the longitude is arbitrary and the iteration below
        // degenerates; solve directly.
        let lat = std::f64::consts::FRAC_PI_2.copysign(p.z);
        let b = SEMI_MAJOR_AXIS * (1.0 - ECCENTRICITY_SQ).sqrt();
        return Ok(GeodeticPosition {
            lat,
            lon: 0.0,
            alt: p.z.abs() - b,
        });
    }
    let mut lat = (p.z / (rho * (1.0 - ECCENTRICITY_SQ))).atan();
    let mut alt = 0.0;
    for _ in 0..50 {
        let (sl, cl) = lat.sin_cos();
        let w = (1.0 - ECCENTRICITY_SQ * sl * sl).sqrt();
        let r_e = SEMI_MAJOR_AXIS / w;
        // well-conditioned at all latitudes, unlike rho/cos(lat) - R_E
        alt = rho * cl + p.z * sl - SEMI_MAJOR_AXIS * w;
        let next = (p.z / (rho * (1.0 - ECCENTRICITY_SQ * r_e / (r_e + alt)))).atan();
        let step = (next - lat).abs();
        lat = next;
        if step < 1e-13 {
            break;
        }
    }
    Ok(GeodeticPosition {
        lat,
        lon,
        alt,
    })
}

/// Gravity vector in the ECEF frame (plumb-bob sense): J2 gravitational
/// attraction plus the centrifugal term w_ie^2 [x, y, 0], so that a stationary
/// accelerometer reads exactly -g.
pub fn gravity_ecef(p: &Vector3<f64>) -> Result<Vector3<f64>, GeodesyError> {
    let r = p.norm();
    if !r.is_finite() || r < MIN_GEOCENTRIC_RADIUS {
        return Err(GeodesyError::NearGeocenter(r));
    }
    let z_scale = 5.0 * (p.z / r) * (p.z / r);
    let c = 1.5 * J2 * (SEMI_MAJOR_AXIS / r) * (SEMI_MAJOR_AXIS / r);
    let k = -GM / (r * r * r);
    let gamma = Vector3::new(
        k * (p.x + c * (1.0 - z_scale) * p.x),
        k * (p.y + c * (1.0 - z_scale) * p.y),
        k * (p.z + c * (3.0 - z_scale) * p.z),
    );
    Ok(Vector3::new(
        gamma.x + EARTH_RATE * EARTH_RATE * p.x,
        gamma.y + EARTH_RATE * EARTH_RATE * p.y,
        gamma.z,
    ))
}

/// Extracts the average rotation rate from a delta DCM over one step.
///
/// `delta` must be of the form C^T(t) C(t - dt) for the same frame at two
/// epochs. The antisymmetric differences give the small-angle rate; the
/// sc/sin(sc) factor removes the finite-step scale so single-axis rotations
/// are recovered exactly.
pub fn dcm_delta_to_rotrate(delta: &Dcm, dt: f64) -> Result<Vector3<f64>, GeodesyError> {
    debug_assert!(dt > 0.0);
    let m = &delta.m;
    let raw = Vector3::new(
        m[(1, 2)] - m[(2, 1)],
        m[(2, 0)] - m[(0, 2)],
        m[(0, 1)] - m[(1, 0)],
    ) / (2.0 * dt);
    let arg = (m[(0, 0)] + m[(1, 1)] + m[(2, 2)] - 1.0) / 2.0;
    if arg.abs() > 1.0 + ACOS_CLAMP {
        return Err(GeodesyError::AcosDomain(arg));
    }
    let sc = arg.clamp(-1.0, 1.0).acos();
    if sc.abs() < EPS_ANGLE {
        return Ok(raw);
    }
    Ok(raw * (sc / sc.sin()))
}
