//! Pan/tilt/roll gimbal kinematic chain.
//!
//! Propagates the platform-body pose through the three rotating junctions and
//! their lever arms to the IMU body frame. Attitude chains by DCM products,
//! position through the local NED-to-geodetic Jacobian, and velocity picks up
//! the lever-arm rate term `C (w x l)`, where each parent frame's rotation
//! rate relative to ECEF is extracted from its memorized DCM one step back.

use nalgebra::Vector3;
use thiserror::Error;

use crate::geodesy::{
    dcm_delta_to_rotrate, dcm_n_to_e, dcm_to_euler, euler_to_dcm, pos_transform_jacobian, Dcm,
    EulerAngles, Frame, GeodesyError, GeodeticPosition,
};
use crate::ingest::PoseSample;

/// Physical sanity bound on lever-arm lengths, meters.
const MAX_LEVER: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("invalid gimbal config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
}

/// Sinusoidal angle profile of one junction:
/// `angle(t) = offset + amplitude * sin(2 pi t / period)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisProfile {
    pub period: f64,
    pub amplitude: f64,
    pub offset: f64,
}

impl AxisProfile {
    pub fn fixed(offset: f64) -> Self {
        Self {
            period: 1.0,
            amplitude: 0.0,
            offset,
        }
    }

    fn angle_at(&self, t: f64) -> f64 {
        if self.amplitude == 0.0 {
            return self.offset;
        }
        self.offset + self.amplitude * (2.0 * std::f64::consts::PI * t / self.period).sin()
    }
}

/// Rotation axis of a junction, in its parent frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JunctionAxis {
    X,
    Y,
    Z,
}

/// Gimbal geometry and drive profiles.
///
/// `levers[0]` points from the pan frame origin to the tilt frame origin,
/// resolved in the pan frame; `levers[1]` tilt to roll in the tilt frame;
/// `levers[2]` roll to IMU in the roll frame. The default stacks the chain
/// down the +Z (down) axis with the junction lengths of a 0.1 m gimbal and
/// drives pan/tilt/roll with 4 s / 6 s / 10 s periods and pi/6, pi/6, pi/12
/// amplitudes around zero offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct GimbalConfig {
    pub enabled: bool,
    pub levers: [Vector3<f64>; 3],
    pub axes: [JunctionAxis; 3],
    /// Pan, tilt, roll drive profiles.
    pub profiles: [AxisProfile; 3],
    /// Fixed mounting rotation of the pan base relative to the platform body.
    pub mount: EulerAngles,
}

impl Default for GimbalConfig {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        Self {
            enabled: true,
            levers: [
                Vector3::new(0.0, 0.0, 0.1),
                Vector3::new(0.0, 0.0, 0.1),
                Vector3::zeros(),
            ],
            axes: [JunctionAxis::Z, JunctionAxis::Y, JunctionAxis::X],
            profiles: [
                AxisProfile {
                    period: 4.0,
                    amplitude: pi / 6.0,
                    offset: 0.0,
                },
                AxisProfile {
                    period: 6.0,
                    amplitude: pi / 6.0,
                    offset: 0.0,
                },
                AxisProfile {
                    period: 10.0,
                    amplitude: pi / 12.0,
                    offset: 0.0,
                },
            ],
            mount: EulerAngles::default(),
        }
    }
}

impl GimbalConfig {
    /// A disabled gimbal: the chain passes poses through unchanged.
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        for (i, p) in self.profiles.iter().enumerate() {
            if p.amplitude != 0.0 && p.period <= 0.0 {
                return Err(ChainError::InvalidConfig(format!(
                    "profile {i}: period {} s must be positive when the amplitude is nonzero",
                    p.period
                )));
            }
            if !(p.period.is_finite() && p.amplitude.is_finite() && p.offset.is_finite()) {
                return Err(ChainError::InvalidConfig(format!(
                    "profile {i}: non-finite parameter"
                )));
            }
        }
        for (i, l) in self.levers.iter().enumerate() {
            if !(l.x.is_finite() && l.y.is_finite() && l.z.is_finite()) || l.norm() >= MAX_LEVER {
                return Err(ChainError::InvalidConfig(format!(
                    "lever {i} = {l:?} must be finite and shorter than {MAX_LEVER} m"
                )));
            }
        }
        Ok(())
    }
}

/// Junction angles at one instant, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GimbalAngles {
    pub pan: f64,
    pub tilt: f64,
    pub roll: f64,
}

/// Evaluates the drive profiles; a disabled gimbal holds all angles at zero.
pub fn gimbal_angles_at(t: f64, cfg: &GimbalConfig) -> GimbalAngles {
    if !cfg.enabled {
        return GimbalAngles {
            pan: 0.0,
            tilt: 0.0,
            roll: 0.0,
        };
    }
    GimbalAngles {
        pan: cfg.profiles[0].angle_at(t),
        tilt: cfg.profiles[1].angle_at(t),
        roll: cfg.profiles[2].angle_at(t),
    }
}

/// Single-axis rotation of a child frame relative to its parent.
pub fn junction_dcm(angle: f64, axis: JunctionAxis, child: Frame, parent: Frame) -> Dcm {
    let e = match axis {
        JunctionAxis::X => EulerAngles::new(angle, 0.0, 0.0),
        JunctionAxis::Y => EulerAngles::new(0.0, angle, 0.0),
        JunctionAxis::Z => EulerAngles::new(0.0, 0.0, angle),
    };
    // reuse the Euler builder for the single-axis matrix, then label it
    let m = *euler_to_dcm(&e, child).matrix();
    Dcm::new(child, parent, m).expect("single-axis rotation is orthonormal")
}

/// Attitude transposition: C_child^n = C_parent^n C_child^parent.
pub fn transpose_attitude(c_parent_n: &Dcm, c_child_parent: &Dcm) -> Result<Dcm, GeodesyError> {
    c_parent_n.compose(c_child_parent)
}

/// Position transposition through the lever arm:
/// p_child = p_parent + M_p C_parent^n l, with M_p evaluated at the parent.
pub fn transpose_position(
    p_parent: &GeodeticPosition,
    c_parent_n: &Dcm,
    lever: &Vector3<f64>,
) -> Result<GeodeticPosition, GeodesyError> {
    if *lever == Vector3::zeros() {
        return Ok(*p_parent);
    }
    let m_p = pos_transform_jacobian(p_parent.lat, p_parent.alt)?;
    let d = m_p * c_parent_n.rotate(lever);
    Ok(GeodeticPosition {
        lat: p_parent.lat + d.x,
        lon: p_parent.lon + d.y,
        alt: p_parent.alt + d.z,
    })
}

/// Velocity transposition: v_child = v_parent + C_parent^n (w x l), with the
/// parent rotation rate relative to ECEF resolved in the parent frame.
pub fn transpose_velocity(
    v_parent_n: &Vector3<f64>,
    c_parent_n: &Dcm,
    omega_e_parent: &Vector3<f64>,
    lever: &Vector3<f64>,
) -> Vector3<f64> {
    v_parent_n + c_parent_n.rotate(&omega_e_parent.cross(lever))
}

/// Previous-step ECEF attitudes of the chained frames (pan base, tilt, roll,
/// IMU), used to extract each frame's rotation rate by DCM differencing.
/// Valid only after one warm-up sample.
#[derive(Debug, Clone)]
pub struct ChainMemory {
    t: f64,
    c_e: [Dcm; 4],
}

/// Stateful pan/tilt/roll chain; one instance per pose stream.
#[derive(Debug)]
pub struct GimbalChain {
    cfg: GimbalConfig,
    mem: Option<ChainMemory>,
    warmed: bool,
}

const STAGE_FRAMES: [Frame; 4] = [
    Frame::GimbalPan,
    Frame::GimbalTilt,
    Frame::GimbalRoll,
    Frame::ImuBody,
];

impl GimbalChain {
    pub fn new(cfg: GimbalConfig) -> Result<Self, ChainError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            mem: None,
            warmed: false,
        })
    }

    pub fn config(&self) -> &GimbalConfig {
        &self.cfg
    }

    /// Advances the chain by one platform pose. The first sample only warms
    /// the rotation-rate memory and yields `None`; every following sample
    /// yields the IMU-body pose.
    pub fn step(&mut self, pose: &PoseSample) -> Result<Option<PoseSample>, ChainError> {
        if !self.cfg.enabled {
            // pass-through, but keep the same one-sample warm-up accounting
            let first = !self.warmed;
            self.warmed = true;
            return Ok(if first { None } else { Some(*pose) });
        }

        let angles = gimbal_angles_at(pose.t, &self.cfg);
        let stage_angles = [angles.pan, angles.tilt, angles.roll];

        // platform attitude plus the fixed mounting rotation of the pan base
        let c_bc_n = euler_to_dcm(&pose.att, Frame::PlatformBody);
        let mount = Dcm::new(
            Frame::GimbalPan,
            Frame::PlatformBody,
            *euler_to_dcm(&self.cfg.mount, Frame::GimbalPan).matrix(),
        )?;
        let mut c_n = [c_bc_n.compose(&mount)?, mount.clone(), mount.clone(), mount];
        let mut pos = [pose.pos; 4];
        for i in 0..3 {
            let c_child_parent = junction_dcm(
                stage_angles[i],
                self.cfg.axes[i],
                STAGE_FRAMES[i + 1],
                STAGE_FRAMES[i],
            );
            c_n[i + 1] = transpose_attitude(&c_n[i], &c_child_parent)?;
            pos[i + 1] = transpose_position(&pos[i], &c_n[i], &self.cfg.levers[i])?;
        }

        // current ECEF attitude of every chained frame, memorized for the
        // next step's rate extraction
        let mut c_e: Vec<Dcm> = Vec::with_capacity(4);
        for i in 0..4 {
            c_e.push(dcm_n_to_e(pos[i].lat, pos[i].lon).compose(&c_n[i])?);
        }
        let c_e: [Dcm; 4] = [
            c_e[0].clone(),
            c_e[1].clone(),
            c_e[2].clone(),
            c_e[3].clone(),
        ];

        let out = match &self.mem {
            None => None,
            Some(mem) => {
                let dt = pose.t - mem.t;
                if dt <= 0.0 {
                    return Err(ChainError::InvalidConfig(format!(
                        "non-increasing chain time step {dt}"
                    )));
                }
                let mut v = pose.vel_n;
                for i in 0..3 {
                    let delta = c_e[i].transpose().compose(&mem.c_e[i])?;
                    let omega = dcm_delta_to_rotrate(&delta, dt)?;
                    v = transpose_velocity(&v, &c_n[i], &omega, &self.cfg.levers[i]);
                }
                Some(PoseSample {
                    t: pose.t,
                    pos: pos[3],
                    vel_n: v,
                    att: dcm_to_euler(&c_n[3]),
                })
            }
        };
        self.mem = Some(ChainMemory { t: pose.t, c_e });
        self.warmed = true;
        Ok(out)
    }
}
