//! Closed-loop verification by strapdown re-integration.
//!
//! Re-integrates the simulated IMU signals with an ECEF mechanization that is
//! the exact inverse of the truth-signal kinematics, applies periodic resets
//! from a virtual aiding sensor co-located with the IMU, and reports
//! navigation errors and RMSE against the ground-truth IMU-frame poses.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::geodesy::{
    dcm_n_to_e, dcm_to_euler, gravity_ecef, lla_to_ecef, normalize_lon, pos_transform_jacobian,
    reorthonormalize, skew, Dcm, Frame, GeodesyError, GeodeticPosition, RotationVector,
};
use crate::gimbal::{ChainError, GimbalChain, GimbalConfig};
use crate::imu::{corrupt, ImuErrorParams, ImuSample, NoiseRng};
use crate::ingest::PoseSample;
use crate::kinematics::{average_body_dcm, earth_delta_dcm, earth_rate_skew, Kinematics};

#[derive(Debug, Error)]
pub enum VerifierError {
    #[error("strapdown state diverged (non-finite) at epoch {epoch}, t = {t}")]
    Diverged { epoch: usize, t: f64 },
    #[error("trajectory too short: {0} poses, need at least 3")]
    TooShort(usize),
    #[error(transparent)]
    Geodesy(#[from] GeodesyError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("kinematics: {0}")]
    Kinematics(#[from] crate::kinematics::KinematicsError),
}

/// Strapdown navigator state in ECEF.
#[derive(Debug, Clone)]
pub struct NavState {
    pub p_e: Vector3<f64>,
    pub v_e: Vector3<f64>,
    pub c_be: Dcm,
    pub t: f64,
}

impl NavState {
    /// Truth initialization from an IMU-frame pose.
    pub fn from_pose(pose: &PoseSample) -> Result<Self, GeodesyError> {
        let st = Kinematics::ecef_states(pose)?;
        Ok(Self {
            p_e: st.p_e,
            v_e: st.v_e,
            c_be: st.c_be,
            t: pose.t,
        })
    }

    fn is_finite(&self) -> bool {
        self.p_e.iter().all(|v| v.is_finite())
            && self.v_e.iter().all(|v| v.is_finite())
            && self.c_be.matrix().iter().all(|v| v.is_finite())
    }
}

/// Rodrigues rotation matrix exp([v x]); series branch below the small-angle
/// threshold.
fn rodrigues(v: &Vector3<f64>) -> Matrix3<f64> {
    let angle = v.norm();
    let a = skew(v);
    if angle < 1e-8 {
        return Matrix3::identity() + a + a * a * 0.5;
    }
    Matrix3::identity() + a * (angle.sin() / angle) + a * a * ((1.0 - angle.cos()) / (angle * angle))
}

/// One mechanization step: attitude by the earth-rotation-adjusted body
/// increment, velocity by the average-attitude-resolved specific force with
/// gravity and Coriolis, position by trapezoidal velocity integration.
pub fn strapdown_step(state: &NavState, imu: &ImuSample) -> Result<NavState, VerifierError> {
    let dt = imu.dt;
    let alpha = RotationVector::new(imu.dtheta);

    // average attitude over the interval, from the measured increment
    let c_bar = reorthonormalize(&average_body_dcm(&state.c_be, &alpha, dt));
    let f_e = c_bar * imu.f;

    let g = gravity_ecef(&state.p_e)?;
    let v_new = state.v_e + dt * (f_e + g - 2.0 * earth_rate_skew() * state.v_e);
    let p_new = state.p_e + dt * (v_new + state.v_e) / 2.0;

    // C(t) = dC_e^i C(t - dt) exp([dtheta x])
    let dc_ei = earth_delta_dcm(dt);
    let m_new = dc_ei.matrix() * state.c_be.matrix() * rodrigues(&imu.dtheta);
    let c_new = Dcm::new(Frame::ImuBody, Frame::Ecef, reorthonormalize(&m_new))?;

    let next = NavState {
        p_e: p_new,
        v_e: v_new,
        c_be: c_new,
        t: imu.t,
    };
    if !next.is_finite() {
        return Err(VerifierError::Diverged {
            epoch: 0,
            t: imu.t,
        });
    }
    Ok(next)
}

/// A position/velocity fix from the virtual aiding sensor co-located with
/// the IMU on the gimbal inner frame.
#[derive(Debug, Clone, Copy)]
pub struct AidingSample {
    pub t: f64,
    pub pos: GeodeticPosition,
    pub vel_n: Vector3<f64>,
    pub sigma_pos: f64,
    pub sigma_vel: f64,
}

/// Aiding noise stream; six standard normals per sample (position NED then
/// velocity NED).
pub struct AidingRng(ChaCha12Rng);

impl AidingRng {
    pub fn from_seed(seed: u64) -> Self {
        Self(ChaCha12Rng::seed_from_u64(seed))
    }

    fn normal3(&mut self) -> Vector3<f64> {
        Vector3::new(
            StandardNormal.sample(&mut self.0),
            StandardNormal.sample(&mut self.0),
            StandardNormal.sample(&mut self.0),
        )
    }
}

/// Samples the aiding sensor: truth plus i.i.d. normal noise, position noise
/// applied in NED meters and mapped through the position Jacobian.
pub fn make_aiding(
    truth_pose: &PoseSample,
    sigma_pos: f64,
    sigma_vel: f64,
    rng: &mut AidingRng,
) -> Result<AidingSample, GeodesyError> {
    let n_pos = rng.normal3() * sigma_pos;
    let n_vel = rng.normal3() * sigma_vel;
    let m_p = pos_transform_jacobian(truth_pose.pos.lat, truth_pose.pos.alt)?;
    let d = m_p * n_pos;
    Ok(AidingSample {
        t: truth_pose.t,
        pos: GeodeticPosition {
            lat: truth_pose.pos.lat + d.x,
            lon: truth_pose.pos.lon + d.y,
            alt: truth_pose.pos.alt + d.z,
        },
        vel_n: truth_pose.vel_n + n_vel,
        sigma_pos,
        sigma_vel,
    })
}

/// Reset policy applied at aiding epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResetMode {
    /// Replace position and velocity with the aiding values.
    Hard,
    /// Move position and velocity a fraction lambda toward the aiding values.
    Blend(f64),
}

/// Applies an aiding reset to position and velocity; attitude is never
/// touched. Returns `None` (and the caller counts a skip) when the aiding
/// timestamp is stale by more than half a sample interval.
pub fn reset_step(
    state: &NavState,
    aiding: &AidingSample,
    mode: ResetMode,
    dt: f64,
) -> Option<NavState> {
    if (aiding.t - state.t).abs() > dt / 2.0 {
        return None;
    }
    let p_aid = lla_to_ecef(&aiding.pos);
    let v_aid = dcm_n_to_e(aiding.pos.lat, aiding.pos.lon).rotate(&aiding.vel_n);
    let lambda = match mode {
        ResetMode::Hard => 1.0,
        ResetMode::Blend(l) => l.clamp(0.0, 1.0),
    };
    Some(NavState {
        p_e: state.p_e + (p_aid - state.p_e) * lambda,
        v_e: state.v_e + (v_aid - state.v_e) * lambda,
        c_be: state.c_be.clone(),
        t: state.t,
    })
}

/// Per-epoch navigation error against the ground-truth IMU-frame pose.
#[derive(Debug, Clone, Copy)]
pub struct EpochError {
    pub t: f64,
    /// Position error resolved in NED at the truth position, meters.
    pub pos_ned: Vector3<f64>,
    /// Velocity error in NED, m/s.
    pub vel_ned: Vector3<f64>,
    /// Wrapped yaw difference, radians.
    pub heading: f64,
}

/// RMSE per channel over the post-settling window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseSummary {
    pub heading: f64,
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
}

/// Closed-loop run report: the per-epoch error series and channel RMSEs.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub epochs: Vec<EpochError>,
    pub rmse: RmseSummary,
    /// Errors before this time are excluded from the RMSE.
    pub settle_s: f64,
    pub aiding_resets: usize,
    pub stale_aiding_skipped: usize,
}

/// Aiding and windowing configuration for a closed-loop run.
#[derive(Debug, Clone)]
pub struct ClosedLoopConfig {
    /// Aiding fix rate, Hz; `None` runs unaided dead reckoning.
    pub aiding_rate_hz: Option<f64>,
    pub sigma_pos: f64,
    pub sigma_vel: f64,
    pub mode: ResetMode,
    /// RMSE window starts this long after the first epoch.
    pub settle_s: f64,
    /// Seed for the aiding noise stream.
    pub aiding_seed: u64,
    /// Seed for the IMU measurement-noise stream.
    pub noise_seed: u64,
}

impl Default for ClosedLoopConfig {
    fn default() -> Self {
        Self {
            aiding_rate_hz: Some(1.0),
            sigma_pos: 2.0,
            sigma_vel: 0.1,
            mode: ResetMode::Hard,
            settle_s: 5.0,
            aiding_seed: 1,
            noise_seed: 2,
        }
    }
}

/// Computes the per-epoch error of a navigator state against a truth pose.
pub fn epoch_error(state: &NavState, truth: &PoseSample) -> Result<EpochError, GeodesyError> {
    let c_ne = dcm_n_to_e(truth.pos.lat, truth.pos.lon);
    let p_truth = lla_to_ecef(&truth.pos);
    let pos_ned = c_ne.transpose().rotate(&(state.p_e - p_truth));
    let vel_ned = c_ne.transpose().rotate(&state.v_e) - truth.vel_n;
    let c_bn = c_ne.transpose().compose(&state.c_be)?;
    let yaw = dcm_to_euler(&c_bn).yaw;
    Ok(EpochError {
        t: state.t,
        pos_ned,
        vel_ned,
        heading: normalize_lon(yaw - truth.att.yaw),
    })
}

/// RMSE of the error series over epochs with `t >= t0 + settle`.
pub fn rmse_summary(epochs: &[EpochError], settle_s: f64) -> RmseSummary {
    let t0 = epochs.first().map(|e| e.t).unwrap_or(0.0);
    let mut n = 0usize;
    let mut pos = Vector3::zeros();
    let mut vel = Vector3::zeros();
    let mut heading = 0.0;
    for e in epochs {
        if e.t < t0 + settle_s {
            continue;
        }
        n += 1;
        pos += e.pos_ned.component_mul(&e.pos_ned);
        vel += e.vel_ned.component_mul(&e.vel_ned);
        heading += e.heading * e.heading;
    }
    let nf = (n.max(1)) as f64;
    RmseSummary {
        heading: (heading / nf).sqrt(),
        pos: (pos / nf).map(f64::sqrt),
        vel: (vel / nf).map(f64::sqrt),
    }
}

/// Outputs of one full closed-loop run.
pub struct ClosedLoopRun {
    pub report: ErrorReport,
    /// Ground-truth IMU-frame poses (first entry initializes the navigator).
    pub truth: Vec<PoseSample>,
    /// The corrupted IMU samples fed to the navigator.
    pub imu: Vec<ImuSample>,
}

/// Runs the full pipeline on a validated platform-pose stream:
/// chain -> kinematics -> error model -> strapdown with aiding resets,
/// with per-epoch errors against the IMU-frame truth.
pub fn run_closed_loop(
    poses: &[PoseSample],
    gimbal: &GimbalConfig,
    params: &ImuErrorParams,
    cfg: &ClosedLoopConfig,
) -> Result<ClosedLoopRun, VerifierError> {
    if poses.len() < 3 {
        return Err(VerifierError::TooShort(poses.len()));
    }
    let mut chain = GimbalChain::new(gimbal.clone())?;
    let mut kin = Kinematics::new();
    let mut noise = NoiseRng::from_seed(cfg.noise_seed);
    let mut aiding_rng = AidingRng::from_seed(cfg.aiding_seed);

    let mut truth = Vec::with_capacity(poses.len());
    let mut imu_samples = Vec::with_capacity(poses.len());
    let mut epochs = Vec::with_capacity(poses.len());
    let mut state: Option<NavState> = None;
    let mut resets = 0usize;
    let mut stale = 0usize;

    let aiding_interval = cfg.aiding_rate_hz.map(|r| 1.0 / r);
    let mut next_aiding_t = f64::INFINITY;

    for (epoch, pose) in poses.iter().enumerate() {
        let Some(pose_b1) = chain.step(pose)? else {
            continue;
        };
        let Some(truth_inertial) = kin.step(&pose_b1)? else {
            // second pose: initialize the navigator from truth
            if let Some(interval) = aiding_interval {
                next_aiding_t = pose_b1.t + interval;
            }
            state = Some(NavState::from_pose(&pose_b1)?);
            truth.push(pose_b1);
            continue;
        };

        let imu = corrupt(&truth_inertial, params, &mut noise);
        let mut nav =
            strapdown_step(state.as_ref().expect("initialized above"), &imu).map_err(|e| {
                match e {
                    VerifierError::Diverged { t, .. } => VerifierError::Diverged { epoch, t },
                    other => other,
                }
            })?;

        if let Some(interval) = aiding_interval {
            if pose_b1.t + imu.dt / 4.0 >= next_aiding_t {
                let aiding = make_aiding(&pose_b1, cfg.sigma_pos, cfg.sigma_vel, &mut aiding_rng)?;
                match reset_step(&nav, &aiding, cfg.mode, imu.dt) {
                    Some(reset) => {
                        nav = reset;
                        resets += 1;
                    }
                    None => stale += 1,
                }
                next_aiding_t += interval;
            }
        }

        epochs.push(epoch_error(&nav, &pose_b1)?);
        truth.push(pose_b1);
        imu_samples.push(imu);
        state = Some(nav);
    }

    let rmse = rmse_summary(&epochs, cfg.settle_s);
    Ok(ClosedLoopRun {
        report: ErrorReport {
            epochs,
            rmse,
            settle_s: cfg.settle_s,
            aiding_resets: resets,
            stale_aiding_skipped: stale,
        },
        truth,
        imu: imu_samples,
    })
}
