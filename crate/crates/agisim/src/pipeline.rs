//! Pipeline orchestration: trajectory loading, the simulate/scenario/verify/
//! ingest commands, and deterministic output writing.
//!
//! Warm-up accounting is fixed: N validated platform poses produce N-1
//! ground-truth IMU-frame poses (the gimbal chain consumes one sample to
//! prime its rotation-rate memory) and N-2 IMU samples (the kinematics
//! consume one more). The first truth pose initializes the verifier.

use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

use crate::config::{ProfileKind, RunConfig, SourceKind, VerifyConfig};
use crate::geodesy::{EulerAngles, GeodeticPosition};
use crate::gimbal::GimbalChain;
use crate::imu::{corrupt, ImuSample, NoiseRng};
use crate::ingest::{
    self, synth_maneuver, synth_stationary, IngestError, ManeuverProfile, PoseSample, UdpSource,
};
use crate::kinematics::Kinematics;
use crate::output;
use crate::verifier::{run_closed_loop, ClosedLoopConfig, ErrorReport, VerifierError};

/// Distinct RNG streams are derived from the run seed with fixed salts so
/// the parameter draws, measurement noise and aiding noise never share a
/// generator prefix.
pub const NOISE_STREAM_SALT: u64 = 0x6e6f_6973_65;
pub const AIDING_STREAM_SALT: u64 = 0x6169_6469_6e67;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Chain(#[from] crate::gimbal::ChainError),
    #[error(transparent)]
    Kinematics(#[from] crate::kinematics::KinematicsError),
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown scenario {0:?}; expected pan, tilt or ptr-takeoff")]
    UnknownScenario(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The simulated streams of one run.
pub struct SimData {
    /// Validated platform poses (input to the chain), N samples.
    pub platform: Vec<PoseSample>,
    /// Ground-truth IMU-frame poses, N-1 samples.
    pub truth: Vec<PoseSample>,
    /// Corrupted IMU output, N-2 samples.
    pub imu: Vec<ImuSample>,
}

/// Builds the platform pose stream according to the trajectory config.
/// Synthetic sources generate; file sources read and validate; UDP sources
/// listen until the configured duration of samples arrived (or idle timeout).
pub fn load_platform_poses(cfg: &RunConfig) -> Result<Vec<PoseSample>, PipelineError> {
    let t = &cfg.trajectory;
    let start = GeodeticPosition::new(
        t.lat_deg.to_radians(),
        t.lon_deg.to_radians(),
        t.alt_m,
    )
    .map_err(|e| IngestError::BadProfile(e.to_string()))?;
    let poses = match t.source {
        SourceKind::Synthetic => {
            let rate = cfg.stream.rate_hz;
            match t.profile {
                ProfileKind::Stationary => synth_stationary(
                    start,
                    EulerAngles::new(
                        t.attitude_rpy_rad[0],
                        t.attitude_rpy_rad[1],
                        t.attitude_rpy_rad[2],
                    ),
                    t.duration_s,
                    rate,
                ),
                ProfileKind::Straight => synth_maneuver(
                    &ManeuverProfile::Straight {
                        speed: t.speed_mps,
                        heading: t.heading_deg.to_radians(),
                    },
                    start,
                    t.duration_s,
                    rate,
                )?,
                ProfileKind::Climb => synth_maneuver(
                    &ManeuverProfile::Climb {
                        speed: t.speed_mps,
                        heading: t.heading_deg.to_radians(),
                        climb_rate: t.climb_mps,
                    },
                    start,
                    t.duration_s,
                    rate,
                )?,
                ProfileKind::Turn => synth_maneuver(
                    &ManeuverProfile::CoordinatedTurn {
                        speed: t.speed_mps,
                        radius: t.turn_radius_m,
                        heading: t.heading_deg.to_radians(),
                        left: t.turn_left,
                        climb_rate: t.climb_mps,
                    },
                    start,
                    t.duration_s,
                    rate,
                )?,
            }
        }
        SourceKind::File => {
            let path = t.file.as_ref().expect("validated by config");
            ingest::read_trajectory_file(path, &cfg.stream)?
        }
        SourceKind::Udp => {
            let max = (t.duration_s * cfg.stream.rate_hz).round() as usize + 1;
            let (rx, handle) = ingest::listen_udp(
                t.port,
                cfg.stream.clone(),
                ingest::UdpOptions {
                    idle_timeout: Duration::from_secs(5),
                    max_samples: Some(max),
                },
            )?;
            let samples: Vec<_> = rx.into_iter().collect();
            let _ = handle.join();
            samples
        }
    };
    Ok(ingest::validate_all(poses, &cfg.stream)?)
}

/// Runs chain + kinematics + error model over a validated pose stream.
pub fn simulate_streams(
    cfg: &RunConfig,
    platform: Vec<PoseSample>,
) -> Result<SimData, PipelineError> {
    let params = cfg.imu.resolve(cfg.seed)?;
    let mut chain = GimbalChain::new(cfg.gimbal.clone())?;
    let mut kin = Kinematics::new();
    let mut noise = NoiseRng::from_seed(cfg.seed ^ NOISE_STREAM_SALT);
    let mut truth = Vec::with_capacity(platform.len());
    let mut imu = Vec::with_capacity(platform.len());
    for pose in &platform {
        if let Some(pose_b1) = chain.step(pose)? {
            if let Some(t) = kin.step(&pose_b1)? {
                imu.push(corrupt(&t, &params, &mut noise));
            }
            truth.push(pose_b1);
        }
    }
    Ok(SimData {
        platform,
        truth,
        imu,
    })
}

/// Checksum of the input trajectory file, when the source is a file.
fn input_checksum(cfg: &RunConfig) -> Result<Option<String>, PipelineError> {
    if cfg.trajectory.source == SourceKind::File {
        let path = cfg.trajectory.file.as_ref().expect("validated by config");
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        return Ok(Some(output::sha256_hex(&bytes)));
    }
    Ok(None)
}

fn write_manifest(cfg: &RunConfig, out_dir: &Path) -> Result<(), PipelineError> {
    let params = cfg.imu.resolve(cfg.seed)?;
    let manifest = crate::config::render_manifest(
        cfg,
        &params,
        env!("CARGO_PKG_VERSION"),
        input_checksum(cfg)?.as_deref(),
    );
    let path = out_dir.join("manifest.txt");
    std::fs::write(&path, manifest).map_err(io_err(&path))
}

/// Files produced by one simulate run.
pub struct SimulateSummary {
    pub platform_samples: usize,
    pub truth_samples: usize,
    pub imu_samples: usize,
    pub out_dir: PathBuf,
}

/// `simulate`: generate the IMU signal files for the configured run.
/// Writes imu.csv, truth.csv (IMU frame), platform.csv and manifest.txt.
pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<SimulateSummary, PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let poses = load_platform_poses(cfg)?;
    let data = simulate_streams(cfg, poses)?;
    let imu_path = out_dir.join("imu.csv");
    output::write_imu_csv(&imu_path, &data.imu).map_err(io_err(&imu_path))?;
    let truth_path = out_dir.join("truth.csv");
    output::write_pose_csv(&truth_path, &data.truth).map_err(io_err(&truth_path))?;
    let platform_path = out_dir.join("platform.csv");
    output::write_pose_csv(&platform_path, &data.platform).map_err(io_err(&platform_path))?;
    write_manifest(cfg, out_dir)?;
    Ok(SimulateSummary {
        platform_samples: data.platform.len(),
        truth_samples: data.truth.len(),
        imu_samples: data.imu.len(),
        out_dir: out_dir.to_path_buf(),
    })
}

/// Adjusts a base config to one of the unit-test scenarios:
///
/// * `pan` / `tilt`: stationary platform, the single driven axis keeps its
///   default profile, the other amplitudes are zeroed. The pan scenario
///   swings the tilt-roll lever arm perpendicular to the pan axis so the IMU
///   origin sweeps a circle and the centripetal/tangential specific-force
///   signature shows up alongside the rotation-rate sinusoid.
/// * `ptr-takeoff`: all three profiles active on a climbing trajectory.
pub fn scenario_config(name: &str, base: &RunConfig) -> Result<RunConfig, PipelineError> {
    let mut cfg = base.clone();
    cfg.gimbal.enabled = true;
    cfg.imu.enabled = false; // truth signals; scenarios inspect clean shapes
    cfg.trajectory.source = SourceKind::Synthetic;
    match name {
        "pan" => {
            cfg.run_id = "scenario-pan".into();
            cfg.trajectory.profile = ProfileKind::Stationary;
            cfg.trajectory.duration_s = 30.0;
            cfg.gimbal.profiles[1].amplitude = 0.0;
            cfg.gimbal.profiles[2].amplitude = 0.0;
            // perpendicular arm: the pan swing translates the IMU
            cfg.gimbal.levers[1] = nalgebra::Vector3::new(0.1, 0.0, 0.0);
        }
        "tilt" => {
            cfg.run_id = "scenario-tilt".into();
            cfg.trajectory.profile = ProfileKind::Stationary;
            cfg.trajectory.duration_s = 30.0;
            cfg.gimbal.profiles[0].amplitude = 0.0;
            cfg.gimbal.profiles[2].amplitude = 0.0;
        }
        "ptr-takeoff" => {
            cfg.run_id = "scenario-ptr-takeoff".into();
            cfg.trajectory.profile = ProfileKind::Climb;
            cfg.trajectory.duration_s = 60.0;
            cfg.trajectory.speed_mps = 60.0;
            cfg.trajectory.climb_mps = 5.0;
        }
        other => return Err(PipelineError::UnknownScenario(other.to_string())),
    }
    Ok(cfg)
}

/// `scenario`: run one of the named unit-test scenarios.
pub fn cmd_scenario(
    name: &str,
    base: &RunConfig,
    out_dir: &Path,
) -> Result<SimulateSummary, PipelineError> {
    let cfg = scenario_config(name, base)?;
    cmd_simulate(&cfg, out_dir)
}

/// Result of a verify run: the error report and whether all thresholds held.
pub struct VerifySummary {
    pub report: ErrorReport,
    pub passed: bool,
    pub summary_text: String,
}

/// `verify`: closed-loop re-integration against ground truth.
/// Writes errors.csv, summary.txt and manifest.txt; `passed` reflects the
/// configured RMSE thresholds.
pub fn cmd_verify(cfg: &RunConfig, out_dir: &Path) -> Result<VerifySummary, PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let poses = load_platform_poses(cfg)?;
    let params = cfg.imu.resolve(cfg.seed)?;
    let cl = ClosedLoopConfig {
        aiding_rate_hz: cfg.aiding.enabled.then_some(cfg.aiding.rate_hz),
        sigma_pos: cfg.aiding.sigma_pos_m,
        sigma_vel: cfg.aiding.sigma_vel_mps,
        mode: cfg.aiding.mode,
        settle_s: cfg.verify.settle_s,
        aiding_seed: cfg.seed ^ AIDING_STREAM_SALT,
        noise_seed: cfg.seed ^ NOISE_STREAM_SALT,
    };
    let run = run_closed_loop(&poses, &cfg.gimbal, &params, &cl)?;
    let errors_path = out_dir.join("errors.csv");
    output::write_errors_csv(&errors_path, &run.report).map_err(io_err(&errors_path))?;
    let summary_text = output::render_summary(&run.report, &cfg.verify);
    let summary_path = out_dir.join("summary.txt");
    std::fs::write(&summary_path, &summary_text).map_err(io_err(&summary_path))?;
    write_manifest(cfg, out_dir)?;
    Ok(VerifySummary {
        passed: output::summary_passes(&run.report, &cfg.verify),
        report: run.report,
        summary_text,
    })
}

/// Statistics of a capture session.
pub struct IngestSummary {
    pub received: usize,
    pub dropped: usize,
    pub validated: usize,
    pub raw_path: PathBuf,
    pub capture_path: PathBuf,
}

/// `ingest`: record a live UDP feed. Every datagram is appended verbatim to
/// capture_raw.log; well-formed records are additionally written to
/// capture.csv, which replays through the file source byte-for-byte.
pub fn cmd_ingest(
    port: u16,
    duration: Duration,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<IngestSummary, PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut source = UdpSource::bind(port, cfg.stream.clone(), Duration::from_millis(500))?;
    let deadline = std::time::Instant::now() + duration;
    let mut raw = Vec::new();
    let mut good = Vec::new();
    let mut received = 0usize;
    let mut dropped = 0usize;
    while std::time::Instant::now() < deadline {
        match source.recv() {
            Some((bytes, parsed)) => {
                raw.extend_from_slice(&bytes);
                if !bytes.ends_with(b"\n") {
                    raw.push(b'\n');
                }
                match parsed {
                    Ok(_) => {
                        received += 1;
                        good.extend_from_slice(&bytes);
                        if !bytes.ends_with(b"\n") {
                            good.push(b'\n');
                        }
                    }
                    Err(_) => dropped += 1,
                }
            }
            None => continue,
        }
    }
    let raw_path = out_dir.join("capture_raw.log");
    std::fs::write(&raw_path, &raw).map_err(io_err(&raw_path))?;
    let capture_path = out_dir.join("capture.csv");
    std::fs::write(&capture_path, &good).map_err(io_err(&capture_path))?;
    let validated = ingest::parse_trajectory_text(&good, &cfg.stream)
        .map(|v| v.len())
        .unwrap_or(0);
    Ok(IngestSummary {
        received,
        dropped,
        validated,
        raw_path,
        capture_path,
    })
}

/// Thresholded verify used by the CLI exit status.
pub fn verify_thresholds(report: &ErrorReport, thresholds: &VerifyConfig) -> bool {
    output::summary_passes(report, thresholds)
}
