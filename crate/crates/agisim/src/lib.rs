//! Gimbal-mounted airborne IMU signal simulator.
//!
//! The library turns a platform trajectory (UDP telemetry, a logged file, or a
//! synthetic generator) into ground-truth IMU signals for an IMU mounted on a
//! pan/tilt/roll gimbal, corrupts them with a configurable sensor error model,
//! and verifies the whole pipeline by strapdown re-integration against the
//! generated ground truth.
//!
//! Pipeline: [`ingest`] -> [`gimbal`] -> [`kinematics`] -> [`imu`] ->
//! [`verifier`], orchestrated by [`pipeline`] and configured through
//! [`config`].

pub mod config;
pub mod geodesy;
pub mod gimbal;
pub mod imu;
pub mod ingest;
pub mod kinematics;
pub mod output;
pub mod pipeline;
pub mod verifier;
