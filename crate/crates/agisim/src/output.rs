//! Deterministic output writing: CSV files with a byte-stable numeric format
//! and the summary table for verification runs.
//!
//! Numbers are written as 17-significant-digit scientific decimals with a
//! '.' radix and '\n' line ends, so identical runs produce byte-identical
//! files on every platform.

use std::io::{self, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::config::VerifyConfig;
use crate::imu::ImuSample;
use crate::ingest::PoseSample;
use crate::verifier::ErrorReport;

/// 17 significant digits: one leading digit plus 16 after the point.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_row(w: &mut impl Write, values: &[f64]) -> io::Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            w.write_all(b",")?;
        }
        w.write_all(format_float(*v).as_bytes())?;
        first = false;
    }
    w.write_all(b"\n")
}

pub const IMU_HEADER: &str = "t,dt,fx,fy,fz,wx,wy,wz,dvx,dvy,dvz,dthx,dthy,dthz";
pub const POSE_HEADER: &str = "t,lat,lon,alt,vN,vE,vD,roll,pitch,yaw";
pub const ERRORS_HEADER: &str = "t,pos_n,pos_e,pos_d,vel_n,vel_e,vel_d,heading";

/// Writes the IMU sample stream (`imu.csv` layout).
pub fn write_imu_csv(path: &Path, samples: &[ImuSample]) -> io::Result<()> {
    let mut w = io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{IMU_HEADER}")?;
    for s in samples {
        write_row(
            &mut w,
            &[
                s.t, s.dt, s.f.x, s.f.y, s.f.z, s.omega.x, s.omega.y, s.omega.z, s.dv.x, s.dv.y,
                s.dv.z, s.dtheta.x, s.dtheta.y, s.dtheta.z,
            ],
        )?;
    }
    w.flush()
}

/// Writes a pose stream (`truth.csv` / `platform.csv` layout); angles in
/// radians, altitude in meters.
pub fn write_pose_csv(path: &Path, poses: &[PoseSample]) -> io::Result<()> {
    let mut w = io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{POSE_HEADER}")?;
    for p in poses {
        write_row(
            &mut w,
            &[
                p.t,
                p.pos.lat,
                p.pos.lon,
                p.pos.alt,
                p.vel_n.x,
                p.vel_n.y,
                p.vel_n.z,
                p.att.roll,
                p.att.pitch,
                p.att.yaw,
            ],
        )?;
    }
    w.flush()
}

/// Writes the per-epoch error series (`errors.csv` layout).
pub fn write_errors_csv(path: &Path, report: &ErrorReport) -> io::Result<()> {
    let mut w = io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{ERRORS_HEADER}")?;
    for e in &report.epochs {
        write_row(
            &mut w,
            &[
                e.t,
                e.pos_ned.x,
                e.pos_ned.y,
                e.pos_ned.z,
                e.vel_ned.x,
                e.vel_ned.y,
                e.vel_ned.z,
                e.heading,
            ],
        )?;
    }
    w.flush()
}

/// Renders the RMSE summary table with pass/fail status per channel group.
pub fn render_summary(report: &ErrorReport, thresholds: &VerifyConfig) -> String {
    let r = &report.rmse;
    let pos_ok = r.pos.x < thresholds.max_pos_rmse_m
        && r.pos.y < thresholds.max_pos_rmse_m
        && r.pos.z < thresholds.max_pos_rmse_m;
    let vel_ok = r.vel.x < thresholds.max_vel_rmse_mps
        && r.vel.y < thresholds.max_vel_rmse_mps
        && r.vel.z < thresholds.max_vel_rmse_mps;
    let head_ok = r.heading * 1e3 < thresholds.max_heading_rmse_mrad;
    let status = |ok: bool| if ok { "PASS" } else { "FAIL" };
    format!(
        "navigation estimation errors (RMSE), settle window {:.1} s, {} epochs, {} resets ({} stale fixes skipped)\n\
         channel     heading_mrad  pos_N_m   pos_E_m   pos_D_m   vel_N_mps  vel_E_mps  vel_D_mps\n\
         rmse        {:<13.4}{:<10.4}{:<10.4}{:<10.4}{:<11.4}{:<11.4}{:<10.4}\n\
         threshold   {:<13.4}{:<10.4}{:<10.4}{:<10.4}{:<11.4}{:<11.4}{:<10.4}\n\
         status      {:<13}{:<10}{:<10}{:<10}{:<11}{:<11}{:<10}\n",
        report.settle_s,
        report.epochs.len(),
        report.aiding_resets,
        report.stale_aiding_skipped,
        r.heading * 1e3,
        r.pos.x,
        r.pos.y,
        r.pos.z,
        r.vel.x,
        r.vel.y,
        r.vel.z,
        thresholds.max_heading_rmse_mrad,
        thresholds.max_pos_rmse_m,
        thresholds.max_pos_rmse_m,
        thresholds.max_pos_rmse_m,
        thresholds.max_vel_rmse_mps,
        thresholds.max_vel_rmse_mps,
        thresholds.max_vel_rmse_mps,
        status(head_ok),
        status(pos_ok),
        status(pos_ok),
        status(pos_ok),
        status(vel_ok),
        status(vel_ok),
        status(vel_ok),
    )
}

/// True when every RMSE channel is under its threshold.
pub fn summary_passes(report: &ErrorReport, thresholds: &VerifyConfig) -> bool {
    let r = &report.rmse;
    r.pos.amax() < thresholds.max_pos_rmse_m
        && r.vel.amax() < thresholds.max_vel_rmse_mps
        && r.heading * 1e3 < thresholds.max_heading_rmse_mrad
}

/// SHA-256 of a byte buffer, lowercase hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verifier::{EpochError, RmseSummary};
    use nalgebra::Vector3;

    #[test]
    fn float_format_is_17_digits_and_round_trips() {
        for v in [
            0.0,
            1.0,
            -9.80665,
            0.6108652381980153,
            1.458423e-6,
            6378137.0,
            f64::MIN_POSITIVE,
        ] {
            let s = format_float(v);
            assert!(s.contains('e'));
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "{s} did not round trip");
        }
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn summary_states_pass_and_fail() {
        let report = ErrorReport {
            epochs: vec![EpochError {
                t: 0.0,
                pos_ned: Vector3::zeros(),
                vel_ned: Vector3::zeros(),
                heading: 0.0,
            }],
            rmse: RmseSummary {
                heading: 0.003,
                pos: Vector3::new(0.5, 2.0, 1.0),
                vel: Vector3::new(0.03, 0.1, 0.08),
            },
            settle_s: 5.0,
            aiding_resets: 10,
            stale_aiding_skipped: 0,
        };
        let thr = VerifyConfig::default();
        assert!(summary_passes(&report, &thr));
        let text = render_summary(&report, &thr);
        assert!(text.contains("PASS"));
        assert!(!text.contains("FAIL"));

        let mut bad = report.clone();
        bad.rmse.pos.y = 7.0;
        assert!(!summary_passes(&bad, &thr));
        assert!(render_summary(&bad, &thr).contains("FAIL"));
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
