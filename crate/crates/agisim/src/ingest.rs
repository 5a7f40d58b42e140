//! Trajectory ingestion: a validated, time-ordered stream of platform-body
//! pose samples from a UDP telemetry feed, a trajectory file, or synthetic
//! generators.
//!
//! The wire format is one ASCII CSV record per datagram (or per file line),
//! newline-terminated, with a configurable column mapping. The default
//! mapping matches a flight-dynamics logger emitting
//! `time_s, lat_deg, lon_deg, alt_m, vN_mps, vE_mps, vD_mps, roll_rad,
//! pitch_rad, yaw_rad` at 50 Hz.

use std::io::Read;
use std::net::UdpSocket;
use std::path::Path;
use std::sync::mpsc;
use std::time::Duration;

use nalgebra::Vector3;
use thiserror::Error;

use crate::geodesy::{self, EulerAngles, GeodeticPosition};

/// Feet-to-meters conversion for feeds that log altitude in feet.
const FT_TO_M: f64 = 0.3048;
/// Largest datagram the reader will accept.
pub const MAX_DATAGRAM: usize = 64 * 1024;
/// Default UDP port for the telemetry feed.
pub const DEFAULT_PORT: u16 = 5138;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed record: expected {expected} fields, found {found}")]
    MalformedRecord { expected: usize, found: usize },
    #[error("field {field} at byte offset {offset}: not a number ({text:?})")]
    ParseField {
        field: usize,
        offset: usize,
        text: String,
    },
    #[error("field {field} at byte offset {offset}: {reason}")]
    Validation {
        field: usize,
        offset: usize,
        reason: String,
    },
    #[error("record too large ({0} bytes)")]
    OversizedRecord(usize),
    #[error("{path}:{line}: {source}")]
    AtLine {
        path: String,
        line: usize,
        #[source]
        source: Box<IngestError>,
    },
    #[error("non-monotonic time at sample {index}: {t_prev} -> {t}")]
    NonMonotonicTime { index: usize, t_prev: f64, t: f64 },
    #[error("sample interval out of band at sample {index}: measured dt {measured_dt}, nominal {nominal_dt} +/- {tolerance:.0}%")]
    GapError {
        index: usize,
        measured_dt: f64,
        nominal_dt: f64,
        tolerance: f64,
    },
    #[error("cannot bind UDP port {port}: {source}")]
    Bind {
        port: u16,
        #[source]
        source: std::io::Error,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("inconsistent generator parameters: {0}")]
    BadProfile(String),
    #[error(transparent)]
    Geodesy(#[from] geodesy::GeodesyError),
}

/// One timestamped pose of a frame relative to local NED.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSample {
    /// Monotonic simulation time, seconds.
    pub t: f64,
    pub pos: GeodeticPosition,
    /// Velocity in the local NED frame, m/s.
    pub vel_n: Vector3<f64>,
    /// Attitude of the body relative to NED.
    pub att: EulerAngles,
}

/// Record fields the column mapping can refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldId {
    Time,
    Lat,
    Lon,
    Alt,
    VelN,
    VelE,
    VelD,
    Roll,
    Pitch,
    Yaw,
}

/// Source selector plus record-format and rate contract for a pose stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    /// Nominal sample rate, Hz.
    pub rate_hz: f64,
    /// Allowed deviation of each measured dt from 1/rate, as a fraction.
    pub dt_tolerance: f64,
    /// Order of fields in a record.
    pub columns: Vec<FieldId>,
    /// Latitude/longitude fields are degrees (true) or radians.
    pub latlon_degrees: bool,
    /// Attitude fields are degrees (true) or radians.
    pub attitude_degrees: bool,
    /// Altitude field is feet (true) or meters.
    pub altitude_feet: bool,
    /// Constant offset added to altitude (for feeds that log MSL height).
    pub alt_offset_m: f64,
    /// Airborne sanity bound on |vel|, m/s.
    pub max_speed: f64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            rate_hz: 50.0,
            dt_tolerance: 0.1,
            columns: vec![
                FieldId::Time,
                FieldId::Lat,
                FieldId::Lon,
                FieldId::Alt,
                FieldId::VelN,
                FieldId::VelE,
                FieldId::VelD,
                FieldId::Roll,
                FieldId::Pitch,
                FieldId::Yaw,
            ],
            latlon_degrees: true,
            attitude_degrees: false,
            altitude_feet: false,
            alt_offset_m: 0.0,
            max_speed: 400.0,
        }
    }
}

/// Parses one ASCII CSV record into a pose sample with units normalized to
/// radians/meters/seconds. Total on arbitrary input: every failure mode is an
/// error carrying the byte offset and field index, never a panic.
pub fn parse_fdm_datagram(payload: &[u8], cfg: &StreamConfig) -> Result<PoseSample, IngestError> {
    if payload.len() > MAX_DATAGRAM {
        return Err(IngestError::OversizedRecord(payload.len()));
    }
    let record = strip_newline(payload);
    let expected = cfg.columns.len();

    let parts: Vec<&[u8]> = record.split(|&b| b == b',').collect();
    if parts.len() != expected {
        return Err(IngestError::MalformedRecord {
            expected,
            found: parts.len(),
        });
    }
    let mut values = vec![0.0f64; expected];
    let mut offset = 0usize;
    for (i, part) in parts.iter().enumerate() {
        let text = std::str::from_utf8(part)
            .map(str::trim)
            .unwrap_or("<non-utf8>");
        let v: f64 = text.parse().map_err(|_| IngestError::ParseField {
            field: i,
            offset,
            text: text.chars().take(32).collect(),
        })?;
        if !v.is_finite() {
            return Err(IngestError::Validation {
                field: i,
                offset,
                reason: format!("non-finite value {v}"),
            });
        }
        values[i] = v;
        offset += part.len() + 1;
    }

    let mut t = 0.0;
    let (mut lat, mut lon, mut alt) = (0.0, 0.0, 0.0);
    let mut vel = Vector3::zeros();
    let mut att = EulerAngles::default();
    for (i, field) in cfg.columns.iter().enumerate() {
        let v = values[i];
        match field {
            FieldId::Time => t = v,
            FieldId::Lat => lat = if cfg.latlon_degrees { v.to_radians() } else { v },
            FieldId::Lon => lon = if cfg.latlon_degrees { v.to_radians() } else { v },
            FieldId::Alt => {
                alt = if cfg.altitude_feet { v * FT_TO_M } else { v } + cfg.alt_offset_m
            }
            FieldId::VelN => vel.x = v,
            FieldId::VelE => vel.y = v,
            FieldId::VelD => vel.z = v,
            FieldId::Roll => att.roll = if cfg.attitude_degrees { v.to_radians() } else { v },
            FieldId::Pitch => att.pitch = if cfg.attitude_degrees { v.to_radians() } else { v },
            FieldId::Yaw => att.yaw = if cfg.attitude_degrees { v.to_radians() } else { v },
        }
    }

    let invalid = |field: FieldId, reason: String| {
        let field = cfg.columns.iter().position(|f| *f == field).unwrap_or(0);
        IngestError::Validation {
            field,
            offset: 0,
            reason,
        }
    };
    let pos = GeodeticPosition::new(lat, lon, alt).map_err(|e| match e {
        geodesy::GeodesyError::LatitudeOutOfRange(_) => invalid(FieldId::Lat, e.to_string()),
        geodesy::GeodesyError::AltitudeOutOfRange(_) => invalid(FieldId::Alt, e.to_string()),
        _ => invalid(FieldId::Lon, e.to_string()),
    })?;
    if att.pitch.abs() > std::f64::consts::FRAC_PI_2 {
        return Err(invalid(
            FieldId::Pitch,
            format!("pitch {} outside [-pi/2, pi/2]", att.pitch),
        ));
    }
    if vel.norm() >= cfg.max_speed {
        return Err(invalid(
            FieldId::VelN,
            format!("speed {} exceeds bound {}", vel.norm(), cfg.max_speed),
        ));
    }
    Ok(PoseSample {
        t,
        pos,
        vel_n: vel,
        att,
    })
}

fn strip_newline(payload: &[u8]) -> &[u8] {
    let payload = payload.strip_suffix(b"\n").unwrap_or(payload);
    payload.strip_suffix(b"\r").unwrap_or(payload)
}

/// Reads a trajectory file in the datagram record format, one record per
/// line, skipping '#' comment lines and blank lines. Errors carry the 1-based
/// line number. An empty file is an empty stream, not an error.
pub fn read_trajectory_file(
    path: impl AsRef<Path>,
    cfg: &StreamConfig,
) -> Result<Vec<PoseSample>, IngestError> {
    let path = path.as_ref();
    let mut text = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut text)?;
    parse_trajectory_text(&text, cfg).map_err(|(line, e)| IngestError::AtLine {
        path: path.display().to_string(),
        line,
        source: Box::new(e),
    })
}

/// Parses in-memory trajectory text; on failure returns the 1-based line
/// number together with the record error.
pub fn parse_trajectory_text(
    text: &[u8],
    cfg: &StreamConfig,
) -> Result<Vec<PoseSample>, (usize, IngestError)> {
    let mut samples = Vec::new();
    for (idx, line) in text.split(|&b| b == b'\n').enumerate() {
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        let trimmed: &[u8] = trim_ascii(line);
        if trimmed.is_empty() || trimmed[0] == b'#' {
            continue;
        }
        let sample = parse_fdm_datagram(trimmed, cfg).map_err(|e| (idx + 1, e))?;
        samples.push(sample);
    }
    Ok(samples)
}

fn trim_ascii(mut s: &[u8]) -> &[u8] {
    while let Some((first, rest)) = s.split_first() {
        if first.is_ascii_whitespace() {
            s = rest;
        } else {
            break;
        }
    }
    while let Some((last, rest)) = s.split_last() {
        if last.is_ascii_whitespace() {
            s = rest;
        } else {
            break;
        }
    }
    s
}

/// Iterator adapter enforcing strictly increasing timestamps and a bounded
/// sample interval. The first out-of-contract sample yields an error and the
/// stream ends.
pub fn validate_stream<I>(samples: I, cfg: &StreamConfig) -> Validated<I::IntoIter>
where
    I: IntoIterator<Item = PoseSample>,
{
    Validated {
        inner: samples.into_iter(),
        nominal_dt: 1.0 / cfg.rate_hz,
        tolerance: cfg.dt_tolerance,
        prev_t: None,
        index: 0,
        done: false,
    }
}

pub struct Validated<I> {
    inner: I,
    nominal_dt: f64,
    tolerance: f64,
    prev_t: Option<f64>,
    index: usize,
    done: bool,
}

impl<I: Iterator<Item = PoseSample>> Iterator for Validated<I> {
    type Item = Result<PoseSample, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let sample = self.inner.next()?;
        let index = self.index;
        self.index += 1;
        if let Some(prev) = self.prev_t {
            if sample.t <= prev {
                self.done = true;
                return Some(Err(IngestError::NonMonotonicTime {
                    index,
                    t_prev: prev,
                    t: sample.t,
                }));
            }
            let dt = sample.t - prev;
            if (dt - self.nominal_dt).abs() > self.tolerance * self.nominal_dt {
                self.done = true;
                return Some(Err(IngestError::GapError {
                    index,
                    measured_dt: dt,
                    nominal_dt: self.nominal_dt,
                    tolerance: self.tolerance * 100.0,
                }));
            }
        }
        self.prev_t = Some(sample.t);
        Some(Ok(sample))
    }
}

/// Collects and validates a whole stream; convenience for the batch pipeline.
pub fn validate_all(
    samples: impl IntoIterator<Item = PoseSample>,
    cfg: &StreamConfig,
) -> Result<Vec<PoseSample>, IngestError> {
    validate_stream(samples, cfg).collect()
}

/// Options for the UDP listener.
#[derive(Debug, Clone)]
pub struct UdpOptions {
    /// Stop after this long without a datagram.
    pub idle_timeout: Duration,
    /// Stop after this many accepted samples.
    pub max_samples: Option<usize>,
}

impl Default for UdpOptions {
    fn default() -> Self {
        Self {
            idle_timeout: Duration::from_secs(5),
            max_samples: None,
        }
    }
}

/// Counters reported when a UDP session ends.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UdpStats {
    pub received: usize,
    pub dropped: usize,
}

/// Blocking single-socket datagram reader; [`listen_udp`] wraps it in a
/// thread, and the capture command drives it directly to record raw bytes.
pub struct UdpSource {
    socket: UdpSocket,
    cfg: StreamConfig,
    idle_timeout: Duration,
    buf: Vec<u8>,
}

impl UdpSource {
    pub fn bind(port: u16, cfg: StreamConfig, idle_timeout: Duration) -> Result<Self, IngestError> {
        let socket = UdpSocket::bind(("0.0.0.0", port))
            .map_err(|source| IngestError::Bind { port, source })?;
        socket.set_read_timeout(Some(idle_timeout))?;
        Ok(Self {
            socket,
            cfg,
            idle_timeout,
            buf: vec![0u8; MAX_DATAGRAM],
        })
    }

    /// The port actually bound (useful when binding port 0 in tests).
    pub fn local_port(&self) -> u16 {
        self.socket.local_addr().map(|a| a.port()).unwrap_or(0)
    }

    /// Receives one datagram; `None` on idle timeout.
    pub fn recv(&mut self) -> Option<(Vec<u8>, Result<PoseSample, IngestError>)> {
        match self.socket.recv_from(&mut self.buf) {
            Ok((n, _peer)) => {
                let raw = self.buf[..n].to_vec();
                let parsed = parse_fdm_datagram(&raw, &self.cfg);
                Some((raw, parsed))
            }
            Err(e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                None
            }
            Err(_) => None,
        }
    }

    pub fn idle_timeout(&self) -> Duration {
        self.idle_timeout
    }
}

/// Binds a UDP port and yields parsed samples in arrival order over a bounded
/// single-producer single-consumer channel (capacity 1024; a slow consumer
/// blocks the reader rather than dropping samples). Malformed datagrams are
/// counted and skipped. The session ends on idle timeout or the sample limit;
/// the join handle returns the final counters.
pub fn listen_udp(
    port: u16,
    cfg: StreamConfig,
    opts: UdpOptions,
) -> Result<
    (
        mpsc::Receiver<PoseSample>,
        std::thread::JoinHandle<UdpStats>,
    ),
    IngestError,
> {
    let mut source = UdpSource::bind(port, cfg, opts.idle_timeout)?;
    let (tx, rx) = mpsc::sync_channel::<PoseSample>(1024);
    let handle = std::thread::spawn(move || {
        let mut stats = UdpStats::default();
        while opts.max_samples.map_or(true, |m| stats.received < m) {
            match source.recv() {
                Some((_raw, Ok(sample))) => {
                    stats.received += 1;
                    if tx.send(sample).is_err() {
                        break;
                    }
                }
                Some((_raw, Err(_))) => stats.dropped += 1,
                None => break,
            }
        }
        stats
    });
    Ok((rx, handle))
}

/// Constant-pose stream: `duration * rate + 1` samples at `k / rate`, zero
/// velocity.
pub fn synth_stationary(
    location: GeodeticPosition,
    attitude: EulerAngles,
    duration: f64,
    rate: f64,
) -> Vec<PoseSample> {
    let n = (duration * rate).round() as usize;
    (0..=n)
        .map(|k| PoseSample {
            t: k as f64 / rate,
            pos: location,
            vel_n: Vector3::zeros(),
            att: attitude,
        })
        .collect()
}

/// Coordinated-flight maneuver profiles for the synthetic generator.
#[derive(Debug, Clone)]
pub enum ManeuverProfile {
    /// Constant-speed level flight on a fixed heading.
    Straight { speed: f64, heading: f64 },
    /// Constant-speed straight flight with a constant climb rate (m/s, up
    /// positive).
    Climb {
        speed: f64,
        heading: f64,
        climb_rate: f64,
    },
    /// Coordinated turn of a given radius; `left` selects the turn direction.
    /// A nonzero climb rate turns it into a climbing spiral.
    CoordinatedTurn {
        speed: f64,
        radius: f64,
        heading: f64,
        left: bool,
        climb_rate: f64,
    },
}

/// Generates a kinematically self-consistent pose stream: the emitted NED
/// velocity is the analytic profile velocity and positions are produced by
/// integrating it (RK4) on the ellipsoid, so finite-differenced positions
/// reproduce the velocity to well under 0.5% per step. Attitude follows the
/// velocity direction (coordinated flight).
pub fn synth_maneuver(
    profile: &ManeuverProfile,
    start: GeodeticPosition,
    duration: f64,
    rate: f64,
) -> Result<Vec<PoseSample>, IngestError> {
    if duration <= 0.0 || rate <= 0.0 {
        return Err(IngestError::BadProfile(format!(
            "duration {duration} s and rate {rate} Hz must be positive"
        )));
    }
    let (speed, heading0, yaw_rate, climb) = match *profile {
        ManeuverProfile::Straight { speed, heading } => (speed, heading, 0.0, 0.0),
        ManeuverProfile::Climb {
            speed,
            heading,
            climb_rate,
        } => (speed, heading, 0.0, climb_rate),
        ManeuverProfile::CoordinatedTurn {
            speed,
            radius,
            heading,
            left,
            climb_rate,
        } => {
            if radius <= 0.0 {
                return Err(IngestError::BadProfile(format!(
                    "turn radius {radius} m must be positive"
                )));
            }
            let rate = speed / radius * if left { -1.0 } else { 1.0 };
            (speed, heading, rate, climb_rate)
        }
    };
    if speed <= 0.0 {
        return Err(IngestError::BadProfile(format!(
            "speed {speed} m/s must be positive"
        )));
    }

    let dt = 1.0 / rate;
    let n = (duration * rate).round() as usize;
    let vel_at = |t: f64| {
        let chi = heading0 + yaw_rate * t;
        Vector3::new(speed * chi.cos(), speed * chi.sin(), -climb)
    };
    // attitude: yaw tracks the course, pitch the flight-path angle, roll the
    // coordinated bank angle
    let pitch = (climb / speed).atan();
    let bank = (speed * yaw_rate / 9.80665).atan();
    let att_at = |t: f64| {
        EulerAngles::new(
            bank,
            pitch,
            geodesy::normalize_lon(heading0 + yaw_rate * t),
        )
    };

    let deriv = |lla: &GeodeticPosition, v: &Vector3<f64>| -> Result<Vector3<f64>, IngestError> {
        let (r_n, r_e) = geodesy::radii_of_curvature(lla.lat)?;
        Ok(Vector3::new(
            v.x / (r_n + lla.alt),
            v.y / ((r_e + lla.alt) * lla.lat.cos()),
            -v.z,
        ))
    };

    let mut samples = Vec::with_capacity(n + 1);
    let mut lla = start;
    for k in 0..=n {
        let t = k as f64 * dt;
        samples.push(PoseSample {
            t,
            pos: lla,
            vel_n: vel_at(t),
            att: att_at(t),
        });
        if k == n {
            break;
        }
        // RK4 on d(lat,lon,alt)/dt with the analytic velocity
        let k1 = deriv(&lla, &vel_at(t))?;
        let mid1 = offset_lla(&lla, &(k1 * (dt / 2.0)));
        let k2 = deriv(&mid1, &vel_at(t + dt / 2.0))?;
        let mid2 = offset_lla(&lla, &(k2 * (dt / 2.0)));
        let k3 = deriv(&mid2, &vel_at(t + dt / 2.0))?;
        let end = offset_lla(&lla, &(k3 * dt));
        let k4 = deriv(&end, &vel_at(t + dt))?;
        let step = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        lla = offset_lla(&lla, &step);
    }
    Ok(samples)
}

fn offset_lla(p: &GeodeticPosition, d: &Vector3<f64>) -> GeodeticPosition {
    GeodeticPosition {
        lat: p.lat + d.x,
        lon: p.lon + d.y,
        alt: p.alt + d.z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_default_record() {
        let cfg = StreamConfig::default();
        let s = parse_fdm_datagram(b"0.02,35.0,52.0,1200.0,50,0,0,0,0.05,1.57\n", &cfg).unwrap();
        assert_eq!(s.t, 0.02);
        assert!((s.pos.lat - 0.6108652381980153).abs() < 1e-15);
        assert!((s.pos.lon - 52f64.to_radians()).abs() < 1e-15);
        assert_eq!(s.pos.alt, 1200.0);
        assert_eq!(s.vel_n, Vector3::new(50.0, 0.0, 0.0));
        assert_eq!(s.att.pitch, 0.05);
        assert_eq!(s.att.yaw, 1.57);
    }

    #[test]
    fn parse_wrong_field_count() {
        let cfg = StreamConfig::default();
        let e = parse_fdm_datagram(b"0.02,35.0,52.0,1200.0,50,0,0,0,0.05\n", &cfg).unwrap_err();
        assert!(matches!(
            e,
            IngestError::MalformedRecord {
                expected: 10,
                found: 9
            }
        ));
    }

    #[test]
    fn parse_non_numeric_field_reports_position() {
        let cfg = StreamConfig::default();
        let e = parse_fdm_datagram(b"0.02,35.0,banana,1200.0,50,0,0,0,0.05,1.57\n", &cfg)
            .unwrap_err();
        match e {
            IngestError::ParseField { field, offset, .. } => {
                assert_eq!(field, 2);
                assert_eq!(offset, 10);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_nan_and_bounds() {
        let cfg = StreamConfig::default();
        assert!(matches!(
            parse_fdm_datagram(b"0,35,52,NaN,0,0,0,0,0,0", &cfg),
            Err(IngestError::Validation { field: 3, .. })
        ));
        // latitude out of range
        assert!(parse_fdm_datagram(b"0,95,52,0,0,0,0,0,0,0", &cfg).is_err());
        // speed bound
        assert!(parse_fdm_datagram(b"0,35,52,0,500,0,0,0,0,0", &cfg).is_err());
    }

    #[test]
    fn parse_units() {
        let cfg = StreamConfig {
            attitude_degrees: true,
            altitude_feet: true,
            alt_offset_m: 10.0,
            ..StreamConfig::default()
        };
        let s = parse_fdm_datagram(b"0,0,0,1000,0,0,0,0,45,0", &cfg).unwrap();
        assert!((s.pos.alt - (1000.0 * 0.3048 + 10.0)).abs() < 1e-12);
        assert!((s.att.pitch - 45f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn parse_never_panics_on_garbage() {
        let cfg = StreamConfig::default();
        let cases: &[&[u8]] = &[
            b"",
            b"\n",
            b",,,,,,,,,",
            b"\xff\xfe\x00garbage",
            b"1e309,0,0,0,0,0,0,0,0,0",
            b"0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0",
            b"-,-,-,-,-,-,-,-,-,-",
        ];
        for c in cases {
            let _ = parse_fdm_datagram(c, &cfg);
        }
    }

    #[test]
    fn trajectory_text_basics() {
        let cfg = StreamConfig::default();
        let text = b"# a comment\n0.00,35,52,1200,0,0,0,0,0,0\n0.02,35,52,1200,0,0,0,0,0,0\n\n0.04,35,52,1200,0,0,0,0,0,0\n";
        let samples = parse_trajectory_text(text, &cfg).unwrap();
        assert_eq!(samples.len(), 3);
        assert!(parse_trajectory_text(b"", &cfg).unwrap().is_empty());
        let err = parse_trajectory_text(b"0,35,52,0,0,0,0,0,0,0\nbogus\n", &cfg).unwrap_err();
        assert_eq!(err.0, 2);
    }

    #[test]
    fn validate_contracts() {
        let cfg = StreamConfig::default();
        let mk = |t: f64| PoseSample {
            t,
            pos: GeodeticPosition::new(0.0, 0.0, 0.0).unwrap(),
            vel_n: Vector3::zeros(),
            att: EulerAngles::default(),
        };
        let ok: Vec<_> = validate_stream(vec![mk(0.0), mk(0.02), mk(0.04)], &cfg).collect();
        assert!(ok.iter().all(|r| r.is_ok()));

        let mut it = validate_stream(vec![mk(0.0), mk(0.02), mk(0.02)], &cfg);
        assert!(it.next().unwrap().is_ok());
        assert!(it.next().unwrap().is_ok());
        match it.next().unwrap() {
            Err(IngestError::NonMonotonicTime { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(it.next().is_none());

        let mut it = validate_stream(vec![mk(0.0), mk(0.02), mk(0.08)], &cfg);
        it.next();
        it.next();
        match it.next().unwrap() {
            Err(IngestError::GapError {
                index, measured_dt, ..
            }) => {
                assert_eq!(index, 2);
                assert!((measured_dt - 0.06).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stationary_counts_and_values() {
        let loc = GeodeticPosition::new(0.6, 0.9, 1200.0).unwrap();
        let samples = synth_stationary(loc, EulerAngles::default(), 60.0, 50.0);
        assert_eq!(samples.len(), 3001);
        assert!(samples.iter().all(|s| s.vel_n == Vector3::zeros()));
        assert!((samples[1].t - 0.02).abs() < 1e-15);
        assert_eq!(samples.last().unwrap().t, 60.0);
    }

    #[test]
    fn maneuver_straight_level() {
        let start = GeodeticPosition::new(0.0, 0.0, 1000.0).unwrap();
        let s = synth_maneuver(
            &ManeuverProfile::Straight {
                speed: 50.0,
                heading: 0.0,
            },
            start,
            10.0,
            50.0,
        )
        .unwrap();
        assert_eq!(s.len(), 501);
        for p in &s {
            assert_eq!(p.vel_n, Vector3::new(50.0, 0.0, 0.0));
            assert_eq!(p.att.yaw, 0.0);
        }
    }

    #[test]
    fn maneuver_turn_yaw_rate() {
        let start = GeodeticPosition::new(0.6, 0.9, 1000.0).unwrap();
        let s = synth_maneuver(
            &ManeuverProfile::CoordinatedTurn {
                speed: 50.0,
                radius: 500.0,
                heading: 0.0,
                left: false,
                climb_rate: 0.0,
            },
            start,
            10.0,
            50.0,
        )
        .unwrap();
        // yaw rate v/r = 0.1 rad/s
        let dyaw = s[1].att.yaw - s[0].att.yaw;
        assert!((dyaw / 0.02 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn maneuver_self_consistency() {
        let start = GeodeticPosition::new(0.6, 0.9, 1000.0).unwrap();
        for profile in [
            ManeuverProfile::Straight {
                speed: 60.0,
                heading: 0.7,
            },
            ManeuverProfile::Climb {
                speed: 60.0,
                heading: 0.7,
                climb_rate: 4.0,
            },
            ManeuverProfile::CoordinatedTurn {
                speed: 60.0,
                radius: 600.0,
                heading: 0.7,
                left: true,
                climb_rate: 2.0,
            },
        ] {
            let s = synth_maneuver(&profile, start, 20.0, 50.0).unwrap();
            for w in s.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let dt = b.t - a.t;
                let (r_n, r_e) = geodesy::radii_of_curvature(a.pos.lat).unwrap();
                let fd = Vector3::new(
                    (b.pos.lat - a.pos.lat) * (r_n + a.pos.alt) / dt,
                    (b.pos.lon - a.pos.lon) * (r_e + a.pos.alt) * a.pos.lat.cos() / dt,
                    -(b.pos.alt - a.pos.alt) / dt,
                );
                let mid = (a.vel_n + b.vel_n) / 2.0;
                assert!(
                    (fd - mid).norm() / mid.norm() < 0.005,
                    "profile {profile:?}: fd {fd:?} vs {mid:?}"
                );
            }
        }
    }

    #[test]
    fn maneuver_rejects_bad_params() {
        let start = GeodeticPosition::new(0.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            synth_maneuver(
                &ManeuverProfile::CoordinatedTurn {
                    speed: 50.0,
                    radius: -1.0,
                    heading: 0.0,
                    left: false,
                    climb_rate: 0.0
                },
                start,
                10.0,
                50.0
            ),
            Err(IngestError::BadProfile(_))
        ));
        assert!(synth_maneuver(
            &ManeuverProfile::Straight {
                speed: 0.0,
                heading: 0.0
            },
            start,
            10.0,
            50.0
        )
        .is_err());
    }

    #[test]
    fn udp_loopback_roundtrip() {
        let cfg = StreamConfig::default();
        let opts = UdpOptions {
            idle_timeout: Duration::from_millis(300),
            max_samples: None,
        };
        // bind an ephemeral port to keep tests parallel-safe
        let source = UdpSource::bind(0, cfg.clone(), opts.idle_timeout).unwrap();
        let port = source.local_port();
        drop(source);
        let (rx, handle) = listen_udp(port, cfg, opts).unwrap();

        let sender = UdpSocket::bind("127.0.0.1:0").unwrap();
        for k in 0..100 {
            let line = if k % 33 == 13 {
                // 3 corrupted datagrams at k = 13, 46, 79
                "this,is,not,telemetry\n".to_string()
            } else {
                format!("{:.2},35.0,52.0,1200.0,0,0,0,0,0,0\n", k as f64 * 0.02)
            };
            sender.send_to(line.as_bytes(), ("127.0.0.1", port)).unwrap();
            std::thread::sleep(Duration::from_micros(200));
        }
        let samples: Vec<_> = rx.into_iter().collect();
        let stats = handle.join().unwrap();
        assert_eq!(stats.received, 97);
        assert_eq!(stats.dropped, 3);
        assert_eq!(samples.len(), 97);
    }

    #[test]
    fn udp_out_of_order_passes_through() {
        let cfg = StreamConfig::default();
        let opts = UdpOptions {
            idle_timeout: Duration::from_millis(300),
            max_samples: Some(2),
        };
        let source = UdpSource::bind(0, cfg.clone(), opts.idle_timeout).unwrap();
        let port = source.local_port();
        drop(source);
        let (rx, handle) = listen_udp(port, cfg, opts).unwrap();
        let sender = UdpSocket::bind("127.0.0.1:0").unwrap();
        for line in ["0.04,35,52,0,0,0,0,0,0,0\n", "0.02,35,52,0,0,0,0,0,0,0\n"] {
            sender.send_to(line.as_bytes(), ("127.0.0.1", port)).unwrap();
            std::thread::sleep(Duration::from_millis(2));
        }
        let samples: Vec<_> = rx.into_iter().collect();
        handle.join().unwrap();
        // ordering is enforced by validate_stream, not the socket reader
        assert_eq!(samples.len(), 2);
        assert!(samples[0].t > samples[1].t);
    }
}
