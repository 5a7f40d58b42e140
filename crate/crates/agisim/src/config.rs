//! Run configuration: a strict line-based `section.key = value` text format,
//! plus the run manifest that makes every run bitwise reproducible.
//!
//! Grammar: one assignment per line, `#` starts a comment, keys are dotted
//! paths, values are numbers, bare or double-quoted strings, booleans, or
//! bracketed numeric triples `[a, b, c]`. Unknown keys are rejected with
//! their line number; there are no silent defaults for misspelled keys.
//! When a key is assigned twice the last assignment wins.
//!
//! An empty config is a complete, valid run: every parameter carries the
//! default gimbal geometry/profiles and sensor error model.

use std::path::PathBuf;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::geodesy::EulerAngles;
use crate::gimbal::GimbalConfig;
use crate::imu::ImuErrorParams;
use crate::ingest::StreamConfig;
use crate::verifier::ResetMode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} expects {expected}, got {got}")]
    TypeMismatch {
        line: usize,
        key: String,
        expected: &'static str,
        got: String,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: key {key:?}: {msg}")]
    BadValue {
        line: usize,
        key: String,
        msg: String,
    },
    #[error("invalid configuration: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Trajectory source selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Synthetic,
    File,
    Udp,
}

/// Synthetic profile selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Stationary,
    Straight,
    Climb,
    Turn,
}

/// Trajectory source parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub source: SourceKind,
    pub file: Option<PathBuf>,
    pub port: u16,
    pub duration_s: f64,
    pub profile: ProfileKind,
    /// Start position: latitude/longitude in degrees, altitude in meters.
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
    /// Stationary attitude (roll, pitch, yaw), radians.
    pub attitude_rpy_rad: [f64; 3],
    pub speed_mps: f64,
    pub heading_deg: f64,
    pub climb_mps: f64,
    pub turn_radius_m: f64,
    pub turn_left: bool,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            source: SourceKind::Synthetic,
            file: None,
            port: crate::ingest::DEFAULT_PORT,
            duration_s: 60.0,
            profile: ProfileKind::Stationary,
            lat_deg: 35.0,
            lon_deg: 52.0,
            alt_m: 1200.0,
            attitude_rpy_rad: [0.0; 3],
            speed_mps: 50.0,
            heading_deg: 0.0,
            climb_mps: 0.0,
            turn_radius_m: 600.0,
            turn_left: true,
        }
    }
}

/// Aiding sensor parameters for the closed-loop verifier.
#[derive(Debug, Clone, PartialEq)]
pub struct AidingConfig {
    pub enabled: bool,
    pub rate_hz: f64,
    pub sigma_pos_m: f64,
    pub sigma_vel_mps: f64,
    pub mode: ResetMode,
}

impl Default for AidingConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            rate_hz: 1.0,
            sigma_pos_m: 2.0,
            sigma_vel_mps: 0.1,
            mode: ResetMode::Hard,
        }
    }
}

/// Verification thresholds; `verify` exits nonzero when the RMSE exceeds any.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub settle_s: f64,
    pub max_pos_rmse_m: f64,
    pub max_vel_rmse_mps: f64,
    pub max_heading_rmse_mrad: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            settle_s: 5.0,
            max_pos_rmse_m: 5.0,
            max_vel_rmse_mps: 0.5,
            max_heading_rmse_mrad: 10.0,
        }
    }
}

/// IMU error model configuration: fixed values plus optional explicit
/// matrices that override the seed-drawn ones (the manifest records the
/// realized draws in this form to make runs replayable).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImuModelConfig {
    pub enabled: bool,
    pub b_a: Option<Vector3<f64>>,
    pub b_g: Option<Vector3<f64>>,
    pub w_a: Option<f64>,
    pub w_g: Option<f64>,
    pub m_a: [Option<Vector3<f64>>; 3],
    pub m_g: [Option<Vector3<f64>>; 3],
    pub g_g: [Option<Vector3<f64>>; 3],
}

impl ImuModelConfig {
    pub fn enabled_default() -> Self {
        Self {
            enabled: true,
            ..Self::default()
        }
    }

    /// Resolves to concrete parameters: seed-drawn defaults, then explicit
    /// overrides, or the zero model when disabled.
    pub fn resolve(&self, seed: u64) -> Result<ImuErrorParams, ConfigError> {
        if !self.enabled {
            return Ok(ImuErrorParams::zeroed(seed));
        }
        let mut p = ImuErrorParams::default_params(seed);
        if let Some(b) = self.b_a {
            p.b_a = b;
        }
        if let Some(b) = self.b_g {
            p.b_g = b;
        }
        if let Some(w) = self.w_a {
            p.w_a = w;
        }
        if let Some(w) = self.w_g {
            p.w_g = w;
        }
        let override_rows = |m: &mut Matrix3<f64>, rows: &[Option<Vector3<f64>>; 3]| {
            for (r, row) in rows.iter().enumerate() {
                if let Some(v) = row {
                    m.set_row(r, &v.transpose());
                }
            }
        };
        override_rows(&mut p.m_a, &self.m_a);
        override_rows(&mut p.m_g, &self.m_g);
        override_rows(&mut p.g_g, &self.g_g);
        p.validate()
            .map_err(|e| ConfigError::Invariant(e.to_string()))?;
        Ok(p)
    }
}

/// A complete validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub run_id: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub trajectory: TrajectoryConfig,
    pub stream: StreamConfig,
    pub gimbal: GimbalConfig,
    pub imu: ImuModelConfig,
    pub aiding: AidingConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            run_id: "run".to_string(),
            seed: 1,
            out_dir: PathBuf::from("out"),
            trajectory: TrajectoryConfig::default(),
            stream: StreamConfig::default(),
            gimbal: GimbalConfig::default(),
            imu: ImuModelConfig::enabled_default(),
            aiding: AidingConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Num(f64),
    Str(String),
    Bool(bool),
    Triple([f64; 3]),
}

impl Value {
    fn type_name(&self) -> String {
        match self {
            Value::Num(v) => format!("number {v}"),
            Value::Str(s) => format!("string {s:?}"),
            Value::Bool(b) => format!("boolean {b}"),
            Value::Triple(t) => format!("triple {t:?}"),
        }
    }
}

fn parse_value(raw: &str, line: usize) -> Result<Value, ConfigError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(ConfigError::Malformed {
            line,
            msg: "missing value after '='".into(),
        });
    }
    if let Some(body) = raw.strip_prefix('[') {
        let Some(body) = body.strip_suffix(']') else {
            return Err(ConfigError::Malformed {
                line,
                msg: "unterminated '[' triple".into(),
            });
        };
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(ConfigError::Malformed {
                line,
                msg: format!("triple needs exactly 3 numbers, got {}", parts.len()),
            });
        }
        let mut t = [0.0; 3];
        for (i, p) in parts.iter().enumerate() {
            t[i] = p.parse().map_err(|_| ConfigError::Malformed {
                line,
                msg: format!("triple component {i} is not a number: {p:?}"),
            })?;
        }
        return Ok(Value::Triple(t));
    }
    if let Some(q) = raw.strip_prefix('"') {
        let Some(s) = q.strip_suffix('"') else {
            return Err(ConfigError::Malformed {
                line,
                msg: "unterminated string quote".into(),
            });
        };
        return Ok(Value::Str(s.to_string()));
    }
    match raw {
        "true" | "on" | "yes" => return Ok(Value::Bool(true)),
        "false" | "off" | "no" => return Ok(Value::Bool(false)),
        _ => {}
    }
    if let Ok(v) = raw.parse::<f64>() {
        return Ok(Value::Num(v));
    }
    Ok(Value::Str(raw.to_string()))
}

struct Assign<'a> {
    line: usize,
    key: &'a str,
    value: Value,
}

impl Assign<'_> {
    fn num(&self) -> Result<f64, ConfigError> {
        match self.value {
            Value::Num(v) => Ok(v),
            _ => Err(self.mismatch("a number")),
        }
    }

    fn positive(&self) -> Result<f64, ConfigError> {
        let v = self.num()?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(self.bad(format!("{v} must be positive")))
        }
    }

    fn unsigned(&self) -> Result<u64, ConfigError> {
        let v = self.num()?;
        if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
            Ok(v as u64)
        } else {
            Err(self.bad(format!("{v} must be a non-negative integer")))
        }
    }

    fn boolean(&self) -> Result<bool, ConfigError> {
        match self.value {
            Value::Bool(b) => Ok(b),
            _ => Err(self.mismatch("a boolean (true/false)")),
        }
    }

    fn string(&self) -> Result<&str, ConfigError> {
        match &self.value {
            Value::Str(s) => Ok(s),
            _ => Err(self.mismatch("a string")),
        }
    }

    fn triple(&self) -> Result<[f64; 3], ConfigError> {
        match self.value {
            Value::Triple(t) => Ok(t),
            _ => Err(self.mismatch("a [a, b, c] triple")),
        }
    }

    fn vector(&self) -> Result<Vector3<f64>, ConfigError> {
        self.triple().map(Vector3::from)
    }

    fn mismatch(&self, expected: &'static str) -> ConfigError {
        ConfigError::TypeMismatch {
            line: self.line,
            key: self.key.to_string(),
            expected,
            got: self.value.type_name(),
        }
    }

    fn bad(&self, msg: String) -> ConfigError {
        ConfigError::BadValue {
            line: self.line,
            key: self.key.to_string(),
            msg,
        }
    }
}

/// Parses configuration text into a validated [`RunConfig`] with defaults
/// filled for every key not present.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let Some((lhs, rhs)) = content.split_once('=') else {
            return Err(ConfigError::Malformed {
                line,
                msg: format!("expected 'section.key = value', got {content:?}"),
            });
        };
        let key = lhs.trim();
        let assign = Assign {
            line,
            key,
            value: parse_value(rhs, line)?,
        };
        apply_key(&mut cfg, &assign)?;
    }
    validate(&cfg)?;
    Ok(cfg)
}

/// Reads and parses a config file; `None` yields the defaults.
pub fn load_config(path: Option<&std::path::Path>) -> Result<RunConfig, ConfigError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => parse_config(&std::fs::read_to_string(p)?),
    }
}

fn apply_key(cfg: &mut RunConfig, a: &Assign) -> Result<(), ConfigError> {
    match a.key {
        "run.id" => cfg.run_id = a.string()?.to_string(),
        "run.seed" => cfg.seed = a.unsigned()?,
        "run.out_dir" => cfg.out_dir = PathBuf::from(a.string()?),

        "trajectory.source" => {
            cfg.trajectory.source = match a.string()? {
                "synthetic" => SourceKind::Synthetic,
                "file" => SourceKind::File,
                "udp" => SourceKind::Udp,
                other => return Err(a.bad(format!("unknown source {other:?}"))),
            }
        }
        "trajectory.file" => cfg.trajectory.file = Some(PathBuf::from(a.string()?)),
        "trajectory.port" => {
            let v = a.unsigned()?;
            cfg.trajectory.port =
                u16::try_from(v).map_err(|_| a.bad(format!("{v} is not a valid UDP port")))?;
        }
        "trajectory.duration_s" => cfg.trajectory.duration_s = a.positive()?,
        "trajectory.rate_hz" => cfg.stream.rate_hz = a.positive()?,
        "trajectory.dt_tolerance" => {
            let v = a.num()?;
            if !(0.0..=0.5).contains(&v) {
                return Err(a.bad(format!("tolerance {v} outside [0, 0.5]")));
            }
            cfg.stream.dt_tolerance = v;
        }
        "trajectory.max_speed_mps" => cfg.stream.max_speed = a.positive()?,
        "trajectory.latlon_unit" => {
            cfg.stream.latlon_degrees = parse_unit(a, "degrees", "radians")?
        }
        "trajectory.attitude_unit" => {
            cfg.stream.attitude_degrees = parse_unit(a, "degrees", "radians")?
        }
        "trajectory.altitude_unit" => cfg.stream.altitude_feet = parse_unit(a, "feet", "meters")?,
        "trajectory.alt_offset_m" => cfg.stream.alt_offset_m = a.num()?,
        "trajectory.profile" => {
            cfg.trajectory.profile = match a.string()? {
                "stationary" => ProfileKind::Stationary,
                "straight" => ProfileKind::Straight,
                "climb" => ProfileKind::Climb,
                "turn" => ProfileKind::Turn,
                other => return Err(a.bad(format!("unknown profile {other:?}"))),
            }
        }
        "trajectory.lat_deg" => cfg.trajectory.lat_deg = a.num()?,
        "trajectory.lon_deg" => cfg.trajectory.lon_deg = a.num()?,
        "trajectory.alt_m" => cfg.trajectory.alt_m = a.num()?,
        "trajectory.attitude_rpy_rad" => cfg.trajectory.attitude_rpy_rad = a.triple()?,
        "trajectory.speed_mps" => cfg.trajectory.speed_mps = a.positive()?,
        "trajectory.heading_deg" => cfg.trajectory.heading_deg = a.num()?,
        "trajectory.climb_mps" => cfg.trajectory.climb_mps = a.num()?,
        "trajectory.turn_radius_m" => cfg.trajectory.turn_radius_m = a.positive()?,
        "trajectory.turn_left" => cfg.trajectory.turn_left = a.boolean()?,

        "gimbal.enabled" => cfg.gimbal.enabled = a.boolean()?,
        "gimbal.l_pt" => cfg.gimbal.levers[0] = Vector3::new(0.0, 0.0, a.num()?),
        "gimbal.l_tr" => cfg.gimbal.levers[1] = Vector3::new(0.0, 0.0, a.num()?),
        "gimbal.lever_pan_tilt" => cfg.gimbal.levers[0] = a.vector()?,
        "gimbal.lever_tilt_roll" => cfg.gimbal.levers[1] = a.vector()?,
        "gimbal.lever_roll_imu" => cfg.gimbal.levers[2] = a.vector()?,
        "gimbal.pan.period" => cfg.gimbal.profiles[0].period = a.positive()?,
        "gimbal.pan.amplitude" => cfg.gimbal.profiles[0].amplitude = a.num()?,
        "gimbal.pan.offset" => cfg.gimbal.profiles[0].offset = a.num()?,
        "gimbal.tilt.period" => cfg.gimbal.profiles[1].period = a.positive()?,
        "gimbal.tilt.amplitude" => cfg.gimbal.profiles[1].amplitude = a.num()?,
        "gimbal.tilt.offset" => cfg.gimbal.profiles[1].offset = a.num()?,
        "gimbal.roll.period" => cfg.gimbal.profiles[2].period = a.positive()?,
        "gimbal.roll.amplitude" => cfg.gimbal.profiles[2].amplitude = a.num()?,
        "gimbal.roll.offset" => cfg.gimbal.profiles[2].offset = a.num()?,
        "gimbal.mount_rpy_rad" => {
            let t = a.triple()?;
            cfg.gimbal.mount = EulerAngles::new(t[0], t[1], t[2]);
        }

        "imu.enabled" => cfg.imu.enabled = a.boolean()?,
        "imu.b_a" => cfg.imu.b_a = Some(a.vector()?),
        "imu.b_g" => cfg.imu.b_g = Some(a.vector()?),
        "imu.w_a" => cfg.imu.w_a = Some(a.num()?),
        "imu.w_g" => cfg.imu.w_g = Some(a.num()?),
        "imu.m_a.row0" => cfg.imu.m_a[0] = Some(a.vector()?),
        "imu.m_a.row1" => cfg.imu.m_a[1] = Some(a.vector()?),
        "imu.m_a.row2" => cfg.imu.m_a[2] = Some(a.vector()?),
        "imu.m_g.row0" => cfg.imu.m_g[0] = Some(a.vector()?),
        "imu.m_g.row1" => cfg.imu.m_g[1] = Some(a.vector()?),
        "imu.m_g.row2" => cfg.imu.m_g[2] = Some(a.vector()?),
        "imu.g_g.row0" => cfg.imu.g_g[0] = Some(a.vector()?),
        "imu.g_g.row1" => cfg.imu.g_g[1] = Some(a.vector()?),
        "imu.g_g.row2" => cfg.imu.g_g[2] = Some(a.vector()?),

        "aiding.enabled" => cfg.aiding.enabled = a.boolean()?,
        "aiding.rate_hz" => cfg.aiding.rate_hz = a.positive()?,
        "aiding.sigma_pos_m" => {
            let v = a.num()?;
            if v < 0.0 {
                return Err(a.bad(format!("sigma {v} must be >= 0")));
            }
            cfg.aiding.sigma_pos_m = v;
        }
        "aiding.sigma_vel_mps" => {
            let v = a.num()?;
            if v < 0.0 {
                return Err(a.bad(format!("sigma {v} must be >= 0")));
            }
            cfg.aiding.sigma_vel_mps = v;
        }
        "aiding.mode" => {
            cfg.aiding.mode = match a.string()? {
                "hard" => ResetMode::Hard,
                "blend" => match cfg.aiding.mode {
                    ResetMode::Blend(l) => ResetMode::Blend(l),
                    _ => ResetMode::Blend(1.0),
                },
                other => return Err(a.bad(format!("unknown mode {other:?}"))),
            }
        }
        "aiding.blend_lambda" => {
            let v = a.num()?;
            if !(0.0..=1.0).contains(&v) {
                return Err(a.bad(format!("lambda {v} outside [0, 1]")));
            }
            cfg.aiding.mode = ResetMode::Blend(v);
        }

        "verify.settle_s" => {
            let v = a.num()?;
            if v < 0.0 {
                return Err(a.bad(format!("settle time {v} must be >= 0")));
            }
            cfg.verify.settle_s = v;
        }
        "verify.max_pos_rmse_m" => cfg.verify.max_pos_rmse_m = a.positive()?,
        "verify.max_vel_rmse_mps" => cfg.verify.max_vel_rmse_mps = a.positive()?,
        "verify.max_heading_rmse_mrad" => cfg.verify.max_heading_rmse_mrad = a.positive()?,

        _ => {
            return Err(ConfigError::UnknownKey {
                line: a.line,
                key: a.key.to_string(),
            })
        }
    }
    Ok(())
}

fn parse_unit(a: &Assign, truthy: &str, falsy: &str) -> Result<bool, ConfigError> {
    match a.string()? {
        s if s == truthy => Ok(true),
        s if s == falsy => Ok(false),
        other => Err(a.bad(format!("expected {truthy:?} or {falsy:?}, got {other:?}"))),
    }
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    cfg.gimbal
        .validate()
        .map_err(|e| ConfigError::Invariant(e.to_string()))?;
    cfg.imu.resolve(cfg.seed)?;
    if cfg.trajectory.source == SourceKind::File && cfg.trajectory.file.is_none() {
        return Err(ConfigError::Invariant(
            "trajectory.source = file requires trajectory.file".into(),
        ));
    }
    if cfg.trajectory.lat_deg.abs() > 90.0 {
        return Err(ConfigError::Invariant(format!(
            "trajectory.lat_deg {} outside [-90, 90]",
            cfg.trajectory.lat_deg
        )));
    }
    Ok(())
}

fn fmt_num(v: f64) -> String {
    // shortest representation that round-trips exactly
    format!("{v:?}")
}

fn fmt_triple(v: &Vector3<f64>) -> String {
    format!("[{}, {}, {}]", fmt_num(v.x), fmt_num(v.y), fmt_num(v.z))
}

/// Renders a config (with the realized IMU matrices) back into the config
/// grammar. The output parses to an equivalent run: this is the manifest
/// body that makes a run replayable bitwise.
pub fn render_resolved(cfg: &RunConfig, params: &ImuErrorParams) -> String {
    let mut s = String::new();
    let t = &cfg.trajectory;
    let push = |s: &mut String, k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    push(&mut s, "run.id", format!("\"{}\"", cfg.run_id));
    push(&mut s, "run.seed", cfg.seed.to_string());
    push(
        &mut s,
        "run.out_dir",
        format!("\"{}\"", cfg.out_dir.display()),
    );
    push(
        &mut s,
        "trajectory.source",
        match t.source {
            SourceKind::Synthetic => "synthetic",
            SourceKind::File => "file",
            SourceKind::Udp => "udp",
        }
        .to_string(),
    );
    if let Some(f) = &t.file {
        push(&mut s, "trajectory.file", format!("\"{}\"", f.display()));
    }
    push(&mut s, "trajectory.port", t.port.to_string());
    push(&mut s, "trajectory.duration_s", fmt_num(t.duration_s));
    push(&mut s, "trajectory.rate_hz", fmt_num(cfg.stream.rate_hz));
    push(
        &mut s,
        "trajectory.dt_tolerance",
        fmt_num(cfg.stream.dt_tolerance),
    );
    push(
        &mut s,
        "trajectory.max_speed_mps",
        fmt_num(cfg.stream.max_speed),
    );
    push(
        &mut s,
        "trajectory.latlon_unit",
        if cfg.stream.latlon_degrees {
            "degrees".into()
        } else {
            "radians".into()
        },
    );
    push(
        &mut s,
        "trajectory.attitude_unit",
        if cfg.stream.attitude_degrees {
            "degrees".into()
        } else {
            "radians".into()
        },
    );
    push(
        &mut s,
        "trajectory.altitude_unit",
        if cfg.stream.altitude_feet {
            "feet".into()
        } else {
            "meters".into()
        },
    );
    push(
        &mut s,
        "trajectory.alt_offset_m",
        fmt_num(cfg.stream.alt_offset_m),
    );
    push(
        &mut s,
        "trajectory.profile",
        match t.profile {
            ProfileKind::Stationary => "stationary",
            ProfileKind::Straight => "straight",
            ProfileKind::Climb => "climb",
            ProfileKind::Turn => "turn",
        }
        .to_string(),
    );
    push(&mut s, "trajectory.lat_deg", fmt_num(t.lat_deg));
    push(&mut s, "trajectory.lon_deg", fmt_num(t.lon_deg));
    push(&mut s, "trajectory.alt_m", fmt_num(t.alt_m));
    push(
        &mut s,
        "trajectory.attitude_rpy_rad",
        fmt_triple(&Vector3::from(t.attitude_rpy_rad)),
    );
    push(&mut s, "trajectory.speed_mps", fmt_num(t.speed_mps));
    push(&mut s, "trajectory.heading_deg", fmt_num(t.heading_deg));
    push(&mut s, "trajectory.climb_mps", fmt_num(t.climb_mps));
    push(&mut s, "trajectory.turn_radius_m", fmt_num(t.turn_radius_m));
    push(&mut s, "trajectory.turn_left", t.turn_left.to_string());

    let g = &cfg.gimbal;
    push(&mut s, "gimbal.enabled", g.enabled.to_string());
    push(&mut s, "gimbal.lever_pan_tilt", fmt_triple(&g.levers[0]));
    push(&mut s, "gimbal.lever_tilt_roll", fmt_triple(&g.levers[1]));
    push(&mut s, "gimbal.lever_roll_imu", fmt_triple(&g.levers[2]));
    for (name, p) in [
        ("pan", &g.profiles[0]),
        ("tilt", &g.profiles[1]),
        ("roll", &g.profiles[2]),
    ] {
        push(&mut s, &format!("gimbal.{name}.period"), fmt_num(p.period));
        push(
            &mut s,
            &format!("gimbal.{name}.amplitude"),
            fmt_num(p.amplitude),
        );
        push(&mut s, &format!("gimbal.{name}.offset"), fmt_num(p.offset));
    }
    push(
        &mut s,
        "gimbal.mount_rpy_rad",
        fmt_triple(&Vector3::new(g.mount.roll, g.mount.pitch, g.mount.yaw)),
    );

    push(&mut s, "imu.enabled", cfg.imu.enabled.to_string());
    push(&mut s, "imu.b_a", fmt_triple(&params.b_a));
    push(&mut s, "imu.b_g", fmt_triple(&params.b_g));
    push(&mut s, "imu.w_a", fmt_num(params.w_a));
    push(&mut s, "imu.w_g", fmt_num(params.w_g));
    for (name, m) in [
        ("m_a", &params.m_a),
        ("m_g", &params.m_g),
        ("g_g", &params.g_g),
    ] {
        for r in 0..3 {
            push(
                &mut s,
                &format!("imu.{name}.row{r}"),
                fmt_triple(&Vector3::new(m[(r, 0)], m[(r, 1)], m[(r, 2)])),
            );
        }
    }

    let aid = &cfg.aiding;
    push(&mut s, "aiding.enabled", aid.enabled.to_string());
    push(&mut s, "aiding.rate_hz", fmt_num(aid.rate_hz));
    push(&mut s, "aiding.sigma_pos_m", fmt_num(aid.sigma_pos_m));
    push(&mut s, "aiding.sigma_vel_mps", fmt_num(aid.sigma_vel_mps));
    match aid.mode {
        ResetMode::Hard => push(&mut s, "aiding.mode", "hard".into()),
        ResetMode::Blend(l) => {
            push(&mut s, "aiding.mode", "blend".into());
            push(&mut s, "aiding.blend_lambda", fmt_num(l));
        }
    }

    let v = &cfg.verify;
    push(&mut s, "verify.settle_s", fmt_num(v.settle_s));
    push(&mut s, "verify.max_pos_rmse_m", fmt_num(v.max_pos_rmse_m));
    push(
        &mut s,
        "verify.max_vel_rmse_mps",
        fmt_num(v.max_vel_rmse_mps),
    );
    push(
        &mut s,
        "verify.max_heading_rmse_mrad",
        fmt_num(v.max_heading_rmse_mrad),
    );
    s
}

/// The run manifest: resolved config echo plus provenance comments,
/// sufficient to reproduce the run bitwise by feeding it back as a config.
pub fn render_manifest(
    cfg: &RunConfig,
    params: &ImuErrorParams,
    version: &str,
    input_checksum: Option<&str>,
) -> String {
    let mut s = String::new();
    s.push_str("# run manifest: feed this file back as --config to replay the run\n");
    s.push_str(&format!("# tool_version = {version}\n"));
    s.push_str(&format!(
        "# input_sha256 = {}\n",
        input_checksum.unwrap_or("-")
    ));
    s.push_str(&render_resolved(cfg, params));
    s
}
