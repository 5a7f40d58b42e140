//! IMU error model: biases, scale/cross-coupling, g-dependent gyro bias and
//! white noise applied to the ground-truth signals, plus the Allan-deviation
//! instrument used to validate the noise model.
//!
//! The corrupted rate signals are
//! `w~ = b_g + (I + M_g) w + G_g f + n_g` and
//! `f~ = b_a + (I + M_a) f + n_a`,
//! with the per-sample noise sigma scaling as root-PSD / sqrt(dt). Increments
//! are derived from the corrupted rates (`dv = f~ dt`, `dth = w~ dt`), never
//! computed independently.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::kinematics::TruthInertial;

#[derive(Debug, Error)]
pub enum ImuError {
    #[error("series too short for Allan analysis: {0} samples, need at least {1}")]
    SeriesTooShort(usize, usize),
    #[error("invalid error parameters: {0}")]
    InvalidParams(String),
}

/// Minimum series length for the Allan-deviation instrument.
pub const ALLAN_MIN_SAMPLES: usize = 1 << 14;

/// Accelerometer biases of a representative tactical-grade unit, m/s^2.
pub const DEFAULT_ACCEL_BIAS: [f64; 3] = [0.009, -0.013, 0.008];
/// Gyro biases, rad/s.
pub const DEFAULT_GYRO_BIAS: [f64; 3] = [-0.175e-3, 0.252e-3, 0.155e-3];
/// Accelerometer noise root-PSD, m/s^(3/2).
pub const DEFAULT_ACCEL_NOISE: f64 = 7.845e-4;
/// Gyro noise root-PSD, rad/s^(1/2).
pub const DEFAULT_GYRO_NOISE: f64 = 2.327e-6;
/// Scale of the random accelerometer scale/cross-coupling draws.
pub const DEFAULT_ACCEL_SCALE: f64 = 5e-3;
/// Scale of the random gyro scale/cross-coupling draws (upper triangular).
pub const DEFAULT_GYRO_SCALE: f64 = 3e-3;
/// Scale of the random g-dependent gyro bias draws, rad.s/m.
pub const DEFAULT_G_DEP_SCALE: f64 = 1e-5;

/// Sensor error model parameters. `m_g` is upper-triangular by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ImuErrorParams {
    pub b_a: Vector3<f64>,
    pub b_g: Vector3<f64>,
    pub m_a: Matrix3<f64>,
    pub m_g: Matrix3<f64>,
    pub g_g: Matrix3<f64>,
    pub w_a: f64,
    pub w_g: f64,
    pub seed: u64,
}

impl ImuErrorParams {
    /// The default error model: fixed biases and root-PSDs, with the scale,
    /// cross-coupling and g-dependent matrices drawn uniformly on [-1, 1]
    /// times their scale from the seeded generator. Reproducible per seed.
    ///
    /// Draw order (fixed): M_a row-major (9), M_g upper triangle row-major
    /// (6), G_g row-major (9).
    pub fn default_params(seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut draw = |scale: f64| rng.random_range(-1.0..=1.0) * scale;
        let mut m_a = Matrix3::zeros();
        for r in 0..3 {
            for c in 0..3 {
                m_a[(r, c)] = draw(DEFAULT_ACCEL_SCALE);
            }
        }
        let mut m_g = Matrix3::zeros();
        for r in 0..3 {
            for c in r..3 {
                m_g[(r, c)] = draw(DEFAULT_GYRO_SCALE);
            }
        }
        let mut g_g = Matrix3::zeros();
        for r in 0..3 {
            for c in 0..3 {
                g_g[(r, c)] = draw(DEFAULT_G_DEP_SCALE);
            }
        }
        Self {
            b_a: Vector3::from(DEFAULT_ACCEL_BIAS),
            b_g: Vector3::from(DEFAULT_GYRO_BIAS),
            m_a,
            m_g,
            g_g,
            w_a: DEFAULT_ACCEL_NOISE,
            w_g: DEFAULT_GYRO_NOISE,
            seed,
        }
    }

    /// An error-free sensor: the output equals the truth.
    pub fn zeroed(seed: u64) -> Self {
        Self {
            b_a: Vector3::zeros(),
            b_g: Vector3::zeros(),
            m_a: Matrix3::zeros(),
            m_g: Matrix3::zeros(),
            g_g: Matrix3::zeros(),
            w_a: 0.0,
            w_g: 0.0,
            seed,
        }
    }

    /// Config sanity check: the gyro matrix stays upper triangular and every
    /// magnitude stays within 10x its default scale.
    pub fn validate(&self) -> Result<(), ImuError> {
        for r in 1..3 {
            for c in 0..r {
                if self.m_g[(r, c)] != 0.0 {
                    return Err(ImuError::InvalidParams(format!(
                        "M_g[{r}][{c}] = {} must be zero below the diagonal",
                        self.m_g[(r, c)]
                    )));
                }
            }
        }
        let checks: [(&str, f64, f64); 7] = [
            ("b_a", self.b_a.amax(), 0.013),
            ("b_g", self.b_g.amax(), 0.252e-3),
            ("M_a", self.m_a.amax(), DEFAULT_ACCEL_SCALE),
            ("M_g", self.m_g.amax(), DEFAULT_GYRO_SCALE),
            ("G_g", self.g_g.amax(), DEFAULT_G_DEP_SCALE),
            ("w_a", self.w_a.abs(), DEFAULT_ACCEL_NOISE),
            ("w_g", self.w_g.abs(), DEFAULT_GYRO_NOISE),
        ];
        for (name, mag, scale) in checks {
            if !mag.is_finite() || mag > 10.0 * scale {
                return Err(ImuError::InvalidParams(format!(
                    "{name} magnitude {mag} exceeds 10x its nominal scale {scale}"
                )));
            }
        }
        Ok(())
    }
}

/// One corrupted IMU output sample. The increments satisfy `dv = f dt` and
/// `dtheta = omega dt` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    pub dt: f64,
    /// Measured specific force, m/s^2.
    pub f: Vector3<f64>,
    /// Measured rotation rate, rad/s.
    pub omega: Vector3<f64>,
    /// Velocity increment over the interval, m/s.
    pub dv: Vector3<f64>,
    /// Angle increment over the interval, rad.
    pub dtheta: Vector3<f64>,
}

/// Noise stream for [`corrupt`]. A thin newtype so the draw contract (six
/// standard normals per sample, gyro x/y/z then accel x/y/z) stays explicit.
#[derive(Debug, Clone)]
pub struct NoiseRng(ChaCha12Rng);

impl NoiseRng {
    pub fn from_seed(seed: u64) -> Self {
        Self(ChaCha12Rng::seed_from_u64(seed))
    }

    fn standard_normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }
}

/// Applies the deterministic and stochastic error model to one truth sample.
/// Advances the noise stream by exactly six draws regardless of the
/// parameter values, so streams with different params stay aligned.
pub fn corrupt(truth: &TruthInertial, params: &ImuErrorParams, rng: &mut NoiseRng) -> ImuSample {
    debug_assert!(truth.dt > 0.0);
    let sqrt_dt = truth.dt.sqrt();
    let n_g = Vector3::new(
        rng.standard_normal(),
        rng.standard_normal(),
        rng.standard_normal(),
    ) * (params.w_g / sqrt_dt);
    let n_a = Vector3::new(
        rng.standard_normal(),
        rng.standard_normal(),
        rng.standard_normal(),
    ) * (params.w_a / sqrt_dt);
    let omega = params.b_g
        + (Matrix3::identity() + params.m_g) * truth.omega
        + params.g_g * truth.f
        + n_g;
    let f = params.b_a + (Matrix3::identity() + params.m_a) * truth.f + n_a;
    ImuSample {
        t: truth.t,
        dt: truth.dt,
        f,
        omega,
        dv: f * truth.dt,
        dtheta: omega * truth.dt,
    }
}

/// Overlapped Allan deviation of a scalar rate series sampled at `dt`.
///
/// Returns (tau, sigma) pairs on a near-logarithmic tau grid that always
/// includes tau = 1 s when the series is long enough. For white noise of
/// root-PSD `w` the curve follows `sigma(tau) = w / sqrt(tau)`.
pub fn allan_deviation(series: &[f64], dt: f64) -> Result<Vec<(f64, f64)>, ImuError> {
    let n = series.len();
    if n < ALLAN_MIN_SAMPLES {
        return Err(ImuError::SeriesTooShort(n, ALLAN_MIN_SAMPLES));
    }
    // cumulative integral of the rate signal
    let mut theta = Vec::with_capacity(n + 1);
    theta.push(0.0);
    let mut acc = 0.0;
    for v in series {
        acc += v * dt;
        theta.push(acc);
    }

    let max_m = n / 3;
    let mut ms: Vec<usize> = Vec::new();
    let points = 64usize;
    for k in 0..=points {
        let m = (10f64.powf((max_m as f64).log10() * k as f64 / points as f64)).round() as usize;
        ms.push(m.clamp(1, max_m));
    }
    let one_second = (1.0 / dt).round() as usize;
    if one_second >= 1 && one_second <= max_m {
        ms.push(one_second);
    }
    ms.sort_unstable();
    ms.dedup();

    let mut curve = Vec::with_capacity(ms.len());
    for m in ms {
        let tau = m as f64 * dt;
        let terms = n + 1 - 2 * m;
        let mut sum = 0.0;
        for k in 0..terms {
            let d = theta[k + 2 * m] - 2.0 * theta[k + m] + theta[k];
            sum += d * d;
        }
        let var = sum / (2.0 * tau * tau * terms as f64);
        curve.push((tau, var.sqrt()));
    }
    Ok(curve)
}

/// Looks up the Allan deviation at (or nearest to) a given tau.
pub fn allan_at(curve: &[(f64, f64)], tau: f64) -> Option<(f64, f64)> {
    curve
        .iter()
        .min_by(|a, b| {
            (a.0 - tau)
                .abs()
                .partial_cmp(&(b.0 - tau).abs())
                .expect("tau values are finite")
        })
        .copied()
}
