//! Exogenous per-slot state: compound-Poisson energy arrivals and normalized
//! fading-channel gains for single-antenna, MISO/SIMO, and MIMO-beamforming
//! scenarios.
//!
//! All gains are linear-scale; decibels appear only at the CLI boundary.
//! Draws are counter-based: the state of slot `t` in replica `r` is a pure
//! function of `(seed, r, t)`, so replicas and sweep points can run
//! concurrently and out of order while staying bit-reproducible.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::upper_incomplete_gamma;
use crate::numerics::{adaptive_quadrature, bisect, factorial, mix_seed, truncate_upper};

/// Stream id reserved for the empirical gamma-max quantile draws.
const QUANTILE_STREAM: u64 = 0x7131_7131_7131_7131;
/// Number of seeded draws backing the empirical MIMO outage quantile.
const QUANTILE_DRAWS: usize = 1_000_000;

#[derive(Debug, Clone, Error)]
pub enum ChannelError {
    #[error("invalid channel config: {0}")]
    InvalidConfig(String),
    #[error("outage probability {eta} outside (0, 1)")]
    EtaOutOfRange { eta: f64 },
    #[error("no analytic gain density for {0}")]
    NoAnalyticDensity(String),
    #[error("tail inversion failed: {0}")]
    TailInversion(#[from] crate::numerics::RootError),
}

/// Fading scenario: which antennas exist and how the normalized gain is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelModel {
    /// Single-antenna Rayleigh fading: exponential gain.
    RayleighScalar,
    /// Transmit beamforming over `n` antennas: gain is the squared channel
    /// norm, Gamma(n)-distributed under Rayleigh branches.
    Miso { n: u32 },
    /// Receive beamforming over `n` antennas; statistically identical to MISO.
    Simo { n: u32 },
    /// MIMO beamforming: gain is the largest squared singular value of the
    /// channel matrix.
    Mimo { nt: u32, nr: u32 },
}

impl ChannelModel {
    /// Number of independent Rayleigh branches, when the gain is a branch sum.
    pub fn branches(&self) -> Option<u32> {
        match *self {
            ChannelModel::RayleighScalar => Some(1),
            ChannelModel::Miso { n } | ChannelModel::Simo { n } => Some(n),
            ChannelModel::Mimo { .. } => None,
        }
    }
}

impl std::fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            ChannelModel::RayleighScalar => write!(f, "rayleigh-scalar"),
            ChannelModel::Miso { n } => write!(f, "miso:{n}"),
            ChannelModel::Simo { n } => write!(f, "simo:{n}"),
            ChannelModel::Mimo { nt, nr } => write!(f, "mimo:{nt}x{nr}"),
        }
    }
}

/// Fading channel parameters. `mean_gain` is the mean normalized gain per
/// branch (linear scale); for multi-branch models the expected total gain is
/// `branches * mean_gain`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub model: ChannelModel,
    pub mean_gain: f64,
    /// Outage probability used to derive the design gain cap.
    pub outage_eta: f64,
    /// Seed for channel-internal randomized procedures (empirical quantiles).
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            model: ChannelModel::RayleighScalar,
            mean_gain: 10.0,
            outage_eta: 0.01,
            seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.mean_gain > 0.0) {
            return Err(ChannelError::InvalidConfig(format!(
                "mean_gain {} must be positive",
                self.mean_gain
            )));
        }
        if !(self.outage_eta > 0.0 && self.outage_eta < 1.0) {
            return Err(ChannelError::EtaOutOfRange {
                eta: self.outage_eta,
            });
        }
        match self.model {
            ChannelModel::Miso { n } | ChannelModel::Simo { n } if n == 0 => Err(
                ChannelError::InvalidConfig("antenna count must be at least 1".into()),
            ),
            ChannelModel::Mimo { nt, nr } if nt == 0 || nr == 0 => Err(
                ChannelError::InvalidConfig("antenna counts must be at least 1".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Energy arrival process: a Poisson number of units per slot, each carrying
/// an amount uniform on [0, 2*alpha], so the per-slot mean is lambda * alpha.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ArrivalConfig {
    /// Poisson arrival rate (units/slot).
    pub lambda: f64,
    /// Mean energy per unit (J).
    pub alpha: f64,
}

impl Default for ArrivalConfig {
    fn default() -> Self {
        ArrivalConfig {
            lambda: 0.5,
            alpha: 0.2,
        }
    }
}

impl ArrivalConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.lambda < 0.0 || self.alpha < 0.0 {
            return Err(ChannelError::InvalidConfig(format!(
                "arrival rate {} and mean amount {} must be nonnegative",
                self.lambda, self.alpha
            )));
        }
        Ok(())
    }
}

/// Exogenous state observed at the start of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    /// Energy arrived this slot (J).
    pub e_a: f64,
    /// Normalized channel gain (linear).
    pub gamma: f64,
}

/// Analytic gain density, where one exists for the channel model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainDensity {
    Exponential {
        mean: f64,
    },
    /// Sum of `n` i.i.d. exponential branches: Gamma(n, branch_mean).
    GammaBranches {
        n: u32,
        branch_mean: f64,
    },
}

impl GainDensity {
    pub fn from_channel(cfg: &ChannelConfig) -> Result<Self, ChannelError> {
        match cfg.model {
            ChannelModel::RayleighScalar => Ok(GainDensity::Exponential {
                mean: cfg.mean_gain,
            }),
            ChannelModel::Miso { n } | ChannelModel::Simo { n } => {
                if n == 1 {
                    Ok(GainDensity::Exponential {
                        mean: cfg.mean_gain,
                    })
                } else {
                    Ok(GainDensity::GammaBranches {
                        n,
                        branch_mean: cfg.mean_gain,
                    })
                }
            }
            ChannelModel::Mimo { .. } => {
                Err(ChannelError::NoAnalyticDensity(cfg.model.to_string()))
            }
        }
    }

    pub fn pdf(&self, gamma: f64) -> f64 {
        if gamma < 0.0 {
            return 0.0;
        }
        match *self {
            GainDensity::Exponential { mean } => (-gamma / mean).exp() / mean,
            GainDensity::GammaBranches { n, branch_mean } => {
                gamma.powi(n as i32 - 1) * (-gamma / branch_mean).exp()
                    / (factorial(n - 1) * branch_mean.powi(n as i32))
            }
        }
    }

    /// Tail probability Prob(gamma > x).
    pub fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match *self {
            GainDensity::Exponential { mean } => (-x / mean).exp(),
            GainDensity::GammaBranches { n, branch_mean } => {
                upper_incomplete_gamma(n, x / branch_mean).unwrap_or(0.0) / factorial(n - 1)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            GainDensity::Exponential { mean } => mean,
            GainDensity::GammaBranches { n, branch_mean } => n as f64 * branch_mean,
        }
    }
}

/// RNG for one (seed, replica, slot) triple.
pub fn slot_rng(seed: u64, replica: u64, slot: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, replica, slot))
}

/// Draws the full exogenous state for a slot: arrival first, then gain.
pub fn draw_state(
    arrivals: &ArrivalConfig,
    channel: &ChannelConfig,
    seed: u64,
    replica: u64,
    slot: u64,
) -> SystemState {
    let mut rng = slot_rng(seed, replica, slot);
    let e_a = draw_arrival(arrivals, &mut rng);
    let gamma = draw_gamma(channel, &mut rng);
    SystemState { e_a, gamma }
}

/// Energy arrived in one slot: K ~ Poisson(lambda) units, each uniform on
/// [0, 2*alpha], summed.
pub fn draw_arrival<R: Rng>(cfg: &ArrivalConfig, rng: &mut R) -> f64 {
    if cfg.lambda <= 0.0 || cfg.alpha <= 0.0 {
        return 0.0;
    }
    let units = Poisson::new(cfg.lambda)
        .expect("positive lambda")
        .sample(rng) as u64;
    (0..units)
        .map(|_| rng.random_range(0.0..2.0 * cfg.alpha))
        .sum()
}

/// One normalized channel gain draw for the configured model.
pub fn draw_gamma<R: Rng>(cfg: &ChannelConfig, rng: &mut R) -> f64 {
    if cfg.mean_gain <= 0.0 {
        return 0.0;
    }
    match cfg.model {
        ChannelModel::RayleighScalar => exponential_gain(cfg.mean_gain, rng),
        ChannelModel::Miso { n } | ChannelModel::Simo { n } => {
            (0..n).map(|_| exponential_gain(cfg.mean_gain, rng)).sum()
        }
        ChannelModel::Mimo { nt, nr } => mimo_gain(nt, nr, cfg.mean_gain, rng),
    }
}

fn exponential_gain<R: Rng>(mean: f64, rng: &mut R) -> f64 {
    Exp::new(1.0 / mean).expect("positive rate").sample(rng)
}

/// Largest eigenvalue gain of a MIMO channel with i.i.d. complex Gaussian
/// entries of normalized per-entry mean square `mean_gain`, via power
/// iteration on the smaller Gram matrix to relative tolerance 1e-10.
fn mimo_gain<R: Rng>(nt: u32, nr: u32, mean_gain: f64, rng: &mut R) -> f64 {
    let (rows, cols) = (nr as usize, nt as usize);
    let scale = (mean_gain / 2.0).sqrt();
    let mut h = vec![vec![Complex64::default(); cols]; rows];
    for row in h.iter_mut() {
        for entry in row.iter_mut() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            *entry = Complex64::new(scale * re, scale * im);
        }
    }
    let gram = if rows <= cols {
        gram_rows(&h)
    } else {
        gram_cols(&h)
    };
    let start: Vec<Complex64> = (0..gram.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    largest_eigenvalue(&gram, start, 1e-10)
}

/// H * H^H (rows x rows).
fn gram_rows(h: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let m = h.len();
    let mut a = vec![vec![Complex64::default(); m]; m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = h[i].iter().zip(&h[j]).map(|(x, y)| x * y.conj()).sum();
        }
    }
    a
}

/// H^H * H (cols x cols).
fn gram_cols(h: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let m = h[0].len();
    let mut a = vec![vec![Complex64::default(); m]; m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = h.iter().map(|row| row[i].conj() * row[j]).sum();
        }
    }
    a
}

/// Power iteration for the largest eigenvalue of a Hermitian PSD matrix.
pub fn largest_eigenvalue(a: &[Vec<Complex64>], start: Vec<Complex64>, rel_tol: f64) -> f64 {
    let m = a.len();
    if m == 1 {
        return a[0][0].re;
    }
    let mut v = start;
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    v.iter_mut().for_each(|z| *z /= norm);
    let mut prev = 0.0;
    for _ in 0..100_000 {
        let w: Vec<Complex64> = a
            .iter()
            .map(|row| row.iter().zip(&v).map(|(aij, vj)| aij * vj).sum())
            .collect();
        let rayleigh: f64 = v.iter().zip(&w).map(|(vi, wi)| (vi.conj() * wi).re).sum();
        let wnorm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if wnorm == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|z| z / wnorm).collect();
        if (rayleigh - prev).abs() <= rel_tol * rayleigh.abs().max(1e-300) {
            return rayleigh;
        }
        prev = rayleigh;
    }
    prev
}

/// Design gain cap: the level exceeded with probability exactly `outage_eta`.
///
/// Closed form for the exponential case; bisection on the Gamma tail for
/// MISO/SIMO; empirical quantile over seeded draws for MIMO.
pub fn gamma_max_for_outage(cfg: &ChannelConfig) -> Result<f64, ChannelError> {
    cfg.validate()?;
    let eta = cfg.outage_eta;
    match GainDensity::from_channel(cfg) {
        Ok(GainDensity::Exponential { mean }) => Ok(-mean * eta.ln()),
        Ok(density @ GainDensity::GammaBranches { n, branch_mean }) => {
            let f = |x: f64| density.tail(x) - eta;
            let mut hi = branch_mean * n as f64;
            while f(hi) > 0.0 {
                hi *= 2.0;
            }
            Ok(bisect(&f, 0.0, hi, 1e-12, 400)?)
        }
        Err(_) => {
            // no closed-form tail: empirical quantile from seeded draws
            let mut rng = slot_rng(cfg.seed, QUANTILE_STREAM, 0);
            let mut draws: Vec<f64> = (0..QUANTILE_DRAWS)
                .map(|_| draw_gamma(cfg, &mut rng))
                .collect();
            draws.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let k = ((QUANTILE_DRAWS as f64) * (1.0 - eta)).ceil() as usize - 1;
            Ok(draws[k.min(QUANTILE_DRAWS - 1)])
        }
    }
}

/// Caps a gain at the design maximum.
pub fn truncate_gamma(gamma: f64, gamma_max: f64) -> f64 {
    gamma.min(gamma_max)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Independent check of a Gamma-family tail by direct quadrature of the pdf;
/// used to validate tail inversions.
pub fn tail_by_quadrature(density: &GainDensity, x: f64) -> f64 {
    let f = |g: f64| density.pdf(g);
    let hi = truncate_upper(&f, x, 1e-18);
    adaptive_quadrature(&f, x, hi, 1e-13)
}
