//! Closed-form constants and performance bounds of the drift-plus-penalty
//! controller: the drift constant B, the admissible weight range (0, V_max],
//! the queue shift A and queue bounds, the optimality-gap bound B/V for
//! bounded fading, the outage constant G, and the combined bound
//! (1 − eta)·B/V + eta·G — plus the special functions they need.
//!
//! All rates and gaps are in nats; any dB or bits presentation happens at the
//! CLI boundary.

use serde::Serialize;
use thiserror::Error;

use crate::battery::BatteryConfig;
use crate::controller::ControllerParams;
use crate::numerics::{adaptive_quadrature, factorial, truncate_upper};
use crate::stochastic::{ChannelConfig, GainDensity};

#[derive(Debug, Clone, Error)]
pub enum BoundsError {
    #[error("upper incomplete gamma diverges at (n, y) = (0, 0)")]
    DivergentGamma,
    #[error("negative argument {0} for the upper incomplete gamma")]
    NegativeArgument(f64),
    #[error("gamma_max must be positive, got {0}")]
    NonpositiveGammaMax(f64),
    #[error("outage constant undefined: {0}")]
    UnsupportedChannel(#[from] crate::stochastic::ChannelError),
    #[error("tabulated density needs at least two points above gamma_max")]
    InsufficientTabulation,
}

/// Upper incomplete gamma function at integer order n:
/// the integral of x^(n-1) e^(-x) from y to infinity.
///
/// For n >= 1 this is the finite series (n-1)! e^(-y) sum_{k<n} y^k/k!.
/// For n = 0 it is the exponential integral E1(y), evaluated by series below
/// y = 1 and by continued fraction above.
pub fn upper_incomplete_gamma(n: u32, y: f64) -> Result<f64, BoundsError> {
    if y < 0.0 {
        return Err(BoundsError::NegativeArgument(y));
    }
    if n == 0 {
        if y == 0.0 {
            return Err(BoundsError::DivergentGamma);
        }
        return Ok(exp_e1(y) * (-y).exp());
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..n {
        term *= y / k as f64;
        sum += term;
    }
    Ok(factorial(n - 1) * (-y).exp() * sum)
}

/// e^y * E1(y) for y > 0, stable for large y where E1 underflows.
pub fn exp_e1(y: f64) -> f64 {
    if y < 1.0 {
        // E1(y) = -gamma - ln y + sum (-1)^(k+1) y^k / (k k!)
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let mut sum = -EULER_GAMMA - y.ln();
        let mut term = 1.0;
        for k in 1..200 {
            term *= -y / k as f64;
            let contribution = -term / k as f64;
            sum += contribution;
            if contribution.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        y.exp() * sum
    } else {
        // modified Lentz continued fraction for E1(y) e^y
        let tiny = 1e-300;
        let mut b = y + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..400 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h
    }
}

/// Outage constant G for Rayleigh branches: the conditional expected
/// max-rate loss given the gain exceeds `gamma_max`, evaluated by adaptive
/// quadrature of
/// `C * integral_{gamma_max/mean}^inf log(1 + mean*p_max*x) x^(n-1) e^(-x) dx`
/// with `C = 1/upper_incomplete_gamma(n, gamma_max/mean)`.
pub fn g_constant_quadrature(
    n: u32,
    branch_mean: f64,
    p_max: f64,
    gamma_max: f64,
) -> Result<f64, BoundsError> {
    if gamma_max <= 0.0 {
        return Err(BoundsError::NonpositiveGammaMax(gamma_max));
    }
    if p_max <= 0.0 {
        return Ok(0.0);
    }
    let lower = gamma_max / branch_mean;
    let integrand =
        |x: f64| (1.0 + branch_mean * p_max * x).ln() * x.powi(n as i32 - 1) * (-x).exp();
    let upper = truncate_upper(&integrand, lower, 1e-18);
    let tail_mass = upper_incomplete_gamma(n, lower)?;
    Ok(adaptive_quadrature(&integrand, lower, upper, 1e-12) / tail_mass)
}

/// Closed form of G for a single Rayleigh branch:
/// `log(1 + p_max*gamma_max) + e^(g0) * upper_incomplete_gamma(0, g0)` with
/// `g0 = gamma_max/mean + 1/(mean*p_max)`.
pub fn g_constant_closed_n1(mean: f64, p_max: f64, gamma_max: f64) -> Result<f64, BoundsError> {
    if gamma_max <= 0.0 {
        return Err(BoundsError::NonpositiveGammaMax(gamma_max));
    }
    if p_max <= 0.0 {
        return Ok(0.0);
    }
    let g0 = gamma_max / mean + 1.0 / (mean * p_max);
    Ok((1.0 + p_max * gamma_max).ln() + exp_e1(g0))
}

/// Outage constant G for the configured channel: closed form for a single
/// branch, quadrature for multi-branch Rayleigh. MIMO has no analytic gain
/// density; use [`g_constant_tabulated`] with sampled density values instead.
pub fn g_constant(channel: &ChannelConfig, p_max: f64, gamma_max: f64) -> Result<f64, BoundsError> {
    match GainDensity::from_channel(channel)? {
        GainDensity::Exponential { mean } => g_constant_closed_n1(mean, p_max, gamma_max),
        GainDensity::GammaBranches { n, branch_mean } => {
            g_constant_quadrature(n, branch_mean, p_max, gamma_max)
        }
    }
}

/// G for an arbitrary gain density supplied as `(gamma, pdf)` samples on an
/// ascending grid: trapezoidal tail integrals of the max-rate loss and of the
/// density mass above `gamma_max`.
pub fn g_constant_tabulated(
    samples: &[(f64, f64)],
    p_max: f64,
    gamma_max: f64,
) -> Result<f64, BoundsError> {
    if gamma_max <= 0.0 {
        return Err(BoundsError::NonpositiveGammaMax(gamma_max));
    }
    let tail: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(g, _)| g >= gamma_max)
        .collect();
    if tail.len() < 2 {
        return Err(BoundsError::InsufficientTabulation);
    }
    let mut mass = 0.0;
    let mut loss = 0.0;
    for pair in tail.windows(2) {
        let (g0, f0) = pair[0];
        let (g1, f1) = pair[1];
        let w = 0.5 * (g1 - g0);
        mass += w * (f0 + f1);
        loss += w * (f0 * (1.0 + p_max * g0).ln() + f1 * (1.0 + p_max * g1).ln());
    }
    if mass <= 0.0 {
        return Err(BoundsError::InsufficientTabulation);
    }
    Ok(loss / mass)
}

/// Every closed-form constant and bound for a configuration, in one place.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    /// Drift constant B = max(e_c_max, dt*p_max)^2 / 2 (J^2).
    pub b_const: f64,
    /// Largest admissible drift weight keeping the battery within capacity.
    pub v_max: f64,
    /// Queue shift A = dt*p_max + e_min + V*zeta_max (J).
    pub a_shift: f64,
    /// Virtual-queue lower bound (J, nonpositive).
    pub x_low: f64,
    /// Virtual-queue upper bound, equals e_c_max (J).
    pub x_up: f64,
    /// Optimality-gap bound B/V under bounded fading (nats).
    pub gap_bounded: f64,
    /// Outage constant G (nats).
    pub g_const: f64,
    /// Combined gap bound (1 - eta)*B/V + eta*G (nats).
    pub gap_total: f64,
    /// Outage probability the cap was designed for.
    pub eta: f64,
}

/// Evaluates all constants and bounds for a battery/controller/channel triple.
pub fn bound_report(
    battery: &BatteryConfig,
    params: &ControllerParams,
    channel: &ChannelConfig,
) -> Result<BoundReport, BoundsError> {
    let g_const = g_constant(channel, battery.p_max, params.gamma_max)?;
    let eta = channel.outage_eta;
    let gap_bounded = params.b_const / params.v;
    Ok(BoundReport {
        b_const: params.b_const,
        v_max: params.v_max,
        a_shift: params.a,
        x_low: params.x_low,
        x_up: params.x_up,
        gap_bounded,
        g_const,
        gap_total: (1.0 - eta) * gap_bounded + eta * g_const,
        eta,
    })
}
