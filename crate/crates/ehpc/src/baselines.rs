//! Comparison controllers: energy-adaptive water-filling with known fading
//! statistics, the greedy maximum-power rule, and power halving.

use thiserror::Error;

use crate::battery::BatteryConfig;
use crate::bounds::upper_incomplete_gamma;
use crate::numerics::{adaptive_quadrature, bisect, truncate_upper, RootError};
use crate::stochastic::GainDensity;

#[derive(Debug, Clone, Error)]
pub enum BaselineError {
    #[error("no finite cutoff for battery level {e_b} J")]
    NoFiniteCutoff { e_b: f64 },
    #[error("cutoff solve failed: {0}")]
    CutoffSolve(#[from] RootError),
}

/// Energy-adaptive water-filling configuration: the true gain density of the
/// generating channel (supplied analytically, not estimated) and the residual
/// tolerance of the cutoff solve.
#[derive(Debug, Clone, Copy)]
pub struct EawfConfig {
    pub density: GainDensity,
    pub root_tol: f64,
}

impl EawfConfig {
    pub fn new(density: GainDensity) -> Self {
        EawfConfig {
            density,
            root_tol: 1e-9,
        }
    }
}

/// Left side of the cutoff equation,
/// `integral_{g0}^inf (1/g0 - 1/g) f(g) dg`,
/// strictly decreasing in `g0` from +inf to 0.
///
/// Exponential densities use the closed form
/// `e^(-g0/mean)/g0 - E1(g0/mean)/mean`; Gamma branch sums are integrated
/// numerically.
pub fn eawf_lhs(density: &GainDensity, gamma0: f64) -> f64 {
    match *density {
        GainDensity::Exponential { mean } => {
            let y = gamma0 / mean;
            ((-y).exp() / gamma0) - upper_incomplete_gamma(0, y).unwrap_or(0.0) / mean
        }
        GainDensity::GammaBranches { .. } => {
            let f = |g: f64| (1.0 / gamma0 - 1.0 / g) * density.pdf(g);
            let hi = truncate_upper(&f, gamma0, 1e-18);
            adaptive_quadrature(&f, gamma0, hi, 1e-12)
        }
    }
}

/// Solves the cutoff fade `gamma0` whose water level spends exactly the
/// current battery level; bisection on [1e-12, hi] with the upper bracket
/// doubled until the residual changes sign.
pub fn eawf_cutoff(cfg: &EawfConfig, e_b: f64) -> Result<f64, BaselineError> {
    if e_b <= 0.0 {
        return Err(BaselineError::NoFiniteCutoff { e_b });
    }
    let f = |g0: f64| eawf_lhs(&cfg.density, g0) - e_b;
    let lo = 1e-12;
    let mut hi = cfg.density.mean().max(1.0);
    while f(hi) > 0.0 && hi < 1e12 {
        hi *= 2.0;
    }
    Ok(bisect(&f, lo, hi, cfg.root_tol, 400)?)
}

/// Water-filling power against the cutoff:
/// `min([1/gamma0 - 1/gamma]+, p_max, supply cap)`.
pub fn eawf_decide(
    cfg: &EawfConfig,
    battery: &BatteryConfig,
    e_b: f64,
    gamma: f64,
) -> Result<f64, BaselineError> {
    let cutoff = match eawf_cutoff(cfg, e_b) {
        Ok(g0) => g0,
        Err(BaselineError::NoFiniteCutoff { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    if gamma <= cutoff {
        return Ok(0.0);
    }
    let water = (1.0 / cutoff - 1.0 / gamma).max(0.0);
    Ok(water.min(battery.feasible_power_cap(e_b)))
}

/// Maximum possible power each slot: `min((e_b - e_min)/(rho_d*dt), p_max)`.
pub fn greedy_decide(battery: &BatteryConfig, e_b: f64) -> f64 {
    battery.feasible_power_cap(e_b)
}

/// Half of the greedy power, conserving energy for later slots.
pub fn halving_decide(battery: &BatteryConfig, e_b: f64) -> f64 {
    0.5 * greedy_decide(battery, e_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn exp_density() -> GainDensity {
        GainDensity::Exponential { mean: 10.0 }
    }

    fn quadrature_lhs(density: &GainDensity, gamma0: f64) -> f64 {
        let f = |g: f64| (1.0 / gamma0 - 1.0 / g) * density.pdf(g);
        let hi = truncate_upper(&f, gamma0, 1e-18);
        adaptive_quadrature(&f, gamma0, hi, 1e-13)
    }

    #[test]
    fn lhs_closed_form_matches_quadrature_exponential() {
        let d = exp_density();
        for g0 in [0.01, 0.1, 1.0, 5.0, 20.0] {
            assert_relative_eq!(
                eawf_lhs(&d, g0),
                quadrature_lhs(&d, g0),
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn lhs_gamma_branches_matches_incomplete_gamma_route() {
        // independent evaluation through incomplete-gamma identities:
        // integral (1/g0) f = tail/g0, integral f/g = Gamma(n-1, y)/((n-1)! mean)
        let d = GainDensity::GammaBranches {
            n: 2,
            branch_mean: 3.0,
        };
        for g0 in [0.05, 0.5, 2.0, 10.0] {
            let y = g0 / 3.0;
            let tail_term = d.tail(g0) / g0;
            let inverse_term = upper_incomplete_gamma(1, y).unwrap() / (1.0 * 3.0);
            let expected = tail_term - inverse_term;
            assert_relative_eq!(eawf_lhs(&d, g0), expected, max_relative = 1e-8);
        }
    }

    #[test]
    fn cutoff_solves_to_residual() {
        let cfg = EawfConfig::new(exp_density());
        let g0 = eawf_cutoff(&cfg, 1.0).unwrap();
        assert!(g0 > 0.0);
        assert!((eawf_lhs(&cfg.density, g0) - 1.0).abs() < cfg.root_tol);
        // verify the root against the integral form
        assert_relative_eq!(quadrature_lhs(&cfg.density, g0), 1.0, max_relative = 1e-6);
    }

    #[test]
    fn cutoff_moves_with_battery_level() {
        let cfg = EawfConfig::new(exp_density());
        let tiny = eawf_cutoff(&cfg, 1e-6).unwrap();
        let huge = eawf_cutoff(&cfg, 1e6).unwrap();
        // independently solved: 73.12 and 1.0e-6 for the two extremes
        assert!((tiny - 73.12).abs() < 0.05, "got {tiny}");
        assert!((huge - 1e-6).abs() < 1e-9, "got {huge}");
        assert!(eawf_cutoff(&cfg, 0.0).is_err());
    }

    #[test]
    fn decide_below_cutoff_is_silent() {
        let cfg = EawfConfig::new(exp_density());
        let battery = BatteryConfig::default();
        let g0 = eawf_cutoff(&cfg, 1.0).unwrap();
        assert_eq!(eawf_decide(&cfg, &battery, 1.0, g0 * 0.5).unwrap(), 0.0);
    }

    #[test]
    fn decide_caps_at_p_max() {
        // cutoff 0.1 at some battery level, gain 1: water level 10 - 1 = 9,
        // capped by p_max = 0.5
        let cfg = EawfConfig::new(exp_density());
        let battery = BatteryConfig::default();
        // find the battery level whose cutoff is 0.1
        let e_b = eawf_lhs(&cfg.density, 0.1);
        let p = eawf_decide(&cfg, &battery, e_b, 1.0).unwrap();
        assert_relative_eq!(p, battery.p_max, epsilon = 1e-9);
    }

    #[test]
    fn decide_empty_battery_is_silent() {
        let cfg = EawfConfig::new(exp_density());
        let battery = BatteryConfig::default();
        assert_eq!(eawf_decide(&cfg, &battery, 0.0, 30.0).unwrap(), 0.0);
    }

    #[test]
    fn greedy_hand_values() {
        let battery = BatteryConfig::default();
        assert_relative_eq!(greedy_decide(&battery, 0.2), 0.2, epsilon = 1e-15);
        assert_relative_eq!(greedy_decide(&battery, 50.0), 0.5, epsilon = 1e-15);
        assert_eq!(greedy_decide(&battery, 0.0), 0.0);
    }

    #[test]
    fn halving_hand_values() {
        let battery = BatteryConfig::default();
        assert_relative_eq!(halving_decide(&battery, 0.2), 0.1, epsilon = 1e-15);
        assert_relative_eq!(halving_decide(&battery, 50.0), 0.25, epsilon = 1e-15);
        assert_eq!(halving_decide(&battery, 0.0), 0.0);
    }

    proptest! {
        /// The cutoff-equation left side is strictly decreasing, which is what
        /// makes the bisection bracket valid.
        #[test]
        fn lhs_strictly_decreasing(
            mean in 0.5f64..20.0,
            g0 in 0.01f64..20.0,
            bump in 0.05f64..5.0,
        ) {
            let d = GainDensity::Exponential { mean };
            prop_assert!(eawf_lhs(&d, g0 + bump) < eawf_lhs(&d, g0));
            let d2 = GainDensity::GammaBranches { n: 3, branch_mean: mean };
            prop_assert!(eawf_lhs(&d2, g0 + bump) < eawf_lhs(&d2, g0));
        }

        /// Baseline powers always satisfy the power and supply constraints.
        #[test]
        fn baseline_feasibility(e_b in 0.0f64..50.0, gamma in 0.01f64..200.0) {
            let battery = BatteryConfig::default();
            let cfg = EawfConfig::new(exp_density());
            for p in [
                greedy_decide(&battery, e_b),
                halving_decide(&battery, e_b),
                eawf_decide(&cfg, &battery, e_b, gamma).unwrap(),
            ] {
                prop_assert!(p >= 0.0 && p <= battery.p_max);
                prop_assert!(battery.rho_d * battery.dt * p <= e_b - battery.e_min + 1e-9);
            }
        }
    }
}
