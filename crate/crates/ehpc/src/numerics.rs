//! Shared numerical routines: adaptive Gauss–Kronrod quadrature and
//! bracketed bisection root finding.

/// 15-point Kronrod abscissae on [0, 1] side of the symmetric rule.
const KRONROD_NODES: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];

const KRONROD_WEIGHTS: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

/// Gauss weights for the embedded 7-point rule (nodes 1, 3, 5, 7 above).
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss–Kronrod 7–15 panel. Returns (K15 estimate, |K15 − G7| error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &wk)) in KRONROD_NODES.iter().zip(&KRONROD_WEIGHTS).enumerate() {
        let (lo, hi) = (f(mid - half * x), f(mid + half * x));
        let pair = if x == 0.0 { lo } else { lo + hi };
        kronrod += wk * pair;
        // odd indices (and the center node at i = 7) carry the embedded G7 rule
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

/// Adaptive quadrature of `f` over [a, b] to absolute tolerance `abs_tol`,
/// by recursive interval splitting of the GK 7–15 panel.
///
/// Each subinterval gets an error budget proportional to its width, so the
/// accepted panel errors sum to at most `abs_tol`; a panel is also accepted
/// once its error estimate reaches the floating-point floor of its value.
pub fn adaptive_quadrature<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let tol = abs_tol.max(1e-300);
    let span = b - a;
    let mut total = 0.0;
    let mut stack = vec![(a, b)];
    let mut panels = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        let (val, err) = gk15(f, lo, hi);
        panels += 1;
        // the |K15 - G7| estimate bottoms out at the rounding noise of the
        // two weighted node sums (tens of ulps); below that, splitting
        // further cannot help
        if err <= tol * (hi - lo) / span
            || err <= 100.0 * f64::EPSILON * val.abs()
            || hi - lo <= 1e-14 * (1.0 + lo.abs() + hi.abs())
            || panels > 100_000
        {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid));
            stack.push((mid, hi));
        }
    }
    total
}

/// Upper truncation point for a semi-infinite integral of a decaying
/// integrand: scans upward from `lo` until `f` falls below `cutoff_frac`
/// of the largest value seen.
pub fn truncate_upper<F: Fn(f64) -> f64>(f: &F, lo: f64, cutoff_frac: f64) -> f64 {
    let mut peak = 0.0f64;
    for i in 0..=20 {
        peak = peak.max(f(lo + i as f64).abs());
    }
    if peak == 0.0 {
        return lo + 1.0;
    }
    let mut hi = lo + 1.0;
    let mut step = 1.0;
    while f(hi).abs() > cutoff_frac * peak && hi - lo < 1e6 {
        step *= 2.0;
        hi += step;
    }
    hi
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("bisection did not reach residual {tol} (best residual {best})")]
    NoConvergence { tol: f64, best: f64 },
}

/// Bisection on a bracketing interval until `|f(x)| < residual_tol`.
pub fn bisect<F: Fn(f64) -> f64>(
    f: &F,
    mut lo: f64,
    mut hi: f64,
    residual_tol: f64,
    max_iter: usize,
) -> Result<f64, RootError> {
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo.abs() < residual_tol {
        return Ok(lo);
    }
    if f_hi.abs() < residual_tol {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(RootError::NoBracket { lo, hi, f_lo, f_hi });
    }
    let rising = f_lo < 0.0;
    let mut best = f_lo.abs().min(f_hi.abs());
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() < residual_tol {
            return Ok(mid);
        }
        best = best.min(f_mid.abs());
        if (f_mid < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(RootError::NoConvergence {
        tol: residual_tol,
        best,
    })
}

/// n! as f64; overflows to infinity above n = 170.
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// SplitMix64-style avalanche used to derive independent RNG seeds.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a deterministic seed from a (base, stream, counter) triple, so that
/// replicas, sweep points, and slots get independent reproducible streams.
pub fn mix_seed(base: u64, stream: u64, counter: u64) -> u64 {
    mix64(mix64(mix64(base) ^ stream) ^ counter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadrature_polynomial_exact() {
        // K15 integrates low-degree polynomials exactly.
        let val = adaptive_quadrature(&|x: f64| 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert_relative_eq!(val, 8.0, max_relative = 1e-13);
    }

    #[test]
    fn quadrature_exponential_tail() {
        let val = adaptive_quadrature(&|x: f64| (-x).exp(), 0.0, 50.0, 1e-13);
        assert_relative_eq!(val, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_peaked_integrand() {
        // Narrow Gaussian forces subdivision.
        let s = 1e-3;
        let f = |x: f64| (-0.5 * (x / s).powi(2)).exp();
        let val = adaptive_quadrature(&f, -1.0, 1.0, 1e-14);
        let exact = s * (2.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(val, exact, max_relative = 1e-9);
    }

    #[test]
    fn bisect_finds_root() {
        let root = bisect(&|x: f64| x * x - 2.0, 0.0, 2.0, 1e-13, 200).unwrap();
        assert_relative_eq!(root, 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn bisect_rejects_bad_bracket() {
        assert!(matches!(
            bisect(&|x: f64| x * x + 1.0, 0.0, 1.0, 1e-12, 100),
            Err(RootError::NoBracket { .. })
        ));
    }

    #[test]
    fn mix_seed_distinguishes_streams() {
        let a = mix_seed(1, 0, 0);
        let b = mix_seed(1, 1, 0);
        let c = mix_seed(1, 0, 1);
        let d = mix_seed(2, 0, 0);
        assert!(a != b && a != c && a != d && b != c);
        assert_eq!(a, mix_seed(1, 0, 0));
    }

    #[test]
    fn truncate_upper_covers_tail() {
        let f = |x: f64| (-x).exp();
        let hi = truncate_upper(&f, 0.0, 1e-18);
        assert!(f(hi) <= 1e-18);
    }
}
