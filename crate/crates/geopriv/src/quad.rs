//! Adaptive Gauss-Kronrod quadrature with analytic exponential tails.
//!
//! Radial integrals in this crate run to infinity. The finite part
//! `[0, support]` is handled by adaptive G7/K15 bisection; beyond the
//! support the integrand is modelled as `c * exp(-b r)` with `(c, b)`
//! fitted to the density's own samples, and the remaining moments have
//! closed forms.

use crate::error::{Error, Result};

/// 15-point Kronrod nodes on [0, 1] half-interval (positive abscissae).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

/// 7-point Gauss weights matching the odd Kronrod nodes.
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One G7/K15 panel: returns (kronrod value, error estimate).
fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut result_gauss = WG[3] * fc;
    let mut result_kronrod = WGK[7] * fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        result_kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            result_gauss += WG[j / 2] * (f1 + f2);
        }
    }
    result_kronrod *= half;
    result_gauss *= half;
    // |K15 - G7| estimates the Gauss error and overstates the Kronrod
    // error, which keeps the subdivision conservative.
    let err = (result_kronrod - result_gauss).abs();
    (result_kronrod, err)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// `breakpoints` seeds the initial segmentation; pass the integrand's
/// known kink locations (loss thresholds, table knots) so panels never
/// straddle one.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    breakpoints: &[f64],
) -> Result<f64> {
    if !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!("bad integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();

    let mut segments: Vec<Segment> = cuts
        .windows(2)
        .map(|w| {
            let (value, error) = kronrod_panel(&f, w[0], w[1]);
            Segment { a: w[0], b: w[1], value, error }
        })
        .collect();

    const MAX_SEGMENTS: usize = 4096;
    loop {
        let total_error: f64 = segments.iter().map(|s| s.error).sum();
        if total_error <= abs_tol {
            return Ok(segments.iter().map(|s| s.value).sum());
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(Error::Numeric {
                msg: format!(
                    "quadrature did not converge: error {total_error:.3e} > {abs_tol:.3e} \
                     after {MAX_SEGMENTS} panels"
                ),
                partial: Some(segments.iter().map(|s| s.value).sum()),
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval at floating-point resolution; accept its value as is.
            let mut done = seg;
            done.error = 0.0;
            segments.push(done);
            continue;
        }
        for (lo, hi) in [(seg.a, mid), (mid, seg.b)] {
            let (value, error) = kronrod_panel(&f, lo, hi);
            segments.push(Segment { a: lo, b: hi, value, error });
        }
    }
}

/// Closed form of `c * \int_h^\infty e^{-b r} r dr` (decay rate `b > 0`).
pub fn exp_tail_r1(c: f64, b: f64, h: f64) -> f64 {
    c * (-b * h).exp() * (b * h + 1.0) / (b * b)
}

/// Closed form of `c * \int_h^\infty e^{-b r} r^2 dr`.
pub fn exp_tail_r2(c: f64, b: f64, h: f64) -> f64 {
    c * (-b * h).exp() * (b * h * (b * h + 2.0) + 2.0) / (b * b * b)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre polynomial from the Chebyshev initial guess.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let (mut p0, mut p1) = (1.0_f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((-x, w));
        if n - 1 - i != i {
            out.push((x, w));
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Least-squares fit of `log f = log c - b r` over the given abscissae.
/// Returns `None` when any value is non-positive (no exponential model)
/// or the slope does not decay.
pub fn fit_log_linear(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 || points.iter().any(|&(_, v)| !(v > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(r, v) in points {
        let y = v.ln();
        sx += r;
        sy += y;
        sxx += r * r;
        sxy += r * y;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let b = -slope;
    if !(b > 0.0) || !b.is_finite() {
        return None;
    }
    Some((intercept.exp(), b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, &[]).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn kinked_integrand_with_breakpoint() {
        // |x - 1| over [0, 3]: 0.5 + 2.0
        let v = integrate(|x: f64| (x - 1.0).abs(), 0.0, 3.0, 1e-10, &[1.0]).unwrap();
        assert!((v - 2.5).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_converges() {
        let v = integrate(|x: f64| (10.0 * x).sin(), 0.0, std::f64::consts::PI, 1e-10, &[]).unwrap();
        let exact = (1.0 - (10.0 * std::f64::consts::PI).cos()) / 10.0;
        assert!((v - exact).abs() < 1e-9);
    }

    #[test]
    fn tail_moments_match_quadrature() {
        let (c, b, h) = (0.7, 1.3, 2.0);
        let t1 = integrate(|r| c * (-b * r).exp() * r, h, 60.0, 1e-12, &[]).unwrap();
        assert!((t1 - exp_tail_r1(c, b, h)).abs() < 1e-10);
        let t2 = integrate(|r| c * (-b * r).exp() * r * r, h, 80.0, 1e-12, &[]).unwrap();
        assert!((t2 - exp_tail_r2(c, b, h)).abs() < 1e-10);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [4usize, 16, 48] {
            let nodes = gauss_legendre(n);
            let total: f64 = nodes.iter().map(|&(_, w)| w).sum();
            assert!((total - 2.0).abs() < 1e-13, "n={n} weight sum {total}");
            // x^6 over [-1, 1] = 2/7; exact for n >= 4.
            let v: f64 = nodes.iter().map(|&(x, w)| w * x.powi(6)).sum();
            assert!((v - 2.0 / 7.0).abs() < 1e-13, "n={n} moment {v}");
        }
    }

    #[test]
    fn log_linear_fit_recovers_exponential() {
        let pts: Vec<(f64, f64)> = (0..16)
            .map(|i| {
                let r = 1.0 + 0.25 * i as f64;
                (r, 0.42 * (-1.7 * r).exp())
            })
            .collect();
        let (c, b) = fit_log_linear(&pts).unwrap();
        assert!((c - 0.42).abs() < 1e-10, "c = {c}");
        assert!((b - 1.7).abs() < 1e-12, "b = {b}");
    }
}
