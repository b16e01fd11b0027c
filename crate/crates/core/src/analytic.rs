//! Closed forms and quadratures used as reference values.

use std::f64::consts::{PI, SQRT_2};

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Composite Simpson rule with `n` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Discounted up-and-in call on geometric Brownian motion with continuous
/// monitoring, maturity 1: `e^{-r} E[(X(1) - K)^+ 1{max X >= H}]`.
///
/// Closed form (Reiner-Rubinstein) for `x0 < H` and `K <= H`; when
/// `x0 >= H` the option is already knocked in.
pub fn up_and_in_call_closed_form(x0: f64, strike: f64, barrier: f64, r: f64, sigma: f64) -> f64 {
    if x0 >= barrier {
        return vanilla_call(x0, strike, r, sigma);
    }
    assert!(strike <= barrier, "closed form assumes strike <= barrier");
    let s = sigma;
    let lambda = (r + 0.5 * s * s) / (s * s);
    let x1 = (x0 / barrier).ln() / s + lambda * s;
    let y = (barrier * barrier / (x0 * strike)).ln() / s + lambda * s;
    let y1 = (barrier / x0).ln() / s + lambda * s;
    let disc = (-r).exp();
    let ratio = barrier / x0;
    x0 * normal_cdf(x1) - strike * disc * normal_cdf(x1 - s)
        - x0 * ratio.powf(2.0 * lambda) * (normal_cdf(-y) - normal_cdf(-y1))
        + strike * disc * ratio.powf(2.0 * lambda - 2.0) * (normal_cdf(-y + s) - normal_cdf(-y1 + s))
}

/// Black-Scholes call, maturity 1.
pub fn vanilla_call(x0: f64, strike: f64, r: f64, sigma: f64) -> f64 {
    let d1 = ((x0 / strike).ln() + r + 0.5 * sigma * sigma) / sigma;
    x0 * normal_cdf(d1) - strike * (-r).exp() * normal_cdf(d1 - sigma)
}

/// Same quantity as [`up_and_in_call_closed_form`], computed by integrating
/// the payoff against the reflection-principle joint law of a drifted
/// Brownian motion and its maximum.
///
/// With `W = log(X / x0) / sigma`, a Brownian motion with drift
/// `nu = (r - sigma^2 / 2) / sigma`, and `b = log(H / x0) / sigma`:
/// `P(max W >= b, W(1) in dw) = phi(w - nu) dw` for `w >= b` and
/// `exp(nu w - nu^2 / 2) phi(2b - w) dw` for `w < b`.
pub fn up_and_in_call_reflection(x0: f64, strike: f64, barrier: f64, r: f64, sigma: f64) -> f64 {
    let nu = (r - 0.5 * sigma * sigma) / sigma;
    let b = (barrier / x0).ln() / sigma;
    let k = (strike / x0).ln() / sigma;
    let call = |w: f64| (x0 * (sigma * w).exp() - strike).max(0.0);
    let panels = 20_000;
    let hi = b.max(nu) + 12.0;
    let above = if b > 0.0 {
        simpson(|w| call(w) * normal_pdf(w - nu), b, hi, panels)
    } else {
        // already knocked in: plain expectation
        let lo = k.min(nu - 12.0);
        simpson(|w| call(w) * normal_pdf(w - nu), lo, hi, 2 * panels)
    };
    let below = if b > 0.0 && k < b {
        simpson(
            |w| call(w) * (nu * w - 0.5 * nu * nu).exp() * normal_pdf(2.0 * b - w),
            k,
            b,
            panels,
        )
    } else {
        0.0
    };
    (-r).exp() * (above + below)
}

/// Transition density of the Bessel(3) process from `x` to `y` over time
/// `t`: `(y / x) (phi_t(y - x) - phi_t(y + x))`.
pub fn bessel3_density(t: f64, x: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let s = t.sqrt();
    (y / x) * (normal_pdf((y - x) / s) - normal_pdf((y + x) / s)) / s
}

/// `E[f(R(t))]` for a Bessel(3) process started at `x0`, by quadrature of
/// the transition density.
pub fn bessel3_expectation(x0: f64, t: f64, f: impl Fn(f64) -> f64) -> f64 {
    let hi = x0 + 14.0 * t.sqrt();
    // the density vanishes linearly at 0, so f(y) = 1/y stays integrable
    let g = |y: f64| if y <= 0.0 { 0.0 } else { f(y) * bessel3_density(t, x0, y) };
    simpson(g, 0.0, hi, 40_000)
}

/// `E[R(1)]` for Bessel(3) from `x0`.
pub fn bessel3_mean(x0: f64) -> f64 {
    bessel3_expectation(x0, 1.0, |y| y)
}

/// `E[1 / R(1)]` for Bessel(3) from `x0`; below `1 / x0` because `1/R` is a
/// strict local martingale.
pub fn bessel3_reciprocal_mean(x0: f64) -> f64 {
    bessel3_expectation(x0, 1.0, |y| 1.0 / y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-1.959_963_984_540_054) - 0.025).abs() < 1e-15);
    }

    #[test]
    fn simpson_polynomial_exact() {
        let v = simpson(|x| x * x * x - x, 0.0, 2.0, 4);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn up_and_in_routes_agree() {
        let a = up_and_in_call_closed_form(0.8, 0.5, 1.0, 0.1, 0.3);
        let b = up_and_in_call_reflection(0.8, 0.5, 1.0, 0.1, 0.3);
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        assert!((a - 0.2630).abs() < 5e-4, "{a}");
        for (x0, k, hb, r, s) in [(1.0, 0.9, 1.3, 0.05, 0.2), (0.5, 0.5, 0.7, 0.0, 0.5), (1.2, 1.0, 1.1, 0.02, 0.4)] {
            let a = up_and_in_call_closed_form(x0, k, hb, r, s);
            let b = up_and_in_call_reflection(x0, k, hb, r, s);
            assert!((a - b).abs() < 1e-7, "{x0} {k} {hb}: {a} vs {b}");
        }
    }

    #[test]
    fn up_and_in_below_vanilla() {
        let ui = up_and_in_call_closed_form(0.8, 0.5, 1.0, 0.1, 0.3);
        assert!(ui < vanilla_call(0.8, 0.5, 0.1, 0.3));
        // huge barrier: almost never knocked in
        assert!(up_and_in_call_closed_form(0.8, 0.5, 50.0, 0.1, 0.3) < 1e-12);
    }

    #[test]
    fn bessel_quadrature_matches_gaussian_identities() {
        // E[R(1)] = E[Z^2 sgn Z] with Z ~ N(1, 1)
        let mean = 2.0 - 4.0 * normal_cdf(-1.0) + 2.0 * normal_pdf(1.0);
        assert!((bessel3_mean(1.0) - mean).abs() < 1e-9);
        assert!((bessel3_mean(1.0) - 1.849_32).abs() < 1e-4);
        // E[1/R(1)] = P(N(1,1) > 0) - P(N(-1,1) > 0)
        let recip = normal_cdf(1.0) - normal_cdf(-1.0);
        assert!((bessel3_reciprocal_mean(1.0) - recip).abs() < 1e-9);
        assert!(bessel3_reciprocal_mean(1.0) < 1.0);
        assert!((bessel3_expectation(1.0, 1.0, |_| 1.0) - 1.0).abs() < 1e-10);
    }
}
