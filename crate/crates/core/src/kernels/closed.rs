//! Closed forms of the fractional heat kernel at the two classical
//! endpoints, used in production for `s in {1/2, 1}` and as exact oracles
//! for the quadrature engine everywhere.
//!
//! With the transform convention `hat P_s(xi, t) = e^{-4 pi^2 t |xi|^{2s}}`:
//! - `s = 1`: Gauss-Weierstrass, `P_1(x, t) = (4 pi t)^{-n/2} e^{-|x|^2/(4t)}`;
//! - `s = 1/2`: Poisson, `P_{1/2}(x, t) = c_n 2 pi t / ((2 pi t)^2 + |x|^2)^{(n+1)/2}`
//!   with `c_n = Gamma((n+1)/2) / pi^{(n+1)/2}`.
//!
//! Radial self-similar profiles are taken at `t = 1`:
//! `P_s(x, t) = t^{-n/(2s)} phi_{n,s}(|x| t^{-1/(2s)})`.

use statrs::function::gamma::gamma;

/// Gauss-Weierstrass profile `phi_{n,1}(rho) = (4 pi)^{-n/2} e^{-rho^2/4}`.
pub fn gauss_profile(n: usize, rho: f64) -> f64 {
    (4.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0) * (-rho * rho / 4.0).exp()
}

/// Radial derivative of the Gauss-Weierstrass profile.
pub fn gauss_profile_prime(n: usize, rho: f64) -> f64 {
    -(rho / 2.0) * gauss_profile(n, rho)
}

/// Poisson normalization `c_n = Gamma((n+1)/2) / pi^{(n+1)/2}`.
pub fn poisson_constant(n: usize) -> f64 {
    let half = (n as f64 + 1.0) / 2.0;
    gamma(half) / std::f64::consts::PI.powf(half)
}

/// Poisson profile `phi_{n,1/2}(rho) = c_n 2 pi / ((2 pi)^2 + rho^2)^{(n+1)/2}`.
pub fn poisson_profile(n: usize, rho: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    poisson_constant(n) * two_pi * (two_pi * two_pi + rho * rho).powf(-(n as f64 + 1.0) / 2.0)
}

/// Radial derivative of the Poisson profile.
pub fn poisson_profile_prime(n: usize, rho: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    -(n as f64 + 1.0) * rho / (two_pi * two_pi + rho * rho) * poisson_profile(n, rho)
}

/// Full Gauss-Weierstrass kernel on `R^n x (0, inf)`; 0 for `t <= 0`.
pub fn heat_kernel(x: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let n = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (4.0 * std::f64::consts::PI * t).powf(-n / 2.0) * (-r2 / (4.0 * t)).exp()
}

/// Full Poisson kernel on `R^n x (0, inf)`; 0 for `t <= 0`.
pub fn poisson_kernel(x: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let n = x.len();
    let two_pi_t = 2.0 * std::f64::consts::PI * t;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    poisson_constant(n) * two_pi_t * (two_pi_t * two_pi_t + r2).powf(-(n as f64 + 1.0) / 2.0)
}

/// Time-profile family `e^{-1/tau} tau^{-p}` for `tau > 0`, else 0.
///
/// The Gauss-Weierstrass kernel factorizes through these along time rays:
/// `P_1(x, t) = pi^{-n/2} |x|^{-n} f(n/2, 4t/|x|^2)`, and its time
/// derivatives through `p = n/2 + 1, n/2 + 2`.
pub fn exp_inv_profile(p: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    (-1.0 / tau).exp() * tau.powf(-p)
}

/// d/dtau of [`exp_inv_profile`]: `(1/tau^2 - p/tau) f(p, tau)`.
pub fn exp_inv_profile_prime(p: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    (1.0 / (tau * tau) - p / tau) * exp_inv_profile(p, tau)
}
