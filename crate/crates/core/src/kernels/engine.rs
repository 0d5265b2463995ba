//! Oscillatory quadrature for the radial multiplier profiles
//!
//! `psi_q(rho) = 2 pi rho^{1 - n/2} int_0^inf e^{-4 pi^2 r^{2s}} r^{n/2 + q}
//!               J_{n/2-1}(2 pi r rho) dr`,
//!
//! the inverse Fourier transform at `t = 1` of `|xi|^q e^{-4 pi^2 |xi|^{2s}}`
//! written in radial (Hankel) form. `q = 0` is the kernel profile itself,
//! `q = 2 beta` the spatial fractional derivative of order `beta`.
//!
//! Three routes share one engine:
//! - `rho = 0`: exact moment formula;
//! - small `rho`: even Taylor series in `rho` with Gamma-function moments,
//!   abandoned if its (possibly asymptotic) terms stop shrinking;
//! - otherwise: panels of half an oscillation period, Gauss-Legendre 16 per
//!   panel, geometric grading into the `r = 0` endpoint (where `r^{2s}` and
//!   `r^q` have branch-point derivatives) and an envelope-based tail cut.
//!
//! Everything is generic over the scalar backend: `f64` has condition number
//! about `e^{rho^2/4}` at `s = 1` (harmless for `s < 1` where profiles decay
//! polynomially), and the wide backend removes that ceiling for validation.

use super::bessel::{bessel_j, gamma_half_integer};
use super::quad::GaussLegendre;
use super::real::Real;
use statrs::function::gamma::gamma;

/// Which route produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    MomentFormula,
    SmallRhoSeries,
    Panels,
}

/// Engine output with conditioning diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct EngineEval {
    pub value: f64,
    /// Sum of absolute panel contributions over |result|; multiplied by the
    /// backend unit roundoff this estimates the cancellation error floor.
    pub condition: f64,
    pub panels: usize,
    pub route: Route,
}

impl EngineEval {
    /// Order-of-magnitude estimate of the relative error floor from
    /// cancellation at this precision. A diagnostic, not a bound: panel
    /// magnitudes ignore cancellation inside panels, so the true error can
    /// sit one to two orders above this in mildly conditioned regimes.
    pub fn error_floor(&self, eps: f64) -> f64 {
        self.condition * eps * 32.0
    }
}

#[derive(Debug, Clone)]
pub struct ProfileEngine<R: Real> {
    gl: GaussLegendre<R>,
    /// Envelope tail cut, relative to the envelope maximum.
    pub tail_eps: f64,
    /// Geometric grading depth into the left endpoint.
    pub grading_depth: usize,
    pub max_panels: usize,
}

impl<R: Real> Default for ProfileEngine<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> ProfileEngine<R> {
    pub fn new() -> Self {
        let tail_eps = (R::eps() * 1e-2).max(1e-95);
        let grading_depth = ((-tail_eps.log2()).ceil() as usize + 12).min(330);
        // Half-period panels with 16 nodes leave a pure quadrature floor
        // near 1e-31; wide backends chase exponentially small tails
        // (e^{-100} at the Gaussian endpoint) and need 32 nodes, which
        // pushes the floor below 1e-75.
        let nodes = if R::eps() > 1e-30 { 16 } else { 32 };
        ProfileEngine {
            gl: GaussLegendre::new(nodes),
            tail_eps,
            grading_depth,
            max_panels: 20_000,
        }
    }

    /// Profile value at radius `rho >= 0`. Panics on parameter contract
    /// violations (`n = 0`, `q < 0`, `s` outside `(0, 1]`); numerical
    /// trouble is reported through the diagnostics, not by panicking.
    pub fn eval(&self, n: usize, s: f64, q: f64, rho: f64) -> EngineEval {
        assert!(n >= 1, "spatial dimension must be positive");
        assert!(q >= 0.0, "multiplier power must be nonnegative");
        assert!(s > 0.0 && s <= 1.0, "scaling exponent outside (0, 1]");
        assert!(rho >= 0.0 && rho.is_finite());
        if rho == 0.0 {
            return EngineEval {
                value: value_at_zero::<R>(n, s, q).to_f64(),
                condition: 1.0,
                panels: 0,
                route: Route::MomentFormula,
            };
        }
        if rho < 0.25 {
            if let Some(value) = small_rho_series::<R>(n, s, q, rho) {
                return EngineEval { value, condition: 1.0, panels: 0, route: Route::SmallRhoSeries };
            }
        }
        self.panel_quadrature(n, s, q, rho)
    }

    fn panel_quadrature(&self, n: usize, s: f64, q: f64, rho: f64) -> EngineEval {
        let p = n as f64 / 2.0 + q;
        let r_max = envelope_cutoff(s, p, self.tail_eps);
        // Half an oscillation period of J(2 pi r rho) per panel, but never
        // fewer than 8 panels across the support.
        let width = (1.0 / (2.0 * rho)).min(r_max / 8.0);
        let n_flat = ((r_max / width).ceil() as usize).min(self.max_panels);
        let two_nu = n as i64 - 2;

        let s_r = R::from_f64(s);
        let q_r = R::from_f64(q);
        let two_pi_rho = R::pi().mul(&R::from_f64(2.0 * rho));
        let four_pi2 = R::pi().mul(&R::pi()).mul(&R::from_f64(4.0));
        let half_n = R::from_f64(n as f64 / 2.0);
        let integrand = |r: &R| -> R {
            // r > 0 on all quadrature nodes.
            let r2s = pow_scaled(r, &s_r, s);
            let envelope = four_pi2.mul(&r2s).neg().exp();
            let power = r.ln().mul(&half_n.add(&q_r)).exp();
            let arg = two_pi_rho.mul(r);
            envelope.mul(&power).mul(&bessel_j(two_nu, &arg))
        };

        // Geometric grading of [0, width] into the endpoint, then flat
        // panels across the rest of the support.
        let mut bounds: Vec<(f64, f64)> = Vec::with_capacity(self.grading_depth + n_flat);
        let mut left = width;
        for _ in 0..self.grading_depth {
            bounds.push((left * 0.5, left));
            left *= 0.5;
        }
        for k in 1..n_flat {
            let a = width * k as f64;
            let b = (width * (k + 1) as f64).min(r_max);
            bounds.push((a, b));
            if b >= r_max {
                break;
            }
        }

        let mut total = R::zero();
        let mut abs_sum = 0.0f64;
        let panels = bounds.len();
        for (a, b) in bounds {
            let contribution =
                self.gl.integrate(&R::from_f64(a), &R::from_f64(b), &integrand);
            abs_sum += contribution.abs().to_f64();
            total = total.add(&contribution);
        }
        // Innermost sliver by midpoint; magnitude is below the tail cut.
        let sliver = integrand(&R::from_f64(left * 0.5)).mul(&R::from_f64(left));
        total = total.add(&sliver);

        // Radial inversion prefactor 2 pi rho^{1 - n/2}.
        let rho_r = R::from_f64(rho);
        let prefactor = R::pi()
            .mul(&R::from_f64(2.0))
            .mul(&rho_r.ln().mul(&R::from_f64(1.0 - n as f64 / 2.0)).exp());
        let value_r = prefactor.mul(&total);
        let value = value_r.to_f64();
        let scale = prefactor.to_f64() * abs_sum;
        let condition = if value != 0.0 { (scale / value).abs() } else { f64::INFINITY };
        EngineEval { value, condition, panels, route: Route::Panels }
    }
}

/// `r^{2s}` with exact fast paths at the closed-form endpoints.
fn pow_scaled<R: Real>(r: &R, s_r: &R, s: f64) -> R {
    if s == 1.0 {
        r.mul(r)
    } else if s == 0.5 {
        r.clone()
    } else {
        r.ln().mul(s_r).mul(&R::from_f64(2.0)).exp()
    }
}

/// `Gamma(z)` in the backend: exact half-integer route when `2z` is an
/// integer, `f64` Gamma lifted otherwise (only sub-f64 backends lose there,
/// and only for parameter combinations with no closed-form validation).
fn gamma_real<R: Real>(z: f64) -> R {
    let two_z = 2.0 * z;
    if (two_z - two_z.round()).abs() < 1e-9 && two_z >= 1.0 {
        gamma_half_integer::<R>(two_z.round() as i64)
    } else {
        R::from_f64(gamma(z))
    }
}

/// Moment of the envelope: `M(j) = int_0^inf e^{-4 pi^2 r^{2s}} r^j dr
/// = Gamma((j+1)/(2s)) / (2s (4 pi^2)^{(j+1)/(2s)})`.
fn envelope_moment<R: Real>(s: f64, j: f64) -> R {
    let a = (j + 1.0) / (2.0 * s);
    let four_pi2 = R::pi().mul(&R::pi()).mul(&R::from_f64(4.0));
    let denom = R::from_f64(2.0 * s).mul(&four_pi2.ln().mul(&R::from_f64(a)).exp());
    gamma_real::<R>(a).div(&denom)
}

/// Exact center value `psi_q(0) = 2 pi^{n/2} / Gamma(n/2) * M(n - 1 + q)`.
pub fn value_at_zero<R: Real>(n: usize, s: f64, q: f64) -> R {
    let nf = n as f64;
    let surface = R::from_f64(2.0)
        .mul(&R::pi().ln().mul(&R::from_f64(nf / 2.0)).exp())
        .div(&gamma_half_integer::<R>(n as i64));
    surface.mul(&envelope_moment::<R>(s, nf - 1.0 + q))
}

/// Even Taylor series at small `rho`:
/// `psi_q(rho) = 2 pi sum_k (-1)^k pi^{n/2 - 1 + 2k} rho^{2k} / (k! Gamma(n/2 + k))
///               * M(n - 1 + q + 2k)`.
///
/// For `s < 1/2` the series is asymptotic; `None` when terms stop shrinking
/// before the backend accuracy target is met.
fn small_rho_series<R: Real>(n: usize, s: f64, q: f64, rho: f64) -> Option<f64> {
    let stop_rel = (R::eps() * 16.0).max(1e-22);
    let nf = n as f64;
    let two_pi = R::pi().mul(&R::from_f64(2.0));
    let rho2 = R::from_f64(rho * rho);
    let mut sum = R::zero();
    let mut prev_mag = f64::INFINITY;
    // pi^{n/2 - 1 + 2k} rho^{2k} / (k! Gamma(n/2 + k)) tracked incrementally.
    let mut factor = R::pi()
        .ln()
        .mul(&R::from_f64(nf / 2.0 - 1.0))
        .exp()
        .div(&gamma_half_integer::<R>(n as i64));
    let mut sign = 1.0;
    for k in 0..200 {
        let term = factor
            .mul(&envelope_moment::<R>(s, nf - 1.0 + q + 2.0 * k as f64))
            .mul(&R::from_f64(sign));
        sum = sum.add(&term);
        let mag = term.abs().to_f64();
        let total = sum.abs().to_f64();
        if mag <= stop_rel * total {
            return Some(two_pi.mul(&sum).to_f64());
        }
        if mag >= prev_mag {
            return None; // asymptotic regime reached before convergence
        }
        prev_mag = mag;
        // Advance: multiply by pi^2 rho^2 / ((k+1)(n/2 + k)).
        let kf = k as f64;
        factor = factor
            .mul(&R::pi())
            .mul(&R::pi())
            .mul(&rho2)
            .div(&R::from_f64(kf + 1.0))
            .div(&R::from_f64(nf / 2.0 + kf));
        sign = -sign;
    }
    None
}

/// Smallest `R` with `e^{-4 pi^2 R^{2s}} R^p <= tail_eps * envelope max`,
/// found by logarithmic fixed-point iteration and padded by 5%.
fn envelope_cutoff(s: f64, p: f64, tail_eps: f64) -> f64 {
    let four_pi2 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
    let r_star = (p / (2.0 * s * four_pi2)).powf(1.0 / (2.0 * s));
    let log_env_max = -four_pi2 * r_star.powf(2.0 * s) + p * r_star.ln();
    let target = tail_eps.ln() + log_env_max;
    let mut r: f64 = (2.0 * r_star).max(1.0);
    for _ in 0..80 {
        let next = ((p * r.ln() - target) / four_pi2).max(1e-6).powf(1.0 / (2.0 * s));
        if (next - r).abs() <= 1e-12 * r {
            r = next;
            break;
        }
        r = next;
    }
    r * 1.05
}
