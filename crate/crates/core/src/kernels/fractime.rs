//! Nonlocal fractional time derivative in symmetric Marchaud form:
//!
//! ```text
//! D^beta f(u) = int_R (f(tau) - f(u)) |tau - u|^{-1-beta} dtau,   beta in (0, 1)
//! ```
//!
//! On the eigenfunction `cos(w t)` this gives `-2 c_beta w^beta cos(w u)`
//! with `c_beta = -Gamma(-beta) cos(pi beta / 2) > 0`.
//!
//! The quadrature splits each side of the singularity into (i) an inner
//! interval `[0, h0]` integrated via a one-sided quadratic fit of
//! `f(u + sigma delta) - f(u)` (exact power-weight moments), (ii) a
//! geometrically graded panel ladder with boundaries refined at the kinks of
//! `f`, and (iii) an analytic far tail driven by a power-law or vanishing
//! model of `f`. Target accuracy is absolute `1e-6 * (1 + |result|)` for the
//! profile shapes used by the kernel layer.

use super::profile::TailModel;
use super::quad::GaussLegendre;
use std::sync::OnceLock;

/// Behavior of the integrand's `f` far out on one side.
#[derive(Debug, Clone, Copy)]
pub enum TailBehavior {
    /// `f` vanishes identically beyond `edge` (absolute coordinate; on the
    /// negative side this means `f(tau) = 0` for `tau < edge`).
    Vanishes { edge: f64 },
    /// `f(tau) ~ model.coeff * |tau|^{model.exponent}` for `|tau| > start`
    /// (start is a positive magnitude). Requires `model.exponent < beta`.
    PowerLaw { start: f64, model: TailModel },
}

/// Quadrature plan for one profile.
#[derive(Debug, Clone)]
pub struct FracDerivPlan {
    pub beta: f64,
    /// Points where `f` is only piecewise smooth (support edges, corners).
    /// Panel boundaries are aligned to these.
    pub kinks: Vec<f64>,
    /// Far-field model for `tau -> -inf`.
    pub neg: TailBehavior,
    /// Far-field model for `tau -> +inf`.
    pub pos: TailBehavior,
    /// Cap on panel width; set to a half-period for oscillatory integrands,
    /// `f64::INFINITY` for decaying profiles.
    pub max_panel: f64,
    /// Inner cutoff scale: `h0 = inner_rel * (1 + |u|)` before kink clamping.
    pub inner_rel: f64,
}

impl FracDerivPlan {
    pub fn new(beta: f64, kinks: Vec<f64>, neg: TailBehavior, pos: TailBehavior) -> Self {
        assert!(beta > 0.0 && beta < 1.0, "beta must lie in (0,1), got {beta}");
        FracDerivPlan {
            beta,
            kinks,
            neg,
            pos,
            max_panel: f64::INFINITY,
            inner_rel: 1e-4,
        }
    }
}

fn gl16() -> &'static GaussLegendre<f64> {
    static GL: OnceLock<GaussLegendre<f64>> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(16))
}

/// Evaluate `D^beta f` at `u` under `plan`.
pub fn frac_deriv(f: &dyn Fn(f64) -> f64, plan: &FracDerivPlan, u: f64) -> f64 {
    let beta = plan.beta;
    let fu = f(u);

    // Inner cutoff: clamped so that [u - h0, u + h0] contains no kink other
    // than u itself (each side then admits a one-sided smooth expansion).
    let mut h0 = plan.inner_rel * (1.0 + u.abs());
    for &k in &plan.kinks {
        let d = (k - u).abs();
        if d > 1e-300 {
            h0 = h0.min(0.45 * d);
        }
    }

    let mut total = 0.0;
    for &sigma in &[1.0f64, -1.0] {
        let behavior = if sigma > 0.0 { plan.pos } else { plan.neg };

        // Outer quadrature horizon (distance from u on this side).
        let delta_max = match behavior {
            TailBehavior::Vanishes { edge } => {
                let d = sigma * (edge - u);
                if d <= 0.0 {
                    // u is at or beyond the support edge on this side:
                    // f vanishes on the whole side, and so does f(u) unless
                    // the other side carries it; the side integral reduces to
                    // the constant term against f(u).
                    if fu != 0.0 && d < 0.0 {
                        // Entire side lies beyond the edge but f(u) != 0
                        // cannot happen when edges delimit the support of f;
                        // treat as pure -f(u) contribution from distance 0+,
                        // which is the caller's modeling error. Guard with a
                        // debug assertion instead of returning infinity.
                        debug_assert!(false, "f(u) != 0 beyond a vanishing edge");
                    }
                    continue;
                }
                d
            }
            TailBehavior::PowerLaw { start, model } => {
                assert!(
                    model.exponent < beta,
                    "power tail exponent {} must be < beta {} for convergence",
                    model.exponent,
                    beta
                );
                let r_abs = start.max(8.0 * (u.abs() + 1.0));
                r_abs - sigma * u
            }
        };

        // Inner [0, h0]: fit g(delta) = f(u + sigma delta) - f(u) by
        // a delta + b delta^2 through delta = h0/2 and h0; power-weight
        // moments are exact.
        let h_in = h0.min(delta_max);
        let g1 = f(u + sigma * h_in / 2.0) - fu;
        let g2 = f(u + sigma * h_in) - fu;
        let a = (4.0 * g1 - g2) / h_in;
        let b = (2.0 * g2 - 4.0 * g1) / (h_in * h_in);
        total += a * h_in.powf(1.0 - beta) / (1.0 - beta)
            + b * h_in.powf(2.0 - beta) / (2.0 - beta);

        // Mid field: graded panels with kink-aligned boundaries. Besides
        // the doubling ladder away from the singularity, panels are refined
        // geometrically toward each kink distance at the kink's own scale:
        // the integrand's structure in delta sits wherever f has structure
        // in tau (e.g. the whole support of a one-sided profile collapses
        // near delta = |u| when u is far out, and a single wide panel there
        // would lose the profile's mass - the leading far-field term).
        if delta_max > h_in {
            let mut bounds = vec![h_in];
            let mut width = h_in;
            let mut cur = h_in;
            while cur < delta_max {
                let step = width.min(plan.max_panel);
                cur = (cur + step).min(delta_max);
                bounds.push(cur);
                width = step * 2.0;
            }
            for &k in &plan.kinks {
                let d = sigma * (k - u);
                if d > h_in * (1.0 + 1e-12) && d <= delta_max * (1.0 + 1e-12) {
                    let dd = d.min(delta_max);
                    bounds.push(dd);
                    let eps = plan.inner_rel * (1.0 + k.abs());
                    let mut off = eps;
                    while off < 0.5 * dd {
                        let lo = dd - off;
                        if lo > h_in * (1.0 + 1e-12) {
                            bounds.push(lo);
                        }
                        let hi = dd + off;
                        if hi < delta_max * (1.0 - 1e-12) {
                            bounds.push(hi);
                        }
                        off *= 2.0;
                    }
                }
            }
            bounds.sort_by(|x, y| x.partial_cmp(y).unwrap());
            bounds.dedup_by(|b2, b1| *b2 <= *b1 * (1.0 + 1e-14));
            let integrand = |d: &f64| (f(u + sigma * d) - fu) * d.powf(-1.0 - beta);
            for w in bounds.windows(2) {
                total += gl16().integrate(&w[0], &w[1], &integrand);
            }
        }

        // Far tail beyond the horizon.
        match behavior {
            TailBehavior::Vanishes { .. } => {
                total += -fu * delta_max.powf(-beta) / beta;
            }
            TailBehavior::PowerLaw { model, .. } => {
                let r_abs = sigma * u + delta_max;
                total += -fu * delta_max.powf(-beta) / beta;
                if model.coeff != 0.0 {
                    // int_R^inf c tau^e (tau -+ u)^{-1-beta} dtau expanded in
                    // (u / tau): sum_k C_k (sigma u)^k R^{e-beta-k}/(beta+k-e),
                    // C_k the binomial coefficients of (1-z)^{-1-beta}.
                    let e = model.exponent;
                    let mut ck = 1.0;
                    let mut upow = 1.0;
                    let mut sum = 0.0;
                    for k in 0..9 {
                        sum += ck * upow * r_abs.powf(e - beta - k as f64)
                            / (beta + k as f64 - e);
                        ck *= (beta + 1.0 + k as f64) / (k as f64 + 1.0);
                        upow *= sigma * u;
                    }
                    total += model.coeff * sum;
                }
            }
        }
    }
    total
}
