//! Tabulated one-dimensional profiles with monotone cubic interpolation and
//! analytic power-law tails.
//!
//! Kernel evaluation is called millions of times by seminorm estimators and
//! potential sums, so each needed profile is tabulated once on a log-spaced
//! grid and interpolated. The interpolation coordinate is
//! `xi = asinh(arg / PIVOT)`: logarithmic for `|arg| >> PIVOT`, linear
//! through 0, so one monotone spline covers two-sided profiles (fractional
//! time derivatives live on all of `R`) without special-casing the origin.

use crate::error::{CaloricError, Result};
use crate::psgeo::PsParams;
use serde::{Deserialize, Serialize};

/// Scale separating the linear and logarithmic regions of the grid
/// coordinate; also the smallest positive node.
pub const PIVOT: f64 = 1e-4;

/// Default node count per decade ladder (one-sided).
pub const DEFAULT_NODES: usize = 512;

/// Largest tabulated argument; beyond it the tail model applies.
pub const GRID_MAX: f64 = 1e3;

/// Power-law model `value ~ coeff * |arg|^exponent` used outside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub exponent: f64,
    pub coeff: f64,
}

impl TailModel {
    pub const ZERO: TailModel = TailModel { exponent: 0.0, coeff: 0.0 };

    pub fn eval(&self, arg: f64) -> f64 {
        if self.coeff == 0.0 {
            return 0.0;
        }
        self.coeff * arg.abs().powf(self.exponent)
    }
}

/// Which profile a table represents.
///
/// Radial kinds (argument `rho = |x| t^{-1/(2s)}`, domain `[0, inf)`):
/// - `Phi`: kernel profile, `P_s(x, t) = t^{-n/(2s)} Phi(rho)` for `t > 0`;
/// - `PsiBeta(beta)`: spatial fractional derivative profile (multiplier
///   `|xi|^{2 beta}`).
///
/// Time-ray kinds (argument `u = t / |x|^{2s}`, one-sided, 0 for `u <= 0`):
/// - `F`: `P_s(x, t) = |x|^{-n} F(u)`;
/// - `G`: `grad_x P_s(x, t) = x |x|^{-(n+2)} G(u)`;
/// - `FPrime`: derivative of `F`.
///
/// Two-sided kinds on all of `R` (nonlocal time derivative of the above):
/// `DbetaF`, `DbetaG`, `DbetaFPrime`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProfileKind {
    Phi,
    PsiBeta(f64),
    F,
    G,
    FPrime,
    DbetaF(f64),
    DbetaG(f64),
    DbetaFPrime(f64),
}

impl ProfileKind {
    /// Two-sided kinds carry nodes on both signs of the argument.
    pub fn is_two_sided(&self) -> bool {
        matches!(
            self,
            ProfileKind::DbetaF(_) | ProfileKind::DbetaG(_) | ProfileKind::DbetaFPrime(_)
        )
    }

    /// Exact large-argument decay exponent of the kind.
    ///
    /// For `PsiBeta` the exponent depends on whether the multiplier power is
    /// an even integer: `|xi|^{2 beta}` is then a polynomial, smooth at
    /// `xi = 0`, and the decay is governed by the next singular term
    /// `|xi|^{2 beta + 2s}` of the symbol product instead.
    pub fn tail_exponent(&self, params: PsParams) -> f64 {
        let n = params.n as f64;
        let s = params.s;
        match *self {
            ProfileKind::Phi => -(n + 2.0 * s),
            ProfileKind::PsiBeta(beta) => {
                let integer_beta = (beta - beta.round()).abs() < 1e-12;
                if integer_beta {
                    -(n + 2.0 * beta + 2.0 * s)
                } else {
                    -(n + 2.0 * beta)
                }
            }
            ProfileKind::F => -n / (2.0 * s),
            ProfileKind::G => -(n + 2.0) / (2.0 * s),
            ProfileKind::FPrime => -(n + 2.0 * s) / (2.0 * s),
            // The nonlocal derivative of a profile decaying like u^{-a}
            // (a = n/(2s) for F) decays like u^{-(beta + min(1, a))}: for
            // a < 1 the smooth power tail dominates (the operator maps
            // u^{-a} to a multiple of u^{-a-beta}); for a >= 1 the far field
            // sees the profile as an integrable lump, contributing
            // |u|^{-1-beta} times its mass. G is the F-profile of dimension
            // n+2, whose decay rate (n+2)/(2s) always exceeds 1, and the
            // derivative kinds shift the exponent by one more power.
            ProfileKind::DbetaF(beta) => -(beta + (n / (2.0 * s)).min(1.0)),
            ProfileKind::DbetaG(beta) => -(1.0 + beta),
            ProfileKind::DbetaFPrime(beta) => -(1.0 + beta + (n / (2.0 * s)).min(1.0)),
        }
    }

    /// Decay exponent on the negative axis (two-sided kinds only); the same
    /// power as the positive side for all three nonlocal kinds.
    pub fn negative_tail_exponent(&self, params: PsParams) -> Option<f64> {
        match *self {
            ProfileKind::DbetaF(_) | ProfileKind::DbetaG(_) | ProfileKind::DbetaFPrime(_) => {
                Some(self.tail_exponent(params))
            }
            _ => None,
        }
    }
}

/// Tabulated profile: strictly increasing nodes, matching values, monotone
/// cubic (Fritsch-Carlson) interpolation in the `asinh` coordinate, and
/// power-law tails beyond the node range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub params: PsParams,
    pub kind: ProfileKind,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// Large-argument model (`arg > nodes.last()`).
    pub tail: TailModel,
    /// Negative-side model (`arg < nodes.first()`, two-sided kinds).
    pub tail_neg: TailModel,
    /// Cubic Hermite.
    pub interpolation_order: usize,
    /// Interpolant slopes in the grid coordinate; rebuilt after
    /// deserialization, skipped on the wire.
    #[serde(skip)]
    slopes: Vec<f64>,
}

fn grid_coord(arg: f64) -> f64 {
    (arg / PIVOT).asinh()
}

impl RadialProfile {
    /// Build from nodes and values; fits the interpolant and validates
    /// monotone node order.
    pub fn new(
        params: PsParams,
        kind: ProfileKind,
        nodes: Vec<f64>,
        values: Vec<f64>,
        tail: TailModel,
        tail_neg: TailModel,
    ) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 4 {
            return Err(CaloricError::MalformedData {
                format: "profile",
                detail: format!(
                    "need >= 4 nodes with matching values, got {} / {}",
                    nodes.len(),
                    values.len()
                ),
            });
        }
        if !nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(CaloricError::MalformedData {
                format: "profile",
                detail: "nodes must be strictly increasing".into(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(CaloricError::MalformedData {
                format: "profile",
                detail: "values must be finite".into(),
            });
        }
        let mut profile = RadialProfile {
            params,
            kind,
            nodes,
            values,
            tail,
            tail_neg,
            interpolation_order: 3,
            slopes: Vec::new(),
        };
        profile.refit();
        Ok(profile)
    }

    /// Recompute interpolant slopes (after construction or deserialization).
    pub fn refit(&mut self) {
        let xs: Vec<f64> = self.nodes.iter().map(|&a| grid_coord(a)).collect();
        self.slopes = pchip_slopes(&xs, &self.values);
    }

    /// Interpolated value; tail models outside the node range.
    pub fn eval(&self, arg: f64) -> f64 {
        let first = *self.nodes.first().expect("nonempty");
        let last = *self.nodes.last().expect("nonempty");
        if arg > last {
            return self.tail.eval(arg);
        }
        if arg < first {
            // One-sided kinds are identically zero left of their support.
            return if self.kind.is_two_sided() { self.tail_neg.eval(arg) } else { 0.0 };
        }
        let x = grid_coord(arg);
        // Binary search over nodes (monotone in arg and in the coordinate).
        let mut lo = 0usize;
        let mut hi = self.nodes.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.nodes[mid] <= arg {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x0 = grid_coord(self.nodes[lo]);
        let x1 = grid_coord(self.nodes[hi]);
        hermite(
            x,
            x0,
            x1,
            self.values[lo],
            self.values[hi],
            self.slopes[lo],
            self.slopes[hi],
        )
    }

    /// Serialize to JSON (slopes are derived data and not written).
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse from JSON and refit the interpolant.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut profile: RadialProfile = serde_json::from_str(text)?;
        if profile.nodes.len() != profile.values.len()
            || !profile.nodes.windows(2).all(|w| w[0] < w[1])
        {
            return Err(CaloricError::MalformedData {
                format: "profile json",
                detail: "node/value mismatch or unsorted nodes".into(),
            });
        }
        profile.refit();
        Ok(profile)
    }
}

/// Fritsch-Carlson monotone slopes for data `(xs, ys)`.
fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let m = xs.len();
    let mut d = vec![0.0; m];
    if m < 2 {
        return d;
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let sec: Vec<f64> = ys
        .windows(2)
        .zip(&h)
        .map(|(w, hh)| (w[1] - w[0]) / hh)
        .collect();
    for i in 1..m - 1 {
        if sec[i - 1] * sec[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / sec[i - 1] + w2 / sec[i]);
        }
    }
    d[0] = endpoint_slope(h[0], h.get(1).copied().unwrap_or(h[0]), sec[0], sec.get(1).copied().unwrap_or(sec[0]));
    d[m - 1] = endpoint_slope(
        h[m - 2],
        if m >= 3 { h[m - 3] } else { h[m - 2] },
        sec[m - 2],
        if m >= 3 { sec[m - 3] } else { sec[m - 2] },
    );
    d
}

/// One-sided three-point endpoint slope with the standard shape clips.
fn endpoint_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d.signum() != s0.signum() {
        0.0
    } else if s0.signum() != s1.signum() && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

/// Cubic Hermite on `[x0, x1]`.
fn hermite(x: f64, x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + d0 * h * (t3 - 2.0 * t2 + t)
        + y1 * (-2.0 * t3 + 3.0 * t2)
        + d1 * h * (t3 - t2)
}

/// Standard grid for one-sided kinds: `{0} U geometric(PIVOT..GRID_MAX)`.
pub fn standard_grid(count: usize) -> Vec<f64> {
    let mut nodes = Vec::with_capacity(count + 1);
    nodes.push(0.0);
    let ratio = (GRID_MAX / PIVOT).powf(1.0 / (count as f64 - 1.0));
    let mut a = PIVOT;
    for _ in 0..count {
        nodes.push(a);
        a *= ratio;
    }
    // Guard against drift past GRID_MAX from repeated multiplication.
    let last = nodes.last_mut().unwrap();
    *last = GRID_MAX;
    nodes
}

/// Standard grid for two-sided kinds: mirrored geometric ladder through 0.
pub fn two_sided_grid(count: usize) -> Vec<f64> {
    let pos = standard_grid(count);
    let mut nodes: Vec<f64> = pos.iter().skip(1).rev().map(|&a| -a).collect();
    nodes.extend_from_slice(&pos);
    nodes
}
