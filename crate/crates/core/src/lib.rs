//! Numerical toolkit for s-parabolic (caloric) potential theory.
//!
//! The crate is organized around the fractional heat kernel
//! `P_s(x, t) = F^{-1}[e^{-4 pi^2 t |xi|^{2s}}]` on `R^n x R` and the geometry
//! induced by the metric `dist((x,t),(y,u)) = max(|x-y|, |t-u|^{1/(2s)})`:
//!
//! - [`psgeo`]: the metric, dilations, balls/cubes and the anisotropic dyadic
//!   lattice adapted to the scaling `(x, t) -> (lambda x, lambda^{2s} t)`.
//! - [`kernels`]: radial profiles of `P_s` and of its spatial/temporal
//!   fractional derivatives, evaluated by oscillatory quadrature with closed
//!   forms at `s = 1/2` (Poisson) and `s = 1` (Gauss-Weierstrass).
//! - [`fracops`]: fractional Laplacian, Riesz potentials and fractional time
//!   derivatives acting on sampled grid fields, with independent spectral and
//!   singular-integral routes.
//! - [`estimates`]: a catalog of quantitative kernel bounds (decay envelopes,
//!   smoothness increments, homogeneity laws) checked on deterministic point
//!   clouds, plus duality pairings between bump functions and potentials.
//! - [`measures`]: discrete measures, growth audits, potentials `P_s * mu` and
//!   BMO / Lipschitz seminorm estimators in the parabolic metric.
//! - [`content`]: lattice Hausdorff-type contents, Frostman measures via
//!   min-cut saturation, and self-similar Cantor constructions.
//! - [`caplab`]: capacity experiments tying the above together (lower bounds
//!   by normalized potentials, upper bounds by contents, sandwich runs) and
//!   the `caplab` command-line interface.

pub mod caplab;
pub mod content;
pub mod error;
pub mod estimates;
pub mod fracops;
pub mod kernels;
pub mod measures;
pub mod psgeo;

pub use error::{CaloricError, Result};
