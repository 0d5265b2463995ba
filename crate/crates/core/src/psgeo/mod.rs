//! Geometry of the s-parabolic space `R^n x R`.
//!
//! Distances, dilations, balls and cubes adapted to the anisotropic scaling
//! `(x, t) -> (lambda x, lambda^{2s} t)`. The metric is
//! `dist((x,t),(y,u)) = max(|x - y|_2, |t - u|^{1/(2s)})`, under which balls
//! are products of Euclidean balls and time intervals, and the scaling acts
//! as an exact similarity.

mod lattice;

pub use lattice::{Lattice, LatticeCell};

use crate::error::{CaloricError, Result};
use serde::{Deserialize, Serialize};

/// Ambient parameters: spatial dimension `n >= 1` and scaling exponent
/// `s` in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsParams {
    pub n: usize,
    pub s: f64,
}

impl PsParams {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        if n == 0 {
            return Err(CaloricError::param("n", 0.0, "[1, inf)"));
        }
        if !(s > 0.0 && s <= 1.0) || !s.is_finite() {
            return Err(CaloricError::param("s", s, "(0, 1]"));
        }
        Ok(PsParams { n, s })
    }

    /// Homogeneous dimension: Lebesgue measure scales as `lambda^{n + 2s}`
    /// under the dilation `delta_lambda`.
    pub fn homogeneous_dim(&self) -> f64 {
        self.n as f64 + 2.0 * self.s
    }

    /// Smoothness order `2 zeta = min(1, 2s)` governing Lipschitz-type
    /// increments of the kernel in the metric.
    pub fn two_zeta(&self) -> f64 {
        (2.0 * self.s).min(1.0)
    }

    /// Metric exponent for the time axis: `|t - u|^{1/(2s)}`.
    pub fn time_exponent(&self) -> f64 {
        1.0 / (2.0 * self.s)
    }
}

/// Point of `R^n x R`; `x` carries the spatial coordinates, `t` the time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<f64>,
    pub t: f64,
}

impl Point {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        Point { x, t }
    }

    pub fn origin(n: usize) -> Self {
        Point { x: vec![0.0; n], t: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Euclidean norm of the spatial part.
    pub fn spatial_norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Euclidean distance of the spatial parts.
pub fn spatial_dist(a: &Point, b: &Point) -> f64 {
    a.x.iter()
        .zip(&b.x)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// s-parabolic distance `max(|x - y|_2, |t - u|^{1/(2s)})`.
///
/// A metric for `s >= 1/2`; for `s < 1/2` a quasi-metric with triangle
/// constant `2^{1/(2s) - 1}` coming from the time component.
pub fn dist_ps(a: &Point, b: &Point, s: f64) -> f64 {
    let dx = spatial_dist(a, b);
    let dt = (a.t - b.t).abs().powf(1.0 / (2.0 * s));
    dx.max(dt)
}

/// s-parabolic "norm": distance to the origin.
pub fn norm_ps(p: &Point, s: f64) -> f64 {
    let dx = p.spatial_norm();
    let dt = p.t.abs().powf(1.0 / (2.0 * s));
    dx.max(dt)
}

/// Quadratic-mean variant `(|x - y|^2 + |t - u|^{1/s})^{1/2}`; equivalent to
/// [`dist_ps`] within a factor `sqrt(2)`:
/// `dist_ps <= dist_quad <= sqrt(2) dist_ps`.
pub fn dist_quad(a: &Point, b: &Point, s: f64) -> f64 {
    let dx2: f64 = a
        .x
        .iter()
        .zip(&b.x)
        .map(|(p, q)| (p - q) * (p - q))
        .sum();
    let dt = (a.t - b.t).abs();
    (dx2 + dt.powf(1.0 / s)).sqrt()
}

/// Anisotropic dilation `delta_lambda(x, t) = (lambda x, lambda^{2s} t)`.
///
/// Exact similarity: `dist_ps(delta_lambda a, delta_lambda b) = lambda *
/// dist_ps(a, b)` for `lambda > 0`.
pub fn dilate(lambda: f64, p: &Point, s: f64) -> Point {
    Point {
        x: p.x.iter().map(|v| lambda * v).collect(),
        t: lambda.powf(2.0 * s) * p.t,
    }
}

/// Closed s-parabolic ball `{q : dist_ps(q, center) <= r}`: the product of
/// the closed Euclidean ball of radius `r` and the time interval of
/// half-length `r^{2s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsBall {
    pub center: Point,
    pub r: f64,
    pub s: f64,
}

impl PsBall {
    pub fn new(center: Point, r: f64, s: f64) -> Self {
        PsBall { center, r, s }
    }

    pub fn contains(&self, p: &Point) -> bool {
        dist_ps(&self.center, p, self.s) <= self.r
    }

    /// Lebesgue measure: `omega_n r^n * 2 r^{2s}` with `omega_n` the unit
    /// Euclidean ball volume. Scales as `r^{n + 2s}`.
    pub fn measure(&self) -> f64 {
        let n = self.center.dim();
        unit_ball_volume(n) * self.r.powi(n as i32) * 2.0 * self.r.powf(2.0 * self.s)
    }

    pub fn scaled(&self, factor: f64) -> PsBall {
        PsBall { center: self.center.clone(), r: factor * self.r, s: self.s }
    }
}

/// Volume of the unit Euclidean ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    std::f64::consts::PI.powf(nf / 2.0) / statrs::function::gamma::gamma(nf / 2.0 + 1.0)
}

/// Half-open s-parabolic cube: spatial side `side` on each axis, temporal
/// side `side^{2s}`. Half-open so translates at a fixed scale tile space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsCube {
    /// Lower corner of the spatial box.
    pub corner: Vec<f64>,
    /// Start of the time interval.
    pub t0: f64,
    /// Spatial side length.
    pub side: f64,
    pub s: f64,
}

impl PsCube {
    pub fn new(corner: Vec<f64>, t0: f64, side: f64, s: f64) -> Self {
        PsCube { corner, t0, side, s }
    }

    /// Temporal side length `side^{2s}`.
    pub fn temporal_side(&self) -> f64 {
        self.side.powf(2.0 * self.s)
    }

    pub fn contains(&self, p: &Point) -> bool {
        let ts = self.temporal_side();
        p.t >= self.t0
            && p.t < self.t0 + ts
            && p.x
                .iter()
                .zip(&self.corner)
                .all(|(v, c)| *v >= *c && *v < *c + self.side)
    }

    pub fn center(&self) -> Point {
        Point {
            x: self.corner.iter().map(|c| c + self.side / 2.0).collect(),
            t: self.t0 + self.temporal_side() / 2.0,
        }
    }

    /// Lebesgue measure `side^{n + 2s}`.
    pub fn measure(&self) -> f64 {
        self.side.powi(self.corner.len() as i32) * self.temporal_side()
    }

    /// Radius of the smallest ps-ball centered at the cube center containing
    /// the closure: `max(side sqrt(n) / 2, side / 2^{1/(2s)})`.
    pub fn circumradius(&self) -> f64 {
        let n = self.corner.len() as f64;
        let spatial = self.side * n.sqrt() / 2.0;
        // Half the temporal side, pulled back through the metric exponent.
        let temporal = (self.temporal_side() / 2.0).powf(1.0 / (2.0 * self.s));
        spatial.max(temporal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn params_reject_out_of_range() {
        assert!(PsParams::new(1, 0.5).is_ok());
        assert!(PsParams::new(0, 0.5).is_err());
        assert!(PsParams::new(1, 0.0).is_err());
        assert!(PsParams::new(1, 1.0 + 1e-12).is_err());
        assert!(PsParams::new(1, f64::NAN).is_err());
    }

    #[test]
    fn dist_matches_hand_values() {
        // s = 1/2: time enters linearly.
        let a = Point::new(vec![0.0], 0.0);
        let b = Point::new(vec![3.0], 2.0);
        assert_abs_diff_eq!(dist_ps(&a, &b, 0.5), 3.0);
        let c = Point::new(vec![1.0], 5.0);
        assert_abs_diff_eq!(dist_ps(&a, &c, 0.5), 5.0);
        // s = 1: classical parabolic distance, |t|^{1/2}.
        assert_abs_diff_eq!(dist_ps(&a, &b, 1.0), 3.0);
        assert_abs_diff_eq!(dist_ps(&a, &c, 1.0), 5.0_f64.sqrt());
    }

    #[test]
    fn ball_measure_matches_product_formula() {
        // n = 2, s = 1, r = 3: pi r^2 * 2 r^2.
        let ball = PsBall::new(Point::origin(2), 3.0, 1.0);
        assert_relative_eq!(
            ball.measure(),
            std::f64::consts::PI * 9.0 * 2.0 * 9.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn cube_is_half_open_and_has_scaling_measure() {
        let q = PsCube::new(vec![0.0, 0.0], 0.0, 0.5, 0.75);
        assert!(q.contains(&Point::new(vec![0.0, 0.0], 0.0)));
        assert!(!q.contains(&Point::new(vec![0.5, 0.0], 0.0)));
        assert!(!q.contains(&Point::new(vec![0.0, 0.0], q.temporal_side())));
        assert_relative_eq!(q.measure(), 0.5f64.powf(2.0 + 1.5), max_relative = 1e-14);
    }

    fn arb_point(n: usize) -> impl Strategy<Value = Point> {
        (
            prop::collection::vec(-50.0..50.0f64, n),
            -50.0..50.0f64,
        )
            .prop_map(|(x, t)| Point::new(x, t))
    }

    proptest! {
        #[test]
        fn dist_is_symmetric_and_definite(
            a in arb_point(2), b in arb_point(2), s in 0.1..=1.0f64
        ) {
            let d1 = dist_ps(&a, &b, s);
            let d2 = dist_ps(&b, &a, s);
            prop_assert_eq!(d1.to_bits(), d2.to_bits());
            prop_assert!(d1 >= 0.0);
            prop_assert_eq!(dist_ps(&a, &a, s), 0.0);
            if d1 == 0.0 {
                prop_assert_eq!(&a, &b);
            }
        }

        #[test]
        fn quad_metric_is_sqrt2_equivalent(
            a in arb_point(3), b in arb_point(3), s in 0.1..=1.0f64
        ) {
            let dm = dist_ps(&a, &b, s);
            let dq = dist_quad(&a, &b, s);
            prop_assert!(dq >= dm * (1.0 - 1e-12));
            prop_assert!(dq <= dm * 2.0f64.sqrt() * (1.0 + 1e-12));
        }

        #[test]
        fn dilation_is_exact_similarity(
            a in arb_point(2), b in arb_point(2),
            s in 0.1..=1.0f64, lambda in 0.01..100.0f64
        ) {
            let d = dist_ps(&a, &b, s);
            let dd = dist_ps(&dilate(lambda, &a, s), &dilate(lambda, &b, s), s);
            prop_assert!((dd - lambda * d).abs() <= 1e-9 * (1.0 + lambda * d));
        }

        #[test]
        fn quasi_triangle_holds_with_time_constant(
            a in arb_point(1), b in arb_point(1), c in arb_point(1), s in 0.1..=1.0f64
        ) {
            let k = if s >= 0.5 { 1.0 } else { 2.0f64.powf(1.0 / (2.0 * s) - 1.0) };
            let lhs = dist_ps(&a, &c, s);
            let rhs = k * (dist_ps(&a, &b, s) + dist_ps(&b, &c, s));
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }

        #[test]
        fn ball_contains_iff_product_conditions(
            p in arb_point(2), r in 0.1..10.0f64, s in 0.1..=1.0f64
        ) {
            let ball = PsBall::new(Point::origin(2), r, s);
            let inside = ball.contains(&p);
            let product = p.spatial_norm() <= r && p.t.abs() <= r.powf(2.0 * s);
            prop_assert_eq!(inside, product);
        }

        #[test]
        fn ball_measure_scales_with_homogeneous_dim(
            r in 0.1..10.0f64, lam in 0.1..10.0f64, s in 0.1..=1.0f64
        ) {
            let b1 = PsBall::new(Point::origin(3), r, s);
            let b2 = PsBall::new(Point::origin(3), lam * r, s);
            let expect = lam.powf(3.0 + 2.0 * s) * b1.measure();
            prop_assert!((b2.measure() - expect).abs() <= 1e-9 * expect.abs());
        }
    }
}
