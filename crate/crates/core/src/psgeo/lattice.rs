//! Anisotropic dyadic lattice adapted to the s-parabolic scaling.
//!
//! At generation `k` the cells have spatial side `2^{-k}` on each of the `n`
//! axes and temporal side `m^{-k}`, where `m = max(2, round(2^{2s}))` is the
//! temporal branching factor. Each cell splits into `2^n * m` children. The
//! temporal side tracks the s-parabolic value `(2^{-k})^{2s}` exactly when
//! `2^{2s}` is an integer (`s = 1/2` or `s = 1`) and within the bounded drift
//! factor `(2^{2s}/m)^k` otherwise.

use super::{Point, PsParams};
use serde::{Deserialize, Serialize};

/// Temporal branching factor `m(s) = max(2, round(2^{2s}))`.
pub fn temporal_branching(s: f64) -> usize {
    let m = (2.0f64).powf(2.0 * s).round() as usize;
    m.max(2)
}

/// Cell address: generation `level`, spatial integer indices `ix` (one per
/// axis) and temporal index `it`. The cell is the half-open box
/// `prod_i [ix_i 2^{-k}, (ix_i + 1) 2^{-k}) x [it m^{-k}, (it + 1) m^{-k})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeCell {
    pub level: u32,
    pub ix: Vec<i64>,
    pub it: i64,
}

/// The full dyadic lattice on `R^n x R`; stateless apart from parameters.
#[derive(Debug, Clone, Copy)]
pub struct Lattice {
    pub params: PsParams,
}

impl Lattice {
    pub fn new(params: PsParams) -> Self {
        Lattice { params }
    }

    pub fn temporal_branching(&self) -> usize {
        temporal_branching(self.params.s)
    }

    /// Spatial side of generation-`level` cells: `2^{-level}`.
    pub fn spatial_side(&self, level: u32) -> f64 {
        (0.5f64).powi(level as i32)
    }

    /// Temporal side of generation-`level` cells: `m^{-level}`.
    pub fn temporal_side(&self, level: u32) -> f64 {
        (self.temporal_branching() as f64).powi(-(level as i32))
    }

    /// Ratio of the actual temporal side to the ideal s-parabolic one
    /// `(2^{-level})^{2s}`; equals `(2^{2s}/m)^{level}`, identically 1 for
    /// `s` in `{1/2, 1}`.
    pub fn aspect_drift(&self, level: u32) -> f64 {
        let ideal = self.spatial_side(level).powf(2.0 * self.params.s);
        self.temporal_side(level) / ideal
    }

    /// Lebesgue measure of a generation-`level` cell.
    pub fn cell_measure(&self, level: u32) -> f64 {
        self.spatial_side(level).powi(self.params.n as i32) * self.temporal_side(level)
    }

    /// The unique generation-`level` cell containing `p`.
    pub fn cell_of(&self, p: &Point, level: u32) -> LatticeCell {
        let sx = self.spatial_side(level);
        let st = self.temporal_side(level);
        LatticeCell {
            level,
            ix: p.x.iter().map(|v| (v / sx).floor() as i64).collect(),
            it: (p.t / st).floor() as i64,
        }
    }

    /// Lower corner of the cell: spatial corner and time start.
    pub fn cell_corner(&self, cell: &LatticeCell) -> (Vec<f64>, f64) {
        let sx = self.spatial_side(cell.level);
        let st = self.temporal_side(cell.level);
        (
            cell.ix.iter().map(|&i| i as f64 * sx).collect(),
            cell.it as f64 * st,
        )
    }

    pub fn cell_center(&self, cell: &LatticeCell) -> Point {
        let sx = self.spatial_side(cell.level);
        let st = self.temporal_side(cell.level);
        let (corner, t0) = self.cell_corner(cell);
        Point {
            x: corner.iter().map(|c| c + sx / 2.0).collect(),
            t: t0 + st / 2.0,
        }
    }

    pub fn cell_contains(&self, cell: &LatticeCell, p: &Point) -> bool {
        let sx = self.spatial_side(cell.level);
        let st = self.temporal_side(cell.level);
        let (corner, t0) = self.cell_corner(cell);
        p.t >= t0
            && p.t < t0 + st
            && p.x
                .iter()
                .zip(&corner)
                .all(|(v, c)| *v >= *c && *v < *c + sx)
    }

    /// Parent cell, one generation coarser; `None` at generation 0.
    pub fn parent(&self, cell: &LatticeCell) -> Option<LatticeCell> {
        if cell.level == 0 {
            return None;
        }
        let m = self.temporal_branching() as i64;
        Some(LatticeCell {
            level: cell.level - 1,
            ix: cell.ix.iter().map(|&i| i.div_euclid(2)).collect(),
            it: cell.it.div_euclid(m),
        })
    }

    /// All `2^n * m` children, ordered spatial-lexicographic then temporal.
    /// The order is part of the output contract (constructions that pick
    /// child slots by index must be reproducible).
    pub fn children(&self, cell: &LatticeCell) -> Vec<LatticeCell> {
        let n = cell.ix.len();
        let m = self.temporal_branching() as i64;
        let mut out = Vec::with_capacity((1usize << n) * m as usize);
        for bits in 0..(1usize << n) {
            let ix: Vec<i64> = cell
                .ix
                .iter()
                .enumerate()
                .map(|(axis, &i)| 2 * i + ((bits >> axis) & 1) as i64)
                .collect();
            for dt in 0..m {
                out.push(LatticeCell {
                    level: cell.level + 1,
                    ix: ix.clone(),
                    it: m * cell.it + dt,
                });
            }
        }
        out
    }

    /// Generation-`level` cells meeting the closed ps-ball `B(center, r)`:
    /// integer ranges of the product box `[c - r, c + r] x [t - r^{2s}, t + r^{2s}]`.
    pub fn cover_ball(&self, center: &Point, r: f64, level: u32) -> Vec<LatticeCell> {
        let sx = self.spatial_side(level);
        let st = self.temporal_side(level);
        let s = self.params.s;
        let rt = r.powf(2.0 * s);
        let ranges: Vec<(i64, i64)> = center
            .x
            .iter()
            .map(|c| (((c - r) / sx).floor() as i64, ((c + r) / sx).floor() as i64))
            .collect();
        let t_range = (
            ((center.t - rt) / st).floor() as i64,
            ((center.t + rt) / st).floor() as i64,
        );
        let mut out = Vec::new();
        let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            for it in t_range.0..=t_range.1 {
                out.push(LatticeCell { level, ix: idx.clone(), it });
            }
            // Odometer increment over the spatial index box.
            let mut axis = 0;
            loop {
                if axis == idx.len() {
                    return out;
                }
                idx[axis] += 1;
                if idx[axis] <= ranges[axis].1 {
                    break;
                }
                idx[axis] = ranges[axis].0;
                axis += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psgeo::dist_ps;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn branching_matches_rounded_power() {
        assert_eq!(temporal_branching(0.5), 2);
        assert_eq!(temporal_branching(1.0), 4);
        assert_eq!(temporal_branching(0.75), 3); // 2^{1.5} = 2.83
        assert_eq!(temporal_branching(0.6), 2); // 2^{1.2} = 2.30
        assert_eq!(temporal_branching(0.9), 3); // 2^{1.8} = 3.48
        assert_eq!(temporal_branching(0.1), 2); // floor guard
    }

    #[test]
    fn aspect_drift_is_one_for_exact_scalings() {
        for s in [0.5, 1.0] {
            let lat = Lattice::new(PsParams::new(2, s).unwrap());
            for level in 0..12 {
                assert_relative_eq!(lat.aspect_drift(level), 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn aspect_drift_growth_matches_ratio_power() {
        let s = 0.75;
        let lat = Lattice::new(PsParams::new(1, s).unwrap());
        let ratio = 2.0f64.powf(2.0 * s) / 3.0;
        for level in 0..8 {
            assert_relative_eq!(
                lat.aspect_drift(level),
                ratio.powi(level as i32),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn children_partition_parent_measure() {
        let lat = Lattice::new(PsParams::new(2, 0.8).unwrap());
        let cell = LatticeCell { level: 3, ix: vec![5, -2], it: 7 };
        let kids = lat.children(&cell);
        assert_eq!(kids.len(), 4 * lat.temporal_branching());
        let total: f64 = kids.iter().map(|c| lat.cell_measure(c.level)).sum();
        assert_relative_eq!(total, lat.cell_measure(3), max_relative = 1e-12);
        // All children report the parent back.
        for kid in &kids {
            assert_eq!(lat.parent(kid).unwrap(), cell);
        }
        // Children are pairwise distinct.
        let mut sorted = kids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), kids.len());
    }

    proptest! {
        #[test]
        fn point_lands_in_its_cell(
            x in prop::collection::vec(-8.0..8.0f64, 2),
            t in -8.0..8.0f64,
            s in 0.1..=1.0f64,
            level in 0u32..6
        ) {
            let lat = Lattice::new(PsParams::new(2, s).unwrap());
            let p = Point::new(x, t);
            let cell = lat.cell_of(&p, level);
            prop_assert!(lat.cell_contains(&cell, &p));
        }

        #[test]
        fn finer_cell_nests_in_coarser(
            x in prop::collection::vec(-8.0..8.0f64, 1),
            t in -8.0..8.0f64,
            s in 0.1..=1.0f64,
            level in 1u32..7
        ) {
            let lat = Lattice::new(PsParams::new(1, s).unwrap());
            let p = Point::new(x, t);
            let fine = lat.cell_of(&p, level);
            let coarse = lat.cell_of(&p, level - 1);
            prop_assert_eq!(lat.parent(&fine).unwrap(), coarse);
        }

        #[test]
        fn ball_cover_catches_interior_points(
            c in prop::collection::vec(-4.0..4.0f64, 1),
            t in -4.0..4.0f64,
            r in 0.05..2.0f64,
            s in 0.25..=1.0f64,
            level in 0u32..5,
            // Offsets within the ball, as fractions of r.
            fx in -1.0..1.0f64,
            ft in -1.0..1.0f64
        ) {
            let lat = Lattice::new(PsParams::new(1, s).unwrap());
            let center = Point::new(c, t);
            let p = Point::new(
                vec![center.x[0] + fx * r],
                center.t + ft * r.powf(2.0 * s),
            );
            prop_assume!(dist_ps(&center, &p, s) <= r);
            let cover = lat.cover_ball(&center, r, level);
            let home = lat.cell_of(&p, level);
            prop_assert!(cover.contains(&home));
        }
    }
}
