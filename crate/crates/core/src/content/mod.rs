//! Hausdorff-type contents on the anisotropic dyadic lattice, Frostman
//! measures, admissible bump functions, partitions of unity, and
//! self-similar test sets.
//!
//! A compact set enters the toolkit as a [`LatticeSet`]: a finite union of
//! generation-`depth` lattice cells. Its `d`-content is the exact minimum of
//! `sum side(Q_i)^d` over covers by lattice cells of any generation up to
//! `depth`, computed by dynamic programming ([`content_upper`]). The
//! lattice restriction is what makes the optimization exact; the factor
//! relating it to arbitrary-cover content is reported with every value.
//!
//! [`frostman_construct`] runs the classical top-down saturation sweep on
//! the same tree and produces a [`DiscreteMeasure`] with `mu(Q) <=
//! side(Q)^d` for every lattice cell and total mass equal to the content
//! (the sweep realizes the max-flow side of the covering min-cut).
//!
//! [`admissible_bump`] builds the tensor `C^2` plateau bump adapted to an
//! s-parabolic cube, certified against the four norm bounds `|phi| <= 1`,
//! `|grad phi| <= side^{-1}`, `|dt phi| <= side^{-2s}`, `|lap phi| <=
//! side^{-2}`; [`harvey_polking_partition`] glues the raw bumps of doubled
//! cubes into a partition of unity. [`ps_cantor`] generates the
//! self-similar sets used by the capacity experiments.

use crate::error::{CaloricError, Result};
use crate::measures::DiscreteMeasure;
use crate::psgeo::{Lattice, LatticeCell, Point, PsCube};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// Finite union of generation-`depth` cells of one lattice.
#[derive(Debug, Clone)]
pub struct LatticeSet {
    pub lattice: Lattice,
    pub depth: u32,
    pub cells: BTreeSet<LatticeCell>,
}

impl LatticeSet {
    pub fn new(
        lattice: Lattice,
        depth: u32,
        cells: impl IntoIterator<Item = LatticeCell>,
    ) -> Result<Self> {
        let cells: BTreeSet<LatticeCell> = cells.into_iter().collect();
        for cell in &cells {
            if cell.level != depth {
                return Err(CaloricError::GridMismatch(format!(
                    "cell at generation {} in a depth-{} set",
                    cell.level, depth
                )));
            }
            if cell.ix.len() != lattice.params.n {
                return Err(CaloricError::GridMismatch(format!(
                    "cell has {} spatial indices, lattice has dimension {}",
                    cell.ix.len(),
                    lattice.params.n
                )));
            }
        }
        Ok(LatticeSet { lattice, depth, cells })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Spatial side of the member cells.
    pub fn leaf_side(&self) -> f64 {
        self.lattice.spatial_side(self.depth)
    }

    pub fn union(&self, other: &LatticeSet) -> Result<LatticeSet> {
        if self.depth != other.depth
            || self.lattice.params.n != other.lattice.params.n
            || self.lattice.params.s != other.lattice.params.s
        {
            return Err(CaloricError::GridMismatch(
                "union needs matching lattices and depths".into(),
            ));
        }
        let mut cells = self.cells.clone();
        cells.extend(other.cells.iter().cloned());
        LatticeSet::new(self.lattice, self.depth, cells)
    }

    pub fn is_subset(&self, other: &LatticeSet) -> bool {
        self.depth == other.depth && self.cells.is_subset(&other.cells)
    }

    /// Image under the lattice similarity `(x, t) -> (x/2, t/m)`, which maps
    /// every cell to the same-index cell one generation finer. When `2^{2s}`
    /// is an integer (`s` in `{1/2, 1}`) this is exactly the s-parabolic
    /// dilation by `1/2`; otherwise it is the lattice's own self-map and
    /// differs from the metric dilation by the bounded aspect drift.
    pub fn refined(&self) -> LatticeSet {
        LatticeSet {
            lattice: self.lattice,
            depth: self.depth + 1,
            cells: self
                .cells
                .iter()
                .map(|c| LatticeCell { level: c.level + 1, ix: c.ix.clone(), it: c.it })
                .collect(),
        }
    }
}

/// Ancestor of `cell` at the (coarser or equal) generation `level`.
fn ancestor_at(cell: &LatticeCell, level: u32, m: i64) -> LatticeCell {
    let shift = cell.level - level;
    let sx = 1i64 << shift;
    let st = m.pow(shift);
    LatticeCell {
        level,
        ix: cell.ix.iter().map(|&i| i.div_euclid(sx)).collect(),
        it: cell.it.div_euclid(st),
    }
}

/// Result of the exact lattice cover optimization.
#[derive(Debug, Clone)]
pub struct ContentOutcome {
    /// Minimum of `sum side(Q_i)^d` over lattice-cell covers.
    pub value: f64,
    /// A minimizing cover: a disjoint antichain of cells whose descendants
    /// include every member cell.
    pub cover: Vec<LatticeCell>,
    /// Factor relating this lattice-restricted content to the content over
    /// arbitrary ps-cube covers: `2^d` for the cell-to-cube inflation times
    /// the worst aspect-drift skew pulled back through the time exponent.
    pub comparability: f64,
}

fn lattice_comparability(lat: &Lattice, d: f64, depth: u32) -> f64 {
    let drift = lat.aspect_drift(depth);
    let skew = drift.max(1.0 / drift);
    2.0f64.powf(d) * skew.powf(d / (2.0 * lat.params.s))
}

/// Exact minimum of `sum side(Q_i)^d` over covers of `e` by lattice cells of
/// generations `0..=depth`, by the bottom-up sweep `cost(Q) = min(side(Q)^d,
/// sum of children costs)`; children are processed before parents, one
/// generation per pass.
pub fn content_upper(e: &LatticeSet, d: f64) -> Result<ContentOutcome> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(CaloricError::param("content degree", d, "(0, inf)"));
    }
    let lat = e.lattice;
    let comparability = lattice_comparability(&lat, d, e.depth);
    if e.cells.is_empty() {
        return Ok(ContentOutcome { value: 0.0, cover: Vec::new(), comparability });
    }
    // cost and take-this-cell flag for every cell with member descendants,
    // one map per generation.
    let mut levels: Vec<BTreeMap<LatticeCell, (f64, bool)>> =
        vec![BTreeMap::new(); e.depth as usize + 1];
    let leaf_cost = lat.spatial_side(e.depth).powf(d);
    for cell in &e.cells {
        levels[e.depth as usize].insert(cell.clone(), (leaf_cost, true));
    }
    for level in (0..e.depth).rev() {
        let mut sums: BTreeMap<LatticeCell, f64> = BTreeMap::new();
        for (cell, (cost, _)) in &levels[level as usize + 1] {
            let parent = lat.parent(cell).expect("positive generation has a parent");
            *sums.entry(parent).or_insert(0.0) += cost;
        }
        let own = lat.spatial_side(level).powf(d);
        levels[level as usize] = sums
            .into_iter()
            .map(|(cell, child_sum)| {
                let take_self = own <= child_sum;
                (cell, (own.min(child_sum), take_self))
            })
            .collect();
    }
    let value = levels[0].values().map(|(c, _)| c).sum();
    // Walk back down, splitting into children wherever that was cheaper.
    let mut cover = Vec::new();
    let mut stack: Vec<LatticeCell> = levels[0].keys().cloned().collect();
    while let Some(cell) = stack.pop() {
        let (_, take_self) = levels[cell.level as usize][&cell];
        if take_self {
            cover.push(cell);
        } else {
            let next = &levels[cell.level as usize + 1];
            stack.extend(lat.children(&cell).into_iter().filter(|c| next.contains_key(c)));
        }
    }
    cover.sort();
    Ok(ContentOutcome { value, cover, comparability })
}

/// Measure with `mu(Q) <= side(Q)^d` for every lattice cell and total mass
/// equal to `content_upper(e, d)`, built by the top-down saturation sweep:
/// each member cell starts with its own bound as an atom at its center, and
/// every coarser generation rescales the mass inside any cell exceeding its
/// bound down to exactly the bound. Every member cell then has a saturated
/// ancestor, and the maximal saturated cells form a cover realizing the
/// content, which is why mass and content agree.
pub fn frostman_construct(e: &LatticeSet, d: f64) -> Result<DiscreteMeasure> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(CaloricError::param("growth degree", d, "(0, inf)"));
    }
    if e.cells.is_empty() {
        return Err(CaloricError::Infeasible(
            "Frostman construction needs a nonempty set".into(),
        ));
    }
    let lat = e.lattice;
    let m = lat.temporal_branching() as i64;
    let leaves: Vec<&LatticeCell> = e.cells.iter().collect();
    let mut weights = vec![lat.spatial_side(e.depth).powf(d); leaves.len()];
    for level in (0..e.depth).rev() {
        let mut groups: BTreeMap<LatticeCell, Vec<usize>> = BTreeMap::new();
        for (i, leaf) in leaves.iter().enumerate() {
            groups.entry(ancestor_at(leaf, level, m)).or_default().push(i);
        }
        let bound = lat.spatial_side(level).powf(d);
        for members in groups.values() {
            let total: f64 = members.iter().map(|&i| weights[i]).sum();
            if total > bound {
                let factor = bound / total;
                for &i in members {
                    weights[i] *= factor;
                }
            }
        }
    }
    let atoms = leaves
        .iter()
        .zip(weights)
        .map(|(leaf, w)| (lat.cell_center(leaf), w))
        .collect();
    DiscreteMeasure::new(lat.params, atoms)
}

/// Mass a measure built by [`frostman_construct`] assigns to one lattice
/// cell, matching atoms by ancestry rather than by coordinates.
pub fn cell_mass(mu: &DiscreteMeasure, lat: &Lattice, cell: &LatticeCell) -> f64 {
    mu.atoms
        .iter()
        .filter(|(p, _)| lat.cell_of(p, cell.level) == *cell)
        .map(|(_, w)| w)
        .sum()
}

/// `C^2` even plateau profile: `1` on `|u| <= q`, `0` outside `|u| >= 1/2`,
/// a quintic smoothstep in between. The transition width `1/2 - q` sets the
/// derivative constants.
#[derive(Debug, Clone, Copy)]
struct PlateauSpline {
    q: f64,
}

impl PlateauSpline {
    fn new(q: f64) -> Self {
        assert!(q > 0.0 && q < 0.5, "plateau fraction must sit in (0, 1/2)");
        PlateauSpline { q }
    }

    fn width(&self) -> f64 {
        0.5 - self.q
    }

    fn value(&self, u: f64) -> f64 {
        let a = u.abs();
        if a <= self.q {
            1.0
        } else if a >= 0.5 {
            0.0
        } else {
            let v = (a - self.q) / self.width();
            1.0 - v * v * v * (10.0 - 15.0 * v + 6.0 * v * v)
        }
    }

    fn d1(&self, u: f64) -> f64 {
        let a = u.abs();
        if a <= self.q || a >= 0.5 {
            0.0
        } else {
            let v = (a - self.q) / self.width();
            let dv = 30.0 * v * v * (v - 1.0) * (v - 1.0);
            -u.signum() * dv / self.width()
        }
    }

    fn d2(&self, u: f64) -> f64 {
        let a = u.abs();
        if a <= self.q || a >= 0.5 {
            0.0
        } else {
            let v = (a - self.q) / self.width();
            let ddv = 60.0 * v * (2.0 * v - 1.0) * (v - 1.0);
            -ddv / (self.width() * self.width())
        }
    }

    /// Supremum of `|d1|`: the smoothstep slope `15/8` over the width.
    fn d1_bound(&self) -> f64 {
        1.875 / self.width()
    }

    /// Supremum of `|d2|`: `10/sqrt(3)` over the squared width.
    fn d2_bound(&self) -> f64 {
        10.0 / 3.0f64.sqrt() / (self.width() * self.width())
    }

    /// Dense audit of the declared bounds: `2^9` samples across the support
    /// must stay below them and come within 5% of each (the bounds must be
    /// neither violated nor slack).
    fn audit(&self) -> Result<()> {
        let samples = 1 << 9;
        let (mut v_max, mut d1_max, mut d2_max) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..samples {
            let u = -0.5 + i as f64 / (samples - 1) as f64;
            v_max = v_max.max(self.value(u).abs());
            d1_max = d1_max.max(self.d1(u).abs());
            d2_max = d2_max.max(self.d2(u).abs());
        }
        let checks = [
            (v_max, 1.0, "plateau height"),
            (d1_max, self.d1_bound(), "slope bound"),
            (d2_max, self.d2_bound(), "curvature bound"),
        ];
        for (measured, declared, what) in checks {
            if measured > declared * (1.0 + 1e-12) || measured < declared * 0.95 {
                return Err(CaloricError::Infeasible(format!(
                    "spline certification failed: {what} measured {measured}, declared {declared}"
                )));
            }
        }
        Ok(())
    }
}

/// Tensor plateau bump adapted to an s-parabolic cube: a product of one
/// spatial profile per axis and one temporal profile, each scaled to the
/// cube's sides. Raw height 1 on the inner plateau box.
#[derive(Debug, Clone)]
struct TensorBump {
    cube: PsCube,
    space: PlateauSpline,
    time: PlateauSpline,
}

impl TensorBump {
    fn arguments(&self, p: &Point) -> (Vec<f64>, f64) {
        let c = self.cube.center();
        let u = p
            .x
            .iter()
            .zip(&c.x)
            .map(|(x, cx)| (x - cx) / self.cube.side)
            .collect();
        let w = (p.t - c.t) / self.cube.temporal_side();
        (u, w)
    }

    fn value(&self, p: &Point) -> f64 {
        let (u, w) = self.arguments(p);
        u.iter().map(|&ui| self.space.value(ui)).product::<f64>() * self.time.value(w)
    }

    fn gradient(&self, p: &Point) -> Vec<f64> {
        let (u, w) = self.arguments(p);
        let factors: Vec<f64> = u.iter().map(|&ui| self.space.value(ui)).collect();
        let tv = self.time.value(w);
        (0..u.len())
            .map(|i| {
                let others: f64 = factors
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, f)| f)
                    .product();
                self.space.d1(u[i]) / self.cube.side * others * tv
            })
            .collect()
    }

    fn time_derivative(&self, p: &Point) -> f64 {
        let (u, w) = self.arguments(p);
        let space: f64 = u.iter().map(|&ui| self.space.value(ui)).product();
        self.time.d1(w) / self.cube.temporal_side() * space
    }

    fn laplacian(&self, p: &Point) -> f64 {
        let (u, w) = self.arguments(p);
        let factors: Vec<f64> = u.iter().map(|&ui| self.space.value(ui)).collect();
        let tv = self.time.value(w);
        let h2 = self.cube.side * self.cube.side;
        (0..u.len())
            .map(|i| {
                let others: f64 = factors
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, f)| f)
                    .product();
                self.space.d2(u[i]) / h2 * others * tv
            })
            .sum()
    }
}

/// The four certified suprema of an admissible bump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpNorms {
    pub sup: f64,
    pub grad: f64,
    pub dt: f64,
    pub lap: f64,
}

/// Smooth bump adapted to an s-parabolic cube, scaled so that the four
/// admissibility bounds hold with margin: `sup <= 1`, `grad <= side^{-1}`,
/// `dt <= side^{-2s}`, `lap <= side^{-2}`.
///
/// The raw tensor profile has plateau height 1 (use [`raw_value`] for the
/// partition-of-unity normalization); [`value`] and the derivative
/// evaluators include the `scale` factor the certificate refers to.
///
/// [`raw_value`]: AdmissibleBump::raw_value
/// [`value`]: AdmissibleBump::value
#[derive(Debug, Clone)]
pub struct AdmissibleBump {
    pub cube: PsCube,
    /// Height of the scaled bump: `value = scale * raw_value`.
    pub scale: f64,
    /// Certified suprema of the scaled bump.
    pub norms: BumpNorms,
    bump: TensorBump,
}

impl AdmissibleBump {
    pub fn value(&self, p: &Point) -> f64 {
        self.scale * self.bump.value(p)
    }

    /// Unscaled profile: 1 on the inner plateau box.
    pub fn raw_value(&self, p: &Point) -> f64 {
        self.bump.value(p)
    }

    pub fn gradient(&self, p: &Point) -> Vec<f64> {
        self.bump.gradient(p).into_iter().map(|g| self.scale * g).collect()
    }

    pub fn time_derivative(&self, p: &Point) -> f64 {
        self.scale * self.bump.time_derivative(p)
    }

    pub fn laplacian(&self, p: &Point) -> f64 {
        self.scale * self.bump.laplacian(p)
    }
}

/// Fixed normalizer dividing the raw tensor bump: dominates the spline's
/// Laplacian constant `n * 160/sqrt(3) ~ 92.4 n` and a fortiori the
/// gradient (`7.5 sqrt(n)`) and time (`7.5`) constants, with margin.
fn bump_normalizer(n: usize) -> f64 {
    100.0 * n as f64
}

/// Build and certify the admissible bump of a cube. The profile constants
/// are static, so a certification failure indicates an implementation bug
/// rather than a bad input.
pub fn admissible_bump(cube: &PsCube) -> Result<AdmissibleBump> {
    let n = cube.corner.len();
    let profile = PlateauSpline::new(0.25);
    profile.audit()?;
    let scale = 1.0 / bump_normalizer(n);
    let side = cube.side;
    let t_side = cube.temporal_side();
    let norms = BumpNorms {
        sup: scale,
        grad: scale * (n as f64).sqrt() * profile.d1_bound() / side,
        dt: scale * profile.d1_bound() / t_side,
        lap: scale * n as f64 * profile.d2_bound() / (side * side),
    };
    let limits = [
        (norms.sup, 1.0, "sup"),
        (norms.grad, 1.0 / side, "gradient"),
        (norms.dt, 1.0 / t_side, "time derivative"),
        (norms.lap, 1.0 / (side * side), "Laplacian"),
    ];
    for (certified, admissible, what) in limits {
        if certified > admissible {
            return Err(CaloricError::Infeasible(format!(
                "bump certification failed: {what} norm {certified} exceeds {admissible}"
            )));
        }
    }
    Ok(AdmissibleBump {
        cube: cube.clone(),
        scale,
        norms,
        bump: TensorBump { cube: cube.clone(), space: profile, time: profile },
    })
}

/// Concentric double of a cube: twice the spatial side, temporal side
/// `(2 side)^{2s}`, same center.
pub fn doubled_cube(q: &PsCube) -> PsCube {
    let center = q.center();
    let corner = center.x.iter().map(|c| c - q.side).collect();
    let doubled = PsCube::new(corner, 0.0, 2.0 * q.side, q.s);
    let t0 = center.t - doubled.temporal_side() / 2.0;
    PsCube::new(doubled.corner, t0, doubled.side, doubled.s)
}

/// Partition of unity subordinate to the doubles `2Q_k` of a family of
/// comparable cubes: `phi_k = psi_k * prod_{j<k} (1 - psi_j)` with `psi_k`
/// the raw plateau bump of `2Q_k`, so that `sum_k phi_k = 1 - prod_k (1 -
/// psi_k)`, which is exactly 1 wherever some `psi_k` sits on its plateau —
/// in particular on the union of the original cubes.
#[derive(Debug, Clone)]
pub struct HarveyPolkingPartition {
    /// The original cubes `Q_k`.
    pub cubes: Vec<PsCube>,
    /// The supports `2Q_k`.
    pub supports: Vec<PsCube>,
    bumps: Vec<TensorBump>,
}

/// Audited suprema of one partition function, scaled by the powers of its
/// support side (so comparable across scales).
#[derive(Debug, Clone, Copy)]
pub struct PartitionAudit {
    /// max |phi_k|; at most 1 by construction.
    pub sup: f64,
    /// max |grad phi_k| * side(2Q_k).
    pub grad: f64,
    /// max |dt phi_k| * side(2Q_k)^{2s}.
    pub dt: f64,
    /// max |lap phi_k| * side(2Q_k)^2 (central second differences).
    pub lap: f64,
}

impl HarveyPolkingPartition {
    pub fn len(&self) -> usize {
        self.bumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bumps.is_empty()
    }

    /// Raw bump `psi_k` of the double `2Q_k`.
    fn psi(&self, k: usize, p: &Point) -> f64 {
        self.bumps[k].value(p)
    }

    /// Partition function `phi_k`.
    pub fn value(&self, k: usize, p: &Point) -> f64 {
        let mut v = self.psi(k, p);
        for j in 0..k {
            v *= 1.0 - self.psi(j, p);
        }
        v
    }

    pub fn values(&self, p: &Point) -> Vec<f64> {
        let mut tail = 1.0;
        (0..self.len())
            .map(|k| {
                let v = self.psi(k, p) * tail;
                tail *= 1.0 - self.psi(k, p);
                v
            })
            .collect()
    }

    /// `sum_k phi_k = 1 - prod_k (1 - psi_k)`.
    pub fn sum(&self, p: &Point) -> f64 {
        let mut tail = 1.0;
        for bump in &self.bumps {
            tail *= 1.0 - bump.value(p);
        }
        1.0 - tail
    }

    /// Analytic gradient of `phi_k` by the product rule over the telescoped
    /// factors.
    pub fn gradient(&self, k: usize, p: &Point) -> Vec<f64> {
        let n = p.dim();
        let psi: Vec<f64> = (0..=k).map(|j| self.psi(j, p)).collect();
        let mut grad = self.bumps[k].gradient(p);
        let head: f64 = (0..k).map(|j| 1.0 - psi[j]).product();
        for g in &mut grad {
            *g *= head;
        }
        for i in 0..k {
            let others: f64 = (0..k).filter(|j| *j != i).map(|j| 1.0 - psi[j]).product();
            let gi = self.bumps[i].gradient(p);
            for axis in 0..n {
                grad[axis] -= psi[k] * others * gi[axis];
            }
        }
        grad
    }

    pub fn time_derivative(&self, k: usize, p: &Point) -> f64 {
        let psi: Vec<f64> = (0..=k).map(|j| self.psi(j, p)).collect();
        let head: f64 = (0..k).map(|j| 1.0 - psi[j]).product();
        let mut dt = self.bumps[k].time_derivative(p) * head;
        for i in 0..k {
            let others: f64 = (0..k).filter(|j| *j != i).map(|j| 1.0 - psi[j]).product();
            dt -= psi[k] * others * self.bumps[i].time_derivative(p);
        }
        dt
    }

    /// Measure the scale-normalized suprema of one partition function over
    /// a deterministic tensor grid plus seeded random points in its
    /// support. The Laplacian uses central second differences of the exact
    /// values.
    pub fn audit(&self, k: usize, seed: u64) -> PartitionAudit {
        let q = &self.supports[k];
        let n = q.corner.len();
        let side = q.side;
        let t_side = q.temporal_side();
        let mut points = Vec::new();
        let grid = 7usize;
        let total = grid.pow(n as u32) * grid;
        for flat in 0..total {
            let mut rest = flat;
            let it = rest % grid;
            rest /= grid;
            let mut x = vec![0.0; n];
            for axis in (0..n).rev() {
                let i = rest % grid;
                rest /= grid;
                x[axis] = q.corner[axis] + (i as f64 + 0.5) * side / grid as f64;
            }
            points.push(Point::new(x, q.t0 + (it as f64 + 0.5) * t_side / grid as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..256 {
            let x = q.corner.iter().map(|c| c + rng.gen::<f64>() * side).collect();
            points.push(Point::new(x, q.t0 + rng.gen::<f64>() * t_side));
        }
        let h = 1e-4 * side;
        let mut audit = PartitionAudit { sup: 0.0, grad: 0.0, dt: 0.0, lap: 0.0 };
        for p in &points {
            audit.sup = audit.sup.max(self.value(k, p).abs());
            let g = self.gradient(k, p);
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            audit.grad = audit.grad.max(gnorm * side);
            audit.dt = audit.dt.max(self.time_derivative(k, p).abs() * t_side);
            let mut lap = 0.0;
            for axis in 0..n {
                let mut hi = p.clone();
                let mut lo = p.clone();
                hi.x[axis] += h;
                lo.x[axis] -= h;
                lap += (self.value(k, &hi) - 2.0 * self.value(k, p) + self.value(k, &lo))
                    / (h * h);
            }
            audit.lap = audit.lap.max(lap.abs() * side * side);
        }
        audit
    }
}

/// Required plateau fraction of the temporal profile: the double `2Q` has
/// temporal side `(2 side)^{2s}`, and the plateau must still span `Q`'s
/// temporal extent `side^{2s}`, i.e. reach the fraction `2^{-2s}/2`. The
/// spatial requirement is always exactly `1/4`.
fn time_plateau_fraction(s: f64) -> f64 {
    let needed = 0.5 * 2.0f64.powf(-2.0 * s);
    // Midway between the requirement and the support edge keeps a genuine
    // C^2 transition at every s, at the cost of s-dependent constants.
    (needed + 0.5) / 2.0
}

/// Build the partition of unity over the doubles of `cubes`. Gates: at
/// least one cube, all with the same dimension and exponent, spatial sides
/// within a factor 4 of each other.
pub fn harvey_polking_partition(cubes: &[PsCube]) -> Result<HarveyPolkingPartition> {
    let first = cubes
        .first()
        .ok_or_else(|| CaloricError::GridMismatch("partition needs at least one cube".into()))?;
    let mut side_lo = f64::INFINITY;
    let mut side_hi = 0.0f64;
    for q in cubes {
        if q.corner.len() != first.corner.len() || q.s != first.s {
            return Err(CaloricError::GridMismatch(
                "partition cubes must share dimension and exponent".into(),
            ));
        }
        side_lo = side_lo.min(q.side);
        side_hi = side_hi.max(q.side);
    }
    if side_hi > 4.0 * side_lo {
        return Err(CaloricError::param(
            "cube side ratio",
            side_hi / side_lo,
            "[1, 4] (comparable scales)",
        ));
    }
    let space = PlateauSpline::new(0.25);
    let time = PlateauSpline::new(time_plateau_fraction(first.s));
    space.audit()?;
    time.audit()?;
    let supports: Vec<PsCube> = cubes.iter().map(doubled_cube).collect();
    let bumps = supports
        .iter()
        .map(|q| TensorBump { cube: q.clone(), space, time })
        .collect();
    Ok(HarveyPolkingPartition { cubes: cubes.to_vec(), supports, bumps })
}

/// Similarity dimension `log(copies) / log(1/ratio)` of a self-similar set
/// with `copies` pieces scaled by `ratio`.
pub fn similarity_dimension(copies: usize, ratio: f64) -> f64 {
    (copies as f64).ln() / (1.0 / ratio).ln()
}

/// Self-similar lattice set: starting from the unit root cell, each
/// iteration replaces every cell by `copies` sub-cells `g` generations
/// finer, where `ratio = 2^{-g}`, using one fixed placement pattern.
/// `seed = 0` anchors the copies at the extreme corners of the sub-grid
/// (the classical planar corner set for `n = 1`, `s = 1/2`, 4 copies at
/// ratio 1/4); a nonzero seed draws the pattern uniformly instead.
///
/// Feasibility: the sub-grid holds `2^{gn} * m^g` disjoint slots, so more
/// copies than that cannot be placed.
pub fn ps_cantor(
    lattice: Lattice,
    copies: usize,
    ratio: f64,
    levels: u32,
    seed: u64,
) -> Result<LatticeSet> {
    if copies == 0 {
        return Err(CaloricError::param("copies", copies as f64, "[1, inf)"));
    }
    if levels == 0 {
        return Err(CaloricError::param("levels", levels as f64, "[1, inf)"));
    }
    let g_real = -ratio.log2();
    let g = g_real.round();
    if !(ratio > 0.0 && ratio < 1.0) || (g_real - g).abs() > 1e-9 || g < 1.0 {
        return Err(CaloricError::param(
            "ratio",
            ratio,
            "2^{-g} for a whole number of generations g >= 1",
        ));
    }
    let g = g as u32;
    let n = lattice.params.n;
    let m = lattice.temporal_branching();
    let sx = 1i64 << g;
    let st = m.pow(g) as i64;
    let slots_total = (sx.pow(n as u32) * st) as usize;
    if copies > slots_total {
        return Err(CaloricError::Infeasible(format!(
            "{copies} copies at ratio {ratio} need {copies} disjoint sub-cells, \
             but the sub-grid holds only {slots_total}"
        )));
    }
    // Enumerate the sub-grid slots.
    let mut slots: Vec<(Vec<i64>, i64)> = Vec::with_capacity(slots_total);
    let mut ix = vec![0i64; n];
    loop {
        for it in 0..st {
            slots.push((ix.clone(), it));
        }
        let mut axis = 0;
        loop {
            if axis == n {
                break;
            }
            ix[axis] += 1;
            if ix[axis] < sx {
                break;
            }
            ix[axis] = 0;
            axis += 1;
        }
        if axis == n {
            break;
        }
    }
    if seed == 0 {
        // Corner-anchored: sort by distance to the nearest sub-grid corner,
        // ties lexicographic.
        slots.sort_by_key(|(ix, it)| {
            let corner_score: i64 = ix.iter().map(|&i| i.min(sx - 1 - i)).sum::<i64>()
                + (*it).min(st - 1 - it);
            (corner_score, ix.clone(), *it)
        });
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        slots.shuffle(&mut rng);
    }
    let pattern = &slots[..copies];
    let mut cells = vec![LatticeCell { level: 0, ix: vec![0; n], it: 0 }];
    for _ in 0..levels {
        cells = cells
            .iter()
            .flat_map(|cell| {
                pattern.iter().map(|(ox, ot)| LatticeCell {
                    level: cell.level + g,
                    ix: cell
                        .ix
                        .iter()
                        .zip(ox)
                        .map(|(&i, &o)| i * sx + o)
                        .collect(),
                    it: cell.it * st + ot,
                })
            })
            .collect();
    }
    LatticeSet::new(lattice, g * levels, cells)
}
