//! Discrete measures on `R^n x R` with growth audits, potentials against the
//! kernel family, and seminorm estimators in the s-parabolic metric.
//!
//! A [`DiscreteMeasure`] is a finite sum of weighted atoms. Its regularity is
//! quantified by the *growth audit* [`growth_constant`]: the best constant
//! `C` with `mu(B(c, r)) <= C r^rho` over a family of audited balls. The
//! audit produces a [`GrowthCertificate`] that travels with the measure.
//!
//! Potentials `K * mu` are compensated sums of kernel evaluations; their
//! smoothness is probed by three estimators in the parabolic geometry:
//! mean oscillation over s-parabolic cubes ([`bmo_seminorm`]), Hölder
//! quotients over point pairs ([`lip_seminorm`]), and time-only Hölder
//! quotients at fixed spatial position ([`lip_time_seminorm`]). All three
//! are running maxima over deterministic seeded samples, so they are
//! certified lower bounds of the corresponding suprema that never decrease
//! as the sample grows.

use crate::error::{CaloricError, Result};
use crate::kernels::{kernel_eval, KernelId, KernelValue};
use crate::psgeo::{dilate, dist_ps, Point, PsBall, PsCube, PsParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::Path;

/// Outcome of a growth audit: `mu(B(c, r)) <= constant * r^degree` held on
/// every audited ball.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCertificate {
    pub degree: f64,
    pub constant: f64,
}

/// Finite positive measure given by weighted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    pub params: PsParams,
    /// `(location, weight)` with `weight >= 0`.
    pub atoms: Vec<(Point, f64)>,
    /// Present once a growth audit has run.
    pub certificate: Option<GrowthCertificate>,
}

impl DiscreteMeasure {
    pub fn new(params: PsParams, atoms: Vec<(Point, f64)>) -> Result<Self> {
        for (i, (p, w)) in atoms.iter().enumerate() {
            if p.dim() != params.n {
                return Err(CaloricError::GridMismatch(format!(
                    "atom {i} has {} spatial coordinates, measure expects {}",
                    p.dim(),
                    params.n
                )));
            }
            if !(*w >= 0.0 && w.is_finite()) {
                return Err(CaloricError::param("atom weight", *w, "[0, inf)"));
            }
        }
        Ok(DiscreteMeasure { params, atoms, certificate: None })
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// Mass inside a closed s-parabolic ball.
    pub fn mass_in_ball(&self, ball: &PsBall) -> f64 {
        self.atoms
            .iter()
            .filter(|(p, _)| ball.contains(p))
            .map(|(_, w)| w)
            .sum()
    }

    /// Smallest positive s-parabolic distance between two atoms
    /// (`None` with fewer than two distinct locations).
    pub fn min_gap_ps(&self) -> Option<f64> {
        let s = self.params.s;
        let mut best = f64::INFINITY;
        for i in 0..self.atoms.len() {
            for j in i + 1..self.atoms.len() {
                let d = dist_ps(&self.atoms[i].0, &self.atoms[j].0, s);
                if d > 0.0 {
                    best = best.min(d);
                }
            }
        }
        best.is_finite().then_some(best)
    }

    /// s-parabolic diameter of the support.
    pub fn diameter_ps(&self) -> f64 {
        let s = self.params.s;
        let mut best = 0.0f64;
        for i in 0..self.atoms.len() {
            for j in i + 1..self.atoms.len() {
                best = best.max(dist_ps(&self.atoms[i].0, &self.atoms[j].0, s));
            }
        }
        best
    }

    /// Axis-aligned bounding box of the support: per-axis `(lo, hi)` plus
    /// the time extent.
    pub fn bounding_box(&self) -> (Vec<(f64, f64)>, (f64, f64)) {
        let n = self.params.n;
        let mut space = vec![(f64::INFINITY, f64::NEG_INFINITY); n];
        let mut time = (f64::INFINITY, f64::NEG_INFINITY);
        for (p, _) in &self.atoms {
            for (axis, v) in p.x.iter().enumerate() {
                space[axis].0 = space[axis].0.min(*v);
                space[axis].1 = space[axis].1.max(*v);
            }
            time.0 = time.0.min(p.t);
            time.1 = time.1.max(p.t);
        }
        (space, time)
    }

    /// Translate every atom by `v`.
    pub fn translated(&self, v: &Point) -> DiscreteMeasure {
        DiscreteMeasure {
            params: self.params,
            atoms: self
                .atoms
                .iter()
                .map(|(p, w)| {
                    let x = p.x.iter().zip(&v.x).map(|(a, b)| a + b).collect();
                    (Point::new(x, p.t + v.t), *w)
                })
                .collect(),
            certificate: None,
        }
    }

    /// Anisotropic dilation `delta_lambda` of the atoms with weights scaled
    /// by `lambda^rho`; a measure of growth degree `rho` keeps its constant.
    pub fn dilated(&self, lambda: f64, rho: f64) -> DiscreteMeasure {
        let s = self.params.s;
        let factor = lambda.powf(rho);
        DiscreteMeasure {
            params: self.params,
            atoms: self
                .atoms
                .iter()
                .map(|(p, w)| (dilate(lambda, p, s), w * factor))
                .collect(),
            certificate: None,
        }
    }

    /// Serialize as `{"n", "s", "atoms": [[x..., t, w], ...],
    /// "certificate": {"degree", "constant"}}` (certificate omitted when
    /// absent).
    pub fn to_json(&self) -> Value {
        let atoms: Vec<Value> = self
            .atoms
            .iter()
            .map(|(p, w)| {
                let mut row: Vec<Value> = p.x.iter().map(|v| json!(v)).collect();
                row.push(json!(p.t));
                row.push(json!(w));
                Value::Array(row)
            })
            .collect();
        let mut obj = json!({
            "n": self.params.n,
            "s": self.params.s,
            "atoms": atoms,
        });
        if let Some(cert) = &self.certificate {
            obj["certificate"] = json!({
                "degree": cert.degree,
                "constant": cert.constant,
            });
        }
        obj
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let bad = |detail: String| CaloricError::MalformedData {
            format: "measure JSON",
            detail,
        };
        let n = value["n"]
            .as_u64()
            .ok_or_else(|| bad("missing integer field `n`".into()))? as usize;
        let s = value["s"]
            .as_f64()
            .ok_or_else(|| bad("missing number field `s`".into()))?;
        let params = PsParams::new(n, s)?;
        let rows = value["atoms"]
            .as_array()
            .ok_or_else(|| bad("missing array field `atoms`".into()))?;
        let mut atoms = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let row = row
                .as_array()
                .ok_or_else(|| bad(format!("atom {i} is not an array")))?;
            if row.len() != n + 2 {
                return Err(bad(format!(
                    "atom {i} has {} entries, expected {} (x..., t, w)",
                    row.len(),
                    n + 2
                )));
            }
            let nums: Vec<f64> = row
                .iter()
                .map(|v| v.as_f64())
                .collect::<Option<_>>()
                .ok_or_else(|| bad(format!("atom {i} has a non-numeric entry")))?;
            atoms.push((Point::new(nums[..n].to_vec(), nums[n]), nums[n + 1]));
        }
        let mut measure = DiscreteMeasure::new(params, atoms)?;
        if let Some(cert) = value.get("certificate").filter(|v| !v.is_null()) {
            let degree = cert["degree"]
                .as_f64()
                .ok_or_else(|| bad("certificate missing `degree`".into()))?;
            let constant = cert["constant"]
                .as_f64()
                .ok_or_else(|| bad("certificate missing `constant`".into()))?;
            measure.certificate = Some(GrowthCertificate { degree, constant });
        }
        Ok(measure)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let value: Value = serde_json::from_str(&text)?;
        Self::from_json(&value)
    }
}

/// Controls for the growth audit.
#[derive(Debug, Clone)]
pub struct GrowthOptions {
    /// Audited radii; `None` selects the dyadic ladder in
    /// `[min gap / 4, 2 diam]` (with a unit fallback ladder for degenerate
    /// supports, where those quantities vanish).
    pub radii: Option<Vec<f64>>,
    /// Random audit centers in addition to the atoms themselves.
    pub random_centers: usize,
    pub seed: u64,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        GrowthOptions { radii: None, random_centers: 1000, seed: 0x6d65617375726573 }
    }
}

fn default_radius_ladder(mu: &DiscreteMeasure) -> Vec<f64> {
    let lo = mu.min_gap_ps().map(|g| g / 4.0).unwrap_or(0.25);
    let diam = mu.diameter_ps();
    let hi = if diam > 0.0 { 2.0 * diam } else { 4.0 * lo };
    let mut radii = Vec::new();
    let mut r = lo;
    while r < hi {
        radii.push(r);
        r *= 2.0;
    }
    radii.push(hi);
    radii
}

/// Audit `mu(B(c, r)) <= C r^rho` over balls centered at every atom plus
/// seeded random centers, radii on a dyadic ladder. Returns the best (i.e.
/// worst-case) constant and its witness ball, and attaches the certificate
/// to the measure.
///
/// The random centers are produced *relative to the support geometry*
/// (bounding box inflated by one diameter, time by diameter^{2s}), which
/// makes the audit exactly covariant under the anisotropic dilations.
pub fn growth_constant(mu: &mut DiscreteMeasure, rho: f64) -> Result<(f64, PsBall)> {
    growth_constant_with(mu, rho, &GrowthOptions::default())
}

pub fn growth_constant_with(
    mu: &mut DiscreteMeasure,
    rho: f64,
    opts: &GrowthOptions,
) -> Result<(f64, PsBall)> {
    if rho <= 0.0 {
        return Err(CaloricError::param("growth degree", rho, "(0, inf)"));
    }
    if mu.atoms.is_empty() {
        return Err(CaloricError::GridMismatch(
            "growth audit needs a nonempty measure".into(),
        ));
    }
    let s = mu.params.s;
    let radii = match &opts.radii {
        Some(r) => r.clone(),
        None => default_radius_ladder(mu),
    };
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(CaloricError::param("audit radius", 0.0, "(0, inf)"));
    }

    let mut centers: Vec<Point> = mu.atoms.iter().map(|(p, _)| p.clone()).collect();
    let (space_box, time_box) = mu.bounding_box();
    let diam = mu.diameter_ps();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_centers {
        let x: Vec<f64> = space_box
            .iter()
            .map(|(lo, hi)| {
                let u: f64 = rng.gen();
                (lo - diam) + u * ((hi - lo) + 2.0 * diam)
            })
            .collect();
        let u: f64 = rng.gen();
        let pad = diam.powf(2.0 * s);
        let t = (time_box.0 - pad) + u * ((time_box.1 - time_box.0) + 2.0 * pad);
        centers.push(Point::new(x, t));
    }

    let mut best = f64::NEG_INFINITY;
    let mut witness = PsBall::new(centers[0].clone(), radii[0], s);
    for center in &centers {
        for &r in &radii {
            let ball = PsBall::new(center.clone(), r, s);
            let ratio = mu.mass_in_ball(&ball) / r.powf(rho);
            if ratio > best {
                best = ratio;
                witness = ball;
            }
        }
    }
    mu.certificate = Some(GrowthCertificate { degree: rho, constant: best });
    Ok((best, witness))
}

/// One potential value together with the number of atoms whose contribution
/// was clamped at the near-field sphere.
#[derive(Debug, Clone)]
pub struct PotentialSample {
    pub value: KernelValue,
    pub clamped_atoms: usize,
}

fn point_sub(q: &Point, a: &Point) -> Point {
    Point::new(
        q.x.iter().zip(&a.x).map(|(p, r)| p - r).collect(),
        q.t - a.t,
    )
}

/// Kernel argument for one atom: the raw displacement, or its projection
/// onto the `eps`-sphere (along the anisotropic ray, so the direction in
/// the parabolic geometry is preserved) when the query is closer than
/// `eps`.
fn near_field_argument(diff: Point, eps: f64, s: f64) -> (Point, bool) {
    if eps <= 0.0 {
        return (diff, false);
    }
    let d = crate::psgeo::norm_ps(&diff, s);
    if d >= eps {
        return (diff, false);
    }
    if d == 0.0 {
        // Query sits on the atom: no direction to keep; evaluate on the
        // future time axis where every kernel of the family is finite.
        let n = diff.x.len();
        return (Point::new(vec![0.0; n], eps.powf(2.0 * s)), true);
    }
    (dilate(eps / d, &diff, s), true)
}

fn potential_at(
    id: KernelId,
    mu: &DiscreteMeasure,
    query: &Point,
    eps_near: f64,
) -> Result<PotentialSample> {
    let params = mu.params;
    let width = if id.is_vector() { params.n } else { 1 };
    let mut sum = vec![0.0f64; width];
    let mut comp = vec![0.0f64; width];
    let mut clamped = 0usize;
    for (index, (atom, w)) in mu.atoms.iter().enumerate() {
        let (arg, was_clamped) = near_field_argument(point_sub(query, atom), eps_near, params.s);
        if was_clamped {
            clamped += 1;
        }
        let value = kernel_eval(params, id, &arg).map_err(|e| CaloricError::AtomContext {
            index,
            source: Box::new(e),
        })?;
        let components: &[f64] = match &value {
            KernelValue::Scalar(v) => std::slice::from_ref(v),
            KernelValue::Vector(v) => v,
        };
        for (slot, (acc, c)) in components.iter().zip(sum.iter_mut().zip(comp.iter_mut())) {
            let term = slot * w - *c;
            let next = *acc + term;
            *c = (next - *acc) - term;
            *acc = next;
        }
    }
    let value = if id.is_vector() {
        KernelValue::Vector(sum)
    } else {
        KernelValue::Scalar(sum[0])
    };
    Ok(PotentialSample { value, clamped_atoms: clamped })
}

/// Potential `(K * mu)(q) = sum_a w_a K(q - a)` at each query, by
/// compensated summation, parallel over queries.
///
/// `eps_near` clamps the contribution of atoms closer than that distance at
/// the kernel's value on the `eps_near`-sphere; `None` selects half the
/// minimum atom gap (no clamping for degenerate supports). The clamp count
/// is reported per query.
pub fn potential(
    id: KernelId,
    mu: &DiscreteMeasure,
    queries: &[Point],
    eps_near: Option<f64>,
) -> Result<Vec<PotentialSample>> {
    let eps = eps_near.unwrap_or_else(|| mu.min_gap_ps().map_or(0.0, |g| g / 2.0));
    queries
        .par_iter()
        .map(|q| potential_at(id, mu, q, eps))
        .collect()
}

/// Closure view of a potential for the seminorm estimators: evaluates to
/// the component vector (length 1 for scalar kernels).
pub fn potential_field<'a>(
    id: KernelId,
    mu: &'a DiscreteMeasure,
    eps_near: f64,
) -> impl Fn(&Point) -> Result<Vec<f64>> + Sync + 'a {
    move |q: &Point| {
        let sample = potential_at(id, mu, q, eps_near)?;
        Ok(match sample.value {
            KernelValue::Scalar(v) => vec![v],
            KernelValue::Vector(v) => v,
        })
    }
}

/// Which seminorm an estimate reports.
#[derive(Debug, Clone, PartialEq)]
pub enum SeminormKind {
    BmoPs,
    LipAlphaPs(f64),
    LipTime(f64),
}

/// Argmax witness of a seminorm estimate.
#[derive(Debug, Clone)]
pub enum Witness {
    Cube(PsCube),
    Pair(Point, Point),
}

/// A certified lower bound of a seminorm: the running maximum over the
/// audited sample, which can only grow as the sample grows.
#[derive(Debug, Clone)]
pub struct SeminormEstimate {
    pub kind: SeminormKind,
    pub value: f64,
    /// Audited cubes or pairs (successful evaluations).
    pub samples: usize,
    /// Evaluation failures skipped.
    pub skipped: usize,
    /// Smallest and largest cube side / pair separation audited.
    pub scale_range: (f64, f64),
    pub witness: Option<Witness>,
    pub seed: u64,
}

/// Deterministic cube sampler for [`bmo_seminorm`].
///
/// Cubes are drawn across the given dyadic scales; centers alternate
/// between the focus box (the measure's support, inflated) and the far
/// field (distances log-uniform up to `far_factor` times the focus
/// diameter — how far "far" is has no canonical answer, so it is explicit
/// and reported).
#[derive(Debug, Clone)]
pub struct CubeSampler {
    pub scales: Vec<f64>,
    pub centers_per_scale: usize,
    /// Per-axis spatial focus intervals plus the time interval.
    pub focus_space: Vec<(f64, f64)>,
    pub focus_time: (f64, f64),
    pub far_factor: f64,
    /// Quadrature nodes per axis inside each cube.
    pub nodes_per_axis: usize,
    pub seed: u64,
}

impl CubeSampler {
    /// Sampler focused on the support of `mu`: four dyadic scales spanning
    /// `[diam/8, diam]`, 32 centers per scale, far field out to
    /// `2^10 diam`.
    pub fn around(mu: &DiscreteMeasure) -> CubeSampler {
        let (space, time) = mu.bounding_box();
        let diam = mu.diameter_ps().max(1e-9);
        CubeSampler {
            scales: (0..4).map(|k| diam / f64::powi(2.0, k)).collect(),
            centers_per_scale: 32,
            focus_space: space,
            focus_time: time,
            far_factor: f64::powi(2.0, 10),
            nodes_per_axis: 8,
            seed: 0x636f766572,
        }
    }

    fn focus_diameter(&self, s: f64) -> f64 {
        let dx: f64 = self
            .focus_space
            .iter()
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt();
        let dt = (self.focus_time.1 - self.focus_time.0).powf(1.0 / (2.0 * s));
        dx.max(dt).max(1e-9)
    }

    /// Deterministic cube stream; a larger `centers_per_scale` extends the
    /// stream without perturbing its prefix.
    fn cubes(&self, s: f64) -> Vec<PsCube> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.focus_space.len();
        let diam = self.focus_diameter(s);
        let mut cubes = Vec::with_capacity(self.scales.len() * self.centers_per_scale);
        for k in 0..self.centers_per_scale {
            for &side in &self.scales {
                // Fixed number of draws per item keeps the stream stable.
                let coords: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
                let tu: f64 = rng.gen();
                let far_u: f64 = rng.gen();
                let sign: f64 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let near = k % 2 == 0;
                let (center_x, center_t): (Vec<f64>, f64) = if near {
                    (
                        self.focus_space
                            .iter()
                            .zip(&coords)
                            .map(|((lo, hi), u)| lo - side + u * ((hi - lo) + 2.0 * side))
                            .collect(),
                        self.focus_time.0 - side.powf(2.0 * s)
                            + tu * ((self.focus_time.1 - self.focus_time.0)
                                + 2.0 * side.powf(2.0 * s)),
                    )
                } else {
                    // Far field: push the whole center out along a random
                    // axis by a log-uniform multiple of the focus diameter.
                    let radius = diam * self.far_factor.powf(far_u);
                    let mut x: Vec<f64> = self
                        .focus_space
                        .iter()
                        .zip(&coords)
                        .map(|((lo, hi), u)| lo + u * (hi - lo))
                        .collect();
                    let axis = k % (n + 1);
                    let mut t = self.focus_time.0 + tu * (self.focus_time.1 - self.focus_time.0);
                    if axis < n {
                        x[axis] += sign * radius;
                    } else {
                        t += sign * radius.powf(2.0 * s);
                    }
                    (x, t)
                };
                let corner: Vec<f64> = center_x.iter().map(|c| c - side / 2.0).collect();
                let t0 = center_t - side.powf(2.0 * s) / 2.0;
                cubes.push(PsCube::new(corner, t0, side, s));
            }
        }
        cubes
    }
}

/// Mean oscillation of `field` over one s-parabolic cube with a tensor
/// midpoint rule (`m` nodes per axis); the cube mean uses the same nodes,
/// so the result is a true lower bound of the BMO supremum up to
/// quadrature error on this cube.
fn cube_oscillation<F>(field: &F, cube: &PsCube, m: usize) -> Result<f64>
where
    F: Fn(&Point) -> Result<Vec<f64>> + Sync,
{
    let n = cube.corner.len();
    let nodes_total = m.pow(n as u32) * m;
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(nodes_total);
    let t_side = cube.temporal_side();
    for flat in 0..nodes_total {
        let mut rest = flat;
        let it = rest % m;
        rest /= m;
        let mut x = vec![0.0; n];
        for axis in (0..n).rev() {
            let i = rest % m;
            rest /= m;
            x[axis] = cube.corner[axis] + (i as f64 + 0.5) * cube.side / m as f64;
        }
        let t = cube.t0 + (it as f64 + 0.5) * t_side / m as f64;
        values.push(field(&Point::new(x, t))?);
    }
    let width = values[0].len();
    let mut mean = vec![0.0; width];
    for v in &values {
        for (acc, c) in mean.iter_mut().zip(v) {
            *acc += c;
        }
    }
    for acc in &mut mean {
        *acc /= values.len() as f64;
    }
    let mut osc = 0.0;
    for v in &values {
        let dev: f64 = v
            .iter()
            .zip(&mean)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        osc += dev;
    }
    Ok(osc / values.len() as f64)
}

/// BMO estimate in the s-parabolic geometry: maximum over sampled cubes of
/// the mean oscillation `(1/|Q|) int_Q |f - f_Q|`.
pub fn bmo_seminorm<F>(
    params: PsParams,
    field: F,
    sampler: &CubeSampler,
) -> Result<SeminormEstimate>
where
    F: Fn(&Point) -> Result<Vec<f64>> + Sync,
{
    if sampler.scales.is_empty() || sampler.scales.iter().any(|s| !(*s > 0.0)) {
        return Err(CaloricError::param("cube scale", 0.0, "(0, inf)"));
    }
    let cubes = sampler.cubes(params.s);
    let outcomes: Vec<Option<f64>> = cubes
        .par_iter()
        .map(|cube| cube_oscillation(&field, cube, sampler.nodes_per_axis).ok())
        .collect();
    let mut value = 0.0f64;
    let mut witness = None;
    let mut samples = 0usize;
    let mut skipped = 0usize;
    for (cube, osc) in cubes.iter().zip(&outcomes) {
        match osc {
            Some(o) => {
                samples += 1;
                if *o > value {
                    value = *o;
                    witness = Some(Witness::Cube(cube.clone()));
                }
            }
            None => skipped += 1,
        }
    }
    let lo = sampler.scales.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sampler.scales.iter().cloned().fold(0.0f64, f64::max);
    Ok(SeminormEstimate {
        kind: SeminormKind::BmoPs,
        value,
        samples,
        skipped,
        scale_range: (lo, hi),
        witness,
        seed: sampler.seed,
    })
}

/// Deterministic pair sampler for the Hölder estimators.
///
/// At every separation scale the stream alternates same-time pairs,
/// same-space pairs, and mixed pairs (the sup splits into exactly these
/// regimes), plus deterministic pairs anchored at the given points.
#[derive(Debug, Clone)]
pub struct PairSampler {
    /// Separation scales (s-parabolic distances).
    pub scales: Vec<f64>,
    pub pairs_per_scale: usize,
    pub focus_space: Vec<(f64, f64)>,
    pub focus_time: (f64, f64),
    /// Extra base points audited against offsets at every scale.
    pub anchors: Vec<Point>,
    pub seed: u64,
}

impl PairSampler {
    /// Sampler focused on the support of `mu`: five dyadic separation
    /// scales spanning `[gap, diam]` (or a unit ladder for degenerate
    /// supports), 64 pairs per scale.
    pub fn around(mu: &DiscreteMeasure) -> PairSampler {
        let (space, time) = mu.bounding_box();
        let diam = mu.diameter_ps().max(1e-9);
        let lo = mu.min_gap_ps().unwrap_or(diam / 16.0);
        let ratio = (diam / lo).max(2.0);
        let scales = (0..5)
            .map(|k| lo * ratio.powf(k as f64 / 4.0))
            .collect();
        PairSampler {
            scales,
            pairs_per_scale: 64,
            focus_space: space,
            focus_time: time,
            anchors: Vec::new(),
            seed: 0x7061697273,
        }
    }

    /// Deterministic pair stream; growing `pairs_per_scale` extends it
    /// without perturbing the prefix. Anchored pairs come first so their
    /// presence does not depend on the stream length.
    fn pairs(&self, s: f64) -> Vec<(Point, Point)> {
        let n = self.focus_space.len();
        let mut pairs = Vec::new();
        for anchor in &self.anchors {
            for &sep in &self.scales {
                for kind in 0..3 {
                    pairs.push((anchor.clone(), offset_point(anchor, sep, kind, 0, n, s)));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for k in 0..self.pairs_per_scale {
            for &sep in &self.scales {
                let coords: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
                let tu: f64 = rng.gen();
                let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let tsign: f64 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let base_x: Vec<f64> = self
                    .focus_space
                    .iter()
                    .zip(&coords)
                    .map(|((lo, hi), u)| lo - sep + u * ((hi - lo) + 2.0 * sep))
                    .collect();
                let pad = sep.powf(2.0 * s);
                let base_t = self.focus_time.0 - pad
                    + tu * ((self.focus_time.1 - self.focus_time.0) + 2.0 * pad);
                let base = Point::new(base_x, base_t);
                let norm: f64 = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
                let other = match k % 3 {
                    0 => {
                        // Same time, Euclidean offset of length sep.
                        let x = base
                            .x
                            .iter()
                            .zip(&dir)
                            .map(|(b, d)| b + sep * d / norm.max(1e-12))
                            .collect();
                        Point::new(x, base.t)
                    }
                    1 => {
                        // Same space, time offset of parabolic length sep.
                        Point::new(base.x.clone(), base.t + tsign * pad)
                    }
                    _ => {
                        // Mixed: both components move.
                        let x: Vec<f64> = base
                            .x
                            .iter()
                            .zip(&dir)
                            .map(|(b, d)| b + sep * d / (norm.max(1e-12) * 2.0))
                            .collect();
                        Point::new(x, base.t + tsign * pad / 2.0)
                    }
                };
                pairs.push((base, other));
            }
        }
        pairs
    }
}

/// Deterministic offset used for anchored pairs.
fn offset_point(base: &Point, sep: f64, kind: usize, axis: usize, n: usize, s: f64) -> Point {
    match kind {
         0 => {
            let mut x = base.x.clone();
            x[axis % n] += sep;
            Point::new(x, base.t)
        }
        1 => Point::new(base.x.clone(), base.t + sep.powf(2.0 * s)),
        _ => {
            let mut x = base.x.clone();
            x[axis % n] += sep / 2.0;
            Point::new(x, base.t + sep.powf(2.0 * s) / 2.0)
        }
    }
}

fn holder_estimate<F>(
    params: PsParams,
    field: &F,
    kind: SeminormKind,
    sampler: &PairSampler,
    time_only: bool,
) -> Result<SeminormEstimate>
where
    F: Fn(&Point) -> Result<Vec<f64>> + Sync,
{
    let exponent = match kind {
        SeminormKind::LipAlphaPs(a) => a,
        SeminormKind::LipTime(e) => e,
        SeminormKind::BmoPs => unreachable!("holder estimator with BMO kind"),
    };
    let mut pairs = sampler.pairs(params.s);
    if time_only {
        // Collapse every pair to a same-space pair at its base point.
        pairs = pairs
            .into_iter()
            .map(|(a, b)| {
                let dt = if b.t != a.t {
                    b.t - a.t
                } else {
                    // Recover a nonzero separation from the spatial part.
                    let d = dist_ps(&a, &b, params.s).max(1e-12);
                    d.powf(2.0 * params.s)
                };
                let shifted = Point::new(a.x.clone(), a.t + dt);
                (a, shifted)
            })
            .collect();
    }
    let quotients: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|(a, b)| {
            let denom = if time_only {
                (b.t - a.t).abs().powf(exponent)
            } else {
                dist_ps(a, b, params.s).powf(exponent)
            };
            if denom == 0.0 {
                return None;
            }
            let (fa, fb) = match (field(a), field(b)) {
                (Ok(fa), Ok(fb)) => (fa, fb),
                _ => return None,
            };
            let diff: f64 = fa
                .iter()
                .zip(&fb)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            Some(diff / denom)
        })
        .collect();
    let mut value = 0.0f64;
    let mut witness = None;
    let mut samples = 0usize;
    let mut skipped = 0usize;
    for (pair, q) in pairs.iter().zip(&quotients) {
        match q {
            Some(q) => {
                samples += 1;
                if *q > value {
                    value = *q;
                    witness = Some(Witness::Pair(pair.0.clone(), pair.1.clone()));
                }
            }
            None => skipped += 1,
        }
    }
    let lo = sampler.scales.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sampler.scales.iter().cloned().fold(0.0f64, f64::max);
    Ok(SeminormEstimate {
        kind,
        value,
        samples,
        skipped,
        scale_range: (lo, hi),
        witness,
        seed: sampler.seed,
    })
}

/// Hölder estimate in the s-parabolic metric: running max of
/// `|f(a) - f(b)| / dist_ps(a, b)^alpha` over the sampled pairs.
pub fn lip_seminorm<F>(
    params: PsParams,
    field: F,
    alpha: f64,
    sampler: &PairSampler,
) -> Result<SeminormEstimate>
where
    F: Fn(&Point) -> Result<Vec<f64>> + Sync,
{
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(CaloricError::param("alpha", alpha, "(0, 2]"));
    }
    holder_estimate(params, &field, SeminormKind::LipAlphaPs(alpha), sampler, false)
}

/// Time-only Hölder estimate: running max of `|f(x, t) - f(x, u)| /
/// |t - u|^eta` over pairs sharing their spatial position.
pub fn lip_time_seminorm<F>(
    params: PsParams,
    field: F,
    eta: f64,
    sampler: &PairSampler,
) -> Result<SeminormEstimate>
where
    F: Fn(&Point) -> Result<Vec<f64>> + Sync,
{
    if !(eta > 0.0 && eta < 1.0) {
        return Err(CaloricError::param("eta", eta, "(0, 1)"));
    }
    holder_estimate(params, &field, SeminormKind::LipTime(eta), sampler, true)
}
