//! Grid functions and the BMO/VMO machinery built on them.
//!
//! A [`Grid`] is a tensor-product cell-centered grid on a box; each site
//! carries the ω-mass of its cell. Ball averages, oscillations, medians and
//! the maximal/sharp functions are discrete sums over the sites that fall in
//! the region. Ball-family sups are lower bounds of the true norms.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{Ball, MeasureError, OrbitBall, WeightedMeasure};
use crate::quad::gauss_legendre;
use crate::reflection::{dist, norm};

/// Regions with fewer grid sites than this are unresolved.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpacesError {
    #[error("region holds {found} grid sites, need at least {needed}")]
    InsufficientResolution { found: usize, needed: usize },
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("median split failed: {0}")]
    SplitFailed(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

pub type Result<T> = std::result::Result<T, SpacesError>;

/// Tensor-product cell-centered grid with ω cell masses as weights.
#[derive(Debug, Clone)]
pub struct Grid {
    measure: Arc<WeightedMeasure>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: Vec<usize>,
    step: Vec<f64>,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Grid on the box `[lo, hi]` with `shape[i]` cells along axis `i`.
    /// Cell masses come from a 4-point Gauss rule per axis, so cells cut
    /// by a root hyperplane still get positive weight.
    pub fn uniform(measure: Arc<WeightedMeasure>, lo: &[f64], hi: &[f64], shape: &[usize]) -> Result<Self> {
        let n = measure.dim();
        if lo.len() != n || hi.len() != n || shape.len() != n {
            return Err(SpacesError::InvalidArgument(format!(
                "grid box and shape must have dimension {n}"
            )));
        }
        for i in 0..n {
            if !(hi[i] > lo[i]) || shape[i] == 0 {
                return Err(SpacesError::InvalidArgument(format!(
                    "axis {i}: need lo < hi and at least one cell"
                )));
            }
        }
        let step: Vec<f64> = (0..n).map(|i| (hi[i] - lo[i]) / shape[i] as f64).collect();
        let total: usize = shape.iter().product();
        let cell_vol: f64 = step.iter().product();
        let gl = gauss_legendre(4);
        let sub = 4usize.pow(n as u32);
        let mut points = Vec::with_capacity(total * n);
        let mut weights = Vec::with_capacity(total);
        let mut y = vec![0.0; n];
        for flat in 0..total {
            let idx = unflatten(flat, shape);
            let c: Vec<f64> = (0..n).map(|i| lo[i] + (idx[i] as f64 + 0.5) * step[i]).collect();
            let mut acc = 0.0;
            for q in 0..sub {
                let mut w = 1.0;
                let mut r = q;
                for i in 0..n {
                    let k = r % 4;
                    r /= 4;
                    y[i] = c[i] + 0.5 * step[i] * gl.nodes[k];
                    w *= 0.5 * gl.weights[k];
                }
                acc += w * measure.weight_density(&y);
            }
            points.extend_from_slice(&c);
            weights.push(acc * cell_vol);
        }
        Ok(Self {
            measure,
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            shape: shape.to_vec(),
            step,
            points,
            weights,
        })
    }

    /// Symmetric cube [−half, half]^N with `n` cells per axis.
    pub fn symmetric(measure: Arc<WeightedMeasure>, half: f64, n: usize) -> Result<Self> {
        let d = measure.dim();
        Self::uniform(measure, &vec![-half; d], &vec![half; d], &vec![n; d])
    }

    pub fn measure(&self) -> &Arc<WeightedMeasure> {
        &self.measure
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn step(&self) -> &[f64] {
        &self.step
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.points[i * n..(i + 1) * n]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks(self.dim())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sites inside the axis-aligned box [cmin, cmax].
    fn box_indices(&self, cmin: &[f64], cmax: &[f64], out: &mut Vec<usize>) {
        let n = self.dim();
        let mut first = vec![0usize; n];
        let mut last = vec![0usize; n];
        for i in 0..n {
            let a = ((cmin[i] - self.lo[i]) / self.step[i] - 0.5).ceil();
            let b = ((cmax[i] - self.lo[i]) / self.step[i] - 0.5).floor();
            if b < 0.0 || a > (self.shape[i] - 1) as f64 || a > b {
                return;
            }
            first[i] = a.max(0.0) as usize;
            last[i] = (b as usize).min(self.shape[i] - 1);
        }
        let mut idx = first.clone();
        loop {
            out.push(flatten(&idx, &self.shape));
            let mut l = n;
            loop {
                if l == 0 {
                    return;
                }
                l -= 1;
                if idx[l] < last[l] {
                    idx[l] += 1;
                    break;
                }
                idx[l] = first[l];
                if l == 0 {
                    return;
                }
            }
        }
    }

    /// Indices of the sites inside `region`, ascending.
    pub fn indices_in(&self, region: &Region) -> Vec<usize> {
        let (ball, centers) = match region {
            Region::Ball(b) => (b, vec![b.center.clone()]),
            Region::Orbit(ob) => (&ob.base, self.measure.group().orbit(&ob.base.center)),
        };
        let r = ball.radius;
        let mut out = Vec::new();
        let mut cand = Vec::new();
        for c in &centers {
            cand.clear();
            let cmin: Vec<f64> = c.iter().map(|v| v - r).collect();
            let cmax: Vec<f64> = c.iter().map(|v| v + r).collect();
            self.box_indices(&cmin, &cmax, &mut cand);
            out.extend(cand.iter().copied().filter(|&i| dist(self.point(i), c) < r));
        }
        if centers.len() > 1 {
            out.sort_unstable();
            out.dedup();
        }
        out
    }

    /// Σ of weights over the sites in `region`.
    pub fn region_mass(&self, region: &Region) -> f64 {
        self.indices_in(region).iter().map(|&i| self.weights[i]).sum()
    }

    /// Position of `x` in center-index coordinates along each axis, or
    /// `None` if `x` lies outside the box.
    fn locate(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut u = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            if x[i] < self.lo[i] || x[i] > self.hi[i] {
                return None;
            }
            let t = (x[i] - self.lo[i]) / self.step[i] - 0.5;
            u.push(t.clamp(0.0, (self.shape[i] - 1) as f64));
        }
        Some(u)
    }

    fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other)
            || (self.lo == other.lo
                && self.hi == other.hi
                && self.shape == other.shape
                && self.weights == other.weights)
    }
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for i in (0..shape.len()).rev() {
        idx[i] = flat % shape[i];
        flat /= shape[i];
    }
    idx
}

fn flatten(idx: &[usize], shape: &[usize]) -> usize {
    let mut f = 0;
    for i in 0..shape.len() {
        f = f * shape[i] + idx[i];
    }
    f
}

/// A Euclidean ball or the orbit of a ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Ball(Ball),
    Orbit(OrbitBall),
}

impl Region {
    pub fn ball(&self) -> &Ball {
        match self {
            Region::Ball(b) => b,
            Region::Orbit(ob) => &ob.base,
        }
    }

    pub fn with_mode(ball: Ball, mode: OscillationMode) -> Region {
        match mode {
            OscillationMode::Euclidean => Region::Ball(ball),
            OscillationMode::Orbit => Region::Orbit(OrbitBall::new(ball)),
        }
    }
}

/// Sample values on a grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SpacesError::InvalidArgument(format!(
                "{} values for a grid of {} sites",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Arc<Grid>, f: F) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(SpacesError::GridMismatch)
        }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &GridFunction, f: F) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Multilinear interpolation; zero outside the grid box.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let u = self.grid.locate(x)?;
        let n = u.len();
        let shape = self.grid.shape();
        let base: Vec<usize> = u.iter().map(|&t| t.floor() as usize).collect();
        let frac: Vec<f64> = u.iter().zip(&base).map(|(&t, &b)| t - b as f64).collect();
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = base.clone();
            for i in 0..n {
                if corner >> i & 1 == 1 {
                    w *= frac[i];
                    idx[i] = (idx[i] + 1).min(shape[i] - 1);
                } else {
                    w *= 1.0 - frac[i];
                }
            }
            if w != 0.0 {
                acc += w * self.values[flatten(&idx, shape)];
            }
        }
        Some(acc)
    }
}

fn resolvable(idx: &[usize]) -> Result<()> {
    if idx.len() < MIN_POINTS {
        Err(SpacesError::InsufficientResolution {
            found: idx.len(),
            needed: MIN_POINTS,
        })
    } else {
        Ok(())
    }
}

fn average_on(f: &GridFunction, idx: &[usize]) -> (f64, f64) {
    let w = f.grid.weights();
    let mut mass = 0.0;
    let mut acc = 0.0;
    for &i in idx {
        mass += w[i];
        acc += w[i] * f.values[i];
    }
    (acc / mass, mass)
}

fn oscillation_on(f: &GridFunction, idx: &[usize]) -> (f64, f64) {
    let (avg, mass) = average_on(f, idx);
    let w = f.grid.weights();
    let dev: f64 = idx.iter().map(|&i| w[i] * (f.values[i] - avg).abs()).sum();
    (dev / mass, avg)
}

/// ω-weighted mean of `f` over the sites in `region`.
pub fn ball_average(f: &GridFunction, region: &Region) -> Result<f64> {
    let idx = f.grid.indices_in(region);
    resolvable(&idx)?;
    Ok(average_on(f, &idx).0)
}

/// ω(B)⁻¹ ∫_B |f − f_B| dω over the sites in `region`.
pub fn oscillation(f: &GridFunction, region: &Region) -> Result<f64> {
    let idx = f.grid.indices_in(region);
    resolvable(&idx)?;
    Ok(oscillation_on(f, &idx).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OscillationMode {
    /// Averages over Euclidean balls B.
    Euclidean,
    /// Averages over orbit balls O(B).
    Orbit,
}

impl OscillationMode {
    pub fn name(self) -> &'static str {
        match self {
            OscillationMode::Euclidean => "euclidean",
            OscillationMode::Orbit => "orbit",
        }
    }
}

/// Lattice centers × radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallFamily {
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
}

impl BallFamily {
    pub fn new(centers: Vec<Vec<f64>>, radii: Vec<f64>) -> Result<Self> {
        if centers.is_empty() || radii.is_empty() {
            return Err(SpacesError::InvalidArgument("ball family is empty".into()));
        }
        if radii.iter().any(|&r| !(r > 0.0)) {
            return Err(SpacesError::InvalidArgument("radii must be positive".into()));
        }
        Ok(Self { centers, radii })
    }

    /// Dyadic radii r_max, r_max/2, … down to (at least) r_min.
    pub fn dyadic_radii(r_min: f64, r_max: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut r = r_max;
        while r >= r_min * (1.0 - 1e-12) {
            out.push(r);
            r *= 0.5;
        }
        out
    }

    /// Regular lattice of centers with the given spacing on [lo, hi].
    pub fn lattice(lo: &[f64], hi: &[f64], spacing: f64) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = lo
            .iter()
            .zip(hi)
            .map(|(&a, &b)| {
                let k = ((b - a) / spacing + 1e-9).floor() as usize;
                (0..=k).map(|i| a + i as f64 * spacing).collect()
            })
            .collect();
        let mut out = vec![Vec::new()];
        for ax in &axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    ax.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    pub fn balls(&self) -> impl Iterator<Item = Ball> + '_ {
        self.centers.iter().flat_map(move |c| {
            self.radii.iter().map(move |&r| Ball {
                center: c.clone(),
                radius: r,
            })
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len() * self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationRow {
    pub center: Vec<f64>,
    pub radius: f64,
    pub mode: OscillationMode,
    pub average: f64,
    pub oscillation: f64,
    pub sites: usize,
}

/// Half-open bucket [lo, hi) with the largest oscillation that fell in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub sup: Option<f64>,
    pub count: usize,
}

impl Bucket {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            sup: None,
            count: 0,
        }
    }

    fn offer(&mut self, key: f64, value: f64) {
        if key >= self.lo && key < self.hi {
            self.count += 1;
            self.sup = Some(self.sup.map_or(value, |s| s.max(value)));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub mode: OscillationMode,
    pub rows: Vec<OscillationRow>,
    /// Balls dropped for holding fewer than [`MIN_POINTS`] sites.
    pub unresolved: usize,
    /// Largest oscillation over the resolved rows; a lower bound of the
    /// BMO norm for this mode.
    pub sup: f64,
    pub by_radius: Vec<Bucket>,
    pub by_distance: Vec<Bucket>,
}

/// Sup of oscillations over a ball family.
pub fn bmo_norm(f: &GridFunction, mode: OscillationMode, family: &BallFamily) -> OscillationReport {
    let mut radii = family.radii.clone();
    radii.sort_by(|a, b| a.total_cmp(b));
    radii.dedup();
    let buckets: Vec<Bucket> = radii.iter().map(|&r| Bucket::new(r, r * (1.0 + 1e-9))).collect();
    vmo_profile(f, mode, family, &buckets, &[])
}

/// Oscillation sups bucketed by radius and by the distance of the ball
/// from the origin.
pub fn vmo_profile(
    f: &GridFunction,
    mode: OscillationMode,
    family: &BallFamily,
    radius_buckets: &[Bucket],
    distance_buckets: &[Bucket],
) -> OscillationReport {
    let balls: Vec<Ball> = family.balls().collect();
    let results: Vec<Option<OscillationRow>> = balls
        .par_iter()
        .map(|b| {
            let region = Region::with_mode(b.clone(), mode);
            let idx = f.grid.indices_in(&region);
            if idx.len() < MIN_POINTS {
                return None;
            }
            let (osc, avg) = oscillation_on(f, &idx);
            Some(OscillationRow {
                center: b.center.clone(),
                radius: b.radius,
                mode,
                average: avg,
                oscillation: osc,
                sites: idx.len(),
            })
        })
        .collect();
    let unresolved = results.iter().filter(|r| r.is_none()).count();
    let rows: Vec<OscillationRow> = results.into_iter().flatten().collect();
    let mut by_radius = radius_buckets.to_vec();
    let mut by_distance = distance_buckets.to_vec();
    let mut sup: f64 = 0.0;
    for row in &rows {
        sup = sup.max(row.oscillation);
        for b in by_radius.iter_mut() {
            b.offer(row.radius, row.oscillation);
        }
        let away = (norm(&row.center) - row.radius).max(0.0);
        for b in by_distance.iter_mut() {
            b.offer(away, row.oscillation);
        }
    }
    OscillationReport {
        mode,
        rows,
        unresolved,
        sup,
        by_radius,
        by_distance,
    }
}

/// Lower weighted median: the smallest sampled value v with
/// ω({f ≤ v} ∩ region) ≥ ω(region)/2.
pub fn median_value(f: &GridFunction, region: &Region) -> Result<f64> {
    let idx = f.grid.indices_in(region);
    resolvable(&idx)?;
    Ok(weighted_lower_median(
        &idx.iter()
            .map(|&i| (f.values[i], f.grid.weights()[i]))
            .collect::<Vec<_>>(),
    ))
}

/// Lower median of weighted atoms `(value, weight)`.
pub fn weighted_lower_median(atoms: &[(f64, f64)]) -> f64 {
    let mut a = atoms.to_vec();
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total: f64 = a.iter().map(|p| p.1).sum();
    let mut cum = 0.0;
    let mut k = 0;
    while k < a.len() {
        let v = a[k].0;
        while k < a.len() && a[k].0 == v {
            cum += a[k].1;
            k += 1;
        }
        if 2.0 * cum >= total {
            return v;
        }
    }
    a.last().map_or(f64::NAN, |p| p.0)
}

/// Sets of the median-splitting argument for a ball B and companion B̃.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianSplit {
    /// Lower median of b over B̃.
    pub median: f64,
    /// {x ∈ B : b(x) ≥ m}.
    pub e1: Vec<usize>,
    /// {x ∈ B : b(x) < m}.
    pub e2: Vec<usize>,
    /// Part of B̃ with b ≤ m.
    pub f1: Vec<usize>,
    /// Part of B̃ with b ≥ m.
    pub f2: Vec<usize>,
    pub mass_tilde: f64,
    pub mass_f1: f64,
    pub mass_f2: f64,
    /// Largest single-site weight in B̃.
    pub slack: f64,
}

impl MedianSplit {
    /// Checks the three splitting facts pair by pair on the grid:
    /// E₁, E₂ partition B; b(x) − b(y) keeps one sign on E_i × F_i; and
    /// |b(x) − m| ≤ |b(x) − b(y)| there. Also checks the F masses.
    pub fn verify(&self, b: &GridFunction, ball: &Ball) -> Result<()> {
        let v = b.values();
        let mut union: Vec<usize> = self.e1.iter().chain(&self.e2).copied().collect();
        union.sort_unstable();
        let before = union.len();
        union.dedup();
        if union.len() != before {
            return Err(SpacesError::SplitFailed("E1 and E2 overlap".into()));
        }
        if union != b.grid().indices_in(&Region::Ball(ball.clone())) {
            return Err(SpacesError::SplitFailed("E1 and E2 do not cover B".into()));
        }
        let m = self.median;
        for (es, fs, sign) in [(&self.e1, &self.f1, 1.0), (&self.e2, &self.f2, -1.0)] {
            for &x in es.iter() {
                for &y in fs.iter() {
                    let diff = v[x] - v[y];
                    if sign * diff < 0.0 {
                        return Err(SpacesError::SplitFailed(format!(
                            "b(x) - b(y) changes sign at sites ({x}, {y})"
                        )));
                    }
                    if (v[x] - m).abs() > diff.abs() {
                        return Err(SpacesError::SplitFailed(format!(
                            "|b(x) - m| exceeds |b(x) - b(y)| at sites ({x}, {y})"
                        )));
                    }
                }
            }
        }
        let need = 0.5 * self.mass_tilde - self.slack;
        if self.mass_f1 < need || self.mass_f2 < need {
            return Err(SpacesError::SplitFailed(format!(
                "F masses {} and {} below half of {} minus one site",
                self.mass_f1, self.mass_f2, self.mass_tilde
            )));
        }
        Ok(())
    }
}

/// Median splitting of B̃ at the median of b over B̃, with the matching
/// split of B. The result is verified before it is returned.
pub fn median_split(b: &GridFunction, ball: &Ball, ball_tilde: &Ball) -> Result<MedianSplit> {
    let grid = b.grid();
    let in_b = grid.indices_in(&Region::Ball(ball.clone()));
    let in_t = grid.indices_in(&Region::Ball(ball_tilde.clone()));
    resolvable(&in_b)?;
    resolvable(&in_t)?;
    let v = b.values();
    let w = grid.weights();
    let m = weighted_lower_median(&in_t.iter().map(|&i| (v[i], w[i])).collect::<Vec<_>>());
    let mass_tilde: f64 = in_t.iter().map(|&i| w[i]).sum();
    let slack = in_t.iter().map(|&i| w[i]).fold(0.0, f64::max);
    let mut f1 = Vec::new();
    let mut f2 = Vec::new();
    let mut ties = Vec::new();
    for &i in &in_t {
        if v[i] < m {
            f1.push(i);
        } else if v[i] > m {
            f2.push(i);
        } else {
            ties.push(i);
        }
    }
    let mut mass_f1: f64 = f1.iter().map(|&i| w[i]).sum();
    for &i in &ties {
        if 2.0 * mass_f1 < mass_tilde {
            f1.push(i);
            mass_f1 += w[i];
        } else {
            f2.push(i);
        }
    }
    f1.sort_unstable();
    f2.sort_unstable();
    let mass_f2: f64 = f2.iter().map(|&i| w[i]).sum();
    let (e1, e2): (Vec<usize>, Vec<usize>) = in_b.iter().partition(|&&i| v[i] >= m);
    let split = MedianSplit {
        median: m,
        e1,
        e2,
        f1,
        f2,
        mass_tilde,
        mass_f1,
        mass_f2,
        slack,
    };
    split.verify(b, ball)?;
    Ok(split)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaximalKind {
    /// Centered Euclidean balls.
    Euclidean,
    /// Centered orbit balls.
    Orbit,
}

/// Values of a maximal-type function at selected sites.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseValues {
    pub sites: Vec<usize>,
    pub values: Vec<f64>,
    /// (site, radius) pairs skipped for insufficient resolution.
    pub skipped: Vec<(usize, f64)>,
}

fn centered_sup(
    f: &GridFunction,
    kind: MaximalKind,
    radii: &[f64],
    sites: &[usize],
    stat: impl Fn(&GridFunction, &[usize]) -> f64 + Sync,
) -> Result<PointwiseValues> {
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(SpacesError::InvalidArgument(
            "radii must be positive and non-empty".into(),
        ));
    }
    let grid = f.grid();
    let per: Vec<(f64, Vec<(usize, f64)>)> = sites
        .par_iter()
        .map(|&s| {
            let mut best = f64::NEG_INFINITY;
            let mut skipped = Vec::new();
            for &r in radii {
                let ball = Ball {
                    center: grid.point(s).to_vec(),
                    radius: r,
                };
                let region = match kind {
                    MaximalKind::Euclidean => Region::Ball(ball),
                    MaximalKind::Orbit => Region::Orbit(OrbitBall::new(ball)),
                };
                let idx = grid.indices_in(&region);
                if idx.len() < MIN_POINTS {
                    skipped.push((s, r));
                    continue;
                }
                best = best.max(stat(f, &idx));
            }
            (best, skipped)
        })
        .collect();
    let mut values = Vec::with_capacity(sites.len());
    let mut skipped = Vec::new();
    for (&s, (v, sk)) in sites.iter().zip(per) {
        if v == f64::NEG_INFINITY {
            return Err(SpacesError::InsufficientResolution {
                found: grid
                    .indices_in(&Region::Ball(Ball {
                        center: grid.point(s).to_vec(),
                        radius: radii.iter().copied().fold(0.0, f64::max),
                    }))
                    .len(),
                needed: MIN_POINTS,
            });
        }
        values.push(v);
        skipped.extend(sk);
    }
    Ok(PointwiseValues {
        sites: sites.to_vec(),
        values,
        skipped,
    })
}

/// Centered maximal function: sup over `radii` of the average of |f|.
pub fn maximal_fn(f: &GridFunction, kind: MaximalKind, radii: &[f64], sites: &[usize]) -> Result<PointwiseValues> {
    let af = f.map(f64::abs);
    centered_sup(&af, kind, radii, sites, |g, idx| average_on(g, idx).0)
}

/// Centered sharp function: sup over `radii` of the oscillation of f.
pub fn sharp_fn(f: &GridFunction, kind: MaximalKind, radii: &[f64], sites: &[usize]) -> Result<PointwiseValues> {
    centered_sup(f, kind, radii, sites, |g, idx| oscillation_on(g, idx).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslationModulus {
    /// ‖f(· + z) − f‖_{L^p(ω)} with f extended by zero outside the box.
    pub value: f64,
    /// True if a site with f ≠ 0 was shifted out of the grid box.
    pub clipped: bool,
    /// L^p(ω) norm of f over the sites whose shift left the box; the
    /// part of `value` that depends on the zero extension.
    pub boundary_bound: f64,
}

/// Translation modulus for the Fréchet–Kolmogorov condition (c).
pub fn translation_modulus(f: &GridFunction, z: &[f64], p: f64) -> Result<TranslationModulus> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(SpacesError::InvalidArgument(format!("p must lie in (1, ∞), got {p}")));
    }
    let grid = f.grid();
    if z.len() != grid.dim() {
        return Err(SpacesError::InvalidArgument("shift has the wrong dimension".into()));
    }
    if z.iter().all(|&v| v == 0.0) {
        return Ok(TranslationModulus {
            value: 0.0,
            clipped: false,
            boundary_bound: 0.0,
        });
    }
    let w = grid.weights();
    let mut acc = 0.0;
    let mut outside = 0.0;
    let mut clipped = false;
    let mut y = vec![0.0; grid.dim()];
    for (i, x) in grid.points().enumerate() {
        for k in 0..y.len() {
            y[k] = x[k] + z[k];
        }
        let fv = f.values[i];
        match f.interpolate(&y) {
            Some(s) => acc += w[i] * (s - fv).abs().powf(p),
            None => {
                let t = w[i] * fv.abs().powf(p);
                clipped |= t > 0.0;
                acc += t;
                outside += t;
            }
        }
    }
    Ok(TranslationModulus {
        value: acc.powf(1.0 / p),
        clipped,
        boundary_bound: outside.powf(1.0 / p),
    })
}

/// (Σ w_k |f_k|^p)^{1/p}.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(SpacesError::InvalidArgument(format!("p must lie in [1, ∞), got {p}")));
    }
    Ok(f.values
        .iter()
        .zip(f.grid.weights())
        .map(|(v, w)| w * v.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p))
}

/// Named symbols used as b or f in the BMO and commutator checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SymbolPreset {
    /// log |x − center| (clamped at distance 1e-12).
    LogAbs {
        center: Vec<f64>,
    },
    /// sign(x_axis − offset).
    Sign {
        axis: usize,
        offset: f64,
    },
    /// max(0, 1 − |x − center|/radius).
    LipschitzBump {
        center: Vec<f64>,
        radius: f64,
    },
    /// exp(1 − 1/(1 − |x − center|²/radius²)) inside the ball, 0 outside.
    SmoothBump {
        center: Vec<f64>,
        radius: f64,
    },
    Constant {
        value: f64,
    },
}

impl SymbolPreset {
    pub fn name(&self) -> &'static str {
        match self {
            SymbolPreset::LogAbs { .. } => "log-abs",
            SymbolPreset::Sign { .. } => "sign",
            SymbolPreset::LipschitzBump { .. } => "lipschitz-bump",
            SymbolPreset::SmoothBump { .. } => "smooth-bump",
            SymbolPreset::Constant { .. } => "constant",
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(SpacesError::InvalidArgument(msg));
        match self {
            SymbolPreset::LogAbs { center } if center.len() != dim => {
                bad(format!("log-abs center must have dimension {dim}"))
            }
            SymbolPreset::Sign { axis, .. } if *axis >= dim => bad(format!("sign axis {axis} out of range")),
            SymbolPreset::LipschitzBump { center, radius } | SymbolPreset::SmoothBump { center, radius }
                if center.len() != dim || !(*radius > 0.0) =>
            {
                bad("bump needs a center of the grid dimension and a positive radius".into())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            SymbolPreset::LogAbs { center } => dist(x, center).max(1e-12).ln(),
            SymbolPreset::Sign { axis, offset } => {
                let t = x[*axis] - offset;
                if t > 0.0 {
                    1.0
                } else if t < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            SymbolPreset::LipschitzBump { center, radius } => (1.0 - dist(x, center) / radius).max(0.0),
            SymbolPreset::SmoothBump { center, radius } => {
                let u = dist(x, center) / radius;
                if u < 1.0 {
                    (1.0 - 1.0 / (1.0 - u * u)).exp()
                } else {
                    0.0
                }
            }
            SymbolPreset::Constant { value } => *value,
        }
    }

    /// Lipschitz constant when finite.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            SymbolPreset::LipschitzBump { radius, .. } => Some(1.0 / radius),
            SymbolPreset::Constant { .. } => Some(0.0),
            _ => None,
        }
    }

    pub fn sample(&self, grid: Arc<Grid>) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.eval(x))
    }
}
