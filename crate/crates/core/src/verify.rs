//! Sweeps that measure the constants in the kernel, heat-kernel and
//! commutator estimates on finite sample families.
//!
//! Every check returns a [`SweepReport`]: one row per sample, the sup/inf
//! of the tracked ratio, fitted constants, and a verdict against a
//! configured ceiling or floor. A pass means no counterexample was found in
//! the sampled family, nothing more.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{KernelConfig, KernelError, KernelEvaluator, RieszMethod};
use crate::measure::{Ball, MeasureError, WeightedMeasure};
use crate::operators::{assemble_riesz, op_norm_estimate, structured_tests, Commutator, NormOptions, OperatorError};
use crate::quad::{adaptive_gl, tanh_sinh, TanhSinh};
use crate::reflection::{dist, norm, ReflectionGroup};
use crate::spaces::{bmo_norm, BallFamily, Grid, OscillationMode, SpacesError, SymbolPreset};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("not implemented: {0}")]
    NotImplemented(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Spaces(#[from] SpacesError),
}

pub type Result<T> = std::result::Result<T, VerifyError>;

/// Default ceilings: 100× the constants measured with κ ≡ 0 (max over N = 1, 2).
pub const SIZE_CEILING: f64 = 63.7;
pub const SMOOTHNESS_CEILING: f64 = 255.0;
pub const HORMANDER_CEILING: f64 = 39.0;

/// Default lower-bound floor: a tenth of the κ ≡ 0 value for the dimension.
pub fn default_lower_floor(dim: usize) -> Option<f64> {
    match dim {
        1 => Some(0.0091),
        2 => Some(0.00102),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    Violation,
    /// Sample outside the check's hypotheses.
    Rejected,
    /// Numerical failure; the message is in the row note.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub status: RowStatus,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Threshold {
    /// Pass iff the sup of the ratio is at most this.
    Ceiling(f64),
    /// Pass iff the inf of the ratio is at least this.
    Floor(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub check: String,
    pub columns: Vec<String>,
    /// Column holding the tracked ratio.
    pub ratio_column: usize,
    pub rows: Vec<SweepRow>,
    pub sup: f64,
    pub inf: f64,
    pub violations: usize,
    pub rejected: usize,
    pub failed: usize,
    pub fitted: BTreeMap<String, f64>,
    pub threshold: Option<Threshold>,
    pub passed: bool,
    pub notes: Vec<String>,
    pub snapshot: serde_json::Value,
}

impl SweepReport {
    fn new(check: &str, columns: &[&str], ratio_column: usize, snapshot: serde_json::Value) -> Self {
        Self {
            check: check.to_string(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            ratio_column,
            rows: Vec::new(),
            sup: f64::NAN,
            inf: f64::NAN,
            violations: 0,
            rejected: 0,
            failed: 0,
            fitted: BTreeMap::new(),
            threshold: None,
            passed: false,
            notes: Vec::new(),
            snapshot,
        }
    }

    pub fn samples(&self) -> usize {
        self.rows.len()
    }

    /// Recomputes sup/inf and the counters from the rows, then the verdict.
    /// Rows already marked as violations stay violations.
    fn finish(&mut self, threshold: Option<Threshold>) {
        self.threshold = threshold;
        let mut sup = f64::NEG_INFINITY;
        let mut inf = f64::INFINITY;
        for row in self.rows.iter_mut() {
            if matches!(row.status, RowStatus::Ok | RowStatus::Violation) {
                let r = row.values[self.ratio_column];
                sup = sup.max(r);
                inf = inf.min(r);
                let breaks = match threshold {
                    Some(Threshold::Ceiling(c)) => !(r <= c),
                    Some(Threshold::Floor(f)) => !(r >= f),
                    None => !r.is_finite(),
                };
                if breaks {
                    row.status = RowStatus::Violation;
                }
            }
        }
        self.sup = if sup.is_finite() || sup == f64::INFINITY {
            sup
        } else {
            f64::NAN
        };
        self.inf = if inf.is_finite() || inf == f64::NEG_INFINITY {
            inf
        } else {
            f64::NAN
        };
        self.violations = self.rows.iter().filter(|r| r.status == RowStatus::Violation).count();
        self.rejected = self.rows.iter().filter(|r| r.status == RowStatus::Rejected).count();
        self.failed = self.rows.iter().filter(|r| r.status == RowStatus::Failed).count();
        let evaluated = self.rows.len() - self.rejected - self.failed;
        self.passed = evaluated > 0 && self.violations == 0 && self.failed == 0 && self.sup.is_finite();
    }
}

fn snapshot<P: Serialize>(ke: &KernelEvaluator, params: &P) -> serde_json::Value {
    serde_json::json!({
        "group": ke.measure().spec(),
        "kernel": ke.config(),
        "params": params,
    })
}

fn failed_row(width: usize, msg: String) -> SweepRow {
    SweepRow {
        values: vec![f64::NAN; width],
        status: RowStatus::Failed,
        note: msg,
    }
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-half..half)).collect()
}

/// `count` points drawn uniformly from [−half, half]^dim.
pub fn box_points(seed: u64, count: usize, dim: usize, half: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_point(&mut rng, dim, half)).collect()
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.iter().map(|a| a / n).collect();
        }
    }
}

fn scaled(v: &[f64], t: f64) -> Vec<f64> {
    v.iter().map(|a| a * t).collect()
}

/// Family of point pairs (x, y) for kernel sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairFamily {
    pub samples: usize,
    /// Points are drawn from [−box_half, box_half]^N.
    pub box_half: f64,
    /// Lower limit on d(x,y)/‖x−y‖; keeps pairs off the non-trivial orbit
    /// diagonals.
    pub min_orbit_ratio: f64,
    /// Lower limit on d(x,y).
    pub min_distance: f64,
    /// All points are multiplied by this after sampling.
    pub scale: f64,
    pub seed: u64,
}

impl Default for PairFamily {
    fn default() -> Self {
        Self {
            samples: 500,
            box_half: 2.0,
            min_orbit_ratio: 0.1,
            min_distance: 0.05,
            scale: 1.0,
            seed: 11,
        }
    }
}

impl PairFamily {
    /// Rejection-samples pairs meeting the floors, then applies `scale`.
    pub fn sample(&self, group: &ReflectionGroup) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = group.dim();
        let mut out = Vec::with_capacity(self.samples);
        let mut tries = 0usize;
        while out.len() < self.samples && tries < 1000 * self.samples.max(1) {
            tries += 1;
            let x = random_point(&mut rng, n, self.box_half);
            let y = random_point(&mut rng, n, self.box_half);
            let d = group.orbit_distance(&x, &y);
            if d >= self.min_distance && d >= self.min_orbit_ratio * dist(&x, &y) {
                out.push((scaled(&x, self.scale), scaled(&y, self.scale)));
            }
        }
        out
    }
}

fn ball_volume(ke: &KernelEvaluator, x: &[f64], r: f64, tol: f64) -> Result<f64> {
    Ok(ke.measure().ball_measure(&Ball::new(x.to_vec(), r)?, tol)?.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizeParams {
    pub j: usize,
    pub pairs: PairFamily,
    pub method: RieszMethod,
    pub measure_tol: f64,
    pub ceiling: Option<f64>,
}

impl Default for SizeParams {
    fn default() -> Self {
        Self {
            j: 0,
            pairs: PairFamily::default(),
            method: RieszMethod::Translated,
            measure_tol: 1e-6,
            ceiling: Some(SIZE_CEILING),
        }
    }
}

/// ρ = |R_j(x,y)|·‖x−y‖·ω(B(x,d(x,y)))/d(x,y) over the pair family.
pub fn check_size(ke: &KernelEvaluator, params: &SizeParams) -> Result<SweepReport> {
    let pairs = params.pairs.sample(ke.measure().group());
    check_size_on(ke, params, &pairs)
}

/// [`check_size`] on explicit pairs.
pub fn check_size_on(ke: &KernelEvaluator, params: &SizeParams, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<SweepReport> {
    let n = ke.dim();
    if params.j >= n {
        return Err(VerifyError::InvalidArgument(format!("j = {} out of range", params.j)));
    }
    let mut cols: Vec<String> = (0..n)
        .map(|i| format!("x{i}"))
        .chain((0..n).map(|i| format!("y{i}")))
        .collect();
    cols.extend(["d", "euclid", "kernel", "ball", "ratio"].map(String::from));
    let width = cols.len();
    let group = ke.measure().group();
    let rows: Vec<SweepRow> = pairs
        .par_iter()
        .map(|(x, y)| {
            let d = group.orbit_distance(x, y);
            let eu = dist(x, y);
            let res = (|| -> Result<Vec<f64>> {
                let r = ke.riesz_kernel(params.method, params.j, x, y)?.value;
                let vol = ball_volume(ke, x, d, params.measure_tol)?;
                let mut v: Vec<f64> = x.iter().chain(y).copied().collect();
                v.extend([d, eu, r, vol, r.abs() * eu * vol / d]);
                Ok(v)
            })();
            match res {
                Ok(values) => SweepRow {
                    values,
                    status: RowStatus::Ok,
                    note: String::new(),
                },
                Err(e) => failed_row(width, e.to_string()),
            }
        })
        .collect();
    let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut rep = SweepReport::new("size", &col_refs, width - 1, snapshot(ke, params));
    rep.rows = rows;
    rep.finish(params.ceiling.map(Threshold::Ceiling));
    rep.fitted.insert("C_size".into(), rep.sup);
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variable {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothnessParams {
    pub j: usize,
    pub variable: Variable,
    pub pairs: PairFamily,
    /// Fraction of perturbations taken parallel to a root.
    pub root_aligned: f64,
    /// Perturbation lengths are drawn from [min_step, 1]·d(x,y)/2.
    pub min_step: f64,
    pub method: RieszMethod,
    pub measure_tol: f64,
    pub ceiling: Option<f64>,
}

impl Default for SmoothnessParams {
    fn default() -> Self {
        Self {
            j: 0,
            variable: Variable::Y,
            pairs: PairFamily::default(),
            root_aligned: 0.25,
            min_step: 0.01,
            method: RieszMethod::Translated,
            measure_tol: 1e-6,
            ceiling: Some(SMOOTHNESS_CEILING),
        }
    }
}

/// Perturbations h for the smoothness sweep, one per pair, with
/// ‖h‖ ≤ d(x,y)/2 (before rounding).
pub fn sample_perturbations(
    group: &ReflectionGroup,
    pairs: &[(Vec<f64>, Vec<f64>)],
    params: &SmoothnessParams,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.pairs.seed ^ 0x9e37_79b9_7f4a_7c15);
    let roots = group.spec().roots();
    pairs
        .iter()
        .map(|(x, y)| {
            let d = group.orbit_distance(x, y);
            let len = 0.5 * d * rng.gen_range(params.min_step..=1.0);
            let aligned = !roots.is_empty() && rng.gen_bool(params.root_aligned.clamp(0.0, 1.0));
            let u = if aligned {
                let a = &roots[rng.gen_range(0..roots.len())];
                scaled(a, 1.0 / norm(a))
            } else {
                random_unit(&mut rng, group.dim())
            };
            scaled(&u, len)
        })
        .collect()
}

/// |R_j(x,y) − R_j(x,y')|·‖x−y‖·ω(B(x,d))/‖y−y'‖ (or the x-variant) with
/// ‖y−y'‖ ≤ d(x,y)/2.
pub fn check_smoothness(ke: &KernelEvaluator, params: &SmoothnessParams) -> Result<SweepReport> {
    let group = ke.measure().group();
    let pairs = params.pairs.sample(group);
    let steps = sample_perturbations(group, &pairs, params);
    check_smoothness_on(ke, params, &pairs, &steps)
}

/// [`check_smoothness`] on explicit pairs and perturbations.
pub fn check_smoothness_on(
    ke: &KernelEvaluator,
    params: &SmoothnessParams,
    pairs: &[(Vec<f64>, Vec<f64>)],
    steps: &[Vec<f64>],
) -> Result<SweepReport> {
    let n = ke.dim();
    if params.j >= n || pairs.len() != steps.len() {
        return Err(VerifyError::InvalidArgument(
            "j out of range or step count mismatch".into(),
        ));
    }
    let mut cols: Vec<String> = (0..n)
        .map(|i| format!("x{i}"))
        .chain((0..n).map(|i| format!("y{i}")))
        .chain((0..n).map(|i| format!("h{i}")))
        .collect();
    cols.extend(["d", "euclid", "step", "diff", "ball", "ratio"].map(String::from));
    let width = cols.len();
    let group = ke.measure().group();
    let rows: Vec<SweepRow> = pairs
        .par_iter()
        .zip(steps)
        .map(|((x, y), h)| {
            let d = group.orbit_distance(x, y);
            let eu = dist(x, y);
            let hn = norm(h);
            let mut head: Vec<f64> = x.iter().chain(y).chain(h).copied().collect();
            if !(hn > 0.0) || hn > 0.5 * d * (1.0 + 1e-12) {
                head.extend([d, eu, hn, f64::NAN, f64::NAN, f64::NAN]);
                return SweepRow {
                    values: head,
                    status: RowStatus::Rejected,
                    note: "perturbation exceeds d(x,y)/2".into(),
                };
            }
            let res = (|| -> Result<(f64, f64)> {
                let r0 = ke.riesz_kernel(params.method, params.j, x, y)?.value;
                let r1 = match params.variable {
                    Variable::Y => {
                        let yp: Vec<f64> = y.iter().zip(h).map(|(a, b)| a + b).collect();
                        ke.riesz_kernel(params.method, params.j, x, &yp)?.value
                    }
                    Variable::X => {
                        let xp: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + b).collect();
                        ke.riesz_kernel(params.method, params.j, &xp, y)?.value
                    }
                };
                Ok(((r0 - r1).abs(), ball_volume(ke, x, d, params.measure_tol)?))
            })();
            match res {
                Ok((diff, vol)) => {
                    head.extend([d, eu, hn, diff, vol, diff * eu * vol / hn]);
                    SweepRow {
                        values: head,
                        status: RowStatus::Ok,
                        note: String::new(),
                    }
                }
                Err(e) => failed_row(width, e.to_string()),
            }
        })
        .collect();
    let name = match params.variable {
        Variable::Y => "smoothness-y",
        Variable::X => "smoothness-x",
    };
    let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut rep = SweepReport::new(name, &col_refs, width - 1, snapshot(ke, params));
    rep.rows = rows;
    rep.finish(params.ceiling.map(Threshold::Ceiling));
    rep.fitted.insert("C_smooth".into(), rep.sup);
    if rep.rejected > 0 {
        rep.notes.push(format!(
            "{} samples violated the half-distance constraint",
            rep.rejected
        ));
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowerBoundParams {
    pub j: usize,
    pub radii: Vec<f64>,
    /// Number of centers drawn from [−center_box, center_box]^N, each
    /// multiplied by the radius so the family is scale-covariant.
    pub centers: usize,
    pub center_box: f64,
    /// Random points per ball in addition to the center and the two
    /// extreme points along e_j.
    pub points_per_ball: usize,
    pub seed: u64,
    pub method: RieszMethod,
    pub measure_tol: f64,
    pub floor: Option<f64>,
}

impl Default for LowerBoundParams {
    fn default() -> Self {
        Self {
            j: 0,
            radii: vec![0.25, 1.0, 4.0],
            centers: 10,
            center_box: 4.0,
            points_per_ball: 6,
            seed: 13,
            method: RieszMethod::Translated,
            measure_tol: 1e-6,
            floor: None,
        }
    }
}

/// The companion center: x₀ + 5r·e_j. For it, y_j − x_j ≥ 3r on B × B̃.
pub fn companion_center(x0: &[f64], r: f64, j: usize) -> Vec<f64> {
    let mut y0 = x0.to_vec();
    y0[j] += 5.0 * r;
    y0
}

fn ball_points(rng: &mut ChaCha8Rng, c: &[f64], r: f64, j: usize, extra: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![c.to_vec()];
    for s in [-1.0, 1.0] {
        let mut p = c.to_vec();
        p[j] += s * 0.999 * r;
        pts.push(p);
    }
    for _ in 0..extra {
        let u = random_unit(rng, c.len());
        let rad = r * rng.gen_range(0.0f64..1.0).powf(1.0 / c.len() as f64) * 0.999;
        pts.push(c.iter().zip(&u).map(|(a, b)| a + rad * b).collect());
    }
    pts
}

/// m = min over sampled (x,y) ∈ B × B̃ of |R_j(x,y)|·ω(B(x₀,r)), with a
/// sign scan over the same pairs.
pub fn check_lower_bound(ke: &KernelEvaluator, params: &LowerBoundParams) -> Result<SweepReport> {
    let n = ke.dim();
    if params.j >= n {
        return Err(VerifyError::InvalidArgument(format!("j = {} out of range", params.j)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let unit_centers: Vec<Vec<f64>> = (0..params.centers)
        .map(|_| random_point(&mut rng, n, params.center_box))
        .collect();
    let mut balls = Vec::new();
    for &r in &params.radii {
        for (k, c) in unit_centers.iter().enumerate() {
            let x0 = scaled(c, r);
            // Seeded per center, so the point sets of different radii are
            // dilates of each other.
            let mut prng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(k as u64 + 1));
            let y0 = companion_center(&x0, r, params.j);
            let bx = ball_points(&mut prng, &x0, r, params.j, params.points_per_ball);
            let by = ball_points(&mut prng, &y0, r, params.j, params.points_per_ball);
            balls.push((x0, r, bx, by));
        }
    }
    let mut cols: Vec<String> = (0..n).map(|i| format!("x0_{i}")).collect();
    cols.extend(["radius", "pairs", "ball", "min_abs_kernel", "sign_changes", "m"].map(String::from));
    let width = cols.len();
    let rows: Vec<SweepRow> = balls
        .par_iter()
        .map(|(x0, r, bx, by)| {
            let res = (|| -> Result<(f64, f64, usize, usize)> {
                let vol = ball_volume(ke, x0, *r, params.measure_tol)?;
                let mut min_abs = f64::INFINITY;
                let (mut pos, mut neg) = (0usize, 0usize);
                for x in bx {
                    for y in by {
                        let v = ke.riesz_kernel(params.method, params.j, x, y)?.value;
                        min_abs = min_abs.min(v.abs());
                        if v > 0.0 {
                            pos += 1;
                        } else {
                            neg += 1;
                        }
                    }
                }
                Ok((vol, min_abs, pos.min(neg), bx.len() * by.len()))
            })();
            match res {
                Ok((vol, min_abs, changes, count)) => {
                    let mut v = x0.clone();
                    v.extend([*r, count as f64, vol, min_abs, changes as f64, min_abs * vol]);
                    SweepRow {
                        values: v,
                        status: if changes > 0 {
                            RowStatus::Violation
                        } else {
                            RowStatus::Ok
                        },
                        note: if changes > 0 {
                            "kernel changes sign on B x B~".into()
                        } else {
                            String::new()
                        },
                    }
                }
                Err(e) => failed_row(width, e.to_string()),
            }
        })
        .collect();
    let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut rep = SweepReport::new("lower-bound", &col_refs, width - 1, snapshot(ke, params));
    rep.rows = rows;
    rep.finish(params.floor.map(Threshold::Floor));
    rep.fitted.insert("C_lower".into(), rep.inf);
    let changes: f64 = rep
        .rows
        .iter()
        .filter(|r| r.status != RowStatus::Failed)
        .map(|r| r.values[width - 2])
        .sum();
    rep.fitted.insert("sign_changes".into(), changes);
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HormanderParams {
    pub j: usize,
    pub pairs: usize,
    pub seed: u64,
    /// y₀ is drawn from [−box_half, box_half]^N.
    pub box_half: f64,
    /// ‖y − y₀‖ is drawn log-uniformly from this range.
    pub separation: [f64; 2],
    pub outer_radius: f64,
    /// Smoothness constant used for the analytic tail beyond the outer
    /// radius.
    pub smooth_constant: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    pub measure_tol: f64,
    pub ceiling: Option<f64>,
}

impl Default for HormanderParams {
    fn default() -> Self {
        Self {
            j: 0,
            pairs: 10,
            seed: 17,
            box_half: 2.0,
            separation: [0.05, 0.5],
            outer_radius: 64.0,
            smooth_constant: 4.0,
            rel_tol: 1e-6,
            max_intervals: 2000,
            measure_tol: 1e-8,
            ceiling: Some(HORMANDER_CEILING),
        }
    }
}

/// Pairs (y, y₀) for the Hörmander sweep.
pub fn hormander_pairs(dim: usize, params: &HormanderParams) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (lo, hi) = (params.separation[0].ln(), params.separation[1].ln());
    (0..params.pairs)
        .map(|_| {
            let y0 = random_point(&mut rng, dim, params.box_half);
            let s = rng.gen_range(lo..=hi).exp();
            let u = random_unit(&mut rng, dim);
            let y = y0.iter().zip(&u).map(|(a, b)| a + s * b).collect();
            (y, y0)
        })
        .collect()
}

/// Intervals of the line where `keep(d(x, y))` holds, split at every
/// orbit point ± each radius and at 0.
fn orbit_intervals(orbit: &[f64], radii: &[f64], keep: impl Fn(f64) -> bool, outer: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0];
    for &o in orbit {
        for &r in radii {
            cuts.push(o - r);
            cuts.push(o + r);
        }
    }
    cuts.retain(|c| c.abs() <= outer);
    cuts.push(-outer);
    cuts.push(outer);
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();
    let d = |x: f64| orbit.iter().map(|o| (x - o).abs()).fold(f64::INFINITY, f64::min);
    cuts.windows(2)
        .filter(|w| w[1] > w[0] && keep(d(0.5 * (w[0] + w[1]))))
        .map(|w| (w[0], w[1]))
        .collect()
}

/// Hörmander integral in rank one: ∫_{2δ ≤ d(x,y) ≤ R} |R_j(x,y) − R_j(x,y₀)| dω(x)
/// plus C_s·δ·∫_{d(x,y) > R} dω(x)/(‖x−y‖·ω(B(x,d(x,y)))), δ = ‖y − y₀‖.
pub fn hormander_integral(ke: &KernelEvaluator, params: &HormanderParams, y: &[f64], y0: &[f64]) -> Result<(f64, f64)> {
    if ke.dim() != 1 {
        return Err(VerifyError::NotImplemented(
            "the Hörmander quadrature is implemented in dimension 1 only".into(),
        ));
    }
    let delta = dist(y, y0);
    if delta == 0.0 {
        return Ok((0.0, 0.0));
    }
    let group = ke.measure().group();
    let orbit: Vec<f64> = group.orbit(y).iter().map(|p| p[0]).collect();
    let big_r = params.outer_radius;
    if big_r <= 2.0 * delta {
        return Err(VerifyError::InvalidArgument(
            "outer radius must exceed 2‖y − y0‖".into(),
        ));
    }
    let w = |x: f64| ke.measure().weight_density(&[x]);
    let span = orbit.iter().fold(0.0f64, |m, o| m.max(o.abs())) + big_r;
    let inner = orbit_intervals(
        &orbit,
        &[2.0 * delta, big_r],
        |d| d > 2.0 * delta && d < big_r,
        span + 1.0,
    );
    let mut err: Option<VerifyError> = None;
    let mut main = 0.0;
    for (a, b) in inner {
        let est = adaptive_gl(a, b, 0.0, params.rel_tol, params.max_intervals, |x| {
            let xs = [x];
            match (
                ke.riesz_kernel(RieszMethod::Translated, params.j, &xs, y),
                ke.riesz_kernel(RieszMethod::Translated, params.j, &xs, y0),
            ) {
                (Ok(u), Ok(v)) => (u.value - v.value).abs() * w(x),
                (Err(e), _) | (_, Err(e)) => {
                    err.get_or_insert(e.into());
                    0.0
                }
            }
        });
        main += est.value;
    }
    if let Some(e) = err {
        return Err(e);
    }
    let tail_density = |x: f64| -> Result<f64> {
        let xs = [x];
        let d = group.orbit_distance(&xs, y);
        let vol = ball_volume(ke, &xs, d, params.measure_tol)?;
        Ok(w(x) / (dist(&xs, y) * vol))
    };
    let mut tail = 0.0;
    // finite pieces with d > R lie between orbit points far apart
    let finite = orbit_intervals(&orbit, &[big_r], |d| d > big_r, span);
    for (a, b) in finite {
        if a <= -span || b >= span {
            continue;
        }
        let est = adaptive_gl(a, b, 0.0, params.rel_tol, params.max_intervals, |x| {
            tail_density(x).unwrap_or_else(|e| {
                err.get_or_insert(e);
                0.0
            })
        });
        tail += est.value;
    }
    let ts = TanhSinh {
        rel_tol: params.rel_tol,
        abs_tol: 0.0,
        max_level: 8,
    };
    let hi_edge = orbit.iter().fold(f64::NEG_INFINITY, |m, &o| m.max(o)) + big_r;
    let lo_edge = orbit.iter().fold(f64::INFINITY, |m, &o| m.min(o)) - big_r;
    for (edge, sgn) in [(hi_edge, 1.0), (lo_edge, -1.0)] {
        let est = tanh_sinh(0.0, 1.0, ts, |p| {
            let one_minus = p.from_right;
            if one_minus <= 0.0 {
                return 0.0;
            }
            let s = p.x;
            let x = edge + sgn * s / one_minus;
            let jac = 1.0 / (one_minus * one_minus);
            tail_density(x).map(|v| v * jac).unwrap_or_else(|e| {
                err.get_or_insert(e);
                0.0
            })
        });
        tail += est.value;
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok((main, params.smooth_constant * delta * tail))
}

/// Hörmander totals over seeded (y, y₀) pairs.
pub fn check_hormander(ke: &KernelEvaluator, params: &HormanderParams) -> Result<SweepReport> {
    let pairs = hormander_pairs(ke.dim(), params);
    check_hormander_on(ke, params, &pairs)
}

/// [`check_hormander`] on explicit pairs.
pub fn check_hormander_on(
    ke: &KernelEvaluator,
    params: &HormanderParams,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<SweepReport> {
    let n = ke.dim();
    if n != 1 {
        return Err(VerifyError::NotImplemented(
            "the Hörmander quadrature is implemented in dimension 1 only".into(),
        ));
    }
    let cols = ["y", "y0", "separation", "main", "tail", "total"];
    let rows: Vec<SweepRow> = pairs
        .par_iter()
        .map(|(y, y0)| match hormander_integral(ke, params, y, y0) {
            Ok((main, tail)) => SweepRow {
                values: vec![y[0], y0[0], dist(y, y0), main, tail, main + tail],
                status: RowStatus::Ok,
                note: String::new(),
            },
            Err(e) => failed_row(cols.len(), e.to_string()),
        })
        .collect();
    let mut rep = SweepReport::new("hormander", &cols, cols.len() - 1, snapshot(ke, params));
    rep.rows = rows;
    rep.finish(params.ceiling.map(Threshold::Ceiling));
    rep.fitted.insert("C_hormander".into(), rep.sup);
    Ok(rep)
}

/// Constants of the two-sided heat-kernel bounds; PASS needs zero
/// violations of all three inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatConstants {
    /// h ≤ C·V⁻¹·exp(−c·d²/t), V = max ω-volume of the √t balls.
    pub upper_c: f64,
    pub upper_const: f64,
    /// h ≥ C⁻¹·v⁻¹·exp(−c·‖x−y‖²/t), v = min ω-volume of the √t balls.
    pub lower_c: f64,
    pub lower_const: f64,
    /// |h(x,y) − h(x,y')| ≤ C·(‖y−y'‖/√t)·V⁻¹·exp(−c·d²/t).
    pub diff_c: f64,
    pub diff_const: f64,
}

impl Default for HeatConstants {
    fn default() -> Self {
        Self {
            upper_c: 0.125,
            upper_const: 56.4,
            lower_c: 0.5,
            lower_const: 400.0,
            diff_c: 0.125,
            diff_const: 43.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatParams {
    pub samples: usize,
    pub seed: u64,
    pub box_half: f64,
    /// t is drawn log-uniformly from this range.
    pub t_range: [f64; 2],
    /// Fraction of samples with y in the orbit of x, ‖x‖ ≥ box_half/2.
    pub same_orbit: f64,
    pub measure_tol: f64,
    pub constants: HeatConstants,
}

impl Default for HeatParams {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 19,
            box_half: 3.0,
            t_range: [0.01, 100.0],
            same_orbit: 0.2,
            measure_tol: 1e-6,
            constants: HeatConstants::default(),
        }
    }
}

/// One heat sample: t, x, y and a perturbed y' with ‖y − y'‖ < √t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y_prime: Vec<f64>,
}

pub fn heat_samples(group: &ReflectionGroup, params: &HeatParams) -> Vec<HeatSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = group.dim();
    let (lo, hi) = (params.t_range[0].ln(), params.t_range[1].ln());
    (0..params.samples)
        .map(|_| {
            let t = rng.gen_range(lo..=hi).exp();
            let (x, y) = if group.order() > 1 && rng.gen_bool(params.same_orbit.clamp(0.0, 1.0)) {
                let u = random_unit(&mut rng, n);
                let x = scaled(&u, rng.gen_range(0.5 * params.box_half..=params.box_half));
                let g = &group.elements()[rng.gen_range(1..group.order())];
                let y = g.apply(&x);
                (x, y)
            } else {
                (
                    random_point(&mut rng, n, params.box_half),
                    random_point(&mut rng, n, params.box_half),
                )
            };
            let u = random_unit(&mut rng, n);
            let h = t.sqrt() * rng.gen_range(0.01..0.99);
            let y_prime = y.iter().zip(&u).map(|(a, b)| a + h * b).collect();
            HeatSample { t, x, y, y_prime }
        })
        .collect()
}

const C_GRID_STEPS: usize = 100;
const C_GRID_MAX: f64 = 1.0;

/// Upper, lower and difference bounds for h_t over a seeded sample set
/// that mixes random pairs with same-orbit pairs.
pub fn check_heat_bounds(ke: &KernelEvaluator, params: &HeatParams) -> Result<SweepReport> {
    let samples = heat_samples(ke.measure().group(), params);
    check_heat_bounds_on(ke, params, &samples)
}

/// [`check_heat_bounds`] on explicit samples.
pub fn check_heat_bounds_on(ke: &KernelEvaluator, params: &HeatParams, samples: &[HeatSample]) -> Result<SweepReport> {
    let n = ke.dim();
    let group = ke.measure().group();
    let k = params.constants;
    let mut cols: Vec<String> = vec!["t".into()];
    cols.extend((0..n).map(|i| format!("x{i}")));
    cols.extend((0..n).map(|i| format!("y{i}")));
    cols.extend(
        [
            "d",
            "euclid",
            "log_h",
            "log_vmax",
            "log_vmin",
            "log_diff_ratio",
            "log_lower_ratio",
            "upper_ratio",
        ]
        .map(String::from),
    );
    let width = cols.len();
    // per-row: (values, d²/t, log h + log V, upper/lower/diff violations)
    type Row = (SweepRow, f64, f64, f64, f64);
    let rows: Vec<Row> = samples
        .par_iter()
        .map(|s| {
            let res = (|| -> Result<(Vec<f64>, f64, f64, f64, f64)> {
                let d = group.orbit_distance(&s.x, &s.y);
                let eu = dist(&s.x, &s.y);
                let r = s.t.sqrt();
                let vx = ball_volume(ke, &s.x, r, params.measure_tol)?;
                let vy = ball_volume(ke, &s.y, r, params.measure_tol)?;
                let (lvmax, lvmin) = (vx.max(vy).ln(), vx.min(vy).ln());
                let lh = ke.log_heat_kernel(s.t, &s.x, &s.y)?;
                let lhp = ke.log_heat_kernel(s.t, &s.x, &s.y_prime)?;
                let step = dist(&s.y, &s.y_prime) / r;
                // ln|h − h'| = ln h + ln|1 − e^{ln h' − ln h}|
                let ldiff = lh + (-(lhp - lh).exp_m1()).abs().ln();
                let l_diff_ratio = ldiff + lvmax + k.diff_c * d * d / s.t - step.ln();
                let l_lower_ratio = -lh - lvmin - k.lower_c * eu * eu / s.t;
                let lhv = lh + lvmax;
                let upper = (lhv + k.upper_c * d * d / s.t).exp();
                let mut v = vec![s.t];
                v.extend(&s.x);
                v.extend(&s.y);
                v.extend([d, eu, lh, lvmax, lvmin, l_diff_ratio, l_lower_ratio, upper]);
                Ok((v, d * d / s.t, lhv, l_diff_ratio, l_lower_ratio))
            })();
            match res {
                Ok((values, d2t, lhv, ldr, llr)) => {
                    let upper = values[width - 1];
                    let bad = !(upper <= k.upper_const) || ldr > k.diff_const.ln() || llr > k.lower_const.ln();
                    let mut note = Vec::new();
                    if !(upper <= k.upper_const) {
                        note.push("upper");
                    }
                    if llr > k.lower_const.ln() {
                        note.push("lower");
                    }
                    if ldr > k.diff_const.ln() {
                        note.push("difference");
                    }
                    let row = SweepRow {
                        values,
                        status: if bad { RowStatus::Violation } else { RowStatus::Ok },
                        note: note.join(","),
                    };
                    (row, d2t, lhv, ldr, llr)
                }
                Err(e) => (failed_row(width, e.to_string()), f64::NAN, f64::NAN, f64::NAN, f64::NAN),
            }
        })
        .collect();
    let ok: Vec<&Row> = rows.iter().filter(|r| r.0.status != RowStatus::Failed).collect();
    let c_up = |c: f64| ok.iter().map(|r| (r.2 + c * r.1).exp()).fold(0.0f64, f64::max);
    let base = c_up(0.0);
    let mut c_fit = 0.0;
    for i in 1..=C_GRID_STEPS {
        let c = C_GRID_MAX * i as f64 / C_GRID_STEPS as f64;
        if c_up(c) <= 2.0 * base {
            c_fit = c;
        } else {
            break;
        }
    }
    let lower_fit = ok.iter().map(|r| r.4.exp()).fold(0.0f64, f64::max);
    let diff_fit = ok.iter().map(|r| r.3.exp()).fold(0.0f64, f64::max);
    let (at_fit, at_config) = (c_up(c_fit), c_up(k.upper_c));
    drop(ok);
    let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut rep = SweepReport::new("heat-bounds", &col_refs, width - 1, snapshot(ke, params));
    rep.rows = rows.into_iter().map(|r| r.0).collect();
    rep.finish(None);
    rep.fitted.insert("upper_c_fit".into(), c_fit);
    rep.fitted.insert("upper_const_at_fit".into(), at_fit);
    rep.fitted.insert("upper_const_at_config".into(), at_config);
    rep.fitted.insert("lower_const_at_config".into(), lower_fit);
    rep.fitted.insert("diff_const_at_config".into(), diff_fit);
    rep.notes.push(format!(
        "fitted upper exponent c = {c_fit} is the largest grid value keeping the constant within twice its c = 0 value"
    ));
    Ok(rep)
}

/// Ball-family geometry for the BMO estimates of the commutator check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyParams {
    pub r_min: f64,
    pub r_max: f64,
    /// Lattice spacing of the centers.
    pub spacing: f64,
    /// Centers cover [−center_half, center_half]^N.
    pub center_half: f64,
}

impl Default for FamilyParams {
    fn default() -> Self {
        Self {
            r_min: 0.25,
            r_max: 2.0,
            spacing: 0.125,
            center_half: 3.0,
        }
    }
}

impl FamilyParams {
    pub fn family(&self, dim: usize) -> Result<BallFamily> {
        Ok(BallFamily::new(
            BallFamily::lattice(
                &vec![-self.center_half; dim],
                &vec![self.center_half; dim],
                self.spacing,
            ),
            BallFamily::dyadic_radii(self.r_min, self.r_max),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommutatorParams {
    pub j: usize,
    pub presets: Vec<SymbolPreset>,
    pub p: f64,
    /// Grid half-width; the grid is [−half_width, half_width]^N.
    pub half_width: f64,
    /// Cells per axis, one entry per resolution.
    pub resolutions: Vec<usize>,
    pub eps_trunc: f64,
    pub family: FamilyParams,
    pub norm: NormOptions,
    /// Allowed relative spread of the fitted constants across resolutions.
    pub stability: f64,
    /// Commutator norms at or below this count as zero.
    pub zero_tol: f64,
}

impl Default for CommutatorParams {
    fn default() -> Self {
        Self {
            j: 0,
            presets: vec![
                SymbolPreset::Sign { axis: 0, offset: 0.5 },
                SymbolPreset::LipschitzBump {
                    center: vec![0.5],
                    radius: 1.0,
                },
                SymbolPreset::LogAbs { center: vec![1.0] },
                SymbolPreset::Constant { value: 1.0 },
            ],
            p: 2.0,
            half_width: 4.0,
            resolutions: vec![400, 800],
            eps_trunc: 1e-6,
            family: FamilyParams::default(),
            norm: NormOptions::default(),
            stability: 0.25,
            zero_tol: 1e-10,
        }
    }
}

/// For each symbol b and resolution: the commutator norm estimate and the
/// two BMO family estimates; fits C_up = sup op/‖b‖_orbit and
/// C_low = sup ‖b‖_euclid/op over the non-constant symbols.
pub fn check_commutator_bounds(
    measure: Arc<WeightedMeasure>,
    kernel: KernelConfig,
    params: &CommutatorParams,
) -> Result<SweepReport> {
    let n = measure.dim();
    if params.j >= n {
        return Err(VerifyError::InvalidArgument(format!("j = {} out of range", params.j)));
    }
    if params.resolutions.is_empty() || params.presets.is_empty() {
        return Err(VerifyError::InvalidArgument(
            "need at least one resolution and one symbol".into(),
        ));
    }
    for b in &params.presets {
        b.validate(n)?;
    }
    let ke = KernelEvaluator::new(measure.clone(), kernel)?;
    let family = params.family.family(n)?;
    let cols = [
        "preset",
        "cells",
        "op_norm",
        "bmo_euclidean",
        "bmo_orbit",
        "c_up",
        "c_low",
    ];
    let mut rep = SweepReport::new("commutator", &cols, 5, snapshot(&ke, params));
    let mut per_res: Vec<(f64, f64)> = Vec::new();
    let mut ok = true;
    for &cells in &params.resolutions {
        let grid = Arc::new(Grid::symmetric(measure.clone(), params.half_width, cells)?);
        let t = assemble_riesz(&ke, grid.clone(), params.j, params.eps_trunc, RieszMethod::Translated)?;
        if t.failed() > 0 {
            rep.notes
                .push(format!("{} kernel evaluations failed at {cells} cells", t.failed()));
        }
        let (mut c_up, mut c_low) = (0.0f64, 0.0f64);
        for (k, preset) in params.presets.iter().enumerate() {
            let b = preset.sample(grid.clone());
            let comm = Commutator::new(&t, &b)?;
            let structured = if params.p == 2.0 {
                Vec::new()
            } else {
                structured_tests(
                    &grid,
                    Some(&b),
                    params.j,
                    &[params.family.r_min, params.family.r_max],
                    cells / 16,
                )
            };
            let est = op_norm_estimate(&comm, grid.weights(), params.p, &params.norm, &structured)?;
            if !est.converged {
                rep.notes.push(format!(
                    "power iteration did not converge for {} at {cells} cells",
                    preset.name()
                ));
            }
            let e = bmo_norm(&b, OscillationMode::Euclidean, &family).sup;
            let o = bmo_norm(&b, OscillationMode::Orbit, &family).sup;
            let constant = matches!(preset, SymbolPreset::Constant { .. });
            let (cu, cl) = if constant {
                (0.0, 0.0)
            } else {
                (est.value / o, e / est.value)
            };
            let mut status = RowStatus::Ok;
            let mut note = String::new();
            if constant {
                if !(est.value <= params.zero_tol) {
                    status = RowStatus::Violation;
                    note = "constant symbol has a non-zero commutator".into();
                }
            } else if !(cu.is_finite() && cl.is_finite() && est.value > 0.0) {
                status = RowStatus::Violation;
                note = "fitted constant is not finite".into();
            } else {
                c_up = c_up.max(cu);
                c_low = c_low.max(cl);
            }
            rep.rows.push(SweepRow {
                values: vec![k as f64, cells as f64, est.value, e, o, cu, cl],
                status,
                note: if note.is_empty() {
                    preset.name().to_string()
                } else {
                    format!("{}: {note}", preset.name())
                },
            });
        }
        per_res.push((c_up, c_low));
    }
    rep.finish(None);
    let spread = |f: fn(&(f64, f64)) -> f64| {
        let v: Vec<f64> = per_res.iter().map(f).collect();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        (hi - lo) / hi
    };
    let up_spread = spread(|p| p.0);
    let low_spread = spread(|p| p.1);
    for (k, (u, l)) in per_res.iter().enumerate() {
        rep.fitted.insert(format!("c_up_{}", params.resolutions[k]), *u);
        rep.fitted.insert(format!("c_low_{}", params.resolutions[k]), *l);
    }
    rep.fitted.insert("c_up_spread".into(), up_spread);
    rep.fitted.insert("c_low_spread".into(), low_spread);
    if !(up_spread <= params.stability) || !(low_spread <= params.stability) {
        ok = false;
        rep.notes.push(format!(
            "fitted constants moved by {up_spread:.3} (upper) and {low_spread:.3} (lower) across resolutions"
        ));
    }
    rep.passed = rep.passed && ok;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflection::RootSystemSpec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn ke(spec: RootSystemSpec) -> KernelEvaluator {
        KernelEvaluator::new(Arc::new(WeightedMeasure::new(&spec).unwrap()), KernelConfig::default()).unwrap()
    }

    fn small_pairs(samples: usize) -> PairFamily {
        PairFamily {
            samples,
            ..PairFamily::default()
        }
    }

    #[test]
    fn classical_size_ratio_is_constant() {
        let k = ke(RootSystemSpec::trivial(1).unwrap());
        let rep = check_size(
            &k,
            &SizeParams {
                pairs: small_pairs(40),
                ..SizeParams::default()
            },
        )
        .unwrap();
        assert_eq!(rep.samples(), 40);
        assert_relative_eq!(rep.sup, 2.0 / PI, max_relative = 1e-6);
        assert_relative_eq!(rep.inf, 2.0 / PI, max_relative = 1e-6);
        assert!(rep.passed);
    }

    #[test]
    fn size_ratio_is_homogeneous() {
        let k = ke(RootSystemSpec::z2(1.0).unwrap());
        let base = SizeParams {
            pairs: small_pairs(30),
            ..SizeParams::default()
        };
        let one = check_size(&k, &base).unwrap();
        for t in [0.25, 4.0] {
            let mut p = base.clone();
            p.pairs.scale = t;
            let rep = check_size(&k, &p).unwrap();
            for (a, b) in one.rows.iter().zip(&rep.rows) {
                let (ra, rb) = (a.values[one.ratio_column], b.values[rep.ratio_column]);
                assert!((ra - rb).abs() < 1e-5 * ra, "{ra} vs {rb}");
            }
        }
    }

    #[test]
    fn ceiling_marks_violations() {
        let k = ke(RootSystemSpec::trivial(1).unwrap());
        let rep = check_size(
            &k,
            &SizeParams {
                pairs: small_pairs(10),
                ceiling: Some(0.5),
                ..SizeParams::default()
            },
        )
        .unwrap();
        assert_eq!(rep.violations, 10);
        assert!(!rep.passed);
    }

    #[test]
    fn classical_smoothness_matches_gradient() {
        // |1/(x−y) − 1/(x−y')|·|x−y|·2|x−y|/(π|h|) → 2/π as h → 0
        let k = ke(RootSystemSpec::trivial(1).unwrap());
        let p = SmoothnessParams::default();
        let pairs = vec![(vec![0.3], vec![1.7])];
        let rep = check_smoothness_on(&k, &p, &pairs, &[vec![1e-5]]).unwrap();
        assert_relative_eq!(rep.sup, 2.0 / PI, max_relative = 1e-4);
        let bad = check_smoothness_on(&k, &p, &pairs, &[vec![0.8]]).unwrap();
        assert_eq!(bad.rejected, 1);
    }

    #[test]
    fn smoothness_finite_difference_consistency() {
        let k = ke(RootSystemSpec::z2(1.0).unwrap());
        let p = SmoothnessParams::default();
        let pairs = vec![(vec![0.4], vec![1.3])];
        let a = check_smoothness_on(&k, &p, &pairs, &[vec![1e-4]]).unwrap();
        let b = check_smoothness_on(&k, &p, &pairs, &[vec![2e-4]]).unwrap();
        assert_relative_eq!(a.sup, b.sup, max_relative = 1e-3);
        assert!(a.sup.is_finite() && a.sup > 0.0);
    }

    #[test]
    fn classical_lower_bound_closed_form() {
        // |R| = 1/(π|x−y|) with |x−y| ≤ 7r·0.999…, ω(B) = 2r: m ≈ 2/(7π)
        let k = ke(RootSystemSpec::trivial(1).unwrap());
        let rep = check_lower_bound(&k, &LowerBoundParams::default()).unwrap();
        let exact = 2.0 / (7.0 * PI);
        assert!(rep.inf >= exact && rep.inf < 1.05 * exact, "{}", rep.inf);
        assert_eq!(rep.fitted["sign_changes"], 0.0);
        assert_eq!(rep.samples(), 30);
    }

    #[test]
    fn hormander_classical_dilation_invariant() {
        let k = ke(RootSystemSpec::trivial(1).unwrap());
        let p = HormanderParams {
            outer_radius: 1e4,
            ..HormanderParams::default()
        };
        let (a, _) = hormander_integral(&k, &p, &[0.1], &[0.0]).unwrap();
        let (b, _) = hormander_integral(&k, &p, &[0.4], &[0.0]).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-3);
        // ∫_{|u|≥2δ} |1/u − 1/(u+δ)| du/π = (ln(3/2) + ln 2)/π
        let exact = (3.0f64).ln() / PI;
        assert_relative_eq!(a, exact, max_relative = 1e-3);
        assert_eq!(hormander_integral(&k, &p, &[0.3], &[0.3]).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn hormander_stable_under_radius_doubling() {
        let k = ke(RootSystemSpec::z2(1.0).unwrap());
        let p = HormanderParams {
            pairs: 3,
            ..HormanderParams::default()
        };
        let q = HormanderParams {
            outer_radius: 2.0 * p.outer_radius,
            ..p.clone()
        };
        let a = check_hormander(&k, &p).unwrap();
        let b = check_hormander(&k, &q).unwrap();
        for (r, s) in a.rows.iter().zip(&b.rows) {
            let (x, y) = (r.values[5], s.values[5]);
            assert!((x - y).abs() < 0.1 * x, "{x} vs {y}");
        }
    }

    #[test]
    fn classical_heat_constants() {
        let k = ke(RootSystemSpec::trivial(1).unwrap());
        let rep = check_heat_bounds(
            &k,
            &HeatParams {
                samples: 200,
                ..HeatParams::default()
            },
        )
        .unwrap();
        assert_eq!(rep.violations, 0);
        assert!((rep.fitted["upper_c_fit"] - 0.25).abs() <= 0.011, "{:?}", rep.fitted);
    }

    #[test]
    fn same_orbit_pairs_respect_heat_bounds() {
        let k = ke(RootSystemSpec::z2(1.0).unwrap());
        let rep = check_heat_bounds(
            &k,
            &HeatParams {
                samples: 200,
                same_orbit: 1.0,
                ..HeatParams::default()
            },
        )
        .unwrap();
        assert_eq!(rep.violations, 0, "{:?}", rep.fitted);
        assert_eq!(rep.failed, 0);
    }
}
