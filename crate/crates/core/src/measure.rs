//! The reflection-invariant weight ω and volumes of balls and orbit balls.
//!
//! Volumes in dimensions one and two use nested tanh-sinh quadrature with
//! break points on the root hyperplanes; dimension three uses stratified
//! Monte Carlo with a per-ball seed derived from the measure's base seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{tanh_sinh, Estimate, TanhSinh};
use crate::reflection::{dist, dot, ReflectionError, ReflectionGroup, RootSystemSpec};

pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ORDER: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error(transparent)]
    Reflection(#[from] ReflectionError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("accuracy not reached: best estimate {} with error {}", .0.value, .0.error)]
    AccuracyNotReached(Estimate),
    #[error("ball volumes are implemented for dimensions 1 to 3, not {0}")]
    UnsupportedDimension(usize),
}

impl MeasureError {
    /// Best available estimate when the budget ran out.
    pub fn best_estimate(&self) -> Option<Estimate> {
        match self {
            MeasureError::AccuracyNotReached(e) => Some(*e),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, MeasureError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(MeasureError::InvalidArgument(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        dist(&self.center, y) < self.radius
    }

    pub fn scaled(&self, t: f64) -> Ball {
        Ball {
            center: self.center.iter().map(|c| c * t).collect(),
            radius: self.radius * t,
        }
    }
}

/// The union of the balls B(σ(c), r) over the group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitBall {
    pub base: Ball,
}

impl OrbitBall {
    pub fn new(base: Ball) -> Self {
        Self { base }
    }

    pub fn contains(&self, group: &ReflectionGroup, y: &[f64]) -> bool {
        group.orbit_distance(&self.base.center, y) < self.base.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    /// Base seed for Monte Carlo volumes (N = 3).
    pub seed: u64,
    /// Sample budget per Monte Carlo volume.
    pub mc_max_samples: usize,
    /// Refinement levels for the nested tanh-sinh rules.
    pub max_level: usize,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            mc_max_samples: 4_000_000,
            max_level: 9,
        }
    }
}

/// (center, radius, doubling ratio).
pub type DoublingRow = (Vec<f64>, f64, f64);

/// The measure dω(x) = ∏_{α∈R} |⟨α,x⟩|^{κ(α)} dx.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedMeasure {
    group: ReflectionGroup,
    homogeneous_dim: f64,
    config: MeasureConfig,
    /// (positive root, 2κ) pairs; each ± pair contributes |⟨α,x⟩|^{2κ}.
    factors: Vec<(Vec<f64>, f64)>,
}

impl WeightedMeasure {
    pub fn new(spec: &RootSystemSpec) -> Result<Self> {
        Self::with_config(spec, MeasureConfig::default())
    }

    pub fn with_config(spec: &RootSystemSpec, config: MeasureConfig) -> Result<Self> {
        let group = ReflectionGroup::generate(spec, DEFAULT_MAX_ORDER)?;
        Ok(Self::from_group(group, config))
    }

    pub fn from_group(group: ReflectionGroup, config: MeasureConfig) -> Self {
        let factors = group
            .spec()
            .positive_roots()
            .filter(|(_, k)| *k > 0.0)
            .map(|(r, k)| (r.to_vec(), 2.0 * k))
            .collect();
        Self {
            homogeneous_dim: group.spec().homogeneous_dim(),
            group,
            config,
            factors,
        }
    }

    pub fn spec(&self) -> &RootSystemSpec {
        self.group.spec()
    }

    pub fn group(&self) -> &ReflectionGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.group.dim()
    }

    pub fn config(&self) -> &MeasureConfig {
        &self.config
    }

    /// 𝐍 = N + Σ_{α∈R} κ(α).
    pub fn homogeneous_dim(&self) -> f64 {
        self.homogeneous_dim
    }

    pub fn weight_density(&self, x: &[f64]) -> f64 {
        let mut w = 1.0;
        for (r, e) in &self.factors {
            w *= dot(r, x).abs().powf(*e);
        }
        w
    }

    /// ω(B), with relative accuracy `tol`.
    pub fn ball_measure(&self, b: &Ball, tol: f64) -> Result<Estimate> {
        self.check_tol(tol)?;
        self.integrate_ball(&b.center, b.radius, false, tol)
    }

    /// ω(O(B)), overlaps counted once.
    ///
    /// O(B) ∩ C equals B(c⁺, r) ∩ C for the closed fundamental chamber C and
    /// the dominant orbit point c⁺, and the chambers tile space, so the union
    /// has measure |G|·ω(B(c⁺, r) ∩ C).
    pub fn orbit_ball_measure(&self, ob: &OrbitBall, tol: f64) -> Result<Estimate> {
        self.check_tol(tol)?;
        if self.group.order() == 1 {
            return self.ball_measure(&ob.base, tol);
        }
        let c = self.group.dominant(&ob.base.center);
        let e = self.integrate_ball(&c, ob.base.radius, true, tol)?;
        let g = self.group.order() as f64;
        Ok(Estimate::new(g * e.value, g * e.error))
    }

    /// V(x, y, r) = max{ω(B(x,r)), ω(B(y,r))}.
    pub fn v_max(&self, x: &[f64], y: &[f64], r: f64, tol: f64) -> Result<f64> {
        let a = self.ball_measure(&Ball::new(x.to_vec(), r)?, tol)?;
        if dist(x, y) == 0.0 {
            return Ok(a.value);
        }
        let b = self.ball_measure(&Ball::new(y.to_vec(), r)?, tol)?;
        Ok(a.value.max(b.value))
    }

    /// ω(B(x, 2r)) / ω(B(x, r)) for every center and radius; returns the
    /// rows and the largest ratio seen.
    pub fn doubling_sweep(
        &self,
        centers: &[Vec<f64>],
        radii: &[f64],
        tol: f64,
    ) -> Result<(Vec<DoublingRow>, f64)> {
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for c in centers {
            for &r in radii {
                let small = self.ball_measure(&Ball::new(c.clone(), r)?, tol)?;
                let big = self.ball_measure(&Ball::new(c.clone(), 2.0 * r)?, tol)?;
                let q = big.value / small.value;
                worst = worst.max(q);
                rows.push((c.clone(), r, q));
            }
        }
        Ok((rows, worst))
    }

    fn check_tol(&self, tol: f64) -> Result<()> {
        if !(tol > 0.0) {
            return Err(MeasureError::InvalidArgument(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        Ok(())
    }

    fn integrate_ball(&self, c: &[f64], r: f64, chamber: bool, tol: f64) -> Result<Estimate> {
        if c.len() != self.dim() {
            return Err(MeasureError::InvalidArgument(format!(
                "center has dimension {}, expected {}",
                c.len(),
                self.dim()
            )));
        }
        if !(r > 0.0) {
            return Err(MeasureError::InvalidArgument(format!(
                "ball radius must be positive, got {r}"
            )));
        }
        let est = match self.dim() {
            1 => self.integrate_1d(c[0], r, chamber, tol),
            2 => match self.spec().coordinate_kappas() {
                Some(k) if !chamber => self.integrate_2d_product(c, r, &k, tol),
                _ => self.integrate_2d(c, r, chamber, tol),
            },
            3 => return self.integrate_mc(c, r, chamber, tol),
            n => return Err(MeasureError::UnsupportedDimension(n)),
        };
        if est.error > tol * est.value.abs() {
            return Err(MeasureError::AccuracyNotReached(est));
        }
        Ok(est)
    }

    fn ts(&self, tol: f64) -> TanhSinh {
        TanhSinh {
            rel_tol: tol,
            abs_tol: 0.0,
            max_level: self.config.max_level,
        }
    }

    fn integrate_1d(&self, c: f64, r: f64, chamber: bool, tol: f64) -> Estimate {
        let mut lo = c - r;
        let mut hi = c + r;
        let has_roots = !self.spec().roots().is_empty();
        if chamber && has_roots {
            let sign = self.spec().positive_roots().next().map(|(a, _)| a[0]).unwrap_or(1.0);
            if sign > 0.0 {
                lo = lo.max(0.0);
            } else {
                hi = hi.min(0.0);
            }
            if hi <= lo {
                return Estimate::exact(0.0);
            }
        }
        let mut cuts = vec![lo];
        if has_roots && lo < 0.0 && hi > 0.0 {
            cuts.push(0.0);
        }
        cuts.push(hi);
        let cfg = self.ts(tol * 1e-2);
        let mut total = Estimate::exact(0.0);
        for w in cuts.windows(2) {
            total = total + tanh_sinh(w[0], w[1], cfg, |p| self.weight_density(&[p.x]));
        }
        total
    }

    /// Product weights: the inner coordinate has the closed-form primitive
    /// G(t) = sign(t)·2^κ|t|^{2κ+1}/(2κ+1), leaving one tanh–sinh integral.
    fn integrate_2d_product(&self, c: &[f64], r: f64, k: &[f64], tol: f64) -> Estimate {
        let prim = |t: f64| t.signum() * 2f64.powf(k[1]) * t.abs().powf(2.0 * k[1] + 1.0) / (2.0 * k[1] + 1.0);
        let (lo, hi) = (c[0] - r, c[0] + r);
        let mut cuts = vec![lo];
        if k[0] > 0.0 && lo < 0.0 && hi > 0.0 {
            cuts.push(0.0);
        }
        cuts.push(hi);
        let cfg = self.ts(tol * 1e-2);
        let mut total = Estimate::exact(0.0);
        for w in cuts.windows(2) {
            total = total
                + tanh_sinh(w[0], w[1], cfg, |p| {
                    // distance to the nearer disk edge, kept accurate near it
                    let u = p.x - c[0];
                    let edge = if u < 0.0 { p.x - lo } else { hi - p.x };
                    let edge = if w[0] == lo && u < 0.0 {
                        p.from_left
                    } else if w[1] == hi && u >= 0.0 {
                        p.from_right
                    } else {
                        edge
                    };
                    let s = (edge * (2.0 * r - edge)).max(0.0).sqrt();
                    let wx = (std::f64::consts::SQRT_2 * p.x).abs().powf(2.0 * k[0]);
                    wx * (prim(c[1] + s) - prim(c[1] - s))
                });
        }
        total
    }

    fn integrate_2d(&self, c: &[f64], r: f64, chamber: bool, tol: f64) -> Estimate {
        let lines: Vec<Vec<f64>> = self.spec().positive_roots().map(|(a, _)| a.to_vec()).collect();
        // angular break points: where a root line meets the circle, and the
        // direction of the origin when it lies inside
        let mut thetas: Vec<f64> = Vec::new();
        for a in &lines {
            let an = dot(a, a).sqrt();
            let s = -dot(a, c) / (r * an);
            if s.abs() <= 1.0 {
                let phi = a[1].atan2(a[0]);
                let d = s.acos();
                thetas.push(phi + d);
                thetas.push(phi - d);
            }
        }
        let cn = (c[0] * c[0] + c[1] * c[1]).sqrt();
        if !lines.is_empty() && cn > 0.0 && cn < r {
            thetas.push((-c[1]).atan2(-c[0]));
        }
        let two_pi = 2.0 * PI;
        let mut thetas: Vec<f64> = thetas.into_iter().map(|t| t.rem_euclid(two_pi)).collect();
        thetas.sort_by(|a, b| a.total_cmp(b));
        thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let pieces: Vec<(f64, f64)> = if thetas.is_empty() {
            vec![(0.0, two_pi)]
        } else {
            let k = thetas.len();
            (0..k)
                .map(|i| {
                    let a = thetas[i];
                    let b = if i + 1 < k { thetas[i + 1] } else { thetas[0] + two_pi };
                    (a, b)
                })
                .filter(|(a, b)| b - a > 1e-15)
                .collect()
        };

        let inner_cfg = self.ts(tol * 1e-3);
        let outer_cfg = self.ts(tol * 1e-2);
        let mut inner_err = 0.0;
        let mut total = Estimate::exact(0.0);
        for (ta, tb) in pieces {
            let e = tanh_sinh(ta, tb, outer_cfg, |p| {
                let u = [p.x.cos(), p.x.sin()];
                let mut cuts = vec![0.0];
                for a in &lines {
                    let au = dot(a, &u);
                    if au != 0.0 {
                        let rho = -dot(a, c) / au;
                        if rho > 0.0 && rho < r {
                            cuts.push(rho);
                        }
                    }
                }
                cuts.push(r);
                cuts.sort_by(|a, b| a.total_cmp(b));
                let mut acc = 0.0;
                for w in cuts.windows(2) {
                    if w[1] - w[0] <= 0.0 {
                        continue;
                    }
                    if chamber {
                        let m = 0.5 * (w[0] + w[1]);
                        let y = [c[0] + m * u[0], c[1] + m * u[1]];
                        if !self.group.in_chamber(&y) {
                            continue;
                        }
                    }
                    let e = tanh_sinh(w[0], w[1], inner_cfg, |q| {
                        let y = [c[0] + q.x * u[0], c[1] + q.x * u[1]];
                        self.weight_density(&y) * q.x
                    });
                    inner_err += e.error * (tb - ta);
                    acc += e.value;
                }
                acc
            });
            total = total + e;
        }
        total.error += inner_err * 1e-3;
        total
    }

    fn integrate_mc(&self, c: &[f64], r: f64, chamber: bool, tol: f64) -> Result<Estimate> {
        const STRATA: usize = 6;
        let n = c.len();
        let mut seed = self.config.seed;
        for v in c.iter().chain(std::iter::once(&r)) {
            seed = seed.rotate_left(17) ^ v.to_bits().wrapping_mul(0x9e37_79b9_7f4a_7c15);
        }
        if chamber {
            seed ^= 0xc4a3_b2e1;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = STRATA.pow(n as u32);
        let h = 2.0 * r / STRATA as f64;
        let cell_vol = h.powi(n as i32);
        // running sums per stratum
        let mut s1 = vec![0.0; cells];
        let mut s2 = vec![0.0; cells];
        let mut count = vec![0usize; cells];
        let mut per = 8usize;
        let mut used = 0usize;
        let mut y = vec![0.0; n];
        loop {
            for cell in 0..cells {
                let mut idx = cell;
                let mut lo = vec![0.0; n];
                for l in lo.iter_mut() {
                    *l = -r + (idx % STRATA) as f64 * h;
                    idx /= STRATA;
                }
                while count[cell] < per {
                    for i in 0..n {
                        y[i] = c[i] + lo[i] + h * rng.gen::<f64>();
                    }
                    let inside = dist(&y, c) < r && (!chamber || self.group.in_chamber(&y));
                    let v = if inside { self.weight_density(&y) } else { 0.0 };
                    s1[cell] += v;
                    s2[cell] += v * v;
                    count[cell] += 1;
                    used += 1;
                }
            }
            let mut value = 0.0;
            let mut var = 0.0;
            for cell in 0..cells {
                let m = count[cell] as f64;
                let mean = s1[cell] / m;
                let v = (s2[cell] / m - mean * mean).max(0.0) / (m - 1.0).max(1.0);
                value += cell_vol * mean;
                var += cell_vol * cell_vol * v;
            }
            let est = Estimate::new(value, var.sqrt());
            if est.error <= tol * value.abs() {
                return Ok(est);
            }
            if used + per * cells > self.config.mc_max_samples {
                return Err(MeasureError::AccuracyNotReached(est));
            }
            per *= 2;
        }
    }
}
