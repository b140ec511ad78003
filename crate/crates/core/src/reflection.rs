//! Root systems, reflection groups, orbits and the orbit distance.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

/// Tolerance for matching group elements during closure.
pub const CLOSURE_TOL: f64 = 1e-10;
/// Tolerance for orthogonality checks on generated elements.
pub const ORTHO_TOL: f64 = 1e-12;
/// Tolerance for merging orbit points.
pub const MERGE_TOL: f64 = 1e-10;

const ROOT_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReflectionError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("kappa[{index}] = {value} must be finite and nonnegative")]
    InvalidMultiplicity { index: usize, value: f64 },
    #[error("root {index} is listed twice")]
    DuplicateRoot { index: usize },
    #[error("roots are not closed under the reflection in root {index}")]
    NotClosed { index: usize },
    #[error("kappa is not invariant: root {from} maps to root {to} with a different value")]
    MultiplicityNotInvariant { from: usize, to: usize },
    #[error("group closure exceeded {max_order} elements")]
    GroupTooLarge { max_order: usize },
}

pub type Result<T> = std::result::Result<T, ReflectionError>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Reflection of `x` in the hyperplane orthogonal to `alpha`.
///
/// Uses `x - 2<x,a>/|a|^2 a`, so un-normalized roots reflect correctly.
pub fn reflect(alpha: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if alpha.len() != x.len() {
        return Err(ReflectionError::DimensionMismatch {
            expected: alpha.len(),
            found: x.len(),
        });
    }
    let aa = dot(alpha, alpha);
    if aa == 0.0 || !aa.is_finite() {
        return Err(ReflectionError::InvalidArgument(
            "root vector must be nonzero and finite".into(),
        ));
    }
    let c = 2.0 * dot(x, alpha) / aa;
    Ok(x.iter().zip(alpha).map(|(xi, ai)| xi - c * ai).collect())
}

/// A reduced root system with a G-invariant multiplicity function.
///
/// Roots are normalized to squared length 2 on construction; a root list
/// containing only one of each pair `±α` is completed with the negatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSystemSpec {
    dim: usize,
    roots: Vec<Vec<f64>>,
    kappa: Vec<f64>,
    positive: Vec<usize>,
}

impl RootSystemSpec {
    pub fn new(dim: usize, roots: Vec<Vec<f64>>, kappa: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(ReflectionError::InvalidArgument("dimension must be positive".into()));
        }
        if roots.len() != kappa.len() {
            return Err(ReflectionError::InvalidArgument(format!(
                "{} roots but {} kappa values",
                roots.len(),
                kappa.len()
            )));
        }
        for (i, &k) in kappa.iter().enumerate() {
            if !k.is_finite() || k < 0.0 {
                return Err(ReflectionError::InvalidMultiplicity { index: i, value: k });
            }
        }
        let mut normalized: Vec<Vec<f64>> = Vec::with_capacity(2 * roots.len());
        let mut kap: Vec<f64> = Vec::with_capacity(2 * roots.len());
        for (i, r) in roots.iter().enumerate() {
            if r.len() != dim {
                return Err(ReflectionError::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            let n = norm(r);
            if n == 0.0 || !n.is_finite() {
                return Err(ReflectionError::InvalidArgument(format!(
                    "root {i} must be nonzero and finite"
                )));
            }
            let s = std::f64::consts::SQRT_2 / n;
            let v: Vec<f64> = r.iter().map(|x| x * s).collect();
            if find_vector(&normalized, &v).is_some() {
                return Err(ReflectionError::DuplicateRoot { index: i });
            }
            normalized.push(v);
            kap.push(kappa[i]);
        }
        // complete with negatives
        let given = normalized.len();
        for i in 0..given {
            let neg: Vec<f64> = normalized[i].iter().map(|x| -x).collect();
            match find_vector(&normalized, &neg) {
                Some(j) => {
                    if (kap[j] - kap[i]).abs() > 1e-12 * kap[i].abs().max(1.0) {
                        return Err(ReflectionError::MultiplicityNotInvariant { from: i, to: j });
                    }
                }
                None => {
                    normalized.push(neg);
                    kap.push(kap[i]);
                }
            }
        }
        for (a, alpha) in normalized.iter().enumerate() {
            for (b, beta) in normalized.iter().enumerate() {
                let image = reflect(alpha, beta)?;
                let Some(c) = find_vector(&normalized, &image) else {
                    return Err(ReflectionError::NotClosed { index: a });
                };
                if (kap[c] - kap[b]).abs() > 1e-12 * kap[b].abs().max(1.0) {
                    return Err(ReflectionError::MultiplicityNotInvariant { from: b, to: c });
                }
            }
        }
        let positive = positive_subsystem(dim, &normalized);
        Ok(Self {
            dim,
            roots: normalized,
            kappa: kap,
            positive,
        })
    }

    /// No roots: the trivial group on ℝ^dim.
    pub fn trivial(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new(), Vec::new())
    }

    /// Rank one: roots ±√2 with multiplicity `kappa`.
    pub fn z2(kappa: f64) -> Result<Self> {
        Self::z2n(&[kappa])
    }

    /// Product of sign flips, roots ±√2·e_i with multiplicity `kappas[i]`.
    pub fn z2n(kappas: &[f64]) -> Result<Self> {
        let n = kappas.len();
        let roots = (0..n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i] = std::f64::consts::SQRT_2;
                v
            })
            .collect();
        Self::new(n, roots, kappas.to_vec())
    }

    /// Dihedral system I₂(m) in the plane. For odd `m` all roots are
    /// conjugate, so `kappa_a` and `kappa_b` must coincide.
    pub fn dihedral(m: usize, kappa_a: f64, kappa_b: f64) -> Result<Self> {
        if m < 2 {
            return Err(ReflectionError::InvalidArgument(
                "dihedral order m must be at least 2".into(),
            ));
        }
        let mut roots = Vec::with_capacity(m);
        let mut kappa = Vec::with_capacity(m);
        for k in 0..m {
            let th = std::f64::consts::PI * k as f64 / m as f64;
            roots.push(vec![th.cos(), th.sin()]);
            kappa.push(if k % 2 == 0 { kappa_a } else { kappa_b });
        }
        if m % 2 == 1 && kappa_a != kappa_b {
            return Err(ReflectionError::MultiplicityNotInvariant { from: 0, to: 1 });
        }
        Self::new(2, roots, kappa)
    }

    /// Orthogonal direct sum acting on ℝ^{dim₁+dim₂}.
    pub fn direct_sum(&self, other: &RootSystemSpec) -> Result<Self> {
        let dim = self.dim + other.dim;
        let mut roots = Vec::new();
        let mut kappa = Vec::new();
        for &i in &self.positive {
            let mut v = self.roots[i].clone();
            v.resize(dim, 0.0);
            roots.push(v);
            kappa.push(self.kappa[i]);
        }
        for &i in &other.positive {
            let mut v = vec![0.0; self.dim];
            v.extend_from_slice(&other.roots[i]);
            roots.push(v);
            kappa.push(other.kappa[i]);
        }
        Self::new(dim, roots, kappa)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn roots(&self) -> &[Vec<f64>] {
        &self.roots
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// Indices of the positive roots.
    pub fn positive(&self) -> &[usize] {
        &self.positive
    }

    pub fn positive_roots(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.positive.iter().map(|&i| (self.roots[i].as_slice(), self.kappa[i]))
    }

    /// γ_κ = Σ_{α∈R} κ(α).
    pub fn gamma_kappa(&self) -> f64 {
        self.kappa.iter().sum()
    }

    /// Homogeneous dimension N + γ_κ.
    pub fn homogeneous_dim(&self) -> f64 {
        self.dim as f64 + self.gamma_kappa()
    }

    pub fn is_kappa_zero(&self) -> bool {
        self.kappa.iter().all(|&k| k == 0.0)
    }

    /// Per-coordinate multiplicities when every root is a multiple of a
    /// coordinate axis (the Z₂^N case); coordinates without roots get 0.
    pub fn coordinate_kappas(&self) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        for (r, &k) in self.roots.iter().zip(&self.kappa) {
            let nz: Vec<usize> = (0..self.dim).filter(|&i| r[i].abs() > 1e-12).collect();
            if nz.len() != 1 {
                return None;
            }
            out[nz[0]] = k;
        }
        Some(out)
    }
}

fn find_vector(list: &[Vec<f64>], v: &[f64]) -> Option<usize> {
    list.iter()
        .position(|r| r.iter().zip(v).all(|(a, b)| (a - b).abs() < ROOT_MATCH_TOL))
}

fn positive_subsystem(dim: usize, roots: &[Vec<f64>]) -> Vec<usize> {
    // generic direction: irrational, decreasing weights
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 / (i as f64 + 1.0 + 0.618_034)).collect();
    for attempt in 0..64 {
        let ok = roots.iter().all(|r| dot(r, &v).abs() > 1e-8);
        if ok {
            break;
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi += 1e-3 * ((attempt * 7 + i * 13) as f64).sin();
        }
    }
    (0..roots.len()).filter(|&i| dot(&roots[i], &v) > 0.0).collect()
}

/// An orthogonal N×N matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupElement {
    dim: usize,
    data: Vec<f64>,
}

impl GroupElement {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    /// The reflection matrix I − 2ααᵀ/|α|².
    pub fn reflection(alpha: &[f64]) -> Self {
        let dim = alpha.len();
        let aa = dot(alpha, alpha);
        let mut g = Self::identity(dim);
        for i in 0..dim {
            for j in 0..dim {
                g.data[i * dim + j] -= 2.0 * alpha[i] * alpha[j] / aa;
            }
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&self.data[i * self.dim..(i + 1) * self.dim], x);
        }
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &GroupElement) -> GroupElement {
        let n = self.dim;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                for j in 0..n {
                    data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        GroupElement { dim: n, data }
    }

    pub fn transpose(&self) -> GroupElement {
        let n = self.dim;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j];
            }
        }
        GroupElement { dim: n, data }
    }

    pub fn max_abs_diff(&self, other: &GroupElement) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// max |gᵀg − I|.
    pub fn orthogonality_defect(&self) -> f64 {
        self.transpose()
            .compose(self)
            .max_abs_diff(&GroupElement::identity(self.dim))
    }

    fn key(&self) -> Vec<i64> {
        self.data.iter().map(|x| (x * 1e8).round() as i64).collect()
    }
}

/// A finite reflection group with its root system.
#[derive(Debug, Clone, Serialize)]
pub struct ReflectionGroup {
    spec: RootSystemSpec,
    elements: Vec<GroupElement>,
    generator_indices: Vec<usize>,
    /// Interior direction of the fundamental chamber.
    rho: Vec<f64>,
}

impl ReflectionGroup {
    /// Breadth-first closure of {I} ∪ {σ_α : α ∈ R₊}.
    pub fn generate(spec: &RootSystemSpec, max_order: usize) -> Result<Self> {
        if max_order < 2 {
            return Err(ReflectionError::InvalidArgument("max_order must be at least 2".into()));
        }
        let dim = spec.dim();
        let mut elements = vec![GroupElement::identity(dim)];
        let mut index: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        index.entry(elements[0].key()).or_default().push(0);

        let lookup =
            |elements: &[GroupElement], index: &HashMap<Vec<i64>, Vec<usize>>, g: &GroupElement| -> Option<usize> {
                if let Some(c) = index.get(&g.key()) {
                    for &i in c {
                        if elements[i].max_abs_diff(g) < CLOSURE_TOL {
                            return Some(i);
                        }
                    }
                }
                // rounding can split a boundary value across two keys
                elements.iter().position(|e| e.max_abs_diff(g) < CLOSURE_TOL)
            };

        let generators: Vec<GroupElement> = spec
            .positive()
            .iter()
            .map(|&i| GroupElement::reflection(&spec.roots()[i]))
            .collect();
        let mut generator_indices = Vec::with_capacity(generators.len());
        for g in &generators {
            let i = match lookup(&elements, &index, g) {
                Some(i) => i,
                None => {
                    elements.push(g.clone());
                    let i = elements.len() - 1;
                    index.entry(g.key()).or_default().push(i);
                    i
                }
            };
            generator_indices.push(i);
        }
        let mut head = 0;
        while head < elements.len() {
            for g in &generators {
                let p = g.compose(&elements[head]);
                if lookup(&elements, &index, &p).is_none() {
                    if elements.len() >= max_order {
                        return Err(ReflectionError::GroupTooLarge { max_order });
                    }
                    index.entry(p.key()).or_default().push(elements.len());
                    elements.push(p);
                }
            }
            head += 1;
        }
        let mut rho = vec![0.0; dim];
        for (r, _) in spec.positive_roots() {
            for (a, b) in rho.iter_mut().zip(r) {
                *a += b;
            }
        }
        Ok(Self {
            spec: spec.clone(),
            elements,
            generator_indices,
            rho,
        })
    }

    pub fn spec(&self) -> &RootSystemSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn generator_indices(&self) -> &[usize] {
        &self.generator_indices
    }

    /// Index of the stored element equal to `g`, if any.
    pub fn find(&self, g: &GroupElement) -> Option<usize> {
        self.elements.iter().position(|e| e.max_abs_diff(g) < CLOSURE_TOL)
    }

    /// `table[i][j]` is the index of `elements[i] · elements[j]`.
    pub fn multiplication_table(&self) -> Option<Vec<Vec<usize>>> {
        let n = self.order();
        let mut t = vec![vec![0; n]; n];
        for i in 0..n {
            for j in 0..n {
                t[i][j] = self.find(&self.elements[i].compose(&self.elements[j]))?;
            }
        }
        Some(t)
    }

    /// G-orbit of `x`, duplicates merged at [`MERGE_TOL`].
    pub fn orbit(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for g in &self.elements {
            let p = g.apply(x);
            if !out.iter().any(|q| dist(q, &p) < MERGE_TOL) {
                out.push(p);
            }
        }
        out
    }

    /// d(x, y) = min_σ |x − σ(y)|.
    pub fn orbit_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut buf = vec![0.0; x.len()];
        let mut best = f64::INFINITY;
        for g in &self.elements {
            g.apply_into(y, &mut buf);
            let d2: f64 = x.iter().zip(&buf).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.min(d2);
        }
        best.sqrt()
    }

    /// Whether `y` lies in the closed fundamental chamber {⟨α,y⟩ ≥ 0, α ∈ R₊}.
    pub fn in_chamber(&self, y: &[f64]) -> bool {
        self.spec.positive_roots().all(|(r, _)| dot(r, y) >= 0.0)
    }

    /// The orbit point lying in the closed fundamental chamber.
    pub fn dominant(&self, x: &[f64]) -> Vec<f64> {
        let mut best = x.to_vec();
        let mut best_score = f64::NEG_INFINITY;
        for g in &self.elements {
            let p = g.apply(x);
            let s = dot(&p, &self.rho);
            if s > best_score {
                best_score = s;
                best = p;
            }
        }
        best
    }
}
