//! One-dimensional quadrature rules.
//!
//! Gauss–Legendre nodes come from Newton iteration on the three-term
//! recurrence, Gauss–Jacobi nodes from the Golub–Welsch eigenproblem.
//! The tanh-sinh rule hands the integrand the distance to each endpoint
//! so that endpoint singularities can be evaluated without cancellation.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// A value together with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }

    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            if self.error == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.error / self.value.abs()
        }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value + rhs.value, self.error + rhs.error)
    }
}

/// Nodes and weights of an interpolatory rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule (defined on [-1, 1]) to `f` on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(m + c * x);
        }
        acc * c
    }
}

/// Gauss–Legendre rule with `n` nodes on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n > 0, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Jacobi rule for the weight `(1-x)^alpha (1+x)^beta` on [-1, 1].
///
/// Built from the symmetric Jacobi matrix of the monic recurrence. Nodes are
/// returned ascending.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Rule {
    assert!(n > 0, "rule needs at least one node");
    assert!(alpha > -1.0 && beta > -1.0, "Jacobi exponents must exceed -1");
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let m = (k + 1) as f64;
            let b2 = if k == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((ab + 2.0).powi(2) * (ab + 3.0))
            } else {
                let s = 2.0 * m + ab;
                4.0 * m * (m + alpha) * (m + beta) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            let b = b2.sqrt();
            jac[(k, k + 1)] = b;
            jac[(k + 1, k)] = b;
        }
    }
    let mu0 =
        ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0) - ln_gamma(ab + 2.0)).exp();
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Point handed to a tanh-sinh integrand: the abscissa plus its exact
/// distances to the left and right endpoints.
#[derive(Debug, Clone, Copy)]
pub struct TsPoint {
    pub x: f64,
    pub from_left: f64,
    pub from_right: f64,
}

/// Settings for [`tanh_sinh`].
#[derive(Debug, Clone, Copy)]
pub struct TanhSinh {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_level: usize,
}

impl Default for TanhSinh {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_level: 8,
        }
    }
}

const TS_TMAX: f64 = 4.5;

/// Double-exponential quadrature on `[a, b]`.
///
/// The error estimate is the change between the last two levels, which
/// overestimates the true error once the rule is converging.
pub fn tanh_sinh<F: FnMut(TsPoint) -> f64>(a: f64, b: f64, cfg: TanhSinh, mut f: F) -> Estimate {
    if b <= a {
        return Estimate::exact(0.0);
    }
    let half = 0.5 * (b - a);
    let mut eval = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        // 1 - tanh(u) and 1 + tanh(u), both without cancellation
        let e = (2.0 * u).exp();
        let (om, op) = if u >= 0.0 {
            let em = (-2.0 * u).exp();
            (2.0 * em / (1.0 + em), 2.0 / (1.0 + em))
        } else {
            (2.0 / (1.0 + e), 2.0 * e / (1.0 + e))
        };
        let from_left = half * op;
        let from_right = half * om;
        if from_left <= 0.0 || from_right <= 0.0 {
            return 0.0;
        }
        let x = if from_left <= from_right {
            a + from_left
        } else {
            b - from_right
        };
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        if w == 0.0 {
            return 0.0;
        }
        let v = f(TsPoint {
            x,
            from_left,
            from_right,
        });
        if v == 0.0 {
            0.0
        } else {
            w * half * v
        }
    };

    let mut h = 1.0;
    let kmax = (TS_TMAX / h) as i64;
    let mut sum = 0.0;
    for k in -kmax..=kmax {
        sum += eval(k as f64 * h);
    }
    let mut prev = sum * h;
    let mut err = f64::INFINITY;
    for _level in 1..=cfg.max_level {
        h *= 0.5;
        let kmax = (TS_TMAX / h) as i64;
        let mut k = -kmax;
        if k % 2 == 0 {
            k += 1;
        }
        while k <= kmax {
            sum += eval(k as f64 * h);
            k += 2;
        }
        let cur = sum * h;
        err = (cur - prev).abs();
        prev = cur;
        if err <= cfg.abs_tol.max(cfg.rel_tol * cur.abs()) {
            break;
        }
    }
    Estimate::new(prev, err)
}

/// Globally adaptive Gauss–Legendre quadrature with 10/20-point pairs.
pub fn adaptive_gl<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
    mut f: F,
) -> Estimate {
    if b <= a {
        return Estimate::exact(0.0);
    }
    let lo = gauss_legendre(10);
    let hi = gauss_legendre(20);
    let mut piece = |a: f64, b: f64| -> (f64, f64) {
        let coarse = lo.integrate(a, b, &mut f);
        let fine = hi.integrate(a, b, &mut f);
        (fine, (fine - coarse).abs())
    };
    let (v, e) = piece(a, b);
    let mut intervals = vec![(a, b, v, e)];
    loop {
        let total: f64 = intervals.iter().map(|p| p.2).sum();
        let err: f64 = intervals.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) || intervals.len() >= max_intervals {
            return Estimate::new(total, err);
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (a, b, _, _) = intervals.swap_remove(idx);
        let m = 0.5 * (a + b);
        let (v1, e1) = piece(a, m);
        let (v2, e2) = piece(m, b);
        intervals.push((a, m, v1, e1));
        intervals.push((m, b, v2, e2));
    }
}

/// Natural log of the Gamma function.
pub fn lgamma(x: f64) -> f64 {
    ln_gamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 10, 16, 31] {
            let r = gauss_legendre(n);
            let wsum: f64 = r.weights.iter().sum();
            assert_relative_eq!(wsum, 2.0, epsilon = 1e-14);
            for deg in 0..(2 * n) {
                let got: f64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn jacobi_moments_match_beta_integrals() {
        // int (1-x)^a (1+x)^b x^k, checked against the same integral on a
        // fine tanh-sinh grid
        for &(a, b) in &[(-0.5, 0.0), (0.0, 0.5), (1.3, 2.3), (-0.5, 0.5), (0.2, -0.7)] {
            for n in [1usize, 3, 7, 16] {
                let r = gauss_jacobi(n, a, b);
                for k in 0..(2 * n).min(12) {
                    let got: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
                    let want = tanh_sinh(-1.0, 1.0, TanhSinh::default(), |p| {
                        p.from_right.powf(a) * p.from_left.powf(b) * p.x.powi(k as i32)
                    })
                    .value;
                    assert!(
                        (got - want).abs() < 1e-11 * want.abs().max(1.0),
                        "a={a} b={b} n={n} k={k}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn jacobi_odd_degree_middle_node_is_not_forced_to_zero() {
        let r = gauss_jacobi(3, -0.5, 1.0);
        assert!(r.nodes[1].abs() > 1e-3);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        let e = tanh_sinh(0.0, 1.0, TanhSinh::default(), |p| p.from_left.powf(-0.5));
        assert_relative_eq!(e.value, 2.0, max_relative = 1e-12);
        let e = tanh_sinh(0.0, 1.0, TanhSinh::default(), |p| p.from_right.powf(-0.7));
        assert_relative_eq!(e.value, 1.0 / 0.3, max_relative = 1e-10);
        let e = tanh_sinh(-2.0, 3.0, TanhSinh::default(), |p| p.x.exp());
        assert_relative_eq!(e.value, 3f64.exp() - (-2f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn adaptive_gl_resolves_peak() {
        let e = adaptive_gl(-1.0, 1.0, 0.0, 1e-12, 500, |x| 1.0 / (1e-4 + x * x));
        let want = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert_relative_eq!(e.value, want, max_relative = 1e-10);
    }
}
