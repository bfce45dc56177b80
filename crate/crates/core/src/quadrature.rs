//! Gauss rules and the composite/adaptive integrators built on them.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss rule.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

type Cache = RwLock<HashMap<usize, Arc<GaussRule>>>;

fn cached(
    cache: &'static OnceLock<Cache>,
    n: usize,
    build: fn(usize) -> GaussRule,
) -> Arc<GaussRule> {
    let cache = cache.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(rule) = cache.read().expect("quadrature cache poisoned").get(&n) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build(n));
    cache
        .write()
        .expect("quadrature cache poisoned")
        .entry(n)
        .or_insert(rule)
        .clone()
}

/// Gauss–Legendre rule on `[-1, 1]`, memoized per order.
pub fn gauss_legendre(n: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    cached(&CACHE, n, build_legendre)
}

/// Gauss–Hermite rule for the standard normal weight: `Σ w_i f(x_i) ≈ E[f(Z)]`.
pub fn gauss_hermite(n: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    cached(&CACHE, n, build_hermite)
}

fn build_legendre(n: usize) -> GaussRule {
    assert!(n >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let step = p / d;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn build_hermite(n: usize) -> GaussRule {
    assert!(n >= 1, "Gauss-Hermite order must be positive");
    // Golub–Welsch eigenvalues seed a Newton polish on orthonormal
    // physicists' Hermite functions, which also yields the weights.
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let nf = n as f64;
    let seeds = hermite_eigen_nodes(n);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut z = -seeds[i] * std::f64::consts::FRAC_1_SQRT_2;
        let mut pp = 0.0;
        for _ in 0..200 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut nodes: Vec<f64> = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
    let mut weights: Vec<f64> = w.iter().map(|v| v / sqrt_pi).collect();
    nodes.reverse();
    weights.reverse();
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

/// Eigenvalues (ascending) of the probabilists' Hermite Jacobi matrix,
/// by implicit QL on the symmetric tridiagonal form.
fn hermite_eigen_nodes(n: usize) -> Vec<f64> {
    let mut d = vec![0.0f64; n];
    let mut e: Vec<f64> = (1..=n)
        .map(|k| if k < n { (k as f64).sqrt() } else { 0.0 })
        .collect();
    for l in 0..n {
        for _ in 0..200 {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

/// Refinement of the panels next to one endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grade {
    None,
    /// Non-analytic endpoint: grade as deep as `f64` resolves.
    Singular,
    /// Boundary layer: grade until the innermost panel is at most this wide.
    Layer(f64),
}

/// Splits `[lo, hi]` into integration panels.
///
/// Panels break at every interior point of `breaks`, are no wider than
/// `max_width`, and the outermost panel at a graded end is replaced by a
/// geometric sequence shrinking toward that end (for endpoint singularities).
pub fn panelize(
    lo: f64,
    hi: f64,
    breaks: &[f64],
    max_width: f64,
    grade: (Grade, Grade),
) -> Vec<(f64, f64)> {
    const RATIO: f64 = 0.2;
    const LEVELS: i32 = 22;

    if hi <= lo {
        return Vec::new();
    }
    let mut cuts = vec![lo];
    let mut interior: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|b| *b > lo && *b < hi)
        .collect();
    interior.sort_by(f64::total_cmp);
    cuts.extend(interior);
    cuts.push(hi);

    let mut panels = Vec::new();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let pieces = ((b - a) / max_width).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        for i in 0..pieces {
            let left = a + h * i as f64;
            let right = if i + 1 == pieces {
                b
            } else {
                a + h * (i + 1) as f64
            };
            panels.push((left, right));
        }
    }

    // Stop grading before the innermost panel drops below what f64 can
    // resolve next to the endpoint.
    let levels = |edge: f64, h: f64, g: Grade| -> i32 {
        let floor = match g {
            Grade::Layer(w) => w.max(1e-13 * edge.abs()),
            _ => 1e-13 * edge.abs(),
        };
        let n = (0..LEVELS)
            .take_while(|&k| h * RATIO.powi(k) > floor)
            .count() as i32;
        // Singular ends keep the full depth allowed by the floor.
        if matches!(g, Grade::Singular) {
            (0..LEVELS)
                .take_while(|&k| h * RATIO.powi(k + 1) >= floor)
                .count() as i32
        } else {
            n
        }
    };
    if grade.0 != Grade::None {
        let (a, b) = panels.remove(0);
        let h = b - a;
        let n = levels(a, h, grade.0);
        let mut graded: Vec<(f64, f64)> = (0..n)
            .map(|k| (a + h * RATIO.powi(k + 1), a + h * RATIO.powi(k)))
            .collect();
        graded.push((a, a + h * RATIO.powi(n)));
        graded.reverse();
        panels.splice(0..0, graded);
    }
    if grade.1 != Grade::None {
        let (a, b) = panels.pop().expect("at least one panel");
        let h = b - a;
        let n = levels(b, h, grade.1);
        for k in 0..n {
            panels.push((b - h * RATIO.powi(k), b - h * RATIO.powi(k + 1)));
        }
        panels.push((b - h * RATIO.powi(n), b));
    }
    panels
}

/// Visits every node of the composite rule as `(x, weight)`.
pub fn for_each_node(panels: &[(f64, f64)], rule: &GaussRule, mut visit: impl FnMut(f64, f64)) {
    for &(a, b) in panels {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            visit(mid + half * t, half * w);
        }
    }
}

/// Composite Gauss–Legendre sum of `f` over the panels.
pub fn integrate_panels(panels: &[(f64, f64)], order: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre(order);
    let mut total = 0.0;
    for_each_node(panels, &rule, |x, w| total += w * f(x));
    total
}

/// Globally adaptive Gauss–Legendre integration.
///
/// Each interval is estimated with a 15-point rule and compared against
/// the sum over its two halves; the interval with the largest discrepancy
/// is bisected until the summed discrepancy falls below `abs_tol`.
pub fn adaptive_integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, abs_tol: f64) -> Result<f64> {
    const ORDER: usize = 15;
    const MAX_INTERVALS: usize = 4000;
    if hi <= lo {
        return Ok(0.0);
    }
    let rule = gauss_legendre(ORDER);
    let estimate = |a: f64, b: f64| -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(t, w)| half * w * f(mid + half * t))
            .sum()
    };
    let assess = |a: f64, b: f64| -> (f64, f64, f64, f64) {
        let whole = estimate(a, b);
        let m = 0.5 * (a + b);
        let refined = estimate(a, m) + estimate(m, b);
        (a, b, refined, (refined - whole).abs())
    };

    let mut intervals = vec![assess(lo, hi)];
    loop {
        let total_err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if total_err <= abs_tol {
            return Ok(intervals.iter().map(|iv| iv.2).sum());
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::numerical("adaptive integration", total_err));
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (a, b, _, _) = intervals.swap_remove(worst);
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            return Err(Error::numerical(
                "adaptive integration (interval underflow)",
                total_err,
            ));
        }
        intervals.push(assess(a, m));
        intervals.push(assess(m, b));
    }
}
