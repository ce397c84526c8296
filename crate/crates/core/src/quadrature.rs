//! Quadrature rules shared by every module: Gauss–Legendre (plain and
//! composite), Gauss–Chebyshev averages, and a Legendre-series integrator
//! that turns nodal values on a Gauss–Legendre rule into antiderivatives.

use nalgebra::DMatrix;
use std::f64::consts::PI;

/// A quadrature rule on a finite interval.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
///
/// Newton iteration on the three-term recurrence from Tricomi's initial
/// guesses; O(n^2) work, accurate to a few ulps for n in the thousands.
pub fn gauss_legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let half = n.div_ceil(2);
    for i in 0..half {
        let theta = PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // i-th largest root
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
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

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> QuadRule {
    let (t, w) = gauss_legendre_reference(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    QuadRule {
        nodes: t.iter().map(|&t| mid + half * t).collect(),
        weights: w.iter().map(|&w| half * w).collect(),
        a,
        b,
    }
}

/// Composite Gauss–Legendre: `panels` equal sub-intervals with `per_panel` nodes each.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, per_panel: usize) -> QuadRule {
    let (t, w) = gauss_legendre_reference(per_panel);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * per_panel);
    let mut weights = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (ti, wi) in t.iter().zip(&w) {
            nodes.push(mid + 0.5 * h * ti);
            weights.push(0.5 * h * wi);
        }
    }
    QuadRule {
        nodes,
        weights,
        a,
        b,
    }
}

/// Mean of `f(2 cos y)` over y ∈ [-π, π], i.e. `(1/2π)∫ f(2cos y) dy`,
/// with `n` Gauss–Chebyshev nodes.
pub fn chebyshev_mean<T, F>(n: usize, f: F) -> T
where
    T: std::iter::Sum<T> + std::ops::Div<f64, Output = T>,
    F: Fn(f64) -> T,
{
    let nf = n as f64;
    let s: T = (0..n)
        .map(|k| f(2.0 * (PI * (k as f64 + 0.5) / nf).cos()))
        .sum();
    s / nf
}

/// Normalized Legendre values `sqrt((2m+1)/2) P_m(t)` for m = 0..count.
pub fn normalized_legendre(count: usize, t: f64, out: &mut [f64]) {
    let mut p0 = 1.0;
    let mut p1 = t;
    for m in 0..count {
        let pm = match m {
            0 => 1.0,
            1 => t,
            _ => {
                let mf = m as f64;
                let p2 = ((2.0 * mf - 1.0) * t * p1 - (mf - 1.0) * p0) / mf;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        out[m] = ((2 * m + 1) as f64 / 2.0).sqrt() * pm;
    }
}

/// `∫_{-1}^{t} P̃_m(τ) dτ` for the normalized Legendre polynomials, m = 0..count.
pub fn integrated_legendre(count: usize, t: f64, out: &mut [f64]) {
    // raw P_0..P_count
    let mut raw = vec![0.0; count + 1];
    raw[0] = 1.0;
    if count >= 1 {
        raw[1] = t;
    }
    for m in 2..=count {
        let mf = m as f64;
        raw[m] = ((2.0 * mf - 1.0) * t * raw[m - 1] - (mf - 1.0) * raw[m - 2]) / mf;
    }
    for m in 0..count {
        let norm = ((2 * m + 1) as f64 / 2.0).sqrt();
        out[m] = if m == 0 {
            norm * (t + 1.0)
        } else {
            norm * (raw[m + 1] - raw[m - 1]) / (2 * m + 1) as f64
        };
    }
}

/// Antiderivatives of functions sampled on a Gauss–Legendre rule.
///
/// Nodal values are expanded in normalized Legendre polynomials (exact
/// discrete transform on the rule), and the series is integrated term by
/// term, so `∫_a^x f` is spectrally accurate for smooth `f`.
#[derive(Clone, Debug)]
pub struct LegendreIntegrator {
    rule: QuadRule,
    /// rows: degree m, cols: node i; entry w_i P̃_m(t_i)
    analysis: DMatrix<f64>,
}

impl LegendreIntegrator {
    /// `rule` must be a plain (non-composite) Gauss–Legendre rule.
    pub fn new(rule: QuadRule) -> Self {
        let n = rule.len();
        let half = 0.5 * (rule.b - rule.a);
        let mid = 0.5 * (rule.a + rule.b);
        let mut analysis = DMatrix::zeros(n, n);
        let mut buf = vec![0.0; n];
        for (i, (&x, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let t = (x - mid) / half;
            normalized_legendre(n, t, &mut buf);
            let wt = w / half;
            for m in 0..n {
                analysis[(m, i)] = wt * buf[m];
            }
        }
        Self { rule, analysis }
    }

    pub fn rule(&self) -> &QuadRule {
        &self.rule
    }

    /// Legendre coefficients (rows) of each column of nodal values.
    pub fn coefficients(&self, values: &DMatrix<f64>) -> DMatrix<f64> {
        &self.analysis * values
    }

    /// Row vector `r` with `∫_a^x f = r · coeffs` for any f with Legendre coefficients `coeffs`.
    pub fn antiderivative_row(&self, x: f64) -> Vec<f64> {
        let n = self.rule.len();
        let half = 0.5 * (self.rule.b - self.rule.a);
        let mid = 0.5 * (self.rule.a + self.rule.b);
        let t = ((x - mid) / half).clamp(-1.0, 1.0);
        let mut out = vec![0.0; n];
        integrated_legendre(n, t, &mut out);
        for v in &mut out {
            *v *= half;
        }
        out
    }

    /// Matrix `A` with `(A f)_i = ∫_a^{x_i} f` for nodal values f.
    pub fn cumulative_matrix(&self) -> DMatrix<f64> {
        let n = self.rule.len();
        let mut rows = DMatrix::zeros(n, n);
        for (i, &x) in self.rule.nodes.iter().enumerate() {
            let r = self.antiderivative_row(x);
            for m in 0..n {
                rows[(i, m)] = r[m];
            }
        }
        rows * &self.analysis
    }

    /// Discretization of `f ↦ ½∫_a^b sign(x - y) f(y) dy` at the nodes.
    pub fn epsilon_matrix(&self) -> DMatrix<f64> {
        let mut c = self.cumulative_matrix();
        for j in 0..self.rule.len() {
            let half_w = 0.5 * self.rule.weights[j];
            for i in 0..self.rule.len() {
                c[(i, j)] -= half_w;
            }
        }
        c
    }
}
