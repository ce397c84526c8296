//! Nyström Fredholm determinants on (s, x_max) for scalar kernels and for
//! the 2×2 β = 1 kernel [[S, D], [I − ε, Sᵀ]].
//!
//! Smooth blocks are sampled on a Gauss–Legendre rule; the ε(x − y) block is
//! replaced by the spectral ε matrix of the same rule, which keeps the
//! discretization spectrally accurate despite the jump on the diagonal.

use crate::airy::{q_airy, AiryGrid};
use crate::quadrature::{gauss_legendre, LegendreIntegrator};
use crate::skewkernel::{edge_bundle, EpsilonBasis, KernelBundle, Scale, SkewMoments};
use crate::{Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Default number of nodes on (s, x_max).
pub const DEFAULT_NODES: usize = 64;
/// Tolerance for the node-doubling check of the limiting laws.
pub const DOUBLING_TOL: f64 = 1e-8;
/// Determinants in [−NEG_TOL, 0) are clamped to 0 before det^{1/2}.
pub const NEG_TOL: f64 = 1e-10;

/// Operator weight w(x) = x² + 1.
pub fn weight(x: f64) -> f64 {
    x * x + 1.0
}

/// x_max = max(s + 16, 8).
pub fn default_x_max(s: f64) -> f64 {
    (s + 16.0).max(8.0)
}

#[derive(Clone, Debug)]
pub struct NystromRule {
    pub s: f64,
    pub x_max: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// (E f)_i ≈ ∫_s^{x_max} ε(x_i − y) f(y) dy
    pub eps: DMatrix<f64>,
}

impl NystromRule {
    pub fn new(s: f64, x_max: f64, g: usize) -> Self {
        let rule = gauss_legendre(g, s, x_max);
        let eps = LegendreIntegrator::new(rule.clone()).epsilon_matrix();
        Self {
            s,
            x_max,
            nodes: rule.nodes,
            weights: rule.weights,
            eps,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// The finite matrix whose det(I − A) is the discretized Fredholm determinant.
#[derive(Clone, Debug)]
pub struct NystromOperator {
    pub s: f64,
    pub blocks: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub a: DMatrix<f64>,
}

impl NystromOperator {
    /// A_{ij} = √w_i K(x_i, x_j) √w_j.
    pub fn scalar(rule: &NystromRule, k: &DMatrix<f64>) -> Self {
        let g = rule.len();
        let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
        let a = DMatrix::from_fn(g, g, |i, j| sw[i] * k[(i, j)] * sw[j]);
        Self {
            s: rule.s,
            blocks: 1,
            nodes: rule.nodes.clone(),
            weights: rule.weights.clone(),
            a,
        }
    }

    /// 2×2 kernel [[S, D], [I − ε, Sᵀ]] with `st[(i, j)] = S(x_j, x_i)`.
    ///
    /// Quadrature weights are applied on the right, then the whole matrix is
    /// conjugated by Λ = diag(√w_i √ω(x_i), √w_i / √ω(x_i)), ω(x) = x² + 1,
    /// which puts the first block in L²(ω) and the second in L²(ω⁻¹). The
    /// similarity leaves the determinant unchanged.
    pub fn matrix(
        rule: &NystromRule,
        s: &DMatrix<f64>,
        d: &DMatrix<f64>,
        i: &DMatrix<f64>,
        st: &DMatrix<f64>,
    ) -> Self {
        let g = rule.len();
        let w = &rule.weights;
        let mut a = DMatrix::zeros(2 * g, 2 * g);
        for r in 0..g {
            for c in 0..g {
                a[(r, c)] = s[(r, c)] * w[c];
                a[(r, g + c)] = d[(r, c)] * w[c];
                a[(g + r, c)] = i[(r, c)] * w[c] - rule.eps[(r, c)];
                a[(g + r, g + c)] = st[(r, c)] * w[c];
            }
        }
        let lam: Vec<f64> = (0..2 * g)
            .map(|k| {
                let x = rule.nodes[k % g];
                let sw = w[k % g].sqrt();
                if k < g {
                    sw * weight(x).sqrt()
                } else {
                    sw / weight(x).sqrt()
                }
            })
            .collect();
        for r in 0..2 * g {
            for c in 0..2 * g {
                a[(r, c)] *= lam[r] / lam[c];
            }
        }
        Self {
            s: rule.s,
            blocks: 2,
            nodes: rule.nodes.clone(),
            weights: rule.weights.clone(),
            a,
        }
    }

    /// det(I − A).
    pub fn det(&self) -> f64 {
        let n = self.a.nrows();
        (DMatrix::<f64>::identity(n, n) - &self.a)
            .lu()
            .determinant()
    }

    /// det(I − A)^{1/2} with the sign guard.
    pub fn det_sqrt(&self) -> Result<f64> {
        sqrt_det(self.det())
    }
}

fn sqrt_det(det: f64) -> Result<f64> {
    if det < -NEG_TOL || !det.is_finite() {
        return Err(Error::NegativeDeterminant(det));
    }
    Ok(det.max(0.0).sqrt())
}

/// det(I − K) on (s, x_max) with g nodes.
pub fn det_scalar<F>(kernel: F, s: f64, x_max: f64, g: usize) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let rule = NystromRule::new(s, x_max, g);
    let x = &rule.nodes;
    let vals: Vec<f64> = (0..g * g)
        .into_par_iter()
        .map(|k| kernel(x[k / g], x[k % g]))
        .collect();
    let k = DMatrix::from_fn(g, g, |i, j| vals[i * g + j]);
    NystromOperator::scalar(&rule, &k).det()
}

/// A value with the change observed on the last node doubling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolved {
    pub value: f64,
    pub est_error: f64,
    pub nodes: usize,
}

/// Doubles g from g0 until two successive values agree to `tol` (at most three doublings).
pub fn resolve<F: Fn(usize) -> Result<f64>>(f: F, g0: usize, tol: f64) -> Result<Resolved> {
    let mut g = g0;
    let mut prev = f(g)?;
    for _ in 0..3 {
        let next = f(2 * g)?;
        let change = (next - prev).abs();
        g *= 2;
        if change <= tol {
            return Ok(Resolved {
                value: next,
                est_error: change,
                nodes: g,
            });
        }
        prev = next;
    }
    Err(Error::NoConvergence {
        what: "Fredholm determinant under node doubling".into(),
        change: (f(g)? - prev).abs(),
    })
}

fn check_s(s: f64) -> Result<()> {
    if !(-10.0..=8.0).contains(&s) {
        return Err(Error::OutOfRange(format!("s = {s} outside [−10, 8]")));
    }
    Ok(())
}

/// F₂(s) at a fixed resolution.
pub fn tw_gue_at(s: f64, g: usize) -> Result<f64> {
    check_s(s)?;
    let rule = NystromRule::new(s, default_x_max(s), g);
    let grid = AiryGrid::new(&rule.nodes, &rule.nodes)?;
    Ok(NystromOperator::scalar(&rule, &grid.q).det())
}

/// F₁(s) = det^{1/2}(I − Q̂_Ai) at a fixed resolution.
pub fn tw_goe_at(s: f64, g: usize) -> Result<f64> {
    check_s(s)?;
    let rule = NystromRule::new(s, default_x_max(s), g);
    let grid = AiryGrid::new(&rule.nodes, &rule.nodes)?;
    let st = grid.s.transpose();
    NystromOperator::matrix(&rule, &grid.s, &grid.d, &grid.i, &st).det_sqrt()
}

pub fn tw_gue(s: f64) -> Result<f64> {
    Ok(resolve(|g| tw_gue_at(s, g), DEFAULT_NODES / 2, DOUBLING_TOL)?.value)
}

pub fn tw_goe(s: f64) -> Result<f64> {
    Ok(resolve(|g| tw_goe_at(s, g), DEFAULT_NODES / 2, DOUBLING_TOL)?.value)
}

/// F₁ from the scalar form det(I − B) on L²(0, ∞), B(x, y) = Ai(x + y + s);
/// an independent cross-check of the 2×2 route.
pub fn tw_goe_scalar(s: f64, g: usize) -> Result<f64> {
    check_s(s)?;
    let x_max = (16.0 - s).max(8.0) / 2.0 + 4.0;
    let rule = NystromRule::new(0.0, x_max, g);
    let x = &rule.nodes;
    let k = DMatrix::from_fn(g, g, |i, j| {
        crate::airy::ai((x[i] + x[j] + s).min(40.0)).unwrap_or(0.0)
    });
    Ok(NystromOperator::scalar(&rule, &k).det())
}

/// Gap probability from an edge-scaled bundle sampled on the rule's nodes.
pub fn gap_from_bundle(b: &KernelBundle, rule: &NystromRule, beta: u8) -> Result<f64> {
    if !matches!(b.scale, Scale::Edge { .. }) {
        return Err(Error::Format(
            "finite-n gap needs an edge-scaled bundle".into(),
        ));
    }
    if b.grid_x.len() != rule.len() || b.grid_y.len() != rule.len() {
        return Err(Error::Format(
            "bundle grid does not match the Nyström rule".into(),
        ));
    }
    match beta {
        2 => Ok(NystromOperator::scalar(rule, &b.k).det()),
        1 => {
            let st = b.s.transpose();
            NystromOperator::matrix(rule, &b.s, &b.d, &b.i, &st).det_sqrt()
        }
        _ => Err(Error::OutOfRange(format!("β = {beta} not in {{1, 2}}"))),
    }
}

/// E_{n,β}((2 + s/(γn^{2/3}), ∞)) from the finite-n kernels.
pub fn finite_n_gap(
    basis: &EpsilonBasis,
    mom: &SkewMoments,
    gamma: f64,
    s: f64,
    beta: u8,
    g: usize,
) -> Result<f64> {
    let x_max = default_x_max(s);
    if s >= x_max {
        return Ok(1.0);
    }
    let rule = NystromRule::new(s, x_max, g);
    let b = edge_bundle(basis, mom, gamma, &rule.nodes, &rule.nodes);
    gap_from_bundle(&b, &rule, beta)
}

/// One row of a Tracy–Widom table.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct TwRow {
    pub s: f64,
    pub f1: f64,
    pub f2: f64,
    pub resolution: usize,
    pub est_error: f64,
}

/// F₁, F₂ at resolution g, with the change against g/2 as the error estimate.
pub fn tw_table(s_values: &[f64], g: usize) -> Result<Vec<TwRow>> {
    s_values
        .par_iter()
        .map(|&s| {
            let f1 = tw_goe_at(s, g)?;
            let f2 = tw_gue_at(s, g)?;
            let e1 = (f1 - tw_goe_at(s, g / 2)?).abs();
            let e2 = (f2 - tw_gue_at(s, g / 2)?).abs();
            Ok(TwRow {
                s,
                f1,
                f2,
                resolution: g,
                est_error: e1.max(e2),
            })
        })
        .collect()
}

/// Airy-kernel F₂ through pointwise q_airy, for callers without a grid.
pub fn tw_gue_pointwise(s: f64, g: usize) -> Result<f64> {
    check_s(s)?;
    Ok(det_scalar(
        |x, y| q_airy(x, y).unwrap_or(0.0),
        s,
        default_x_max(s),
        g,
    ))
}
