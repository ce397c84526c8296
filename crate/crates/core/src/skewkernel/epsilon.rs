//! The operator (εf)(λ) = ½∫ sign(λ − μ) f(μ) dμ on [−L, L].

use crate::orthopoly::RecurrenceTable;
use crate::quadrature::{composite_gauss_legendre, gauss_legendre, LegendreIntegrator};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// ½(∫_{−L}^{λ} f − ∫_{λ}^{L} f) with Gauss–Legendre rules split at the kink.
pub fn epsilon_apply<F: Fn(f64) -> f64>(f: F, lambda: f64, half_width: f64, panels: usize) -> f64 {
    let l = half_width;
    let x = lambda.clamp(-l, l);
    let left = if x > -l {
        composite_gauss_legendre(-l, x, panels, 20).integrate(&f)
    } else {
        0.0
    };
    let right = if x < l {
        composite_gauss_legendre(x, l, panels, 20).integrate(&f)
    } else {
        0.0
    };
    0.5 * (left - right)
}

/// ψ_0..ψ_{count−1} sampled on one Gauss–Legendre rule on [−L, L] together
/// with their Legendre coefficients, so that εψ_l is available anywhere.
#[derive(Clone, Debug)]
pub struct EpsilonBasis {
    table: RecurrenceTable,
    integ: LegendreIntegrator,
    count: usize,
    /// ψ_l at the rule nodes (node × l)
    psi: DMatrix<f64>,
    /// Legendre coefficients (degree × l)
    coeffs: DMatrix<f64>,
    /// ∫_{−L}^{L} ψ_l
    totals: Vec<f64>,
}

impl EpsilonBasis {
    /// `count` functions ψ_0..ψ_{count−1}; the rule has max(4K + 200, 600) nodes.
    pub fn new(table: &RecurrenceTable, count: usize) -> Self {
        let nodes = (4 * table.len() + 200).max(600);
        Self::with_nodes(table, count, nodes)
    }

    pub fn with_nodes(table: &RecurrenceTable, count: usize, nodes: usize) -> Self {
        let l = table.half_width();
        let rule = gauss_legendre(nodes, -l, l);
        let psi = table.psi_matrix(&rule.nodes, count);
        let integ = LegendreIntegrator::new(rule);
        let coeffs = integ.coefficients(&psi);
        let totals: Vec<f64> = (0..count)
            .map(|c| {
                integ
                    .rule()
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w * psi[(i, c)])
                    .sum()
            })
            .collect();
        Self {
            table: table.clone(),
            integ,
            count,
            psi,
            coeffs,
            totals,
        }
    }

    pub fn table(&self) -> &RecurrenceTable {
        &self.table
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn nodes(&self) -> &[f64] {
        &self.integ.rule().nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.integ.rule().weights
    }

    pub fn psi_nodes(&self) -> &DMatrix<f64> {
        &self.psi
    }

    /// ∫_{−L}^{L} ψ_l
    pub fn total(&self, l: usize) -> f64 {
        self.totals[l]
    }

    /// εψ_l at the points (point × l).
    pub fn eps_values(&self, points: &[f64]) -> DMatrix<f64> {
        let rows: Vec<Vec<f64>> = points
            .par_iter()
            .map(|&x| {
                let r = self.integ.antiderivative_row(x);
                (0..self.count)
                    .map(|c| {
                        let f: f64 = self
                            .coeffs
                            .column(c)
                            .iter()
                            .zip(&r)
                            .map(|(a, b)| a * b)
                            .sum();
                        f - 0.5 * self.totals[c]
                    })
                    .collect()
            })
            .collect();
        DMatrix::from_fn(points.len(), self.count, |i, c| rows[i][c])
    }

    /// εψ_l at the rule nodes.
    pub fn eps_nodes(&self) -> DMatrix<f64> {
        self.eps_values(&self.integ.rule().nodes.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthopoly::default_k;
    use crate::potential::Potential;

    #[test]
    fn constant_and_odd_functions() {
        for lam in [-1.3, 0.0, 0.4, 2.2] {
            assert!((epsilon_apply(|_| 1.0, lam, 2.5, 4) - lam).abs() < 1e-14);
        }
        let f = |x: f64| x * (-x * x).exp();
        let a = epsilon_apply(f, 0.7, 2.5, 8);
        let b = epsilon_apply(f, -0.7, 2.5, 8);
        assert!((a - b).abs() < 1e-14);
        let int0: f64 = 0.5 * (1.0 - (-6.25f64).exp());
        assert!((epsilon_apply(f, 0.0, 2.5, 8) + int0).abs() < 1e-14);
    }

    #[test]
    fn spectral_epsilon_matches_split_rule() {
        let n = 40;
        let t = RecurrenceTable::build(&Potential::quartic12(), n, default_k(n, 2)).unwrap();
        let basis = EpsilonBasis::new(&t, n + 1);
        let pts = [-2.4, -1.0, 0.0, 0.33, 1.99, 2.3];
        let e = basis.eps_values(&pts);
        for (i, &x) in pts.iter().enumerate() {
            for l in [0, 1, 7, n - 1, n] {
                let direct = epsilon_apply(|y| t.eval_psi(l, y), x, t.half_width(), 24);
                assert!(
                    (e[(i, l)] - direct).abs() < 1e-12,
                    "l={l} x={x}: {} vs {direct}",
                    e[(i, l)]
                );
            }
        }
    }

    #[test]
    fn epsilon_parity() {
        let t = RecurrenceTable::build(&Potential::gaussian(), 30, 45).unwrap();
        let basis = EpsilonBasis::new(&t, 31);
        let e = basis.eps_values(&[0.8, -0.8]);
        for l in 0..31 {
            let s = if l % 2 == 0 { -1.0 } else { 1.0 };
            assert!((e[(0, l)] - s * e[(1, l)]).abs() < 1e-13);
        }
    }
}
