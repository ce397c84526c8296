//! K_n through the band of V′(J) that straddles index n:
//! K_n(λ,μ) = (n/2)Σ_{k<n≤j} V′(J)_{jk} ∫_0^∞ (ψ_k(λ+ν)ψ_j(μ+ν) + ψ_k(μ+ν)ψ_j(λ+ν)) dν.

use crate::orthopoly::RecurrenceTable;
use crate::quadrature::{composite_gauss_legendre, gauss_legendre};
use crate::{Error, Result};
use nalgebra::DMatrix;
use std::ops::Range;

/// Truncation tail above which the ν-integral is rejected.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// Entries (ψ_j, V′ψ_k) for j ∈ rows, k ∈ cols.
#[derive(Clone, Debug)]
pub struct VPrimeBlock {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    pub values: DMatrix<f64>,
}

impl VPrimeBlock {
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[(j - self.rows.start, k - self.cols.start)]
    }
}

pub fn v_prime_matrix(
    t: &RecurrenceTable,
    rows: Range<usize>,
    cols: Range<usize>,
) -> Result<VPrimeBlock> {
    let need = rows.end.max(cols.end);
    if need > t.len() {
        return Err(Error::OutOfRange(format!(
            "V′(J) needs ψ up to index {} but the table holds {}",
            need - 1,
            t.len()
        )));
    }
    let l = t.half_width();
    let rule = gauss_legendre((4 * t.len() + 200).max(600), -l, l);
    let psi = t.psi_matrix(&rule.nodes, need);
    let v = t.potential();
    let a = DMatrix::from_fn(rule.len(), rows.len(), |i, c| {
        rule.weights[i] * v.deriv(rule.nodes[i]) * psi[(i, rows.start + c)]
    });
    let b = psi.columns(cols.start, cols.len()).into_owned();
    Ok(VPrimeBlock {
        rows,
        cols,
        values: a.transpose() * b,
    })
}

/// The band of V′(J) coupling k < n ≤ j with |j − k| ≤ 2m − 1.
fn straddling_block(t: &RecurrenceTable, m: usize) -> Result<VPrimeBlock> {
    let n = t.n();
    let w = 2 * m - 1;
    v_prime_matrix(t, n..n + w, n.saturating_sub(w)..n)
}

/// V^s_n = Σ_{k<n≤j} V′(J)_{jk}, summed over the band |j − k| ≤ 2m − 1.
pub fn v_s_n(t: &RecurrenceTable, m: usize) -> Result<f64> {
    let b = straddling_block(t, m)?;
    let w = 2 * m - 1;
    let mut sum = 0.0;
    for j in b.rows.clone() {
        for k in b.cols.clone() {
            if j - k <= w {
                sum += b.get(j, k);
            }
        }
    }
    Ok(sum)
}

/// K_n on xs × ys (native coordinates) from the V′(J) band of width 2m − 1.
pub fn kernel_k_via_vj(
    t: &RecurrenceTable,
    m: usize,
    xs: &[f64],
    ys: &[f64],
) -> Result<DMatrix<f64>> {
    let n = t.n();
    let nf = n as f64;
    let block = straddling_block(t, m)?;
    let w = 2 * m - 1;
    let ks = block.cols.clone();
    let js = block.rows.clone();
    let count = js.end;

    let l = t.half_width();
    let lo = xs
        .iter()
        .chain(ys)
        .copied()
        .fold(f64::INFINITY, f64::min)
        .max(-l);
    // ψ vanish beyond L, so ν stops at L − min; the dropped tail is of order ψ(L)²
    let edge = t.boundary_magnitude(count - 1);
    let vmax = block.values.amax();
    let tail = nf * vmax * (w * w) as f64 * edge * edge;
    if tail > TAIL_TOLERANCE {
        return Err(Error::TailTooLarge(tail));
    }
    let h = 0.5 * nf.powf(-2.0 / 3.0);
    let span = l - lo;
    let panels = ((span / h).ceil() as usize).max(1);
    let rule = composite_gauss_legendre(0.0, span, panels, 16);
    let nq = rule.len();

    // for each point p: X_p (q × k) and Y_p (q × j), flattened into rows
    let flat = |pts: &[f64], range: &Range<usize>| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(pts.len(), nq * range.len());
        for (p, &x) in pts.iter().enumerate() {
            let shifted: Vec<f64> = rule.nodes.iter().map(|nu| x + nu).collect();
            let psi = t.psi_matrix(&shifted, count);
            for q in 0..nq {
                for (c, idx) in range.clone().enumerate() {
                    out[(p, q * range.len() + c)] = psi[(q, idx)];
                }
            }
        }
        out
    };
    let xk = flat(xs, &ks);
    let yj = flat(ys, &js);
    let xj = flat(xs, &js);
    let yk = flat(ys, &ks);

    // V restricted to the band, V[j][k]
    let vb = DMatrix::from_fn(js.len(), ks.len(), |a, b| {
        let (j, k) = (js.start + a, ks.start + b);
        if j - k <= w {
            block.get(j, k)
        } else {
            0.0
        }
    });
    // W_p(q, ·) = w_q V X_p(q, ·)
    let apply = |x: &DMatrix<f64>| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), nq * js.len());
        for p in 0..x.nrows() {
            for q in 0..nq {
                let xs_q = x.view((p, q * ks.len()), (1, ks.len())).transpose();
                let r = &vb * xs_q * rule.weights[q];
                for a in 0..js.len() {
                    out[(p, q * js.len() + a)] = r[a];
                }
            }
        }
        out
    };
    let wx = apply(&xk);
    let wy = apply(&yk);
    // term1(p, r) = ⟨W_x(p), Y_j(r)⟩; term2(p, r) = ⟨W_y(r), X_j(p)⟩
    let t1 = &wx * yj.transpose();
    let t2 = &xj * wy.transpose();
    Ok((t1 + t2) * (0.5 * nf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthopoly::default_k;
    use crate::potential::Potential;
    use crate::skewkernel::{edge_to_native, kernel_k};

    #[test]
    fn gaussian_band_is_j_n() {
        let n = 40;
        let t = RecurrenceTable::build(&Potential::gaussian(), n, default_k(n, 1)).unwrap();
        let b = v_prime_matrix(&t, n..n + 1, n - 1..n).unwrap();
        assert!((b.get(n, n - 1) - t.j(n)).abs() < 1e-12);
        assert!((v_s_n(&t, 1).unwrap() - t.j(n)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_representation_matches_direct() {
        let n = 60;
        let t = RecurrenceTable::build(&Potential::gaussian(), n, default_k(n, 1)).unwrap();
        let xs: Vec<f64> = (0..7)
            .map(|i| edge_to_native(-2.0 + i as f64, 1.0, n))
            .collect();
        let direct = kernel_k(&t, &xs, &xs);
        let rep = kernel_k_via_vj(&t, 1, &xs, &xs).unwrap();
        let err = (&direct - &rep).amax() / direct.amax();
        assert!(err < 1e-6, "relative error {err}");
        assert_eq!(rep.clone(), rep.transpose());
    }
}
