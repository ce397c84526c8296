//! Toeplitz description of M⁻¹: symbols P(2cos y) and 1/P(2cos y), the
//! finite sections, and the approximation M⁻¹ ≈ 𝒬 + ½abᵀ.

use crate::orthopoly::RecurrenceTable;
use crate::potential::{EquilibriumData, Potential};
use crate::skewkernel::v_prime_matrix;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct ToeplitzPack {
    pub n: usize,
    pub m: usize,
    /// P_d, d = 0..=2m−2
    pub p_band: Vec<f64>,
    /// R_d, d = 0..=n
    pub r: Vec<f64>,
    /// (ℛ^{(0,n)})⁻¹
    pub rinv_section: DMatrix<f64>,
    /// D_{jk} = δ_{j+1,k} − δ_{j−1,k}
    pub d: DMatrix<f64>,
    /// a = (ℛ^{(0,n)})⁻¹e_{n−1}
    pub a: DVector<f64>,
    /// b = (ℛ^{(0,n)})⁻¹r*, r*_{n−i} = R_i
    pub b: DVector<f64>,
    /// largest |(ℛ^{(0,n)})⁻¹_{jk}| with |j − k| > 2m − 2
    pub band_residual: f64,
    /// fitted c in |R_d| ≤ e^{−c d}; infinite when R is diagonal
    pub decay: f64,
}

/// Cosine coefficients c_k of f(y) = Σ c_k cos ky (c_0 the mean), refined by
/// doubling until the upper half is below 1e-14.
fn cosine_series<F: Fn(f64) -> f64>(f: F) -> Vec<f64> {
    let mut m = 32;
    loop {
        let vals: Vec<(f64, f64)> = (0..m)
            .map(|j| {
                let y = PI * (j as f64 + 0.5) / m as f64;
                (y, f(y))
            })
            .collect();
        let mut c: Vec<f64> = (0..m)
            .map(|k| {
                2.0 / m as f64
                    * vals
                        .iter()
                        .map(|(y, v)| v * (k as f64 * y).cos())
                        .sum::<f64>()
            })
            .collect();
        c[0] *= 0.5;
        let scale = c[0].abs().max(1.0);
        let tail = c[m / 2..].iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if tail <= 1e-14 * scale || m >= 1 << 14 {
            return c;
        }
        m *= 2;
    }
}

pub fn build_toeplitz(eq: &EquilibriumData, n: usize, m: usize) -> Result<ToeplitzPack> {
    if m == 0 {
        return Err(Error::OutOfRange("m must be positive".into()));
    }
    if eq.rho_min <= 0.0 {
        return Err(Error::ConditionViolation(format!(
            "P must be positive on [−2, 2], min {:e}",
            eq.rho_min
        )));
    }
    let bw = 2 * m - 2;
    let p_band: Vec<f64> = (0..=bw).map(|d| eq.fourier(d)).collect();
    let symbol = |y: f64| {
        p_band[0]
            + 2.0
                * (1..=bw)
                    .map(|d| p_band[d] * (d as f64 * y).cos())
                    .sum::<f64>()
    };
    if (0..512).any(|j| symbol(PI * j as f64 / 511.0) <= 0.0) {
        return Err(Error::ConditionViolation(
            "truncated symbol P_m(2cos y) is not positive".into(),
        ));
    }
    let inv = cosine_series(|y| 1.0 / symbol(y));
    let r: Vec<f64> = (0..=n)
        .map(|d| match d {
            0 => inv[0],
            _ => 0.5 * inv.get(d).copied().unwrap_or(0.0),
        })
        .collect();
    let rsec = DMatrix::from_fn(n, n, |j, k| r[j.abs_diff(k)]);
    let rinv = rsec.lu().try_inverse().ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
    })?;
    let d = DMatrix::from_fn(n, n, |j, k| {
        if k == j + 1 {
            1.0
        } else if k + 1 == j {
            -1.0
        } else {
            0.0
        }
    });
    let a = rinv.column(n - 1).into_owned();
    let rstar = DVector::from_fn(n, |k, _| r[n - k]);
    let b = &rinv * rstar;
    let mut band_residual = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            if j.abs_diff(k) > bw {
                band_residual = band_residual.max(rinv[(j, k)].abs());
            }
        }
    }
    Ok(ToeplitzPack {
        n,
        m,
        p_band,
        decay: fit_decay(&r),
        r,
        rinv_section: rinv,
        d,
        a,
        b,
        band_residual,
    })
}

/// Least-squares slope of −log|R_d| over d ≥ 1 with |R_d| above round-off.
fn fit_decay(r: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = r
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, v)| v.abs() > 1e-13 * r[0].abs())
        .map(|(d, v)| (d as f64, -v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

impl ToeplitzPack {
    /// max over |d| ≤ 4m of |Σ_e P_e R_{d−e} − δ_{d0}|.
    pub fn convolution_residual(&self) -> f64 {
        let bw = self.p_band.len() as i64 - 1;
        let rr = |d: i64| {
            self.r
                .get(d.unsigned_abs() as usize)
                .copied()
                .unwrap_or(0.0)
        };
        let pp = |e: i64| self.p_band[e.unsigned_abs() as usize];
        (0..=4 * self.m as i64)
            .map(|d| {
                let s: f64 = (-bw..=bw).map(|e| pp(e) * rr(d - e)).sum();
                (s - if d == 0 { 1.0 } else { 0.0 }).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// 𝒱_{jl} = sign(l − j)(ψ_j, V′ψ_l), j, l < n, assembled from the upper triangle.
pub fn build_cal_v(t: &RecurrenceTable) -> Result<DMatrix<f64>> {
    let n = t.n();
    let g = v_prime_matrix(t, 0..n, 0..n)?.values;
    Ok(DMatrix::from_fn(n, n, |j, l| match l.cmp(&j) {
        std::cmp::Ordering::Greater => g[(j, l)],
        std::cmp::Ordering::Less => -g[(l, j)],
        std::cmp::Ordering::Equal => 0.0,
    }))
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub n: usize,
    pub m: usize,
    pub matrix: DMatrix<f64>,
    /// max-entry deviation from the direct inverse
    pub residual: f64,
    /// max |X + Xᵀ| of the assembled matrix
    pub skew_residual: f64,
    /// residual / (n^{−1/2} log⁶ n)
    pub normalized: f64,
}

/// 𝒬 + ½abᵀ, with 𝒬 = ½𝒱 on rows j ≤ n − 2m and ½(ℛ^{(0,n)})⁻¹𝒟 on the last 2m − 1 rows.
pub fn reconstruct_minv(
    pack: &ToeplitzPack,
    cal_v: &DMatrix<f64>,
    direct: &DMatrix<f64>,
) -> Reconstruction {
    let n = pack.n;
    let m = pack.m;
    let rd = &pack.rinv_section * &pack.d;
    let split = n.saturating_sub(2 * m);
    let x = DMatrix::from_fn(n, n, |j, k| {
        let q = if j <= split {
            cal_v[(j, k)]
        } else {
            rd[(j, k)]
        };
        0.5 * q + 0.5 * pack.a[j] * pack.b[k]
    });
    let residual = (&x - direct).amax();
    let skew_residual = (&x + x.transpose()).amax();
    let nf = n as f64;
    Reconstruction {
        n,
        m,
        normalized: residual / (nf.powf(-0.5) * nf.ln().powi(6)),
        matrix: x,
        residual,
        skew_residual,
    }
}

#[derive(Clone, Debug)]
pub struct ScalarIdentity {
    /// (a,u)(b,u)
    pub lhs: f64,
    /// ((ℛ^{(0,n)})⁻¹e_{n−1}, u) − P(2)
    pub rhs: f64,
    /// max |𝒟u − (−e_{n−1} + e_{n−2m} + e_{n−2m−1})|
    pub du_residual: f64,
    /// (𝒫(e_{n−2m} + e_{n−2m−1}), u), to be compared with P(2)
    pub p_u: f64,
    pub p2: f64,
    /// n^{−1/2}m² log n
    pub scale: f64,
}

pub fn scalar_identity_check(pack: &ToeplitzPack, p2: f64) -> ScalarIdentity {
    let n = pack.n;
    let m = pack.m;
    assert!(n > 2 * m, "need n > 2m");
    let u = DVector::from_fn(n, |i, _| if i >= n - 2 * m { 1.0 } else { 0.0 });
    let lhs = pack.a.dot(&u) * pack.b.dot(&u);
    let rhs = pack.a.dot(&u) - p2;
    let mut expect = DVector::zeros(n);
    expect[n - 1] -= 1.0;
    expect[n - 2 * m] += 1.0;
    expect[n - 2 * m - 1] += 1.0;
    let du_residual = (&pack.d * &u - expect).amax();
    // 𝒫 acting on the full line; its band never reaches past the section here
    let bw = pack.p_band.len() - 1;
    let mut p_u = 0.0;
    for e in [n - 2 * m, n - 2 * m - 1] {
        for i in n - 2 * m..n {
            let d = i.abs_diff(e);
            if d <= bw {
                p_u += pack.p_band[d];
            }
        }
    }
    let nf = n as f64;
    ScalarIdentity {
        lhs,
        rhs,
        du_residual,
        p_u,
        p2,
        scale: nf.powf(-0.5) * (m * m) as f64 * nf.ln(),
    }
}

#[derive(Clone, Debug)]
pub struct VIdentity {
    /// V′_k = (1/2π)∫V′(2cos x)e^{ikx}dx, k ≥ 1
    pub coeffs: Vec<f64>,
    /// sup over a grid of |Σ V′_k sin kx − sin x P(2cos x)|
    pub max_error: f64,
    /// Σ k V′_k = d𝒱/dx at 0
    pub derivative_at_zero: f64,
    pub p2: f64,
}

pub fn fourier_v_identity(eq: &EquilibriumData, v: &Potential) -> VIdentity {
    let c = cosine_series(|x| v.deriv(2.0 * x.cos()));
    let coeffs: Vec<f64> = c.iter().skip(1).map(|x| 0.5 * x).collect();
    let cal_v = |x: f64| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, vk)| vk * ((k + 1) as f64 * x).sin())
            .sum::<f64>()
    };
    let max_error = (0..=400)
        .map(|i| {
            let x = PI * i as f64 / 400.0;
            (cal_v(x) - x.sin() * eq.p(2.0 * x.cos())).abs()
        })
        .fold(0.0, f64::max);
    let derivative_at_zero = coeffs
        .iter()
        .enumerate()
        .map(|(k, vk)| (k + 1) as f64 * vk)
        .sum();
    VIdentity {
        coeffs,
        max_error,
        derivative_at_zero,
        p2: eq.p_at_edge,
    }
}
