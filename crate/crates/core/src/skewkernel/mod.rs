//! β = 1 kernels: skew moments M = n(ψ_j, εψ_l), the scalar kernels
//! K_n, S_n, D_n, I_n and their edge-scaled versions.
//!
//! With Ψ_x = (ψ_l(x_i)) and E_y = (εψ_l(y_j)), l < n:
//! K = Ψ_x Ψ_yᵀ, S = −n Ψ_x M⁻¹ E_yᵀ, D = −∂_μ S = n Ψ_x M⁻¹ Ψ_yᵀ and
//! I = ε_λ S = −n E_x M⁻¹ E_yᵀ.

mod epsilon;
mod export;
mod repr;

pub use epsilon::{epsilon_apply, EpsilonBasis};
pub use export::{read_bundle, write_bundle, write_bundle_csv};
pub use repr::{kernel_k_via_vj, v_prime_matrix, v_s_n, VPrimeBlock};

use crate::orthopoly::RecurrenceTable;
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Condition estimate above which M is rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct SkewMoments {
    pub n: usize,
    pub m: DMatrix<f64>,
    pub minv: DMatrix<f64>,
    /// ‖M‖₁‖M⁻¹‖₁
    pub condition: f64,
    /// largest |M_{jl}| with j + l even before those entries were zeroed
    pub checkerboard_residual: f64,
    /// max |M⁻¹M − I|
    pub identity_residual: f64,
}

/// Assembles M from the upper triangle and reflects it, so skew-symmetry is exact.
pub fn build_moments(basis: &EpsilonBasis) -> Result<SkewMoments> {
    let n = basis.table().n();
    if n % 2 == 1 {
        return Err(Error::OddSize(n));
    }
    assert!(basis.count() >= n, "basis must hold ψ_0..ψ_(n−1)");
    let psi = basis.psi_nodes().columns(0, n).into_owned();
    let eps = basis.eps_nodes().columns(0, n).into_owned();
    let mut wpsi = psi;
    for (i, w) in basis.weights().iter().enumerate() {
        wpsi.row_mut(i).scale_mut(*w);
    }
    let raw = wpsi.transpose() * eps * n as f64;
    let mut m = DMatrix::zeros(n, n);
    let mut checker = 0.0f64;
    for j in 0..n {
        for l in j + 1..n {
            if (j + l) % 2 == 0 {
                checker = checker.max(raw[(j, l)].abs());
                continue;
            }
            m[(j, l)] = raw[(j, l)];
            m[(l, j)] = -raw[(j, l)];
        }
        checker = checker.max(raw[(j, j)].abs());
    }
    let minv = m.clone().lu().try_inverse().ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
    })?;
    let condition = norm1(&m) * norm1(&minv);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let identity_residual = (&minv * &m - DMatrix::<f64>::identity(n, n)).amax();
    Ok(SkewMoments {
        n,
        m,
        minv,
        condition,
        checkerboard_residual: checker,
        identity_residual,
    })
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scale {
    Native,
    Edge { gamma: f64, n: usize },
}

/// Kernel values on a tensor grid. `grid_x`/`grid_y` are in the coordinates
/// of `scale`: λ for native bundles, x with λ = 2 + x/(γn^{2/3}) for edge ones.
#[derive(Clone, Debug)]
pub struct KernelBundle {
    pub grid_x: Vec<f64>,
    pub grid_y: Vec<f64>,
    pub k: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub i: DMatrix<f64>,
    pub scale: Scale,
}

impl KernelBundle {
    /// Multiplies S, K by (γn^{2/3})⁻¹, D by (γn^{2/3})⁻² and maps the grids to x.
    pub fn scale_edge(mut self, gamma: f64, n: usize) -> Result<Self> {
        if self.scale != Scale::Native {
            return Err(Error::AlreadyScaled);
        }
        let c = gamma * (n as f64).powf(2.0 / 3.0);
        self.k /= c;
        self.s /= c;
        self.d /= c * c;
        for x in self.grid_x.iter_mut().chain(self.grid_y.iter_mut()) {
            *x = (*x - 2.0) * c;
        }
        self.scale = Scale::Edge { gamma, n };
        Ok(self)
    }

    /// ε(x − y) = sign(x − y)/2 on the grid, the remaining term of the 2×2 kernel.
    pub fn epsilon_term(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.grid_x.len(), self.grid_y.len(), |i, j| {
            crate::airy::epsilon(self.grid_x[i] - self.grid_y[j])
        })
    }
}

/// λ = 2 + x/(γn^{2/3}).
pub fn edge_to_native(x: f64, gamma: f64, n: usize) -> f64 {
    2.0 + x / (gamma * (n as f64).powf(2.0 / 3.0))
}

/// K_n(λ, μ) = Σ_{l<n} ψ_l(λ)ψ_l(μ).
pub fn kernel_k(t: &RecurrenceTable, xs: &[f64], ys: &[f64]) -> DMatrix<f64> {
    let px = t.psi_matrix(xs, t.n());
    let py = t.psi_matrix(ys, t.n());
    px * py.transpose()
}

/// Native-scale K, S, D, I on xs × ys.
pub fn kernel_s(basis: &EpsilonBasis, mom: &SkewMoments, xs: &[f64], ys: &[f64]) -> KernelBundle {
    let n = mom.n;
    let t = basis.table();
    let px = t.psi_matrix(xs, n);
    let py = t.psi_matrix(ys, n);
    let ex = basis.eps_values(xs).columns(0, n).into_owned();
    let ey = basis.eps_values(ys).columns(0, n).into_owned();
    let nf = n as f64;
    let pm = &px * &mom.minv;
    let em = &ex * &mom.minv;
    KernelBundle {
        grid_x: xs.to_vec(),
        grid_y: ys.to_vec(),
        k: &px * py.transpose(),
        s: &pm * ey.transpose() * (-nf),
        d: &pm * py.transpose() * nf,
        i: &em * ey.transpose() * (-nf),
        scale: Scale::Native,
    }
}

/// Edge-scaled bundle on edge coordinates xs × ys.
pub fn edge_bundle(
    basis: &EpsilonBasis,
    mom: &SkewMoments,
    gamma: f64,
    xs: &[f64],
    ys: &[f64],
) -> KernelBundle {
    let n = mom.n;
    let lx: Vec<f64> = xs.iter().map(|&x| edge_to_native(x, gamma, n)).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| edge_to_native(y, gamma, n)).collect();
    let mut b = kernel_s(basis, mom, &lx, &ly)
        .scale_edge(gamma, n)
        .expect("fresh bundle is native");
    // avoid round-off in the mapped-back grid
    b.grid_x = xs.to_vec();
    b.grid_y = ys.to_vec();
    b
}

/// Edge-scaled ψ_l(x) and εψ_l(y) as they enter the leading term of S_n − K_n.
#[derive(Clone, Debug)]
pub struct EdgeFunctions {
    /// n^{−1/6}γ^{−1/4}ψ_{n−1}(λ(x))
    pub psi: Vec<f64>,
    /// n^{−1/6}γ^{−1/4}ψ_n(λ(y))
    pub phi: Vec<f64>,
    /// εφ_n(y) = γ^{3/4}n^{1/2}εψ_n(λ(y))
    pub eps_phi: Vec<f64>,
}

pub fn edge_functions(basis: &EpsilonBasis, gamma: f64, xs: &[f64], ys: &[f64]) -> EdgeFunctions {
    let t = basis.table();
    let n = t.n();
    assert!(basis.count() > n, "basis must hold ψ_n");
    let nf = n as f64;
    let c = nf.powf(-1.0 / 6.0) * gamma.powf(-0.25);
    let lx: Vec<f64> = xs.iter().map(|&x| edge_to_native(x, gamma, n)).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| edge_to_native(y, gamma, n)).collect();
    let px = t.psi_matrix(&lx, n + 1);
    let py = t.psi_matrix(&ly, n + 1);
    let ey = basis.eps_values(&ly);
    EdgeFunctions {
        psi: (0..xs.len()).map(|i| c * px[(i, n - 1)]).collect(),
        phi: (0..ys.len()).map(|i| c * py[(i, n)]).collect(),
        eps_phi: (0..ys.len())
            .map(|i| gamma.powf(0.75) * nf.sqrt() * ey[(i, n)])
            .collect(),
    }
}

/// Sup-grid sizes of the remainders in
/// 𝒮_n = 𝒦_n + ½ψ_n(x)εφ_n(y) + r and 𝒟_n = −∂_y𝒦_n − ½ψ_n(x)φ_n(y) + r′.
#[derive(Clone, Debug)]
pub struct LemmaReport {
    pub n: usize,
    pub s_remainder: f64,
    pub d_remainder: f64,
    /// s_remainder / (n^{−1/3} log⁶ n)
    pub normalized: f64,
}

pub fn lemma_decomposition(
    basis: &EpsilonBasis,
    mom: &SkewMoments,
    gamma: f64,
    xs: &[f64],
    ys: &[f64],
) -> LemmaReport {
    let n = mom.n;
    let nf = n as f64;
    let b = edge_bundle(basis, mom, gamma, xs, ys);
    let f = edge_functions(basis, gamma, xs, ys);
    let t = basis.table();
    let c = gamma * nf.powf(2.0 / 3.0);
    let lx: Vec<f64> = xs.iter().map(|&x| edge_to_native(x, gamma, n)).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| edge_to_native(y, gamma, n)).collect();
    let px = t.psi_matrix(&lx, n);
    let (_, dpy) = t.psi_matrix_with_deriv(&ly, n);
    // ∂_y𝒦_n = (γn^{2/3})⁻² ∂_μK_n
    let dk = px * dpy.transpose() / (c * c);
    let mut rs = 0.0f64;
    let mut rd = 0.0f64;
    for i in 0..xs.len() {
        for j in 0..ys.len() {
            rs = rs.max((b.s[(i, j)] - b.k[(i, j)] - 0.5 * f.psi[i] * f.eps_phi[j]).abs());
            rd = rd.max((b.d[(i, j)] + dk[(i, j)] + 0.5 * f.psi[i] * f.phi[j]).abs());
        }
    }
    LemmaReport {
        n,
        s_remainder: rs,
        d_remainder: rd,
        normalized: rs / (nf.powf(-1.0 / 3.0) * nf.ln().powi(6)),
    }
}
