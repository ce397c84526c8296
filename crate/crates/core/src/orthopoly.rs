//! Recurrence coefficients and weighted orthonormal functions
//! ψ_l = e^{−nV/2} p_l for the weight e^{−nV} on [−L, L].
//!
//! Coefficients come from a discretized Stieltjes procedure: Lanczos on the
//! diagonal matrix of Gauss–Legendre nodes, started from the square root of
//! the discrete weights, with two passes of full re-orthogonalization. The
//! weight is kept in the log domain (shifted by min V) so that e^{−nV} never
//! underflows before it is multiplied by the quadrature weight.

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quadrature::{gauss_legendre, QuadRule};
use nalgebra::DMatrix;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

/// Environment variable naming the recurrence cache directory.
pub const CACHE_ENV: &str = "RMT_EDGE_CACHE_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Precision {
    Double,
    /// Compensated (error-free transformation) dot products and updates.
    Compensated,
}

impl Precision {
    fn tag(self) -> u8 {
        match self {
            Precision::Double => 0,
            Precision::Compensated => 1,
        }
    }

    fn from_tag(t: u8) -> Result<Self> {
        match t {
            0 => Ok(Precision::Double),
            1 => Ok(Precision::Compensated),
            _ => Err(Error::Format(format!("unknown precision tag {t}"))),
        }
    }
}

/// How the recurrence was computed.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadInfo {
    pub nodes: usize,
    pub precision: Precision,
    /// Largest second-pass re-orthogonalization coefficient.
    pub orth_residual: f64,
    /// Largest |(xψ_k, ψ_k)| seen; the diagonal coefficients are stored as 0.
    pub max_diagonal: f64,
    /// max |ΔJ| between the final and the half-resolution rule.
    pub stability: f64,
}

#[derive(Clone, Debug)]
pub struct RecurrenceTable {
    n: usize,
    potential: Potential,
    /// j[k] = J_{k+1}, k = 0..K
    j: Vec<f64>,
    /// diagonal coefficients, all zero for even V
    q: Vec<f64>,
    vmin: f64,
    /// log ∫_{−L}^{L} e^{−n(V − vmin)}
    log_z: f64,
    quad: QuadInfo,
}

/// Default number of coefficients: n + ⌈2√n⌉ + 2m + 4.
pub fn default_k(n: usize, m: usize) -> usize {
    n + (2.0 * (n as f64).sqrt()).ceil() as usize + 2 * m + 4
}

impl RecurrenceTable {
    /// Coefficients J_1..J_K for the weight e^{−nV} on [−L, L].
    pub fn build(v: &Potential, n: usize, k: usize) -> Result<Self> {
        let start = if n >= 150 {
            Precision::Compensated
        } else {
            Precision::Double
        };
        match Self::build_with(v, n, k, start) {
            Err(Error::LossOfOrthogonality { .. }) if start == Precision::Double => {
                Self::build_with(v, n, k, Precision::Compensated)
            }
            other => other,
        }
    }

    pub fn build_with(v: &Potential, n: usize, k: usize, precision: Precision) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidPotential("n and K must be positive".into()));
        }
        let l = v.half_width();
        let mut nodes = 4 * k + 200;
        let mut prev: Option<(Vec<f64>, f64, f64, f64)> = None;
        for _ in 0..4 {
            let rule = gauss_legendre(nodes, -l, l);
            let (j, resid, maxd) = lanczos(v, n, &rule, k, precision)?;
            if let Some((pj, _, _, _)) = &prev {
                let change = pj
                    .iter()
                    .zip(&j)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if change <= 1e-12 {
                    let (vmin, log_z) = weight_normalization(v, n, &rule);
                    return Ok(Self {
                        n,
                        potential: v.clone(),
                        q: vec![0.0; k],
                        j,
                        vmin,
                        log_z,
                        quad: QuadInfo {
                            nodes,
                            precision,
                            orth_residual: resid,
                            max_diagonal: maxd,
                            stability: change,
                        },
                    });
                }
            }
            prev = Some((j, resid, maxd, 0.0));
            nodes *= 2;
        }
        Err(Error::NoConvergence {
            what: format!("recurrence coefficients for n = {n}, K = {k}"),
            change: f64::NAN,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of coefficients K.
    pub fn len(&self) -> usize {
        self.j.len()
    }

    pub fn is_empty(&self) -> bool {
        self.j.is_empty()
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn half_width(&self) -> f64 {
        self.potential.half_width()
    }

    pub fn quad(&self) -> &QuadInfo {
        &self.quad
    }

    /// J_k for k = 1..=K.
    pub fn j(&self, k: usize) -> f64 {
        assert!(
            k >= 1 && k <= self.j.len(),
            "J_{k} outside 1..={}",
            self.j.len()
        );
        self.j[k - 1]
    }

    pub fn j_coeffs(&self) -> &[f64] {
        &self.j
    }

    pub fn q_coeffs(&self) -> &[f64] {
        &self.q
    }

    /// log ψ_0(λ)
    fn log_psi0(&self, x: f64) -> f64 {
        -0.5 * self.n as f64 * (self.potential.value(x) - self.vmin) - 0.5 * self.log_z
    }

    /// ψ_0..ψ_{count−1} at λ (zero outside [−L, L]).
    pub fn eval_all(&self, x: f64, out: &mut [f64]) {
        self.eval_impl(x, out, None);
    }

    /// ψ_l and ψ′_l for l < count.
    pub fn eval_all_with_deriv(&self, x: f64, out: &mut [f64], deriv: &mut [f64]) {
        self.eval_impl(x, out, Some(deriv));
    }

    fn eval_impl(&self, x: f64, out: &mut [f64], mut deriv: Option<&mut [f64]>) {
        let count = out.len();
        assert!(
            count <= self.j.len() + 1,
            "ψ_{} requested, table has K = {}",
            count - 1,
            self.j.len()
        );
        let l = self.half_width();
        if !(x.abs() <= l) {
            out.fill(0.0);
            if let Some(d) = deriv {
                d.fill(0.0);
            }
            return;
        }
        // values are carried as mantissas with a common log offset
        let mut offset = self.log_psi0(x);
        let (mut p_prev, mut p_cur) = (0.0f64, 1.0f64);
        let (mut c_prev, mut c_cur) = (0.0f64, 0.0f64);
        let vp = 0.5 * self.n as f64 * self.potential.deriv(x);
        for idx in 0..count {
            let f = offset.exp();
            out[idx] = p_cur * f;
            if let Some(d) = deriv.as_deref_mut() {
                d[idx] = (c_cur - vp * p_cur) * f;
            }
            if idx + 1 == count {
                break;
            }
            let jn = self.j[idx];
            let jp = if idx == 0 { 0.0 } else { self.j[idx - 1] };
            let p_next = (x * p_cur - jp * p_prev) / jn;
            let c_next = (x * c_cur + p_cur - jp * c_prev) / jn;
            p_prev = p_cur;
            p_cur = p_next;
            c_prev = c_cur;
            c_cur = c_next;
            let big = p_cur.abs().max(c_cur.abs());
            if big > 1e100 {
                p_prev /= big;
                p_cur /= big;
                c_prev /= big;
                c_cur /= big;
                offset += big.ln();
            }
        }
    }

    /// ψ_l(λ).
    pub fn eval_psi(&self, l: usize, x: f64) -> f64 {
        let mut buf = vec![0.0; l + 1];
        self.eval_all(x, &mut buf);
        buf[l]
    }

    /// Matrix with entry (i, l) = ψ_l(points[i]), l < count.
    pub fn psi_matrix(&self, points: &[f64], count: usize) -> DMatrix<f64> {
        let rows: Vec<Vec<f64>> = points
            .par_iter()
            .map(|&x| {
                let mut buf = vec![0.0; count];
                self.eval_all(x, &mut buf);
                buf
            })
            .collect();
        DMatrix::from_fn(points.len(), count, |i, l| rows[i][l])
    }

    /// ψ and ψ′ matrices at the points, l < count.
    pub fn psi_matrix_with_deriv(
        &self,
        points: &[f64],
        count: usize,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let rows: Vec<(Vec<f64>, Vec<f64>)> = points
            .par_iter()
            .map(|&x| {
                let mut a = vec![0.0; count];
                let mut b = vec![0.0; count];
                self.eval_all_with_deriv(x, &mut a, &mut b);
                (a, b)
            })
            .collect();
        (
            DMatrix::from_fn(points.len(), count, |i, l| rows[i].0[l]),
            DMatrix::from_fn(points.len(), count, |i, l| rows[i].1[l]),
        )
    }

    /// Largest |ψ_k(±L)| for k ≤ up_to.
    pub fn boundary_magnitude(&self, up_to: usize) -> f64 {
        let l = self.half_width();
        let mut buf = vec![0.0; up_to + 1];
        self.eval_all(l, &mut buf);
        buf.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// Edge-scaled ψ_m: n^{−1/6} γ^{−1/4} ψ_m(2 + x/(γ n^{2/3})).
    pub fn edge_psi(&self, which: usize, gamma: f64, x: f64) -> f64 {
        let nf = self.n as f64;
        let lam = 2.0 + x / (gamma * nf.powf(2.0 / 3.0));
        nf.powf(-1.0 / 6.0) * gamma.powf(-0.25) * self.eval_psi(which, lam)
    }

    /// max over |k| ≤ 2√n of |J_{n+k} − 1 − k/(2nP(2))| · n²/(k² + n^{2/3}).
    pub fn verify_jacobi_asymptotics(&self, p_at_edge: f64) -> JacobiReport {
        let nf = self.n as f64;
        let r = (2.0 * nf.sqrt()).floor() as i64;
        let mut worst = 0.0f64;
        let mut at = 0;
        let mut rows = Vec::new();
        for k in -r..=r {
            let idx = self.n as i64 + k;
            if idx < 1 || idx as usize > self.j.len() {
                continue;
            }
            let jk = self.j(idx as usize);
            let kf = k as f64;
            let dev = jk - 1.0 - kf / (2.0 * nf * p_at_edge);
            let normalized = dev.abs() * nf * nf / (kf * kf + nf.powf(2.0 / 3.0));
            rows.push((k, jk, dev));
            if normalized > worst {
                worst = normalized;
                at = k;
            }
        }
        JacobiReport {
            n: self.n,
            constant: worst,
            worst_k: at,
            j_n_minus_one: self.j(self.n) - 1.0,
            rows,
        }
    }

    fn cache_key(v: &Potential, n: usize, k: usize) -> String {
        let mut h = Sha256::new();
        h.update(format!("{}|n={n}|K={k}", v.fingerprint()).as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Loads a cached table or builds and stores one. `dir = None` consults
    /// the `RMT_EDGE_CACHE_DIR` environment variable; without it no cache is used.
    pub fn load_or_build(v: &Potential, n: usize, k: usize, dir: Option<&Path>) -> Result<Self> {
        let dir: Option<PathBuf> = dir
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from));
        let Some(dir) = dir else {
            return Self::build(v, n, k);
        };
        let path = dir.join(format!("{}.rec", Self::cache_key(v, n, k)));
        if path.exists() {
            if let Ok(t) = Self::read_cache(&path, v) {
                return Ok(t);
            }
        }
        let t = Self::build(v, n, k)?;
        std::fs::create_dir_all(&dir)?;
        let tmp = path.with_extension("tmp");
        t.write_cache(&tmp)?;
        std::fs::rename(&tmp, &path)?;
        Ok(t)
    }

    const MAGIC: &'static [u8; 8] = b"RMTREC\0\x01";
    const VERSION: u32 = 1;

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(96 + 8 * self.j.len());
        buf.extend_from_slice(Self::MAGIC);
        buf.extend_from_slice(&Self::VERSION.to_le_bytes());
        buf.push(self.quad.precision.tag());
        let key = Self::cache_key(&self.potential, self.n, self.j.len());
        buf.extend_from_slice(key.as_bytes());
        buf.extend_from_slice(&(self.n as u64).to_le_bytes());
        buf.extend_from_slice(&(self.j.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.quad.nodes as u64).to_le_bytes());
        for x in [
            self.vmin,
            self.log_z,
            self.quad.orth_residual,
            self.quad.max_diagonal,
            self.quad.stability,
        ] {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        for x in &self.j {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn read_cache(path: &Path, v: &Potential) -> Result<Self> {
        let mut data = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut data)?;
        let mut r = ByteReader::new(&data);
        if r.take(8)? != Self::MAGIC {
            return Err(Error::Format("bad recurrence cache magic".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != Self::VERSION {
            return Err(Error::Format(format!(
                "unsupported cache version {version}"
            )));
        }
        let precision = Precision::from_tag(r.take(1)?[0])?;
        let key = String::from_utf8_lossy(r.take(64)?).into_owned();
        let n = r.u64()? as usize;
        let k = r.u64()? as usize;
        let nodes = r.u64()? as usize;
        if key != Self::cache_key(v, n, k) {
            return Err(Error::Format("recurrence cache key mismatch".into()));
        }
        let vmin = r.f64()?;
        let log_z = r.f64()?;
        let orth_residual = r.f64()?;
        let max_diagonal = r.f64()?;
        let stability = r.f64()?;
        let j = (0..k).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            potential: v.clone(),
            q: vec![0.0; k],
            j,
            vmin,
            log_z,
            quad: QuadInfo {
                nodes,
                precision,
                orth_residual,
                max_diagonal,
                stability,
            },
        })
    }
}

struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Format("truncated file".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[derive(Clone, Debug)]
pub struct JacobiReport {
    pub n: usize,
    /// max of the normalized deviation
    pub constant: f64,
    pub worst_k: i64,
    /// J_n − 1
    pub j_n_minus_one: f64,
    /// (k, J_{n+k}, J_{n+k} − 1 − k/(2nP(2)))
    pub rows: Vec<(i64, f64, f64)>,
}

fn weight_normalization(v: &Potential, n: usize, rule: &QuadRule) -> (f64, f64) {
    let vmin = rule
        .nodes
        .iter()
        .map(|&x| v.value(x))
        .fold(f64::INFINITY, f64::min)
        .min(v.value(0.0));
    let z: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * (-(n as f64) * (v.value(x) - vmin)).exp())
        .sum();
    (vmin, z.ln())
}

/// Lanczos on diag(nodes) with start vector √W. Returns (J_1..J_K, residual, max diagonal).
fn lanczos(
    v: &Potential,
    n: usize,
    rule: &QuadRule,
    k: usize,
    precision: Precision,
) -> Result<(Vec<f64>, f64, f64)> {
    let (vmin, _) = weight_normalization(v, n, rule);
    let big_n = rule.len();
    let sqrt_w: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| {
            (w.ln() - n as f64 * (v.value(x) - vmin))
                .mul_add(0.5, 0.0)
                .exp()
        })
        .collect();
    let norm0 = dot(&sqrt_w, &sqrt_w, precision).sqrt();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    basis.push(sqrt_w.iter().map(|x| x / norm0).collect());
    let mut j = Vec::with_capacity(k);
    let mut residual = 0.0f64;
    let mut max_diag = 0.0f64;
    for step in 0..k {
        let last = &basis[step];
        let mut r: Vec<f64> = last.iter().zip(&rule.nodes).map(|(q, x)| q * x).collect();
        for pass in 0..2 {
            let h: Vec<f64> = basis.par_iter().map(|b| dot(b, &r, precision)).collect();
            if pass == 0 {
                max_diag = max_diag.max(h[step].abs());
            } else {
                let hmax = h.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                residual = residual.max(hmax);
            }
            subtract_combination(&mut r, &basis, &h, precision);
        }
        let beta = dot(&r, &r, precision).sqrt();
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::LossOfOrthogonality {
                residual: f64::INFINITY,
            });
        }
        j.push(beta);
        if step + 1 < k {
            basis.push(r.iter().map(|x| x / beta).collect());
        }
        let _ = big_n;
    }
    if residual > 1e-6 {
        return Err(Error::LossOfOrthogonality { residual });
    }
    Ok((j, residual, max_diag))
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn dot(a: &[f64], b: &[f64], precision: Precision) -> f64 {
    match precision {
        Precision::Double => {
            // four interleaved partial sums keep the order fixed and help vectorization
            let mut acc = [0.0f64; 4];
            let chunks = a.len() / 4;
            for c in 0..chunks {
                for t in 0..4 {
                    acc[t] += a[4 * c + t] * b[4 * c + t];
                }
            }
            let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
            for i in 4 * chunks..a.len() {
                s += a[i] * b[i];
            }
            s
        }
        Precision::Compensated => {
            let (mut s, mut c) = (0.0, 0.0);
            for (x, y) in a.iter().zip(b) {
                let p = x * y;
                let pe = x.mul_add(*y, -p);
                let (t, e) = two_sum(s, p);
                s = t;
                c += e + pe;
            }
            s + c
        }
    }
}

fn subtract_combination(r: &mut [f64], basis: &[Vec<f64>], h: &[f64], precision: Precision) {
    const CHUNK: usize = 256;
    r.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
        let off = ci * CHUNK;
        match precision {
            Precision::Double => {
                for (b, &hk) in basis.iter().zip(h) {
                    for (i, ri) in chunk.iter_mut().enumerate() {
                        *ri -= hk * b[off + i];
                    }
                }
            }
            Precision::Compensated => {
                for (i, ri) in chunk.iter_mut().enumerate() {
                    let (mut s, mut c) = (*ri, 0.0);
                    for (b, &hk) in basis.iter().zip(h) {
                        let p = -hk * b[off + i];
                        let pe = (-hk).mul_add(b[off + i], -p);
                        let (t, e) = two_sum(s, p);
                        s = t;
                        c += e + pe;
                    }
                    *ri = s + c;
                }
            }
        }
    });
}
