//! Eigenvalue samples: dense Gaussian matrix models and a Metropolis
//! log-gas sampler for the joint density
//! ∝ Π e^{−nβV(λ_i)/2} Π_{i<j}|λ_i − λ_j|^β on [−L, L].

use crate::potential::Potential;
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"RMTSB\0\0\x01";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub n: usize,
    pub beta: u8,
    pub potential: String,
    pub seed: u64,
    /// each draw sorted ascending
    pub draws: Vec<Vec<f64>>,
    /// Metropolis acceptance rate after adaptation; None for direct sampling
    pub acceptance: Option<f64>,
}

fn check_beta(beta: u8) -> Result<()> {
    if beta == 1 || beta == 2 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("β = {beta} not in {{1, 2}}")))
    }
}

/// Independent stream `k` derived from `seed`.
fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k);
    r
}

/// Spectra of matrices with density ∝ exp(−nβ Tr M²/4): GOE (β = 1) has
/// diagonal variance 2/n and off-diagonal 1/n; GUE (β = 2) has diagonal
/// variance 1/n and complex off-diagonals with E|M_jk|² = 1/n.
pub fn sample_gaussian(n: usize, beta: u8, count: usize, seed: u64) -> Result<SampleBatch> {
    check_beta(beta)?;
    if n < 2 {
        return Err(Error::OutOfRange("n must be at least 2".into()));
    }
    let nf = n as f64;
    let draws: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k as u64);
            let mut ev = if beta == 1 {
                let off = Normal::new(0.0, (1.0 / nf).sqrt()).unwrap();
                let diag = Normal::new(0.0, (2.0 / nf).sqrt()).unwrap();
                let mut a = DMatrix::zeros(n, n);
                for i in 0..n {
                    a[(i, i)] = diag.sample(&mut rng);
                    for j in i + 1..n {
                        let v = off.sample(&mut rng);
                        a[(i, j)] = v;
                        a[(j, i)] = v;
                    }
                }
                SymmetricEigen::new(a).eigenvalues.as_slice().to_vec()
            } else {
                // Hermitian A + iB as the real symmetric [[A, −B], [B, A]];
                // every eigenvalue appears twice
                let half = Normal::new(0.0, (0.5 / nf).sqrt()).unwrap();
                let diag = Normal::new(0.0, (1.0 / nf).sqrt()).unwrap();
                let mut h = DMatrix::zeros(2 * n, 2 * n);
                for i in 0..n {
                    let d = diag.sample(&mut rng);
                    h[(i, i)] = d;
                    h[(n + i, n + i)] = d;
                    for j in i + 1..n {
                        let re = half.sample(&mut rng);
                        let im = half.sample(&mut rng);
                        for (r, c, v) in [
                            (i, j, re),
                            (j, i, re),
                            (n + i, n + j, re),
                            (n + j, n + i, re),
                            (n + i, j, im),
                            (j, n + i, im),
                            (i, n + j, -im),
                            (n + j, i, -im),
                        ] {
                            h[(r, c)] = v;
                        }
                    }
                }
                let mut all = SymmetricEigen::new(h).eigenvalues.as_slice().to_vec();
                all.sort_by(f64::total_cmp);
                all.into_iter().step_by(2).collect()
            };
            ev.sort_by(f64::total_cmp);
            ev
        })
        .collect();
    Ok(SampleBatch {
        n,
        beta,
        potential: "gaussian".into(),
        seed,
        draws,
        acceptance: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McmcConfig {
    /// sweeps (n proposals each) before recording; width adapts during these
    pub burn_in: usize,
    /// sweeps between recorded draws
    pub thin: usize,
    /// draws per chain
    pub draws: usize,
    pub chains: usize,
    pub target_acceptance: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            burn_in: 2000,
            thin: 20,
            draws: 1000,
            chains: 8,
            target_acceptance: 0.3,
        }
    }
}

/// Change of the log-density when coordinate i moves from `old` to `new`.
fn delta_log_density(v: &Potential, n: usize, beta: f64, lam: &[f64], i: usize, new: f64) -> f64 {
    let old = lam[i];
    let mut d = -0.5 * n as f64 * beta * (v.value(new) - v.value(old));
    let mut s = 0.0;
    for (j, &x) in lam.iter().enumerate() {
        if j != i {
            s += ((new - x).abs() / (old - x).abs()).ln();
        }
    }
    d += beta * s;
    d
}

struct ChainResult {
    draws: Vec<Vec<f64>>,
    accepted: u64,
    proposed: u64,
}

fn run_chain(
    v: &Potential,
    n: usize,
    beta: f64,
    cfg: &McmcConfig,
    mut rng: ChaCha8Rng,
) -> Result<ChainResult> {
    let l = v.half_width();
    // start from semicircle quantiles, slightly jittered
    let mut lam: Vec<f64> = (0..n)
        .map(|i| {
            let th = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            -2.0 * th.cos() * 0.95 + 1e-3 * rng.random::<f64>()
        })
        .collect();
    let mut width = 1.0 / n as f64;
    let sweep = |lam: &mut [f64], width: f64, rng: &mut ChaCha8Rng| -> Result<(u64, u64)> {
        let mut acc = 0u64;
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let z: f64 = StandardNormal.sample(rng);
            let new = lam[i] + width * z;
            if new.abs() > l {
                continue;
            }
            let d = delta_log_density(v, n, beta, lam, i, new);
            if d.is_nan() {
                return Err(Error::Format("NaN log-density".into()));
            }
            if d >= 0.0 || rng.random::<f64>() < d.exp() {
                lam[i] = new;
                acc += 1;
            }
        }
        Ok((acc, n as u64))
    };
    // adaptation: rescale the width every 50 sweeps toward the target rate
    let mut window = (0u64, 0u64);
    for k in 0..cfg.burn_in {
        let (a, p) = sweep(&mut lam, width, &mut rng)?;
        window.0 += a;
        window.1 += p;
        if (k + 1) % 50 == 0 {
            let rate = window.0 as f64 / window.1 as f64;
            width *= ((rate - cfg.target_acceptance) * 2.0).exp();
            window = (0, 0);
        }
    }
    let mut draws = Vec::with_capacity(cfg.draws);
    let (mut accepted, mut proposed) = (0u64, 0u64);
    for _ in 0..cfg.draws {
        for _ in 0..cfg.thin {
            let (a, p) = sweep(&mut lam, width, &mut rng)?;
            accepted += a;
            proposed += p;
        }
        let mut d = lam.clone();
        d.sort_by(f64::total_cmp);
        draws.push(d);
    }
    Ok(ChainResult {
        draws,
        accepted,
        proposed,
    })
}

/// Metropolis single-coordinate sampler with the proposal width adapted
/// during burn-in and frozen afterwards. Chains are merged by index.
pub fn mcmc_loggas(
    v: &Potential,
    n: usize,
    beta: u8,
    cfg: &McmcConfig,
    seed: u64,
) -> Result<SampleBatch> {
    check_beta(beta)?;
    if n < 2 {
        return Err(Error::OutOfRange("n must be at least 2".into()));
    }
    let results: Vec<ChainResult> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| run_chain(v, n, beta as f64, cfg, stream(seed, c as u64)))
        .collect::<Result<_>>()?;
    let accepted: u64 = results.iter().map(|r| r.accepted).sum();
    let proposed: u64 = results.iter().map(|r| r.proposed).sum();
    let rate = accepted as f64 / proposed.max(1) as f64;
    if !(0.05..=0.95).contains(&rate) {
        eprintln!("warning: Metropolis acceptance {rate:.3} outside [0.05, 0.95]");
    }
    Ok(SampleBatch {
        n,
        beta,
        potential: v.name().to_string(),
        seed,
        draws: results.into_iter().flat_map(|r| r.draws).collect(),
        acceptance: Some(rate),
    })
}

/// Empirical CDF of the scaled maximum t = γn^{2/3}(λ_max − 2).
#[derive(Clone, Debug)]
pub struct EdgeStatistics {
    /// sorted scaled maxima
    pub scaled_max: Vec<f64>,
}

impl EdgeStatistics {
    pub fn new(b: &SampleBatch, gamma: f64) -> Self {
        let c = gamma * (b.n as f64).powf(2.0 / 3.0);
        let mut scaled_max: Vec<f64> = b
            .draws
            .iter()
            .map(|d| c * (d.last().copied().unwrap_or(f64::NAN) - 2.0))
            .collect();
        scaled_max.sort_by(f64::total_cmp);
        Self { scaled_max }
    }

    /// Fraction of draws with t ≤ s; equals the empirical gap probability of (2 + s/(γn^{2/3}), ∞).
    pub fn cdf(&self, s: f64) -> f64 {
        let k = self.scaled_max.partition_point(|&t| t <= s);
        k as f64 / self.scaled_max.len() as f64
    }

    pub fn on_grid(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&s| self.cdf(s)).collect()
    }

    pub fn mean(&self) -> f64 {
        self.scaled_max.iter().sum::<f64>() / self.scaled_max.len() as f64
    }
}

pub fn edge_statistics(b: &SampleBatch, gamma: f64) -> EdgeStatistics {
    EdgeStatistics::new(b, gamma)
}

/// Kolmogorov–Smirnov distance sup|F_emp − F| for sorted samples and a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

/// KS distance against a CDF known on an increasing grid (linear interpolation,
/// 0 below and 1 above the grid).
pub fn ks_against_table(sorted: &[f64], grid: &[f64], values: &[f64]) -> f64 {
    ks_statistic(sorted, |x| interpolate(grid, values, x))
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    if x <= grid[0] {
        return if x < grid[0] { 0.0 } else { values[0] };
    }
    if x >= grid[grid.len() - 1] {
        return 1.0;
    }
    let k = grid.partition_point(|&g| g <= x);
    let (x0, x1) = (grid[k - 1], grid[k]);
    let t = (x - x0) / (x1 - x0);
    values[k - 1] * (1.0 - t) + values[k] * t
}

pub fn write_batch(b: &SampleBatch, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(b.n as u64).to_le_bytes());
    buf.push(b.beta);
    buf.extend_from_slice(&(b.draws.len() as u64).to_le_bytes());
    buf.extend_from_slice(&b.seed.to_le_bytes());
    buf.extend_from_slice(&b.acceptance.unwrap_or(f64::NAN).to_le_bytes());
    let name = b.potential.as_bytes();
    buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
    buf.extend_from_slice(name);
    for d in &b.draws {
        for x in d {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_batch(path: &Path) -> Result<SampleBatch> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a sample batch file".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != VERSION {
        return Err(Error::Format("unsupported sample batch version".into()));
    }
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut beta = [0u8; 1];
    r.read_exact(&mut beta)?;
    r.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let acc = f64::from_le_bytes(b8);
    r.read_exact(&mut b4)?;
    let mut name = vec![0u8; u32::from_le_bytes(b4) as usize];
    r.read_exact(&mut name)?;
    let mut payload = vec![0u8; 8 * n * count];
    r.read_exact(&mut payload)?;
    let vals: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(SampleBatch {
        n,
        beta: beta[0],
        potential: String::from_utf8(name).map_err(|e| Error::Format(e.to_string()))?,
        seed,
        draws: vals.chunks(n.max(1)).map(|c| c.to_vec()).collect(),
        acceptance: if acc.is_nan() { None } else { Some(acc) },
    })
}

/// One row per draw: draw index followed by the sorted eigenvalues.
pub fn write_batch_csv(b: &SampleBatch, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "draw")?;
    for i in 0..b.n {
        write!(out, ",lambda{i}")?;
    }
    writeln!(out)?;
    for (k, d) in b.draws.iter().enumerate() {
        write!(out, "{k}")?;
        for x in d {
            write!(out, ",{x:e}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
