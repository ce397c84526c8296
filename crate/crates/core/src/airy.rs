//! Airy function Ai, its derivative and tail integral ∫_x^∞ Ai on [−40, 40],
//! the Airy kernel Q_Ai and the entries of the 2×2 GOE edge kernel.
//!
//! On [−9, 9] values come from a table of anchors spaced 0.5 apart and a
//! single Taylor step of the Airy equation. Anchors on [−3, 3] use the
//! Maclaurin series; anchors on (3, 9] are produced by stepping backward
//! from the large-x asymptotic value at 9 (the recessive direction), and
//! anchors on [−9, −3) by stepping forward from −3. Outside [−9, 9] the
//! standard asymptotic expansions are used.

use crate::error::{Error, Result};
use crate::quadrature::composite_gauss_legendre;
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Ai(0)
pub const AI0: f64 = 0.355_028_053_887_817_24;
/// Ai′(0)
pub const AIP0: f64 = -0.258_819_403_792_806_8;

const X_MAX: f64 = 40.0;
const ANCHOR_STEP: f64 = 0.5;
const INNER: f64 = 9.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AiryEval {
    pub x: f64,
    pub ai: f64,
    pub ai_prime: f64,
    /// ∫_x^∞ Ai(z) dz
    pub tail: f64,
}

/// Ai(x), Ai′(x) and ∫_x^∞ Ai for x ∈ [−40, 40].
pub fn airy_eval(x: f64) -> Result<AiryEval> {
    if !(-X_MAX..=X_MAX).contains(&x) {
        return Err(Error::OutOfRange(format!(
            "Airy argument {x} outside [−40, 40]"
        )));
    }
    Ok(airy_unchecked(x))
}

pub fn ai(x: f64) -> Result<f64> {
    airy_eval(x).map(|e| e.ai)
}

fn airy_unchecked(x: f64) -> AiryEval {
    if x > INNER {
        let (ai, ai_prime) = asymptotic_positive(x);
        AiryEval {
            x,
            ai,
            ai_prime,
            tail: tail_positive(x, ai, ai_prime),
        }
    } else if x < -INNER {
        let (ai, ai_prime) = asymptotic_negative(-x);
        AiryEval {
            x,
            ai,
            ai_prime,
            tail: tail_negative(x),
        }
    } else {
        let table = anchors();
        let idx = ((x + INNER) / ANCHOR_STEP).round() as usize;
        let a = table[idx.min(table.len() - 1)];
        let (ai, ai_prime, tail) = taylor_step(a.x, a.ai, a.ai_prime, a.tail, x - a.x);
        AiryEval {
            x,
            ai,
            ai_prime,
            tail,
        }
    }
}

/// Taylor coefficients of Ai about x0 from (Ai(x0), Ai′(x0)).
fn taylor_coeffs(x0: f64, y: f64, yp: f64, count: usize) -> Vec<f64> {
    let mut a = vec![0.0; count.max(3)];
    a[0] = y;
    a[1] = yp;
    a[2] = 0.5 * x0 * y;
    for k in 1..count.saturating_sub(2) {
        a[k + 2] = (x0 * a[k] + a[k - 1]) / ((k + 1) * (k + 2)) as f64;
    }
    a
}

/// One Taylor step of y″ = x y together with A′ = −y.
fn taylor_step(x0: f64, y: f64, yp: f64, tail: f64, h: f64) -> (f64, f64, f64) {
    let a = taylor_coeffs(x0, y, yp, 64);
    let (mut s, mut sp, mut st) = (0.0, 0.0, 0.0);
    let mut hk = 1.0;
    let scale = y.abs().max(yp.abs()).max(1e-300);
    for (k, &ak) in a.iter().enumerate() {
        let term = ak * hk;
        s += term;
        st += term * h / (k + 1) as f64;
        if k + 1 < a.len() {
            sp += (k + 1) as f64 * a[k + 1] * hk;
        }
        if k > 8
            && (ak * hk).abs() < 1e-18 * scale
            && (a[k.saturating_sub(1)] * hk).abs() < 1e-18 * scale
        {
            break;
        }
        hk *= h;
    }
    (s, sp, tail - st)
}

fn maclaurin(x: f64) -> (f64, f64, f64) {
    taylor_step(0.0, AI0, AIP0, 1.0 / 3.0, x)
}

fn anchors() -> &'static [AiryEval] {
    static TABLE: OnceLock<Vec<AiryEval>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let count = (2.0 * INNER / ANCHOR_STEP).round() as usize + 1;
        let at = |i: usize| -INNER + i as f64 * ANCHOR_STEP;
        let mut t = vec![
            AiryEval {
                x: 0.0,
                ai: 0.0,
                ai_prime: 0.0,
                tail: 0.0
            };
            count
        ];
        for (i, slot) in t.iter_mut().enumerate() {
            let x = at(i);
            if x.abs() <= 3.0 {
                let (ai, ai_prime, tail) = maclaurin(x);
                *slot = AiryEval {
                    x,
                    ai,
                    ai_prime,
                    tail,
                };
            }
        }
        // (3, 9]: backward from the asymptotic value at 9
        let (ai9, aip9) = asymptotic_positive(INNER);
        let mut cur = AiryEval {
            x: INNER,
            ai: ai9,
            ai_prime: aip9,
            tail: tail_positive(INNER, ai9, aip9),
        };
        t[count - 1] = cur;
        for i in (0..count - 1).rev() {
            let x = at(i);
            if x <= 3.0 {
                break;
            }
            cur = fine_steps(cur, x);
            t[i] = cur;
        }
        // [−9, −3): forward from −3
        let i3 = ((INNER - 3.0) / ANCHOR_STEP).round() as usize;
        let mut cur = t[i3];
        for i in (0..i3).rev() {
            cur = fine_steps(cur, at(i));
            t[i] = cur;
        }
        t
    })
}

fn fine_steps(from: AiryEval, to: f64) -> AiryEval {
    let n = 4;
    let h = (to - from.x) / n as f64;
    let mut cur = from;
    for k in 1..=n {
        let x1 = if k == n { to } else { from.x + k as f64 * h };
        let (ai, ai_prime, tail) = taylor_step(cur.x, cur.ai, cur.ai_prime, cur.tail, x1 - cur.x);
        cur = AiryEval {
            x: x1,
            ai,
            ai_prime,
            tail,
        };
    }
    cur
}

/// u_k and v_k of the Airy asymptotic expansions.
fn uv_coeffs() -> &'static ([f64; 40], [f64; 40]) {
    static UV: OnceLock<([f64; 40], [f64; 40])> = OnceLock::new();
    UV.get_or_init(|| {
        let mut u = [0.0; 40];
        let mut v = [0.0; 40];
        u[0] = 1.0;
        v[0] = 1.0;
        for k in 1..40 {
            let kf = k as f64;
            u[k] = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
                / ((2.0 * kf - 1.0) * 216.0 * kf);
            v[k] = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u[k];
        }
        (u, v)
    })
}

/// Σ (−1)^k c_k / ζ^k over indices `start, start+step, ...`, stopping at the smallest term.
fn alternating_sum(c: &[f64], zeta: f64, start: usize, step: usize) -> f64 {
    let mut s = 0.0;
    let mut prev = f64::INFINITY;
    let mut sign = 1.0;
    let mut k = start;
    while k < c.len() {
        let term = c[k] / zeta.powi(k as i32);
        if term.abs() > prev {
            break;
        }
        s += sign * term;
        if term.abs() < 1e-18 * s.abs() {
            break;
        }
        prev = term.abs();
        sign = -sign;
        k += step;
    }
    s
}

fn asymptotic_positive(x: f64) -> (f64, f64) {
    let (u, v) = uv_coeffs();
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let q = x.sqrt().sqrt();
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    let su: f64 = alternating_series(u, zeta);
    let sv: f64 = alternating_series(v, zeta);
    (e / q * su, -e * q * sv)
}

fn alternating_series(c: &[f64], zeta: f64) -> f64 {
    let mut s = 0.0;
    let mut prev = f64::INFINITY;
    for (k, &ck) in c.iter().enumerate() {
        let term = ck / zeta.powi(k as i32);
        if term.abs() > prev {
            break;
        }
        s += if k % 2 == 0 { term } else { -term };
        if term.abs() < 1e-18 {
            break;
        }
        prev = term.abs();
    }
    s
}

/// (Ai(−z), Ai′(−z)) for large z.
fn asymptotic_negative(z: f64) -> (f64, f64) {
    let (u, v) = uv_coeffs();
    let zeta = 2.0 / 3.0 * z * z.sqrt();
    let q = z.sqrt().sqrt();
    let th = zeta - PI / 4.0;
    let (s, c) = th.sin_cos();
    let ue = alternating_sum(u, zeta, 0, 2);
    let uo = alternating_sum(u, zeta, 1, 2);
    let ve = alternating_sum(v, zeta, 0, 2);
    let vo = alternating_sum(v, zeta, 1, 2);
    let ai = (c * ue + s * uo) / (PI.sqrt() * q);
    let aip = q / PI.sqrt() * (s * ve - c * vo);
    (ai, aip)
}

/// Beyond this the closed asymptotic form of the tail is accurate to e^{−ζ} < 1e-12.
const TAIL_SERIES_FROM: f64 = 12.0;

fn tail_positive(x: f64, ai: f64, ai_prime: f64) -> f64 {
    if x >= TAIL_SERIES_FROM {
        // A = aAi + bAi′ with b″ − xb = 1, a = −b′; b = −Σ c_k x^{−(3k+1)}
        let x3 = x * x * x;
        let (mut c, mut p) = (1.0, 1.0 / x);
        let (mut b, mut a) = (0.0, 0.0);
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            if k > 0 {
                let kf = k as f64;
                c *= (3.0 * kf - 2.0) * (3.0 * kf - 1.0);
                p /= x3;
            }
            let term = c * p;
            if term > prev {
                break;
            }
            b -= term;
            a -= term * (3.0 * k as f64 + 1.0) / x;
            prev = term;
            if term < 1e-17 / x {
                break;
            }
        }
        return a * ai + b * ai_prime;
    }
    // (9, 12): Taylor back from the series value at 12
    static ANCHOR: OnceLock<(f64, f64, f64)> = OnceLock::new();
    let &(a, ap, tail) = ANCHOR.get_or_init(|| {
        let (a, ap) = asymptotic_positive(TAIL_SERIES_FROM);
        (a, ap, tail_positive(TAIL_SERIES_FROM, a, ap))
    });
    taylor_step(TAIL_SERIES_FROM, a, ap, tail, x - TAIL_SERIES_FROM).2
}

fn tail_negative(x: f64) -> f64 {
    let panels = ((-INNER - x) / 0.5).ceil().max(1.0) as usize;
    let rule = composite_gauss_legendre(x, -INNER, panels, 16);
    let base = anchors()[0].tail;
    base + rule.integrate(|t| asymptotic_negative(-t).0)
}

/// Q_Ai(x, y) = (Ai(x)Ai′(y) − Ai′(x)Ai(y)) / (x − y) = ∫_0^∞ Ai(x+t)Ai(y+t) dt.
pub fn q_airy(x: f64, y: f64) -> Result<f64> {
    let ex = airy_eval(x)?;
    let ey = airy_eval(y)?;
    Ok(q_from(&ex, &ey))
}

/// ∂Q_Ai/∂y.
pub fn dy_q_airy(x: f64, y: f64) -> Result<f64> {
    let ex = airy_eval(x)?;
    let ey = airy_eval(y)?;
    Ok(dyq_from(&ex, &ey))
}

const NEAR_DIAGONAL: f64 = 0.25;

fn q_from(ex: &AiryEval, ey: &AiryEval) -> f64 {
    let d = ex.x - ey.x;
    if d.abs() > NEAR_DIAGONAL {
        (ex.ai * ey.ai_prime - ex.ai_prime * ey.ai) / d
    } else {
        near_diagonal(ex, ey).0
    }
}

fn dyq_from(ex: &AiryEval, ey: &AiryEval) -> f64 {
    let d = ex.x - ey.x;
    if d.abs() > NEAR_DIAGONAL {
        let q = (ex.ai * ey.ai_prime - ex.ai_prime * ey.ai) / d;
        (ey.x * ex.ai * ey.ai - ex.ai_prime * ey.ai_prime + q) / d
    } else {
        near_diagonal(ex, ey).1
    }
}

/// Q and ∂_yQ near the diagonal from a Taylor expansion of Ai about the midpoint.
///
/// With x = c+u, y = c+v and Ai(c+t) = Σ a_k t^k, b_k = (k+1)a_{k+1}:
/// Q = Σ_{j>k} (a_j b_k − a_k b_j) u^k v^k Σ_{i<j−k} u^i v^{j−k−1−i}.
fn near_diagonal(ex: &AiryEval, ey: &AiryEval) -> (f64, f64) {
    const N: usize = 26;
    let c = 0.5 * (ex.x + ey.x);
    let mid = airy_unchecked(c);
    let a = taylor_coeffs(c, mid.ai, mid.ai_prime, N + 1);
    let b: Vec<f64> = (0..N).map(|k| (k + 1) as f64 * a[k + 1]).collect();
    let u = ex.x - c;
    let v = ey.x - c;
    let mut upow = [1.0; N];
    let mut vpow = [1.0; N];
    for k in 1..N {
        upow[k] = upow[k - 1] * u;
        vpow[k] = vpow[k - 1] * v;
    }
    let (mut q, mut dq) = (0.0, 0.0);
    for j in 1..N {
        for k in 0..j {
            let coef = a[j] * b[k] - a[k] * b[j];
            if coef == 0.0 {
                continue;
            }
            let p = j - k;
            // h(u,v) = Σ_{i<p} u^{k+i} v^{k+p−1−i}
            let (mut h, mut dh) = (0.0, 0.0);
            for i in 0..p {
                let ev = k + p - 1 - i;
                h += upow[k + i] * vpow[ev];
                if ev > 0 {
                    dh += ev as f64 * upow[k + i] * vpow[ev - 1];
                }
            }
            q += coef * h;
            dq += coef * dh;
        }
    }
    (q, dq)
}

/// ∫_0^∞ A(x+t) Ai(y+t) dt with A(u) = ∫_u^∞ Ai; equals ∫_x^∞ Q_Ai(z, y) dz.
pub fn f_airy(x: f64, y: f64) -> Result<f64> {
    let rule = t_rule(x.min(y));
    let mut s = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let ex = airy_eval((x + t).min(X_MAX))?;
        let ey = airy_eval((y + t).min(X_MAX))?;
        s += w * ex.tail * ey.ai;
    }
    Ok(s)
}

fn t_rule(lo: f64) -> crate::quadrature::QuadRule {
    let t_max = (10.0 - lo).max(2.0);
    let panels = (t_max / 0.5).ceil() as usize;
    composite_gauss_legendre(0.0, t_max, panels, 12)
}

/// Entries of the 2×2 edge kernel at (x, y).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixAiry {
    /// S_Ai(x, y)
    pub s: f64,
    /// D_Ai(x, y)
    pub d: f64,
    /// I_Ai(x, y), without the ε(x − y) term
    pub i: f64,
    /// ε(x − y) = sign(x − y)/2
    pub eps: f64,
    /// S_Ai(y, x)
    pub s_t: f64,
}

/// S_Ai = Q + ½Ai(x)(1 − A(y)), D_Ai = −∂_yQ − ½Ai(x)Ai(y),
/// I_Ai = −∫_x^∞ Q(z, y)dz + ½(∫_y^x Ai + A(x)A(y)), A(u) = ∫_u^∞ Ai.
pub fn matrix_airy(x: f64, y: f64) -> Result<MatrixAiry> {
    let ex = airy_eval(x)?;
    let ey = airy_eval(y)?;
    let q = q_from(&ex, &ey);
    let f = f_airy(x, y)?;
    Ok(MatrixAiry {
        s: q + 0.5 * ex.ai * (1.0 - ey.tail),
        d: -dyq_from(&ex, &ey) - 0.5 * ex.ai * ey.ai,
        i: i_from(&ex, &ey, f),
        eps: epsilon(x - y),
        s_t: q + 0.5 * ey.ai * (1.0 - ex.tail),
    })
}

fn i_from(ex: &AiryEval, ey: &AiryEval, f: f64) -> f64 {
    -f + 0.5 * ((ey.tail - ex.tail) + ex.tail * ey.tail)
}

/// ½ sign(t), with ε(0) = 0.
pub fn epsilon(t: f64) -> f64 {
    if t > 0.0 {
        0.5
    } else if t < 0.0 {
        -0.5
    } else {
        0.0
    }
}

/// Matrix Airy kernel entries on a tensor grid, assembled with one shared
/// t-quadrature so that the I entries cost a single matrix product.
#[derive(Clone, Debug)]
pub struct AiryGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub q: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub i: DMatrix<f64>,
}

impl AiryGrid {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let ex: Vec<AiryEval> = xs.iter().map(|&x| airy_eval(x)).collect::<Result<_>>()?;
        let ey: Vec<AiryEval> = ys.iter().map(|&y| airy_eval(y)).collect::<Result<_>>()?;
        let lo = xs.iter().chain(ys).copied().fold(f64::INFINITY, f64::min);
        let rule = t_rule(lo);
        let nt = rule.len();
        let tails = DMatrix::from_fn(xs.len(), nt, |i, k| {
            airy_unchecked((xs[i] + rule.nodes[k]).min(X_MAX)).tail * rule.weights[k]
        });
        let ais = DMatrix::from_fn(nt, ys.len(), |k, j| {
            airy_unchecked((ys[j] + rule.nodes[k]).min(X_MAX)).ai
        });
        let f = tails * ais;
        let (nx, ny) = (xs.len(), ys.len());
        let q = DMatrix::from_fn(nx, ny, |i, j| q_from(&ex[i], &ey[j]));
        let s = DMatrix::from_fn(nx, ny, |i, j| {
            q[(i, j)] + 0.5 * ex[i].ai * (1.0 - ey[j].tail)
        });
        let d = DMatrix::from_fn(nx, ny, |i, j| {
            -dyq_from(&ex[i], &ey[j]) - 0.5 * ex[i].ai * ey[j].ai
        });
        let i = DMatrix::from_fn(nx, ny, |i, j| i_from(&ex[i], &ey[j], f[(i, j)]));
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            q,
            s,
            d,
            i,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // (x, Ai, Ai′, ∫_x^∞ Ai) from 30-digit reference evaluations; tails for
    // x ≥ 20 from a 400-point Gauss–Legendre rule on an independent Ai
    pub(crate) const REFERENCE: [(f64, f64, f64, f64); 25] = [
        (
            -40.0,
            -0.04593392343795725,
            -1.3890908752607184,
            0.96530251812241207,
        ),
        (
            -30.0,
            -0.087968188456842163,
            1.2286206026374851,
            1.0410487022076201,
        ),
        (
            -20.0,
            -0.17640612707798469,
            0.89286285673647124,
            1.0450725859732518,
        ),
        (
            -10.0,
            0.040241238486443191,
            0.99626504413279006,
            1.0990317364675463,
        ),
        (
            -9.0,
            -0.022133721547341404,
            -0.97566398092633159,
            0.8921530822780521,
        ),
        (
            -7.5,
            0.32177571638064788,
            0.3188095066985546,
            1.0366952721892287,
        ),
        (
            -5.0,
            0.35076100902411432,
            0.32719281855444314,
            1.051215537881161,
        ),
        (
            -3.0,
            -0.37881429367765807,
            0.31458376921659881,
            1.1347961760046568,
        ),
        (
            -2.0,
            0.22740742820168558,
            0.61825902074169104,
            1.2351061593719397,
        ),
        (
            -1.0,
            0.53556088329235212,
            -0.010160567116645209,
            0.79900731680040195,
        ),
        (
            -0.5,
            0.47572809161053959,
            -0.20408167033954739,
            0.54214288089064941,
        ),
        (0.0, 0.35502805388781724, -0.2588194037928068, 1.0 / 3.0),
        (
            0.5,
            0.23169360648083349,
            -0.22491053266468389,
            0.18738002842147616,
        ),
        (
            1.0,
            0.13529241631288142,
            -0.15914744129679321,
            0.097015991416223554,
        ),
        (
            2.0,
            0.034924130423274379,
            -0.053090384433653632,
            0.020800577552653642,
        ),
        (
            3.0,
            0.0065911393574607191,
            -0.011912976705951318,
            0.0034129573263115608,
        ),
        (
            4.5,
            0.00033025032351430898,
            -0.00071786656755750889,
            0.00014574203553910357,
        ),
        (
            5.0,
            0.00010834442813607442,
            -0.00024741389086846248,
            4.5743027415453847e-5,
        ),
        (
            6.0,
            9.9476943602528896e-6,
            -2.4765200397034955e-5,
            3.8816280948189418e-6,
        ),
        (
            8.0,
            4.6922076160992316e-8,
            -1.3414392979067866e-7,
            1.6090849759132707e-8,
        ),
        (
            9.0,
            2.4711684308724898e-9,
            -7.4806413896589464e-9,
            8.0266968699112586e-10,
        ),
        (
            10.0,
            1.1047532552898686e-10,
            -3.5206336767389236e-10,
            3.4164317390540094e-11,
        ),
        (
            15.0,
            2.1649625207379923e-18,
            -8.4205679540177728e-18,
            5.5206076066010495e-19,
        ),
        (
            20.0,
            1.6916728686705403e-27,
            -7.586391625748355e-27,
            3.7518121989517595e-28,
        ),
        (
            40.0,
            6.3657426585529149e-75,
            -4.030017977600678e-74,
            1.0035569020049945e-75,
        ),
    ];

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn matches_reference_values() {
        for &(x, a, ap, t) in &REFERENCE {
            let e = airy_eval(x).unwrap();
            // absolute accuracy in the oscillatory region, relative in the decaying one
            if x <= 0.0 {
                assert!((e.ai - a).abs() < 1e-12, "Ai({x}) = {} vs {a}", e.ai);
                assert!(
                    (e.ai_prime - ap).abs() < 1e-11,
                    "Ai'({x}) = {} vs {ap}",
                    e.ai_prime
                );
                assert!((e.tail - t).abs() < 1e-11, "tail({x}) = {} vs {t}", e.tail);
            } else {
                assert!(rel(e.ai, a) < 1e-11, "Ai({x}) = {} vs {a}", e.ai);
                assert!(
                    rel(e.ai_prime, ap) < 1e-11,
                    "Ai'({x}) = {} vs {ap}",
                    e.ai_prime
                );
                assert!(rel(e.tail, t) < 1e-10, "tail({x}) = {} vs {t}", e.tail);
            }
        }
    }

    #[test]
    fn values_at_origin() {
        let e = airy_eval(0.0).unwrap();
        assert!((e.ai - 0.3550280539).abs() < 1e-10);
        assert!((e.ai_prime + 0.2588194038).abs() < 1e-10);
    }

    #[test]
    fn out_of_range() {
        assert!(airy_eval(40.5).is_err());
        assert!(airy_eval(-41.0).is_err());
        assert!(airy_eval(f64::NAN).is_err());
    }

    #[test]
    fn airy_equation_residual() {
        // fourth-order central difference of Ai′
        let h = 1e-3;
        for i in 0..=160 {
            let x = -39.0 + i as f64 * 0.4875;
            let d = |t: f64| airy_eval(t).unwrap().ai_prime;
            let dd =
                (-d(x + 2.0 * h) + 8.0 * d(x + h) - 8.0 * d(x - h) + d(x - 2.0 * h)) / (12.0 * h);
            let e = airy_eval(x).unwrap();
            let scale = 1.0 + x.abs().powf(1.25);
            assert!(
                (dd - x * e.ai).abs() < 1e-10 * scale,
                "x = {x}: {dd} vs {}",
                x * e.ai
            );
        }
    }

    #[test]
    fn continuity_across_region_boundaries() {
        for b in [-9.0, -3.0, 3.0, 9.0] {
            let lo = airy_eval(b - 1e-13).unwrap();
            let hi = airy_eval(b + 1e-13).unwrap();
            assert!((lo.ai - hi.ai).abs() < 1e-11, "{b}: {} {}", lo.ai, hi.ai);
            assert!((lo.tail - hi.tail).abs() < 1e-11);
        }
    }

    #[test]
    fn tail_derivative_is_minus_ai() {
        let h = 1e-4;
        for x in [-20.0, -8.7, -2.2, 0.3, 4.1, 9.5, 12.0] {
            let d = (airy_eval(x + h).unwrap().tail - airy_eval(x - h).unwrap().tail) / (2.0 * h);
            assert!((d + airy_eval(x).unwrap().ai).abs() < 1e-8);
        }
    }

    #[test]
    fn q_reference_values() {
        // (x, y, Q, ∂_yQ, ∫_x^∞Q(z,y)dz, I_Ai)
        let table: [(f64, f64, f64, f64, f64, f64); 6] = [
            (
                0.0,
                0.0,
                0.066987483779663974,
                -0.063022459523685431,
                0.055555555555555556,
                0.0,
            ),
            (
                -2.0,
                1.0,
                0.039945689051187241,
                -0.056368843569930836,
                0.094501446136656016,
                -0.60363400583663762,
            ),
            (
                1.5,
                -0.5,
                0.015842300965612278,
                -0.010549104259556442,
                0.0096150047295712206,
                0.25080059342016009,
            ),
            (
                -5.0,
                -4.9,
                0.70998670060131188,
                -0.18176812257045689,
                0.58595750581576543,
                -0.070778159191628423,
            ),
            (
                3.0,
                3.1,
                9.5967520524732036e-6,
                -1.8229057377405e-5,
                4.8234716654972145e-6,
                -0.00030139091771825488,
            ),
            (
                2.0,
                -3.0,
                -0.0018249663790288178,
                0.010913137252213093,
                -0.0011969702820663099,
                0.56999697744078771,
            ),
        ];
        for (x, y, q, dq, f, i) in table {
            let scale = q.abs().max(1e-3);
            assert!(
                (q_airy(x, y).unwrap() - q).abs() < 1e-12 * scale.max(1.0),
                "Q({x},{y})"
            );
            assert!((dy_q_airy(x, y).unwrap() - dq).abs() < 1e-11, "dQ({x},{y})");
            assert!((f_airy(x, y).unwrap() - f).abs() < 1e-11, "F({x},{y})");
            assert!(
                (matrix_airy(x, y).unwrap().i - i).abs() < 1e-11,
                "I({x},{y})"
            );
        }
    }

    #[test]
    fn q_symmetry_and_diagonal() {
        for (x, y) in [(0.3, -1.7), (2.0, 2.1), (-6.0, -5.95), (1.0, 1.0)] {
            assert_eq!(q_airy(x, y).unwrap(), q_airy(y, x).unwrap());
        }
        let q00 = q_airy(0.0, 0.0).unwrap();
        assert!((q00 - AIP0 * AIP0).abs() < 1e-15);
        // divided difference at h = 1e-3 agrees with the diagonal limit
        let e0 = airy_eval(0.0).unwrap();
        let e1 = airy_eval(1e-3).unwrap();
        let dd = (e1.ai * e0.ai_prime - e1.ai_prime * e0.ai) / 1e-3;
        assert!((dd - q00).abs() < 1e-4);
        for i in 0..=40 {
            let x = -10.0 + 0.25 * i as f64;
            assert!(q_airy(x, x).unwrap() > 0.0);
        }
    }

    #[test]
    fn near_diagonal_matches_closed_form() {
        for (x, y) in [(0.5, 0.26), (-4.0, -4.24), (7.0, 7.2)] {
            let ex = airy_eval(x).unwrap();
            let ey = airy_eval(y).unwrap();
            let (q, dq) = near_diagonal(&ex, &ey);
            let d = x - y;
            let qc = (ex.ai * ey.ai_prime - ex.ai_prime * ey.ai) / d;
            let dqc = (y * ex.ai * ey.ai - ex.ai_prime * ey.ai_prime + qc) / d;
            assert!((q - qc).abs() < 1e-13, "{q} {qc}");
            assert!((dq - dqc).abs() < 1e-12, "{dq} {dqc}");
        }
        let e = airy_eval(1.3).unwrap();
        assert!((dy_q_airy(1.3, 1.3).unwrap() + 0.5 * e.ai * e.ai).abs() < 1e-14);
    }

    #[test]
    fn d_matches_finite_difference_of_q() {
        let h = 1e-4;
        for (x, y) in [(0.0, 0.5), (-1.0, 2.0), (1.2, 1.25), (-3.0, -3.0)] {
            let m = matrix_airy(x, y).unwrap();
            let fd = -(q_airy(x, y + h).unwrap() - q_airy(x, y - h).unwrap()) / (2.0 * h)
                - 0.5 * ai(x).unwrap() * ai(y).unwrap();
            assert!((m.d - fd).abs() < 1e-8, "{} vs {fd}", m.d);
        }
    }

    #[test]
    fn i_is_antisymmetric_and_reconstructs_tail_difference() {
        let pts = [-2.0, -0.7, 0.0, 1.1, 3.0];
        for &x in &pts {
            for &y in &pts {
                let a = matrix_airy(x, y).unwrap();
                let b = matrix_airy(y, x).unwrap();
                assert!((a.i + b.i).abs() < 1e-12);
                // I(x,y) − I(y,x) = ∫_y^x Ai − (F(x,y) − F(y,x))
                let fx = f_airy(x, y).unwrap() - f_airy(y, x).unwrap();
                let ty = airy_eval(y).unwrap().tail - airy_eval(x).unwrap().tail;
                assert!((a.i - b.i - (ty - fx)).abs() < 1e-12);
                assert_eq!(a.s_t, b.s);
            }
        }
    }

    #[test]
    fn entries_decay() {
        let m = matrix_airy(12.0, 13.0).unwrap();
        assert!(m.s.abs() < 1e-12 && m.d.abs() < 1e-12 && m.i.abs() < 1e-12);
    }

    #[test]
    fn grid_matches_pointwise() {
        let xs = [-3.0, -0.5, 0.0, 2.5];
        let ys = [-2.0, 0.0, 1.0];
        let g = AiryGrid::new(&xs, &ys).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                let m = matrix_airy(x, y).unwrap();
                assert!((g.s[(i, j)] - m.s).abs() < 1e-13);
                assert!((g.d[(i, j)] - m.d).abs() < 1e-13);
                assert!((g.i[(i, j)] - m.i).abs() < 1e-12);
            }
        }
    }
}
