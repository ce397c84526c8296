//! Even one-cut potentials, their polynomial truncations, and the
//! equilibrium quantities P(z), ρ(λ) and the edge constant γ = P(2)^{2/3}.

use crate::error::{Error, Result};
use crate::quadrature::{chebyshev_mean, gauss_legendre};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Chebyshev series in `λ / half_width`, with cached derivative series.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebSeries {
    coeffs: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    half_width: f64,
}

impl ChebSeries {
    pub fn new(coeffs: Vec<f64>, half_width: f64) -> Self {
        let d1 = cheb_derivative(&coeffs, half_width);
        let d2 = cheb_derivative(&d1, half_width);
        Self {
            coeffs,
            d1,
            d2,
            half_width,
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    fn eval(c: &[f64], t: f64) -> f64 {
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ck in c.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + ck;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + c.first().copied().unwrap_or(0.0)
    }

    fn eval_c(c: &[f64], t: Complex64) -> Complex64 {
        let (mut b1, mut b2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &ck in c.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + ck;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + c.first().copied().unwrap_or(0.0)
    }

    /// Monomial coefficients in λ. Only sensible for low degree.
    pub fn monomial_coeffs(&self) -> Vec<f64> {
        let n = self.coeffs.len();
        // T_k in the scaled variable t, as monomials in t
        let mut tk_prev = vec![0.0; n];
        let mut tk = vec![0.0; n];
        let mut out = vec![0.0; n];
        if n == 0 {
            return out;
        }
        tk_prev[0] = 1.0;
        out[0] += self.coeffs[0];
        if n > 1 {
            tk[1] = 1.0;
            out[1] += self.coeffs[1];
        }
        for k in 2..n {
            let mut next = vec![0.0; n];
            for i in 0..n - 1 {
                next[i + 1] += 2.0 * tk[i];
            }
            for i in 0..n {
                next[i] -= tk_prev[i];
            }
            for i in 0..n {
                out[i] += self.coeffs[k] * next[i];
            }
            tk_prev = std::mem::replace(&mut tk, next);
        }
        for (i, v) in out.iter_mut().enumerate() {
            *v /= self.half_width.powi(i as i32);
        }
        out
    }
}

fn cheb_derivative(c: &[f64], half_width: f64) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for k in (1..n).rev() {
        d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    for v in &mut d {
        *v /= half_width;
    }
    d
}

/// How the potential is represented.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    /// `coeffs[k]` multiplies λ^k.
    Polynomial(Vec<f64>),
    /// cosh(λ) − 1
    Cosh,
    /// Interpolated truncation on [−L, L].
    Chebyshev(ChebSeries),
}

/// Even potential V, analytic on Ω[d1, d2], restricted to [−L, L].
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    name: String,
    kind: PotentialKind,
    d1: f64,
    d2: f64,
    half_width: f64,
}

impl Potential {
    pub fn new(name: impl Into<String>, kind: PotentialKind, d1: f64, d2: f64) -> Result<Self> {
        if !(d1 > 0.0 && d2 > 0.0) {
            return Err(Error::InvalidPotential(format!(
                "strip parameters must be positive (d1 = {d1}, d2 = {d2})"
            )));
        }
        if let PotentialKind::Polynomial(c) = &kind {
            if c.iter().skip(1).step_by(2).any(|&v| v != 0.0) {
                return Err(Error::InvalidPotential(
                    "odd-power coefficient is nonzero".into(),
                ));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidPotential("non-finite coefficient".into()));
            }
        }
        let half_width = match &kind {
            PotentialKind::Chebyshev(s) => s.half_width,
            _ => 2.0 + d1 / 2.0,
        };
        Ok(Self {
            name: name.into(),
            kind,
            d1,
            d2,
            half_width,
        })
    }

    /// Even polynomial from coefficients of λ^0, λ^2, λ^4, ...
    pub fn even_polynomial(name: impl Into<String>, even_coeffs: &[f64]) -> Result<Self> {
        let mut c = vec![0.0; 2 * even_coeffs.len().max(1) - 1];
        for (k, &v) in even_coeffs.iter().enumerate() {
            c[2 * k] = v;
        }
        Self::new(name, PotentialKind::Polynomial(c), 1.0, 1.0)
    }

    /// V(λ) = λ²/2
    pub fn gaussian() -> Self {
        Self::even_polynomial("gaussian", &[0.0, 0.5]).expect("valid builtin")
    }

    /// V(λ) = λ⁴/12
    pub fn quartic12() -> Self {
        Self::even_polynomial("quartic12", &[0.0, 0.0, 1.0 / 12.0]).expect("valid builtin")
    }

    /// V(λ) = λ⁴/20 + λ²/5
    pub fn quartic20() -> Self {
        Self::even_polynomial("quartic20", &[0.0, 0.2, 0.05]).expect("valid builtin")
    }

    pub fn cosh() -> Self {
        Self::new("cosh", PotentialKind::Cosh, 1.0, 1.0).expect("valid builtin")
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Self::gaussian()),
            "quartic12" => Ok(Self::quartic12()),
            "quartic20" => Ok(Self::quartic20()),
            "cosh" => Ok(Self::cosh()),
            other => Err(Error::InvalidPotential(format!(
                "unknown builtin potential '{other}'"
            ))),
        }
    }

    pub fn with_strip(mut self, d1: f64, d2: f64) -> Result<Self> {
        if !(d1 > 0.0 && d2 > 0.0) {
            return Err(Error::InvalidPotential(
                "strip parameters must be positive".into(),
            ));
        }
        self.d1 = d1;
        self.d2 = d2;
        if !matches!(self.kind, PotentialKind::Chebyshev(_)) {
            self.half_width = 2.0 + d1 / 2.0;
        }
        Ok(self)
    }

    pub fn with_half_width(mut self, l: f64) -> Result<Self> {
        if l <= 2.0 {
            return Err(Error::InvalidPotential(format!(
                "L = {l} must exceed the support edge 2"
            )));
        }
        self.half_width = l;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn strip(&self) -> (f64, f64) {
        (self.d1, self.d2)
    }

    /// Truncation half-width L.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Degree when V is (or has been truncated to) a polynomial.
    pub fn degree(&self) -> Option<usize> {
        match &self.kind {
            PotentialKind::Polynomial(c) => Some(c.iter().rposition(|&v| v != 0.0).unwrap_or(0)),
            PotentialKind::Chebyshev(s) => Some(s.coeffs.len().saturating_sub(1)),
            PotentialKind::Cosh => None,
        }
    }

    /// Truncation parameter m: half the degree for polynomials, else max(2, ⌊log²n⌋).
    pub fn natural_m(&self, n: usize) -> usize {
        match self.degree() {
            Some(d) => (d / 2).max(1),
            None => default_m(n),
        }
    }

    /// Stable identifier used for cache keys.
    pub fn fingerprint(&self) -> String {
        let body = match &self.kind {
            PotentialKind::Polynomial(c) => format!("poly:{}", hex_bits(c)),
            PotentialKind::Cosh => "cosh".to_string(),
            PotentialKind::Chebyshev(s) => format!("cheb:{}", hex_bits(&s.coeffs)),
        };
        format!(
            "{}|{}|L={:016x}",
            self.name,
            body,
            self.half_width.to_bits()
        )
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Polynomial(c) => horner(c, x),
            PotentialKind::Cosh => x.cosh() - 1.0,
            PotentialKind::Chebyshev(s) => ChebSeries::eval(&s.coeffs, x / s.half_width),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Polynomial(c) => horner_deriv(c, x, 1),
            PotentialKind::Cosh => x.sinh(),
            PotentialKind::Chebyshev(s) => ChebSeries::eval(&s.d1, x / s.half_width),
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Polynomial(c) => horner_deriv(c, x, 2),
            PotentialKind::Cosh => x.cosh(),
            PotentialKind::Chebyshev(s) => ChebSeries::eval(&s.d2, x / s.half_width),
        }
    }

    pub fn value_c(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            PotentialKind::Polynomial(c) => horner_c(c, z),
            PotentialKind::Cosh => z.cosh() - 1.0,
            PotentialKind::Chebyshev(s) => ChebSeries::eval_c(&s.coeffs, z / s.half_width),
        }
    }

    pub fn deriv_c(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            PotentialKind::Polynomial(c) => {
                let d: Vec<f64> = (1..c.len()).map(|k| k as f64 * c[k]).collect();
                horner_c(&d, z)
            }
            PotentialKind::Cosh => z.sinh(),
            PotentialKind::Chebyshev(s) => ChebSeries::eval_c(&s.d1, z / s.half_width),
        }
    }

    fn deriv2_c(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            PotentialKind::Polynomial(c) => {
                let d: Vec<f64> = (2..c.len()).map(|k| (k * (k - 1)) as f64 * c[k]).collect();
                horner_c(&d, z)
            }
            PotentialKind::Cosh => z.cosh(),
            PotentialKind::Chebyshev(s) => ChebSeries::eval_c(&s.d2, z / s.half_width),
        }
    }

    /// (V′(z) − V′(c)) / (z − c), with the removable singularity at z = c filled in.
    pub fn deriv_divided_difference(&self, z: Complex64, c: f64) -> Complex64 {
        match &self.kind {
            PotentialKind::Polynomial(a) => {
                // V' = Σ d_k λ^k; (z^k − c^k)/(z − c) = h_k with h_k = z h_{k−1} + c^{k−1}
                let mut h = Complex64::new(0.0, 0.0);
                let mut cpow = 1.0;
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 1..a.len().saturating_sub(1) {
                    h = z * h + cpow;
                    cpow *= c;
                    acc += (k + 1) as f64 * a[k + 1] * h;
                }
                acc
            }
            _ => {
                let dz = z - c;
                if dz.norm() > 1e-5 * (1.0 + c.abs()) {
                    (self.deriv_c(z) - self.deriv(c)) / dz
                } else {
                    self.deriv2_c((z + c) * 0.5)
                }
            }
        }
    }
}

fn hex_bits(c: &[f64]) -> String {
    c.iter()
        .map(|v| format!("{:016x}", v.to_bits()))
        .collect::<Vec<_>>()
        .join(",")
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

fn horner_c(c: &[f64], z: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * z + ck)
}

fn horner_deriv(c: &[f64], x: f64, order: usize) -> f64 {
    let mut acc = 0.0;
    for k in (order..c.len()).rev() {
        let mut f = 1.0;
        for j in 0..order {
            f *= (k - j) as f64;
        }
        acc = acc * x + f * c[k];
    }
    acc
}

/// m = max(2, ⌊log² n⌋).
pub fn default_m(n: usize) -> usize {
    let l = (n.max(2) as f64).ln();
    ((l * l).floor() as usize).max(2)
}

/// Serialized potential declaration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    /// Named builtin: gaussian, quartic12, quartic20, cosh.
    pub builtin: Option<String>,
    /// Coefficients of λ^0, λ^2, λ^4, ...
    pub coeffs: Option<Vec<f64>>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    #[serde(rename = "L")]
    pub half_width: Option<f64>,
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential> {
        let base = match (&self.builtin, &self.coeffs) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidPotential(
                    "give either a builtin name or a coefficient list, not both".into(),
                ))
            }
            (Some(name), None) => Potential::builtin(name)?,
            (None, Some(c)) => Potential::even_polynomial("custom", c)?,
            (None, None) => return Err(Error::InvalidPotential("no potential declared".into())),
        };
        let (d1, d2) = base.strip();
        let mut v = base.with_strip(self.d1.unwrap_or(d1), self.d2.unwrap_or(d2))?;
        if let Some(l) = self.half_width {
            v = v.with_half_width(l)?;
        }
        Ok(v)
    }
}

/// Result of replacing V by an even polynomial of degree 2m.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub potential: Potential,
    pub m: usize,
    /// sup |V − V_m| on a 10⁴-point grid of [−L, L]
    pub sup_error: f64,
    /// sup |V − V_m| on a sampled sub-rectangle of Ω[d1/2, d2/2]
    pub strip_error: f64,
    /// sup_error ≤ 1e-10
    pub within_tolerance: bool,
}

/// Chebyshev interpolant of degree 2m on [−L, L], odd coefficients dropped.
pub fn truncate_potential(v: &Potential, m: usize) -> Result<Truncation> {
    if m < 2 {
        return Err(Error::InvalidPotential(format!(
            "truncation degree m = {m} must be ≥ 2"
        )));
    }
    let l = v.half_width();
    let asym = (0..200)
        .map(|i| {
            let x = l * i as f64 / 199.0;
            (v.value(x) - v.value(-x)).abs() / (1.0 + v.value(x).abs())
        })
        .fold(0.0, f64::max);
    if asym > 1e-12 {
        return Err(Error::InvalidPotential(format!(
            "potential is not even (asymmetry {asym:e})"
        )));
    }
    let deg = 2 * m;
    let npts = deg + 1;
    let samples: Vec<(f64, f64)> = (0..npts)
        .map(|j| {
            let th = PI * (j as f64 + 0.5) / npts as f64;
            (th, v.value(l * th.cos()))
        })
        .collect();
    let mut coeffs: Vec<f64> = (0..=deg)
        .map(|k| {
            let s: f64 = samples
                .iter()
                .map(|(th, f)| f * (k as f64 * th).cos())
                .sum();
            2.0 * s / npts as f64
        })
        .collect();
    coeffs[0] *= 0.5;
    for k in (1..=deg).step_by(2) {
        coeffs[k] = 0.0;
    }
    let series = ChebSeries::new(coeffs, l);
    let (d1, d2) = v.strip();
    let truncated = Potential::new(
        format!("{}_m{}", v.name(), m),
        PotentialKind::Chebyshev(series),
        d1,
        d2,
    )?;
    let sup_error = (0..10_000)
        .map(|i| {
            let x = -l + 2.0 * l * i as f64 / 9_999.0;
            (v.value(x) - truncated.value(x)).abs()
        })
        .fold(0.0, f64::max);
    let mut strip_error: f64 = 0.0;
    for i in 0..41 {
        for j in 0..9 {
            let z = Complex64::new(
                -l + 2.0 * l * i as f64 / 40.0,
                -d2 / 2.0 + d2 * j as f64 / 8.0,
            );
            strip_error = strip_error.max((v.value_c(z) - truncated.value_c(z)).norm());
        }
    }
    Ok(Truncation {
        potential: truncated,
        m,
        sup_error,
        strip_error,
        within_tolerance: sup_error <= 1e-10,
    })
}

/// P(z) = (1/2π)∫_{−π}^{π} (V′(z) − V′(2cos y))/(z − 2cos y) dy, by Gauss–Chebyshev
/// quadrature doubled until two successive values agree to 1e-12.
pub fn compute_p(v: &Potential, z: Complex64) -> Result<Complex64> {
    let mut n = 16;
    let mut prev = chebyshev_mean(n, |c| v.deriv_divided_difference(z, c));
    let mut change = f64::INFINITY;
    while n < 1 << 16 {
        n *= 2;
        let cur = chebyshev_mean(n, |c| v.deriv_divided_difference(z, c));
        change = (cur - prev).norm();
        if change <= 1e-12 * cur.norm().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        what: format!("P({z})"),
        change,
    })
}

pub fn compute_p_real(v: &Potential, x: f64) -> Result<f64> {
    Ok(compute_p(v, Complex64::new(x, 0.0))?.re)
}

/// Equilibrium data for a one-cut potential with support [−2, 2].
#[derive(Clone, Debug)]
pub struct EquilibriumData {
    /// P(2cos y) = Σ_k p_cheb[k] cos(k y)
    pub p_cheb: Vec<f64>,
    pub p_at_edge: f64,
    pub gamma: f64,
    pub rho_min: f64,
    pub support: (f64, f64),
}

impl EquilibriumData {
    pub fn new(v: &Potential) -> Result<Self> {
        let mut m = 16;
        let mut c = p_cos_series(v, m)?;
        loop {
            let tail = c[m / 2..].iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if tail <= 1e-13 * c[0].abs().max(1.0) || m >= 1024 {
                break;
            }
            m *= 2;
            c = p_cos_series(v, m)?;
        }
        let floor = 1e-14 * c[0].abs().max(1.0);
        while c.len() > 1 && c.last().is_some_and(|x| x.abs() < floor) {
            c.pop();
        }
        let p_at_edge = compute_p_real(v, 2.0)?;
        let mut eq = Self {
            p_cheb: c,
            p_at_edge,
            gamma: 0.0,
            rho_min: 0.0,
            support: (-2.0, 2.0),
        };
        eq.rho_min = (0..=2000)
            .map(|i| eq.p(-2.0 + 4.0 * i as f64 / 2000.0))
            .fold(f64::INFINITY, f64::min);
        eq.gamma = if p_at_edge > 0.0 {
            p_at_edge.powf(2.0 / 3.0)
        } else {
            f64::NAN
        };
        Ok(eq)
    }

    /// P(λ) for λ ∈ [−2, 2] from the cosine series.
    pub fn p(&self, x: f64) -> f64 {
        ChebSeries::eval(&self.p_cheb, x / 2.0)
    }

    /// Fourier coefficient P_d = (1/2π)∫P(2cos y)e^{idy}dy.
    pub fn fourier(&self, d: usize) -> f64 {
        match d {
            0 => self.p_cheb[0],
            _ => 0.5 * self.p_cheb.get(d).copied().unwrap_or(0.0),
        }
    }

    /// ρ(λ) = P(λ)√(4−λ²)/(2π) on (−2, 2), zero outside.
    pub fn density_rho(&self, x: f64) -> Result<f64> {
        if x.abs() >= 2.0 {
            return Ok(0.0);
        }
        let p = self.p(x);
        if p <= 0.0 {
            return Err(Error::ConditionViolation(format!(
                "P({x}) = {p:e} ≤ 0 inside the support"
            )));
        }
        Ok(p * (4.0 - x * x).sqrt() / (2.0 * PI))
    }

    /// ∫_{−2}^{2} ρ by Gauss–Legendre in the angle variable.
    pub fn total_mass(&self) -> f64 {
        // λ = 2cos θ, dλ = 2 sin θ dθ; integrand P(2cos θ) 4 sin²θ / 2π
        gauss_legendre(200, 0.0, PI).integrate(|th| {
            let s = th.sin();
            self.p(2.0 * th.cos()) * 4.0 * s * s / (2.0 * PI)
        })
    }

    /// CDF of ρ, for goodness-of-fit checks.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= -2.0 {
            return 0.0;
        }
        if x >= 2.0 {
            return 1.0;
        }
        let th0 = (x / 2.0).acos();
        gauss_legendre(120, th0, PI).integrate(|th| {
            let s = th.sin();
            self.p(2.0 * th.cos()) * 4.0 * s * s / (2.0 * PI)
        })
    }
}

fn p_cos_series(v: &Potential, m: usize) -> Result<Vec<f64>> {
    let vals: Vec<(f64, f64)> = (0..m)
        .map(|j| {
            let th = PI * (j as f64 + 0.5) / m as f64;
            compute_p_real(v, 2.0 * th.cos()).map(|p| (th, p))
        })
        .collect::<Result<_>>()?;
    let mut c: Vec<f64> = (0..m)
        .map(|k| {
            let s: f64 = vals.iter().map(|(th, p)| p * (k as f64 * th).cos()).sum();
            2.0 * s / m as f64
        })
        .collect();
    c[0] *= 0.5;
    Ok(c)
}

/// γ = P(2)^{2/3}.
pub fn edge_constant(eq: &EquilibriumData) -> Result<f64> {
    if eq.p_at_edge <= 0.0 {
        return Err(Error::ConditionViolation(format!(
            "P(2) = {:e} must be positive",
            eq.p_at_edge
        )));
    }
    Ok(eq.p_at_edge.powf(2.0 / 3.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Numerical spot-checks of the one-cut conditions. Never fails; each check
/// carries its measured margin.
pub fn check_conditions(v: &Potential) -> ConditionReport {
    let l = v.half_width();
    let mut checks = Vec::new();

    let asym = (0..=400)
        .map(|i| {
            let x = 2.0 * l * i as f64 / 400.0;
            (v.value(x) - v.value(-x)).abs() / (1.0 + v.value(x).abs())
        })
        .fold(0.0, f64::max);
    checks.push(ConditionCheck {
        name: "even",
        passed: asym <= 1e-12,
        margin: asym,
        detail: "max relative |V(λ) − V(−λ)| on [0, 2L]".into(),
    });

    // growth is an at-infinity requirement; a truncated series is only defined on [−L, L]
    if matches!(v.kind(), PotentialKind::Chebyshev(_)) {
        checks.push(ConditionCheck {
            name: "growth",
            passed: true,
            margin: 0.0,
            detail: "not applicable: potential restricted to [−L, L]".into(),
        });
    } else {
        let eps = 0.01;
        let margin = (0..=400)
            .map(|i| {
                let x = l * (1.0 + 99.0 * i as f64 / 400.0);
                v.value(x) - 2.0 * (1.0 + eps) * (1.0 + x).ln()
            })
            .fold(f64::INFINITY, f64::min);
        checks.push(ConditionCheck {
            name: "growth",
            passed: margin > 0.0,
            margin,
            detail: "min of V(λ) − 2(1+ε)log(1+λ), ε = 0.01, λ ∈ [L, 100L]".into(),
        });
    }

    match EquilibriumData::new(v) {
        Ok(eq) => {
            checks.push(ConditionCheck {
                name: "positive_p",
                passed: eq.rho_min > 1e-6,
                margin: eq.rho_min,
                detail: "min of P on [−2, 2]".into(),
            });
            let (d1, d2) = v.strip();
            let mut pmax: f64 = 0.0;
            let mut finite = true;
            for i in 0..=20 {
                for j in 0..=4 {
                    let z = Complex64::new(
                        -(2.0 + d1 / 2.0) + (4.0 + d1) * i as f64 / 20.0,
                        -d2 / 2.0 + d2 * j as f64 / 4.0,
                    );
                    match compute_p(v, z) {
                        Ok(p) => pmax = pmax.max(p.norm()),
                        Err(_) => finite = false,
                    }
                }
            }
            checks.push(ConditionCheck {
                name: "bounded_p",
                passed: finite && pmax.is_finite() && pmax < 1e8,
                margin: pmax,
                detail: "max |P| on sampled Ω[d1/2, d2/2]".into(),
            });
            let mass_err = (eq.total_mass() - 1.0).abs();
            checks.push(ConditionCheck {
                name: "unit_mass",
                passed: mass_err <= 1e-10,
                margin: mass_err,
                detail: "|∫ρ − 1|, support fixed to [−2, 2]".into(),
            });
            // u(λ) − u(2) = −∫_2^λ P(t)√(t²−4) dt outside the cut
            let mut worst = f64::NEG_INFINITY;
            let mut ok = true;
            let pts = 24;
            let mut acc = 0.0;
            let mut prev = 2.0;
            for i in 1..=pts {
                let x = 2.0 + (l - 2.0) * i as f64 / pts as f64;
                let rule = gauss_legendre(12, prev, x);
                let inc = rule
                    .integrate(|t| compute_p_real(v, t).unwrap_or(f64::NAN) * (t * t - 4.0).sqrt());
                acc -= inc;
                prev = x;
                if !acc.is_finite() || acc >= 0.0 {
                    ok = false;
                }
                worst = worst.max(acc);
            }
            checks.push(ConditionCheck {
                name: "max_on_support",
                passed: ok,
                margin: -worst,
                detail: "min over (2, L] of u(2) − u(λ), coarse grid".into(),
            });
        }
        Err(e) => {
            checks.push(ConditionCheck {
                name: "positive_p",
                passed: false,
                margin: f64::NAN,
                detail: format!("equilibrium data unavailable: {e}"),
            });
        }
    }
    ConditionReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn gaussian_p_is_one() {
        let v = Potential::gaussian();
        for z in [c(0.0), c(1.3), c(2.0), Complex64::new(0.5, 0.4)] {
            assert!((compute_p(&v, z).unwrap() - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn quartic_p_matches_symbolic_average() {
        // V′(z) − V′(c) over z − c is (z² + zc + c²)/3; mean of c is 0, of c² is 2
        let v = Potential::quartic12();
        for x in [0.0, 0.7, 1.9, 2.0, 2.4] {
            let p = compute_p_real(&v, x).unwrap();
            assert!((p - (x * x / 3.0 + 2.0 / 3.0)).abs() < 1e-13);
        }
        let w = Potential::quartic20();
        assert!((compute_p_real(&w, 2.0).unwrap() - 1.6).abs() < 1e-13);
    }

    #[test]
    fn p_on_cut_handles_removable_singularity() {
        // z equal to a Gauss–Chebyshev node of the first level
        let v = Potential::cosh();
        let z = 2.0 * (std::f64::consts::PI * 0.5 / 16.0).cos();
        let p = compute_p_real(&v, z).unwrap();
        assert!(p.is_finite());
        let p_near = compute_p_real(&v, z + 1e-9).unwrap();
        assert!((p - p_near).abs() < 1e-8);
    }

    #[test]
    fn p_is_even_on_real_axis() {
        let v = Potential::cosh();
        for x in [0.3, 1.1, 2.2] {
            let a = compute_p_real(&v, x).unwrap();
            let b = compute_p_real(&v, -x).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn density_values() {
        let eq = EquilibriumData::new(&Potential::gaussian()).unwrap();
        assert!((eq.density_rho(0.0).unwrap() - 1.0 / PI).abs() < 1e-14);
        assert_eq!(eq.density_rho(2.0).unwrap(), 0.0);
        assert_eq!(eq.density_rho(-2.0).unwrap(), 0.0);
        let q = EquilibriumData::new(&Potential::quartic12()).unwrap();
        assert!((q.density_rho(0.0).unwrap() - 2.0 / (3.0 * PI)).abs() < 1e-13);
    }

    #[test]
    fn edge_constants() {
        let g = EquilibriumData::new(&Potential::gaussian()).unwrap();
        assert!((edge_constant(&g).unwrap() - 1.0).abs() < 1e-14);
        let q = EquilibriumData::new(&Potential::quartic12()).unwrap();
        assert!((edge_constant(&q).unwrap() - 2f64.powf(2.0 / 3.0)).abs() < 1e-13);
        let w = EquilibriumData::new(&Potential::quartic20()).unwrap();
        assert!((edge_constant(&w).unwrap() - 1.6f64.powf(2.0 / 3.0)).abs() < 1e-13);
    }

    #[test]
    fn square_root_vanishing_at_edge() {
        let eq = EquilibriumData::new(&Potential::quartic12()).unwrap();
        let r = |h: f64| eq.density_rho(2.0 - h).unwrap() / h.sqrt();
        // r(h) = P(2)/π + O(h); Richardson on h and h/100
        let (h1, h2) = (1e-2, 1e-4);
        let extrap = (r(h2) * h1 - r(h1) * h2) / (h1 - h2);
        assert!((extrap - eq.p_at_edge / PI).abs() < 1e-6, "{extrap}");
    }

    #[test]
    fn mass_is_one_for_builtins() {
        for v in [
            Potential::gaussian(),
            Potential::quartic12(),
            Potential::quartic20(),
        ] {
            let eq = EquilibriumData::new(&v).unwrap();
            assert!((eq.total_mass() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn condition_reports() {
        assert!(check_conditions(&Potential::gaussian()).all_passed());
        let q = check_conditions(&Potential::quartic12());
        assert!(q.all_passed());
        assert!((q.get("positive_p").unwrap().margin - 2.0 / 3.0).abs() < 1e-6);
        let two_cut = Potential::even_polynomial("two_cut", &[0.0, -1.0, 0.25]).unwrap();
        let r = check_conditions(&two_cut);
        assert!(!r.all_passed());
        assert!(!r.get("positive_p").unwrap().passed);
        // unnormalized semicircle: support is not [−2, 2]
        let wide = Potential::even_polynomial("wide", &[0.0, 1.0]).unwrap();
        assert!(!check_conditions(&wide).get("unit_mass").unwrap().passed);
    }

    #[test]
    fn truncation_reproduces_polynomials() {
        let t = truncate_potential(&Potential::gaussian(), 2).unwrap();
        assert!(t.sup_error < 1e-14);
        let mono = match t.potential.kind() {
            PotentialKind::Chebyshev(s) => s.monomial_coeffs(),
            _ => unreachable!(),
        };
        let want = [0.0, 0.0, 0.5, 0.0, 0.0];
        for (a, b) in mono.iter().zip(want) {
            assert!((a - b).abs() < 1e-14, "{mono:?}");
        }
        let q = truncate_potential(&Potential::quartic12(), 2).unwrap();
        assert!(q.sup_error < 1e-14);
        assert!(q.strip_error < 1e-13);
        // γ is unchanged by exact truncation
        let g0 = EquilibriumData::new(&Potential::quartic12()).unwrap().gamma;
        let g1 = EquilibriumData::new(&q.potential).unwrap().gamma;
        assert!((g0 - g1).abs() < 1e-12);
    }

    #[test]
    fn truncation_of_cosh_at_log_squared_degree() {
        let m = default_m(200);
        assert_eq!(m, 28);
        let t = truncate_potential(&Potential::cosh(), m).unwrap();
        // independent check against direct evaluation on a 10⁴ grid
        let l = t.potential.half_width();
        let err = (0..10_000)
            .map(|i| {
                let x = -l + 2.0 * l * (i as f64 + 0.37) / 10_000.0;
                ((x.cosh() - 1.0) - t.potential.value(x)).abs()
            })
            .fold(0.0, f64::max);
        assert!(err <= 1e-10 && t.within_tolerance, "{err}");
        assert!(t.potential.deriv(1.0) - 1f64.sinh() < 1e-9);
    }

    #[test]
    fn odd_potentials_are_rejected() {
        assert!(Potential::new(
            "odd",
            PotentialKind::Polynomial(vec![0.0, 1.0, 0.5]),
            1.0,
            1.0
        )
        .is_err());
    }

    #[test]
    fn spec_parsing() {
        let spec = PotentialSpec {
            builtin: Some("quartic12".into()),
            d1: Some(2.0),
            ..Default::default()
        };
        let v = spec.build().unwrap();
        assert_eq!(v.half_width(), 3.0);
        let spec = PotentialSpec {
            coeffs: Some(vec![0.0, 0.5]),
            half_width: Some(2.75),
            ..Default::default()
        };
        let v = spec.build().unwrap();
        assert_eq!(v.value(2.0), 2.0);
        assert_eq!(v.half_width(), 2.75);
        assert!(PotentialSpec::default().build().is_err());
    }
}
