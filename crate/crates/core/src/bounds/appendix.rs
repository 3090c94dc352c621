//! Quadrature oracles for two auxiliary integral inequalities: a
//! one-dimensional Gaussian integral against ratio weights on a half-line,
//! and a Gaussian convolution with vertex weights in ℝᵈ.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{doubling, STABLE_DRIFT};
use crate::error::{Error, Result};
use crate::quadrature::adaptive;

const REL_TOL: f64 = 1e-11;
const MAX_INTERVALS: usize = 400;

/// Σ of adaptive integrals over consecutive breakpoints.
fn piecewise(f: impl Fn(f64) -> f64, breaks: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += adaptive(&f, w[0], w[1], 0.0, REL_TOL, MAX_INTERVALS)?.0;
    }
    Ok(total)
}

fn sorted_breaks(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.retain(|p| *p > lo && *p < hi);
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    pts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValue {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl OracleValue {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, ratio: lhs / rhs }
    }
}

/// Boundary profile φ with |φ(ζ)| ≤ Λ|ζ|; only φ(ϱ₁) enters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Profile {
    Linear { slope: f64 },
}

impl Profile {
    pub fn at(&self, z: f64) -> f64 {
        match self {
            Profile::Linear { slope } => slope * z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfLineInput {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub varrho1: f64,
    pub varrho2: f64,
    pub x1: f64,
    pub y1: f64,
    pub profile: Profile,
    pub eps: f64,
}

/// Gaussian integral over [x₁, ∞) against the ratio weights, and the
/// two-case right-hand side with C = 1.
pub fn zhut_oracle(inp: &HalfLineInput) -> Result<OracleValue> {
    let HalfLineInput { a, b, c, varrho1: r1, varrho2: r2, x1, y1, eps, .. } = *inp;
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::InvalidParameter("scales must be positive".into()));
    }
    if !(a >= 0.0 && b >= 0.0 && c >= 0.0 && eps > 0.0) {
        return Err(Error::InvalidParameter("need a, b, c ≥ 0 and ε > 0".into()));
    }
    let phi = inp.profile.at(r1);
    if !(x1 > phi) {
        return Err(Error::InvalidParameter(format!("x₁ = {x1} must exceed φ(ϱ₁) = {phi}")));
    }
    let gap = x1 - phi;
    let f = |z: f64| {
        let w = r1 + z.abs();
        let g = z - phi;
        ((w + r2) / w).powf(a) * (w / g).powf(b) * (r2 / g).powf(c) * (-((z - y1) / r2).powi(2)).exp() / r2
    };
    let end = x1.max(y1) + 12.0 * r2;
    let mut pts: Vec<f64> = (-2..=6).map(|k| x1 + gap * 10f64.powi(k)).collect();
    pts.extend((-12..=12).map(|j| y1 + j as f64 * r2));
    pts.extend([0.0, r1, -r1]);
    let lhs = piecewise(f, &sorted_breaks(pts, x1, end))?;

    let w = r1 + x1.abs();
    let near = (gap / w).powf((1.0 - b - c - eps).min(0.0));
    let case = if c > 1.0 {
        (w / (w + r2)).powf(-a) * (w / r2).powf(1.0 - c)
    } else {
        (w / (w + r2)).powf(-(a + c + eps - 1.0).max(0.0)) * ((w + r2) / r2).powf(b.min(1.0 - c))
    };
    Ok(OracleValue::new(lhs, near * case))
}

/// e^{−κ}·∫_{S^{d−1}} e^{κω₁} dω.
fn sphere_factor(d: usize, kappa: f64) -> f64 {
    match d {
        1 => 1.0 + (-2.0 * kappa).exp(),
        2 => 2.0 * PI * bessel_i0_scaled(kappa),
        _ => {
            if kappa < 1e-8 {
                4.0 * PI * (1.0 - kappa)
            } else {
                2.0 * PI * -(-2.0 * kappa).exp_m1() / kappa
            }
        }
    }
}

/// e^{−κ} I₀(κ).
pub fn bessel_i0_scaled(k: f64) -> f64 {
    if k <= 15.0 {
        let q = 0.25 * k * k;
        let (mut term, mut sum, mut j) = (1.0f64, 1.0, 0.0f64);
        while term > 1e-17 * sum {
            j += 1.0;
            term *= q / (j * j);
            sum += term;
        }
        sum * (-k).exp()
    } else {
        let (mut term, mut sum, mut j) = (1.0f64, 1.0, 0.0f64);
        loop {
            let next = term * (2.0 * j + 1.0).powi(2) / (8.0 * (j + 1.0) * k);
            if next < 1e-17 || next > term {
                break;
            }
            term = next;
            sum += term;
            j += 1.0;
        }
        sum / (2.0 * PI * k).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvolutionInput {
    pub d: usize,
    pub a: f64,
    pub b: f64,
    pub varrho1: f64,
    pub varrho2: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// The product of the two Gaussians is exp(−|x−y|²/(ϱ₁+ϱ₂))·exp(−|z−c|²/ϱ)
/// with c = (ϱ₂x+ϱ₁y)/(ϱ₁+ϱ₂) and ϱ = ϱ₁ϱ₂/(ϱ₁+ϱ₂); the weights are
/// radial, so the integral reduces to one radial integral times a sphere
/// average of exp(2ρ|c|ω₁/ϱ). Returns lhs and rhs without the common
/// factor exp(−|x−y|²/(ϱ₁+ϱ₂)), plus that factor.
fn convolution_parts(inp: &ConvolutionInput) -> Result<(f64, f64, f64)> {
    let ConvolutionInput { d, a, b, varrho1: r1, varrho2: r2, .. } = *inp;
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidParameter(format!("dimension {d} not in 1..=3")));
    }
    if inp.x.len() != d || inp.y.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: inp.x.len().min(inp.y.len()) });
    }
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::InvalidParameter("scales must be positive".into()));
    }
    let df = d as f64;
    let s = df - 1.0 + a + b;
    if !(s > -1.0) {
        return Err(Error::Quadrature(format!("radial integrand ρ^{s} is not integrable at the vertex")));
    }
    let sum = r1 + r2;
    let rho = r1 * r2 / sum;
    let cn = inp.x.iter().zip(&inp.y).map(|(x, y)| (r2 * x + r1 * y) / sum).map(|v| v * v).sum::<f64>().sqrt();
    let (q1, q2, qr) = (r1.sqrt(), r2.sqrt(), rho.sqrt());
    // Integrand p^s·g(p) with g bounded at the vertex.
    let g = |p: f64| {
        (p + q1).powf(-a) * (p + q2).powf(-b) * (-(p - cn).powi(2) / rho).exp() * sphere_factor(d, 2.0 * p * cn / rho)
    };
    let f = |p: f64| if p <= 0.0 { 0.0 } else { p.powf(s) * g(p) };
    let end = cn + 12.0 * qr;
    let mut pts: Vec<f64> = (-12..=12).map(|j| cn + j as f64 * qr).collect();
    for q in [q1, q2, qr] {
        pts.extend((-3..=1).map(|k| q * 10f64.powi(k)));
    }
    let breaks = sorted_breaks(pts, 0.0, end);
    // First piece through p = p₁v^k, k(s+1) = 2, so that it becomes p₁^{s+1}·k·v·g.
    let p1 = breaks[1];
    let k = 2.0 / (s + 1.0);
    let head = p1.powf(s + 1.0) * k * adaptive(|v| v * g(p1 * v.powf(k)), 0.0, 1.0, 0.0, REL_TOL, MAX_INTERVALS)?.0;
    let lhs = head + piecewise(f, &breaks[1..])?;
    let (am, bm) = (a.min(0.0), b.min(0.0));
    let rhs = r1.powf((df + bm) / 2.0) * r2.powf((df + am) / 2.0) * sum.powf(-(df + am + bm) / 2.0);
    let dist2: f64 = inp.x.iter().zip(&inp.y).map(|(x, y)| (x - y).powi(2)).sum();
    Ok((lhs, rhs, (-dist2 / sum).exp()))
}

/// Gaussian convolution with vertex weights against the closed-form
/// majorant with C = 1. The ratio is computed before the shared Gaussian
/// factor so it survives underflow of lhs and rhs.
pub fn lozenka_oracle(inp: &ConvolutionInput) -> Result<OracleValue> {
    if !(inp.a > -(inp.d as f64) && inp.b > -(inp.d as f64) && inp.a + inp.b > -(inp.d as f64)) {
        return Err(Error::InvalidParameter(format!("need a, b > −d and a + b > −d, got a = {}, b = {}", inp.a, inp.b)));
    }
    lozenka_unchecked(inp)
}

/// The same computation without the exponent preconditions, for control
/// runs outside the admissible region. Fails only when the radial
/// integral itself diverges.
pub fn lozenka_unchecked(inp: &ConvolutionInput) -> Result<OracleValue> {
    let (lhs, rhs, g) = convolution_parts(inp)?;
    Ok(OracleValue { lhs: lhs * g, rhs: rhs * g, ratio: lhs / rhs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub seed: u64,
    pub points: usize,
    pub c_half: f64,
    pub c_emp: f64,
    pub drift: f64,
    pub stable: bool,
}

impl SweepSummary {
    fn from_ratios(seed: u64, ratios: &[f64]) -> Self {
        let (c_half, c_emp, drift) = doubling(ratios);
        Self { seed, points: ratios.len(), c_half, c_emp, drift, stable: c_emp.is_finite() && drift < STABLE_DRIFT }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo.log10()..hi.log10()))
}

/// Random inputs: scales and gaps log-uniform in [10⁻², 10²], |φ′| ≤ 1,
/// y₁ within three widths ϱ₂ of x₁. Exponents are fixed when given,
/// otherwise drawn from [0, 2] per point.
pub fn zhut_inputs(points: usize, seed: u64, eps: f64, exponents: Option<[f64; 3]>) -> Vec<HalfLineInput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..points)
        .map(|_| {
            let varrho1 = log_uniform(&mut rng, 1e-2, 1e2);
            let varrho2 = log_uniform(&mut rng, 1e-2, 1e2);
            let profile = Profile::Linear { slope: rng.random_range(-1.0..1.0) };
            let x1 = profile.at(varrho1) + log_uniform(&mut rng, 1e-2, 1e2);
            let y1 = x1 + varrho2 * rng.random_range(-3.0..3.0);
            let drawn = [rng.random_range(0.0..2.0), rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)];
            let [a, b, c] = exponents.unwrap_or(drawn);
            HalfLineInput {
                a,
                b,
                c,
                varrho1,
                varrho2,
                x1,
                y1,
                profile,
                eps,
            }
        })
        .collect()
}

/// Random inputs for fixed (d, a, b): scales log-uniform in [10⁻², 10²],
/// points at log-uniform distances in [10⁻², 10]·√ϱ from the vertex.
pub fn lozenka_inputs(d: usize, a: f64, b: f64, points: usize, seed: u64) -> Vec<ConvolutionInput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng, scale: f64| -> Vec<f64> {
        let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let r = log_uniform(rng, 1e-2, 1e1) * scale.sqrt();
        dir.iter().map(|v| v / norm * r).collect()
    };
    (0..points)
        .map(|_| {
            let varrho1 = log_uniform(&mut rng, 1e-2, 1e2);
            let varrho2 = log_uniform(&mut rng, 1e-2, 1e2);
            let x = point(&mut rng, varrho1);
            let y = point(&mut rng, varrho2);
            ConvolutionInput { d, a, b, varrho1, varrho2, x, y }
        })
        .collect()
}

/// Evaluates an oracle over inputs in parallel, keeping input order.
pub fn evaluate<I: Sync>(inputs: &[I], oracle: impl Fn(&I) -> Result<OracleValue> + Sync + Send) -> Result<Vec<OracleValue>> {
    inputs.par_iter().map(oracle).collect()
}

/// Doubling summary of an oracle sweep: the fit on the first half against
/// the fit on all points.
pub fn summarize(seed: u64, values: &[OracleValue]) -> Result<SweepSummary> {
    if values.is_empty() {
        return Err(Error::EmptySamples);
    }
    let ratios: Vec<f64> = values.iter().map(|v| v.ratio).collect();
    Ok(SweepSummary::from_ratios(seed, &ratios))
}
