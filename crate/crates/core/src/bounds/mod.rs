//! Parametric kernel envelopes, constant fitting against kernel samples, and
//! quadrature oracles for the auxiliary integral inequalities.

pub mod appendix;
pub mod clouds;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::WedgeDomain;
use crate::samples::KernelSample;

fn pos(a: f64) -> f64 {
    a.max(0.0)
}

fn neg(a: f64) -> f64 {
    a.min(0.0)
}

/// One product term C·ℛ_x^{a}ℛ_y^{b}|x′|^{c}|y′|^{d} r_x^{−e} r_y^{−f} τ^{g} (1−ℛ_x)^{h}.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnvelopeTerm {
    pub coeff: f64,
    pub big_r_x: f64,
    pub big_r_y: f64,
    pub radius_x: f64,
    pub radius_y: f64,
    /// Envelope carries r_x^{−dist_x}.
    pub dist_x: f64,
    pub dist_y: f64,
    pub time: f64,
    /// Power of (1 − ℛ_x).
    pub interior_x: f64,
}

impl EnvelopeTerm {
    fn unit() -> Self {
        Self { coeff: 1.0, ..Default::default() }
    }
}

/// C · Φ(|x′|/|y′|) · Σ terms · exp(−σ·dist²/τ), where dist² is |x−y|² or,
/// for the anisotropic form, |x−y|² minus the squared component along the
/// graph axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEnvelope {
    pub c: f64,
    pub sigma: f64,
    pub anisotropic: bool,
    /// Weight exponent μ of the ratio profile Φ, when present.
    pub ratio_profile: Option<f64>,
    pub terms: Vec<EnvelopeTerm>,
}

impl BoundEnvelope {
    /// Pure Gaussian exp(−σ|x−y|²/τ).
    pub fn gaussian(sigma: f64) -> Self {
        Self { c: 1.0, sigma, anisotropic: false, ratio_profile: None, terms: vec![EnvelopeTerm::unit()] }
    }

    /// Whether any factor depends on the cone geometry.
    pub fn needs_geometry(&self) -> bool {
        self.anisotropic
            || self.ratio_profile.is_some()
            || self.terms.iter().any(|k| {
                [k.big_r_x, k.big_r_y, k.radius_x, k.radius_y, k.dist_x, k.dist_y, k.interior_x].iter().any(|e| *e != 0.0)
            })
    }

    pub fn single(sigma: f64, term: EnvelopeTerm) -> Self {
        Self { c: 1.0, sigma, anisotropic: false, ratio_profile: None, terms: vec![term] }
    }
}

/// Ratio profile of the weight-commutator kernel.
pub fn ratio_profile(mu: f64, t: f64) -> f64 {
    if mu > 1.0 {
        t.powf(mu) + t
    } else if mu > 0.0 {
        t.powf(mu)
    } else if mu >= -1.0 {
        1.0
    } else {
        t.powf(mu + 1.0) + 1.0
    }
}

pub fn envelope_eval(env: &BoundEnvelope, x: &[f64], y: &[f64], t: f64, s: f64, domain: &WedgeDomain) -> Result<f64> {
    if !(t > s) {
        return Err(Error::InvalidInterval { s, t });
    }
    if !(env.sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("Gaussian rate must be positive, got {}", env.sigma)));
    }
    let tau = t - s;
    let (gx, gy) = if env.needs_geometry() {
        let (gx, gy) = (domain.geometry_at(x, tau)?, domain.geometry_at(y, tau)?);
        if !gx.inside || !gy.inside {
            return Err(Error::InvalidDomain("envelope points must lie inside the cone".into()));
        }
        ((gx.big_r, gx.radius, gx.r_x), (gy.big_r, gy.radius, gy.r_x))
    } else {
        // every geometric exponent vanishes
        ((1.0, 1.0, 1.0), (1.0, 1.0, 1.0))
    };
    let mut dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    if env.anisotropic {
        let e = domain.graph_axis()?;
        let along: f64 = x.iter().zip(y).zip(&e).map(|((a, b), e)| (a - b) * e).sum();
        dist2 = (dist2 - along * along).max(0.0);
    }
    let sum: f64 = env
        .terms
        .iter()
        .map(|k| {
            k.coeff
                * gx.0.powf(k.big_r_x)
                * gy.0.powf(k.big_r_y)
                * gx.1.powf(k.radius_x)
                * gy.1.powf(k.radius_y)
                * gx.2.powf(-k.dist_x)
                * gy.2.powf(-k.dist_y)
                * tau.powf(k.time)
                * (1.0 - gx.0).powf(k.interior_x)
        })
        .sum();
    let profile = env.ratio_profile.map_or(1.0, |mu| ratio_profile(mu, gx.1 / gy.1));
    Ok(env.c * profile * sum * (-env.sigma * dist2 / tau).exp())
}

/// Kernel estimate shapes. Each has a plain and a ∂_s variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Preset {
    WholeSpace,
    WholeSpaceTime,
    WeightCommutator,
    WeightCommutatorTime,
    Dirichlet,
    DirichletTime,
    Oblique,
    ObliqueTime,
    ObliqueDifference,
    ObliqueDifferenceTime,
    /// Hypothesis of the weighted operator-boundedness criterion.
    OperatorHypothesis,
    /// Hypothesis of the short-time-window criterion, with the factor δ^ϰ.
    ShortTimeHypothesis,
}

impl Preset {
    pub const ALL: [Preset; 12] = [
        Preset::WholeSpace,
        Preset::WholeSpaceTime,
        Preset::WeightCommutator,
        Preset::WeightCommutatorTime,
        Preset::Dirichlet,
        Preset::DirichletTime,
        Preset::Oblique,
        Preset::ObliqueTime,
        Preset::ObliqueDifference,
        Preset::ObliqueDifferenceTime,
        Preset::OperatorHypothesis,
        Preset::ShortTimeHypothesis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::WholeSpace => "whole_space",
            Preset::WholeSpaceTime => "whole_space_ds",
            Preset::WeightCommutator => "weight_commutator",
            Preset::WeightCommutatorTime => "weight_commutator_ds",
            Preset::Dirichlet => "dirichlet",
            Preset::DirichletTime => "dirichlet_ds",
            Preset::Oblique => "oblique",
            Preset::ObliqueTime => "oblique_ds",
            Preset::ObliqueDifference => "oblique_difference",
            Preset::ObliqueDifferenceTime => "oblique_difference_ds",
            Preset::OperatorHypothesis => "operator_hypothesis",
            Preset::ShortTimeHypothesis => "short_time_hypothesis",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| Error::Parse(format!("unknown preset '{s}'")))
    }

    /// Whether the estimated quantity carries a ∂_s derivative.
    pub fn has_time_derivative(self) -> bool {
        matches!(
            self,
            Preset::WholeSpaceTime
                | Preset::WeightCommutatorTime
                | Preset::DirichletTime
                | Preset::ObliqueTime
                | Preset::ObliqueDifferenceTime
        )
    }

    /// Envelope with C = 1 for the given derivative orders.
    pub fn envelope(self, p: &PresetParams, o: &Orders) -> Result<BoundEnvelope> {
        let n = o.n as f64;
        let (a, ap, b, bp) = (o.alpha as f64, o.alpha_prime as f64, o.beta as f64, o.beta_prime as f64);
        let eps = p.eps;
        let (lp, lm) = (p.lambda_plus, p.lambda_minus);
        let base = EnvelopeTerm::unit();
        let env = match self {
            Preset::WholeSpace | Preset::WholeSpaceTime => {
                let extra = if self == Preset::WholeSpaceTime { 2.0 } else { 0.0 };
                BoundEnvelope::single(p.sigma, EnvelopeTerm { time: -(n + a + b + extra) / 2.0, ..base })
            }
            Preset::WeightCommutator | Preset::WeightCommutatorTime => {
                let r = p.mu.abs().min(1.0);
                let extra = if self == Preset::WeightCommutatorTime { 2.0 } else { 0.0 };
                let mut env = BoundEnvelope::single(0.5 * p.sigma, EnvelopeTerm { radius_x: -r, time: -(n + 2.0 + extra - r) / 2.0, ..base });
                env.ratio_profile = Some(p.mu);
                env
            }
            Preset::Dirichlet => BoundEnvelope::single(
                p.sigma,
                EnvelopeTerm {
                    big_r_x: lp - ap,
                    dist_x: pos(ap - 2.0 + eps),
                    big_r_y: lm - bp,
                    dist_y: pos(bp - 2.0 + eps),
                    time: -(n + a + b) / 2.0,
                    ..base
                },
            ),
            Preset::DirichletTime => BoundEnvelope::single(
                p.sigma,
                EnvelopeTerm {
                    big_r_x: lp - ap,
                    dist_x: pos(ap - 2.0 + eps),
                    big_r_y: lm - bp - 2.0,
                    dist_y: bp + eps,
                    time: -(n + a + b + 2.0) / 2.0,
                    ..base
                },
            ),
            Preset::Oblique | Preset::ObliqueTime => {
                let time = self == Preset::ObliqueTime;
                let term = EnvelopeTerm {
                    big_r_x: neg(lp - ap + 1.0),
                    dist_x: pos(ap - 3.0 + eps),
                    big_r_y: if time { lm - bp - 3.0 } else { lm - bp - 1.0 },
                    dist_y: if time { bp + 1.0 + eps } else { pos(bp - 1.0 + eps) },
                    interior_x: -pos(ap - 2.0 + eps).min(1.0),
                    time: -(n + a + b + if time { 2.0 } else { 0.0 }) / 2.0,
                    ..base
                };
                let mut env = BoundEnvelope::single(p.sigma, term);
                env.anisotropic = true;
                env
            }
            Preset::ObliqueDifference | Preset::ObliqueDifferenceTime => {
                if o.alpha != 2 {
                    return Err(Error::InvalidParameter(format!("difference estimate needs |α| = 2, got {}", o.alpha)));
                }
                let time = self == Preset::ObliqueDifferenceTime;
                let shift = if time { 1.0 } else { 0.0 };
                let lead = EnvelopeTerm { big_r_x: neg(lp - 2.0), time: -(n + 2.0 + 2.0 * shift + b) / 2.0, ..base };
                let near = EnvelopeTerm {
                    time: lead.time + 0.5 + eps,
                    radius_x: -(1.0 + eps),
                    dist_x: 1.0 + 3.0 * eps,
                    radius_y: -eps,
                    dist_y: eps,
                    ..lead
                };
                let far = EnvelopeTerm {
                    big_r_y: neg(lm - 1.0) - 1.0,
                    time: lead.time + b / 2.0 + 1.0 + shift,
                    radius_x: -1.0,
                    dist_x: 1.0 + 2.0 * eps,
                    radius_y: -(b + 1.0 + 2.0 * shift),
                    dist_y: b + 2.0 + 2.0 * shift,
                    ..lead
                };
                BoundEnvelope { c: 1.0, sigma: p.sigma, anisotropic: false, ratio_profile: None, terms: vec![near, far] }
            }
            Preset::OperatorHypothesis | Preset::ShortTimeHypothesis => {
                let short = self == Preset::ShortTimeHypothesis;
                let r = p.r;
                BoundEnvelope::single(
                    p.sigma,
                    EnvelopeTerm {
                        coeff: if short { p.delta.powf(p.kappa) } else { 1.0 },
                        big_r_x: lp + r,
                        big_r_y: lm,
                        radius_x: p.mu - r,
                        radius_y: -p.mu,
                        dist_x: p.eps_x,
                        dist_y: p.eps_y,
                        time: -(n + 2.0 - r) / 2.0 - if short { p.kappa } else { 0.0 },
                        ..base
                    },
                )
            }
        };
        Ok(env)
    }
}

/// Free parameters of the presets. λ± play the role of λ₁, λ₂ in the
/// hypothesis presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PresetParams {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub eps: f64,
    pub sigma: f64,
    pub mu: f64,
    pub r: f64,
    pub eps_x: f64,
    pub eps_y: f64,
    pub kappa: f64,
    pub delta: f64,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self { lambda_plus: 1.0, lambda_minus: 1.0, eps: 0.05, sigma: 0.125, mu: 0.0, r: 1.0, eps_x: 0.0, eps_y: 0.0, kappa: 1.0, delta: 1.0 }
    }
}

/// Derivative orders |α|, |α′|, |β|, |β′| in dimension n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Orders {
    pub n: usize,
    pub alpha: u32,
    pub alpha_prime: u32,
    pub beta: u32,
    pub beta_prime: u32,
}

impl Orders {
    pub fn plain(n: usize, alpha: u32, beta: u32) -> Self {
        Self { n, alpha, alpha_prime: alpha, beta, beta_prime: beta }
    }

    /// Orders of a sample; the primed orders count the first m coordinates.
    pub fn of_sample(sample: &KernelSample, m: usize) -> Self {
        let sum = |v: &[u32]| v.iter().sum::<u32>();
        let head = |v: &[u32]| v.iter().take(m).sum::<u32>();
        Self { n: sample.x.len(), alpha: sum(&sample.alpha), alpha_prime: head(&sample.alpha), beta: sum(&sample.beta), beta_prime: head(&sample.beta) }
    }
}

/// Relative change of a running maximum that counts as stable.
pub const STABLE_DRIFT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstSample {
    pub index: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub s: f64,
    pub value: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub preset: Preset,
    /// sup |value| / envelope over all samples.
    pub c_emp: f64,
    /// The same supremum over the first half of the samples.
    pub c_half: f64,
    /// c_emp / c_half − 1.
    pub drift: f64,
    pub stable: bool,
    /// Finite and stable.
    pub confirmed: bool,
    pub samples: usize,
    pub worst: Option<WorstSample>,
    /// Samples whose ratio exceeds c_emp.
    pub violations: Vec<usize>,
}

impl FitReport {
    /// Samples that exceed an asserted constant.
    pub fn violations_of(&self, ratios: &[f64], c: f64) -> Vec<usize> {
        ratios.iter().enumerate().filter(|(_, r)| **r > c).map(|(i, _)| i).collect()
    }
}

/// |value| / envelope for every sample, with C = 1. A zero envelope at a
/// nonzero value gives +∞.
pub fn sample_ratios(samples: &[KernelSample], preset: Preset, params: &PresetParams, domain: &WedgeDomain) -> Result<Vec<f64>> {
    samples
        .par_iter()
        .map(|s| {
            if s.d_s != preset.has_time_derivative() {
                return Err(Error::InvalidParameter(format!("sample ∂_s flag does not match preset {}", preset.name())));
            }
            let env = preset.envelope(params, &Orders::of_sample(s, domain.m()))?;
            let e = envelope_eval(&env, &s.x, &s.y, s.t, s.s, domain)?;
            Ok(if s.value == 0.0 { 0.0 } else if e > 0.0 { s.value.abs() / e } else { f64::INFINITY })
        })
        .collect()
}

/// Running maxima of the first half and of all ratios.
pub fn doubling(ratios: &[f64]) -> (f64, f64, f64) {
    let half = ratios.len().div_ceil(2);
    let c_half = ratios[..half].iter().fold(0.0f64, |m, r| m.max(*r));
    let c_all = ratios.iter().fold(0.0f64, |m, r| m.max(*r));
    let drift = if c_all == c_half { 0.0 } else if c_half > 0.0 { c_all / c_half - 1.0 } else { f64::INFINITY };
    (c_half, c_all, drift)
}

/// Fits the constant of an envelope to samples. Stability compares the
/// first half of the samples with all of them, so callers order samples
/// with the base cloud first and its extension second.
pub fn fit_constant(samples: &[KernelSample], preset: Preset, params: &PresetParams, domain: &WedgeDomain) -> Result<FitReport> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let ratios = sample_ratios(samples, preset, params, domain)?;
    let (c_half, c_emp, drift) = doubling(&ratios);
    let worst = ratios.iter().enumerate().fold(None, |best: Option<(usize, f64)>, (i, r)| match best {
        Some((_, b)) if b >= *r => best,
        _ => Some((i, *r)),
    });
    let worst = worst.map(|(index, ratio)| {
        let s = &samples[index];
        WorstSample {
            index,
            x: s.x.clone(),
            y: s.y.clone(),
            t: s.t,
            s: s.s,
            value: s.value,
            envelope: if ratio > 0.0 { s.value.abs() / ratio } else { f64::NAN },
        }
    });
    let stable = c_emp.is_finite() && drift < STABLE_DRIFT;
    let violations = ratios.iter().enumerate().filter(|(_, r)| **r > c_emp).map(|(i, _)| i).collect();
    Ok(FitReport { preset, c_emp, c_half, drift, stable, confirmed: stable, samples: samples.len(), worst, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientPath;
    use crate::wholespace::gamma_deriv;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn quarter() -> WedgeDomain {
        WedgeDomain::sector(PI / 2.0).unwrap()
    }

    fn sample(x: [f64; 2], y: [f64; 2], t: f64, alpha: Vec<u32>, beta: Vec<u32>, value: f64) -> KernelSample {
        KernelSample { x: x.to_vec(), y: y.to_vec(), t, s: 0.0, alpha, beta, d_s: false, value, kind: None }
    }

    #[test]
    fn bare_gaussian() {
        let env = BoundEnvelope::gaussian(0.3);
        let (x, y) = ([0.4, 0.7], [1.0, 0.2]);
        let v = envelope_eval(&env, &x, &y, 0.5, 0.1, &quarter()).unwrap();
        let d2 = 0.36 + 0.25;
        assert!((v - (-0.3 * d2 / 0.4f64).exp()).abs() < 1e-15);
        assert!(envelope_eval(&env, &x, &y, 0.1, 0.1, &quarter()).is_err());
        // no geometric factor: points outside the cone are fine
        assert!(envelope_eval(&env, &[-1.0, 0.0], &y, 1.0, 0.0, &quarter()).is_ok());
        let mut shaped = env.clone();
        shaped.terms[0].big_r_x = 1.0;
        assert!(matches!(envelope_eval(&shaped, &[0.0, 0.0], &y, 1.0, 0.0, &quarter()), Err(Error::VertexAxis)));
        assert!(envelope_eval(&shaped, &[-1.0, 0.0], &y, 1.0, 0.0, &quarter()).is_err());
    }

    #[test]
    fn whole_space_preset_without_derivatives() {
        let env = Preset::WholeSpace.envelope(&PresetParams { sigma: 0.25, ..Default::default() }, &Orders::plain(2, 0, 0)).unwrap();
        let (x, y, tau) = ([0.3, 0.9], [0.8, 0.5], 0.7);
        let v = envelope_eval(&env, &x, &y, tau, 0.0, &quarter()).unwrap();
        let expected = (-0.25 * (0.25 + 0.16) / tau).exp() / tau;
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn oblique_preset_without_derivatives() {
        let p = PresetParams { lambda_plus: 1.7, lambda_minus: 1.3, ..Default::default() };
        let env = Preset::Oblique.envelope(&p, &Orders::plain(2, 0, 0)).unwrap();
        let (x, y, tau) = ([0.3, 0.9], [0.8, 0.5], 0.7);
        let d = quarter();
        let v = envelope_eval(&env, &x, &y, tau, 0.0, &d).unwrap();
        let big_r = |z: &[f64; 2]| z[0].hypot(z[1]) / (z[0].hypot(z[1]) + tau.sqrt());
        let e = [0.5f64.sqrt(), 0.5f64.sqrt()];
        let across = (x[0] - y[0]) * e[1] - (x[1] - y[1]) * e[0];
        // (λ⁺ + 1)₋ = 0
        let expected = big_r(&y).powf(0.3) / tau * (-p.sigma * across * across / tau).exp();
        assert!((v - expected).abs() < 1e-14 * expected);
    }

    /// Independent transcriptions of every estimate, for m = n = 2.
    fn by_hand(preset: Preset, p: &PresetParams, a: f64, b: f64, x: [f64; 2], y: [f64; 2], tau: f64) -> f64 {
        let n = 2.0;
        let rad = |z: [f64; 2]| z[0].hypot(z[1]);
        let rr = |z: [f64; 2]| rad(z) / (rad(z) + tau.sqrt());
        // quarter plane: distance to the axes
        let rx = |z: [f64; 2]| z[0].min(z[1]) / rad(z);
        let plus = |v: f64| if v > 0.0 { v } else { 0.0 };
        let minus = |v: f64| if v < 0.0 { v } else { 0.0 };
        let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
        let g = |sig: f64| (-sig * d2 / tau).exp();
        let across = ((x[0] - y[0]) - (x[1] - y[1])).powi(2) / 2.0;
        let ga = (-p.sigma * across / tau).exp();
        let (lp, lm, e, s) = (p.lambda_plus, p.lambda_minus, p.eps, p.sigma);
        match preset {
            Preset::WholeSpace => tau.powf(-(n + a + b) / 2.0) * g(s),
            Preset::WholeSpaceTime => tau.powf(-(n + a + b + 2.0) / 2.0) * g(s),
            Preset::WeightCommutator | Preset::WeightCommutatorTime => {
                let r = p.mu.abs().min(1.0);
                let t = rad(x) / rad(y);
                let phi = if p.mu > 1.0 {
                    t.powf(p.mu) + t
                } else if p.mu > 0.0 {
                    t.powf(p.mu)
                } else if p.mu >= -1.0 {
                    1.0
                } else {
                    t.powf(p.mu + 1.0) + 1.0
                };
                let k = if preset == Preset::WeightCommutator { 2.0 } else { 4.0 };
                rad(x).powf(-r) * phi / tau.powf((n + k - r) / 2.0) * g(s / 2.0)
            }
            Preset::Dirichlet => {
                rr(x).powf(lp - a) / rx(x).powf(plus(a - 2.0 + e)) * rr(y).powf(lm - b) / rx(y).powf(plus(b - 2.0 + e))
                    * tau.powf(-(n + a + b) / 2.0)
                    * g(s)
            }
            Preset::DirichletTime => {
                rr(x).powf(lp - a) / rx(x).powf(plus(a - 2.0 + e)) * rr(y).powf(lm - b - 2.0) / rx(y).powf(b + e)
                    * tau.powf(-(n + a + b + 2.0) / 2.0)
                    * g(s)
            }
            Preset::Oblique => {
                rr(x).powf(minus(lp - a + 1.0)) / rx(x).powf(plus(a - 3.0 + e)) * rr(y).powf(lm - b - 1.0)
                    / rx(y).powf(plus(b - 1.0 + e))
                    * (1.0 - rr(x)).powf(-(plus(a - 2.0 + e).min(1.0)))
                    / tau.powf((n + a + b) / 2.0)
                    * ga
            }
            Preset::ObliqueTime => {
                rr(x).powf(minus(lp - a + 1.0)) / rx(x).powf(plus(a - 3.0 + e)) * rr(y).powf(lm - b - 3.0) / rx(y).powf(b + 1.0 + e)
                    * (1.0 - rr(x)).powf(-(plus(a - 2.0 + e).min(1.0)))
                    / tau.powf((n + a + b + 2.0) / 2.0)
                    * ga
            }
            Preset::ObliqueDifference => {
                rr(x).powf(minus(lp - 2.0)) / tau.powf((n + 2.0 + b) / 2.0)
                    * g(s)
                    * (tau.powf(0.5 + e) / (rad(x).powf(1.0 + e) * rx(x).powf(1.0 + 3.0 * e) * rad(y).powf(e) * rx(y).powf(e))
                        + rr(y).powf(minus(lm - 1.0) - 1.0) * tau.powf(b / 2.0 + 1.0)
                            / (rad(x) * rx(x).powf(1.0 + 2.0 * e) * rad(y).powf(b + 1.0) * rx(y).powf(b + 2.0)))
            }
            Preset::ObliqueDifferenceTime => {
                rr(x).powf(minus(lp - 2.0)) / tau.powf((n + 4.0 + b) / 2.0)
                    * g(s)
                    * (tau.powf(0.5 + e) / (rad(x).powf(1.0 + e) * rx(x).powf(1.0 + 3.0 * e) * rad(y).powf(e) * rx(y).powf(e))
                        + rr(y).powf(minus(lm - 1.0) - 1.0) * tau.powf(b / 2.0 + 2.0)
                            / (rad(x) * rx(x).powf(1.0 + 2.0 * e) * rad(y).powf(b + 3.0) * rx(y).powf(b + 4.0)))
            }
            Preset::OperatorHypothesis => {
                rr(x).powf(lp + p.r) * rr(y).powf(lm) * rad(x).powf(p.mu - p.r)
                    / (tau.powf((n + 2.0 - p.r) / 2.0) * rad(y).powf(p.mu) * rx(x).powf(p.eps_x) * rx(y).powf(p.eps_y))
                    * g(s)
            }
            Preset::ShortTimeHypothesis => {
                p.delta.powf(p.kappa) * rr(x).powf(lp + p.r) * rr(y).powf(lm) * rad(x).powf(p.mu - p.r)
                    / (tau.powf((n + 2.0 - p.r) / 2.0 + p.kappa) * rad(y).powf(p.mu) * rx(x).powf(p.eps_x) * rx(y).powf(p.eps_y))
                    * g(s)
            }
        }
    }

    #[test]
    fn registry_matches_hand_transcriptions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for preset in Preset::ALL {
            for _ in 0..3 {
                let p = PresetParams {
                    lambda_plus: rng.random_range(0.2..3.0),
                    lambda_minus: rng.random_range(0.2..3.0),
                    eps: rng.random_range(0.01..0.2),
                    sigma: rng.random_range(0.05..0.3),
                    mu: rng.random_range(-2.0..2.0),
                    r: rng.random_range(0.1..2.0),
                    eps_x: rng.random_range(0.0..0.4),
                    eps_y: rng.random_range(0.0..0.4),
                    kappa: rng.random_range(0.1..2.0),
                    delta: rng.random_range(0.1..1.0),
                };
                let a = if matches!(preset, Preset::ObliqueDifference | Preset::ObliqueDifferenceTime) { 2 } else { rng.random_range(0..3) };
                let b = rng.random_range(0..3);
                let x = [rng.random_range(0.05..2.0), rng.random_range(0.05..2.0)];
                let y = [rng.random_range(0.05..2.0), rng.random_range(0.05..2.0)];
                let tau = rng.random_range(0.05..2.0);
                let env = preset.envelope(&p, &Orders::plain(2, a, b)).unwrap();
                let got = envelope_eval(&env, &x, &y, tau, 0.0, &quarter()).unwrap();
                let want = by_hand(preset, &p, a as f64, b as f64, x, y, tau);
                assert!((got - want).abs() <= 1e-12 * want.abs(), "{preset:?}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(Preset::parse(p.name()).unwrap(), p);
        }
        assert!(Preset::parse("nope").is_err());
    }

    #[test]
    fn whole_space_fit_recovers_normalization() {
        let path = CoefficientPath::identity(2);
        let d = WedgeDomain::sector(3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<KernelSample> = (0..200)
            .map(|_| {
                let r = rng.random_range(0.1..3.0);
                let th: f64 = rng.random_range(0.2..2.8);
                let x = [r * th.cos(), r * th.sin()];
                let ry = rng.random_range(0.1..3.0);
                let ty: f64 = rng.random_range(0.2..2.8);
                let y = [ry * ty.cos(), ry * ty.sin()];
                let t = rng.random_range(0.05..3.0);
                let v = gamma_deriv(&path, &[0, 0], &[0, 0], false, &x, &y, t, 0.0).unwrap();
                sample(x, y, t, vec![0, 0], vec![0, 0], v)
            })
            .collect();
        let p = PresetParams { sigma: 0.25, ..Default::default() };
        let rep = fit_constant(&samples, Preset::WholeSpace, &p, &d).unwrap();
        assert!((rep.c_emp - 1.0 / (4.0 * PI)).abs() < 1e-12);
        assert!(rep.stable && rep.violations.is_empty());
    }

    #[test]
    fn zero_envelope_gives_infinite_ratio() {
        let d = quarter();
        // Γ of order 0 against a rate so large that the envelope underflows.
        let s = sample([0.2, 3.0], [3.0, 0.2], 0.01, vec![0, 0], vec![0, 0], 1.0);
        let p = PresetParams { sigma: 10.0, ..Default::default() };
        let rep = fit_constant(&[s], Preset::WholeSpace, &p, &d).unwrap();
        assert!(rep.c_emp.is_infinite() && !rep.confirmed);
        assert!(fit_constant(&[], Preset::WholeSpace, &p, &d).is_err());
    }

    #[test]
    fn time_flag_must_match() {
        let mut s = sample([0.5, 0.5], [0.6, 0.4], 0.3, vec![0, 0], vec![0, 0], 1.0);
        s.d_s = true;
        assert!(fit_constant(&[s], Preset::WholeSpace, &PresetParams::default(), &quarter()).is_err());
    }

    proptest! {
        #[test]
        fn adding_samples_never_lowers_the_constant(values in proptest::collection::vec(0.0f64..10.0, 1..40), extra in proptest::collection::vec(0.0f64..10.0, 0..20)) {
            let d = quarter();
            let p = PresetParams::default();
            let make = |v: &[f64]| -> Vec<KernelSample> {
                v.iter().enumerate().map(|(i, val)| {
                    let a = 0.2 + 0.03 * i as f64;
                    sample([a, 1.0], [1.0, a], 0.5, vec![0, 0], vec![0, 0], *val)
                }).collect()
            };
            let base = make(&values);
            let mut all = base.clone();
            all.extend(make(&extra).into_iter().map(|mut s| { s.t = 0.9; s }));
            let a = fit_constant(&base, Preset::WholeSpace, &p, &d).unwrap();
            let b = fit_constant(&all, Preset::WholeSpace, &p, &d).unwrap();
            prop_assert!(b.c_emp >= a.c_emp);
        }
    }
}
