//! The explicit whole-space Green function
//! Γ = (4π)^{-n/2} det(M)^{-1/2} exp(−(M⁻¹w, w)/4), w = x − y, M = ∫ₛᵗ A,
//! with derivatives of any order by Gaussian calculus.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coefficients::CoefficientPath;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Sparse polynomial in w, keyed by exponent vector.
#[derive(Debug, Clone, Default)]
struct Poly {
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    fn constant(n: usize, c: f64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![0; n], c);
        Self { terms }
    }

    fn add_term(&mut self, e: Vec<u32>, c: f64) {
        if c != 0.0 {
            *self.terms.entry(e).or_insert(0.0) += c;
        }
    }

    fn derivative(&self, k: usize) -> Self {
        let mut out = Poly::default();
        for (e, &c) in &self.terms {
            if e[k] > 0 {
                let mut d = e.clone();
                d[k] -= 1;
                out.add_term(d, c * e[k] as f64);
            }
        }
        out
    }

    /// self · Σ_j lin[j] w_j
    fn times_linear(&self, lin: &[f64]) -> Self {
        let mut out = Poly::default();
        for (e, &c) in &self.terms {
            for (j, &l) in lin.iter().enumerate() {
                if l != 0.0 {
                    let mut d = e.clone();
                    d[j] += 1;
                    out.add_term(d, c * l);
                }
            }
        }
        out
    }

    fn add(mut self, other: Poly) -> Self {
        for (e, c) in other.terms {
            self.add_term(e, c);
        }
        self
    }

    fn eval(&self, w: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, &c)| c * e.iter().zip(w).map(|(&p, &x)| x.powi(p as i32)).product::<f64>())
            .sum()
    }
}

/// Γ(·, ·; t, s) for a fixed pair of times, as a function of w = x − y.
#[derive(Debug, Clone)]
pub struct WholeSpaceKernel {
    n: usize,
    inv: Matrix,
    norm: f64,
    a_s: Option<Matrix>,
    s: f64,
}

impl WholeSpaceKernel {
    /// `None` when t ≤ s, where the kernel vanishes.
    pub fn new(path: &CoefficientPath, t: f64, s: f64) -> Result<Option<Self>> {
        if !(t > s) {
            return Ok(None);
        }
        let m = path.integrate(s, t)?;
        let n = path.dim();
        let norm = (4.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0) / m.determinant().sqrt();
        let a_s = (!path.is_breakpoint(s)).then(|| path.at(s).clone());
        Ok(Some(Self { n, inv: m.spd_inverse()?, norm, a_s, s }))
    }

    /// Kernel with a given covariance M and no s-derivative information.
    pub fn from_covariance(m: &Matrix) -> Result<Self> {
        let n = m.dim();
        let norm = (4.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0) / m.determinant().sqrt();
        Ok(Self { n, inv: m.spd_inverse()?, norm, a_s: None, s: f64::NAN })
    }

    /// Kernel of Γ convolved in y with the normalized bump exp(−|y|²/ε²),
    /// i.e. covariance M + (ε²/4)I.
    pub fn mollified(path: &CoefficientPath, t: f64, s: f64, eps: f64) -> Result<Option<Self>> {
        if !(t > s) {
            return Ok(None);
        }
        let mut m = path.integrate(s, t)?;
        m.add_assign_scaled(&Matrix::identity(path.dim()), 0.25 * eps * eps);
        Self::from_covariance(&m).map(Some)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// M⁻¹.
    pub fn inverse_covariance(&self) -> &Matrix {
        &self.inv
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        self.norm * (-0.25 * self.inv.quad_form(w)).exp()
    }

    /// D_x Γ = −½ M⁻¹w Γ.
    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let g = self.value(w);
        self.inv.mul_vec(w).into_iter().map(|v| -0.5 * v * g).collect()
    }

    /// D²_x Γ = (¼ M⁻¹w ⊗ M⁻¹w − ½ M⁻¹) Γ.
    pub fn hessian(&self, w: &[f64]) -> Matrix {
        let g = self.value(w);
        let bw = self.inv.mul_vec(w);
        let mut h = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                h[(i, j)] = (0.25 * bw[i] * bw[j] - 0.5 * self.inv[(i, j)]) * g;
            }
        }
        h
    }

    /// D_w^γ (∂_s)^{d_s} Γ at w.
    pub fn deriv(&self, gamma: &[u32], d_s: bool, w: &[f64]) -> Result<f64> {
        if gamma.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: gamma.len() });
        }
        if w.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: w.len() });
        }
        let n = self.n;
        let mut p = if d_s {
            // ∂_s M = −A(s): ∂_s Γ = Γ·(½ tr(M⁻¹A) − ¼ wᵀ M⁻¹ A M⁻¹ w).
            let a = self.a_s.as_ref().ok_or(Error::DerivativeAtBreakpoint(self.s))?;
            let bab = self.inv.mul(a).mul(&self.inv);
            let mut p = Poly::constant(n, 0.5 * self.inv.mul(a).trace());
            for i in 0..n {
                for j in 0..n {
                    let mut e = vec![0; n];
                    e[i] += 1;
                    e[j] += 1;
                    p.add_term(e, -0.25 * bab[(i, j)]);
                }
            }
            p
        } else {
            Poly::constant(n, 1.0)
        };
        for (k, &order) in gamma.iter().enumerate() {
            // ∂_k q = −½ (M⁻¹w)_k
            let lin: Vec<f64> = (0..n).map(|j| -0.5 * self.inv[(k, j)]).collect();
            for _ in 0..order {
                p = p.derivative(k).add(p.times_linear(&lin));
            }
        }
        Ok(p.eval(w) * self.value(w))
    }
}

fn check_point(n: usize, v: &[f64]) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    Ok(())
}

fn diff(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// Γ(x, y; t, s); zero for t ≤ s.
pub fn gamma(path: &CoefficientPath, x: &[f64], y: &[f64], t: f64, s: f64) -> Result<f64> {
    check_point(path.dim(), x)?;
    check_point(path.dim(), y)?;
    Ok(WholeSpaceKernel::new(path, t, s)?.map_or(0.0, |k| k.value(&diff(x, y))))
}

/// D_x^α D_y^β (∂_s)^{d_s} Γ(x, y; t, s).
#[allow(clippy::too_many_arguments)]
pub fn gamma_deriv(
    path: &CoefficientPath,
    alpha: &[u32],
    beta: &[u32],
    d_s: bool,
    x: &[f64],
    y: &[f64],
    t: f64,
    s: f64,
) -> Result<f64> {
    let n = path.dim();
    check_point(n, x)?;
    check_point(n, y)?;
    if alpha.len() != n || beta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: alpha.len().min(beta.len()) });
    }
    if d_s && path.is_breakpoint(s) {
        return Err(Error::DerivativeAtBreakpoint(s));
    }
    let Some(k) = WholeSpaceKernel::new(path, t, s)? else {
        return Ok(0.0);
    };
    // D_y = −D_w, D_x = D_w.
    let gamma: Vec<u32> = alpha.iter().zip(beta).map(|(a, b)| a + b).collect();
    let sign = if beta.iter().sum::<u32>() % 2 == 1 { -1.0 } else { 1.0 };
    Ok(sign * k.deriv(&gamma, d_s, &diff(x, y))?)
}

/// One (x, y, t, s) point of a sample cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub s: f64,
}

/// Result of fitting |D Γ| ≤ C τ^{-(n+k)/2} exp(−σ|x−y|²/τ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub c_emp: f64,
    pub sigma_emp: f64,
    pub stable: bool,
}

/// Gaussian quotients |x−y|²/τ at or above this count as the far field
/// that determines σ.
const FAR_FIELD: f64 = 4.0;

/// Random cloud mixing diagonal points (x = y) with off-diagonal points whose
/// |x−y|²/τ is spread over [0, 40].
pub fn random_cloud(n: usize, size: usize, seed: u64) -> Vec<CloudPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|i| {
            let tau = 10f64.powf(rng.random_range(-1.5..0.7));
            let s = rng.random_range(-1.0..1.0);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x = if i % 8 == 0 {
                y.clone()
            } else {
                let dir = unit_vector(&mut rng, n);
                let r = (rng.random_range(0.0..40.0) * tau).sqrt();
                y.iter().zip(&dir).map(|(a, d)| a + r * d).collect()
            };
            CloudPoint { x, y, t: s + tau, s }
        })
        .collect()
}

pub(crate) fn unit_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Fits the smallest Gaussian rate and the matching constant on a cloud.
///
/// C_peak is the largest scaled value |D|τ^{(n+k)/2}; σ is the smallest rate
/// at which the far-field samples still lie under C_peak·exp(−σξ); C is then
/// the smallest constant valid for that σ on every sample. `stable` compares
/// the constant from the first half of the cloud with that of the full cloud.
pub fn verify_gaussian_bound(
    path: &CoefficientPath,
    alpha: &[u32],
    beta: &[u32],
    d_s: bool,
    cloud: &[CloudPoint],
) -> Result<GaussianFit> {
    if cloud.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = path.dim();
    let k = alpha.iter().chain(beta).sum::<u32>() as f64 + if d_s { 2.0 } else { 0.0 };
    let scaled: Vec<(f64, f64)> = cloud
        .par_iter()
        .map(|p| {
            let tau = p.t - p.s;
            if !(tau > 0.0) {
                return Err(Error::InvalidInterval { s: p.s, t: p.t });
            }
            let v = gamma_deriv(path, alpha, beta, d_s, &p.x, &p.y, p.t, p.s)?;
            let xi = p.x.iter().zip(&p.y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / tau;
            let g = if v == 0.0 {
                f64::NEG_INFINITY
            } else {
                v.abs().ln() + 0.5 * (n as f64 + k) * tau.ln()
            };
            Ok((g, xi))
        })
        .collect::<Result<_>>()?;
    let fit = |pts: &[(f64, f64)]| -> (f64, f64) {
        let peak = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let far: Vec<&(f64, f64)> = pts.iter().filter(|p| p.1 >= FAR_FIELD).collect();
        let pool: Vec<&(f64, f64)> = if far.is_empty() { pts.iter().filter(|p| p.1 > 0.0).collect() } else { far };
        let sigma = pool
            .iter()
            .filter(|p| p.0.is_finite())
            .map(|p| (peak - p.0) / p.1)
            .fold(f64::INFINITY, f64::min);
        let sigma = if sigma.is_finite() { sigma.max(0.0) } else { 0.0 };
        let c = pts.iter().map(|p| (p.0 + sigma * p.1).exp()).fold(0.0, f64::max);
        (c, sigma)
    };
    let (c_full, sigma) = fit(&scaled);
    let (c_half, _) = fit(&scaled[..scaled.len().div_ceil(2)]);
    let stable = c_full.is_finite() && (c_full - c_half).abs() < 0.1 * c_full;
    Ok(GaussianFit { c_emp: c_full, sigma_emp: sigma, stable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn id(n: usize) -> CoefficientPath {
        CoefficientPath::identity(n)
    }

    #[test]
    fn peak_values() {
        let v = gamma(&id(2), &[0.0, 0.0], &[0.0, 0.0], 1.0, 0.0).unwrap();
        assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-16);
        let two = CoefficientPath::constant(Matrix::diagonal(&[2.0, 2.0])).unwrap();
        let v = gamma(&two, &[0.3, 0.1], &[0.3, 0.1], 1.5, 0.5).unwrap();
        assert!((v - 1.0 / (8.0 * PI)).abs() < 1e-16);
        assert_eq!(gamma(&id(2), &[0.0, 0.0], &[1.0, 0.0], 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(gamma(&id(2), &[0.0, 0.0], &[0.0, 0.0], 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn derivative_examples() {
        let g = gamma_deriv(&id(2), &[1, 0], &[0, 0], false, &[0.2, 0.2], &[0.2, 0.2], 1.0, 0.0).unwrap();
        assert_eq!(g, 0.0);
        let d2 = gamma_deriv(&id(1), &[2], &[0], false, &[0.0], &[0.0], 1.0, 0.0).unwrap();
        assert!((d2 + 0.5 / (4.0 * PI).sqrt()).abs() < 1e-15);
        let p = CoefficientPath::new(vec![0.0, 1.0], vec![Matrix::identity(2), Matrix::diagonal(&[2.0, 1.0])]).unwrap();
        let err = gamma_deriv(&p, &[0, 0], &[0, 0], true, &[0.0, 0.0], &[0.0, 0.0], 2.0, 1.0);
        assert!(matches!(err, Err(Error::DerivativeAtBreakpoint(_))));
        let base = gamma_deriv(&p, &[0, 0], &[0, 0], false, &[0.1, 0.0], &[0.0, 0.3], 2.0, 0.5).unwrap();
        assert_eq!(base, gamma(&p, &[0.1, 0.0], &[0.0, 0.3], 2.0, 0.5).unwrap());
    }

    #[test]
    fn closed_form_gradient_and_hessian_agree_with_engine() {
        let a = Matrix::from_row_major(2, vec![1.4, 0.3, 0.3, 0.8]).unwrap();
        let p = CoefficientPath::constant(a).unwrap();
        let k = WholeSpaceKernel::new(&p, 0.7, 0.0).unwrap().unwrap();
        let w = [0.3, -0.45];
        let g = k.gradient(&w);
        let h = k.hessian(&w);
        assert!((g[0] - k.deriv(&[1, 0], false, &w).unwrap()).abs() < 1e-15);
        assert!((g[1] - k.deriv(&[0, 1], false, &w).unwrap()).abs() < 1e-15);
        assert!((h[(0, 1)] - k.deriv(&[1, 1], false, &w).unwrap()).abs() < 1e-14);
        assert!((h[(1, 1)] - k.deriv(&[0, 2], false, &w).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn s_derivative_matches_adjoint_equation() {
        // ∂_s Γ = −aⁱʲ(s) D_{y_i} D_{y_j} Γ
        let p = CoefficientPath::new(
            vec![0.0, 1.0],
            vec![
                Matrix::from_row_major(2, vec![1.4, 0.3, 0.3, 0.8]).unwrap(),
                Matrix::from_row_major(2, vec![0.7, -0.2, -0.2, 1.9]).unwrap(),
            ],
        )
        .unwrap();
        let (x, y) = ([0.4, -0.1], [-0.2, 0.5]);
        for s in [0.3, 1.2] {
            let a = p.at(s);
            let ds = gamma_deriv(&p, &[0, 0], &[0, 0], true, &x, &y, 1.8, s).unwrap();
            let mut rhs = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let mut b = [0u32; 2];
                    b[i] += 1;
                    b[j] += 1;
                    rhs -= a[(i, j)] * gamma_deriv(&p, &[0, 0], &b, false, &x, &y, 1.8, s).unwrap();
                }
            }
            assert!((ds - rhs).abs() < 1e-13 * rhs.abs().max(1e-3), "{ds} vs {rhs}");
        }
    }

    #[test]
    fn gaussian_fit_for_identity_is_the_formula() {
        let cloud = random_cloud(2, 400, 11);
        let fit = verify_gaussian_bound(&id(2), &[0, 0], &[0, 0], false, &cloud).unwrap();
        assert!((fit.sigma_emp - 0.25).abs() < 1e-12);
        assert!((fit.c_emp - 1.0 / (4.0 * PI)).abs() < 1e-14);
        assert!(fit.stable);
    }

    #[test]
    fn gaussian_fit_anisotropic_and_derivative() {
        let cloud = random_cloud(2, 400, 12);
        let p = CoefficientPath::constant(Matrix::diagonal(&[2.0, 0.5])).unwrap();
        let fit = verify_gaussian_bound(&p, &[0, 0], &[0, 0], false, &cloud).unwrap();
        assert!(fit.sigma_emp >= 0.125 && fit.c_emp.is_finite());
        let fit = verify_gaussian_bound(&id(2), &[1, 0], &[0, 0], false, &cloud).unwrap();
        assert!(fit.sigma_emp < 0.25 && fit.c_emp.is_finite());
        assert!(matches!(verify_gaussian_bound(&id(2), &[0, 0], &[0, 0], false, &[]), Err(Error::EmptySamples)));
    }
}
