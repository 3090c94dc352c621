//! Corner exponents: λ_D from the Dirichlet eigenvalue of the cross-section,
//! and decay-fit estimates of λ_c± from caloric functions in a sector.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::CoefficientPath;
use crate::error::{Error, Result};
use crate::geometry::{ConeProfile, ConeSpec, WedgeDomain};
use crate::solver::{solve, BoundaryCondition, GridFunction, Initial, MeshConfig, ProblemSpec, SectorMesh, VertexRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    EigenSolve,
    DecayFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Sign::Plus),
            "minus" | "-" => Ok(Sign::Minus),
            other => Err(Error::Parse(format!("unknown sign `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDiagnostics {
    pub radii: Vec<f64>,
    /// sup |u| over each box, divided by the sup over the κR box.
    pub normalized_sups: Vec<f64>,
    pub residual: f64,
    pub kappa: f64,
    /// Slope of every seed; the reported exponent is the smallest.
    pub seed_slopes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalExponentReport {
    pub lambda: f64,
    pub method: Method,
    pub sign: Sign,
    pub diagnostics: Option<FitDiagnostics>,
    pub reliable: bool,
}

/// λ_D = −(m−2)/2 + √(Λ_D + (m−2)²/4) for the Laplacian, with Λ_D the first
/// Dirichlet eigenvalue of the cross-section.
pub fn lambda_dirichlet(domain: &WedgeDomain) -> Result<CriticalExponentReport> {
    let (lambda, method) = match (domain.m(), domain.cone()) {
        (2, _) => {
            let theta0 = domain.opening_angle().ok_or_else(|| Error::InvalidDomain("planar cone without an opening angle".into()))?;
            (PI / theta0, Method::ClosedForm)
        }
        (m, ConeSpec::LipschitzGraph { profile: ConeProfile::Circular { slope }, .. }) => {
            let half = PI / 2.0 - slope.atan();
            let big = cap_eigenvalue(m, half)?;
            let k = (m as f64 - 2.0) / 2.0;
            (-k + (big + k * k).sqrt(), Method::EigenSolve)
        }
        _ => return Err(Error::InvalidDomain("unsupported cross-section".into())),
    };
    Ok(CriticalExponentReport { lambda, method, sign: Sign::Plus, diagnostics: None, reliable: true })
}

/// Integration steps of the cap shooting problem.
const CAP_STEPS: usize = 4000;

/// First Dirichlet eigenvalue of the Laplace–Beltrami operator on the cap
/// {angle from the pole < α} of 𝕊^{m−1}, for axisymmetric eigenfunctions:
/// w″ + (m−2)cot θ w′ + Λw = 0, w′(0) = 0, w(α) = 0.
pub fn cap_eigenvalue(m: usize, alpha: f64) -> Result<f64> {
    if m < 2 || !(alpha > 0.0 && alpha < PI) {
        return Err(Error::InvalidDomain(format!("cap half-angle {alpha} outside (0, π)")));
    }
    let end = |big: f64| cap_shoot(m, alpha, big);
    let mut lo = 0.0;
    let mut hi = 0.5;
    while end(hi) > 0.0 {
        lo = hi;
        hi *= 1.25;
        if hi > 1e8 {
            return Err(Error::Quadrature("cap eigenvalue bracket not found".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if end(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// w(α) for the cap problem with w(0) = 1, by RK4 from a series start.
fn cap_shoot(m: usize, alpha: f64, big: f64) -> f64 {
    let k = m as f64 - 2.0;
    let start = 1e-6 * alpha;
    let mut w = 1.0 - big * start * start / (2.0 * (k + 1.0));
    let mut dw = -big * start / (k + 1.0);
    let h = (alpha - start) / CAP_STEPS as f64;
    let rhs = |th: f64, w: f64, dw: f64| -k * dw / th.tan() - big * w;
    let mut th = start;
    for _ in 0..CAP_STEPS {
        let (k1w, k1d) = (dw, rhs(th, w, dw));
        let (k2w, k2d) = (dw + 0.5 * h * k1d, rhs(th + 0.5 * h, w + 0.5 * h * k1w, dw + 0.5 * h * k1d));
        let (k3w, k3d) = (dw + 0.5 * h * k2d, rhs(th + 0.5 * h, w + 0.5 * h * k2w, dw + 0.5 * h * k2d));
        let (k4w, k4d) = (dw + h * k3d, rhs(th + h, w + h * k3w, dw + h * k3d));
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        dw += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        th += h;
    }
    w
}

/// The fixed κ of the decay definition.
pub const KAPPA: f64 = 0.75;

/// Parameters of the decay-fit estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFitConfig {
    /// Radius R of the outer box; boxes have radii R·2^{-j}, j = 1..=levels.
    pub r_box: f64,
    /// Outer radius of the computational sector (u = 0 there).
    pub r_out: f64,
    pub levels: usize,
    pub n_theta: usize,
    /// Radial nodes per factor of two in radius.
    pub steps_per_octave: usize,
    pub dt: f64,
    pub t_start: f64,
    /// Top t₀ of the parabolic boxes.
    pub t_top: f64,
    /// Fits with RMS log-residual above this are flagged unreliable.
    pub residual_tol: f64,
}

impl Default for DecayFitConfig {
    fn default() -> Self {
        Self {
            r_box: 0.1,
            r_out: 1.0,
            levels: 5,
            n_theta: 64,
            steps_per_octave: 7,
            dt: 2e-3,
            t_start: 0.0,
            t_top: 0.3,
            residual_tol: 0.03,
        }
    }
}

impl DecayFitConfig {
    fn mesh(&self, theta0: f64, path: &CoefficientPath) -> Result<SectorMesh> {
        let q = 0.5f64.powf(1.0 / self.steps_per_octave as f64);
        // r_min sits a whole number of octaves below the box so every
        // ρ_j = R·2^{-j} is a node.
        let r_min = self.r_box * 0.5f64.powi((2 * self.levels) as i32);
        let cfg = MeshConfig {
            r_min,
            r_max: self.r_out,
            q,
            n_theta: self.n_theta,
            t_start: self.t_start,
            t_end: self.t_top,
            dt: self.dt,
            store_stride: 1,
        };
        SectorMesh::new(theta0, &cfg, path)
    }
}

const SEED_COUNT: usize = 3;

/// Bounded seeds away from the vertex: the unit annulus indicator (smoothed)
/// and two positive variants.
fn seeds(cfg: &DecayFitConfig, theta0: f64) -> Vec<Initial> {
    let (a, b) = (0.4 * cfg.r_out, 0.8 * cfg.r_out);
    let ramp = 0.05 * cfg.r_out;
    let annulus = move |r: f64| {
        let up = ((r - a) / ramp).clamp(0.0, 1.0);
        let down = ((b - r) / ramp).clamp(0.0, 1.0);
        up.min(down)
    };
    vec![
        Initial::Field(Arc::new(move |p: &[f64; 2], _| annulus(p[0].hypot(p[1])))),
        Initial::Field(Arc::new(move |p: &[f64; 2], _| {
            let th = p[1].atan2(p[0]).rem_euclid(2.0 * PI);
            annulus(p[0].hypot(p[1])) * (1.0 + 0.5 * (th / theta0 * PI).cos())
        })),
        Initial::Field(Arc::new(move |p: &[f64; 2], _| {
            let c = [0.75 * b * (0.3 * theta0).cos(), 0.75 * b * (0.3 * theta0).sin()];
            (-((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)) / (0.15 * b).powi(2)).exp()
        })),
    ]
}

/// Sup of |u| over the parabolic box of radius ρ = r_i (nodes with index
/// ≤ i) and times in (t₀ − ρ², t₀].
fn box_sup(u: &GridFunction, i_max: usize, rho: f64, t_top: f64) -> f64 {
    let mut sup = 0.0f64;
    for (k, slice) in u.slices.iter().enumerate() {
        let t = u.time(k);
        if t > t_top - rho * rho || k + 1 == u.slices.len() {
            for i in 0..=i_max {
                for j in 0..=u.mesh.n_theta {
                    sup = sup.max(slice[u.mesh.index(i, j)].abs());
                }
            }
        }
    }
    sup
}

/// Least-squares slope and RMS residual of y against x.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let res = (x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum::<f64>() / n).sqrt();
    (slope, res)
}

struct SeedFit {
    slope: f64,
    residual: f64,
    sups: Vec<f64>,
}

fn fit_seed(path: &CoefficientPath, domain: &WedgeDomain, cfg: &DecayFitConfig, mesh: &SectorMesh, seed: Initial, vertex: VertexRow) -> Result<SeedFit> {
    let spec = ProblemSpec::new(BoundaryCondition::Dirichlet, *domain, path.clone())?
        .with_initial(seed)
        .with_vertex(vertex);
    let u = solve(&spec, mesh)?;
    let norm_i = mesh.nearest_radius_index(KAPPA * cfg.r_box);
    let norm = box_sup(&u, norm_i, mesh.radius(norm_i), cfg.t_top);
    if !(norm > 0.0) {
        return Err(Error::Mesh("seed solution vanished inside the box".into()));
    }
    let mut logs_r = Vec::new();
    let mut logs_u = Vec::new();
    let mut sups = Vec::new();
    for j in 1..=cfg.levels {
        let i = mesh.nearest_radius_index(cfg.r_box * 0.5f64.powi(j as i32));
        let rho = mesh.radius(i);
        let s = box_sup(&u, i, rho, cfg.t_top) / norm;
        logs_r.push(rho.ln());
        logs_u.push(s.ln());
        sups.push(s);
    }
    let (slope, residual) = linear_fit(&logs_r, &logs_u);
    Ok(SeedFit { slope, residual, sups })
}

/// Decay-fit estimate of λ_c^± in a sector. For `Minus` the estimator runs
/// on the time-reversed path.
pub fn estimate_lambda_c(path: &CoefficientPath, domain: &WedgeDomain, sign: Sign, cfg: &DecayFitConfig) -> Result<CriticalExponentReport> {
    let path = match sign {
        Sign::Plus => path.clone(),
        Sign::Minus => path.time_reverse(),
    };
    let theta0 = match domain.cone() {
        ConeSpec::Sector { theta0 } if domain.n() == 2 => *theta0,
        _ => return Err(Error::InvalidDomain("decay fits need a planar sector (m = n = 2)".into())),
    };
    if cfg.levels < 2 {
        return Err(Error::InvalidParameter("need at least two box radii".into()));
    }
    let mesh = cfg.mesh(theta0, &path)?;
    let run = |vertex: Vec<VertexRow>| -> Result<Vec<SeedFit>> {
        seeds(cfg, theta0)
            .into_par_iter()
            .zip(vertex)
            .map(|(seed, v)| fit_seed(&path, domain, cfg, &mesh, seed, v))
            .collect()
    };
    // First pass pins the excised ring to zero; the second uses the
    // first-pass exponent in the homogeneous extrapolation row.
    let first = run(vec![VertexRow::Dirichlet; SEED_COUNT])?;
    let second = run(first.iter().map(|f| VertexRow::Extrapolate { lambda: f.slope.max(0.0) }).collect())?;
    let best = second
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.slope.total_cmp(&b.1.slope))
        .map(|(k, _)| k)
        .expect("seed library is non-empty");
    let fit = &second[best];
    let radii = (1..=cfg.levels).map(|j| mesh.radius(mesh.nearest_radius_index(cfg.r_box * 0.5f64.powi(j as i32)))).collect();
    let reliable = fit.residual <= cfg.residual_tol && fit.slope.is_finite();
    Ok(CriticalExponentReport {
        lambda: fit.slope,
        method: Method::DecayFit,
        sign,
        diagnostics: Some(FitDiagnostics {
            radii,
            normalized_sups: fit.sups.clone(),
            residual: fit.residual,
            kappa: KAPPA,
            seed_slopes: second.iter().map(|f| f.slope).collect(),
        }),
        reliable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let l = |t: f64| lambda_dirichlet(&WedgeDomain::sector(t).unwrap()).unwrap().lambda;
        assert!((l(PI) - 1.0).abs() < 1e-15);
        assert!((l(PI / 2.0) - 2.0).abs() < 1e-15);
        assert!((l(2.0 * PI - 1e-9) - 0.5).abs() < 1e-9);
        let two = WedgeDomain::sector(PI / 2.0).unwrap().to_graph().unwrap();
        assert!((lambda_dirichlet(&two).unwrap().lambda - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cap_eigenvalues() {
        // Hemisphere: Λ = m − 1 and λ = 1 for every m.
        for m in 3..6 {
            assert!((cap_eigenvalue(m, PI / 2.0).unwrap() - (m as f64 - 1.0)).abs() < 1e-8);
        }
        let half = WedgeDomain::graph(ConeProfile::Circular { slope: 0.0 }, 0.0, 3, 3).unwrap();
        let r = lambda_dirichlet(&half).unwrap();
        assert_eq!(r.method, Method::EigenSolve);
        assert!((r.lambda - 1.0).abs() < 1e-8);
        // m = 2 caps are intervals: Λ = (π/(2α))².
        assert!((cap_eigenvalue(2, 0.7).unwrap() - (PI / 1.4).powi(2)).abs() < 1e-8);
        // Narrow cones: Λ ≈ (j₀/α)² with j₀ the first zero of J₀.
        let a = 0.05;
        assert!((cap_eigenvalue(3, a).unwrap() * a * a / 2.404825557695773f64.powi(2) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn linear_fit_recovers_slope() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let (s, r) = linear_fit(&x, &x.map(|v| 2.5 * v - 1.0));
        assert!((s - 2.5).abs() < 1e-14 && r < 1e-14);
    }
}
