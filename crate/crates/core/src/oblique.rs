//! Oblique-derivative Green function built from the Dirichlet one by
//! integrating D_{y₁}Γᴰ along the graph axis, Γᴺ(x) = ∫₀^∞ D_{y₁}Γᴰ(x + ζe₁) dζ,
//! plus cross-checks and samples of Γᴺ − Γ.

use rayon::prelude::*;

use crate::coefficients::CoefficientPath;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::samples::{KernelSample, SampleKind};
use crate::geometry::WedgeDomain;
use crate::solver::{green, BoundaryCondition, ComparisonRegion, GreenTable, NodePick, ProblemSpec, SectorMesh};
use crate::wholespace::WholeSpaceKernel;

/// Source of D_{y₁}Γᴰ(x, y; t, s) for one fixed pole (y, s).
pub trait DirichletProvider: Sync {
    fn pole(&self) -> ([f64; 2], f64);
    /// Unit vector e₁ of the graph frame.
    fn axis(&self) -> [f64; 2];
    /// D_{y₁}Γᴰ at x and time t.
    fn dy1(&self, x: &[f64; 2], t: f64) -> Result<f64>;
    /// Largest |x| at which `dy1` is available.
    fn reach(&self) -> f64;
    /// Smallest eigenvalue bound ν of the coefficients, for tail bounds.
    fn nu(&self) -> f64;
}

/// Odd images in the upper half-plane, mollified with width ε.
/// Exact Dirichlet kernel for diagonal coefficients.
pub struct HalfPlaneImages {
    pub path: CoefficientPath,
    pub y: [f64; 2],
    pub s: f64,
    pub eps: f64,
}

impl HalfPlaneImages {
    fn kernel(&self, t: f64) -> Result<Option<WholeSpaceKernel>> {
        WholeSpaceKernel::mollified(&self.path, t, self.s, self.eps)
    }

    /// Γ(x, y) − Γ(x, y*) with y* the mirror image of y.
    pub fn dirichlet(&self, x: &[f64; 2], t: f64) -> Result<f64> {
        Ok(self.kernel(t)?.map_or(0.0, |k| {
            k.value(&[x[0] - self.y[0], x[1] - self.y[1]]) - k.value(&[x[0] - self.y[0], x[1] + self.y[1]])
        }))
    }

    /// Γ(x, y) + Γ(x, y*).
    pub fn oblique(&self, x: &[f64; 2], t: f64) -> Result<f64> {
        Ok(self.kernel(t)?.map_or(0.0, |k| {
            k.value(&[x[0] - self.y[0], x[1] - self.y[1]]) + k.value(&[x[0] - self.y[0], x[1] + self.y[1]])
        }))
    }
}

impl DirichletProvider for HalfPlaneImages {
    fn pole(&self) -> ([f64; 2], f64) {
        (self.y, self.s)
    }

    fn axis(&self) -> [f64; 2] {
        [0.0, 1.0]
    }

    fn dy1(&self, x: &[f64; 2], t: f64) -> Result<f64> {
        let Some(k) = self.kernel(t)? else { return Ok(0.0) };
        // D_y Γ(x, y) = −D_x Γ; the image term depends on y₂ through −y₂.
        let direct = -k.gradient(&[x[0] - self.y[0], x[1] - self.y[1]])[1];
        let image = -k.gradient(&[x[0] - self.y[0], x[1] + self.y[1]])[1];
        Ok(direct + image)
    }

    fn reach(&self) -> f64 {
        f64::INFINITY
    }

    fn nu(&self) -> f64 {
        self.path.nu()
    }
}

/// D_{y₁} of two numerical Dirichlet tables released at y ± δe₁.
pub struct NumericalDirichlet {
    pub plus: GreenTable,
    pub minus: GreenTable,
    pub y: [f64; 2],
    pub delta: f64,
    axis: [f64; 2],
    nu: f64,
}

impl NumericalDirichlet {
    /// Solves the two shifted Dirichlet problems; δ defaults to ε/4.
    pub fn build(base: &ProblemSpec, y: [f64; 2], s: f64, eps: f64, delta: Option<f64>, mesh: &SectorMesh) -> Result<Self> {
        let e = base.domain.graph_axis()?;
        let axis = [e[0], e[1]];
        let delta = delta.unwrap_or(0.25 * eps);
        let shifted = |sign: f64| [y[0] + sign * delta * axis[0], y[1] + sign * delta * axis[1]];
        let (plus, minus) = rayon::join(
            || green(base, shifted(1.0), s, Some(eps), mesh),
            || green(base, shifted(-1.0), s, Some(eps), mesh),
        );
        Ok(Self { plus: plus?, minus: minus?, y, delta, axis, nu: base.path.nu() })
    }

    fn slice(&self, t: f64) -> Result<usize> {
        let k = self.plus.grid.nearest_slice(t);
        if (self.plus.grid.time(k) - t).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::Mesh(format!("time {t} is not a stored slice")));
        }
        Ok(k)
    }
}

impl DirichletProvider for NumericalDirichlet {
    fn pole(&self) -> ([f64; 2], f64) {
        (self.y, self.plus.s)
    }

    fn axis(&self) -> [f64; 2] {
        self.axis
    }

    fn dy1(&self, x: &[f64; 2], t: f64) -> Result<f64> {
        let k = self.slice(t)?;
        Ok((self.plus.value(k, x)? - self.minus.value(k, x)?) / (2.0 * self.delta))
    }

    fn reach(&self) -> f64 {
        self.plus.grid.mesh.r_max() * (1.0 - 1e-9)
    }

    fn nu(&self) -> f64 {
        self.nu
    }
}

/// Settings of the ray quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct RayQuadrature {
    /// Truncation Z: the ray is integrated up to ζ = Z√(t−s).
    pub z: f64,
    pub panels: usize,
    pub max_panels: usize,
    pub order: usize,
    /// Relative tolerance for panel halving and the tail bound.
    pub tol: f64,
}

impl Default for RayQuadrature {
    fn default() -> Self {
        Self { z: 8.0, panels: 16, max_panels: 256, order: 8, tol: 1e-4 }
    }
}

/// Γᴺ(x, y; t, s) by the ray integral. Panels are halved until two
/// successive composite Gauss–Legendre values agree; the neglected tail is
/// bounded from the endpoint value of a Gaussian with rate ν/4.
pub fn green_oblique_via_formula(provider: &dyn DirichletProvider, x: &[f64; 2], t: f64, quad: &RayQuadrature) -> Result<f64> {
    let (y, s) = provider.pole();
    if !(t > s) {
        return Ok(0.0);
    }
    let tau = t - s;
    let e = provider.axis();
    let point = |z: f64| [x[0] + z * e[0], x[1] + z * e[1]];
    // Distance along the ray to the reach of the provider.
    let b = x[0] * e[0] + x[1] * e[1];
    let c = x[0] * x[0] + x[1] * x[1] - provider.reach().powi(2);
    let exit = if provider.reach().is_finite() { -b + (b * b - c).max(0.0).sqrt() } else { f64::INFINITY };
    let len = (quad.z * tau.sqrt()).min(exit);
    if !(len > 0.0) {
        return Err(Error::StencilOutsideMesh);
    }
    let rule = GaussLegendre::new(quad.order);
    let f = |z: f64| provider.dy1(&point(z), t);
    let integrate = |panels: usize| -> Result<f64> {
        let h = len / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let lo = k as f64 * h;
            for (z, w) in rule.mapped(lo, lo + h) {
                total += w * f(z)?;
            }
        }
        Ok(total)
    };
    let mut panels = quad.panels;
    let mut value = integrate(panels)?;
    loop {
        let finer = integrate(2 * panels)?;
        let converged = (finer - value).abs() <= quad.tol * finer.abs().max(1e-300);
        value = finer;
        panels *= 2;
        if converged {
            break;
        }
        if panels >= quad.max_panels {
            return Err(Error::Quadrature(format!("ray integral unconverged at {panels} panels")));
        }
    }
    let end = point(len);
    let dist = ((end[0] - y[0]).powi(2) + (end[1] - y[1]).powi(2)).sqrt().max(1e-300);
    // ∫_d^∞ exp(−ν(u² − d²)/(4τ)) du ≤ 2τ/(ν d)
    let tail = f(len)?.abs() * 2.0 * tau / (provider.nu() * dist);
    let tol = quad.tol * value.abs();
    if tail > tol && tail > 1e-14 {
        return Err(Error::Truncation { tail, tol });
    }
    Ok(value)
}

/// Both sides of D_{x₁}Γᴺ = −D_{y₁}Γᴰ at (x, t): the left side by a central
/// difference of the ray formula with step `step` along the graph axis.
pub fn axis_identity(provider: &dyn DirichletProvider, x: &[f64; 2], t: f64, step: f64, quad: &RayQuadrature) -> Result<(f64, f64)> {
    let e = provider.axis();
    let at = |sign: f64| green_oblique_via_formula(provider, &[x[0] + sign * step * e[0], x[1] + sign * step * e[1]], t, quad);
    let lhs = (at(1.0)? - at(-1.0)?) / (2.0 * step);
    Ok((lhs, -provider.dy1(x, t)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    DirectSolve,
    Formula,
}

/// Values of Γᴺ for one pole at weighted space-time points.
#[derive(Debug, Clone)]
pub struct ObliqueGreenTable {
    pub y: [f64; 2],
    pub s: f64,
    pub provenance: Provenance,
    /// (x, t, quadrature weight)
    pub points: Vec<([f64; 2], f64, f64)>,
    pub values: Vec<f64>,
}

impl ObliqueGreenTable {
    /// Samples a direct oblique solve at the region nodes.
    pub fn from_direct(table: &GreenTable, region: &ComparisonRegion) -> Self {
        let mesh = &table.grid.mesh;
        let weights = mesh.area_weights();
        let mut points = Vec::new();
        let mut values = Vec::new();
        for p in table.picks(region, 1) {
            points.push((mesh.point(p.i, p.j), table.grid.time(p.slice), weights[mesh.index(p.i, p.j)]));
            values.push(table.grid.value(p.slice, p.i, p.j));
        }
        Self { y: table.y, s: table.s, provenance: Provenance::DirectSolve, points, values }
    }

    /// Evaluates the ray formula at the given points.
    pub fn from_formula(provider: &dyn DirichletProvider, points: Vec<([f64; 2], f64, f64)>, quad: &RayQuadrature) -> Result<Self> {
        let (y, s) = provider.pole();
        let values = points
            .par_iter()
            .map(|(x, t, _)| green_oblique_via_formula(provider, x, *t, quad))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { y, s, provenance: Provenance::Formula, points, values })
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheck {
    pub rel_l2: f64,
    pub rel_sup: f64,
    pub overlap: usize,
    pub pass: bool,
}

/// Agreement threshold of the cross check.
pub const CROSS_CHECK_TOL: f64 = 0.05;

/// Relative L² and sup discrepancy on the common points.
pub fn cross_check(direct: &ObliqueGreenTable, formula: &ObliqueGreenTable) -> Result<CrossCheck> {
    if direct.y != formula.y || direct.s != formula.s {
        return Err(Error::InvalidParameter("tables have different poles".into()));
    }
    let mut index = std::collections::HashMap::new();
    for (k, (x, t, _)) in formula.points.iter().enumerate() {
        index.insert((x[0].to_bits(), x[1].to_bits(), t.to_bits()), k);
    }
    let (mut num, mut den, mut sup_e, mut sup_r, mut overlap) = (0.0, 0.0, 0.0f64, 0.0f64, 0);
    for ((x, t, w), d) in direct.points.iter().zip(&direct.values) {
        if let Some(&k) = index.get(&(x[0].to_bits(), x[1].to_bits(), t.to_bits())) {
            let f = formula.values[k];
            num += w * (d - f).powi(2);
            den += w * d * d;
            sup_e = sup_e.max((d - f).abs());
            sup_r = sup_r.max(d.abs());
            overlap += 1;
        }
    }
    if overlap == 0 || den == 0.0 {
        return Err(Error::EmptySamples);
    }
    let rel_l2 = (num / den).sqrt();
    Ok(CrossCheck { rel_l2, rel_sup: sup_e / sup_r, overlap, pass: rel_l2 < CROSS_CHECK_TOL })
}

/// Direct oblique solve, ray-formula construction from two Dirichlet
/// solves, and their comparison.
pub struct ObliqueRun {
    pub direct: ObliqueGreenTable,
    pub formula: ObliqueGreenTable,
    pub check: CrossCheck,
    /// Relative ℓ² discrepancy of D_{x₁}Γᴺ = −D_{y₁}Γᴰ over the probe points.
    pub identity_rel: f64,
    pub identity_points: usize,
}

#[derive(Debug, Clone)]
pub struct ObliqueRunConfig {
    pub y: [f64; 2],
    pub s: f64,
    pub eps: f64,
    pub region: ComparisonRegion,
    pub quad: RayQuadrature,
    /// Number of evenly spaced region points used for the identity.
    pub identity_points: usize,
    /// Central-difference step of the identity, along the graph axis.
    pub identity_step: f64,
}

impl ObliqueRunConfig {
    pub fn new(y: [f64; 2], s: f64, eps: f64) -> Self {
        Self { y, s, eps, region: ComparisonRegion::default(), quad: RayQuadrature::default(), identity_points: 24, identity_step: 0.02 }
    }
}

pub fn construct_and_compare(path: &CoefficientPath, domain: WedgeDomain, mesh: &SectorMesh, cfg: &ObliqueRunConfig) -> Result<ObliqueRun> {
    let oblique = ProblemSpec::new(BoundaryCondition::Oblique, domain, path.clone())?;
    let dirichlet = ProblemSpec::new(BoundaryCondition::Dirichlet, domain, path.clone())?;
    let (table, provider) = rayon::join(
        || green(&oblique, cfg.y, cfg.s, Some(cfg.eps), mesh),
        || NumericalDirichlet::build(&dirichlet, cfg.y, cfg.s, cfg.eps, None, mesh),
    );
    let (table, provider) = (table?, provider?);
    let direct = ObliqueGreenTable::from_direct(&table, &cfg.region);
    let formula = ObliqueGreenTable::from_formula(&provider, direct.points.clone(), &cfg.quad)?;
    let check = cross_check(&direct, &formula)?;
    // The central difference must stay inside the sector.
    let inner: Vec<_> = direct
        .points
        .iter()
        .filter(|(x, _, _)| domain.geometry_at(x, 0.0).is_ok_and(|g| g.d > 2.0 * cfg.identity_step))
        .copied()
        .collect();
    let n = inner.len();
    let k = cfg.identity_points.min(n);
    let probes: Vec<_> = (0..k).map(|i| inner[i * n / k.max(1)]).collect();
    let sides = probes
        .par_iter()
        .map(|(x, t, _)| axis_identity(&provider, x, *t, cfg.identity_step, &cfg.quad))
        .collect::<Result<Vec<_>>>()?;
    let (num, den) = sides.iter().fold((0.0, 0.0), |(a, b), (l, r)| (a + (l - r).powi(2), b + r * r));
    let identity_rel = if den > 0.0 { (num / den).sqrt() } else { f64::NAN };
    Ok(ObliqueRun { direct, formula, check, identity_rel, identity_points: k })
}

/// Oblique tables at the pole and, for y-derivatives, at y ± δe_k.
pub struct ObliqueTables {
    pub center: GreenTable,
    /// `shifted[k] = [plus, minus]` along coordinate direction k.
    pub shifted: Option<[[GreenTable; 2]; 2]>,
    pub delta: f64,
}

impl ObliqueTables {
    pub fn build(base: &ProblemSpec, y: [f64; 2], s: f64, eps: f64, with_y_derivatives: bool, mesh: &SectorMesh) -> Result<Self> {
        let delta = 0.25 * eps;
        let center = green(base, y, s, Some(eps), mesh)?;
        let shifted = if with_y_derivatives {
            let poles = [[y[0] + delta, y[1]], [y[0] - delta, y[1]], [y[0], y[1] + delta], [y[0], y[1] - delta]];
            let mut t: Vec<GreenTable> = poles.par_iter().map(|p| green(base, *p, s, Some(eps), mesh)).collect::<Result<_>>()?;
            let d = t.pop().unwrap();
            let c = t.pop().unwrap();
            let b = t.pop().unwrap();
            let a = t.pop().unwrap();
            Some([[a, b], [c, d]])
        } else {
            None
        };
        Ok(Self { center, shifted, delta })
    }
}

const SECOND_ORDER: [[u32; 2]; 3] = [[2, 0], [1, 1], [0, 2]];

/// Samples of Γᴺ (kind N, no derivatives) and of D_x^α D_y^β(Γᴺ − Γ) for
/// |α| = 2 and |β| ≤ 1 (kind N_minus_Gamma). The whole-space part carries
/// the same mollifier as the tables.
pub fn difference_samples(tables: &ObliqueTables, path: &CoefficientPath, picks: &[NodePick]) -> Result<Vec<KernelSample>> {
    let c = &tables.center;
    let mesh = &c.grid.mesh;
    let mut out = Vec::new();
    for p in picks {
        if !c.grid.is_interior(p.i, p.j) {
            return Err(Error::StencilOutsideMesh);
        }
        let x = mesh.point(p.i, p.j);
        let t = c.grid.time(p.slice);
        let w = [x[0] - c.y[0], x[1] - c.y[1]];
        let Some(kernel) = WholeSpaceKernel::mollified(path, t, c.s, c.eps)? else { continue };
        let sample = |alpha: [u32; 2], beta: [u32; 2], value: f64, kind| KernelSample {
            x: x.to_vec(),
            y: c.y.to_vec(),
            t,
            s: c.s,
            alpha: alpha.to_vec(),
            beta: beta.to_vec(),
            d_s: false,
            value,
            kind: Some(kind),
        };
        out.push(sample([0, 0], [0, 0], c.grid.value(p.slice, p.i, p.j), SampleKind::Oblique));
        for alpha in SECOND_ORDER {
            let numeric = c.node_derivative(p, &alpha)?;
            let exact = kernel.deriv(&alpha, false, &w)?;
            out.push(sample(alpha, [0, 0], numeric - exact, SampleKind::ObliqueMinusWhole));
        }
        if let Some(shifted) = &tables.shifted {
            for (k, pair) in shifted.iter().enumerate() {
                let mut beta = [0, 0];
                beta[k] = 1;
                for alpha in SECOND_ORDER {
                    let numeric = (pair[0].node_derivative(p, &alpha)? - pair[1].node_derivative(p, &alpha)?) / (2.0 * tables.delta);
                    let mut gamma = alpha;
                    gamma[k] += 1;
                    // D_y = −D_w
                    let exact = -kernel.deriv(&gamma, false, &w)?;
                    out.push(sample(alpha, beta, numeric - exact, SampleKind::ObliqueMinusWhole));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_on_odd_images_gives_even_images() {
        let path = CoefficientPath::identity(2);
        let images = HalfPlaneImages { path, y: [0.2, 0.5], s: 0.0, eps: 0.1 };
        for (x, t) in [([0.0, 0.3], 0.15), ([0.7, 1.1], 0.2), ([-0.4, 0.05], 0.1)] {
            let quad = RayQuadrature { z: 14.0, tol: 1e-9, max_panels: 4096, ..Default::default() };
            let v = green_oblique_via_formula(&images, &x, t, &quad).unwrap();
            let exact = images.oblique(&x, t).unwrap();
            assert!((v - exact).abs() < 1e-6 * exact.abs().max(1e-3), "{v} vs {exact}");
        }
        assert_eq!(green_oblique_via_formula(&images, &[0.0, 0.3], 0.0, &RayQuadrature::default()).unwrap(), 0.0);
    }

    #[test]
    fn axis_identity_on_images() {
        let images = HalfPlaneImages { path: CoefficientPath::identity(2), y: [0.1, 0.6], s: 0.0, eps: 0.1 };
        let quad = RayQuadrature { z: 14.0, tol: 1e-10, max_panels: 4096, ..Default::default() };
        for x in [[0.0, 0.4], [0.3, 0.9], [-0.5, 0.2]] {
            let (lhs, rhs) = axis_identity(&images, &x, 0.12, 1e-3, &quad).unwrap();
            assert!((lhs - rhs).abs() < 1e-4 * rhs.abs().max(1e-2), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn short_truncation_is_reported() {
        let path = CoefficientPath::identity(2);
        let images = HalfPlaneImages { path, y: [0.0, 0.5], s: 0.0, eps: 0.1 };
        let quad = RayQuadrature { z: 0.5, ..Default::default() };
        assert!(matches!(green_oblique_via_formula(&images, &[0.0, 0.3], 0.2, &quad), Err(Error::Truncation { .. })));
    }

    #[test]
    fn cross_check_rejects_mismatched_poles() {
        let a = ObliqueGreenTable { y: [0.0, 0.5], s: 0.0, provenance: Provenance::DirectSolve, points: vec![([0.0, 1.0], 0.1, 1.0)], values: vec![1.0] };
        let mut b = a.clone();
        b.provenance = Provenance::Formula;
        assert!(cross_check(&a, &b).unwrap().pass);
        b.y = [0.0, 0.6];
        assert!(cross_check(&a, &b).is_err());
    }
}
