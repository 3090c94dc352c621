//! Power-weighted mixed Lebesgue norms on sector meshes, the admissible
//! ranges of the weight exponent, and coercive-ratio refinement studies.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::coefficients::CoefficientPath;
use crate::error::{Error, Result};
use crate::geometry::WedgeDomain;
use crate::solver::{sample_field, solve, BoundaryCondition, Field, GridFunction, MeshConfig, ProblemSpec, Rhs, SectorMesh};

/// Order of integration: `Pq` integrates in space first, `Tilde` in time first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormVariant {
    Pq,
    Tilde,
}

impl NormVariant {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pq" => Ok(Self::Pq),
            "tilde" | "tilde_pq" => Ok(Self::Tilde),
            _ => Err(Error::Parse(format!("unknown norm variant '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNormSpec {
    pub p: f64,
    pub q: f64,
    /// Weight exponent used by the coercive ratios.
    pub mu: f64,
    pub variant: NormVariant,
}

impl WeightedNormSpec {
    pub fn new(p: f64, q: f64, mu: f64, variant: NormVariant) -> Result<Self> {
        if !(p > 1.0 && p.is_finite() && q > 1.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("need 1 < p, q < ∞, got p = {p}, q = {q}")));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParameter("weight exponent must be finite".into()));
        }
        Ok(Self { p, q, mu, variant })
    }
}

/// Right-endpoint time weights matching backward Euler: slice k carries
/// t_k − t_{k−1} and the initial slice carries nothing.
fn time_weights(times: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    for k in 1..times.len() {
        w[k] = times[k] - times[k - 1];
    }
    w
}

/// Mixed norm of nodal slices with weight |x|^exponent. `mask` selects the
/// nodes that take part.
fn mixed_norm(mesh: &SectorMesh, tw: &[f64], slices: &[Vec<f64>], mask: &[bool], spec: &WeightedNormSpec, exponent: f64) -> f64 {
    let aw = mesh.area_weights();
    let weight: Vec<f64> = (0..mesh.node_count())
        .map(|idx| if mask[idx] { mesh.radius(idx / (mesh.n_theta + 1)).powf(exponent) } else { 0.0 })
        .collect();
    let (p, q) = (spec.p, spec.q);
    match spec.variant {
        NormVariant::Pq => {
            let total: f64 = slices
                .iter()
                .zip(tw)
                .filter(|(_, w)| **w > 0.0)
                .map(|(u, w)| {
                    let inner: f64 = u.iter().zip(&aw).zip(&weight).map(|((v, a), g)| a * (g * v.abs()).powf(p)).sum();
                    w * inner.powf(q / p)
                })
                .sum();
            total.powf(1.0 / q)
        }
        NormVariant::Tilde => {
            let total: f64 = (0..mesh.node_count())
                .filter(|&idx| mask[idx])
                .map(|idx| {
                    let inner: f64 = slices.iter().zip(tw).map(|(u, w)| w * (weight[idx] * u[idx].abs()).powf(q)).sum();
                    aw[idx] * inner.powf(p / q)
                })
                .sum();
            total.powf(1.0 / p)
        }
    }
}

/// ‖|x|^e u‖ over the stored slices of a grid function, e = `weight_exponent`.
pub fn weighted_norm(u: &GridFunction, spec: &WeightedNormSpec, weight_exponent: f64) -> Result<f64> {
    let mask = vec![true; u.mesh.node_count()];
    Ok(mixed_norm(&u.mesh, &time_weights(&u.times()), &u.slices, &mask, spec, weight_exponent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalKind {
    WholeSpace,
    DirichletSecond,
    DirichletFirst,
    Oblique,
}

impl IntervalKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "whole_space" => Ok(Self::WholeSpace),
            "dirichlet_2nd" => Ok(Self::DirichletSecond),
            "dirichlet_1st" => Ok(Self::DirichletFirst),
            "oblique" => Ok(Self::Oblique),
            _ => Err(Error::Parse(format!("unknown interval kind '{s}'"))),
        }
    }
}

/// Open interval (lo, hi); empty when lo ≥ hi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuInterval {
    pub lo: f64,
    pub hi: f64,
}

impl MuInterval {
    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn contains(&self, mu: f64) -> bool {
        self.lo < mu && mu < self.hi
    }
}

impl fmt::Display for MuInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

fn pos(a: f64) -> f64 {
    a.max(0.0)
}

/// Admissible weight exponents for the given problem class.
pub fn mu_interval(kind: IntervalKind, p: f64, m: usize, lambda_plus: f64, lambda_minus: f64) -> Result<MuInterval> {
    if !(p > 1.0) || m < 2 {
        return Err(Error::InvalidParameter(format!("need p > 1 and m ≥ 2, got p = {p}, m = {m}")));
    }
    if !(lambda_plus > 0.0 && lambda_minus > 0.0) {
        return Err(Error::InvalidParameter("critical exponents must be positive".into()));
    }
    let (m, mp) = (m as f64, m as f64 / p);
    let (lo, hi) = match kind {
        IntervalKind::WholeSpace => (-mp, m - mp),
        IntervalKind::DirichletSecond => (2.0 - mp - lambda_plus, m - mp + lambda_minus),
        IntervalKind::DirichletFirst => (1.0 - mp - lambda_plus, m - 1.0 - mp + lambda_minus),
        IntervalKind::Oblique => (-mp + pos(1.0 - lambda_plus), m - mp - pos(1.0 - lambda_minus)),
    };
    Ok(MuInterval { lo, hi })
}

/// Coercive ratio of one solve. A plain right-hand side f gives
/// (‖|x|^μ u_t‖ + ‖|x|^μ D²u‖) / ‖|x|^μ f‖; divergence data f₀ + div f gives
/// (‖|x|^μ Du‖ + ‖|x|^{μ−1} u‖) / (‖|x|^{μ+1} f₀‖ + ‖|x|^μ f‖).
/// Derivatives of u are taken at interior nodes; every time step must be stored.
pub fn coercive_ratio(spec: &ProblemSpec, norm: &WeightedNormSpec, mesh: &SectorMesh) -> Result<f64> {
    if mesh.store_stride != 1 {
        return Err(Error::Mesh("coercive ratios need every time step stored".into()));
    }
    if matches!(spec.rhs, Rhs::Zero) {
        return Err(Error::ZeroDenominator);
    }
    let u = solve(spec, mesh)?;
    let times = u.times();
    let tw = time_weights(&times);
    let nodes = mesh.node_count();
    let all = vec![true; nodes];
    let interior: Vec<bool> = (0..nodes).map(|idx| u.is_interior(idx / (mesh.n_theta + 1), idx % (mesh.n_theta + 1))).collect();
    let at_interior = |g: &(dyn Fn(usize, usize, usize) -> Result<f64> + Sync)| -> Result<Vec<Vec<f64>>> {
        (0..times.len())
            .into_par_iter()
            .map(|k| {
                let mut out = vec![0.0; nodes];
                if tw[k] > 0.0 {
                    for (idx, v) in out.iter_mut().enumerate() {
                        if interior[idx] {
                            *v = g(k, idx / (mesh.n_theta + 1), idx % (mesh.n_theta + 1))?;
                        }
                    }
                }
                Ok(out)
            })
            .collect()
    };
    let sample = |f: &Field| -> Vec<Vec<f64>> { times.iter().map(|&t| sample_field(mesh, f, t)).collect() };
    let mu = norm.mu;
    let (num, den) = match &spec.rhs {
        Rhs::Zero => unreachable!(),
        Rhs::Plain(f) => {
            let ut = at_interior(&|k, i, j| Ok((u.value(k, i, j) - u.value(k - 1, i, j)) / tw[k]))?;
            let hess = at_interior(&|k, i, j| {
                let h = u.hessian(k, i, j)?;
                Ok((h[(0, 0)].powi(2) + 2.0 * h[(0, 1)].powi(2) + h[(1, 1)].powi(2)).sqrt())
            })?;
            let num = mixed_norm(mesh, &tw, &ut, &interior, norm, mu) + mixed_norm(mesh, &tw, &hess, &interior, norm, mu);
            (num, mixed_norm(mesh, &tw, &sample(f), &all, norm, mu))
        }
        Rhs::Divergence { f0, f } => {
            let grad = at_interior(&|k, i, j| {
                let g = u.gradient(k, i, j)?;
                Ok(g[0].hypot(g[1]))
            })?;
            let num = mixed_norm(mesh, &tw, &grad, &interior, norm, mu) + mixed_norm(mesh, &tw, &u.slices, &interior, norm, mu - 1.0);
            let (f1, f2) = (sample(&f[0]), sample(&f[1]));
            let flux: Vec<Vec<f64>> = f1.iter().zip(&f2).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.hypot(*y)).collect()).collect();
            let den = mixed_norm(mesh, &tw, &sample(f0), &all, norm, mu + 1.0) + mixed_norm(mesh, &tw, &flux, &all, norm, mu);
            (num, den)
        }
    };
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

/// Refinement study setup. Level ℓ resolves the vertex down to
/// r₀·`r_min_factor`^{−ℓ} with the same log-polar spacing on every level, so
/// each refinement adds rings next to the vertex and nothing else.
#[derive(Debug, Clone)]
pub struct SweepSetup {
    pub bc: BoundaryCondition,
    pub domain: WedgeDomain,
    pub path: CoefficientPath,
    pub p: f64,
    pub q: f64,
    pub variant: NormVariant,
    pub h: f64,
    pub n_theta: usize,
    pub r_max: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Support radius of the data.
    pub delta: f64,
    pub r_min0: f64,
    pub r_min_factor: f64,
    /// Gap ε′ between the data and the borderline power |x|^{−μ−2/p}.
    pub excess: f64,
}

impl SweepSetup {
    pub fn quarter_plane() -> Self {
        Self {
            bc: BoundaryCondition::Oblique,
            domain: WedgeDomain::sector(std::f64::consts::FRAC_PI_2).expect("valid sector"),
            path: CoefficientPath::identity(2),
            p: 2.0,
            q: 2.0,
            variant: NormVariant::Pq,
            h: 0.05,
            n_theta: 32,
            r_max: 4.0,
            t_end: 0.3,
            dt: 5e-3,
            delta: 0.2,
            r_min0: 5e-4,
            r_min_factor: 16.0,
            excess: 0.05,
        }
    }

    pub fn mesh(&self, level: usize) -> Result<SectorMesh> {
        let cfg = MeshConfig {
            r_min: self.r_min0 * self.r_min_factor.powi(-(level as i32)),
            r_max: self.r_max,
            q: (-self.h).exp(),
            n_theta: self.n_theta,
            t_start: 0.0,
            t_end: self.t_end,
            dt: self.dt,
            store_stride: 1,
        };
        let theta0 = self.domain.opening_angle().ok_or(Error::InvalidDomain("sweeps need a sector".into()))?;
        SectorMesh::new(theta0, &cfg, &self.path)
    }

    /// f = |x|^{−μ−2/p+ε′} on |x| < δ times a sin² bump over the first third
    /// of the window. This barely belongs to the weighted space, so its norm
    /// is spread over all scales down to the vertex.
    pub fn adversarial_rhs(&self, mu: f64) -> Rhs {
        let (delta, power, t_on) = (self.delta, -mu - 2.0 / self.p + self.excess, self.t_end / 3.0);
        Rhs::Plain(Arc::new(move |x: &[f64; 2], t: f64| {
            let r = x[0].hypot(x[1]);
            if r >= delta || t <= 0.0 || t >= t_on {
                return 0.0;
            }
            r.powf(power) * (std::f64::consts::PI * t / t_on).sin().powi(2)
        }))
    }

    pub fn ratio(&self, mu: f64, level: usize) -> Result<f64> {
        let spec = ProblemSpec::new(self.bc, self.domain, self.path.clone())?.with_rhs(self.adversarial_rhs(mu));
        let norm = WeightedNormSpec::new(self.p, self.q, mu, self.variant)?;
        coercive_ratio(&spec, &norm, &self.mesh(level)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthFlag {
    /// Consecutive levels drift by less than 10%.
    Stable,
    /// Every refinement multiplies the ratio by at least 1.5.
    Growing,
    Mixed,
}

impl GrowthFlag {
    pub const STABLE_DRIFT: f64 = 0.1;
    pub const GROWTH: f64 = 1.5;

    pub fn classify(ratios: &[f64]) -> Self {
        let pairs: Vec<f64> = ratios.windows(2).map(|w| w[1] / w[0]).collect();
        if pairs.iter().all(|g| (g - 1.0).abs() < Self::STABLE_DRIFT) {
            Self::Stable
        } else if pairs.iter().all(|g| *g >= Self::GROWTH) {
            Self::Growing
        } else {
            Self::Mixed
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::Growing => "growing",
            Self::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub mu: f64,
    pub level: usize,
    pub ratio: f64,
    pub flag: GrowthFlag,
}

/// Coercive ratios for every (μ, level) cell; each μ row is flagged from
/// its ratios across levels.
pub fn sweep_mu(setup: &SweepSetup, mu_grid: &[f64], levels: usize) -> Result<Vec<SweepRow>> {
    let cells: Vec<(f64, usize)> = mu_grid.iter().flat_map(|&mu| (0..levels).map(move |l| (mu, l))).collect();
    let ratios = cells.par_iter().map(|&(mu, l)| setup.ratio(mu, l)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(cells.len());
    for (chunk, cell) in ratios.chunks(levels.max(1)).zip(cells.chunks(levels.max(1))) {
        let flag = GrowthFlag::classify(chunk);
        rows.extend(cell.iter().zip(chunk).map(|(&(mu, level), &ratio)| SweepRow { mu, level, ratio, flag }));
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow], comment: &str) -> Result<()> {
    for line in comment.lines() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "mu,level,ratio,flag")?;
    for r in rows {
        writeln!(out, "{},{},{:e},{}", r.mu, r.level, r.ratio, r.flag.label())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_mesh(scale: f64) -> SectorMesh {
        let cfg = MeshConfig {
            r_min: 1e-2 * scale,
            r_max: 3.0 * scale,
            q: 0.85,
            n_theta: 12,
            t_start: 0.0,
            t_end: 0.1 * scale * scale,
            dt: 0.01 * scale * scale,
            store_stride: 1,
        };
        SectorMesh::new(1.2, &cfg, &CoefficientPath::identity(2)).unwrap()
    }

    fn grid_with(mesh: &SectorMesh, slices: Vec<Vec<f64>>) -> GridFunction {
        let steps = (0..slices.len()).collect();
        GridFunction { mesh: mesh.clone(), bc: BoundaryCondition::Dirichlet, steps, slices }
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let mesh = small_mesh(1.0);
        let u = grid_with(&mesh, vec![vec![0.0; mesh.node_count()]; mesh.times.len()]);
        let spec = WeightedNormSpec::new(2.0, 3.0, 0.5, NormVariant::Pq).unwrap();
        assert_eq!(weighted_norm(&u, &spec, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn single_node_matches_cell_quadrature() {
        let mesh = small_mesh(1.0);
        let (i, j, k) = (7, 5, 3);
        let mut slices = vec![vec![0.0; mesh.node_count()]; mesh.times.len()];
        slices[k][mesh.index(i, j)] = 2.0;
        let u = grid_with(&mesh, slices);
        let r = mesh.radius(i);
        let cell = r * r * mesh.h * mesh.d_theta();
        let dt = mesh.times[k] - mesh.times[k - 1];
        let (p, q, e) = (3.0, 1.5, -0.7);
        let expected = (dt * (cell * (2.0 * r.powf(e)).powf(p)).powf(q / p)).powf(1.0 / q);
        for variant in [NormVariant::Pq, NormVariant::Tilde] {
            let spec = WeightedNormSpec::new(p, q, 0.0, variant).unwrap();
            let got = weighted_norm(&u, &spec, e).unwrap();
            assert!((got - expected).abs() < 1e-13 * expected, "{variant:?}: {got} vs {expected}");
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(WeightedNormSpec::new(1.0, 2.0, 0.0, NormVariant::Pq).is_err());
        assert!(WeightedNormSpec::new(2.0, f64::INFINITY, 0.0, NormVariant::Pq).is_err());
        assert!(mu_interval(IntervalKind::Oblique, 2.0, 2, 0.0, 1.0).is_err());
    }

    #[test]
    fn interval_examples() {
        let o = mu_interval(IntervalKind::Oblique, 2.0, 2, 1.0, 1.0).unwrap();
        assert_eq!((o.lo, o.hi), (-1.0, 1.0));
        assert_eq!(o.to_string(), "(-1, 1)");
        let d = mu_interval(IntervalKind::DirichletSecond, 2.0, 2, 1.0, 1.0).unwrap();
        assert_eq!((d.lo, d.hi), (0.0, 2.0));
        let w = mu_interval(IntervalKind::WholeSpace, 3.0, 3, 2.0, 5.0).unwrap();
        assert_eq!(mu_interval(IntervalKind::Oblique, 3.0, 3, 2.0, 5.0).unwrap(), w);
        assert!(MuInterval { lo: 0.5, hi: 0.5 }.is_empty());
        assert!(!mu_interval(IntervalKind::Oblique, 1.1, 2, 0.05, 0.05).unwrap().is_empty());
    }

    #[test]
    fn zero_data_is_degenerate() {
        let mesh = small_mesh(1.0);
        let spec = ProblemSpec::new(BoundaryCondition::Oblique, WedgeDomain::sector(1.2).unwrap(), CoefficientPath::identity(2)).unwrap();
        let norm = WeightedNormSpec::new(2.0, 2.0, 0.0, NormVariant::Pq).unwrap();
        assert!(matches!(coercive_ratio(&spec, &norm, &mesh), Err(Error::ZeroDenominator)));
        let zero: Field = Arc::new(|_: &[f64; 2], _: f64| 0.0);
        let spec = spec.with_rhs(Rhs::Plain(zero));
        assert!(matches!(coercive_ratio(&spec, &norm, &mesh), Err(Error::ZeroDenominator)));
    }

    #[test]
    fn flags() {
        assert_eq!(GrowthFlag::classify(&[1.0, 1.05, 1.1]), GrowthFlag::Stable);
        assert_eq!(GrowthFlag::classify(&[1.0, 1.6, 2.7]), GrowthFlag::Growing);
        assert_eq!(GrowthFlag::classify(&[1.0, 1.6, 1.7]), GrowthFlag::Mixed);
    }

    #[test]
    fn empty_grid_gives_empty_table() {
        assert!(sweep_mu(&SweepSetup::quarter_plane(), &[], 3).unwrap().is_empty());
    }

    #[test]
    fn ratio_is_dilation_invariant() {
        let bump = |scale: f64| -> Rhs {
            Rhs::Plain(Arc::new(move |x: &[f64; 2], t: f64| {
                let (a, b, s) = (x[0] / scale, x[1] / scale, t / (scale * scale));
                (-((a - 0.5).powi(2) + (b - 0.4).powi(2)) / 0.05).exp() * (s * 30.0).min(1.0) / (scale * scale)
            }))
        };
        let domain = WedgeDomain::sector(1.2).unwrap();
        let norm = WeightedNormSpec::new(2.0, 3.0, 0.3, NormVariant::Tilde).unwrap();
        let ratio = |scale: f64| {
            let spec = ProblemSpec::new(BoundaryCondition::Oblique, domain, CoefficientPath::identity(2)).unwrap().with_rhs(bump(scale));
            coercive_ratio(&spec, &norm, &small_mesh(scale)).unwrap()
        };
        let (a, b) = (ratio(1.0), ratio(2.5));
        assert!((a - b).abs() < 1e-9 * a, "{a} vs {b}");
    }

    proptest! {
        #[test]
        fn variants_coincide_when_exponents_match(p in 1.1f64..5.0, e in -2.0f64..2.0, seed in 0u64..1000) {
            let mesh = small_mesh(1.0);
            let slices: Vec<Vec<f64>> = (0..mesh.times.len())
                .map(|k| (0..mesh.node_count()).map(|n| ((n as u64 * 2654435761 + k as u64 * 97 + seed) % 1009) as f64 / 504.0 - 1.0).collect())
                .collect();
            let u = grid_with(&mesh, slices);
            let a = weighted_norm(&u, &WeightedNormSpec::new(p, p, 0.0, NormVariant::Pq).unwrap(), e).unwrap();
            let b = weighted_norm(&u, &WeightedNormSpec::new(p, p, 0.0, NormVariant::Tilde).unwrap(), e).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn oblique_interval_inside_whole_space(p in 1.05f64..6.0, m in 2usize..5, lp in 0.01f64..4.0, lm in 0.01f64..4.0) {
            let o = mu_interval(IntervalKind::Oblique, p, m, lp, lm).unwrap();
            let w = mu_interval(IntervalKind::WholeSpace, p, m, lp, lm).unwrap();
            prop_assert!(o.lo >= w.lo && o.hi <= w.hi);
        }

        #[test]
        fn intervals_widen_with_exponents(p in 1.05f64..6.0, m in 2usize..5, lp in 0.01f64..4.0, lm in 0.01f64..4.0, dp in 0.0f64..2.0, dm in 0.0f64..2.0) {
            for kind in [IntervalKind::WholeSpace, IntervalKind::DirichletSecond, IntervalKind::DirichletFirst, IntervalKind::Oblique] {
                let a = mu_interval(kind, p, m, lp, lm).unwrap();
                let b = mu_interval(kind, p, m, lp + dp, lm + dm).unwrap();
                prop_assert!(b.lo <= a.lo && b.hi >= a.hi);
            }
        }
    }
}
