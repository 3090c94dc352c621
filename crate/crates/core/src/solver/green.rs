use super::grid::GridFunction;
use super::mesh::SectorMesh;
use super::{solve, Initial, ProblemSpec, Rhs};
use crate::coefficients::CoefficientPath;
use crate::error::{Error, Result};
use crate::samples::KernelSample;
use crate::wholespace::WholeSpaceKernel;

/// Numerical Green function for a pole y released at time s.
#[derive(Debug, Clone)]
pub struct GreenTable {
    pub grid: GridFunction,
    pub y: [f64; 2],
    pub s: f64,
    pub eps: f64,
}

/// Bump widths below this many local cells are rejected.
const MIN_BUMP_CELLS: f64 = 3.0;
/// Default bump width in local cells.
const DEFAULT_BUMP_CELLS: f64 = 4.0;

impl GreenTable {
    /// Cell size of the mesh near the pole.
    pub fn local_cell(mesh: &SectorMesh, y: &[f64; 2]) -> f64 {
        y[0].hypot(y[1]) * mesh.h.max(mesh.d_theta())
    }

    pub fn value(&self, slice: usize, x: &[f64]) -> Result<f64> {
        self.grid.interpolate(slice, x)
    }

    pub fn elapsed(&self, slice: usize) -> f64 {
        self.grid.time(slice) - self.s
    }

    /// D_x^α of the table at interior nodes, α of order 0, 1 or 2.
    pub fn samples(&self, picks: &[NodePick], alpha: &[u32]) -> Result<Vec<KernelSample>> {
        picks
            .iter()
            .map(|p| {
                let value = self.node_derivative(p, alpha)?;
                Ok(KernelSample {
                    x: self.grid.mesh.point(p.i, p.j).to_vec(),
                    y: self.y.to_vec(),
                    t: self.grid.time(p.slice),
                    s: self.s,
                    alpha: alpha.to_vec(),
                    beta: vec![0, 0],
                    d_s: false,
                    value,
                    kind: None,
                })
            })
            .collect()
    }

    pub fn node_derivative(&self, p: &NodePick, alpha: &[u32]) -> Result<f64> {
        match (alpha.first().copied().unwrap_or(0), alpha.get(1).copied().unwrap_or(0)) {
            (0, 0) => Ok(self.grid.value(p.slice, p.i, p.j)),
            (a, b) if a + b == 1 => Ok(self.grid.gradient(p.slice, p.i, p.j)?[b as usize]),
            (2, 0) => Ok(self.grid.hessian(p.slice, p.i, p.j)?[(0, 0)]),
            (1, 1) => Ok(self.grid.hessian(p.slice, p.i, p.j)?[(0, 1)]),
            (0, 2) => Ok(self.grid.hessian(p.slice, p.i, p.j)?[(1, 1)]),
            _ => Err(Error::InvalidParameter("table derivatives limited to order 2".into())),
        }
    }

    /// Interior nodes of the stored slices inside `region`, every
    /// `stride`-th in each index.
    pub fn picks(&self, region: &ComparisonRegion, stride: usize) -> Vec<NodePick> {
        let mesh = &self.grid.mesh;
        let stride = stride.max(1);
        let mut out = Vec::new();
        for slice in 0..self.grid.slices.len() {
            let tau = self.elapsed(slice);
            for i in (1..mesh.n_r).step_by(stride) {
                for j in (1..mesh.n_theta).step_by(stride) {
                    if region.contains(&mesh.point(i, j), tau, self.eps) {
                        out.push(NodePick { slice, i, j });
                    }
                }
            }
        }
        out
    }
}

/// A mesh node at a stored slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodePick {
    pub slice: usize,
    pub i: usize,
    pub j: usize,
}

/// Solves the homogeneous problem of `base` from time s with a normalized
/// Gaussian bump of width ε around y, approximating the Green function.
pub fn green(base: &ProblemSpec, y: [f64; 2], s: f64, eps: Option<f64>, mesh: &SectorMesh) -> Result<GreenTable> {
    let start = mesh
        .times
        .iter()
        .position(|&t| (t - s).abs() <= 1e-12 * (1.0 + s.abs()))
        .ok_or_else(|| Error::Mesh(format!("release time {s} is not a mesh time")))?;
    let mut mesh = mesh.clone();
    mesh.times.drain(..start);
    if mesh.times.len() < 2 {
        return Err(Error::Mesh("no time steps after the release time".into()));
    }
    let cell = GreenTable::local_cell(&mesh, &y);
    let eps = eps.unwrap_or(DEFAULT_BUMP_CELLS * cell);
    if eps < MIN_BUMP_CELLS * cell * (1.0 - 1e-12) {
        return Err(Error::UnresolvedBump { width: eps, min: MIN_BUMP_CELLS * cell });
    }
    let geo = base.domain.geometry_at(&y, 0.0)?;
    if !(geo.d > 2.0 * eps) {
        return Err(Error::InvalidParameter(format!(
            "pole at distance {} from the boundary, need more than 2ε = {}",
            geo.d,
            2.0 * eps
        )));
    }
    let weights = mesh.area_weights();
    let mut bump = vec![0.0; mesh.node_count()];
    for i in 0..=mesh.n_r {
        for j in 0..=mesh.n_theta {
            let p = mesh.point(i, j);
            let d2 = (p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2);
            bump[mesh.index(i, j)] = (-d2 / (eps * eps)).exp();
        }
    }
    let mass: f64 = bump.iter().zip(&weights).map(|(b, w)| b * w).sum();
    bump.iter_mut().for_each(|b| *b /= mass);
    let spec = base.clone().with_initial(Initial::Nodal(bump)).with_rhs(Rhs::Zero);
    let grid = solve(&spec, &mesh)?;
    Ok(GreenTable { grid, y, s, eps })
}

/// Whole-space kernel convolved with the normalized bump of width ε:
/// a Gaussian with M + (ε²/4)I in place of M.
pub fn mollified_whole_space(path: &CoefficientPath, x: &[f64], y: &[f64], t: f64, s: f64, eps: f64) -> Result<f64> {
    let w: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    Ok(WholeSpaceKernel::mollified(path, t, s, eps)?.map_or(0.0, |k| k.value(&w)))
}

/// Images kernel for the upper half-plane: Γ(x,y) + sign·Γ(x,y*), with
/// y* the mirror image of y; sign −1 gives Dirichlet, +1 the oblique
/// (here Neumann) condition. Exact for diagonal coefficients.
pub fn half_plane_images(path: &CoefficientPath, x: &[f64], y: &[f64], t: f64, s: f64, eps: f64, sign: f64) -> Result<f64> {
    let mirror = [y[0], -y[1]];
    Ok(mollified_whole_space(path, x, y, t, s, eps)? + sign * mollified_whole_space(path, x, &mirror, t, s, eps)?)
}

/// Space-time region where numerical Green functions are compared:
/// ℛ_{x,t−s} ∈ [lo, hi] and t − s above a multiple of ε².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRegion {
    pub big_r_lo: f64,
    pub big_r_hi: f64,
    pub min_elapsed_eps2: f64,
}

impl Default for ComparisonRegion {
    fn default() -> Self {
        Self { big_r_lo: 0.2, big_r_hi: 0.8, min_elapsed_eps2: 10.0 }
    }
}

impl ComparisonRegion {
    pub fn contains(&self, x: &[f64], elapsed: f64, eps: f64) -> bool {
        let r = x[0].hypot(x[1]);
        let big_r = r / (r + elapsed.sqrt());
        elapsed > self.min_elapsed_eps2 * eps * eps && big_r >= self.big_r_lo && big_r <= self.big_r_hi
    }
}

/// Discrepancy between a table and a reference on a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub rel_l2: f64,
    pub rel_sup: f64,
    pub nodes: usize,
}

impl Comparison {
    /// Relative L² and sup errors over the mesh nodes of the stored slices
    /// inside `region`, weighted by the node areas.
    pub fn against(
        table: &GreenTable,
        region: &ComparisonRegion,
        reference: impl Fn(&[f64], f64) -> Result<f64>,
    ) -> Result<Self> {
        let mesh = &table.grid.mesh;
        let weights = mesh.area_weights();
        let (mut num, mut den, mut sup_err, mut sup_ref, mut nodes) = (0.0, 0.0, 0.0f64, 0.0f64, 0usize);
        for k in 0..table.grid.slices.len() {
            let tau = table.elapsed(k);
            for i in 0..=mesh.n_r {
                for j in 0..=mesh.n_theta {
                    let p = mesh.point(i, j);
                    if !region.contains(&p, tau, table.eps) {
                        continue;
                    }
                    let idx = mesh.index(i, j);
                    let r = reference(&p, table.grid.time(k))?;
                    let e = table.grid.slices[k][idx] - r;
                    num += weights[idx] * e * e;
                    den += weights[idx] * r * r;
                    sup_err = sup_err.max(e.abs());
                    sup_ref = sup_ref.max(r.abs());
                    nodes += 1;
                }
            }
        }
        if nodes == 0 || den == 0.0 {
            return Err(Error::EmptySamples);
        }
        Ok(Self { rel_l2: (num / den).sqrt(), rel_sup: sup_err / sup_ref, nodes })
    }
}
