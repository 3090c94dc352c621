//! Backward-Euler finite differences for ∂t u − aⁱʲ(t)DᵢDⱼu = f in a planar
//! sector, on a polar mesh uniform in (ln r, θ).

mod green;
mod grid;
mod mesh;

use std::collections::hash_map::{Entry, HashMap};
use std::f64::consts::PI;
use std::sync::Arc;

pub use green::{
    green, half_plane_images, mollified_whole_space, Comparison, ComparisonRegion, GreenTable, NodePick,
};
pub use grid::{BoundaryCondition, GridFunction};
pub use mesh::{MeshConfig, SectorMesh};

use crate::coefficients::CoefficientPath;
use crate::error::{Error, Result};
use crate::geometry::{ConeSpec, WedgeDomain};
use crate::linalg::{BandLu, BandMatrix, Matrix};

/// Scalar field f(x, t) on the plane.
pub type Field = Arc<dyn Fn(&[f64; 2], f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Rhs {
    Zero,
    Plain(Field),
    /// f₀ + div f.
    Divergence { f0: Field, f: [Field; 2] },
}

#[derive(Clone)]
pub enum Initial {
    Zero,
    Field(Field),
    /// Values on the mesh nodes.
    Nodal(Vec<f64>),
}

/// Equation used on the excised inner ring r = r_min.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexRow {
    Dirichlet,
    /// u(r_min) = q^λ u(r_min/q), i.e. local behaviour u ~ r^λ.
    Extrapolate { lambda: f64 },
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub bc: BoundaryCondition,
    pub domain: WedgeDomain,
    pub path: CoefficientPath,
    pub initial: Initial,
    pub rhs: Rhs,
    pub vertex: VertexRow,
}

impl ProblemSpec {
    /// Homogeneous problem with the default vertex row: decay r^{π/θ₀} for
    /// Dirichlet, a flat row for the oblique condition.
    pub fn new(bc: BoundaryCondition, domain: WedgeDomain, path: CoefficientPath) -> Result<Self> {
        let theta0 = sector_angle(&domain)?;
        let vertex = match bc {
            BoundaryCondition::Dirichlet => VertexRow::Extrapolate { lambda: PI / theta0 },
            BoundaryCondition::Oblique => VertexRow::Extrapolate { lambda: 0.0 },
        };
        Ok(Self { bc, domain, path, initial: Initial::Zero, rhs: Rhs::Zero, vertex })
    }

    pub fn with_initial(mut self, initial: Initial) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_rhs(mut self, rhs: Rhs) -> Self {
        self.rhs = rhs;
        self
    }

    pub fn with_vertex(mut self, vertex: VertexRow) -> Self {
        self.vertex = vertex;
        self
    }

    pub fn theta0(&self) -> f64 {
        sector_angle(&self.domain).expect("validated at construction")
    }

    fn validate(&self, mesh: &SectorMesh) -> Result<()> {
        let theta0 = sector_angle(&self.domain)?;
        if self.path.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.path.dim() });
        }
        if (theta0 - mesh.theta0).abs() > 1e-12 {
            return Err(Error::Mesh(format!("mesh angle {} differs from domain angle {theta0}", mesh.theta0)));
        }
        if self.bc == BoundaryCondition::Oblique && theta0 > PI {
            return Err(Error::NotAGraph);
        }
        if !mesh.is_aligned(&self.path) {
            return Err(Error::Mesh("coefficient breakpoints are not step times".into()));
        }
        if let Initial::Nodal(v) = &self.initial {
            if v.len() != mesh.node_count() {
                return Err(Error::DimensionMismatch { expected: mesh.node_count(), got: v.len() });
            }
        }
        Ok(())
    }
}

fn sector_angle(domain: &WedgeDomain) -> Result<f64> {
    match domain.cone() {
        ConeSpec::Sector { theta0 } if domain.n() == 2 => Ok(*theta0),
        _ => Err(Error::InvalidDomain("numerical solves need a planar sector (m = n = 2)".into())),
    }
}

/// Polar coefficients of aⁱʲDᵢDⱼ = r⁻²(P ∂ss + Q ∂sθ + S ∂θθ + U ∂s + V ∂θ).
fn polar_coefficients(a: &Matrix, theta: f64) -> [f64; 5] {
    let (sn, c) = theta.sin_cos();
    let (a11, a12, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 1)]);
    let (cc, ss, cs) = (c * c, sn * sn, c * sn);
    [
        a11 * cc + 2.0 * a12 * cs + a22 * ss,
        -2.0 * a11 * cs + 2.0 * a12 * (cc - ss) + 2.0 * a22 * cs,
        a11 * ss - 2.0 * a12 * cs + a22 * cc,
        a11 * (ss - cc) - 4.0 * a12 * cs + a22 * (cc - ss),
        2.0 * a11 * cs - 2.0 * a12 * (cc - ss) - 2.0 * a22 * cs,
    ]
}

/// Which equation a node carries.
#[derive(Debug, Clone, Copy, PartialEq)]
enum RowKind {
    Zero,
    Vertex,
    ObliqueLow,
    ObliqueHigh,
    Interior,
}

fn row_kind(mesh: &SectorMesh, bc: BoundaryCondition, i: usize, j: usize) -> RowKind {
    let edge = j == 0 || j == mesh.n_theta;
    if i == mesh.n_r || (bc == BoundaryCondition::Dirichlet && edge) {
        RowKind::Zero
    } else if i == 0 {
        RowKind::Vertex
    } else if j == 0 {
        RowKind::ObliqueLow
    } else if j == mesh.n_theta {
        RowKind::ObliqueHigh
    } else {
        RowKind::Interior
    }
}

/// I − dt·L with boundary rows.
#[allow(clippy::needless_range_loop)]
fn assemble(mesh: &SectorMesh, a: &Matrix, dt: f64, bc: BoundaryCondition, vertex: VertexRow) -> BandMatrix {
    let nt = mesh.n_theta;
    let band = nt + 2;
    let mut m = BandMatrix::zeros(mesh.node_count(), band, band);
    let (h, dth) = (mesh.h, mesh.d_theta());
    let cot = 1.0 / (mesh.theta0 / 2.0).tan();
    let coefs: Vec<[f64; 5]> = (0..=nt).map(|j| polar_coefficients(a, mesh.angle(j))).collect();
    for i in 0..=mesh.n_r {
        let r2 = mesh.radius(i).powi(2);
        for j in 0..=nt {
            let row = mesh.index(i, j);
            match row_kind(mesh, bc, i, j) {
                RowKind::Zero => m.add(row, row, 1.0),
                RowKind::Vertex => {
                    m.add(row, row, 1.0);
                    if let VertexRow::Extrapolate { lambda } = vertex {
                        m.add(row, mesh.index(1, j), -(-lambda * h).exp());
                    }
                }
                RowKind::ObliqueLow => {
                    // u_θ + cot(θ₀/2) u_s = 0, one-sided in θ.
                    m.add(row, row, -3.0 / (2.0 * dth));
                    m.add(row, mesh.index(i, 1), 4.0 / (2.0 * dth));
                    m.add(row, mesh.index(i, 2), -1.0 / (2.0 * dth));
                    m.add(row, mesh.index(i + 1, 0), cot / (2.0 * h));
                    m.add(row, mesh.index(i - 1, 0), -cot / (2.0 * h));
                }
                RowKind::ObliqueHigh => {
                    // u_θ − cot(θ₀/2) u_s = 0.
                    m.add(row, row, 3.0 / (2.0 * dth));
                    m.add(row, mesh.index(i, nt - 1), -4.0 / (2.0 * dth));
                    m.add(row, mesh.index(i, nt - 2), 1.0 / (2.0 * dth));
                    m.add(row, mesh.index(i + 1, nt), -cot / (2.0 * h));
                    m.add(row, mesh.index(i - 1, nt), cot / (2.0 * h));
                }
                RowKind::Interior => {
                    let [p, q, s, u, v] = coefs[j];
                    let k = dt / r2;
                    let css = p / (h * h);
                    let ctt = s / (dth * dth);
                    m.add(row, row, 1.0 + k * (2.0 * css + 2.0 * ctt));
                    m.add(row, mesh.index(i + 1, j), -k * (css + u / (2.0 * h)));
                    m.add(row, mesh.index(i - 1, j), -k * (css - u / (2.0 * h)));
                    m.add(row, mesh.index(i, j + 1), -k * (ctt + v / (2.0 * dth)));
                    m.add(row, mesh.index(i, j - 1), -k * (ctt - v / (2.0 * dth)));
                    let cx = -k * q / (4.0 * h * dth);
                    m.add(row, mesh.index(i + 1, j + 1), cx);
                    m.add(row, mesh.index(i - 1, j - 1), cx);
                    m.add(row, mesh.index(i + 1, j - 1), -cx);
                    m.add(row, mesh.index(i - 1, j + 1), -cx);
                }
            }
        }
    }
    m
}

/// Samples a field at the mesh nodes.
pub fn sample_field(mesh: &SectorMesh, f: &Field, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; mesh.node_count()];
    for i in 0..=mesh.n_r {
        for j in 0..=mesh.n_theta {
            out[mesh.index(i, j)] = f(&mesh.point(i, j), t);
        }
    }
    out
}

/// Source values at interior nodes for time t.
fn source(mesh: &SectorMesh, rhs: &Rhs, t: f64) -> Option<Vec<f64>> {
    match rhs {
        Rhs::Zero => None,
        Rhs::Plain(f) => Some(sample_field(mesh, f, t)),
        Rhs::Divergence { f0, f } => {
            let mut out = sample_field(mesh, f0, t);
            let f1 = sample_field(mesh, &f[0], t);
            let f2 = sample_field(mesh, &f[1], t);
            let (h, dth) = (mesh.h, mesh.d_theta());
            for i in 1..mesh.n_r {
                let r = mesh.radius(i);
                for j in 1..mesh.n_theta {
                    let (sn, c) = mesh.angle(j).sin_cos();
                    let ds = |g: &[f64]| (g[mesh.index(i + 1, j)] - g[mesh.index(i - 1, j)]) / (2.0 * h);
                    let dt = |g: &[f64]| (g[mesh.index(i, j + 1)] - g[mesh.index(i, j - 1)]) / (2.0 * dth);
                    let div = (c * ds(&f1) - sn * dt(&f1) + sn * ds(&f2) + c * dt(&f2)) / r;
                    out[mesh.index(i, j)] += div;
                }
            }
            Some(out)
        }
    }
}

/// Backward-Euler solve over the mesh time window. One LU factorization is
/// kept per (coefficient piece, step length).
pub fn solve(spec: &ProblemSpec, mesh: &SectorMesh) -> Result<GridFunction> {
    spec.validate(mesh)?;
    let mut u = match &spec.initial {
        Initial::Zero => vec![0.0; mesh.node_count()],
        Initial::Field(f) => sample_field(mesh, f, mesh.times[0]),
        Initial::Nodal(v) => v.clone(),
    };
    for i in 0..=mesh.n_r {
        for j in 0..=mesh.n_theta {
            if row_kind(mesh, spec.bc, i, j) == RowKind::Zero {
                u[mesh.index(i, j)] = 0.0;
            }
        }
    }
    let mut cache: HashMap<(usize, u64), BandLu> = HashMap::new();
    let mut steps = vec![0];
    let mut slices = vec![u.clone()];
    let last = mesh.times.len() - 1;
    let kinds: Vec<RowKind> = (0..mesh.node_count())
        .map(|idx| row_kind(mesh, spec.bc, idx / (mesh.n_theta + 1), idx % (mesh.n_theta + 1)))
        .collect();
    for k in 0..last {
        let (t0, t1) = (mesh.times[k], mesh.times[k + 1]);
        let dt = t1 - t0;
        let piece = spec.path.piece_index(0.5 * (t0 + t1));
        let key = (piece, dt.to_bits());
        if let Entry::Vacant(slot) = cache.entry(key) {
            let a = &spec.path.pieces()[piece];
            slot.insert(assemble(mesh, a, dt, spec.bc, spec.vertex).factorize()?);
        }
        let src = source(mesh, &spec.rhs, t1);
        for (idx, kind) in kinds.iter().enumerate() {
            if *kind == RowKind::Interior {
                if let Some(f) = &src {
                    u[idx] += dt * f[idx];
                }
            } else {
                u[idx] = 0.0;
            }
        }
        cache[&key].solve_in_place(&mut u);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Mesh(format!("solution blew up at step {}", k + 1)));
        }
        if (k + 1) % mesh.store_stride == 0 || k + 1 == last {
            steps.push(k + 1);
            slices.push(u.clone());
        }
    }
    Ok(GridFunction { mesh: mesh.clone(), bc: spec.bc, steps, slices })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(theta0: f64, path: &CoefficientPath) -> SectorMesh {
        let cfg = MeshConfig { r_min: 1e-3, r_max: 4.0, q: 0.9, n_theta: 24, t_start: 0.0, t_end: 0.2, dt: 0.01, store_stride: 5 };
        SectorMesh::new(theta0, &cfg, path).unwrap()
    }

    #[test]
    fn polar_coefficients_reduce_to_laplacian() {
        let [p, q, s, u, v] = polar_coefficients(&Matrix::identity(2), 0.7);
        assert!((p - 1.0).abs() < 1e-15 && q.abs() < 1e-15 && (s - 1.0).abs() < 1e-15);
        assert!(u.abs() < 1e-15 && v.abs() < 1e-15);
    }

    #[test]
    fn operator_converges_on_quadratics() {
        // L applied to u = x² + 3xy − y² is 2a11 + 6a12 − 2a22 everywhere.
        let a = Matrix::from_row_major(2, vec![1.3, 0.4, 0.4, 0.9]).unwrap();
        let path = CoefficientPath::constant(a.clone()).unwrap();
        let expected = 2.0 * 1.3 + 6.0 * 0.4 - 2.0 * 0.9;
        let error = |q: f64, n_theta: usize| {
            let cfg = MeshConfig { r_min: 1e-3, r_max: 4.0, q, n_theta, t_start: 0.0, t_end: 0.2, dt: 0.01, store_stride: 5 };
            let m = SectorMesh::new(2.0, &cfg, &path).unwrap();
            let band = assemble(&m, &a, 1.0, BoundaryCondition::Dirichlet, VertexRow::Dirichlet);
            let u: Vec<f64> = (0..m.node_count())
                .map(|idx| {
                    let p = m.point(idx / (m.n_theta + 1), idx % (m.n_theta + 1));
                    p[0] * p[0] + 3.0 * p[0] * p[1] - p[1] * p[1]
                })
                .collect();
            let au = band.mul_vec(&u);
            let idx = m.index(m.nearest_radius_index(0.56), (0.83 / m.d_theta()).round() as usize);
            (u[idx] - au[idx] - expected).abs()
        };
        let (coarse, fine) = (error(0.9, 24), error(0.9f64.sqrt(), 48));
        assert!(fine < coarse / 3.0, "{coarse} -> {fine}");
        assert!(fine < 1e-2 * expected.abs(), "{fine}");
    }

    #[test]
    fn zero_data_gives_zero() {
        let path = CoefficientPath::identity(2);
        let spec = ProblemSpec::new(BoundaryCondition::Dirichlet, WedgeDomain::sector(PI).unwrap(), path.clone()).unwrap();
        let g = solve(&spec, &mesh(PI, &path)).unwrap();
        assert!(g.slices.iter().all(|s| s.iter().all(|&v| v == 0.0)));
        assert_eq!(g.steps, vec![0, 5, 10, 15, 20]);
    }

    #[test]
    fn oblique_needs_graph_cone_and_alignment_is_checked() {
        let path = CoefficientPath::identity(2);
        let spec = ProblemSpec::new(BoundaryCondition::Oblique, WedgeDomain::sector(4.0).unwrap(), path.clone()).unwrap();
        assert!(matches!(solve(&spec, &mesh(4.0, &path)), Err(Error::NotAGraph)));
        let jumpy = CoefficientPath::from_jumps(vec![0.05], vec![Matrix::identity(2), Matrix::diagonal(&[2.0, 1.0])]).unwrap();
        let spec = ProblemSpec::new(BoundaryCondition::Dirichlet, WedgeDomain::sector(1.0).unwrap(), jumpy).unwrap();
        let mut m = mesh(1.0, &path);
        m.times = vec![0.0, 0.03, 0.06];
        assert!(matches!(solve(&spec, &m), Err(Error::Mesh(_))));
    }
}
