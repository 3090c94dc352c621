use std::io::Write;

use super::mesh::SectorMesh;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Dirichlet,
    /// D₁u = 0 with D₁ along the bisector.
    Oblique,
}

impl BoundaryCondition {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(Self::Dirichlet),
            "oblique" => Ok(Self::Oblique),
            other => Err(Error::Parse(format!("unknown boundary condition `{other}`"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Dirichlet => "dirichlet",
            Self::Oblique => "oblique",
        }
    }
}

/// Stored time slices of a solution on a sector mesh.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub mesh: SectorMesh,
    pub bc: BoundaryCondition,
    /// Mesh time index of each stored slice.
    pub steps: Vec<usize>,
    pub slices: Vec<Vec<f64>>,
}

/// Polar derivatives (u_s, u_θ, u_ss, u_sθ, u_θθ) at a node.
#[derive(Debug, Clone, Copy)]
struct PolarDerivatives {
    us: f64,
    ut: f64,
    uss: f64,
    ust: f64,
    utt: f64,
}

impl GridFunction {
    pub fn time(&self, slice: usize) -> f64 {
        self.mesh.times[self.steps[slice]]
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|&k| self.mesh.times[k]).collect()
    }

    pub fn slice_at_step(&self, step: usize) -> Option<usize> {
        self.steps.binary_search(&step).ok()
    }

    /// Stored slice whose time is closest to t.
    pub fn nearest_slice(&self, t: f64) -> usize {
        (0..self.steps.len())
            .min_by(|&a, &b| (self.time(a) - t).abs().total_cmp(&(self.time(b) - t).abs()))
            .unwrap_or(0)
    }

    pub fn value(&self, slice: usize, i: usize, j: usize) -> f64 {
        self.slices[slice][self.mesh.index(i, j)]
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i >= 1 && i < self.mesh.n_r && j >= 1 && j < self.mesh.n_theta
    }

    fn polar(&self, slice: usize, i: usize, j: usize) -> Result<PolarDerivatives> {
        if !self.is_interior(i, j) {
            return Err(Error::StencilOutsideMesh);
        }
        let u = |a: usize, b: usize| self.value(slice, a, b);
        let (h, dt) = (self.mesh.h, self.mesh.d_theta());
        Ok(PolarDerivatives {
            us: (u(i + 1, j) - u(i - 1, j)) / (2.0 * h),
            ut: (u(i, j + 1) - u(i, j - 1)) / (2.0 * dt),
            uss: (u(i + 1, j) - 2.0 * u(i, j) + u(i - 1, j)) / (h * h),
            ust: (u(i + 1, j + 1) - u(i + 1, j - 1) - u(i - 1, j + 1) + u(i - 1, j - 1)) / (4.0 * h * dt),
            utt: (u(i, j + 1) - 2.0 * u(i, j) + u(i, j - 1)) / (dt * dt),
        })
    }

    /// Cartesian gradient at an interior node.
    pub fn gradient(&self, slice: usize, i: usize, j: usize) -> Result<[f64; 2]> {
        let d = self.polar(slice, i, j)?;
        let (r, (sn, c)) = (self.mesh.radius(i), self.mesh.angle(j).sin_cos());
        Ok([(c * d.us - sn * d.ut) / r, (sn * d.us + c * d.ut) / r])
    }

    /// Cartesian Hessian at an interior node.
    pub fn hessian(&self, slice: usize, i: usize, j: usize) -> Result<Matrix> {
        let d = self.polar(slice, i, j)?;
        let (r, (sn, c)) = (self.mesh.radius(i), self.mesh.angle(j).sin_cos());
        let r2 = r * r;
        let (cc, ss, cs) = (c * c, sn * sn, c * sn);
        let xx = cc * d.uss - 2.0 * cs * d.ust + ss * d.utt + (ss - cc) * d.us + 2.0 * cs * d.ut;
        let yy = ss * d.uss + 2.0 * cs * d.ust + cc * d.utt + (cc - ss) * d.us - 2.0 * cs * d.ut;
        let xy = cs * d.uss + (cc - ss) * d.ust - cs * d.utt - 2.0 * cs * d.us - (cc - ss) * d.ut;
        Matrix::from_row_major(2, vec![xx / r2, xy / r2, xy / r2, yy / r2])
    }

    /// Lagrange interpolation on a 4×4 stencil in (ln r, θ).
    pub fn interpolate(&self, slice: usize, x: &[f64]) -> Result<f64> {
        let m = &self.mesh;
        let r = x[0].hypot(x[1]);
        let mut th = x[1].atan2(x[0]);
        if th < -1e-12 {
            th += std::f64::consts::TAU;
        }
        let th = th.max(0.0);
        let fi = (r / m.r_min).ln() / m.h;
        let fj = th / m.d_theta();
        if !(fi >= -1e-9 && fi <= m.n_r as f64 + 1e-9 && fj <= m.n_theta as f64 + 1e-9) {
            return Err(Error::StencilOutsideMesh);
        }
        let (i0, wi) = lagrange4(fi, m.n_r);
        let (j0, wj) = lagrange4(fj, m.n_theta);
        let mut v = 0.0;
        for (a, wa) in wi.iter().enumerate() {
            for (b, wb) in wj.iter().enumerate() {
                v += wa * wb * self.value(slice, i0 + a, j0 + b);
            }
        }
        Ok(v)
    }

    /// ∫ u over the sector at one slice.
    pub fn integral(&self, slice: usize) -> f64 {
        self.mesh.area_weights().iter().zip(&self.slices[slice]).map(|(w, u)| w * u).sum()
    }

    /// Writes `r,theta,t,value` rows for every stored slice.
    pub fn write_csv<W: Write>(&self, mut out: W, comment: &str) -> Result<()> {
        for line in comment.lines() {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "theta", "t", "value"])?;
        for (k, slice) in self.slices.iter().enumerate() {
            let t = self.time(k).to_string();
            for i in 0..=self.mesh.n_r {
                let r = self.mesh.radius(i).to_string();
                for j in 0..=self.mesh.n_theta {
                    w.write_record([
                        r.as_str(),
                        &self.mesh.angle(j).to_string(),
                        &t,
                        &slice[self.mesh.index(i, j)].to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// First index and weights of the 4-point Lagrange stencil around the
/// fractional index f on nodes 0..=n.
fn lagrange4(f: f64, n: usize) -> (usize, [f64; 4]) {
    let i0 = (f.floor() as isize - 1).clamp(0, n as isize - 3) as usize;
    let mut w = [1.0; 4];
    for (a, wa) in w.iter_mut().enumerate() {
        for b in 0..4 {
            if a != b {
                *wa *= (f - (i0 + b) as f64) / (a as f64 - b as f64);
            }
        }
    }
    (i0, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientPath;
    use crate::solver::mesh::MeshConfig;

    fn grid_of(f: impl Fn(f64, f64) -> f64) -> GridFunction {
        grid_on(0.95, 40, f)
    }

    fn grid_on(q: f64, n_theta: usize, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let cfg = MeshConfig { r_min: 0.05, r_max: 2.0, q, n_theta, t_start: 0.0, t_end: 1.0, dt: 1.0, store_stride: 1 };
        let mesh = SectorMesh::new(2.0, &cfg, &CoefficientPath::identity(2)).unwrap();
        let mut v = vec![0.0; mesh.node_count()];
        for i in 0..=mesh.n_r {
            for j in 0..=mesh.n_theta {
                let p = mesh.point(i, j);
                v[mesh.index(i, j)] = f(p[0], p[1]);
            }
        }
        GridFunction { mesh, bc: BoundaryCondition::Dirichlet, steps: vec![0], slices: vec![v] }
    }

    #[test]
    fn cartesian_derivatives_of_a_quadratic() {
        let f = |x: f64, y: f64| 1.5 * x * x - 0.7 * x * y + 0.4 * y * y + 2.0 * x - y;
        // Largest gradient and Hessian errors near (r, θ) = (0.39, 0.65).
        let errors = |q: f64, n_theta: usize| {
            let g = grid_on(q, n_theta, f);
            let i = g.mesh.nearest_radius_index(0.39);
            let j = (0.65 / g.mesh.d_theta()).round() as usize;
            let p = g.mesh.point(i, j);
            let grad = g.gradient(0, i, j).unwrap();
            let h = g.hessian(0, i, j).unwrap();
            let eg = (grad[0] - (3.0 * p[0] - 0.7 * p[1] + 2.0)).abs().max((grad[1] - (-0.7 * p[0] + 0.8 * p[1] - 1.0)).abs());
            let eh = (h[(0, 0)] - 3.0).abs().max((h[(0, 1)] + 0.7).abs()).max((h[(1, 1)] - 0.8).abs());
            (eg, eh)
        };
        let (coarse, fine) = (errors(0.95, 40), errors(0.975, 80));
        // Second order: halving both steps cuts the error about fourfold.
        assert!(fine.0 < coarse.0 / 3.0 && fine.1 < coarse.1 / 3.0, "{coarse:?} -> {fine:?}");
        assert!(fine.0 < 2e-3 && fine.1 < 1e-2, "{fine:?}");
        assert!(grid_of(f).hessian(0, 0, 3).is_err());
    }

    #[test]
    fn interpolation_is_accurate_between_nodes() {
        let g = grid_of(|x, y| (x + 0.3 * y).sin() * (-0.1 * y).exp());
        let p = [0.61, 0.77];
        let v = g.interpolate(0, &p).unwrap();
        assert!((v - (p[0] + 0.3 * p[1]).sin() * (-0.1 * p[1]).exp()).abs() < 1e-5);
        assert!(g.interpolate(0, &[3.0, 0.1]).is_err());
    }

    #[test]
    fn integral_of_constant_is_area() {
        let g = grid_of(|_, _| 1.0);
        let area = 0.5 * 2.0 * (g.mesh.r_max().powi(2) - 0.05f64.powi(2));
        assert!((g.integral(0) - area).abs() < 1e-3 * area);
    }
}
