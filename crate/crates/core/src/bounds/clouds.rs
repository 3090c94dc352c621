//! Sample clouds of numerical Green functions for envelope fits. A cloud
//! is a base half away from the vertex followed by an extension half of
//! the same size closer to it, so the doubling test in `fit_constant`
//! probes the vertex behaviour.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::coefficients::CoefficientPath;
use crate::error::{Error, Result};
use crate::geometry::WedgeDomain;
use crate::oblique::{difference_samples, ObliqueTables};
use crate::samples::{KernelSample, SampleKind};
use crate::solver::{green, BoundaryCondition, ComparisonRegion, MeshConfig, ProblemSpec, SectorMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudKernel {
    Dirichlet,
    Oblique,
    /// Second x-derivatives of the oblique kernel minus the whole-space kernel.
    ObliqueDifference,
}

#[derive(Debug, Clone)]
pub struct CloudSetup {
    pub kernel: CloudKernel,
    pub theta0: f64,
    pub path: CoefficientPath,
    pub mesh: MeshConfig,
    pub poles: Vec<[f64; 2]>,
    pub eps: f64,
    pub base: ComparisonRegion,
    pub extension: ComparisonRegion,
    pub stride: usize,
}

impl CloudSetup {
    /// Quarter plane, A ≡ I, two poles, base ℛ_x ∈ [0.2, 0.8] and
    /// extension ℛ_x ∈ [0.02, 0.2).
    pub fn quarter_plane(kernel: CloudKernel) -> Self {
        let polar = |r: f64, th: f64| [r * th.cos(), r * th.sin()];
        Self {
            kernel,
            theta0: PI / 2.0,
            path: CoefficientPath::identity(2),
            mesh: MeshConfig {
                r_min: 1e-3,
                r_max: 4.0,
                q: (-0.05f64).exp(),
                n_theta: 32,
                t_start: 0.0,
                t_end: 0.3,
                dt: 2e-3,
                store_stride: 10,
            },
            poles: vec![polar(0.6, PI / 4.0), polar(0.5, PI / 6.0)],
            eps: 0.1,
            base: ComparisonRegion::default(),
            extension: ComparisonRegion { big_r_lo: 0.02, big_r_hi: 0.1999, ..ComparisonRegion::default() },
            stride: 2,
        }
    }

    pub fn domain(&self) -> Result<WedgeDomain> {
        WedgeDomain::sector(self.theta0)
    }
}

/// Every `len/k`-th element, keeping k of them.
fn thin<T: Clone>(v: &[T], k: usize) -> Vec<T> {
    if v.len() <= k {
        return v.to_vec();
    }
    (0..k).map(|i| v[i * v.len() / k].clone()).collect()
}

/// Derivative orders sampled from a plain table.
const ORDERS: [[u32; 2]; 6] = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];

fn pole_samples(setup: &CloudSetup, base: &ProblemSpec, mesh: &SectorMesh, y: [f64; 2]) -> Result<[Vec<KernelSample>; 2]> {
    let regions = [setup.base, setup.extension];
    match setup.kernel {
        CloudKernel::Dirichlet | CloudKernel::Oblique => {
            let table = green(base, y, 0.0, Some(setup.eps), mesh)?;
            let collect = |region: &ComparisonRegion| -> Result<Vec<KernelSample>> {
                let picks = table.picks(region, setup.stride);
                let mut out = Vec::new();
                for alpha in ORDERS {
                    out.extend(table.samples(&picks, &alpha)?);
                }
                Ok(out)
            };
            Ok([collect(&regions[0])?, collect(&regions[1])?])
        }
        CloudKernel::ObliqueDifference => {
            let tables = ObliqueTables::build(base, y, 0.0, setup.eps, false, mesh)?;
            let collect = |region: &ComparisonRegion| -> Result<Vec<KernelSample>> {
                let picks = tables.center.picks(region, setup.stride);
                let all = difference_samples(&tables, &setup.path, &picks)?;
                Ok(all.into_iter().filter(|s| s.kind == Some(SampleKind::ObliqueMinusWhole)).collect())
            };
            Ok([collect(&regions[0])?, collect(&regions[1])?])
        }
    }
}

/// Base samples followed by an equally sized extension toward the vertex.
pub fn kernel_cloud(setup: &CloudSetup) -> Result<Vec<KernelSample>> {
    let bc = match setup.kernel {
        CloudKernel::Dirichlet => BoundaryCondition::Dirichlet,
        _ => BoundaryCondition::Oblique,
    };
    let base = ProblemSpec::new(bc, setup.domain()?, setup.path.clone())?;
    let mesh = SectorMesh::new(setup.theta0, &setup.mesh, &setup.path)?;
    let parts: Vec<[Vec<KernelSample>; 2]> =
        setup.poles.par_iter().map(|y| pole_samples(setup, &base, &mesh, *y)).collect::<Result<_>>()?;
    let (mut inner, mut outer) = (Vec::new(), Vec::new());
    for [a, b] in parts {
        inner.extend(a);
        outer.extend(b);
    }
    if inner.is_empty() || outer.is_empty() {
        return Err(Error::EmptySamples);
    }
    let k = inner.len().min(outer.len());
    let mut cloud = thin(&inner, k);
    cloud.extend(thin(&outer, k));
    Ok(cloud)
}
