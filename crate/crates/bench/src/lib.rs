//! Shared fixtures for the benchmarks.

use wedgegreen_core::solver::{MeshConfig, SectorMesh};
use wedgegreen_core::{CoefficientPath, Matrix};

/// Three-piece path with an off-diagonal middle piece.
pub fn jumping_path() -> CoefficientPath {
    CoefficientPath::from_jumps(
        vec![0.1, 0.2],
        vec![
            Matrix::diagonal(&[1.0, 0.6]),
            Matrix::from_row_major(2, vec![1.2, 0.3, 0.3, 0.8]).expect("square"),
            Matrix::identity(2),
        ],
    )
    .expect("elliptic")
}

/// Coarse quarter-plane mesh, well under a second per solve.
pub fn small_mesh(path: &CoefficientPath) -> SectorMesh {
    let cfg = MeshConfig {
        r_min: 1e-3,
        r_max: 4.0,
        q: (-0.05f64).exp(),
        n_theta: 32,
        t_start: 0.0,
        t_end: 0.3,
        dt: 5e-3,
        store_stride: 10,
    };
    SectorMesh::new(std::f64::consts::FRAC_PI_2, &cfg, path).expect("valid mesh")
}
