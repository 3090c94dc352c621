use crate::coefficients::CoefficientPath;
use crate::error::{Error, Result};
use crate::kv::KeyValues;

/// Mesh parameters as read from a config file; the angle comes from the
/// domain and the time steps are aligned to the coefficient path.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshConfig {
    pub r_min: f64,
    pub r_max: f64,
    /// Ratio of consecutive radii, r_i / r_{i+1}.
    pub q: f64,
    pub n_theta: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub store_stride: usize,
}

impl MeshConfig {
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        Ok(Self {
            r_min: kv.f64("r_min")?,
            r_max: kv.f64("r_max")?,
            q: kv.f64("q")?,
            n_theta: kv.usize("n_theta")?,
            t_start: kv.f64_or("t_start", 0.0)?,
            t_end: kv.f64("t_end")?,
            dt: kv.f64("dt")?,
            store_stride: kv.usize_or("store_stride", 1)?,
        })
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("r_min", self.r_min.to_string());
        kv.set("r_max", self.r_max.to_string());
        kv.set("q", self.q.to_string());
        kv.set("n_theta", self.n_theta.to_string());
        kv.set("t_start", self.t_start.to_string());
        kv.set("t_end", self.t_end.to_string());
        kv.set("dt", self.dt.to_string());
        kv.set("store_stride", self.store_stride.to_string());
        kv
    }
}

/// Polar mesh of a sector: radii r_min·q^{-i} (uniform step h = −ln q in
/// s = ln r), uniform angles on [0, θ₀], and a list of step times.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorMesh {
    pub theta0: f64,
    pub r_min: f64,
    pub h: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub times: Vec<f64>,
    pub store_stride: usize,
}

impl SectorMesh {
    /// Builds the mesh; the radial extent is rounded up to a whole number of
    /// steps and every coefficient jump inside the window becomes a step time.
    pub fn new(theta0: f64, cfg: &MeshConfig, path: &CoefficientPath) -> Result<Self> {
        if !(cfg.q >= 0.8 && cfg.q < 1.0) {
            return Err(Error::Mesh(format!("grading ratio {} outside [0.8, 1)", cfg.q)));
        }
        if !(cfg.r_min > 0.0 && cfg.r_max > cfg.r_min) {
            return Err(Error::Mesh("need 0 < r_min < r_max".into()));
        }
        if cfg.n_theta < 4 {
            return Err(Error::Mesh("need at least 4 angular cells".into()));
        }
        if !(cfg.dt > 0.0 && cfg.t_end > cfg.t_start) {
            return Err(Error::Mesh("need dt > 0 and t_end > t_start".into()));
        }
        if cfg.store_stride == 0 {
            return Err(Error::Mesh("store_stride must be ≥ 1".into()));
        }
        let h = -cfg.q.ln();
        let n_r = ((cfg.r_max / cfg.r_min).ln() / h - 1e-9).ceil().max(4.0) as usize;
        let mut cuts = vec![cfg.t_start];
        cuts.extend(path.jumps().iter().copied().filter(|&t| t > cfg.t_start && t < cfg.t_end));
        cuts.push(cfg.t_end);
        let mut times = vec![cfg.t_start];
        for w in cuts.windows(2) {
            let steps = ((w[1] - w[0]) / cfg.dt - 1e-9).ceil().max(1.0) as usize;
            for k in 1..steps {
                times.push(w[0] + (w[1] - w[0]) * k as f64 / steps as f64);
            }
            times.push(w[1]);
        }
        Ok(Self { theta0, r_min: cfg.r_min, h, n_r, n_theta: cfg.n_theta, times, store_stride: cfg.store_stride })
    }

    pub fn d_theta(&self) -> f64 {
        self.theta0 / self.n_theta as f64
    }

    pub fn r_max(&self) -> f64 {
        self.radius(self.n_r)
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.r_min * (self.h * i as f64).exp()
    }

    pub fn angle(&self, j: usize) -> f64 {
        self.d_theta() * j as f64
    }

    pub fn node_count(&self) -> usize {
        (self.n_r + 1) * (self.n_theta + 1)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * (self.n_theta + 1) + j
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        let (r, th) = (self.radius(i), self.angle(j));
        [r * th.cos(), r * th.sin()]
    }

    /// Node nearest to radius r (in ln r).
    pub fn nearest_radius_index(&self, r: f64) -> usize {
        (((r / self.r_min).ln() / self.h).round().max(0.0) as usize).min(self.n_r)
    }

    /// Area weight of each node: r² h dθ with trapezoid end factors.
    pub fn area_weights(&self) -> Vec<f64> {
        let dth = self.d_theta();
        let mut w = vec![0.0; self.node_count()];
        for i in 0..=self.n_r {
            let fi = if i == 0 || i == self.n_r { 0.5 } else { 1.0 };
            let r = self.radius(i);
            for j in 0..=self.n_theta {
                let fj = if j == 0 || j == self.n_theta { 0.5 } else { 1.0 };
                w[self.index(i, j)] = fi * fj * r * r * self.h * dth;
            }
        }
        w
    }

    /// Whether every jump of the path inside the window is a step time.
    pub fn is_aligned(&self, path: &CoefficientPath) -> bool {
        let (t0, t1) = (self.times[0], *self.times.last().unwrap());
        path.jumps().iter().filter(|&&t| t > t0 && t < t1).all(|t| self.times.contains(t))
    }

    /// Same mesh with the time axis shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        let mut m = self.clone();
        m.times.iter_mut().for_each(|t| *t += offset);
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn cfg() -> MeshConfig {
        MeshConfig { r_min: 0.01, r_max: 1.0, q: 0.9, n_theta: 8, t_start: 0.0, t_end: 1.0, dt: 0.3, store_stride: 1 }
    }

    #[test]
    fn grading_and_weights() {
        let m = SectorMesh::new(1.0, &cfg(), &CoefficientPath::identity(2)).unwrap();
        assert!(m.r_max() >= 1.0 && m.radius(m.n_r - 1) < 1.0);
        assert!((m.radius(1) / m.radius(0) - 1.0 / 0.9).abs() < 1e-14);
        // Trapezoid in ln r of ∫ r² d(ln r): the sum is exact up to the factor h/tanh h.
        let area: f64 = m.area_weights().iter().sum();
        let exact = 0.5 * (m.r_max().powi(2) - 0.01f64.powi(2));
        assert!((area / (exact * m.h / m.h.tanh()) - 1.0).abs() < 1e-12);
        assert_eq!(m.times.len(), 5);
    }

    #[test]
    fn jumps_become_step_times() {
        let p = CoefficientPath::from_jumps(vec![0.45], vec![Matrix::identity(2), Matrix::diagonal(&[2.0, 2.0])]).unwrap();
        let m = SectorMesh::new(1.0, &cfg(), &p).unwrap();
        assert!(m.times.contains(&0.45) && m.is_aligned(&p));
        assert!(m.times.windows(2).all(|w| w[1] - w[0] <= 0.3 + 1e-12));
        let mut bad = m.clone();
        bad.times = vec![0.0, 0.5, 1.0];
        assert!(!bad.is_aligned(&p));
        let mut c = cfg();
        c.q = 0.7;
        assert!(SectorMesh::new(1.0, &c, &p).is_err());
    }
}
