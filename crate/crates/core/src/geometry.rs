//! Wedges 𝒦 = K × ℝⁿ⁻ᵐ over a planar sector or a Lipschitz-graph cone, and
//! the geometric factors d(x), r_x = d/|x′| and ℛ_{x,t} = |x′|/(|x′|+√t).

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::kv::KeyValues;

/// Profile φ of a graph cone K = {x₁ > φ(x̂)}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeProfile {
    /// φ(x̂) = slope·|x̂|: a circular cone around the x₁ axis, any m.
    Circular { slope: f64 },
    /// m = 2 only: φ(η) = upper·η for η ≥ 0 and lower·|η| for η < 0.
    TwoSlope { lower: f64, upper: f64 },
}

impl ConeProfile {
    pub fn eval(&self, xhat: &[f64]) -> f64 {
        match *self {
            ConeProfile::Circular { slope } => slope * xhat.iter().map(|v| v * v).sum::<f64>().sqrt(),
            ConeProfile::TwoSlope { lower, upper } => {
                let eta = xhat[0];
                if eta >= 0.0 {
                    upper * eta
                } else {
                    -lower * eta
                }
            }
        }
    }

    /// Smallest Lipschitz constant of φ.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            ConeProfile::Circular { slope } => slope.abs(),
            ConeProfile::TwoSlope { lower, upper } => lower.abs().max(upper.abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeSpec {
    /// {0 < θ < θ₀} in polar coordinates of (x₁, x₂).
    Sector { theta0: f64 },
    LipschitzGraph { profile: ConeProfile, lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeDomain {
    m: usize,
    n: usize,
    cone: ConeSpec,
}

/// Geometric factors at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// Distance to ∂𝒦, negative outside.
    pub d: f64,
    pub r_x: f64,
    pub big_r: f64,
    pub inside: bool,
    /// |x′|
    pub radius: f64,
}

/// Samples used to check homogeneity and the Lipschitz bound of a profile.
const PROFILE_PROBES: usize = 64;

impl WedgeDomain {
    /// Planar sector of opening θ₀ (m = n = 2).
    pub fn sector(theta0: f64) -> Result<Self> {
        Self::sector_in(theta0, 2)
    }

    /// Sector × ℝⁿ⁻².
    pub fn sector_in(theta0: f64, n: usize) -> Result<Self> {
        if !(theta0 > 0.0 && theta0 < TAU) {
            return Err(Error::InvalidDomain(format!("sector angle {theta0} outside (0, 2π)")));
        }
        if n < 2 {
            return Err(Error::InvalidDomain("need n ≥ 2".into()));
        }
        Ok(Self { m: 2, n, cone: ConeSpec::Sector { theta0 } })
    }

    /// Graph cone with a known profile.
    pub fn graph(profile: ConeProfile, lambda: f64, m: usize, n: usize) -> Result<Self> {
        if !(2..=n).contains(&m) {
            return Err(Error::InvalidDomain(format!("need 2 ≤ m ≤ n, got m={m}, n={n}")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidDomain(format!("Lipschitz constant {lambda} must be finite and ≥ 0")));
        }
        if matches!(profile, ConeProfile::TwoSlope { .. }) && m != 2 {
            return Err(Error::InvalidDomain("two-slope profiles need m = 2".into()));
        }
        if profile.lipschitz() > lambda * (1.0 + 1e-12) {
            return Err(Error::InvalidDomain(format!(
                "profile has Lipschitz constant {} above the stated {lambda}",
                profile.lipschitz()
            )));
        }
        Ok(Self { m, n, cone: ConeSpec::LipschitzGraph { profile, lambda } })
    }

    /// Graph cone from an arbitrary profile function. The function is
    /// checked for φ(0) = 0, degree-1 homogeneity and the Lipschitz bound on
    /// probe points, then identified as a circular or (m = 2) two-slope cone.
    pub fn lipschitz_cone(phi: impl Fn(&[f64]) -> f64, lambda: f64, m: usize, n: usize) -> Result<Self> {
        if !(2..=n).contains(&m) {
            return Err(Error::InvalidDomain(format!("need 2 ≤ m ≤ n, got m={m}, n={n}")));
        }
        let dim = m - 1;
        if phi(&vec![0.0; dim]).abs() > 1e-12 {
            return Err(Error::InvalidDomain("profile must vanish at the origin".into()));
        }
        let probes: Vec<Vec<f64>> = (0..PROFILE_PROBES)
            .map(|i| {
                let a = TAU * (i as f64 + 0.5) / PROFILE_PROBES as f64;
                (0..dim).map(|k| (a * (k as f64 + 1.0) + k as f64).cos() + 0.1 * (k as f64)).collect()
            })
            .collect();
        for p in &probes {
            let v = phi(p);
            for scale in [0.01, 0.5, 3.0, 100.0] {
                let q: Vec<f64> = p.iter().map(|c| c * scale).collect();
                if (phi(&q) - scale * v).abs() > 1e-9 * (1.0 + (scale * v).abs()) {
                    return Err(Error::InvalidDomain("profile is not positively homogeneous of degree 1".into()));
                }
            }
        }
        for (i, p) in probes.iter().enumerate() {
            let q = &probes[(i * 7 + 3) % probes.len()];
            let dist = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dist > 0.0 && (phi(p) - phi(q)).abs() > lambda * dist * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::InvalidDomain("profile violates the stated Lipschitz bound".into()));
            }
        }
        let profile = if dim == 1 {
            ConeProfile::TwoSlope { lower: phi(&[-1.0]), upper: phi(&[1.0]) }
        } else {
            let mut e1 = vec![0.0; dim];
            e1[0] = 1.0;
            let slope = phi(&e1);
            let circular = probes.iter().all(|p| {
                let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                (phi(p) - slope * r).abs() <= 1e-9 * (1.0 + r)
            });
            if !circular {
                return Err(Error::InvalidDomain("only circular cones are supported for m ≥ 3".into()));
            }
            ConeProfile::Circular { slope }
        };
        Self::graph(profile, lambda, m, n)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    /// Opening angle of a planar cone.
    pub fn opening_angle(&self) -> Option<f64> {
        match self.cone {
            ConeSpec::Sector { theta0 } => Some(theta0),
            ConeSpec::LipschitzGraph { profile, .. } if self.m == 2 => {
                let (lo, hi) = planar_edges(profile);
                Some(hi - lo)
            }
            _ => None,
        }
    }

    /// Half-angle of a circular cone around its axis.
    pub fn cap_half_angle(&self) -> Option<f64> {
        match self.cone {
            ConeSpec::LipschitzGraph { profile: ConeProfile::Circular { slope }, .. } => {
                Some(PI / 2.0 - slope.atan())
            }
            ConeSpec::Sector { theta0 } => Some(theta0 / 2.0),
            _ => None,
        }
    }

    /// Graph representation of a sector with θ₀ ≤ π: rotating by −θ₀/2
    /// puts the bisector on the x₁ axis, and the edges become
    /// x₁ = cot(θ₀/2)|x₂|, so φ(η) = cot(θ₀/2)|η| and Λ = cot(θ₀/2).
    pub fn to_graph(&self) -> Result<Self> {
        match self.cone {
            ConeSpec::LipschitzGraph { .. } => Ok(*self),
            ConeSpec::Sector { theta0 } => {
                if theta0 > PI {
                    return Err(Error::NotAGraph);
                }
                let k = if theta0 == PI { 0.0 } else { 1.0 / (theta0 / 2.0).tan() };
                Self::graph(ConeProfile::TwoSlope { lower: k, upper: k }, k, 2, self.n)
            }
        }
    }

    /// Coordinates of x in the graph frame of [`Self::to_graph`].
    pub fn to_graph_coords(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.cone {
            ConeSpec::LipschitzGraph { .. } => Ok(x.to_vec()),
            ConeSpec::Sector { theta0 } => {
                if theta0 > PI {
                    return Err(Error::NotAGraph);
                }
                let (sn, c) = (theta0 / 2.0).sin_cos();
                let mut out = x.to_vec();
                out[0] = c * x[0] + sn * x[1];
                out[1] = -sn * x[0] + c * x[1];
                Ok(out)
            }
        }
    }

    /// The oblique direction e₁ of the graph frame, in domain coordinates.
    pub fn graph_axis(&self) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.n];
        match self.cone {
            ConeSpec::LipschitzGraph { .. } => e[0] = 1.0,
            ConeSpec::Sector { theta0 } => {
                if theta0 > PI {
                    return Err(Error::NotAGraph);
                }
                let (sn, c) = (theta0 / 2.0).sin_cos();
                e[0] = c;
                e[1] = sn;
            }
        }
        Ok(e)
    }

    pub fn is_graph(&self) -> bool {
        self.to_graph().is_ok()
    }

    /// d(x), r_x, ℛ_{x,t} and membership.
    pub fn geometry_at(&self, x: &[f64], t: f64) -> Result<Geometry> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("elapsed time {t} must be ≥ 0")));
        }
        let xp = &x[..self.m];
        let radius = xp.iter().map(|v| v * v).sum::<f64>().sqrt();
        if radius == 0.0 {
            return Err(Error::VertexAxis);
        }
        let d = match self.cone {
            ConeSpec::Sector { theta0 } => planar_distance(xp[1].atan2(xp[0]), radius, 0.0, theta0),
            ConeSpec::LipschitzGraph { profile, .. } => match profile {
                ConeProfile::TwoSlope { .. } => {
                    let (lo, hi) = planar_edges(profile);
                    planar_distance(xp[1].atan2(xp[0]), radius, lo, hi)
                }
                ConeProfile::Circular { slope } => {
                    let half = PI / 2.0 - slope.atan();
                    let rho = xp[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                    let psi = rho.atan2(xp[0]);
                    let gap = (psi - half).abs();
                    let unsigned = if gap <= PI / 2.0 { radius * gap.sin() } else { radius };
                    if psi < half { unsigned } else { -unsigned }
                }
            },
        };
        Ok(Geometry { d, r_x: d / radius, big_r: radius / (radius + t.sqrt()), inside: d > 0.0, radius })
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let m = kv.usize_or("m", 2)?;
        let n = kv.usize_or("n", m)?;
        if kv.get("sector.theta0").is_some() {
            if m != 2 {
                return Err(Error::InvalidDomain("sectors need m = 2".into()));
            }
            return Self::sector_in(kv.f64("sector.theta0")?, n);
        }
        let profile = if kv.get("graph.circular.slope").is_some() {
            ConeProfile::Circular { slope: kv.f64("graph.circular.slope")? }
        } else if kv.get("graph.two_slope.lower").is_some() {
            ConeProfile::TwoSlope { lower: kv.f64("graph.two_slope.lower")?, upper: kv.f64("graph.two_slope.upper")? }
        } else {
            return Err(Error::InvalidDomain("domain needs sector.theta0 or a graph profile".into()));
        };
        let lambda = kv.f64_or("graph.lambda", profile.lipschitz())?;
        Self::graph(profile, lambda, m, n)
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("m", self.m.to_string());
        kv.set("n", self.n.to_string());
        match self.cone {
            ConeSpec::Sector { theta0 } => kv.set("sector.theta0", theta0.to_string()),
            ConeSpec::LipschitzGraph { profile, lambda } => {
                match profile {
                    ConeProfile::Circular { slope } => kv.set("graph.circular.slope", slope.to_string()),
                    ConeProfile::TwoSlope { lower, upper } => {
                        kv.set("graph.two_slope.lower", lower.to_string());
                        kv.set("graph.two_slope.upper", upper.to_string());
                    }
                }
                kv.set("graph.lambda", lambda.to_string());
            }
        }
        kv
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&KeyValues::parse(text)?)
    }
}

/// Edge angles (lo, hi) of a planar graph cone, lo < 0 < hi.
fn planar_edges(profile: ConeProfile) -> (f64, f64) {
    match profile {
        ConeProfile::TwoSlope { lower, upper } => (-(1.0f64).atan2(lower), (1.0f64).atan2(upper)),
        ConeProfile::Circular { slope } => {
            let h = (1.0f64).atan2(slope);
            (-h, h)
        }
    }
}

/// Signed distance from the point (radius, angle) to the boundary of the
/// sector lo < θ < hi.
fn planar_distance(angle: f64, radius: f64, lo: f64, hi: f64) -> f64 {
    let rel = (angle - lo).rem_euclid(TAU);
    let opening = hi - lo;
    let edge = |delta: f64| {
        let delta = delta.abs().min(TAU - delta.abs());
        if delta <= PI / 2.0 { radius * delta.sin() } else { radius }
    };
    let unsigned = edge(rel).min(edge(rel - opening));
    if rel > 0.0 && rel < opening { unsigned } else { -unsigned }
}
