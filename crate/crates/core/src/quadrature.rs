//! Gauss–Legendre rules, adaptive Gauss–Kronrod and a low-discrepancy
//! sequence for the oracle integrals.

use crate::error::{Error, Result};

/// n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal panels.
    pub fn composite(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

// Kronrod 15-point nodes (non-negative half) and weights, with the embedded
// 7-point Gauss weights on the odd-indexed nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod on [a, b]; returns (value, error estimate).
pub fn adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let mut parts = vec![{
        let (v, e) = gk15(&mut f, a, b);
        (a, b, v, e)
    }];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        if parts.len() >= max_intervals {
            return Err(Error::Quadrature(format!(
                "no convergence after {max_intervals} subintervals (estimate {total}, error {err})"
            )));
        }
        let (k, _) = parts
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = parts.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::Quadrature("subinterval collapsed".into()));
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Adaptive integral over [a, ∞) through the map x = a + u/(1−u).
pub fn adaptive_semi_infinite(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<(f64, f64)> {
    adaptive(
        |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let v = 1.0 - u;
            let val = f(a + u / v) / (v * v);
            if val.is_finite() { val } else { 0.0 }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
        max_intervals,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(10);
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        let v = rule.integrate(0.0, 1.0, |x| x.powi(19));
        assert!((v - 1.0 / 20.0).abs() < 1e-15);
        let odd = GaussLegendre::new(7);
        assert_eq!(odd.nodes[3], 0.0);
        assert!((odd.integrate(-1.0, 1.0, |x| x.powi(12)) - 2.0 / 13.0).abs() < 1e-15);
    }

    #[test]
    fn large_rule_integrates_gaussian() {
        let rule = GaussLegendre::new(100);
        let v = rule.integrate(-10.0, 10.0, |x| (-x * x).exp());
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let (v, _) = adaptive(|x| x.powf(-0.5), 0.0, 1.0, 1e-10, 1e-10, 2000).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
        let (g, _) = adaptive_semi_infinite(|x| (-x * x).exp(), 0.0, 1e-12, 1e-12, 500).unwrap();
        assert!((g - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-11);
    }
}
