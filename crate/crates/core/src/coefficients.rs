//! Piecewise-constant coefficient paths t ↦ A(t) of the operator
//! ∂t − aⁱʲ(t)DᵢDⱼ.

use crate::error::{Error, Result};
use crate::kv::{format_f64_list, parse_f64_list, KeyValues};
use crate::linalg::Matrix;

/// Relative asymmetry accepted as input rounding before a piece is rejected.
const SYMMETRY_TOL: f64 = 1e-12;

/// A(t) is `pieces[k]` on `[jumps[k-1], jumps[k])`; the first piece extends
/// to −∞ and the last one to +∞.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPath {
    n: usize,
    jumps: Vec<f64>,
    pieces: Vec<Matrix>,
    nu: f64,
}

impl CoefficientPath {
    /// `breakpoints[k]` is the start time of piece `k`. The start of the
    /// first piece is nominal since that piece is extended to −∞.
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Matrix>) -> Result<Self> {
        if breakpoints.len() != pieces.len() {
            return Err(Error::DimensionMismatch { expected: pieces.len(), got: breakpoints.len() });
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::BreakpointsNotIncreasing);
        }
        Self::from_jumps(breakpoints.into_iter().skip(1).collect(), pieces)
    }

    /// Builds a path from its jump times (one fewer than the pieces).
    pub fn from_jumps(jumps: Vec<f64>, pieces: Vec<Matrix>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidParameter("path needs at least one piece".into()));
        }
        if jumps.len() + 1 != pieces.len() {
            return Err(Error::DimensionMismatch { expected: pieces.len() - 1, got: jumps.len() });
        }
        if jumps.iter().any(|t| !t.is_finite()) || jumps.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::BreakpointsNotIncreasing);
        }
        let n = pieces[0].dim();
        let mut sym = Vec::with_capacity(pieces.len());
        for (k, a) in pieces.iter().enumerate() {
            if a.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: a.dim() });
            }
            let scale = a.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for i in 0..n {
                for j in 0..i {
                    if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
                        return Err(Error::NotSymmetric { piece: k });
                    }
                }
            }
            let s = a.symmetrized();
            debug_assert!(s.is_symmetric());
            sym.push(s);
        }
        let mut path = Self { n, jumps, pieces: sym, nu: 0.0 };
        path.nu = path.compute_nu()?;
        Ok(path)
    }

    pub fn constant(a: Matrix) -> Result<Self> {
        Self::from_jumps(Vec::new(), vec![a])
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(Matrix::identity(n)).expect("identity is elliptic")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ellipticity constant ν.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn pieces(&self) -> &[Matrix] {
        &self.pieces
    }

    pub fn is_constant(&self) -> bool {
        self.pieces.len() == 1
    }

    pub fn is_breakpoint(&self, t: f64) -> bool {
        self.jumps.contains(&t)
    }

    pub fn piece_index(&self, t: f64) -> usize {
        self.jumps.partition_point(|&j| j <= t)
    }

    /// A(t), right-continuous at jumps.
    pub fn at(&self, t: f64) -> &Matrix {
        &self.pieces[self.piece_index(t)]
    }

    fn compute_nu(&self) -> Result<f64> {
        let mut nu = f64::INFINITY;
        for (k, a) in self.pieces.iter().enumerate() {
            let eig = a.sym_eigenvalues();
            let (lo, hi) = (eig[0], eig[eig.len() - 1]);
            if !(lo > 0.0) {
                return Err(Error::NotElliptic { piece: k, min_eig: lo });
            }
            nu = nu.min(lo).min(1.0 / hi);
        }
        Ok(nu)
    }

    /// ∫ₛᵗ A(τ) dτ, summed exactly piece by piece.
    pub fn integrate(&self, s: f64, t: f64) -> Result<Matrix> {
        if !(s < t) {
            return Err(Error::InvalidInterval { s, t });
        }
        let mut m = Matrix::zeros(self.n);
        let mut lo = s;
        for k in self.piece_index(s)..self.pieces.len() {
            let hi = self.jumps.get(k).copied().unwrap_or(f64::INFINITY).min(t);
            if hi > lo {
                m.add_assign_scaled(&self.pieces[k], hi - lo);
            }
            if hi >= t {
                break;
            }
            lo = hi;
        }
        Ok(m)
    }

    /// The path t ↦ A(−t).
    pub fn time_reverse(&self) -> Self {
        let jumps = self.jumps.iter().rev().map(|&t| -t + 0.0).collect();
        let pieces = self.pieces.iter().rev().cloned().collect();
        Self { n: self.n, jumps, pieces, nu: self.nu }
    }

    /// Reads `n`, `breakpoints` and `piece.k` (row-major entries).
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let n = kv.usize("n")?;
        let breakpoints = kv.f64_list("breakpoints")?;
        let mut pieces = Vec::with_capacity(breakpoints.len());
        for k in 0..breakpoints.len() {
            let entries = parse_f64_list(kv.require(&format!("piece.{k}"))?)?;
            pieces.push(Matrix::from_row_major(n, entries)?);
        }
        Self::new(breakpoints, pieces)
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("n", self.n.to_string());
        let first = self.jumps.first().map_or(0.0, |j| j - 1.0);
        let mut bp = vec![first];
        bp.extend_from_slice(&self.jumps);
        kv.set("breakpoints", format_f64_list(&bp));
        for (k, a) in self.pieces.iter().enumerate() {
            kv.set(&format!("piece.{k}"), format_f64_list(a.as_slice()));
        }
        kv
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&KeyValues::parse(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag(d: &[f64]) -> Matrix {
        Matrix::diagonal(d)
    }

    #[test]
    fn validate_examples() {
        assert_eq!(CoefficientPath::identity(2).nu(), 1.0);
        let p = CoefficientPath::constant(diag(&[2.0, 0.5])).unwrap();
        assert_eq!(p.nu(), 0.5);
        let err = CoefficientPath::new(vec![0.0, 1.0], vec![Matrix::identity(2), diag(&[1.0, -1.0])]);
        assert!(matches!(err, Err(Error::NotElliptic { piece: 1, .. })));
    }

    #[test]
    fn rejects_bad_input() {
        let nonsym = Matrix::from_row_major(2, vec![1.0, 0.3, 0.0, 1.0]).unwrap();
        assert!(matches!(CoefficientPath::constant(nonsym), Err(Error::NotSymmetric { .. })));
        let err = CoefficientPath::new(vec![0.0, 1.0], vec![Matrix::identity(2), Matrix::identity(3)]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let err = CoefficientPath::new(vec![1.0, 1.0], vec![Matrix::identity(2), Matrix::identity(2)]);
        assert!(matches!(err, Err(Error::BreakpointsNotIncreasing)));
    }

    #[test]
    fn integrate_examples() {
        let id = CoefficientPath::identity(2);
        assert_eq!(id.integrate(0.0, 2.0).unwrap(), diag(&[2.0, 2.0]));
        let p = CoefficientPath::new(vec![0.0, 1.0], vec![Matrix::identity(2), diag(&[2.0, 2.0])]).unwrap();
        assert_eq!(p.integrate(0.0, 2.0).unwrap(), diag(&[3.0, 3.0]));
        let q = CoefficientPath::new(vec![0.0, 1.0], vec![diag(&[1.0, 4.0]), diag(&[4.0, 1.0])]).unwrap();
        assert_eq!(q.integrate(0.0, 2.0).unwrap(), diag(&[5.0, 5.0]));
        assert!(matches!(id.integrate(1.0, 1.0), Err(Error::InvalidInterval { .. })));
    }

    #[test]
    fn time_reverse_examples() {
        let id = CoefficientPath::identity(2);
        assert_eq!(id.time_reverse(), id);
        let p = CoefficientPath::from_jumps(vec![0.0], vec![Matrix::identity(2), diag(&[2.0, 2.0])]).unwrap();
        let r = p.time_reverse();
        assert_eq!(r.jumps(), &[0.0]);
        assert_eq!(r.at(-0.5), &diag(&[2.0, 2.0]));
        assert_eq!(r.at(0.5), &Matrix::identity(2));
    }

    #[test]
    fn kv_round_trip() {
        let text = "n=2\nbreakpoints=0,1\npiece.0=1,0,0,1\npiece.1=2,0,0,2\n";
        let p = CoefficientPath::parse(text).unwrap();
        assert_eq!(p.to_kv().to_text(), text);
    }

    fn arb_path() -> impl Strategy<Value = CoefficientPath> {
        (1usize..5).prop_flat_map(|k| {
            (
                proptest::collection::vec(0.1f64..1.0, k - 1),
                proptest::collection::vec((0.2f64..3.0, 0.2f64..3.0, -0.9f64..0.9), k),
                -2.0f64..2.0,
            )
                .prop_map(|(gaps, mats, t0)| {
                    let mut jumps = Vec::new();
                    let mut t = t0;
                    for g in gaps {
                        t += g;
                        jumps.push(t);
                    }
                    let pieces = mats
                        .into_iter()
                        .map(|(a, b, c)| {
                            let off = c * (a * b).sqrt();
                            Matrix::from_row_major(2, vec![a, off, off, b]).unwrap()
                        })
                        .collect();
                    CoefficientPath::from_jumps(jumps, pieces).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn reverse_is_involution_and_keeps_nu(p in arb_path()) {
            prop_assert_eq!(p.time_reverse().time_reverse(), p.clone());
            prop_assert_eq!(p.time_reverse().nu(), p.nu());
        }

        #[test]
        fn integrate_is_additive_and_sandwiched(p in arb_path(), s in -3.0f64..3.0, a in 0.01f64..2.0, b in 0.01f64..2.0) {
            let (r, t) = (s + a, s + a + b);
            let mut left = p.integrate(s, r).unwrap();
            left.add_assign_scaled(&p.integrate(r, t).unwrap(), 1.0);
            let whole = p.integrate(s, t).unwrap();
            for (x, y) in left.as_slice().iter().zip(whole.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-13 * (t - s) * 4.0);
            }
            let eig = whole.sym_eigenvalues();
            let nu = p.nu();
            prop_assert!(eig[0] >= nu * (t - s) * (1.0 - 1e-12));
            prop_assert!(eig[1] <= (t - s) / nu * (1.0 + 1e-12));
        }
    }
}
