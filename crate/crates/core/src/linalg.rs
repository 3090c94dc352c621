//! Small dense matrices and a banded LU factorization.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * k).collect() }
    }

    pub fn add_assign_scaled(&mut self, other: &Matrix, k: f64) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += k * b;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// (A + Aᵀ)/2.
    pub fn symmetrized(&self) -> Self {
        let mut s = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                s[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)]);
            }
        }
        s
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        v.iter().zip(self.mul_vec(v)).map(|(a, b)| a * b).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn determinant(&self) -> f64 {
        let a = |i, j| self[(i, j)];
        match self.n {
            0 => 1.0,
            1 => a(0, 0),
            2 => a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0),
            3 => {
                a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                    - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                    + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
            }
            _ => self.to_nalgebra().determinant(),
        }
    }

    /// Inverse of a symmetric positive definite matrix: closed form up to
    /// n = 3, Cholesky beyond.
    pub fn spd_inverse(&self) -> Result<Matrix> {
        let n = self.n;
        let det = self.determinant();
        if !(det > 0.0) {
            return Err(Error::SingularMatrix(0));
        }
        let a = |i, j| self[(i, j)];
        let data = match n {
            1 => vec![1.0 / a(0, 0)],
            2 => vec![a(1, 1) / det, -a(0, 1) / det, -a(1, 0) / det, a(0, 0) / det],
            3 => {
                let mut inv = vec![0.0; 9];
                for i in 0..3 {
                    for j in 0..3 {
                        // cofactor of (j, i)
                        let (r0, r1) = others(j);
                        let (c0, c1) = others(i);
                        let minor = a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0);
                        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                        inv[i * 3 + j] = sign * minor / det;
                    }
                }
                inv
            }
            _ => {
                let chol = self
                    .to_nalgebra()
                    .cholesky()
                    .ok_or(Error::SingularMatrix(0))?;
                let inv = chol.inverse();
                (0..n * n).map(|k| inv[(k / n, k % n)]).collect()
            }
        };
        Ok(Matrix { n, data })
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .to_nalgebra()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }
}

fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Banded matrix with `kl` sub- and `ku` super-diagonals, factorized in place
/// by Gaussian elimination with row equilibration and partial pivoting.
///
/// Row `r` stores columns `r - kl ..= r + ku + kl`; the extra `kl` columns
/// hold the fill created by row interchanges.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    /// Adds `v` to entry (r, c); `c` must lie inside the declared band.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        assert!(
            c + self.kl >= r && c <= r + self.ku,
            "entry ({r}, {c}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if c + self.kl < r || c > r + self.ku + self.kl || c >= self.n {
            0.0
        } else {
            self.data[self.idx(r, c)]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.ku).min(self.n - 1);
                (lo..=hi).map(|c| self.data[self.idx(r, c)] * x[c]).sum()
            })
            .collect()
    }

    #[allow(clippy::needless_range_loop)]
    pub fn factorize(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0usize; n];
        // Rows of the polar operator differ in scale by 1/r²; without
        // equilibration pivoting is steered by that scale and accuracy near
        // the vertex is lost.
        let mut scale = vec![1.0; n];
        for (r, sr) in scale.iter_mut().enumerate() {
            let row = &mut self.data[r * self.width..(r + 1) * self.width];
            let big = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if big == 0.0 {
                return Err(Error::SingularMatrix(r));
            }
            *sr = 1.0 / big;
            row.iter_mut().for_each(|v| *v /= big);
        }
        for k in 0..n {
            let rmax = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for r in k + 1..=rmax {
                let v = self.data[self.idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularMatrix(k));
            }
            let cmax = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    let (a, b) = (self.idx(k, c), self.idx(p, c));
                    self.data.swap(a, b);
                }
            }
            piv[k] = p;
            let pivot = self.data[self.idx(k, k)];
            for r in k + 1..=rmax {
                let irk = self.idx(r, k);
                let l = self.data[irk] / pivot;
                self.data[irk] = l;
                if l == 0.0 {
                    continue;
                }
                let rk = self.idx(k, k);
                let rr = self.idx(r, k);
                for off in 1..=(cmax - k) {
                    self.data[rr + off] -= l * self.data[rk + off];
                }
            }
        }
        Ok(BandLu { band: self, piv, scale })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    band: BandMatrix,
    piv: Vec<usize>,
    scale: Vec<f64>,
}

impl BandLu {
    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.band;
        let n = m.n;
        b.iter_mut().zip(&self.scale).for_each(|(v, s)| *v *= s);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + m.kl).min(n - 1) {
                    b[r] -= m.data[m.idx(r, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let base = m.idx(k, k);
            let cmax = (k + m.kl + m.ku).min(n - 1);
            let mut acc = b[k];
            for off in 1..=(cmax - k) {
                acc -= m.data[base + off] * b[k + off];
            }
            b[k] = acc / m.data[base];
        }
    }
}
