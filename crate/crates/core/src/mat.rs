//! Dense real matrices and the rank-revealing pieces the index chain is built on.
//!
//! All factorizations here are small and dense: problem dimensions in this crate
//! are a handful of unknowns, and Newton matrices are at most `m·r` square.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::math;

/// Relative singular-value threshold used for numerical rank unless overridden.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension { expected: rows * cols, got: data.len() });
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from fixed-size rows, e.g. `Mat::from_rows(&[[1.0, 0.0], [0.0, 0.0]])`.
    pub fn from_rows<const C: usize>(rows: &[[f64; C]]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Mat { rows: rows.len(), cols: C, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Mat::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, a: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| a * x).collect() }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Mat) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    /// Writes `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Mat) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub(crate) fn check_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Evaluation(what.into()))
        }
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{:?}", self.row(i))?;
        }
        f.write_str("]")
    }
}

impl Serialize for Mat {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for i in 0..self.rows {
            seq.serialize_element(self.row(i))?;
        }
        seq.end()
    }
}

impl Add<&Mat> for &Mat {
    type Output = Mat;

    fn add(self, rhs: &Mat) -> Mat {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub<&Mat> for &Mat {
    type Output = Mat;

    fn sub(self, rhs: &Mat) -> Mat {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<&Mat> for &Mat {
    type Output = Mat;

    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Neg for &Mat {
    type Output = Mat;

    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Mat> for Mat {
            type Output = Mat;
            fn $m(self, rhs: Mat) -> Mat {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Mat> for Mat {
            type Output = Mat;
            fn $m(self, rhs: &Mat) -> Mat {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|x| x * x).sum())
}

pub fn sub_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

// ---------------------------------------------------------------------------
// LU with partial pivoting

/// LU factorization `P A = L U` of a square matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn factor(a: &Mat) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::invalid("LU of a non-square matrix"));
        }
        a.check_finite("LU input")?;
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= l * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm, sign, singular })
    }

    pub fn det(&self) -> f64 {
        (0..self.lu.rows).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lu.rows;
        if b.len() != n {
            return Err(Error::Dimension { expected: n, got: b.len() });
        }
        if self.singular {
            return Err(Error::Singular);
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::Singular)
        }
    }

    pub fn inverse(&self) -> Result<Mat> {
        let n = self.lu.rows;
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

pub fn det(a: &Mat) -> Result<f64> {
    Ok(Lu::factor(a)?.det())
}

pub fn solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    Lu::factor(a)?.solve(b)
}

// ---------------------------------------------------------------------------
// One-sided Jacobi SVD

/// Thin SVD `A = U diag(s) Vᵀ`, singular values in descending order.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

const JACOBI_MAX_SWEEPS: usize = 80;

impl Svd {
    pub fn new(a: &Mat) -> Result<Svd> {
        a.check_finite("SVD input")?;
        if a.rows < a.cols {
            let t = Svd::new(&a.transpose())?;
            return Ok(Svd { u: t.v, s: t.s, v: t.u });
        }
        let (m, n) = (a.rows, a.cols);
        let mut u = a.clone();
        let mut v = Mat::identity(n);
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                    for i in 0..m {
                        let (up, uq) = (u[(i, p)], u[(i, q)]);
                        alpha += up * up;
                        beta += uq * uq;
                        gamma += up * uq;
                    }
                    if gamma == 0.0 || gamma.abs() <= f64::EPSILON * math::sqrt(alpha * beta) {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + math::hypot(1.0, zeta));
                    let c = 1.0 / math::hypot(1.0, t);
                    let s = c * t;
                    for i in 0..m {
                        let (up, uq) = (u[(i, p)], u[(i, q)]);
                        u[(i, p)] = c * up - s * uq;
                        u[(i, q)] = s * up + c * uq;
                    }
                    for i in 0..n {
                        let (vp, vq) = (v[(i, p)], v[(i, q)]);
                        v[(i, p)] = c * vp - s * vq;
                        v[(i, q)] = s * vp + c * vq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut s: Vec<f64> = (0..n).map(|j| norm2(&u.column(j))).collect();
        for (j, &sj) in s.iter().enumerate() {
            if sj > 0.0 {
                for i in 0..m {
                    u[(i, j)] /= sj;
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(core::cmp::Ordering::Equal));
        let u_sorted = Mat::from_fn(m, n, |i, j| u[(i, order[j])]);
        let v_sorted = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
        s = order.iter().map(|&j| s[j]).collect();
        Ok(Svd { u: u_sorted, s, v: v_sorted })
    }

    pub fn rank(&self, tol: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&x| x > tol * smax).count()
    }

    /// Moore–Penrose pseudoinverse keeping singular values above `tol·σ_max`.
    pub fn pseudo_inverse(&self, tol: f64) -> Mat {
        let rank = self.rank(tol);
        let mut out = Mat::zeros(self.v.rows, self.u.rows);
        for k in 0..rank {
            let inv = 1.0 / self.s[k];
            for i in 0..self.v.rows {
                let vik = self.v[(i, k)] * inv;
                for j in 0..self.u.rows {
                    out[(i, j)] += vik * self.u[(j, k)];
                }
            }
        }
        out
    }
}

pub fn singular_values(a: &Mat) -> Result<Vec<f64>> {
    Ok(Svd::new(a)?.s)
}

/// Number of singular values above `tol·σ_max` (zero for the zero matrix).
pub fn numerical_rank(a: &Mat, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::invalid("rank tolerance must be positive"));
    }
    Ok(Svd::new(a)?.rank(tol))
}

/// 2-norm condition number; infinite for singular input.
pub fn condition_number(a: &Mat) -> Result<f64> {
    let s = singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    Ok(if smin == 0.0 { f64::INFINITY } else { smax / smin })
}

/// A semi-inverse `A⁻` (here the Moore–Penrose pseudoinverse) with the projector
/// `V = E − A A⁻` that annihilates `A` from the left.
#[derive(Clone, Debug, Serialize)]
pub struct SemiInverseResult {
    pub a_minus: Mat,
    pub rank: usize,
    pub projector: Mat,
    pub tol_used: f64,
}

pub fn semi_inverse(a: &Mat, tol: f64) -> Result<SemiInverseResult> {
    if !a.is_square() {
        return Err(Error::invalid("semi-inverse requires a square matrix"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("rank tolerance must be positive"));
    }
    let svd = Svd::new(a)?;
    let rank = svd.rank(tol);
    let a_minus = svd.pseudo_inverse(tol);
    let projector = &Mat::identity(a.rows) - &(a * &a_minus);
    Ok(SemiInverseResult { a_minus, rank, projector, tol_used: tol })
}

/// Another semi-inverse from the same family: `A⁻ + W − A⁻ A W A A⁻` with
/// `A⁻` the pseudoinverse. Every matrix of this form satisfies `A A⁻ A = A`.
pub fn semi_inverse_with(a: &Mat, tol: f64, w: &Mat) -> Result<SemiInverseResult> {
    let base = semi_inverse(a, tol)?;
    if (w.rows(), w.cols()) != (a.rows, a.cols) {
        return Err(Error::Dimension { expected: a.rows * a.cols, got: w.rows() * w.cols() });
    }
    let p = &base.a_minus;
    let a_minus = &(p + w) - &(&(&(&(p * a) * w) * a) * p);
    let projector = &Mat::identity(a.rows) - &(a * &a_minus);
    Ok(SemiInverseResult { a_minus, rank: base.rank, projector, tol_used: tol })
}

/// `V = E − A A⁺` alone.
pub fn projector(a: &Mat, tol: f64) -> Result<Mat> {
    Ok(semi_inverse(a, tol)?.projector)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat, b: &Mat, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn rank_of_trivial_matrices() {
        assert_eq!(numerical_rank(&Mat::zeros(2, 2), 1e-10).unwrap(), 0);
        assert_eq!(numerical_rank(&Mat::identity(3), 1e-10).unwrap(), 3);
        let a = Mat::from_rows(&[[1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(numerical_rank(&a, 1e-10).unwrap(), 1);
    }

    #[test]
    fn rank_rejects_nan_and_bad_tol() {
        let a = Mat::from_rows(&[[f64::NAN, 0.0], [0.0, 1.0]]);
        assert!(matches!(numerical_rank(&a, 1e-10), Err(Error::Evaluation(_))));
        assert!(matches!(numerical_rank(&Mat::identity(2), 0.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn semi_inverse_of_identity() {
        let r = semi_inverse(&Mat::identity(3), 1e-10).unwrap();
        assert!(close(&r.a_minus, &Mat::identity(3), 1e-15));
        assert!(r.projector.max_abs() < 1e-15);
        assert_eq!(r.rank, 3);
    }

    #[test]
    fn semi_inverse_of_coordinate_projection() {
        let a = Mat::from_rows(&[[1.0, 0.0], [0.0, 0.0]]);
        let r = semi_inverse(&a, 1e-10).unwrap();
        assert!(close(&r.a_minus, &a, 1e-15));
        assert!(close(&r.projector, &Mat::from_rows(&[[0.0, 0.0], [0.0, 1.0]]), 1e-15));
        assert_eq!(r.rank, 1);
    }

    #[test]
    fn semi_inverse_of_rank_one_column() {
        let a = Mat::from_rows(&[[1.0, 0.0], [1.0, 0.0]]);
        let r = semi_inverse(&a, 1e-10).unwrap();
        assert!(close(&r.a_minus, &Mat::from_rows(&[[0.5, 0.5], [0.0, 0.0]]), 1e-14));
        assert!(close(&r.projector, &Mat::from_rows(&[[0.5, -0.5], [-0.5, 0.5]]), 1e-14));
        // all four Penrose conditions
        let p = &r.a_minus;
        assert!(close(&(&(&a * p) * &a), &a, 1e-14));
        assert!(close(&(&(p * &a) * p), p, 1e-14));
        assert!(close(&(&a * p).transpose(), &(&a * p), 1e-14));
        assert!(close(&(p * &a).transpose(), &(p * &a), 1e-14));
    }

    #[test]
    fn general_semi_inverse_still_reproduces_a() {
        let a = Mat::from_rows(&[[1.0, 0.0], [1.0, 0.0]]);
        let w = Mat::from_rows(&[[0.3, -1.2], [2.0, 0.7]]);
        let r = semi_inverse_with(&a, 1e-10, &w).unwrap();
        assert!(close(&(&(&a * &r.a_minus) * &a), &a, 1e-14));
        assert!((&r.projector * &a).max_abs() < 1e-14);
    }

    #[test]
    fn lu_solves_and_reports_determinant() {
        let a = Mat::from_rows(&[[0.5, 0.5], [1.5, -0.5]]);
        let lu = Lu::factor(&a).unwrap();
        assert!((lu.det() + 1.0).abs() < 1e-15);
        let x = lu.solve(&[1.0, 1.0]).unwrap();
        let back = a.mul_vec(&x);
        assert!((back[0] - 1.0).abs() < 1e-14 && (back[1] - 1.0).abs() < 1e-14);
        let sing = Mat::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(solve(&sing, &[1.0, 0.0]), Err(Error::Singular)));
    }

    #[test]
    fn svd_of_wide_matrix_reconstructs() {
        let a = Mat::from_rows(&[[1.0, 2.0, 3.0], [-1.0, 0.5, 4.0]]);
        let svd = Svd::new(&a).unwrap();
        let recon = &(&svd.u * &Mat::diag(&svd.s)) * &svd.v.transpose();
        assert!(close(&recon, &a, 1e-13));
        assert!(svd.s[0] >= svd.s[1]);
    }

    #[test]
    fn condition_number_of_singular_is_infinite() {
        assert!(condition_number(&Mat::from_rows(&[[1.0, 0.0], [0.0, 0.0]])).unwrap().is_infinite());
        assert!((condition_number(&Mat::diag(&[2.0, 0.5])).unwrap() - 4.0).abs() < 1e-14);
    }
}
