//! Exact-arithmetic reference for the index chain of constant pairs `(A, k)`.
//!
//! The Moore–Penrose inverse comes from a rank factorization `A = C F` read off
//! the reduced row echelon form: `A⁺ = Fᵀ (F Fᵀ)⁻¹ (Cᵀ C)⁻¹ Cᵀ`.

#![allow(dead_code)]

use num_rational::Rational64;

pub type Q = Rational64;
pub type QMat = Vec<Vec<Q>>;

pub fn q(n: i64) -> Q {
    Q::from_integer(n)
}

pub fn from_ints(rows: &[&[i64]]) -> QMat {
    rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
}

pub fn identity(n: usize) -> QMat {
    (0..n).map(|i| (0..n).map(|j| q((i == j) as i64)).collect()).collect()
}

pub fn mul(a: &QMat, b: &QMat) -> QMat {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    (0..n).map(|i| (0..p).map(|j| (0..m).fold(q(0), |s, k| s + a[i][k] * b[k][j])).collect()).collect()
}

pub fn add(a: &QMat, b: &QMat) -> QMat {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + v).collect()).collect()
}

pub fn sub(a: &QMat, b: &QMat) -> QMat {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u - v).collect()).collect()
}

pub fn transpose(a: &QMat) -> QMat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Reduced row echelon form and pivot columns.
pub fn rref(a: &QMat) -> (QMat, Vec<usize>) {
    let mut m = a.clone();
    let (rows, cols) = (m.len(), m[0].len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| m[i][c] != q(0)) else { continue };
        m.swap(r, p);
        let lead = m[r][c];
        for x in m[r].iter_mut() {
            *x /= lead;
        }
        for i in 0..rows {
            if i != r && m[i][c] != q(0) {
                let f = m[i][c];
                let row_r = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(&row_r) {
                    *x -= f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    (m, pivots)
}

pub fn rank(a: &QMat) -> usize {
    rref(a).1.len()
}

pub fn inverse(a: &QMat) -> Option<QMat> {
    let n = a.len();
    let aug: QMat = a.iter().zip(identity(n)).map(|(r, e)| r.iter().cloned().chain(e).collect()).collect();
    let (m, piv) = rref(&aug);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn pinv(a: &QMat) -> QMat {
    let (r, c) = (a.len(), a[0].len());
    let (e, piv) = rref(a);
    if piv.is_empty() {
        return vec![vec![q(0); r]; c];
    }
    let cm: QMat = a.iter().map(|row| piv.iter().map(|&j| row[j]).collect()).collect();
    let fm: QMat = e[..piv.len()].to_vec();
    let (ct, ft) = (transpose(&cm), transpose(&fm));
    let ffi = inverse(&mul(&fm, &ft)).expect("full row rank");
    let cci = inverse(&mul(&ct, &cm)).expect("full column rank");
    mul(&mul(&ft, &ffi), &mul(&cci, &ct))
}

/// `A₀, A₁, …` up to the first nonsingular member (or `max_level`), with its level.
pub fn constant_chain(a: &QMat, k: &QMat, max_level: usize) -> (Vec<QMat>, Option<usize>) {
    let n = a.len();
    let mut levels = vec![a.clone()];
    for i in 0..=max_level {
        let ai = levels[i].clone();
        if rank(&ai) == n {
            return (levels, Some(i));
        }
        if i == max_level {
            break;
        }
        let v = sub(&identity(n), &mul(&ai, &pinv(&ai)));
        // k is constant, so the kernel chain is stationary
        levels.push(add(&ai, &mul(&v, k)));
    }
    (levels, None)
}

pub fn to_f64(a: &QMat) -> Vec<Vec<f64>> {
    a.iter().map(|r| r.iter().map(|x| *x.numer() as f64 / *x.denom() as f64).collect()).collect()
}
