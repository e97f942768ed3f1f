//! Gauss–Legendre rules on `[0, 1]` and adaptive Gauss–Kronrod (7/15) integration
//! of vector-valued integrands.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// `n`-point Gauss–Legendre rule mapped to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("quadrature order must be at least 1"));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pi = core::f64::consts::PI;
        for i in 0..(n + 1) / 2 {
            // Newton on P_n starting from the Chebyshev-like guess
            let mut x = math::cos(pi * (i as f64 + 0.75) / (n as f64 + 0.5));
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
            nodes[i] = (1.0 - x) / 2.0;
            nodes[n - 1 - i] = (1.0 + x) / 2.0;
            weights[i] = w / 2.0;
            weights[n - 1 - i] = w / 2.0;
        }
        Ok(GaussLegendre { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b f` for vector-valued `f` of dimension `dim`.
    pub fn integrate(
        &self,
        a: f64,
        b: f64,
        dim: usize,
        mut f: impl FnMut(f64) -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; dim];
        let len = b - a;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(a + len * x)?;
            for (s, vi) in acc.iter_mut().zip(&v) {
                *s += len * w * vi;
            }
        }
        Ok(acc)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 40;

fn gk15(a: f64, b: f64, dim: usize, f: &mut impl FnMut(f64) -> Result<Vec<f64>>) -> Result<(Vec<f64>, f64)> {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    let mut add = |x: f64, i: usize, kron: &mut Vec<f64>, gauss: &mut Vec<f64>| -> Result<()> {
        let v = f(x)?;
        for d in 0..dim {
            kron[d] += WGK[i] * v[d];
            if i % 2 == 1 {
                gauss[d] += WG[i / 2] * v[d];
            }
        }
        Ok(())
    };
    add(c, 7, &mut kron, &mut gauss)?;
    for i in 0..7 {
        add(c - hl * XGK[i], i, &mut kron, &mut gauss)?;
        add(c + hl * XGK[i], i, &mut kron, &mut gauss)?;
    }
    let err = kron.iter().zip(&gauss).fold(0.0f64, |m, (k, g)| m.max((k - g).abs())) * hl.abs();
    for k in kron.iter_mut() {
        *k *= hl;
    }
    Ok((kron, err))
}

/// Adaptive Gauss–Kronrod integration of a vector-valued function to absolute
/// tolerance `tol` (max-norm).
pub fn integrate_adaptive(
    a: f64,
    b: f64,
    dim: usize,
    tol: f64,
    mut f: impl FnMut(f64) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::invalid("quadrature tolerance must be positive"));
    }
    if a == b {
        return Ok(vec![0.0; dim]);
    }
    let mut total = vec![0.0; dim];
    let mut stack: Vec<(f64, f64, f64, u32)> = vec![(a, b, tol, 0)];
    while let Some((lo, hi, t, depth)) = stack.pop() {
        let (val, err) = gk15(lo, hi, dim, &mut f)?;
        if err <= t || depth >= MAX_DEPTH {
            for (s, v) in total.iter_mut().zip(&val) {
                *s += v;
            }
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, 0.5 * t, depth + 1));
            stack.push((lo, mid, 0.5 * t, depth + 1));
        }
    }
    if total.iter().all(|x| x.is_finite()) {
        Ok(total)
    } else {
        Err(Error::Evaluation("quadrature".into()))
    }
}

/// Scalar convenience wrapper around [`integrate_adaptive`].
pub fn integrate_scalar(a: f64, b: f64, tol: f64, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
    Ok(integrate_adaptive(a, b, 1, tol, |x| Ok(vec![f(x)]))?[0])
}
