use proptest::prelude::*;
use rdindex_core::catalog::{ex32, ex33, ex34, ex35};
use rdindex_core::func::{matfn_derivative, Interval, MatrixFunction};
use rdindex_core::mat::{semi_inverse, semi_inverse_with};
use rdindex_core::Mat;

fn low_rank(r: usize, k: usize, entries: &[f64]) -> Mat {
    let c = Mat::from_fn(r, k, |i, j| entries[i * k + j]);
    let f = Mat::from_fn(k, r, |i, j| entries[r * k + i * r + j]);
    if k == 0 {
        Mat::zeros(r, r)
    } else {
        &c * &f
    }
}

fn rank_deficient() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..=6)
        .prop_flat_map(|r| (Just(r), 0..=r))
        .prop_flat_map(|(r, k)| (Just(r), Just(k), prop::collection::vec(-1.0f64..1.0, 2 * r * k)))
}

proptest! {
    #[test]
    fn semi_inverse_identities((r, k, e) in rank_deficient()) {
        let a = low_rank(r, k, &e);
        let si = semi_inverse(&a, 1e-10).unwrap();
        let scale = a.max_abs().max(1.0);
        prop_assert!((&(&(&a * &si.a_minus) * &a) - &a).max_abs() <= 1e-10 * scale);
        let v = &si.projector;
        prop_assert!((v * &a).max_abs() <= 1e-10 * scale);
        prop_assert!((&(v * v) - v).max_abs() <= 1e-10);
        prop_assert_eq!(si.rank, k);
    }

    #[test]
    fn other_semi_inverses_keep_the_identity((r, k, e) in rank_deficient(), w in prop::collection::vec(-2.0f64..2.0, 36)) {
        let a = low_rank(r, k, &e);
        let w = Mat::from_fn(r, r, |i, j| w[i * 6 + j]);
        let si = semi_inverse_with(&a, 1e-10, &w).unwrap();
        prop_assert!((&(&(&a * &si.a_minus) * &a) - &a).max_abs() <= 1e-9 * a.max_abs().max(1.0));
        prop_assert!((&si.projector * &a).max_abs() <= 1e-9 * a.max_abs().max(1.0));
    }

    #[test]
    fn derivative_of_cubics(c in prop::collection::vec(-3.0f64..3.0, 16), t in 0.0f64..1.0) {
        let dom = Interval::new(0.0, 1.0).unwrap();
        let cc = c.clone();
        let m = MatrixFunction::square(dom, 2, move |t| {
            Mat::from_fn(2, 2, |i, j| {
                let q = &cc[4 * (2 * i + j)..];
                q[0] + t * (q[1] + t * (q[2] + t * q[3]))
            })
        });
        let d = matfn_derivative(&m, t, 1e-3).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let q = &c[4 * (2 * i + j)..];
                let exact = q[1] + t * (2.0 * q[2] + 3.0 * t * q[3]);
                prop_assert!((d[(i, j)] - exact).abs() <= 1e-9, "{} vs {}", d[(i, j)], exact);
            }
        }
    }

    #[test]
    fn dae_jacobians_match_differences(t in 0.0f64..2.0, y1 in -2.0f64..2.0, y2 in -2.0f64..2.0) {
        for p in [ex32(), ex33()] {
            let a = p.jacobian(t, &[y1, y2]).unwrap();
            let f = p.fd_jacobian(t, &[y1, y2]).unwrap();
            let scale = a.max_abs().max(1.0);
            prop_assert!((&a - &f).max_abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn iae_jacobians_match_differences(u in 0.0f64..1.0, v in 0.0f64..1.0, y1 in -2.0f64..2.0, y2 in -2.0f64..2.0) {
        for p in [ex34(), ex35()] {
            let d = p.domain();
            let (t, s) = (d.lo + u * d.length(), d.lo + u * v * d.length());
            let a = p.jacobian(t, s, &[y1, y2]).unwrap();
            let f = p.fd_jacobian(t, s, &[y1, y2]).unwrap();
            let scale = a.max_abs().max(1.0);
            prop_assert!((&a - &f).max_abs() <= 1e-6 * scale);
        }
    }
}
