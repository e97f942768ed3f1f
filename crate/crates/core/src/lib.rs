//! Rank-degree index analysis for differential-algebraic and integral-algebraic
//! equations, together with the solvers used to observe how numerical schemes
//! behave when the index of a nonlinear problem changes along its solution.
//!
//! The crate is `no_std` compatible (it needs `alloc`). Disable the default
//! `std` feature to build without the standard library.
//!
//! Module map:
//!
//! * [`mat`]: dense matrices, SVD, numerical rank and the semi-inverse / projector pair.
//! * [`func`]: time-dependent matrix, vector and kernel functions with finite-difference derivatives.
//! * [`quad`]: Gauss–Legendre and adaptive Gauss–Kronrod quadrature.
//! * [`problem`] and [`catalog`]: the four problem classes and the built-in examples.
//! * [`index`]: the rank-degree chain, right-hand-side chain, consistency check, DAE→IAE reduction
//!   and the Hessenberg criterion.
//! * [`linearize`]: linearization along trajectories, pointwise index, structure classification
//!   and critical points.
//! * [`collocation`]: piecewise-polynomial collocation for IAEs.
//! * [`bdf`]: fixed-step BDF1/BDF2 for semi-nonlinear DAEs with critical-condition monitoring.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bdf;
pub mod catalog;
pub mod collocation;
pub mod error;
pub mod func;
pub mod index;
pub mod linearize;
pub mod mat;
pub mod problem;
pub mod quad;

mod math;

pub use error::{Error, Result};
pub use func::{Interval, Kernel, MatrixFunction, VectorFunction};
pub use mat::{Mat, SemiInverseResult};
