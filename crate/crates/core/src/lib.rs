//! Variational solver for the planar quasilinear Schrödinger–Poisson system
//!
//! ```text
//! −Δu + φu = f(u),   −Δφ − ε⁴ div(|∇φ|²∇φ) = u²   in (0,1)²,   u = φ = 0 on the boundary
//! ```
//!
//! The second equation is solved for `φ = φ_ε(u)`, which reduces the system
//! to critical points of a functional of `u` alone. A mountain-pass point of
//! its truncated version is located by path deformation and checked against
//! the a-priori bounds. The guide in `book/` walks through each module.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod error;
pub mod grid;
pub mod linalg;
pub mod nonlinearity;
pub mod poisson;
pub mod quadrature;
pub mod functional;
pub mod ground_state;
pub mod mountain_pass;
pub mod sweep;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/nonlinearity.md")]
    mod nonlinearity {}
    #[doc = include_str!("../../../book/src/poisson.md")]
    mod poisson {}
    #[doc = include_str!("../../../book/src/functional.md")]
    mod functional {}
    #[doc = include_str!("../../../book/src/ground_state.md")]
    mod ground_state {}
    #[doc = include_str!("../../../book/src/mountain_pass.md")]
    mod mountain_pass {}
    #[doc = include_str!("../../../book/src/sweep.md")]
    mod sweep {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
