//! Complete Lyapunov functions with a prescribed orbital derivative.
//!
//! The crate builds, for a planar vector field `X`, a compact set `K` away
//! from the chain-recurrent set and a negative function `g`, a complete
//! Lyapunov function `τ_K` with `∇τ_K · X = g` on `K`. The construction
//! modifies a base Lyapunov function box by box along flow boxes whose
//! sections are level sets of the base, and every property the construction
//! relies on is re-checked numerically by [`verify`].
//!
//! Module map:
//!
//! * [`system`]: vector fields, scalar fields, the completeness rescaling and
//!   the reduction of a prescribed `g` to the constant `-1`.
//! * [`flow`]: flow maps, sections of level sets, flow-box charts.
//! * [`chainrec`]: cell transition graphs and the recurrent-cell outer
//!   approximation of the chain-recurrent set.
//! * [`baselyap`]: base Lyapunov functions (analytic fixtures or Hermite
//!   collocation with Wendland kernels).
//! * [`construct`]: the flow-box cover, scaling, the four-step box
//!   modification and the stacked evaluator.
//! * [`verify`]: flow finite-difference oracle and the verification report.
//! * [`cli`]: configuration and the batch pipeline behind the binary.

// `!(x > 0.0)` rejects NaN together with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselyap;
pub mod chainrec;
pub mod cli;
pub mod construct;
mod error;
pub mod flow;
pub mod par;
pub mod sampling;
pub mod system;
pub mod verify;

pub use error::{Error, Result};

/// A point (or vector) of the planar phase space.
pub type Point = nalgebra::Vector2<f64>;

/// Value of a scalar field together with its orbital derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub deriv: f64,
}

impl Jet {
    pub fn new(value: f64, deriv: f64) -> Self {
        Jet { value, deriv }
    }

    pub fn scale(self, c: f64) -> Self {
        Jet::new(c * self.value, c * self.deriv)
    }
}
