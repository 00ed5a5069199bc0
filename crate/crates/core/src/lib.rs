//! Noisy quantum walk model of a massless Dirac particle moving on a line while
//! Pauli-coupled to a piecewise-constant magnetic field whose sign flips at random.
//!
//! The crate offers several independent routes to the same ensemble dynamics:
//!
//! * [`walk`]: the diagonal density-matrix recurrence (production path),
//! * [`closed_form`]: the exact alternating-sum solution, in double precision and
//!   in exact rational arithmetic,
//! * [`monte_carlo`]: explicit sign sequences applied to pure lattice spinors,
//! * [`dirac`]: spectral propagation of a spinor wavepacket under the exact and
//!   the factored per-step operator,
//!
//! together with moment/asymptotic analysis ([`moments`]) and the mapping from
//! physical constants to walk parameters ([`physical`]).

pub mod closed_form;
pub mod dirac;
mod error;
pub mod monte_carlo;
pub mod moments;
pub mod numerics;
pub mod physical;
pub mod sampling;
pub mod walk;

pub use error::{Error, Result};
pub use walk::{DiagonalState, Distribution, WalkParams};
