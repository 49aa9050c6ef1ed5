//! Parallel Schwarz iteration for the one-dimensional Laplace error equation
//! `e'' = 0` on `(0, L)` with `e(0) = e(L) = 0`.
//!
//! The domain is split into `N` equal subdomains of length `ell` that overlap
//! their neighbours by `delta`. One Schwarz sweep maps the `2N` interface
//! values of the current iterate through a fixed nonnegative
//! block-tridiagonal matrix `T`. This crate builds that matrix, runs the
//! continuous iteration it encodes, and measures how fast it contracts:
//!
//! * [`numerics`]: exact rational and `f64` backends behind one trait;
//! * [`geometry`]: the overlapping decomposition;
//! * [`operator`]: the generator blocks, dense `T` and its matrix-free action;
//! * [`psm`]: the subdomain-by-subdomain iteration;
//! * [`analysis`]: norm sequences, exact shape and contraction checks,
//!   spectral radius, and iteration-count sweeps over `N`;
//! * [`io`]: CSV and JSON formats.
//!
//! ```
//! use schwarz1d::prelude::*;
//!
//! let d = Decomposition::new(6, q("1"), q("1/4")).unwrap();
//! let op = SchwarzOperator::new(d);
//! // No contraction is visible in the infinity norm before ceil(N/2) steps.
//! assert_eq!(contraction_onset(&op).unwrap(), 3);
//! ```

pub mod analysis;
pub mod geometry;
pub mod io;
pub mod numerics;
pub mod operator;
pub mod psm;

pub mod prelude {
    pub use crate::analysis::{
        contraction_onset, iterations_to_tolerance, norm_via_ones, scalability_sweep,
        spectral_bound, spectral_radius, verify_all, verify_block_relations, verify_lemma1,
        verify_shape, verify_shape_range, verify_theorem1a, verify_theorem1b, CheckOutcome,
        ShapeReport, SpectralOptions, SweepOptions,
    };
    pub use crate::geometry::Decomposition;
    pub use crate::numerics::{Backend, Exact, Scalar, Value};
    pub use crate::operator::{GeneratorBlocks, InterfaceVector, SchwarzOperator};
    pub use crate::psm::{Initialization, PsmTrace, SubdomainSolution};

    /// Parses a rational literal, panicking on malformed input. Intended for
    /// tests and examples.
    pub fn q(s: &str) -> Exact {
        crate::numerics::parse_rational(s).expect("valid rational literal")
    }
}
