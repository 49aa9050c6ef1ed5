//! Each chapter of the book in `book/src` is included as module docs, so
//! `cargo test` compiles and runs every code block in it.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/numerics.md")]
pub mod numerics {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/iteration-matrix.md")]
pub mod iteration_matrix {}
#[doc = include_str!("../../../book/src/schwarz-iteration.md")]
pub mod schwarz_iteration {}
#[doc = include_str!("../../../book/src/contraction.md")]
pub mod contraction {}
#[doc = include_str!("../../../book/src/shape.md")]
pub mod shape {}
#[doc = include_str!("../../../book/src/spectrum.md")]
pub mod spectrum {}
#[doc = include_str!("../../../book/src/scalability.md")]
pub mod scalability {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
