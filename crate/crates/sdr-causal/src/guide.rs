//! The book's chapters, included as doc-tested modules: every code snippet
//! in `book/src/*.md` compiles and runs under `cargo test --doc`, which
//! keeps the guide in sync with the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/spectra.md")]
pub mod spectra {}

#[doc = include_str!("../../../book/src/filters.md")]
pub mod filters {}

#[doc = include_str!("../../../book/src/dependency-ratios.md")]
pub mod dependency_ratios {}

#[doc = include_str!("../../../book/src/information-geometry.md")]
pub mod information_geometry {}

#[doc = include_str!("../../../book/src/decimation.md")]
pub mod decimation {}

#[doc = include_str!("../../../book/src/whitening.md")]
pub mod whitening {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
