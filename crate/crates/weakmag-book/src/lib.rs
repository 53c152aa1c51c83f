//! Doc-test harness for the guide in `book/`.
//!
//! Each chapter of the mdbook guide is included here as the documentation
//! of an empty module, so `cargo test -p weakmag-book --doc` compiles and
//! runs every ```rust code block in the book against the current `weakmag`
//! API. A chapter that drifts out of sync with the crate fails the test
//! named after it.
//!
//! The crate exports nothing and is never published; it exists so the book
//! cannot silently rot.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/selections.md")]
pub mod selections {}

#[doc = include_str!("../../../book/src/faraday.md")]
pub mod faraday {}

#[doc = include_str!("../../../book/src/spectra.md")]
pub mod spectra {}

#[doc = include_str!("../../../book/src/instrument.md")]
pub mod instrument {}

#[doc = include_str!("../../../book/src/sensitivity.md")]
pub mod sensitivity {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
