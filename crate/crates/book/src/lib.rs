//! The guide in `book/src`, one module per chapter, so that
//! `cargo test -p memorability-book` runs every snippet.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("../../../book/src/checkpoints.md")]
pub mod checkpoints {}
#[doc = include_str!("../../../book/src/motion.md")]
pub mod motion {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
