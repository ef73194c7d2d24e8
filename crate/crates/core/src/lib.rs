mod error;

pub mod attention;
pub mod dugc;
pub mod fixtures;
pub mod graph;
pub mod losses;
pub mod mcf;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod selftest;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tensors.md")]
    mod tensors {}
    #[doc = include_str!("../../../book/src/graph.md")]
    mod graph {}
    #[doc = include_str!("../../../book/src/dugc.md")]
    mod dugc {}
    #[doc = include_str!("../../../book/src/fusion.md")]
    mod fusion {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/losses.md")]
    mod losses {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
}
