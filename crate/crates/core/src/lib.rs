pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod nls;
pub mod numerics;
pub mod physics;
pub mod qhd;
pub mod stationary;
pub mod weights;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/madelung.md")]
    mod madelung {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/stationary.md")]
    mod stationary {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
