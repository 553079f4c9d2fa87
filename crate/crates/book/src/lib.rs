//! Code listings of the guide under `book/src`, compiled as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/grid.md")]
pub mod grid {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/adjoint.md")]
pub mod adjoint {}
#[doc = include_str!("../../../book/src/error_models.md")]
pub mod error_models {}
#[doc = include_str!("../../../book/src/observations.md")]
pub mod observations {}
#[doc = include_str!("../../../book/src/cost.md")]
pub mod cost {}
#[doc = include_str!("../../../book/src/minimizer.md")]
pub mod minimizer {}
#[doc = include_str!("../../../book/src/domain_decomposition.md")]
pub mod domain_decomposition {}
#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
#[doc = include_str!("../../../book/src/deviations.md")]
pub mod deviations {}
