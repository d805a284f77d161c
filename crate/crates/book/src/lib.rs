//! Code listings of the guide in `book/`, compiled as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/worlds.md")]
pub mod worlds {}

#[doc = include_str!("../../../book/src/perception.md")]
pub mod perception {}

#[doc = include_str!("../../../book/src/prompting.md")]
pub mod prompting {}

#[doc = include_str!("../../../book/src/running.md")]
pub mod running {}

#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
