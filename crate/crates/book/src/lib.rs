//! The guide in `book/` rendered as doc-tests, one module per chapter, so a
//! failing snippet names the chapter it came from.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/support-functions.md")]
pub mod support_functions {}
#[doc = include_str!("../../../book/src/curvature.md")]
pub mod curvature {}
#[doc = include_str!("../../../book/src/pinching.md")]
pub mod pinching {}
#[doc = include_str!("../../../book/src/flow.md")]
pub mod flow {}
#[doc = include_str!("../../../book/src/rescaling.md")]
pub mod rescaling {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
